#include "dergcn/mit.hpp"

#include <cmath>

#include "dergcn/errors.hpp"

namespace dergcn {

MitParams MitParams::init(ParamStore& store, const std::string& prefix,
                          std::size_t in_dim, std::size_t qk_dim,
                          std::size_t kernel_width, Rng& rng) {
  MitParams p;
  p.W_Q = store.create(prefix + ".W_Q", {qk_dim, in_dim}, in_dim, rng);
  p.W_K = store.create(prefix + ".W_K", {qk_dim, in_dim}, in_dim, rng);
  p.W_V = store.create(prefix + ".W_V", {in_dim, in_dim}, in_dim, rng);
  std::size_t fan_q = qk_dim * kernel_width;
  std::size_t fan_v = in_dim * kernel_width;
  p.K_Q = store.create(prefix + ".K_Q", {qk_dim, qk_dim, kernel_width}, fan_q,
                       rng);
  p.K_K = store.create(prefix + ".K_K", {qk_dim, qk_dim, kernel_width}, fan_q,
                       rng);
  p.K_V = store.create(prefix + ".K_V", {in_dim, in_dim, kernel_width}, fan_v,
                       rng);
  return p;
}

namespace {

void validate(const RelationEmbeddings& I_rel) {
  if (I_rel.size() < 2) {
    throw TooFewRelations("cross-relation attention needs >= 2 relations");
  }
  std::size_t nodes = I_rel[0].size();
  for (const auto& rel : I_rel) {
    if (rel.size() != nodes) {
      throw ShapeMismatch("per-relation embeddings disagree on node count");
    }
  }
}

// conv over the relation axis for one node: rows are per-relation vectors
std::vector<Tensor> conv_over_relations(const std::vector<Tensor>& rows,
                                        const Tensor& kernel) {
  Tensor stacked = stack_rows(rows);              // (N, d)
  Tensor mixed = conv1d(transpose(stacked), kernel);  // (d, N)
  Tensor back = transpose(mixed);                 // (N, d)
  std::vector<Tensor> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = row(back, r);
  return out;
}

}  // namespace

QkvProjection project_qkv(const RelationEmbeddings& I_rel, const MitParams& p) {
  validate(I_rel);
  std::size_t N = I_rel.size(), n = I_rel[0].size();
  QkvProjection out;
  out.Q.assign(N, std::vector<Tensor>(n));
  out.K.assign(N, std::vector<Tensor>(n));
  out.V.assign(N, std::vector<Tensor>(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Tensor> pq(N), pk(N), pv(N);
    for (std::size_t r = 0; r < N; ++r) {
      pq[r] = matvec(p.W_Q, I_rel[r][i]);
      pk[r] = matvec(p.W_K, I_rel[r][i]);
      pv[r] = matvec(p.W_V, I_rel[r][i]);
    }
    auto q = conv_over_relations(pq, p.K_Q);
    auto k = conv_over_relations(pk, p.K_K);
    auto v = conv_over_relations(pv, p.K_V);
    for (std::size_t r = 0; r < N; ++r) {
      out.Q[r][i] = q[r];
      out.K[r][i] = k[r];
      out.V[r][i] = v[r];
    }
  }
  return out;
}

Tensor relation_attention_scores(const RelationEmbeddings& Q,
                                 const RelationEmbeddings& K, std::size_t node,
                                 const MitParams& p) {
  if (Q.empty() || K.size() != Q.size()) {
    throw ShapeMismatch("relation_attention_scores: Q/K lists disagree");
  }
  double eps = static_cast<double>(p.qk_dim());
  if (p.scale_sqrt) eps = std::sqrt(eps);
  std::vector<Tensor> logits;
  logits.reserve(Q.size());
  for (std::size_t r = 0; r < Q.size(); ++r) {
    if (node >= Q[r].size()) {
      throw ShapeMismatch("relation_attention_scores: node out of range");
    }
    logits.push_back(scalar_mul(dot(Q[r][node], K[r][node]), 1.0 / eps));
  }
  return softmax_axis(concat(logits), 0);
}

Tensor cross_relation_fuse(const RelationEmbeddings& I_rel, const Tensor& att,
                           const RelationEmbeddings& V, std::size_t node,
                           std::size_t target) {
  if (target >= I_rel.size()) {
    throw RelationOutOfRange("cross_relation_fuse: bad target relation");
  }
  if (att.numel() != I_rel.size() || V.size() != I_rel.size()) {
    throw ShapeMismatch("cross_relation_fuse: attention/value arity");
  }
  Tensor fused = I_rel[target][node];
  for (std::size_t r = 0; r < I_rel.size(); ++r) {
    if (r == target) continue;
    fused = add(fused, smul(at(att, r), V[r][node]));
  }
  return fused;
}

std::vector<Tensor> mit_forward(const RelationEmbeddings& I_rel,
                                const MitParams& p) {
  validate(I_rel);
  std::size_t N = I_rel.size(), n = I_rel[0].size();
  QkvProjection qkv = project_qkv(I_rel, p);
  std::vector<Tensor> out(n);
  double inv = 1.0 / static_cast<double>(N);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor att = relation_attention_scores(qkv.Q, qkv.K, i, p);
    Tensor merged;
    for (std::size_t target = 0; target < N; ++target) {
      Tensor fused = cross_relation_fuse(I_rel, att, qkv.V, i, target);
      merged = target == 0 ? fused : add(merged, fused);
    }
    out[i] = scalar_mul(merged, inv);
  }
  return out;
}

}  // namespace dergcn
