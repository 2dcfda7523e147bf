#include "dergcn/smgae.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dergcn/errors.hpp"
#include "dergcn/rng.hpp"

namespace dergcn {

RgcnParams RgcnParams::init(ParamStore& store, const std::string& prefix,
                            std::size_t node_dim, std::size_t dim,
                            std::size_t num_relations, std::size_t layers,
                            Rng& rng) {
  RgcnParams p;
  for (std::size_t l = 0; l < layers; ++l) {
    std::size_t in = l == 0 ? node_dim : dim;
    std::vector<Tensor> row;
    for (std::size_t r = 0; r < num_relations; ++r) {
      row.push_back(store.create(
          prefix + ".l" + std::to_string(l) + ".W_rel" + std::to_string(r),
          {dim, in}, in, rng));
    }
    p.W_rel.push_back(std::move(row));
    p.W_self.push_back(store.create(
        prefix + ".l" + std::to_string(l) + ".W_self", {dim, in}, in, rng));
  }
  return p;
}

GatDecoderParams GatDecoderParams::init(ParamStore& store,
                                        const std::string& prefix,
                                        std::size_t in_dim,
                                        std::size_t out_dim, Rng& rng) {
  GatDecoderParams p;
  p.W_dec = store.create(prefix + ".W_dec", {out_dim, in_dim}, in_dim, rng);
  p.attn = store.create(prefix + ".attn", {2 * out_dim}, 2 * out_dim, rng);
  return p;
}

MaskPlan sample_masks(const MultiRelGraph& g, double node_ratio,
                      double edge_ratio, std::uint64_t seed) {
  if (node_ratio <= 0.0 || node_ratio >= 1.0 || edge_ratio <= 0.0 ||
      edge_ratio >= 1.0) {
    throw RatioOutOfRange("mask ratios must lie in (0,1)");
  }
  std::size_t n_nodes = static_cast<std::size_t>(
      std::ceil(node_ratio * static_cast<double>(g.nodes.size())));
  std::size_t n_edges = static_cast<std::size_t>(
      std::ceil(edge_ratio * static_cast<double>(g.edges.size())));
  Rng rng(seed);
  MaskPlan plan;
  plan.masked_nodes = rng.sample_without_replacement(g.nodes.size(), n_nodes);
  plan.masked_edges = rng.sample_without_replacement(g.edges.size(), n_edges);
  std::sort(plan.masked_nodes.begin(), plan.masked_nodes.end());
  std::sort(plan.masked_edges.begin(), plan.masked_edges.end());
  return plan;
}

MultiRelGraph apply_masks(const MultiRelGraph& g, const MaskPlan& plan,
                          const Tensor& node_token, const Tensor& edge_token) {
  for (std::size_t i : plan.masked_nodes) {
    if (i >= g.nodes.size()) throw StaleMaskPlan("masked node not in graph");
  }
  for (std::size_t e : plan.masked_edges) {
    if (e >= g.edges.size()) throw StaleMaskPlan("masked edge not in graph");
  }
  if (!plan.masked_nodes.empty() &&
      node_token.shape() != g.nodes[0].shape()) {
    throw ShapeMismatch("node mask token dim differs from node features");
  }
  MultiRelGraph view = g;
  for (std::size_t i : plan.masked_nodes) view.nodes[i] = node_token;
  for (std::size_t e : plan.masked_edges) view.edges[e].weight = edge_token;
  return view;
}

namespace {

std::vector<Tensor> rgcn_layer(const MultiRelGraph& gv,
                               const std::vector<Tensor>& prev,
                               const std::vector<Tensor>& W_rel,
                               const Tensor& W_self,
                               const std::vector<std::vector<std::vector<std::size_t>>>& adj,
                               long only_relation) {
  std::size_t n = gv.nodes.size();
  std::vector<Tensor> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor acc = matvec(W_self, prev[i]);
    for (std::size_t r = 0; r < gv.relations.size(); ++r) {
      if (only_relation >= 0 && r != static_cast<std::size_t>(only_relation)) {
        continue;
      }
      const auto& nbr_edges = adj[i][r];
      if (nbr_edges.empty()) continue;
      std::vector<Tensor> weights;
      weights.reserve(nbr_edges.size());
      for (std::size_t e : nbr_edges) weights.push_back(gv.edges[e].weight);
      Tensor wmax = vmax(concat(weights));
      if (std::abs(wmax.value()) < 1e-12) continue;  // fully zeroed hood
      double inv_c = 1.0 / static_cast<double>(nbr_edges.size());
      for (std::size_t k = 0; k < nbr_edges.size(); ++k) {
        const Edge& e = gv.edges[nbr_edges[k]];
        Tensor et = relu(div(weights[k], wmax));
        Tensor coef = hadamard(scalar_mul(weights[k], inv_c), et);
        acc = add(acc, smul(coef, matvec(W_rel[r], prev[e.dst])));
      }
    }
    next[i] = relu(acc);
  }
  return next;
}

std::vector<Tensor> rgcn_run(const MultiRelGraph& gv, const RgcnParams& p,
                             long only_relation) {
  if (p.num_relations() != gv.relations.size()) {
    throw UnknownRelation("encoder relation count differs from the graph");
  }
  for (const Edge& e : gv.edges) {
    if (e.relation >= gv.relations.size()) {
      throw UnknownRelation("edge references an uncataloged relation");
    }
  }
  auto adj = gv.adjacency();
  std::vector<Tensor> cur = gv.nodes;
  for (std::size_t l = 0; l < p.layers(); ++l) {
    cur = rgcn_layer(gv, cur, p.W_rel[l], p.W_self[l], adj, only_relation);
  }
  return cur;
}

}  // namespace

std::vector<Tensor> rgcn_encode(const MultiRelGraph& gv, const RgcnParams& p) {
  return rgcn_run(gv, p, -1);
}

std::vector<Tensor> rgcn_encode_relation(const MultiRelGraph& gv,
                                         const RgcnParams& p,
                                         std::size_t relation) {
  if (relation >= gv.relations.size()) {
    throw UnknownRelation("rgcn_encode_relation: relation out of range");
  }
  return rgcn_run(gv, p, static_cast<long>(relation));
}

std::vector<Tensor> gat_decode(const MultiRelGraph& gv,
                               const std::vector<Tensor>& I,
                               const GatDecoderParams& p,
                               std::vector<Tensor>* attention_out) {
  std::size_t n = gv.nodes.size();
  if (I.size() != n) throw ShapeMismatch("gat_decode: embedding count");

  std::vector<Tensor> projected(n);
  for (std::size_t i = 0; i < n; ++i) projected[i] = matvec(p.W_dec, I[i]);

  std::vector<std::set<std::size_t>> nbrs(n);
  for (const Edge& e : gv.edges) nbrs[e.src].insert(e.dst);

  if (attention_out) attention_out->clear();
  std::vector<Tensor> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> targets(nbrs[i].begin(), nbrs[i].end());
    targets.push_back(i);  // self always attends
    std::vector<Tensor> scores;
    scores.reserve(targets.size());
    for (std::size_t j : targets) {
      scores.push_back(leaky_relu(
          dot(p.attn, concat({projected[i], projected[j]})), p.leaky_slope));
    }
    Tensor att = softmax_axis(concat(scores), 0);
    if (attention_out) attention_out->push_back(att);
    Tensor z = smul(at(att, 0), projected[targets[0]]);
    for (std::size_t k = 1; k < targets.size(); ++k) {
      z = add(z, smul(at(att, k), projected[targets[k]]));
    }
    out[i] = z;
  }
  return out;
}

Tensor node_recon_loss(const std::vector<Tensor>& original,
                       const std::vector<Tensor>& reconstructed,
                       const std::vector<std::size_t>& masked_nodes,
                       double lambda_reg,
                       const std::vector<Tensor>& reg_weights) {
  if (original.size() != reconstructed.size()) {
    throw ShapeMismatch("node_recon_loss: feature counts differ");
  }
  if (lambda_reg < 0.0) throw NegativeCoefficient("lambda_reg must be >= 0");

  auto zero_norm = [](const Tensor& t) {
    for (double v : t.data()) {
      if (v != 0.0) return false;
    }
    return true;
  };

  Tensor acc = Tensor::scalar(0.0);
  for (std::size_t i : masked_nodes) {
    if (i >= original.size()) throw StaleMaskPlan("masked node out of range");
    if (zero_norm(original[i]) || zero_norm(reconstructed[i])) {
      acc = add(acc, Tensor::scalar(1.0));
    } else {
      acc = add(acc, add_scalar(
                         scalar_mul(cosine_similarity(original[i],
                                                      reconstructed[i]),
                                    -1.0),
                         1.0));
    }
  }
  if (!masked_nodes.empty()) {
    acc = scalar_mul(acc, 1.0 / static_cast<double>(masked_nodes.size()));
  }
  if (lambda_reg > 0.0) {
    for (const Tensor& w : reg_weights) {
      acc = add(acc, scalar_mul(frobenius_norm_sq(w), lambda_reg));
    }
  }
  return acc;
}

Tensor edge_contrastive_loss(
    const std::vector<Tensor>& D,
    const std::vector<std::pair<std::size_t, std::size_t>>& positives,
    const std::vector<std::vector<std::size_t>>& negatives) {
  if (positives.empty()) {
    throw EmptyPositives("edge_contrastive_loss: no masked edges");
  }
  if (negatives.size() != positives.size()) {
    throw ShapeMismatch("edge_contrastive_loss: negatives per positive");
  }

  std::set<std::size_t> anchor_set;
  for (const auto& [i, j] : positives) anchor_set.insert(i);

  Tensor total = Tensor::scalar(0.0);
  for (std::size_t k = 0; k < positives.size(); ++k) {
    auto [i, j_pos] = positives[k];
    std::vector<Tensor> scores;
    scores.push_back(dot(D[i], D[j_pos]));
    for (std::size_t j_neg : negatives[k]) {
      scores.push_back(dot(D[i], D[j_neg]));
    }
    Tensor s = concat(scores);
    // -log softmax at the positive, via a stable log-sum-exp
    Tensor m = vmax(s);
    Tensor shifted = add(s, smul(scalar_mul(m, -1.0),
                                 Tensor::full({s.numel()}, 1.0)));
    Tensor lse = add(log(vsum(exp(shifted))), m);
    total = add(total, sub(lse, at(s, 0)));
  }
  return scalar_mul(total, 1.0 / static_cast<double>(anchor_set.size()));
}

std::vector<std::vector<std::size_t>> sample_edge_negatives(
    const MultiRelGraph& g,
    const std::vector<std::pair<std::size_t, std::size_t>>& positives,
    const std::vector<std::size_t>& positive_relations,
    std::size_t negatives_per_edge, std::uint64_t seed) {
  if (positive_relations.size() != positives.size()) {
    throw ShapeMismatch("sample_edge_negatives: relation per positive");
  }
  std::vector<std::set<std::size_t>> linked(
      g.nodes.size() * g.relations.size());
  for (const Edge& e : g.edges) {
    linked[e.src * g.relations.size() + e.relation].insert(e.dst);
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> out(positives.size());
  for (std::size_t k = 0; k < positives.size(); ++k) {
    auto [i, j_pos] = positives[k];
    std::size_t rel = positive_relations[k];
    const auto& taken = linked[i * g.relations.size() + rel];
    std::vector<std::size_t> pool;
    for (std::size_t j = 0; j < g.nodes.size(); ++j) {
      if (j == i || j == j_pos || taken.count(j)) continue;
      pool.push_back(j);
    }
    for (std::size_t pick :
         rng.sample_without_replacement(pool.size(), negatives_per_edge)) {
      out[k].push_back(pool[pick]);
    }
  }
  return out;
}

}  // namespace dergcn
