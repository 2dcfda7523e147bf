#include "dergcn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dergcn/errors.hpp"
#include "dergcn/rng.hpp"

namespace dergcn {

ClassifierParams ClassifierParams::init(ParamStore& store,
                                        const std::string& prefix,
                                        std::size_t dim,
                                        std::size_t num_classes, Rng& rng) {
  ClassifierParams p;
  p.W_f = store.create(prefix + ".W_f", {dim, dim}, dim, rng);
  p.b_f = store.create_zeros(prefix + ".b_f", {dim});
  p.W_out = store.create(prefix + ".W_out", {num_classes, dim}, dim, rng);
  p.b_out = store.create_zeros(prefix + ".b_out", {num_classes});
  return p;
}

Tensor classify(const Tensor& embedding, const ClassifierParams& p) {
  if (embedding.rank() != 1 || embedding.numel() != p.W_f.shape()[1]) {
    throw ShapeMismatch("classify: embedding dim does not match W_f");
  }
  Tensor alpha = add(embedding, relu(add(matvec(p.W_f, embedding), p.b_f)));
  return softmax_axis(add(matvec(p.W_out, alpha), p.b_out), 0);
}

std::size_t predict_label(const Tensor& probabilities) {
  const std::vector<double>& p = probabilities.data();
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

std::vector<Triplet> sample_triplets(const std::vector<int>& labels,
                                     std::size_t per_class_quota,
                                     std::uint64_t seed, double margin) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i]].push_back(i);
  }
  if (by_class.size() < 2) {
    throw DegenerateLabelSet("triplet sampling needs >= 2 classes");
  }

  Rng rng(seed);
  std::vector<Triplet> out;
  for (const auto& [cls, members] : by_class) {
    if (members.size() < 2 || per_class_quota == 0) continue;
    std::vector<std::size_t> others;
    for (const auto& [other_cls, other_members] : by_class) {
      if (other_cls == cls) continue;
      others.insert(others.end(), other_members.begin(), other_members.end());
    }
    std::size_t m = members.size();
    std::size_t pair_count = m * (m - 1);
    for (std::size_t pick : rng.sample_without_replacement(
             pair_count, std::min(per_class_quota, pair_count))) {
      std::size_t a = pick / (m - 1);
      std::size_t b = pick % (m - 1);
      if (b >= a) ++b;  // skip the diagonal
      Triplet t;
      t.anchor = members[a];
      t.positive = members[b];
      t.negative = others[rng.index(others.size())];
      t.margin = margin;
      out.push_back(t);
    }
  }
  return out;
}

Tensor triplet_loss(const std::vector<Triplet>& triplets,
                    const std::vector<Tensor>& embeddings) {
  if (triplets.empty()) return Tensor::scalar(0.0);
  Tensor acc = Tensor::scalar(0.0);
  for (const Triplet& t : triplets) {
    if (t.anchor >= embeddings.size() || t.positive >= embeddings.size() ||
        t.negative >= embeddings.size()) {
      throw ShapeMismatch("triplet_loss: index out of range");
    }
    Tensor d_pos = euclidean_distance(embeddings[t.anchor],
                                      embeddings[t.positive]);
    Tensor d_neg = euclidean_distance(embeddings[t.anchor],
                                      embeddings[t.negative]);
    acc = add(acc, relu(add_scalar(sub(d_pos, d_neg), t.margin)));
  }
  return scalar_mul(acc, 1.0 / static_cast<double>(triplets.size()));
}

Tensor global_ce_loss(const std::vector<Tensor>& probabilities,
                      const std::vector<int>& labels) {
  if (probabilities.size() != labels.size() || probabilities.empty()) {
    throw ShapeMismatch("global_ce_loss: probabilities/labels disagree");
  }
  constexpr double kInvLn2 = 1.4426950408889634;  // log2(x) = ln(x)/ln(2)
  Tensor acc = Tensor::scalar(0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= probabilities[i].numel()) {
      throw ShapeMismatch("global_ce_loss: label out of range");
    }
    Tensor p_true = clamp(at(probabilities[i], static_cast<std::size_t>(y)),
                          1e-12, 1.0);
    acc = add(acc, scalar_mul(log(p_true), kInvLn2));
  }
  return scalar_mul(acc, -1.0 / static_cast<double>(labels.size()));
}

Tensor total_loss(const Tensor& ce, const Tensor& triplet,
                  const Tensor& node_recon, const Tensor& edge_contrastive,
                  const LossCoefficients& c) {
  if (c.triplet < 0.0 || c.node_recon < 0.0 || c.edge_contrastive < 0.0) {
    throw NegativeCoefficient("loss coefficients must be >= 0");
  }
  Tensor out = ce;
  out = add(out, scalar_mul(triplet, c.triplet));
  out = add(out, scalar_mul(node_recon, c.node_recon));
  out = add(out, scalar_mul(edge_contrastive, c.edge_contrastive));
  return out;
}

}  // namespace dergcn
