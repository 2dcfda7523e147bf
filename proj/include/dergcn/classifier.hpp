#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dergcn/params.hpp"
#include "dergcn/tensor.hpp"

namespace dergcn {

struct ClassifierParams {
  Tensor W_f;    // (d, d) residual layer
  Tensor b_f;    // (d,)
  Tensor W_out;  // (num_classes, d)
  Tensor b_out;  // (num_classes,)

  std::size_t num_classes() const { return W_out.shape()[0]; }

  static ClassifierParams init(ParamStore& store, const std::string& prefix,
                               std::size_t dim, std::size_t num_classes,
                               Rng& rng);
};

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  double margin = 1.0;
};

// alpha = E_f + ReLU(W_f E_f + b_f); P = softmax(W_out alpha + b_out)
Tensor classify(const Tensor& embedding, const ClassifierParams& p);

// argmax with ties broken toward the lowest index
std::size_t predict_label(const Tensor& probabilities);

// For every class with >= 2 members draw up to `per_class_quota` distinct
// (anchor, positive) pairs plus one uniform negative each. Throws
// DegenerateLabelSet when fewer than two classes are present.
std::vector<Triplet> sample_triplets(const std::vector<int>& labels,
                                     std::size_t per_class_quota,
                                     std::uint64_t seed, double margin = 1.0);

// mean over triplets of max(E(a,p) - E(a,n) + margin, 0); empty set -> 0
Tensor triplet_loss(const std::vector<Triplet>& triplets,
                    const std::vector<Tensor>& embeddings);

// -(1/N) sum log2(P[true]); probabilities clamped to [1e-12, 1]
Tensor global_ce_loss(const std::vector<Tensor>& probabilities,
                      const std::vector<int>& labels);

struct LossCoefficients {
  double triplet = 1.0;
  double node_recon = 0.5;
  double edge_contrastive = 0.5;
};

Tensor total_loss(const Tensor& ce, const Tensor& triplet,
                  const Tensor& node_recon, const Tensor& edge_contrastive,
                  const LossCoefficients& c);

}  // namespace dergcn
