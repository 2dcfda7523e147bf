#pragma once

#include <array>
#include <string>
#include <vector>

#include "dergcn/params.hpp"
#include "dergcn/tensor.hpp"

namespace dergcn {

struct FusionParams {
  Tensor W_T, W_A, W_V;                  // score projections, (d,)
  Tensor lambda_t, lambda_a, lambda_v;   // scalar mixing coefficients
  Tensor b_t, b_a, b_v;                  // (d,)

  static FusionParams init(ParamStore& store, const std::string& prefix,
                           std::size_t dim, Rng& rng);
};

// Column-wise softmax over the sequence axis of psi scaled by
// 1/sqrt(d_modality); inputs are clamped to [-50, 50] first.
Tensor normalize_hidden(const Tensor& psi, std::size_t d_modality);

// Arithmetic mean over the sequence axis of each modality matrix.
std::array<Tensor, 3> pool_modalities(const Tensor& H_t, const Tensor& H_a,
                                      const Tensor& H_v);

// Raw scores: w_g = W_g . tanh(sum_{m != g} lambda_m * pool(H_m)
//                              + lambda_g * xi_g + b_g),
// then ratio-normalized (paper form) or softmaxed when `use_softmax`.
// Throws DegenerateNormalizer when the ratio denominator vanishes.
std::array<Tensor, 3> modal_attention_weights(
    const Tensor& H_t, const Tensor& H_a, const Tensor& H_v,
    const Tensor& xi_t, const Tensor& xi_a, const Tensor& xi_v,
    const FusionParams& p, bool use_softmax = false);

Tensor fuse_modalities(const Tensor& xi_t, const Tensor& xi_a,
                       const Tensor& xi_v, const std::array<Tensor, 3>& w);

// Per-utterance pipeline over normalized hidden sequences: for each
// utterance, pool a window of rows centered on it (window = 0 means the
// whole dialogue), compute attention weights and fuse. One fused vector
// per utterance.
std::vector<Tensor> fuse_utterances(const Tensor& H_t, const Tensor& H_a,
                                    const Tensor& H_v, const FusionParams& p,
                                    std::size_t window = 1,
                                    bool use_softmax = false);

}  // namespace dergcn
