#pragma once

#include <string>
#include <vector>

#include "dergcn/params.hpp"
#include "dergcn/tensor.hpp"

namespace dergcn {

struct MitParams {
  Tensor W_Q, W_K;        // (qk_dim, in_dim)
  Tensor W_V;             // (in_dim, in_dim), value dim matches the residual
  Tensor K_Q, K_K, K_V;   // conv kernels over the relation axis
  bool scale_sqrt = false;  // epsilon = dim(Q), or sqrt(dim) when set

  std::size_t qk_dim() const { return W_Q.shape()[0]; }

  static MitParams init(ParamStore& store, const std::string& prefix,
                        std::size_t in_dim, std::size_t qk_dim,
                        std::size_t kernel_width, Rng& rng);
};

// Per-relation embeddings indexed [relation][node].
using RelationEmbeddings = std::vector<std::vector<Tensor>>;

struct QkvProjection {
  RelationEmbeddings Q, K, V;
};

// [Q^1..Q^N]_i = Conv([I^1..I^N]_i W_Q) per node, conv running over the
// relation axis (kernel width 1 by default), likewise K and V.
QkvProjection project_qkv(const RelationEmbeddings& I_rel, const MitParams& p);

// softmax over relations of Q_i^r . K_i^r / epsilon
Tensor relation_attention_scores(const RelationEmbeddings& Q,
                                 const RelationEmbeddings& K, std::size_t node,
                                 const MitParams& p);

// I_i^target + sum_{r != target} att[r] * V_i^r
Tensor cross_relation_fuse(const RelationEmbeddings& I_rel, const Tensor& att,
                           const RelationEmbeddings& V, std::size_t node,
                           std::size_t target);

// Full pass: fused views for every target relation, merged by mean.
std::vector<Tensor> mit_forward(const RelationEmbeddings& I_rel,
                                const MitParams& p);

}  // namespace dergcn
