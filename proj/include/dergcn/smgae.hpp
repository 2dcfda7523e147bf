#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dergcn/graph.hpp"
#include "dergcn/params.hpp"
#include "dergcn/tensor.hpp"

namespace dergcn {

struct MaskPlan {
  std::vector<std::size_t> masked_nodes;  // sorted node ids
  std::vector<std::size_t> masked_edges;  // sorted edge-list indices
};

struct RgcnParams {
  // W_rel[layer][relation], W_self[layer]; layer 0 maps node_dim -> dim,
  // deeper layers map dim -> dim
  std::vector<std::vector<Tensor>> W_rel;
  std::vector<Tensor> W_self;

  std::size_t layers() const { return W_self.size(); }
  std::size_t num_relations() const { return W_rel.empty() ? 0 : W_rel[0].size(); }

  static RgcnParams init(ParamStore& store, const std::string& prefix,
                         std::size_t node_dim, std::size_t dim,
                         std::size_t num_relations, std::size_t layers,
                         Rng& rng);
};

struct GatDecoderParams {
  Tensor W_dec;  // (out_dim, in_dim)
  Tensor attn;   // (2 * out_dim,)
  double leaky_slope = 0.2;

  static GatDecoderParams init(ParamStore& store, const std::string& prefix,
                               std::size_t in_dim, std::size_t out_dim,
                               Rng& rng);
};

// ceil(ratio * count) nodes/edges drawn uniformly without replacement;
// deterministic for a fixed seed.
MaskPlan sample_masks(const MultiRelGraph& g, double node_ratio,
                      double edge_ratio, std::uint64_t seed);

// Masked view: masked node features point at `node_token`, masked edge
// weights at `edge_token`; everything else shares the original tensors and
// the input graph is left untouched.
MultiRelGraph apply_masks(const MultiRelGraph& g, const MaskPlan& plan,
                          const Tensor& node_token, const Tensor& edge_token);

// Relational GCN encoder. Per layer:
//   I_i <- ReLU( sum_r sum_{j in M_i^r} (w_ij / c_{i,r}) * et_ij * W_r I_j
//                + W_self I_i )
// where c_{i,r} = |M_i^r| and et_ij is the edge weight normalized by the
// neighborhood max (clamped below at 0 so a learned mask token cannot push
// it negative). Messages follow out-edges.
std::vector<Tensor> rgcn_encode(const MultiRelGraph& gv, const RgcnParams& p);

// Same encoder restricted to a single relation's messages (plus the self
// term); feeds the cross-relation attention stage.
std::vector<Tensor> rgcn_encode_relation(const MultiRelGraph& gv,
                                         const RgcnParams& p,
                                         std::size_t relation);

// Single-head graph attention decode over the union of all relations;
// attention spans each node's neighbors plus itself. When `attention_out`
// is given it receives one normalized attention vector per node.
std::vector<Tensor> gat_decode(const MultiRelGraph& gv,
                               const std::vector<Tensor>& I,
                               const GatDecoderParams& p,
                               std::vector<Tensor>* attention_out = nullptr);

// mean over masked nodes of (1 - cos(xi_i, Z_i)) plus lambda_reg times the
// summed squared Frobenius norms of `reg_weights`. A zero vector on either
// side contributes the constant 1 (maximally dissimilar).
Tensor node_recon_loss(const std::vector<Tensor>& original,
                       const std::vector<Tensor>& reconstructed,
                       const std::vector<std::size_t>& masked_nodes,
                       double lambda_reg,
                       const std::vector<Tensor>& reg_weights);

// InfoNCE over masked edges: for each anchor node i with masked out-edges,
//   -sum_{j+} log( exp(D_i . D_j+) / sum_{j in negs+positive} exp(D_i . D_j) )
// averaged over anchors. `negatives` holds candidate far-end node ids per
// positive (same index).
Tensor edge_contrastive_loss(
    const std::vector<Tensor>& D,
    const std::vector<std::pair<std::size_t, std::size_t>>& positives,
    const std::vector<std::vector<std::size_t>>& negatives);

// Uniform non-edge far ends from the positive's relation, seed-driven.
std::vector<std::vector<std::size_t>> sample_edge_negatives(
    const MultiRelGraph& g,
    const std::vector<std::pair<std::size_t, std::size_t>>& positives,
    const std::vector<std::size_t>& positive_relations,
    std::size_t negatives_per_edge, std::uint64_t seed);

}  // namespace dergcn
