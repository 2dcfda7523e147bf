#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dergcn/classifier.hpp"
#include "dergcn/fusion.hpp"
#include "dergcn/graph.hpp"
#include "dergcn/gru.hpp"
#include "dergcn/mit.hpp"
#include "dergcn/params.hpp"
#include "dergcn/smgae.hpp"
#include "dergcn/synth.hpp"

namespace dergcn {

enum class Variant {
  kFull,
  kAddFusion,
  kConcatFusion,
  kNoContext,
  kUniGru,
  kCeOnly,
  kNoSmgae,
  kNoMit,
};

Variant variant_from_string(const std::string& name);
std::string variant_name(Variant v);

struct ModelConfig {
  // filled from the dataset
  std::size_t dim_t = 0, dim_a = 0, dim_v = 0;
  std::size_t num_classes = 0;
  std::size_t num_event_types = 0;

  std::size_t gru_hidden = 8;  // per direction
  std::size_t rgcn_dim = 16;
  std::size_t rgcn_layers = 2;
  std::size_t qk_dim = 8;
  std::size_t conv_width = 1;
  std::size_t edge_dim = 8;
  std::size_t edge_score_hidden = 8;
  std::size_t fusion_window = 1;   // pooling window per utterance; 0 = whole dialogue
  std::size_t context_window = 0;  // K; 0 = unlimited
  bool fusion_softmax = false;     // Eq-faithful ratio normalization when false
  bool mit_scale_sqrt = false;
  double gat_leaky_slope = 0.2;
  double dropout = 0.25;
  double mask_node_ratio = 0.3;
  double mask_edge_ratio = 0.3;
  std::size_t edge_negatives = 5;
  double smgae_lambda_reg = 0.0;
  Variant variant = Variant::kFull;

  std::size_t node_dim() const {
    return variant == Variant::kConcatFusion ? 6 * gru_hidden : 2 * gru_hidden;
  }
  std::size_t num_relations() const { return 2 + num_event_types; }
  void validate() const;
};

class DerGcnModel {
 public:
  DerGcnModel(const ModelConfig& cfg, std::uint64_t init_seed);

  struct Output {
    std::vector<Tensor> probabilities;  // one per processed utterance
    std::vector<Tensor> embeddings;     // fused per-utterance, pre-dropout
    std::vector<int> labels;            // of the processed (windowed) tail
    Tensor recon_loss;                  // scalar 0 when the branch is off
    Tensor edge_loss;
    double masked_cosine_sum = 0.0;     // diagnostics over masked nodes
    std::size_t masked_count = 0;
  };

  // `training` enables dropout; `with_smgae` runs the masking branch and
  // its losses. Stochastic choices (masks, negatives, dropout) are drawn
  // from `rng`.
  Output forward(const Dialogue& d, bool training, bool with_smgae, Rng& rng);

  // graph as the classifier path sees it (no masking)
  MultiRelGraph build_graph(const Dialogue& d);

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const ModelConfig& config() const { return cfg_; }
  std::vector<std::string> relation_catalog() const;

  // overwrite parameter buffers from a loaded store (names and shapes
  // must match exactly)
  void load_params(const ParamStore& loaded);

 private:
  std::vector<Tensor> encode_modality(const std::vector<Tensor>& xs, int which);
  std::vector<Tensor> fuse(const Dialogue& d);

  ModelConfig cfg_;
  ParamStore store_;

  BiGruParams gru_t_, gru_a_, gru_v_;
  GruParams uni_t_, uni_a_, uni_v_;
  Tensor lin_W_t_, lin_b_t_, lin_W_a_, lin_b_a_, lin_W_v_, lin_b_v_;
  FusionParams fusion_;
  SpeakerEdgeParams edge_params_;
  RgcnParams rgcn_;
  GatDecoderParams gat_;
  MitParams mit_;
  ClassifierParams clf_;
  Tensor node_mask_token_, edge_mask_token_, edge_head_;
};

}  // namespace dergcn
