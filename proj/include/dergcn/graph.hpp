#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dergcn/params.hpp"
#include "dergcn/tensor.hpp"

namespace dergcn {

struct Utterance {
  int speaker_id = 0;
  std::vector<int> event_ids;  // sorted, unique; type = id % num_event_types
  int label = 0;
  std::vector<double> feat_t, feat_a, feat_v;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;
};

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  std::size_t relation = 0;
  Tensor weight;  // scalar; constant for event edges, learned-path for speaker
};

// Relation catalog layout: [same-speaker, inter-speaker, one per event type].
constexpr std::size_t kRelSameSpeaker = 0;
constexpr std::size_t kRelInterSpeaker = 1;
constexpr std::size_t kRelEventBase = 2;

struct MultiRelGraph {
  std::vector<Tensor> nodes;           // fused utterance features
  std::vector<Edge> edges;
  std::vector<std::string> relations;  // catalog, index = relation id

  // edge indices grouped as [node][relation]
  std::vector<std::vector<std::vector<std::size_t>>> adjacency() const;
};

struct SpeakerEdgeParams {
  Tensor W_score1;  // (hidden,)    projects to the scalar score
  Tensor b1;        // (hidden,)
  Tensor W_score2;  // (hidden, 2*node_dim)
  Tensor b2;        // (hidden,)

  static SpeakerEdgeParams init(ParamStore& store, const std::string& prefix,
                                std::size_t node_dim, std::size_t hidden,
                                Rng& rng);
};

// Edges from a 0/1 membership matrix A (n x k): for i != j an edge exists
// iff [A.A^T]_ij >= 1 and its weight is the raw shared-membership count.
std::vector<Edge> build_event_edges(const Tensor& membership,
                                    std::size_t relation_id);

// rho = W1 . (ReLU(W2 [xi_i (+) indicator * xi_j] + b2) + b1)
Tensor speaker_edge_score(const Tensor& xi_i, const Tensor& xi_j,
                          double indicator, const SpeakerEdgeParams& p);

// Softmax over one node's neighborhood scores; weights sum to 1.
std::vector<std::pair<std::size_t, Tensor>> speaker_edge_weights(
    const std::vector<std::pair<std::size_t, Tensor>>& scores);

// Speaker topology: each utterance connects to the nearest preceding and
// nearest following utterance of every speaker, within `context_window`
// positions when context_window > 0. Same-speaker and inter-speaker pairs
// form two relations; event relations come from build_event_edges per
// event type.
MultiRelGraph assemble_graph(const Dialogue& d,
                             const std::vector<Tensor>& fused,
                             const SpeakerEdgeParams& p,
                             std::size_t num_event_types,
                             std::size_t context_window = 0);

// Line-delimited dump: relation-catalog header then `src dst relation_id
// weight` records.
void dump_graph(const MultiRelGraph& g, std::ostream& os);

}  // namespace dergcn
