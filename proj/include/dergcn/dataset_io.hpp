#pragma once

#include <string>
#include <vector>

#include "dergcn/graph.hpp"

namespace dergcn {

struct DatasetMeta {
  std::size_t dim_t = 0, dim_a = 0, dim_v = 0;
  std::size_t num_classes = 0;
  std::size_t num_event_types = 0;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Dialogue> dialogues;

  std::size_t total_utterances() const;
  std::vector<int> labels() const;  // flattened in dialogue order
};

// Comma-separated, one utterance per line:
//   dialogue_id,utt_index,speaker_id,label,event_ids(;-separated),feats...
// preceded by a header line declaring the dims. Floats are written in
// shortest round-trip decimal.
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

}  // namespace dergcn
