#pragma once

#include <cstdint>
#include <vector>

#include "dergcn/graph.hpp"

namespace dergcn {

// Planted-structure generator: per-class mean vectors per modality, labels
// drawn from a long-tailed distribution, event memberships correlated with
// labels. Everything is a pure function of the seed.
struct SynthSpec {
  std::size_t num_dialogues = 200;
  std::size_t min_utterances = 5;
  std::size_t max_utterances = 10;
  std::size_t num_speakers = 3;
  std::size_t num_classes = 6;
  std::size_t num_event_types = 2;
  std::size_t dim_t = 10;
  std::size_t dim_a = 8;
  std::size_t dim_v = 8;
  double imbalance_ratio = 10.0;  // most : least frequent class
  double signal_t = 1.0;
  double signal_a = 0.8;
  double signal_v = 0.8;
  double event_signal = 0.9;  // 1 = co-members always share the theme label
  double base_join = 0.75;    // join probability for theme-matching utterances
  double noise = 0.25;
  std::size_t events_per_type = 2;  // fresh events per dialogue and type
  std::uint64_t seed = 1234;
};

// class k frequency proportional to ratio^(1 - k/(C-1)); the 2-class case
// reduces to ratio : 1
std::vector<double> class_distribution(const SynthSpec& spec);

std::vector<Dialogue> gen_synthetic(const SynthSpec& spec);

}  // namespace dergcn
