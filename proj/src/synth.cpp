#include "dergcn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dergcn/errors.hpp"
#include "dergcn/rng.hpp"

namespace dergcn {

namespace {

void validate(const SynthSpec& s) {
  if (s.num_dialogues == 0 || s.num_classes < 2 || s.num_speakers == 0 ||
      s.min_utterances == 0 || s.min_utterances > s.max_utterances) {
    throw InvalidSpec("synthetic spec: counts out of range");
  }
  if (s.dim_t < 2 || s.dim_a < 2 || s.dim_v < 2) {
    throw InvalidSpec("synthetic spec: feature dims must be >= 2");
  }
  if (s.imbalance_ratio < 1.0) {
    throw InvalidSpec("synthetic spec: imbalance ratio must be >= 1");
  }
  if (s.noise < 0.0 || s.event_signal < 0.0 || s.event_signal > 1.0 ||
      s.base_join < 0.0 || s.base_join > 1.0) {
    throw InvalidSpec("synthetic spec: probabilities out of range");
  }
}

}  // namespace

std::vector<double> class_distribution(const SynthSpec& spec) {
  std::size_t C = spec.num_classes;
  std::vector<double> freq(C);
  double total = 0.0;
  for (std::size_t k = 0; k < C; ++k) {
    double expo = C == 1 ? 0.0
                         : 1.0 - static_cast<double>(k) /
                                     static_cast<double>(C - 1);
    freq[k] = std::pow(spec.imbalance_ratio, expo);
    total += freq[k];
  }
  for (double& f : freq) f /= total;
  return freq;
}

std::vector<Dialogue> gen_synthetic(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);

  // per-class planted means, one per modality
  std::vector<std::size_t> dims = {spec.dim_t, spec.dim_a, spec.dim_v};
  std::vector<std::vector<std::vector<double>>> means(3);
  for (std::size_t g = 0; g < 3; ++g) {
    means[g].resize(spec.num_classes);
    for (auto& m : means[g]) {
      m.resize(dims[g]);
      for (double& v : m) v = rng.gauss();
    }
  }

  // dialogue sizes first, then a label pool with exact per-class counts
  // (up to rounding) dealt across all utterances
  std::vector<std::size_t> sizes(spec.num_dialogues);
  std::size_t total = 0;
  for (auto& s : sizes) {
    s = spec.min_utterances +
        rng.index(spec.max_utterances - spec.min_utterances + 1);
    total += s;
  }
  std::vector<double> freq = class_distribution(spec);
  std::vector<int> pool;
  pool.reserve(total);
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    std::size_t count = static_cast<std::size_t>(
        std::floor(freq[k] * static_cast<double>(total)));
    pool.insert(pool.end(), count, static_cast<int>(k));
  }
  while (pool.size() < total) pool.push_back(0);  // rounding remainder
  rng.shuffle(pool);

  std::vector<double> signals = {spec.signal_t, spec.signal_a, spec.signal_v};
  std::vector<Dialogue> out(spec.num_dialogues);
  std::size_t cursor = 0;
  int next_event_id = 0;
  for (std::size_t d = 0; d < spec.num_dialogues; ++d) {
    Dialogue& dia = out[d];
    dia.id = "dlg-" + std::to_string(d);
    dia.utterances.resize(sizes[d]);
    for (Utterance& u : dia.utterances) {
      u.speaker_id = static_cast<int>(rng.index(spec.num_speakers));
      u.label = pool[cursor++];
      std::vector<double>* feats[3] = {&u.feat_t, &u.feat_a, &u.feat_v};
      for (std::size_t g = 0; g < 3; ++g) {
        feats[g]->resize(dims[g]);
        const auto& mean = means[g][static_cast<std::size_t>(u.label)];
        for (std::size_t c = 0; c < dims[g]; ++c) {
          (*feats[g])[c] = signals[g] * mean[c] + spec.noise * rng.gauss();
        }
      }
    }

    // fresh events per dialogue; local id encodes the type via id % T
    for (std::size_t t = 0; t < spec.num_event_types; ++t) {
      for (std::size_t inst = 0; inst < spec.events_per_type; ++inst) {
        int event_id =
            static_cast<int>(t) +
            static_cast<int>(spec.num_event_types) * next_event_id++;
        // theme label drawn from the same long-tailed distribution
        double r = rng.uniform();
        int theme = 0;
        double acc = 0.0;
        for (std::size_t k = 0; k < spec.num_classes; ++k) {
          acc += freq[k];
          if (r < acc) {
            theme = static_cast<int>(k);
            break;
          }
        }
        for (Utterance& u : dia.utterances) {
          double p_join = u.label == theme
                              ? spec.base_join
                              : spec.base_join * (1.0 - spec.event_signal);
          if (rng.uniform() < p_join) u.event_ids.push_back(event_id);
        }
      }
    }
    for (Utterance& u : dia.utterances) {
      std::sort(u.event_ids.begin(), u.event_ids.end());
    }
  }
  return out;
}

}  // namespace dergcn
