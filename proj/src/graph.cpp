#include "dergcn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <ostream>
#include <set>

#include "dergcn/errors.hpp"

namespace dergcn {

std::vector<std::vector<std::vector<std::size_t>>> MultiRelGraph::adjacency()
    const {
  std::vector<std::vector<std::vector<std::size_t>>> adj(
      nodes.size(),
      std::vector<std::vector<std::size_t>>(relations.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[edges[e].src][edges[e].relation].push_back(e);
  }
  return adj;
}

SpeakerEdgeParams SpeakerEdgeParams::init(ParamStore& store,
                                          const std::string& prefix,
                                          std::size_t node_dim,
                                          std::size_t hidden, Rng& rng) {
  SpeakerEdgeParams p;
  p.W_score2 =
      store.create(prefix + ".W_score2", {hidden, 2 * node_dim}, 2 * node_dim,
                   rng);
  p.b2 = store.create_zeros(prefix + ".b2", {hidden});
  p.W_score1 = store.create(prefix + ".W_score1", {hidden}, hidden, rng);
  p.b1 = store.create_zeros(prefix + ".b1", {hidden});
  return p;
}

std::vector<Edge> build_event_edges(const Tensor& membership,
                                    std::size_t relation_id) {
  if (membership.rank() != 2) {
    throw ShapeMismatch("build_event_edges: membership must be a matrix");
  }
  std::size_t n = membership.shape()[0], k = membership.shape()[1];
  for (double v : membership.data()) {
    if (v != 0.0 && v != 1.0) {
      throw NonBinaryMembership("membership entries must be 0 or 1");
    }
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double shared = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        shared += membership.data()[i * k + c] * membership.data()[j * k + c];
      }
      if (shared >= 1.0) {
        edges.push_back({i, j, relation_id, Tensor::scalar(shared)});
      }
    }
  }
  return edges;
}

Tensor speaker_edge_score(const Tensor& xi_i, const Tensor& xi_j,
                          double indicator, const SpeakerEdgeParams& p) {
  if (indicator != 0.0 && indicator != 1.0) {
    throw ShapeMismatch("speaker_edge_score: indicator must be 0 or 1");
  }
  Tensor pair = concat({xi_i, scalar_mul(xi_j, indicator)});
  Tensor hidden = add(relu(add(matvec(p.W_score2, pair), p.b2)), p.b1);
  return dot(p.W_score1, hidden);
}

std::vector<std::pair<std::size_t, Tensor>> speaker_edge_weights(
    const std::vector<std::pair<std::size_t, Tensor>>& scores) {
  if (scores.empty()) {
    throw EmptyNeighborhood("speaker_edge_weights: no neighbors");
  }
  std::vector<Tensor> raw;
  raw.reserve(scores.size());
  for (const auto& [nbr, s] : scores) raw.push_back(s);
  Tensor w = softmax_axis(concat(raw), 0);
  std::vector<std::pair<std::size_t, Tensor>> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.emplace_back(scores[i].first, at(w, i));
  }
  return out;
}

MultiRelGraph assemble_graph(const Dialogue& d,
                             const std::vector<Tensor>& fused,
                             const SpeakerEdgeParams& p,
                             std::size_t num_event_types,
                             std::size_t context_window) {
  std::size_t n = d.utterances.size();
  if (n == 0) throw EmptySequence("assemble_graph: empty dialogue");
  if (fused.size() != n) {
    throw ShapeMismatch("assemble_graph: one fused vector per utterance");
  }

  MultiRelGraph g;
  g.nodes = fused;
  g.relations = {"speaker-same", "speaker-inter"};
  for (std::size_t t = 0; t < num_event_types; ++t) {
    g.relations.push_back("event-type-" + std::to_string(t));
  }

  // nearest preceding / following utterance of every speaker
  std::set<int> speakers;
  for (const Utterance& u : d.utterances) speakers.insert(u.speaker_id);
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::size_t> neighbors;
    for (int s : speakers) {
      for (std::size_t j = i; j-- > 0;) {
        if (context_window > 0 && i - j > context_window) break;
        if (d.utterances[j].speaker_id == s) {
          neighbors.insert(j);
          break;
        }
      }
      for (std::size_t j = i + 1; j < n; ++j) {
        if (context_window > 0 && j - i > context_window) break;
        if (d.utterances[j].speaker_id == s) {
          neighbors.insert(j);
          break;
        }
      }
    }
    neighbors.erase(i);

    for (std::size_t rel : {kRelSameSpeaker, kRelInterSpeaker}) {
      std::vector<std::pair<std::size_t, Tensor>> scores;
      for (std::size_t j : neighbors) {
        bool same = d.utterances[j].speaker_id == d.utterances[i].speaker_id;
        if ((rel == kRelSameSpeaker) != same) continue;
        double indicator = same ? 1.0 : 0.0;
        scores.emplace_back(j,
                            speaker_edge_score(fused[i], fused[j], indicator, p));
      }
      if (scores.empty()) continue;
      for (auto& [j, w] : speaker_edge_weights(scores)) {
        g.edges.push_back({i, j, rel, w});
      }
    }
  }

  // one relation per event type; columns are the distinct events of that
  // type appearing in the dialogue
  for (std::size_t t = 0; t < num_event_types; ++t) {
    std::set<int> ids;
    for (const Utterance& u : d.utterances) {
      for (int e : u.event_ids) {
        if (static_cast<std::size_t>(e % static_cast<int>(num_event_types)) ==
            t) {
          ids.insert(e);
        }
      }
    }
    if (ids.empty()) continue;
    std::vector<int> cols(ids.begin(), ids.end());
    std::vector<double> membership(n * cols.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto& ev = d.utterances[i].event_ids;
        if (std::find(ev.begin(), ev.end(), cols[c]) != ev.end()) {
          membership[i * cols.size() + c] = 1.0;
        }
      }
    }
    auto edges = build_event_edges(
        Tensor::from_data(std::move(membership), {n, cols.size()}),
        kRelEventBase + t);
    g.edges.insert(g.edges.end(), edges.begin(), edges.end());
  }
  return g;
}

void dump_graph(const MultiRelGraph& g, std::ostream& os) {
  os << "# relations:";
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    os << ' ' << r << '=' << g.relations[r];
  }
  os << '\n';
  char buf[64];
  for (const Edge& e : g.edges) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), e.weight.value());
    os << e.src << ' ' << e.dst << ' ' << e.relation << ' '
       << std::string_view(buf, ptr - buf) << '\n';
  }
}

}  // namespace dergcn
