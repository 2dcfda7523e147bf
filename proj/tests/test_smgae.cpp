#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dergcn/optimizer.hpp"
#include "dergcn/rng.hpp"
#include "dergcn/smgae.hpp"
#include "doctest.h"

using namespace dergcn;

namespace {

// small hand-assembled graph: single relation, positive constant weights
MultiRelGraph toy_graph(std::size_t n, std::size_t dim, Rng& rng,
                        const std::vector<std::tuple<std::size_t, std::size_t,
                                                     double>>& weighted_edges,
                        std::size_t num_relations = 1) {
  MultiRelGraph g;
  for (std::size_t r = 0; r < num_relations; ++r) {
    g.relations.push_back("r" + std::to_string(r));
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    g.nodes.push_back(Tensor::from_data(std::move(v), {dim}));
  }
  for (auto [s, d, w] : weighted_edges) {
    g.edges.push_back({s, d, 0, Tensor::scalar(w)});
  }
  return g;
}

}  // namespace

TEST_CASE("sample_masks ceils tiny ratios to one node") {
  Rng rng(1);
  MultiRelGraph g = toy_graph(10, 2, rng, {{0, 1, 1.0}, {1, 0, 1.0}});
  MaskPlan plan = sample_masks(g, 0.001, 0.4, 9);
  CHECK(plan.masked_nodes.size() == 1);
  CHECK(plan.masked_edges.size() == 1);
}

TEST_CASE("sample_masks is deterministic per seed") {
  Rng rng(2);
  MultiRelGraph g = toy_graph(12, 2, rng,
                              {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
  MaskPlan a = sample_masks(g, 0.3, 0.5, 77);
  MaskPlan b = sample_masks(g, 0.3, 0.5, 77);
  CHECK(a.masked_nodes == b.masked_nodes);
  CHECK(a.masked_edges == b.masked_edges);
  MaskPlan c = sample_masks(g, 0.3, 0.5, 78);
  CHECK((a.masked_nodes != c.masked_nodes || a.masked_edges != c.masked_edges));
}

TEST_CASE("sample_masks rejects ratios outside (0,1)") {
  Rng rng(3);
  MultiRelGraph g = toy_graph(4, 2, rng, {{0, 1, 1.0}});
  CHECK_THROWS_AS(sample_masks(g, 0.0, 0.5, 1), RatioOutOfRange);
  CHECK_THROWS_AS(sample_masks(g, 0.5, 1.0, 1), RatioOutOfRange);
}

TEST_CASE("node mask sampling is uniform across seeds") {
  Rng rng(4);
  MultiRelGraph g = toy_graph(8, 2, rng, {{0, 1, 1.0}});
  std::vector<int> hits(8, 0);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (std::size_t i : sample_masks(g, 0.5, 0.5, seed).masked_nodes) {
      ++hits[i];
    }
  }
  for (int h : hits) {
    CHECK(h >= 440);
    CHECK(h <= 560);
  }
}

TEST_CASE("apply_masks replaces exactly the planned entries") {
  Rng rng(5);
  MultiRelGraph g = toy_graph(5, 3, rng,
                              {{0, 1, 2.0}, {1, 0, 2.0}, {2, 3, 1.0}});
  Tensor node_token = Tensor::zeros({3}, true);
  Tensor edge_token = Tensor::scalar(0.0, true);

  MaskPlan empty;
  MultiRelGraph same = apply_masks(g, empty, node_token, edge_token);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(same.nodes[i].data() == g.nodes[i].data());
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    CHECK(same.edges[e].weight.value() == g.edges[e].weight.value());

  MaskPlan one;
  one.masked_nodes = {3};
  std::vector<std::vector<double>> before;
  for (const Tensor& t : g.nodes) before.push_back(t.data());
  MultiRelGraph view = apply_masks(g, one, node_token, edge_token);
  for (std::size_t i = 0; i < 5; ++i) {
    if (i == 3) {
      CHECK(view.nodes[i].data() == node_token.data());
    } else {
      CHECK(view.nodes[i].data() == g.nodes[i].data());
    }
    CHECK(g.nodes[i].data() == before[i]);  // source untouched
  }

  MaskPlan all;
  all.masked_nodes = {0, 1, 2, 3, 4};
  MultiRelGraph full = apply_masks(g, all, node_token, edge_token);
  for (const Tensor& t : full.nodes) CHECK(t.data() == node_token.data());

  MaskPlan stale;
  stale.masked_nodes = {9};
  CHECK_THROWS_AS(apply_masks(g, stale, node_token, edge_token),
                  StaleMaskPlan);
}

TEST_CASE("rgcn with zero weights collapses to zero") {
  Rng rng(6);
  MultiRelGraph g = toy_graph(3, 2, rng, {{0, 1, 1.0}, {1, 0, 1.0}});
  RgcnParams p;
  p.W_rel = {{Tensor::zeros({2, 2}, true)}};
  p.W_self = {Tensor::zeros({2, 2}, true)};
  for (const Tensor& I : rgcn_encode(g, p)) {
    for (double v : I.data()) CHECK(v == 0.0);
  }
}

TEST_CASE("rgcn self term alone is ReLU of the feature") {
  MultiRelGraph g;
  g.relations = {"r0"};
  g.nodes.push_back(Tensor::from_data({0.7, -0.3}, {2}));
  RgcnParams p;
  p.W_rel = {{Tensor::zeros({2, 2}, true)}};
  p.W_self = {Tensor::from_data({1.0, 0.0, 0.0, 1.0}, {2, 2}, true)};
  auto I = rgcn_encode(g, p);
  CHECK(I[0].data() == std::vector<double>{0.7, 0.0});
}

TEST_CASE("rgcn matches the brute-force double sum on a toy graph") {
  Rng rng(7);
  std::vector<std::tuple<std::size_t, std::size_t, double>> edges = {
      {0, 1, 2.0}, {1, 0, 2.0}, {1, 2, 1.0}, {2, 1, 1.0}, {0, 2, 3.0},
      {2, 0, 3.0}};
  MultiRelGraph g = toy_graph(3, 2, rng, edges);
  ParamStore store;
  RgcnParams p = RgcnParams::init(store, "rgcn", 2, 2, 1, 1, rng);

  auto I = rgcn_encode(g, p);

  const auto& Wr = p.W_rel[0][0].data();
  const auto& Ws = p.W_self[0].data();
  for (std::size_t i = 0; i < 3; ++i) {
    // gather out-neighbors and weights
    std::vector<std::pair<std::size_t, double>> nbrs;
    for (auto [s, d, w] : edges) {
      if (s == i) nbrs.push_back({d, w});
    }
    double wmax = 0.0;
    for (auto& [d, w] : nbrs) wmax = std::max(wmax, w);
    double c = static_cast<double>(nbrs.size());
    for (std::size_t rr = 0; rr < 2; ++rr) {
      double acc = 0.0;
      for (std::size_t cc = 0; cc < 2; ++cc)
        acc += Ws[rr * 2 + cc] * g.nodes[i].data()[cc];
      for (auto& [d, w] : nbrs) {
        double msg = 0.0;
        for (std::size_t cc = 0; cc < 2; ++cc)
          msg += Wr[rr * 2 + cc] * g.nodes[d].data()[cc];
        acc += (w / c) * (w / wmax) * msg;
      }
      acc = std::max(acc, 0.0);
      CHECK(I[i].data()[rr] == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("rgcn rejects a relation-count mismatch") {
  Rng rng(8);
  MultiRelGraph g = toy_graph(3, 2, rng, {{0, 1, 1.0}}, 2);
  RgcnParams p;
  p.W_rel = {{Tensor::zeros({2, 2}, true)}};  // one relation only
  p.W_self = {Tensor::zeros({2, 2}, true)};
  CHECK_THROWS_AS(rgcn_encode(g, p), UnknownRelation);
}

TEST_CASE("rgcn is permutation equivariant") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        if (i != j && rng.uniform() < 0.4) {
          edges.push_back({i, j, 1.0 + rng.index(3)});
        }
      }
    }
    MultiRelGraph g = toy_graph(5, 3, rng, edges);
    ParamStore store;
    RgcnParams p = RgcnParams::init(store, "rgcn" + std::to_string(trial), 3,
                                    3, 1, 2, rng);
    auto I = rgcn_encode(g, p);

    std::vector<std::size_t> perm = {2, 0, 4, 1, 3};  // node i -> perm[i]
    MultiRelGraph h;
    h.relations = g.relations;
    h.nodes.resize(5);
    for (std::size_t i = 0; i < 5; ++i) h.nodes[perm[i]] = g.nodes[i];
    for (const Edge& e : g.edges) {
      h.edges.push_back({perm[e.src], perm[e.dst], e.relation, e.weight});
    }
    auto J = rgcn_encode(h, p);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(J[perm[i]].data()[c] ==
              doctest::Approx(I[i].data()[c]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("gat decode: isolated node reproduces its projection") {
  MultiRelGraph g;
  g.relations = {"r0"};
  g.nodes.push_back(Tensor::from_data({0.5, -1.0}, {2}));
  Rng rng(10);
  ParamStore store;
  GatDecoderParams p = GatDecoderParams::init(store, "gat", 2, 2, rng);
  auto I = g.nodes;
  std::vector<Tensor> att;
  auto Z = gat_decode(g, I, p, &att);
  Tensor expect = matvec(p.W_dec, I[0]);
  CHECK(Z[0].data() == expect.data());
  CHECK(att[0].numel() == 1);
  CHECK(att[0].value() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gat decode: equal embeddings attend uniformly") {
  MultiRelGraph g;
  g.relations = {"r0"};
  Tensor shared = Tensor::from_data({0.4, 0.6}, {2});
  for (int i = 0; i < 3; ++i) g.nodes.push_back(shared);
  g.edges.push_back({0, 1, 0, Tensor::scalar(1.0)});
  g.edges.push_back({0, 2, 0, Tensor::scalar(1.0)});
  Rng rng(11);
  ParamStore store;
  GatDecoderParams p = GatDecoderParams::init(store, "gat", 2, 2, rng);
  std::vector<Tensor> att;
  gat_decode(g, {shared, shared, shared}, p, &att);
  REQUIRE(att[0].numel() == 3);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(att[0].data()[k] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("gat decode matches a scalar oracle on a 3-node toy") {
  MultiRelGraph g;
  g.relations = {"r0"};
  g.nodes.push_back(Tensor::from_data({1.0, 0.0}, {2}));
  g.nodes.push_back(Tensor::from_data({0.0, 1.0}, {2}));
  g.nodes.push_back(Tensor::from_data({0.5, 0.5}, {2}));
  g.edges.push_back({0, 1, 0, Tensor::scalar(1.0)});
  g.edges.push_back({0, 2, 0, Tensor::scalar(1.0)});
  GatDecoderParams p;
  p.W_dec = Tensor::from_data({0.5, -0.25, 1.0, 0.75}, {2, 2}, true);
  p.attn = Tensor::from_data({0.3, -0.2, 0.6, 0.1}, {4}, true);
  p.leaky_slope = 0.2;

  auto Z = gat_decode(g, g.nodes, p);

  double proj[3][2];
  const auto& W = p.W_dec.data();
  for (int i = 0; i < 3; ++i) {
    for (int r = 0; r < 2; ++r) {
      proj[i][r] = W[r * 2 + 0] * g.nodes[i].data()[0] +
                   W[r * 2 + 1] * g.nodes[i].data()[1];
    }
  }
  std::size_t targets[3] = {1, 2, 0};  // sorted neighbors then self
  double scores[3];
  const auto& a = p.attn.data();
  for (int k = 0; k < 3; ++k) {
    std::size_t j = targets[k];
    double s = a[0] * proj[0][0] + a[1] * proj[0][1] + a[2] * proj[j][0] +
               a[3] * proj[j][1];
    scores[k] = s > 0.0 ? s : 0.2 * s;
  }
  double mx = std::max({scores[0], scores[1], scores[2]});
  double denom = 0.0;
  for (double s : scores) denom += std::exp(s - mx);
  double z0[2] = {0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    double w = std::exp(scores[k] - mx) / denom;
    z0[0] += w * proj[targets[k]][0];
    z0[1] += w * proj[targets[k]][1];
  }
  CHECK(Z[0].data()[0] == doctest::Approx(z0[0]).epsilon(1e-12));
  CHECK(Z[0].data()[1] == doctest::Approx(z0[1]).epsilon(1e-12));
}

TEST_CASE("node reconstruction loss") {
  std::vector<Tensor> xi = {Tensor::from_data({1.0, 0.0}, {2}),
                            Tensor::from_data({0.0, 2.0}, {2})};
  SUBCASE("perfect reconstruction is zero") {
    Tensor loss = node_recon_loss(xi, xi, {0, 1}, 0.0, {});
    CHECK(loss.value() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("orthogonal reconstruction is one") {
    std::vector<Tensor> z = {Tensor::from_data({0.0, 3.0}, {2}),
                             Tensor::from_data({5.0, 0.0}, {2})};
    Tensor loss = node_recon_loss(xi, z, {0, 1}, 0.0, {});
    CHECK(loss.value() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("hand cosine value") {
    std::vector<Tensor> z = {Tensor::from_data({1.0, 1.0}, {2}), xi[1]};
    Tensor loss = node_recon_loss(xi, z, {0}, 0.0, {});
    CHECK(loss.value() ==
          doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(loss.value() == doctest::Approx(0.29289).epsilon(1e-4));
  }
  SUBCASE("zero vector contributes the constant 1") {
    std::vector<Tensor> z = {Tensor::zeros({2}), xi[1]};
    Tensor loss = node_recon_loss(xi, z, {0, 1}, 0.0, {});
    CHECK(loss.value() == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("regularizer adds lambda times squared Frobenius norm") {
    Tensor W = Tensor::from_data({3.0, 4.0}, {2}, true);
    Tensor loss = node_recon_loss(xi, xi, {0, 1}, 0.1, {W});
    CHECK(loss.value() == doctest::Approx(2.5).epsilon(1e-12));
  }
}

TEST_CASE("edge contrastive loss") {
  SUBCASE("single positive, no negatives") {
    std::vector<Tensor> D = {Tensor::from_data({1.0, 0.0}, {2}),
                             Tensor::from_data({0.5, 0.5}, {2})};
    Tensor loss = edge_contrastive_loss(D, {{0, 1}}, {{}});
    CHECK(loss.value() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("one equal-similarity negative gives ln 2") {
    std::vector<Tensor> D = {Tensor::from_data({1.0, 0.0}, {2}),
                             Tensor::from_data({0.3, 0.4}, {2}),
                             Tensor::from_data({0.3, -0.9}, {2})};
    // D0.D1 = 0.3 and D0.D2 = 0.3
    Tensor loss = edge_contrastive_loss(D, {{0, 1}}, {{2}});
    CHECK(loss.value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("raising the positive similarity drives the loss to zero") {
    double prev = 1e9;
    for (double scale : {1.0, 2.0, 4.0, 8.0}) {
      std::vector<Tensor> D = {Tensor::from_data({scale, 0.0}, {2}),
                               Tensor::from_data({1.0, 0.0}, {2}),
                               Tensor::from_data({-1.0, 0.0}, {2})};
      double v = edge_contrastive_loss(D, {{0, 1}}, {{2}}).value();
      CHECK(v < prev);
      prev = v;
    }
    CHECK(prev < 1e-3);
  }
  SUBCASE("no positives raises") {
    std::vector<Tensor> D = {Tensor::from_data({1.0}, {1})};
    CHECK_THROWS_AS(edge_contrastive_loss(D, {}, {}), EmptyPositives);
  }
}

TEST_CASE("negative sampling avoids true edges and self") {
  Rng rng(12);
  MultiRelGraph g = toy_graph(6, 2, rng,
                              {{0, 1, 1.0}, {0, 2, 1.0}, {1, 0, 1.0}});
  auto negs = sample_edge_negatives(g, {{0, 1}}, {0}, 3, 55);
  REQUIRE(negs.size() == 1);
  CHECK(negs[0].size() == 3);
  for (std::size_t j : negs[0]) {
    CHECK(j != 0);
    CHECK(j != 1);
    CHECK(j != 2);  // (0,2) is an edge in relation 0
  }
  auto again = sample_edge_negatives(g, {{0, 1}}, {0}, 3, 55);
  CHECK(again[0] == negs[0]);  // seed-deterministic
}

TEST_CASE("smgae losses pass the finite-difference check end to end") {
  Rng rng(13);
  std::vector<std::tuple<std::size_t, std::size_t, double>> edges = {
      {0, 1, 2.0}, {1, 0, 2.0}, {1, 2, 1.0}, {2, 1, 1.0}, {3, 0, 1.0},
      {0, 3, 1.0}};
  MultiRelGraph g = toy_graph(4, 3, rng, edges);
  ParamStore store;
  RgcnParams enc = RgcnParams::init(store, "enc", 3, 3, 1, 2, rng);
  GatDecoderParams dec = GatDecoderParams::init(store, "dec", 3, 3, rng);
  Tensor edge_head = store.create("edge_head", {2, 3}, 3, rng);
  Tensor node_token = store.create("node_token", {3}, 3, rng);
  Tensor edge_token = store.create("edge_token", {1}, 1, rng);

  MaskPlan plan = sample_masks(g, 0.4, 0.4, 21);
  std::vector<std::pair<std::size_t, std::size_t>> positives;
  std::vector<std::size_t> pos_rels;
  for (std::size_t e : plan.masked_edges) {
    positives.push_back({g.edges[e].src, g.edges[e].dst});
    pos_rels.push_back(g.edges[e].relation);
  }
  auto negatives = sample_edge_negatives(g, positives, pos_rels, 2, 31);

  auto loss = [&]() {
    MultiRelGraph view = apply_masks(g, plan, node_token, edge_token);
    auto I = rgcn_encode(view, enc);
    auto Z = gat_decode(view, I, dec);
    Tensor recon = node_recon_loss(g.nodes, Z, plan.masked_nodes, 1e-4,
                                   {enc.W_rel[0][0], dec.W_dec});
    std::vector<Tensor> D;
    for (const Tensor& z : Z) D.push_back(matvec(edge_head, z));
    Tensor contrast = edge_contrastive_loss(D, positives, negatives);
    return add(recon, contrast);
  };

  for (const auto& [name, t] : store.items()) {
    double err = finite_diff_check_inplace(loss, t, 1e-3);
    INFO("param ", name);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("reconstruction training strictly decreases the loss") {
  Rng rng(14);
  std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
  for (std::size_t i = 0; i < 6; ++i) {
    edges.push_back({i, (i + 1) % 6, 1.0});
    edges.push_back({(i + 1) % 6, i, 1.0});
  }
  MultiRelGraph g = toy_graph(6, 4, rng, edges);
  ParamStore store;
  RgcnParams enc = RgcnParams::init(store, "enc", 4, 4, 1, 2, rng);
  GatDecoderParams dec = GatDecoderParams::init(store, "dec", 4, 4, rng);
  Tensor node_token = store.create_zeros("node_token", {4});
  Tensor edge_token = store.create_zeros("edge_token", {1});
  MaskPlan plan = sample_masks(g, 0.3, 0.3, 5);

  Adam opt(store, AdamConfig{});  // default learning rate
  double prev = 1e18;
  for (int step = 0; step < 50; ++step) {
    opt.zero_grads();
    MultiRelGraph view = apply_masks(g, plan, node_token, edge_token);
    auto I = rgcn_encode(view, enc);
    auto Z = gat_decode(view, I, dec);
    Tensor loss = node_recon_loss(g.nodes, Z, plan.masked_nodes, 0.0, {});
    CHECK(loss.value() < prev);
    prev = loss.value();
    backward(loss);
    opt.step();
  }
}
