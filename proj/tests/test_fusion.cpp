#include <cmath>
#include <vector>

#include "dergcn/fusion.hpp"
#include "dergcn/rng.hpp"
#include "doctest.h"

using namespace dergcn;

namespace {

FusionParams hand_params(double w_t, double w_a, double w_v, std::size_t d) {
  // biases chosen so tanh(b) = 0.5 per entry; score projections
  // [w_g * 2 / d, ...] make the raw scores exactly w_g
  FusionParams p;
  double z = std::atanh(0.5);
  auto vec = [&](double v) {
    return Tensor::from_data(std::vector<double>(d, v), {d}, true);
  };
  p.W_T = vec(2.0 * w_t / static_cast<double>(d));
  p.W_A = vec(2.0 * w_a / static_cast<double>(d));
  p.W_V = vec(2.0 * w_v / static_cast<double>(d));
  p.b_t = vec(z);
  p.b_a = vec(z);
  p.b_v = vec(z);
  p.lambda_t = Tensor::scalar(0.0, true);
  p.lambda_a = Tensor::scalar(0.0, true);
  p.lambda_v = Tensor::scalar(0.0, true);
  return p;
}

}  // namespace

TEST_CASE("normalize_hidden: symmetric column splits evenly") {
  Tensor psi = Tensor::from_data({0.0, 0.0}, {2, 1});
  Tensor H = normalize_hidden(psi, 4);
  CHECK(H.data()[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(H.data()[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("normalize_hidden matches the scalar softmax oracle") {
  // column [2, 0] with d = 4 (eps = 0.5): [e/(e+1), 1/(e+1)]
  Tensor psi = Tensor::from_data({2.0, 0.0}, {2, 1});
  Tensor H = normalize_hidden(psi, 4);
  double e = std::exp(1.0);
  CHECK(H.data()[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
  CHECK(H.data()[1] == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
  CHECK(H.data()[0] == doctest::Approx(0.73106).epsilon(1e-4));
}

TEST_CASE("normalize_hidden columns sum to one, entries in (0,1)") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t T = 2 + rng.index(6), d = 1 + rng.index(5);
    std::vector<double> data(T * d);
    for (double& v : data) v = rng.uniform(-3.0, 3.0);
    Tensor H = normalize_hidden(Tensor::from_data(data, {T, d}), d);
    for (std::size_t j = 0; j < d; ++j) {
      double total = 0.0;
      for (std::size_t i = 0; i < T; ++i) {
        double v = H.data()[i * d + j];
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("pool_modalities") {
  Tensor c = Tensor::from_data({2.0, -1.0, 2.0, -1.0}, {2, 2});
  Tensor m = Tensor::from_data({1.0, 3.0, 3.0, 5.0}, {2, 2});
  Tensor single = Tensor::from_data({7.0, 9.0}, {1, 2});
  auto [a, b, s] = pool_modalities(c, m, single);
  CHECK(a.data() == std::vector<double>{2.0, -1.0});  // constant rows
  CHECK(b.data() == std::vector<double>{2.0, 4.0});   // hand mean
  CHECK(s.data() == std::vector<double>{7.0, 9.0});   // single row
}

TEST_CASE("modal attention weights: zero params raise DegenerateNormalizer") {
  std::size_t d = 2;
  FusionParams p;
  auto zvec = [&] { return Tensor::zeros({d}, true); };
  p.W_T = zvec(); p.W_A = zvec(); p.W_V = zvec();
  p.b_t = zvec(); p.b_a = zvec(); p.b_v = zvec();
  p.lambda_t = Tensor::scalar(0.0, true);
  p.lambda_a = Tensor::scalar(0.0, true);
  p.lambda_v = Tensor::scalar(0.0, true);
  Tensor H = Tensor::from_data({0.5, 0.5, 0.5, 0.5}, {2, 2});
  auto [xt, xa, xv] = pool_modalities(H, H, H);
  CHECK_THROWS_AS(modal_attention_weights(H, H, H, xt, xa, xv, p),
                  DegenerateNormalizer);
}

TEST_CASE("modal attention weights: equal raw scores normalize to thirds") {
  std::size_t d = 2;
  FusionParams p = hand_params(1.0, 1.0, 1.0, d);
  Tensor H = Tensor::from_data({0.25, 0.75, 0.75, 0.25}, {2, 2});
  auto [xt, xa, xv] = pool_modalities(H, H, H);
  auto w = modal_attention_weights(H, H, H, xt, xa, xv, p);
  for (const Tensor& wi : w)
    CHECK(wi.value() == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("modal attention weights: hand normalization of (2,1,1)") {
  std::size_t d = 2;
  FusionParams p = hand_params(2.0, 1.0, 1.0, d);
  Tensor H = Tensor::from_data({0.25, 0.75, 0.75, 0.25}, {2, 2});
  auto [xt, xa, xv] = pool_modalities(H, H, H);
  auto w = modal_attention_weights(H, H, H, xt, xa, xv, p);
  CHECK(w[0].value() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(w[1].value() == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(w[2].value() == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("weights sum to one whenever no error is raised") {
  Rng rng(21);
  ParamStore store;
  FusionParams p = FusionParams::init(store, "fuse", 3, rng);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> data(4 * 3);
    for (double& v : data) v = rng.uniform(-2.0, 2.0);
    Tensor H_t = normalize_hidden(Tensor::from_data(data, {4, 3}), 3);
    for (double& v : data) v = rng.uniform(-2.0, 2.0);
    Tensor H_a = normalize_hidden(Tensor::from_data(data, {4, 3}), 3);
    for (double& v : data) v = rng.uniform(-2.0, 2.0);
    Tensor H_v = normalize_hidden(Tensor::from_data(data, {4, 3}), 3);
    auto [xt, xa, xv] = pool_modalities(H_t, H_a, H_v);
    auto w = modal_attention_weights(H_t, H_a, H_v, xt, xa, xv, p);
    CHECK(std::abs(w[0].value() + w[1].value() + w[2].value() - 1.0) <= 1e-9);
  }
}

TEST_CASE("fuse_modalities") {
  Tensor xt = Tensor::from_data({1.0, 0.0}, {2});
  Tensor xa = Tensor::from_data({0.0, 1.0}, {2});
  Tensor xv = Tensor::from_data({0.0, 0.0}, {2});
  std::array<Tensor, 3> pick_t = {Tensor::scalar(1.0), Tensor::scalar(0.0),
                                  Tensor::scalar(0.0)};
  CHECK(fuse_modalities(xt, xa, xv, pick_t).data() == xt.data());

  std::array<Tensor, 3> mix = {Tensor::scalar(0.5), Tensor::scalar(0.25),
                               Tensor::scalar(0.25)};
  Tensor fused = fuse_modalities(xt, xa, xv, mix);
  CHECK(fused.data() == std::vector<double>{0.5, 0.25});

  // convexity: identical inputs pass through any weights summing to 1
  Tensor v = Tensor::from_data({0.3, -0.8}, {2});
  std::array<Tensor, 3> w = {Tensor::scalar(0.2), Tensor::scalar(0.5),
                             Tensor::scalar(0.3)};
  Tensor same = fuse_modalities(v, v, v, w);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(same.data()[i] == doctest::Approx(v.data()[i]).epsilon(1e-12));
}

TEST_CASE("permuting modalities permutes the weights identically") {
  Rng rng(33);
  ParamStore store;
  FusionParams p = FusionParams::init(store, "fuse", 3, rng);
  std::vector<double> dt(4 * 3), da(4 * 3), dv(4 * 3);
  for (double& v : dt) v = rng.uniform(-1.0, 1.0);
  for (double& v : da) v = rng.uniform(-1.0, 1.0);
  for (double& v : dv) v = rng.uniform(-1.0, 1.0);
  Tensor H_t = Tensor::from_data(dt, {4, 3});
  Tensor H_a = Tensor::from_data(da, {4, 3});
  Tensor H_v = Tensor::from_data(dv, {4, 3});
  auto [xt, xa, xv] = pool_modalities(H_t, H_a, H_v);
  auto w = modal_attention_weights(H_t, H_a, H_v, xt, xa, xv, p);

  // swap audio and video together with their parameters
  FusionParams q = p;
  q.W_A = p.W_V;
  q.W_V = p.W_A;
  q.lambda_a = p.lambda_v;
  q.lambda_v = p.lambda_a;
  q.b_a = p.b_v;
  q.b_v = p.b_a;
  auto w2 = modal_attention_weights(H_t, H_v, H_a, xt, xv, xa, q);
  CHECK(w2[0].value() == doctest::Approx(w[0].value()).epsilon(1e-12));
  CHECK(w2[1].value() == doctest::Approx(w[2].value()).epsilon(1e-12));
  CHECK(w2[2].value() == doctest::Approx(w[1].value()).epsilon(1e-12));
}

TEST_CASE("gradients flow through the whole fusion stack") {
  Rng rng(41);
  ParamStore store;
  FusionParams p = FusionParams::init(store, "fuse", 3, rng);
  std::vector<double> dt(3 * 3), da(3 * 3), dv(3 * 3);
  for (double& v : dt) v = rng.uniform(-1.0, 1.0);
  for (double& v : da) v = rng.uniform(-1.0, 1.0);
  for (double& v : dv) v = rng.uniform(-1.0, 1.0);
  Tensor psi_t = Tensor::from_data(dt, {3, 3}, true);
  Tensor psi_a = Tensor::from_data(da, {3, 3});
  Tensor psi_v = Tensor::from_data(dv, {3, 3});

  auto loss = [&]() {
    Tensor H_t = normalize_hidden(psi_t, 3);
    Tensor H_a = normalize_hidden(psi_a, 3);
    Tensor H_v = normalize_hidden(psi_v, 3);
    auto fused = fuse_utterances(H_t, H_a, H_v, p, 0);
    Tensor acc = Tensor::zeros({3});
    for (const Tensor& f : fused) acc = add(acc, f);
    return sum_all(sigmoid(acc));
  };
  for (const auto& [name, t] : store.items()) {
    double err = finite_diff_check_inplace(loss, t, 1e-3);
    INFO("param ", name);
    CHECK(err < 1e-4);
  }
  double err_in = finite_diff_check_inplace(loss, psi_t, 1e-3);
  CHECK(err_in < 1e-4);
}
