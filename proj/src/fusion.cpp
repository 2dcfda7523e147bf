#include "dergcn/fusion.hpp"

#include <cmath>

#include "dergcn/errors.hpp"

namespace dergcn {

FusionParams FusionParams::init(ParamStore& store, const std::string& prefix,
                                std::size_t dim, Rng& rng) {
  FusionParams p;
  p.W_T = store.create(prefix + ".W_T", {dim}, dim, rng);
  p.W_A = store.create(prefix + ".W_A", {dim}, dim, rng);
  p.W_V = store.create(prefix + ".W_V", {dim}, dim, rng);
  p.lambda_t = store.create(prefix + ".lambda_t", {1}, 1, rng);
  p.lambda_a = store.create(prefix + ".lambda_a", {1}, 1, rng);
  p.lambda_v = store.create(prefix + ".lambda_v", {1}, 1, rng);
  p.b_t = store.create_zeros(prefix + ".b_t", {dim});
  p.b_a = store.create_zeros(prefix + ".b_a", {dim});
  p.b_v = store.create_zeros(prefix + ".b_v", {dim});
  return p;
}

Tensor normalize_hidden(const Tensor& psi, std::size_t d_modality) {
  if (psi.rank() != 2) throw ShapeMismatch("normalize_hidden: matrix expected");
  if (d_modality == 0) throw ShapeMismatch("normalize_hidden: d_modality > 0");
  double eps = 1.0 / std::sqrt(static_cast<double>(d_modality));
  return softmax_axis(scalar_mul(clamp(psi, -50.0, 50.0), eps), 0);
}

std::array<Tensor, 3> pool_modalities(const Tensor& H_t, const Tensor& H_a,
                                      const Tensor& H_v) {
  for (const Tensor* h : {&H_t, &H_a, &H_v}) {
    if (h->rank() != 2) throw EmptySequence("pool_modalities: matrix expected");
  }
  return {mean_axis(H_t, 0), mean_axis(H_a, 0), mean_axis(H_v, 0)};
}

namespace {

Tensor raw_score(const Tensor& W, const Tensor& lam_m1, const Tensor& pool_m1,
                 const Tensor& lam_m2, const Tensor& pool_m2,
                 const Tensor& lam_own, const Tensor& xi_own, const Tensor& b) {
  Tensor mix = add(add(smul(lam_m1, pool_m1), smul(lam_m2, pool_m2)),
                   add(smul(lam_own, xi_own), b));
  return dot(W, tanh(mix));
}

}  // namespace

std::array<Tensor, 3> modal_attention_weights(
    const Tensor& H_t, const Tensor& H_a, const Tensor& H_v,
    const Tensor& xi_t, const Tensor& xi_a, const Tensor& xi_v,
    const FusionParams& p, bool use_softmax) {
  auto [pt, pa, pv] = pool_modalities(H_t, H_a, H_v);
  Tensor w_t = raw_score(p.W_T, p.lambda_v, pv, p.lambda_a, pa, p.lambda_t,
                         xi_t, p.b_t);
  Tensor w_a = raw_score(p.W_A, p.lambda_t, pt, p.lambda_v, pv, p.lambda_a,
                         xi_a, p.b_a);
  Tensor w_v = raw_score(p.W_V, p.lambda_t, pt, p.lambda_a, pa, p.lambda_v,
                         xi_v, p.b_v);
  if (use_softmax) {
    Tensor sm = softmax_axis(concat({w_t, w_a, w_v}), 0);
    return {at(sm, 0), at(sm, 1), at(sm, 2)};
  }
  Tensor total = add(add(w_t, w_a), w_v);
  if (std::abs(total.value()) < 1e-8) {
    throw DegenerateNormalizer("modal attention weights sum to ~0");
  }
  std::array<Tensor, 3> out = {sdiv(w_t, total), sdiv(w_a, total),
                               sdiv(w_v, total)};
  for (const Tensor& w : out) {
    if (!std::isfinite(w.value())) {
      throw DegenerateNormalizer("non-finite modal attention weight");
    }
  }
  return out;
}

Tensor fuse_modalities(const Tensor& xi_t, const Tensor& xi_a,
                       const Tensor& xi_v, const std::array<Tensor, 3>& w) {
  if (xi_t.shape() != xi_a.shape() || xi_t.shape() != xi_v.shape()) {
    throw ShapeMismatch("fuse_modalities: modality dims differ");
  }
  return add(add(smul(w[0], xi_t), smul(w[1], xi_a)), smul(w[2], xi_v));
}

std::vector<Tensor> fuse_utterances(const Tensor& H_t, const Tensor& H_a,
                                    const Tensor& H_v, const FusionParams& p,
                                    std::size_t window, bool use_softmax) {
  if (H_t.rank() != 2 || H_t.shape() != H_a.shape() ||
      H_t.shape() != H_v.shape()) {
    throw ShapeMismatch("fuse_utterances: modality matrices must conform");
  }
  std::size_t T = H_t.shape()[0];

  auto window_rows = [&](const Tensor& H, std::size_t i) {
    if (window == 0) return H;
    std::size_t half = (window - 1) / 2;
    std::size_t lo = i > half ? i - half : 0;
    std::size_t hi = std::min(T - 1, i + half);
    if (lo == 0 && hi == T - 1) return H;
    std::vector<Tensor> rows;
    for (std::size_t r = lo; r <= hi; ++r) rows.push_back(row(H, r));
    return stack_rows(rows);
  };

  std::vector<Tensor> fused;
  fused.reserve(T);
  for (std::size_t i = 0; i < T; ++i) {
    Tensor wt = window_rows(H_t, i);
    Tensor wa = window_rows(H_a, i);
    Tensor wv = window_rows(H_v, i);
    auto [xt, xa, xv] = pool_modalities(wt, wa, wv);
    auto w = modal_attention_weights(wt, wa, wv, xt, xa, xv, p, use_softmax);
    fused.push_back(fuse_modalities(xt, xa, xv, w));
  }
  return fused;
}

}  // namespace dergcn
