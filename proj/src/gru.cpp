#include "dergcn/gru.hpp"

#include "dergcn/errors.hpp"

namespace dergcn {

GruParams GruParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  GruParams p;
  p.W_z = Tensor::zeros({hidden_dim, hidden_dim + input_dim}, true);
  p.W_r = Tensor::zeros({hidden_dim, hidden_dim + input_dim}, true);
  p.W_h = Tensor::zeros({hidden_dim, hidden_dim + input_dim}, true);
  p.b_z = Tensor::zeros({hidden_dim}, true);
  p.b_r = Tensor::zeros({hidden_dim}, true);
  p.b_h = Tensor::zeros({hidden_dim}, true);
  return p;
}

GruParams GruParams::init(ParamStore& store, const std::string& prefix,
                          std::size_t input_dim, std::size_t hidden_dim,
                          Rng& rng) {
  GruParams p;
  std::size_t fan = hidden_dim + input_dim;
  p.W_z = store.create(prefix + ".W_z", {hidden_dim, fan}, fan, rng);
  p.W_r = store.create(prefix + ".W_r", {hidden_dim, fan}, fan, rng);
  p.W_h = store.create(prefix + ".W_h", {hidden_dim, fan}, fan, rng);
  p.b_z = store.create_zeros(prefix + ".b_z", {hidden_dim});
  p.b_r = store.create_zeros(prefix + ".b_r", {hidden_dim});
  p.b_h = store.create_zeros(prefix + ".b_h", {hidden_dim});
  return p;
}

BiGruParams BiGruParams::init(ParamStore& store, const std::string& prefix,
                              std::size_t input_dim, std::size_t hidden_dim,
                              Rng& rng) {
  BiGruParams p;
  p.fwd = GruParams::init(store, prefix + ".fwd", input_dim, hidden_dim, rng);
  p.bwd = GruParams::init(store, prefix + ".bwd", input_dim, hidden_dim, rng);
  return p;
}

Tensor gru_cell(const Tensor& x_t, const Tensor& h_prev, const GruParams& p) {
  if (x_t.rank() != 1 || h_prev.rank() != 1) {
    throw ShapeMismatch("gru_cell: inputs must be vectors");
  }
  if (h_prev.numel() != p.hidden_dim() || x_t.numel() != p.input_dim()) {
    throw ShapeMismatch("gru_cell: dims do not match params");
  }
  Tensor hx = concat({h_prev, x_t});
  Tensor z = sigmoid(add(matvec(p.W_z, hx), p.b_z));
  Tensor r = sigmoid(add(matvec(p.W_r, hx), p.b_r));
  Tensor gated = concat({hadamard(r, h_prev), x_t});
  Tensor h_cand = tanh(add(matvec(p.W_h, gated), p.b_h));
  Tensor one_minus_z = add_scalar(scalar_mul(z, -1.0), 1.0);
  return add(hadamard(one_minus_z, h_prev), hadamard(z, h_cand));
}

Tensor bigru_encode(const std::vector<Tensor>& seq, const BiGruParams& p) {
  if (seq.empty()) throw EmptySequence("bigru_encode: empty sequence");
  std::size_t T = seq.size();
  std::size_t h = p.hidden_dim();

  std::vector<Tensor> fwd(T), bwd(T);
  Tensor state = Tensor::zeros({h});
  for (std::size_t t = 0; t < T; ++t) {
    state = gru_cell(seq[t], state, p.fwd);
    fwd[t] = state;
  }
  state = Tensor::zeros({h});
  for (std::size_t t = T; t-- > 0;) {
    state = gru_cell(seq[t], state, p.bwd);
    bwd[t] = state;
  }

  std::vector<Tensor> rows(T);
  for (std::size_t t = 0; t < T; ++t) rows[t] = concat({fwd[t], bwd[t]});
  return stack_rows(rows);
}

Tensor gru_encode(const std::vector<Tensor>& seq, const GruParams& p) {
  if (seq.empty()) throw EmptySequence("gru_encode: empty sequence");
  std::vector<Tensor> rows(seq.size());
  Tensor state = Tensor::zeros({p.hidden_dim()});
  for (std::size_t t = 0; t < seq.size(); ++t) {
    state = gru_cell(seq[t], state, p);
    rows[t] = state;
  }
  return stack_rows(rows);
}

}  // namespace dergcn
