#pragma once

#include <string>
#include <vector>

#include "dergcn/params.hpp"
#include "dergcn/tensor.hpp"

namespace dergcn {

// Gate weights act on the concatenation [h_prev, x]; the candidate state
// additionally sees the reset-gated h_prev in place of h_prev.
struct GruParams {
  Tensor W_z, W_r, W_h;  // (hidden, hidden + input)
  Tensor b_z, b_r, b_h;  // (hidden,)

  std::size_t hidden_dim() const { return W_z.shape()[0]; }
  std::size_t input_dim() const { return W_z.shape()[1] - W_z.shape()[0]; }

  static GruParams zeros(std::size_t input_dim, std::size_t hidden_dim);
  static GruParams init(ParamStore& store, const std::string& prefix,
                        std::size_t input_dim, std::size_t hidden_dim,
                        Rng& rng);
};

struct BiGruParams {
  GruParams fwd;
  GruParams bwd;

  std::size_t hidden_dim() const { return fwd.hidden_dim(); }
  static BiGruParams init(ParamStore& store, const std::string& prefix,
                          std::size_t input_dim, std::size_t hidden_dim,
                          Rng& rng);
};

// z = sig(W_z.[h,x]+b_z); r = sig(W_r.[h,x]+b_r);
// hcand = tanh(W_h.[r*h, x]+b_h); h' = (1-z)*h + z*hcand
Tensor gru_cell(const Tensor& x_t, const Tensor& h_prev, const GruParams& p);

// Row t is [h_fwd_t : h_bwd_t]; both directions start from zero state.
// Output shape (T, 2*hidden).
Tensor bigru_encode(const std::vector<Tensor>& seq, const BiGruParams& p);

// Unidirectional variant used by the uni-gru ablation; output (T, hidden).
Tensor gru_encode(const std::vector<Tensor>& seq, const GruParams& p);

}  // namespace dergcn
