#pragma once

#include <cmath>
#include <vector>

#include "dergcn/params.hpp"

namespace dergcn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 0.0;  // decoupled-from-nothing: plain L2 added to the gradient
};

class Adam {
 public:
  Adam(const ParamStore& store, AdamConfig cfg) : cfg_(cfg) {
    for (const auto& [name, t] : store.items()) {
      slots_.push_back({t, std::vector<double>(t.numel(), 0.0),
                        std::vector<double>(t.numel(), 0.0)});
    }
  }

  void step() {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (Slot& s : slots_) {
      std::vector<double>& w = s.param.mutable_data();
      const std::vector<double>* g = s.param.has_grad() ? &s.param.grad()
                                                        : nullptr;
      for (std::size_t i = 0; i < w.size(); ++i) {
        double gi = (g ? (*g)[i] : 0.0) + cfg_.l2 * w[i];
        s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * gi;
        s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * gi * gi;
        w[i] -= cfg_.lr * (s.m[i] / bc1) / (std::sqrt(s.v[i] / bc2) + cfg_.eps);
      }
    }
  }

  void zero_grads() {
    for (Slot& s : slots_) s.param.zero_grad();
  }

 private:
  struct Slot {
    Tensor param;
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  AdamConfig cfg_;
  long t_ = 0;
};

}  // namespace dergcn
