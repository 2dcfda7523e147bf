#include "dergcn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace dergcn {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

}  // namespace

Tensor Tensor::from_data(std::vector<double> data,
                         std::vector<std::size_t> shape, bool requires_grad) {
  if (shape.empty()) throw ShapeMismatch("tensor shape must be nonempty");
  for (std::size_t e : shape) {
    if (e == 0) throw ShapeMismatch("tensor extents must be positive");
  }
  if (shape_numel(shape) != data.size()) {
    throw ShapeMismatch("data length does not match shape");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw NonFinite("tensor constructed with non-finite value");
  }
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value,
                    bool requires_grad) {
  std::vector<double> data(shape_numel(shape), value);
  return from_data(std::move(data), std::move(shape), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({value}, {1}, requires_grad);
}

double Tensor::value() const {
  if (!is_scalar()) throw NotScalar("value() on non-scalar tensor");
  return node_->data[0];
}

std::vector<double>& Tensor::mutable_data() {
  if (!node_->is_leaf) {
    throw Error("mutable_data() is restricted to leaf tensors");
  }
  return node_->data;
}

void Tensor::set_requires_grad(bool rg) {
  if (!node_->is_leaf) {
    throw Error("set_requires_grad() is restricted to leaf tensors");
  }
  node_->requires_grad = rg;
}

const std::vector<double>& Tensor::grad() const {
  if (node_->grad.empty()) throw Error("gradient not populated");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }
}

void backward(const Tensor& root) {
  if (!root.is_scalar()) throw NotScalar("backward root must be scalar");
  detail::TensorNode* rn = root.node().get();
  if (rn->is_leaf && !rn->requires_grad) {
    throw DetachedRoot("backward root is not on the tape");
  }

  // Iterative post-order DFS; `order` ends topologically sorted
  // (inputs before outputs), replayed in reverse for the sweep.
  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> seen;
  std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
  stack.emplace_back(rn, 0);
  seen.insert(rn);
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    bool descended = false;
    while (next_child < node->inputs.size()) {
      detail::TensorNode* child = node->inputs[next_child++].get();
      if (child->requires_grad && !seen.count(child)) {
        seen.insert(child);
        stack.emplace_back(child, 0);
        descended = true;
        break;
      }
    }
    if (!descended && (stack.back().second >= stack.back().first->inputs.size())) {
      order.push_back(stack.back().first);
      stack.pop_back();
    }
  }

  std::unordered_map<detail::TensorNode*, std::vector<double>> adjoint;
  adjoint[rn] = {1.0};

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* node = *it;
    auto found = adjoint.find(node);
    if (found == adjoint.end()) continue;  // no path from root
    const std::vector<double>& adj = found->second;
    if (node->backward_fn) {
      std::vector<std::span<double>> in_adjs;
      in_adjs.reserve(node->inputs.size());
      for (const auto& in : node->inputs) {
        if (in->requires_grad) {
          auto& buf = adjoint[in.get()];
          if (buf.empty()) buf.assign(in->numel(), 0.0);
          in_adjs.emplace_back(buf);
        } else {
          in_adjs.emplace_back();
        }
      }
      node->backward_fn(adj, in_adjs);
    }
  }

  for (detail::TensorNode* node : order) {
    if (!node->requires_grad) continue;
    auto found = adjoint.find(node);
    if (found == adjoint.end()) continue;
    for (double v : found->second) {
      if (!std::isfinite(v)) throw NonFinite("non-finite gradient");
    }
    if (node->grad.empty()) node->grad.assign(node->numel(), 0.0);
    for (std::size_t i = 0; i < node->numel(); ++i) {
      node->grad[i] += found->second[i];
    }
  }
}

double finite_diff_check(const std::function<Tensor(const Tensor&)>& f,
                         const Tensor& x, double eps) {
  if (eps <= 0.0) throw Error("finite_diff_check requires eps > 0");

  Tensor probe = Tensor::from_data(x.data(), x.shape(), true);
  Tensor y = f(probe);
  if (!y.is_scalar()) throw NotScalar("finite_diff_check: f must return a scalar");
  backward(y);
  std::vector<double> analytic = probe.grad();

  double max_err = 0.0;
  std::vector<double> vals = x.data();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    double keep = vals[i];
    vals[i] = keep + eps;
    double up = f(Tensor::from_data(vals, x.shape(), false)).value();
    vals[i] = keep - eps;
    double down = f(Tensor::from_data(vals, x.shape(), false)).value();
    vals[i] = keep;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NonFinite("non-finite value while probing");
    }
    double numeric = (up - down) / (2.0 * eps);
    double err = std::abs(analytic[i] - numeric) /
                 std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    max_err = std::max(max_err, err);
  }
  return max_err;
}

double finite_diff_check_inplace(const std::function<Tensor()>& f, Tensor leaf,
                                 double eps) {
  if (eps <= 0.0) throw Error("finite_diff_check requires eps > 0");
  std::vector<double> saved_grad = leaf.has_grad()
                                       ? leaf.grad()
                                       : std::vector<double>();
  leaf.zero_grad();
  Tensor y = f();
  if (!y.is_scalar()) throw NotScalar("finite_diff_check: f must return a scalar");
  backward(y);
  std::vector<double> analytic = leaf.grad();

  double max_err = 0.0;
  std::vector<double>& vals = leaf.mutable_data();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    double keep = vals[i];
    vals[i] = keep + eps;
    double up = f().value();
    vals[i] = keep - eps;
    double down = f().value();
    vals[i] = keep;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NonFinite("non-finite value while probing");
    }
    double numeric = (up - down) / (2.0 * eps);
    double err = std::abs(analytic[i] - numeric) /
                 std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    max_err = std::max(max_err, err);
  }

  leaf.zero_grad();
  if (!saved_grad.empty()) {
    auto node = leaf.node();
    node->grad = saved_grad;
  }
  return max_err;
}

}  // namespace dergcn
