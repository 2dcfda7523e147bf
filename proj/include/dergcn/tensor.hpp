#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dergcn/errors.hpp"

namespace dergcn {

class Tensor;

namespace detail {

// One node of the autodiff tape. Nodes form a DAG through `inputs`;
// `backward_fn` pushes the node's adjoint into the adjoint buffers of its
// inputs (one span per input, empty span when that input needs no gradient).
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily, same length as data
  bool requires_grad = false;
  bool is_leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode>> inputs;
  std::function<void(const std::vector<double>&,
                     const std::vector<std::span<double>>&)>
      backward_fn;

  std::size_t numel() const { return data.size(); }
};

}  // namespace detail

// Dense row-major tensor of 64-bit floats with an optional gradient slot.
// Copying a Tensor copies the handle, not the buffer; op outputs are fresh
// nodes and inputs are never mutated.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from_data(std::vector<double> data,
                          std::vector<std::size_t> shape,
                          bool requires_grad = false);
  static Tensor zeros(std::vector<std::size_t> shape,
                      bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double value,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->numel(); }
  std::size_t rank() const { return node_->shape.size(); }
  bool is_scalar() const { return numel() == 1; }

  const std::vector<double>& data() const { return node_->data; }
  double data_at(std::size_t i) const { return node_->data[i]; }
  // scalar value; throws NotScalar otherwise
  double value() const;

  // In-place access to a leaf's buffer (used by optimizers and probes).
  // Throws on op outputs: tape replay assumes recorded activations are final.
  std::vector<double>& mutable_data();

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf; }
  void set_requires_grad(bool rg);

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const;
  void zero_grad();

  std::shared_ptr<detail::TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::TensorNode> n)
      : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// ---- elementwise / arithmetic ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor scalar_mul(const Tensor& a, double c);
// scalar tensor s (numel 1) broadcast-multiplied / divided over a
Tensor smul(const Tensor& s, const Tensor& a);
Tensor sdiv(const Tensor& a, const Tensor& s);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);   // (m,k)x(k,n)
Tensor matvec(const Tensor& a, const Tensor& x);   // (m,n)x(n,) -> (m,)
Tensor dot(const Tensor& a, const Tensor& b);      // vectors -> scalar
Tensor transpose(const Tensor& a);
Tensor conv1d(const Tensor& input, const Tensor& kernel);  // see .cpp

// ---- structure ----
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis = 0);
Tensor stack_rows(const std::vector<Tensor>& rows);
Tensor row(const Tensor& a, std::size_t i);
Tensor at(const Tensor& v, std::size_t i);

// ---- nonlinearities ----
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);  // max-with-zero
Tensor leaky_relu(const Tensor& x, double slope);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

// ---- reductions / normalizations ----
Tensor softmax_axis(const Tensor& x, std::size_t axis);
Tensor mean_axis(const Tensor& x, std::size_t axis);
Tensor sum_all(const Tensor& x);
Tensor vsum(const Tensor& x);
Tensor vmean(const Tensor& x);
Tensor vmax(const Tensor& x);

// ---- metric primitives ----
Tensor cosine_similarity(const Tensor& a, const Tensor& b);
Tensor euclidean_distance(const Tensor& a, const Tensor& b);
Tensor frobenius_norm_sq(const Tensor& a);

// Name-dispatched entry point over the op set above. `scalar_attr` feeds
// ops taking a constant (scalar-mul, clamp lo, leaky slope), `axis_attr`
// feeds the axis-parameterized ops.
Tensor forward_op(const std::string& name, const std::vector<Tensor>& inputs,
                  double scalar_attr = 0.0, std::size_t axis_attr = 0);

// Reverse-mode sweep from a scalar root. Adjoints are computed in scratch
// buffers and then added into the persistent grad of every requires_grad
// node, so repeated calls accumulate additively.
void backward(const Tensor& root);

// Max relative error between the analytic gradient of f at x and central
// finite differences: max_i |analytic_i - numeric_i| /
// max(|analytic_i|, |numeric_i|, 1e-8).
double finite_diff_check(const std::function<Tensor(const Tensor&)>& f,
                         const Tensor& x, double eps);

// Same check for a parameter embedded in a larger computation: f() must
// re-read `leaf` each call; its buffer is perturbed in place.
double finite_diff_check_inplace(const std::function<Tensor()>& f,
                                 Tensor leaf, double eps);

}  // namespace dergcn
