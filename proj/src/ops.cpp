#include <algorithm>
#include <cmath>
#include <numeric>

#include "dergcn/tensor.hpp"

namespace dergcn {

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;
using BackwardFn = std::function<void(const std::vector<double>&,
                                      const std::vector<std::span<double>>&)>;

Tensor make_op(const char* op, std::vector<std::size_t> shape,
               std::vector<double> data, const std::vector<Tensor>& inputs,
               BackwardFn fn) {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw NonFinite(std::string(op) + " produced a non-finite value");
    }
  }
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->op = op;
  n->is_leaf = false;
  bool rg = false;
  for (const Tensor& t : inputs) rg = rg || t.requires_grad();
  n->requires_grad = rg;
  if (rg) {
    for (const Tensor& t : inputs) n->inputs.push_back(t.node());
    n->backward_fn = std::move(fn);
  }
  return Tensor(std::move(n));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(op) + ": shapes do not conform");
  }
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw ShapeMismatch(std::string(op) + ": wrong rank");
  }
}

Tensor elementwise_unary(const char* op, const Tensor& x,
                         const std::function<double(double)>& f,
                         const std::function<double(double, double)>& df_dx) {
  // df_dx receives (x_i, y_i) so either form of the local derivative works
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x.data()[i]);
  std::vector<double> xv = x.data();
  std::vector<double> yv = out;
  return make_op(op, x.shape(), std::move(out), {x},
                 [xv = std::move(xv), yv = std::move(yv), df_dx](
                     const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   if (in[0].empty()) return;
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     in[0][i] += g[i] * df_dx(xv[i], yv[i]);
                   }
                 });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.data()[i] + b.data()[i];
  return make_op("add", a.shape(), std::move(out), {a, b},
                 [](const std::vector<double>& g,
                    const std::vector<std::span<double>>& in) {
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     if (!in[0].empty()) in[0][i] += g[i];
                     if (!in[1].empty()) in[1][i] += g[i];
                   }
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.data()[i] - b.data()[i];
  return make_op("sub", a.shape(), std::move(out), {a, b},
                 [](const std::vector<double>& g,
                    const std::vector<std::span<double>>& in) {
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     if (!in[0].empty()) in[0][i] += g[i];
                     if (!in[1].empty()) in[1][i] -= g[i];
                   }
                 });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape("hadamard", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.data()[i] * b.data()[i];
  std::vector<double> av = a.data(), bv = b.data();
  return make_op("hadamard", a.shape(), std::move(out), {a, b},
                 [av = std::move(av), bv = std::move(bv)](
                     const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     if (!in[0].empty()) in[0][i] += g[i] * bv[i];
                     if (!in[1].empty()) in[1][i] += g[i] * av[i];
                   }
                 });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape("div", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.data()[i] / b.data()[i];
  std::vector<double> av = a.data(), bv = b.data();
  return make_op("div", a.shape(), std::move(out), {a, b},
                 [av = std::move(av), bv = std::move(bv)](
                     const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     if (!in[0].empty()) in[0][i] += g[i] / bv[i];
                     if (!in[1].empty())
                       in[1][i] -= g[i] * av[i] / (bv[i] * bv[i]);
                   }
                 });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + c;
  return make_op("add-scalar", a.shape(), std::move(out), {a},
                 [](const std::vector<double>& g,
                    const std::vector<std::span<double>>& in) {
                   if (in[0].empty()) return;
                   for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
                 });
}

Tensor scalar_mul(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
  return make_op("scalar-mul", a.shape(), std::move(out), {a},
                 [c](const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   if (in[0].empty()) return;
                   for (std::size_t i = 0; i < g.size(); ++i)
                     in[0][i] += g[i] * c;
                 });
}

Tensor smul(const Tensor& s, const Tensor& a) {
  if (!s.is_scalar()) throw ShapeMismatch("smul: first operand must be scalar");
  double sv = s.data()[0];
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sv * a.data()[i];
  std::vector<double> av = a.data();
  return make_op("smul", a.shape(), std::move(out), {s, a},
                 [sv, av = std::move(av)](
                     const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     if (!in[0].empty()) in[0][0] += g[i] * av[i];
                     if (!in[1].empty()) in[1][i] += g[i] * sv;
                   }
                 });
}

Tensor sdiv(const Tensor& a, const Tensor& s) {
  if (!s.is_scalar()) throw ShapeMismatch("sdiv: divisor must be scalar");
  double sv = s.data()[0];
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] / sv;
  std::vector<double> av = a.data();
  return make_op("sdiv", a.shape(), std::move(out), {a, s},
                 [sv, av = std::move(av)](
                     const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     if (!in[0].empty()) in[0][i] += g[i] / sv;
                     if (!in[1].empty())
                       in[1][0] -= g[i] * av[i] / (sv * sv);
                   }
                 });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  std::size_t m = a.shape()[0], k = a.shape()[1];
  if (b.shape()[0] != k) throw ShapeMismatch("matmul: inner dims differ");
  std::size_t n = b.shape()[1];
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double av = a.data()[i * k + p];
      for (std::size_t j = 0; j < n; ++j)
        out[i * n + j] += av * b.data()[p * n + j];
    }
  std::vector<double> av = a.data(), bv = b.data();
  return make_op(
      "matmul", {m, n}, std::move(out), {a, b},
      [m, k, n, av = std::move(av), bv = std::move(bv)](
          const std::vector<double>& g,
          const std::vector<std::span<double>>& in) {
        if (!in[0].empty()) {  // dA = g . B^T
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j)
                acc += g[i * n + j] * bv[p * n + j];
              in[0][i * k + p] += acc;
            }
        }
        if (!in[1].empty()) {  // dB = A^T . g
          for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < n; ++j) {
              double acc = 0.0;
              for (std::size_t i = 0; i < m; ++i)
                acc += av[i * k + p] * g[i * n + j];
              in[1][p * n + j] += acc;
            }
        }
      });
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  require_rank("matvec", a, 2);
  require_rank("matvec", x, 1);
  std::size_t m = a.shape()[0], n = a.shape()[1];
  if (x.shape()[0] != n) throw ShapeMismatch("matvec: dims differ");
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += a.data()[i * n + j] * x.data()[j];
    out[i] = acc;
  }
  std::vector<double> av = a.data(), xv = x.data();
  return make_op("matvec", {m}, std::move(out), {a, x},
                 [m, n, av = std::move(av), xv = std::move(xv)](
                     const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   if (!in[0].empty()) {
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t j = 0; j < n; ++j)
                         in[0][i * n + j] += g[i] * xv[j];
                   }
                   if (!in[1].empty()) {
                     for (std::size_t j = 0; j < n; ++j) {
                       double acc = 0.0;
                       for (std::size_t i = 0; i < m; ++i)
                         acc += av[i * n + j] * g[i];
                       in[1][j] += acc;
                     }
                   }
                 });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_rank("dot", a, 1);
  require_same_shape("dot", a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) acc += a.data()[i] * b.data()[i];
  std::vector<double> av = a.data(), bv = b.data();
  return make_op("dot", {1}, {acc}, {a, b},
                 [av = std::move(av), bv = std::move(bv)](
                     const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   for (std::size_t i = 0; i < av.size(); ++i) {
                     if (!in[0].empty()) in[0][i] += g[0] * bv[i];
                     if (!in[1].empty()) in[1][i] += g[0] * av[i];
                   }
                 });
}

Tensor transpose(const Tensor& a) {
  require_rank("transpose", a, 2);
  std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.data()[i * n + j];
  return make_op("transpose", {n, m}, std::move(out), {a},
                 [m, n](const std::vector<double>& g,
                        const std::vector<std::span<double>>& in) {
                   if (in[0].empty()) return;
                   for (std::size_t i = 0; i < m; ++i)
                     for (std::size_t j = 0; j < n; ++j)
                       in[0][i * n + j] += g[j * m + i];
                 });
}

// input (C_in, L), kernel (C_out, C_in, k); zero padding keeps length L,
// stride 1. Width-1 kernels degenerate to a per-position channel mix.
Tensor conv1d(const Tensor& input, const Tensor& kernel) {
  require_rank("conv1d", input, 2);
  if (kernel.rank() != 3) throw ShapeMismatch("conv1d: kernel must be rank 3");
  std::size_t cin = input.shape()[0], len = input.shape()[1];
  std::size_t cout = kernel.shape()[0], kcin = kernel.shape()[1],
              kw = kernel.shape()[2];
  if (kcin != cin) throw ShapeMismatch("conv1d: channel dims differ");
  std::size_t pad = (kw - 1) / 2;
  std::vector<double> out(cout * len, 0.0);
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t p = 0; p < len; ++p) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t j = 0; j < kw; ++j) {
          std::ptrdiff_t q = static_cast<std::ptrdiff_t>(p + j) -
                             static_cast<std::ptrdiff_t>(pad);
          if (q < 0 || q >= static_cast<std::ptrdiff_t>(len)) continue;
          acc += kernel.data()[(o * cin + c) * kw + j] *
                 input.data()[c * len + static_cast<std::size_t>(q)];
        }
      out[o * len + p] = acc;
    }
  std::vector<double> iv = input.data(), kv = kernel.data();
  return make_op(
      "conv1d", {cout, len}, std::move(out), {input, kernel},
      [cin, len, cout, kw, pad, iv = std::move(iv), kv = std::move(kv)](
          const std::vector<double>& g,
          const std::vector<std::span<double>>& in) {
        for (std::size_t o = 0; o < cout; ++o)
          for (std::size_t p = 0; p < len; ++p) {
            double gv = g[o * len + p];
            if (gv == 0.0) continue;
            for (std::size_t c = 0; c < cin; ++c)
              for (std::size_t j = 0; j < kw; ++j) {
                std::ptrdiff_t q = static_cast<std::ptrdiff_t>(p + j) -
                                   static_cast<std::ptrdiff_t>(pad);
                if (q < 0 || q >= static_cast<std::ptrdiff_t>(len)) continue;
                std::size_t qi = static_cast<std::size_t>(q);
                if (!in[0].empty())
                  in[0][c * len + qi] += gv * kv[(o * cin + c) * kw + j];
                if (!in[1].empty())
                  in[1][(o * cin + c) * kw + j] += gv * iv[c * len + qi];
              }
          }
      });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeMismatch("concat: no inputs");
  std::size_t rank = parts[0].rank();
  if (rank == 1) {
    if (axis != 0) throw ShapeMismatch("concat: vector axis must be 0");
    std::size_t total = 0;
    for (const Tensor& p : parts) {
      require_rank("concat", p, 1);
      total += p.numel();
    }
    std::vector<double> out;
    out.reserve(total);
    std::vector<std::size_t> sizes;
    for (const Tensor& p : parts) {
      out.insert(out.end(), p.data().begin(), p.data().end());
      sizes.push_back(p.numel());
    }
    return make_op("concat", {total}, std::move(out), parts,
                   [sizes](const std::vector<double>& g,
                           const std::vector<std::span<double>>& in) {
                     std::size_t off = 0;
                     for (std::size_t p = 0; p < sizes.size(); ++p) {
                       if (!in[p].empty())
                         for (std::size_t i = 0; i < sizes[p]; ++i)
                           in[p][i] += g[off + i];
                       off += sizes[p];
                     }
                   });
  }
  if (rank != 2 || axis > 1) throw ShapeMismatch("concat: unsupported layout");
  if (axis == 0) {
    std::size_t cols = parts[0].shape()[1];
    std::size_t rows = 0;
    for (const Tensor& p : parts) {
      require_rank("concat", p, 2);
      if (p.shape()[1] != cols) throw ShapeMismatch("concat: column counts differ");
      rows += p.shape()[0];
    }
    std::vector<double> out;
    out.reserve(rows * cols);
    std::vector<std::size_t> sizes;
    for (const Tensor& p : parts) {
      out.insert(out.end(), p.data().begin(), p.data().end());
      sizes.push_back(p.numel());
    }
    return make_op("concat", {rows, cols}, std::move(out), parts,
                   [sizes](const std::vector<double>& g,
                           const std::vector<std::span<double>>& in) {
                     std::size_t off = 0;
                     for (std::size_t p = 0; p < sizes.size(); ++p) {
                       if (!in[p].empty())
                         for (std::size_t i = 0; i < sizes[p]; ++i)
                           in[p][i] += g[off + i];
                       off += sizes[p];
                     }
                   });
  }
  // axis == 1: horizontal
  std::size_t rows = parts[0].shape()[0];
  std::size_t cols = 0;
  std::vector<std::size_t> widths;
  for (const Tensor& p : parts) {
    require_rank("concat", p, 2);
    if (p.shape()[0] != rows) throw ShapeMismatch("concat: row counts differ");
    widths.push_back(p.shape()[1]);
    cols += p.shape()[1];
  }
  std::vector<double> out(rows * cols);
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < widths[p]; ++j)
        out[i * cols + off + j] = parts[p].data()[i * widths[p] + j];
    off += widths[p];
  }
  return make_op("concat", {rows, cols}, std::move(out), parts,
                 [rows, cols, widths](const std::vector<double>& g,
                                      const std::vector<std::span<double>>& in) {
                   std::size_t off = 0;
                   for (std::size_t p = 0; p < widths.size(); ++p) {
                     if (!in[p].empty())
                       for (std::size_t i = 0; i < rows; ++i)
                         for (std::size_t j = 0; j < widths[p]; ++j)
                           in[p][i * widths[p] + j] += g[i * cols + off + j];
                     off += widths[p];
                   }
                 });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ShapeMismatch("stack_rows: no inputs");
  std::size_t d = rows[0].numel();
  for (const Tensor& r : rows) {
    require_rank("stack_rows", r, 1);
    if (r.numel() != d) throw ShapeMismatch("stack_rows: row dims differ");
  }
  std::vector<double> out;
  out.reserve(rows.size() * d);
  for (const Tensor& r : rows)
    out.insert(out.end(), r.data().begin(), r.data().end());
  return make_op("stack-rows", {rows.size(), d}, std::move(out), rows,
                 [d](const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   for (std::size_t p = 0; p < in.size(); ++p) {
                     if (in[p].empty()) continue;
                     for (std::size_t i = 0; i < d; ++i)
                       in[p][i] += g[p * d + i];
                   }
                 });
}

Tensor row(const Tensor& a, std::size_t i) {
  require_rank("row", a, 2);
  std::size_t rows = a.shape()[0], cols = a.shape()[1];
  if (i >= rows) throw ShapeMismatch("row: index out of range");
  std::vector<double> out(a.data().begin() + i * cols,
                          a.data().begin() + (i + 1) * cols);
  return make_op("row", {cols}, std::move(out), {a},
                 [i, cols](const std::vector<double>& g,
                           const std::vector<std::span<double>>& in) {
                   if (in[0].empty()) return;
                   for (std::size_t j = 0; j < cols; ++j)
                     in[0][i * cols + j] += g[j];
                 });
}

Tensor at(const Tensor& v, std::size_t i) {
  require_rank("at", v, 1);
  if (i >= v.numel()) throw ShapeMismatch("at: index out of range");
  return make_op("at", {1}, {v.data()[i]}, {v},
                 [i](const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   if (!in[0].empty()) in[0][i] += g[0];
                 });
}

Tensor sigmoid(const Tensor& x) {
  return elementwise_unary(
      "sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return elementwise_unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return elementwise_unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return elementwise_unary(
      "leaky-relu", x,
      [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor exp(const Tensor& x) {
  return elementwise_unary(
      "exp", x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return elementwise_unary(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw Error("clamp: lo > hi");
  return elementwise_unary(
      "clamp", x,
      [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Tensor softmax_axis(const Tensor& x, std::size_t axis) {
  if (x.rank() == 1) {
    if (axis != 0) throw ShapeMismatch("softmax: vector axis must be 0");
  } else if (x.rank() != 2 || axis > 1) {
    throw ShapeMismatch("softmax: unsupported layout");
  }
  std::size_t rows = x.rank() == 1 ? x.numel() : x.shape()[0];
  std::size_t cols = x.rank() == 1 ? 1 : x.shape()[1];
  std::size_t slice_axis = x.rank() == 1 ? 0 : axis;

  std::vector<double> out(x.numel());
  // normalize over `slice_axis`: axis 0 -> down each column, 1 -> along rows
  std::size_t nslices = slice_axis == 0 ? cols : rows;
  std::size_t slen = slice_axis == 0 ? rows : cols;
  auto idx = [cols, slice_axis](std::size_t s, std::size_t t) {
    return slice_axis == 0 ? t * cols + s : s * cols + t;
  };
  for (std::size_t s = 0; s < nslices; ++s) {
    double mx = x.data()[idx(s, 0)];
    for (std::size_t t = 1; t < slen; ++t)
      mx = std::max(mx, x.data()[idx(s, t)]);
    double denom = 0.0;
    for (std::size_t t = 0; t < slen; ++t)
      denom += std::exp(x.data()[idx(s, t)] - mx);
    for (std::size_t t = 0; t < slen; ++t)
      out[idx(s, t)] = std::exp(x.data()[idx(s, t)] - mx) / denom;
  }
  std::vector<double> yv = out;
  return make_op("softmax-over-axis", x.shape(), std::move(out), {x},
                 [nslices, slen, idx, yv = std::move(yv)](
                     const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   if (in[0].empty()) return;
                   for (std::size_t s = 0; s < nslices; ++s) {
                     double gy = 0.0;
                     for (std::size_t t = 0; t < slen; ++t)
                       gy += g[idx(s, t)] * yv[idx(s, t)];
                     for (std::size_t t = 0; t < slen; ++t)
                       in[0][idx(s, t)] +=
                           yv[idx(s, t)] * (g[idx(s, t)] - gy);
                   }
                 });
}

Tensor mean_axis(const Tensor& x, std::size_t axis) {
  require_rank("mean-over-axis", x, 2);
  if (axis > 1) throw ShapeMismatch("mean-over-axis: bad axis");
  std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (axis == 0) {
    std::vector<double> out(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out[j] += x.data()[i * cols + j];
    for (double& v : out) v /= static_cast<double>(rows);
    return make_op("mean-over-axis", {cols}, std::move(out), {x},
                   [rows, cols](const std::vector<double>& g,
                                const std::vector<std::span<double>>& in) {
                     if (in[0].empty()) return;
                     for (std::size_t i = 0; i < rows; ++i)
                       for (std::size_t j = 0; j < cols; ++j)
                         in[0][i * cols + j] += g[j] / static_cast<double>(rows);
                   });
  }
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[i] += x.data()[i * cols + j];
    out[i] /= static_cast<double>(cols);
  }
  return make_op("mean-over-axis", {rows}, std::move(out), {x},
                 [rows, cols](const std::vector<double>& g,
                              const std::vector<std::span<double>>& in) {
                   if (in[0].empty()) return;
                   for (std::size_t i = 0; i < rows; ++i)
                     for (std::size_t j = 0; j < cols; ++j)
                       in[0][i * cols + j] += g[i] / static_cast<double>(cols);
                 });
}

Tensor sum_all(const Tensor& x) {
  double acc = std::accumulate(x.data().begin(), x.data().end(), 0.0);
  return make_op("sum", {1}, {acc}, {x},
                 [](const std::vector<double>& g,
                    const std::vector<std::span<double>>& in) {
                   if (in[0].empty()) return;
                   for (std::size_t i = 0; i < in[0].size(); ++i)
                     in[0][i] += g[0];
                 });
}

Tensor vsum(const Tensor& x) {
  require_rank("vsum", x, 1);
  return sum_all(x);
}

Tensor vmean(const Tensor& x) {
  require_rank("vmean", x, 1);
  return scalar_mul(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor vmax(const Tensor& x) {
  require_rank("vmax", x, 1);
  std::size_t arg = 0;
  for (std::size_t i = 1; i < x.numel(); ++i)
    if (x.data()[i] > x.data()[arg]) arg = i;
  return make_op("vmax", {1}, {x.data()[arg]}, {x},
                 [arg](const std::vector<double>& g,
                       const std::vector<std::span<double>>& in) {
                   if (!in[0].empty()) in[0][arg] += g[0];
                 });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  require_rank("cosine-similarity", a, 1);
  require_same_shape("cosine-similarity", a, b);
  double na2 = 0.0, nb2 = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    na2 += a.data()[i] * a.data()[i];
    nb2 += b.data()[i] * b.data()[i];
    ab += a.data()[i] * b.data()[i];
  }
  if (na2 == 0.0 || nb2 == 0.0) {
    throw ZeroVector("cosine-similarity of a zero vector");
  }
  double na = std::sqrt(na2), nb = std::sqrt(nb2);
  double c = ab / (na * nb);
  std::vector<double> av = a.data(), bv = b.data();
  return make_op("cosine-similarity", {1}, {c}, {a, b},
                 [na, nb, c, av = std::move(av), bv = std::move(bv)](
                     const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   for (std::size_t i = 0; i < av.size(); ++i) {
                     if (!in[0].empty())
                       in[0][i] += g[0] * (bv[i] / (na * nb) -
                                           c * av[i] / (na * na));
                     if (!in[1].empty())
                       in[1][i] += g[0] * (av[i] / (na * nb) -
                                           c * bv[i] / (nb * nb));
                   }
                 });
}

Tensor euclidean_distance(const Tensor& a, const Tensor& b) {
  require_rank("euclidean-distance", a, 1);
  require_same_shape("euclidean-distance", a, b);
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    double diff = a.data()[i] - b.data()[i];
    d2 += diff * diff;
  }
  double d = std::sqrt(d2);
  std::vector<double> av = a.data(), bv = b.data();
  // subgradient 0 at coincident points
  return make_op("euclidean-distance", {1}, {d}, {a, b},
                 [d, av = std::move(av), bv = std::move(bv)](
                     const std::vector<double>& g,
                     const std::vector<std::span<double>>& in) {
                   if (d < 1e-12) return;
                   for (std::size_t i = 0; i < av.size(); ++i) {
                     double t = g[0] * (av[i] - bv[i]) / d;
                     if (!in[0].empty()) in[0][i] += t;
                     if (!in[1].empty()) in[1][i] -= t;
                   }
                 });
}

Tensor frobenius_norm_sq(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v * v;
  std::vector<double> av = a.data();
  return make_op("frobenius-norm-squared", {1}, {acc}, {a},
                 [av = std::move(av)](const std::vector<double>& g,
                                      const std::vector<std::span<double>>& in) {
                   if (in[0].empty()) return;
                   for (std::size_t i = 0; i < av.size(); ++i)
                     in[0][i] += 2.0 * g[0] * av[i];
                 });
}

Tensor forward_op(const std::string& name, const std::vector<Tensor>& inputs,
                  double scalar_attr, std::size_t axis_attr) {
  auto unary = [&]() -> const Tensor& {
    if (inputs.size() != 1) throw ShapeMismatch(name + ": expects 1 input");
    return inputs[0];
  };
  auto binary = [&](std::size_t k) {
    if (inputs.size() != k)
      throw ShapeMismatch(name + ": wrong input count");
  };
  if (name == "add") { binary(2); return add(inputs[0], inputs[1]); }
  if (name == "sub") { binary(2); return sub(inputs[0], inputs[1]); }
  if (name == "hadamard") { binary(2); return hadamard(inputs[0], inputs[1]); }
  if (name == "div") { binary(2); return div(inputs[0], inputs[1]); }
  if (name == "matmul") { binary(2); return matmul(inputs[0], inputs[1]); }
  if (name == "matvec") { binary(2); return matvec(inputs[0], inputs[1]); }
  if (name == "dot") { binary(2); return dot(inputs[0], inputs[1]); }
  if (name == "conv1d") { binary(2); return conv1d(inputs[0], inputs[1]); }
  if (name == "concat") return concat(inputs, axis_attr);
  if (name == "stack-rows") return stack_rows(inputs);
  if (name == "transpose") return transpose(unary());
  if (name == "sigmoid") return sigmoid(unary());
  if (name == "tanh") return tanh(unary());
  if (name == "relu" || name == "max-with-zero") return relu(unary());
  if (name == "leaky-relu") return leaky_relu(unary(), scalar_attr);
  if (name == "exp") return exp(unary());
  if (name == "log") return log(unary());
  if (name == "scalar-mul") return scalar_mul(unary(), scalar_attr);
  if (name == "add-scalar") return add_scalar(unary(), scalar_attr);
  if (name == "softmax-over-axis") return softmax_axis(unary(), axis_attr);
  if (name == "mean-over-axis") return mean_axis(unary(), axis_attr);
  if (name == "sum") return sum_all(unary());
  if (name == "vmax") return vmax(unary());
  if (name == "cosine-similarity") {
    binary(2);
    return cosine_similarity(inputs[0], inputs[1]);
  }
  if (name == "euclidean-distance") {
    binary(2);
    return euclidean_distance(inputs[0], inputs[1]);
  }
  if (name == "frobenius-norm-squared") return frobenius_norm_sq(unary());
  throw UnknownOp("unknown op kind: " + name);
}

}  // namespace dergcn
