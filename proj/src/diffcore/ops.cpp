#include "aol/ops.hpp"

#include <algorithm>
#include <cmath>

namespace aol {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_matrix(const Tensor& x, const char* op) {
  if (x.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + to_string(x.shape()));
  }
}

void accumulate(std::vector<double>* slot, std::span<const double> g) {
  if (!slot) return;
  for (std::size_t i = 0; i < g.size(); ++i) (*slot)[i] += g[i];
}

// out[r,c] += a[r,k] * b[k,c]
void gemm_nn(const double* a, const double* b, double* out, std::size_t r, std::size_t k,
             std::size_t c) {
  for (std::size_t i = 0; i < r; ++i) {
    double* out_row = out + i * c;
    const double* a_row = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a_row[p];
      if (av == 0.0) continue;
      const double* b_row = b + p * c;
      for (std::size_t j = 0; j < c; ++j) out_row[j] += av * b_row[j];
    }
  }
}

// out[r,k] += g[r,c] * b[k,c]^T
void gemm_nt(const double* g, const double* b, double* out, std::size_t r, std::size_t k,
             std::size_t c) {
  for (std::size_t i = 0; i < r; ++i) {
    const double* g_row = g + i * c;
    double* out_row = out + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* b_row = b + p * c;
      double acc = 0.0;
      for (std::size_t j = 0; j < c; ++j) acc += g_row[j] * b_row[j];
      out_row[p] += acc;
    }
  }
}

// out[k,c] += a[r,k]^T * g[r,c]
void gemm_tn(const double* a, const double* g, double* out, std::size_t r, std::size_t k,
             std::size_t c) {
  for (std::size_t i = 0; i < r; ++i) {
    const double* a_row = a + i * k;
    const double* g_row = g + i * c;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a_row[p];
      if (av == 0.0) continue;
      double* out_row = out + p * c;
      for (std::size_t j = 0; j < c; ++j) out_row[j] += av * g_row[j];
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  switch (op) {
    case ElementwiseOp::Add:
    case ElementwiseOp::Sub: {
      require_same_shape(a, b, op == ElementwiseOp::Add ? "add" : "sub");
      const double sign = op == ElementwiseOp::Add ? 1.0 : -1.0;
      auto av = a.data();
      auto bv = b.data();
      std::vector<double> out(av.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + sign * bv[i];
      return Tensor::from_op(a.shape(), std::move(out), {a, b},
                             [sign](std::span<const double> g, detail::GradSlots slots) {
                               accumulate(slots[0], g);
                               if (slots[1]) {
                                 for (std::size_t i = 0; i < g.size(); ++i) (*slots[1])[i] += sign * g[i];
                               }
                             });
    }
    case ElementwiseOp::Mul: {
      require_same_shape(a, b, "mul");
      auto av = a.data();
      auto bv = b.data();
      std::vector<double> out(av.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
      return Tensor::from_op(a.shape(), std::move(out), {a, b},
                             [a, b](std::span<const double> g, detail::GradSlots slots) {
                               auto av = a.data();
                               auto bv = b.data();
                               if (slots[0]) {
                                 for (std::size_t i = 0; i < g.size(); ++i) (*slots[0])[i] += g[i] * bv[i];
                               }
                               if (slots[1]) {
                                 for (std::size_t i = 0; i < g.size(); ++i) (*slots[1])[i] += g[i] * av[i];
                               }
                             });
    }
    case ElementwiseOp::ScalarMul:
    case ElementwiseOp::ScalarAdd:
      if (b.numel() != 1) throw ShapeError("scalar operand must have exactly one element");
      return elementwise(op, a, b.item());
  }
  throw std::logic_error("unknown elementwise op");
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, double s) {
  auto av = a.data();
  std::vector<double> out(av.size());
  switch (op) {
    case ElementwiseOp::ScalarMul:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
      return Tensor::from_op(a.shape(), std::move(out), {a},
                             [s](std::span<const double> g, detail::GradSlots slots) {
                               for (std::size_t i = 0; i < g.size(); ++i) (*slots[0])[i] += s * g[i];
                             });
    case ElementwiseOp::ScalarAdd:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + s;
      return Tensor::from_op(a.shape(), std::move(out), {a},
                             [](std::span<const double> g, detail::GradSlots slots) {
                               accumulate(slots[0], g);
                             });
    default:
      return elementwise(op, a, Tensor::full(a.shape(), s));
  }
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::Mul, a, b); }
Tensor scalar_mul(const Tensor& a, double s) { return elementwise(ElementwiseOp::ScalarMul, a, s); }
Tensor scalar_add(const Tensor& a, double s) { return elementwise(ElementwiseOp::ScalarAdd, a, s); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t r = a.dim(0), k = a.dim(1), c = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " +
                     to_string(b.shape()));
  }
  std::vector<double> out(r * c, 0.0);
  gemm_nn(a.data().data(), b.data().data(), out.data(), r, k, c);
  return Tensor::from_op({r, c}, std::move(out), {a, b},
                         [a, b, r, k, c](std::span<const double> g, detail::GradSlots slots) {
                           if (slots[0]) gemm_nt(g.data(), b.data().data(), slots[0]->data(), r, k, c);
                           if (slots[1]) gemm_tn(a.data().data(), g.data(), slots[1]->data(), r, k, c);
                         });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_matrix(x, "add_bias");
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (bias.numel() != c) {
    throw ShapeError("add_bias: bias " + to_string(bias.shape()) + " does not match " +
                     to_string(x.shape()));
  }
  auto xv = x.data();
  auto bv = bias.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] + bv[j];
  }
  return Tensor::from_op({r, c}, std::move(out), {x, bias},
                         [r, c](std::span<const double> g, detail::GradSlots slots) {
                           accumulate(slots[0], g);
                           if (slots[1]) {
                             for (std::size_t i = 0; i < r; ++i) {
                               for (std::size_t j = 0; j < c; ++j) (*slots[1])[j] += g[i * c + j];
                             }
                           }
                         });
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  require_matrix(x, "scale_rows");
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (s.numel() != r) {
    throw ShapeError("scale_rows: scale " + to_string(s.shape()) + " does not match " +
                     to_string(x.shape()));
  }
  auto xv = x.data();
  auto sv = s.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xv[i * c + j] * sv[i];
  }
  return Tensor::from_op({r, c}, std::move(out), {x, s},
                         [x, s, r, c](std::span<const double> g, detail::GradSlots slots) {
                           auto xv = x.data();
                           auto sv = s.data();
                           for (std::size_t i = 0; i < r; ++i) {
                             for (std::size_t j = 0; j < c; ++j) {
                               const double gij = g[i * c + j];
                               if (slots[0]) (*slots[0])[i * c + j] += gij * sv[i];
                               if (slots[1]) (*slots[1])[i] += gij * xv[i * c + j];
                             }
                           }
                         });
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  require_matrix(x, "slice_cols");
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (count == 0 || start + count > c) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of range for " + to_string(x.shape()));
  }
  auto xv = x.data();
  std::vector<double> out(r * count);
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(xv.begin() + i * c + start, count, out.begin() + i * count);
  }
  return Tensor::from_op({r, count}, std::move(out), {x},
                         [r, c, start, count](std::span<const double> g, detail::GradSlots slots) {
                           for (std::size_t i = 0; i < r; ++i) {
                             for (std::size_t j = 0; j < count; ++j) {
                               (*slots[0])[i * c + start + j] += g[i * count + j];
                             }
                           }
                         });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  return Tensor::from_op(std::move(shape), x.to_vector(), {x},
                         [](std::span<const double> g, detail::GradSlots slots) {
                           accumulate(slots[0], g);
                         });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no parts");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " + to_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) {
      throw ShapeError("concat: inconsistent shapes " + to_string(first) + " and " + to_string(s) +
                       " along axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  std::vector<std::size_t> widths;  // elements per outer index, per part
  for (const auto& p : parts) widths.push_back(p.dim(axis) * inner);
  const std::size_t row = out_shape[axis] * inner;

  std::vector<double> out(outer * row);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto pv = parts[k].data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.begin() + o * widths[k], widths[k], out.begin() + o * row + offset);
    }
    offset += widths[k];
  }
  return Tensor::from_op(std::move(out_shape), std::move(out), parts,
                         [widths, outer, row](std::span<const double> g, detail::GradSlots slots) {
                           std::size_t offset = 0;
                           for (std::size_t k = 0; k < widths.size(); ++k) {
                             if (slots[k]) {
                               for (std::size_t o = 0; o < outer; ++o) {
                                 for (std::size_t j = 0; j < widths[k]; ++j) {
                                   (*slots[k])[o * widths[k] + j] += g[o * row + offset + j];
                                 }
                               }
                             }
                             offset += widths[k];
                           }
                         });
}

Tensor sigmoid(const Tensor& x) {
  auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(xv[i]);
  auto y = std::make_shared<std::vector<double>>(out);
  return Tensor::from_op(x.shape(), std::move(out), {x},
                         [y](std::span<const double> g, detail::GradSlots slots) {
                           const auto& yv = *y;
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             (*slots[0])[i] += g[i] * yv[i] * (1.0 - yv[i]);
                           }
                         });
}

Tensor relu(const Tensor& x) {
  auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return Tensor::from_op(x.shape(), std::move(out), {x},
                         [x](std::span<const double> g, detail::GradSlots slots) {
                           auto xv = x.data();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             if (xv[i] > 0.0) (*slots[0])[i] += g[i];
                           }
                         });
}

Tensor softmax(const Tensor& z) {
  const std::size_t width = z.shape().back();
  const std::size_t rows = z.numel() / width;
  auto zv = z.data();
  std::vector<double> out(zv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = zv.data() + r * width;
    double* o = out.data() + r * width;
    const double top = *std::max_element(in, in + width);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) total += (o[j] = std::exp(in[j] - top));
    for (std::size_t j = 0; j < width; ++j) o[j] /= total;
  }
  auto y = std::make_shared<std::vector<double>>(out);
  return Tensor::from_op(z.shape(), std::move(out), {z},
                         [y, rows, width](std::span<const double> g, detail::GradSlots slots) {
                           // dz_j = w_j (g_j - sum_m g_m w_m)
                           const auto& yv = *y;
                           for (std::size_t r = 0; r < rows; ++r) {
                             const double* w = yv.data() + r * width;
                             const double* gr = g.data() + r * width;
                             double dot = 0.0;
                             for (std::size_t j = 0; j < width; ++j) dot += gr[j] * w[j];
                             for (std::size_t j = 0; j < width; ++j) {
                               (*slots[0])[r * width + j] += w[j] * (gr[j] - dot);
                             }
                           }
                         });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return Tensor::from_op({1}, {total}, {x}, [](std::span<const double> g, detail::GradSlots slots) {
    for (auto& v : *slots[0]) v += g[0];
  });
}

Tensor mean(const Tensor& x) { return scalar_mul(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor bce_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "bce_loss");
  auto pv = pred.data();
  auto tv = target.data();
  const std::size_t n = pv.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  // Gradients are evaluated at the clamped prediction.
  std::vector<double> log_p(n), log_q(n), clamped(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    clamped[i] = std::clamp(pv[i], kBceClamp, 1.0 - kBceClamp);
    log_p[i] = std::log(clamped[i]);
    log_q[i] = std::log1p(-clamped[i]);
    total -= tv[i] * log_p[i] + (1.0 - tv[i]) * log_q[i];
  }
  return Tensor::from_op(
      {1}, {total * inv_n}, {pred, target},
      [target, clamped = std::move(clamped), log_p = std::move(log_p), log_q = std::move(log_q),
       inv_n](std::span<const double> g, detail::GradSlots slots) {
        auto tv = target.data();
        const double scale = g[0] * inv_n;
        for (std::size_t i = 0; i < clamped.size(); ++i) {
          const double p = clamped[i];
          if (slots[0]) (*slots[0])[i] += scale * (-tv[i] / p + (1.0 - tv[i]) / (1.0 - p));
          if (slots[1]) (*slots[1])[i] += scale * -(log_p[i] - log_q[i]);
        }
      });
}

}  // namespace aol
