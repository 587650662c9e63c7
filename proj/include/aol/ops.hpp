#pragma once

#include <vector>

#include "aol/tensor.hpp"

namespace aol {

enum class ElementwiseOp { Add, Sub, Mul, ScalarMul, ScalarAdd };

// Tensor-tensor forms need equal shapes; scalar forms take the scalar as b.
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b);
Tensor elementwise(ElementwiseOp op, const Tensor& a, double b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double s);
Tensor scalar_add(const Tensor& a, double s);

// [r,k] x [k,c] -> [r,c]
Tensor matmul(const Tensor& a, const Tensor& b);

// x: [r,c], bias: [c]. Adds bias to every row.
Tensor add_bias(const Tensor& x, const Tensor& bias);

// x: [r,c], s: [r] or [r,1]. Multiplies row i of x by s[i].
Tensor scale_rows(const Tensor& x, const Tensor& s);

// Columns [start, start + count) of a matrix.
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);

Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);

// Softmax over the last axis, one distribution per leading index.
Tensor softmax(const Tensor& z);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

inline constexpr double kBceClamp = 1e-7;

/// Mean binary cross entropy over every element:
///   -(1/n) sum_i t_i log p_i + (1 - t_i) log(1 - p_i)
/// with p clamped to [1e-7, 1 - 1e-7]. Differentiable in both arguments.
Tensor bce_loss(const Tensor& pred, const Tensor& target);

}  // namespace aol
