#include "aol/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace aol {

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double eps) {
  std::vector<double> point = x.to_vector();
  std::vector<double> out(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + eps;
    const double up = f(Tensor(x.shape(), point));
    point[i] = saved - eps;
    const double down = f(Tensor(x.shape(), point));
    point[i] = saved;
    out[i] = (up - down) / (2.0 * eps);
  }
  return Tensor(x.shape(), std::move(out));
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ShapeError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
  }
  return worst;
}

bool grads_agree(std::span<const double> a, std::span<const double> b, double rel,
                 double abs_floor) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > std::max(rel * std::abs(b[i]), abs_floor)) return false;
  }
  return true;
}

}  // namespace aol
