#include "aol/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "aol/gradcheck.hpp"
#include "aol/ops.hpp"
#include "aol/rng.hpp"

namespace aol {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

// Values in [-1, 1] kept at least `gap` away from zero.
Tensor away_from_zero(Shape shape, Rng& rng, double gap) {
  std::uniform_real_distribution<double> u(gap, 1.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = sign(rng) ? u(rng) : -u(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

Tensor with_value(const Tensor& like, const Tensor& values) {
  return Tensor(like.shape(), values.to_vector(), true);
}

using MultiOp = std::function<Tensor(const std::vector<Tensor>&)>;

// Contracts the op output with a fixed random projection so every output
// element contributes to the scalar being differentiated.
struct OpCheck {
  std::string name;
  std::function<std::vector<Tensor>(Rng&)> inputs;
  MultiOp op;
};

double worst_error(const OpCheck& check, Rng& rng, bool& ok) {
  const auto inputs = check.inputs(rng);
  const Tensor probe = check.op(inputs);
  const Tensor projection = random_tensor(probe.shape(), rng);
  const Tensor fixed(projection.shape(), projection.to_vector());
  auto scalar = [&](const std::vector<Tensor>& xs) { return sum(mul(check.op(xs), fixed)); };
  const auto analytic = grad(scalar(inputs), inputs);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].requires_grad()) continue;
    auto f = [&](const Tensor& xi) {
      auto xs = inputs;
      xs[i] = with_value(inputs[i], xi);
      return scalar(xs).item();
    };
    const Tensor numeric = finite_diff_grad(f, inputs[i]);
    ok = ok && grads_agree(analytic[i].data(), numeric.data());
    worst = std::max(worst, max_relative_error(analytic[i].data(), numeric.data()));
  }
  return worst;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::vector<OpCheck> op_checks() {
  auto two = [](Rng& rng) {
    Shape s{pick(rng, 1, 4), pick(rng, 1, 5)};
    return std::vector<Tensor>{random_tensor(s, rng), random_tensor(s, rng)};
  };
  auto one = [](Rng& rng) { return std::vector<Tensor>{random_tensor({pick(rng, 1, 4), pick(rng, 1, 5)}, rng)}; };
  std::vector<OpCheck> checks;
  checks.push_back({"add", two, [](const auto& x) { return add(x[0], x[1]); }});
  checks.push_back({"sub", two, [](const auto& x) { return sub(x[0], x[1]); }});
  checks.push_back({"mul", two, [](const auto& x) { return mul(x[0], x[1]); }});
  checks.push_back({"scalar_mul", one, [](const auto& x) { return scalar_mul(x[0], -1.7); }});
  checks.push_back({"scalar_add", one, [](const auto& x) { return scalar_add(x[0], 0.3); }});
  checks.push_back({"matmul",
                    [](Rng& rng) {
                      const std::size_t r = pick(rng, 1, 4), k = pick(rng, 1, 5), c = pick(rng, 1, 4);
                      return std::vector<Tensor>{random_tensor({r, k}, rng), random_tensor({k, c}, rng)};
                    },
                    [](const auto& x) { return matmul(x[0], x[1]); }});
  checks.push_back({"add_bias",
                    [](Rng& rng) {
                      const std::size_t r = pick(rng, 1, 4), c = pick(rng, 1, 5);
                      return std::vector<Tensor>{random_tensor({r, c}, rng), random_tensor({c}, rng)};
                    },
                    [](const auto& x) { return add_bias(x[0], x[1]); }});
  checks.push_back({"scale_rows",
                    [](Rng& rng) {
                      const std::size_t r = pick(rng, 1, 4), c = pick(rng, 1, 5);
                      return std::vector<Tensor>{random_tensor({r, c}, rng), random_tensor({r, 1}, rng)};
                    },
                    [](const auto& x) { return scale_rows(x[0], x[1]); }});
  checks.push_back({"slice_cols",
                    [](Rng& rng) { return std::vector<Tensor>{random_tensor({pick(rng, 1, 4), 6}, rng)}; },
                    [](const auto& x) { return slice_cols(x[0], 2, 3); }});
  checks.push_back({"reshape",
                    [](Rng& rng) { return std::vector<Tensor>{random_tensor({pick(rng, 1, 3), 6}, rng)}; },
                    [](const auto& x) { return reshape(x[0], {x[0].dim(0) * 3, 2}); }});
  checks.push_back({"concat_rows",
                    [](Rng& rng) {
                      const std::size_t c = pick(rng, 1, 4);
                      return std::vector<Tensor>{random_tensor({pick(rng, 1, 3), c}, rng),
                                                 random_tensor({pick(rng, 1, 3), c}, rng)};
                    },
                    [](const auto& x) { return concat(x, 0); }});
  checks.push_back({"concat_cols",
                    [](Rng& rng) {
                      const std::size_t r = pick(rng, 1, 4);
                      return std::vector<Tensor>{random_tensor({r, pick(rng, 1, 3)}, rng),
                                                 random_tensor({r, pick(rng, 1, 3)}, rng)};
                    },
                    [](const auto& x) { return concat(x, 1); }});
  checks.push_back({"sigmoid", one, [](const auto& x) { return sigmoid(scalar_mul(x[0], 3.0)); }});
  checks.push_back({"relu",
                    [](Rng& rng) {
                      return std::vector<Tensor>{away_from_zero({pick(rng, 1, 4), pick(rng, 1, 5)}, rng, 1e-2)};
                    },
                    [](const auto& x) { return relu(x[0]); }});
  checks.push_back({"softmax", one, [](const auto& x) { return softmax(scalar_mul(x[0], 2.0)); }});
  checks.push_back({"sum", one, [](const auto& x) { return sum(x[0]); }});
  checks.push_back({"mean", one, [](const auto& x) { return mean(x[0]); }});
  checks.push_back({"bce_loss",
                    [](Rng& rng) {
                      Shape s{pick(rng, 1, 4), pick(rng, 1, 5)};
                      return std::vector<Tensor>{random_tensor(s, rng, 0.05, 0.95), random_tensor(s, rng, 0.0, 1.0)};
                    },
                    [](const auto& x) { return bce_loss(x[0], x[1]); }});
  return checks;
}

}  // namespace

CheckResult check_mixed_label_loss(std::size_t trials, std::uint64_t seed, double tolerance) {
  Rng rng(derive_seed(seed, 0x71));
  std::uniform_real_distribution<double> prob(1e-3, 1.0 - 1e-3);
  std::normal_distribution<double> normal(0.0, 2.0);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t m = pick(rng, 2, 8), n = pick(rng, 2, 20);
    std::vector<double> pred(n);
    for (auto& p : pred) p = prob(rng);
    std::vector<std::vector<double>> sets(m, std::vector<double>(n, 0.0));
    for (auto& s : sets) s[pick(rng, 0, n - 1)] = 1.0;
    std::vector<double> w(m);
    double z = 0.0;
    for (auto& x : w) z += (x = std::exp(normal(rng)));
    for (auto& x : w) x /= z;
    worst = std::max(worst, theorem1_gap(pred, sets, w));
  }
  return {"mixed_label_loss", worst <= tolerance,
          std::to_string(trials) + " instances, max gap " + fmt(worst) + " (tolerance " + fmt(tolerance) + ")"};
}

std::vector<CheckResult> check_op_gradients(std::size_t trials, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x72));
  std::vector<CheckResult> out;
  for (const auto& check : op_checks()) {
    bool ok = true;
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) worst = std::max(worst, worst_error(check, rng, ok));
    out.push_back({"grad:" + check.name, ok, std::to_string(trials) + " trials, max rel error " + fmt(worst)});
  }
  return out;
}

AttentionGradient attention_chain_gradient(const AttentionParams& attn, const std::vector<Tensor>& label_sets,
                                           const Tensor& stacked, const Tensor& pred_probs, double k,
                                           double t) {
  const std::size_t m_sets = attn.n_sets, d = attn.feature_dim;
  const std::size_t b = stacked.dim(0), n = label_sets.front().dim(1);
  const auto f = stacked.data();
  const auto wt = attn.weight.data();
  const auto bias = attn.bias.data();
  const auto p = pred_probs.data();
  AttentionGradient g{std::vector<double>(wt.size(), 0.0), std::vector<double>(bias.size(), 0.0)};
  const double scale = 1.0 / static_cast<double>(b * n);
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<double> logits(m_sets, 0.0);
    for (std::size_t m = 0; m < m_sets; ++m) {
      if (attn.arch == AttentionArchitecture::Concatenated) {
        logits[m] = bias[m];
        for (std::size_t j = 0; j < m_sets * d; ++j) logits[m] += f[i * m_sets * d + j] * wt[j * m_sets + m];
      } else {
        logits[m] = bias[0];
        for (std::size_t j = 0; j < d; ++j) logits[m] += f[i * m_sets * d + m * d + j] * wt[j];
      }
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> w(m_sets);
    double z = 0.0;
    for (std::size_t m = 0; m < m_sets; ++m) z += (w[m] = std::exp(logits[m] - top));
    for (auto& x : w) x /= z;

    // dL/dw_m = sum_n dL/dytilde * k ytilde (1 - ytilde) * y_m
    std::vector<double> dw(m_sets, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
      double ybar = 0.0;
      for (std::size_t m = 0; m < m_sets; ++m) ybar += w[m] * label_sets[m].data()[i * n + c];
      const double yt = 1.0 / (1.0 + std::exp(-k * (ybar - t)));
      const double pc = std::clamp(p[i * n + c], kBceClamp, 1.0 - kBceClamp);
      const double dl_dyt = -scale * (std::log(pc) - std::log(1.0 - pc));
      const double dl_dybar = dl_dyt * k * yt * (1.0 - yt);
      for (std::size_t m = 0; m < m_sets; ++m) dw[m] += dl_dybar * label_sets[m].data()[i * n + c];
    }
    double wdw = 0.0;
    for (std::size_t m = 0; m < m_sets; ++m) wdw += w[m] * dw[m];
    for (std::size_t m = 0; m < m_sets; ++m) {
      const double dz = w[m] * (dw[m] - wdw);
      if (attn.arch == AttentionArchitecture::Concatenated) {
        g.bias[m] += dz;
        for (std::size_t j = 0; j < m_sets * d; ++j) g.weight[j * m_sets + m] += f[i * m_sets * d + j] * dz;
      } else {
        g.bias[0] += dz;
        for (std::size_t j = 0; j < d; ++j) g.weight[j] += f[i * m_sets * d + m * d + j] * dz;
      }
    }
  }
  return g;
}

CheckResult check_attention_gradients(std::size_t trials, std::uint64_t seed, double chain_tolerance) {
  Rng rng(derive_seed(seed, 0x73));
  std::uniform_real_distribution<double> sharp(1.0, 10.0), thresh(0.2, 0.8);
  bool fd_ok = true, chain_ok = true;
  double worst_fd = 0.0, worst_chain = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto arch = trial % 2 ? AttentionArchitecture::SharedScorer : AttentionArchitecture::Concatenated;
    const std::size_t b = pick(rng, 1, 4), m_sets = pick(rng, 2, 4), d = pick(rng, 1, 4), n = pick(rng, 2, 5);
    MetaConfig cfg;
    cfg.k = sharp(rng);
    cfg.t_threshold = thresh(rng);
    auto attn = AttentionParams::zeros(arch, m_sets, d);
    attn = attn.with_tensors(Tensor(attn.weight.shape(), random_tensor(attn.weight.shape(), rng, -0.5, 0.5).to_vector()),
                             Tensor(attn.bias.shape(), random_tensor(attn.bias.shape(), rng, -0.5, 0.5).to_vector()));
    const Tensor stacked(Shape{b, m_sets * d}, random_tensor({b, m_sets * d}, rng).to_vector());
    const Tensor probs(Shape{b, n}, random_tensor({b, n}, rng, 0.05, 0.95).to_vector());
    std::vector<Tensor> sets;
    for (std::size_t m = 0; m < m_sets; ++m) {
      std::vector<double> y(b * n, 0.0);
      for (std::size_t i = 0; i < b; ++i) y[i * n + pick(rng, 0, n - 1)] = 1.0;
      sets.emplace_back(Shape{b, n}, std::move(y));
    }

    const auto update = attention_step(attn, sets, stacked, probs, cfg);
    const auto chain = attention_chain_gradient(attn, sets, stacked, probs, cfg.k, cfg.t_threshold);
    for (std::size_t i = 0; i < chain.weight.size(); ++i) {
      const double e = std::abs(update.grad_weight.data()[i] - chain.weight[i]);
      worst_chain = std::max(worst_chain, e);
    }
    for (std::size_t i = 0; i < chain.bias.size(); ++i) {
      worst_chain = std::max(worst_chain, std::abs(update.grad_bias.data()[i] - chain.bias[i]));
    }
    chain_ok = chain_ok && worst_chain <= chain_tolerance;

    auto loss_w = [&](const Tensor& w) { return attention_step(attn.with_tensors(w, attn.bias), sets, stacked, probs, cfg).loss; };
    auto loss_b = [&](const Tensor& bb) { return attention_step(attn.with_tensors(attn.weight, bb), sets, stacked, probs, cfg).loss; };
    const Tensor fd_w = finite_diff_grad(loss_w, attn.weight);
    const Tensor fd_b = finite_diff_grad(loss_b, attn.bias);
    fd_ok = fd_ok && grads_agree(update.grad_weight.data(), fd_w.data()) &&
            grads_agree(update.grad_bias.data(), fd_b.data());
    worst_fd = std::max({worst_fd, max_relative_error(update.grad_weight.data(), fd_w.data()),
                         max_relative_error(update.grad_bias.data(), fd_b.data())});
  }
  return {"grad:attention_path", fd_ok && chain_ok,
          std::to_string(trials) + " trials, finite-difference rel error " + fmt(worst_fd) +
              ", closed-form abs error " + fmt(worst_chain) + " (tolerance " + fmt(chain_tolerance) + ")"};
}

std::vector<CheckResult> run_verification(std::size_t trials, std::uint64_t seed) {
  std::vector<CheckResult> out{check_mixed_label_loss(std::max<std::size_t>(trials, 1) * 10, seed)};
  for (auto& r : check_op_gradients(trials, seed)) out.push_back(std::move(r));
  out.push_back(check_attention_gradients(trials, seed));
  return out;
}

}  // namespace aol
