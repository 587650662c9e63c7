#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "aol/model.hpp"
#include "aol/ops.hpp"
#include "aol/optim.hpp"

using namespace aol;

namespace {

Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

Classifier make_model(std::uint64_t seed, std::size_t aux_dim = 0) {
  Rng rng(seed);
  return Classifier::init({6, 8, 5}, 3, aux_dim, rng);
}

}  // namespace

TEST(ClassifierInit, SameSeedSameParameters) {
  const auto a = make_model(7), b = make_model(7), c = make_model(8);
  ASSERT_EQ(a.params().size(), b.params().size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    EXPECT_EQ(a.params()[i].to_vector(), b.params()[i].to_vector());
    any_diff = any_diff || a.params()[i].to_vector() != c.params()[i].to_vector();
  }
  EXPECT_TRUE(any_diff);
}

TEST(ClassifierInit, HeScaleAndZeroBias) {
  Rng rng(3);
  // 256 x 40 = 10240 draws from the first weight matrix.
  const auto model = Classifier::init({256, 40}, 2, 0, rng);
  const auto w = model.params()[0].to_vector();
  ASSERT_GE(w.size(), 10000u);
  double m = 0, s = 0;
  for (double v : w) m += v;
  m /= static_cast<double>(w.size());
  for (double v : w) s += (v - m) * (v - m);
  const double std = std::sqrt(s / static_cast<double>(w.size() - 1));
  const double want = std::sqrt(2.0 / 256.0);
  EXPECT_LE(std::abs(std - want), 0.1 * want);
  for (double v : model.params()[1].to_vector()) EXPECT_EQ(v, 0.0);
}

TEST(ClassifierInit, HeadWidthIncludesAux) {
  const auto plain = make_model(1, 0);
  EXPECT_EQ(plain.feature_dim(), 5u);
  EXPECT_EQ(plain.params()[4].shape(), (Shape{5, 3}));
  const auto with_aux = make_model(1, 4);
  EXPECT_EQ(with_aux.feature_dim(), 9u);
  EXPECT_EQ(with_aux.params()[4].shape(), (Shape{9, 3}));
}

TEST(ClassifierInit, RejectsEmptyAndZeroDims) {
  Rng rng(0);
  EXPECT_THROW(Classifier::init({}, 3, 0, rng), std::invalid_argument);
  EXPECT_THROW(Classifier::init({4, 0}, 3, 0, rng), std::invalid_argument);
  EXPECT_THROW(Classifier::init({4, 2}, 0, 0, rng), std::invalid_argument);
}

TEST(Forward, ZeroHeadGivesHalf) {
  auto model = make_model(2);
  auto params = model.params();
  params[4] = Tensor::zeros(params[4].shape());
  params[5] = Tensor::zeros(params[5].shape());
  model = params_set(model, params);
  std::mt19937_64 rng(1);
  const auto out = model.forward(random_tensor(rng, {4, 6}));
  for (double p : out.probs.data()) EXPECT_EQ(p, 0.5);
}

TEST(Forward, ProbsAreSigmoidOfLogitsAndFeaturesConcatAux) {
  const auto model = make_model(4, 2);
  std::mt19937_64 rng(2);
  const auto aux = random_tensor(rng, {3, 2});
  const auto out = model.forward(random_tensor(rng, {3, 6}), aux);
  EXPECT_EQ(out.features.shape(), (Shape{3, 7}));
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(out.features.at(r, 5), aux.at(r, 0));
    EXPECT_EQ(out.features.at(r, 6), aux.at(r, 1));
  }
  for (std::size_t i = 0; i < out.logits.numel(); ++i) {
    EXPECT_NEAR(out.probs[i], 1.0 / (1.0 + std::exp(-out.logits[i])), 1e-15);
    EXPECT_GT(out.probs[i], 0.0);
    EXPECT_LT(out.probs[i], 1.0);
  }
}

TEST(Forward, ZeroAuxWithZeroColumnsMatchesPlainModel) {
  const auto plain = make_model(5, 0);
  auto aux_model = make_model(5, 3);
  auto params = plain.params();
  // Head rows for the aux columns are zero; the rest copies the plain head.
  std::vector<double> head(8 * 3, 0.0);
  const auto plain_head = plain.params()[4].to_vector();
  std::copy(plain_head.begin(), plain_head.end(), head.begin());
  params[4] = Tensor({8, 3}, head);
  aux_model = params_set(aux_model, params);

  std::mt19937_64 rng(3);
  const auto x = random_tensor(rng, {5, 6});
  const auto a = plain.forward(x);
  const auto b = aux_model.forward(x, Tensor::zeros({5, 3}));
  EXPECT_EQ(a.probs.to_vector(), b.probs.to_vector());
}

TEST(Forward, WidthAndAuxErrors) {
  const auto plain = make_model(6, 0);
  const auto with_aux = make_model(6, 2);
  EXPECT_THROW(plain.forward(Tensor::zeros({2, 5})), ShapeError);
  EXPECT_THROW(plain.forward(Tensor::zeros({2, 6}), Tensor::zeros({2, 2})), ShapeError);
  EXPECT_THROW(with_aux.forward(Tensor::zeros({2, 6})), ShapeError);
  EXPECT_THROW(with_aux.forward(Tensor::zeros({2, 6}), Tensor::zeros({2, 3})), ShapeError);
  EXPECT_THROW(with_aux.forward(Tensor::zeros({2, 6}), Tensor::zeros({3, 2})), ShapeError);
}

TEST(Forward, InputToLossGradientMatchesFiniteDifferences) {
  const auto model = make_model(9, 2);
  std::mt19937_64 rng(4);
  const auto x0 = random_tensor(rng, {4, 6});
  const auto aux = random_tensor(rng, {4, 2});
  const auto target = random_tensor(rng, {4, 3}, 0, 1);

  auto loss_at = [&](const std::vector<double>& xv) {
    return bce_loss(model.forward(Tensor({4, 6}, xv), aux).probs, target).item();
  };
  Tensor x({4, 6}, x0.to_vector(), true);
  const auto g = grad(bce_loss(model.forward(x, aux).probs, target), std::vector<Tensor>{x});

  auto xv = x0.to_vector();
  const double eps = 1e-5;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double keep = xv[i];
    xv[i] = keep + eps;
    const double up = loss_at(xv);
    xv[i] = keep - eps;
    const double down = loss_at(xv);
    xv[i] = keep;
    const double fd = (up - down) / (2 * eps);
    EXPECT_LE(std::abs(g[0][i] - fd), std::max(1e-4 * std::abs(fd), 1e-6)) << "input " << i;
  }
}

TEST(Params, RoundTripIsForwardIdentical) {
  const auto model = make_model(10);
  const auto copy = params_set(model, params_get(model));
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto x = random_tensor(rng, {3, 6});
    EXPECT_EQ(model.forward(x).probs.to_vector(), copy.forward(x).probs.to_vector());
  }
}

TEST(Params, DerivedClassifierIsIsolated) {
  const auto model = make_model(11);
  std::mt19937_64 rng(6);
  const auto x = random_tensor(rng, {3, 6});
  const auto before = model.forward(x).probs.to_vector();

  auto params = params_get(model);
  auto bumped = params;
  for (auto& p : bumped) p = scalar_add(p, 0.5);
  const auto other = params_set(model, bumped);
  (void)other.forward(x);
  // Training a trainable copy must not leak into the source either.
  auto trainable = trainable_copy(params);
  backward(bce_loss(forward_with(model, trainable, x, std::nullopt).probs, Tensor::full({3, 3}, 1.0)));
  EXPECT_EQ(model.forward(x).probs.to_vector(), before);
  for (const auto& p : model.params()) EXPECT_FALSE(p.has_grad());
}

TEST(Params, SgdStepChangesOutputs) {
  const auto model = make_model(12);
  std::mt19937_64 rng(7);
  const auto x = random_tensor(rng, {4, 6});
  const auto target = random_tensor(rng, {4, 3}, 0, 1);
  auto trainable = trainable_copy(model.params());
  const auto grads = grad(bce_loss(forward_with(model, trainable, x, std::nullopt).probs, target), trainable);
  double norm = 0;
  for (const auto& g : grads)
    for (double v : g.data()) norm += v * v;
  ASSERT_GT(norm, 0.0);
  const auto stepped = params_set(model, sgd_step(model.params(), grads, 0.1));
  EXPECT_NE(stepped.forward(x).probs.to_vector(), model.forward(x).probs.to_vector());
}

TEST(Params, ShapeMismatchIsRejected) {
  const auto model = make_model(13);
  auto params = model.params();
  EXPECT_THROW(params_set(model, std::vector<Tensor>(params.begin(), params.end() - 1)), ShapeError);
  params[0] = Tensor::zeros({6, 7});
  EXPECT_THROW(params_set(model, params), ShapeError);
}

TEST(PredictClass, ExamplesAndTieRule) {
  const std::vector<double> p{0.1, 0.9, 0.2};
  EXPECT_EQ(predict_class(p), 1u);
  const std::vector<double> flat(5, 0.3);
  EXPECT_EQ(predict_class(flat), 0u);
  const std::vector<double> late_tie{0.1, 0.7, 0.7};
  EXPECT_EQ(predict_class(late_tie), 1u);
}

TEST(PredictClass, AgreesWithArgmaxOracle) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> coarse(0, 9);
  for (int t = 0; t < 1000; ++t) {
    // Coarse values make ties common.
    std::vector<double> v(7);
    for (auto& x : v) x = coarse(rng) / 10.0;
    std::size_t want = 0;
    double best = -1;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] > best) {
        best = v[j];
        want = j;
      }
    }
    EXPECT_EQ(predict_class(v), want);
  }
}

TEST(PredictClass, BatchRows) {
  const auto model = make_model(14);
  std::mt19937_64 rng(9);
  const auto out = model.forward(random_tensor(rng, {6, 6}));
  const auto classes = predict_classes(out);
  ASSERT_EQ(classes.size(), 6u);
  for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(classes[r], predict_class(out.probs.data().subspan(r * 3, 3)));
}

TEST(Serialization, SaveLoadRoundTrip) {
  const auto model = make_model(15, 2);
  std::stringstream buf;
  model.save(buf);
  const auto loaded = Classifier::load(buf);
  EXPECT_EQ(loaded.layer_dims(), model.layer_dims());
  EXPECT_EQ(loaded.n_classes(), model.n_classes());
  EXPECT_EQ(loaded.aux_dim(), model.aux_dim());
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    EXPECT_EQ(loaded.params()[i].to_vector(), model.params()[i].to_vector());
  }
}

TEST(Serialization, TruncatedFileErrors) {
  const auto model = make_model(16);
  std::stringstream buf;
  model.save(buf);
  auto bytes = buf.str();
  bytes.resize(bytes.size() - 8);
  std::stringstream cut(bytes);
  EXPECT_THROW(Classifier::load(cut), std::runtime_error);
}

TEST(Serialization, HeaderLayout) {
  const auto model = make_model(17);
  std::stringstream buf;
  model.save(buf);
  // 3 dims + count + n_classes + aux_dim, then 6*8+8+8*5+5+5*3+3 doubles.
  EXPECT_EQ(buf.str().size(), 6 * 8 + (48 + 8 + 40 + 5 + 15 + 3) * 8u);
  EXPECT_EQ(read_u64(buf), 3u);
}
