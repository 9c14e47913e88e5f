#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "aprox/errors.hpp"
#include "aprox/problem.hpp"
#include "test_util.hpp"

using namespace aprox;

namespace {

// argmin_x 0.5 (x - y)^2 + step (l1 |x| + l2/2 x^2) by ternary search. Near the
// minimum f(a) and f(b) agree to ~1e-16 relative, so the comparison uses
// f(a) - f(b) with the common factor (a - b) divided out.
double prox_oracle(double y, double step, double l1, double l2) {
  auto a_worse = [&](double a, double b) {  // f(a) > f(b), for a < b
    const double slope = 0.5 * (a + b) - y + step * l2 * 0.5 * (a + b) +
                         step * l1 * (std::abs(a) - std::abs(b)) / (a - b);
    return slope < 0.0;  // f(a) - f(b) = (a - b) * slope
  };
  double lo = -std::abs(y) - 1.0, hi = std::abs(y) + 1.0;
  for (int it = 0; it < 300; ++it) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    if (a >= b) break;
    if (a_worse(a, b)) lo = a;
    else hi = b;
  }
  return 0.5 * (lo + hi);
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("loss values") {
  const Example ex{SparseVec(2, {0}, {1.0}), 1.0};
  const std::vector<double> zero{0.0, 0.0};
  CHECK(loss_value(LossKind::logistic, ex, zero) == doctest::Approx(0.6931471805599453));
  CHECK(loss_from_margin(LossKind::logistic, 2.0, 1.0) ==
        doctest::Approx(std::log1p(std::exp(-2.0))).epsilon(1e-15));
  CHECK(loss_from_margin(LossKind::least_squares, 0.4, 0.4) == 0.0);
  // Large margins stay finite and accurate.
  CHECK(loss_from_margin(LossKind::logistic, -800.0, 1.0) == doctest::Approx(800.0));
  CHECK(loss_from_margin(LossKind::logistic, 800.0, 1.0) >= 0.0);
  CHECK(std::isfinite(loss_slope(LossKind::logistic, -800.0, 1.0)));
}

TEST_CASE("loss gradients: closed forms") {
  const Example ex{SparseVec(3, {0, 2}, {2.0, -4.0}), -1.0};
  const std::vector<double> zero(3, 0.0);
  const SparseVec g = loss_grad(LossKind::logistic, ex, zero);
  REQUIRE(g.nnz() == 2);
  CHECK(g.values()[0] == doctest::Approx(1.0));   // (-b/2) a_0
  CHECK(g.values()[1] == doctest::Approx(-2.0));  // (-b/2) a_2

  const Example fit{SparseVec(2, {0}, {2.0}), 1.0};
  const std::vector<double> x{0.5, 3.0};
  CHECK(loss_grad(LossKind::least_squares, fit, x).nnz() == 0);
}

TEST_CASE("loss gradients match central finite differences") {
  std::mt19937_64 rng(3);
  const double h = 1e-6;
  for (LossKind kind : {LossKind::logistic, LossKind::least_squares}) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto data = testutil::random_dataset(1, 8, 0.6, rng, kind);
      const Example& ex = (*data)[0];
      auto x = testutil::random_vec(8, rng, 2.0);
      const DenseVec g = loss_grad(kind, ex, x).to_dense();
      DenseVec fd(8), diff(8);
      for (std::size_t j = 0; j < 8; ++j) {
        const double keep = x[j];
        x[j] = keep + h;
        const double up = loss_value(kind, ex, x);
        x[j] = keep - h;
        const double down = loss_value(kind, ex, x);
        x[j] = keep;
        fd[j] = (up - down) / (2 * h);
        diff[j] = fd[j] - g[j];
      }
      CHECK(norm2(diff) <= 1e-5 * std::max(norm2(g), 1e-3));
    }
  }
}

TEST_CASE("minibatch and full gradients") {
  std::mt19937_64 rng(4);
  const auto data = testutil::random_dataset(4, 5, 0.7, rng, LossKind::logistic);
  const auto x = testutil::random_vec(5, rng);
  const std::size_t one[] = {2};
  const std::size_t twice[] = {2, 2};
  CHECK(minibatch_grad(LossKind::logistic, *data, one, x) ==
        loss_grad(LossKind::logistic, (*data)[2], x).to_dense());
  // (g + g) / 2 is exact, so a duplicated index gives the singleton gradient bitwise.
  CHECK(testutil::bits_equal(minibatch_grad(LossKind::logistic, *data, twice, x),
                             minibatch_grad(LossKind::logistic, *data, one, x)));

  const std::size_t all[] = {0, 1, 2, 3};
  const DenseVec full = full_grad(LossKind::logistic, *data, x);
  const DenseVec mb = minibatch_grad(LossKind::logistic, *data, all, x);
  for (std::size_t j = 0; j < 5; ++j) CHECK(full[j] == doctest::Approx(mb[j]).epsilon(1e-14));
}

TEST_CASE("full_grad is independent of the worker count") {
  std::mt19937_64 rng(8);
  const auto data = testutil::random_dataset(301, 40, 0.2, rng, LossKind::logistic);
  const auto x = testutil::random_vec(40, rng);
  const DenseVec g1 = full_grad(LossKind::logistic, *data, x, 1);
  for (std::size_t w : {2u, 3u, 8u}) CHECK(testutil::bits_equal(g1, full_grad(LossKind::logistic, *data, x, w)));

  const auto single = testutil::random_dataset(1, 6, 0.8, rng, LossKind::least_squares);
  const auto y = testutil::random_vec(6, rng);
  CHECK(full_grad(LossKind::least_squares, *single, y) ==
        loss_grad(LossKind::least_squares, (*single)[0], y).to_dense());
}

TEST_CASE("vr_gradient: anchor cancellation and full batch") {
  std::mt19937_64 rng(9);
  const auto data = testutil::random_dataset(7, 6, 0.6, rng, LossKind::logistic);
  const auto xt = testutil::random_vec(6, rng);
  const VRAnchor anchor = make_anchor(LossKind::logistic, *data, xt);
  const std::size_t batch[] = {1, 4, 4};
  CHECK(testutil::bits_equal(vr_gradient(LossKind::logistic, *data, batch, xt, anchor),
                             anchor.full_grad));

  const auto x = testutil::random_vec(6, rng);
  std::vector<std::size_t> all(7);
  std::iota(all.begin(), all.end(), 0);
  const DenseVec v = vr_gradient(LossKind::logistic, *data, all, x, anchor);
  const DenseVec g = full_grad(LossKind::logistic, *data, x);
  for (std::size_t j = 0; j < 6; ++j) CHECK(v[j] == doctest::Approx(g[j]).epsilon(1e-12));
}

TEST_CASE("vr_gradient is unbiased over all B=2 batches of n=6") {
  std::mt19937_64 rng(10);
  for (LossKind kind : {LossKind::logistic, LossKind::least_squares}) {
    const auto data = testutil::random_dataset(6, 5, 0.7, rng, kind);
    for (int point = 0; point < 20; ++point) {
      const VRAnchor anchor = make_anchor(kind, *data, testutil::random_vec(5, rng));
      const auto x = testutil::random_vec(5, rng);
      DenseVec mean(5, 0.0);
      int count = 0;
      for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = i + 1; j < 6; ++j) {
          const std::size_t batch[] = {i, j};
          const DenseVec v = vr_gradient(kind, *data, batch, x, anchor);
          for (std::size_t c = 0; c < 5; ++c) mean[c] += v[c];
          ++count;
        }
      }
      REQUIRE(count == 15);
      const DenseVec g = full_grad(kind, *data, x);
      for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(mean[c] / 15.0 - g[c]) <= 1e-12);
    }
  }
}

TEST_CASE("vr_gradient_block equals the restriction of vr_gradient") {
  std::mt19937_64 rng(12);
  const auto data = testutil::random_dataset(9, 10, 0.5, rng, LossKind::logistic);
  const VRAnchor anchor = make_anchor(LossKind::logistic, *data, testutil::random_vec(10, rng));
  const auto x = testutil::random_vec(10, rng);
  const std::size_t batch[] = {0, 3, 8};
  const DenseVec full = vr_gradient(LossKind::logistic, *data, batch, x, anchor);
  const BlockRange r{3, 7};
  DenseVec part(r.size());
  vr_gradient_block(LossKind::logistic, *data, batch, x, anchor, r, part);
  CHECK(testutil::bits_equal(part, std::span<const double>(full).subspan(3, 4)));
}

TEST_CASE("prox_elastic examples") {
  const std::vector<double> y{2.0, -0.5};
  CHECK(prox_elastic(y, 1.0, Regularizer{0.0, 0.0}) == y);
  CHECK(prox_elastic(y, 0.5, Regularizer{2.0, 0.0}) == std::vector<double>{1.0, 0.0});
  CHECK(prox_elastic(std::vector<double>{0.0}, 0.7, Regularizer{1.0, 1.0})[0] == 0.0);
}

TEST_CASE("prox_elastic matches a ternary-search oracle") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + trial % 8;
    const auto y = testutil::random_vec(d, rng, 3.0);
    const double step = 0.01 + 2.0 * u(rng);
    const Regularizer reg{u(rng), u(rng)};
    const DenseVec p = prox_elastic(y, step, reg);
    for (std::size_t j = 0; j < d; ++j) {
      CHECK(std::abs(p[j] - prox_oracle(y[j], step, reg.l1, reg.l2)) <= 1e-9);
    }
  }
}

TEST_CASE("prox is non-expansive") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto y = testutil::random_vec(6, rng, 2.0);
    const auto z = testutil::random_vec(6, rng, 2.0);
    const Regularizer reg{u(rng), u(rng)};
    const double step = 0.1 + u(rng);
    const DenseVec py = prox_elastic(y, step, reg), pz = prox_elastic(z, step, reg);
    DenseVec dp(6), dyz(6);
    for (std::size_t j = 0; j < 6; ++j) {
      dp[j] = py[j] - pz[j];
      dyz[j] = y[j] - z[j];
    }
    CHECK(norm2(dp) <= norm2(dyz) * (1 + 1e-15));
  }
}

TEST_CASE("prox_block touches only its block") {
  const std::vector<double> y{3.0, -2.0, 1.5, -0.25};
  const Regularizer reg{0.5, 0.2};
  const BlockPartition whole(4, 1);
  CHECK(testutil::bits_equal(prox_block(y, whole, 0, 0.9, reg), prox_elastic(y, 0.9, reg)));
  CHECK(prox_block(y, BlockPartition(4, 2), 1, 1.0, Regularizer{}) == y);

  const DenseVec out = prox_block(y, BlockPartition(4, 2), 0, 1.0, reg);
  CHECK(testutil::bits_equal(std::span<const double>(out).subspan(2),
                             std::span<const double>(y).subspan(2)));
  CHECK(out[0] != y[0]);
}

TEST_CASE("objective values") {
  std::mt19937_64 rng(15);
  const auto data = testutil::random_dataset(5, 4, 0.8, rng, LossKind::logistic);
  const std::vector<double> zero(4, 0.0);
  CHECK(objective_value(LossKind::logistic, *data, Regularizer{0.3, 0.7}, zero) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const auto x = testutil::random_vec(4, rng);
  CHECK(objective_value(LossKind::logistic, *data, Regularizer{}, x) ==
        empirical_risk(LossKind::logistic, *data, x));

  // Two examples by hand: a1 = (1, 0), b1 = 1; a2 = (0.5, 2), b2 = -1 at x = (0.2, -0.1).
  std::vector<Example> ex;
  ex.push_back({SparseVec(2, {0}, {1.0}), 1.0});
  ex.push_back({SparseVec(2, {0, 1}, {0.5, 2.0}), -1.0});
  const Dataset hand(2, std::move(ex));
  const std::vector<double> xh{0.2, -0.1};
  const double expected = 0.5 * (std::log1p(std::exp(-0.2)) + std::log1p(std::exp(-0.1))) +
                          0.1 * 0.3 + 0.5 * 0.4 * 0.05;
  CHECK(objective_value(LossKind::logistic, hand, Regularizer{0.1, 0.4}, xh) ==
        doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("prox-gradient mapping vanishes at the 1-D minimizer") {
  // 0.5 (x - 1)^2 + 0.3 |x| with a least-squares example a = 1, b = 1.
  std::vector<Example> ex;
  ex.push_back({SparseVec(1, {0}, {1.0}), 1.0});
  const Problem p(std::make_shared<const Dataset>(1, std::move(ex)), LossKind::least_squares,
                  Regularizer{0.3, 0.0});
  CHECK(prox_gradient_mapping_norm(p, std::vector<double>{0.7}, 1.0) <= 1e-15);
  CHECK(prox_gradient_mapping_norm(p, std::vector<double>{0.0}, 1.0) > 0.1);
  CHECK(objective_value(p, std::vector<double>{0.7}) == doctest::Approx(0.255));
}

TEST_CASE("Problem and Dataset contracts") {
  std::vector<Example> bad;
  bad.push_back({SparseVec(2, {0}, {1.0}), 0.5});
  auto data = std::make_shared<const Dataset>(2, std::move(bad));
  CHECK_THROWS_AS(Problem(data, LossKind::logistic, Regularizer{}), ContractError);
  CHECK_NOTHROW(Problem(data, LossKind::least_squares, Regularizer{}));
  CHECK_THROWS_AS(Dataset(2, {}), ContractError);
  std::vector<Example> mixed;
  mixed.push_back({SparseVec(2), 1.0});
  mixed.push_back({SparseVec(3), 1.0});
  CHECK_THROWS_AS(Dataset(2, std::move(mixed)), ContractError);
}
