#include "aprox/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "aprox/errors.hpp"

namespace aprox::theory {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void ProblemConstants::validate() const {
  require(mu > 0.0 && mu <= L, "ProblemConstants: need 0 < mu <= L");
  require(T > 0.0, "ProblemConstants: need T > 0");
  require(Delta > 0.0 && Delta <= 1.0, "ProblemConstants: need 0 < Delta <= 1");
  require(tau >= 0.0, "ProblemConstants: need tau >= 0");
  require(B > 0.0 && K > 0.0 && m > 0.0 && eta > 0.0,
          "ProblemConstants: B, K, m and eta must be positive");
  require(!n || *n > 0.0, "ProblemConstants: n must be positive");
}

std::string_view speedup_name(Speedup s) noexcept {
  switch (s) {
    case Speedup::linear:
      return "linear";
    case Speedup::partial:
      return "partial";
    case Speedup::none:
      return "none";
  }
  return "none";
}

SparsityResult data_sparsity(const Dataset& data) {
  require(data.n() >= 1, "data_sparsity: empty dataset");
  std::vector<std::size_t> counts(data.dim(), 0);
  for (const Example& ex : data.examples()) {
    for (Index j : ex.a.indices()) ++counts[j];
  }
  const std::size_t most = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  return {static_cast<double>(most) / static_cast<double>(data.n()), most == 0};
}

bool svrg_stepsize_admissible(const ProblemConstants& c) {
  c.validate();
  const double delay_bound =
      c.tau == 0.0 ? kInf : 2.0 / (5.0 * c.L * c.B * c.Delta * c.tau * c.tau);
  const double batch_bound = c.B / (16.0 * c.L);
  return c.eta < std::min(delay_bound, batch_bound);
}

double svrg_rate(const ProblemConstants& c) {
  c.validate();
  const double denom = c.B - 8.0 * c.eta * c.L;
  if (!(denom > 0.0)) throw DomainError("svrg_rate: requires B - 8 eta L > 0");
  return c.B / (c.eta * c.mu * c.K * denom) + 8.0 * c.eta * c.L / denom;
}

SpeedupVerdict svrg_speedup_condition(const ProblemConstants& c) {
  c.validate();
  const double b2d = c.B * c.B * c.Delta;
  if (c.tau <= std::sqrt(8.0 / b2d)) return {Speedup::linear, 1.0};
  const double q = b2d * c.tau;
  if (q < 1.0) return {Speedup::partial, 1.0 / q};
  return {Speedup::none, 0.0};
}

bool svrcd_stepsize_admissible(const ProblemConstants& c) {
  c.validate();
  if (c.B < c.L / c.T) return false;
  const double m15 = std::pow(c.m, 1.5);
  const double first = (m15 - c.T * c.tau) / (c.T * (m15 + 3.0 * c.m * c.tau + c.tau * c.tau));
  const double second = 1.0 / (8.0 * c.T);
  const double third = c.tau == 0.0 ? kInf : c.mu * std::sqrt(c.m) / (2.0 * c.T * c.tau);
  return c.eta < first && c.eta < second && c.eta < third;
}

double svrcd_rate(const ProblemConstants& c) {
  c.validate();
  const double denom =
      1.0 - c.T * c.eta * c.tau / (c.mu * std::sqrt(c.m)) - 4.0 * c.eta * c.T;
  if (!(denom > 0.0)) {
    throw DomainError("svrcd_rate: requires 1 - T eta tau / (mu sqrt m) - 4 eta T > 0");
  }
  return c.m / (c.eta * c.mu * c.K * denom) +
         4.0 * c.eta * c.T * (c.K + 1.0) / (denom * c.K);
}

SpeedupVerdict svrcd_speedup_condition(const ProblemConstants& c) {
  c.validate();
  const double sm = std::sqrt(c.m);
  const double bound = std::min({sm, 4.0 * c.mu * sm, std::pow(c.m, 1.5) / (2.0 * c.T)});
  if (c.tau <= bound) return {Speedup::linear, 1.0};
  if (c.n && c.tau <= sm) return {Speedup::partial, sm / (2.0 * c.tau * std::sqrt(*c.n))};
  return {Speedup::none, 0.0};
}

Lipschitz estimate_lipschitz(const Dataset& data, LossKind kind) {
  require(data.n() >= 1, "estimate_lipschitz: empty dataset");
  double max_sq = 0.0;
  for (const Example& ex : data.examples()) max_sq = std::max(max_sq, ex.a.squared_norm());
  const double L = kind == LossKind::logistic ? 0.25 * max_sq : max_sq;
  return {L, L};
}

RecommendedParams svrg_recommended(double Delta, double L, double mu) {
  require(Delta > 0.0 && Delta <= 1.0 && L > 0.0 && mu > 0.0, "svrg_recommended: invalid constants");
  const double q = std::pow(Delta, 0.25);
  RecommendedParams c;
  c.B = static_cast<std::size_t>(std::ceil(1.0 / q - 1e-12));
  c.eta = 0.05 * q / L;
  c.K = static_cast<std::size_t>(std::ceil(200.0 * L * q / mu - 1e-9));
  return c;
}

RecommendedParams svrcd_recommended(double m, double L, double T, double mu) {
  require(m >= 1.0 && L > 0.0 && T > 0.0 && mu > 0.0, "svrcd_recommended: invalid constants");
  RecommendedParams c;
  c.B = static_cast<std::size_t>(std::max(1.0, std::ceil(L / T - 1e-12)));
  c.eta = 1.0 / (24.0 * T);
  c.K = static_cast<std::size_t>(std::ceil(216.0 * m * T / mu - 1e-9));
  return c;
}

}  // namespace aprox::theory
