#pragma once

// Step-size admissibility, linear-rate constants and speedup classifiers for
// asynchronous ProxSVRG / ProxSVRCD, plus the dataset statistics they need.

#include <cstddef>
#include <optional>
#include <string_view>

#include "aprox/problem.hpp"

namespace aprox::theory {

struct ProblemConstants {
  double mu = 1.0;     // strong convexity modulus of P
  double L = 1.0;      // Lipschitz constant of grad f_i
  double T = 1.0;      // Lipschitz constant of the partial gradients
  double Delta = 1.0;  // data sparsity, (0, 1]
  double tau = 0.0;    // delay bound (in expectation)
  double B = 1.0;      // mini-batch size
  double K = 1.0;      // inner loop length
  double m = 1.0;      // coordinate blocks
  double eta = 0.01;   // step size
  std::optional<double> n;  // data size, used by the ProxSVRCD speedup classifier

  // Throws ContractError unless 0 < mu <= L, T > 0, 0 < Delta <= 1, tau >= 0,
  // and B, K, m, eta positive.
  void validate() const;
};

enum class Speedup { linear, partial, none };

struct SpeedupVerdict {
  Speedup kind = Speedup::none;
  double factor = 0.0;  // meaningful for `partial`
};

std::string_view speedup_name(Speedup s) noexcept;

struct SparsityResult {
  double delta = 0.0;
  bool degenerate = false;  // no feature appears anywhere
};

// max_j |{i : a_ij != 0}| / n
SparsityResult data_sparsity(const Dataset& data);
inline double data_sparsity_delta(const Dataset& data) { return data_sparsity(data).delta; }

// eta < min{2 / (5 L B Delta tau^2), B / (16 L)}; the first term is +inf at tau = 0.
bool svrg_stepsize_admissible(const ProblemConstants& c);

// rho = B / (eta mu K (B - 8 eta L)) + 8 eta L / (B - 8 eta L). DomainError if B <= 8 eta L.
double svrg_rate(const ProblemConstants& c);

// linear iff tau <= sqrt(8 / (B^2 Delta)); else partial(1 / (B^2 Delta tau)) when
// B^2 Delta tau < 1; else none.
SpeedupVerdict svrg_speedup_condition(const ProblemConstants& c);

// All of
//   eta < (1/T) (m^1.5 - T tau) / (m^1.5 + 3 m tau + tau^2),
//   eta < 1 / (8T),
//   eta < mu sqrt(m) / (2 T tau)   (vacuous at tau = 0),
// and the side condition B >= L / T.
bool svrcd_stepsize_admissible(const ProblemConstants& c);

// rho = m / (eta mu K D) + 4 eta T (K + 1) / (D K), D = 1 - T eta tau / (mu sqrt m) - 4 eta T.
// DomainError if D <= 0.
double svrcd_rate(const ProblemConstants& c);

// linear iff tau <= min{sqrt(m), 4 mu sqrt(m), m^1.5 / (2T)}; otherwise, when n
// is known and tau <= sqrt(m), partial with factor sqrt(m) / (2 tau sqrt(n)).
SpeedupVerdict svrcd_speedup_condition(const ProblemConstants& c);

struct Lipschitz {
  double L = 0.0;
  double T = 0.0;
};

// logistic: L = 0.25 max ||a_i||^2; least squares: L = max ||a_i||^2; T = L.
Lipschitz estimate_lipschitz(const Dataset& data, LossKind kind);

// Step size, batch and stage length that bring rho down to 5/6.
struct RecommendedParams {
  std::size_t B = 1;
  double eta = 0.0;
  std::size_t K = 1;
};

// B = ceil(Delta^{-1/4}), eta = 0.05 Delta^{1/4} / L, K = ceil(200 L Delta^{1/4} / mu).
RecommendedParams svrg_recommended(double Delta, double L, double mu);
// B = ceil(L / T), eta = 1 / (24 T), K = ceil(216 m T / mu).
RecommendedParams svrcd_recommended(double m, double L, double T, double mu);

}  // namespace aprox::theory
