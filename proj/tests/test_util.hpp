#pragma once

#include <algorithm>
#include <cstring>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "aprox/data_io.hpp"
#include "aprox/problem.hpp"

namespace testutil {

// Random sparse rows with entries in [-1, 1]; every row gets at least one entry.
inline std::shared_ptr<const aprox::Dataset> random_dataset(std::size_t n, std::size_t d,
                                                            double density, std::mt19937_64& rng,
                                                            aprox::LossKind loss) {
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::bernoulli_distribution keep(density);
  std::uniform_int_distribution<std::size_t> col(0, d - 1);
  std::vector<aprox::Example> ex;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<aprox::Index, double>> e;
    for (std::size_t j = 0; j < d; ++j) {
      if (keep(rng)) e.emplace_back(static_cast<aprox::Index>(j), val(rng));
    }
    if (e.empty()) e.emplace_back(static_cast<aprox::Index>(col(rng)), 0.5);
    const double b = loss == aprox::LossKind::logistic ? (val(rng) > 0 ? 1.0 : -1.0) : val(rng);
    ex.push_back({aprox::SparseVec::from_entries(d, std::move(e)), b});
  }
  return std::make_shared<const aprox::Dataset>(d, std::move(ex));
}

inline std::vector<double> random_vec(std::size_t d, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> x(d);
  for (double& v : x) v = u(rng);
  return x;
}

inline bool bits_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Row-normalized synthetic logistic problem.
inline aprox::Problem synth_problem(std::size_t n, std::size_t d, double delta, std::uint64_t seed,
                                    aprox::Regularizer reg) {
  aprox::SynthSpec spec;
  spec.n = n;
  spec.d = d;
  spec.delta = delta;
  spec.seed = seed;
  return aprox::Problem(std::make_shared<const aprox::Dataset>(aprox::synth_dataset(spec)),
                        aprox::LossKind::logistic, reg);
}

// 0.5 (x - 1)^2 + l1 |x| as a one-example least-squares problem.
inline aprox::Problem one_dim_problem(double l1) {
  std::vector<aprox::Example> ex;
  ex.push_back({aprox::SparseVec(1, {0}, {1.0}), 1.0});
  return aprox::Problem(std::make_shared<const aprox::Dataset>(1, std::move(ex)),
                        aprox::LossKind::least_squares, aprox::Regularizer{l1, 0.0});
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace testutil
