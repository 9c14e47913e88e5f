#include <algorithm>
#include <random>

#include "aprox/async_engine.hpp"
#include "aprox/errors.hpp"
#include "aprox/sampling.hpp"

namespace aprox {

std::string_view delay_law_name(DelayLaw law) noexcept {
  return law == DelayLaw::constant ? "constant" : "uniform";
}

void DelaySchedule::validate(std::size_t stage_length) const {
  require(applied_lags.empty() || applied_lags.size() == taus.size(),
          "DelaySchedule: applied subsets do not match delays");
  for (std::size_t g = 0; g < taus.size(); ++g) {
    const std::size_t pos = stage_length == 0 ? g : g % stage_length;
    require(taus[g] <= tau_bound, "DelaySchedule: delay exceeds its bound");
    require(taus[g] <= pos, "DelaySchedule: delay reaches before clock 0");
    if (applied_lags.empty()) continue;
    std::uint32_t prev = 0;
    for (std::uint32_t lag : applied_lags[g]) {
      require(lag >= 1 && lag <= taus[g], "DelaySchedule: applied update outside the window");
      require(lag > prev, "DelaySchedule: applied lags must be strictly increasing");
      prev = lag;
    }
  }
}

DelaySchedule DelaySchedule::zero(std::size_t length) {
  DelaySchedule s;
  s.taus.assign(length, 0);
  return s;
}

DelaySchedule sample_delay_schedule(DelayLaw law, std::size_t tau, std::size_t length,
                                    std::uint64_t seed, SubsetRule rule,
                                    std::size_t stage_length) {
  require(rule.p >= 0.0 && rule.p <= 1.0, "sample_delay_schedule: subset probability not in [0,1]");
  DelaySchedule s;
  s.law = law;
  s.tau_bound = tau;
  s.taus.resize(length);
  s.applied_lags.resize(length);
  Rng delay_rng = make_stream(seed, kDelayStream);
  Rng subset_rng = make_stream(seed, kSubsetStream);
  std::uniform_int_distribution<std::size_t> draw(0, tau);
  std::bernoulli_distribution include(rule.p);
  for (std::size_t g = 0; g < length; ++g) {
    const std::size_t pos = stage_length == 0 ? g : g % stage_length;
    const std::size_t raw = law == DelayLaw::constant ? tau : draw(delay_rng);
    const std::size_t t = std::min(raw, pos);
    s.taus[g] = static_cast<std::uint32_t>(t);
    for (std::size_t lag = 1; lag <= t; ++lag) {
      if (include(subset_rng)) s.applied_lags[g].push_back(static_cast<std::uint32_t>(lag));
    }
  }
  return s;
}

SimulatedMaster::SimulatedMaster(BlockPartition partition, std::span<const double> x0,
                                 std::size_t history_depth)
    : partition_(partition), x_(x0.begin(), x0.end()), depth_(history_depth) {
  require(x0.size() == partition_.dim(), "SimulatedMaster: dimension mismatch");
}

void SimulatedMaster::reset(std::span<const double> x0) {
  require(x0.size() == partition_.dim(), "SimulatedMaster: dimension mismatch");
  x_.assign(x0.begin(), x0.end());
  clock_ = 0;
  history_.clear();
}

void SimulatedMaster::undo_into(std::size_t tau, DenseVec& out) const {
  require(tau <= clock_, "SimulatedMaster: read before clock 0");
  require(tau <= history_.size(), "SimulatedMaster: delay exceeds retained history");
  for (std::size_t t = 0; t < tau; ++t) {
    const Commit& c = history_[history_.size() - 1 - t];
    std::copy(c.before.begin(), c.before.end(),
              out.begin() + static_cast<std::ptrdiff_t>(c.range.begin));
  }
}

DenseVec SimulatedMaster::read_consistent(std::size_t tau) const {
  DenseVec out = x_;
  undo_into(tau, out);
  return out;
}

DenseVec SimulatedMaster::read_inconsistent(std::size_t tau,
                                            std::span<const std::uint32_t> applied_lags) const {
  DenseVec out = x_;
  undo_into(tau, out);
  std::vector<bool> applied(tau + 1, false);
  for (std::uint32_t lag : applied_lags) {
    require(lag >= 1 && lag <= tau, "read_inconsistent: applied update outside the delay window");
    applied[lag] = true;
  }
  // Replay the applied updates oldest first. Where the read still holds the
  // exact pre-update value the post-update value is copied, so applying every
  // pending update of a block reproduces the current block bitwise.
  for (std::size_t lag = tau; lag >= 1; --lag) {
    if (!applied[lag]) continue;
    const Commit& c = history_[history_.size() - lag];
    for (std::size_t e = 0; e < c.range.size(); ++e) {
      double& v = out[c.range.begin + e];
      v = v == c.before[e] ? c.after[e] : v + (c.after[e] - c.before[e]);
    }
  }
  return out;
}

void SimulatedMaster::commit_range(BlockRange r, std::span<const double> values) {
  require(values.size() == r.size(), "SimulatedMaster: commit size mismatch");
  if (depth_ > 0) {
    Commit c;
    if (history_.size() == depth_) {
      c = std::move(history_.front());
      history_.pop_front();
    }
    c.range = r;
    c.before.assign(x_.begin() + static_cast<std::ptrdiff_t>(r.begin),
                    x_.begin() + static_cast<std::ptrdiff_t>(r.end));
    c.after.assign(values.begin(), values.end());
    history_.push_back(std::move(c));
  }
  std::copy(values.begin(), values.end(), x_.begin() + static_cast<std::ptrdiff_t>(r.begin));
  ++clock_;
}

void SimulatedMaster::commit_block(std::size_t j, std::span<const double> values) {
  commit_range(partition_.block(j), values);
}

void SimulatedMaster::commit_full(std::span<const double> values) {
  commit_range({0, partition_.dim()}, values);
}

}  // namespace aprox
