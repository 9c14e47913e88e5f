#include "aprox/seq_solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "aprox/errors.hpp"

namespace aprox {

void SolverConfig::validate(const Problem& p) const {
  require(eta > 0.0 && std::isfinite(eta), "SolverConfig: eta must be positive");
  require(batch >= 1 && batch <= p.n(), "SolverConfig: batch size must be in [1, n]");
  require(blocks >= 1 && blocks <= p.dim(), "SolverConfig: block count must be in [1, d]");
  require(gradient_workers >= 1, "SolverConfig: need at least one gradient worker");
  if (eta_decay) {
    require(eta_decay->eta0 > 0.0 && eta_decay->sigma0 > 0.0, "SolverConfig: invalid eta decay");
  }
  if (stop) require(stop->tol > 0.0, "SolverConfig: stop tolerance must be positive");
}

StageAverager::StageAverager(const BlockPartition& p, std::span<const double> x0)
    : partition_(p), sum_(x0.size(), 0.0), pending_from_(p.blocks(), 1) {
  require(x0.size() == p.dim(), "StageAverager: dimension mismatch");
}

void StageAverager::flush(std::size_t j, std::span<const double> x, std::size_t count) {
  if (count == 0) return;
  const BlockRange r = partition_.block(j);
  kernels::active().axpy(static_cast<double>(count), x.data() + r.begin, sum_.data() + r.begin,
                         r.size());
}

void StageAverager::on_commit(std::size_t j, std::span<const double> x, std::size_t k) {
  // Iterates x_{pending_from}..x_k still hold the pre-commit block values.
  flush(j, x, k + 1 - pending_from_[j]);
  pending_from_[j] = k + 1;
}

DenseVec StageAverager::finish(std::span<const double> x, std::size_t inner) {
  for (std::size_t j = 0; j < partition_.blocks(); ++j) {
    flush(j, x, inner + 1 - pending_from_[j]);
    pending_from_[j] = inner + 1;
  }
  DenseVec mean(sum_.size());
  const double k = static_cast<double>(inner);
  for (std::size_t i = 0; i < sum_.size(); ++i) mean[i] = sum_[i] / k;
  return mean;
}

void partial_full_grad(const Problem& p, std::span<const double> x, BlockRange range,
                       std::span<double> out) {
  require(out.size() == range.size(), "partial_full_grad: output size mismatch");
  const Dataset& data = p.data();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Example& ex = data[i];
    const double slope = loss_slope(p.loss(), sparse_dot(ex.a, x), ex.b);
    if (slope == 0.0) continue;
    const auto idx = ex.a.indices();
    const auto val = ex.a.values();
    auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<Index>(range.begin));
    for (; it != idx.end() && *it < range.end; ++it) {
      out[*it - range.begin] += slope * val[static_cast<std::size_t>(it - idx.begin())];
    }
  }
  kernels::active().scale(1.0 / static_cast<double>(data.n()), out.data(), out.size());
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Appends a stage record; returns true if the stop rule fired.
bool record_stage(RunTrace& trace, const Problem& p, const SolverConfig& cfg, std::size_t stage,
                  std::span<const double> x_stage, double seconds) {
  StageRecord rec;
  rec.stage = stage;
  rec.objective = objective_value(p, x_stage);
  rec.seconds = seconds;
  rec.updates = cfg.inner;
  trace.stages.push_back(rec);
  if (cfg.keep_stage_iterates) trace.stage_iterates.emplace_back(x_stage.begin(), x_stage.end());
  if (cfg.stop && rec.objective - cfg.stop->p_star < cfg.stop->tol) {
    trace.stopped_early = true;
    return true;
  }
  return false;
}

void check_start(const Problem& p, const SolverConfig& cfg, std::span<const double> x0) {
  cfg.validate(p);
  require(x0.size() == p.dim(), "solver: x0 has the wrong dimension");
}

}  // namespace

RunTrace prox_sgd_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0) {
  check_start(p, cfg, x0);
  RunTrace trace;
  trace.x_final.assign(x0.begin(), x0.end());
  if (cfg.empty_run()) return trace;

  Rng batch_rng = make_stream(cfg.seed, kBatchStream);
  BatchSampler sampler(p.n(), cfg.batch, cfg.sampling);
  DenseVec& x = trace.x_final;
  DenseVec next(x.size());
  double elapsed = 0.0;
  std::size_t k = 0;
  for (std::size_t s = 1; s <= cfg.stages; ++s) {
    const auto t0 = Clock::now();
    for (std::size_t t = 0; t < cfg.inner; ++t, ++k) {
      double eta = cfg.eta;
      if (cfg.eta_decay) {
        const double sigma = cfg.eta_decay->sigma0;
        eta = cfg.eta_decay->eta0 * std::sqrt(sigma / (static_cast<double>(k) + sigma));
      }
      const auto batch = sampler.next(batch_rng);
      const DenseVec g = minibatch_grad(p.loss(), p.data(), batch, x);
      prox_gradient_step(x, g, eta, p.reg(), next);
      x.swap(next);
      if (cfg.on_update) cfg.on_update({s, t, -1, x});
    }
    elapsed += seconds_since(t0);
    if (record_stage(trace, p, cfg, s, x, elapsed)) break;
  }
  return trace;
}

RunTrace prox_scd_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0) {
  check_start(p, cfg, x0);
  RunTrace trace;
  trace.x_final.assign(x0.begin(), x0.end());
  if (cfg.empty_run()) return trace;

  const BlockPartition part(p.dim(), cfg.blocks);
  Rng block_rng = make_stream(cfg.seed, kBlockStream);
  DenseVec& x = trace.x_final;
  DenseVec g;
  double elapsed = 0.0;
  for (std::size_t s = 1; s <= cfg.stages; ++s) {
    const auto t0 = Clock::now();
    for (std::size_t t = 0; t < cfg.inner; ++t) {
      const std::size_t j = uniform_index(block_rng, part.blocks());
      const BlockRange r = part.block(j);
      g.resize(r.size());
      partial_full_grad(p, x, r, g);
      const std::span<double> xb = std::span<double>(x).subspan(r.begin, r.size());
      prox_gradient_step(xb, g, cfg.eta, p.reg(), xb);
      if (cfg.on_update) cfg.on_update({s, t, static_cast<std::ptrdiff_t>(j), x});
    }
    elapsed += seconds_since(t0);
    if (record_stage(trace, p, cfg, s, x, elapsed)) break;
  }
  return trace;
}

RunTrace prox_svrg_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0) {
  check_start(p, cfg, x0);
  RunTrace trace;
  trace.x_final.assign(x0.begin(), x0.end());
  if (cfg.empty_run()) return trace;

  const BlockPartition whole(p.dim(), 1);
  Rng batch_rng = make_stream(cfg.seed, kBatchStream);
  BatchSampler sampler(p.n(), cfg.batch, cfg.sampling);
  DenseVec x_tilde(x0.begin(), x0.end());
  DenseVec x, next(p.dim()), u(p.dim());
  double elapsed = 0.0;
  for (std::size_t s = 1; s <= cfg.stages; ++s) {
    const auto t0 = Clock::now();
    const VRAnchor anchor = make_anchor(p.loss(), p.data(), x_tilde, cfg.gradient_workers);
    x = x_tilde;
    StageAverager avg(whole, x);
    for (std::size_t k = 0; k < cfg.inner; ++k) {
      const auto batch = sampler.next(batch_rng);
      vr_gradient_block(p.loss(), p.data(), batch, x, anchor, {0, p.dim()}, u);
      avg.on_commit(0, x, k);
      prox_gradient_step(x, u, cfg.eta, p.reg(), next);
      x.swap(next);
      if (cfg.on_update) cfg.on_update({s, k, -1, x});
    }
    x_tilde = cfg.last_iterate ? x : avg.finish(x, cfg.inner);
    elapsed += seconds_since(t0);
    if (record_stage(trace, p, cfg, s, x_tilde, elapsed)) break;
  }
  trace.x_final = std::move(x_tilde);
  return trace;
}

RunTrace prox_svrcd_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0) {
  check_start(p, cfg, x0);
  RunTrace trace;
  trace.x_final.assign(x0.begin(), x0.end());
  if (cfg.empty_run()) return trace;

  const BlockPartition part(p.dim(), cfg.blocks);
  Rng batch_rng = make_stream(cfg.seed, kBatchStream);
  Rng block_rng = make_stream(cfg.seed, kBlockStream);
  BatchSampler sampler(p.n(), cfg.batch, cfg.sampling);
  DenseVec x_tilde(x0.begin(), x0.end());
  DenseVec x, u;
  double elapsed = 0.0;
  for (std::size_t s = 1; s <= cfg.stages; ++s) {
    const auto t0 = Clock::now();
    const VRAnchor anchor = make_anchor(p.loss(), p.data(), x_tilde, cfg.gradient_workers);
    x = x_tilde;
    StageAverager avg(part, x);
    for (std::size_t k = 0; k < cfg.inner; ++k) {
      const auto batch = sampler.next(batch_rng);
      const std::size_t j = uniform_index(block_rng, part.blocks());
      const BlockRange r = part.block(j);
      u.resize(r.size());
      vr_gradient_block(p.loss(), p.data(), batch, x, anchor, r, u);
      avg.on_commit(j, x, k);
      const std::span<double> xb = std::span<double>(x).subspan(r.begin, r.size());
      prox_gradient_step(xb, u, cfg.eta, p.reg(), xb);
      if (cfg.on_update) cfg.on_update({s, k, static_cast<std::ptrdiff_t>(j), x});
    }
    x_tilde = cfg.last_iterate ? x : avg.finish(x, cfg.inner);
    elapsed += seconds_since(t0);
    if (record_stage(trace, p, cfg, s, x_tilde, elapsed)) break;
  }
  trace.x_final = std::move(x_tilde);
  return trace;
}

}  // namespace aprox
