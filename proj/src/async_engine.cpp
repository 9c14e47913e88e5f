#include "aprox/async_engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <ostream>
#include <thread>

#include "aprox/errors.hpp"
#include "aprox/sampling.hpp"

namespace aprox {

void write_commit_log(std::ostream& os, std::span<const CommitRecord> commits) {
  for (const CommitRecord& c : commits) {
    os << c.clock << ',' << c.worker << ',' << c.block << ',' << c.delay << '\n';
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

enum class Algo { svrg, svrcd };

struct Observation {
  std::size_t delay;
  std::size_t cost;
};

std::size_t batch_cost(const Dataset& data, std::span<const std::size_t> batch) {
  std::size_t c = 0;
  for (std::size_t i : batch) c += data[i].a.nnz();
  return c;
}

DelayStats summarize(std::span<const Observation> obs) {
  DelayStats st;
  if (obs.empty()) return st;
  double sum = 0.0;
  for (const Observation& o : obs) {
    sum += static_cast<double>(o.delay);
    st.max = std::max(st.max, o.delay);
  }
  st.mean = sum / static_cast<double>(obs.size());
  st.histogram.assign(st.max + 1, 0);
  for (const Observation& o : obs) ++st.histogram[o.delay];

  double mc = 0.0;
  for (const Observation& o : obs) mc += static_cast<double>(o.cost);
  mc /= static_cast<double>(obs.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const Observation& o : obs) {
    const double dx = static_cast<double>(o.delay) - st.mean;
    const double dy = static_cast<double>(o.cost) - mc;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx > 0.0 && syy > 0.0) st.batch_cost_correlation = sxy / std::sqrt(sxx * syy);
  return st;
}

// Per-stage bookkeeping shared by both execution modes.
class StageLog {
 public:
  StageLog(const Problem& p, const SolverConfig& cfg, AsyncReport& report)
      : p_(p), cfg_(cfg), report_(report) {}

  void add(std::size_t delay, std::size_t cost) { stage_obs_.push_back({delay, cost}); }
  void add_all(std::span<const Observation> obs) {
    stage_obs_.insert(stage_obs_.end(), obs.begin(), obs.end());
  }

  // Returns true if the stop rule fired.
  bool close_stage(std::size_t stage, std::span<const double> x_stage, double seconds) {
    StageRecord rec;
    rec.stage = stage;
    rec.objective = objective_value(p_, x_stage);
    rec.seconds = seconds;
    rec.updates = stage_obs_.size();
    const DelayStats st = summarize(stage_obs_);
    rec.mean_delay = st.mean;
    rec.max_delay = st.max;
    report_.trace.stages.push_back(rec);
    if (cfg_.keep_stage_iterates) {
      report_.trace.stage_iterates.emplace_back(x_stage.begin(), x_stage.end());
    }
    all_obs_.insert(all_obs_.end(), stage_obs_.begin(), stage_obs_.end());
    report_.total_updates += stage_obs_.size();
    stage_obs_.clear();
    if (cfg_.stop && rec.objective - cfg_.stop->p_star < cfg_.stop->tol) {
      report_.trace.stopped_early = true;
      return true;
    }
    return false;
  }

  void finish() {
    report_.delays = summarize(all_obs_);
    if (report_.declared_tau) {
      report_.exceeded_declared_tau = report_.delays.mean > *report_.declared_tau;
    }
  }

 private:
  const Problem& p_;
  const SolverConfig& cfg_;
  AsyncReport& report_;
  std::vector<Observation> stage_obs_;
  std::vector<Observation> all_obs_;
};

// ---------------------------------------------------------------------------
// Simulate mode

AsyncReport run_simulated(Algo algo, const Problem& p, const SolverConfig& cfg,
                          std::span<const double> x0, const SimulateMode& mode) {
  AsyncReport report;
  report.trace.x_final.assign(x0.begin(), x0.end());
  report.delay_source = std::string(delay_law_name(mode.schedule.law));
  report.declared_tau = static_cast<double>(mode.schedule.tau_bound);
  report.updates_per_worker.assign(1, 0);
  if (cfg.empty_run()) return report;

  const DelaySchedule& sched = mode.schedule;
  require(sched.size() >= cfg.stages * cfg.inner,
          "async simulate: delay schedule shorter than S*K updates");
  sched.validate();

  const std::size_t d = p.dim();
  const BlockPartition part(d, algo == Algo::svrg ? 1 : cfg.blocks);
  Rng batch_rng = make_stream(cfg.seed, kBatchStream);
  Rng block_rng = make_stream(cfg.seed, kBlockStream);
  BatchSampler sampler(p.n(), cfg.batch, cfg.sampling);
  SimulatedMaster master(part, x0, sched.tau_bound);
  StageLog log(p, cfg, report);

  DenseVec x_tilde(x0.begin(), x0.end());
  DenseVec read_buf, u, next(d);
  std::vector<std::uint32_t> lags;
  double elapsed = 0.0;
  for (std::size_t s = 1; s <= cfg.stages; ++s) {
    const auto t0 = Clock::now();
    const VRAnchor anchor = make_anchor(p.loss(), p.data(), x_tilde, mode.gradient_workers);
    master.reset(x_tilde);
    StageAverager avg(part, x_tilde);
    const auto t_inner = Clock::now();
    for (std::size_t k = 0; k < cfg.inner; ++k) {
      const std::size_t g = (s - 1) * cfg.inner + k;
      const std::size_t tau = std::min<std::size_t>(sched.taus[g], k);
      const auto batch = sampler.next(batch_rng);
      const std::size_t j = algo == Algo::svrg ? 0 : uniform_index(block_rng, part.blocks());
      const BlockRange r = part.block(j);

      std::span<const double> x_read = master.current();
      if (tau > 0) {
        if (algo == Algo::svrg) {
          read_buf = master.read_consistent(tau);
        } else {
          lags.clear();
          if (!sched.applied_lags.empty()) {
            for (std::uint32_t lag : sched.applied_lags[g]) {
              if (lag <= tau) lags.push_back(lag);
            }
          }
          read_buf = master.read_inconsistent(tau, lags);
        }
        x_read = read_buf;
      }
      u.resize(r.size());
      vr_gradient_block(p.loss(), p.data(), batch, x_read, anchor, r, u);

      const std::span<const double> cur = master.current();
      avg.on_commit(j, cur, k);
      const std::span<double> out = std::span<double>(next).subspan(0, r.size());
      prox_gradient_step(cur.subspan(r.begin, r.size()), u, cfg.eta, p.reg(), out);
      master.commit_block(j, out);

      log.add(tau, batch_cost(p.data(), batch));
      if (mode.record_commits) {
        report.commits.push_back({s, k, 0, algo == Algo::svrg ? -1 : static_cast<std::ptrdiff_t>(j),
                                  tau, u});
      }
      if (cfg.on_update) {
        cfg.on_update({s, k, algo == Algo::svrg ? -1 : static_cast<std::ptrdiff_t>(j),
                       master.current()});
      }
    }
    report.inner_seconds += seconds_since(t_inner);
    report.updates_per_worker[0] += cfg.inner;
    const std::span<const double> x_end = master.current();
    x_tilde = cfg.last_iterate ? DenseVec(x_end.begin(), x_end.end()) : avg.finish(x_end, cfg.inner);
    elapsed += seconds_since(t0);
    if (log.close_stage(s, x_tilde, elapsed)) break;
  }
  log.finish();
  report.trace.x_final = std::move(x_tilde);
  return report;
}

// ---------------------------------------------------------------------------
// Threads mode

struct WorkerResult {
  std::vector<Observation> obs;
  std::vector<CommitRecord> commits;
  std::size_t updates = 0;
};

// Whole-vector atomic master for consistent reads.
struct ConsistentMaster {
  std::mutex mu;
  DenseVec x;
  DenseVec next;
  std::size_t clock = 0;
};

// Block-atomic master for inconsistent reads. Every access to block c of x,
// including the stage averager's view of it, happens under locks[c] (or under
// `whole` when whole_vector_lock is set).
struct BlockMaster {
  explicit BlockMaster(std::size_t blocks) : locks(blocks) {}
  std::vector<std::mutex> locks;
  std::mutex whole;
  DenseVec x;
  std::atomic<std::size_t> clock{0};
};

void svrg_worker(const Problem& p, const SolverConfig& cfg, const VRAnchor& anchor,
                 ConsistentMaster& m, StageAverager& avg, std::atomic<std::size_t>& tickets,
                 std::size_t stage, std::size_t worker, std::size_t workers, bool record,
                 WorkerResult& out) {
  const std::size_t d = p.dim();
  Rng rng = make_stream(cfg.seed, kBatchStream, 1 + (stage - 1) * workers + worker);
  BatchSampler sampler(p.n(), cfg.batch, cfg.sampling);
  DenseVec local(d), u(d);
  while (tickets.fetch_add(1, std::memory_order_relaxed) < cfg.inner) {
    const auto batch = sampler.next(rng);
    std::size_t pulled;
    {
      std::lock_guard lock(m.mu);
      std::copy(m.x.begin(), m.x.end(), local.begin());
      pulled = m.clock;
    }
    vr_gradient_block(p.loss(), p.data(), batch, local, anchor, {0, d}, u);
    std::size_t k, delay;
    {
      std::lock_guard lock(m.mu);
      k = m.clock;
      delay = k - pulled;
      avg.on_commit(0, m.x, k);
      prox_gradient_step(m.x, u, cfg.eta, p.reg(), m.next);
      m.x.swap(m.next);
      ++m.clock;
    }
    out.obs.push_back({delay, batch_cost(p.data(), batch)});
    ++out.updates;
    if (record) out.commits.push_back({stage, k, worker, -1, delay, u});
  }
}

void svrcd_worker(const Problem& p, const SolverConfig& cfg, const VRAnchor& anchor,
                  const BlockPartition& part, BlockMaster& m, StageAverager& avg,
                  std::atomic<std::size_t>& tickets, std::size_t stage, std::size_t worker,
                  std::size_t workers, const ThreadsMode& mode, WorkerResult& out) {
  const std::size_t d = p.dim();
  const std::uint64_t sub = 1 + (stage - 1) * workers + worker;
  Rng batch_rng = make_stream(cfg.seed, kBatchStream, sub);
  Rng block_rng = make_stream(cfg.seed, kBlockStream, sub);
  BatchSampler sampler(p.n(), cfg.batch, cfg.sampling);
  DenseVec local(d), u;
  while (tickets.fetch_add(1, std::memory_order_relaxed) < cfg.inner) {
    const auto batch = sampler.next(batch_rng);
    const std::size_t j = uniform_index(block_rng, part.blocks());
    const BlockRange r = part.block(j);

    std::size_t pulled;
    if (mode.whole_vector_lock) {
      std::lock_guard lock(m.whole);
      pulled = m.clock.load(std::memory_order_relaxed);
      std::copy(m.x.begin(), m.x.end(), local.begin());
    } else {
      pulled = m.clock.load(std::memory_order_acquire);
      for (std::size_t c = 0; c < part.blocks(); ++c) {
        const BlockRange rc = part.block(c);
        std::lock_guard lock(m.locks[c]);
        std::copy(m.x.begin() + static_cast<std::ptrdiff_t>(rc.begin),
                  m.x.begin() + static_cast<std::ptrdiff_t>(rc.end),
                  local.begin() + static_cast<std::ptrdiff_t>(rc.begin));
      }
    }
    u.resize(r.size());
    vr_gradient_block(p.loss(), p.data(), batch, local, anchor, r, u);

    std::size_t k, delay;
    {
      std::unique_lock lock = mode.whole_vector_lock ? std::unique_lock(m.whole)
                                                     : std::unique_lock(m.locks[j]);
      k = m.clock.fetch_add(1, std::memory_order_acq_rel);
      delay = k - pulled;
      avg.on_commit(j, m.x, k);
      const std::span<double> xb = std::span<double>(m.x).subspan(r.begin, r.size());
      prox_gradient_step(xb, u, cfg.eta, p.reg(), xb);
    }
    out.obs.push_back({delay, batch_cost(p.data(), batch)});
    ++out.updates;
    if (mode.record_commits) {
      out.commits.push_back({stage, k, worker, static_cast<std::ptrdiff_t>(j), delay, u});
    }
  }
}

AsyncReport run_threads(Algo algo, const Problem& p, const SolverConfig& cfg,
                        std::span<const double> x0, const ThreadsMode& mode) {
  require(mode.workers >= 1, "async threads: need at least one worker");
  AsyncReport report;
  report.trace.x_final.assign(x0.begin(), x0.end());
  report.delay_source = "measured";
  report.declared_tau = mode.declared_tau;
  report.updates_per_worker.assign(mode.workers, 0);
  if (cfg.empty_run()) return report;

  const std::size_t d = p.dim();
  const std::size_t P = mode.workers;
  const BlockPartition part(d, algo == Algo::svrg ? 1 : cfg.blocks);
  StageLog log(p, cfg, report);
  DenseVec x_tilde(x0.begin(), x0.end());
  double elapsed = 0.0;

  for (std::size_t s = 1; s <= cfg.stages; ++s) {
    const auto t0 = Clock::now();
    const VRAnchor anchor = make_anchor(p.loss(), p.data(), x_tilde, P);
    StageAverager avg(part, x_tilde);
    std::atomic<std::size_t> tickets{0};
    std::vector<WorkerResult> results(P);
    DenseVec x_end;

    const auto t_inner = Clock::now();
    if (algo == Algo::svrg) {
      ConsistentMaster m;
      m.x = x_tilde;
      m.next.resize(d);
      {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < P; ++w) {
          pool.emplace_back([&, w] {
            svrg_worker(p, cfg, anchor, m, avg, tickets, s, w, P, mode.record_commits, results[w]);
          });
        }
      }
      x_end = std::move(m.x);
    } else {
      BlockMaster m(part.blocks());
      m.x = x_tilde;
      {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < P; ++w) {
          pool.emplace_back([&, w] {
            svrcd_worker(p, cfg, anchor, part, m, avg, tickets, s, w, P, mode, results[w]);
          });
        }
      }
      x_end = std::move(m.x);
    }
    report.inner_seconds += seconds_since(t_inner);

    std::vector<CommitRecord> stage_commits;
    for (std::size_t w = 0; w < P; ++w) {
      log.add_all(results[w].obs);
      report.updates_per_worker[w] += results[w].updates;
      for (CommitRecord& c : results[w].commits) stage_commits.push_back(std::move(c));
    }
    std::sort(stage_commits.begin(), stage_commits.end(),
              [](const CommitRecord& a, const CommitRecord& b) { return a.clock < b.clock; });
    for (CommitRecord& c : stage_commits) report.commits.push_back(std::move(c));

    x_tilde = cfg.last_iterate ? x_end : avg.finish(x_end, cfg.inner);
    elapsed += seconds_since(t0);
    if (log.close_stage(s, x_tilde, elapsed)) break;
  }
  log.finish();
  report.trace.x_final = std::move(x_tilde);
  return report;
}

AsyncReport run(Algo algo, const Problem& p, const SolverConfig& cfg, std::span<const double> x0,
                const ExecutionMode& mode) {
  cfg.validate(p);
  require(x0.size() == p.dim(), "async: x0 has the wrong dimension");
  if (const auto* sim = std::get_if<SimulateMode>(&mode)) {
    return run_simulated(algo, p, cfg, x0, *sim);
  }
  return run_threads(algo, p, cfg, x0, std::get<ThreadsMode>(mode));
}

}  // namespace

AsyncReport async_svrg_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0,
                           const ExecutionMode& mode) {
  return run(Algo::svrg, p, cfg, x0, mode);
}

AsyncReport async_svrcd_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0,
                            const ExecutionMode& mode) {
  return run(Algo::svrcd, p, cfg, x0, mode);
}

}  // namespace aprox
