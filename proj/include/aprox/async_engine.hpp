#pragma once

// Asynchronous ProxSVRG (consistent read, whole-vector atomic commits) and
// ProxSVRCD (inconsistent read, block-atomic commits).
//
// Two execution modes:
//  * simulate: one logical thread replays a DelaySchedule against a master
//    that keeps a bounded history of commits, so every delayed read is exact
//    and runs are fully deterministic;
//  * threads: P worker threads pull, compute and push against a shared master
//    that applies the proximal update. Delays are measured from clock stamps.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "aprox/linalg.hpp"
#include "aprox/problem.hpp"
#include "aprox/seq_solvers.hpp"

namespace aprox {

enum class ReadMode { consistent, inconsistent };

enum class DelayLaw { constant, uniform };

std::string_view delay_law_name(DelayLaw law) noexcept;

// Each pending update is applied to the read independently with probability p.
struct SubsetRule {
  double p = 0.5;
};

// Per-update delays tau_k and, for inconsistent reads, the applied subset J(k)
// stored as lags: lag l in J(k) stands for update h = k - l, 1 <= l <= tau_k.
struct DelaySchedule {
  std::vector<std::uint32_t> taus;
  std::vector<std::vector<std::uint32_t>> applied_lags;  // empty, or one sorted list per update
  std::size_t tau_bound = 0;
  DelayLaw law = DelayLaw::constant;

  std::size_t size() const noexcept { return taus.size(); }

  // Throws ContractError if an entry breaks tau_k <= tau_bound, tau_k <= position
  // within its stage (stage_length 0 means one stage), or lag range.
  void validate(std::size_t stage_length = 0) const;

  // tau_k = 0 everywhere.
  static DelaySchedule zero(std::size_t length);
};

// i.i.d. delays under `law`, clipped so no read reaches before the start of its
// stage. Applied subsets are drawn with `rule` from an independent stream.
DelaySchedule sample_delay_schedule(DelayLaw law, std::size_t tau, std::size_t length,
                                    std::uint64_t seed, SubsetRule rule = {},
                                    std::size_t stage_length = 0);

// Master state for simulate mode. The clock counts commits since the last
// reset(); the last `history_depth` commits are retained with the block values
// they replaced and wrote.
class SimulatedMaster {
 public:
  SimulatedMaster(BlockPartition partition, std::span<const double> x0, std::size_t history_depth);

  void reset(std::span<const double> x0);

  std::size_t clock() const noexcept { return clock_; }
  std::span<const double> current() const noexcept { return x_; }
  const BlockPartition& partition() const noexcept { return partition_; }
  std::size_t history_depth() const noexcept { return depth_; }

  // x_{k - tau}, as one snapshot.
  DenseVec read_consistent(std::size_t tau) const;

  // x_{k - tau} + sum_{h in J} (x_{h+1} - x_h), with J given as lags (see
  // DelaySchedule). Blocks whose pending updates are all applied come back
  // bitwise equal to the current iterate.
  DenseVec read_inconsistent(std::size_t tau, std::span<const std::uint32_t> applied_lags) const;

  void commit_block(std::size_t j, std::span<const double> values);
  void commit_full(std::span<const double> values);

 private:
  struct Commit {
    BlockRange range;
    DenseVec before;
    DenseVec after;
  };

  void commit_range(BlockRange r, std::span<const double> values);
  void undo_into(std::size_t tau, DenseVec& out) const;

  BlockPartition partition_;
  DenseVec x_;
  std::size_t clock_ = 0;
  std::size_t depth_;
  std::deque<Commit> history_;  // oldest first
};

struct SimulateMode {
  DelaySchedule schedule;
  std::size_t gradient_workers = 1;
  bool record_commits = false;
};

struct ThreadsMode {
  std::size_t workers = 1;
  // Delay bound the step size was chosen for; the report flags runs whose mean
  // observed delay exceeds it.
  std::optional<double> declared_tau;
  bool record_commits = false;
  // ProxSVRCD only: serialize pulls and commits on one whole-vector lock
  // instead of per-block locks (comparison baseline).
  bool whole_vector_lock = false;
};

using ExecutionMode = std::variant<SimulateMode, ThreadsMode>;

struct CommitRecord {
  std::size_t stage = 0;
  std::size_t clock = 0;  // commit index within the stage
  std::size_t worker = 0;
  std::ptrdiff_t block = -1;
  std::size_t delay = 0;
  DenseVec pushed;  // the pushed gradient block, for replay checks
};

// One line per commit: "clock,worker_id,block_id_or_-1,delay".
void write_commit_log(std::ostream& os, std::span<const CommitRecord> commits);

struct DelayStats {
  double mean = 0.0;
  std::size_t max = 0;
  std::vector<std::size_t> histogram;  // histogram[t] = commits observed with delay t
  // Pearson correlation between delay and mini-batch nonzero count (0 if undefined).
  double batch_cost_correlation = 0.0;
};

struct AsyncReport {
  RunTrace trace;
  DelayStats delays;
  std::vector<std::size_t> updates_per_worker;
  std::string delay_source;  // "constant", "uniform" or "measured"
  std::optional<double> declared_tau;
  bool exceeded_declared_tau = false;
  double inner_seconds = 0.0;  // time spent in inner-update phases
  std::size_t total_updates = 0;
  std::vector<CommitRecord> commits;
};

AsyncReport async_svrg_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0,
                           const ExecutionMode& mode);
AsyncReport async_svrcd_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0,
                            const ExecutionMode& mode);

}  // namespace aprox
