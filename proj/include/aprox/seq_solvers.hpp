#pragma once

// Sequential reference solvers: ProxSGD, ProxSCD, ProxSVRG and ProxSVRCD.
// The asynchronous engine reduces to these bit-for-bit at zero delay.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aprox/linalg.hpp"
#include "aprox/problem.hpp"
#include "aprox/sampling.hpp"

namespace aprox {

// eta_k = eta0 * sqrt(sigma0 / (k + sigma0))
struct EtaDecay {
  double eta0 = 0.1;
  double sigma0 = 1.0;
};

// Stop after the first stage whose objective is below p_star + tol.
struct StopRule {
  double p_star = 0.0;
  double tol = 1e-10;
};

struct UpdateEvent {
  std::size_t stage = 0;   // 1-based
  std::size_t update = 0;  // 0-based index within the stage
  std::ptrdiff_t block = -1;  // -1 for whole-vector updates
  std::span<const double> x;  // iterate after the update
};

using UpdateHook = std::function<void(const UpdateEvent&)>;

struct SolverConfig {
  double eta = 0.1;
  std::size_t batch = 1;   // B
  std::size_t inner = 1;   // K
  std::size_t stages = 1;  // S, an upper bound when a StopRule is set
  std::size_t blocks = 1;  // m, coordinate methods only
  std::optional<EtaDecay> eta_decay;  // ProxSGD only
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::with_replacement;
  // Next stage starts from the last inner iterate instead of the mean.
  bool last_iterate = false;
  // Threads used for margin evaluation in full-gradient phases.
  std::size_t gradient_workers = 1;
  std::optional<StopRule> stop;
  bool keep_stage_iterates = false;
  // Called after every committed update in sequential and simulated runs.
  UpdateHook on_update;

  void validate(const Problem& p) const;
  bool empty_run() const noexcept { return stages == 0 || inner == 0; }
};

struct StageRecord {
  std::size_t stage = 0;  // 1-based
  double objective = 0.0;
  double seconds = 0.0;  // cumulative solver time, excluding objective evaluation
  std::size_t updates = 0;
  double mean_delay = 0.0;
  std::size_t max_delay = 0;
};

struct RunTrace {
  std::vector<StageRecord> stages;
  std::vector<DenseVec> stage_iterates;  // filled when keep_stage_iterates
  DenseVec x_final;
  bool stopped_early = false;
};

// Running sum of the inner iterates x_1..x_K of one stage, kept per block.
// A block's contribution is flushed only when that block changes, so a commit
// costs O(block size) rather than O(d). Per-block state is independent; callers
// serialize commits to the same block.
class StageAverager {
 public:
  StageAverager(const BlockPartition& p, std::span<const double> x0);

  // Call before commit `k` (0-based, producing x_{k+1}) overwrites block j of x.
  void on_commit(std::size_t j, std::span<const double> x, std::size_t k);

  // Mean of x_1..x_K given the final iterate x = x_K.
  DenseVec finish(std::span<const double> x, std::size_t inner);

 private:
  void flush(std::size_t j, std::span<const double> x, std::size_t count);

  BlockPartition partition_;
  DenseVec sum_;
  std::vector<std::size_t> pending_from_;  // first iterate index not yet in sum_
};

RunTrace prox_sgd_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0);
RunTrace prox_scd_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0);
RunTrace prox_svrg_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0);
RunTrace prox_svrcd_run(const Problem& p, const SolverConfig& cfg, std::span<const double> x0);

// Full-data gradient restricted to `range`: out = [grad F(x)]_range.
void partial_full_grad(const Problem& p, std::span<const double> x, BlockRange range,
                       std::span<double> out);

}  // namespace aprox
