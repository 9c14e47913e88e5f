#pragma once

// Experiment driver: configuration, reference optimum, suboptimality traces
// and worker-count speedup measurements.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aprox/async_engine.hpp"
#include "aprox/problem.hpp"
#include "aprox/seq_solvers.hpp"

namespace aprox {

enum class Algorithm { prox_sgd, prox_scd, prox_svrg, prox_svrcd, async_svrg, async_svrcd };
enum class RunMode { sequential, simulate, threads };

std::string_view algorithm_name(Algorithm a) noexcept;
std::string_view run_mode_name(RunMode m) noexcept;
bool is_async(Algorithm a) noexcept;
bool uses_blocks(Algorithm a) noexcept;

struct ExperimentConfig {
  std::string dataset;  // LIBSVM path, or "synth:n=..,d=..,delta=..,labels=..,seed=.."
  bool normalize = true;
  LossKind loss = LossKind::logistic;
  std::optional<double> lambda1;  // unset: dataset default, else 0
  std::optional<double> lambda2;

  Algorithm algorithm = Algorithm::prox_svrg;
  double eta = 0.04;
  std::size_t B = 1;
  // Size expressions: an integer, "<c>n", "<c>nm" or "d/<c>".
  std::string K = "2n";
  std::string m = "1";
  std::size_t max_stages = 50;
  std::optional<EtaDecay> eta_decay;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::with_replacement;
  bool last_iterate = false;
  std::size_t gradient_workers = 1;

  RunMode mode = RunMode::sequential;
  DelayLaw delay_law = DelayLaw::uniform;
  std::size_t tau = 0;
  double subset_p = 0.5;
  std::size_t workers = 1;
  bool whole_vector_lock = false;

  double stop_tol = 1e-10;
  double ref_tol = 1e-12;
  std::size_t ref_max_stages = 400;
  std::optional<double> p_star;  // skips the reference computation when set
  double speedup_target = 1e-4;

  // Theory constants; unset means mu = lambda2, L and T from the data.
  std::optional<double> mu;
  std::optional<double> L;
  std::optional<double> T;

  std::string csv;      // empty: stdout
  std::string summary;  // empty: no summary file
  bool require_admissible = false;

  // Throws ContractError on bad combinations (stop_tol <= 0, async mode with a
  // sequential algorithm, ...).
  void validate() const;
};

// Applies one `key=value` setting. Unknown keys and malformed values throw
// ContractError naming the key.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// Flat text: one `key = value` per line, '#' comments, blank lines ignored.
// ParseError carries the line number.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path);

// Each override is "key=value"; later ones win.
void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& overrides);

std::size_t resolve_size(std::string_view expr, std::size_t n, std::size_t d, std::size_t m);

// lambda1, lambda2 used for named benchmark datasets when the config leaves them unset.
std::optional<Regularizer> named_dataset_defaults(std::string_view dataset);

std::shared_ptr<const Dataset> load_dataset(const ExperimentConfig& cfg);
Problem make_problem(const ExperimentConfig& cfg, std::shared_ptr<const Dataset> data);

struct ReferenceOptimum {
  DenseVec x_star;
  double p_star = 0.0;
  double certificate = 0.0;  // prox-gradient mapping norm at x_star
  std::size_t stages = 0;
};

struct ReferenceOptions {
  double ref_tol = 1e-12;
  std::size_t max_stages = 400;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

// Sequential ProxSVRG with a small step, one stage at a time, until the
// prox-gradient mapping norm drops below ref_tol. Throws ConvergenceError with
// the best certificate when the stage budget runs out.
ReferenceOptimum compute_reference_optimum(const Problem& p, const ReferenceOptions& opts = {});

struct TheoryVerdict {
  std::string method;  // "svrg", "svrcd" or "none"
  double mu = 0.0, L = 0.0, T = 0.0, Delta = 0.0, tau = 0.0;
  double B = 0.0, K = 0.0, m = 0.0, eta = 0.0, n = 0.0;
  bool admissible = false;
  std::optional<double> rho;
  std::string speedup;
  double speedup_factor = 0.0;
};

struct StageRow {
  std::size_t stage = 0;
  double suboptimality = 0.0;
  double seconds = 0.0;
  std::size_t updates = 0;
  double observed_mean_delay = 0.0;
};

struct ExperimentResult {
  std::vector<StageRow> rows;
  double p_star = 0.0;
  bool reached_tol = false;
  std::size_t inner = 0;
  std::size_t blocks = 1;
  TheoryVerdict theory;
  std::optional<DelayStats> delays;
  DenseVec x_final;
};

// Runs the configured solver with the stop rule at p_star + stop_tol. Throws
// DomainError if a stage's suboptimality is below -1e-12.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Problem& p, double p_star);

TheoryVerdict theory_verdict(const ExperimentConfig& cfg, const Problem& p, std::size_t inner,
                             std::size_t blocks);

void write_stage_csv(std::ostream& os, const std::vector<StageRow>& rows);
std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& res);

struct SpeedupRow {
  std::size_t P = 1;
  bool dnf = false;
  double seconds = 0.0;
  double updates_per_sec = 0.0;
  double speedup_vs_P1 = 0.0;
  double observed_mean_delay = 0.0;
  std::size_t observed_max_delay = 0;
};

struct SpeedupReport {
  std::vector<SpeedupRow> rows;
  // Sequential solver time to the same target; a second baseline.
  std::optional<double> sequential_seconds;
};

// Threads-mode runs to p_star + cfg.speedup_target for each worker count.
// speedup_vs_P1 compares wall-clock against the P = 1 row (0 when either is DNF).
SpeedupReport speedup_report(const ExperimentConfig& cfg, const Problem& p, double p_star,
                             const std::vector<std::size_t>& worker_counts);

void write_speedup_csv(std::ostream& os, const SpeedupReport& rep);

}  // namespace aprox
