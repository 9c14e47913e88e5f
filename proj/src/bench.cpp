#include "aprox/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "aprox/data_io.hpp"
#include "aprox/errors.hpp"
#include "aprox/theory.hpp"

namespace aprox {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Suboptimality below this is a reference-optimum failure, not rounding.
constexpr double kNegativeFloor = -1e-12;

std::size_t resolve_blocks(const ExperimentConfig& cfg, std::size_t n, std::size_t d) {
  if (!uses_blocks(cfg.algorithm)) return 1;
  return std::clamp<std::size_t>(resolve_size(cfg.m, n, d, 1), 1, d);
}

SolverConfig solver_config(const ExperimentConfig& cfg, std::size_t inner, std::size_t blocks,
                           double p_star, double tol) {
  SolverConfig sc;
  sc.eta = cfg.eta;
  sc.batch = cfg.B;
  sc.inner = inner;
  sc.stages = cfg.max_stages;
  sc.blocks = blocks;
  sc.eta_decay = cfg.eta_decay;
  sc.seed = cfg.seed;
  sc.sampling = cfg.sampling;
  sc.last_iterate = cfg.last_iterate;
  sc.gradient_workers = cfg.gradient_workers;
  sc.stop = StopRule{p_star, tol};
  return sc;
}

struct RunOutput {
  RunTrace trace;
  std::optional<AsyncReport> report;
};

RunOutput dispatch(const ExperimentConfig& cfg, const Problem& p, const SolverConfig& sc,
                   std::size_t workers) {
  const DenseVec x0(p.dim(), 0.0);
  RunOutput out;
  switch (cfg.algorithm) {
    case Algorithm::prox_sgd: out.trace = prox_sgd_run(p, sc, x0); return out;
    case Algorithm::prox_scd: out.trace = prox_scd_run(p, sc, x0); return out;
    case Algorithm::prox_svrg: out.trace = prox_svrg_run(p, sc, x0); return out;
    case Algorithm::prox_svrcd: out.trace = prox_svrcd_run(p, sc, x0); return out;
    case Algorithm::async_svrg:
    case Algorithm::async_svrcd: break;
  }
  ExecutionMode mode;
  if (cfg.mode == RunMode::simulate) {
    SimulateMode sim;
    sim.schedule = sample_delay_schedule(cfg.delay_law, cfg.tau, sc.stages * sc.inner, cfg.seed,
                                         SubsetRule{cfg.subset_p}, sc.inner);
    sim.gradient_workers = cfg.gradient_workers;
    mode = std::move(sim);
  } else {
    ThreadsMode th;
    th.workers = workers;
    if (cfg.tau > 0) th.declared_tau = static_cast<double>(cfg.tau);
    th.whole_vector_lock = cfg.whole_vector_lock;
    mode = th;
  }
  out.report = cfg.algorithm == Algorithm::async_svrg ? async_svrg_run(p, sc, x0, mode)
                                                      : async_svrcd_run(p, sc, x0, mode);
  out.trace = out.report->trace;
  return out;
}

}  // namespace

std::shared_ptr<const Dataset> load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.starts_with("synth:")) {
    return std::make_shared<const Dataset>(synth_dataset(parse_synth_spec(cfg.dataset)));
  }
  Dataset raw = read_libsvm(cfg.dataset);
  if (!cfg.normalize) return std::make_shared<const Dataset>(std::move(raw));
  return std::make_shared<const Dataset>(normalize_rows(raw).data);
}

Problem make_problem(const ExperimentConfig& cfg, std::shared_ptr<const Dataset> data) {
  const Regularizer named = named_dataset_defaults(cfg.dataset).value_or(Regularizer{});
  const Regularizer reg{cfg.lambda1.value_or(named.l1), cfg.lambda2.value_or(named.l2)};
  return Problem(std::move(data), cfg.loss, reg);
}

ReferenceOptimum compute_reference_optimum(const Problem& p, const ReferenceOptions& opts) {
  require(opts.ref_tol > 0.0, "compute_reference_optimum: ref_tol must be positive");
  const double L = theory::estimate_lipschitz(p.data(), p.loss()).L + p.reg().l2;
  require(L > 0.0, "compute_reference_optimum: degenerate problem (L = 0)");

  SolverConfig sc;
  sc.eta = 0.1 / L;
  sc.batch = 1;
  sc.inner = std::max<std::size_t>(2 * p.n(), 100);
  sc.stages = 1;
  sc.last_iterate = true;
  sc.gradient_workers = opts.workers;
  const double map_eta = 1.0 / L;

  ReferenceOptimum best;
  best.x_star.assign(p.dim(), 0.0);
  best.certificate = prox_gradient_mapping_norm(p, best.x_star, map_eta, opts.workers);
  DenseVec x = best.x_star;
  for (std::size_t s = 1; s <= opts.max_stages && best.certificate >= opts.ref_tol; ++s) {
    sc.seed = opts.seed + s;
    x = prox_svrg_run(p, sc, x).x_final;
    const double cert = prox_gradient_mapping_norm(p, x, map_eta, opts.workers);
    if (cert < best.certificate) {
      best.x_star = x;
      best.certificate = cert;
    }
    best.stages = s;
  }
  if (best.certificate >= opts.ref_tol) {
    throw ConvergenceError("reference optimum: mapping norm " + fmt(best.certificate) +
                               " above ref_tol after " + std::to_string(best.stages) + " stages",
                           best.certificate);
  }
  best.p_star = objective_value(p, best.x_star);
  return best;
}

TheoryVerdict theory_verdict(const ExperimentConfig& cfg, const Problem& p, std::size_t inner,
                             std::size_t blocks) {
  TheoryVerdict v;
  switch (cfg.algorithm) {
    case Algorithm::prox_svrg:
    case Algorithm::async_svrg: v.method = "svrg"; break;
    case Algorithm::prox_svrcd:
    case Algorithm::async_svrcd: v.method = "svrcd"; break;
    default: v.method = "none"; break;
  }
  const theory::Lipschitz lip = theory::estimate_lipschitz(p.data(), p.loss());
  v.L = cfg.L.value_or(lip.L);
  v.T = cfg.T.value_or(lip.T);
  v.mu = cfg.mu.value_or(p.reg().l2);
  v.Delta = theory::data_sparsity(p.data()).delta;
  if (cfg.mode == RunMode::simulate) {
    v.tau = static_cast<double>(cfg.tau);
  } else if (cfg.mode == RunMode::threads) {
    v.tau = cfg.tau > 0 ? static_cast<double>(cfg.tau) : static_cast<double>(cfg.workers - 1);
  }
  v.B = static_cast<double>(cfg.B);
  v.K = static_cast<double>(inner);
  v.m = static_cast<double>(blocks);
  v.eta = cfg.eta;
  v.n = static_cast<double>(p.n());
  if (v.method == "none") {
    v.speedup = "n/a";
    return v;
  }

  theory::ProblemConstants c;
  c.mu = v.mu;
  c.L = v.L;
  c.T = v.T;
  c.Delta = v.Delta > 0.0 ? v.Delta : 1.0;
  c.tau = v.tau;
  c.B = v.B;
  c.K = v.K;
  c.m = v.m;
  c.eta = v.eta;
  c.n = v.n;
  try {
    c.validate();
  } catch (const ContractError& e) {
    v.speedup = std::string("invalid constants: ") + e.what();
    return v;
  }
  const bool svrg = v.method == "svrg";
  v.admissible = svrg ? theory::svrg_stepsize_admissible(c) : theory::svrcd_stepsize_admissible(c);
  try {
    v.rho = svrg ? theory::svrg_rate(c) : theory::svrcd_rate(c);
  } catch (const DomainError&) {
    v.rho.reset();
  }
  const theory::SpeedupVerdict sv =
      svrg ? theory::svrg_speedup_condition(c) : theory::svrcd_speedup_condition(c);
  v.speedup = std::string(theory::speedup_name(sv.kind));
  v.speedup_factor = sv.factor;
  return v;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Problem& p, double p_star) {
  cfg.validate();
  ExperimentResult res;
  res.p_star = p_star;
  res.blocks = resolve_blocks(cfg, p.n(), p.dim());
  res.inner = resolve_size(cfg.K, p.n(), p.dim(), res.blocks);
  res.theory = theory_verdict(cfg, p, res.inner, res.blocks);
  if (res.theory.method != "none" && !res.theory.admissible) {
    std::clog << "[aprox] warning: step size " << cfg.eta
              << " is outside the admissible range for this configuration\n";
  }

  const SolverConfig sc = solver_config(cfg, res.inner, res.blocks, p_star, cfg.stop_tol);
  const RunOutput out = dispatch(cfg, p, sc, cfg.workers);
  if (out.report) res.delays = out.report->delays;

  for (const StageRecord& s : out.trace.stages) {
    const double sub = s.objective - p_star;
    if (sub < kNegativeFloor) {
      throw DomainError("stage " + std::to_string(s.stage) + " suboptimality " + fmt(sub) +
                        " is below -1e-12; the reference optimum is too loose");
    }
    res.rows.push_back({s.stage, sub, s.seconds, s.updates, s.mean_delay});
  }
  res.reached_tol = out.trace.stopped_early;
  res.x_final = out.trace.x_final;
  return res;
}

void write_stage_csv(std::ostream& os, const std::vector<StageRow>& rows) {
  os << "stage,suboptimality,seconds,updates,observed_mean_delay\n";
  for (const StageRow& r : rows) {
    os << r.stage << ',' << fmt(r.suboptimality) << ',' << fmt(r.seconds) << ',' << r.updates
       << ',' << fmt(r.observed_mean_delay) << '\n';
  }
}

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
  using nlohmann::json;
  json j;
  j["dataset"] = cfg.dataset;
  j["algorithm"] = algorithm_name(cfg.algorithm);
  j["mode"] = run_mode_name(cfg.mode);
  j["seed"] = cfg.seed;
  j["eta"] = cfg.eta;
  j["B"] = cfg.B;
  j["K"] = res.inner;
  j["m"] = res.blocks;
  j["stop_tol"] = cfg.stop_tol;
  j["p_star"] = res.p_star;
  j["stages_used"] = res.rows.size();
  j["final_suboptimality"] = res.rows.empty() ? json(nullptr) : json(res.rows.back().suboptimality);
  j["reached_tol"] = res.reached_tol;

  const TheoryVerdict& t = res.theory;
  json th;
  th["method"] = t.method;
  th["mu"] = t.mu;
  th["L"] = t.L;
  th["T"] = t.T;
  th["Delta"] = t.Delta;
  th["tau"] = t.tau;
  th["admissible"] = t.method == "none" ? json("n/a") : json(t.admissible);
  th["rho"] = t.rho ? json(*t.rho) : json(nullptr);
  th["speedup"] = t.speedup;
  th["speedup_factor"] = t.speedup_factor;
  j["theory"] = th;

  if (res.delays) {
    j["delays"] = {{"mean", res.delays->mean},
                   {"max", res.delays->max},
                   {"histogram", res.delays->histogram},
                   {"batch_cost_correlation", res.delays->batch_cost_correlation}};
  }
  return j.dump(2);
}

SpeedupReport speedup_report(const ExperimentConfig& cfg, const Problem& p, double p_star,
                             const std::vector<std::size_t>& worker_counts) {
  require(is_async(cfg.algorithm), "speedup: needs an async algorithm");
  require(!worker_counts.empty(), "speedup: empty worker list");
  ExperimentConfig tcfg = cfg;
  tcfg.mode = RunMode::threads;
  tcfg.validate();
  const std::size_t blocks = resolve_blocks(tcfg, p.n(), p.dim());
  const std::size_t inner = resolve_size(tcfg.K, p.n(), p.dim(), blocks);
  const SolverConfig sc = solver_config(tcfg, inner, blocks, p_star, tcfg.speedup_target);

  SpeedupReport rep;
  std::optional<double> base;
  for (std::size_t P : worker_counts) {
    require(P >= 1, "speedup: worker counts must be at least 1");
    const RunOutput out = dispatch(tcfg, p, sc, P);
    const AsyncReport& r = *out.report;
    SpeedupRow row;
    row.P = P;
    row.dnf = !r.trace.stopped_early;
    row.seconds = r.trace.stages.empty() ? 0.0 : r.trace.stages.back().seconds;
    row.updates_per_sec =
        r.inner_seconds > 0.0 ? static_cast<double>(r.total_updates) / r.inner_seconds : 0.0;
    row.observed_mean_delay = r.delays.mean;
    row.observed_max_delay = r.delays.max;
    if (P == 1 && !row.dnf) base = row.seconds;
    rep.rows.push_back(row);
  }
  for (SpeedupRow& row : rep.rows) {
    if (row.P == 1 && !row.dnf) {
      row.speedup_vs_P1 = 1.0;
    } else if (base && !row.dnf && row.seconds > 0.0) {
      row.speedup_vs_P1 = *base / row.seconds;
    }
  }

  ExperimentConfig seq = tcfg;
  seq.algorithm = cfg.algorithm == Algorithm::async_svrg ? Algorithm::prox_svrg
                                                          : Algorithm::prox_svrcd;
  seq.mode = RunMode::sequential;
  const RunOutput s = dispatch(seq, p, sc, 1);
  if (s.trace.stopped_early && !s.trace.stages.empty()) {
    rep.sequential_seconds = s.trace.stages.back().seconds;
  }
  return rep;
}

void write_speedup_csv(std::ostream& os, const SpeedupReport& rep) {
  os << "P,seconds,updates_per_sec,speedup_vs_P1,observed_mean_delay,observed_max_delay\n";
  for (const SpeedupRow& r : rep.rows) {
    os << r.P << ',' << (r.dnf ? std::string("DNF") : fmt(r.seconds)) << ','
       << fmt(r.updates_per_sec) << ',' << (r.dnf ? std::string("DNF") : fmt(r.speedup_vs_P1))
       << ',' << fmt(r.observed_mean_delay) << ',' << r.observed_max_delay << '\n';
  }
}

}  // namespace aprox
