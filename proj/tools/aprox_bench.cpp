// Command-line driver. Exit codes: 0 success, 1 usage or input error,
// 2 did-not-finish or inadmissible configuration under require_admissible.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "aprox/bench.hpp"
#include "aprox/data_io.hpp"
#include "aprox/errors.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDnf = 2;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

void add_config_args(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("config", args.path, "experiment config file")->required();
  cmd->add_option("--set", args.overrides, "override a config key (key=value), repeatable");
}

aprox::ExperimentConfig resolve_config(const ConfigArgs& args) {
  aprox::ExperimentConfig cfg = aprox::load_config(args.path);
  aprox::apply_overrides(cfg, args.overrides);
  cfg.validate();
  return cfg;
}

double reference_value(const aprox::ExperimentConfig& cfg, const aprox::Problem& p) {
  if (cfg.p_star) return *cfg.p_star;
  aprox::ReferenceOptions ro;
  ro.ref_tol = cfg.ref_tol;
  ro.max_stages = cfg.ref_max_stages;
  ro.workers = cfg.gradient_workers;
  ro.seed = cfg.seed;
  const aprox::ReferenceOptimum ref = aprox::compute_reference_optimum(p, ro);
  std::clog << "[aprox] reference P* = " << ref.p_star << " (mapping norm " << ref.certificate
            << ")\n";
  return ref.p_star;
}

// Writes through `fn` to `path`, or stdout when path is empty.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
}

int cmd_stats(const std::string& dataset, bool json, bool raw) {
  aprox::ExperimentConfig cfg;
  cfg.dataset = dataset;
  cfg.normalize = !raw;
  const auto data = aprox::load_dataset(cfg);
  const aprox::DatasetStats st = aprox::dataset_stats(*data);
  std::cout << (json ? aprox::stats_to_json(st) + "\n" : aprox::stats_to_key_value(st));
  return kOk;
}

int cmd_ref(const ConfigArgs& args) {
  const aprox::ExperimentConfig cfg = resolve_config(args);
  const aprox::Problem p = aprox::make_problem(cfg, aprox::load_dataset(cfg));
  aprox::ReferenceOptions ro;
  ro.ref_tol = cfg.ref_tol;
  ro.max_stages = cfg.ref_max_stages;
  ro.workers = cfg.gradient_workers;
  ro.seed = cfg.seed;
  try {
    const aprox::ReferenceOptimum ref = aprox::compute_reference_optimum(p, ro);
    std::cout.precision(17);
    std::cout << "p_star=" << ref.p_star << "\ncertificate=" << ref.certificate
              << "\nstages=" << ref.stages << '\n';
    return kOk;
  } catch (const aprox::ConvergenceError& e) {
    std::cerr << "DNF: " << e.what() << '\n';
    return kDnf;
  }
}

int cmd_run(const ConfigArgs& args) {
  const aprox::ExperimentConfig cfg = resolve_config(args);
  const aprox::Problem p = aprox::make_problem(cfg, aprox::load_dataset(cfg));
  double p_star;
  try {
    p_star = reference_value(cfg, p);
  } catch (const aprox::ConvergenceError& e) {
    std::cerr << "DNF: " << e.what() << '\n';
    return kDnf;
  }
  aprox::ExperimentResult res;
  try {
    res = aprox::run_experiment(cfg, p, p_star);
  } catch (const aprox::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDnf;
  }
  emit(cfg.csv, [&](std::ostream& os) { aprox::write_stage_csv(os, res.rows); });
  if (!cfg.summary.empty()) {
    emit(cfg.summary, [&](std::ostream& os) { os << aprox::summary_json(cfg, res) << '\n'; });
  }
  if (cfg.require_admissible && res.theory.method != "none" && !res.theory.admissible) {
    std::cerr << "inadmissible step size with require_admissible=1\n";
    return kDnf;
  }
  if (!res.reached_tol) {
    std::cerr << "DNF: stop_tol not reached within " << cfg.max_stages << " stages\n";
    return kDnf;
  }
  return kOk;
}

std::vector<std::size_t> parse_worker_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const unsigned long v = std::stoul(item, &used);
    if (used != item.size() || v == 0) throw aprox::ContractError("bad worker count: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw aprox::ContractError("empty worker list");
  return out;
}

int cmd_speedup(const ConfigArgs& args, const std::string& workers, const std::string& out_path) {
  aprox::ExperimentConfig cfg = resolve_config(args);
  const std::vector<std::size_t> counts = parse_worker_list(workers);
  const aprox::Problem p = aprox::make_problem(cfg, aprox::load_dataset(cfg));
  double p_star;
  try {
    p_star = reference_value(cfg, p);
  } catch (const aprox::ConvergenceError& e) {
    std::cerr << "DNF: " << e.what() << '\n';
    return kDnf;
  }
  const aprox::SpeedupReport rep = aprox::speedup_report(cfg, p, p_star, counts);
  emit(out_path, [&](std::ostream& os) { aprox::write_speedup_csv(os, rep); });
  if (rep.sequential_seconds) {
    std::clog << "[aprox] sequential baseline: " << *rep.sequential_seconds << " s\n";
  }
  for (const aprox::SpeedupRow& r : rep.rows) {
    if (r.dnf) return kDnf;
  }
  return kOk;
}

int cmd_synth(const std::string& spec, const std::string& out_path) {
  aprox::write_libsvm(out_path, aprox::synth_dataset(aprox::parse_synth_spec(spec)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous proximal variance-reduced solvers: experiment driver"};
  app.require_subcommand(1);

  std::string dataset;
  bool stats_json = false, stats_raw = false;
  auto* stats = app.add_subcommand("stats", "dataset statistics");
  stats->add_option("dataset", dataset, "LIBSVM path or synth:spec")->required();
  stats->add_flag("--json", stats_json, "JSON output");
  stats->add_flag("--raw", stats_raw, "skip row normalization");

  ConfigArgs ref_args, run_args, speed_args;
  add_config_args(app.add_subcommand("ref", "compute the reference optimum"), ref_args);
  add_config_args(app.add_subcommand("run", "run an experiment, write the stage CSV"), run_args);

  std::string workers = "1,2,4,8", speed_out;
  auto* speed = app.add_subcommand("speedup", "threads-mode speedup across worker counts");
  add_config_args(speed, speed_args);
  speed->add_option("--workers", workers, "comma-separated worker counts");
  speed->add_option("-o,--output", speed_out, "CSV path (default stdout)");

  std::string synth_spec, synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset in LIBSVM format");
  synth->add_option("spec", synth_spec, "n=..,d=..,delta=..,labels=..,seed=..")->required();
  synth->add_option("-o,--output", synth_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (app.got_subcommand("stats")) return cmd_stats(dataset, stats_json, stats_raw);
    if (app.got_subcommand("ref")) return cmd_ref(ref_args);
    if (app.got_subcommand("run")) return cmd_run(run_args);
    if (app.got_subcommand("speedup")) return cmd_speedup(speed_args, workers, speed_out);
    if (app.got_subcommand("synth")) return cmd_synth(synth_spec, synth_out);
  } catch (const aprox::ParseError& e) {
    std::cerr << "parse error (line " << e.line() << "): " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
