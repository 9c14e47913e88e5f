#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aprox/bench.hpp"
#include "aprox/errors.hpp"

namespace aprox {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ContractError("config: bad value '" + std::string(value) + "' for key '" +
                      std::string(key) + "'");
}

double to_double(std::string_view key, std::string_view v) {
  std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    bad_value(key, v);
  }
  if (used != s.size() || std::isnan(out)) bad_value(key, v);
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

template <typename E>
E pick(std::string_view key, std::string_view v,
       std::initializer_list<std::pair<std::string_view, E>> options) {
  for (const auto& [name, e] : options) {
    if (name == v) return e;
  }
  bad_value(key, v);
}

// "" -> 1, "2" -> 2, "0.5" -> 0.5
double coefficient(std::string_view s) {
  return s.empty() ? 1.0 : to_double("size expression", s);
}

}  // namespace

std::string_view algorithm_name(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::prox_sgd: return "prox_sgd";
    case Algorithm::prox_scd: return "prox_scd";
    case Algorithm::prox_svrg: return "prox_svrg";
    case Algorithm::prox_svrcd: return "prox_svrcd";
    case Algorithm::async_svrg: return "async_svrg";
    case Algorithm::async_svrcd: return "async_svrcd";
  }
  return "?";
}

std::string_view run_mode_name(RunMode m) noexcept {
  switch (m) {
    case RunMode::sequential: return "sequential";
    case RunMode::simulate: return "simulate";
    case RunMode::threads: return "threads";
  }
  return "?";
}

bool is_async(Algorithm a) noexcept {
  return a == Algorithm::async_svrg || a == Algorithm::async_svrcd;
}

bool uses_blocks(Algorithm a) noexcept {
  return a == Algorithm::prox_scd || a == Algorithm::prox_svrcd || a == Algorithm::async_svrcd;
}

void ExperimentConfig::validate() const {
  require(!dataset.empty(), "config: dataset is required");
  require(stop_tol > 0.0, "config: stop_tol must be positive");
  require(ref_tol > 0.0, "config: ref_tol must be positive");
  require(speedup_target > 0.0, "config: speedup_target must be positive");
  require(eta > 0.0, "config: eta must be positive");
  require(B >= 1, "config: B must be at least 1");
  require(workers >= 1 && gradient_workers >= 1, "config: worker counts must be at least 1");
  require(subset_p >= 0.0 && subset_p <= 1.0, "config: subset_p must be in [0, 1]");
  require(!lambda1 || *lambda1 >= 0.0, "config: lambda1 must be non-negative");
  require(!lambda2 || *lambda2 >= 0.0, "config: lambda2 must be non-negative");
  if (is_async(algorithm)) {
    require(mode != RunMode::sequential, "config: async algorithms need mode=simulate or threads");
  } else {
    require(mode == RunMode::sequential,
            "config: mode=simulate/threads is only valid for async algorithms");
  }
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "dataset") {
    cfg.dataset = std::string(value);
  } else if (key == "normalize") {
    cfg.normalize = to_bool(key, value);
  } else if (key == "loss") {
    cfg.loss = pick<LossKind>(key, value,
                              {{"logistic", LossKind::logistic},
                               {"least_squares", LossKind::least_squares}});
  } else if (key == "lambda1") {
    cfg.lambda1 = to_double(key, value);
  } else if (key == "lambda2") {
    cfg.lambda2 = to_double(key, value);
  } else if (key == "algorithm") {
    cfg.algorithm = pick<Algorithm>(key, value,
                                    {{"prox_sgd", Algorithm::prox_sgd},
                                     {"prox_scd", Algorithm::prox_scd},
                                     {"prox_svrg", Algorithm::prox_svrg},
                                     {"prox_svrcd", Algorithm::prox_svrcd},
                                     {"async_svrg", Algorithm::async_svrg},
                                     {"async_svrcd", Algorithm::async_svrcd}});
  } else if (key == "eta") {
    cfg.eta = to_double(key, value);
  } else if (key == "B") {
    cfg.B = to_uint(key, value);
  } else if (key == "K") {
    resolve_size(value, 1, 1, 1);  // syntax check only
    cfg.K = std::string(value);
  } else if (key == "m") {
    resolve_size(value, 1, 100, 1);
    cfg.m = std::string(value);
  } else if (key == "S" || key == "max_stages") {
    cfg.max_stages = to_uint(key, value);
  } else if (key == "eta_decay") {
    // "none" or "eta0:sigma0"
    if (value == "none") {
      cfg.eta_decay.reset();
    } else {
      const auto colon = value.find(':');
      if (colon == std::string_view::npos) bad_value(key, value);
      cfg.eta_decay = EtaDecay{to_double(key, value.substr(0, colon)),
                               to_double(key, value.substr(colon + 1))};
    }
  } else if (key == "seed") {
    cfg.seed = to_uint(key, value);
  } else if (key == "sampling") {
    cfg.sampling = pick<Sampling>(key, value,
                                  {{"with_replacement", Sampling::with_replacement},
                                   {"without_replacement", Sampling::without_replacement}});
  } else if (key == "last_iterate") {
    cfg.last_iterate = to_bool(key, value);
  } else if (key == "gradient_workers") {
    cfg.gradient_workers = to_uint(key, value);
  } else if (key == "mode") {
    cfg.mode = pick<RunMode>(key, value,
                             {{"sequential", RunMode::sequential},
                              {"simulate", RunMode::simulate},
                              {"threads", RunMode::threads}});
  } else if (key == "delay_law") {
    cfg.delay_law = pick<DelayLaw>(key, value,
                                   {{"constant", DelayLaw::constant},
                                    {"uniform", DelayLaw::uniform}});
  } else if (key == "tau") {
    cfg.tau = to_uint(key, value);
  } else if (key == "subset_p") {
    cfg.subset_p = to_double(key, value);
  } else if (key == "workers" || key == "P") {
    cfg.workers = to_uint(key, value);
  } else if (key == "whole_vector_lock") {
    cfg.whole_vector_lock = to_bool(key, value);
  } else if (key == "stop_tol") {
    cfg.stop_tol = to_double(key, value);
  } else if (key == "ref_tol") {
    cfg.ref_tol = to_double(key, value);
  } else if (key == "ref_max_stages") {
    cfg.ref_max_stages = to_uint(key, value);
  } else if (key == "p_star") {
    cfg.p_star = to_double(key, value);
  } else if (key == "speedup_target") {
    cfg.speedup_target = to_double(key, value);
  } else if (key == "mu") {
    cfg.mu = to_double(key, value);
  } else if (key == "L") {
    cfg.L = to_double(key, value);
  } else if (key == "T") {
    cfg.T = to_double(key, value);
  } else if (key == "csv") {
    cfg.csv = std::string(value);
  } else if (key == "summary") {
    cfg.summary = std::string(value);
  } else if (key == "require_admissible") {
    cfg.require_admissible = to_bool(key, value);
  } else {
    throw ContractError("config: unknown key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    try {
      apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ContractError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_config(ss.str());
  // Relative dataset paths resolve against the config file's directory.
  if (!cfg.dataset.empty() && !cfg.dataset.starts_with("synth:")) {
    const std::filesystem::path ds(cfg.dataset);
    if (ds.is_relative()) {
      const auto dir = std::filesystem::path(path).parent_path();
      if (!dir.empty() && std::filesystem::exists(dir / ds)) cfg.dataset = (dir / ds).string();
    }
  }
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ContractError("override must be key=value: " + o);
    apply_setting(cfg, trim(std::string_view(o).substr(0, eq)), std::string_view(o).substr(eq + 1));
  }
}

std::size_t resolve_size(std::string_view expr, std::size_t n, std::size_t d, std::size_t m) {
  expr = trim(expr);
  require(!expr.empty(), "size expression is empty");
  double value;
  if (expr.starts_with("d/")) {
    const double div = to_double("size expression", expr.substr(2));
    require(div > 0.0, "size expression: divisor must be positive");
    value = static_cast<double>(d) / div;
  } else if (expr.ends_with("nm")) {
    value = coefficient(expr.substr(0, expr.size() - 2)) * static_cast<double>(n) *
            static_cast<double>(m);
  } else if (expr.ends_with("n")) {
    value = coefficient(expr.substr(0, expr.size() - 1)) * static_cast<double>(n);
  } else {
    value = static_cast<double>(to_uint("size expression", expr));
    return static_cast<std::size_t>(value);
  }
  require(value > 0.0, "size expression must be positive");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(value)));
}

std::optional<Regularizer> named_dataset_defaults(std::string_view dataset) {
  const std::string stem = std::filesystem::path(std::string(dataset)).filename().string();
  if (stem.starts_with("rcv1")) return Regularizer{1e-5, 1e-4};
  if (stem.starts_with("real-sim") || stem.starts_with("real_sim")) return Regularizer{1e-4, 1e-4};
  if (stem.starts_with("news20")) return Regularizer{1e-6, 1e-4};
  return std::nullopt;
}

}  // namespace aprox
