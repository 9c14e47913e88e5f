#include "aprox/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aprox/errors.hpp"
#include "aprox/sampling.hpp"
#include "aprox/theory.hpp"

namespace aprox {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::string_view next_token(std::string_view& rest) {
  std::size_t b = 0;
  while (b < rest.size() && is_space(rest[b])) ++b;
  std::size_t e = b;
  while (e < rest.size() && !is_space(rest[e])) ++e;
  const std::string_view tok = rest.substr(b, e - b);
  rest.remove_prefix(e);
  return tok;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_index(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string read_all(const std::filesystem::path& path) {
  const bool gz = path.extension() == ".gz";
  if (!gz) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw std::runtime_error("cannot open " + path.string());
  std::string out;
  char buf[1 << 16];
  int got;
  while ((got = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(got));
  const bool failed = got < 0;
  gzclose(f);
  if (failed) throw std::runtime_error("gzip read error in " + path.string());
  return out;
}

}  // namespace

Dataset parse_libsvm(std::string_view text, const LibsvmOptions& opts) {
  struct Row {
    std::vector<std::pair<Index, double>> entries;
    double label;
  };
  std::vector<Row> rows;
  std::uint64_t max_index = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    std::string_view rest = line;
    const std::string_view label_tok = next_token(rest);
    if (label_tok.empty()) continue;

    Row row;
    if (!parse_double(label_tok, row.label)) {
      throw ParseError(line_no, "bad label '" + std::string(label_tok) + "'");
    }
    std::set<Index> seen;
    for (std::string_view tok = next_token(rest); !tok.empty(); tok = next_token(rest)) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected idx:val, got '" + std::string(tok) + "'");
      }
      std::uint64_t idx;
      double val;
      if (!parse_index(tok.substr(0, colon), idx)) {
        throw ParseError(line_no, "bad index in '" + std::string(tok) + "'");
      }
      if (idx == 0) throw ParseError(line_no, "index 0 in 1-based file");
      if (idx > std::numeric_limits<std::int32_t>::max()) {
        throw ParseError(line_no, "index too large");
      }
      if (!parse_double(tok.substr(colon + 1), val)) {
        throw ParseError(line_no, "bad value in '" + std::string(tok) + "'");
      }
      if (opts.expected_dim && idx > *opts.expected_dim) {
        throw ParseError(line_no, "index exceeds expected dimension");
      }
      const Index zero_based = static_cast<Index>(idx - 1);
      if (!seen.insert(zero_based).second) throw ParseError(line_no, "duplicate index");
      max_index = std::max(max_index, idx);
      if (val != 0.0) row.entries.emplace_back(zero_based, val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(line_no, "no examples");

  const std::size_t dim = opts.expected_dim ? *opts.expected_dim : static_cast<std::size_t>(max_index);
  bool binary01 = opts.map_binary_labels;
  bool has_zero = false;
  for (const Row& r : rows) {
    if (r.label != 0.0 && r.label != 1.0) binary01 = false;
    if (r.label == 0.0) has_zero = true;
  }
  const bool remap = binary01 && has_zero;
  if (remap) std::clog << "[aprox] labels {0,1} mapped to {-1,+1}\n";

  std::vector<Example> examples;
  examples.reserve(rows.size());
  for (Row& r : rows) {
    const double b = remap ? (r.label == 0.0 ? -1.0 : 1.0) : r.label;
    examples.push_back({SparseVec::from_entries(dim, std::move(r.entries)), b});
  }
  return Dataset(dim, std::move(examples));
}

Dataset read_libsvm(const std::filesystem::path& path, const LibsvmOptions& opts) {
  return parse_libsvm(read_all(path), opts);
}

void write_libsvm(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buf[64];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
  };
  for (const Example& ex : data.examples()) {
    put(ex.b);
    const auto idx = ex.a.indices();
    const auto val = ex.a.values();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out << ' ' << (idx[k] + 1) << ':';
      put(val[k]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

NormalizedDataset normalize_rows(const Dataset& data) {
  std::vector<Example> rows;
  rows.reserve(data.n());
  std::size_t zero_rows = 0;
  for (const Example& ex : data.examples()) {
    const double norm = std::sqrt(ex.a.squared_norm());
    if (norm == 0.0) {
      ++zero_rows;
      rows.push_back(ex);
      continue;
    }
    const auto idx = ex.a.indices();
    const auto val = ex.a.values();
    std::vector<std::pair<Index, double>> entries(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) entries[k] = {idx[k], val[k] / norm};
    rows.push_back({SparseVec::from_entries(ex.a.dim(), std::move(entries)), ex.b});
  }
  if (zero_rows > 0) std::clog << "[aprox] normalize_rows: " << zero_rows << " zero rows left as is\n";
  return {Dataset(data.dim(), std::move(rows)), zero_rows};
}

Dataset synth_dataset(const SynthSpec& spec) {
  require(spec.delta > 0.0 && spec.delta <= 1.0, "synth_dataset: delta must be in (0, 1]");
  require(spec.n >= 1 && spec.d >= 1, "synth_dataset: need n >= 1 and d >= 1");
  const std::size_t n = spec.n;
  // Guard against products like 0.05 * 100 landing one ulp above an integer.
  const double target = spec.delta * static_cast<double>(n);
  std::size_t per_feature = static_cast<std::size_t>(std::ceil(target - 1e-9 * target));
  per_feature = std::clamp<std::size_t>(per_feature, 1, n);

  Rng rng = make_stream(spec.seed, kSynthStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto nonzero_normal = [&] {
    double v;
    do v = normal(rng);
    while (v == 0.0);
    return v;
  };

  std::vector<std::vector<std::pair<Index, double>>> rows(n);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t j = 0; j < spec.d; ++j) {
    for (std::size_t t = 0; t < per_feature; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, n - 1);
      std::swap(perm[t], perm[pick(rng)]);
      rows[perm[t]].emplace_back(static_cast<Index>(j), nonzero_normal());
    }
  }
  std::vector<double> w(spec.d);
  for (double& v : w) v = normal(rng);

  std::vector<Example> examples;
  examples.reserve(n);
  for (auto& r : rows) examples.push_back({SparseVec::from_entries(spec.d, std::move(r)), 0.0});
  Dataset raw(spec.d, std::move(examples));
  NormalizedDataset norm = normalize_rows(raw);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Example> labeled(norm.data.examples().begin(), norm.data.examples().end());
  for (Example& ex : labeled) {
    const double z = sparse_dot(ex.a, w);
    switch (spec.labels) {
      case LabelRule::logistic:
        ex.b = unif(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1.0 : -1.0;
        break;
      case LabelRule::sign:
        ex.b = z >= 0.0 ? 1.0 : -1.0;
        break;
      case LabelRule::linear:
        ex.b = z + 0.1 * normal(rng);
        break;
    }
  }
  return Dataset(spec.d, std::move(labeled));
}

SynthSpec parse_synth_spec(std::string_view text) {
  SynthSpec spec;
  if (text.starts_with("synth:")) text.remove_prefix(6);
  while (!text.empty()) {
    const std::size_t comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    text.remove_prefix(comma == std::string_view::npos ? text.size() : comma + 1);
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ContractError("synth spec: expected key=value, got '" + std::string(item) + "'");
    }
    const std::string key(item.substr(0, eq));
    const std::string value(item.substr(eq + 1));
    try {
      if (key == "n") {
        spec.n = std::stoull(value);
      } else if (key == "d") {
        spec.d = std::stoull(value);
      } else if (key == "delta") {
        spec.delta = std::stod(value);
      } else if (key == "seed") {
        spec.seed = std::stoull(value);
      } else if (key == "labels") {
        if (value == "logistic") spec.labels = LabelRule::logistic;
        else if (value == "sign") spec.labels = LabelRule::sign;
        else if (value == "linear") spec.labels = LabelRule::linear;
        else throw ContractError("synth spec: unknown label rule '" + value + "'");
      } else {
        throw ContractError("synth spec: unknown key '" + key + "'");
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ContractError*>(&e) != nullptr) throw;
      throw ContractError("synth spec: bad value for '" + key + "'");
    }
  }
  return spec;
}

DatasetStats dataset_stats(const Dataset& data) {
  DatasetStats st;
  st.n = data.n();
  st.d = data.dim();
  st.nnz = data.nnz();
  double max_sq = 0.0;
  for (const Example& ex : data.examples()) {
    ++st.label_counts[ex.b];
    max_sq = std::max(max_sq, ex.a.squared_norm());
  }
  st.max_row_norm = std::sqrt(max_sq);
  st.delta = theory::data_sparsity_delta(data);
  return st;
}

std::string stats_to_key_value(const DatasetStats& st) {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << st.n << '\n'
     << "d=" << st.d << '\n'
     << "nnz=" << st.nnz << '\n'
     << "delta=" << st.delta << '\n'
     << "max_row_norm=" << st.max_row_norm << '\n';
  for (const auto& [label, count] : st.label_counts) os << "label[" << label << "]=" << count << '\n';
  return os.str();
}

std::string stats_to_json(const DatasetStats& st) {
  nlohmann::json j;
  j["n"] = st.n;
  j["d"] = st.d;
  j["nnz"] = st.nnz;
  j["delta"] = st.delta;
  j["max_row_norm"] = st.max_row_norm;
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [label, count] : st.label_counts) {
    std::ostringstream key;
    key << label;
    labels[key.str()] = count;
  }
  j["labels"] = labels;
  return j.dump();
}

}  // namespace aprox
