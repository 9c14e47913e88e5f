#include <doctest.h>

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "aprox/data_io.hpp"
#include "aprox/errors.hpp"
#include "aprox/theory.hpp"
#include "test_util.hpp"

using namespace aprox;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("aprox_test_" + name);
}

bool same_dataset(const Dataset& a, const Dataset& b) {
  if (a.n() != b.n() || a.dim() != b.dim()) return false;
  for (std::size_t i = 0; i < a.n(); ++i) {
    if (a[i].b != b[i].b) return false;
    if (!std::equal(a[i].a.indices().begin(), a[i].a.indices().end(), b[i].a.indices().begin(),
                    b[i].a.indices().end())) {
      return false;
    }
    if (!testutil::bits_equal(a[i].a.values(), b[i].a.values())) return false;
  }
  return true;
}

std::size_t parse_error_line(std::string_view text, const LibsvmOptions& opts = {}) {
  try {
    parse_libsvm(text, opts);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("LIBSVM parsing") {
  const Dataset d = parse_libsvm("+1 3:0.5\n-1 1:2 2:-1.5  # comment\n\n");
  REQUIRE(d.n() == 2);
  CHECK(d.dim() == 3);
  CHECK(d[0].b == 1.0);
  REQUIRE(d[0].a.nnz() == 1);
  CHECK(d[0].a.indices()[0] == 2);
  CHECK(d[0].a.values()[0] == 0.5);
  CHECK(d[1].a.nnz() == 2);

  // Explicit zeros are dropped; Windows line endings are accepted.
  const Dataset z = parse_libsvm("1 1:0 2:3\r\n-1 2:1\r\n");
  CHECK(z[0].a.nnz() == 1);

  const Dataset wide = parse_libsvm("1 2:1\n", LibsvmOptions{10, true});
  CHECK(wide.dim() == 10);
}

TEST_CASE("LIBSVM errors carry line numbers") {
  CHECK_THROWS_AS(parse_libsvm(""), ParseError);
  CHECK_THROWS_AS(parse_libsvm("# only a comment\n"), ParseError);
  CHECK(parse_error_line("1 1:1\n1 2:1 2:3\n") == 2);
  CHECK(parse_error_line("1 1:1\n\n-1 0:1\n") == 3);
  CHECK(parse_error_line("1 1:abc\n") == 1);
  CHECK(parse_error_line("x 1:1\n") == 1);
  CHECK(parse_error_line("1 11\n") == 1);
  CHECK(parse_error_line("1 1:1\n1 5:1\n", LibsvmOptions{4, true}) == 2);
}

TEST_CASE("binary labels are mapped to +-1") {
  const Dataset d = parse_libsvm("0 1:1\n1 2:1\n");
  CHECK(d[0].b == -1.0);
  CHECK(d[1].b == 1.0);
  const Dataset keep = parse_libsvm("0 1:1\n1 2:1\n", LibsvmOptions{std::nullopt, false});
  CHECK(keep[0].b == 0.0);
  const Dataset reg = parse_libsvm("0.5 1:1\n0 2:1\n");
  CHECK(reg[0].b == 0.5);
}

TEST_CASE("write and read round trip, including gzip") {
  SynthSpec spec;
  spec.n = 30;
  spec.d = 12;
  spec.delta = 0.2;
  spec.labels = LabelRule::linear;
  spec.seed = 4;
  const Dataset d = synth_dataset(spec);
  const fs::path plain = temp_path("round.svm");
  write_libsvm(plain, d);
  const Dataset back = read_libsvm(plain, LibsvmOptions{d.dim(), false});
  CHECK(same_dataset(d, back));

  std::ifstream in(plain, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const fs::path gz = temp_path("round.svm.gz");
  gzFile f = gzopen(gz.c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
  gzclose(f);
  CHECK(same_dataset(d, read_libsvm(gz, LibsvmOptions{d.dim(), false})));
  fs::remove(plain);
  fs::remove(gz);
  CHECK_THROWS(read_libsvm(temp_path("missing.svm")));
}

TEST_CASE("row normalization") {
  std::vector<Example> ex;
  ex.push_back({SparseVec(2, {0, 1}, {3.0, 4.0}), 1.0});
  ex.push_back({SparseVec(2), -1.0});
  ex.push_back({SparseVec(2, {1}, {1.0}), 1.0});
  const NormalizedDataset n = normalize_rows(Dataset(2, std::move(ex)));
  CHECK(n.zero_rows == 1);
  CHECK(n.data[0].a.values()[0] == doctest::Approx(0.6));
  CHECK(n.data[0].a.values()[1] == doctest::Approx(0.8));
  CHECK(n.data[1].a.nnz() == 0);
  CHECK(n.data[2].a.values()[0] == 1.0);

  std::mt19937_64 rng(5);
  const auto raw = testutil::random_dataset(40, 15, 0.4, rng, LossKind::logistic);
  const Dataset once = normalize_rows(*raw).data;
  const Dataset twice = normalize_rows(once).data;
  for (std::size_t i = 0; i < once.n(); ++i) {
    CHECK(std::sqrt(once[i].a.squared_norm()) == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t k = 0; k < once[i].a.nnz(); ++k) {
      const double a = once[i].a.values()[k], b = twice[i].a.values()[k];
      CHECK(std::abs(a - b) <= std::abs(a) * 4 * std::numeric_limits<double>::epsilon());
    }
  }
}

TEST_CASE("synthetic datasets hit their sparsity target exactly") {
  for (int trial = 0; trial < 100; ++trial) {
    SynthSpec spec;
    spec.n = 10 + static_cast<std::size_t>(trial) * 7 % 190;
    spec.d = 1 + static_cast<std::size_t>(trial) % 30;
    spec.delta = 0.01 + 0.99 * static_cast<double>(trial % 17) / 16.0;
    spec.seed = static_cast<std::uint64_t>(trial);
    const Dataset d = synth_dataset(spec);
    const double target =
        std::ceil(spec.delta * static_cast<double>(spec.n) - 1e-9) / static_cast<double>(spec.n);
    CHECK(theory::data_sparsity_delta(d) == target);
  }
  SynthSpec dense;
  dense.n = 100;
  dense.d = 10;
  const Dataset full = synth_dataset(dense);
  CHECK(full.nnz() == 1000);
  CHECK(theory::data_sparsity_delta(full) == 1.0);

  SynthSpec five;
  five.n = 100;
  five.d = 10;
  five.delta = 0.05;
  CHECK(theory::data_sparsity_delta(synth_dataset(five)) == 0.05);
  CHECK(same_dataset(synth_dataset(five), synth_dataset(five)));
  five.seed = 1;
  const Dataset other = synth_dataset(five);
  CHECK_FALSE(same_dataset(synth_dataset(SynthSpec{100, 10, 0.05}), other));

  CHECK_THROWS_AS(synth_dataset(SynthSpec{10, 3, 0.0}), ContractError);
  CHECK_THROWS_AS(synth_dataset(SynthSpec{10, 3, 1.5}), ContractError);
}

TEST_CASE("synthetic label rules") {
  SynthSpec spec;
  spec.n = 200;
  spec.d = 5;
  for (LabelRule rule : {LabelRule::logistic, LabelRule::sign}) {
    spec.labels = rule;
    const Dataset d = synth_dataset(spec);
    for (const Example& ex : d.examples()) CHECK((ex.b == 1.0 || ex.b == -1.0));
  }
}

TEST_CASE("synth spec parsing") {
  const SynthSpec s = parse_synth_spec("synth:n=200,d=20,delta=0.5,labels=sign,seed=3");
  CHECK(s.n == 200);
  CHECK(s.d == 20);
  CHECK(s.delta == 0.5);
  CHECK(s.labels == LabelRule::sign);
  CHECK(s.seed == 3);
  CHECK(parse_synth_spec("d=7").d == 7);
  CHECK_THROWS_AS(parse_synth_spec("n=abc"), ContractError);
  CHECK_THROWS_AS(parse_synth_spec("color=red"), ContractError);
  CHECK_THROWS_AS(parse_synth_spec("labels=weird"), ContractError);
  CHECK_THROWS_AS(parse_synth_spec("n"), ContractError);
}

TEST_CASE("dataset statistics") {
  const Dataset d = parse_libsvm("1 1:3 2:4\n-1 2:1\n1 3:2\n");
  const DatasetStats st = dataset_stats(d);
  CHECK(st.n == 3);
  CHECK(st.d == 3);
  CHECK(st.nnz == 4);
  CHECK(st.delta == doctest::Approx(2.0 / 3.0));
  CHECK(st.max_row_norm == 5.0);
  CHECK(st.label_counts.at(1.0) == 2);
  CHECK(st.label_counts.at(-1.0) == 1);

  const std::string kv = stats_to_key_value(st);
  CHECK(kv.find("n=3\n") != std::string::npos);
  CHECK(kv.find("nnz=4\n") != std::string::npos);
  const auto j = nlohmann::json::parse(stats_to_json(st));
  CHECK(j["d"] == 3);
  CHECK(j["labels"]["-1"] == 1);
}
