#include "doctest.h"

#include "bqlearn/bench.hpp"
#include "bqlearn/logistic.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace bqlearn;
using namespace bqlearn::bench;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "bqlearn_bench_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Json gaussian_config(Json algorithms, Json corruption = {{"type", "none"}}) {
  return {{"dataset", {{"synthetic", {{"n_per_class", 120}, {"separation", 3.0}}}}},
          {"trusted_fraction", 0.25},
          {"corruption", corruption},
          {"algorithms", algorithms},
          {"seeds", {0, 1}},
          {"cv_folds", 3}};
}

// Drops the wall_time column (8th) from a result CSV.
std::string without_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  const CsvTable t = read_csv(in);
  std::ostringstream out;
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j != 7) out << row[j] << '|';
    }
    out << '\n';
  }
  return out.str();
}

ResultRow sample_row(const std::string& hash) {
  ResultRow r;
  r.algorithm = "irbl";
  r.seed = 3;
  r.fold = 1;
  r.metrics = MetricReport{0.1 + 0.2, 2.0 / 3.0, 1e-300, 17};
  r.wall_time = 0.25;
  r.config_hash = hash;
  return r;
}

}  // namespace

TEST_CASE("ingest_csv factorizes labels by first appearance") {
  std::istringstream in("x1,y,x2\n1.5,a,2\n-3,b,4e-1\n0,a,\"7\"\n");
  const IngestedDataset d = ingest_csv(in, "y");
  CHECK(d.dataset.labels == (Labels(3) << 0, 1, 0).finished());
  CHECK(d.dataset.n_classes == 2);
  CHECK(d.class_names == std::vector<std::string>{"a", "b"});
  CHECK(d.feature_names == std::vector<std::string>{"x1", "x2"});
  CHECK(d.dataset.features(1, 1) == 0.4);
  CHECK(d.dataset.features(2, 1) == 7.0);
  CHECK((d.dataset.sample_quality.array() == 1).all());
}

TEST_CASE("ingest_csv errors") {
  std::istringstream missing("x,y\n1,a\n");
  CHECK_THROWS_WITH_AS(ingest_csv(missing, "target"), doctest::Contains("'target'"), Error);
  std::istringstream bad_quality("x,y,q\n1,a,1\n2,b,2\n");
  CHECK_THROWS_WITH_AS(ingest_csv(bad_quality, "y", std::string("q")),
                       "sample_quality must be 0 or 1", Error);
  std::istringstream text("x,y\n1,a\nfoo,b\n");
  CHECK_THROWS_WITH_AS(ingest_csv(text, "y"), doctest::Contains("non-numeric"), Error);
  std::istringstream empty("");
  CHECK_THROWS_WITH_AS(ingest_csv(empty, "y"), doctest::Contains("empty"), Error);
  std::istringstream ragged("x,y\n1\n");
  CHECK_THROWS_AS(ingest_csv(ragged, "y"), Error);
  CHECK_THROWS_AS(ingest_csv(std::string("/nonexistent/data.csv"), "y"), Error);
}

TEST_CASE("read_csv handles quoting and CRLF") {
  std::istringstream in("a,\"b,c\"\r\n\"say \"\"hi\"\"\",2\r\n");
  const CsvTable t = read_csv(in);
  CHECK(t.header == std::vector<std::string>{"a", "b,c"});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][0] == "say \"hi\"");
}

TEST_CASE("corrupted dataset CSV round-trips through ingest") {
  const BenchmarkConfig config = parse_config(gaussian_config({"naive_all"}, {{"type", "label_noise"}, {"noise_ratio", 0.3}}));
  const IngestedDataset clean = load_dataset(config.dataset);
  const IngestedDataset noisy = make_biquality(clean, config, 5);
  std::stringstream buffer;
  write_dataset_csv(buffer, noisy);
  const IngestedDataset back = ingest_csv(buffer, "label", std::string("sample_quality"));
  CHECK(back.dataset.features == noisy.dataset.features);
  CHECK(back.dataset.sample_quality == noisy.dataset.sample_quality);
  for (Index i = 0; i < back.dataset.n_samples(); ++i) {
    CHECK(back.class_names[static_cast<std::size_t>(back.dataset.labels[i])] ==
          noisy.class_names[static_cast<std::size_t>(noisy.dataset.labels[i])]);
  }
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(parse_config(gaussian_config({"irbl"})));
  Json j = gaussian_config({"svm"});
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("unknown algorithm: svm"), Error);
  j = gaussian_config({"irbl"});
  j["dataset"]["quality_column"] = "q";
  CHECK_THROWS_AS(parse_config(j), Error);
  j = gaussian_config({"irbl"});
  j.erase("trusted_fraction");
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("exactly one of trusted_fraction"), Error);
  j = gaussian_config({"irbl"});
  j["cv_fold"] = 3;
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("unknown key 'cv_fold'"), Error);
  j = gaussian_config({Json{{"name", "irbl"}, {"params", {{"bound", 3}}}}});
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("unknown parameter 'bound'"), Error);
  j = gaussian_config({"irbl"}, {{"type", "label_noise"}, {"noise_ratio", 0.2}, {"noise_matrix", {{1, 0}, {0, 1}}}});
  CHECK_THROWS_AS(parse_config(j), Error);
  j = gaussian_config({"irbl"}, {{"type", "teleport"}});
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("unknown corruption type"), Error);
  j = gaussian_config({"irbl", "irbl"});
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("duplicate"), Error);
  j = gaussian_config({"irbl"});
  j["cv_folds"] = 1;
  CHECK_THROWS_AS(parse_config(j), Error);
}

TEST_CASE("grid expansion and resolved config") {
  const Json j = gaussian_config(
      {"naive_all", Json{{"name", "kkmm"}, {"params", {{"bound", {1, 10}}, {"kernel", {"rbf", "linear"}}}}}});
  const BenchmarkConfig config = parse_config(j);
  REQUIRE(config.algorithms.size() == 5);
  std::set<std::string> labels;
  for (const auto& a : config.algorithms) labels.insert(a.label);
  CHECK(labels == std::set<std::string>{"naive_all", "kkmm[bound=1,kernel=rbf]", "kkmm[bound=1,kernel=linear]",
                                        "kkmm[bound=10,kernel=rbf]", "kkmm[bound=10,kernel=linear]"});
  CHECK(config.algorithms[1].options.kmm_bound == 1.0);
  CHECK(config.algorithms[1].params.at("mean_slack").is_null());

  // The printed config loads back to the same resolved config.
  const Json resolved = to_json(config);
  const BenchmarkConfig again = parse_config(resolved);
  CHECK(to_json(again) == resolved);
  CHECK(config_hash(again) == config_hash(config));
  CHECK(config_hash(config).size() == 64);

  Json other = j;
  other["seeds"] = {0, 2};
  CHECK(config_hash(parse_config(other)) != config_hash(config));
}

TEST_CASE("emit_results shape, fidelity and invariants") {
  const std::string hash(64, 'a');
  const std::vector<ResultRow> one{sample_row(hash)};
  const std::string csv = format_results(one, OutputFormat::kCsv);
  std::istringstream in(csv);
  const CsvTable t = read_csv(in);
  CHECK(t.header == std::vector<std::string>{"algorithm", "seed", "fold", "accuracy", "balanced_accuracy",
                                             "log_loss", "n_test", "wall_time", "config_hash", "error"});
  REQUIRE(t.rows.size() == 1);
  CHECK(std::stod(t.rows[0][3]) == 0.1 + 0.2);
  CHECK(std::stod(t.rows[0][5]) == 1e-300);
  CHECK(t.rows[0][3] == "0.30000000000000004");

  const Json parsed = Json::parse(format_results(one, OutputFormat::kJson));
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0]["accuracy"].get<double>() == 0.1 + 0.2);
  CHECK(parsed[0]["balanced_accuracy"].get<double>() == 2.0 / 3.0);
  CHECK(parsed[0]["log_loss"].get<double>() == 1e-300);
  CHECK(parsed[0]["n_test"] == 17);
  CHECK(parsed[0]["error"] == "");

  ResultRow failed = sample_row(hash);
  failed.error = "boom, \"quoted\"";
  const std::string with_error = format_results({failed}, OutputFormat::kCsv);
  std::istringstream in2(with_error);
  const CsvTable t2 = read_csv(in2);
  CHECK(t2.rows[0][9] == "boom, \"quoted\"");
  CHECK(t2.rows[0][3].empty());
  CHECK(Json::parse(format_results({failed}, OutputFormat::kJson))[0]["accuracy"].is_null());

  CHECK_THROWS_WITH_AS(format_results({sample_row(hash), sample_row(std::string(64, 'b'))}, OutputFormat::kCsv),
                       "mixed config_hash", Error);
  CHECK_THROWS_AS(format_results({}, OutputFormat::kCsv), Error);
  CHECK_THROWS_AS(emit_results(one, OutputFormat::kCsv, "/nonexistent/dir/out.csv"), Error);
  const auto path = scratch("one.csv");
  emit_results(one, OutputFormat::kCsv, path.string());
  std::ifstream file(path);
  std::stringstream contents;
  contents << file.rdbuf();
  CHECK(contents.str() == csv);
  CHECK_THROWS_AS(output_format_from_name("xml"), Error);
}

TEST_CASE("benchmark is deterministic and independent of jobs") {
  const BenchmarkConfig config = parse_config(gaussian_config(
      {"trusted_only", "naive_all", "irbl", "backward", Json{{"name", "kkmm"}, {"params", {{"bound", {2, 100}}}}}},
      {{"type", "label_noise"}, {"noise_ratio", 0.3}}));
  const BenchmarkResult a = run_benchmark(config, 1);
  const BenchmarkResult b = run_benchmark(config, 1);
  const BenchmarkResult c = run_benchmark(config, 4);
  const std::string ta = without_wall_time(format_results(a.rows, OutputFormat::kCsv));
  CHECK(ta == without_wall_time(format_results(b.rows, OutputFormat::kCsv)));
  CHECK(ta == without_wall_time(format_results(c.rows, OutputFormat::kCsv)));
  CHECK(a.rows.size() == 6 * 2 * 3);
  for (const ResultRow& r : a.rows) CHECK(r.error.empty());

  // Summary means equal the means recomputed from the rows.
  for (const SummaryRow& s : a.summary) {
    double sum = 0.0;
    int n = 0;
    for (const ResultRow& r : a.rows) {
      if (r.algorithm == s.algorithm) {
        sum += r.metrics.accuracy;
        ++n;
      }
    }
    CHECK(s.n_ok == n);
    CHECK(s.accuracy_mean == doctest::Approx(sum / n).epsilon(1e-12));
  }
}

TEST_CASE("benchmark records failures per row") {
  const Json j = gaussian_config(
      {"naive_all", Json{{"name", "kkmm"}, {"params", {{"bound", 0.5}, {"mean_slack", 0.1}}}}});
  const BenchmarkResult r = run_benchmark(parse_config(j));
  int failed = 0;
  for (const ResultRow& row : r.rows) {
    if (row.algorithm == "naive_all") CHECK(row.error.empty());
    if (row.algorithm == "kkmm") {
      CHECK(row.error.find("infeasible") != std::string::npos);
      ++failed;
    }
  }
  CHECK(failed == 6);
  CHECK(r.summary[1].n_failed == 6);
  CHECK(r.summary[1].n_ok == 0);
}

TEST_CASE("trusted_only benchmark matches a direct library computation") {
  const BenchmarkConfig config = parse_config(gaussian_config({"trusted_only"}));
  const BenchmarkResult r = run_benchmark(config);
  const IngestedDataset clean = load_dataset(config.dataset);
  std::size_t row = 0;
  for (std::uint64_t seed : config.seeds) {
    Rng rng(derive_seed(seed, 1));
    BiqualityDataset ds = clean.dataset;
    ds.sample_quality.setZero();
    for (Index i : stratified_subset(ds.labels, 2, 0.25, rng)) ds.sample_quality[i] = 1;
    const BiqualityCv cv =
        make_biquality_cv(kfold_splits(ds.n_samples(), 3, true, derive_seed(seed, 3)), ds.sample_quality);
    for (const BiqualitySplit& split : cv.splits) {
      IndexList trusted_train;
      for (Index i : split.train) {
        if (ds.sample_quality[i] == 1) trusted_train.push_back(i);
      }
      WeightedLogisticRegression model;
      model.fit(take_rows(ds.features, trusted_train), take(ds.labels, trusted_train), 2);
      const MetricReport direct = evaluate(model, ds, split.test);
      REQUIRE(row < r.rows.size());
      CHECK(r.rows[row].metrics.accuracy == direct.accuracy);
      CHECK(r.rows[row].metrics.log_loss == direct.log_loss);
      ++row;
    }
  }
  CHECK(row == r.rows.size());
}

TEST_CASE("irbl is at least as accurate as naive_all under uniform noise") {
  const Json j = {{"dataset", {{"synthetic", {{"n_per_class", 1000}, {"separation", 2.0}}}}},
                  {"trusted_fraction", 0.5},
                  {"corruption", {{"type", "label_noise"}, {"noise_ratio", 0.3}}},
                  {"algorithms", {"naive_all", "irbl"}},
                  {"seeds", {0, 1, 2, 3, 4}},
                  {"cv_folds", 5}};
  const BenchmarkResult r = run_benchmark(parse_config(j), 4);
  REQUIRE(r.summary.size() == 2);
  MESSAGE("naive_all " << r.summary[0].accuracy_mean << ", irbl " << r.summary[1].accuracy_mean);
  CHECK(r.summary[1].accuracy_mean >= r.summary[0].accuracy_mean);
}

TEST_CASE("every corruption type builds a valid biquality dataset") {
  const std::vector<Json> corruptions{
      {{"type", "none"}},
      {{"type", "label_noise"}, {"noise_matrix", {{0.8, 0.2}, {0.4, 0.6}}}},
      {{"type", "instance_dependent"}, {"flip_probability", 0.25}},
      {{"type", "uncertainty"}, {"target_ratio", 0.2}},
      {{"type", "feature_dependent"}, {"noise_ratio", 0.3}},
      {{"type", "weak_labels"}},
      {{"type", "imbalance"}, {"target", {0.8, 0.2}}},
      {{"type", "sampling_bias"}, {"shift", 1.0}, {"target_fraction", 0.4}},
  };
  for (const Json& c : corruptions) {
    CAPTURE(c.dump());
    const BenchmarkConfig config = parse_config(gaussian_config({"naive_all"}, c));
    const IngestedDataset clean = load_dataset(config.dataset);
    const IngestedDataset out = make_biquality(clean, config, 7);
    const DatasetSummary s = validate_dataset(out.dataset, true);
    CHECK(s.n_trusted == 60);
    const std::string type = c.at("type");
    if (type == "sampling_bias") CHECK(s.n_untrusted == 72);
    if (type == "imbalance") {
      const auto counts = class_counts(take(out.dataset.labels, out.dataset.untrusted_indices()), 2);
      CHECK(counts[0] == 90);
      CHECK(counts[1] == 23);
    }
    if (type == "none" || type == "sampling_bias" || type == "imbalance") {
      // Row-selection corruptions keep every label intact.
      for (Index i = 0; i < out.dataset.n_samples(); ++i) {
        bool found = false;
        for (Index k = 0; k < clean.dataset.n_samples() && !found; ++k) {
          found = clean.dataset.features.row(k) == out.dataset.features.row(i) &&
                  clean.dataset.labels[k] == out.dataset.labels[i];
        }
        CHECK(found);
      }
    }
    CHECK(make_biquality(clean, config, 7).dataset.labels == out.dataset.labels);
  }
  const Json wrong = gaussian_config({"naive_all"}, {{"type", "label_noise"}, {"noise_matrix", {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}});
  const BenchmarkConfig config = parse_config(wrong);
  CHECK_THROWS_WITH_AS(make_biquality(load_dataset(config.dataset), config, 1), doctest::Contains("3x3"), Error);
}
