#pragma once

#include "bqlearn/corruption.hpp"
#include "bqlearn/model_selection.hpp"
#include "bqlearn/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bqlearn::bench {

using Json = nlohmann::json;

// ---------------------------------------------------------------- CSV input

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF line endings.
CsvTable read_csv(std::istream& in);

struct IngestedDataset {
  BiqualityDataset dataset;
  std::vector<std::string> feature_names;
  /// class_names[k] is the original label of class k, in order of first appearance.
  std::vector<std::string> class_names;
  std::string label_column = "label";
};

/// Every column other than the label and quality columns must be numeric.
IngestedDataset ingest_csv(std::istream& in, const std::string& label_column,
                           const std::optional<std::string>& quality_column = std::nullopt);
IngestedDataset ingest_csv(const std::string& path, const std::string& label_column,
                           const std::optional<std::string>& quality_column = std::nullopt);

/// Writes features, the label column (original class names) and `sample_quality`.
void write_dataset_csv(std::ostream& out, const IngestedDataset& data);

// ------------------------------------------------------------------ config

struct SyntheticSpec {
  Index n_per_class = 500;
  int n_classes = 2;
  double separation = 2.0;
  int dims = 2;
  std::uint64_t seed = 0;
};

struct DatasetSpec {
  std::optional<std::string> path;
  std::optional<SyntheticSpec> synthetic;
  std::string label_column = "label";
  std::optional<std::string> quality_column;
};

namespace corruption {
struct None {};
struct LabelNoise {
  Matrix noise_matrix;  // empty: uniform with noise_ratio
  double noise_ratio = 0.0;
};
struct InstanceDependent {
  double flip_probability = 0.0;
  Matrix noise_matrix;  // empty: uniform over the other classes
};
struct Uncertainty {
  double target_ratio = 0.0;
  double l2_penalty = 1.0;
  Matrix noise_matrix;
};
struct FeatureDependent {
  double noise_ratio = 0.0;
  double flip_sd = 0.1;
};
struct WeakLabels {
  double l2_penalty = 1.0;
};
struct Imbalance {
  std::vector<double> target;
  ImbalanceMode mode = ImbalanceMode::kUndersample;
};
struct SamplingBias {
  double shift = 0.0;
  double scale = 1.0;
  double target_fraction = 0.5;
};
}  // namespace corruption

using CorruptionSpec =
    std::variant<corruption::None, corruption::LabelNoise, corruption::InstanceDependent,
                 corruption::Uncertainty, corruption::FeatureDependent, corruption::WeakLabels,
                 corruption::Imbalance, corruption::SamplingBias>;

struct AlgorithmSpec {
  /// Registry name.
  std::string name;
  /// Row label: the name, plus the grid values when the entry came from a grid.
  std::string label;
  /// Fully resolved hyperparameters, one scalar per key.
  Json params;
  AlgorithmOptions options;
};

struct BenchmarkConfig {
  DatasetSpec dataset;
  std::optional<double> trusted_fraction;
  CorruptionSpec corruption;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::uint64_t> seeds{0};
  int cv_folds = 5;
  bool standardize = false;
};

/// Validates and resolves a user config. Unknown keys, unknown algorithm names
/// and conflicting options are errors. Array-valued algorithm params expand to
/// their Cartesian product.
BenchmarkConfig parse_config(const Json& input);
BenchmarkConfig load_config(const std::string& path);

/// The resolved config with every default spelled out.
Json to_json(const BenchmarkConfig& config);

/// SHA-256 hex digest of the compact resolved JSON.
std::string config_hash(const BenchmarkConfig& config);

// ----------------------------------------------------------------- running

/// The clean input: CSV file or synthetic Gaussian classes.
IngestedDataset load_dataset(const DatasetSpec& spec);

/// Independent stream seed for one purpose within a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Trusted/untrusted assembly followed by the configured corruption.
IngestedDataset make_biquality(const IngestedDataset& clean, const BenchmarkConfig& config,
                               std::uint64_t seed);

struct SeedPlan {
  IngestedDataset data;
  BiqualityCv cv;
};

SeedPlan plan_seed(const IngestedDataset& clean, const BenchmarkConfig& config,
                   std::uint64_t seed);

struct ResultRow {
  std::string algorithm;
  std::uint64_t seed = 0;
  /// -1 when the seed could not be prepared.
  int fold = 0;
  MetricReport metrics;
  double wall_time = 0.0;
  std::string config_hash;
  /// Empty on success.
  std::string error;
};

/// Fits one algorithm on a fold's train rows and scores its trusted test rows.
MetricReport run_fold(const AlgorithmSpec& algorithm, const BiqualityDataset& ds,
                      const BiqualitySplit& split, bool standardize);

struct SummaryRow {
  std::string algorithm;
  Index n_ok = 0;
  Index n_failed = 0;
  double accuracy_mean = 0.0;
  double accuracy_sd = 0.0;
  double balanced_accuracy_mean = 0.0;
  double balanced_accuracy_sd = 0.0;
  double log_loss_mean = 0.0;
  double log_loss_sd = 0.0;
};

struct BenchmarkResult {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
};

/// Rows are ordered by (algorithm, seed, fold) in config order whatever `jobs` is.
BenchmarkResult run_benchmark(const BenchmarkConfig& config, int jobs = 1);

/// Mean and sample standard deviation over the successful rows.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows,
                                  const std::vector<AlgorithmSpec>& algorithms);

// ---------------------------------------------------------------- emitting

enum class OutputFormat { kCsv, kJson };

OutputFormat output_format_from_name(const std::string& name);

/// Column order: algorithm, seed, fold, accuracy, balanced_accuracy, log_loss,
/// n_test, wall_time, config_hash, error. Doubles use 17 significant digits.
std::string format_results(const std::vector<ResultRow>& rows, OutputFormat format);
void emit_results(const std::vector<ResultRow>& rows, OutputFormat format, const std::string& path);

std::string format_summary(const std::vector<SummaryRow>& summary);

}  // namespace bqlearn::bench
