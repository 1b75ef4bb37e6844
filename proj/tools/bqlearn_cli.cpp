// bqlearn command-line harness: corrupt, train, benchmark, validate.

#include "bqlearn/bench.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace bqlearn;
using namespace bqlearn::bench;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string output;
  std::string format = "csv";
  std::vector<std::uint64_t> seed_override;
  bool print_config = false;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_output) {
  cmd->add_option("--config", o.config_path, "Benchmark config (JSON)")->required()->check(CLI::ExistingFile);
  if (with_output) cmd->add_option("--output", o.output, "Output file (default: stdout)");
  cmd->add_option("--seed-override", o.seed_override, "Comma-separated seeds replacing the config's")
      ->delimiter(',');
  cmd->add_flag("--print-config", o.print_config, "Print the resolved config and exit");
}

BenchmarkConfig resolve(const CommonOptions& o) {
  BenchmarkConfig config = load_config(o.config_path);
  if (!o.seed_override.empty()) config.seeds = o.seed_override;
  return config;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("cannot write '" + path + "'");
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_corrupt(const CommonOptions& o) {
  const BenchmarkConfig config = resolve(o);
  const IngestedDataset clean = load_dataset(config.dataset);
  const IngestedDataset noisy = make_biquality(clean, config, config.seeds.front());
  std::ostringstream out;
  write_dataset_csv(out, noisy);
  write_text(o.output, out.str());
  return 0;
}

int cmd_train(const CommonOptions& o) {
  const BenchmarkConfig config = resolve(o);
  if (config.algorithms.size() != 1) {
    throw Error("train needs exactly one algorithm entry, got " + std::to_string(config.algorithms.size()));
  }
  const AlgorithmSpec& algorithm = config.algorithms.front();
  const IngestedDataset clean = load_dataset(config.dataset);
  IngestedDataset data = make_biquality(clean, config, config.seeds.front());
  Matrix features = data.dataset.features;
  if (config.standardize) {
    StandardScaler scaler;
    data.dataset.features = scaler.fit_transform(features);
    features = data.dataset.features;
  }
  const PredictorPtr model =
      fit_biquality(algorithm_from_name(algorithm.name), data.dataset, algorithm.options);
  const Matrix proba = model->predict_proba(features);
  const Labels pred = argmax_rows(proba);

  std::ostringstream out;
  out << "row,sample_quality," << data.label_column << ",predicted";
  for (const std::string& name : data.class_names) out << ",proba_" << name;
  out << '\n';
  for (Index i = 0; i < proba.rows(); ++i) {
    out << i << ',' << data.dataset.sample_quality[i] << ','
        << data.class_names[static_cast<std::size_t>(data.dataset.labels[i])] << ','
        << data.class_names[static_cast<std::size_t>(pred[i])];
    for (Index k = 0; k < proba.cols(); ++k) out << ',' << format_number(proba(i, k));
    out << '\n';
  }
  write_text(o.output, out.str());
  return 0;
}

int cmd_benchmark(const CommonOptions& o) {
  const BenchmarkConfig config = resolve(o);
  const OutputFormat format = output_format_from_name(o.format);
  const BenchmarkResult result = run_benchmark(config, o.jobs);
  const std::string table = format_results(result.rows, format);
  if (o.output.empty() || o.output == "-") {
    std::cout << table;
    std::cerr << format_summary(result.summary);
  } else {
    emit_results(result.rows, format, o.output);
    std::cout << format_summary(result.summary);
  }
  return 0;
}

int cmd_validate(const CommonOptions& o) {
  const BenchmarkConfig config = resolve(o);
  const IngestedDataset clean = load_dataset(config.dataset);
  validate_dataset(clean.dataset, /*require_trusted=*/config.dataset.quality_column.has_value());
  const SeedPlan plan = plan_seed(clean, config, config.seeds.front());
  const DatasetSummary s = validate_dataset(plan.data.dataset, true);
  std::cout << "config ok\n"
            << "  config_hash: " << config_hash(config) << '\n'
            << "  samples: " << s.n_trusted + s.n_untrusted << " (" << s.n_trusted << " trusted, "
            << s.n_untrusted << " untrusted), features: " << plan.data.dataset.features.cols()
            << ", classes: " << plan.data.dataset.n_classes << '\n'
            << "  algorithms: " << config.algorithms.size() << ", seeds: " << config.seeds.size()
            << ", usable folds: " << plan.cv.splits.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biquality learning benchmark harness"};
  app.require_subcommand(1);

  CommonOptions corrupt_opts, train_opts, bench_opts, validate_opts;
  CLI::App* corrupt = app.add_subcommand("corrupt", "Write the corrupted biquality dataset as CSV");
  add_common(corrupt, corrupt_opts, true);
  CLI::App* train = app.add_subcommand("train", "Fit one algorithm and write per-row predictions");
  add_common(train, train_opts, true);
  CLI::App* benchmark = app.add_subcommand("benchmark", "Run every algorithm over seeds and folds");
  add_common(benchmark, bench_opts, true);
  benchmark->add_option("--format", bench_opts.format, "Result format")
      ->check(CLI::IsMember({"csv", "json"}));
  benchmark->add_option("--jobs", bench_opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
  CLI::App* validate = app.add_subcommand("validate", "Check the config and dataset only");
  add_common(validate, validate_opts, false);

  CLI11_PARSE(app, argc, argv);

  const std::pair<CLI::App*, std::pair<CommonOptions*, int (*)(const CommonOptions&)>> commands[] = {
      {corrupt, {&corrupt_opts, cmd_corrupt}},
      {train, {&train_opts, cmd_train}},
      {benchmark, {&bench_opts, cmd_benchmark}},
      {validate, {&validate_opts, cmd_validate}},
  };
  try {
    for (const auto& [cmd, entry] : commands) {
      if (!cmd->parsed()) continue;
      const CommonOptions& o = *entry.first;
      if (o.print_config) {
        std::cout << to_json(resolve(o)).dump(2) << '\n';
        return 0;
      }
      return entry.second(o);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
