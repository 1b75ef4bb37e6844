#include "bqlearn/bench.hpp"

#include "bqlearn/kernel.hpp"
#include "bqlearn/logistic.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace bqlearn::bench {
namespace {

// Runs fn(0..count-1) on up to `jobs` threads. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

IngestedDataset synthetic_dataset(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  IngestedDataset out;
  BiqualityDataset& ds = out.dataset;
  const Index n = spec.n_per_class * spec.n_classes;
  ds.features.resize(n, spec.dims);
  ds.labels.resize(n);
  ds.sample_quality = Labels::Ones(n);
  ds.n_classes = spec.n_classes;
  Index row = 0;
  for (int k = 0; k < spec.n_classes; ++k) {
    Vector center = Vector::Zero(spec.dims);
    if (spec.n_classes == 2) {
      center[0] = (k == 0 ? -0.5 : 0.5) * spec.separation;
    } else {
      const double angle = 2.0 * M_PI * k / spec.n_classes;
      center[0] = 0.5 * spec.separation * std::cos(angle);
      center[1] = 0.5 * spec.separation * std::sin(angle);
    }
    for (Index i = 0; i < spec.n_per_class; ++i, ++row) {
      for (int d = 0; d < spec.dims; ++d) ds.features(row, d) = center[d] + normal(rng);
      ds.labels[row] = k;
    }
  }
  for (int d = 0; d < spec.dims; ++d) out.feature_names.push_back("x" + std::to_string(d));
  for (int k = 0; k < spec.n_classes; ++k) out.class_names.push_back(std::to_string(k));
  return out;
}

Matrix noise_matrix_or(const Matrix& given, int n_classes, double uniform_ratio) {
  if (given.size() == 0) return uniform_noise_matrix(n_classes, uniform_ratio);
  if (given.rows() != n_classes) {
    throw Error("noise matrix is " + std::to_string(given.rows()) + "x" +
                std::to_string(given.cols()) + " but the dataset has " +
                std::to_string(n_classes) + " classes");
  }
  return given;
}

IndexList pick(const IndexList& from, const IndexList& positions) {
  IndexList out;
  out.reserve(positions.size());
  for (Index p : positions) out.push_back(from.at(static_cast<std::size_t>(p)));
  return out;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

IngestedDataset load_dataset(const DatasetSpec& spec) {
  if (spec.synthetic) return synthetic_dataset(*spec.synthetic);
  if (!spec.path) throw Error("dataset: no path or synthetic section");
  return ingest_csv(*spec.path, spec.label_column, spec.quality_column);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream).
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

IngestedDataset make_biquality(const IngestedDataset& clean, const BenchmarkConfig& config,
                               std::uint64_t seed) {
  const BiqualityDataset& base = clean.dataset;
  const int k = base.n_classes;
  const std::uint64_t split_seed = derive_seed(seed, 1);
  const std::uint64_t corrupt_seed = derive_seed(seed, 2);

  IngestedDataset out;
  out.feature_names = clean.feature_names;
  out.class_names = clean.class_names;
  out.label_column = clean.label_column;

  if (const auto* weak = std::get_if<corruption::WeakLabels>(&config.corruption)) {
    LogisticConfig lr;
    lr.l2_penalty = weak->l2_penalty;
    out.dataset = make_weak_labels(base.features, base.labels, k, *config.trusted_fraction,
                                   WeightedLogisticRegression(lr), corrupt_seed);
    return out;
  }

  Labels quality = base.sample_quality;
  if (!config.dataset.quality_column) {
    Rng rng(split_seed);
    quality = Labels::Zero(base.n_samples());
    for (Index i : stratified_subset(base.labels, k, *config.trusted_fraction, rng)) quality[i] = 1;
  }
  BiqualityDataset split{base.features, base.labels, quality, k};
  const IndexList trusted = split.trusted_indices();
  IndexList untrusted = split.untrusted_indices();
  const Matrix xu = take_rows(base.features, untrusted);
  const Labels yu = take(base.labels, untrusted);

  Labels labels = base.labels;
  auto relabel = [&](const Labels& noisy) {
    for (std::size_t r = 0; r < untrusted.size(); ++r) labels[untrusted[r]] = noisy[static_cast<Index>(r)];
  };

  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, corruption::LabelNoise>) {
          relabel(make_label_noise(yu, noise_matrix_or(c.noise_matrix, k, c.noise_ratio), corrupt_seed).labels);
        } else if constexpr (std::is_same_v<T, corruption::InstanceDependent>) {
          const Vector p = Vector::Constant(yu.size(), c.flip_probability);
          relabel(make_instance_dependent_label_noise(yu, p, noise_matrix_or(c.noise_matrix, k, 1.0),
                                                      corrupt_seed)
                      .labels);
        } else if constexpr (std::is_same_v<T, corruption::Uncertainty>) {
          LogisticConfig lr;
          lr.l2_penalty = c.l2_penalty;
          WeightedLogisticRegression model(lr);
          model.fit(xu, yu, k);
          const Vector p = uncertainty_noise_probability(xu, yu, model, c.target_ratio);
          relabel(make_instance_dependent_label_noise(yu, p, noise_matrix_or(c.noise_matrix, k, 1.0),
                                                      corrupt_seed)
                      .labels);
        } else if constexpr (std::is_same_v<T, corruption::FeatureDependent>) {
          relabel(make_feature_dependent_label_noise(xu, yu, k, c.noise_ratio, corrupt_seed,
                                                     FeatureNoiseOptions{c.flip_sd})
                      .labels);
        } else if constexpr (std::is_same_v<T, corruption::Imbalance>) {
          if (static_cast<int>(c.target.size()) != k) {
            throw Error("imbalance target has " + std::to_string(c.target.size()) +
                        " entries but the dataset has " + std::to_string(k) + " classes");
          }
          const BiqualityDataset sub{xu, yu, Labels::Zero(yu.size()), k};
          const Vector target = Eigen::Map<const Vector>(c.target.data(), k);
          untrusted = pick(untrusted, make_imbalance(sub, target, c.mode, corrupt_seed).indices);
        } else if constexpr (std::is_same_v<T, corruption::SamplingBias>) {
          const auto size = static_cast<Index>(
              std::llround(c.target_fraction * static_cast<double>(untrusted.size())));
          untrusted = pick(untrusted, make_sampling_bias(xu, c.shift, c.scale, size, corrupt_seed));
        }
      },
      config.corruption);

  IndexList rows = trusted;
  rows.insert(rows.end(), untrusted.begin(), untrusted.end());
  std::sort(rows.begin(), rows.end());
  out.dataset = BiqualityDataset{take_rows(base.features, rows), take(labels, rows),
                                 take(quality, rows), k};
  return out;
}

SeedPlan plan_seed(const IngestedDataset& clean, const BenchmarkConfig& config, std::uint64_t seed) {
  SeedPlan plan;
  plan.data = make_biquality(clean, config, seed);
  const BiqualityDataset& ds = plan.data.dataset;
  validate_dataset(ds, /*require_trusted=*/true);
  plan.cv = make_biquality_cv(kfold_splits(ds.n_samples(), config.cv_folds, true, derive_seed(seed, 3)),
                              ds.sample_quality);
  if (plan.cv.splits.empty()) throw Error("no fold has a trusted test sample");
  return plan;
}

MetricReport run_fold(const AlgorithmSpec& algorithm, const BiqualityDataset& ds,
                      const BiqualitySplit& split, bool standardize) {
  BiqualityDataset train = ds.subset(split.train);
  if (!standardize) {
    const PredictorPtr model = fit_biquality(algorithm_from_name(algorithm.name), train, algorithm.options);
    return evaluate(*model, ds, split.test);
  }
  StandardScaler scaler;
  train.features = scaler.fit_transform(train.features);
  BiqualityDataset scaled = ds;
  scaled.features = scaler.transform(ds.features);
  const PredictorPtr model = fit_biquality(algorithm_from_name(algorithm.name), train, algorithm.options);
  return evaluate(*model, scaled, split.test);
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config, int jobs) {
  const std::string hash = config_hash(config);
  const IngestedDataset clean = load_dataset(config.dataset);

  const std::size_t n_seeds = config.seeds.size();
  std::vector<SeedPlan> plans(n_seeds);
  std::vector<std::string> plan_errors(n_seeds);
  parallel_for(n_seeds, jobs, [&](std::size_t s) {
    try {
      plans[s] = plan_seed(clean, config, config.seeds[s]);
    } catch (const std::exception& e) {
      plan_errors[s] = std::string("seed preparation failed: ") + e.what();
    }
  });

  const std::size_t n_cells = config.algorithms.size() * n_seeds;
  std::vector<std::vector<ResultRow>> cells(n_cells);
  parallel_for(n_cells, jobs, [&](std::size_t c) {
    const AlgorithmSpec& algorithm = config.algorithms[c / n_seeds];
    const std::size_t s = c % n_seeds;
    ResultRow proto;
    proto.algorithm = algorithm.label;
    proto.seed = config.seeds[s];
    proto.config_hash = hash;
    proto.metrics = MetricReport{kNaN, kNaN, kNaN, 0};
    if (!plan_errors[s].empty()) {
      proto.fold = -1;
      proto.error = plan_errors[s];
      cells[c].push_back(proto);
      return;
    }
    const SeedPlan& plan = plans[s];
    for (std::size_t f = 0; f < plan.cv.splits.size(); ++f) {
      ResultRow row = proto;
      row.fold = static_cast<int>(f);
      row.metrics.n_test = static_cast<Index>(plan.cv.splits[f].test.size());
      const auto start = std::chrono::steady_clock::now();
      try {
        row.metrics = run_fold(algorithm, plan.data.dataset, plan.cv.splits[f], config.standardize);
      } catch (const std::exception& e) {
        row.error = e.what();
        if (row.error.empty()) row.error = "unknown failure";
      }
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      cells[c].push_back(std::move(row));
    }
  });

  BenchmarkResult result;
  for (auto& cell : cells) {
    for (ResultRow& row : cell) result.rows.push_back(std::move(row));
  }
  result.summary = summarize(result.rows, config.algorithms);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows,
                                  const std::vector<AlgorithmSpec>& algorithms) {
  std::vector<SummaryRow> out;
  for (const AlgorithmSpec& algorithm : algorithms) {
    SummaryRow s;
    s.algorithm = algorithm.label;
    std::vector<const MetricReport*> ok;
    for (const ResultRow& r : rows) {
      if (r.algorithm != algorithm.label) continue;
      if (r.error.empty()) {
        ok.push_back(&r.metrics);
      } else {
        ++s.n_failed;
      }
    }
    s.n_ok = static_cast<Index>(ok.size());
    auto stats = [&](double MetricReport::*field, double& mean, double& sd) {
      mean = sd = 0.0;
      if (ok.empty()) return;
      for (const MetricReport* m : ok) mean += m->*field;
      mean /= static_cast<double>(ok.size());
      if (ok.size() < 2) return;
      for (const MetricReport* m : ok) sd += (m->*field - mean) * (m->*field - mean);
      sd = std::sqrt(sd / static_cast<double>(ok.size() - 1));
    };
    stats(&MetricReport::accuracy, s.accuracy_mean, s.accuracy_sd);
    stats(&MetricReport::balanced_accuracy, s.balanced_accuracy_mean, s.balanced_accuracy_sd);
    stats(&MetricReport::log_loss, s.log_loss_mean, s.log_loss_sd);
    out.push_back(s);
  }
  return out;
}

}  // namespace bqlearn::bench
