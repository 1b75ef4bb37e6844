#include "bqlearn/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace bqlearn {
namespace {

int sample_categorical(const Eigen::Ref<const Eigen::RowVectorXd>& probs, Rng& rng) {
  const double total = probs.sum();
  const double u = uniform01(rng) * total;
  double cumulative = 0.0;
  int last_positive = 0;
  for (Index j = 0; j < probs.size(); ++j) {
    if (probs[j] <= 0.0) continue;
    last_positive = static_cast<int>(j);
    cumulative += probs[j];
    if (u < cumulative) return static_cast<int>(j);
  }
  return last_positive;
}

void shuffle(IndexList& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(values[i - 1], values[std::min(j, i - 1)]);
  }
}

void check_labels(const Labels& labels, int n_classes) {
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw Error("label out of range");
  }
}

}  // namespace

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void check_noise_matrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw Error("noise matrix must be square");
  check_row_stochastic(m, 1e-9, "noise matrix");
}

Matrix uniform_noise_matrix(int n_classes, double noise_ratio) {
  if (n_classes < 2) throw Error("uniform noise needs at least two classes");
  if (!(noise_ratio >= 0.0 && noise_ratio <= 1.0)) throw Error("noise_ratio must be in [0, 1]");
  Matrix m = Matrix::Constant(n_classes, n_classes, noise_ratio / (n_classes - 1));
  m.diagonal().setConstant(1.0 - noise_ratio);
  return m;
}

CorruptionReport make_report(const Labels& clean, const Labels& noisy, int n_classes,
                             std::uint64_t seed) {
  if (clean.size() != noisy.size()) throw Error("report: dimension mismatch");
  CorruptionReport report;
  report.seed = seed;
  report.per_class_flip_counts = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (Index i = 0; i < clean.size(); ++i) {
    ++report.per_class_flip_counts(clean[i], noisy[i]);
    if (clean[i] != noisy[i]) ++report.n_corrupted;
  }
  report.realized_noise_ratio =
      clean.size() == 0 ? 0.0
                        : static_cast<double>(report.n_corrupted) / static_cast<double>(clean.size());
  return report;
}

NoisyLabels make_label_noise(const Labels& labels, const Matrix& noise_matrix,
                             std::uint64_t seed) {
  check_noise_matrix(noise_matrix);
  const int k = static_cast<int>(noise_matrix.rows());
  check_labels(labels, k);
  Rng rng(seed);
  Labels noisy(labels.size());
  for (Index i = 0; i < labels.size(); ++i) {
    noisy[i] = sample_categorical(noise_matrix.row(labels[i]), rng);
  }
  return {noisy, make_report(labels, noisy, k, seed)};
}

NoisyLabels make_instance_dependent_label_noise(const Labels& labels, const Vector& flip_probability,
                                                const Matrix& noise_matrix, std::uint64_t seed) {
  check_noise_matrix(noise_matrix);
  const int k = static_cast<int>(noise_matrix.rows());
  check_labels(labels, k);
  if (flip_probability.size() != labels.size()) throw Error("flip probabilities: size mismatch");

  Matrix off_diagonal = noise_matrix;
  off_diagonal.diagonal().setZero();
  for (Index i = 0; i < labels.size(); ++i) {
    const double p = flip_probability[i];
    if (!(p >= 0.0 && p <= 1.0)) throw Error("flip probabilities must lie in [0, 1]");
    if (p > 0.0 && off_diagonal.row(labels[i]).sum() <= 0.0) {
      throw Error("noise matrix row " + std::to_string(labels[i]) +
                  " has no off-diagonal mass but a sample of that class may flip");
    }
  }

  Rng rng(seed);
  Labels noisy = labels;
  for (Index i = 0; i < labels.size(); ++i) {
    if (uniform01(rng) < flip_probability[i]) {
      noisy[i] = sample_categorical(off_diagonal.row(labels[i]), rng);
    }
  }
  return {noisy, make_report(labels, noisy, k, seed)};
}

Vector uncertainty_noise_probability(const Matrix& features, const Labels& labels,
                                     const Predictor& model, double target_ratio) {
  if (!(target_ratio >= 0.0 && target_ratio < 1.0)) {
    throw Error("target_ratio must be in [0, 1)");
  }
  if (features.rows() != labels.size()) throw Error("uncertainty: dimension mismatch");
  check_labels(labels, model.n_classes());
  const Index n = labels.size();
  if (n == 0 || target_ratio == 0.0) return Vector::Zero(n);

  const Matrix proba = model.predict_proba(features);
  Vector uncertainty(n);
  double min_positive = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    uncertainty[i] = std::clamp(1.0 - proba(i, labels[i]), 0.0, 1.0);
    if (uncertainty[i] > 0.0) min_positive = std::min(min_positive, uncertainty[i]);
  }

  auto mean_at = [&](double c) { return (c * uncertainty.array()).min(1.0).mean(); };
  if (!std::isfinite(min_positive)) {
    throw Error("target noise ratio unreachable: every uncertainty score is zero");
  }
  // At c = 1/min_positive every positive score saturates; that is the maximum.
  double lo = 0.0;
  double hi = 1.0 / min_positive;
  if (mean_at(hi) < target_ratio - 1e-12) {
    throw Error("target noise ratio unreachable: at most " + std::to_string(mean_at(hi)));
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (mean_at(mid) < target_ratio ? lo : hi) = mid;
  }
  const double c = std::abs(mean_at(lo) - target_ratio) < std::abs(mean_at(hi) - target_ratio)
                       ? lo
                       : hi;
  return (c * uncertainty.array()).min(1.0).matrix();
}

Vector feature_dependent_flip_distribution(const Vector& x, int label, const Matrix& projection,
                                           double flip_budget) {
  if (x.size() != projection.rows()) throw Error("flip distribution: feature count mismatch");
  const Index k = projection.cols();
  Vector scores = projection.transpose() * x;
  double top = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < k; ++j) {
    if (j != label) top = std::max(top, scores[j]);
  }
  Vector dist(k);
  for (Index j = 0; j < k; ++j) dist[j] = j == label ? 0.0 : std::exp(scores[j] - top);
  dist *= flip_budget / dist.sum();
  dist[label] = 1.0 - flip_budget;
  return dist;
}

FeatureNoise make_feature_dependent_label_noise(const Matrix& features, const Labels& labels,
                                                int n_classes, double noise_ratio,
                                                std::uint64_t seed, FeatureNoiseOptions options) {
  if (!(noise_ratio >= 0.0 && noise_ratio < 1.0)) throw Error("noise_ratio must be in [0, 1)");
  if (!(options.flip_sd >= 0.0)) throw Error("flip_sd must be non-negative");
  if (n_classes < 2) throw Error("feature-dependent noise needs at least two classes");
  if (features.rows() != labels.size()) throw Error("feature-dependent noise: dimension mismatch");
  if (!features.allFinite()) throw Error("features contain non-finite values");
  check_labels(labels, n_classes);

  const Index n = labels.size();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  FeatureNoise out;
  out.projection.resize(features.cols(), n_classes);
  for (Index j = 0; j < out.projection.cols(); ++j) {
    for (Index i = 0; i < out.projection.rows(); ++i) out.projection(i, j) = normal(rng);
  }

  out.flip_budget = Vector::Zero(n);
  if (noise_ratio > 0.0) {
    for (Index i = 0; i < n; ++i) {
      double q = noise_ratio;
      if (options.flip_sd > 0.0) {
        do {
          q = noise_ratio + options.flip_sd * normal(rng);
        } while (q < 0.0 || q > 1.0);
      }
      out.flip_budget[i] = q;
    }
  }

  out.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Vector dist = feature_dependent_flip_distribution(
        features.row(i).transpose(), labels[i], out.projection, out.flip_budget[i]);
    out.labels[i] = sample_categorical(dist.transpose(), rng);
  }
  out.report = make_report(labels, out.labels, n_classes, seed);
  return out;
}

std::vector<Index> largest_remainder_counts(const Vector& distribution, Index total) {
  const Index k = distribution.size();
  std::vector<Index> counts(static_cast<std::size_t>(k));
  std::vector<double> remainders(static_cast<std::size_t>(k));
  Index assigned = 0;
  for (Index j = 0; j < k; ++j) {
    const double raw = distribution[j] * static_cast<double>(total);
    const double whole = std::floor(raw);
    counts[static_cast<std::size_t>(j)] = static_cast<Index>(whole);
    remainders[static_cast<std::size_t>(j)] = raw - whole;
    assigned += static_cast<Index>(whole);
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t r = 0; assigned < total && k > 0; r = (r + 1) % order.size()) {
    ++counts[order[r]];
    ++assigned;
  }
  return counts;
}

IndexList stratified_subset(const Labels& labels, int n_classes, double fraction, Rng& rng) {
  check_labels(labels, n_classes);
  const Index n = labels.size();
  std::vector<IndexList> members(static_cast<std::size_t>(n_classes));
  for (Index i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);

  Vector distribution(n_classes);
  for (int k = 0; k < n_classes; ++k) {
    distribution[k] = static_cast<double>(members[static_cast<std::size_t>(k)].size()) /
                      static_cast<double>(n);
  }
  const auto total = static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
  std::vector<Index> counts = largest_remainder_counts(distribution, total);

  // Every present class gets at least one sample, taken from the largest quota.
  for (int k = 0; k < n_classes; ++k) {
    auto& c = counts[static_cast<std::size_t>(k)];
    if (c > 0 || members[static_cast<std::size_t>(k)].empty()) continue;
    c = 1;
    const auto donor = std::max_element(counts.begin(), counts.end()) - counts.begin();
    if (counts[static_cast<std::size_t>(donor)] > 1) --counts[static_cast<std::size_t>(donor)];
  }

  IndexList out;
  for (int k = 0; k < n_classes; ++k) {
    IndexList pool = members[static_cast<std::size_t>(k)];
    shuffle(pool, rng);
    const auto take_n = std::min<std::size_t>(pool.size(),
                                              static_cast<std::size_t>(counts[static_cast<std::size_t>(k)]));
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take_n));
  }
  std::sort(out.begin(), out.end());
  return out;
}

BiqualityDataset make_weak_labels(const Matrix& features, const Labels& labels, int n_classes,
                                  double trusted_fraction, const Classifier& learner,
                                  std::uint64_t seed) {
  if (!(trusted_fraction > 0.0 && trusted_fraction < 1.0)) {
    throw Error("trusted_fraction must be in (0, 1)");
  }
  if (features.rows() != labels.size()) throw Error("weak labels: dimension mismatch");
  Rng rng(seed);
  const IndexList trusted = stratified_subset(labels, n_classes, trusted_fraction, rng);

  BiqualityDataset ds{features, labels, Labels::Zero(labels.size()), n_classes};
  for (Index i : trusted) ds.sample_quality[i] = 1;
  const IndexList untrusted = ds.untrusted_indices();
  if (untrusted.empty()) return ds;

  ClassifierPtr model = learner.clone();
  model->fit(take_rows(features, trusted), take(labels, trusted), n_classes);
  const Labels weak = model->predict(take_rows(features, untrusted));
  for (std::size_t r = 0; r < untrusted.size(); ++r) {
    ds.labels[untrusted[r]] = weak[static_cast<Index>(r)];
  }
  return ds;
}

ImbalanceResult make_imbalance(const BiqualityDataset& ds, const Vector& target_distribution,
                               ImbalanceMode mode, std::uint64_t seed) {
  validate_dataset(ds);
  const int k = ds.n_classes;
  if (target_distribution.size() != k) throw Error("target distribution has wrong length");
  if ((target_distribution.array() < 0.0).any() ||
      std::abs(target_distribution.sum() - 1.0) > 1e-9) {
    throw Error("target distribution must be a probability simplex");
  }
  const std::vector<Index> available = class_counts(ds.labels, k);
  const Index n = ds.n_samples();

  auto fits = [&](const std::vector<Index>& counts) {
    for (int j = 0; j < k; ++j) {
      const auto idx = static_cast<std::size_t>(j);
      const bool ok = mode == ImbalanceMode::kUndersample ? counts[idx] <= available[idx]
                                                          : counts[idx] >= available[idx];
      if (!ok) return false;
    }
    return true;
  };

  for (int j = 0; j < k; ++j) {
    if (target_distribution[j] > 0.0 && available[static_cast<std::size_t>(j)] == 0) {
      throw Error("target distribution demands class " + std::to_string(j) +
                  ", which has no samples");
    }
  }

  std::vector<Index> counts;
  if (mode == ImbalanceMode::kUndersample) {
    Index total = n;
    for (; total > 0; --total) {
      counts = largest_remainder_counts(target_distribution, total);
      if (fits(counts)) break;
    }
    if (total == 0) {
      throw Error("cannot undersample to the target: it demands samples of a class that has none");
    }
  } else {
    for (int j = 0; j < k; ++j) {
      if (target_distribution[j] == 0.0 && available[static_cast<std::size_t>(j)] > 0) {
        throw Error("oversampling cannot drop class " + std::to_string(j));
      }
    }
    Index total = n;
    for (;; ++total) {
      counts = largest_remainder_counts(target_distribution, total);
      if (fits(counts)) break;
      if (total > 1'000'000'000) throw Error("oversampling target is unreachable");
    }
  }

  std::vector<IndexList> members(static_cast<std::size_t>(k));
  for (Index i = 0; i < n; ++i) members[static_cast<std::size_t>(ds.labels[i])].push_back(i);

  Rng rng(seed);
  ImbalanceResult out;
  for (int j = 0; j < k; ++j) {
    IndexList pool = members[static_cast<std::size_t>(j)];
    const Index want = counts[static_cast<std::size_t>(j)];
    if (mode == ImbalanceMode::kUndersample) {
      shuffle(pool, rng);
      pool.resize(static_cast<std::size_t>(want));
    } else {
      const std::size_t originals = pool.size();
      while (static_cast<Index>(pool.size()) < want) {
        const auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(originals));
        pool.push_back(pool[std::min(pick, originals - 1)]);
      }
    }
    out.indices.insert(out.indices.end(), pool.begin(), pool.end());
  }
  std::sort(out.indices.begin(), out.indices.end());
  out.dataset = ds.subset(out.indices);
  out.class_counts = counts;
  return out;
}

Vector first_principal_component(const Matrix& features) {
  if (features.rows() < 2) throw Error("PCA needs at least two samples");
  const Matrix centered = features.rowwise() - features.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  Vector pc = eig.eigenvectors().col(cov.rows() - 1);
  Index lead = 0;
  for (Index j = 1; j < pc.size(); ++j) {
    if (std::abs(pc[j]) > std::abs(pc[lead])) lead = j;
  }
  if (pc[lead] < 0.0) pc = -pc;
  return pc;
}

IndexList make_sampling_bias(const Matrix& features, double shift, double scale,
                             Index target_size, std::uint64_t seed) {
  const Index n = features.rows();
  if (n < 2) throw Error("sampling bias needs at least two samples");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("scale must be positive");
  if (!std::isfinite(shift)) throw Error("shift must be finite");
  if (target_size < 0 || target_size > n) throw Error("target_size exceeds the number of samples");
  if (!features.allFinite()) throw Error("features contain non-finite values");

  const Vector pc = first_principal_component(features);
  const Vector z = (features.rowwise() - features.colwise().mean()) * pc;
  const double mu = z.mean();
  const double sigma = std::sqrt((z.array() - mu).square().sum() / static_cast<double>(n - 1));

  // Weighted draw without replacement (Efraimidis-Spirakis keys u^(1/w)),
  // compared in log space: log w - log(-log u).
  Rng rng(seed);
  std::vector<std::pair<double, Index>> keys(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    double log_weight = 0.0;
    if (sigma > 0.0) {
      const double t = (z[i] - (mu + shift * sigma)) / (scale * sigma);
      log_weight = -0.5 * t * t;
    }
    const double u = std::max(uniform01(rng), std::numeric_limits<double>::min());
    keys[static_cast<std::size_t>(i)] = {log_weight - std::log(-std::log(u)), i};
  }
  std::stable_sort(keys.begin(), keys.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  IndexList out;
  out.reserve(static_cast<std::size_t>(target_size));
  for (Index r = 0; r < target_size; ++r) out.push_back(keys[static_cast<std::size_t>(r)].second);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bqlearn
