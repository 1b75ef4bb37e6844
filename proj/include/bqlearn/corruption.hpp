#pragma once

#include "bqlearn/classifier.hpp"
#include "bqlearn/dataset.hpp"

#include <cstdint>
#include <random>

namespace bqlearn {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
double uniform01(Rng& rng);

/// Throws unless `m` is square, entries in [0, 1], rows summing to 1 +- 1e-9.
void check_noise_matrix(const Matrix& m);

/// Uniform noise: keep with 1 - ratio, spread ratio evenly over other classes.
Matrix uniform_noise_matrix(int n_classes, double noise_ratio);

struct CorruptionReport {
  Index n_corrupted = 0;
  double realized_noise_ratio = 0.0;
  /// (true class, observed class) counts, diagonal included.
  Eigen::MatrixXi per_class_flip_counts;
  std::uint64_t seed = 0;
};

CorruptionReport make_report(const Labels& clean, const Labels& noisy, int n_classes,
                             std::uint64_t seed);

struct NoisyLabels {
  Labels labels;
  CorruptionReport report;
};

/// Resamples each label i from row M[i].
NoisyLabels make_label_noise(const Labels& labels, const Matrix& noise_matrix,
                             std::uint64_t seed);

/// Sample i flips with probability p_i; the replacement class is drawn from
/// row M[y_i] restricted to its off-diagonal entries.
NoisyLabels make_instance_dependent_label_noise(const Labels& labels, const Vector& flip_probability,
                                                const Matrix& noise_matrix, std::uint64_t seed);

/// p_i = min(1, c * (1 - model(x_i)[y_i])) with c solved by bisection so that
/// mean(p) equals `target_ratio`.
Vector uncertainty_noise_probability(const Matrix& features, const Labels& labels,
                                     const Predictor& model, double target_ratio);

struct FeatureNoiseOptions {
  double flip_sd = 0.1;
};

struct FeatureNoise {
  Labels labels;
  CorruptionReport report;
  /// d x K random linear map.
  Matrix projection;
  /// Per-sample flip budget q_i.
  Vector flip_budget;
};

/// Distribution over classes for one sample: keep y with 1 - q, otherwise
/// q * softmax(x W) over the other classes.
Vector feature_dependent_flip_distribution(const Vector& x, int label, const Matrix& projection,
                                           double flip_budget);

FeatureNoise make_feature_dependent_label_noise(const Matrix& features, const Labels& labels,
                                                int n_classes, double noise_ratio,
                                                std::uint64_t seed,
                                                FeatureNoiseOptions options = {});

/// Stratified trusted subset keeps its labels; the learner fitted on it
/// relabels every other sample with its hard predictions.
BiqualityDataset make_weak_labels(const Matrix& features, const Labels& labels, int n_classes,
                                  double trusted_fraction, const Classifier& learner,
                                  std::uint64_t seed);

/// Stratified draw of round(fraction * n) indices, at least one per present
/// class. Returned sorted.
IndexList stratified_subset(const Labels& labels, int n_classes, double fraction, Rng& rng);

/// Largest-remainder rounding of `total * distribution`.
std::vector<Index> largest_remainder_counts(const Vector& distribution, Index total);

enum class ImbalanceMode { kUndersample, kOversample };

struct ImbalanceResult {
  BiqualityDataset dataset;
  /// Source row of every output row.
  IndexList indices;
  std::vector<Index> class_counts;
};

ImbalanceResult make_imbalance(const BiqualityDataset& ds, const Vector& target_distribution,
                               ImbalanceMode mode, std::uint64_t seed);

/// First principal component of the centered data, oriented so that its
/// largest-magnitude loading is positive.
Vector first_principal_component(const Matrix& features);

/// Indices drawn without replacement with probability proportional to a
/// Gaussian density on the first-PC projection (mean mu + shift*sigma, sd
/// scale*sigma). Returned sorted.
IndexList make_sampling_bias(const Matrix& features, double shift, double scale,
                             Index target_size, std::uint64_t seed);

inline IndexList make_sampling_biais(const Matrix& features, double shift, double scale,
                                     Index target_size, std::uint64_t seed) {
  return make_sampling_bias(features, shift, scale, target_size, seed);
}

}  // namespace bqlearn
