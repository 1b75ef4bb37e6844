#pragma once

#include "bqlearn/classifier.hpp"
#include "bqlearn/dataset.hpp"

#include <cstdint>
#include <vector>

namespace bqlearn {

struct Split {
  IndexList train;
  IndexList test;
};

/// Test folds hold only trusted samples.
using BiqualitySplit = Split;

struct BiqualityCv {
  std::vector<BiqualitySplit> splits;
  /// Base splits whose test set had no trusted sample left.
  int n_dropped = 0;
};

/// Moves untrusted test indices of every base split into its train set and
/// drops splits left without a test sample.
BiqualityCv make_biquality_cv(const std::vector<Split>& base_splits, const Labels& sample_quality);

/// Plain k-fold over n samples, optionally shuffled with `seed`.
std::vector<Split> kfold_splits(Index n_samples, int n_folds, bool shuffle, std::uint64_t seed);

struct MetricReport {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double log_loss = 0.0;
  Index n_test = 0;
};

/// Scores `model` on the trusted rows `test_indices` of `ds`. Any untrusted
/// index is a hard error.
MetricReport evaluate(const Predictor& model, const BiqualityDataset& ds,
                      const IndexList& test_indices);

}  // namespace bqlearn
