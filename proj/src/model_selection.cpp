#include "bqlearn/model_selection.hpp"

#include "bqlearn/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bqlearn {

BiqualityCv make_biquality_cv(const std::vector<Split>& base_splits, const Labels& sample_quality) {
  BiqualityCv out;
  for (const Split& base : base_splits) {
    BiqualitySplit split;
    split.train = base.train;
    for (Index i : base.test) {
      if (i < 0 || i >= sample_quality.size()) {
        throw Error("split index " + std::to_string(i) + " is out of range");
      }
      const int q = sample_quality[i];
      if (q != 0 && q != 1) throw Error("sample_quality must be 0 or 1");
      (q == 1 ? split.test : split.train).push_back(i);
    }
    if (split.test.empty()) {
      ++out.n_dropped;
      continue;
    }
    std::sort(split.train.begin(), split.train.end());
    out.splits.push_back(std::move(split));
  }
  return out;
}

std::vector<Split> kfold_splits(Index n_samples, int n_folds, bool shuffle, std::uint64_t seed) {
  if (n_folds < 2) throw Error("k-fold needs at least two folds");
  if (n_samples < n_folds) throw Error("k-fold: fewer samples than folds");
  IndexList order(static_cast<std::size_t>(n_samples));
  std::iota(order.begin(), order.end(), Index{0});
  if (shuffle) {
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
  }

  std::vector<Split> splits;
  Index start = 0;
  for (int f = 0; f < n_folds; ++f) {
    const Index size = n_samples / n_folds + (f < n_samples % n_folds ? 1 : 0);
    Split split;
    for (Index r = 0; r < n_samples; ++r) {
      const Index i = order[static_cast<std::size_t>(r)];
      (r >= start && r < start + size ? split.test : split.train).push_back(i);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    splits.push_back(std::move(split));
    start += size;
  }
  return splits;
}

MetricReport evaluate(const Predictor& model, const BiqualityDataset& ds,
                      const IndexList& test_indices) {
  validate_dataset(ds);
  if (test_indices.empty()) throw Error("evaluate: empty test set");
  for (Index i : test_indices) {
    if (i < 0 || i >= ds.n_samples()) throw Error("evaluate: index out of range");
    if (ds.sample_quality[i] != 1) {
      throw Error("evaluate: test index " + std::to_string(i) + " is untrusted");
    }
  }
  if (model.n_classes() != ds.n_classes) throw Error("evaluate: class count mismatch");

  const Labels truth = take(ds.labels, test_indices);
  Matrix proba = model.predict_proba(take_rows(ds.features, test_indices));
  const Labels pred = argmax_rows(proba);

  std::vector<Index> support(static_cast<std::size_t>(ds.n_classes), 0);
  std::vector<Index> hits(static_cast<std::size_t>(ds.n_classes), 0);
  Index correct = 0;
  double loss = 0.0;
  for (Index i = 0; i < truth.size(); ++i) {
    const auto y = static_cast<std::size_t>(truth[i]);
    ++support[y];
    if (pred[i] == truth[i]) {
      ++hits[y];
      ++correct;
    }
    loss -= std::log(std::clamp(proba(i, truth[i]), kProbabilityFloor, 1.0));
  }

  MetricReport report;
  report.n_test = truth.size();
  report.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  report.log_loss = loss / static_cast<double>(truth.size());
  double recall_sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k] == 0) continue;
    recall_sum += static_cast<double>(hits[k]) / static_cast<double>(support[k]);
    ++present;
  }
  report.balanced_accuracy = recall_sum / present;
  return report;
}

}  // namespace bqlearn
