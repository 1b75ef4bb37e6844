#pragma once

#include "bqlearn/types.hpp"

namespace bqlearn {

/// Features, labels and trust indicator of one global biquality dataset.
///
/// `sample_quality[i] == 1` marks a trusted (cleanly labeled, representative)
/// sample, `0` an untrusted one. Trusted and untrusted samples live in the
/// same arrays; algorithms split them internally.
struct BiqualityDataset {
  Matrix features;
  Labels labels;
  Labels sample_quality;
  int n_classes = 0;

  Index n_samples() const { return features.rows(); }
  Index n_features() const { return features.cols(); }

  IndexList trusted_indices() const;
  IndexList untrusted_indices() const;

  /// Rows selected by `indices` (repeats allowed), same class count.
  BiqualityDataset subset(const IndexList& indices) const;
};

struct DatasetSummary {
  Index n_trusted = 0;
  Index n_untrusted = 0;
  int n_classes = 0;
};

/// Checks every dataset invariant and reports the trust counts. Throws
/// `Error` on a shape mismatch, a quality value outside {0,1}, a label out of
/// range, or (when `require_trusted`) an empty trusted subset.
DatasetSummary validate_dataset(const BiqualityDataset& ds, bool require_trusted = false);

/// Builds a dataset, inferring `n_classes` as max(label)+1 when not given.
BiqualityDataset make_dataset(Matrix features, Labels labels, Labels sample_quality,
                              int n_classes = 0);

Matrix take_rows(const Matrix& m, const IndexList& rows);
Labels take(const Labels& v, const IndexList& rows);
Vector take(const Vector& v, const IndexList& rows);

/// Per-class sample counts of `labels` (size `n_classes`).
std::vector<Index> class_counts(const Labels& labels, int n_classes);

}  // namespace bqlearn
