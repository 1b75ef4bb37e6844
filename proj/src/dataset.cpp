#include "bqlearn/dataset.hpp"

#include <string>

namespace bqlearn {

IndexList BiqualityDataset::trusted_indices() const {
  IndexList out;
  for (Index i = 0; i < sample_quality.size(); ++i) {
    if (sample_quality[i] == 1) out.push_back(i);
  }
  return out;
}

IndexList BiqualityDataset::untrusted_indices() const {
  IndexList out;
  for (Index i = 0; i < sample_quality.size(); ++i) {
    if (sample_quality[i] == 0) out.push_back(i);
  }
  return out;
}

BiqualityDataset BiqualityDataset::subset(const IndexList& indices) const {
  return {take_rows(features, indices), take(labels, indices), take(sample_quality, indices),
          n_classes};
}

DatasetSummary validate_dataset(const BiqualityDataset& ds, bool require_trusted) {
  const Index n = ds.features.rows();
  if (ds.labels.size() != n || ds.sample_quality.size() != n) {
    throw Error("dimension mismatch: " + std::to_string(n) + " feature rows, " +
                std::to_string(ds.labels.size()) + " labels, " +
                std::to_string(ds.sample_quality.size()) + " quality flags");
  }
  if (ds.n_classes < 1) throw Error("n_classes must be positive");
  if (!ds.features.allFinite()) throw Error("features contain non-finite values");

  DatasetSummary summary;
  summary.n_classes = ds.n_classes;
  for (Index i = 0; i < n; ++i) {
    const int q = ds.sample_quality[i];
    if (q != 0 && q != 1) throw Error("sample_quality must be 0 or 1");
    const int y = ds.labels[i];
    if (y < 0 || y >= ds.n_classes) {
      throw Error("label out of range: " + std::to_string(y) + " with n_classes=" +
                  std::to_string(ds.n_classes));
    }
    (q == 1 ? summary.n_trusted : summary.n_untrusted) += 1;
  }
  if (require_trusted && summary.n_trusted == 0) throw Error("trusted subset is empty");
  return summary;
}

BiqualityDataset make_dataset(Matrix features, Labels labels, Labels sample_quality,
                              int n_classes) {
  if (n_classes <= 0) n_classes = labels.size() == 0 ? 0 : labels.maxCoeff() + 1;
  BiqualityDataset ds{std::move(features), std::move(labels), std::move(sample_quality),
                      n_classes};
  validate_dataset(ds);
  return ds;
}

Matrix take_rows(const Matrix& m, const IndexList& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

Labels take(const Labels& v, const IndexList& rows) {
  Labels out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Index>(r)] = v[rows[r]];
  return out;
}

Vector take(const Vector& v, const IndexList& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Index>(r)] = v[rows[r]];
  return out;
}

std::vector<Index> class_counts(const Labels& labels, int n_classes) {
  std::vector<Index> counts(static_cast<std::size_t>(n_classes), 0);
  for (Index i = 0; i < labels.size(); ++i) ++counts[static_cast<std::size_t>(labels[i])];
  return counts;
}

}  // namespace bqlearn
