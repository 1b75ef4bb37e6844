#include "bqlearn/unhinged.hpp"

#include <set>

namespace bqlearn {

UnhingedClassifier::UnhingedClassifier(double reg, std::optional<KernelSpec> kernel)
    : reg_(reg), kernel_(std::move(kernel)) {
  if (!(reg_ > 0.0)) throw Error("unhinged: reg must be positive");
  if (kernel_ && kernel_->family == KernelFamily::kLinear) kernel_.reset();
}

void UnhingedClassifier::fit(const Matrix& features, const Labels& labels, const Vector& weights,
                             int n_classes) {
  const Index n = features.rows();
  if (labels.size() != n || weights.size() != n) throw Error("unhinged: dimension mismatch");
  if (!features.allFinite()) throw Error("unhinged: non-finite feature values");
  if (n_classes < 2) throw Error("unhinged: need at least two classes");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw Error("unhinged: weights must be finite and non-negative");
  }
  std::set<int> seen;
  for (Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw Error("label out of range");
    if (weights[i] > 0.0) seen.insert(labels[i]);
  }
  if (seen.size() < 2) throw Error("unhinged: single-class input");

  // One-vs-rest signs: +1 for the sample's own class, -1 elsewhere.
  const double scale = 1.0 / (reg_ * weights.sum());
  Matrix alpha = Matrix::Constant(n, n_classes, -1.0);
  for (Index i = 0; i < n; ++i) alpha(i, labels[i]) = 1.0;
  alpha.array().colwise() *= weights.array() * scale;

  if (kernel_) {
    fitted_kernel_ = resolve_kernel(*kernel_, features);
    support_ = features;
    coef_ = std::move(alpha);
  } else {
    support_.resize(0, features.cols());
    coef_ = features.transpose() * alpha;
  }
  n_classes_ = n_classes;
}

Matrix UnhingedClassifier::decision_function(const Matrix& features) const {
  if (!is_fitted()) throw Error("unhinged: model is not fitted");
  if (fitted_kernel_) return gram(*fitted_kernel_, features, support_) * coef_;
  if (features.cols() != coef_.rows()) throw Error("unhinged: feature count differs");
  return features * coef_;
}

Matrix UnhingedClassifier::predict_proba(const Matrix& features) const {
  Matrix p = decision_function(features);
  for (Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  floor_and_normalize(p);
  return p;
}

ClassifierPtr UnhingedClassifier::clone() const {
  return std::make_unique<UnhingedClassifier>(reg_, kernel_);
}

UnhingedClassifier fit_unhinged(const BiqualityDataset& ds, std::optional<KernelSpec> kernel,
                                double reg) {
  validate_dataset(ds);
  UnhingedClassifier model(reg, std::move(kernel));
  model.fit(ds.features, ds.labels, ds.n_classes);
  return model;
}

}  // namespace bqlearn
