#include "bqlearn/transition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bqlearn {
namespace {

double one_norm(const Matrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

void check_compatible(const BiqualityDataset& ds, const TransitionMatrix& t) {
  validate_dataset(ds);
  if (t.n_classes() != ds.n_classes) {
    throw Error("transition matrix has " + std::to_string(t.n_classes()) +
                " classes, dataset has " + std::to_string(ds.n_classes));
  }
}

}  // namespace

TransitionMatrix::TransitionMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols() || values_.rows() == 0) {
    throw Error("transition matrix must be square and non-empty");
  }
  check_row_stochastic(values_, 1e-9, "transition matrix");
}

TransitionMatrix TransitionMatrix::identity(int n_classes) {
  return TransitionMatrix(Matrix::Identity(n_classes, n_classes));
}

double TransitionMatrix::condition_number() const {
  Eigen::FullPivLU<Matrix> lu(values_);
  if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
  return one_norm(values_) * one_norm(lu.inverse());
}

void TransitionMatrix::check_invertible() const {
  const double cond = condition_number();
  if (!(cond < kMaxCondition)) {
    throw Error("transition matrix is singular or ill-conditioned (condition number " +
                std::to_string(cond) + ")");
  }
}

Matrix TransitionMatrix::inverse() const {
  check_invertible();
  return values_.fullPivLu().inverse();
}

ClassifierPtr fit_untrusted_model(const BiqualityDataset& ds, const Classifier& prototype) {
  validate_dataset(ds);
  const IndexList untrusted = ds.untrusted_indices();
  if (untrusted.empty()) throw Error("untrusted subset is empty");
  ClassifierPtr model = prototype.clone();
  model->fit(take_rows(ds.features, untrusted), take(ds.labels, untrusted), ds.n_classes);
  return model;
}

TransitionMatrix estimate_transition_glc(const BiqualityDataset& ds,
                                         const Predictor& untrusted_model) {
  validate_dataset(ds, /*require_trusted=*/true);
  if (const auto* c = dynamic_cast<const Classifier*>(&untrusted_model); c && !c->is_fitted()) {
    throw Error("GLC: untrusted model is not fitted");
  }
  if (untrusted_model.n_classes() != ds.n_classes) {
    throw Error("GLC: model and dataset disagree on the number of classes");
  }

  const IndexList trusted = ds.trusted_indices();
  const Matrix proba = untrusted_model.predict_proba(take_rows(ds.features, trusted));
  const int k = ds.n_classes;
  Matrix t = Matrix::Zero(k, k);
  std::vector<Index> support(static_cast<std::size_t>(k), 0);
  for (std::size_t r = 0; r < trusted.size(); ++r) {
    const int y = ds.labels[trusted[r]];
    t.row(y) += proba.row(static_cast<Index>(r));
    ++support[static_cast<std::size_t>(y)];
  }
  for (int i = 0; i < k; ++i) {
    if (support[static_cast<std::size_t>(i)] == 0) {
      throw Error("GLC: class " + std::to_string(i) + " is absent from the trusted subset");
    }
    t.row(i) /= t.row(i).sum();
  }
  return TransitionMatrix(std::move(t));
}

TransitionMatrix estimate_transition_glc(const BiqualityDataset& ds,
                                         const Classifier& untrusted_prototype) {
  const ClassifierPtr model = fit_untrusted_model(ds, untrusted_prototype);
  return estimate_transition_glc(ds, static_cast<const Predictor&>(*model));
}

Matrix correct_posteriors(const Matrix& noisy_proba, const TransitionMatrix& transition) {
  if (noisy_proba.cols() != transition.n_classes()) {
    throw Error("posterior correction: class count mismatch");
  }
  // Rows are distributions, so (T^T)^{-1} p becomes p T^{-1} in row layout.
  Matrix clean = (noisy_proba * transition.inverse()).cwiseMax(0.0);
  for (Index i = 0; i < clean.rows(); ++i) clean.row(i) /= clean.row(i).sum();
  return clean;
}

CorrectedClassifier::CorrectedClassifier(ClassifierPtr base, TransitionMatrix transition,
                                         CorrectionMode mode, Vector training_weights)
    : base_(std::move(base)),
      transition_(std::move(transition)),
      mode_(mode),
      training_weights_(std::move(training_weights)) {}

Matrix CorrectedClassifier::predict_proba(const Matrix& features) const {
  if (mode_ != CorrectionMode::kPlugin) return base_->predict_proba(features);
  Matrix p = correct_posteriors(base_->predict_proba(features), transition_);
  floor_and_normalize(p);
  return p;
}

BackwardExpansion backward_expansion(const BiqualityDataset& ds, const TransitionMatrix& t,
                                     bool clip_negative) {
  check_compatible(ds, t);
  const Matrix t_inv = t.inverse();
  const int k = ds.n_classes;

  std::vector<std::pair<Index, int>> rows;
  std::vector<double> weights;
  for (Index i = 0; i < ds.n_samples(); ++i) {
    if (ds.sample_quality[i] == 1) {
      rows.emplace_back(i, ds.labels[i]);
      weights.push_back(1.0);
      continue;
    }
    const int observed = ds.labels[i];
    for (int j = 0; j < k; ++j) {
      double w = t_inv(observed, j);
      if (clip_negative && w < 0.0) w = 0.0;
      if (w == 0.0) continue;
      rows.emplace_back(i, j);
      weights.push_back(w);
    }
  }

  BackwardExpansion out;
  const auto m = static_cast<Index>(rows.size());
  out.features.resize(m, ds.n_features());
  out.labels.resize(m);
  out.weights = Eigen::Map<const Vector>(weights.data(), m);
  out.source.reserve(rows.size());
  for (Index r = 0; r < m; ++r) {
    const auto [src, label] = rows[static_cast<std::size_t>(r)];
    out.features.row(r) = ds.features.row(src);
    out.labels[r] = label;
    out.source.push_back(src);
  }
  return out;
}

CorrectedClassifier fit_backward(const BiqualityDataset& ds, const TransitionMatrix& t,
                                 const Classifier& base, BackwardOptions options) {
  if (!options.clip_negative && !base.supports_signed_weights()) {
    throw Error("backward correction: base learner does not accept signed weights "
                "(enable clip_negative)");
  }
  BackwardExpansion expanded = backward_expansion(ds, t, options.clip_negative);
  ClassifierPtr model = base.clone();
  model->fit(expanded.features, expanded.labels, expanded.weights, ds.n_classes);
  return {std::move(model), t, CorrectionMode::kBackward, std::move(expanded.weights)};
}

Vector irlnl_weights(const Matrix& noisy_proba, const Labels& observed,
                     const TransitionMatrix& t, double w_max) {
  if (noisy_proba.rows() != observed.size()) throw Error("IRLNL: dimension mismatch");
  if (!(w_max > 0.0)) throw Error("IRLNL: w_max must be positive");
  const Matrix clean = correct_posteriors(noisy_proba, t);
  Vector beta(observed.size());
  for (Index i = 0; i < observed.size(); ++i) {
    const double noisy = std::max(noisy_proba(i, observed[i]), kProbabilityFloor);
    beta[i] = std::clamp(clean(i, observed[i]) / noisy, 0.0, w_max);
  }
  return beta;
}

CorrectedClassifier fit_irlnl(const BiqualityDataset& ds, const TransitionMatrix& t,
                              const Classifier& base, IrlnlOptions options) {
  check_compatible(ds, t);
  t.check_invertible();
  const IndexList untrusted = ds.untrusted_indices();

  Vector weights = Vector::Ones(ds.n_samples());
  if (!untrusted.empty()) {
    const ClassifierPtr noisy_model = fit_untrusted_model(ds, base);
    const Matrix untrusted_x = take_rows(ds.features, untrusted);
    const Vector beta = irlnl_weights(noisy_model->predict_proba(untrusted_x),
                                      take(ds.labels, untrusted), t, options.w_max);
    for (std::size_t r = 0; r < untrusted.size(); ++r) {
      weights[untrusted[r]] = beta[static_cast<Index>(r)];
    }
  }

  ClassifierPtr model = base.clone();
  model->fit(ds.features, ds.labels, weights, ds.n_classes);
  return {std::move(model), t, CorrectionMode::kIrlnl, std::move(weights)};
}

CorrectedClassifier fit_plugin(const BiqualityDataset& ds, const TransitionMatrix& t,
                               const Classifier& base) {
  check_compatible(ds, t);
  t.check_invertible();
  ClassifierPtr model = base.clone();
  Vector weights = Vector::Ones(ds.n_samples());
  model->fit(ds.features, ds.labels, weights, ds.n_classes);
  return {std::move(model), t, CorrectionMode::kPlugin, std::move(weights)};
}

}  // namespace bqlearn
