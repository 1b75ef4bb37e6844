#include "bqlearn/logistic.hpp"

#include <cmath>
#include <set>

namespace bqlearn {
namespace {

Matrix scores(const Matrix& theta, const Matrix& features) {
  const Index d = features.cols();
  Matrix z = features * theta.topRows(d);
  z.rowwise() += theta.row(d);
  return z;
}

// Row-wise log-sum-exp and softmax of z, in place.
Vector softmax_rows(Matrix& z) {
  Vector lse(z.rows());
  for (Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - m).exp();
    const double s = z.row(i).sum();
    z.row(i) /= s;
    lse[i] = m + std::log(s);
  }
  return lse;
}

void check_inputs(const Matrix& features, const Labels& labels, const Vector& weights,
                  int n_classes) {
  if (labels.size() != features.rows() || weights.size() != features.rows()) {
    throw Error("logistic regression: dimension mismatch");
  }
  if (!features.allFinite()) throw Error("logistic regression: non-finite feature values");
  if (!weights.allFinite()) throw Error("logistic regression: non-finite weights");
  if (n_classes < 2) throw Error("logistic regression: need at least two classes");
  std::set<int> seen;
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw Error("label out of range");
    if (weights[i] != 0.0) seen.insert(labels[i]);
  }
  if (seen.empty()) throw Error("logistic regression: all sample weights are zero");
  if (seen.size() < 2) {
    throw Error("logistic regression: need two distinct labels among weighted samples");
  }
}

}  // namespace

LogisticObjective logistic_objective(const Matrix& theta, const Matrix& features,
                                     const Labels& labels, const Vector& weights,
                                     double l2_penalty) {
  const Index d = features.cols();
  Matrix p = scores(theta, features);
  Vector z_true(p.rows());
  for (Index i = 0; i < p.rows(); ++i) z_true[i] = p(i, labels[i]);
  const Vector lse = softmax_rows(p);

  LogisticObjective out;
  out.value = weights.dot(lse - z_true) + 0.5 * l2_penalty * theta.topRows(d).squaredNorm();

  // Residual (P - onehot(y)) scaled by the sample weight.
  for (Index i = 0; i < p.rows(); ++i) p(i, labels[i]) -= 1.0;
  p.array().colwise() *= weights.array();

  out.gradient.resize(theta.rows(), theta.cols());
  out.gradient.topRows(d) = features.transpose() * p + l2_penalty * theta.topRows(d);
  out.gradient.row(d) = p.colwise().sum();
  return out;
}

void WeightedLogisticRegression::fit(const Matrix& features, const Labels& labels,
                                     const Vector& weights, int n_classes) {
  check_inputs(features, labels, weights, n_classes);
  if (config_.l2_penalty < 0.0 || config_.tol < 0.0 || config_.max_iter < 0) {
    throw Error("logistic regression: invalid configuration");
  }

  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-20;

  Matrix theta = Matrix::Zero(features.cols() + 1, n_classes);
  LogisticObjective current = logistic_objective(theta, features, labels, weights,
                                                 config_.l2_penalty);
  double step = 1.0 / std::max(1.0, current.gradient.cwiseAbs().maxCoeff());
  converged_ = false;
  n_iter_ = 0;

  while (n_iter_ < config_.max_iter) {
    if (current.gradient.cwiseAbs().maxCoeff() < config_.tol) {
      converged_ = true;
      break;
    }
    const double grad_sq = current.gradient.squaredNorm();
    Matrix candidate;
    LogisticObjective next;
    bool accepted = false;
    while (step > kMinStep) {
      candidate = theta - step * current.gradient;
      next = logistic_objective(candidate, features, labels, weights, config_.l2_penalty);
      if (std::isfinite(next.value) && next.value <= current.value - kArmijo * step * grad_sq) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    ++n_iter_;

    // Barzilai-Borwein trial step for the next line search.
    const Matrix s = candidate - theta;
    const Matrix y = next.gradient - current.gradient;
    const double sy = (s.array() * y.array()).sum();
    step = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * step;

    theta = std::move(candidate);
    current = std::move(next);
  }
  if (!converged_ && current.gradient.cwiseAbs().maxCoeff() < config_.tol) converged_ = true;

  coefficients_ = std::move(theta);
  fitted_ = true;
}

Matrix WeightedLogisticRegression::decision_function(const Matrix& features) const {
  if (!fitted_) throw Error("logistic regression: model is not fitted");
  if (features.cols() + 1 != coefficients_.rows()) {
    throw Error("logistic regression: feature count differs from training");
  }
  return scores(coefficients_, features);
}

Matrix WeightedLogisticRegression::predict_proba(const Matrix& features) const {
  Matrix p = decision_function(features);
  softmax_rows(p);
  floor_and_normalize(p);
  return p;
}

ClassifierPtr WeightedLogisticRegression::clone() const {
  return std::make_unique<WeightedLogisticRegression>(config_);
}

}  // namespace bqlearn
