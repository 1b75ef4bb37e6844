#pragma once

#include "bqlearn/classifier.hpp"

namespace bqlearn {

struct LogisticConfig {
  /// Ridge strength on the non-intercept coefficients. The data term is a
  /// weighted sum (not a mean), so this scales like sklearn's 1/C.
  double l2_penalty = 1.0;
  int max_iter = 1000;
  /// Stop once the gradient infinity-norm drops below this.
  double tol = 1e-6;
};

/// Value and gradient of the weighted multinomial cross-entropy objective
///
///   sum_i w_i * ce(y_i, softmax(theta^T [x_i, 1])) + l2/2 * ||theta_no_intercept||^2
///
/// `theta` has shape (n_features + 1) x n_classes; the last row is the
/// intercept.
struct LogisticObjective {
  double value = 0.0;
  Matrix gradient;
};

LogisticObjective logistic_objective(const Matrix& theta, const Matrix& features,
                                     const Labels& labels, const Vector& weights,
                                     double l2_penalty);

/// Multinomial logistic regression fitted by deterministic full-batch
/// gradient descent with an Armijo backtracking line search. Accepts signed
/// sample weights.
class WeightedLogisticRegression final : public Classifier {
 public:
  WeightedLogisticRegression() = default;
  explicit WeightedLogisticRegression(LogisticConfig config) : config_(config) {}

  using Classifier::fit;
  void fit(const Matrix& features, const Labels& labels, const Vector& weights,
           int n_classes) override;
  Matrix predict_proba(const Matrix& features) const override;
  Matrix decision_function(const Matrix& features) const;

  int n_classes() const override { return static_cast<int>(coefficients_.cols()); }
  bool is_fitted() const override { return fitted_; }
  bool supports_signed_weights() const override { return true; }
  ClassifierPtr clone() const override;

  const LogisticConfig& config() const { return config_; }
  /// (n_features + 1) x n_classes, intercept in the last row.
  const Matrix& coefficients() const { return coefficients_; }
  int n_iter() const { return n_iter_; }
  bool converged() const { return converged_; }

 private:
  LogisticConfig config_;
  Matrix coefficients_;
  int n_iter_ = 0;
  bool converged_ = false;
  bool fitted_ = false;
};

}  // namespace bqlearn
