#pragma once

#include "bqlearn/types.hpp"

#include <memory>

namespace bqlearn {

/// A fitted model that outputs class probabilities.
///
/// `predict_proba` rows are non-negative and sum to one. `predict` takes the
/// row argmax, breaking ties towards the lowest class index.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual Matrix predict_proba(const Matrix& features) const = 0;
  virtual int n_classes() const = 0;

  Labels predict(const Matrix& features) const;
};

/// A learner that can be fitted on weighted samples and cloned unfitted.
///
/// Biquality algorithms only ever see learners through this interface; they
/// clone the prototype handed to them and never mutate it.
class Classifier : public Predictor {
 public:
  virtual void fit(const Matrix& features, const Labels& labels, const Vector& weights,
                   int n_classes) = 0;
  virtual bool is_fitted() const = 0;

  /// Whether `fit` accepts negative sample weights.
  virtual bool supports_signed_weights() const { return false; }

  /// Fresh unfitted learner with the same hyperparameters.
  virtual std::unique_ptr<Classifier> clone() const = 0;

  void fit(const Matrix& features, const Labels& labels, int n_classes);
};

using PredictorPtr = std::unique_ptr<Predictor>;
using ClassifierPtr = std::unique_ptr<Classifier>;

/// Row-wise argmax, lowest index on ties.
Labels argmax_rows(const Matrix& scores);

/// Clamps entries to [kProbabilityFloor, 1] and renormalizes each row.
void floor_and_normalize(Matrix& proba);

/// Throws unless every row is a probability distribution within `tol`.
void check_row_stochastic(const Matrix& m, double tol, const char* what);

}  // namespace bqlearn
