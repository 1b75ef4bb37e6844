#pragma once

#include "bqlearn/classifier.hpp"
#include "bqlearn/dataset.hpp"

namespace bqlearn {

/// Row-stochastic label-corruption matrix: entry (i, j) is the probability
/// that true class i is observed as class j.
class TransitionMatrix {
 public:
  /// Validates rows (sum 1 within 1e-9, entries in [0, 1]).
  explicit TransitionMatrix(Matrix values);

  static TransitionMatrix identity(int n_classes);

  const Matrix& values() const { return values_; }
  int n_classes() const { return static_cast<int>(values_.rows()); }
  double operator()(Index i, Index j) const { return values_(i, j); }

  /// 1-norm condition number; infinity when singular.
  double condition_number() const;
  /// Throws unless the condition number is below kMaxCondition.
  void check_invertible() const;
  /// T^{-1}. Throws through check_invertible.
  Matrix inverse() const;

  static constexpr double kMaxCondition = 1e6;

 private:
  Matrix values_;
};

/// Fits a clone of `prototype` on the untrusted subset of `ds`.
ClassifierPtr fit_untrusted_model(const BiqualityDataset& ds, const Classifier& prototype);

/// Gold loss correction estimate: row i is the mean predicted distribution of
/// `untrusted_model` over trusted samples labeled i. Throws when some class
/// has no trusted sample.
TransitionMatrix estimate_transition_glc(const BiqualityDataset& ds,
                                         const Predictor& untrusted_model);

/// Fits the built-in or injected untrusted model, then estimates.
TransitionMatrix estimate_transition_glc(const BiqualityDataset& ds,
                                         const Classifier& untrusted_prototype);

enum class CorrectionMode { kBackward, kIrlnl, kPlugin };

/// Maps a noisy posterior to a clean one: normalize(max((T^T)^{-1} p, 0)).
Matrix correct_posteriors(const Matrix& noisy_proba, const TransitionMatrix& transition);

/// A base learner combined with a transition-matrix correction.
///
/// Backward and IRLNL act at training time through sample weights and
/// delegate prediction to the base learner; Plugin trains the base learner on
/// the data as-is and corrects its probabilities at prediction time.
class CorrectedClassifier final : public Predictor {
 public:
  CorrectedClassifier(ClassifierPtr base, TransitionMatrix transition, CorrectionMode mode,
                      Vector training_weights);

  Matrix predict_proba(const Matrix& features) const override;
  int n_classes() const override { return base_->n_classes(); }

  const Classifier& base() const { return *base_; }
  const TransitionMatrix& transition() const { return transition_; }
  CorrectionMode mode() const { return mode_; }
  /// Weights the base learner was fitted with (expanded rows for Backward).
  const Vector& training_weights() const { return training_weights_; }

 private:
  ClassifierPtr base_;
  TransitionMatrix transition_;
  CorrectionMode mode_;
  Vector training_weights_;
};

/// Rows produced by the Backward expansion.
struct BackwardExpansion {
  Matrix features;
  Labels labels;
  Vector weights;
  /// Row of `ds` each expanded row came from.
  IndexList source;
};

/// Trusted rows keep their label at weight 1. Every untrusted row (x, y~)
/// becomes K virtual rows (x, j) weighted by (T^{-1})[y~][j]; rows with zero
/// weight are dropped, negative ones zeroed out when `clip_negative`.
BackwardExpansion backward_expansion(const BiqualityDataset& ds, const TransitionMatrix& t,
                                     bool clip_negative = false);

struct BackwardOptions {
  bool clip_negative = false;
};

CorrectedClassifier fit_backward(const BiqualityDataset& ds, const TransitionMatrix& t,
                                 const Classifier& base, BackwardOptions options = {});

struct IrlnlOptions {
  double w_max = 1000.0;
};

/// Importance weights beta = p_clean[y~] / p_noisy[y~] clipped to [0, w_max].
Vector irlnl_weights(const Matrix& noisy_proba, const Labels& observed,
                     const TransitionMatrix& t, double w_max);

CorrectedClassifier fit_irlnl(const BiqualityDataset& ds, const TransitionMatrix& t,
                              const Classifier& base, IrlnlOptions options = {});

CorrectedClassifier fit_plugin(const BiqualityDataset& ds, const TransitionMatrix& t,
                               const Classifier& base);

}  // namespace bqlearn
