#pragma once

#include "bqlearn/classifier.hpp"
#include "bqlearn/dataset.hpp"

#include <vector>

namespace bqlearn {

/// EasyAdapt augmentation: trusted rows become (x, x, 0), untrusted rows
/// (x, 0, x). Output is n x 3d.
Matrix easy_adapt_transform(const BiqualityDataset& ds);
Matrix easy_adapt_transform(const Matrix& features, const Labels& sample_quality);

/// Base learner fitted on the EasyAdapt augmentation. New points are mapped
/// to the trusted layout (x, x, 0) before prediction.
class EasyAdaptClassifier final : public Predictor {
 public:
  explicit EasyAdaptClassifier(ClassifierPtr base) : base_(std::move(base)) {}

  Matrix predict_proba(const Matrix& features) const override;
  int n_classes() const override { return base_->n_classes(); }
  const Classifier& base() const { return *base_; }

 private:
  ClassifierPtr base_;
};

EasyAdaptClassifier fit_easy_adapt(const BiqualityDataset& ds, const Classifier& base);

/// 1 / (1 + sqrt(2 ln(n_untrusted) / n_iter)); 1 when there is nothing to
/// down-weight.
double tradaboost_source_beta(Index n_untrusted, int n_iter);

/// Weighted vote of the later TrAdaBoost learners.
class TrAdaBoostEnsemble final : public Predictor {
 public:
  Matrix predict_proba(const Matrix& features) const override;
  int n_classes() const override { return n_classes_; }

  const std::vector<ClassifierPtr>& learners() const { return learners_; }
  /// beta_t = e_t / (1 - e_t) for each kept learner.
  const std::vector<double>& learner_betas() const { return learner_betas_; }
  double source_beta() const { return source_beta_; }
  int n_iter() const { return n_iter_; }
  /// Index of the first learner taking part in the vote.
  std::size_t first_voter() const;
  /// Normalized sample weights after each completed iteration.
  const std::vector<Vector>& weight_history() const { return weight_history_; }

 private:
  friend TrAdaBoostEnsemble fit_tradaboost(const BiqualityDataset&, const Classifier&, int);

  std::vector<ClassifierPtr> learners_;
  std::vector<double> learner_betas_;
  std::vector<Vector> weight_history_;
  double source_beta_ = 1.0;
  int n_iter_ = 0;
  int n_classes_ = 0;
};

/// Instance-transfer boosting with trusted samples as the target domain.
/// Misclassification is 0/1 on the weak learner's hard prediction. Learners
/// are fitted on the current weights rescaled to mean 1.
TrAdaBoostEnsemble fit_tradaboost(const BiqualityDataset& ds, const Classifier& weak_learner,
                                  int n_iter = 10);

}  // namespace bqlearn
