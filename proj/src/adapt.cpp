#include "bqlearn/adapt.hpp"

#include <cmath>
#include <string>

namespace bqlearn {

Matrix easy_adapt_transform(const Matrix& features, const Labels& sample_quality) {
  if (sample_quality.size() != features.rows()) throw Error("EasyAdapt: dimension mismatch");
  const Index d = features.cols();
  Matrix out = Matrix::Zero(features.rows(), 3 * d);
  out.leftCols(d) = features;
  for (Index i = 0; i < features.rows(); ++i) {
    const int q = sample_quality[i];
    if (q != 0 && q != 1) throw Error("sample_quality must be 0 or 1");
    out.block(i, q == 1 ? d : 2 * d, 1, d) = features.row(i);
  }
  return out;
}

Matrix easy_adapt_transform(const BiqualityDataset& ds) {
  validate_dataset(ds);
  return easy_adapt_transform(ds.features, ds.sample_quality);
}

Matrix EasyAdaptClassifier::predict_proba(const Matrix& features) const {
  return base_->predict_proba(
      easy_adapt_transform(features, Labels::Ones(features.rows())));
}

EasyAdaptClassifier fit_easy_adapt(const BiqualityDataset& ds, const Classifier& base) {
  const Matrix augmented = easy_adapt_transform(ds);
  ClassifierPtr model = base.clone();
  model->fit(augmented, ds.labels, ds.n_classes);
  return EasyAdaptClassifier(std::move(model));
}

double tradaboost_source_beta(Index n_untrusted, int n_iter) {
  if (n_iter < 1) throw Error("TrAdaBoost: n_iter must be positive");
  if (n_untrusted <= 1) return 1.0;
  return 1.0 / (1.0 + std::sqrt(2.0 * std::log(static_cast<double>(n_untrusted)) / n_iter));
}

std::size_t TrAdaBoostEnsemble::first_voter() const {
  const std::size_t m = learners_.size();
  return m - (m + 1) / 2;
}

Matrix TrAdaBoostEnsemble::predict_proba(const Matrix& features) const {
  if (learners_.empty()) throw Error("TrAdaBoost: ensemble is not fitted");
  Matrix votes = Matrix::Zero(features.rows(), n_classes_);
  for (std::size_t t = first_voter(); t < learners_.size(); ++t) {
    const double alpha = std::log(1.0 / learner_betas_[t]);
    const Labels pred = learners_[t]->predict(features);
    for (Index i = 0; i < pred.size(); ++i) votes(i, pred[i]) += alpha;
  }
  for (Index i = 0; i < votes.rows(); ++i) votes.row(i) /= votes.row(i).sum();
  floor_and_normalize(votes);
  return votes;
}

TrAdaBoostEnsemble fit_tradaboost(const BiqualityDataset& ds, const Classifier& weak_learner,
                                  int n_iter) {
  const DatasetSummary summary = validate_dataset(ds, /*require_trusted=*/true);
  if (n_iter < 2) throw Error("TrAdaBoost: n_iter must be at least 2");

  TrAdaBoostEnsemble ensemble;
  ensemble.n_iter_ = n_iter;
  ensemble.n_classes_ = ds.n_classes;
  ensemble.source_beta_ = tradaboost_source_beta(summary.n_untrusted, n_iter);

  const Index n = ds.n_samples();
  const double nd = static_cast<double>(n);
  Vector weights = Vector::Constant(n, 1.0 / nd);

  for (int t = 0; t < n_iter; ++t) {
    ClassifierPtr learner = weak_learner.clone();
    learner->fit(ds.features, ds.labels, weights * nd, ds.n_classes);
    const Labels pred = learner->predict(ds.features);

    double trusted_mass = 0.0;
    double trusted_error = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (ds.sample_quality[i] != 1) continue;
      trusted_mass += weights[i];
      if (pred[i] != ds.labels[i]) trusted_error += weights[i];
    }
    const double error = trusted_error / trusted_mass;

    if (error >= 0.5) {
      if (t == 0) {
        throw Error("TrAdaBoost: weak learner error on trusted samples is " +
                    std::to_string(error) + " (>= 0.5) at the first iteration");
      }
      break;
    }
    if (error == 0.0) {
      // A learner perfect on trusted data outvotes everything else.
      ensemble.learners_.clear();
      ensemble.learner_betas_.clear();
      ensemble.learners_.push_back(std::move(learner));
      ensemble.learner_betas_.push_back(kProbabilityFloor);
      break;
    }

    const double beta = error / (1.0 - error);
    for (Index i = 0; i < n; ++i) {
      if (pred[i] == ds.labels[i]) continue;
      weights[i] *= ds.sample_quality[i] == 1 ? 1.0 / beta : ensemble.source_beta_;
    }
    weights /= weights.sum();
    ensemble.weight_history_.push_back(weights);
    ensemble.learners_.push_back(std::move(learner));
    ensemble.learner_betas_.push_back(beta);
  }
  return ensemble;
}

}  // namespace bqlearn
