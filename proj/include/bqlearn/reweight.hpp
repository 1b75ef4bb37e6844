#pragma once

#include "bqlearn/classifier.hpp"
#include "bqlearn/dataset.hpp"
#include "bqlearn/kernel.hpp"

#include <limits>

namespace bqlearn {

/// Kernel mean matching quadratic program
///
///   min_beta  1/2 beta^T K beta - kappa^T beta
///   s.t.      0 <= beta_i <= bound,  |mean(beta) - 1| <= mean_slack
struct KmmProblem {
  Matrix gram;
  Vector kappa;
  double bound = 1000.0;
  double mean_slack = 0.0;
};

/// Builds the problem matching `source` rows to the kernel mean of `target`
/// rows: kappa_i = (n_source / n_target) * sum_j k(source_i, target_j).
KmmProblem make_kmm_problem(const KernelSpec& spec, const Matrix& source, const Matrix& target,
                            double bound, double mean_slack);

/// Classical slack heuristic (sqrt(n) - 1) / sqrt(n).
double default_kmm_slack(Index n_source);

struct KmmSolverOptions {
  int max_iter = 1000;
  /// Stop when an accepted step moves no coordinate by more than this.
  double step_tol = 1e-10;
  int power_iterations = 50;
  /// Skip the eigenvalue PSD check (gram built from a valid kernel).
  bool assume_psd = false;
};

struct KmmSolution {
  Vector weights;
  double objective = 0.0;
  int n_iter = 0;
  /// Objective after every accepted iteration, starting from the initial point.
  std::vector<double> history;
};

double kmm_objective(const KmmProblem& problem, const Vector& beta);

/// Euclidean projection onto box [0, bound]^n intersected with the slab
/// n(1 - slack) <= sum(beta) <= n(1 + slack).
Vector project_box_slab(const Vector& point, double bound, double mean_slack);

/// Projected gradient descent with step 1/L, L the largest gram eigenvalue
/// (power iteration). Starts from beta = 1 and returns the best iterate.
/// Throws on a non-PSD gram or on bound < 1 - slack.
KmmSolution solve_kmm(const KmmProblem& problem, const KmmSolverOptions& options = {});

/// A base learner fitted on the full dataset with per-sample weights.
class ReweightedClassifier final : public Predictor {
 public:
  ReweightedClassifier(ClassifierPtr base, Vector weights)
      : base_(std::move(base)), weights_(std::move(weights)) {}

  Matrix predict_proba(const Matrix& features) const override {
    return base_->predict_proba(features);
  }
  int n_classes() const override { return base_->n_classes(); }

  const Classifier& base() const { return *base_; }
  /// Aligned with the training dataset; trusted entries are exactly 1.
  const Vector& weights() const { return weights_; }

 private:
  ClassifierPtr base_;
  Vector weights_;
};

struct KkmmOptions {
  KernelSpec kernel;
  double bound = 1000.0;
  /// Negative selects default_kmm_slack per class.
  double mean_slack = -1.0;
  /// Solve classes missing from the trusted side against all trusted samples
  /// instead of giving them weight 0.
  bool permissive = false;
  KmmSolverOptions solver;
};

/// Per-class KMM weights aligned with `ds` (trusted entries 1).
Vector kkmm_weights(const BiqualityDataset& ds, const KkmmOptions& options = {});

ReweightedClassifier fit_kkmm(const BiqualityDataset& ds, const Classifier& base,
                              const KkmmOptions& options = {});

struct RatioOptions {
  double w_max = 1000.0;
};

/// beta = f_t(x)[y~] / f_u(x)[y~] for untrusted rows, 1 for trusted rows.
Vector irbl_weights(const BiqualityDataset& ds, const Classifier& base,
                    const RatioOptions& options = {});

ReweightedClassifier fit_irbl(const BiqualityDataset& ds, const Classifier& base,
                              const RatioOptions& options = {});

/// Per-class discriminator odds times n_u^k / n_t^k for untrusted rows.
Vector kpdr_weights(const BiqualityDataset& ds, const Classifier& discriminator,
                    const RatioOptions& options = {});

ReweightedClassifier fit_kpdr(const BiqualityDataset& ds, const Classifier& base,
                              const Classifier& discriminator, const RatioOptions& options = {});

}  // namespace bqlearn
