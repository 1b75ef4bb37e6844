#pragma once

#include "bqlearn/classifier.hpp"
#include "bqlearn/dataset.hpp"
#include "bqlearn/kernel.hpp"

#include <optional>

namespace bqlearn {

/// Regularized unhinged-loss classifier, solved in closed form.
///
/// For each one-vs-rest problem with signs s_i in {-1, +1} the minimizer is
///
///   f_k(x) = 1 / (reg * sum_i w_i) * sum_i w_i s_ik k(x_i, x)
///
/// which for unit weights is the scaled class-mean discriminant. Scores are
/// turned into probabilities by a softmax across classes. Without a kernel the
/// linear case is stored in primal form.
class UnhingedClassifier final : public Classifier {
 public:
  explicit UnhingedClassifier(double reg = 1.0, std::optional<KernelSpec> kernel = std::nullopt);

  using Classifier::fit;
  void fit(const Matrix& features, const Labels& labels, const Vector& weights,
           int n_classes) override;
  Matrix predict_proba(const Matrix& features) const override;
  /// n x K one-vs-rest scores.
  Matrix decision_function(const Matrix& features) const;

  int n_classes() const override { return n_classes_; }
  bool is_fitted() const override { return n_classes_ > 0; }
  ClassifierPtr clone() const override;

  double reg() const { return reg_; }
  const std::optional<KernelSpec>& kernel() const { return kernel_; }

 private:
  double reg_;
  std::optional<KernelSpec> kernel_;
  std::optional<KernelSpec> fitted_kernel_;
  int n_classes_ = 0;
  // Linear: d x K primal weights. Kernel: n x K dual coefficients on support_.
  Matrix coef_;
  Matrix support_;
};

/// Fits Unhinged on every sample of `ds` (trusted and untrusted alike).
/// Linear when `kernel` is empty or has the linear family.
UnhingedClassifier fit_unhinged(const BiqualityDataset& ds,
                                std::optional<KernelSpec> kernel = std::nullopt, double reg = 1.0);

}  // namespace bqlearn
