#pragma once

#include "bqlearn/types.hpp"

#include <optional>
#include <string>

namespace bqlearn {

enum class KernelFamily { kRbf, kLinear, kPolynomial };

KernelFamily kernel_family_from_name(const std::string& name);
std::string kernel_family_name(KernelFamily family);

struct KernelSpec {
  KernelFamily family = KernelFamily::kRbf;
  /// Unset means 1 / (n_features * variance of all feature values).
  std::optional<double> gamma;
  int degree = 3;
  double coef0 = 1.0;
};

/// Returns `spec` with `gamma` filled in from `features` when unset.
KernelSpec resolve_kernel(KernelSpec spec, const Matrix& features);

/// Gram matrix k(a_i, b_j). `spec.gamma` must be set for rbf/polynomial.
Matrix gram(const KernelSpec& spec, const Matrix& a, const Matrix& b);

/// Per-feature standardization. Never applied implicitly by any algorithm.
class StandardScaler {
 public:
  StandardScaler& fit(const Matrix& features);
  Matrix transform(const Matrix& features) const;
  Matrix fit_transform(const Matrix& features) { return fit(features).transform(features); }

  const Vector& mean() const { return mean_; }
  const Vector& scale() const { return scale_; }

 private:
  Vector mean_;
  Vector scale_;
};

}  // namespace bqlearn
