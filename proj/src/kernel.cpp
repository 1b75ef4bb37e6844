#include "bqlearn/kernel.hpp"

#include <cmath>

namespace bqlearn {

KernelFamily kernel_family_from_name(const std::string& name) {
  if (name == "rbf") return KernelFamily::kRbf;
  if (name == "linear") return KernelFamily::kLinear;
  if (name == "polynomial" || name == "poly") return KernelFamily::kPolynomial;
  throw Error("unknown kernel family: " + name);
}

std::string kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::kRbf:
      return "rbf";
    case KernelFamily::kLinear:
      return "linear";
    case KernelFamily::kPolynomial:
      return "polynomial";
  }
  return "unknown";
}

KernelSpec resolve_kernel(KernelSpec spec, const Matrix& features) {
  if (spec.gamma || spec.family == KernelFamily::kLinear) return spec;
  const double n = static_cast<double>(features.size());
  double variance = 0.0;
  if (n > 0) {
    const double mean = features.mean();
    variance = (features.array() - mean).square().sum() / n;
  }
  const double denom = static_cast<double>(features.cols()) * variance;
  spec.gamma = denom > 0.0 ? 1.0 / denom : 1.0;
  return spec;
}

Matrix gram(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw Error("gram: column-count mismatch");
  if (spec.family == KernelFamily::kLinear) return a * b.transpose();

  if (!spec.gamma) throw Error("gram: gamma is unset");
  const double gamma = *spec.gamma;
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error("gram: gamma must be positive");

  if (spec.family == KernelFamily::kPolynomial) {
    if (spec.degree < 1) throw Error("gram: polynomial degree must be positive");
    const Matrix dot = a * b.transpose();
    return (gamma * dot.array() + spec.coef0).pow(spec.degree).matrix();
  }

  Matrix out(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      // Direct differences keep k(x, x) == 1 exactly.
      out(i, j) = std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
    }
  }
  return out;
}

StandardScaler& StandardScaler::fit(const Matrix& features) {
  if (features.rows() == 0) throw Error("StandardScaler: empty input");
  mean_ = features.colwise().mean().transpose();
  scale_.resize(features.cols());
  for (Index j = 0; j < features.cols(); ++j) {
    const double var = (features.col(j).array() - mean_[j]).square().mean();
    scale_[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return *this;
}

Matrix StandardScaler::transform(const Matrix& features) const {
  if (features.cols() != mean_.size()) throw Error("StandardScaler: feature count mismatch");
  Matrix out = features.rowwise() - mean_.transpose();
  out.array().rowwise() /= scale_.transpose().array();
  return out;
}

}  // namespace bqlearn
