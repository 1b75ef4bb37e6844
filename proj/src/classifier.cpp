#include "bqlearn/classifier.hpp"

#include <cmath>
#include <string>

namespace bqlearn {

Labels Predictor::predict(const Matrix& features) const {
  return argmax_rows(predict_proba(features));
}

void Classifier::fit(const Matrix& features, const Labels& labels, int n_classes) {
  fit(features, labels, Vector::Ones(features.rows()), n_classes);
}

Labels argmax_rows(const Matrix& scores) {
  Labels out(scores.rows());
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < scores.cols(); ++k) {
      if (scores(i, k) > scores(i, best)) best = k;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

void floor_and_normalize(Matrix& proba) {
  proba = proba.cwiseMax(kProbabilityFloor).cwiseMin(1.0);
  for (Index i = 0; i < proba.rows(); ++i) proba.row(i) /= proba.row(i).sum();
}

void check_row_stochastic(const Matrix& m, double tol, const char* what) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v) || v < -tol || v > 1.0 + tol) {
        throw Error(std::string(what) + ": entries must lie in [0, 1]");
      }
    }
    if (std::abs(m.row(i).sum() - 1.0) > tol) {
      throw Error(std::string(what) + ": row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

}  // namespace bqlearn
