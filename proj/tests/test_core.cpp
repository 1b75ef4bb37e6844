#include "doctest.h"

#include "bqlearn/dataset.hpp"
#include "bqlearn/kernel.hpp"
#include "bqlearn/logistic.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <numeric>

using namespace bqlearn;
using bqlearn::testing::gaussian_blobs;

TEST_CASE("validate_dataset counts trusted and untrusted samples") {
  BiqualityDataset ds{Matrix::Zero(4, 2), Labels::Zero(4), Labels(4), 2};
  ds.sample_quality << 1, 1, 0, 0;
  const DatasetSummary s = validate_dataset(ds);
  CHECK(s.n_trusted == 2);
  CHECK(s.n_untrusted == 2);
  CHECK(s.n_classes == 2);
}

TEST_CASE("validate_dataset rejects invariant violations") {
  BiqualityDataset ds{Matrix::Zero(3, 1), Labels::Zero(3), Labels(3), 2};
  ds.sample_quality << 1, 2, 0;
  CHECK_THROWS_WITH_AS(validate_dataset(ds), "sample_quality must be 0 or 1", Error);

  BiqualityDataset labels{Matrix::Zero(2, 1), Labels(2), Labels::Ones(2), 2};
  labels.labels << 0, 3;
  CHECK_THROWS_WITH_AS(validate_dataset(labels), doctest::Contains("label out of range"), Error);

  BiqualityDataset shape{Matrix::Zero(3, 1), Labels::Zero(2), Labels::Ones(3), 2};
  CHECK_THROWS_WITH_AS(validate_dataset(shape), doctest::Contains("dimension mismatch"), Error);

  BiqualityDataset untrusted{Matrix::Zero(2, 1), Labels::Zero(2), Labels::Zero(2), 2};
  CHECK_NOTHROW(validate_dataset(untrusted));
  CHECK_THROWS_AS(validate_dataset(untrusted, true), Error);
}

TEST_CASE("gram follows each kernel formula") {
  KernelSpec rbf{KernelFamily::kRbf, 0.5};
  Matrix a(1, 1), b(1, 1);
  a << 0.0;
  b << 2.0;
  CHECK(gram(rbf, a, b)(0, 0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(gram(rbf, b, b)(0, 0) == 1.0);

  Matrix l(1, 2), r(1, 2);
  l << 1, 2;
  r << 3, 4;
  CHECK(gram(KernelSpec{KernelFamily::kLinear}, l, r)(0, 0) == 11.0);

  KernelSpec poly{KernelFamily::kPolynomial, 0.5, 2, 1.0};
  CHECK(gram(poly, l, r)(0, 0) == doctest::Approx(std::pow(0.5 * 11 + 1, 2)));

  CHECK_THROWS_AS(gram(rbf, l, a), Error);
  CHECK_THROWS_AS(gram(KernelSpec{KernelFamily::kRbf, 0.0}, a, b), Error);
  CHECK_THROWS_AS(gram(KernelSpec{KernelFamily::kRbf, -1.0}, a, b), Error);
}

TEST_CASE("rbf gram is PSD with unit diagonal on random inputs") {
  Rng rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x(25, 3);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    for (KernelFamily f : {KernelFamily::kRbf, KernelFamily::kLinear, KernelFamily::kPolynomial}) {
      const KernelSpec spec = resolve_kernel(KernelSpec{f}, x);
      const Matrix g = gram(spec, x, x);
      CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-10);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * std::max(1.0, eig.eigenvalues().maxCoeff()));
      if (f == KernelFamily::kRbf) {
        for (Index i = 0; i < g.rows(); ++i) CHECK(g(i, i) == 1.0);
      }
    }
  }
}

TEST_CASE("default rbf gamma is 1 / (n_features * variance)") {
  Matrix x(2, 2);
  x << 0, 0, 2, 2;  // mean 1, variance 1
  CHECK(*resolve_kernel(KernelSpec{}, x).gamma == doctest::Approx(0.5));
  CHECK(*resolve_kernel(KernelSpec{KernelFamily::kRbf, 3.0}, x).gamma == 3.0);
}

TEST_CASE("StandardScaler centers and scales columns") {
  Matrix x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  StandardScaler scaler;
  const Matrix z = scaler.fit_transform(x);
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
  CHECK(z.col(0).squaredNorm() / 3 == doctest::Approx(1.0));
  CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("logistic objective gradient matches finite differences") {
  Rng rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Matrix x(5, 3);
    Matrix theta(4, 3);
    Vector w(5);
    Labels y(5);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    for (Index i = 0; i < theta.size(); ++i) theta.data()[i] = normal(rng);
    for (Index i = 0; i < 5; ++i) {
      w[i] = normal(rng);  // signed weights are part of the contract
      y[i] = static_cast<int>(i % 3);
    }
    const double l2 = 0.7;
    const LogisticObjective obj = logistic_objective(theta, x, y, w, l2);
    CHECK(obj.value == doctest::Approx(testing::naive_logistic_objective(theta, x, y, w, l2)));
    const Matrix fd = testing::finite_difference(
        [&](const Matrix& t) { return testing::naive_logistic_objective(t, x, y, w, l2); }, theta);
    const double rel = (obj.gradient - fd).norm() / std::max(1.0, fd.norm());
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("logistic regression separates a separable blob") {
  Matrix x(40, 2);
  Labels y(40);
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Index i = 0; i < 40; ++i) {
    const int k = static_cast<int>(i % 2);
    x(i, 0) = (k == 0 ? -3.0 : 3.0) + u(rng);
    x(i, 1) = u(rng);
    y[i] = k;
  }
  WeightedLogisticRegression model;
  model.fit(x, y, 2);
  CHECK(model.is_fitted());
  CHECK(model.converged());
  CHECK((model.predict(x).array() == y.array()).all());
}

TEST_CASE("logistic regression: duplicating samples equals doubling weights") {
  const auto blobs = gaussian_blobs(30, 3, 2.0, 1);
  const Index n = blobs.features.rows();
  Matrix dup(2 * n, 2);
  dup << blobs.features, blobs.features;
  Labels dup_y(2 * n);
  dup_y << blobs.labels, blobs.labels;

  LogisticConfig cfg;
  cfg.tol = 1e-9;
  WeightedLogisticRegression a(cfg), b(cfg);
  a.fit(dup, dup_y, 3);
  b.fit(blobs.features, blobs.labels, Vector::Constant(n, 2.0), 3);
  CHECK((a.coefficients() - b.coefficients()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("logistic regression ignores zero-weight samples") {
  const auto blobs = gaussian_blobs(20, 2, 2.0, 2);
  Vector w = Vector::Zero(blobs.features.rows());
  w[0] = 1.0;
  w[20] = 1.0;
  WeightedLogisticRegression full, pair;
  full.fit(blobs.features, blobs.labels, w, 2);
  Matrix x2(2, 2);
  x2 << blobs.features.row(0), blobs.features.row(20);
  Labels y2(2);
  y2 << blobs.labels[0], blobs.labels[20];
  pair.fit(x2, y2, 2);
  CHECK((full.coefficients() - pair.coefficients()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("logistic regression is invariant to sample order") {
  const auto blobs = gaussian_blobs(25, 3, 2.0, 4);
  const Index n = blobs.features.rows();
  IndexList perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 7, perm.end());

  LogisticConfig cfg;
  cfg.tol = 1e-9;
  WeightedLogisticRegression a(cfg), b(cfg);
  a.fit(blobs.features, blobs.labels, 3);
  b.fit(take_rows(blobs.features, perm), take(blobs.labels, perm), 3);
  CHECK((a.coefficients() - b.coefficients()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("scaling weights and l2 together keeps predictions") {
  const auto blobs = gaussian_blobs(40, 3, 1.5, 8);
  for (double c : {0.1, 3.0, 50.0}) {
    LogisticConfig base_cfg, scaled_cfg;
    base_cfg.tol = scaled_cfg.tol = 1e-8;
    scaled_cfg.l2_penalty = base_cfg.l2_penalty * c;
    WeightedLogisticRegression a(base_cfg), b(scaled_cfg);
    a.fit(blobs.features, blobs.labels, 3);
    b.fit(blobs.features, blobs.labels, Vector::Constant(blobs.features.rows(), c), 3);
    CHECK((a.predict(blobs.features).array() == b.predict(blobs.features).array()).all());
  }
}

TEST_CASE("predict_proba rows are distributions and argmax ties go low") {
  Rng rng(21);
  std::normal_distribution<double> normal(0.0, 5.0);
  const auto blobs = gaussian_blobs(20, 4, 3.0, 9);
  WeightedLogisticRegression model;
  model.fit(blobs.features, blobs.labels, 4);
  Matrix probe(200, 2);
  for (Index i = 0; i < probe.size(); ++i) probe.data()[i] = normal(rng);
  const Matrix p = model.predict_proba(probe);
  CHECK((p.array() >= 0.0).all());
  CHECK(((p.rowwise().sum().array() - 1.0).abs() <= 1e-9).all());
  CHECK((model.predict(probe).array() == argmax_rows(p).array()).all());

  Matrix tie(1, 3);
  tie << 0.4, 0.4, 0.2;
  CHECK(argmax_rows(tie)[0] == 0);
}

TEST_CASE("logistic regression rejects degenerate inputs") {
  Matrix x = Matrix::Zero(4, 1);
  Labels y(4);
  y << 0, 1, 0, 1;
  WeightedLogisticRegression model;
  CHECK_THROWS_WITH_AS(model.fit(x, y, Vector::Zero(4), 2), doctest::Contains("zero"), Error);
  CHECK_THROWS_AS(model.fit(x, Labels::Zero(4), 2), Error);
  Matrix bad = x;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_WITH_AS(model.fit(bad, y, 2), doctest::Contains("non-finite"), Error);
  CHECK_THROWS_AS(model.predict_proba(x), Error);
  CHECK(model.supports_signed_weights());
}
