#include "doctest.h"

#include "bqlearn/logistic.hpp"
#include "bqlearn/reweight.hpp"
#include "test_support.hpp"

#include <limits>

using namespace bqlearn;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix random_psd(Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix a(n, n);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  return a * a.transpose() / static_cast<double>(n);
}

bool feasible(const Vector& beta, double bound, double slack, double tol = 1e-9) {
  return (beta.array() >= 0.0).all() && (beta.array() <= bound).all() &&
         std::abs(beta.mean() - 1.0) <= slack + tol;
}

}  // namespace

TEST_CASE("box-slab projection satisfies the variational inequality") {
  Rng rng(1);
  std::normal_distribution<double> normal(1.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + trial % 7;
    const double bound = 1.0 + 3.0 * unit(rng);
    const double slack = trial % 5 == 0 ? 0.0 : 0.5 * unit(rng);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    const Vector p = project_box_slab(v, bound, slack);
    CHECK(feasible(p, bound, slack));
    CHECK((project_box_slab(p, bound, slack) - p).cwiseAbs().maxCoeff() < 1e-9);
    // <v - p, q - p> <= 0 for any feasible q.
    for (int k = 0; k < 10; ++k) {
      Vector q(n);
      for (Index i = 0; i < n; ++i) q[i] = bound * unit(rng);
      q = project_box_slab(q, bound, slack);
      CHECK((v - p).dot(q - p) <= 1e-9);
    }
  }
  CHECK(project_box_slab(Vector::Constant(3, 5.0), 1.0, 0.0) == Vector::Ones(3));
}

TEST_CASE("solve_kmm: identical point sets give beta = 1") {
  Matrix pts(3, 1);
  pts << -1.0, 0.2, 1.5;
  const KernelSpec rbf{KernelFamily::kRbf, 0.5};
  const KmmProblem p = make_kmm_problem(rbf, pts, pts, 10.0, 0.01);
  const KmmSolution sol = solve_kmm(p);
  CHECK((sol.weights.array() - 1.0).abs().maxCoeff() < 1e-3);
  const double brute = testing::brute_force_kmm(p.gram, p.kappa, 10.0, 0.01);
  CHECK(std::abs(sol.objective - brute) < 1e-3);
}

TEST_CASE("solve_kmm: linear kernel hand-solved instance") {
  Matrix source(2, 1), target(1, 1);
  source << 0.0, 1.0;
  target << 0.0;
  const KmmProblem p = make_kmm_problem(KernelSpec{KernelFamily::kLinear}, source, target, 10.0, 0.0);
  CHECK(p.gram == (Matrix(2, 2) << 0, 0, 0, 1).finished());
  CHECK(p.kappa == Vector::Zero(2));
  const KmmSolution sol = solve_kmm(p);
  CHECK(sol.weights[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol.weights[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
}

TEST_CASE("solve_kmm: unconstrained identity problem returns kappa") {
  KmmProblem p;
  p.gram = Matrix::Identity(4, 4);
  p.kappa = (Vector(4) << 0.3, 2.5, 0.0, 7.0).finished();
  p.bound = kInf;
  p.mean_slack = kInf;
  const KmmSolution sol = solve_kmm(p);
  CHECK((sol.weights - p.kappa).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_kmm rejects invalid problems") {
  KmmProblem p;
  p.gram = (Matrix(2, 2) << 1, 2, 2, 1).finished();  // eigenvalue -1
  p.kappa = Vector::Ones(2);
  CHECK_THROWS_WITH_AS(solve_kmm(p), doctest::Contains("positive semidefinite"), Error);

  p.gram = Matrix::Identity(2, 2);
  p.bound = 0.5;
  p.mean_slack = 0.2;
  CHECK_THROWS_WITH_AS(solve_kmm(p), doctest::Contains("infeasible"), Error);
  p.bound = 0.8;  // 0.8 >= 1 - 0.2 is feasible
  CHECK_NOTHROW(solve_kmm(p));

  p.gram = (Matrix(2, 2) << 1, 0.5, 0.0, 1).finished();
  CHECK_THROWS_WITH_AS(solve_kmm(p), doctest::Contains("symmetric"), Error);
}

TEST_CASE("solve_kmm: feasible, monotone, and matches brute force on small instances") {
  Rng rng(17);
  std::normal_distribution<double> normal(1.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const Index n = 1 + trial % 3;
    KmmProblem p;
    p.gram = random_psd(n, rng);
    p.kappa.resize(n);
    for (Index i = 0; i < n; ++i) p.kappa[i] = normal(rng);
    p.bound = 3.0;
    p.mean_slack = 0.2;
    const KmmSolution sol = solve_kmm(p);
    CHECK(feasible(sol.weights, p.bound, p.mean_slack));
    for (std::size_t k = 1; k < sol.history.size(); ++k) {
      CHECK(sol.history[k] <= sol.history[k - 1] + 1e-12);
    }
    CHECK(std::abs(sol.objective - testing::brute_force_kmm(p.gram, p.kappa, 3.0, 0.2)) < 1e-3);
  }
}

TEST_CASE("kkmm weights: trusted at one, strict and permissive policies") {
  auto trusted = testing::gaussian_blobs(30, 3, 3.0, 2);
  auto untrusted = testing::gaussian_blobs(40, 3, 3.0, 3);
  // Drop class 2 from the trusted side.
  IndexList keep;
  for (Index i = 0; i < trusted.labels.size(); ++i) {
    if (trusted.labels[i] != 2) keep.push_back(i);
  }
  trusted.features = take_rows(trusted.features, keep);
  trusted.labels = take(trusted.labels, keep);
  const BiqualityDataset ds = testing::stacked(trusted, untrusted, 3);

  const Vector strict = kkmm_weights(ds);
  KkmmOptions permissive_opts;
  permissive_opts.permissive = true;
  const Vector permissive = kkmm_weights(ds, permissive_opts);
  for (Index i = 0; i < ds.n_samples(); ++i) {
    if (ds.sample_quality[i] == 1) {
      CHECK(strict[i] == 1.0);
      CHECK(permissive[i] == 1.0);
    } else if (ds.labels[i] == 2) {
      CHECK(strict[i] == 0.0);
    }
  }
  double class2 = 0.0;
  for (Index i : ds.untrusted_indices()) {
    if (ds.labels[i] == 2) class2 += permissive[i];
  }
  CHECK(class2 > 0.0);
}

TEST_CASE("kkmm with bound 1 and zero slack is a plain fit") {
  auto trusted = testing::gaussian_blobs(20, 2, 2.0, 4);
  auto untrusted = testing::gaussian_blobs(30, 2, 2.0, 5);
  const BiqualityDataset ds = testing::stacked(trusted, untrusted, 2);
  KkmmOptions opts;
  opts.bound = 1.0;
  opts.mean_slack = 0.0;
  const ReweightedClassifier model = fit_kkmm(ds, WeightedLogisticRegression{}, opts);
  CHECK(model.weights() == Vector::Ones(ds.n_samples()));
  WeightedLogisticRegression plain;
  plain.fit(ds.features, ds.labels, 2);
  const auto& fitted = dynamic_cast<const WeightedLogisticRegression&>(model.base());
  CHECK(fitted.coefficients() == plain.coefficients());
}

TEST_CASE("irbl: identical trusted and untrusted data give unit weights") {
  const auto blobs = testing::gaussian_blobs(40, 2, 2.0, 6);
  const BiqualityDataset ds = testing::stacked(blobs, blobs, 2);
  const Vector w = irbl_weights(ds, WeightedLogisticRegression{});
  CHECK((w.array() == 1.0).all());
}

TEST_CASE("irbl suppresses a sample the trusted model rules out") {
  auto trusted = testing::gaussian_blobs(40, 2, 12.0, 7);
  auto untrusted = testing::gaussian_blobs(40, 2, 12.0, 8);
  untrusted.labels[0] = 1;  // deep inside class 0, labelled 1
  const BiqualityDataset ds = testing::stacked(trusted, untrusted, 2);
  const Vector w = irbl_weights(ds, WeightedLogisticRegression{});
  CHECK(w.allFinite());

  WeightedLogisticRegression ft, fu;
  ft.fit(trusted.features, trusted.labels, 2);
  fu.fit(untrusted.features, untrusted.labels, 2);
  const Matrix x = untrusted.features.topRows(1);
  const double expected = std::max(ft.predict_proba(x)(0, 1), kProbabilityFloor) /
                          std::max(fu.predict_proba(x)(0, 1), kProbabilityFloor);
  CHECK(w[80] == doctest::Approx(expected).epsilon(1e-9));
  double clean = 0.0;
  for (Index i = 81; i < 120; ++i) clean += w[i] / 39.0;
  CHECK(w[80] < 0.1 * clean);

  BiqualityDataset single = ds;
  for (Index i : single.trusted_indices()) single.labels[i] = 0;
  CHECK_THROWS_WITH_AS(irbl_weights(single, WeightedLogisticRegression{}),
                       doctest::Contains("single class"), Error);
}

TEST_CASE("kpdr: indistinguishable class members get the prior-corrected odds") {
  // Every untrusted point duplicates a trusted point twice: n_u / n_t = 2 and
  // the discriminator can only learn the base rate 1/3, odds 1/2.
  const auto blobs = testing::gaussian_blobs(15, 2, 2.0, 9);
  auto doubled = blobs;
  doubled.features.resize(60, 2);
  doubled.features << blobs.features, blobs.features;
  doubled.labels.resize(60);
  doubled.labels << blobs.labels, blobs.labels;
  const BiqualityDataset ds = testing::stacked(blobs, doubled, 2);
  const Vector w = kpdr_weights(ds, WeightedLogisticRegression{});
  for (Index i : ds.untrusted_indices()) CHECK(w[i] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("kpdr falls back to the global discriminator") {
  auto trusted = testing::gaussian_blobs(20, 2, 3.0, 10);
  auto untrusted = testing::gaussian_blobs(20, 3, 3.0, 11);
  const BiqualityDataset ds = testing::stacked(trusted, untrusted, 3);
  const Vector w = kpdr_weights(ds, WeightedLogisticRegression{});
  for (Index i : ds.untrusted_indices()) {
    CHECK(std::isfinite(w[i]));
    CHECK(w[i] >= 0.0);
  }
}

TEST_CASE("fuzz: reweighting produces finite non-negative weights, trusted at one") {
  Rng rng(99);
  std::uniform_int_distribution<int> classes(2, 4);
  std::uniform_real_distribution<double> sep(0.0, 8.0);
  const WeightedLogisticRegression lr;
  for (int trial = 0; trial < 12; ++trial) {
    const int k = classes(rng);
    auto trusted = testing::gaussian_blobs(4 + trial % 5, k, sep(rng), 1000 + trial);
    auto untrusted = testing::gaussian_blobs(10 + 3 * trial, k, sep(rng), 2000 + trial);
    untrusted.features *= 1.0 + trial;  // covariate shift
    const BiqualityDataset ds = testing::stacked(trusted, untrusted, k);

    const ReweightedClassifier a = fit_kkmm(ds, lr);
    const ReweightedClassifier b = fit_irbl(ds, lr);
    const ReweightedClassifier c = fit_kpdr(ds, lr, lr);
    for (const ReweightedClassifier* m : {&a, &b, &c}) {
      CHECK(m->weights().allFinite());
      CHECK((m->weights().array() >= 0.0).all());
      for (Index i : ds.trusted_indices()) CHECK(m->weights()[i] == 1.0);
      const Matrix p = m->predict_proba(ds.features);
      CHECK(((p.rowwise().sum().array() - 1.0).abs() <= 1e-9).all());
    }
  }
}

TEST_CASE("per-class KMM is deterministic") {
  auto trusted = testing::gaussian_blobs(25, 3, 2.0, 12);
  auto untrusted = testing::gaussian_blobs(35, 3, 2.0, 13);
  const BiqualityDataset ds = testing::stacked(trusted, untrusted, 3);
  CHECK(kkmm_weights(ds) == kkmm_weights(ds));
}
