#include "bqlearn/reweight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace bqlearn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clipped_sum(const Vector& v, double shift, double bound) {
  double s = 0.0;
  for (Index i = 0; i < v.size(); ++i) s += std::clamp(v[i] - shift, 0.0, bound);
  return s;
}

// Solves sum_i clamp(v_i - shift, 0, bound) == target for shift in
// [lo, hi], where the clipped sum is >= target at lo and <= target at hi.
double solve_shift(const Vector& v, double bound, double target, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (clipped_sum(v, mid, bound) >= target ? lo : hi) = mid;
  }
  // The sum is linear on the active set at the bracket; solve it exactly.
  const double shift = 0.5 * (lo + hi);
  double free_sum = 0.0;
  double upper_mass = 0.0;
  Index n_free = 0;
  for (Index i = 0; i < v.size(); ++i) {
    const double x = v[i] - shift;
    if (x >= bound) {
      upper_mass += bound;
    } else if (x > 0.0) {
      free_sum += v[i];
      ++n_free;
    }
  }
  if (n_free == 0) return shift;
  const double exact = (free_sum + upper_mass - target) / static_cast<double>(n_free);
  return std::clamp(exact, lo, hi);
}

Vector clamp_box(const Vector& v, double shift, double bound) {
  return (v.array() - shift).max(0.0).min(bound).matrix();
}

double largest_eigenvalue(const Matrix& m, int iterations) {
  const Index n = m.rows();
  Vector x = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector y = m * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    estimate = x.dot(y);
    x = y / norm;
  }
  return std::max(estimate, (m * x).dot(x));
}

void check_problem(const KmmProblem& p, const KmmSolverOptions& options) {
  const Index n = p.gram.rows();
  if (p.gram.cols() != n || p.kappa.size() != n) throw Error("KMM: dimension mismatch");
  if (!p.gram.allFinite() || !p.kappa.allFinite()) throw Error("KMM: non-finite problem data");
  if (!(p.bound > 0.0)) throw Error("KMM: bound must be positive");
  if (!(p.mean_slack >= 0.0)) throw Error("KMM: mean_slack must be non-negative");
  if (p.bound < 1.0 - p.mean_slack) {
    throw Error("KMM: infeasible bounds (bound < 1 - mean_slack)");
  }
  if (n == 0) return;
  const double scale = std::max(1.0, p.gram.cwiseAbs().maxCoeff());
  if ((p.gram - p.gram.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw Error("KMM: gram matrix is not symmetric");
  }
  if (!options.assume_psd) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(p.gram, Eigen::EigenvaluesOnly);
    const Vector& ev = eig.eigenvalues();
    if (ev.minCoeff() < -1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff())) {
      throw Error("KMM: gram matrix is not positive semidefinite (min eigenvalue " +
                  std::to_string(ev.minCoeff()) + ")");
    }
  }
}

}  // namespace

double kmm_objective(const KmmProblem& problem, const Vector& beta) {
  return 0.5 * beta.dot(problem.gram * beta) - problem.kappa.dot(beta);
}

double default_kmm_slack(Index n_source) {
  if (n_source <= 0) return 0.0;
  const double root = std::sqrt(static_cast<double>(n_source));
  return (root - 1.0) / root;
}

KmmProblem make_kmm_problem(const KernelSpec& spec, const Matrix& source, const Matrix& target,
                            double bound, double mean_slack) {
  if (target.rows() == 0) throw Error("KMM: target set is empty");
  KmmProblem p;
  p.gram = gram(spec, source, source);
  const double ratio = static_cast<double>(source.rows()) / static_cast<double>(target.rows());
  p.kappa = ratio * gram(spec, source, target).rowwise().sum();
  p.bound = bound;
  p.mean_slack = mean_slack;
  return p;
}

Vector project_box_slab(const Vector& point, double bound, double mean_slack) {
  const Index n = point.size();
  if (n == 0) return point;
  if (std::isinf(mean_slack)) return clamp_box(point, 0.0, bound);

  const double nd = static_cast<double>(n);
  const double lo_sum = std::max(0.0, nd * (1.0 - mean_slack));
  const double hi_sum = nd * (1.0 + mean_slack);
  const double s0 = clipped_sum(point, 0.0, bound);
  if (s0 >= lo_sum && s0 <= hi_sum) return clamp_box(point, 0.0, bound);

  if (s0 > hi_sum) {
    const double shift = solve_shift(point, bound, hi_sum, 0.0, point.maxCoeff());
    return clamp_box(point, shift, bound);
  }
  if (std::isfinite(bound) && nd * bound <= lo_sum) return Vector::Constant(n, bound);
  const double lo_shift =
      std::isfinite(bound) ? point.minCoeff() - bound
                           : std::min(point.minCoeff(), (point.sum() - lo_sum) / nd);
  const double shift = solve_shift(point, bound, lo_sum, lo_shift, 0.0);
  return clamp_box(point, shift, bound);
}

KmmSolution solve_kmm(const KmmProblem& problem, const KmmSolverOptions& options) {
  check_problem(problem, options);
  const Index n = problem.gram.rows();
  KmmSolution out;
  if (n == 0) {
    out.weights = Vector(0);
    out.history.push_back(0.0);
    return out;
  }

  double lipschitz = largest_eigenvalue(problem.gram, options.power_iterations);
  if (!(lipschitz > 0.0)) lipschitz = 1.0;

  Vector beta = project_box_slab(Vector::Ones(n), problem.bound, problem.mean_slack);
  double value = kmm_objective(problem, beta);
  out.history.push_back(value);

  while (out.n_iter < options.max_iter) {
    const Vector grad = problem.gram * beta - problem.kappa;
    Vector next = project_box_slab(beta - grad / lipschitz, problem.bound, problem.mean_slack);
    const double next_value = kmm_objective(problem, next);
    // A power-iteration estimate can undershoot L; reject and shrink the step.
    if (next_value > value + 1e-14 * std::max(1.0, std::abs(value))) {
      lipschitz *= 2.0;
      if (!std::isfinite(lipschitz)) break;
      continue;
    }
    ++out.n_iter;
    const double moved = (next - beta).cwiseAbs().maxCoeff();
    beta = std::move(next);
    value = next_value;
    out.history.push_back(value);
    if (moved < options.step_tol) break;
  }
  out.weights = std::move(beta);
  out.objective = value;
  return out;
}

Vector kkmm_weights(const BiqualityDataset& ds, const KkmmOptions& options) {
  validate_dataset(ds, /*require_trusted=*/true);
  const KernelSpec spec = resolve_kernel(options.kernel, ds.features);
  KmmSolverOptions solver = options.solver;
  if (spec.family != KernelFamily::kPolynomial || spec.coef0 >= 0.0) solver.assume_psd = true;

  std::vector<IndexList> trusted_by_class(static_cast<std::size_t>(ds.n_classes));
  std::vector<IndexList> untrusted_by_class(static_cast<std::size_t>(ds.n_classes));
  for (Index i = 0; i < ds.n_samples(); ++i) {
    auto& bucket = ds.sample_quality[i] == 1 ? trusted_by_class : untrusted_by_class;
    bucket[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  const IndexList all_trusted = ds.trusted_indices();

  Vector weights = Vector::Ones(ds.n_samples());
  for (int k = 0; k < ds.n_classes; ++k) {
    const IndexList& source = untrusted_by_class[static_cast<std::size_t>(k)];
    if (source.empty()) continue;
    const IndexList* target = &trusted_by_class[static_cast<std::size_t>(k)];
    if (target->empty()) {
      if (!options.permissive) {
        for (Index i : source) weights[i] = 0.0;
        continue;
      }
      target = &all_trusted;
    }
    const double slack = options.mean_slack < 0.0
                             ? default_kmm_slack(static_cast<Index>(source.size()))
                             : options.mean_slack;
    const KmmProblem problem = make_kmm_problem(spec, take_rows(ds.features, source),
                                                take_rows(ds.features, *target), options.bound,
                                                slack);
    const Vector beta = solve_kmm(problem, solver).weights;
    for (std::size_t r = 0; r < source.size(); ++r) weights[source[r]] = beta[static_cast<Index>(r)];
  }
  return weights;
}

ReweightedClassifier fit_kkmm(const BiqualityDataset& ds, const Classifier& base,
                              const KkmmOptions& options) {
  Vector weights = kkmm_weights(ds, options);
  ClassifierPtr model = base.clone();
  model->fit(ds.features, ds.labels, weights, ds.n_classes);
  return {std::move(model), std::move(weights)};
}

Vector irbl_weights(const BiqualityDataset& ds, const Classifier& base,
                    const RatioOptions& options) {
  validate_dataset(ds, /*require_trusted=*/true);
  if (!(options.w_max > 0.0)) throw Error("IRBL: w_max must be positive");
  const IndexList trusted = ds.trusted_indices();
  const IndexList untrusted = ds.untrusted_indices();

  std::set<int> trusted_classes;
  for (Index i : trusted) trusted_classes.insert(ds.labels[i]);
  if (trusted_classes.size() < 2) throw Error("IRBL: trusted subset has a single class");

  Vector weights = Vector::Ones(ds.n_samples());
  if (untrusted.empty()) return weights;

  ClassifierPtr trusted_model = base.clone();
  trusted_model->fit(take_rows(ds.features, trusted), take(ds.labels, trusted), ds.n_classes);
  ClassifierPtr untrusted_model = base.clone();
  const Matrix untrusted_x = take_rows(ds.features, untrusted);
  untrusted_model->fit(untrusted_x, take(ds.labels, untrusted), ds.n_classes);

  const Matrix pt = trusted_model->predict_proba(untrusted_x);
  const Matrix pu = untrusted_model->predict_proba(untrusted_x);
  for (std::size_t r = 0; r < untrusted.size(); ++r) {
    const auto row = static_cast<Index>(r);
    const int y = ds.labels[untrusted[r]];
    const double ratio = pt(row, y) / std::max(pu(row, y), kProbabilityFloor);
    weights[untrusted[r]] = std::clamp(ratio, 0.0, options.w_max);
  }
  return weights;
}

ReweightedClassifier fit_irbl(const BiqualityDataset& ds, const Classifier& base,
                              const RatioOptions& options) {
  Vector weights = irbl_weights(ds, base, options);
  ClassifierPtr model = base.clone();
  model->fit(ds.features, ds.labels, weights, ds.n_classes);
  return {std::move(model), std::move(weights)};
}

namespace {

// (n_untrusted / n_trusted) * odds of the trusted class, floored both ways.
void assign_odds(const Classifier& discriminator, const Matrix& features,
                 const IndexList& rows, double prior, double w_max, Vector& weights) {
  const Matrix p = discriminator.predict_proba(take_rows(features, rows));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double trusted =
        std::clamp(p(static_cast<Index>(r), 1), kProbabilityFloor, 1.0 - kProbabilityFloor);
    weights[rows[r]] = std::clamp(prior * trusted / (1.0 - trusted), 0.0, w_max);
  }
}

}  // namespace

Vector kpdr_weights(const BiqualityDataset& ds, const Classifier& discriminator,
                    const RatioOptions& options) {
  validate_dataset(ds, /*require_trusted=*/true);
  if (!(options.w_max > 0.0)) throw Error("K-PDR: w_max must be positive");

  std::vector<IndexList> members(static_cast<std::size_t>(ds.n_classes));
  for (Index i = 0; i < ds.n_samples(); ++i) {
    members[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }

  Vector weights = Vector::Ones(ds.n_samples());
  ClassifierPtr global;
  IndexList fallback_rows;

  for (int k = 0; k < ds.n_classes; ++k) {
    const IndexList& rows = members[static_cast<std::size_t>(k)];
    IndexList untrusted;
    Index n_trusted = 0;
    for (Index i : rows) {
      if (ds.sample_quality[i] == 1) {
        ++n_trusted;
      } else {
        untrusted.push_back(i);
      }
    }
    if (untrusted.empty()) continue;
    if (n_trusted == 0) {
      fallback_rows.insert(fallback_rows.end(), untrusted.begin(), untrusted.end());
      continue;
    }
    ClassifierPtr model = discriminator.clone();
    model->fit(take_rows(ds.features, rows), take(ds.sample_quality, rows), 2);
    const double prior = static_cast<double>(untrusted.size()) / static_cast<double>(n_trusted);
    assign_odds(*model, ds.features, untrusted, prior, options.w_max, weights);
  }

  if (!fallback_rows.empty()) {
    const DatasetSummary summary = validate_dataset(ds);
    global = discriminator.clone();
    global->fit(ds.features, ds.sample_quality, 2);
    const double prior =
        static_cast<double>(summary.n_untrusted) / static_cast<double>(summary.n_trusted);
    assign_odds(*global, ds.features, fallback_rows, prior, options.w_max, weights);
  }
  return weights;
}

ReweightedClassifier fit_kpdr(const BiqualityDataset& ds, const Classifier& base,
                              const Classifier& discriminator, const RatioOptions& options) {
  Vector weights = kpdr_weights(ds, discriminator, options);
  ClassifierPtr model = base.clone();
  model->fit(ds.features, ds.labels, weights, ds.n_classes);
  return {std::move(model), std::move(weights)};
}

}  // namespace bqlearn
