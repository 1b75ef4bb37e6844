#include "bqlearn/adapt.hpp"
#include "bqlearn/corruption.hpp"
#include "bqlearn/model_selection.hpp"
#include "bqlearn/reweight.hpp"
#include "bqlearn/train.hpp"
#include "bqlearn/transition.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace bqlearn;

namespace {

BiqualityDataset make_ds(const Matrix& x, const Labels& y, const Labels& quality,
                         std::optional<int> n_classes) {
  BiqualityDataset ds{x, y, quality, 0};
  ds.n_classes = n_classes ? *n_classes : (y.size() ? y.maxCoeff() + 1 : 0);
  return ds;
}

py::dict report_dict(const CorruptionReport& r) {
  py::dict d;
  d["n_corrupted"] = r.n_corrupted;
  d["realized_noise_ratio"] = r.realized_noise_ratio;
  d["per_class_flip_counts"] = r.per_class_flip_counts;
  d["seed"] = r.seed;
  return d;
}

AlgorithmOptions options_from_kwargs(const py::dict& kw) {
  AlgorithmOptions o;
  for (const auto& [key_obj, value] : kw) {
    const auto key = key_obj.cast<std::string>();
    if (key == "l2_penalty") {
      o.learner.l2_penalty = value.cast<double>();
    } else if (key == "max_iter") {
      o.learner.max_iter = value.cast<int>();
    } else if (key == "tol") {
      o.learner.tol = value.cast<double>();
    } else if (key == "kernel") {
      o.kmm_kernel.family = kernel_family_from_name(value.cast<std::string>());
      o.unhinged_kernel.family = o.kmm_kernel.family;
    } else if (key == "gamma") {
      if (!value.is_none()) o.kmm_kernel.gamma = o.unhinged_kernel.gamma = value.cast<double>();
    } else if (key == "bound") {
      o.kmm_bound = value.cast<double>();
    } else if (key == "mean_slack") {
      o.kmm_mean_slack = value.is_none() ? -1.0 : value.cast<double>();
    } else if (key == "permissive") {
      o.kmm_permissive = value.cast<bool>();
    } else if (key == "reg") {
      o.unhinged_reg = value.cast<double>();
    } else if (key == "w_max") {
      o.w_max = value.cast<double>();
    } else if (key == "clip_negative") {
      o.clip_negative = value.cast<bool>();
    } else if (key == "n_iter") {
      o.n_iter = value.cast<int>();
    } else {
      throw Error("unknown option: " + key);
    }
  }
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Biquality learning algorithms, corruption generators and biquality CV.";

  py::register_exception<Error>(m, "BqlearnError", PyExc_ValueError);

  py::class_<Predictor, std::shared_ptr<Predictor>>(m, "Predictor")
      .def("predict_proba", &Predictor::predict_proba, py::arg("X"))
      .def("predict", &Predictor::predict, py::arg("X"))
      .def_property_readonly("n_classes", &Predictor::n_classes);

  m.def("algorithm_names", &algorithm_names);

  m.def(
      "fit",
      [](const std::string& algorithm, const Matrix& x, const Labels& y, const Labels& quality,
         std::optional<int> n_classes, const py::kwargs& kw) {
        const AlgorithmOptions options = options_from_kwargs(kw);
        const BiqualityDataset ds = make_ds(x, y, quality, n_classes);
        py::gil_scoped_release release;
        return std::shared_ptr<Predictor>(fit_biquality(algorithm_from_name(algorithm), ds, options));
      },
      py::arg("algorithm"), py::arg("X"), py::arg("y"), py::arg("sample_quality"),
      py::arg("n_classes") = py::none(),
      "Fit a registered algorithm. Keyword options: l2_penalty, max_iter, tol, kernel, gamma, "
      "bound, mean_slack, permissive, reg, w_max, clip_negative, n_iter.");

  m.def(
      "estimate_transition_glc",
      [](const Matrix& x, const Labels& y, const Labels& quality, std::optional<int> n_classes,
         double l2_penalty) {
        LogisticConfig lr;
        lr.l2_penalty = l2_penalty;
        return estimate_transition_glc(make_ds(x, y, quality, n_classes), WeightedLogisticRegression(lr))
            .values();
      },
      py::arg("X"), py::arg("y"), py::arg("sample_quality"), py::arg("n_classes") = py::none(),
      py::arg("l2_penalty") = 1.0);

  m.def(
      "solve_kmm",
      [](const Matrix& gram, const Vector& kappa, double bound, double mean_slack, int max_iter) {
        KmmProblem p{gram, kappa, bound, mean_slack};
        KmmSolverOptions o;
        o.max_iter = max_iter;
        const KmmSolution s = solve_kmm(p, o);
        return py::make_tuple(s.weights, s.objective);
      },
      py::arg("gram"), py::arg("kappa"), py::arg("bound"), py::arg("mean_slack"),
      py::arg("max_iter") = KmmSolverOptions{}.max_iter);

  m.def("tradaboost_source_beta", &tradaboost_source_beta, py::arg("n_untrusted"), py::arg("n_iter"));

  m.def(
      "make_label_noise",
      [](const Labels& y, const Matrix& noise_matrix, std::uint64_t seed) {
        const NoisyLabels out = make_label_noise(y, noise_matrix, seed);
        return py::make_tuple(out.labels, report_dict(out.report));
      },
      py::arg("y"), py::arg("noise_matrix"), py::arg("seed"));

  m.def(
      "make_instance_dependent_label_noise",
      [](const Labels& y, const Vector& p, const Matrix& noise_matrix, std::uint64_t seed) {
        const NoisyLabels out = make_instance_dependent_label_noise(y, p, noise_matrix, seed);
        return py::make_tuple(out.labels, report_dict(out.report));
      },
      py::arg("y"), py::arg("flip_probability"), py::arg("noise_matrix"), py::arg("seed"));

  m.def(
      "uncertainty_noise_probability",
      [](const Matrix& x, const Labels& y, const Predictor& model, double target_ratio) {
        return uncertainty_noise_probability(x, y, model, target_ratio);
      },
      py::arg("X"), py::arg("y"), py::arg("model"), py::arg("target_ratio"));

  m.def(
      "make_feature_dependent_label_noise",
      [](const Matrix& x, const Labels& y, int n_classes, double noise_ratio, std::uint64_t seed,
         double flip_sd) {
        const FeatureNoise out =
            make_feature_dependent_label_noise(x, y, n_classes, noise_ratio, seed, FeatureNoiseOptions{flip_sd});
        return py::make_tuple(out.labels, report_dict(out.report));
      },
      py::arg("X"), py::arg("y"), py::arg("n_classes"), py::arg("noise_ratio"), py::arg("seed"),
      py::arg("flip_sd") = 0.1);

  m.def(
      "make_weak_labels",
      [](const Matrix& x, const Labels& y, int n_classes, double trusted_fraction, std::uint64_t seed,
         double l2_penalty) {
        LogisticConfig lr;
        lr.l2_penalty = l2_penalty;
        const BiqualityDataset ds =
            make_weak_labels(x, y, n_classes, trusted_fraction, WeightedLogisticRegression(lr), seed);
        return py::make_tuple(ds.labels, ds.sample_quality);
      },
      py::arg("X"), py::arg("y"), py::arg("n_classes"), py::arg("trusted_fraction"), py::arg("seed"),
      py::arg("l2_penalty") = 1.0);

  m.def(
      "make_imbalance",
      [](const Labels& y, const Vector& target, const std::string& mode, std::uint64_t seed,
         std::optional<int> n_classes) {
        ImbalanceMode im;
        if (mode == "undersample") {
          im = ImbalanceMode::kUndersample;
        } else if (mode == "oversample") {
          im = ImbalanceMode::kOversample;
        } else {
          throw Error("mode must be 'undersample' or 'oversample'");
        }
        const BiqualityDataset ds =
            make_ds(Matrix::Zero(y.size(), 1), y, Labels::Ones(y.size()),
                    n_classes ? n_classes : std::optional<int>(static_cast<int>(target.size())));
        return make_imbalance(ds, target, im, seed).indices;
      },
      py::arg("y"), py::arg("target_distribution"), py::arg("mode") = "undersample", py::arg("seed") = 0,
      py::arg("n_classes") = py::none(), "Row indices of the resampled dataset.");

  m.def("make_sampling_bias", &make_sampling_bias, py::arg("X"), py::arg("shift"), py::arg("scale"),
        py::arg("target_size"), py::arg("seed"));
  m.def("make_sampling_biais", &make_sampling_biais, py::arg("X"), py::arg("shift"), py::arg("scale"),
        py::arg("target_size"), py::arg("seed"));

  m.def(
      "kfold_splits",
      [](Index n, int k, bool shuffle, std::uint64_t seed) {
        std::vector<std::pair<IndexList, IndexList>> out;
        for (const Split& s : kfold_splits(n, k, shuffle, seed)) out.emplace_back(s.train, s.test);
        return out;
      },
      py::arg("n_samples"), py::arg("n_folds"), py::arg("shuffle") = false, py::arg("seed") = 0);

  m.def(
      "make_biquality_cv",
      [](const std::vector<std::pair<IndexList, IndexList>>& base, const Labels& quality) {
        std::vector<Split> splits;
        for (const auto& [train, test] : base) splits.push_back({train, test});
        std::vector<std::pair<IndexList, IndexList>> out;
        for (const Split& s : make_biquality_cv(splits, quality).splits) out.emplace_back(s.train, s.test);
        return out;
      },
      py::arg("splits"), py::arg("sample_quality"));

  m.def(
      "evaluate",
      [](const Predictor& model, const Matrix& x, const Labels& y, const Labels& quality,
         const IndexList& test) {
        const MetricReport r = evaluate(model, make_ds(x, y, quality, model.n_classes()), test);
        py::dict d;
        d["accuracy"] = r.accuracy;
        d["balanced_accuracy"] = r.balanced_accuracy;
        d["log_loss"] = r.log_loss;
        d["n_test"] = r.n_test;
        return d;
      },
      py::arg("model"), py::arg("X"), py::arg("y"), py::arg("sample_quality"), py::arg("test_indices"));
}
