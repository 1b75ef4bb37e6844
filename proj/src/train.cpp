#include "bqlearn/train.hpp"

#include "bqlearn/adapt.hpp"
#include "bqlearn/reweight.hpp"
#include "bqlearn/transition.hpp"
#include "bqlearn/unhinged.hpp"

#include <array>
#include <utility>

namespace bqlearn {
namespace {

constexpr std::array<std::pair<Algorithm, const char*>, 11> kRegistry{{
    {Algorithm::kTrustedOnly, "trusted_only"},
    {Algorithm::kNaiveAll, "naive_all"},
    {Algorithm::kEasyAdapt, "easy_adapt"},
    {Algorithm::kTrAdaBoost, "tradaboost"},
    {Algorithm::kUnhinged, "unhinged"},
    {Algorithm::kBackward, "backward"},
    {Algorithm::kIrlnl, "irlnl"},
    {Algorithm::kPlugin, "plugin"},
    {Algorithm::kKkmm, "kkmm"},
    {Algorithm::kIrbl, "irbl"},
    {Algorithm::kKpdr, "kpdr"},
}};

template <typename T>
PredictorPtr boxed(T&& model) {
  return std::make_unique<std::decay_t<T>>(std::forward<T>(model));
}

}  // namespace

const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [id, name] : kRegistry) out.emplace_back(name);
    return out;
  }();
  return names;
}

Algorithm algorithm_from_name(const std::string& name) {
  for (const auto& [id, entry] : kRegistry) {
    if (name == entry) return id;
  }
  throw Error("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm algorithm) {
  for (const auto& [id, entry] : kRegistry) {
    if (id == algorithm) return entry;
  }
  return "unknown";
}

PredictorPtr fit_biquality(Algorithm algorithm, const BiqualityDataset& ds,
                           const AlgorithmOptions& options) {
  validate_dataset(ds, /*require_trusted=*/true);
  const WeightedLogisticRegression learner(options.learner);

  switch (algorithm) {
    case Algorithm::kTrustedOnly: {
      const IndexList trusted = ds.trusted_indices();
      ClassifierPtr model = learner.clone();
      model->fit(take_rows(ds.features, trusted), take(ds.labels, trusted), ds.n_classes);
      return model;
    }
    case Algorithm::kNaiveAll: {
      ClassifierPtr model = learner.clone();
      model->fit(ds.features, ds.labels, ds.n_classes);
      return model;
    }
    case Algorithm::kEasyAdapt:
      return boxed(fit_easy_adapt(ds, learner));
    case Algorithm::kTrAdaBoost:
      return boxed(fit_tradaboost(ds, learner, options.n_iter));
    case Algorithm::kUnhinged:
      return boxed(fit_unhinged(ds, options.unhinged_kernel, options.unhinged_reg));
    case Algorithm::kBackward:
      return boxed(fit_backward(ds, estimate_transition_glc(ds, learner), learner,
                                BackwardOptions{options.clip_negative}));
    case Algorithm::kIrlnl:
      return boxed(fit_irlnl(ds, estimate_transition_glc(ds, learner), learner,
                             IrlnlOptions{options.w_max}));
    case Algorithm::kPlugin:
      return boxed(fit_plugin(ds, estimate_transition_glc(ds, learner), learner));
    case Algorithm::kKkmm: {
      KkmmOptions kkmm;
      kkmm.kernel = options.kmm_kernel;
      kkmm.bound = options.kmm_bound;
      kkmm.mean_slack = options.kmm_mean_slack;
      kkmm.permissive = options.kmm_permissive;
      return boxed(fit_kkmm(ds, learner, kkmm));
    }
    case Algorithm::kIrbl:
      return boxed(fit_irbl(ds, learner, RatioOptions{options.w_max}));
    case Algorithm::kKpdr:
      return boxed(fit_kpdr(ds, learner, learner, RatioOptions{options.w_max}));
  }
  throw Error("unknown algorithm");
}

}  // namespace bqlearn
