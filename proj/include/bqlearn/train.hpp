#pragma once

#include "bqlearn/classifier.hpp"
#include "bqlearn/dataset.hpp"
#include "bqlearn/kernel.hpp"
#include "bqlearn/logistic.hpp"

#include <string>
#include <vector>

namespace bqlearn {

/// The nine biquality algorithms plus two reference baselines.
enum class Algorithm {
  kTrustedOnly,
  kNaiveAll,
  kEasyAdapt,
  kTrAdaBoost,
  kUnhinged,
  kBackward,
  kIrlnl,
  kPlugin,
  kKkmm,
  kIrbl,
  kKpdr,
};

const std::vector<std::string>& algorithm_names();
/// Throws `Error` for names outside the registry.
Algorithm algorithm_from_name(const std::string& name);
std::string algorithm_name(Algorithm algorithm);

struct AlgorithmOptions {
  LogisticConfig learner;
  /// Kernel for K-KMM.
  KernelSpec kmm_kernel;
  double kmm_bound = 1000.0;
  /// Negative selects the per-class default slack.
  double kmm_mean_slack = -1.0;
  bool kmm_permissive = false;
  /// Kernel for Unhinged; linear family selects the primal linear model.
  KernelSpec unhinged_kernel{KernelFamily::kLinear, std::nullopt, 3, 1.0};
  double unhinged_reg = 1.0;
  double w_max = 1000.0;
  bool clip_negative = false;
  int n_iter = 10;
};

/// Single training entry point: validates `ds` and fits `algorithm` with the
/// built-in logistic regression as the base learner. Transition-based
/// algorithms estimate their matrix with GLC on `ds`.
PredictorPtr fit_biquality(Algorithm algorithm, const BiqualityDataset& ds,
                           const AlgorithmOptions& options = {});

}  // namespace bqlearn
