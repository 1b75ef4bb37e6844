#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bqlearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = Eigen::VectorXi;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Raised for every contract violation in the toolkit (bad shapes, invalid
/// hyperparameters, degenerate data).
class Error : public std::invalid_argument {
 public:
  explicit Error(const std::string& what) : std::invalid_argument(what) {}
};

/// Floor applied to predicted probabilities before ratios and logs.
inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace bqlearn
