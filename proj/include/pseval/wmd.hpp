#ifndef PSEVAL_WMD_HPP
#define PSEVAL_WMD_HPP

// Word mover's distance between weighted bags of token embeddings, with
// ground cost 1 - cosine (so every cost lies in [0, 2]).

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pseval/error.hpp"
#include "pseval/transport.hpp"

namespace pseval {

template <typename Scalar = double>
struct WeightedTokenBag {
  std::vector<std::string> stems;                                  // one per entry
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;   // dim x size
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;                // positive, sums to 1

  Eigen::Index size() const { return weights.size(); }
  Eigen::Index dimension() const { return vectors.rows(); }

  /// Throws ValidationError when the bag is empty, misshapen or not normalized.
  void validate() const {
    if (weights.size() == 0) throw ValidationError("token bag is empty");
    if (vectors.cols() != weights.size() || static_cast<Eigen::Index>(stems.size()) != weights.size())
      throw ValidationError("token bag parts differ in length");
    if ((weights.array() <= Scalar(0)).any()) throw ValidationError("token bag weights must be positive");
    if (std::abs(weights.sum() - Scalar(1)) > Scalar(1e-9)) throw ValidationError("token bag weights must sum to 1");
  }
};

/// c(i, j) = 1 - cos(a_i, b_j), clamped to [0, 2].
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> wmd_cost_matrix(const WeightedTokenBag<Scalar>& a,
                                                                       const WeightedTokenBag<Scalar>& b) {
  if (a.size() == 0 || b.size() == 0) throw DegenerateInputError("token bag is empty");
  if (a.dimension() != b.dimension())
    throw ValidationError("token bags have different dimensions (" + std::to_string(a.dimension()) + " vs " +
                          std::to_string(b.dimension()) + ")");
  const auto na = a.vectors.colwise().norm().eval();
  const auto nb = b.vectors.colwise().norm().eval();
  if ((na.array() == Scalar(0)).any() || (nb.array() == Scalar(0)).any())
    throw DegenerateInputError("token bag holds a zero vector");
  const auto ua = (a.vectors.array().rowwise() / na.array()).matrix().eval();
  const auto ub = (b.vectors.array().rowwise() / nb.array()).matrix().eval();
  return (Scalar(1) - (ua.transpose() * ub).array()).cwiseMax(Scalar(0)).cwiseMin(Scalar(2)).matrix();
}

/// Minimum-cost transport of a's mass onto b's.
template <typename Scalar>
TransportPlan<Scalar> exact_wmd(const WeightedTokenBag<Scalar>& a, const WeightedTokenBag<Scalar>& b,
                                const TransportOptions& opt = {}) {
  const auto cost = wmd_cost_matrix(a, b);
  return solve_transport(cost, a.weights, b.weights, opt);
}

/// Lower bound on exact_wmd: the larger of the two one-sided relaxations
/// sum_i w_i min_j c(i,j) and sum_j w'_j min_i c(i,j).
template <typename Scalar>
Scalar relaxed_wmd(const WeightedTokenBag<Scalar>& a, const WeightedTokenBag<Scalar>& b) {
  const auto cost = wmd_cost_matrix(a, b);
  const Scalar left = a.weights.dot(cost.rowwise().minCoeff());
  const Scalar right = b.weights.dot(cost.colwise().minCoeff().transpose());
  return std::max(left, right);
}

}  // namespace pseval

#endif  // PSEVAL_WMD_HPP
