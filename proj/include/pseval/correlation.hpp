#ifndef PSEVAL_CORRELATION_HPP
#define PSEVAL_CORRELATION_HPP

// Sample correlation coefficients over equal-length series.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "pseval/error.hpp"

namespace pseval {

namespace detail {

template <typename DX, typename DY>
void check_pair(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
  if (x.size() < 3) throw DegenerateInputError("correlation needs at least 3 observations");
}

}  // namespace detail

/// Average (fractional) ranks, 1-based; tied values share the mean of their ranks.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> average_ranks(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const auto n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ranks(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && x(order[static_cast<std::size_t>(j + 1)]) == x(order[static_cast<std::size_t>(i)])) ++j;
    const Scalar r = Scalar(i + j + 2) / Scalar(2);
    for (Eigen::Index k = i; k <= j; ++k) ranks(order[static_cast<std::size_t>(k)]) = r;
    i = j + 1;
  }
  return ranks;
}

/// Pearson's r. Throws DegenerateInputError on fewer than 3 points or zero variance.
template <typename DX, typename DY>
typename DX::Scalar pearson(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  detail::check_pair(x, y);
  const auto dx = (x.array() - x.mean()).matrix().eval();
  const auto dy = (y.array() - y.mean()).matrix().eval();
  const Scalar sxx = dx.squaredNorm();
  const Scalar syy = dy.squaredNorm();
  if (sxx == Scalar(0) || syy == Scalar(0)) throw DegenerateInputError("correlation input has zero variance");
  const Scalar r = dx.dot(dy) / std::sqrt(sxx * syy);
  return std::clamp(r, Scalar(-1), Scalar(1));
}

/// Spearman's rho: Pearson of average ranks.
template <typename DX, typename DY>
typename DX::Scalar spearman(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  detail::check_pair(x, y);
  return pearson(average_ranks(x), average_ranks(y));
}

/// Kendall's tau-b, O(n^2) pair count.
template <typename DX, typename DY>
typename DX::Scalar kendall(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  detail::check_pair(x, y);
  const auto n = x.size();
  long long concordant = 0, discordant = 0, tied_x = 0, tied_y = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const int sx = (x(i) > x(j)) - (x(i) < x(j));
      const int sy = (y(i) > y(j)) - (y(i) < y(j));
      if (sx == 0) ++tied_x;
      if (sy == 0) ++tied_y;
      if (sx * sy > 0) ++concordant;
      else if (sx * sy < 0) ++discordant;
    }
  }
  const long long n0 = static_cast<long long>(n) * (n - 1) / 2;
  if (tied_x == n0 || tied_y == n0) throw DegenerateInputError("correlation input has zero variance");
  const Scalar denom = std::sqrt(Scalar(n0 - tied_x) * Scalar(n0 - tied_y));
  return std::clamp(Scalar(concordant - discordant) / denom, Scalar(-1), Scalar(1));
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                 Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
}
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return spearman(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                  Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
}
inline double kendall(const std::vector<double>& x, const std::vector<double>& y) {
  return kendall(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                 Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
}

}  // namespace pseval

#endif  // PSEVAL_CORRELATION_HPP
