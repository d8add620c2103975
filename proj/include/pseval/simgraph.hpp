#ifndef PSEVAL_SIMGRAPH_HPP
#define PSEVAL_SIMGRAPH_HPP

// Similarity graphs over sentence embeddings: cosine matrices, LexRank,
// affinity propagation, positional (PacSum-style) salience and clique
// extraction. Everything here is a pure function templated on the scalar.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pseval/error.hpp"

namespace pseval {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Cosine similarity clamped to [-1, 1]. Throws DegenerateInputError for a
/// zero-norm argument and ValidationError for mismatched dimensions.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  using Scalar = typename DerivedA::Scalar;
  if (u.size() != v.size()) throw ValidationError("cosine of vectors with different dimensions");
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) throw DegenerateInputError("cosine of a zero vector");
  return std::clamp<Scalar>(u.dot(v) / (nu * nv), Scalar(-1), Scalar(1));
}

/// Square, symmetric cosine-similarity matrix with entries in [-1, 1].
template <typename Scalar = double>
class SimilarityMatrix {
 public:
  static constexpr double kSymmetryTol = 1e-9;

  /// Validates the invariants; throws ValidationError.
  explicit SimilarityMatrix(MatrixX<Scalar> values) : values_(std::move(values)) {
    if (values_.rows() != values_.cols()) throw ValidationError("similarity matrix must be square");
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if (std::abs(values_(i, i) - Scalar(1)) > kSymmetryTol)
        throw ValidationError("similarity matrix diagonal must be 1");
      for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        const Scalar v = values_(i, j);
        if (!(v >= Scalar(-1) - kSymmetryTol && v <= Scalar(1) + kSymmetryTol))
          throw ValidationError("similarity entry outside [-1, 1]");
        if (std::abs(v - values_(j, i)) > kSymmetryTol) throw ValidationError("similarity matrix is not symmetric");
      }
    }
  }

  Eigen::Index size() const { return values_.rows(); }
  const MatrixX<Scalar>& values() const { return values_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

 private:
  MatrixX<Scalar> values_;
};

/// Pairwise cosines of the columns of `vectors` (dim x n).
template <typename Derived>
SimilarityMatrix<typename Derived::Scalar> similarity_matrix(const Eigen::MatrixBase<Derived>& vectors) {
  using Scalar = typename Derived::Scalar;
  if (vectors.cols() < 1) throw ValidationError("similarity matrix needs at least one vector");
  MatrixX<Scalar> unit(vectors.rows(), vectors.cols());
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    const Scalar norm = vectors.col(j).norm();
    if (norm == Scalar(0)) throw DegenerateInputError("zero vector at index " + std::to_string(j));
    unit.col(j) = vectors.col(j) / norm;
  }
  MatrixX<Scalar> s = unit.transpose() * unit;
  s = ((s + s.transpose()) * Scalar(0.5)).cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
  s.diagonal().setOnes();
  return SimilarityMatrix<Scalar>(std::move(s));
}

enum class SalienceMethod { lexrank, pacsum };

template <typename Scalar = double>
struct SalienceScores {
  VectorX<Scalar> scores;
  SalienceMethod method = SalienceMethod::lexrank;
  int iterations = 0;
};

struct LexRankOptions {
  double damping = 0.85;
  double tol = 1e-6;
  int max_iter = 100;
};

/// Row-stochastic transition matrix of continuous LexRank: negative
/// similarities are clamped to 0, then rows normalized. A row with no
/// positive mass becomes uniform.
template <typename Derived>
MatrixX<typename Derived::Scalar> lexrank_transition(const Eigen::MatrixBase<Derived>& sim) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = sim.rows();
  MatrixX<Scalar> w = sim.cwiseMax(Scalar(0));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar total = w.row(i).sum();
    if (total > Scalar(0)) w.row(i) /= total;
    else w.row(i).setConstant(Scalar(1) / Scalar(n));
  }
  return w;
}

/// Stationary distribution of damping * W + (1 - damping) / n by power
/// iteration from the uniform vector. The step is an L1 contraction by
/// `damping`, so distance to the fixed point is at most
/// damping / (1 - damping) times the last change; converged when that bound
/// drops below tol. Otherwise throws ConvergenceError carrying the last iterate.
template <typename Derived>
SalienceScores<typename Derived::Scalar> lexrank(const Eigen::MatrixBase<Derived>& sim, const LexRankOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = sim.rows();
  if (n < 1 || sim.cols() != n) throw ValidationError("lexrank needs a non-empty square matrix");
  if (!(opt.damping >= 0.0 && opt.damping < 1.0)) throw ValidationError("damping must be in [0, 1)");
  const MatrixX<Scalar> wt = lexrank_transition(sim).transpose();
  const Scalar d = static_cast<Scalar>(opt.damping);
  const Scalar teleport = (Scalar(1) - d) / Scalar(n);
  const Scalar bound = d / (Scalar(1) - d);

  VectorX<Scalar> p = VectorX<Scalar>::Constant(n, Scalar(1) / Scalar(n));
  for (int it = 1; it <= opt.max_iter; ++it) {
    VectorX<Scalar> next = (d * (wt * p)).array() + teleport * p.sum();
    const Scalar change = (next - p).template lpNorm<1>();
    p = std::move(next);
    if (bound * change < static_cast<Scalar>(opt.tol)) {
      p /= p.sum();
      return {std::move(p), SalienceMethod::lexrank, it};
    }
  }
  throw ConvergenceError("lexrank did not converge in " + std::to_string(opt.max_iter) + " iterations",
                         std::vector<double>(p.data(), p.data() + p.size()));
}

template <typename Scalar>
SalienceScores<Scalar> lexrank(const SimilarityMatrix<Scalar>& sim, const LexRankOptions& opt = {}) {
  return lexrank(sim.values(), opt);
}

// ---- affinity propagation ---------------------------------------------------

struct AffinityOptions {
  // NaN means "median of the off-diagonal similarities".
  double preference = std::numeric_limits<double>::quiet_NaN();
  double damping = 0.5;
  int max_iter = 200;
  int stable_iters = 15;
};

struct Clustering {
  std::vector<int> exemplar_of;  // exemplar index of every point
  std::vector<int> exemplars;    // sorted
  bool converged = false;
  int iterations = 0;
};

/// Median of the off-diagonal entries (the diagonal of a 1x1 matrix).
template <typename Derived>
typename Derived::Scalar median_off_diagonal(const Eigen::MatrixBase<Derived>& sim) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = sim.rows();
  if (n == 1) return sim(0, 0);
  std::vector<Scalar> vals;
  vals.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) vals.push_back(sim(i, j));
  const std::size_t m = vals.size();
  std::sort(vals.begin(), vals.end());
  return m % 2 ? vals[m / 2] : (vals[m / 2 - 1] + vals[m / 2]) / Scalar(2);
}

/// Frey & Dueck message passing with damped responsibility and availability
/// updates. The diagonal of `sim` is replaced by the preference. Never throws
/// on non-convergence: `converged` is false and the current exemplars are
/// used (the single best point if the set is empty). Deterministic.
template <typename Derived>
Clustering affinity_propagation(const Eigen::MatrixBase<Derived>& sim, const AffinityOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = sim.rows();
  if (n < 1 || sim.cols() != n) throw ValidationError("affinity propagation needs a non-empty square matrix");
  if (!(opt.damping >= 0.0 && opt.damping < 1.0)) throw ValidationError("damping must be in [0, 1)");

  Clustering out;
  if (n == 1) {
    out.exemplar_of = {0};
    out.exemplars = {0};
    out.converged = true;
    return out;
  }

  const Scalar pref = std::isnan(opt.preference) ? median_off_diagonal(sim) : static_cast<Scalar>(opt.preference);
  MatrixX<Scalar> s = sim;
  s.diagonal().setConstant(pref);
  // Break exact ties (duplicate sentences) with noise a few ulps wide, as the
  // reference implementation does; identical points otherwise oscillate.
  std::mt19937_64 noise(0);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar u = static_cast<Scalar>(static_cast<double>(noise() >> 11) * 0x1.0p-53);
      s(i, k) += (std::numeric_limits<Scalar>::epsilon() * s(i, k) + std::numeric_limits<Scalar>::min() * 100) * u;
    }
  const Scalar lambda = static_cast<Scalar>(opt.damping);

  MatrixX<Scalar> r = MatrixX<Scalar>::Zero(n, n);
  MatrixX<Scalar> a = MatrixX<Scalar>::Zero(n, n);
  MatrixX<Scalar> fresh(n, n);
  std::vector<char> current(static_cast<std::size_t>(n), 0), previous;
  int stable = 0;

  for (int it = 1; it <= opt.max_iter; ++it) {
    out.iterations = it;
    // Responsibilities: r(i,k) = s(i,k) - max_{k' != k} (a(i,k') + s(i,k')).
    const MatrixX<Scalar> as = a + s;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      Scalar first = -std::numeric_limits<Scalar>::infinity();
      Scalar second = first;
      for (Eigen::Index k = 0; k < n; ++k) {
        const Scalar v = as(i, k);
        if (v > first) {
          second = first;
          first = v;
          best = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (Eigen::Index k = 0; k < n; ++k) fresh(i, k) = s(i, k) - (k == best ? second : first);
    }
    r = lambda * r + (Scalar(1) - lambda) * fresh;

    // Availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k))),
    // a(k,k) = sum_{i' != k} max(0, r(i',k)).
    MatrixX<Scalar> rp = r.cwiseMax(Scalar(0));
    rp.diagonal() = r.diagonal();
    const VectorX<Scalar> colsum = rp.colwise().sum().transpose();
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar v = colsum(k) - rp(i, k);
        fresh(i, k) = i == k ? v : std::min(Scalar(0), v);
      }
    }
    a = lambda * a + (Scalar(1) - lambda) * fresh;

    for (Eigen::Index k = 0; k < n; ++k) current[static_cast<std::size_t>(k)] = (a(k, k) + r(k, k)) > Scalar(0);
    const bool any = std::find(current.begin(), current.end(), 1) != current.end();
    stable = (current == previous) ? stable + 1 : 0;
    previous = current;
    if (any && stable >= opt.stable_iters) {
      out.converged = true;
      break;
    }
  }

  for (Eigen::Index k = 0; k < n; ++k)
    if (current[static_cast<std::size_t>(k)]) out.exemplars.push_back(static_cast<int>(k));
  if (out.exemplars.empty()) {
    Eigen::Index best = 0;
    (a.diagonal() + r.diagonal()).maxCoeff(&best);
    out.exemplars.push_back(static_cast<int>(best));
    out.converged = false;
  }

  out.exemplar_of.assign(static_cast<std::size_t>(n), -1);
  for (int e : out.exemplars) out.exemplar_of[static_cast<std::size_t>(e)] = e;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& slot = out.exemplar_of[static_cast<std::size_t>(i)];
    if (slot >= 0) continue;
    int best = out.exemplars.front();
    for (int e : out.exemplars)
      if (sim(i, e) > sim(i, best)) best = e;
    slot = best;
  }
  return out;
}

template <typename Scalar>
Clustering affinity_propagation(const SimilarityMatrix<Scalar>& sim, const AffinityOptions& opt = {}) {
  return affinity_propagation(sim.values(), opt);
}

// ---- positional salience ----------------------------------------------------

struct PacSumOptions {
  double forward_weight = 1.0;   // weight of the mean similarity to later sentences
  double backward_weight = 1.0;  // weight of the mean similarity to earlier sentences
};

/// score[i] = forward * mean_{j>i} sim(i,j) - backward * mean_{j<i} sim(i,j),
/// an empty mean being 0. Rows must be in document order.
template <typename Derived>
SalienceScores<typename Derived::Scalar> pacsum_scores(const Eigen::MatrixBase<Derived>& sim,
                                                       const PacSumOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = sim.rows();
  if (sim.cols() != n) throw ValidationError("pacsum needs a square matrix");
  SalienceScores<Scalar> out{VectorX<Scalar>::Zero(n), SalienceMethod::pacsum, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index after = n - i - 1;
    const Scalar fwd = after > 0 ? sim.row(i).tail(after).sum() / Scalar(after) : Scalar(0);
    const Scalar bwd = i > 0 ? sim.row(i).head(i).sum() / Scalar(i) : Scalar(0);
    out.scores(i) = static_cast<Scalar>(opt.forward_weight) * fwd - static_cast<Scalar>(opt.backward_weight) * bwd;
  }
  return out;
}

template <typename Scalar>
SalienceScores<Scalar> pacsum_scores(const SimilarityMatrix<Scalar>& sim, const PacSumOptions& opt = {}) {
  return pacsum_scores(sim.values(), opt);
}

// ---- cliques ----------------------------------------------------------------

struct CliqueCover {
  std::vector<std::vector<int>> cliques;  // each sorted, size >= 2, lexicographic order
  std::vector<int> singletons;            // isolated vertices
};

/// Threshold graph: edge (i, j), i != j, iff sim(i,j) >= threshold.
template <typename Derived>
BoolMatrix threshold_graph(const Eigen::MatrixBase<Derived>& sim, typename Derived::Scalar threshold) {
  BoolMatrix adj = (sim.array() >= threshold).matrix();
  adj.diagonal().setConstant(false);
  return adj;
}

/// All maximal cliques by Bron-Kerbosch with Tomita pivoting.
CliqueCover maximal_cliques(const BoolMatrix& adjacency);

/// Connected components, reported in the same shape as maximal_cliques.
CliqueCover connected_components(const BoolMatrix& adjacency);

}  // namespace pseval

#endif  // PSEVAL_SIMGRAPH_HPP
