#ifndef PSEVAL_TRANSPORT_HPP
#define PSEVAL_TRANSPORT_HPP

// Exact solver for the balanced transportation problem
//
//   minimize   sum_ij cost(i,j) * flow(i,j)
//   subject to sum_j flow(i,j) = supply(i),  sum_i flow(i,j) = demand(j),  flow >= 0
//
// by the transportation simplex (MODI) method on a spanning-tree basis.
// Degeneracy is resolved with the classical perturbation supply(i) + eps,
// demand(n-1) + m*eps, carried symbolically: every basic value is a pair
// (real part, eps coefficient) compared lexicographically, so every basis
// is non-degenerate and the method cannot cycle.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pseval/error.hpp"

namespace pseval {

template <typename Scalar = double>
struct TransportPlan {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> flows;
  Scalar cost = 0;
  int pivots = 0;
};

struct TransportOptions {
  // Entering cells need reduced cost below -optimality_tol.
  double optimality_tol = 1e-12;
  // Mass imbalance accepted (and absorbed into the last demand).
  double balance_tol = 1e-9;
};

namespace detail {

template <typename Scalar>
struct PerturbedValue {
  Scalar x = 0;
  std::int64_t eps = 0;

  friend bool operator<(const PerturbedValue& a, const PerturbedValue& b) {
    return a.x < b.x || (a.x == b.x && a.eps < b.eps);
  }
  PerturbedValue& operator+=(const PerturbedValue& o) {
    x += o.x;
    eps += o.eps;
    return *this;
  }
  PerturbedValue& operator-=(const PerturbedValue& o) {
    x -= o.x;
    eps -= o.eps;
    return *this;
  }
  bool is_zero() const { return x == Scalar(0) && eps == 0; }
};

template <typename Scalar>
class TransportSimplex {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  TransportSimplex(const Matrix& cost, const Vector& supply, const Vector& demand, const TransportOptions& opt)
      : cost_(cost), m_(static_cast<int>(cost.rows())), n_(static_cast<int>(cost.cols())), opt_(opt) {
    supply_ = supply;
    demand_ = demand;
    // Absorb rounding imbalance into the last demand.
    demand_(n_ - 1) += supply_.sum() - demand_.sum();
    if (demand_(n_ - 1) < Scalar(0)) demand_(n_ - 1) = Scalar(0);
  }

  TransportPlan<Scalar> solve() {
    northwest_corner();
    TransportPlan<Scalar> plan;
    const long long max_pivots = 50LL * (m_ + n_) * (m_ + n_) + 1000;
    Vector u(m_), v(n_);
    for (;;) {
      potentials(u, v);
      int ei = -1, ej = -1;
      Scalar best = -static_cast<Scalar>(opt_.optimality_tol);
      for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < m_; ++i) {
          const Scalar reduced = cost_(i, j) - u(i) - v(j);
          if (reduced < best) {
            best = reduced;
            ei = i;
            ej = j;
          }
        }
      }
      if (ei < 0) break;
      if (++plan.pivots > max_pivots) throw Error("transportation simplex exceeded its pivot limit");
      pivot(ei, ej);
    }

    plan.flows = Matrix::Zero(m_, n_);
    for (const auto& c : basis_) plan.flows(c.row, c.col) = c.flow.x;
    plan.cost = (plan.flows.array() * cost_.array()).sum();
    return plan;
  }

 private:
  struct Cell {
    int row;
    int col;
    PerturbedValue<Scalar> flow;
  };

  const Matrix& cost_;
  Vector supply_, demand_;
  int m_, n_;
  TransportOptions opt_;
  std::vector<Cell> basis_;
  // Tree adjacency: node r in [0, m) is a row, m + c a column; entries are basis indices.
  std::vector<std::vector<int>> adj_;

  int other_end(int cell, int node) const {
    const auto& c = basis_[static_cast<std::size_t>(cell)];
    return node < m_ ? m_ + c.col : c.row;
  }

  void link(int cell) {
    const auto& c = basis_[static_cast<std::size_t>(cell)];
    adj_[static_cast<std::size_t>(c.row)].push_back(cell);
    adj_[static_cast<std::size_t>(m_ + c.col)].push_back(cell);
  }

  void unlink(int cell) {
    const auto& c = basis_[static_cast<std::size_t>(cell)];
    for (int node : {c.row, m_ + c.col}) {
      auto& list = adj_[static_cast<std::size_t>(node)];
      for (std::size_t k = 0; k < list.size(); ++k) {
        if (list[k] == cell) {
          list[k] = list.back();
          list.pop_back();
          break;
        }
      }
    }
  }

  void northwest_corner() {
    adj_.assign(static_cast<std::size_t>(m_ + n_), {});
    basis_.clear();
    basis_.reserve(static_cast<std::size_t>(m_ + n_ - 1));
    auto supply_at = [&](int i) { return PerturbedValue<Scalar>{supply_(i), 1}; };
    auto demand_at = [&](int j) { return PerturbedValue<Scalar>{demand_(j), j == n_ - 1 ? m_ : 0}; };
    // The last row and last column take whatever is left, so the walk always
    // ends at (m-1, n-1) even when rounding leaves the totals a few ulps apart.
    int i = 0, j = 0;
    auto rs = supply_at(0);
    auto rd = demand_at(0);
    while (true) {
      const bool last_row = i == m_ - 1, last_col = j == n_ - 1;
      if (last_row && last_col) {
        auto q = rs;
        if (q.x < Scalar(0)) q.x = Scalar(0);
        basis_.push_back(Cell{i, j, q});
        link(static_cast<int>(basis_.size()) - 1);
        break;
      }
      const bool take_demand = last_row || (!last_col && rd < rs);
      const auto q = take_demand ? rd : rs;
      basis_.push_back(Cell{i, j, q});
      link(static_cast<int>(basis_.size()) - 1);
      rs -= q;
      rd -= q;
      if (take_demand) rd = demand_at(++j);
      else rs = supply_at(++i);
    }
    if (static_cast<int>(basis_.size()) != m_ + n_ - 1)
      throw Error("transportation simplex: initial basis has the wrong size");
  }

  void potentials(Vector& u, Vector& v) const {
    std::vector<char> seen(static_cast<std::size_t>(m_ + n_), 0);
    std::vector<int> queue{0};
    u(0) = Scalar(0);
    seen[0] = 1;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const int node = queue[h];
      for (int cell : adj_[static_cast<std::size_t>(node)]) {
        const int next = other_end(cell, node);
        if (seen[static_cast<std::size_t>(next)]) continue;
        seen[static_cast<std::size_t>(next)] = 1;
        const auto& c = basis_[static_cast<std::size_t>(cell)];
        if (next < m_) u(next) = cost_(c.row, c.col) - v(c.col);
        else v(next - m_) = cost_(c.row, c.col) - u(c.row);
        queue.push_back(next);
      }
    }
  }

  // Basis cells on the tree path from row node `from` to column node `to`.
  std::vector<int> tree_path(int from, int to) const {
    std::vector<int> via(static_cast<std::size_t>(m_ + n_), -2);
    std::vector<int> queue{from};
    via[static_cast<std::size_t>(from)] = -1;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const int node = queue[h];
      if (node == to) break;
      for (int cell : adj_[static_cast<std::size_t>(node)]) {
        const int next = other_end(cell, node);
        if (via[static_cast<std::size_t>(next)] != -2) continue;
        via[static_cast<std::size_t>(next)] = cell;
        queue.push_back(next);
      }
    }
    std::vector<int> path;
    for (int node = to; node != from;) {
      const int cell = via[static_cast<std::size_t>(node)];
      if (cell < 0) throw Error("transportation simplex: basis is not a spanning tree");
      path.push_back(cell);
      node = other_end(cell, node);
    }
    std::reverse(path.begin(), path.end());  // starts at row `from`
    return path;
  }

  void pivot(int ei, int ej) {
    // Cycle: entering (+), then the path from row ei to column ej alternating -, +, ..., -.
    const auto path = tree_path(ei, m_ + ej);
    int leave = -1;
    PerturbedValue<Scalar> theta;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const auto& f = basis_[static_cast<std::size_t>(path[k])].flow;
      if (leave < 0 || f < theta) {
        theta = f;
        leave = path[k];
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      auto& f = basis_[static_cast<std::size_t>(path[k])].flow;
      if (k % 2 == 0) f -= theta;
      else f += theta;
    }
    unlink(leave);
    basis_[static_cast<std::size_t>(leave)] = Cell{ei, ej, theta};
    link(leave);
  }
};

}  // namespace detail

/// Minimum-cost transportation plan. Supply and demand must be non-negative,
/// non-empty and carry the same total mass within balance_tol.
template <typename DerivedC, typename DerivedS, typename DerivedD>
TransportPlan<typename DerivedC::Scalar> solve_transport(const Eigen::MatrixBase<DerivedC>& cost,
                                                         const Eigen::MatrixBase<DerivedS>& supply,
                                                         const Eigen::MatrixBase<DerivedD>& demand,
                                                         const TransportOptions& opt = {}) {
  using Scalar = typename DerivedC::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (cost.rows() == 0 || cost.cols() == 0) throw ValidationError("transport problem needs non-empty sides");
  if (supply.size() != cost.rows() || demand.size() != cost.cols())
    throw ValidationError("transport marginals do not match the cost matrix shape");
  if ((supply.array() < Scalar(0)).any() || (demand.array() < Scalar(0)).any())
    throw ValidationError("transport marginals must be non-negative");
  if (std::abs(supply.sum() - demand.sum()) > static_cast<Scalar>(opt.balance_tol))
    throw ValidationError("transport marginals carry different total mass");
  const Matrix c = cost;
  detail::TransportSimplex<Scalar> simplex(c, Vector(supply), Vector(demand), opt);
  return simplex.solve();
}

}  // namespace pseval

#endif  // PSEVAL_TRANSPORT_HPP
