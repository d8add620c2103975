#include <algorithm>
#include <functional>

#include "pseval/simgraph.hpp"

namespace pseval {
namespace {

using Set = std::vector<int>;  // sorted

Set intersect(const Set& a, const Set& b) {
  Set out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Set difference(const Set& a, const Set& b) {
  Set out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void check_adjacency(const BoolMatrix& adj) {
  if (adj.rows() != adj.cols()) throw ValidationError("adjacency matrix must be square");
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    if (adj(i, i)) throw ValidationError("adjacency matrix must have an empty diagonal");
    for (Eigen::Index j = i + 1; j < adj.cols(); ++j)
      if (adj(i, j) != adj(j, i)) throw ValidationError("adjacency matrix must be symmetric");
  }
}

}  // namespace

CliqueCover maximal_cliques(const BoolMatrix& adjacency) {
  check_adjacency(adjacency);
  const int n = static_cast<int>(adjacency.rows());
  std::vector<Set> neighbors(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (adjacency(i, j)) neighbors[static_cast<std::size_t>(i)].push_back(j);

  CliqueCover cover;
  std::function<void(Set&, Set, Set)> expand = [&](Set& r, Set p, Set x) {
    if (p.empty() && x.empty()) {
      if (r.size() >= 2) {
        Set c = r;
        std::sort(c.begin(), c.end());
        cover.cliques.push_back(std::move(c));
      }
      return;
    }
    // Pivot: vertex of P u X with the most neighbours in P.
    int pivot = -1;
    std::size_t best = 0;
    for (const Set* s : {&p, &x}) {
      for (int u : *s) {
        const std::size_t k = intersect(p, neighbors[static_cast<std::size_t>(u)]).size();
        if (pivot < 0 || k > best) {
          pivot = u;
          best = k;
        }
      }
    }
    for (int v : difference(p, neighbors[static_cast<std::size_t>(pivot)])) {
      const auto& nv = neighbors[static_cast<std::size_t>(v)];
      r.push_back(v);
      expand(r, intersect(p, nv), intersect(x, nv));
      r.pop_back();
      p.erase(std::lower_bound(p.begin(), p.end(), v));
      x.insert(std::lower_bound(x.begin(), x.end(), v), v);
    }
  };

  Set all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  Set r;
  expand(r, all, {});
  std::sort(cover.cliques.begin(), cover.cliques.end());
  for (int i = 0; i < n; ++i)
    if (neighbors[static_cast<std::size_t>(i)].empty()) cover.singletons.push_back(i);
  return cover;
}

CliqueCover connected_components(const BoolMatrix& adjacency) {
  check_adjacency(adjacency);
  const int n = static_cast<int>(adjacency.rows());
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  CliqueCover cover;
  for (int start = 0; start < n; ++start) {
    if (label[static_cast<std::size_t>(start)] >= 0) continue;
    Set comp{start};
    label[static_cast<std::size_t>(start)] = start;
    for (std::size_t head = 0; head < comp.size(); ++head) {
      for (int j = 0; j < n; ++j) {
        if (adjacency(comp[head], j) && label[static_cast<std::size_t>(j)] < 0) {
          label[static_cast<std::size_t>(j)] = start;
          comp.push_back(j);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    if (comp.size() == 1) cover.singletons.push_back(start);
    else cover.cliques.push_back(std::move(comp));
  }
  std::sort(cover.cliques.begin(), cover.cliques.end());
  return cover;
}

}  // namespace pseval
