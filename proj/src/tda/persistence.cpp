#include "cpe/tda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "cpe/error.hpp"

namespace cpe::tda {

namespace {

// Union by size with path halving.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

struct Edge {
  double weight;
  std::size_t i;
  std::size_t j;
};

}  // namespace

DistanceMatrix::DistanceMatrix(Eigen::MatrixXd entries, std::string metric)
    : entries_(std::move(entries)), metric_(std::move(metric)) {
  if (entries_.rows() != entries_.cols()) throw DataError("distance matrix must be square");
  const Eigen::Index n = entries_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (entries_(i, i) != 0.0) throw DataError("distance matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = entries_(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 2.0) throw DataError("distance outside [0, 2]");
      if (std::abs(v - entries_(j, i)) > 1e-9) throw DataError("distance matrix is not symmetric");
    }
  }
}

DistanceMatrix cosine_distance_matrix(const embed::EmbeddingSet& features) {
  const Eigen::MatrixXd dirs = features.directions();
  Eigen::MatrixXd d = (1.0 - (dirs * dirs.transpose()).array()).matrix();
  const Eigen::Index n = d.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::clamp(0.5 * (d(i, j) + d(j, i)), 0.0, 2.0);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return DistanceMatrix(std::move(d));
}

PersistenceDiagram zero_dim_persistence(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  PersistenceDiagram diagram;
  diagram.essential_count = n > 0 ? 1 : 0;
  if (n < 2) return diagram;

  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({d(i, j), i, j});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.weight, a.i, a.j) < std::tie(b.weight, b.i, b.j);
  });

  // Kruskal: each successful union kills the younger of two components.
  DisjointSets components(n);
  diagram.finite_bars.reserve(n - 1);
  for (const Edge& e : edges) {
    if (components.unite(e.i, e.j)) {
      diagram.finite_bars.push_back({0.0, e.weight});
      if (diagram.finite_bars.size() == n - 1) break;
    }
  }
  return diagram;
}

double total_persistence(const PersistenceDiagram& diagram, std::size_t n) {
  if (n <= 1) return 0.0;
  double sum = 0.0;
  for (const Bar& b : diagram.finite_bars) sum += b.death - b.birth;
  return sum / static_cast<double>(n - 1);
}

}  // namespace cpe::tda
