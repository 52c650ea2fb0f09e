#pragma once

// Zero-dimensional Vietoris-Rips persistence over cosine distances.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpe/embedcore.hpp"

namespace cpe::tda {

/// Symmetric n x n matrix with zero diagonal and entries in [0, 2].
class DistanceMatrix {
 public:
  // Throws DataError if the matrix is not square, not symmetric within 1e-9,
  // has a nonzero diagonal, or has entries outside [0, 2].
  explicit DistanceMatrix(Eigen::MatrixXd entries, std::string metric = "cosine");

  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const std::string& metric() const { return metric_; }

 private:
  Eigen::MatrixXd entries_;
  std::string metric_;
};

struct Bar {
  double birth = 0.0;
  double death = 0.0;
};

struct PersistenceDiagram {
  std::vector<Bar> finite_bars;  // sorted by death, ascending
  int essential_count = 0;
};

// 1 - cosine similarity, clamped to [0, 2], with an exact zero diagonal.
DistanceMatrix cosine_distance_matrix(const embed::EmbeddingSet& features);

// H0 barcode of the Vietoris-Rips filtration: all births 0, deaths are the
// merge scales (the minimum spanning tree edge weights), one essential bar.
PersistenceDiagram zero_dim_persistence(const DistanceMatrix& d);

// Mean finite bar length over max(n - 1, 1); 0 for a single point.
double total_persistence(const PersistenceDiagram& diagram, std::size_t n);

}  // namespace cpe::tda
