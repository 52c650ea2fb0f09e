#pragma once

// Core numeric types and cosine geometry shared by every matcher.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cpe::embed {

// Allowed deviation of a normalized row from unit L2 norm.
inline constexpr double kNormTolerance = 1e-5;

class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  // Throws DataError on non-finite entries, or when `normalized` is claimed
  // but the norm is off by more than kNormTolerance.
  explicit EmbeddingVector(std::vector<double> values, bool normalized = false);

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  bool normalized() const { return normalized_; }
  double norm() const;
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
  bool normalized_ = false;
};

// Throws DataError("degenerate embedding") for the zero vector.
EmbeddingVector l2_normalize(const EmbeddingVector& v);

// u.v / (|u||v|). Throws DataError on zero vectors or dimension mismatch.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

/// Dense set of embedding rows stored at file precision (32-bit floats,
/// row-major). Arithmetic on sets is done in double precision through
/// `directions()`.
class EmbeddingSet {
 public:
  // `data.size()` must be a positive multiple of `dim`.
  EmbeddingSet(std::size_t dim, std::vector<float> data, std::string set_id = {});

  // Narrows each row to float. Rows must be nonempty and of equal length.
  static EmbeddingSet from_rows(std::span<const EmbeddingVector> rows, std::string set_id = {});
  static EmbeddingSet from_matrix(const Eigen::MatrixXd& rows, std::string set_id = {});

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return data_.size() / dim_; }
  const std::string& set_id() const { return set_id_; }
  std::span<const float> data() const { return data_; }
  std::span<const float> row_span(std::size_t i) const;

  EmbeddingVector row(std::size_t i) const;
  double row_norm(std::size_t i) const;
  bool is_normalized(double tol = kNormTolerance) const;

  // rows x dim matrix of unit directions, each row divided by its own norm
  // in double precision. Throws DataError on a zero row.
  Eigen::MatrixXd directions() const;

  // Rows at `indices` (0-based), in the given order.
  EmbeddingSet select(std::span<const std::size_t> indices, std::string set_id = {}) const;

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

 private:
  std::size_t dim_;
  std::vector<float> data_;
  std::string set_id_;
};

struct SimilarityMatrix {
  Eigen::MatrixXd entries;
  std::string metric = "cosine";
};

// Entry (i, j) = cosine_similarity(A_i, B_j). Throws DataError on dim mismatch.
SimilarityMatrix pairwise_similarity(const EmbeddingSet& a, const EmbeddingSet& b);

// Row-normalizes a double matrix; throws DataError on a zero row.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m);

}  // namespace cpe::embed
