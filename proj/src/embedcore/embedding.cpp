#include "cpe/embedcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "cpe/error.hpp"

namespace cpe::embed {

namespace {

double dot(std::span<const double> u, std::span<const double> v) {
  return std::inner_product(u.begin(), u.end(), v.begin(), 0.0);
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values, bool normalized)
    : values_(std::move(values)), normalized_(normalized) {
  for (double x : values_) {
    if (!std::isfinite(x)) throw DataError("embedding has a non-finite entry");
  }
  if (normalized_ && std::abs(norm() - 1.0) > kNormTolerance) {
    throw DataError("embedding flagged normalized but has norm " + std::to_string(norm()));
  }
}

double EmbeddingVector::norm() const { return std::sqrt(dot(values_, values_)); }

EmbeddingVector l2_normalize(const EmbeddingVector& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw DataError("degenerate embedding");
  std::vector<double> out(v.values().begin(), v.values().end());
  for (double& x : out) x /= n;
  return EmbeddingVector(std::move(out), true);
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) throw DataError("dimension mismatch in cosine similarity");
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) throw DataError("degenerate embedding");
  const double c = dot(u.values(), v.values()) / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

EmbeddingSet::EmbeddingSet(std::size_t dim, std::vector<float> data, std::string set_id)
    : dim_(dim), data_(std::move(data)), set_id_(std::move(set_id)) {
  if (dim_ == 0) throw DataError("embedding set dimension must be positive");
  if (data_.empty() || data_.size() % dim_ != 0) {
    throw DataError("embedding set payload is not a positive multiple of dim");
  }
  for (float x : data_) {
    if (!std::isfinite(x)) throw DataError("embedding set has a non-finite entry");
  }
}

EmbeddingSet EmbeddingSet::from_rows(std::span<const EmbeddingVector> rows, std::string set_id) {
  if (rows.empty()) throw DataError("embedding set needs at least one row");
  const std::size_t dim = rows.front().dim();
  std::vector<float> data;
  data.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.dim() != dim) throw DataError("embedding rows have inconsistent dimension");
    for (double x : r.values()) data.push_back(static_cast<float>(x));
  }
  return EmbeddingSet(dim, std::move(data), std::move(set_id));
}

EmbeddingSet EmbeddingSet::from_matrix(const Eigen::MatrixXd& rows, std::string set_id) {
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(rows.size()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) data.push_back(static_cast<float>(rows(i, j)));
  }
  return EmbeddingSet(static_cast<std::size_t>(rows.cols()), std::move(data), std::move(set_id));
}

std::span<const float> EmbeddingSet::row_span(std::size_t i) const {
  if (i >= rows()) throw DataError("embedding row index out of range");
  return std::span<const float>(data_).subspan(i * dim_, dim_);
}

EmbeddingVector EmbeddingSet::row(std::size_t i) const {
  auto r = row_span(i);
  return EmbeddingVector(std::vector<double>(r.begin(), r.end()));
}

double EmbeddingSet::row_norm(std::size_t i) const {
  double s = 0.0;
  for (float x : row_span(i)) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

bool EmbeddingSet::is_normalized(double tol) const {
  for (std::size_t i = 0; i < rows(); ++i) {
    if (std::abs(row_norm(i) - 1.0) > tol) return false;
  }
  return true;
}

Eigen::MatrixXd EmbeddingSet::directions() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < rows(); ++i) {
    auto r = row_span(i);
    for (std::size_t j = 0; j < dim_; ++j) m(i, j) = r[j];
  }
  return normalize_rows(m);
}

EmbeddingSet EmbeddingSet::select(std::span<const std::size_t> indices, std::string set_id) const {
  std::vector<float> out;
  out.reserve(indices.size() * dim_);
  for (std::size_t i : indices) {
    auto r = row_span(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return EmbeddingSet(dim_, std::move(out), std::move(set_id));
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (!(n > 0.0)) throw DataError("degenerate embedding");
    out.row(i) /= n;
  }
  return out;
}

SimilarityMatrix pairwise_similarity(const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.dim() != b.dim()) {
    throw DataError("dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  SimilarityMatrix s;
  s.entries = (a.directions() * b.directions().transpose()).cwiseMax(-1.0).cwiseMin(1.0);
  return s;
}

}  // namespace cpe::embed
