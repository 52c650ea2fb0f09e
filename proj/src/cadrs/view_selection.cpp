#include <algorithm>
#include <cmath>
#include <numeric>

#include "cpe/cadrs.hpp"
#include "cpe/error.hpp"
#include "cpe/rng.hpp"

namespace cpe::cadrs {

namespace {

// Largest start in [0, 1 - side] such that start + side <= 1 holds in floating point.
double place(double u, double side) {
  double start = std::max(0.0, u * (1.0 - side));
  while (start + side > 1.0 && start > 0.0) start = std::nextafter(start, 0.0);
  return start;
}

std::pair<std::size_t, std::size_t> pixel_range(double start, double extent, std::size_t size) {
  const double n = static_cast<double>(size);
  auto lo = static_cast<std::size_t>(std::floor(start * n));
  lo = std::min(lo, size - 1);
  auto hi = static_cast<std::size_t>(std::llround((start + extent) * n));
  hi = std::clamp(hi, lo + 1, size);
  return {lo, hi};
}

}  // namespace

std::vector<CropSpec> generate_crop_specs(std::uint64_t seed, std::size_t n, const CropSampling& s) {
  std::vector<CropSpec> specs;
  specs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);
    const double area = rng.uniform(s.scale_min, s.scale_max);
    const double ratio = rng.uniform(s.ratio_min, s.ratio_max);
    CropSpec c;
    c.w = std::min(1.0, std::sqrt(area * ratio));
    c.h = std::min(1.0, std::sqrt(area / ratio));
    c.x0 = place(rng.uniform(), c.w);
    c.y0 = place(rng.uniform(), c.h);
    c.hflip = rng.uniform() < 0.5;
    c.seed_index = i;
    specs.push_back(c);
  }
  return specs;
}

double mean_activation(const AttentionMap& map, const CropSpec& spec) {
  const auto [c0, c1] = pixel_range(spec.x0, spec.w, map.width());
  const auto [r0, r1] = pixel_range(spec.y0, spec.h, map.height());
  double sum = 0.0;
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) sum += map.at(r, c);
  }
  return sum / static_cast<double>((r1 - r0) * (c1 - c0));
}

ActivationStats activation_stats(std::span<const double> activations) {
  ActivationStats st;
  st.per_view_mean.assign(activations.begin(), activations.end());
  if (activations.empty()) return st;
  const double n = static_cast<double>(activations.size());
  st.mu = std::accumulate(activations.begin(), activations.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : activations) ss += (a - st.mu) * (a - st.mu);
  st.sigma = std::sqrt(ss / n);
  st.threshold = st.mu - 2.0 * st.sigma;
  return st;
}

std::vector<std::size_t> select_views(std::span<const double> activations) {
  std::vector<std::size_t> kept;
  if (activations.empty()) return kept;
  const auto [lo, hi] = std::minmax_element(activations.begin(), activations.end());
  const bool degenerate = *lo == *hi;  // sigma = 0
  const double threshold = activation_stats(activations).threshold;
  for (std::size_t i = 0; i < activations.size(); ++i) {
    if (degenerate || activations[i] > threshold) kept.push_back(i + 1);
  }
  return kept;
}

ViewSet build_view_set(const embed::EmbeddingVector& full, const embed::EmbeddingSet& crops,
                       std::span<const std::size_t> indices) {
  if (full.dim() != crops.dim()) throw DataError("full-image and crop embeddings differ in dimension");
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<float> data(full.values().begin(), full.values().end());
  for (std::size_t idx : sorted) {
    if (idx == 0 || idx > crops.rows()) {
      throw DataError("view index " + std::to_string(idx) + " out of range 1.." + std::to_string(crops.rows()));
    }
    auto r = crops.row_span(idx - 1);
    data.insert(data.end(), r.begin(), r.end());
  }
  return ViewSet{embed::EmbeddingSet(crops.dim(), std::move(data), "views"), std::move(sorted)};
}

ViewSet build_view_set(const embed::EmbeddingSet& views_file, std::span<const std::size_t> indices) {
  if (views_file.rows() < 2) {
    if (!indices.empty()) throw DataError("views file has no crop rows");
    return ViewSet{views_file.select(std::vector<std::size_t>{0}, "views"), {}};
  }
  std::vector<std::size_t> crop_rows(views_file.rows() - 1);
  std::iota(crop_rows.begin(), crop_rows.end(), 1);
  return build_view_set(views_file.row(0), views_file.select(crop_rows), indices);
}

}  // namespace cpe::cadrs
