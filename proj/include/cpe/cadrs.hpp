#pragma once

// Crop generation, attention scoring, and two-sigma view selection.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cpe/binary_io.hpp"
#include "cpe/crop_spec.hpp"
#include "cpe/embedcore.hpp"

namespace cpe::cadrs {

inline constexpr std::size_t kDefaultViewCount = 100;

struct CropSampling {
  double scale_min = 0.2;  // area fraction
  double scale_max = 1.0;
  double ratio_min = 3.0 / 4.0;  // width / height
  double ratio_max = 4.0 / 3.0;
};

/// Draws `n` crops from stream (seed, i) for view i: area fraction and aspect
/// ratio uniform in the configured ranges (sides clipped to 1), position
/// uniform over valid placements, flip with probability 1/2.
std::vector<CropSpec> generate_crop_specs(std::uint64_t seed, std::size_t n, const CropSampling& sampling = {});

/// Mean of the map over the crop's pixel rectangle: columns
/// [floor(x0 W), round((x0 + w) W)), rows likewise, at least one pixel.
double mean_activation(const AttentionMap& map, const CropSpec& spec);

struct ActivationStats {
  std::vector<double> per_view_mean;
  double mu = 0.0;
  double sigma = 0.0;  // population
  double threshold = 0.0;
};

ActivationStats activation_stats(std::span<const double> activations);

/// 1-based view indices i with activation_i > mu - 2 sigma; every view when
/// all activations are equal.
std::vector<std::size_t> select_views(std::span<const double> activations);

struct ViewSet {
  embed::EmbeddingSet embeddings;            // row 0 = full image, then retained crops
  std::vector<std::size_t> retained_indices;  // 1-based crop indices, increasing
};

// `indices` are 1-based crop indices into `crops`; throws DataError when one
// is out of range. Sorted and deduplicated before use.
ViewSet build_view_set(const embed::EmbeddingVector& full, const embed::EmbeddingSet& crops,
                       std::span<const std::size_t> indices);

// Same, for a views file laid out as [full image, crop 1, ..., crop N].
ViewSet build_view_set(const embed::EmbeddingSet& views_file, std::span<const std::size_t> indices);

}  // namespace cpe::cadrs
