#pragma once

// Readers and writers for the two binary payloads exchanged with ingestion.
//
// CPEB (embeddings), little-endian:
//   magic "CPEB" | u16 version = 1 | u8 dtype = 0 (f32) | u8 reserved = 0
//   | u32 n_rows | u32 dim | n_rows * dim f32, row-major
//
// CPEA (attention maps), little-endian:
//   magic "CPEA" | u16 version = 1 | u32 H | u32 W | H * W f32, row-major

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cpe/embedcore.hpp"

namespace cpe {

/// Nonnegative H x W saliency grid.
class AttentionMap {
 public:
  // Throws DataError on empty shape, size mismatch, or a negative or
  // non-finite value.
  AttentionMap(std::size_t height, std::size_t width, std::vector<float> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  float at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  std::span<const float> values() const { return values_; }

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<float> values_;
};

namespace io {

inline constexpr std::uint16_t kFormatVersion = 1;

struct LoadOptions {
  // Reject sets whose rows are not unit norm within embed::kNormTolerance.
  bool require_normalized = true;
};

embed::EmbeddingSet decode_embedding_set(std::span<const std::uint8_t> bytes, std::string set_id = {},
                                         const LoadOptions& options = {});
std::vector<std::uint8_t> encode_embedding_set(const embed::EmbeddingSet& set);

embed::EmbeddingSet load_embedding_set(const std::filesystem::path& path, const LoadOptions& options = {});
void save_embedding_set(const embed::EmbeddingSet& set, const std::filesystem::path& path);

AttentionMap decode_attention_map(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_attention_map(const AttentionMap& map);

AttentionMap load_attention_map(const std::filesystem::path& path);
void save_attention_map(const AttentionMap& map, const std::filesystem::path& path);

}  // namespace io
}  // namespace cpe
