#include "cpe/binary_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "cpe/error.hpp"

namespace cpe {

AttentionMap::AttentionMap(std::size_t height, std::size_t width, std::vector<float> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height_ == 0 || width_ == 0) throw DataError("attention map must have a positive shape");
  if (values_.size() != height_ * width_) throw DataError("attention map size does not match its shape");
  for (float v : values_) {
    if (!std::isfinite(v) || v < 0.0f) throw DataError("attention map values must be finite and >= 0");
  }
}

namespace io {

namespace {

constexpr std::uint8_t kEmbeddingMagic[4] = {0x43, 0x50, 0x45, 0x42};  // "CPEB"
constexpr std::uint8_t kAttentionMagic[4] = {0x43, 0x50, 0x45, 0x41};  // "CPEA"
constexpr std::uint8_t kDtypeF32 = 0;

class Writer {
 public:
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t remaining() const { return in_.size() - pos_; }
  bool starts_with(const std::uint8_t (&magic)[4]) const {
    return in_.size() >= 4 && std::equal(std::begin(magic), std::end(magic), in_.begin());
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(in_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw ParseError("truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

// Number of f32 values a header promises, checked against the bytes left.
std::size_t payload_count(std::uint32_t a, std::uint32_t b, const Reader& r) {
  if (a == 0 || b == 0) throw ParseError("empty shape in header");
  const std::uint64_t count = static_cast<std::uint64_t>(a) * b;
  if (count > std::numeric_limits<std::size_t>::max() / sizeof(float)) {
    throw ParseError("payload size overflow");
  }
  if (r.remaining() < count * sizeof(float)) throw ParseError("truncated");
  if (r.remaining() > count * sizeof(float)) throw ParseError("trailing bytes after payload");
  return static_cast<std::size_t>(count);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

template <typename Fn>
auto with_path(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace

embed::EmbeddingSet decode_embedding_set(std::span<const std::uint8_t> bytes, std::string set_id,
                                         const LoadOptions& options) {
  Reader r(bytes);
  if (!r.starts_with(kEmbeddingMagic)) throw ParseError("not a CPEB file");
  r.skip(4);
  if (const auto version = r.u16(); version != kFormatVersion) {
    throw ParseError("unsupported CPEB version " + std::to_string(version));
  }
  if (r.u8() != kDtypeF32) throw ParseError("unsupported CPEB dtype");
  if (r.u8() != 0) throw ParseError("nonzero reserved byte in CPEB header");
  const std::uint32_t n_rows = r.u32();
  const std::uint32_t dim = r.u32();
  const std::size_t count = payload_count(n_rows, dim, r);

  std::vector<float> data(count);
  for (float& x : data) x = r.f32();
  embed::EmbeddingSet set(dim, std::move(data), std::move(set_id));
  if (options.require_normalized) {
    for (std::size_t i = 0; i < set.rows(); ++i) {
      if (std::abs(set.row_norm(i) - 1.0) > embed::kNormTolerance) {
        throw DataError("row " + std::to_string(i) + " is not normalized (norm " +
                        std::to_string(set.row_norm(i)) + ")");
      }
    }
  }
  return set;
}

std::vector<std::uint8_t> encode_embedding_set(const embed::EmbeddingSet& set) {
  if (set.rows() > std::numeric_limits<std::uint32_t>::max() ||
      set.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError("embedding set too large for CPEB");
  }
  Writer w;
  w.bytes(kEmbeddingMagic);
  w.u16(kFormatVersion);
  w.u8(kDtypeF32);
  w.u8(0);
  w.u32(static_cast<std::uint32_t>(set.rows()));
  w.u32(static_cast<std::uint32_t>(set.dim()));
  for (float x : set.data()) w.f32(x);
  return w.take();
}

embed::EmbeddingSet load_embedding_set(const std::filesystem::path& path, const LoadOptions& options) {
  return with_path(path, [&] { return decode_embedding_set(read_file(path), path.stem().string(), options); });
}

void save_embedding_set(const embed::EmbeddingSet& set, const std::filesystem::path& path) {
  write_file(encode_embedding_set(set), path);
}

AttentionMap decode_attention_map(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (!r.starts_with(kAttentionMagic)) throw ParseError("not a CPEA file");
  r.skip(4);
  if (const auto version = r.u16(); version != kFormatVersion) {
    throw ParseError("unsupported CPEA version " + std::to_string(version));
  }
  const std::uint32_t h = r.u32();
  const std::uint32_t w = r.u32();
  const std::size_t count = payload_count(h, w, r);
  std::vector<float> values(count);
  for (float& x : values) x = r.f32();
  return AttentionMap(h, w, std::move(values));
}

std::vector<std::uint8_t> encode_attention_map(const AttentionMap& map) {
  Writer w;
  w.bytes(kAttentionMagic);
  w.u16(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(map.height()));
  w.u32(static_cast<std::uint32_t>(map.width()));
  for (float x : map.values()) w.f32(x);
  return w.take();
}

AttentionMap load_attention_map(const std::filesystem::path& path) {
  return with_path(path, [&] { return decode_attention_map(read_file(path)); });
}

void save_attention_map(const AttentionMap& map, const std::filesystem::path& path) {
  write_file(encode_attention_map(map), path);
}

}  // namespace io
}  // namespace cpe
