#pragma once

// Seeded synthetic datasets in the manifest + CPEB/CPEA layout.
//
// Geometry loosely follows a contrastive vision-language space: text rows
// share a common text direction, image rows a common image direction, so
// unrelated texts still have cosine ~0.5 and image-text cosines stay small.
// Each class has one visual mode per genuine synonym; an image shows one
// mode. Hallucinated synonyms point to unrelated directions. Each image has
// an object rectangle in its attention map; a crop embeds the object with weight
// sqrt(c), c the fraction of the crop the object covers, the rest is clutter.
// Injected noise crops sit entirely on the background.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace cpe::synthetic {

struct GaussianFixtureSpec {
  std::string name = "gaussian-synthetic";
  std::size_t classes = 10;
  std::size_t dim = 32;
  std::size_t images_per_class = 50;
  std::size_t views = 100;  // candidate crops per image
  std::size_t noise_views = 10;  // of which background-only
  std::size_t genuine_synonyms = 4;  // besides the class name
  std::size_t hallucinated_synonyms = 1;
  std::size_t descriptions = 3;
  std::size_t attention_size = 32;

  double text_common = 1.5;    // weight of the shared text direction
  double mode_spread = 1.0;    // synonym modes around the class mean
  double text_noise = 0.15;
  double description_noise = 0.3;
  double image_common = 1.0;   // weight of the shared image direction
  double image_noise = 0.6;    // object deviation from its mode
  double view_noise = 0.25;
  double clutter_weight = 0.7;
  double clutter_class_mix = 0.6;  // pull of clutter toward another class

  std::uint64_t seed = 7;
};

// Writes manifest.json, text.cpeb, views/*.cpeb and attention/*.cpea under
// `dir` (created if needed). Returns the manifest path.
std::filesystem::path write_gaussian_fixture(const std::filesystem::path& dir, const GaussianFixtureSpec& spec = {});

}  // namespace cpe::synthetic
