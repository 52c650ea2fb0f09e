#pragma once

// JSON sidecar tying CPEB rows to classes, synonyms, descriptions and images.
//
//   {
//     "dataset_name": "pets-mini",
//     "text_embeddings": "text.cpeb",
//     "classes": [{
//       "class_id": 0, "given_name": "hellebore",
//       "synonyms": [{"text": "hellebore", "row": 0, "prompt_row": 1, "is_original": true}],
//       "descriptions": [{"text": "with nodding flowers", "rows": [4, 6]}]
//     }],
//     "images": [{
//       "image_id": "img-0001", "true_class_id": 0,
//       "views": "views/img-0001.cpeb", "attention": "attn/img-0001.cpea",
//       "crops": [[0.1, 0.2, 0.5, 0.5, false]]
//     }]
//   }
//
// `row` embeds the bare synonym text; `prompt_row` (optional) embeds
// "a photo of a {synonym}". Description `rows` is a half-open range with one
// row per synonym of the class, in synonym order: row begin + s embeds
// "a photo of a {synonym s}, {description}". View files hold the full image
// in row 0 followed by one row per crop, in crop order. Paths are relative
// to the manifest's directory. Unknown keys are ignored.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpe/crop_spec.hpp"
#include "cpe/embedcore.hpp"

namespace cpe {

struct SynonymEntry {
  std::string text;
  std::size_t row = 0;
  std::optional<std::size_t> prompt_row;
  bool is_original = false;
};

struct DescriptionEntry {
  std::string text;
  std::size_t row_begin = 0;
  std::size_t row_end = 0;
};

struct ClassRecord {
  int class_id = 0;
  std::string given_name;
  std::vector<SynonymEntry> synonyms;
  std::vector<DescriptionEntry> descriptions;
};

struct ImageRecord {
  std::string image_id;
  int true_class_id = 0;
  std::filesystem::path views;
  std::filesystem::path attention;
  std::vector<CropSpec> crops;
};

struct Manifest {
  std::string dataset_name;
  std::filesystem::path text_embeddings;
  std::vector<ClassRecord> classes;
  std::vector<ImageRecord> images;
  // Directory relative paths resolve against; not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  // Index into `classes` for a class id; throws DataError if absent.
  std::size_t class_index(int class_id) const;
};

// Throws ParseError on malformed JSON or missing required keys, DataError on
// violated invariants (duplicate class ids, no original synonym, bad ranges).
Manifest parse_manifest(const nlohmann::json& j, std::filesystem::path base_dir = {});
Manifest load_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const Manifest& m);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

// Checks every row reference against the text embedding set.
void validate_rows(const Manifest& m, const embed::EmbeddingSet& text);

nlohmann::json crop_to_json(const CropSpec& c);
CropSpec crop_from_json(const nlohmann::json& j);

}  // namespace cpe
