#include "cpe/manifest.hpp"

#include <fstream>
#include <set>

#include "cpe/error.hpp"

namespace cpe {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + ": missing key '" + key + "'");
  return *it;
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return require(j, key, where).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": bad value for '" + key + "': " + e.what());
  }
}

SynonymEntry parse_synonym(const json& j, const std::string& where) {
  SynonymEntry s;
  s.text = get<std::string>(j, "text", where);
  s.row = get<std::size_t>(j, "row", where);
  if (j.contains("prompt_row") && !j["prompt_row"].is_null()) s.prompt_row = get<std::size_t>(j, "prompt_row", where);
  s.is_original = j.value("is_original", false);
  if (s.text.empty()) throw DataError(where + ": empty synonym text");
  return s;
}

DescriptionEntry parse_description(const json& j, const std::string& where) {
  DescriptionEntry d;
  d.text = get<std::string>(j, "text", where);
  const auto rows = get<std::vector<std::size_t>>(j, "rows", where);
  if (rows.size() != 2 || rows[0] > rows[1]) throw DataError(where + ": 'rows' must be [begin, end)");
  d.row_begin = rows[0];
  d.row_end = rows[1];
  return d;
}

}  // namespace

json crop_to_json(const CropSpec& c) { return json::array({c.x0, c.y0, c.w, c.h, c.hflip}); }

CropSpec crop_from_json(const json& j) {
  if (!j.is_array() || j.size() != 5) throw ParseError("crop spec must be [x0, y0, w, h, hflip]");
  CropSpec c;
  try {
    c.x0 = j[0].get<double>();
    c.y0 = j[1].get<double>();
    c.w = j[2].get<double>();
    c.h = j[3].get<double>();
    c.hflip = j[4].is_boolean() ? j[4].get<bool>() : j[4].get<int>() != 0;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad crop spec: ") + e.what());
  }
  if (!c.valid()) throw DataError("crop spec out of bounds: " + j.dump());
  return c;
}

std::filesystem::path Manifest::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

std::size_t Manifest::class_index(int class_id) const {
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k].class_id == class_id) return k;
  }
  throw DataError("unknown class id " + std::to_string(class_id));
}

Manifest parse_manifest(const json& j, std::filesystem::path base_dir) {
  if (!j.is_object()) throw ParseError("manifest must be a JSON object");
  Manifest m;
  m.base_dir = std::move(base_dir);
  m.dataset_name = get<std::string>(j, "dataset_name", "manifest");
  m.text_embeddings = get<std::string>(j, "text_embeddings", "manifest");

  const json& classes = require(j, "classes", "manifest");
  if (!classes.is_array() || classes.empty()) throw DataError("manifest: 'classes' must be a nonempty array");
  std::set<int> ids;
  for (const json& cj : classes) {
    ClassRecord c;
    c.class_id = get<int>(cj, "class_id", "class");
    const std::string where = "class " + std::to_string(c.class_id);
    c.given_name = get<std::string>(cj, "given_name", where);
    if (!ids.insert(c.class_id).second) throw DataError(where + ": duplicate class id");
    for (const json& sj : require(cj, "synonyms", where)) c.synonyms.push_back(parse_synonym(sj, where));
    if (cj.contains("descriptions")) {
      for (const json& dj : cj["descriptions"]) c.descriptions.push_back(parse_description(dj, where));
    }
    bool has_original = false;
    for (const auto& s : c.synonyms) has_original = has_original || s.is_original;
    if (!has_original) throw DataError(where + ": no synonym entry with is_original = true");
    for (const auto& d : c.descriptions) {
      if (d.row_end - d.row_begin != c.synonyms.size()) {
        throw DataError(where + ": description '" + d.text + "' must cover one row per synonym");
      }
    }
    m.classes.push_back(std::move(c));
  }

  if (j.contains("images")) {
    for (const json& ij : j["images"]) {
      ImageRecord im;
      im.image_id = get<std::string>(ij, "image_id", "image");
      const std::string where = "image " + im.image_id;
      im.true_class_id = get<int>(ij, "true_class_id", where);
      if (!ids.contains(im.true_class_id)) throw DataError(where + ": unknown true_class_id");
      im.views = get<std::string>(ij, "views", where);
      im.attention = get<std::string>(ij, "attention", where);
      std::uint64_t index = 0;
      for (const json& cj : require(ij, "crops", where)) {
        try {
          CropSpec c = crop_from_json(cj);
          c.seed_index = index++;
          im.crops.push_back(c);
        } catch (const ParseError& e) {
          throw ParseError(where + ": " + e.what());
        } catch (const DataError& e) {
          throw DataError(where + ": " + e.what());
        }
      }
      m.images.push_back(std::move(im));
    }
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

json manifest_to_json(const Manifest& m) {
  json classes = json::array();
  for (const auto& c : m.classes) {
    json syn = json::array();
    for (const auto& s : c.synonyms) {
      json sj = {{"text", s.text}, {"row", s.row}, {"is_original", s.is_original}};
      if (s.prompt_row) sj["prompt_row"] = *s.prompt_row;
      syn.push_back(std::move(sj));
    }
    json desc = json::array();
    for (const auto& d : c.descriptions) {
      desc.push_back({{"text", d.text}, {"rows", {d.row_begin, d.row_end}}});
    }
    classes.push_back(
        {{"class_id", c.class_id}, {"given_name", c.given_name}, {"synonyms", syn}, {"descriptions", desc}});
  }
  json images = json::array();
  for (const auto& im : m.images) {
    json crops = json::array();
    for (const auto& c : im.crops) crops.push_back(crop_to_json(c));
    images.push_back({{"image_id", im.image_id},
                      {"true_class_id", im.true_class_id},
                      {"views", im.views.generic_string()},
                      {"attention", im.attention.generic_string()},
                      {"crops", crops}});
  }
  return {{"dataset_name", m.dataset_name},
          {"text_embeddings", m.text_embeddings.generic_string()},
          {"classes", classes},
          {"images", images}};
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << manifest_to_json(m).dump(1) << '\n';
}

void validate_rows(const Manifest& m, const embed::EmbeddingSet& text) {
  const std::size_t n = text.rows();
  for (const auto& c : m.classes) {
    const std::string where = "class " + std::to_string(c.class_id);
    for (const auto& s : c.synonyms) {
      if (s.row >= n || (s.prompt_row && *s.prompt_row >= n)) {
        throw DataError(where + ": synonym '" + s.text + "' row out of bounds");
      }
    }
    for (const auto& d : c.descriptions) {
      if (d.row_end > n) throw DataError(where + ": description '" + d.text + "' rows out of bounds");
    }
  }
}

}  // namespace cpe
