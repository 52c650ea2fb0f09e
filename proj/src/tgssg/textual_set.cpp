#include <utility>

#include "cpe/error.hpp"
#include "cpe/tgssg.hpp"

namespace cpe::tgssg {

std::string prompt_text(const PromptProvenance& p) {
  std::string out = "a photo of a " + p.synonym;
  if (p.description) out += ", " + *p.description;
  return out;
}

ClassTextualSet build_textual_set(int class_id, std::span<const SynonymCandidate> retained,
                                  std::span<const std::string> descriptions, const PromptEmbedder& embedder) {
  if (retained.empty()) throw DataError("class " + std::to_string(class_id) + " has no retained synonyms");

  std::vector<PromptProvenance> provenance;
  if (descriptions.empty()) {
    for (const auto& s : retained) provenance.push_back({s.text, std::nullopt});
  } else {
    for (const auto& s : retained) {
      for (const auto& d : descriptions) provenance.push_back({s.text, d});
    }
  }

  std::vector<embed::EmbeddingVector> rows;
  rows.reserve(provenance.size());
  for (const auto& p : provenance) {
    auto e = embedder(p);
    if (!e) throw DataError("unencoded prompt for class " + std::to_string(class_id) + ": \"" + prompt_text(p) + "\"");
    rows.push_back(std::move(*e));
  }
  return ClassTextualSet{class_id, embed::EmbeddingSet::from_rows(rows, "textual-" + std::to_string(class_id)),
                         std::move(provenance)};
}

}  // namespace cpe::tgssg
