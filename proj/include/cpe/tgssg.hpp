#pragma once

// Synonym filtering by ambiguity entropy and persistence, and assembly of the
// per-class textual prompt sets.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpe/embedcore.hpp"

namespace cpe::tgssg {

// Lower clamp applied to similarities before taking their log.
inline constexpr double kSimilarityFloor = 1e-6;

enum class AmbiguityMetric {
  kSimilarity,  // d = cosine similarity
  kDistance,    // d = 1 - cosine similarity
};

struct SynonymCandidate {
  std::string text;
  embed::EmbeddingVector embedding;
  bool is_original = false;
};

struct AmbiguityScore {
  std::size_t candidate_index = 0;
  double value = 0.0;
};

struct ClassCandidates {
  int class_id = 0;
  std::vector<SynonymCandidate> candidates;
};

/// Entropy of candidate i against the rest of its class:
/// H = -sum_{j != i} d_ij log d_ij with d_ij clamped to [kSimilarityFloor, 1].
AmbiguityScore ambiguity_entropy(const embed::EmbeddingSet& features, std::size_t i,
                                 AmbiguityMetric metric = AmbiguityMetric::kSimilarity);

// Drops later candidates whose case-folded text repeats an earlier one. A kept
// candidate inherits is_original from any dropped duplicate.
std::vector<SynonymCandidate> deduplicate(std::span<const SynonymCandidate> candidates);

struct ClassFilterReport {
  std::vector<SynonymCandidate> retained;  // input order
  std::vector<AmbiguityScore> entropies;   // per deduplicated candidate
  double persistence = 0.0;                // P_k
};

struct FilterResult {
  std::map<int, ClassFilterReport> classes;
  double mean_persistence = 0.0;  // E[P] over all classes

  std::vector<std::string> retained_texts(int class_id) const;
};

/// Keeps candidate s_i of class k iff H_k(s_i) * P_k < E[P]; the original
/// class name is always kept. Throws DataError for an empty class list or a
/// class without candidates.
FilterResult filter_synonyms(std::span<const ClassCandidates> per_class,
                             AmbiguityMetric metric = AmbiguityMetric::kSimilarity);

struct PromptProvenance {
  std::string synonym;
  std::optional<std::string> description;

  friend bool operator==(const PromptProvenance&, const PromptProvenance&) = default;
};

// "a photo of a {synonym}, {description}", or "a photo of a {synonym}".
std::string prompt_text(const PromptProvenance& p);

// Returns the embedding of a prompt, or nullopt when it was never encoded.
using PromptEmbedder = std::function<std::optional<embed::EmbeddingVector>(const PromptProvenance&)>;

struct ClassTextualSet {
  int class_id = 0;
  embed::EmbeddingSet prompt_embeddings;
  std::vector<PromptProvenance> provenance;  // row-aligned with prompt_embeddings
};

/// One prompt per (synonym x description), synonym-major; one per synonym
/// when there are no descriptions. Throws DataError("unencoded prompt ...")
/// when the embedder has no row for a pair.
ClassTextualSet build_textual_set(int class_id, std::span<const SynonymCandidate> retained,
                                  std::span<const std::string> descriptions, const PromptEmbedder& embedder);

}  // namespace cpe::tgssg
