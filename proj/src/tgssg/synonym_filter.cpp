#include "cpe/tgssg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "cpe/error.hpp"
#include "cpe/tda.hpp"

namespace cpe::tgssg {

namespace {

std::string case_fold(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

embed::EmbeddingSet feature_set(std::span<const SynonymCandidate> candidates, int class_id) {
  std::vector<embed::EmbeddingVector> rows;
  rows.reserve(candidates.size());
  for (const auto& c : candidates) rows.push_back(c.embedding);
  return embed::EmbeddingSet::from_rows(rows, "class-" + std::to_string(class_id));
}

double entropy_term(double d) {
  d = std::clamp(d, kSimilarityFloor, 1.0);
  return -d * std::log(d);
}

}  // namespace

AmbiguityScore ambiguity_entropy(const embed::EmbeddingSet& features, std::size_t i, AmbiguityMetric metric) {
  if (i >= features.rows()) throw DataError("candidate index out of range");
  const Eigen::MatrixXd dirs = features.directions();
  AmbiguityScore score{i, 0.0};
  for (Eigen::Index j = 0; j < dirs.rows(); ++j) {
    if (static_cast<std::size_t>(j) == i) continue;
    const double sim = std::clamp(dirs.row(static_cast<Eigen::Index>(i)).dot(dirs.row(j)), -1.0, 1.0);
    score.value += entropy_term(metric == AmbiguityMetric::kSimilarity ? sim : 1.0 - sim);
  }
  return score;
}

std::vector<SynonymCandidate> deduplicate(std::span<const SynonymCandidate> candidates) {
  std::vector<SynonymCandidate> out;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& c : candidates) {
    auto [it, inserted] = seen.emplace(case_fold(c.text), out.size());
    if (inserted) {
      out.push_back(c);
    } else if (c.is_original) {
      out[it->second].is_original = true;
    }
  }
  return out;
}

std::vector<std::string> FilterResult::retained_texts(int class_id) const {
  std::vector<std::string> out;
  for (const auto& c : classes.at(class_id).retained) out.push_back(c.text);
  return out;
}

FilterResult filter_synonyms(std::span<const ClassCandidates> per_class, AmbiguityMetric metric) {
  if (per_class.empty()) throw DataError("synonym filter needs at least one class");

  struct Scored {
    int class_id;
    std::vector<SynonymCandidate> candidates;
    std::vector<AmbiguityScore> entropies;
    double persistence;
  };
  std::vector<Scored> scored;
  scored.reserve(per_class.size());

  // Per-class pass: entropies and P_k.
  for (const auto& cls : per_class) {
    if (cls.candidates.empty()) {
      throw DataError("class " + std::to_string(cls.class_id) + " has no synonym candidates");
    }
    Scored s{cls.class_id, deduplicate(cls.candidates), {}, 0.0};
    const embed::EmbeddingSet features = feature_set(s.candidates, cls.class_id);
    for (std::size_t i = 0; i < features.rows(); ++i) s.entropies.push_back(ambiguity_entropy(features, i, metric));
    const auto diagram = tda::zero_dim_persistence(tda::cosine_distance_matrix(features));
    s.persistence = tda::total_persistence(diagram, features.rows());
    scored.push_back(std::move(s));
  }

  FilterResult result;
  for (const auto& s : scored) result.mean_persistence += s.persistence;
  result.mean_persistence /= static_cast<double>(scored.size());

  for (auto& s : scored) {
    ClassFilterReport report;
    report.persistence = s.persistence;
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
      const bool keep = s.entropies[i].value * s.persistence < result.mean_persistence;
      if (keep || s.candidates[i].is_original) report.retained.push_back(s.candidates[i]);
    }
    report.entropies = std::move(s.entropies);
    if (!result.classes.emplace(s.class_id, std::move(report)).second) {
      throw DataError("duplicate class id " + std::to_string(s.class_id) + " in synonym filter");
    }
  }
  return result;
}

}  // namespace cpe::tgssg
