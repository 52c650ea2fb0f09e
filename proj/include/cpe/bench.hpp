#pragma once

// Benchmark harness: configuration, matcher dispatch, reports.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cpe/cadrs.hpp"
#include "cpe/manifest.hpp"
#include "cpe/otmatch.hpp"
#include "cpe/scores.hpp"
#include "cpe/tgssg.hpp"
#include "cpe/ttamatch.hpp"

namespace cpe::bench {

enum class Matcher { kOt, kTta, kPointwise };

std::string to_string(Matcher m);
// Accepts "ot", "tta", "pointwise" and "pointwise-baseline". Throws ConfigError.
Matcher parse_matcher(std::string_view name);

struct MatchConfig {
  Matcher matcher = Matcher::kOt;
  double tau = 0.01;
  double epsilon = 0.1;
  int sinkhorn_iters = 100;
  double sinkhorn_tol = 1e-6;
  double tau_w = 0.5;
  ot::WeightScheme weights = ot::WeightScheme::kEntropy;
  double tta_lr = 5e-4;
  double tta_fraction = 0.1;
  bool renormalize_shifted = false;
  std::size_t n_views = cadrs::kDefaultViewCount;
  std::array<double, 2> crop_scale{0.2, 1.0};
  std::size_t synonyms_max = 5;
  tgssg::AmbiguityMetric ambiguity_metric = tgssg::AmbiguityMetric::kSimilarity;
  std::uint64_t seed = 0;
  // Component switches for ablations.
  bool filter_synonyms = true;
  bool filter_views = true;

  // Throws ConfigError on a non-positive real, a fraction outside (0, 1], or
  // an empty crop-scale range.
  void validate() const;

  ot::OtConfig ot_config() const;
  tta::TtaConfig tta_config() const;
  cadrs::CropSampling crop_sampling() const;
};

// Overlays the keys of `j` on `base`. Unknown keys and bad values throw
// ConfigError.
MatchConfig config_from_json(const nlohmann::json& j, MatchConfig base = {});
nlohmann::json config_to_json(const MatchConfig& c);
MatchConfig load_config(const std::filesystem::path& path);

/// Classic point-to-point scoring: cos(mean view, class centroid) / tau.
ClassScores classify_pointwise(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids, double tau);
ClassScores classify_pointwise(const cadrs::ViewSet& views, std::span<const tgssg::ClassTextualSet> textual_sets,
                               double tau);

struct PreparedText {
  std::vector<tgssg::ClassTextualSet> textual_sets;  // manifest class order
  std::map<int, std::vector<std::string>> retained_synonyms;
};

/// Truncates each class to its original name plus `synonyms_max` synonyms,
/// filters them when enabled, and builds the textual prompt sets from the
/// manifest's precomputed rows.
PreparedText prepare_textual_sets(const Manifest& manifest, const embed::EmbeddingSet& text,
                                  const MatchConfig& config);

struct ImagePrediction {
  std::string image_id;
  int true_class_id = 0;
  int predicted_class_id = 0;
  double confidence = 0.0;
  std::size_t views_considered = 0;
  std::size_t views_kept = 0;  // crops that survived selection
  double seconds = 0.0;        // matcher wall-clock
};

struct EvalReport {
  std::string dataset;
  std::size_t n_images = 0;
  std::size_t n_correct = 0;
  double top1_accuracy = 0.0;
  std::map<int, double> per_class_accuracy;
  std::map<int, std::size_t> per_class_count;
  double mean_inference_seconds = 0.0;
  std::uint64_t seed = 0;
  MatchConfig config;
  std::vector<ImagePrediction> predictions;
  std::map<int, std::vector<std::string>> retained_synonyms;
};

// Worker count from CPE_THREADS, else the hardware concurrency.
std::size_t worker_count();

/// Classifies every image of the manifest. Results do not depend on the
/// worker count: per-image randomness comes from stream (seed, image index).
EvalReport run_benchmark(const std::filesystem::path& manifest_path, const MatchConfig& config);
EvalReport run_benchmark(const Manifest& manifest, const MatchConfig& config);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

MetricSummary summarize(std::span<const double> values);

struct RepeatSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<EvalReport> reports;
  MetricSummary top1;
  MetricSummary seconds;
};

// Needs at least two seeds; each run differs only in config.seed.
RepeatSummary run_repeats(const std::filesystem::path& manifest_path, const MatchConfig& config,
                          std::span<const std::uint64_t> seeds);

enum class AblationAxis { kSynonymsMax, kNViews, kMatcher };

std::string to_string(AblationAxis a);
AblationAxis parse_axis(std::string_view name);

struct AblationTable {
  AblationAxis axis = AblationAxis::kMatcher;
  std::vector<std::string> values;
  std::vector<EvalReport> reports;
};

// Applies one axis value to a config; throws ConfigError on a bad value.
MatchConfig apply_axis(MatchConfig config, AblationAxis axis, const std::string& value);

AblationTable run_ablation(const std::filesystem::path& manifest_path, const MatchConfig& base, AblationAxis axis,
                           std::span<const std::string> values);

// Serialization. Reports without timing are byte-stable for a fixed
// (manifest, config, seed).
nlohmann::json report_to_json(const EvalReport& r, bool include_timing = true);
std::string prediction_log(const EvalReport& r);
std::string report_table(const EvalReport& r);
nlohmann::json repeats_to_json(const RepeatSummary& s);
std::string repeats_table(const RepeatSummary& s);
nlohmann::json ablation_to_json(const AblationTable& t);
std::string ablation_table(const AblationTable& t);
nlohmann::json retained_synonyms_json(const std::map<int, std::vector<std::string>>& retained);

}  // namespace cpe::bench
