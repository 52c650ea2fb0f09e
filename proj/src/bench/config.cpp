#include <cmath>
#include <fstream>
#include <set>

#include "cpe/bench.hpp"
#include "cpe/error.hpp"

namespace cpe::bench {

using nlohmann::json;

std::string to_string(Matcher m) {
  switch (m) {
    case Matcher::kOt:
      return "ot";
    case Matcher::kTta:
      return "tta";
    case Matcher::kPointwise:
      return "pointwise";
  }
  return "?";
}

Matcher parse_matcher(std::string_view name) {
  if (name == "ot") return Matcher::kOt;
  if (name == "tta") return Matcher::kTta;
  if (name == "pointwise" || name == "pointwise-baseline") return Matcher::kPointwise;
  throw ConfigError("unknown matcher '" + std::string(name) + "'");
}

void MatchConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(tau, "tau");
  positive(epsilon, "epsilon");
  positive(sinkhorn_tol, "sinkhorn_tol");
  positive(tau_w, "tau_w");
  positive(tta_lr, "tta_lr");
  if (sinkhorn_iters <= 0) throw ConfigError("sinkhorn_iters must be positive");
  if (!(tta_fraction > 0.0 && tta_fraction <= 1.0)) throw ConfigError("tta_fraction must be in (0, 1]");
  if (n_views == 0) throw ConfigError("n_views must be positive");
  if (!(crop_scale[0] > 0.0 && crop_scale[0] <= crop_scale[1] && crop_scale[1] <= 1.0)) {
    throw ConfigError("crop_scale must satisfy 0 < lo <= hi <= 1");
  }
}

ot::OtConfig MatchConfig::ot_config() const {
  return ot::OtConfig{tau, epsilon, sinkhorn_iters, sinkhorn_tol, tau_w, weights};
}

tta::TtaConfig MatchConfig::tta_config() const {
  return tta::TtaConfig{tau, tta_lr, tta_fraction, renormalize_shifted};
}

cadrs::CropSampling MatchConfig::crop_sampling() const {
  cadrs::CropSampling s;
  s.scale_min = crop_scale[0];
  s.scale_max = crop_scale[1];
  return s;
}

MatchConfig config_from_json(const json& j, MatchConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "matcher",      "tau",         "epsilon",  "sinkhorn_iters",      "sinkhorn_tol", "tau_w",
      "weights",      "tta_lr",      "tta_fraction", "renormalize_shifted", "n_views",      "crop_scale",
      "synonyms_max", "ambiguity_metric", "seed", "filter_synonyms",     "filter_views"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    if (j.contains("matcher")) c.matcher = parse_matcher(j["matcher"].get<std::string>());
    c.tau = j.value("tau", c.tau);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.sinkhorn_iters = j.value("sinkhorn_iters", c.sinkhorn_iters);
    c.sinkhorn_tol = j.value("sinkhorn_tol", c.sinkhorn_tol);
    c.tau_w = j.value("tau_w", c.tau_w);
    if (j.contains("weights")) {
      const auto w = j["weights"].get<std::string>();
      if (w == "entropy") {
        c.weights = ot::WeightScheme::kEntropy;
      } else if (w == "uniform") {
        c.weights = ot::WeightScheme::kUniform;
      } else {
        throw ConfigError("weights must be 'entropy' or 'uniform'");
      }
    }
    c.tta_lr = j.value("tta_lr", c.tta_lr);
    c.tta_fraction = j.value("tta_fraction", c.tta_fraction);
    c.renormalize_shifted = j.value("renormalize_shifted", c.renormalize_shifted);
    c.n_views = j.value("n_views", c.n_views);
    if (j.contains("crop_scale")) c.crop_scale = j["crop_scale"].get<std::array<double, 2>>();
    c.synonyms_max = j.value("synonyms_max", c.synonyms_max);
    if (j.contains("ambiguity_metric")) {
      const auto m = j["ambiguity_metric"].get<std::string>();
      if (m == "similarity") {
        c.ambiguity_metric = tgssg::AmbiguityMetric::kSimilarity;
      } else if (m == "distance") {
        c.ambiguity_metric = tgssg::AmbiguityMetric::kDistance;
      } else {
        throw ConfigError("ambiguity_metric must be 'similarity' or 'distance'");
      }
    }
    c.seed = j.value("seed", c.seed);
    c.filter_synonyms = j.value("filter_synonyms", c.filter_synonyms);
    c.filter_views = j.value("filter_views", c.filter_views);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const MatchConfig& c) {
  return {{"matcher", to_string(c.matcher)},
          {"tau", c.tau},
          {"epsilon", c.epsilon},
          {"sinkhorn_iters", c.sinkhorn_iters},
          {"sinkhorn_tol", c.sinkhorn_tol},
          {"tau_w", c.tau_w},
          {"weights", c.weights == ot::WeightScheme::kEntropy ? "entropy" : "uniform"},
          {"tta_lr", c.tta_lr},
          {"tta_fraction", c.tta_fraction},
          {"renormalize_shifted", c.renormalize_shifted},
          {"n_views", c.n_views},
          {"crop_scale", c.crop_scale},
          {"synonyms_max", c.synonyms_max},
          {"ambiguity_metric",
           c.ambiguity_metric == tgssg::AmbiguityMetric::kSimilarity ? "similarity" : "distance"},
          {"seed", c.seed},
          {"filter_synonyms", c.filter_synonyms},
          {"filter_views", c.filter_views}};
}

MatchConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_string(AblationAxis a) {
  switch (a) {
    case AblationAxis::kSynonymsMax:
      return "synonyms_max";
    case AblationAxis::kNViews:
      return "n_views";
    case AblationAxis::kMatcher:
      return "matcher";
  }
  return "?";
}

AblationAxis parse_axis(std::string_view name) {
  if (name == "synonyms_max") return AblationAxis::kSynonymsMax;
  if (name == "n_views") return AblationAxis::kNViews;
  if (name == "matcher") return AblationAxis::kMatcher;
  throw ConfigError("unknown ablation axis '" + std::string(name) + "'");
}

MatchConfig apply_axis(MatchConfig config, AblationAxis axis, const std::string& value) {
  auto as_count = [&](const char* name) -> std::size_t {
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(value, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != value.size() || v < 0) throw ConfigError(std::string("bad ") + name + " value '" + value + "'");
    return static_cast<std::size_t>(v);
  };
  switch (axis) {
    case AblationAxis::kSynonymsMax:
      config.synonyms_max = as_count("synonyms_max");
      break;
    case AblationAxis::kNViews:
      config.n_views = as_count("n_views");
      break;
    case AblationAxis::kMatcher:
      config.matcher = parse_matcher(value);
      break;
  }
  config.validate();
  return config;
}

}  // namespace cpe::bench
