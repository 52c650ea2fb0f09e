#include <cstdio>
#include <sstream>

#include "cpe/bench.hpp"

namespace cpe::bench {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

json retained_synonyms_json(const std::map<int, std::vector<std::string>>& retained) {
  json j = json::object();
  for (const auto& [cls, names] : retained) j[std::to_string(cls)] = names;
  return j;
}

json report_to_json(const EvalReport& r, bool include_timing) {
  json per_class = json::object();
  for (const auto& [cls, acc] : r.per_class_accuracy) {
    per_class[std::to_string(cls)] = {{"accuracy", acc}, {"count", r.per_class_count.at(cls)}};
  }
  json j = {{"dataset", r.dataset},
            {"n_images", r.n_images},
            {"n_correct", r.n_correct},
            {"top1_accuracy", r.top1_accuracy},
            {"per_class_accuracy", per_class},
            {"seed", r.seed},
            {"config", config_to_json(r.config)},
            {"retained_synonyms", retained_synonyms_json(r.retained_synonyms)}};
  if (include_timing) j["mean_inference_seconds"] = r.mean_inference_seconds;
  return j;
}

std::string prediction_log(const EvalReport& r) {
  std::ostringstream out;
  out << "image_id,true_class_id,predicted_class_id,correct,confidence,views_considered,views_kept\n";
  for (const auto& p : r.predictions) {
    out << p.image_id << ',' << p.true_class_id << ',' << p.predicted_class_id << ','
        << (p.true_class_id == p.predicted_class_id ? 1 : 0) << ',' << fixed(p.confidence, 9) << ','
        << p.views_considered << ',' << p.views_kept << '\n';
  }
  return out.str();
}

std::string report_table(const EvalReport& r) {
  std::ostringstream out;
  out << "dataset   " << r.dataset << '\n'
      << "matcher   " << to_string(r.config.matcher) << '\n'
      << "images    " << r.n_images << '\n'
      << "top-1     " << fixed(100.0 * r.top1_accuracy, 2) << " %\n"
      << "time      " << fixed(1e3 * r.mean_inference_seconds, 3) << " ms/image\n"
      << "seed      " << r.seed << "\n\n"
      << pad("class", 8) << lpad("count", 8) << lpad("top-1 %", 10) << '\n';
  for (const auto& [cls, acc] : r.per_class_accuracy) {
    out << pad(std::to_string(cls), 8) << lpad(std::to_string(r.per_class_count.at(cls)), 8)
        << lpad(fixed(100.0 * acc, 2), 10) << '\n';
  }
  return out.str();
}

json repeats_to_json(const RepeatSummary& s) {
  json runs = json::array();
  for (const auto& r : s.reports) runs.push_back(report_to_json(r));
  return {{"seeds", s.seeds},
          {"top1_accuracy", {{"mean", s.top1.mean}, {"stddev", s.top1.stddev}}},
          {"mean_inference_seconds", {{"mean", s.seconds.mean}, {"stddev", s.seconds.stddev}}},
          {"runs", runs}};
}

std::string repeats_table(const RepeatSummary& s) {
  std::ostringstream out;
  out << pad("seed", 10) << lpad("top-1 %", 10) << lpad("ms/image", 12) << '\n';
  for (std::size_t i = 0; i < s.reports.size(); ++i) {
    out << pad(std::to_string(s.seeds[i]), 10) << lpad(fixed(100.0 * s.reports[i].top1_accuracy, 2), 10)
        << lpad(fixed(1e3 * s.reports[i].mean_inference_seconds, 3), 12) << '\n';
  }
  out << pad("mean", 10) << lpad(fixed(100.0 * s.top1.mean, 2), 10) << lpad(fixed(1e3 * s.seconds.mean, 3), 12)
      << '\n'
      << pad("stddev", 10) << lpad(fixed(100.0 * s.top1.stddev, 2), 10)
      << lpad(fixed(1e3 * s.seconds.stddev, 3), 12) << '\n';
  return out.str();
}

json ablation_to_json(const AblationTable& t) {
  json rows = json::array();
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    rows.push_back({{"value", t.values[i]}, {"report", report_to_json(t.reports[i])}});
  }
  return {{"axis", to_string(t.axis)}, {"rows", rows}};
}

std::string ablation_table(const AblationTable& t) {
  std::ostringstream out;
  out << pad(to_string(t.axis), 14) << lpad("top-1 %", 10) << lpad("ms/image", 12) << '\n';
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    out << pad(t.values[i], 14) << lpad(fixed(100.0 * t.reports[i].top1_accuracy, 2), 10)
        << lpad(fixed(1e3 * t.reports[i].mean_inference_seconds, 3), 12) << '\n';
  }
  return out.str();
}

}  // namespace cpe::bench
