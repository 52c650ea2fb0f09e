#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "cpe/bench.hpp"
#include "cpe/binary_io.hpp"
#include "cpe/error.hpp"
#include "cpe/rng.hpp"

namespace cpe::bench {

ClassScores classify_pointwise(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids, double tau) {
  if (views.rows() == 0 || centroids.rows() == 0) throw DataError("empty views or classes");
  const Eigen::RowVectorXd center = views.colwise().mean();
  const double cn = center.norm();
  if (!(cn > 0.0)) throw DataError("degenerate embedding");
  std::vector<double> sims(static_cast<std::size_t>(centroids.rows()));
  for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
    const double kn = centroids.row(k).norm();
    if (!(kn > 0.0)) throw DataError("degenerate embedding");
    sims[static_cast<std::size_t>(k)] = std::clamp(center.dot(centroids.row(k)) / (cn * kn), -1.0, 1.0);
  }
  return scores_with_softmax(std::move(sims), tau);
}

ClassScores classify_pointwise(const cadrs::ViewSet& views, std::span<const tgssg::ClassTextualSet> textual_sets,
                               double tau) {
  return classify_pointwise(views.embeddings.directions(), tta::textual_centroids(textual_sets), tau);
}

PreparedText prepare_textual_sets(const Manifest& manifest, const embed::EmbeddingSet& text,
                                  const MatchConfig& config) {
  validate_rows(manifest, text);

  // Candidate list per class: every original entry plus the first
  // synonyms_max others, manifest order. `position` maps back to the entry.
  std::vector<tgssg::ClassCandidates> candidates;
  for (const ClassRecord& c : manifest.classes) {
    tgssg::ClassCandidates cc{c.class_id, {}};
    std::size_t extra = 0;
    for (const SynonymEntry& s : c.synonyms) {
      if (!s.is_original) {
        if (extra == config.synonyms_max) continue;
        ++extra;
      }
      auto row = text.row(s.row);
      cc.candidates.push_back({s.text, std::move(row), s.is_original});
    }
    candidates.push_back(std::move(cc));
  }

  PreparedText out;
  std::vector<std::vector<tgssg::SynonymCandidate>> retained;
  if (config.filter_synonyms) {
    const tgssg::FilterResult filtered = tgssg::filter_synonyms(candidates, config.ambiguity_metric);
    for (const auto& cc : candidates) retained.push_back(filtered.classes.at(cc.class_id).retained);
  } else {
    for (const auto& cc : candidates) retained.push_back(tgssg::deduplicate(cc.candidates));
  }

  for (std::size_t k = 0; k < manifest.classes.size(); ++k) {
    const ClassRecord& c = manifest.classes[k];
    std::vector<std::string> descriptions;
    for (const auto& d : c.descriptions) descriptions.push_back(d.text);

    auto embedder = [&](const tgssg::PromptProvenance& p) -> std::optional<embed::EmbeddingVector> {
      for (std::size_t s = 0; s < c.synonyms.size(); ++s) {
        const SynonymEntry& syn = c.synonyms[s];
        if (syn.text != p.synonym) continue;
        if (!p.description) return text.row(syn.prompt_row.value_or(syn.row));
        for (const auto& d : c.descriptions) {
          if (d.text == *p.description && d.row_begin + s < d.row_end) return text.row(d.row_begin + s);
        }
        return std::nullopt;
      }
      return std::nullopt;
    };
    out.textual_sets.push_back(tgssg::build_textual_set(c.class_id, retained[k], descriptions, embedder));
    auto& names = out.retained_synonyms[c.class_id];
    for (const auto& s : retained[k]) names.push_back(s.text);
  }
  return out;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("CPE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Crop indices (1-based) drawn for an image: the whole pool when it is not
// larger than n_views, else a seeded sample without replacement, ascending.
std::vector<std::size_t> draw_pool(std::size_t pool, std::size_t n_views, std::uint64_t seed, std::uint64_t image) {
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), 1);
  if (n_views >= pool) return idx;
  CounterRng rng(seed, image);
  for (std::size_t i = 0; i < n_views; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n_views);
  std::sort(idx.begin(), idx.end());
  return idx;
}

ImagePrediction classify_image(const Manifest& manifest, std::size_t image_index,
                               std::span<const tgssg::ClassTextualSet> textual, const Eigen::MatrixXd& centroids,
                               std::span<const Eigen::MatrixXd> textual_dirs, const MatchConfig& config) {
  const ImageRecord& im = manifest.images[image_index];
  const std::string where = "image " + im.image_id;
  try {
    const embed::EmbeddingSet views_file = io::load_embedding_set(manifest.resolve(im.views));
    if (views_file.dim() != textual.front().prompt_embeddings.dim()) {
      throw DataError("view dimension " + std::to_string(views_file.dim()) + " does not match text dimension " +
                      std::to_string(textual.front().prompt_embeddings.dim()));
    }
    const std::size_t pool = views_file.rows() - 1;
    if (pool != im.crops.size()) {
      throw DataError("views file has " + std::to_string(pool) + " crop rows but the manifest lists " +
                      std::to_string(im.crops.size()) + " crops");
    }

    std::vector<std::size_t> chosen = draw_pool(pool, config.n_views, config.seed, image_index);
    std::vector<std::size_t> kept = chosen;
    if (config.filter_views && !chosen.empty()) {
      const AttentionMap attention = io::load_attention_map(manifest.resolve(im.attention));
      std::vector<double> activations;
      activations.reserve(chosen.size());
      for (std::size_t c : chosen) activations.push_back(cadrs::mean_activation(attention, im.crops[c - 1]));
      kept.clear();
      for (std::size_t pos : cadrs::select_views(activations)) kept.push_back(chosen[pos - 1]);
    }
    const cadrs::ViewSet views = cadrs::build_view_set(views_file, kept);

    const auto start = std::chrono::steady_clock::now();
    const Eigen::MatrixXd dirs = views.embeddings.directions();
    ClassScores scores;
    switch (config.matcher) {
      case Matcher::kOt:
        scores = ot::classify_ot(dirs, textual_dirs, config.ot_config());
        break;
      case Matcher::kTta:
        scores = tta::classify_tta(dirs, centroids, config.tta_config());
        break;
      case Matcher::kPointwise:
        scores = classify_pointwise(dirs, centroids, config.tau);
        break;
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    const std::size_t best = scores.argmax();
    ImagePrediction p;
    p.image_id = im.image_id;
    p.true_class_id = im.true_class_id;
    p.predicted_class_id = textual[best].class_id;
    p.confidence = scores.probabilities[best];
    p.views_considered = chosen.size();
    p.views_kept = kept.size();
    p.seconds = elapsed.count();
    return p;
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
}

}  // namespace

EvalReport run_benchmark(const Manifest& manifest, const MatchConfig& config) {
  config.validate();
  if (manifest.images.empty()) throw DataError("manifest lists no images");
  const embed::EmbeddingSet text = io::load_embedding_set(manifest.resolve(manifest.text_embeddings));
  PreparedText prepared = prepare_textual_sets(manifest, text, config);

  const Eigen::MatrixXd centroids = tta::textual_centroids(prepared.textual_sets);
  std::vector<Eigen::MatrixXd> textual_dirs;
  for (const auto& t : prepared.textual_sets) textual_dirs.push_back(t.prompt_embeddings.directions());

  const std::size_t n = manifest.images.size();
  std::vector<ImagePrediction> predictions(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        predictions[i] = classify_image(manifest, i, prepared.textual_sets, centroids, textual_dirs, config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t workers = std::min(worker_count(), n);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);

  EvalReport r;
  r.dataset = manifest.dataset_name;
  r.n_images = n;
  r.seed = config.seed;
  r.config = config;
  r.retained_synonyms = std::move(prepared.retained_synonyms);
  std::map<int, std::size_t> correct;
  double seconds = 0.0;
  for (const auto& p : predictions) {
    ++r.per_class_count[p.true_class_id];
    if (p.predicted_class_id == p.true_class_id) {
      ++correct[p.true_class_id];
      ++r.n_correct;
    }
    seconds += p.seconds;
  }
  for (const auto& [cls, count] : r.per_class_count) {
    r.per_class_accuracy[cls] = static_cast<double>(correct[cls]) / static_cast<double>(count);
  }
  r.top1_accuracy = static_cast<double>(r.n_correct) / static_cast<double>(n);
  r.mean_inference_seconds = seconds / static_cast<double>(n);
  r.predictions = std::move(predictions);
  return r;
}

EvalReport run_benchmark(const std::filesystem::path& manifest_path, const MatchConfig& config) {
  return run_benchmark(load_manifest(manifest_path), config);
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / n);
  return s;
}

RepeatSummary run_repeats(const std::filesystem::path& manifest_path, const MatchConfig& config,
                          std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 2) throw ConfigError("repeats need at least two seeds");
  const Manifest manifest = load_manifest(manifest_path);
  RepeatSummary s;
  s.seeds.assign(seeds.begin(), seeds.end());
  std::vector<double> top1;
  std::vector<double> seconds;
  for (std::uint64_t seed : seeds) {
    MatchConfig c = config;
    c.seed = seed;
    s.reports.push_back(run_benchmark(manifest, c));
    top1.push_back(s.reports.back().top1_accuracy);
    seconds.push_back(s.reports.back().mean_inference_seconds);
  }
  s.top1 = summarize(top1);
  s.seconds = summarize(seconds);
  return s;
}

AblationTable run_ablation(const std::filesystem::path& manifest_path, const MatchConfig& base, AblationAxis axis,
                           std::span<const std::string> values) {
  if (values.empty()) throw ConfigError("ablation needs at least one value");
  const Manifest manifest = load_manifest(manifest_path);
  AblationTable t;
  t.axis = axis;
  t.values.assign(values.begin(), values.end());
  for (const auto& v : values) t.reports.push_back(run_benchmark(manifest, apply_axis(base, axis, v)));
  return t;
}

}  // namespace cpe::bench
