#include "cpe/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "cpe/binary_io.hpp"
#include "cpe/cadrs.hpp"
#include "cpe/error.hpp"
#include "cpe/manifest.hpp"
#include "cpe/rng.hpp"

namespace cpe::synthetic {

namespace {

using Vec = Eigen::VectorXd;

constexpr std::uint64_t kClassStream = 1'000;
constexpr std::uint64_t kImageStream = 1'000'000;

Vec gaussian(CounterRng& rng, std::size_t dim) {
  Vec v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  return v;
}

// Isotropic noise with expected norm ~scale.
Vec noise(CounterRng& rng, std::size_t dim, double scale) {
  return gaussian(rng, dim) * (scale / std::sqrt(static_cast<double>(dim)));
}

Vec unit(const Vec& v) { return v / v.norm(); }

struct Rect {
  double x0, y0, x1, y1;
  double area() const { return (x1 - x0) * (y1 - y0); }
};

double overlap(const Rect& a, const CropSpec& c) {
  const double w = std::max(0.0, std::min(a.x1, c.x0 + c.w) - std::max(a.x0, c.x0));
  const double h = std::max(0.0, std::min(a.y1, c.y0 + c.h) - std::max(a.y0, c.y0));
  return w * h;
}

// A crop of side `side` fully outside the object, in the widest free strip.
CropSpec background_crop(const Rect& obj, double side, CounterRng& rng) {
  const double left = obj.x0, right = 1.0 - obj.x1, top = obj.y0, bottom = 1.0 - obj.y1;
  CropSpec c;
  c.w = side;
  c.h = side;
  const double best = std::max({left, right, top, bottom});
  if (best == left || best == right) {
    c.x0 = best == left ? rng.uniform(0.0, left - side) : rng.uniform(obj.x1, 1.0 - side);
    c.y0 = rng.uniform(0.0, 1.0 - side);
  } else {
    c.y0 = best == top ? rng.uniform(0.0, top - side) : rng.uniform(obj.y1, 1.0 - side);
    c.x0 = rng.uniform(0.0, 1.0 - side);
  }
  c.x0 = std::clamp(c.x0, 0.0, 1.0 - side);
  c.y0 = std::clamp(c.y0, 0.0, 1.0 - side);
  return c;
}

}  // namespace

std::filesystem::path write_gaussian_fixture(const std::filesystem::path& dir, const GaussianFixtureSpec& spec) {
  if (spec.classes < 2 || spec.dim < 4 || spec.views == 0 || spec.noise_views > spec.views) {
    throw DataError("invalid synthetic fixture spec");
  }
  std::filesystem::create_directories(dir / "views");
  std::filesystem::create_directories(dir / "attention");

  const std::size_t d = spec.dim;
  CounterRng global(spec.seed, 0);
  const Vec text_axis = unit(gaussian(global, d));
  Vec image_axis = gaussian(global, d);
  image_axis = unit(image_axis - image_axis.dot(text_axis) * text_axis);
  // Class content lives orthogonal to both shared axes.
  auto content = [&](Vec v) {
    v -= v.dot(text_axis) * text_axis;
    v -= v.dot(image_axis) * image_axis;
    return v;
  };

  auto text_row = [&](const Vec& content, CounterRng& rng, double extra_noise) {
    return unit(spec.text_common * text_axis + content + noise(rng, d, spec.text_noise + extra_noise));
  };

  std::vector<Vec> class_means;
  std::vector<std::vector<Vec>> modes;  // genuine modes, index 0 = class name
  std::vector<Eigen::VectorXd> text_rows;
  Manifest manifest;
  manifest.dataset_name = spec.name;
  manifest.text_embeddings = "text.cpeb";

  for (std::size_t k = 0; k < spec.classes; ++k) {
    CounterRng rng(spec.seed, kClassStream + k);
    const Vec mean = unit(content(gaussian(rng, d)));
    class_means.push_back(mean);

    // Synonym order: name, genuine..., with hallucinations placed after the
    // first two genuine synonyms.
    struct Candidate {
      std::string text;
      Vec direction;
      bool original;
    };
    std::vector<Candidate> cands;
    std::vector<Vec> class_modes;
    const std::string base = "class" + std::to_string(k);
    const Vec name_mode = unit(mean + content(noise(rng, d, spec.mode_spread)));
    class_modes.push_back(name_mode);
    cands.push_back({base, name_mode, true});
    std::size_t hallucinated = 0;
    for (std::size_t s = 1; s <= spec.genuine_synonyms; ++s) {
      const Vec mode = unit(mean + content(noise(rng, d, spec.mode_spread)));
      class_modes.push_back(mode);
      cands.push_back({base + "-syn" + std::to_string(s), mode, false});
      if (s == std::min<std::size_t>(2, spec.genuine_synonyms)) {
        for (; hallucinated < spec.hallucinated_synonyms; ++hallucinated) {
          cands.push_back({base + "-hallucination" + std::to_string(hallucinated), unit(content(gaussian(rng, d))), false});
        }
      }
    }
    for (; hallucinated < spec.hallucinated_synonyms; ++hallucinated) {
      cands.push_back({base + "-hallucination" + std::to_string(hallucinated), unit(content(gaussian(rng, d))), false});
    }
    modes.push_back(class_modes);

    ClassRecord rec;
    rec.class_id = static_cast<int>(k);
    rec.given_name = base;
    for (const auto& c : cands) {
      SynonymEntry e;
      e.text = c.text;
      e.is_original = c.original;
      e.row = text_rows.size();
      text_rows.push_back(text_row(c.direction, rng, 0.0));
      e.prompt_row = text_rows.size();
      text_rows.push_back(text_row(c.direction, rng, 0.0));
      rec.synonyms.push_back(e);
    }
    for (std::size_t j = 0; j < spec.descriptions; ++j) {
      const Vec facet = content(noise(rng, d, spec.description_noise));
      DescriptionEntry de;
      de.text = "description " + std::to_string(j) + " of " + base;
      de.row_begin = text_rows.size();
      for (const auto& c : cands) text_rows.push_back(text_row(c.direction + facet, rng, 0.0));
      de.row_end = text_rows.size();
      rec.descriptions.push_back(de);
    }
    manifest.classes.push_back(std::move(rec));
  }

  Eigen::MatrixXd text_matrix(static_cast<Eigen::Index>(text_rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < text_rows.size(); ++i) text_matrix.row(static_cast<Eigen::Index>(i)) = text_rows[i];
  io::save_embedding_set(embed::EmbeddingSet::from_matrix(text_matrix, "text"), dir / "text.cpeb");

  const std::size_t n_images = spec.classes * spec.images_per_class;
  const std::size_t grid = spec.attention_size;
  for (std::size_t i = 0; i < n_images; ++i) {
    const std::size_t k = i % spec.classes;
    CounterRng rng(spec.seed, kImageStream + i);
    const auto& class_modes = modes[k];
    const Vec& mode = class_modes[static_cast<std::size_t>(rng.below(class_modes.size()))];
    const Vec object = unit(mode + content(noise(rng, d, spec.image_noise)));
    std::size_t other = static_cast<std::size_t>(rng.below(spec.classes - 1));
    if (other >= k) ++other;
    const Vec clutter = unit(content(gaussian(rng, d)) / std::sqrt(static_cast<double>(d)) +
                             spec.clutter_class_mix * class_means[other]);

    Rect obj;
    const double ow = rng.uniform(0.35, 0.55);
    const double oh = rng.uniform(0.35, 0.55);
    obj.x0 = rng.uniform(0.0, 1.0 - ow);
    obj.y0 = rng.uniform(0.0, 1.0 - oh);
    obj.x1 = obj.x0 + ow;
    obj.y1 = obj.y0 + oh;

    std::vector<float> attention(grid * grid);
    for (std::size_t r = 0; r < grid; ++r) {
      for (std::size_t c = 0; c < grid; ++c) {
        const double cy = (static_cast<double>(r) + 0.5) / static_cast<double>(grid);
        const double cx = (static_cast<double>(c) + 0.5) / static_cast<double>(grid);
        const bool inside = cx >= obj.x0 && cx < obj.x1 && cy >= obj.y0 && cy < obj.y1;
        attention[r * grid + c] = static_cast<float>((inside ? 1.0 : 0.1) * rng.uniform(0.8, 1.2));
      }
    }

    std::vector<CropSpec> crops = cadrs::generate_crop_specs(CounterRng::mix(spec.seed ^ (i + 1)), spec.views);
    // Background-only crops replace a seeded subset of the candidates.
    std::vector<std::size_t> order(spec.views);
    for (std::size_t v = 0; v < spec.views; ++v) order[v] = v;
    for (std::size_t v = 0; v < spec.noise_views; ++v) {
      std::swap(order[v], order[v + static_cast<std::size_t>(rng.below(spec.views - v))]);
      CropSpec& c = crops[order[v]];
      const std::uint64_t index = c.seed_index;
      c = background_crop(obj, rng.uniform(0.15, 0.2), rng);
      c.seed_index = index;
    }

    auto view_row = [&](double coverage) {
      const double s = std::sqrt(coverage);
      return unit(spec.image_common * image_axis + s * object + spec.clutter_weight * (1.0 - s) * clutter +
                  noise(rng, d, spec.view_noise));
    };
    Eigen::MatrixXd views(static_cast<Eigen::Index>(spec.views + 1), static_cast<Eigen::Index>(d));
    views.row(0) = view_row(obj.area());
    for (std::size_t v = 0; v < spec.views; ++v) {
      const CropSpec& c = crops[v];
      views.row(static_cast<Eigen::Index>(v + 1)) = view_row(overlap(obj, c) / (c.w * c.h));
    }

    char id[32];
    std::snprintf(id, sizeof(id), "img-%05zu", i);
    ImageRecord im;
    im.image_id = id;
    im.true_class_id = static_cast<int>(k);
    im.views = std::filesystem::path("views") / (im.image_id + ".cpeb");
    im.attention = std::filesystem::path("attention") / (im.image_id + ".cpea");
    im.crops = std::move(crops);
    io::save_embedding_set(embed::EmbeddingSet::from_matrix(views, im.image_id), dir / im.views);
    io::save_attention_map(AttentionMap(grid, grid, std::move(attention)), dir / im.attention);
    manifest.images.push_back(std::move(im));
  }

  const auto path = dir / "manifest.json";
  save_manifest(manifest, path);
  return path;
}

}  // namespace cpe::synthetic
