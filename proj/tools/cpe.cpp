// cpe: classify, ablate, repeats, crops.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpe/bench.hpp"
#include "cpe/cadrs.hpp"
#include "cpe/error.hpp"
#include "cpe/manifest.hpp"

namespace {

using nlohmann::json;
using namespace cpe;

struct CommonArgs {
  std::string manifest;
  std::string matcher;
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("--manifest", a.manifest, "manifest JSON")->required();
  app->add_option("--matcher", a.matcher, "ot, tta or pointwise");
  app->add_option("--config", a.config, "MatchConfig JSON");
  app->add_option("--out", a.out, "output directory");
  app->add_option("--seed", a.seed, "overrides config seed");
}

bench::MatchConfig resolve_config(const CommonArgs& a) {
  bench::MatchConfig c = a.config.empty() ? bench::MatchConfig{} : bench::load_config(a.config);
  if (!a.matcher.empty()) c.matcher = bench::parse_matcher(a.matcher);
  if (a.seed) c.seed = *a.seed;
  c.validate();
  return c;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw DataError("cannot write " + path.string());
}

std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

void classify(const CommonArgs& a) {
  const bench::MatchConfig config = resolve_config(a);
  const Manifest manifest = load_manifest(a.manifest);
  const bench::EvalReport r = bench::run_benchmark(manifest, config);
  const auto out = prepare_out(a.out);
  write_file(out / "report.json", bench::report_to_json(r).dump(2) + "\n");
  write_file(out / "report.txt", bench::report_table(r));
  write_file(out / "predictions.csv", bench::prediction_log(r));
  json augmented = manifest_to_json(manifest);
  augmented["retained_synonyms"] = bench::retained_synonyms_json(r.retained_synonyms);
  write_file(out / "manifest.augmented.json", augmented.dump(2) + "\n");
  std::cout << bench::report_table(r);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

void ablate(const CommonArgs& a, const std::string& axis, const std::string& values) {
  const bench::MatchConfig config = resolve_config(a);
  const auto t = bench::run_ablation(a.manifest, config, bench::parse_axis(axis), split(values));
  const auto out = prepare_out(a.out);
  write_file(out / "ablation.json", bench::ablation_to_json(t).dump(2) + "\n");
  write_file(out / "ablation.txt", bench::ablation_table(t));
  std::cout << bench::ablation_table(t);
}

void repeats(const CommonArgs& a, const std::string& seeds_arg) {
  const bench::MatchConfig config = resolve_config(a);
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split(seeds_arg)) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (s.empty() || pos != s.size()) throw ConfigError("bad seed '" + s + "'");
    seeds.push_back(v);
  }
  const auto summary = bench::run_repeats(a.manifest, config, seeds);
  const auto out = prepare_out(a.out);
  write_file(out / "repeats.json", bench::repeats_to_json(summary).dump(2) + "\n");
  write_file(out / "repeats.txt", bench::repeats_table(summary));
  std::cout << bench::repeats_table(summary);
}

void crops(std::uint64_t seed, std::size_t n, const std::string& config_path) {
  bench::MatchConfig c = config_path.empty() ? bench::MatchConfig{} : bench::load_config(config_path);
  json arr = json::array();
  for (const CropSpec& s : cadrs::generate_crop_specs(seed, n, c.crop_sampling())) arr.push_back(crop_to_json(s));
  std::cout << arr.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Set-to-set visual-textual matching over precomputed embeddings"};
  app.require_subcommand(1);

  CommonArgs classify_args, ablate_args, repeats_args;
  auto* classify_cmd = app.add_subcommand("classify", "classify every image of a manifest");
  add_common(classify_cmd, classify_args);

  std::string axis, values;
  auto* ablate_cmd = app.add_subcommand("ablate", "sweep one config axis");
  add_common(ablate_cmd, ablate_args);
  ablate_cmd->add_option("--axis", axis, "synonyms_max, n_views or matcher")->required();
  ablate_cmd->add_option("--values", values, "comma-separated values")->required();

  std::string seeds;
  auto* repeats_cmd = app.add_subcommand("repeats", "rerun over several seeds");
  add_common(repeats_cmd, repeats_args);
  repeats_cmd->add_option("--seeds", seeds, "comma-separated seeds")->required();

  std::uint64_t crop_seed = 0;
  std::size_t crop_n = cadrs::kDefaultViewCount;
  std::string crop_config;
  auto* crops_cmd = app.add_subcommand("crops", "print crop specs as JSON [x0, y0, w, h, hflip]");
  crops_cmd->add_option("--seed", crop_seed, "per-image crop seed")->required();
  crops_cmd->add_option("--n", crop_n, "number of crops");
  crops_cmd->add_option("--config", crop_config, "MatchConfig JSON (crop_scale)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*classify_cmd) classify(classify_args);
    if (*ablate_cmd) ablate(ablate_args, axis, values);
    if (*repeats_cmd) repeats(repeats_args, seeds);
    if (*crops_cmd) crops(crop_seed, crop_n, crop_config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
