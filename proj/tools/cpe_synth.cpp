// cpe-synth: writes the seeded Gaussian fixture.

#include <iostream>

#include <CLI11.hpp>

#include "cpe/error.hpp"
#include "cpe/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a seeded synthetic manifest with CPEB/CPEA payloads"};
  cpe::synthetic::GaussianFixtureSpec spec;
  std::string out;
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--seed", spec.seed);
  app.add_option("--classes", spec.classes);
  app.add_option("--dim", spec.dim);
  app.add_option("--images-per-class", spec.images_per_class);
  app.add_option("--views", spec.views);
  app.add_option("--noise-views", spec.noise_views);
  app.add_option("--synonyms", spec.genuine_synonyms);
  app.add_option("--hallucinated", spec.hallucinated_synonyms);
  app.add_option("--text-common", spec.text_common);
  app.add_option("--mode-spread", spec.mode_spread);
  app.add_option("--text-noise", spec.text_noise);
  app.add_option("--description-noise", spec.description_noise);
  app.add_option("--image-common", spec.image_common);
  app.add_option("--image-noise", spec.image_noise);
  app.add_option("--view-noise", spec.view_noise);
  app.add_option("--clutter-weight", spec.clutter_weight);
  app.add_option("--clutter-mix", spec.clutter_class_mix);
  CLI11_PARSE(app, argc, argv);
  try {
    std::cout << cpe::synthetic::write_gaussian_fixture(out, spec).string() << "\n";
  } catch (const cpe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
