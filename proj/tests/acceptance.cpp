// Acceptance gate. One line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "cpe/bench.hpp"
#include "cpe/cadrs.hpp"
#include "cpe/otmatch.hpp"
#include "cpe/synthetic.hpp"
#include "cpe/tda.hpp"
#include "cpe/tgssg.hpp"
#include "cpe/ttamatch.hpp"
#include "support.hpp"

using namespace cpe;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kSinkhornProblems = 1000;
constexpr double kSinkhornMarginalTol = 1e-6;
constexpr double kSinkhornSeconds = 10.0;
constexpr int kPersistenceSpaces = 200;
constexpr int kReductionFixtures = 100;
constexpr double kReductionTol = 1e-9;
constexpr int kGradientFixtures = 100;
constexpr double kGradientRelTol = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr double kStepLr = 5e-4;
constexpr int kStepMinNonIncreasing = 95;
constexpr int kTwoSigmaDraws = 10'000;
constexpr double kTwoSigmaBand = 0.005;
constexpr double kEndToEndSeconds = 60.0;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-26s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void sinkhorn_feasibility() {
  const auto start = Clock::now();
  CounterRng rng(1, 0);
  const double eps[] = {0.05, 0.1, 0.5};
  int converged = 0;
  double worst = 0.0;
  for (int t = 0; t < kSinkhornProblems; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(16)), m = 1 + static_cast<Eigen::Index>(rng.below(16));
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(15));
    ot::TransportProblem p;
    p.cost = ot::cost_matrix(testkit::random_unit_rows(rng, n, d), testkit::random_unit_rows(rng, m, d));
    p.a.resize(n);
    p.b.resize(m);
    for (Eigen::Index i = 0; i < n; ++i) p.a(i) = rng.uniform(0.01, 1.0);
    for (Eigen::Index j = 0; j < m; ++j) p.b(j) = rng.uniform(0.01, 1.0);
    p.a /= p.a.sum();
    p.b /= p.b.sum();
    p.epsilon = eps[t % 3];
    p.max_iters = 100'000;
    p.tol = 1e-9;
    const auto plan = ot::sinkhorn(p);
    if (!plan.converged) continue;
    ++converged;
    const double row = (plan.plan.rowwise().sum() - p.a).cwiseAbs().maxCoeff();
    const double col = (plan.plan.colwise().sum().transpose() - p.b).cwiseAbs().maxCoeff();
    worst = std::max({worst, row, col});
  }
  const double secs = seconds_since(start);
  report(converged == kSinkhornProblems && worst < kSinkhornMarginalTol && secs < kSinkhornSeconds,
         "sinkhorn-feasibility", fmt("%d/%d converged, max violation %.2e, %.2f s", converged, kSinkhornProblems, worst, secs));
}

void persistence_oracle() {
  CounterRng rng(2, 0);
  int exact = 0;
  for (int t = 0; t < kPersistenceSpaces; ++t) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(6));
    // Cosine distances of random points: a genuine metric-derived fixture.
    const Eigen::MatrixXd pts = testkit::random_unit_rows(rng, n, 3);
    const auto dm = tda::cosine_distance_matrix(embed::EmbeddingSet::from_matrix(pts));
    std::vector<double> got;
    for (const auto& b : tda::zero_dim_persistence(dm).finite_bars) got.push_back(b.death);
    exact += got == testkit::threshold_sweep_deaths(dm.entries());
  }
  report(exact == kPersistenceSpaces, "persistence-oracle", fmt("%d/%d exact", exact, kPersistenceSpaces));
}

void singleton_reduction() {
  CounterRng rng(3, 0);
  double worst = 0.0;
  for (int t = 0; t < kReductionFixtures; ++t) {
    const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng.below(9)), d = 4 + static_cast<Eigen::Index>(rng.below(29));
    const auto v = embed::EmbeddingSet::from_matrix(testkit::random_unit_rows(rng, 1, d));
    const auto texts = embed::EmbeddingSet::from_matrix(testkit::random_unit_rows(rng, k, d));
    const Eigen::MatrixXd vd = v.directions(), td = texts.directions();
    std::vector<Eigen::MatrixXd> sets;
    for (Eigen::Index i = 0; i < k; ++i) sets.emplace_back(td.row(i));
    ot::OtConfig cfg;
    cfg.weights = ot::WeightScheme::kUniform;
    const auto base = bench::classify_pointwise(vd, td, cfg.tau);
    const auto o = ot::classify_ot(vd, sets, cfg);
    const auto z = tta::infer_tta(vd, td, tta::ShiftState::zeros(k, d, kStepLr), cfg.tau);
    for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
      worst = std::max({worst, std::abs(o.probabilities[i] - base.probabilities[i]),
                        std::abs(z.probabilities[i] - base.probabilities[i])});
    }
  }
  report(worst < kReductionTol, "singleton-reduction", fmt("max |dp| %.2e over %d fixtures", worst, kReductionFixtures));
}

// Contrastive-style geometry: views and centroids share modality offsets so
// cosines sit in a narrow band, like a real dual encoder at tau = 0.01.
struct TtaFixture {
  Eigen::MatrixXd views, centroids;
};

TtaFixture tta_fixture(std::uint64_t seed) {
  CounterRng rng(seed, 0);
  const Eigen::Index d = 4 + static_cast<Eigen::Index>(rng.below(13));
  const Eigen::Index k = 2 + static_cast<Eigen::Index>(rng.below(4));
  const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng.below(13));
  const Eigen::MatrixXd axes = testkit::random_unit_rows(rng, 2, d);
  TtaFixture f;
  f.centroids = testkit::random_unit_rows(rng, k, d) * 0.15;
  f.centroids.rowwise() += axes.row(0);
  f.centroids = embed::normalize_rows(f.centroids);
  f.views = testkit::random_unit_rows(rng, n, d) * 0.15;
  f.views.rowwise() += 0.7 * axes.row(1) + 0.3 * axes.row(0);
  f.views = embed::normalize_rows(f.views);
  return f;
}

void tta_gradient() {
  const tta::TtaConfig cfg;
  double worst = 0.0;
  int non_increasing = 0;
  for (int t = 0; t < kGradientFixtures; ++t) {
    const auto f = tta_fixture(static_cast<std::uint64_t>(t));
    const Eigen::Index k = f.centroids.rows(), d = f.centroids.cols();
    auto zero = tta::ShiftState::zeros(k, d, kStepLr);
    const auto sel = tta::select_confident(tta::view_distributions(f.views, f.centroids, zero, cfg.tau), cfg.fraction);

    CounterRng rng(static_cast<std::uint64_t>(t), 1);
    auto probe = zero;
    probe.shifts = testkit::random_unit_rows(rng, k, d) * 0.01;
    const Eigen::MatrixXd g = tta::marginal_entropy_gradient(f.views, f.centroids, probe, cfg.tau, false, sel);
    const auto fn = [&](const Eigen::MatrixXd& x) {
      tta::ShiftState s = probe;
      s.shifts = x;
      return tta::marginal_entropy(f.views, f.centroids, s, cfg.tau, false, sel);
    };
    const Eigen::MatrixXd fd = testkit::finite_difference(fn, probe.shifts, kFdStep);
    worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / std::max(1e-12, fd.cwiseAbs().maxCoeff()));

    const double before = tta::marginal_entropy(f.views, f.centroids, zero, cfg.tau, false, sel);
    const auto next = tta::tta_step(f.views, f.centroids, zero, cfg);
    const double after = tta::marginal_entropy(f.views, f.centroids, next, cfg.tau, false, sel);
    non_increasing += after <= before;
  }
  report(worst < kGradientRelTol && non_increasing >= kStepMinNonIncreasing, "tta-gradient",
         fmt("max rel err %.2e, entropy non-increasing in %d/%d", worst, non_increasing, kGradientFixtures));
}

void two_sigma() {
  CounterRng rng(5, 0);
  std::vector<double> x(kTwoSigmaDraws);
  for (auto& v : x) v = rng.normal();
  const double rate = 1.0 - static_cast<double>(cadrs::select_views(x).size()) / kTwoSigmaDraws;
  const double expected = testkit::normal_cdf(-2.0);
  std::vector<double> hand(9, 0.5);
  hand.push_back(0.0);
  const auto kept = cadrs::select_views(hand);
  const bool example = kept == std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8, 9};
  report(std::abs(rate - expected) <= kTwoSigmaBand && example, "two-sigma-filter",
         fmt("rejected %.2f%% (oracle %.2f%%), 9+1 example %s", 100 * rate, 100 * expected, example ? "ok" : "wrong"));
}

std::vector<tgssg::ClassCandidates> synonym_fixture() {
  auto make = [](int id, const Eigen::MatrixXd& rows, std::vector<std::string> names) {
    tgssg::ClassCandidates c{id, {}};
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
      c.candidates.push_back({names[static_cast<std::size_t>(i)], testkit::to_vector(rows.row(i)), i == 0});
    return c;
  };
  Eigen::MatrixXd gram_c = testkit::constant_gram(4, 0.9);
  for (int i = 0; i < 3; ++i) gram_c(i, 3) = gram_c(3, i) = 0.1;
  return {make(0, testkit::rows_with_gram(testkit::constant_gram(3, 0.9)), {"a0", "a1", "a2"}),
          make(1, testkit::rows_with_gram(testkit::constant_gram(3, 0.9)), {"b0", "b1", "b2"}),
          make(2, testkit::rows_with_gram(gram_c), {"c0", "c1", "c2", "outlier"})};
}

void synonym_filter_fixture() {
  // Hand-derived: every tight candidate kept, the outlier dropped.
  const std::vector<std::vector<std::string>> want{{"a0", "a1", "a2"}, {"b0", "b1", "b2"}, {"c0", "c1", "c2"}};
  auto sorted_kept = [](const tgssg::FilterResult& r, int k) {
    auto v = r.retained_texts(k);
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto base = tgssg::filter_synonyms(synonym_fixture());
  bool ok = std::abs(base.mean_persistence - 0.188889) < 1e-6;
  for (int k = 0; k < 3; ++k) ok &= sorted_kept(base, k) == want[static_cast<std::size_t>(k)];
  CounterRng rng(6, 0);
  int invariant = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    auto fx = synonym_fixture();
    for (auto& c : fx)
      for (std::size_t i = c.candidates.size() - 1; i > 0; --i) std::swap(c.candidates[i], c.candidates[rng.below(i + 1)]);
    for (std::size_t i = fx.size() - 1; i > 0; --i) std::swap(fx[i], fx[rng.below(i + 1)]);
    const auto r = tgssg::filter_synonyms(fx);
    bool same = true;
    for (int k = 0; k < 3; ++k) same &= sorted_kept(r, k) == want[static_cast<std::size_t>(k)];
    invariant += same;
  }
  report(ok && invariant == trials, "synonym-filter-fixture",
         fmt("E[P] %.6f, retained sets %s, permutation-invariant %d/%d", base.mean_persistence, ok ? "match" : "differ",
             invariant, trials));
}

void end_to_end() {
  const auto start = Clock::now();
  testkit::TempDir dir("acceptance");
  const auto manifest = synthetic::write_gaussian_fixture(dir.path(), synthetic::GaussianFixtureSpec{});
  const Manifest m = load_manifest(manifest);
  bench::MatchConfig c;
  c.matcher = bench::Matcher::kPointwise;
  const double pw = bench::run_benchmark(m, c).top1_accuracy;
  c.matcher = bench::Matcher::kOt;
  const double ot = bench::run_benchmark(m, c).top1_accuracy;
  c.filter_views = false;
  const double ot_raw = bench::run_benchmark(m, c).top1_accuracy;
  const double secs = seconds_since(start);
  report(ot >= pw && ot >= ot_raw && secs < kEndToEndSeconds, "end-to-end-synthetic",
         fmt("pointwise %.3f, ot %.3f, ot unfiltered %.3f, %.1f s", pw, ot, ot_raw, secs));
}

void determinism() {
  testkit::TempDir dir("determinism");
  synthetic::GaussianFixtureSpec spec;
  spec.images_per_class = 10;
  const auto manifest = synthetic::write_gaussian_fixture(dir.path(), spec);
  bench::MatchConfig c;
  c.n_views = 50;
  c.seed = 11;
  bool same = true;
  for (auto matcher : {bench::Matcher::kOt, bench::Matcher::kTta, bench::Matcher::kPointwise}) {
    c.matcher = matcher;
    same &= bench::prediction_log(bench::run_benchmark(manifest, c)) == bench::prediction_log(bench::run_benchmark(manifest, c));
  }
  c.matcher = bench::Matcher::kOt;
  const std::vector<std::uint64_t> seeds{1, 1, 1};
  const auto rep = bench::run_repeats(manifest, c, seeds);
  report(same && rep.top1.stddev == 0.0, "determinism",
         fmt("prediction logs %s, repeats [1,1,1] stddev %g", same ? "identical" : "differ", rep.top1.stddev));
}

}  // namespace

int main() {
  sinkhorn_feasibility();
  persistence_oracle();
  singleton_reduction();
  tta_gradient();
  two_sigma();
  synonym_filter_fixture();
  end_to_end();
  determinism();
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
