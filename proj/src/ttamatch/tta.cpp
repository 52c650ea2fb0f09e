#include "cpe/ttamatch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cpe/error.hpp"

namespace cpe::tta {

namespace {

Eigen::MatrixXd probabilities(const Eigen::MatrixXd& views, const Eigen::MatrixXd& shifted, double tau) {
  // N x K logits, softmax along each row.
  const Eigen::MatrixXd logits = views * shifted.transpose() / tau;
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    p.row(i) = softmax(Eigen::VectorXd(logits.row(i).transpose())).transpose();
  }
  return p;
}

Eigen::VectorXd marginal(const Eigen::MatrixXd& p, std::span<const std::size_t> selected) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p.cols());
  for (std::size_t i : selected) m += p.row(static_cast<Eigen::Index>(i)).transpose();
  return m / static_cast<double>(selected.size());
}

void check_shapes(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids, const ShiftState& shifts,
                  double tau) {
  if (views.rows() == 0) throw DataError("empty view set");
  if (views.cols() != centroids.cols()) throw DataError("view and centroid dimensions differ");
  if (shifts.shifts.rows() != centroids.rows() || shifts.shifts.cols() != centroids.cols()) {
    throw DataError("shift state does not match the class centroids");
  }
  if (!(tau > 0.0)) throw DataError("tau must be positive");
}

void check_selection(std::span<const std::size_t> selected, Eigen::Index n) {
  if (selected.empty()) throw DataError("no views selected");
  for (std::size_t i : selected) {
    if (static_cast<Eigen::Index>(i) >= n) throw DataError("selected view out of range");
  }
}

}  // namespace

ShiftState ShiftState::zeros(Eigen::Index classes, Eigen::Index dim, double learning_rate) {
  return ShiftState{Eigen::MatrixXd::Zero(classes, dim), learning_rate};
}

Eigen::MatrixXd textual_centroids(std::span<const tgssg::ClassTextualSet> textual_sets) {
  if (textual_sets.empty()) throw DataError("no classes to score");
  const auto dim = static_cast<Eigen::Index>(textual_sets.front().prompt_embeddings.dim());
  Eigen::MatrixXd c(static_cast<Eigen::Index>(textual_sets.size()), dim);
  for (std::size_t k = 0; k < textual_sets.size(); ++k) {
    const Eigen::MatrixXd dirs = textual_sets[k].prompt_embeddings.directions();
    if (dirs.cols() != dim) throw DataError("textual sets differ in dimension");
    c.row(static_cast<Eigen::Index>(k)) = dirs.colwise().mean();
  }
  return c;
}

Eigen::MatrixXd shifted_centroids(const Eigen::MatrixXd& centroids, const ShiftState& shifts, bool renormalize) {
  Eigen::MatrixXd w = centroids + shifts.shifts;
  return renormalize ? embed::normalize_rows(w) : w;
}

std::vector<ViewDistribution> view_distributions(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids,
                                                 const ShiftState& shifts, double tau, bool renormalize) {
  check_shapes(views, centroids, shifts, tau);
  const Eigen::MatrixXd p = probabilities(views, shifted_centroids(centroids, shifts, renormalize), tau);
  std::vector<ViewDistribution> out;
  out.reserve(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::VectorXd row = p.row(i).transpose();
    const double h = entropy(row);
    out.push_back({std::move(row), h});
  }
  return out;
}

std::vector<std::size_t> select_confident(std::span<const ViewDistribution> dists, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DataError("confident fraction must be in (0, 1]");
  if (dists.empty()) return {};
  const std::size_t n = dists.size();
  // Guard ceil against representation error, e.g. (1/3) * 3.
  const double raw = fraction * static_cast<double>(n);
  auto m = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  m = std::clamp<std::size_t>(m, 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dists[a].entropy < dists[b].entropy; });
  order.resize(m);
  return order;
}

double marginal_entropy(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids, const ShiftState& shifts,
                        double tau, bool renormalize, std::span<const std::size_t> selected) {
  check_shapes(views, centroids, shifts, tau);
  check_selection(selected, views.rows());
  const Eigen::MatrixXd p = probabilities(views, shifted_centroids(centroids, shifts, renormalize), tau);
  return entropy(marginal(p, selected));
}

Eigen::MatrixXd marginal_entropy_gradient(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids,
                                          const ShiftState& shifts, double tau, bool renormalize,
                                          std::span<const std::size_t> selected) {
  check_shapes(views, centroids, shifts, tau);
  check_selection(selected, views.rows());
  const Eigen::MatrixXd raw = centroids + shifts.shifts;
  const Eigen::MatrixXd w = renormalize ? embed::normalize_rows(raw) : raw;
  const Eigen::MatrixXd p = probabilities(views, w, tau);
  const Eigen::VectorXd pbar = marginal(p, selected);
  const double m = static_cast<double>(selected.size());

  // dL/dpbar_k = -(log pbar_k + 1); a class with pbar_k = 0 has p_i(k) = 0 too.
  Eigen::VectorXd dl_dpbar(pbar.size());
  for (Eigen::Index k = 0; k < pbar.size(); ++k) dl_dpbar(k) = pbar(k) > 0.0 ? -(std::log(pbar(k)) + 1.0) : 0.0;

  // dL/dw_k = sum_i dL/dz_ik * v_i / tau, with
  // dL/dz_ik = (1/m) p_i(k) (dL/dpbar_k - sum_k' p_i(k') dL/dpbar_k').
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(w.rows(), w.cols());
  for (std::size_t idx : selected) {
    const auto i = static_cast<Eigen::Index>(idx);
    const Eigen::VectorXd pi = p.row(i).transpose();
    const double baseline = pi.dot(dl_dpbar);
    const Eigen::VectorXd dz = pi.cwiseProduct((dl_dpbar.array() - baseline).matrix()) / m;
    grad += dz * views.row(i) / tau;
  }

  if (renormalize) {
    // Through w_hat = w / |w|: dL/dw = (I - w_hat w_hat^T) dL/dw_hat / |w|.
    for (Eigen::Index k = 0; k < grad.rows(); ++k) {
      const double norm = raw.row(k).norm();
      const Eigen::RowVectorXd g = grad.row(k);
      grad.row(k) = (g - g.dot(w.row(k)) * w.row(k)) / norm;
    }
  }
  return grad;
}

ShiftState tta_step(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids, const ShiftState& shifts,
                    const TtaConfig& config) {
  const auto dists = view_distributions(views, centroids, shifts, config.tau, config.renormalize_shifted);
  const auto selected = select_confident(dists, config.fraction);
  ShiftState next = shifts;
  next.shifts -= shifts.learning_rate *
                 marginal_entropy_gradient(views, centroids, shifts, config.tau, config.renormalize_shifted, selected);
  return next;
}

ClassScores infer_tta(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids, const ShiftState& shifts,
                      double tau, bool renormalize) {
  check_shapes(views, centroids, shifts, tau);
  const Eigen::VectorXd center = views.colwise().mean().transpose();
  const Eigen::VectorXd s = shifted_centroids(centroids, shifts, renormalize) * center;
  return scores_with_softmax(std::vector<double>(s.data(), s.data() + s.size()), tau);
}

ClassScores classify_tta(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids, const TtaConfig& config) {
  const ShiftState start = ShiftState::zeros(centroids.rows(), centroids.cols(), config.learning_rate);
  const ShiftState adapted = tta_step(views, centroids, start, config);
  return infer_tta(views, centroids, adapted, config.tau, config.renormalize_shifted);
}

ClassScores classify_tta(const cadrs::ViewSet& views, std::span<const tgssg::ClassTextualSet> textual_sets,
                         const TtaConfig& config) {
  return classify_tta(views.embeddings.directions(), textual_centroids(textual_sets), config);
}

}  // namespace cpe::tta
