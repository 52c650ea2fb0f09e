#pragma once

// Test-time adaptation of per-class shift vectors by marginal entropy
// minimization over the most confident views.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cpe/cadrs.hpp"
#include "cpe/scores.hpp"
#include "cpe/tgssg.hpp"

namespace cpe::tta {

struct TtaConfig {
  double tau = 0.01;
  double learning_rate = 5e-4;
  double fraction = 0.1;  // share of views kept as confident, at least one
  bool renormalize_shifted = false;
};

/// One shift vector l_k per class, stored as the rows of a K x d matrix.
struct ShiftState {
  Eigen::MatrixXd shifts;
  double learning_rate = 5e-4;

  static ShiftState zeros(Eigen::Index classes, Eigen::Index dim, double learning_rate);
};

struct ViewDistribution {
  Eigen::VectorXd probs;
  double entropy = 0.0;
};

// K x d matrix of E[T_k]: mean of the unit-direction rows of each set.
Eigen::MatrixXd textual_centroids(std::span<const tgssg::ClassTextualSet> textual_sets);

// Row k = E[T_k] + l_k, unit-normalized when `renormalize` is set.
Eigen::MatrixXd shifted_centroids(const Eigen::MatrixXd& centroids, const ShiftState& shifts, bool renormalize);

/// p(k | v_i) = softmax_k((E[T_k] + l_k) . v_i / tau) for every view row.
std::vector<ViewDistribution> view_distributions(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids,
                                                 const ShiftState& shifts, double tau, bool renormalize = false);

// Indices of the max(1, ceil(fraction * n)) lowest-entropy distributions,
// ascending by entropy with ties to the lower index.
std::vector<std::size_t> select_confident(std::span<const ViewDistribution> dists, double fraction);

// Entropy of the mean distribution over `selected` views.
double marginal_entropy(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids, const ShiftState& shifts,
                        double tau, bool renormalize, std::span<const std::size_t> selected);

// Analytic gradient of marginal_entropy with respect to the shifts (K x d),
// holding the selected views fixed.
Eigen::MatrixXd marginal_entropy_gradient(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids,
                                          const ShiftState& shifts, double tau, bool renormalize,
                                          std::span<const std::size_t> selected);

/// Selects the confident views under the current shifts and takes exactly one
/// gradient step of size shifts.learning_rate on their marginal entropy.
ShiftState tta_step(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids, const ShiftState& shifts,
                    const TtaConfig& config);

/// Scores (E[T_k] + l_k) . mean(views) / tau with softmax probabilities.
ClassScores infer_tta(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids, const ShiftState& shifts,
                      double tau, bool renormalize = false);

// Episodic adaptation for one image: zero shifts, one step, inference.
ClassScores classify_tta(const cadrs::ViewSet& views, std::span<const tgssg::ClassTextualSet> textual_sets,
                         const TtaConfig& config = {});
ClassScores classify_tta(const Eigen::MatrixXd& views, const Eigen::MatrixXd& centroids,
                         const TtaConfig& config = {});

}  // namespace cpe::tta
