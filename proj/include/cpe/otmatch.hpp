#pragma once

// Set-to-set classification by entropic optimal transport.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cpe/cadrs.hpp"
#include "cpe/embedcore.hpp"
#include "cpe/scores.hpp"
#include "cpe/tgssg.hpp"

namespace cpe::ot {

enum class WeightScheme { kEntropy, kUniform };

struct DiscreteMeasure {
  // Throws DataError unless weights are >= 0, sum to 1 within 1e-9 and match
  // the support size.
  DiscreteMeasure(embed::EmbeddingSet support, Eigen::VectorXd weights);

  embed::EmbeddingSet support;
  Eigen::VectorXd weights;
};

struct TransportProblem {
  Eigen::MatrixXd cost;  // rows = visual elements, cols = textual elements
  Eigen::VectorXd a;     // row marginal
  Eigen::VectorXd b;     // column marginal
  double epsilon = 0.1;
  int max_iters = 100;
  double tol = 1e-6;
};

struct TransportPlan {
  Eigen::MatrixXd plan;
  bool converged = false;
  int iterations_used = 0;
  double marginal_error = 0.0;  // L-inf violation of both marginals
};

struct OtConfig {
  double tau = 0.01;
  double epsilon = 0.1;
  int max_iters = 100;
  double tol = 1e-6;
  double tau_w = 0.5;
  WeightScheme weights = WeightScheme::kEntropy;
};

/// Entropy-based element weights. Each element gets a distribution over the
/// references, softmax(cos(e_i, r) / tau_w), with entropy h_i; the weights
/// are softmax over elements of -h_i / tau_w. Confident elements weigh more.
Eigen::VectorXd importance_weights(const Eigen::MatrixXd& elements, const Eigen::MatrixXd& references, double tau_w);
Eigen::VectorXd importance_weights(const embed::EmbeddingSet& elements, const embed::EmbeddingSet& references,
                                   double tau_w);

// C_ij = 1 - cos(v_i, t_j), clamped to [0, 2]. Throws DataError on dim mismatch.
Eigen::MatrixXd cost_matrix(const Eigen::MatrixXd& visual, const Eigen::MatrixXd& textual);
Eigen::MatrixXd cost_matrix(const cadrs::ViewSet& views, const tgssg::ClassTextualSet& textual);

/// Entropic Sinkhorn, stabilized by absorbing the scalings into log-domain
/// potentials. Iterates until the larger of the two marginal violations
/// drops below `tol` or `max_iters` is reached.
/// Zero marginal entries give zero rows or columns. Throws DataError on NaN
/// cost, shape mismatch, negative weights, or epsilon <= 0.
TransportPlan sinkhorn(const TransportProblem& problem);

/// For each class: visual weights against the textual centroids, textual
/// weights against the views, Sinkhorn plan P, score sum_ij P_ij (1 - C_ij).
/// Probabilities are softmax(score / tau).
ClassScores classify_ot(const cadrs::ViewSet& views, std::span<const tgssg::ClassTextualSet> textual_sets,
                        const OtConfig& config = {});

// Same on unit-direction matrices: `views` is N x d, `textual[k]` is M_k x d.
ClassScores classify_ot(const Eigen::MatrixXd& views, std::span<const Eigen::MatrixXd> textual,
                        const OtConfig& config = {});

}  // namespace cpe::ot
