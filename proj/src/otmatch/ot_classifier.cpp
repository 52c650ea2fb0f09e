#include <cmath>

#include "cpe/error.hpp"
#include "cpe/otmatch.hpp"

namespace cpe::ot {

DiscreteMeasure::DiscreteMeasure(embed::EmbeddingSet support_set, Eigen::VectorXd w)
    : support(std::move(support_set)), weights(std::move(w)) {
  if (static_cast<std::size_t>(weights.size()) != support.rows()) {
    throw DataError("measure weights do not match its support");
  }
  if ((weights.array() < 0.0).any() || !weights.allFinite()) throw DataError("measure weights must be >= 0");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw DataError("measure weights must sum to 1");
}

Eigen::VectorXd importance_weights(const Eigen::MatrixXd& elements, const Eigen::MatrixXd& references, double tau_w) {
  if (elements.cols() != references.cols()) throw DataError("dimension mismatch in importance weights");
  if (!(tau_w > 0.0)) throw DataError("tau_w must be positive");
  const Eigen::Index n = elements.rows();
  if (n == 1) return Eigen::VectorXd::Ones(1);

  const Eigen::MatrixXd sims = embed::normalize_rows(elements) * embed::normalize_rows(references).transpose();
  Eigen::VectorXd neg_entropy(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    neg_entropy(i) = -entropy(softmax(Eigen::VectorXd(sims.row(i).transpose()), tau_w));
  }
  return softmax(neg_entropy, tau_w);
}

Eigen::VectorXd importance_weights(const embed::EmbeddingSet& elements, const embed::EmbeddingSet& references,
                                   double tau_w) {
  return importance_weights(elements.directions(), references.directions(), tau_w);
}

Eigen::MatrixXd cost_matrix(const Eigen::MatrixXd& visual, const Eigen::MatrixXd& textual) {
  if (visual.cols() != textual.cols()) {
    throw DataError("dimension mismatch: views have " + std::to_string(visual.cols()) + ", prompts have " +
                    std::to_string(textual.cols()));
  }
  const Eigen::MatrixXd sims = embed::normalize_rows(visual) * embed::normalize_rows(textual).transpose();
  return (1.0 - sims.array()).cwiseMax(0.0).cwiseMin(2.0).matrix();
}

Eigen::MatrixXd cost_matrix(const cadrs::ViewSet& views, const tgssg::ClassTextualSet& textual) {
  return cost_matrix(views.embeddings.directions(), textual.prompt_embeddings.directions());
}

ClassScores classify_ot(const Eigen::MatrixXd& views, std::span<const Eigen::MatrixXd> textual, const OtConfig& config) {
  if (textual.empty()) throw DataError("no classes to score");
  if (views.rows() == 0) throw DataError("empty view set");
  const Eigen::Index n = views.rows();

  Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (config.weights == WeightScheme::kEntropy) {
    Eigen::MatrixXd centroids(static_cast<Eigen::Index>(textual.size()), views.cols());
    for (std::size_t k = 0; k < textual.size(); ++k) {
      if (textual[k].rows() == 0) throw DataError("class " + std::to_string(k) + " has an empty textual set");
      centroids.row(static_cast<Eigen::Index>(k)) = textual[k].colwise().mean();
    }
    a = importance_weights(views, centroids, config.tau_w);
  }

  std::vector<double> scores;
  scores.reserve(textual.size());
  for (const Eigen::MatrixXd& t : textual) {
    if (t.rows() == 0) throw DataError("empty textual set");
    const Eigen::Index m = t.rows();
    TransportProblem problem;
    problem.cost = cost_matrix(views, t);
    problem.a = a;
    problem.b = config.weights == WeightScheme::kEntropy
                    ? importance_weights(t, views, config.tau_w)
                    : Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    problem.epsilon = config.epsilon;
    problem.max_iters = config.max_iters;
    problem.tol = config.tol;
    const TransportPlan plan = sinkhorn(problem);
    scores.push_back((plan.plan.array() * (1.0 - problem.cost.array())).sum());
  }
  return scores_with_softmax(std::move(scores), config.tau);
}

ClassScores classify_ot(const cadrs::ViewSet& views, std::span<const tgssg::ClassTextualSet> textual_sets,
                        const OtConfig& config) {
  std::vector<Eigen::MatrixXd> textual;
  textual.reserve(textual_sets.size());
  for (const auto& t : textual_sets) {
    if (t.prompt_embeddings.dim() != views.embeddings.dim()) {
      throw DataError("class " + std::to_string(t.class_id) + " prompt dimension differs from the views");
    }
    textual.push_back(t.prompt_embeddings.directions());
  }
  return classify_ot(views.embeddings.directions(), textual, config);
}

}  // namespace cpe::ot
