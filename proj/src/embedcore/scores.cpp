#include "cpe/scores.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cpe {

std::size_t ClassScores::argmax() const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < probabilities.size(); ++k) {
    if (probabilities[k] > probabilities[best]) best = k;
  }
  return best;
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

std::vector<double> softmax(std::span<const double> x, double temperature) {
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v / temperature);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] / temperature - m);
    s += out[i];
  }
  for (double& v : out) v /= s;
  return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x, double temperature) {
  auto v = softmax(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), temperature);
  return Eigen::Map<Eigen::VectorXd>(v.data(), x.size());
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double q : p) {
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

double entropy(const Eigen::VectorXd& p) {
  return entropy(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

ClassScores scores_with_softmax(std::vector<double> scores, double tau) {
  ClassScores out;
  out.probabilities = softmax(scores, tau);
  out.scores = std::move(scores);
  return out;
}

}  // namespace cpe
