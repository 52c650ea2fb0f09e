#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cpe {

// Per-class scores and their softmax probabilities.
struct ClassScores {
  std::vector<double> scores;
  std::vector<double> probabilities;

  // Index of the highest probability; ties go to the lower index.
  std::size_t argmax() const;
};

double log_sum_exp(std::span<const double> x);

// softmax(x / temperature), computed with the max subtracted.
std::vector<double> softmax(std::span<const double> x, double temperature = 1.0);
Eigen::VectorXd softmax(const Eigen::VectorXd& x, double temperature = 1.0);

// Shannon entropy in nats; 0 log 0 = 0.
double entropy(std::span<const double> p);
double entropy(const Eigen::VectorXd& p);

// Builds ClassScores from raw scores with probabilities softmax(scores / tau).
ClassScores scores_with_softmax(std::vector<double> scores, double tau);

}  // namespace cpe
