#include <cmath>
#include <limits>
#include <vector>

#include "cpe/error.hpp"
#include "cpe/otmatch.hpp"

namespace cpe::ot {

namespace {

// Scalings are folded into the potentials once they leave [1/kAbsorb, kAbsorb].
constexpr double kAbsorb = 1e3;

void check_marginal(const Eigen::VectorXd& w, const char* name) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w(i)) || w(i) < 0.0) throw DataError(std::string("marginal ") + name + " has a bad entry");
  }
  if (std::abs(w.sum() - 1.0) > 1e-6) throw DataError(std::string("marginal ") + name + " does not sum to 1");
}

std::vector<Eigen::Index> support_of(const Eigen::VectorXd& w) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0) idx.push_back(i);
  }
  return idx;
}

// Stabilized scaling iterations on a problem with strictly positive marginals.
// The plan is diag(u) K diag(v) with K_ij = exp((f_i + g_j - C_ij) / eps).
class ScalingSolver {
 public:
  ScalingSolver(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b, double eps)
      : cost_(cost), a_(a), b_(b), eps_(eps),
        f_(Eigen::VectorXd::Zero(a.size())), g_(Eigen::VectorXd::Zero(b.size())),
        u_(Eigen::VectorXd::Ones(a.size())), v_(Eigen::VectorXd::Ones(b.size())) {}

  // One exact log-domain update of both potentials, then a fresh kernel.
  void log_step() {
    absorb();
    const Eigen::Index n = cost_.rows();
    const Eigen::Index m = cost_.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
      f_(i) = eps_ * (std::log(a_(i)) - lse(((g_.transpose() - cost_.row(i)) / eps_).transpose()));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      g_(j) = eps_ * (std::log(b_(j)) - lse((f_ - cost_.col(j)) / eps_));
    }
    rebuild_kernel();
  }

  // One row-then-column scaling update; falls back to a log-domain step when
  // the kernel underflows on a row or column.
  void scaling_step() {
    const Eigen::VectorXd kv = kernel_ * v_;
    if ((kv.array() <= 0.0).any()) {
      log_step();
      return;
    }
    u_ = a_.cwiseQuotient(kv);
    const Eigen::VectorXd ktu = kernel_.transpose() * u_;
    if ((ktu.array() <= 0.0).any()) {
      log_step();
      return;
    }
    v_ = b_.cwiseQuotient(ktu);
    if (needs_absorb(u_) || needs_absorb(v_)) {
      absorb();
      rebuild_kernel();
    }
  }

  Eigen::MatrixXd plan() const { return u_.asDiagonal() * kernel_ * v_.asDiagonal(); }

  double marginal_error() const {
    const Eigen::MatrixXd p = plan();
    const double rows = (p.rowwise().sum() - a_).cwiseAbs().maxCoeff();
    const double cols = (p.colwise().sum().transpose() - b_).cwiseAbs().maxCoeff();
    return std::max(rows, cols);
  }

 private:
  static double lse(const Eigen::VectorXd& x) {
    const double mx = x.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((x.array() - mx).exp().sum());
  }

  static bool needs_absorb(const Eigen::VectorXd& s) {
    return (s.array() > kAbsorb).any() || (s.array() < 1.0 / kAbsorb).any();
  }

  void absorb() {
    f_ += eps_ * u_.array().log().matrix();
    g_ += eps_ * v_.array().log().matrix();
    u_.setOnes();
    v_.setOnes();
  }

  void rebuild_kernel() {
    kernel_ = (((-cost_).colwise() + f_).rowwise() + g_.transpose()).array() / eps_;
    kernel_ = kernel_.array().exp().matrix();
  }

  const Eigen::MatrixXd& cost_;
  const Eigen::VectorXd& a_;
  const Eigen::VectorXd& b_;
  double eps_;
  Eigen::VectorXd f_, g_, u_, v_;
  Eigen::MatrixXd kernel_;
};

}  // namespace

TransportPlan sinkhorn(const TransportProblem& problem) {
  const Eigen::MatrixXd& c = problem.cost;
  if (c.rows() == 0 || c.cols() == 0) throw DataError("empty cost matrix");
  if (c.rows() != problem.a.size() || c.cols() != problem.b.size()) {
    throw DataError("cost matrix shape does not match the marginals");
  }
  if (c.hasNaN()) throw DataError("NaN in cost matrix");
  if (!(problem.epsilon > 0.0)) throw DataError("epsilon must be positive");
  check_marginal(problem.a, "a");
  check_marginal(problem.b, "b");

  // Zero-mass rows and columns carry nothing; solve on the support.
  const auto rows = support_of(problem.a);
  const auto cols = support_of(problem.b);
  const Eigen::MatrixXd cost = c(rows, cols);
  const Eigen::VectorXd a = problem.a(rows);
  const Eigen::VectorXd b = problem.b(cols);

  ScalingSolver solver(cost, a, b, problem.epsilon);
  TransportPlan out;
  solver.log_step();
  out.iterations_used = 1;
  double err = solver.marginal_error();
  while (err >= problem.tol && out.iterations_used < problem.max_iters) {
    solver.scaling_step();
    ++out.iterations_used;
    err = solver.marginal_error();
  }
  out.converged = err < problem.tol;

  out.plan = Eigen::MatrixXd::Zero(c.rows(), c.cols());
  out.plan(rows, cols) = solver.plan();
  const double row_err = (out.plan.rowwise().sum() - problem.a).cwiseAbs().maxCoeff();
  const double col_err = (out.plan.colwise().sum().transpose() - problem.b).cwiseAbs().maxCoeff();
  out.marginal_error = std::max(row_err, col_err);
  return out;
}

}  // namespace cpe::ot
