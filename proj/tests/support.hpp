#pragma once

// Independent reference implementations and fixture builders for the tests.
// Nothing here calls into the code under test except for type wrappers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "cpe/embedcore.hpp"
#include "cpe/rng.hpp"

namespace cpe::testkit {

inline Eigen::MatrixXd random_unit_rows(CounterRng& rng, Eigen::Index n, Eigen::Index d) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
    m.row(i) /= m.row(i).norm();
  }
  return m;
}

inline embed::EmbeddingVector to_vector(const Eigen::RowVectorXd& r) {
  return embed::EmbeddingVector(std::vector<double>(r.data(), r.data() + r.size()));
}

// Rows whose Gram matrix is `gram`: the rows of its Cholesky factor.
inline Eigen::MatrixXd rows_with_gram(const Eigen::MatrixXd& gram) {
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  return llt.matrixL();
}

inline Eigen::MatrixXd constant_gram(Eigen::Index n, double off) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Constant(n, n, off);
  g.diagonal().setOnes();
  return g;
}

// H0 deaths by sweeping every distinct edge weight as a threshold and
// counting connected components of the threshold graph with a DFS.
inline std::vector<double> threshold_sweep_deaths(const Eigen::MatrixXd& d) {
  const Eigen::Index n = d.rows();
  std::set<double> weights;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) weights.insert(d(i, j));

  auto components = [&](double t) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    int count = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
      if (seen[static_cast<std::size_t>(s)]) continue;
      ++count;
      std::vector<Eigen::Index> stack{s};
      seen[static_cast<std::size_t>(s)] = true;
      while (!stack.empty()) {
        const Eigen::Index u = stack.back();
        stack.pop_back();
        for (Eigen::Index v = 0; v < n; ++v) {
          if (v != u && !seen[static_cast<std::size_t>(v)] && d(u, v) <= t) {
            seen[static_cast<std::size_t>(v)] = true;
            stack.push_back(v);
          }
        }
      }
    }
    return count;
  };

  std::vector<double> deaths;
  int before = static_cast<int>(n);
  for (double t : weights) {
    const int after = components(t);
    for (int k = after; k < before; ++k) deaths.push_back(t);
    before = after;
  }
  return deaths;
}

// Plain Sinkhorn-Knopp matrix scaling in long double, no stabilization.
// Only suitable for well-conditioned kernels.
inline Eigen::MatrixXd sinkhorn_knopp(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                      double epsilon, double tol = 1e-12, int max_iters = 1'000'000) {
  const Eigen::Index n = cost.rows(), m = cost.cols();
  std::vector<long double> k(static_cast<std::size_t>(n * m));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) k[static_cast<std::size_t>(i * m + j)] = std::exp(-(long double)cost(i, j) / epsilon);
  std::vector<long double> u(static_cast<std::size_t>(n), 1.0L), v(static_cast<std::size_t>(m), 1.0L);
  for (int it = 0; it < max_iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      long double s = 0;
      for (Eigen::Index j = 0; j < m; ++j) s += k[static_cast<std::size_t>(i * m + j)] * v[static_cast<std::size_t>(j)];
      u[static_cast<std::size_t>(i)] = a(i) / s;
    }
    long double err = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      long double s = 0;
      for (Eigen::Index i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i * m + j)] * u[static_cast<std::size_t>(i)];
      v[static_cast<std::size_t>(j)] = b(j) / s;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      long double s = 0;
      for (Eigen::Index j = 0; j < m; ++j)
        s += u[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(i * m + j)] * v[static_cast<std::size_t>(j)];
      err = std::max(err, std::fabs(s - (long double)a(i)));
    }
    if (err < tol) break;
  }
  Eigen::MatrixXd p(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      p(i, j) = static_cast<double>(u[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(i * m + j)] *
                                    v[static_cast<std::size_t>(j)]);
  return p;
}

// Central finite differences of f over every entry of x.
inline Eigen::MatrixXd finite_difference(const std::function<double(const Eigen::MatrixXd&)>& f,
                                         const Eigen::MatrixXd& x, double step) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Eigen::MatrixXd hi = x, lo = x;
      hi(i, j) += step;
      lo(i, j) -= step;
      g(i, j) = (f(hi) - f(lo)) / (2.0 * step);
    }
  }
  return g;
}

// Softmax of cosine scores / tau, evaluated directly.
inline std::vector<double> softmax_oracle(const std::vector<double>& s, double tau) {
  const double mx = *std::max_element(s.begin(), s.end());
  std::vector<double> e(s.size());
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) z += e[i] = std::exp((s[i] - mx) / tau);
  for (double& x : e) x /= z;
  return e;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cpe-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace cpe::testkit
