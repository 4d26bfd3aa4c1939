#pragma once

// Independent reference computations used only by tests.

#include <Eigen/Dense>
#include <vector>

#include "qtl/birth_death.hpp"

namespace qtl::testing {

// Solves pi Q = 0, sum pi = 1 on {0..n-1} with arrivals blocked at n-1, by dense LU.
inline std::vector<double> dense_stationary(const Policy& p, QueueLength n) {
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lam = i + 1 < m ? p.arrival(i) : 0.0;
    const double mu = p.service(i);
    if (i + 1 < m) gen(i, i + 1) = lam;
    if (i > 0) gen(i, i - 1) = mu;
    gen(i, i) = -(lam + (i > 0 ? mu : 0.0));
  }
  Eigen::MatrixXd a = gen.transpose();
  a.row(m - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b(m - 1) = 1.0;
  const Eigen::VectorXd x = a.partialPivLu().solve(b);
  return {x.data(), x.data() + m};
}

}  // namespace qtl::testing
