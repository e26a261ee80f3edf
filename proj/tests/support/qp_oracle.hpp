// Test-only reference solver: exhaustive active-set enumeration with a
// dense KKT solve per candidate set. Independent of the production solver
// path; usable up to ~12 inequality rows.
#ifndef PCCO_TESTS_QP_ORACLE_HPP
#define PCCO_TESTS_QP_ORACLE_HPP

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "pcco/qp_solver.hpp"

namespace pcco_test {

struct OracleResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x;
};

// minimize 0.5 x'Qx + c'x + c0  s.t.  E x = b, G x <= h (dense, box folded
// into G by the caller). Enumerates every subset of inequality rows as the
// active set, solves the equality KKT, keeps KKT-consistent candidates.
inline OracleResult enumerate_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, double c0,
                                 const Eigen::MatrixXd& E, const Eigen::VectorXd& b,
                                 const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                                 double tol = 1e-7) {
  const int n = static_cast<int>(c.size());
  const int mg = static_cast<int>(G.rows());
  const int me = static_cast<int>(E.rows());
  OracleResult best;

  auto try_active = [&](const std::vector<int>& act) {
    const int k = static_cast<int>(act.size());
    const int dim = n + me + k;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd rhs(dim);
    K.topLeftCorner(n, n) = Q + 1e-12 * Eigen::MatrixXd::Identity(n, n);
    if (me > 0) {
      K.block(n, 0, me, n) = E;
      K.block(0, n, n, me) = E.transpose();
    }
    for (int i = 0; i < k; ++i) {
      K.block(n + me + i, 0, 1, n) = G.row(act[i]);
      K.block(0, n + me + i, n, 1) = G.row(act[i]).transpose();
    }
    rhs.head(n) = -c;
    rhs.segment(n, me) = b;
    for (int i = 0; i < k; ++i) rhs[n + me + i] = h[act[i]];

    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) return;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);

    // primal feasibility
    if (mg > 0 && ((G * x - h).array() > tol * (1.0 + h.array().abs())).any()) return;
    if (me > 0 && ((E * x - b).cwiseAbs().array() > tol * (1.0 + b.array().abs())).any()) return;
    // dual feasibility on the active rows
    for (int i = 0; i < k; ++i)
      if (sol[n + me + i] < -tol) return;

    const double obj = 0.5 * x.dot(Q * x) + c.dot(x) + c0;
    if (!best.feasible || obj < best.objective) {
      best.feasible = true;
      best.objective = obj;
      best.x = x;
    }
  };

  std::vector<int> act;
  // all subsets of rows with |subset| <= n (more cannot be independent)
  const int limit = 1 << mg;
  for (int mask = 0; mask < limit; ++mask) {
    act.clear();
    for (int i = 0; i < mg; ++i)
      if (mask & (1 << i)) act.push_back(i);
    if (static_cast<int>(act.size()) > n) continue;
    try_active(act);
  }
  return best;
}

// Convenience overload for the production QpProblem type (folds the box).
inline OracleResult enumerate_qp(const pcco::QpProblem& p, double tol = 1e-7) {
  const int n = static_cast<int>(p.num_vars());
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  const Eigen::MatrixXd G = Eigen::MatrixXd(p.G);
  for (int i = 0; i < G.rows(); ++i) {
    rows.push_back(G.row(i));
    rhs.push_back(p.h[i]);
  }
  for (int i = 0; i < n; ++i) {
    if (p.lo.size() && std::isfinite(p.lo[i])) {
      rows.push_back(-Eigen::RowVectorXd::Unit(n, i));
      rhs.push_back(-p.lo[i]);
    }
    if (p.hi.size() && std::isfinite(p.hi[i])) {
      rows.push_back(Eigen::RowVectorXd::Unit(n, i));
      rhs.push_back(p.hi[i]);
    }
  }
  Eigen::MatrixXd Gall(rows.size(), n);
  Eigen::VectorXd hall(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Gall.row(static_cast<int>(i)) = rows[i];
    hall[static_cast<int>(i)] = rhs[i];
  }
  return enumerate_qp(p.Q, p.c, p.c0, Eigen::MatrixXd(p.E), p.b, Gall, hall, tol);
}

}  // namespace pcco_test

#endif
