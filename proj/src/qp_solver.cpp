#include "pcco/qp_solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace pcco {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::IterLimit: return "IterLimit";
  }
  return "Unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

// Canonical form: l <= A x <= u with A = [G; E; box identity].
struct Canonical {
  SpMat A;
  SpMatRow Arow;
  Eigen::VectorXd l, u;
  Eigen::Index n = 0, mG = 0, mE = 0, mB = 0;
  Eigen::Index rows() const { return mG + mE + mB; }
};

Canonical canonicalize(const QpProblem& p) {
  Canonical c;
  c.n = p.num_vars();
  c.mG = p.G.rows();
  c.mE = p.E.rows();
  const bool has_box = p.lo.size() > 0 || p.hi.size() > 0;
  c.mB = has_box ? c.n : 0;
  if (p.G.rows() > 0 && p.G.cols() != c.n) throw std::invalid_argument("G has wrong column count");
  if (p.E.rows() > 0 && p.E.cols() != c.n) throw std::invalid_argument("E has wrong column count");
  if (p.h.size() != c.mG) throw std::invalid_argument("h size mismatch");
  if (p.b.size() != c.mE) throw std::invalid_argument("b size mismatch");

  std::vector<Triplet> trips;
  trips.reserve(p.G.nonZeros() + p.E.nonZeros() + c.mB);
  for (int k = 0; k < p.G.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.G, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < p.E.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.E, k); it; ++it)
      trips.emplace_back(c.mG + it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < c.mB; ++i) trips.emplace_back(c.mG + c.mE + i, i, 1.0);

  c.A.resize(c.rows(), c.n);
  c.A.setFromTriplets(trips.begin(), trips.end());
  c.Arow = c.A;

  c.l.resize(c.rows());
  c.u.resize(c.rows());
  c.l.head(c.mG).setConstant(-kInf);
  c.u.head(c.mG) = p.h;
  c.l.segment(c.mG, c.mE) = p.b;
  c.u.segment(c.mG, c.mE) = p.b;
  if (c.mB > 0) {
    c.l.tail(c.mB) = p.lo.size() ? p.lo : Eigen::VectorXd::Constant(c.n, -kInf);
    c.u.tail(c.mB) = p.hi.size() ? p.hi : Eigen::VectorXd::Constant(c.n, kInf);
  }
  return c;
}

struct Scaling {
  Eigen::VectorXd d;  // variable scaling
  Eigen::VectorXd e;  // row scaling
  double cost = 1.0;
};

// Modified Ruiz equilibration of [[P, A'], [A, 0]] plus cost scaling.
Scaling ruiz_equilibrate(Eigen::MatrixXd& P, Eigen::VectorXd& q, SpMat& A, Eigen::VectorXd& l,
                         Eigen::VectorXd& u, int iterations) {
  const Eigen::Index n = P.rows(), m = A.rows();
  Scaling s;
  s.d = Eigen::VectorXd::Ones(n);
  s.e = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd dd(n), de(m);
  for (int it = 0; it < iterations; ++it) {
    // column norms of the KKT matrix
    for (Eigen::Index j = 0; j < n; ++j) {
      double nrm = P.col(j).lpNorm<Eigen::Infinity>();
      for (SpMat::InnerIterator a(A, j); a; ++a) nrm = std::max(nrm, std::abs(a.value()));
      dd[j] = nrm > 0 ? 1.0 / std::sqrt(nrm) : 1.0;
    }
    de.setZero();
    for (Eigen::Index j = 0; j < n; ++j)
      for (SpMat::InnerIterator a(A, j); a; ++a)
        de[a.row()] = std::max(de[a.row()], std::abs(a.value()));
    for (Eigen::Index i = 0; i < m; ++i) de[i] = de[i] > 0 ? 1.0 / std::sqrt(de[i]) : 1.0;

    P = dd.asDiagonal() * P * dd.asDiagonal();
    q = dd.cwiseProduct(q);
    A = de.asDiagonal() * A * dd.asDiagonal();
    l = l.cwiseProduct(de);
    u = u.cwiseProduct(de);
    s.d = s.d.cwiseProduct(dd);
    s.e = s.e.cwiseProduct(de);

    // cost scaling toward unit gradient magnitude
    double col_mean = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) col_mean += P.col(j).lpNorm<Eigen::Infinity>();
    col_mean /= static_cast<double>(n);
    const double gamma_den = std::max(col_mean, q.lpNorm<Eigen::Infinity>());
    const double gamma = gamma_den > 0 ? 1.0 / gamma_den : 1.0;
    P *= gamma;
    q *= gamma;
    s.cost *= gamma;
  }
  return s;
}

SpMat build_kkt(const Eigen::MatrixXd& P, const SpMat& A, double sigma,
                const Eigen::VectorXd& rho) {
  const Eigen::Index n = P.rows(), m = A.rows();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(n) * n + 2 * A.nonZeros() + m);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = P(i, j) + (i == j ? sigma : 0.0);
      if (v != 0.0) trips.emplace_back(i, j, v);
    }
  }
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SpMat::InnerIterator it(A, k); it; ++it) {
      trips.emplace_back(n + it.row(), it.col(), it.value());
      trips.emplace_back(it.col(), n + it.row(), it.value());
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -1.0 / rho[i]);
  SpMat K(n + m, n + m);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

Eigen::VectorXd clamp_to(const Eigen::VectorXd& v, const Eigen::VectorXd& l,
                         const Eigen::VectorXd& u) {
  return v.cwiseMax(l).cwiseMin(u);
}

struct Residuals {
  double rp = kInf, rd = kInf, eps_p = 0, eps_d = 0, comp = kInf;
};

Residuals compute_residuals(const QpProblem& prob, const Canonical& can,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& z, double eps_abs, double eps_rel) {
  Residuals r;
  const Eigen::VectorXd ax = can.A * x;
  const Eigen::VectorXd qx = prob.Q * x;
  const Eigen::VectorXd aty = can.A.transpose() * y;
  r.rp = (ax - z).lpNorm<Eigen::Infinity>();
  r.rd = (qx + prob.c + aty).lpNorm<Eigen::Infinity>();
  r.eps_p = eps_abs + eps_rel * std::max(ax.lpNorm<Eigen::Infinity>(),
                                         z.lpNorm<Eigen::Infinity>());
  r.eps_d = eps_abs + eps_rel * std::max({qx.lpNorm<Eigen::Infinity>(),
                                          prob.c.lpNorm<Eigen::Infinity>(),
                                          aty.lpNorm<Eigen::Infinity>()});
  double comp = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double slack = kInf;
    if (std::isfinite(can.l[i])) slack = std::min(slack, std::abs(z[i] - can.l[i]));
    if (std::isfinite(can.u[i])) slack = std::min(slack, std::abs(can.u[i] - z[i]));
    if (std::isfinite(slack)) comp = std::max(comp, std::abs(y[i]) * slack);
  }
  r.comp = comp;
  return r;
}

// Primal infeasibility certificate from a dual direction.
bool primal_infeasibility_certificate(const Canonical& can, const Eigen::VectorXd& dy,
                                      double eps) {
  const double norm_dy = dy.lpNorm<Eigen::Infinity>();
  if (norm_dy <= 0.0) return false;
  if ((can.A.transpose() * dy).lpNorm<Eigen::Infinity>() > eps * norm_dy) return false;
  double support = 0.0;
  for (Eigen::Index i = 0; i < dy.size(); ++i) {
    if (dy[i] > 0) {
      if (!std::isfinite(can.u[i])) {
        if (dy[i] > 1e-10 * norm_dy) return false;
      } else {
        support += can.u[i] * dy[i];
      }
    } else if (dy[i] < 0) {
      if (!std::isfinite(can.l[i])) {
        if (-dy[i] > 1e-10 * norm_dy) return false;
      } else {
        support += can.l[i] * dy[i];
      }
    }
  }
  return support < -eps * norm_dy;
}

// Dual infeasibility certificate (unbounded ray) from a primal direction.
bool dual_infeasibility_certificate(const QpProblem& prob, const Canonical& can,
                                    const Eigen::VectorXd& dx, double eps) {
  const double norm_dx = dx.lpNorm<Eigen::Infinity>();
  if (norm_dx <= 0.0) return false;
  if ((prob.Q * dx).lpNorm<Eigen::Infinity>() > eps * norm_dx) return false;
  if (prob.c.dot(dx) > -eps * norm_dx) return false;
  const Eigen::VectorXd adx = can.A * dx;
  for (Eigen::Index i = 0; i < adx.size(); ++i) {
    const bool lf = std::isfinite(can.l[i]), uf = std::isfinite(can.u[i]);
    if (lf && uf) {
      if (std::abs(adx[i]) > eps * norm_dx) return false;
    } else if (uf) {  // one-sided <= u
      if (adx[i] > eps * norm_dx) return false;
    } else if (lf) {
      if (adx[i] < -eps * norm_dx) return false;
    }
  }
  return true;
}

struct PolishOutcome {
  bool accepted = false;   // better than the current iterate
  bool certified = false;  // KKT-clean on its own: a verified optimum
  Eigen::VectorXd x, y;
  Residuals res;
};

// Equality-constrained KKT solve on the detected active set, with duplicate
// rows coalesced and iterative refinement against the unregularized system.
// dual_cut > 0 keeps only at-bound rows whose multiplier clears the cut
// (used for certification from a non-converged iterate); dual_cut == 0
// admits rows on either signal.
PolishOutcome polish(const QpProblem& prob, const Canonical& can, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y, const Eigen::VectorXd& z,
                     const Residuals& current, double eps_abs, double eps_rel,
                     double dual_cut = 0.0) {
  PolishOutcome out;
  const Eigen::Index n = can.n, m = can.rows();

  // side -1 lower, +1 upper, 0 equality.
  std::vector<std::pair<Eigen::Index, int>> active;
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool lf = std::isfinite(can.l[i]), uf = std::isfinite(can.u[i]);
    if (lf && uf && can.u[i] - can.l[i] < 1e-14) {
      active.emplace_back(i, 0);  // equality row
      continue;
    }
    const double slack_l = lf ? z[i] - can.l[i] : kInf;
    const double slack_u = uf ? can.u[i] - z[i] : kInf;
    const double atol_l = 1e-7 * (1.0 + (lf ? std::abs(can.l[i]) : 0.0));
    const double atol_u = 1e-7 * (1.0 + (uf ? std::abs(can.u[i]) : 0.0));
    const bool at_lower = lf && slack_l <= atol_l && slack_l <= slack_u;
    const bool at_upper = uf && slack_u <= atol_u && !at_lower;
    if (dual_cut > 0.0) {
      if (at_lower && y[i] < -dual_cut)
        active.emplace_back(i, -1);
      else if (at_upper && y[i] > dual_cut)
        active.emplace_back(i, +1);
    } else {
      if (y[i] < -1e-9 || at_lower)
        active.emplace_back(i, -1);
      else if (y[i] > 1e-9 || at_upper)
        active.emplace_back(i, +1);
    }
  }

  Eigen::VectorXd x_new, y_new;
  Residuals res;
  bool signs_ok = false;

  // Solve on the guessed set; rows whose multiplier comes out on the wrong
  // side get dropped and the system is re-solved (a few dual cleanup
  // rounds are enough in practice).
  for (int drop_round = 0; drop_round < 8 && !active.empty(); ++drop_round) {
    // Coalesce exact duplicate rows (same coefficients and same bound).
    std::map<std::vector<std::pair<Eigen::Index, double>>, std::vector<std::size_t>> unique_rows;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const auto [row, side] = active[k];
      std::vector<std::pair<Eigen::Index, double>> key;
      for (SpMatRow::InnerIterator it(can.Arow, row); it; ++it)
        key.emplace_back(it.col(), it.value());
      const double bound = side == 0 ? can.u[row] : (side < 0 ? can.l[row] : can.u[row]);
      key.emplace_back(-1, bound);
      unique_rows[key].push_back(k);
    }

    const Eigen::Index ka = static_cast<Eigen::Index>(unique_rows.size());
    std::vector<Triplet> trips;
    Eigen::VectorXd rhs(n + ka);
    rhs.head(n) = -prob.c;
    std::vector<const std::vector<std::size_t>*> members_of(ka);
    {
      Eigen::Index r = 0;
      for (const auto& [key, members] : unique_rows) {
        for (const auto& [col, val] : key)
          if (col >= 0) {
            trips.emplace_back(n + r, col, val);
            trips.emplace_back(col, n + r, val);
          }
        rhs[n + r] = key.back().second;  // the bound entry
        members_of[r] = &members;
        ++r;
      }
    }
    const double delta = 1e-9;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double v = prob.Q(i, j) + (i == j ? delta : 0.0);
        if (v != 0.0) trips.emplace_back(i, j, v);
      }
    for (Eigen::Index r = 0; r < ka; ++r) trips.emplace_back(n + r, n + r, -delta);
    SpMat K(n + ka, n + ka);
    K.setFromTriplets(trips.begin(), trips.end());

    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    if (ldlt.info() != Eigen::Success) return out;

    // Refine against the unregularized KKT.
    auto apply_unregularized = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd w(n + ka);
      w.head(n) = prob.Q * v.head(n);
      w.tail(ka).setZero();
      for (Eigen::Index r = 0; r < ka; ++r) {
        const std::size_t k0 = members_of[r]->front();
        const Eigen::Index row = active[k0].first;
        double dot = 0.0;
        for (SpMatRow::InnerIterator it(can.Arow, row); it; ++it) {
          dot += it.value() * v[it.col()];
          w[it.col()] += it.value() * v[n + r];
        }
        w[n + r] = dot;
      }
      return w;
    };
    Eigen::VectorXd sol = ldlt.solve(rhs);
    for (int round = 0; round < 3; ++round) {
      const Eigen::VectorXd resid = rhs - apply_unregularized(sol);
      if (resid.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
      sol += ldlt.solve(resid);
    }

    x_new = sol.head(n);
    y_new = Eigen::VectorXd::Zero(m);
    for (Eigen::Index r = 0; r < ka; ++r) {
      const double share = sol[n + r] / static_cast<double>(members_of[r]->size());
      for (std::size_t k : *members_of[r]) y_new[active[k].first] = share;
    }

    const Eigen::VectorXd z_new = clamp_to(can.A * x_new, can.l, can.u);
    res = compute_residuals(prob, can, x_new, y_new, z_new, eps_abs, eps_rel);

    signs_ok = true;
    const double ytol = eps_abs + eps_rel * y_new.lpNorm<Eigen::Infinity>();
    std::vector<std::pair<Eigen::Index, int>> kept;
    kept.reserve(active.size());
    for (const auto& [row, side] : active) {
      const bool wrong = (side < 0 && y_new[row] > ytol) || (side > 0 && y_new[row] < -ytol);
      if (wrong)
        signs_ok = false;
      else
        kept.push_back({row, side});
    }
    if (signs_ok || kept.size() == active.size()) break;
    active.swap(kept);
  }
  if (x_new.size() == 0) return out;

  out.certified = signs_ok && res.rp <= res.eps_p && res.rd <= res.eps_d;
  if (out.certified ||
      (std::max(res.rp, res.rd) < std::max(current.rp, current.rd) && res.rp <= res.eps_p)) {
    out.accepted = true;
    out.x = std::move(x_new);
    out.y = std::move(y_new);
    out.res = res;
  }
  return out;
}

}  // namespace

QpSolver::QpSolver(SolveOptions opts) : opts_(std::move(opts)) {}

SolveResult solve_qp(const QpProblem& prob, const SolveOptions& opts) {
  QpSolver solver(opts);
  return solver.solve(prob);
}

SolveResult QpSolver::solve(const QpProblem& prob) {
  warm_ = WarmState{};
  return solve_dispatch(prob);
}

std::vector<SolveResult> QpSolver::solve_sequence(const std::vector<QpProblem>& probs) {
  std::vector<SolveResult> results;
  results.reserve(probs.size());
  warm_ = WarmState{};
  for (const auto& p : probs) results.push_back(solve_dispatch(p));
  return results;
}

SolveResult QpSolver::solve_dispatch(const QpProblem& prob) {
  if (opts_.row_generation_threshold > 0 && prob.G.rows() > opts_.row_generation_threshold)
    return solve_row_generation(prob);
  return solve_internal(prob, warm_);
}

// Outer loop for stacked programs: solve on a working subset of the
// inequality rows, pull in the most violated excluded rows, and stop once
// the subset optimum satisfies every row. The subset optimum is then the
// full optimum (excluded rows carry zero multipliers).
SolveResult QpSolver::solve_row_generation(const QpProblem& prob) {
  const Eigen::Index n = prob.num_vars();
  const Eigen::Index mg = prob.G.rows();
  const SpMatRow grow(prob.G);

  std::vector<char> in_set(mg, 0);
  std::vector<Eigen::Index> working;
  QpProblem sub;
  sub.Q = prob.Q;
  sub.c = prob.c;
  sub.c0 = prob.c0;
  sub.E = prob.E;
  sub.b = prob.b;
  sub.lo = prob.lo;
  sub.hi = prob.hi;

  SolveResult res;
  WarmState inner_warm = WarmState{};
  const int max_rounds = 60;
  for (int round = 0; round < max_rounds; ++round) {
    // Assemble the working-set program.
    std::vector<Triplet> trips;
    Eigen::VectorXd h(working.size());
    for (std::size_t k = 0; k < working.size(); ++k) {
      for (SpMatRow::InnerIterator it(grow, working[k]); it; ++it)
        trips.emplace_back(static_cast<Eigen::Index>(k), it.col(), it.value());
      h[static_cast<Eigen::Index>(k)] = prob.h[working[k]];
    }
    sub.G.resize(static_cast<Eigen::Index>(working.size()), n);
    sub.G.setFromTriplets(trips.begin(), trips.end());
    sub.h = h;

    res = solve_internal(sub, inner_warm);
    inner_warm = warm_;
    inner_warm.m = -1;  // row set changes between rounds; reuse x only
    if (res.status == SolveStatus::Infeasible) break;  // subset infeasible => full infeasible

    // Violations over the excluded rows. A subset solve that ran away
    // (unbounded relaxation) still points at the rows that would have
    // fenced it in, so row selection continues from its iterate.
    const Eigen::VectorXd gx = prob.G * res.x;
    std::vector<std::pair<double, Eigen::Index>> viol;
    for (Eigen::Index i = 0; i < mg; ++i) {
      if (in_set[i]) continue;
      const double v = gx[i] - prob.h[i];
      if (v > opts_.eps_abs * (1.0 + std::abs(prob.h[i]))) viol.emplace_back(v, i);
    }
    if (res.status == SolveStatus::IterLimit && viol.empty()) break;
    if (viol.empty()) {
      // Done: spread the subset duals back over the full row set.
      Eigen::VectorXd full_dual = Eigen::VectorXd::Zero(mg);
      for (std::size_t k = 0; k < working.size(); ++k)
        full_dual[working[k]] = res.dual_ineq[static_cast<Eigen::Index>(k)];
      res.dual_ineq = full_dual;
      // Residuals reported against the full program.
      Canonical can = canonicalize(prob);
      Eigen::VectorXd y(can.rows());
      y.head(mg) = res.dual_ineq;
      y.segment(mg, prob.E.rows()) = res.dual_eq;
      if (can.mB > 0) y.tail(can.mB) = res.dual_box;
      const Eigen::VectorXd z = clamp_to(can.A * res.x, can.l, can.u);
      const Residuals r =
          compute_residuals(prob, can, res.x, y, z, opts_.eps_abs, opts_.eps_rel);
      res.primal_residual = r.rp;
      res.dual_residual = r.rd;
      res.complementarity = r.comp;
      return res;
    }
    std::sort(viol.begin(), viol.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first
                                                                           : a.second < b.second; });
    // Stacked rows come in near-duplicate families; admitting two hundred
    // near-parallel rows at once wrecks the inner conditioning. Each round
    // takes the most violated representative of each direction instead.
    std::vector<Eigen::VectorXd> batch_dirs;
    Eigen::Index taken = 0;
    for (const auto& [v, i] : viol) {
      if (taken >= opts_.row_generation_batch) break;
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(n + 1);
      for (SpMatRow::InnerIterator it(grow, i); it; ++it) dir[it.col()] = it.value();
      dir[n] = prob.h[i];
      const double scale = dir.head(n).lpNorm<Eigen::Infinity>();
      if (scale > 0) dir /= scale;
      bool novel = true;
      for (const auto& d : batch_dirs) {
        if ((d - dir).lpNorm<Eigen::Infinity>() < 1e-3) {
          novel = false;
          break;
        }
      }
      if (!novel) continue;
      batch_dirs.push_back(dir);
      in_set[i] = 1;
      working.push_back(i);
      ++taken;
    }
    std::sort(working.begin(), working.end());
  }
  if (res.status == SolveStatus::Optimal) {
    res.status = SolveStatus::IterLimit;
    res.detail = "row generation did not settle within the round cap";
  }
  // duals from the last reduced solve, spread over the full row set
  if (res.dual_ineq.size() != mg) {
    Eigen::VectorXd full_dual = Eigen::VectorXd::Zero(mg);
    for (std::size_t k = 0; k < working.size() &&
                            static_cast<Eigen::Index>(k) < res.dual_ineq.size();
         ++k)
      full_dual[working[k]] = res.dual_ineq[static_cast<Eigen::Index>(k)];
    res.dual_ineq = full_dual;
  }
  return res;
}

SolveResult QpSolver::solve_internal(const QpProblem& prob, const WarmState& warm) {
  if (prob.Q.rows() != prob.Q.cols() || prob.Q.rows() != prob.num_vars())
    throw std::invalid_argument("Q must be n x n");
  Canonical can = canonicalize(prob);
  const Eigen::Index n = can.n, m = can.rows();

  // Scaled working copies.
  Eigen::MatrixXd P = prob.Q;
  Eigen::VectorXd q = prob.c;
  SpMat As = can.A;
  Eigen::VectorXd ls = can.l, us = can.u;
  Scaling sc;
  if (opts_.scaling && m > 0) {
    sc = ruiz_equilibrate(P, q, As, ls, us, opts_.scaling_iterations);
  } else {
    sc.d = Eigen::VectorXd::Ones(n);
    sc.e = Eigen::VectorXd::Ones(m);
  }

  Eigen::VectorXd rho_vec(m);
  auto fill_rho = [&](double base) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool eq = std::isfinite(ls[i]) && std::isfinite(us[i]) && us[i] - ls[i] < 1e-14;
      rho_vec[i] = eq ? base * opts_.rho_eq_scale : base;
    }
  };
  double rho_base = opts_.rho;
  fill_rho(rho_base);

  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(build_kkt(P, As, opts_.sigma, rho_vec));
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("KKT factorization failed");

  // Scaled iterates (x_bar = D^-1 x, z_bar = E z, y_bar = c E^-1 y).
  Eigen::VectorXd xb = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd zb = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd yb = Eigen::VectorXd::Zero(m);
  if (warm.valid && warm.n == n) {
    xb = warm.x.cwiseQuotient(sc.d);
    if (warm.m == m) {
      zb = warm.z.cwiseProduct(sc.e);
      yb = (sc.cost * warm.y).cwiseQuotient(sc.e);
    } else {
      zb = clamp_to(As * xb, ls, us);
    }
  } else if (m > 0) {
    zb = clamp_to(As * xb, ls, us);
  }

  std::ofstream trace;
  if (!opts_.trace_csv.empty()) {
    trace.open(opts_.trace_csv);
    trace << "iteration,rho,primal_residual,dual_residual\n";
  }

  SolveResult result;
  result.detail = "";
  Eigen::VectorXd x_prev_check = sc.d.cwiseProduct(xb);
  Eigen::VectorXd y_prev_check = sc.e.cwiseProduct(yb) / sc.cost;
  Eigen::VectorXd x, y, z;
  Residuals res;
  int iter = 0;
  bool converged = false;
  bool polished_already = false;

  auto unscale = [&] {
    x = sc.d.cwiseProduct(xb);
    z = zb.cwiseQuotient(sc.e);
    y = sc.e.cwiseProduct(yb) / sc.cost;
  };

  // Certification attempt: an equality-constrained solve on the current
  // active-set guess can finish long before the splitting iteration does.
  auto try_certify = [&]() -> bool {
    if (!opts_.polish || m == 0) return false;
    PolishOutcome po;
    const double yscale = y.size() ? y.lpNorm<Eigen::Infinity>() : 0.0;
    for (double cut : {1e-2 * yscale, 1e-4 * yscale, 0.0}) {
      po = polish(prob, can, x, y, z, res, opts_.eps_abs, opts_.eps_rel, cut);
      if (po.certified) break;
      if (cut == 0.0) return false;
    }
    if (!po.certified) return false;
    // Warm state keeps the raw splitting iterate: a repeated solve then
    // reproduces this certification from the same state, bit for bit.
    warm_.x = x;
    warm_.y = y;
    warm_.z = z;
    warm_.n = n;
    warm_.m = m;
    warm_.valid = true;
    x = po.x;
    y = po.y;
    z = clamp_to(can.A * x, can.l, can.u);
    res = po.res;
    converged = true;
    polished_already = true;
    return true;
  };

  for (;; ++iter) {
    if (iter % opts_.check_interval == 0 || iter >= opts_.max_iterations) {
      unscale();
      res = compute_residuals(prob, can, x, y, z, opts_.eps_abs, opts_.eps_rel);
      if (trace.is_open())
        trace << iter << "," << rho_base << "," << res.rp << "," << res.rd << "\n";
      if (res.rp <= res.eps_p && res.rd <= res.eps_d) {
        converged = true;
        break;
      }
      const bool certify_now =
          (iter > 0 && opts_.polish_interval > 0 && iter % opts_.polish_interval == 0) ||
          (iter == 0 && warm.valid) || iter >= opts_.max_iterations;
      if (certify_now && try_certify()) break;
      if (iter > 0) {
        const Eigen::VectorXd dy = y - y_prev_check;
        if (primal_infeasibility_certificate(can, dy, opts_.eps_infeasible)) {
          result.status = SolveStatus::Infeasible;
          result.detail = "primal infeasibility certificate (dual direction)";
          result.iterations = iter;
          result.x = x;
          result.primal_residual = res.rp;
          result.dual_residual = res.rd;
          result.complementarity = res.comp;
          return result;
        }
        const Eigen::VectorXd dx = x - x_prev_check;
        if (dual_infeasibility_certificate(prob, can, dx, opts_.eps_infeasible)) {
          result.status = SolveStatus::IterLimit;
          result.detail = "dual infeasibility certificate (objective unbounded along a ray)";
          result.iterations = iter;
          result.x = x;
          result.primal_residual = res.rp;
          result.dual_residual = res.rd;
          result.complementarity = res.comp;
          return result;
        }
      }
      x_prev_check = x;
      y_prev_check = y;
      if (iter >= opts_.max_iterations) break;

      if (opts_.adaptive_rho && m > 0 && iter > 0) {
        // Residuals normalized by iterate magnitudes, as in standard
        // operator-splitting practice.
        const Eigen::VectorXd ax = can.A * x;
        const Eigen::VectorXd aty = can.A.transpose() * y;
        const double np =
            res.rp / std::max({ax.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>(), 1e-12});
        const double nd =
            res.rd / std::max({(prob.Q * x).lpNorm<Eigen::Infinity>(),
                               prob.c.lpNorm<Eigen::Infinity>(),
                               aty.lpNorm<Eigen::Infinity>(), 1e-12});
        const double ratio = std::sqrt(np / std::max(nd, 1e-30));
        if (ratio > 5.0 || ratio < 0.2) {
          rho_base = std::clamp(rho_base * ratio, 1e-6, 1e6);
          fill_rho(rho_base);
          ldlt.compute(build_kkt(P, As, opts_.sigma, rho_vec));
          if (ldlt.info() != Eigen::Success)
            throw std::runtime_error("KKT refactorization failed");
        }
      }
    }

    // ADMM step
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = opts_.sigma * xb - q;
    rhs.tail(m) = zb - yb.cwiseQuotient(rho_vec);
    const Eigen::VectorXd sol = ldlt.solve(rhs);
    const Eigen::VectorXd x_tilde = sol.head(n);
    const Eigen::VectorXd nu = sol.tail(m);
    const Eigen::VectorXd z_tilde = zb + (nu - yb).cwiseQuotient(rho_vec);

    const double a = opts_.relax_alpha;
    xb = a * x_tilde + (1.0 - a) * xb;
    const Eigen::VectorXd z_relax = a * z_tilde + (1.0 - a) * zb;
    const Eigen::VectorXd z_next = clamp_to(z_relax + yb.cwiseQuotient(rho_vec), ls, us);
    yb += rho_vec.cwiseProduct(z_relax - z_next);
    zb = z_next;
  }

  result.iterations = iter;
  if (!polished_already) {
    unscale();
    // Warm-start state is the raw converged iterate, so a repeated solve
    // terminates at iteration zero with the same polish input.
    warm_.x = x;
    warm_.y = y;
    warm_.z = z;
    warm_.n = n;
    warm_.m = m;
    warm_.valid = converged;
    if (converged && opts_.polish && m > 0) {
      PolishOutcome po = polish(prob, can, x, y, z, res, opts_.eps_abs, opts_.eps_rel);
      if (po.accepted) {
        x = po.x;
        y = po.y;
        z = clamp_to(can.A * x, can.l, can.u);
        res = po.res;
      }
    }
  }

  result.x = x;
  result.objective = prob.objective_value(x);
  result.primal_residual = res.rp;
  result.dual_residual = res.rd;
  result.complementarity = res.comp;
  result.dual_ineq = y.head(can.mG);
  result.dual_eq = y.segment(can.mG, can.mE);
  result.dual_box = y.tail(can.mB);
  if (converged) {
    result.status = SolveStatus::Optimal;
  } else {
    result.status = SolveStatus::IterLimit;
    result.detail = "iteration cap reached (residual stall)";
  }
  return result;
}

}  // namespace pcco
