#include "pcco/dda.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pcco {

void validate_template(const ProblemTemplate& tmpl, double tol) {
  const Eigen::Index n = tmpl.num_vars();
  if (tmpl.Q.rows() != n || tmpl.Q.cols() != n)
    throw std::invalid_argument("template Q must be n x n");
  if ((tmpl.Q - tmpl.Q.transpose()).lpNorm<Eigen::Infinity>() > tol)
    throw std::invalid_argument("template Q is not symmetric");
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tmpl.Q, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol)
      throw std::invalid_argument("template Q is not positive semidefinite");
  }
  if (tmpl.rows_per_point <= 0 && tmpl.generator)
    throw std::invalid_argument("rows_per_point must be positive");
}

AssembledProgram assemble(const ProblemTemplate& tmpl,
                          const std::vector<UncertaintyPoint>& data) {
  const Eigen::Index n = tmpl.num_vars();
  const Eigen::Index m = tmpl.rows_per_point;
  AssembledProgram prog;
  prog.rows_per_point = m;
  prog.num_points = data.size();
  prog.base_ineq_rows = tmpl.base_G.rows();

  const Eigen::Index gen_rows = static_cast<Eigen::Index>(data.size()) * m;
  const Eigen::Index total_ineq = gen_rows + tmpl.base_G.rows();

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd h(total_ineq);
  prog.provenance.assign(total_ineq, -1);

  for (std::size_t k = 0; k < data.size(); ++k) {
    if (tmpl.expected_r1 >= 0 && data[k].r1() != tmpl.expected_r1)
      throw std::invalid_argument("data point " + std::to_string(k) +
                                  " has wrong integer dimension");
    if (tmpl.expected_r2 >= 0 && data[k].r2() != tmpl.expected_r2)
      throw std::invalid_argument("data point " + std::to_string(k) +
                                  " has wrong real dimension");
    auto [gk, hk] = tmpl.generator(data[k]);
    if (gk.rows() != m || hk.size() != m || gk.cols() != n)
      throw std::invalid_argument("generator returned wrong row count for point " +
                                  std::to_string(k));
    const Eigen::Index row0 = static_cast<Eigen::Index>(k) * m;
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index col = 0; col < n; ++col) {
        const double v = gk(r, col);
        if (v != 0.0) trips.emplace_back(row0 + r, col, v);
      }
      h[row0 + r] = hk[r];
      prog.provenance[row0 + r] = static_cast<int>(k);
    }
  }
  for (int c = 0; c < tmpl.base_G.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(tmpl.base_G, c); it; ++it)
      trips.emplace_back(gen_rows + it.row(), it.col(), it.value());
  if (tmpl.base_G.rows() > 0) h.tail(tmpl.base_G.rows()) = tmpl.base_h;

  prog.qp.Q = tmpl.Q;
  prog.qp.c = tmpl.c;
  prog.qp.c0 = tmpl.c0;
  prog.qp.G.resize(total_ineq, n);
  prog.qp.G.setFromTriplets(trips.begin(), trips.end());
  prog.qp.h = std::move(h);
  prog.qp.E = tmpl.base_E;
  prog.qp.b = tmpl.base_b;
  prog.qp.lo = tmpl.lo;
  prog.qp.hi = tmpl.hi;
  return prog;
}

FeasibilityCheck check_feasible(const AssembledProgram& prog, const Eigen::VectorXd& x,
                                double tol) {
  if (!x.allFinite()) throw std::invalid_argument("x must be finite");
  FeasibilityCheck out;
  out.worst_violation = 0.0;
  int row = 0;
  const Eigen::VectorXd gx = prog.qp.G * x;
  for (Eigen::Index i = 0; i < gx.size(); ++i, ++row) {
    const double v = gx[i] - prog.qp.h[i];
    if (v > out.worst_violation) {
      out.worst_violation = v;
      out.worst_row = row;
    }
  }
  const Eigen::VectorXd ex = prog.qp.E * x;
  for (Eigen::Index i = 0; i < ex.size(); ++i, ++row) {
    const double v = std::abs(ex[i] - prog.qp.b[i]);
    if (v > out.worst_violation) {
      out.worst_violation = v;
      out.worst_row = row;
    }
  }
  for (Eigen::Index i = 0; i < prog.qp.lo.size(); ++i, ++row) {
    const double v = std::max(prog.qp.lo[i] - x[i], x[i] - (prog.qp.hi.size() ? prog.qp.hi[i] : kInf));
    if (v > out.worst_violation) {
      out.worst_violation = v;
      out.worst_row = row;
    }
  }
  out.feasible = out.worst_violation <= tol;
  return out;
}

BoundaryReport find_boundary_points(const ProblemTemplate& tmpl,
                                    const std::vector<UncertaintyPoint>& data,
                                    const SolveResult& optimum, double active_tol,
                                    double rel_tol, const SolveOptions& solve_opts) {
  if (optimum.status != SolveStatus::Optimal)
    throw std::invalid_argument("boundary detection needs an Optimal solve");
  BoundaryReport report;
  report.full_objective = optimum.objective;

  AssembledProgram full = assemble(tmpl, data);
  const Eigen::VectorXd gx = full.qp.G * optimum.x;
  std::set<int> candidates;
  for (Eigen::Index i = 0; i < gx.size(); ++i) {
    if (std::abs(gx[i] - full.qp.h[i]) <= active_tol) {
      report.active_rows.push_back(static_cast<int>(i));
      if (full.provenance[i] >= 0) candidates.insert(full.provenance[i]);
    }
  }

  // Leave-one-out re-solves, warm started along the sequence. Inactive
  // points cannot move the optimum, so only active contributors are tried.
  std::vector<QpProblem> probs;
  std::vector<int> cand_list(candidates.begin(), candidates.end());
  probs.reserve(cand_list.size());
  for (int k : cand_list) {
    std::vector<UncertaintyPoint> reduced;
    reduced.reserve(data.size() - 1);
    for (std::size_t i = 0; i < data.size(); ++i)
      if (static_cast<int>(i) != k) reduced.push_back(data[i]);
    probs.push_back(assemble(tmpl, reduced).qp);
  }
  QpSolver solver(solve_opts);
  const std::vector<SolveResult> results = solver.solve_sequence(probs);
  for (std::size_t i = 0; i < cand_list.size(); ++i) {
    if (results[i].status != SolveStatus::Optimal)
      throw std::runtime_error("leave-one-out re-solve failed for point " +
                               std::to_string(cand_list[i]) + ": " +
                               to_string(results[i].status));
    const double diff = std::abs(results[i].objective - optimum.objective);
    if (diff > rel_tol * (1.0 + std::abs(optimum.objective)))
      report.boundary_points.push_back(cand_list[i]);
  }
  report.boundary_count = report.boundary_points.size();
  std::set<int> boundary_set(report.boundary_points.begin(), report.boundary_points.end());
  for (int row : report.active_rows)
    if (full.provenance[row] >= 0 && boundary_set.count(full.provenance[row]))
      ++report.boundary_constraints;
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

std::string export_text(const AssembledProgram& prog) {
  std::ostringstream os;
  const Eigen::Index n = prog.qp.num_vars();
  os << "program vars " << n << " ineq " << prog.qp.G.rows() << " eq " << prog.qp.E.rows()
     << "\n";
  os << "objective";
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      if (prog.qp.Q(i, j) != 0.0)
        os << " q " << i << " " << j << " " << fmt(i == j ? 0.5 * prog.qp.Q(i, j)
                                                          : prog.qp.Q(i, j));
  for (Eigen::Index i = 0; i < n; ++i)
    if (prog.qp.c[i] != 0.0) os << " l " << i << " " << fmt(prog.qp.c[i]);
  if (prog.qp.c0 != 0.0) os << " k " << fmt(prog.qp.c0);
  os << "\n";
  const Eigen::SparseMatrix<double, Eigen::RowMajor> grow(prog.qp.G);
  for (Eigen::Index r = 0; r < grow.rows(); ++r) {
    os << "le " << prog.provenance[r];
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(grow, r); it; ++it)
      os << " " << it.col() << " " << fmt(it.value());
    os << " <= " << fmt(prog.qp.h[r]) << "\n";
  }
  const Eigen::SparseMatrix<double, Eigen::RowMajor> erow(prog.qp.E);
  for (Eigen::Index r = 0; r < erow.rows(); ++r) {
    os << "eq -1";
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(erow, r); it; ++it)
      os << " " << it.col() << " " << fmt(it.value());
    os << " = " << fmt(prog.qp.b[r]) << "\n";
  }
  for (Eigen::Index i = 0; i < prog.qp.lo.size(); ++i) {
    if (std::isfinite(prog.qp.lo[i]) || (prog.qp.hi.size() && std::isfinite(prog.qp.hi[i]))) {
      os << "bd " << i << " " << fmt(prog.qp.lo[i]) << " "
         << fmt(prog.qp.hi.size() ? prog.qp.hi[i] : kInf) << "\n";
    }
  }
  return os.str();
}

}  // namespace pcco
