#ifndef PCCO_DDA_HPP
#define PCCO_DDA_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pcco/dataset.hpp"
#include "pcco/qp_solver.hpp"

namespace pcco {

// Problem family: a convex quadratic objective plus, per data point, a
// block of m affine inequality rows produced by a pure function of the
// point. Base equality rows and box bounds are data-independent.
struct ProblemTemplate {
  Eigen::MatrixXd Q;  // n x n symmetric PSD
  Eigen::VectorXd c;
  double c0 = 0.0;

  int rows_per_point = 0;  // m
  // Returns (G_xi, h_xi) with G_xi m x n, meaning G_xi x <= h_xi.
  std::function<std::pair<Eigen::MatrixXd, Eigen::VectorXd>(const UncertaintyPoint&)> generator;

  Eigen::SparseMatrix<double> base_E;  // base_E x = base_b
  Eigen::VectorXd base_b;
  Eigen::SparseMatrix<double> base_G;  // base_G x <= base_h
  Eigen::VectorXd base_h;
  Eigen::VectorXd lo, hi;  // box bounds, may be empty

  int expected_r1 = -1;  // -1 accepts any
  int expected_r2 = -1;

  Eigen::Index num_vars() const { return c.size(); }
};

// Symmetry and PSD probe (smallest eigenvalue >= -tol); throws on failure.
void validate_template(const ProblemTemplate& tmpl, double tol = 1e-8);

// The stacked deterministic program for one data set, with per-row
// provenance (which data point produced it; -1 for base rows).
struct AssembledProgram {
  QpProblem qp;
  std::vector<int> provenance;  // one entry per qp.G row
  Eigen::Index rows_per_point = 0;
  std::size_t num_points = 0;
  Eigen::Index base_ineq_rows = 0;

  Eigen::Index generated_rows() const {
    return static_cast<Eigen::Index>(num_points) * rows_per_point;
  }
  // All constraint rows (inequality + equality); box bounds not counted.
  Eigen::Index total_rows() const { return qp.G.rows() + qp.E.rows(); }
};

// Stacks the generated rows in data order (duplicates produce duplicate
// rows), then the base inequality rows. Empty data is allowed and yields
// the base program.
AssembledProgram assemble(const ProblemTemplate& tmpl,
                          const std::vector<UncertaintyPoint>& data);

struct FeasibilityCheck {
  bool feasible = false;
  double worst_violation = 0.0;
  int worst_row = -1;  // index into [G rows, then E rows, then box entries]
};

// Max violation across inequality rows, equality rows and box bounds,
// compared against an absolute tolerance.
FeasibilityCheck check_feasible(const AssembledProgram& prog, const Eigen::VectorXd& x,
                                double tol = 1e-6);

struct BoundaryReport {
  std::vector<int> active_rows;      // qp.G rows with |g_i(x*)| <= tol
  std::vector<int> boundary_points;  // data indices whose removal moves the optimum
  std::size_t boundary_count = 0;    // B(z)
  std::size_t boundary_constraints = 0;  // B_c: active rows owned by boundary points
  double full_objective = 0.0;
};

// Two-stage detection: active-row screen, then a leave-one-out re-solve
// per candidate point. A point is boundary-forming when dropping all of
// its rows changes the optimal objective by more than rel_tol relatively.
BoundaryReport find_boundary_points(const ProblemTemplate& tmpl,
                                    const std::vector<UncertaintyPoint>& data,
                                    const SolveResult& optimum, double active_tol = 1e-6,
                                    double rel_tol = 1e-7,
                                    const SolveOptions& solve_opts = {});

// Deterministic plain-text export of the stacked program (grammar in
// FORMATS.md) for cross-checking against external solvers.
std::string export_text(const AssembledProgram& prog);

}  // namespace pcco

#endif  // PCCO_DDA_HPP
