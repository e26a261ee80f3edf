#ifndef PCCO_QP_SOLVER_HPP
#define PCCO_QP_SOLVER_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <string>
#include <vector>

namespace pcco {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Convex quadratic program
//   minimize    0.5 x'Qx + c'x + c0
//   subject to  E x = b,  G x <= h,  lo <= x <= hi.
// Q must be symmetric positive semidefinite. lo/hi may be empty (no box)
// or hold +-inf entries.
struct QpProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  double c0 = 0.0;
  Eigen::SparseMatrix<double> G;
  Eigen::VectorXd h;
  Eigen::SparseMatrix<double> E;
  Eigen::VectorXd b;
  Eigen::VectorXd lo, hi;

  Eigen::Index num_vars() const { return c.size(); }
  double objective_value(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(Q * x) + c.dot(x) + c0;
  }
};

enum class SolveStatus { Optimal, Infeasible, IterLimit };

const char* to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::IterLimit;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double primal_residual = kInf;
  double dual_residual = kInf;
  double complementarity = kInf;
  Eigen::VectorXd dual_ineq;  // multipliers for G rows, >= 0 at optima
  Eigen::VectorXd dual_eq;    // multipliers for E rows
  Eigen::VectorXd dual_box;   // multipliers for box rows (signed)
  std::string detail;         // infeasibility certificate / stall notes
};

struct SolveOptions {
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  double eps_infeasible = 1e-7;  // certificate threshold
  int max_iterations = 50000;
  int check_interval = 25;
  bool polish = true;
  int polish_interval = 250;   // iterations between active-set certification tries
  double sigma = 1e-6;
  double rho = 0.1;
  double rho_eq_scale = 1e3;  // stiffer penalty on equality rows
  double relax_alpha = 1.6;
  bool adaptive_rho = false;  // adaptation tends to oscillate on the stacked near-LP programs
  bool scaling = true;
  int scaling_iterations = 10;
  // Stacked programs carry thousands of rows of which at most a handful
  // bind; above this row count the solver works on a violated-row subset
  // and re-verifies against the full set (exact, deterministic). 0 disables.
  Eigen::Index row_generation_threshold = 1200;
  Eigen::Index row_generation_batch = 64;
  std::string trace_csv;  // residual trace (one line per check) when set
};

// Deterministic operator-splitting QP solver with a cached KKT
// factorization and an active-set polishing step. A single solve is
// single-threaded; distinct solvers are independent.
class QpSolver {
public:
  explicit QpSolver(SolveOptions opts = {});

  // Cold solve (clears any warm state first).
  SolveResult solve(const QpProblem& prob);

  // Solves in order, warm starting each from the previous converged
  // iterate when dimensions allow. Warm starting never changes converged
  // answers beyond tolerance; an identical repeated program returns
  // bit-identical results.
  std::vector<SolveResult> solve_sequence(const std::vector<QpProblem>& probs);

  const SolveOptions& options() const { return opts_; }
  SolveOptions& options() { return opts_; }

private:
  struct WarmState {
    Eigen::VectorXd x, y, z;  // unscaled
    Eigen::Index n = -1, m = -1;
    bool valid = false;
  };

  SolveResult solve_internal(const QpProblem& prob, const WarmState& warm);
  SolveResult solve_dispatch(const QpProblem& prob);
  SolveResult solve_row_generation(const QpProblem& prob);

  SolveOptions opts_;
  WarmState warm_;
};

// Convenience wrapper: one cold solve with the given options.
SolveResult solve_qp(const QpProblem& prob, const SolveOptions& opts = {});

}  // namespace pcco

#endif  // PCCO_QP_SOLVER_HPP
