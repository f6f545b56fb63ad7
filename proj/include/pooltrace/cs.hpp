#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pooltrace/graph.hpp"
#include "pooltrace/matrix.hpp"

namespace pooltrace {

struct SolverConfig {
  double rho = -1.0;   // < 0 requests cross-validation
  int max_iters = 20000;
  double tol = 1e-7;   // KKT / duality-gap residual target
  double tau_n = 0.2;  // positivity threshold on estimated viral load
  int cv_folds = 5;
  int cv_grid = 30;
};

/// Problem left after COMP: pools with positive readings and the samples
/// not touching any zero pool.
struct ReducedProblem {
  std::vector<int> kept_pools;
  std::vector<int> kept_samples;
  std::vector<int> definite_negatives;
  BinarySparse sub;  // kept_pools x kept_samples
  Vec sub_y;
};

struct SolveStats {
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // KKT residual (lasso) or duality gap (sqrt family)
  double objective = 0.0;
};

enum class M2Algorithm { comp, comp_lasso, comp_sqrt_glasso, comp_sqrt_oglasso };

std::string to_string(M2Algorithm a);

struct DecodeResult {
  std::vector<uint8_t> positive;  // length n
  Vec x_hat;                      // length n, estimated viral loads
  std::vector<int> sure_positives;
  double rho_used = 0.0;
  SolveStats stats;
};

ReducedProblem comp_reduce(const BinarySparse& A, const Vec& y);

std::vector<int> dd_sure_positives(const ReducedProblem& reduced);

/// min ||y - Ax||_2^2 + rho ||x||_1  s.t. x >= 0, by projected FISTA
/// with backtracking. Certifies a projected-subgradient KKT residual.
Vec lasso_solve(const BinarySparse& A, const Vec& y, double rho, const SolverConfig& config,
                SolveStats* stats = nullptr);

/// min ||y - Ax||_2 + rho sum_g ||x_g||_2  s.t. x >= 0, disjoint groups.
/// Smoothed fidelity + FISTA; certifies a duality gap on the unsmoothed
/// objective.
Vec sqrt_glasso_solve(const BinarySparse& A, const Vec& y,
                      const std::vector<std::vector<int>>& groups, double rho,
                      const SolverConfig& config, SolveStats* stats = nullptr);

/// Overlapping groups via the latent-variable expansion: duplicate each
/// coordinate per membership, solve the disjoint problem, sum the copies.
Vec sqrt_oglasso_solve(const BinarySparse& A, const Vec& y,
                       const std::vector<std::vector<int>>& groups, double rho,
                       const SolverConfig& config, SolveStats* stats = nullptr);

using SubSolver = std::function<Vec(const BinarySparse&, const Vec&, double, SolveStats*)>;

double cross_validate_rho(const BinarySparse& A, const Vec& y, const SubSolver& solver,
                          int folds, const std::vector<double>& rho_grid, Rng& rng);

std::vector<double> default_rho_grid(const BinarySparse& A, const Vec& y, M2Algorithm algorithm,
                                     int points);

DecodeResult decode_m2(const BinarySparse& A, const Vec& y, M2Algorithm algorithm,
                       const GroupStructure& groups, const SolverConfig& config, Rng& rng);

}  // namespace pooltrace
