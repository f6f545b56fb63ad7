#include "pooltrace/cs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pooltrace {

std::string to_string(M2Algorithm a) {
  switch (a) {
    case M2Algorithm::comp: return "comp";
    case M2Algorithm::comp_lasso: return "comp-lasso";
    case M2Algorithm::comp_sqrt_glasso: return "comp-sqrt-glasso";
    case M2Algorithm::comp_sqrt_oglasso: return "comp-sqrt-oglasso";
  }
  return "?";
}

ReducedProblem comp_reduce(const BinarySparse& A, const Vec& y) {
  if (y.size() != A.m) throw std::invalid_argument("comp_reduce: dimension mismatch");
  ReducedProblem red;
  std::vector<uint8_t> eliminated(A.n, 0);
  for (int i = 0; i < A.m; ++i) {
    if (y[i] == 0.0) {
      for (int j : A.row_cols[i]) eliminated[j] = 1;
    } else {
      red.kept_pools.push_back(i);
    }
  }
  std::vector<int> col_map(A.n, -1);
  for (int j = 0; j < A.n; ++j) {
    if (eliminated[j]) {
      red.definite_negatives.push_back(j);
    } else {
      col_map[j] = static_cast<int>(red.kept_samples.size());
      red.kept_samples.push_back(j);
    }
  }
  red.sub.m = static_cast<int>(red.kept_pools.size());
  red.sub.n = static_cast<int>(red.kept_samples.size());
  red.sub.row_cols.resize(red.sub.m);
  red.sub.col_rows.resize(red.sub.n);
  red.sub_y.resize(red.sub.m);
  for (int ii = 0; ii < red.sub.m; ++ii) {
    int i = red.kept_pools[ii];
    red.sub_y[ii] = y[i];
    for (int j : A.row_cols[i])
      if (col_map[j] >= 0) {
        red.sub.row_cols[ii].push_back(col_map[j]);
        red.sub.col_rows[col_map[j]].push_back(ii);
      }
  }
  return red;
}

std::vector<int> dd_sure_positives(const ReducedProblem& reduced) {
  std::vector<int> out;
  for (int ii = 0; ii < reduced.sub.m; ++ii)
    if (reduced.sub.row_cols[ii].size() == 1)
      out.push_back(reduced.kept_samples[reduced.sub.row_cols[ii][0]]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

double spectral_norm_sq(const BinarySparse& A, int iters = 30) {
  if (A.n == 0 || A.m == 0) return 0.0;
  Vec v = Vec::Ones(A.n);
  double lam = 1.0;
  for (int t = 0; t < iters; ++t) {
    Vec w = rmatvec(A, matvec(A, v));
    lam = w.norm();
    if (lam == 0) return 0.0;
    v = w / lam;
  }
  return lam;  // largest eigenvalue of A^T A
}

Vec prox_l1_nonneg(const Vec& z, double t) {
  return (z.array() - t).max(0.0).matrix();
}

Vec prox_group_l2_nonneg(const Vec& z, double t, const std::vector<std::vector<int>>& groups) {
  Vec x = z.array().max(0.0).matrix();
  for (const auto& g : groups) {
    double nrm = 0.0;
    for (int j : g) nrm += x[j] * x[j];
    nrm = std::sqrt(nrm);
    double scale = nrm > t ? 1.0 - t / nrm : 0.0;
    for (int j : g) x[j] *= scale;
  }
  return x;
}

double lasso_kkt_residual(const BinarySparse& A, const Vec& y, const Vec& x, double rho) {
  Vec grad = 2.0 * rmatvec(A, matvec(A, x) - y);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double v = grad[j] + rho;
    worst = std::max(worst, x[j] > 1e-12 ? std::abs(v) : std::max(0.0, -v));
  }
  return worst;
}

double group_norm(const Vec& x, const std::vector<std::vector<int>>& groups) {
  double s = 0.0;
  for (const auto& g : groups) {
    double nrm = 0.0;
    for (int j : g) nrm += x[j] * x[j];
    s += std::sqrt(nrm);
  }
  return s;
}

// Dual value of a candidate u for max <y,u> s.t. ||u|| <= 1 and
// ||(A_g^T u)^+|| <= rho for every group: scale u down into the feasible
// set (all constraints are positively homogeneous) and evaluate.
double dual_value(const BinarySparse& A, const Vec& y, const Vec& u, double rho,
                  const std::vector<std::vector<int>>& groups) {
  double un = u.norm();
  if (un == 0.0) return 0.0;
  Vec atu = rmatvec(A, u);
  double worst = 0.0;
  for (const auto& g : groups) {
    double nrm = 0.0;
    for (int j : g) {
      double v = std::max(atu[j], 0.0);
      nrm += v * v;
    }
    worst = std::max(worst, std::sqrt(nrm));
  }
  double scale = std::min(1.0 / un, worst > 0.0 ? rho / worst : 1.0 / un);
  return scale * y.dot(u);
}

// Duality gap for min ||y-Ax|| + rho*sum ||x_g||, x >= 0. Two dual
// candidates: the residual direction r/||r||, and a least-squares KKT
// point solving A_S^T u = rho * x_S / ||x_g|| on the support (the
// residual direction degenerates when the optimum interpolates y).
double sqrt_glasso_gap(const BinarySparse& A, const Vec& y, const Vec& x, double rho,
                       const std::vector<std::vector<int>>& groups, double* primal_out,
                       const Vec* extra_dual = nullptr) {
  Vec r = y - matvec(A, x);
  double primal = r.norm() + rho * group_norm(x, groups);
  if (primal_out) *primal_out = primal;
  double dual = 0.0;
  if (r.norm() > 0.0) dual = dual_value(A, y, r, rho, groups);
  if (extra_dual && extra_dual->norm() > 0.0)
    dual = std::max(dual, dual_value(A, y, *extra_dual, rho, groups));

  double xmax = x.size() > 0 ? x.maxCoeff() : 0.0;
  std::vector<int> support;
  std::vector<double> target;
  for (const auto& g : groups) {
    double nrm = 0.0;
    for (int j : g) nrm += x[j] * x[j];
    nrm = std::sqrt(nrm);
    if (nrm <= 1e-12 * std::max(1.0, xmax)) continue;
    for (int j : g) {
      if (x[j] > 1e-12 * std::max(1.0, xmax)) {
        support.push_back(j);
        target.push_back(rho * x[j] / nrm);
      }
    }
  }
  if (!support.empty() && (int)support.size() <= A.m * 4) {
    Eigen::MatrixXd as(A.m, (Eigen::Index)support.size());
    as.setZero();
    for (std::size_t k = 0; k < support.size(); ++k)
      for (int i : A.col_rows[support[k]]) as(i, (Eigen::Index)k) = 1.0;
    Eigen::Map<const Vec> t(target.data(), (Eigen::Index)target.size());
    Vec u = as.transpose().bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(t);
    dual = std::max(dual, dual_value(A, y, u, rho, groups));
  }
  return primal - dual;
}

// Ensure every column belongs to some group; uncovered columns become
// singletons.
std::vector<std::vector<int>> cover_columns(std::vector<std::vector<int>> groups, int n) {
  std::vector<uint8_t> covered(n, 0);
  for (const auto& g : groups)
    for (int j : g) covered[j] = 1;
  for (int j = 0; j < n; ++j)
    if (!covered[j]) groups.push_back({j});
  return groups;
}

}  // namespace

Vec lasso_solve(const BinarySparse& A, const Vec& y, double rho, const SolverConfig& config,
                SolveStats* stats) {
  const int n = A.n;
  SolveStats st;
  if (n == 0) {
    if (stats) *stats = st;
    return Vec();
  }
  double L = std::max(2.0 * spectral_norm_sq(A), 1e-12);
  Vec x = Vec::Zero(n), z = x, x_prev = x;
  double tk = 1.0;
  Vec resid(A.m), grad(n);
  for (int it = 0; it < config.max_iters; ++it) {
    matvec(A, z, resid);
    resid -= y;
    rmatvec(A, resid, grad);
    grad *= 2.0;
    double step = 1.0 / L;
    double fz = resid.squaredNorm();
    Vec x_new;
    // backtracking on the quadratic upper bound
    for (int bt = 0; bt < 60; ++bt) {
      x_new = prox_l1_nonneg(z - step * grad, step * rho);
      Vec diff = x_new - z;
      double fx = (matvec(A, x_new) - y).squaredNorm();
      if (fx <= fz + grad.dot(diff) + diff.squaredNorm() / (2.0 * step) + 1e-12 * std::abs(fz))
        break;
      step *= 0.5;
    }
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    z = x_new + ((tk - 1.0) / t_next) * (x_new - x);
    // restart momentum when the step goes uphill
    if ((x_new - x).dot(x - x_prev) < 0) {
      tk = 1.0;
      z = x_new;
    } else {
      tk = t_next;
    }
    x_prev = x;
    x = x_new;
    st.iterations = it + 1;
    if ((it + 1) % 10 == 0 || it + 1 == config.max_iters) {
      st.residual = lasso_kkt_residual(A, y, x, rho);
      if (st.residual < config.tol) {
        st.converged = true;
        break;
      }
    }
  }
  st.residual = lasso_kkt_residual(A, y, x, rho);
  st.converged = st.residual < config.tol;
  st.objective = (matvec(A, x) - y).squaredNorm() + rho * x.lpNorm<1>();
  if (stats) *stats = st;
  return x;
}

Vec sqrt_glasso_solve(const BinarySparse& A, const Vec& y,
                      const std::vector<std::vector<int>>& groups_in, double rho,
                      const SolverConfig& config, SolveStats* stats) {
  const int n = A.n;
  SolveStats st;
  if (n == 0) {
    if (stats) *stats = st;
    return Vec();
  }
  auto groups = cover_columns(groups_in, n);
  const double gap_scale = std::max(1.0, y.norm());

  // Primal-dual hybrid gradient on min_x ||Ax - y|| + rho * sum ||x_g||,
  // x >= 0. Constant step sizes 1/||A|| keep the iteration conditioned
  // even when the optimum interpolates y (where gradient schemes on a
  // smoothed fidelity stall), and the dual iterate u -> (Ax - y)/||.||
  // provides a certificate that stays informative at zero residual.
  double sigma_a = std::sqrt(std::max(spectral_norm_sq(A), 1e-12));
  double tau = 1.0 / sigma_a, sig = 1.0 / sigma_a;
  Vec x = Vec::Zero(n), xbar = x, u = Vec::Zero(A.m);
  Vec ax(A.m), atu(n);
  for (int it = 0; it < config.max_iters; ++it) {
    matvec(A, xbar, ax);
    u += sig * (ax - y);
    double un = u.norm();
    if (un > 1.0) u /= un;
    rmatvec(A, u, atu);
    Vec x_new = prox_group_l2_nonneg(x - tau * atu, tau * rho, groups);
    xbar = 2.0 * x_new - x;
    x = x_new;
    st.iterations = it + 1;
    if ((it + 1) % 20 == 0 || it + 1 == config.max_iters) {
      Vec cand = -u;
      st.residual = sqrt_glasso_gap(A, y, x, rho, groups, &st.objective, &cand) / gap_scale;
      if (st.residual < config.tol) {
        st.converged = true;
        break;
      }
    }
  }
  Vec cand = -u;
  st.residual = sqrt_glasso_gap(A, y, x, rho, groups, &st.objective, &cand) / gap_scale;
  st.converged = st.residual < config.tol;
  if (stats) *stats = st;
  return x;
}

Vec sqrt_oglasso_solve(const BinarySparse& A, const Vec& y,
                       const std::vector<std::vector<int>>& groups_in, double rho,
                       const SolverConfig& config, SolveStats* stats) {
  auto groups = cover_columns(groups_in, A.n);
  // latent expansion: one column copy per (group, member) pair
  BinarySparse ex;
  ex.m = A.m;
  std::vector<int> copy_of;  // expanded column -> original column
  std::vector<std::vector<int>> ex_groups;
  for (const auto& g : groups) {
    std::vector<int> eg;
    for (int j : g) {
      eg.push_back(static_cast<int>(copy_of.size()));
      copy_of.push_back(j);
      ex.col_rows.push_back(A.col_rows[j]);
    }
    ex_groups.push_back(std::move(eg));
  }
  ex.n = static_cast<int>(copy_of.size());
  ex.row_cols.resize(ex.m);
  for (int jx = 0; jx < ex.n; ++jx)
    for (int i : ex.col_rows[jx]) ex.row_cols[i].push_back(jx);

  Vec v = sqrt_glasso_solve(ex, y, ex_groups, rho, config, stats);
  Vec x = Vec::Zero(A.n);
  for (int jx = 0; jx < ex.n; ++jx) x[copy_of[jx]] += v[jx];
  return x;
}

double cross_validate_rho(const BinarySparse& A, const Vec& y, const SubSolver& solver,
                          int folds, const std::vector<double>& rho_grid, Rng& rng) {
  if (A.m < folds || folds < 2) throw std::invalid_argument("cross_validate_rho: too few pools");
  std::vector<int> pool_fold(A.m);
  for (int i = 0; i < A.m; ++i) pool_fold[i] = i % folds;
  std::shuffle(pool_fold.begin(), pool_fold.end(), rng);

  auto subproblem = [&](int fold, bool train, BinarySparse& S, Vec& ys) {
    std::vector<int> rows;
    for (int i = 0; i < A.m; ++i)
      if ((pool_fold[i] != fold) == train) rows.push_back(i);
    S.m = static_cast<int>(rows.size());
    S.n = A.n;
    S.row_cols.clear();
    S.col_rows.assign(A.n, {});
    ys.resize(S.m);
    for (int ii = 0; ii < S.m; ++ii) {
      S.row_cols.push_back(A.row_cols[rows[ii]]);
      ys[ii] = y[rows[ii]];
      for (int j : S.row_cols.back()) S.col_rows[j].push_back(ii);
    }
  };

  double best_rho = rho_grid.back();
  double best_err = std::numeric_limits<double>::infinity();
  // scan from the largest rho down so ties resolve to the stronger penalty
  for (auto it = rho_grid.rbegin(); it != rho_grid.rend(); ++it) {
    double rho = *it;
    double err = 0.0;
    for (int fold = 0; fold < folds; ++fold) {
      BinarySparse Atr, Ate;
      Vec ytr, yte;
      subproblem(fold, true, Atr, ytr);
      subproblem(fold, false, Ate, yte);
      Vec xh = solver(Atr, ytr, rho, nullptr);
      err += (matvec(Ate, xh) - yte).squaredNorm();
    }
    if (err < best_err * (1.0 - 1e-12)) {
      best_err = err;
      best_rho = rho;
    }
  }
  return best_rho;
}

std::vector<double> default_rho_grid(const BinarySparse& A, const Vec& y, M2Algorithm algorithm,
                                     int points) {
  Vec aty = rmatvec(A, y);
  double scale;
  if (algorithm == M2Algorithm::comp_lasso) {
    scale = 2.0 * aty.lpNorm<Eigen::Infinity>();  // x=0 optimal beyond this
  } else {
    double yn = std::max(y.norm(), 1e-12);
    scale = aty.cwiseMax(0.0).lpNorm<Eigen::Infinity>() / yn;
  }
  scale = std::max(scale, 1e-12);
  std::vector<double> grid(points);
  const double lo = std::log(1e-4), hi = std::log(1.0);
  for (int t = 0; t < points; ++t)
    grid[t] = scale * std::exp(lo + (hi - lo) * t / (points - 1));
  return grid;
}

DecodeResult decode_m2(const BinarySparse& A, const Vec& y, M2Algorithm algorithm,
                       const GroupStructure& groups, const SolverConfig& config, Rng& rng) {
  DecodeResult result;
  result.positive.assign(A.n, 0);
  result.x_hat = Vec::Zero(A.n);

  ReducedProblem red = comp_reduce(A, y);
  result.sure_positives = dd_sure_positives(red);

  if (algorithm == M2Algorithm::comp) {
    for (int j : red.kept_samples) result.positive[j] = 1;
    return result;
  }
  if (red.sub.n == 0) return result;

  // solve in a normalized domain so tolerances are scale-free
  const double scale = std::max(red.sub_y.lpNorm<Eigen::Infinity>(), 1e-12);
  Vec ys = red.sub_y / scale;

  // remap groups onto kept samples
  std::vector<int> col_map(A.n, -1);
  for (std::size_t t = 0; t < red.kept_samples.size(); ++t)
    col_map[red.kept_samples[t]] = static_cast<int>(t);
  std::vector<std::vector<int>> sub_groups;
  for (const auto& g : groups.groups) {
    std::vector<int> sg;
    for (int j : g)
      if (col_map[j] >= 0) sg.push_back(col_map[j]);
    if (!sg.empty()) sub_groups.push_back(std::move(sg));
  }

  SubSolver solver;
  switch (algorithm) {
    case M2Algorithm::comp_lasso:
      solver = [&](const BinarySparse& S, const Vec& yy, double rho, SolveStats* st) {
        return lasso_solve(S, yy, rho, config, st);
      };
      break;
    case M2Algorithm::comp_sqrt_glasso:
      solver = [&](const BinarySparse& S, const Vec& yy, double rho, SolveStats* st) {
        return sqrt_glasso_solve(S, yy, sub_groups, rho, config, st);
      };
      break;
    case M2Algorithm::comp_sqrt_oglasso:
      solver = [&](const BinarySparse& S, const Vec& yy, double rho, SolveStats* st) {
        return sqrt_oglasso_solve(S, yy, sub_groups, rho, config, st);
      };
      break;
    default:
      throw std::invalid_argument("decode_m2: bad algorithm");
  }

  double rho = config.rho;
  if (rho < 0) {
    auto grid = default_rho_grid(red.sub, ys, algorithm, config.cv_grid);
    rho = cross_validate_rho(red.sub, ys, solver, config.cv_folds, grid, rng);
  }
  result.rho_used = rho;
  Vec xs = solver(red.sub, ys, rho, &result.stats);

  for (std::size_t t = 0; t < red.kept_samples.size(); ++t) {
    double load = xs[static_cast<Eigen::Index>(t)] * scale;
    result.x_hat[red.kept_samples[t]] = load;
    if (load > config.tau_n) result.positive[red.kept_samples[t]] = 1;
  }
  for (int j : result.sure_positives) result.positive[j] = 1;  // DD override after thresholding
  return result;
}

}  // namespace pooltrace
