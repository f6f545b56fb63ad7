#include "pooltrace/gamp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pooltrace {

namespace {

constexpr double kTiny = 1e-300;

double log_normal_pdf(double x, double mu, double var) {
  double d = x - mu;
  return -0.5 * std::log(2.0 * M_PI * var) - d * d / (2.0 * var);
}

double logistic(double a) {
  // 1 / (1 + exp(a)) without overflow
  if (a > 700.0) return 0.0;
  if (a < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(a));
}

}  // namespace

double ct_denoiser(double v, double prior, double Delta) {
  if (prior <= 0.0) return 0.0;
  if (prior >= 1.0) return 1.0;
  // posterior = {1 + (prior^-1 - 1) exp(-(v - 1/2)/Delta)}^-1
  double a = std::log(1.0 / prior - 1.0) - (v - 0.5) / Delta;
  return logistic(a);
}

std::vector<double> family_denoiser(const std::vector<double>& v_family, double pi_vf,
                                    double pi_ind, double Delta) {
  const std::size_t size = v_family.size();
  std::vector<double> out(size, 0.0);
  if (pi_vf <= 0.0) return out;  // members cannot be infected unless the family is viral

  // log f(v, not viral) and log f(v, viral); the sum over infection
  // patterns factorizes into a per-member two-term product
  double log_nv = pi_vf >= 1.0 ? -std::numeric_limits<double>::infinity() : std::log(1.0 - pi_vf);
  double log_v = std::log(pi_vf);
  for (double v : v_family) {
    double l0 = log_normal_pdf(v, 0.0, Delta);
    double l1 = log_normal_pdf(v, 1.0, Delta);
    log_nv += l0;
    double hi = std::max(l0, l1);
    log_v += hi + std::log(pi_ind * std::exp(l1 - hi) + (1.0 - pi_ind) * std::exp(l0 - hi));
  }
  double pr_viral = std::isinf(log_nv) ? 1.0 : logistic(log_nv - log_v);
  for (std::size_t i = 0; i < size; ++i)
    out[i] = pr_viral * ct_denoiser(v_family[i], pi_ind, Delta);
  return out;
}

std::vector<double> family_denoiser(const std::vector<double>& v_family, double pi_vf,
                                    double pi_ind, const std::vector<double>& Delta) {
  const std::size_t size = v_family.size();
  std::vector<double> out(size, 0.0);
  if (pi_vf <= 0.0) return out;

  double log_nv = pi_vf >= 1.0 ? -std::numeric_limits<double>::infinity() : std::log(1.0 - pi_vf);
  double log_v = std::log(pi_vf);
  for (std::size_t i = 0; i < size; ++i) {
    double l0 = log_normal_pdf(v_family[i], 0.0, Delta[i]);
    double l1 = log_normal_pdf(v_family[i], 1.0, Delta[i]);
    log_nv += l0;
    double hi = std::max(l0, l1);
    log_v += hi + std::log(pi_ind * std::exp(l1 - hi) + (1.0 - pi_ind) * std::exp(l0 - hi));
  }
  double pr_viral = std::isinf(log_nv) ? 1.0 : logistic(log_nv - log_v);
  for (std::size_t i = 0; i < size; ++i)
    out[i] = pr_viral * ct_denoiser(v_family[i], pi_ind, Delta[i]);
  return out;
}

double estimate_pair_prob(double tau, double d, double psi_pair, double lambda, double epsilon) {
  double denom = lambda * tau * d * psi_pair + epsilon;
  return std::exp(-1.0 / denom);
}

CtPriorTracker::CtPriorTracker(int n, int si_days, double epsilon)
    : n_(n), si_days_(si_days), epsilon_(epsilon) {}

void CtPriorTracker::add_contacts(int day, const std::vector<ContactEvent>& events) {
  auto& per = contacts_[day];
  per.resize(n_);
  for (const auto& e : events) {
    per[e.i].push_back({e.j, e.tau, e.d});
    per[e.j].push_back({e.i, e.tau, e.d});
  }
}

void CtPriorTracker::set_estimates(int day, Vec estimates) {
  estimates_[day] = std::move(estimates);
}

bool CtPriorTracker::has_estimates(int day) const { return estimates_.count(day) > 0; }

const std::vector<DayContact>& CtPriorTracker::contacts_of(int day, int i) const {
  auto it = contacts_.find(day);
  if (it == contacts_.end()) return empty_;
  return it->second[i];
}

Vec CtPriorTracker::prior_for_day(int day, double lambda) const {
  Vec log_surv = Vec::Zero(n_);
  for (int d = day - si_days_; d <= day - 1; ++d) {
    auto est_it = estimates_.find(d);
    auto con_it = contacts_.find(d);
    if (est_it == estimates_.end() || con_it == contacts_.end()) continue;
    const Vec& est = est_it->second;
    for (int i = 0; i < n_; ++i) {
      for (const auto& c : con_it->second[i]) {
        double psi_pair = 1.0 - (1.0 - est[i]) * (1.0 - est[c.other]);
        double p = estimate_pair_prob(c.tau, c.d, psi_pair, lambda, epsilon_);
        log_surv[i] += std::log(std::max(1.0 - p, kTiny));
      }
    }
  }
  Vec prior(n_);
  for (int i = 0; i < n_; ++i) prior[i] = 1.0 - std::exp(log_surv[i]);
  return prior;
}

MlLambdaResult ml_lambda(const Vec& pseudo_data, double Delta,
                         const std::function<Vec(double)>& prior_of,
                         double grid_lo, double grid_hi, int grid_points) {
  const int n = static_cast<int>(pseudo_data.size());
  auto loglik = [&](double lam) {
    Vec prior = prior_of(lam);
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      double l1 = log_normal_pdf(pseudo_data[i], 1.0, Delta);
      double l0 = log_normal_pdf(pseudo_data[i], 0.0, Delta);
      double hi = std::max(l0, l1);
      ll += hi + std::log(std::max(prior[i] * std::exp(l1 - hi) +
                                       (1.0 - prior[i]) * std::exp(l0 - hi),
                                   kTiny));
    }
    return ll;
  };

  const double llo = std::log(grid_lo), lhi = std::log(grid_hi);
  int best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  double min_ll = std::numeric_limits<double>::infinity();
  std::vector<double> lams(grid_points);
  for (int t = 0; t < grid_points; ++t) {
    lams[t] = std::exp(llo + (lhi - llo) * t / (grid_points - 1));
    double ll = loglik(lams[t]);
    min_ll = std::min(min_ll, ll);
    if (ll > best_ll) {
      best_ll = ll;
      best = t;
    }
  }
  MlLambdaResult res;
  if (best_ll - min_ll < 1e-9) {
    res.lambda = std::exp(0.5 * (llo + lhi));
    res.degenerate = true;
    return res;
  }
  // golden-section refinement in log-lambda between the grid neighbors
  double a = best > 0 ? std::log(lams[best - 1]) : llo;
  double b = best + 1 < grid_points ? std::log(lams[best + 1]) : lhi;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = loglik(std::exp(x1)), f2 = loglik(std::exp(x2));
  for (int it = 0; it < 40; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = loglik(std::exp(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = loglik(std::exp(x1));
    }
  }
  res.lambda = std::exp(0.5 * (a + b));
  return res;
}

Denoiser make_ct_denoiser(Vec prior) {
  return [prior = std::move(prior)](const Vec& v, const Vec& Delta) {
    Vec out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = ct_denoiser(v[i], prior[i], Delta[i]);
    return out;
  };
}

Denoiser make_family_denoiser(FamilyModel model) {
  return [model = std::move(model)](const Vec& v, const Vec& Delta) {
    Vec out = Vec::Zero(v.size());
    std::vector<double> vf, df;
    for (const auto& fam : model.families) {
      vf.clear();
      df.clear();
      for (int i : fam) {
        vf.push_back(v[i]);
        df.push_back(Delta[i]);
      }
      auto post = family_denoiser(vf, model.pi_vf, model.pi_ind, df);
      for (std::size_t t = 0; t < fam.size(); ++t) out[fam[t]] = post[t];
    }
    return out;
  };
}

GampResult gamp_run(const BinarySparse& A, const std::vector<uint8_t>& y,
                    const Denoiser& denoiser, const BinaryChannelParams& channel,
                    const GampConfig& config) {
  const int m = A.m, n = A.n;
  if (static_cast<int>(y.size()) != m) throw std::invalid_argument("gamp_run: y size mismatch");
  constexpr double kVarFloor = 1e-11;

  GampResult res;
  Vec xhat = denoiser(Vec::Constant(n, 0.5), Vec::Constant(n, 1.0));  // prior mean
  // Per-coordinate variances throughout: averaging them over the
  // population collapses tau once most marginals saturate, which freezes
  // the channel messages and leaves prior/measurement conflicts
  // unresolved for the remaining coordinates.
  Vec tau_x = (xhat.array() * (1.0 - xhat.array())).max(kVarFloor);
  Vec s = Vec::Zero(m);
  Vec p(m), tau_p(m), Ew(m), Varw(m), tau_s(m), marg = xhat;
  Vec v = Vec::Zero(n), Delta = Vec::Constant(n, 1.0);

  for (int it = 0; it < config.max_iters; ++it) {
    matvec(A, tau_x, tau_p);
    tau_p = tau_p.array().max(kVarFloor);
    matvec(A, xhat, p);
    p.array() -= tau_p.array() * s.array();

    // output channel: posterior over the integer pool count w
    for (int i = 0; i < m; ++i) {
      const int r_i = static_cast<int>(A.row_cols[i].size());
      double norm = 0.0, e1 = 0.0, e2 = 0.0, wmax = -1e300;
      std::vector<double> lw(r_i + 1);
      for (int w = 0; w <= r_i; ++w) {
        double lp_y = y[i] ? (w == 0 ? std::log(std::max(channel.p_false_pos, kTiny))
                                     : std::log1p(-channel.p_false_neg))
                           : (w == 0 ? std::log1p(-channel.p_false_pos)
                                     : std::log(std::max(channel.p_false_neg, kTiny)));
        lw[w] = lp_y - (w - p[i]) * (w - p[i]) / (2.0 * tau_p[i]);
        wmax = std::max(wmax, lw[w]);
      }
      for (int w = 0; w <= r_i; ++w) {
        double pw = std::exp(lw[w] - wmax);
        norm += pw;
        e1 += w * pw;
        e2 += static_cast<double>(w) * w * pw;
      }
      e1 /= norm;
      e2 /= norm;
      Ew[i] = e1;
      Varw[i] = std::max(e2 - e1 * e1, 0.0);
      tau_s[i] = std::max((1.0 - Varw[i] / tau_p[i]) / tau_p[i], kVarFloor);
    }

    Vec s_new = (Ew - p).array() / tau_p.array();
    s = config.damping * s_new + (1.0 - config.damping) * s;

    rmatvec(A, tau_s, Delta);
    Delta = Delta.array().max(kVarFloor).inverse();
    rmatvec(A, s, v);
    v = xhat.array() + Delta.array() * v.array();

    Vec marg_new = denoiser(v, Delta);
    Vec xhat_new = config.damping * marg_new + (1.0 - config.damping) * xhat;
    double change = (marg_new - marg).squaredNorm() / n;
    marg = marg_new;
    xhat = xhat_new;
    tau_x = (marg.array() * (1.0 - marg.array())).max(kVarFloor);
    res.iterations = it + 1;

    if (!xhat.allFinite() || xhat.norm() > 1e8) {
      res.diverged = true;
      break;
    }
    if (change < config.tol) {
      res.converged = true;
      break;
    }
  }
  res.marginals = marg;
  res.pseudo_data = v;
  res.Delta_vec = Delta;
  res.Delta = Delta.size() > 0 ? Delta.mean() : 0.0;
  return res;
}

std::pair<double, double> fit_family_params(const Vec& pseudo_data, double Delta,
                                            const std::vector<std::vector<int>>& families,
                                            int grid) {
  double best_ll = -std::numeric_limits<double>::infinity();
  std::pair<double, double> best = {0.5, 0.5};
  std::vector<double> vf;
  for (int a = 0; a < grid; ++a) {
    double pi_vf = (a + 0.5) / grid;
    for (int b = 0; b < grid; ++b) {
      double pi_ind = (b + 0.5) / grid;
      double ll = 0.0;
      for (const auto& fam : families) {
        double log_nv = std::log(1.0 - pi_vf);
        double log_v = std::log(pi_vf);
        for (int i : fam) {
          double l0 = log_normal_pdf(pseudo_data[i], 0.0, Delta);
          double l1 = log_normal_pdf(pseudo_data[i], 1.0, Delta);
          log_nv += l0;
          double hi = std::max(l0, l1);
          log_v += hi + std::log(pi_ind * std::exp(l1 - hi) + (1.0 - pi_ind) * std::exp(l0 - hi));
        }
        double hi = std::max(log_nv, log_v);
        ll += hi + std::log(std::exp(log_nv - hi) + std::exp(log_v - hi));
      }
      if (ll > best_ll) {
        best_ll = ll;
        best = {pi_vf, pi_ind};
      }
    }
  }
  return best;
}

Vec startup_blending(const std::vector<uint8_t>& truth, double p_excluded, double fallback_prior,
                     Rng& rng) {
  const auto n = truth.size();
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] = truth[i];
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_excluded = static_cast<std::size_t>(std::llround(p_excluded * static_cast<double>(n)));
  for (std::size_t t = 0; t < n_excluded && t < n; ++t)
    out[static_cast<Eigen::Index>(idx[t])] = fallback_prior;
  return out;
}

}  // namespace pooltrace
