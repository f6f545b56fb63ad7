#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pooltrace/gamp.hpp"
#include "pooltrace/matrix.hpp"

using namespace pooltrace;

namespace {

double gauss_pdf(double x, double mean, double var) {
  return std::exp(-(x - mean) * (x - mean) / (2 * var)) / std::sqrt(2 * M_PI * var);
}

// Bayes-rule oracle for the two-Gaussian mixture.
double ct_oracle(double v, double prior, double Delta) {
  double a = prior * gauss_pdf(v, 1.0, Delta);
  double b = (1.0 - prior) * gauss_pdf(v, 0.0, Delta);
  return a / (a + b);
}

// Brute-force family posterior over all 2^|F| infection patterns.
std::vector<double> family_oracle(const std::vector<double>& v, double pi_vf, double pi_ind,
                                  double Delta) {
  int f = static_cast<int>(v.size());
  std::vector<double> numer(f, 0.0);
  double denom = 0.0;
  // non-viral family: all members healthy
  double healthy = 1.0 - pi_vf;
  for (int i = 0; i < f; ++i) healthy *= gauss_pdf(v[i], 0.0, Delta);
  denom += healthy;
  for (unsigned mask = 0; mask < (1u << f); ++mask) {
    double w = pi_vf;
    for (int i = 0; i < f; ++i) {
      bool inf = mask & (1u << i);
      w *= (inf ? pi_ind : 1.0 - pi_ind) * gauss_pdf(v[i], inf ? 1.0 : 0.0, Delta);
    }
    denom += w;
    for (int i = 0; i < f; ++i)
      if (mask & (1u << i)) numer[i] += w;
  }
  std::vector<double> out(f);
  for (int i = 0; i < f; ++i) out[i] = numer[i] / denom;
  return out;
}

}  // namespace

TEST_CASE("ct denoiser equals the Bayes oracle on 1e5 random triples") {
  Rng rng(3);
  std::uniform_real_distribution<double> up(0.001, 0.999), uv(-3, 4), ud(0.01, 2.0);
  double worst = 0;
  for (int t = 0; t < 100000; ++t) {
    double p = up(rng), v = uv(rng), D = ud(rng);
    worst = std::max(worst, std::abs(ct_denoiser(v, p, D) - ct_oracle(v, p, D)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("ct denoiser fixed points and limits") {
  CHECK(ct_denoiser(0.5, 0.37, 0.2) == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(ct_denoiser(2.0, 0.0, 0.2) == 0.0);
  CHECK(ct_denoiser(-5.0, 1.0, 0.2) == 1.0);
  // worked closed form: prior 0.1, v = 1, Delta = 0.25
  CHECK(ct_denoiser(1.0, 0.1, 0.25) == doctest::Approx(1.0 / (1.0 + 9.0 * std::exp(-2.0))).epsilon(1e-10));
  // monotone in v and prior
  CHECK(ct_denoiser(0.8, 0.2, 0.3) > ct_denoiser(0.3, 0.2, 0.3));
  CHECK(ct_denoiser(0.4, 0.5, 0.3) > ct_denoiser(0.4, 0.2, 0.3));
}

TEST_CASE("family denoiser equals brute-force enumeration on 1000 random configurations") {
  Rng rng(7);
  std::uniform_real_distribution<double> up(0.02, 0.98), uv(-2, 3), ud(0.05, 1.5);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    int f = 1 + static_cast<int>(rng() % 12);
    std::vector<double> v(f);
    for (auto& x : v) x = uv(rng);
    double pvf = up(rng), pind = up(rng), D = ud(rng);
    auto got = family_denoiser(v, pvf, pind, D);
    auto expect = family_oracle(v, pvf, pind, D);
    for (int i = 0; i < f; ++i) worst = std::max(worst, std::abs(got[i] - expect[i]));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("family denoiser analytic reductions") {
  // pi_vf = 0: nobody can be infected
  auto zero = family_denoiser({0.9, 1.4}, 0.0, 0.6, 0.25);
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);
  // |F| = 1 reduces to the ct denoiser with prior pi_vf * pi_ind...
  // only when pi_vf = 1 (otherwise the family split changes the mix)
  auto single = family_denoiser({0.7}, 1.0, 0.3, 0.25);
  CHECK(single[0] == doctest::Approx(ct_denoiser(0.7, 0.3, 0.25)).epsilon(1e-10));
  // exchangeability: identical pseudo-data gives identical marginals
  auto sym = family_denoiser({0.4, 0.4, 0.4}, 0.3, 0.6, 0.2);
  CHECK(sym[0] == doctest::Approx(sym[1]).epsilon(1e-12));
  CHECK(sym[1] == doctest::Approx(sym[2]).epsilon(1e-12));
  // outputs stay in [0,1] even at extreme pseudo-data
  auto extreme = family_denoiser({50.0, -50.0}, 0.5, 0.5, 0.1);
  CHECK(extreme[0] >= 0.0);
  CHECK(extreme[0] <= 1.0);
  CHECK(extreme[1] >= 0.0);
  CHECK(extreme[1] <= 1.0);
}

TEST_CASE("pair probability closed forms") {
  double eps = 0.01;
  CHECK(estimate_pair_prob(0, 0.5, 0.5, 1.0, eps) == doctest::Approx(std::exp(-1.0 / eps)).epsilon(1e-12));
  CHECK(estimate_pair_prob(2, 0.5, 0.5, 1.0, eps) == doctest::Approx(std::exp(-1.0 / 0.51)).epsilon(1e-12));
  CHECK(estimate_pair_prob(1e12, 1, 1, 1, eps) == doctest::Approx(1.0).epsilon(1e-6));
  // monotone in each argument
  CHECK(estimate_pair_prob(3, 0.5, 0.5, 1.0, eps) > estimate_pair_prob(2, 0.5, 0.5, 1.0, eps));
  CHECK(estimate_pair_prob(2, 0.7, 0.5, 1.0, eps) > estimate_pair_prob(2, 0.5, 0.5, 1.0, eps));
  CHECK(estimate_pair_prob(2, 0.5, 0.8, 1.0, eps) > estimate_pair_prob(2, 0.5, 0.5, 1.0, eps));
  CHECK(estimate_pair_prob(2, 0.5, 0.5, 2.0, eps) > estimate_pair_prob(2, 0.5, 0.5, 1.0, eps));
}

TEST_CASE("prior tracker aggregates contacts by the complement product") {
  // two individuals contacting person 0 on one day; person 0's prior is
  // 1 - (1 - p01)(1 - p02) with each p from the pair formula
  int n = 3;
  double eps = 1e-3, lambda = 0.02;
  CtPriorTracker tracker(n, 8, eps);
  std::vector<ContactEvent> events{{10, 0, 1, 4.0, 0.8, true}, {10, 0, 2, 2.0, 0.5, false}};
  tracker.add_contacts(10, events);
  Vec est(n);
  est << 0.1, 0.6, 0.3;
  tracker.set_estimates(10, est);

  double psi01 = 1.0 - (1 - est[0]) * (1 - est[1]);
  double psi02 = 1.0 - (1 - est[0]) * (1 - est[2]);
  double p01 = estimate_pair_prob(4.0, 0.8, psi01, lambda, eps);
  double p02 = estimate_pair_prob(2.0, 0.5, psi02, lambda, eps);

  Vec prior = tracker.prior_for_day(11, lambda);
  CHECK(prior[0] == doctest::Approx(1.0 - (1 - p01) * (1 - p02)).epsilon(1e-12));
  // the symmetric counterparty sees the same pair probability
  CHECK(prior[1] == doctest::Approx(p01).epsilon(1e-12));
  CHECK(prior[2] == doctest::Approx(p02).epsilon(1e-12));

  // days with no estimates or contacts contribute factor 1
  Vec far = tracker.prior_for_day(40, lambda);
  CHECK(far[0] == 0.0);
}

TEST_CASE("prior tracker spans exactly the SI window") {
  CtPriorTracker tracker(2, 3, 1e-3);
  for (int d = 0; d < 12; ++d) {
    tracker.add_contacts(d, {{d, 0, 1, 5.0, 1.0, true}});
    Vec est(2);
    est << 0.5, 0.5;
    tracker.set_estimates(d, est);
  }
  // day 10 prior uses days 7, 8, 9 only: same contact every day, so
  // prior = 1 - (1-p)^3
  double psi = 1.0 - 0.25;
  double p = estimate_pair_prob(5.0, 1.0, psi, 0.05, 1e-3);
  Vec prior = tracker.prior_for_day(10, 0.05);
  CHECK(prior[0] == doctest::Approx(1.0 - std::pow(1 - p, 3)).epsilon(1e-12));
}

TEST_CASE("ml_lambda contract: maximizer beats every grid point, degenerate flagged") {
  int n = 40;
  Rng rng(13);
  CtPriorTracker tracker(n, 8, 1e-3);
  std::vector<ContactEvent> evs;
  std::uniform_real_distribution<double> ut(0.5, 8), ud(0.2, 1.0);
  for (int d = 2; d < 10; ++d) {
    std::vector<ContactEvent> day_evs;
    for (int k = 0; k < 60; ++k) {
      int i = static_cast<int>(rng() % n), j = static_cast<int>(rng() % n);
      if (i == j) continue;
      day_evs.push_back({d, i, j, ut(rng), ud(rng), true});
    }
    tracker.add_contacts(d, day_evs);
    Vec est = Vec::Constant(n, 0.3);
    tracker.set_estimates(d, est);
  }
  auto prior_of = [&](double lam) { return tracker.prior_for_day(10, lam); };

  double true_lambda = 0.05;
  Vec prior = prior_of(true_lambda);
  double Delta = 0.2;
  std::normal_distribution<double> noise(0.0, std::sqrt(Delta));
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    bool infected = std::uniform_real_distribution<double>(0, 1)(rng) < prior[i];
    v[i] = (infected ? 1.0 : 0.0) + noise(rng);
  }
  auto res = ml_lambda(v, Delta, prior_of);
  CHECK(!res.degenerate);

  auto loglik = [&](double lam) {
    Vec p = prior_of(lam);
    double ll = 0;
    for (int i = 0; i < n; ++i)
      ll += std::log(p[i] * gauss_pdf(v[i], 1, Delta) + (1 - p[i]) * gauss_pdf(v[i], 0, Delta));
    return ll;
  };
  double at_hat = loglik(res.lambda);
  for (int g = 0; g < 200; ++g) {
    double lam = std::pow(10.0, -8.0 + 10.0 * g / 199.0);
    CHECK(at_hat >= loglik(lam) - 1e-9);
  }

  // all tau = 0: lambda unidentifiable
  CtPriorTracker flat(4, 8, 1e-3);
  flat.add_contacts(5, {{5, 0, 1, 0.0, 1.0, true}});
  Vec est = Vec::Constant(4, 0.5);
  flat.set_estimates(5, est);
  auto deg = ml_lambda(Vec::Zero(4), 0.2, [&](double lam) { return flat.prior_for_day(6, lam); });
  CHECK(deg.degenerate);
}

TEST_CASE("gamp on the identity matrix decouples to near-certain marginals") {
  int n = 12;
  PoolingMatrix I = canonical_matrix(n, n, 1, 1);
  BinarySparse A = I.sparse();
  // noiseless channel
  BinaryChannelParams ch{1e-9, 1e-9};
  Vec prior = Vec::Constant(n, 0.3);
  std::vector<uint8_t> x = {1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0};
  // y through the identity pattern: pool i holds sample sigma(i)
  Vec xd(n);
  for (int i = 0; i < n; ++i) xd[i] = x[i];
  std::vector<uint8_t> y(n);
  for (int i = 0; i < n; ++i) {
    double w = 0;
    for (int j : A.row_cols[i]) w += xd[j];
    y[i] = w > 0;
  }
  auto res = gamp_run(A, y, make_ct_denoiser(prior), ch);
  CHECK(res.converged);
  for (int i = 0; i < n; ++i) {
    if (x[i]) CHECK(res.marginals[i] > 0.99);
    else CHECK(res.marginals[i] < 0.01);
  }
}

TEST_CASE("gamp marginals track the exhaustive posterior at tiny scale") {
  // n=12, m=8, noiseless channel, priors in the epidemic-sparsity range:
  // exact posterior by summing over all 4096 health vectors
  const int n = 12, m = 8;
  BinaryChannelParams ch{1e-12, 1e-12};
  int good = 0, total = 0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed * 7 + 1);
    PoolingMatrix P = canonical_matrix(m, n, 3, 2);
    GramState gs = GramState::compute(P);
    for (int t = 0; t < 100; ++t) find_and_apply_interchange(P, gs, rng);
    BinarySparse A = P.sparse();

    Vec prior(n);
    std::uniform_real_distribution<double> up(0.02, 0.2);
    for (int i = 0; i < n; ++i) prior[i] = up(rng);
    std::vector<uint8_t> x(n, 0);
    for (int i = 0; i < n; ++i) x[i] = std::uniform_real_distribution<double>(0, 1)(rng) < prior[i];
    std::vector<uint8_t> y(m);
    for (int i = 0; i < m; ++i) {
      int w = 0;
      for (int j : A.row_cols[i]) w += x[j];
      double p1 = w > 0 ? 1 - ch.p_false_neg : ch.p_false_pos;
      y[i] = std::uniform_real_distribution<double>(0, 1)(rng) < p1;
    }

    Vec exact = Vec::Zero(n);
    double z = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      double weight = 1;
      for (int i = 0; i < n; ++i)
        weight *= (mask & (1u << i)) ? prior[i] : 1 - prior[i];
      for (int i = 0; i < m; ++i) {
        int w = 0;
        for (int j : A.row_cols[i]) w += (mask >> j) & 1u;
        double p1 = w > 0 ? 1 - ch.p_false_neg : ch.p_false_pos;
        weight *= y[i] ? p1 : 1 - p1;
      }
      z += weight;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) exact[i] += weight;
    }
    exact /= z;

    auto res = gamp_run(A, y, make_ct_denoiser(prior), ch);
    for (int i = 0; i < n; ++i) {
      ++total;
      if (std::abs(res.marginals[i] - exact[i]) < 0.15) ++good;
    }
  }
  CHECK(static_cast<double>(good) / total >= 0.90);
}

TEST_CASE("gamp output is deterministic and bounded") {
  Rng rng(31);
  PoolingMatrix P = canonical_matrix(10, 20, 4, 2);
  BinarySparse A = P.sparse();
  Vec prior = Vec::Constant(20, 0.1);
  std::vector<uint8_t> y(10, 0);
  y[2] = y[7] = 1;
  auto r1 = gamp_run(A, y, make_ct_denoiser(prior), {});
  auto r2 = gamp_run(A, y, make_ct_denoiser(prior), {});
  CHECK(r1.marginals == r2.marginals);
  for (int i = 0; i < 20; ++i) {
    CHECK(r1.marginals[i] >= 0.0);
    CHECK(r1.marginals[i] <= 1.0);
  }
  CHECK(r1.Delta > 0.0);
}

TEST_CASE("family parameter fit is a grid maximizer") {
  Rng rng(37);
  std::vector<std::vector<int>> families = {{0, 1, 2}, {3, 4}, {5, 6, 7, 8}, {9}};
  int n = 10;
  double true_pvf = 0.34, true_pind = 0.62, Delta = 0.15;
  Vec v(n);
  std::normal_distribution<double> noise(0.0, std::sqrt(Delta));
  std::uniform_real_distribution<double> u(0, 1);
  for (const auto& fam : families) {
    bool viral = u(rng) < true_pvf;
    for (int i : fam) {
      bool inf = viral && u(rng) < true_pind;
      v[i] = (inf ? 1.0 : 0.0) + noise(rng);
    }
  }
  auto fitted = fit_family_params(v, Delta, families);
  CHECK(fitted.first > 0.0);
  CHECK(fitted.first < 1.0);
  CHECK(fitted.second > 0.0);
  CHECK(fitted.second < 1.0);

  auto loglik = [&](double pvf, double pind) {
    double ll = 0;
    for (const auto& fam : families) {
      std::vector<double> vf;
      for (int i : fam) vf.push_back(v[i]);
      // total family likelihood via the same mixture the oracle uses
      double healthy = 1.0 - pvf;
      for (double x : vf) healthy *= gauss_pdf(x, 0, Delta);
      double viral_sum = 0;
      int f = static_cast<int>(vf.size());
      for (unsigned mask = 0; mask < (1u << f); ++mask) {
        double w = 1;
        for (int i = 0; i < f; ++i) {
          bool inf = mask & (1u << i);
          w *= (inf ? pind : 1 - pind) * gauss_pdf(vf[i], inf ? 1.0 : 0.0, Delta);
        }
        viral_sum += w;
      }
      ll += std::log(healthy + pvf * viral_sum);
    }
    return ll;
  };
  double at_fit = loglik(fitted.first, fitted.second);
  for (int a = 0; a < 50; ++a)
    for (int b = 0; b < 50; ++b)
      CHECK(at_fit >= loglik((a + 0.5) / 50, (b + 0.5) / 50) - 1e-9);
}

TEST_CASE("startup blending replaces exactly the requested fraction") {
  Rng rng(41);
  std::vector<uint8_t> truth(100, 0);
  for (int i = 0; i < 100; i += 3) truth[i] = 1;

  Vec keep = startup_blending(truth, 0.0, 0.05, rng);
  for (int i = 0; i < 100; ++i) CHECK(keep[i] == static_cast<double>(truth[i]));

  Vec all = startup_blending(truth, 1.0, 0.05, rng);
  for (int i = 0; i < 100; ++i) CHECK(all[i] == 0.05);

  Vec half = startup_blending(truth, 0.5, 0.05, rng);
  int replaced = 0;
  for (int i = 0; i < 100; ++i)
    if (half[i] == 0.05 && truth[i] == 1) ++replaced;
  int kept_pos = 0, fallback_cnt = 0;
  for (int i = 0; i < 100; ++i) {
    if (half[i] == 0.05) ++fallback_cnt;
    else CHECK(half[i] == static_cast<double>(truth[i]));
  }
  // exactly 50 entries replaced (positives at the fallback value count,
  // zero-truth entries replaced by 0.05 are distinguishable too)
  CHECK(fallback_cnt >= 50);  // 0-truth entries kept read 0.0, not 0.05
}
