#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "pooltrace/measure.hpp"
#include "pooltrace/sim.hpp"

namespace pooltrace {

struct GampConfig {
  int max_iters = 200;
  double damping = 0.7;
  double tol = 1e-8;  // mean-square change of marginals
};

struct FamilyModel {
  std::vector<std::vector<int>> families;
  double pi_vf = 0.1;   // Pr(family viral)
  double pi_ind = 0.5;  // Pr(member infected | family viral)
};

/// Posterior Pr(X=1 | v) for the two-Gaussian mixture N(v;1,D) vs
/// N(v;0,D) with the given prior. Exact Bayes rule; monotone increasing
/// in v and in the prior.
double ct_denoiser(double v, double prior, double Delta);

/// Joint posterior for one family given its pseudo-data block. Members
/// are conditionally i.i.d. given the family's viral state, so the sum
/// over infection patterns factorizes per member.
std::vector<double> family_denoiser(const std::vector<double>& v_family, double pi_vf,
                                    double pi_ind, double Delta);
std::vector<double> family_denoiser(const std::vector<double>& v_family, double pi_vf,
                                    double pi_ind, const std::vector<double>& Delta);

double estimate_pair_prob(double tau, double d, double psi_pair, double lambda, double epsilon);

struct DayContact {
  int other;
  double tau;
  double d;
};

/// Per-day contact lists and per-day infection estimates feeding the
/// prior recursion. Day indices are absolute simulation days.
class CtPriorTracker {
 public:
  CtPriorTracker(int n, int si_days = 8, double epsilon = 1e-3);

  void add_contacts(int day, const std::vector<ContactEvent>& events);
  void set_estimates(int day, Vec estimates);
  bool has_estimates(int day) const;

  /// 1 - prod over the SI window and contacts of (1 - p_hat); absent
  /// contacts contribute factor 1.
  Vec prior_for_day(int day, double lambda) const;

  int si_days() const { return si_days_; }
  double epsilon() const { return epsilon_; }
  const std::vector<DayContact>& contacts_of(int day, int i) const;

 private:
  int n_;
  int si_days_;
  double epsilon_;
  std::map<int, std::vector<std::vector<DayContact>>> contacts_;
  std::map<int, Vec> estimates_;
  std::vector<DayContact> empty_;
};

struct MlLambdaResult {
  double lambda = 0.0;
  bool degenerate = false;
};

/// 1-D ML over a log grid with golden-section refinement. `prior_of`
/// maps lambda to the length-n prior vector.
MlLambdaResult ml_lambda(const Vec& pseudo_data, double Delta,
                         const std::function<Vec(double)>& prior_of,
                         double grid_lo = 1e-8, double grid_hi = 1e2, int grid_points = 200);

/// Input-channel denoiser: maps pseudo-data (v, per-coordinate Delta) to
/// posterior marginals in [0,1]^n.
using Denoiser = std::function<Vec(const Vec&, const Vec&)>;

Denoiser make_ct_denoiser(Vec prior);
Denoiser make_family_denoiser(FamilyModel model);

struct GampResult {
  Vec marginals;
  Vec pseudo_data;
  Vec Delta_vec;       // per-coordinate pseudo-data variance
  double Delta = 0.0;  // mean of Delta_vec (scalar plug-in uses)
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
};

GampResult gamp_run(const BinarySparse& A, const std::vector<uint8_t>& y,
                    const Denoiser& denoiser, const BinaryChannelParams& channel,
                    const GampConfig& config = {});

/// Joint grid ML for (pi_vf, pi_ind) from pseudo-data, mirroring the
/// plug-in strategy used for lambda.
std::pair<double, double> fit_family_params(const Vec& pseudo_data, double Delta,
                                            const std::vector<std::vector<int>>& families,
                                            int grid = 50);

/// Replaces a random fraction of true startup statuses by a soft
/// fallback prior.
Vec startup_blending(const std::vector<uint8_t>& truth, double p_excluded, double fallback_prior,
                     Rng& rng);

}  // namespace pooltrace
