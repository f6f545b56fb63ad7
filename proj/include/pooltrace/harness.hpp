#pragma once

#include <array>
#include <optional>
#include <string>

#include "pooltrace/cs.hpp"
#include "pooltrace/gamp.hpp"
#include "pooltrace/metrics.hpp"

namespace pooltrace {

/// Scenario presets: fixed lambda0, four inter-clique contact levels
/// giving increasing 50-day-window sparsity in the 2-9% band.
struct ScenarioDefaults {
  double lambda0;
  std::array<double, 4> alphas;
};
const ScenarioDefaults& scenario_defaults();

/// SimConfig for sparsity level 0..3 (low to high).
SimConfig scenario_config(int level, uint64_t seed);

enum class DenoiserKind { family, ct };

struct M1WindowConfig {
  DenoiserKind denoiser = DenoiserKind::ct;
  GampConfig gamp;
  BinaryChannelParams channel;
  double p_excluded = 0.0;
  double fallback_prior = 0.05;
  // Lower clamp for the prevalence-tracking prior floor. The epidemic
  // admits stray infections, so nobody's prior is exactly zero; the
  // working floor itself is estimated each day from the pool positivity
  // rate so that untraced infections stay detectable from measurements.
  double stray_prior = 0.01;
  int si_days = 8;
  double epsilon = 1e-3;
  uint64_t seed = 1;
};

struct M1WindowResult {
  std::vector<Vec> marginals;            // one per window day
  std::vector<std::vector<uint8_t>> truth;
  RocCurve averaged_roc;                 // mean (fpr,fnr) per threshold across days
  double mean_total_error = 0.0;         // at the operating threshold
  double operating_threshold = 0.0;
  std::vector<double> lambda_trace;
};

M1WindowResult run_m1_window(const SimOutput& sim, const BinarySparse& A,
                             const M1WindowConfig& config);

struct M2WindowConfig {
  M2Algorithm algorithm = M2Algorithm::comp_sqrt_oglasso;
  MultiplicativeChannelParams channel;
  SolverConfig solver;
  int ct_window_days = 7;
  bool use_clique_communities = false;  // 3-clique communities instead of maximal cliques
  int signals = SimOutput::kWindowLen;
  uint64_t seed = 1;
  // optional CT-graph perturbation applied before group extraction
  double add_fraction = 0.0;
  double remove_fraction = 0.0;
};

struct AggregateStat {
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

struct M2WindowResult {
  std::vector<MetricsRecord> per_signal;
  AggregateStat sensitivity, specificity, fnr, fpr, mcc, rrmse;
  double mean_sparsity = 0.0;
};

M2WindowResult run_m2_window(const SimOutput& sim, const BinarySparse& A,
                             const std::vector<std::vector<int>>& families,
                             const M2WindowConfig& config);

AggregateStat aggregate(const std::vector<double>& values);

/// Figure/table reproduction entry point. Writes CSV series under
/// `out_dir` and returns a textual summary with the reference values.
std::string reproduce(const std::string& figure_id, const std::string& out_dir,
                      uint64_t seed = 1);

// Simulation exports (contact log, ground truth, manifest).
void export_sim(const SimOutput& sim, const SimConfig& config, const std::string& out_dir);

void export_measurements(const std::vector<Vec>& per_day_y, int first_day,
                         const std::string& model, const std::string& params_desc,
                         uint64_t seed, const std::string& out_dir);

}  // namespace pooltrace
