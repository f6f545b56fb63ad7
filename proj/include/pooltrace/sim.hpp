#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pooltrace/matrix.hpp"

namespace pooltrace {

enum class Phase : uint8_t { susceptible, infected, infectious, recovered };

struct SimConfig {
  int n = 1000;
  int t_max = 250;
  int k1 = 3;                  // first infectious day after infection
  int k2 = 7;                  // last infectious day
  int infection_duration = 14; // total infected period, then recovered
  double p1 = 2e-4;            // stray infection probability per day
  double lambda0 = 2e-6;       // baseline Poisson transmission rate
  double alpha = 0.2;          // inter-clique contact fraction
  // family size pmf over sizes 1..len; the paper's source table is not
  // public, so this default is a declared stand-in (mean ~3.6)
  std::vector<double> family_size_pmf = {0.10, 0.18, 0.22, 0.22, 0.12, 0.08, 0.05, 0.03};
  std::pair<double, double> viral_load_range = {1.0, 32768.0};
  std::pair<double, double> tau_intra_range = {0.5, 8.0};
  std::pair<double, double> tau_inter_range = {0.1, 2.0};
  std::pair<double, double> d_range = {0.2, 1.0};
  // crosslinked-clique variant: consecutive cliques overlap by one node
  // with probability 1/2 and a fraction of intra edges is dropped
  bool overlap_variant = false;
  double overlap_edge_removal = 0.05;
  uint64_t rng_seed = 1;

  void validate() const;
};

struct ContactEvent {
  int day;
  int i, j;
  double tau;     // hours
  double d;       // proximity in (0,1]
  bool intra;     // intra-clique vs inter-clique
};

struct HealthState {
  // infection_day < 0 means never infected
  int infection_day = -1;
  double viral_load = 0.0;
};

struct SimOutput {
  int n = 0;
  int t_max = 0;
  // status[t][i] = 1 when individual i is infected or infectious at the
  // start of day t; viral[t][i] is the matching viral load
  std::vector<std::vector<uint8_t>> status;
  std::vector<std::vector<double>> viral;
  std::vector<ContactEvent> contact_log;
  std::vector<int> family_of;               // individual -> family id
  std::vector<std::vector<int>> families;   // family id -> members
  std::vector<std::pair<int, int>> intra_edges;  // static clique edges
  int t_peak = 0;
  int window_begin = 0;  // 50-day test window [begin, begin+50)
  static constexpr int kWindowLen = 50;

  int active_count(int day) const;
  double window_sparsity() const;
};

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::vector<int>> sample_families(const SimConfig& config, Rng& rng);

/// Static clique edges; the overlap variant may merge consecutive
/// families (updating `families` and `family_of`) and drop edges.
std::vector<std::pair<int, int>> build_intra_edges(std::vector<std::vector<int>>& families,
                                                   std::vector<int>& family_of,
                                                   const SimConfig& config, Rng& rng);

Phase phase_on(const HealthState& s, int t, const SimConfig& cfg);

std::vector<ContactEvent> generate_daily_contacts(int day,
                                                  const std::vector<std::pair<int, int>>& intra_edges,
                                                  const std::vector<int>& family_of,
                                                  const SimConfig& config, Rng& rng);

double transmission_probability(double viral_load, double d, double tau, double lambda0);

/// Advances one day: computes new infections from today's contacts plus
/// the stray mechanism, then applies them effective the next day (one-hop
/// rule). `day` is the day whose contacts are being processed.
void step_day(std::vector<HealthState>& states, const std::vector<ContactEvent>& contacts_today,
              int day, const SimConfig& config, Rng& rng);

SimOutput run_simulation(const SimConfig& config);

/// Bisection on lambda0 so the mean 50-day-window sparsity lands near
/// `target` (the paper gives no lambda0 value).
double calibrate_lambda0(SimConfig config, double target, int iters = 24);

}  // namespace pooltrace
