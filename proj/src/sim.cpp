#include "pooltrace/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace pooltrace {

void SimConfig::validate() const {
  if (n <= 0 || t_max <= 0) throw SimError("config: n and t_max must be positive");
  if (!(0 < k1 && k1 <= k2 && k2 < infection_duration))
    throw SimError("config: need 0 < k1 <= k2 < infection_duration");
  if (p1 < 0 || p1 > 1) throw SimError("config: p1 out of [0,1]");
  if (alpha < 0 || alpha > 1) throw SimError("config: alpha out of [0,1]");
  if (family_size_pmf.empty()) throw SimError("config: empty family size pmf");
  double s = 0;
  for (double p : family_size_pmf) {
    if (p < 0) throw SimError("config: negative pmf entry");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) throw SimError("config: family size pmf must sum to 1");
  if (viral_load_range.first <= 0 || viral_load_range.second < viral_load_range.first)
    throw SimError("config: bad viral load range");
  if (lambda0 < 0) throw SimError("config: negative lambda0");
}

int SimOutput::active_count(int day) const {
  return std::accumulate(status[day].begin(), status[day].end(), 0);
}

double SimOutput::window_sparsity() const {
  long long total = 0;
  for (int t = window_begin; t < window_begin + kWindowLen; ++t) total += active_count(t);
  return static_cast<double>(total) / (static_cast<double>(kWindowLen) * n);
}

std::vector<std::vector<int>> sample_families(const SimConfig& config, Rng& rng) {
  config.validate();
  std::discrete_distribution<int> size_dist(config.family_size_pmf.begin(),
                                            config.family_size_pmf.end());
  std::vector<std::vector<int>> families;
  int next = 0;
  while (next < config.n) {
    int size = size_dist(rng) + 1;  // pmf index 0 is family size 1
    size = std::min(size, config.n - next);  // last family truncated to fit
    std::vector<int> members(size);
    std::iota(members.begin(), members.end(), next);
    next += size;
    families.push_back(std::move(members));
  }
  return families;
}

namespace {

double draw_uniform(std::pair<double, double> range, Rng& rng) {
  return std::uniform_real_distribution<double>(range.first, range.second)(rng);
}

}  // namespace

// Static intra-clique edges: complete graph per family, or the overlap
// variant with one-node bridges and random edge removal.
std::vector<std::pair<int, int>> build_intra_edges(std::vector<std::vector<int>>& families,
                                                   std::vector<int>& family_of,
                                                   const SimConfig& config, Rng& rng) {
  if (config.overlap_variant) {
    std::bernoulli_distribution half(0.5);
    for (std::size_t f = 1; f < families.size(); ++f) {
      if (families[f - 1].size() > 1 && families[f].size() > 1 && half(rng)) {
        // consecutive nontrivial cliques share one node
        int shared = families[f - 1].back();
        families[f].push_back(shared);
      }
    }
  }
  family_of.assign(config.n, -1);
  for (std::size_t f = 0; f < families.size(); ++f)
    for (int i : families[f])
      if (family_of[i] < 0) family_of[i] = static_cast<int>(f);

  std::vector<std::pair<int, int>> edges;
  std::set<std::pair<int, int>> seen;
  for (const auto& fam : families)
    for (std::size_t a = 0; a < fam.size(); ++a)
      for (std::size_t b = a + 1; b < fam.size(); ++b) {
        auto e = std::minmax(fam[a], fam[b]);
        if (seen.insert({e.first, e.second}).second) edges.push_back({e.first, e.second});
      }
  if (config.overlap_variant && config.overlap_edge_removal > 0 && !edges.empty()) {
    std::shuffle(edges.begin(), edges.end(), rng);
    auto keep = edges.size() - static_cast<std::size_t>(config.overlap_edge_removal * edges.size());
    edges.resize(std::max<std::size_t>(keep, 1));
  }
  return edges;
}

std::vector<ContactEvent> generate_daily_contacts(int day,
                                                  const std::vector<std::pair<int, int>>& intra_edges,
                                                  const std::vector<int>& family_of,
                                                  const SimConfig& config, Rng& rng) {
  std::vector<ContactEvent> events;
  events.reserve(intra_edges.size() * 2);
  for (auto [i, j] : intra_edges)
    events.push_back({day, i, j, draw_uniform(config.tau_intra_range, rng),
                      draw_uniform(config.d_range, rng), true});

  // inter/(inter+intra) = alpha  =>  n_inter = alpha/(1-alpha) * n_intra
  long long n_inter = 0;
  if (config.alpha >= 1.0) {
    if (intra_edges.empty() && config.n < 2) throw SimError("alpha=1 with no possible contacts");
    n_inter = std::max<long long>(1, static_cast<long long>(intra_edges.size()));
  } else {
    n_inter = std::llround(config.alpha / (1.0 - config.alpha) *
                           static_cast<double>(intra_edges.size()));
  }
  std::uniform_int_distribution<int> node(0, config.n - 1);
  std::set<std::pair<int, int>> used;
  for (long long t = 0; t < n_inter; ++t) {
    for (int tries = 0; tries < 1000; ++tries) {
      int i = node(rng), j = node(rng);
      if (i == j) continue;
      if (family_of[i] == family_of[j]) continue;
      auto e = std::minmax(i, j);
      if (!used.insert({e.first, e.second}).second) continue;
      events.push_back({day, e.first, e.second, draw_uniform(config.tau_inter_range, rng),
                        draw_uniform(config.d_range, rng), false});
      break;
    }
  }
  return events;
}

double transmission_probability(double viral_load, double d, double tau, double lambda0) {
  if (viral_load < 0 || d < 0 || tau < 0 || lambda0 < 0)
    throw std::domain_error("transmission_probability: negative argument");
  return 1.0 - std::exp(-lambda0 * viral_load * d * tau);
}

// Phase of a node on day `t` given its infection day (which is the first
// day it counts as infected).
Phase phase_on(const HealthState& s, int t, const SimConfig& cfg) {
  if (s.infection_day < 0 || t < s.infection_day) return Phase::susceptible;
  int delta = t - s.infection_day;
  if (delta >= cfg.infection_duration) return Phase::recovered;
  if (delta >= cfg.k1 && delta <= cfg.k2) return Phase::infectious;
  return Phase::infected;
}

void step_day(std::vector<HealthState>& states, const std::vector<ContactEvent>& contacts_today,
              int day, const SimConfig& config, Rng& rng) {
  const int n = static_cast<int>(states.size());
  // survival[j] = probability j escapes infection today
  std::vector<double> survival(n, 1.0);
  for (const auto& e : contacts_today) {
    Phase pi = phase_on(states[e.i], day, config);
    Phase pj = phase_on(states[e.j], day, config);
    if (pi == Phase::infectious && pj == Phase::susceptible)
      survival[e.j] *= 1.0 - transmission_probability(states[e.i].viral_load, e.d, e.tau, config.lambda0);
    if (pj == Phase::infectious && pi == Phase::susceptible)
      survival[e.i] *= 1.0 - transmission_probability(states[e.j].viral_load, e.d, e.tau, config.lambda0);
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    if (phase_on(states[i], day, config) != Phase::susceptible) continue;
    double p_infect = 1.0 - (1.0 - config.p1) * survival[i];
    if (unif(rng) < p_infect) {
      // infection registers at the start of the next day (one-hop rule)
      states[i].infection_day = day + 1;
      states[i].viral_load = draw_uniform(config.viral_load_range, rng);
    }
  }
}

SimOutput run_simulation(const SimConfig& config) {
  config.validate();
  Rng rng(config.rng_seed);
  SimOutput out;
  out.n = config.n;
  out.t_max = config.t_max;

  out.families = sample_families(config, rng);
  out.intra_edges = build_intra_edges(out.families, out.family_of, config, rng);

  std::vector<HealthState> states(config.n);
  out.status.assign(config.t_max, std::vector<uint8_t>(config.n, 0));
  out.viral.assign(config.t_max, std::vector<double>(config.n, 0.0));

  for (int day = 0; day < config.t_max; ++day) {
    for (int i = 0; i < config.n; ++i) {
      Phase ph = phase_on(states[i], day, config);
      bool active = ph == Phase::infected || ph == Phase::infectious;
      out.status[day][i] = active ? 1 : 0;
      out.viral[day][i] = active ? states[i].viral_load : 0.0;
    }
    auto contacts = generate_daily_contacts(day, out.intra_edges, out.family_of, config, rng);
    step_day(states, contacts, day, config, rng);
    out.contact_log.insert(out.contact_log.end(), contacts.begin(), contacts.end());
  }

  int best = 0;
  for (int day = 1; day < config.t_max; ++day)
    if (out.active_count(day) > out.active_count(best)) best = day;
  if (out.active_count(best) == 0) throw SimError("degenerate run: no infection ever occurred");
  out.t_peak = best;
  if (config.t_max < SimOutput::kWindowLen)
    throw SimError("t_max too short for the 50-day test window");
  out.window_begin = std::clamp(best - 24, 0, config.t_max - SimOutput::kWindowLen);
  return out;
}

double calibrate_lambda0(SimConfig config, double target, int iters) {
  double lo = std::log(1e-9), hi = std::log(1e-3);
  double mid = 0.5 * (lo + hi);
  for (int t = 0; t < iters; ++t) {
    mid = 0.5 * (lo + hi);
    config.lambda0 = std::exp(mid);
    double sp;
    try {
      sp = run_simulation(config).window_sparsity();
    } catch (const SimError&) {
      sp = 0.0;  // epidemic failed to ignite: lambda0 too small
    }
    if (sp < target)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace pooltrace
