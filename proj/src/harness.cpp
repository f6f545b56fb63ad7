#include "pooltrace/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pooltrace/csvio.hpp"
#include "pooltrace/measure.hpp"

namespace pooltrace {

const ScenarioDefaults& scenario_defaults() {
  // lambda0 and the four inter-clique contact levels are calibrated so the
  // mean 50-day-window sparsity at n = 1000 lands near 2, 3.5, 5.5 and 8.5
  // percent (seed-averaged), increasing with alpha.
  static const ScenarioDefaults d{5e-6, {0.08, 0.16, 0.23, 0.29}};
  return d;
}

SimConfig scenario_config(int level, uint64_t seed) {
  if (level < 0 || level > 3) throw SimError("scenario_config: level out of range");
  SimConfig cfg;
  cfg.lambda0 = scenario_defaults().lambda0;
  cfg.alpha = scenario_defaults().alphas[static_cast<std::size_t>(level)];
  cfg.rng_seed = seed;
  return cfg;
}

M1WindowResult run_m1_window(const SimOutput& sim, const BinarySparse& A,
                             const M1WindowConfig& config) {
  const int n = sim.n;
  const int wb = sim.window_begin;
  Rng rng(config.seed);

  M1WindowResult result;
  CtPriorTracker tracker(n, config.si_days, config.epsilon);
  for (int d = wb - config.si_days; d < wb + SimOutput::kWindowLen; ++d) {
    std::vector<ContactEvent> day_events;
    for (const auto& e : sim.contact_log)
      if (e.day == d) day_events.push_back(e);
    tracker.add_contacts(d, day_events);
  }
  if (config.denoiser == DenoiserKind::ct) {
    for (int d = wb - config.si_days; d < wb; ++d)
      tracker.set_estimates(d, startup_blending(sim.status[d], config.p_excluded,
                                                config.fallback_prior, rng));
  }

  FamilyModel fam_model;
  fam_model.families = sim.families;
  fam_model.pi_vf = 0.2;
  fam_model.pi_ind = 0.5;

  // Prevalence-tracking floor blended into the contact prior. When the
  // per-pool prior mass drops below the channel false-positive rate the
  // decoder attributes every positive pool to measurement noise, so the
  // floor must scale with the actual infection rate — which the pool
  // positivity rate estimates without any feedback from the decoder.
  const double row_weight =
      static_cast<double>(A.nnz()) / std::max(A.m, 1);
  double current_floor = config.stray_prior;
  auto floor_from_measurements = [&](const std::vector<uint8_t>& y) {
    double rho = 0.0;
    for (uint8_t b : y) rho += b;
    rho /= std::max<std::size_t>(y.size(), 1);
    const double fp = config.channel.p_false_pos;
    const double fn = config.channel.p_false_neg;
    double rho_true = std::clamp((rho - fp) / std::max(1.0 - fp - fn, 1e-6), 0.0, 1.0);
    double pihat = 1.0 - std::pow(1.0 - rho_true, 1.0 / std::max(row_weight, 1.0));
    return std::clamp(pihat, config.stray_prior, 0.12);
  };
  auto with_floor = [&](const Vec& prior) {
    Vec out(n);
    for (int i = 0; i < n; ++i)
      out[i] = 1.0 - (1.0 - current_floor) * (1.0 - prior[i]);
    return out;
  };
  auto prior_fn_for = [&](int day) {
    return [&tracker, &with_floor, day](double lam) {
      return with_floor(tracker.prior_for_day(day, lam));
    };
  };
  double lambda_hat = 1e-3;

  for (int t = 0; t < SimOutput::kWindowLen; ++t) {
    const int day = wb + t;
    const auto& truth = sim.status[day];
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = truth[i];
    Vec w = pool(A, x);
    auto y = measure_m1(w, config.channel, rng);

    GampResult gr;
    current_floor = floor_from_measurements(y);
    if (config.denoiser == DenoiserKind::ct) {
      if (t == 0) {
        // Initialize lambda so the first-day contact prior carries a mean
        // mass matching the measured prevalence. The pair probability
        // exp(-1/(lambda tau d psi + eps)) vanishes for small lambda,
        // leaving new infections invisible to the prior; too large and
        // every household contact of a flagged individual inherits a
        // near-one prior, which the pools cannot clear and which then
        // seeds further flags.
        double lo = std::log(1e-6), hi = std::log(1e3);
        for (int it = 0; it < 48; ++it) {
          double mid = 0.5 * (lo + hi);
          double mean = tracker.prior_for_day(day, std::exp(mid)).mean();
          (mean < current_floor ? lo : hi) = mid;
        }
        lambda_hat = std::exp(0.5 * (lo + hi));
      }
      Vec prior = with_floor(tracker.prior_for_day(day, lambda_hat));
      gr = gamp_run(A, y, make_ct_denoiser(prior), config.channel, config.gamp);
      // Plug-in ML for lambda, anchored on the first window day only: that
      // decode is conditioned on the startup estimates, while re-fitting
      // every day against the algorithm's own saturated marginals lets the
      // estimate drift monotonically toward the grid edge. The refit is
      // trust-regioned around the moment-matched initializer for the same
      // reason.
      if (t == 0) {
        auto ml = ml_lambda(gr.pseudo_data, gr.Delta, prior_fn_for(day));
        if (!ml.degenerate) {
          double accepted = std::clamp(ml.lambda, 0.5 * lambda_hat, 1.0 * lambda_hat);
          if (std::abs(std::log(accepted / lambda_hat)) > 0.05) {
            lambda_hat = accepted;
            prior = with_floor(tracker.prior_for_day(day, lambda_hat));
            gr = gamp_run(A, y, make_ct_denoiser(prior), config.channel, config.gamp);
          }
        }
      }
      result.lambda_trace.push_back(lambda_hat);
      tracker.set_estimates(day, gr.marginals);
    } else {
      gr = gamp_run(A, y, make_family_denoiser(fam_model), config.channel, config.gamp);
      // Plug-in fit anchored on the first window day only, for the same
      // reason as the lambda refit: iterating the fit against the
      // algorithm's own saturated marginals shrinks the prior mass each
      // day until positive pools look like channel noise. Floors keep
      // the fitted prior mass above the bootstrap level.
      if (t == 0) {
        auto fitted = fit_family_params(gr.pseudo_data, gr.Delta, fam_model.families);
        double vf = std::max(fitted.first, 0.02);
        double ind = std::max(fitted.second, 0.2);
        if (std::abs(vf - fam_model.pi_vf) > 0.02 ||
            std::abs(ind - fam_model.pi_ind) > 0.02) {
          fam_model.pi_vf = vf;
          fam_model.pi_ind = ind;
          gr = gamp_run(A, y, make_family_denoiser(fam_model), config.channel, config.gamp);
        }
      }
    }
    result.marginals.push_back(gr.marginals);
    result.truth.push_back(truth);
  }

  // single operating threshold minimizing the window-averaged FPR + FNR
  std::vector<double> grid;
  for (int g = 0; g <= 1000; ++g) grid.push_back(g / 1000.0);
  double best_sum = 1e300;
  for (double th : grid) {
    double sum_fpr = 0, sum_fnr = 0;
    int days = 0;
    for (int t = 0; t < SimOutput::kWindowLen; ++t) {
      long long fp = 0, fn = 0, pos = 0, neg = 0;
      for (int i = 0; i < n; ++i) {
        bool pred = result.marginals[t][i] > th;
        if (result.truth[t][i]) {
          ++pos;
          if (!pred) ++fn;
        } else {
          ++neg;
          if (pred) ++fp;
        }
      }
      if (pos == 0 || neg == 0) continue;
      sum_fpr += static_cast<double>(fp) / neg;
      sum_fnr += static_cast<double>(fn) / pos;
      ++days;
    }
    if (days == 0) continue;
    RocPoint p{th, sum_fpr / days, sum_fnr / days};
    result.averaged_roc.points.push_back(p);
    if (p.fpr + p.fnr < best_sum - 1e-15) {
      best_sum = p.fpr + p.fnr;
      result.operating_threshold = th;
      result.averaged_roc.operating_threshold = th;
      result.averaged_roc.operating_fpr = p.fpr;
      result.averaged_roc.operating_fnr = p.fnr;
    }
  }
  result.mean_total_error = best_sum;
  return result;
}

AggregateStat aggregate(const std::vector<double>& values) {
  AggregateStat s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
  return s;
}

M2WindowResult run_m2_window(const SimOutput& sim, const BinarySparse& A,
                             const std::vector<std::vector<int>>& families,
                             const M2WindowConfig& config) {
  const int n = sim.n;
  const int wb = sim.window_begin;
  const int signals = std::min(config.signals, SimOutput::kWindowLen);

  M2WindowResult result;
  result.per_signal.resize(signals);
  std::vector<double> sparsity(signals, 0.0);

  GroupStructure family_groups = family_blocks(families);

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < signals; ++t) {
    const int day = wb + t;
    Rng rng(config.seed * 1000003ULL + static_cast<uint64_t>(day));
    const auto& truth = sim.status[day];
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = sim.viral[day][i];
    Vec y = measure_m2(pool(A, x), config.channel, rng);

    GroupStructure groups;
    if (config.algorithm == M2Algorithm::comp_sqrt_glasso) {
      groups = family_groups;
    } else if (config.algorithm == M2Algorithm::comp_sqrt_oglasso) {
      CtGraph g = ct_graph_from_log(sim.contact_log, n, day - 1, config.ct_window_days);
      if (config.add_fraction > 0 || config.remove_fraction > 0)
        g = perturb_graph(g, config.add_fraction, config.remove_fraction, rng);
      if (config.use_clique_communities) {
        groups = k_clique_communities(g, 3).as_groups();
      } else {
        groups.overlapping = true;
        groups.groups = bron_kerbosch(g);
      }
    }

    DecodeResult dec = decode_m2(A, y, config.algorithm, groups, config.solver, rng);
    bool with_loads = config.algorithm != M2Algorithm::comp;
    result.per_signal[t] = compute_metrics(truth, dec.positive, with_loads ? &x : nullptr,
                                           with_loads ? &dec.x_hat : nullptr);
    double pos = 0;
    for (uint8_t v : truth) pos += v;
    sparsity[t] = pos / n;
  }

  auto collect = [&](auto fn) {
    std::vector<double> vals;
    for (const auto& rec : result.per_signal) {
      auto v = fn(rec);
      if (v) vals.push_back(*v);
    }
    return aggregate(vals);
  };
  result.sensitivity = collect([](const MetricsRecord& r) { return r.sensitivity; });
  result.specificity = collect([](const MetricsRecord& r) { return r.specificity; });
  result.fnr = collect([](const MetricsRecord& r) { return r.fnr; });
  result.fpr = collect([](const MetricsRecord& r) { return r.fpr; });
  result.mcc = collect([](const MetricsRecord& r) { return r.mcc; });
  result.rrmse = collect([](const MetricsRecord& r) { return r.rrmse; });
  result.mean_sparsity = aggregate(sparsity).mean;
  return result;
}

void export_sim(const SimOutput& sim, const SimConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    CsvWriter w(out_dir + "/contacts.csv", {"day", "i", "j", "tau_hours", "proximity", "kind"});
    for (const auto& e : sim.contact_log)
      w.row(e.day, e.i, e.j, e.tau, e.d, e.intra ? "intra_clique" : "inter_clique");
  }
  {
    CsvWriter w(out_dir + "/ground_truth.csv", {"day", "individual", "phase", "viral_load"});
    for (int day = 0; day < sim.t_max; ++day)
      for (int i = 0; i < sim.n; ++i)
        w.row(day, i, static_cast<int>(sim.status[day][i]), sim.viral[day][i]);
  }
  {
    std::ofstream manifest(out_dir + "/manifest.json");
    manifest << "{\n"
             << "  \"seed\": " << config.rng_seed << ",\n"
             << "  \"n\": " << sim.n << ",\n"
             << "  \"t_max\": " << sim.t_max << ",\n"
             << "  \"alpha\": " << config.alpha << ",\n"
             << "  \"lambda0\": " << config.lambda0 << ",\n"
             << "  \"t_peak\": " << sim.t_peak << ",\n"
             << "  \"window_begin\": " << sim.window_begin << ",\n"
             << "  \"window_len\": " << SimOutput::kWindowLen << ",\n"
             << "  \"window_sparsity\": " << sim.window_sparsity() << "\n"
             << "}\n";
  }
}

void export_measurements(const std::vector<Vec>& per_day_y, int first_day,
                         const std::string& model, const std::string& params_desc,
                         uint64_t seed, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  CsvWriter w(out_dir + "/measurements.csv", {"day", "pool_index", "value"});
  for (std::size_t t = 0; t < per_day_y.size(); ++t)
    for (Eigen::Index i = 0; i < per_day_y[t].size(); ++i)
      w.row(first_day + static_cast<int>(t), i, per_day_y[t][i]);
  std::ofstream manifest(out_dir + "/channel.json");
  manifest << "{ \"model\": \"" << model << "\", \"params\": \"" << params_desc
           << "\", \"seed\": " << seed << " }\n";
}

namespace {

PoolingMatrix design_for(int m, uint64_t seed) {
  int r = 3000 / m;  // n=1000, c=3
  Rng rng(seed);
  return optimize_psi(m, 1000, r, 3, static_cast<long long>(1000) * r * 3, rng);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::string reproduce(const std::string& figure_id, const std::string& out_dir, uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::ostringstream summary;

  if (figure_id == "table1" || figure_id == "fig4-psi") {
    CsvWriter w(out_dir + "/table1.csv",
                {"m", "n", "r", "c", "N", "psi_canonical", "psi_final", "psi_target", "iterations",
                 "optimal"});
    const int sizes[3][4] = {{150, 1000, 20, 3}, {300, 1000, 10, 3}, {375, 1000, 8, 3}};
    summary << "matrix design (reference: optimal on all three sizes)\n";
    for (const auto& sz : sizes) {
      Rng rng(seed);
      OptimizeReport rep;
      long long N = static_cast<long long>(sz[1]) * sz[2] * sz[3];
      optimize_psi(sz[0], sz[1], sz[2], sz[3], N, rng, &rep);
      long long target = psi_bounds(sz[0], sz[1], sz[2], sz[3]).lower;
      w.row(sz[0], sz[1], sz[2], sz[3], N, rep.psi_initial, rep.psi_final, target, rep.iterations,
            rep.optimal ? 1 : 0);
      summary << "  m=" << sz[0] << " psi=" << rep.psi_final << " target=" << target
              << (rep.optimal ? " [optimal]" : " [NOT optimal]") << "\n";
    }
    return summary.str();
  }

  if (figure_id == "table2" || figure_id == "table5" || figure_id == "noisy-ct") {
    SimConfig cfg = scenario_config(2, seed);  // ~6% sparsity level
    SimOutput sim = run_simulation(cfg);
    summary << "window sparsity: " << fmt(sim.window_sparsity() * 100) << "%\n";

    if (figure_id == "table2") {
      PoolingMatrix A = design_for(300, seed);
      BinarySparse As = A.sparse();
      const char* names[] = {"comp", "comp-lasso", "comp-sqrt-glasso", "comp-sqrt-oglasso"};
      const M2Algorithm algs[] = {M2Algorithm::comp, M2Algorithm::comp_lasso,
                                  M2Algorithm::comp_sqrt_glasso, M2Algorithm::comp_sqrt_oglasso};
      // reference values from the 300x1000, ~6% setting
      const double ref_sens[] = {1.0, 0.964, 0.986, 0.986};
      const double ref_spec[] = {-1, -1, -1, 0.971};
      CsvWriter w(out_dir + "/table2.csv",
                  {"algorithm", "sensitivity", "sens_std", "specificity", "spec_std", "rrmse",
                   "ref_sensitivity", "ref_specificity"});
      for (int a = 0; a < 4; ++a) {
        M2WindowConfig mc;
        mc.algorithm = algs[a];
        mc.seed = seed;
        auto res = run_m2_window(sim, As, sim.families, mc);
        w.row(names[a], res.sensitivity.mean, res.sensitivity.stddev, res.specificity.mean,
              res.specificity.stddev, res.rrmse.mean, ref_sens[a], ref_spec[a]);
        summary << "  " << names[a] << ": sens " << fmt(res.sensitivity.mean) << " spec "
                << fmt(res.specificity.mean) << "\n";
      }
      return summary.str();
    }

    if (figure_id == "table5") {
      PoolingMatrix bal = design_for(300, seed);
      Rng brng(seed);
      PoolingMatrix bern =
          generate_baseline_matrix({BaselineKind::bernoulli, 0.5, 0, 0}, 300, 1000, brng);
      CsvWriter w(out_dir + "/table5.csv",
                  {"matrix", "sensitivity", "specificity", "ref_sensitivity", "ref_specificity"});
      for (int which = 0; which < 2; ++which) {
        M2WindowConfig mc;
        mc.seed = seed;
        auto res = run_m2_window(sim, which ? bern.sparse() : bal.sparse(), sim.families, mc);
        w.row(which ? "bernoulli_0.5" : "psi_optimal", res.sensitivity.mean, res.specificity.mean,
              which ? 0.912 : 0.986, which ? 0.828 : 0.971);
        summary << (which ? "  bernoulli(0.5): " : "  psi-optimal: ") << "sens "
                << fmt(res.sensitivity.mean) << " spec " << fmt(res.specificity.mean) << "\n";
      }
      return summary.str();
    }

    // noisy-ct
    PoolingMatrix A = design_for(300, seed);
    BinarySparse As = A.sparse();
    CsvWriter w(out_dir + "/noisy_ct.csv",
                {"add_fraction", "remove_fraction", "sensitivity", "specificity", "ref_sensitivity"});
    const double rows[][3] = {{0, 0, 0.986}, {0.12, 0, 0.983}, {0, 0.12, 0.983}, {0.12, 0.12, 0.982}};
    for (const auto& rowspec : rows) {
      M2WindowConfig mc;
      mc.seed = seed;
      mc.add_fraction = rowspec[0];
      mc.remove_fraction = rowspec[1];
      auto res = run_m2_window(sim, As, sim.families, mc);
      w.row(rowspec[0], rowspec[1], res.sensitivity.mean, res.specificity.mean, rowspec[2]);
      summary << "  add " << rowspec[0] << " remove " << rowspec[1] << ": sens "
              << fmt(res.sensitivity.mean) << " spec " << fmt(res.specificity.mean) << "\n";
    }
    return summary.str();
  }

  if (figure_id == "fig3") {
    SimConfig cfg = scenario_config(0, seed);
    SimOutput sim = run_simulation(cfg);
    PoolingMatrix A = design_for(375, seed);
    CsvWriter w(out_dir + "/fig3_roc.csv", {"denoiser", "threshold", "fpr", "fnr"});
    summary << "window sparsity: " << fmt(sim.window_sparsity() * 100) << "%\n";
    for (auto kind : {DenoiserKind::ct, DenoiserKind::family}) {
      M1WindowConfig mc;
      mc.denoiser = kind;
      mc.seed = seed;
      auto res = run_m1_window(sim, A.sparse(), mc);
      const char* name = kind == DenoiserKind::ct ? "ct" : "family";
      for (const auto& p : res.averaged_roc.points) w.row(name, p.threshold, p.fpr, p.fnr);
      summary << "  " << name << ": total error " << fmt(res.mean_total_error) << " at threshold "
              << fmt(res.operating_threshold) << "\n";
    }
    return summary.str();
  }

  if (figure_id == "fig5" || figure_id == "fig1") {
    CsvWriter w(out_dir + "/fig5.csv",
                {"sparsity_level", "m", "algorithm", "mean_fnr", "mean_fpr", "mean_mcc"});
    const M2Algorithm algs[] = {M2Algorithm::comp_lasso, M2Algorithm::comp_sqrt_glasso,
                                M2Algorithm::comp_sqrt_oglasso};
    for (int level = 0; level < 4; ++level) {
      SimOutput sim = run_simulation(scenario_config(level, seed));
      for (int m : {150, 300, 375}) {
        PoolingMatrix A = design_for(m, seed);
        for (auto alg : algs) {
          M2WindowConfig mc;
          mc.algorithm = alg;
          mc.seed = seed;
          mc.signals = 25;
          auto res = run_m2_window(sim, A.sparse(), sim.families, mc);
          w.row(level, m, to_string(alg), res.fnr.mean, res.fpr.mean, res.mcc.mean);
          summary << "  level " << level << " m=" << m << " " << to_string(alg) << ": fnr+fpr "
                  << fmt(res.fnr.mean + res.fpr.mean) << "\n";
        }
      }
    }
    return summary.str();
  }

  if (figure_id == "fig6") {
    SimConfig cfg = scenario_config(3, seed);
    SimOutput sim = run_simulation(cfg);
    PoolingMatrix A = design_for(375, seed);
    CsvWriter w(out_dir + "/fig6.csv", {"p_excluded", "mean_total_error", "ref"});
    const double refs[] = {0.038, 0.039, 0.046, 0.148, 0.407};
    const double ps[] = {0, 0.1, 0.5, 0.75, 1.0};
    for (int t = 0; t < 5; ++t) {
      M1WindowConfig mc;
      mc.seed = seed;
      mc.p_excluded = ps[t];
      auto res = run_m1_window(sim, A.sparse(), mc);
      w.row(ps[t], res.mean_total_error, refs[t]);
      summary << "  p_excluded " << ps[t] << ": total error " << fmt(res.mean_total_error)
              << " (reference " << refs[t] << ")\n";
    }
    return summary.str();
  }

  throw std::invalid_argument("reproduce: unknown figure id '" + figure_id +
                              "' (supported: table1 table2 table5 fig1 fig3 fig5 fig6 noisy-ct)");
}

}  // namespace pooltrace
