#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pooltrace/cs.hpp"
#include "pooltrace/csvio.hpp"
#include "pooltrace/gamp.hpp"
#include "pooltrace/graph.hpp"
#include "pooltrace/harness.hpp"
#include "pooltrace/matrix.hpp"
#include "pooltrace/measure.hpp"
#include "pooltrace/metrics.hpp"
#include "pooltrace/sim.hpp"

namespace fs = std::filesystem;
using namespace pooltrace;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string key, value;
    auto eq = line.find('=');
    if (eq != std::string::npos) {
      key = line.substr(0, eq);
      value = line.substr(eq + 1);
    } else {
      std::istringstream ls(line);
      ls >> key;
      std::getline(ls, value);
    }
    auto trim = [](std::string& s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for '" + key + "': " + v);
  }
}

SimConfig sim_config_from_file(const std::string& path) {
  SimConfig cfg;
  for (const auto& [key, value] : read_kv_file(path)) {
    if (key == "n") cfg.n = static_cast<int>(to_double(key, value));
    else if (key == "t_max") cfg.t_max = static_cast<int>(to_double(key, value));
    else if (key == "k1") cfg.k1 = static_cast<int>(to_double(key, value));
    else if (key == "k2") cfg.k2 = static_cast<int>(to_double(key, value));
    else if (key == "infection_duration") cfg.infection_duration = static_cast<int>(to_double(key, value));
    else if (key == "p1") cfg.p1 = to_double(key, value);
    else if (key == "lambda0") cfg.lambda0 = to_double(key, value);
    else if (key == "alpha") cfg.alpha = to_double(key, value);
    else if (key == "viral_load_min") cfg.viral_load_range.first = to_double(key, value);
    else if (key == "viral_load_max") cfg.viral_load_range.second = to_double(key, value);
    else if (key == "tau_intra_min") cfg.tau_intra_range.first = to_double(key, value);
    else if (key == "tau_intra_max") cfg.tau_intra_range.second = to_double(key, value);
    else if (key == "tau_inter_min") cfg.tau_inter_range.first = to_double(key, value);
    else if (key == "tau_inter_max") cfg.tau_inter_range.second = to_double(key, value);
    else if (key == "d_min") cfg.d_range.first = to_double(key, value);
    else if (key == "d_max") cfg.d_range.second = to_double(key, value);
    else if (key == "overlap_variant") cfg.overlap_variant = to_double(key, value) != 0;
    else if (key == "overlap_edge_removal") cfg.overlap_edge_removal = to_double(key, value);
    else if (key == "seed") cfg.rng_seed = static_cast<uint64_t>(to_double(key, value));
    else if (key == "family_size_pmf") {
      cfg.family_size_pmf.clear();
      std::istringstream vs(value);
      std::string tok;
      while (std::getline(vs, tok, ','))
        cfg.family_size_pmf.push_back(to_double(key, tok));
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  return cfg;
}

// measurements.csv (day,pool_index,value) -> day -> vector
std::map<int, Vec> read_measurements(const std::string& path, int m) {
  auto rows = read_csv(path);
  std::map<int, std::vector<std::pair<int, double>>> tmp;
  for (const auto& row : rows) {
    if (row.size() != 3) throw ConfigError("measurements row needs 3 columns");
    tmp[static_cast<int>(to_double("day", row[0]))].emplace_back(
        static_cast<int>(to_double("pool_index", row[1])), to_double("value", row[2]));
  }
  std::map<int, Vec> out;
  for (auto& [day, entries] : tmp) {
    Vec y = Vec::Zero(m);
    for (auto& [idx, v] : entries) {
      if (idx < 0 || idx >= m) throw ConfigError("pool index out of range in measurements");
      y[idx] = v;
    }
    out[day] = y;
  }
  return out;
}

// ground_truth.csv (day,individual,phase,viral_load)
struct TruthData {
  std::map<int, std::vector<uint8_t>> status;
  std::map<int, Vec> viral;
};

TruthData read_truth(const std::string& path, int n) {
  TruthData td;
  for (const auto& row : read_csv(path)) {
    if (row.size() != 4) throw ConfigError("ground truth row needs 4 columns");
    int day = static_cast<int>(to_double("day", row[0]));
    int i = static_cast<int>(to_double("individual", row[1]));
    if (i < 0 || i >= n) throw ConfigError("individual index out of range in ground truth");
    auto& st = td.status[day];
    if (st.empty()) st.assign(n, 0);
    auto& vl = td.viral[day];
    if (vl.size() == 0) vl = Vec::Zero(n);
    st[i] = to_double("phase", row[2]) != 0 ? 1 : 0;
    vl[i] = to_double("viral_load", row[3]);
  }
  return td;
}

std::vector<std::vector<int>> read_groups_file(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open groups file: " + path);
  std::vector<std::vector<int>> groups;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<int> g;
    int v;
    while (ls >> v) {
      if (v < 0 || v >= n) throw ConfigError("group index out of range in " + path);
      g.push_back(v);
    }
    if (!g.empty()) groups.push_back(g);
  }
  return groups;
}

std::vector<ContactEvent> read_contacts(const std::string& path, int n) {
  std::vector<ContactEvent> events;
  for (const auto& row : read_csv(path)) {
    if (row.size() < 5) throw ConfigError("contacts row needs at least 5 columns");
    ContactEvent e;
    e.day = static_cast<int>(to_double("day", row[0]));
    e.i = static_cast<int>(to_double("i", row[1]));
    e.j = static_cast<int>(to_double("j", row[2]));
    e.tau = to_double("tau_hours", row[3]);
    e.d = to_double("proximity", row[4]);
    e.intra = row.size() > 5 && row[5] == "intra_clique";
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n)
      throw ConfigError("contact index out of range");
    events.push_back(e);
  }
  return events;
}

int run_simulate(const std::string& config_path, const std::string& out_dir, int64_t seed,
                 int level) {
  SimConfig cfg = level >= 0 ? scenario_config(level, 1) : SimConfig{};
  if (!config_path.empty()) cfg = sim_config_from_file(config_path);
  if (level >= 0 && !config_path.empty()) {
    cfg.lambda0 = scenario_defaults().lambda0;
    cfg.alpha = scenario_defaults().alphas[static_cast<std::size_t>(level)];
  }
  if (seed >= 0) cfg.rng_seed = static_cast<uint64_t>(seed);
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  SimOutput sim = run_simulation(cfg);
  export_sim(sim, cfg, out_dir);
  std::cout << "simulated n=" << sim.n << " t_max=" << sim.t_max << " t_peak=" << sim.t_peak
            << " window=[" << sim.window_begin << "," << sim.window_begin + SimOutput::kWindowLen
            << ") sparsity=" << sim.window_sparsity() << "\n";
  return kExitOk;
}

int run_design(int m, int n, int r, int c, const std::string& contact_graph, bool phi_stage,
               const std::string& baseline, double bern_p, uint64_t seed,
               const std::string& out_path) {
  Rng rng(seed);
  PoolingMatrix A;
  OptimizeReport rep;
  if (baseline.empty()) {
    A = optimize_psi(m, n, r, c, static_cast<long long>(n) * r * c, rng, &rep);
    std::cout << "psi " << rep.psi_initial << " -> " << rep.psi_final << " (target "
              << psi_bounds(m, n, r, c).lower << ", " << (rep.optimal ? "optimal" : "not optimal")
              << ")\n";
    if (phi_stage) {
      if (contact_graph.empty())
        throw ConfigError("--phi-stage requires --contact-graph");
      std::vector<std::pair<int, int>> edges;
      for (const auto& row : read_csv(contact_graph)) {
        if (row.size() < 2) throw ConfigError("edge list row needs 2 columns");
        edges.emplace_back(static_cast<int>(to_double("i", row[0])),
                           static_cast<int>(to_double("j", row[1])));
      }
      ContactWeights b = ContactWeights::from_edges(n, edges);
      OptimizeReport prep;
      optimize_phi(A, b, 10LL * n * c, rng, &prep);
      std::cout << "phi -> " << prep.phi_final << "\n";
    }
  } else {
    BaselineSpec spec;
    spec.p = bern_p;
    spec.c = c;
    spec.r = r;
    if (baseline == "bernoulli") spec.kind = BaselineKind::bernoulli;
    else if (baseline == "column-balanced") spec.kind = BaselineKind::column_balanced;
    else if (baseline == "random-balanced") spec.kind = BaselineKind::random_balanced;
    else throw ConfigError("unknown baseline kind: " + baseline);
    A = generate_baseline_matrix(spec, m, n, rng);
  }
  save_matrix(A, out_path);
  return kExitOk;
}

int run_pool(const std::string& matrix_path, bool allow_unbalanced, const std::string& truth_path,
             const std::string& model, uint64_t seed, const std::string& out_dir) {
  PoolingMatrix A = load_matrix(matrix_path, allow_unbalanced);
  BinarySparse As = A.sparse();
  TruthData td = read_truth(truth_path, A.n);
  Rng rng(seed);
  std::vector<Vec> per_day;
  int first_day = td.status.empty() ? 0 : td.status.begin()->first;
  std::string params;
  for (const auto& [day, st] : td.status) {
    if (model == "m1") {
      Vec x(A.n);
      for (int i = 0; i < A.n; ++i) x[i] = st[i];
      auto y = measure_m1(pool(As, x), BinaryChannelParams{}, rng);
      Vec yd(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) yd[static_cast<Eigen::Index>(i)] = y[i];
      per_day.push_back(yd);
      params = "p_false_pos=0.001 p_false_neg=0.02";
    } else if (model == "m2") {
      per_day.push_back(measure_m2(pool(As, td.viral[day]), MultiplicativeChannelParams{}, rng));
      params = "q_a=0.95 sigma2=0.01";
    } else {
      throw ConfigError("unknown model: " + model);
    }
  }
  export_measurements(per_day, first_day, model, params, seed, out_dir);
  return kExitOk;
}

int run_decode(const std::string& model, const std::string& algorithm, const std::string& denoiser,
               const std::string& matrix_path, bool allow_unbalanced,
               const std::string& measurements_path, const std::string& groups_path,
               const std::string& contacts_path, const std::string& config_path, uint64_t seed,
               const std::string& out_dir) {
  PoolingMatrix A = load_matrix(matrix_path, allow_unbalanced);
  BinarySparse As = A.sparse();
  auto per_day = read_measurements(measurements_path, A.m);
  fs::create_directories(out_dir);
  Rng rng(seed);

  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = read_kv_file(config_path);
  auto kv_get = [&](const std::string& key, double fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : to_double(key, it->second);
  };

  if (model == "m2") {
    M2Algorithm alg;
    if (algorithm == "comp") alg = M2Algorithm::comp;
    else if (algorithm == "comp-lasso") alg = M2Algorithm::comp_lasso;
    else if (algorithm == "comp-sqrt-glasso") alg = M2Algorithm::comp_sqrt_glasso;
    else if (algorithm == "comp-sqrt-oglasso") alg = M2Algorithm::comp_sqrt_oglasso;
    else throw ConfigError("unknown algorithm: " + algorithm);

    GroupStructure groups;
    if (!groups_path.empty()) {
      groups.groups = read_groups_file(groups_path, A.n);
      std::set<int> seen;
      groups.overlapping = false;
      for (const auto& g : groups.groups)
        for (int v : g)
          if (!seen.insert(v).second) groups.overlapping = true;
    } else if (alg == M2Algorithm::comp_sqrt_glasso || alg == M2Algorithm::comp_sqrt_oglasso) {
      throw ConfigError("algorithm " + algorithm + " requires --groups");
    }
    SolverConfig sc;
    sc.rho = kv_get("rho", sc.rho);
    sc.max_iters = static_cast<int>(kv_get("max_iters", sc.max_iters));
    sc.tol = kv_get("tol", sc.tol);
    sc.tau_n = kv_get("tau_n", sc.tau_n);
    sc.cv_folds = static_cast<int>(kv_get("cv_folds", sc.cv_folds));
    sc.cv_grid = static_cast<int>(kv_get("cv_grid", sc.cv_grid));

    CsvWriter w(out_dir + "/decisions.csv", {"day", "individual", "positive", "x_hat"});
    for (const auto& [day, y] : per_day) {
      DecodeResult dec = decode_m2(As, y, alg, groups, sc, rng);
      if (alg != M2Algorithm::comp && !dec.stats.converged)
        throw NumericalError("solver failed to converge on day " + std::to_string(day));
      for (int i = 0; i < A.n; ++i) w.row(day, i, static_cast<int>(dec.positive[i]), dec.x_hat[i]);
    }
    return kExitOk;
  }

  if (model != "m1") throw ConfigError("unknown model: " + model);

  GampConfig gc;
  gc.max_iters = static_cast<int>(kv_get("max_iters", gc.max_iters));
  gc.damping = kv_get("damping", gc.damping);
  gc.tol = kv_get("tol", gc.tol);
  double threshold = kv_get("threshold", 0.5);
  double fallback_prior = kv_get("fallback_prior", 0.05);
  int si_days = static_cast<int>(kv_get("si_days", 8));
  double epsilon = kv_get("epsilon", 1e-3);

  CsvWriter w(out_dir + "/decisions.csv", {"day", "individual", "prior", "posterior", "decision"});
  if (denoiser == "family") {
    if (groups_path.empty()) throw ConfigError("family denoiser requires --groups (families)");
    FamilyModel fm;
    fm.families = read_groups_file(groups_path, A.n);
    for (const auto& [day, yv] : per_day) {
      std::vector<uint8_t> y(yv.size());
      for (Eigen::Index i = 0; i < yv.size(); ++i) y[static_cast<std::size_t>(i)] = yv[i] > 0.5;
      auto gr = gamp_run(As, y, make_family_denoiser(fm), BinaryChannelParams{}, gc);
      if (gr.diverged) throw NumericalError("GAMP diverged on day " + std::to_string(day));
      auto fitted = fit_family_params(gr.pseudo_data, gr.Delta, fm.families);
      fm.pi_vf = fitted.first;
      fm.pi_ind = fitted.second;
      double prior = fm.pi_vf * fm.pi_ind;
      for (int i = 0; i < A.n; ++i)
        w.row(day, i, prior, gr.marginals[i], gr.marginals[i] > threshold ? 1 : 0);
    }
    return kExitOk;
  }
  if (denoiser != "ct") throw ConfigError("unknown denoiser: " + denoiser);
  if (contacts_path.empty()) throw ConfigError("ct denoiser requires --contacts");

  auto events = read_contacts(contacts_path, A.n);
  CtPriorTracker tracker(A.n, si_days, epsilon);
  std::map<int, std::vector<ContactEvent>> by_day;
  for (const auto& e : events) by_day[e.day].push_back(e);
  for (const auto& [day, evs] : by_day) tracker.add_contacts(day, evs);
  int first = per_day.begin()->first;
  for (int d = first - si_days; d < first; ++d)
    tracker.set_estimates(d, Vec::Constant(A.n, fallback_prior));
  double lambda_hat = 1e-3;
  for (const auto& [day, yv] : per_day) {
    std::vector<uint8_t> y(yv.size());
    for (Eigen::Index i = 0; i < yv.size(); ++i) y[static_cast<std::size_t>(i)] = yv[i] > 0.5;
    Vec prior = tracker.prior_for_day(day, lambda_hat);
    auto gr = gamp_run(As, y, make_ct_denoiser(prior), BinaryChannelParams{}, gc);
    if (gr.diverged) throw NumericalError("GAMP diverged on day " + std::to_string(day));
    auto ml = ml_lambda(gr.pseudo_data, gr.Delta,
                        [&](double lam) { return tracker.prior_for_day(day, lam); });
    if (!ml.degenerate) lambda_hat = ml.lambda;
    tracker.set_estimates(day, gr.marginals);
    for (int i = 0; i < A.n; ++i)
      w.row(day, i, prior[i], gr.marginals[i], gr.marginals[i] > threshold ? 1 : 0);
  }
  return kExitOk;
}

int run_evaluate(const std::string& truth_path, const std::string& decisions_path,
                 const std::string& out_dir, bool roc) {
  auto truth_rows = read_csv(truth_path);
  int n = 0;
  for (const auto& row : truth_rows)
    n = std::max(n, static_cast<int>(to_double("individual", row[1])) + 1);
  TruthData td = read_truth(truth_path, n);

  // decode output: m2 (day,individual,positive,x_hat) or m1 (day,individual,prior,posterior,decision)
  auto rows = read_csv(decisions_path);
  std::map<int, std::vector<uint8_t>> pred;
  std::map<int, Vec> xhat;
  std::map<int, Vec> score;
  for (const auto& row : rows) {
    if (row.size() < 4) throw ConfigError("decisions row needs at least 4 columns");
    int day = static_cast<int>(to_double("day", row[0]));
    int i = static_cast<int>(to_double("individual", row[1]));
    if (i < 0 || i >= n) throw ConfigError("individual out of range in decisions");
    auto& p = pred[day];
    if (p.empty()) p.assign(n, 0);
    auto& xh = xhat[day];
    if (xh.size() == 0) xh = Vec::Zero(n);
    auto& sc = score[day];
    if (sc.size() == 0) sc = Vec::Zero(n);
    if (row.size() == 4) {
      p[i] = to_double("positive", row[2]) != 0;
      xh[i] = to_double("x_hat", row[3]);
      sc[i] = xh[i];
    } else {
      sc[i] = to_double("posterior", row[3]);
      p[i] = to_double("decision", row[4]) != 0;
    }
  }

  fs::create_directories(out_dir);
  CsvWriter w(out_dir + "/metrics.csv",
              {"day", "tp", "tn", "fp", "fn", "fnr", "fpr", "sensitivity", "specificity", "mcc",
               "rrmse"});
  auto cell = [](const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("na");
  };
  for (const auto& [day, p] : pred) {
    auto it = td.status.find(day);
    if (it == td.status.end()) throw ConfigError("no ground truth for day " + std::to_string(day));
    bool have_loads = rows[0].size() == 4;
    MetricsRecord rec = compute_metrics(it->second, p, have_loads ? &td.viral[day] : nullptr,
                                        have_loads ? &xhat[day] : nullptr);
    w.row(day, rec.tp, rec.tn, rec.fp, rec.fn, cell(rec.fnr), cell(rec.fpr), cell(rec.sensitivity),
          cell(rec.specificity), cell(rec.mcc), cell(rec.rrmse));
  }
  if (roc) {
    CsvWriter rw(out_dir + "/roc.csv", {"day", "threshold", "fpr", "fnr"});
    for (const auto& [day, sc] : score) {
      Vec norm = sc;
      double mx = norm.maxCoeff();
      if (mx > 0) norm /= mx;
      RocCurve curve = roc_sweep(norm, td.status[day]);
      for (const auto& pt : curve.points) rw.row(day, pt.threshold, pt.fpr, pt.fnr);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pooled-testing workbench: simulation, matrix design, decoding"};
  app.require_subcommand(1);
  app.fallthrough();  // let subcommands consume the global --seed

  int64_t seed = -1;
  app.add_option("--seed", seed, "global RNG seed")->capture_default_str();

  auto* sim_cmd = app.add_subcommand("simulate", "run the epidemic simulator");
  std::string sim_config, sim_out = "sim_out";
  int sim_level = -1;
  sim_cmd->add_option("--config", sim_config, "key/value config file");
  sim_cmd->add_option("--level", sim_level, "scenario sparsity level 0..3");
  sim_cmd->add_option("--out", sim_out, "output directory")->required();

  auto* design_cmd = app.add_subcommand("design-matrix", "construct a pooling matrix");
  int dm = 0, dn = 0, dr = 0, dc = 0;
  std::string d_graph, d_baseline, d_out;
  bool d_phi = false;
  double d_p = 0.5;
  design_cmd->add_option("--m", dm, "pools")->required();
  design_cmd->add_option("--n", dn, "individuals")->required();
  design_cmd->add_option("--r", dr, "ones per row")->required();
  design_cmd->add_option("--c", dc, "ones per column")->required();
  design_cmd->add_option("--contact-graph", d_graph, "edge list CSV i,j");
  design_cmd->add_flag("--phi-stage", d_phi, "run the contact-weighted second stage");
  design_cmd->add_option("--baseline", d_baseline, "bernoulli|column-balanced|random-balanced");
  design_cmd->add_option("--p", d_p, "bernoulli density")->capture_default_str();
  design_cmd->add_option("--out", d_out, "matrix output file")->required();

  auto* pool_cmd = app.add_subcommand("pool", "generate pooled measurements");
  std::string p_matrix, p_truth, p_model = "m2", p_out = "pool_out";
  bool p_unbalanced = false;
  pool_cmd->add_option("--matrix", p_matrix)->required();
  pool_cmd->add_flag("--allow-unbalanced", p_unbalanced);
  pool_cmd->add_option("--truth", p_truth, "ground truth CSV")->required();
  pool_cmd->add_option("--model", p_model, "m1|m2")->capture_default_str();
  pool_cmd->add_option("--out", p_out, "output directory")->required();

  auto* dec_cmd = app.add_subcommand("decode", "decode pooled measurements");
  std::string c_model, c_alg = "comp-sqrt-oglasso", c_den = "ct", c_matrix, c_meas, c_groups,
              c_contacts, c_config, c_out = "decode_out";
  bool c_unbalanced = false;
  dec_cmd->add_option("--model", c_model, "m1|m2")->required();
  dec_cmd->add_option("--algorithm", c_alg, "m2 algorithm")->capture_default_str();
  dec_cmd->add_option("--denoiser", c_den, "m1 denoiser: family|ct")->capture_default_str();
  dec_cmd->add_option("--matrix", c_matrix)->required();
  dec_cmd->add_flag("--allow-unbalanced", c_unbalanced);
  dec_cmd->add_option("--measurements", c_meas)->required();
  dec_cmd->add_option("--groups", c_groups, "groups file, one group per line");
  dec_cmd->add_option("--contacts", c_contacts, "contact log CSV");
  dec_cmd->add_option("--config", c_config, "solver/decoder key/value file");
  dec_cmd->add_option("--out", c_out, "output directory")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "score decisions against ground truth");
  std::string e_truth, e_decisions, e_out = "eval_out";
  bool e_roc = false;
  eval_cmd->add_option("--truth", e_truth)->required();
  eval_cmd->add_option("--decisions", e_decisions)->required();
  eval_cmd->add_flag("--roc", e_roc, "also export per-day ROC sweeps");
  eval_cmd->add_option("--out", e_out, "output directory")->required();

  auto* rep_cmd = app.add_subcommand("reproduce", "reproduce a reference figure or table");
  std::string r_id, r_out = "repro_out";
  rep_cmd->add_option("--id", r_id, "table1|table2|table5|fig1|fig3|fig5|fig6|noisy-ct")
      ->required();
  rep_cmd->add_option("--out", r_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  uint64_t s = seed >= 0 ? static_cast<uint64_t>(seed) : 1;
  try {
    if (sim_cmd->parsed()) return run_simulate(sim_config, sim_out, seed, sim_level);
    if (design_cmd->parsed())
      return run_design(dm, dn, dr, dc, d_graph, d_phi, d_baseline, d_p, s, d_out);
    if (pool_cmd->parsed()) return run_pool(p_matrix, p_unbalanced, p_truth, p_model, s, p_out);
    if (dec_cmd->parsed())
      return run_decode(c_model, c_alg, c_den, c_matrix, c_unbalanced, c_meas, c_groups,
                        c_contacts, c_config, s, c_out);
    if (eval_cmd->parsed()) return run_evaluate(e_truth, e_decisions, e_out, e_roc);
    if (rep_cmd->parsed()) {
      std::cout << reproduce(r_id, r_out, s);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DesignError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SimError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
