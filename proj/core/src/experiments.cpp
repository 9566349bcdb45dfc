#include "mfgc/experiments.hpp"

#include "mfgc/csv.hpp"
#include "mfgc/errors.hpp"
#include "mfgc/fixed_point.hpp"
#include "mfgc/log.hpp"
#include "mfgc/master.hpp"
#include "mfgc/monotonicity.hpp"
#include "mfgc/nash.hpp"
#include "mfgc/rng.hpp"
#include "mfgc/svg.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace mfgc {

namespace {

using nlohmann::json;

constexpr double kNashOracleBand = 5e-3;      // sup error vs the quadratic oracle
constexpr double kMomentOracleBand = 1e-3;    // mean-field moment match
const double kDecaySlopeFirst[2] = {-1.3, -0.7};
const double kDecaySlopeSecond[2] = {-2.5, -1.5};
const double kConvergenceSlope[2] = {0.5, 1.5};  // err ~ (1/N)^slope

ModelPtr model_from(const ExperimentConfig& cfg) {
  return make_model(cfg.model_family, cfg.spec, cfg.eps, cfg.sigma0, cfg.horizon,
                    cfg.dim);
}

void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << doc.dump(2) << "\n";
}

bool in_band(double v, const double band[2]) { return v >= band[0] && v <= band[1]; }

json report_to_json(const MonotonicityReport& report) {
  json witnesses = json::array();
  for (const auto& w : report.witnesses)
    witnesses.push_back({{"sample", w.sample_id}, {"value", w.value},
                         {"description", w.description}});
  return json{{"kind", audit_kind_name(report.kind)},
              {"samples", report.samples},
              {"worst_value", report.worst_value},
              {"threshold", report.threshold},
              {"pass", report.pass},
              {"fitted", report.fitted},
              {"witnesses", witnesses}};
}

// Matched residual probes across player counts: shared time fraction, x and
// atom pool; lift N consumes the first N-1 atoms.
std::vector<std::vector<ResidualProbe>> matched_residual_probes(
    const std::vector<std::shared_ptr<const MasterLift>>& lifts, int count,
    std::uint64_t seed, double scale) {
  int max_atoms = 0;
  for (const auto& lift : lifts) max_atoms = std::max(max_atoms, lift->players() - 1);
  Rng rng(seed);
  struct Pool {
    double tfrac, x;
    std::vector<double> atoms;
  };
  std::vector<Pool> pool(static_cast<std::size_t>(count));
  for (auto& p : pool) {
    p.tfrac = 0.15 + 0.7 * rng.uniform();
    p.x = scale * rng.normal();
    p.atoms.resize(static_cast<std::size_t>(max_atoms));
    for (double& a : p.atoms) a = scale * rng.normal();
  }
  std::vector<std::vector<ResidualProbe>> out;
  for (const auto& lift : lifts) {
    std::vector<ResidualProbe> probes;
    const int n_atoms = lift->players() - 1;
    for (const Pool& p : pool) {
      ResidualProbe probe;
      probe.slice = std::clamp(
          static_cast<int>(std::lround(p.tfrac * (lift->slice_count() - 1))), 1,
          lift->slice_count() - 2);
      Vec x(1);
      x(0) = p.x;
      probe.x = lift->snap(x);
      Eigen::MatrixXd atoms(n_atoms, 1);
      for (int j = 0; j < n_atoms; ++j) {
        Vec y(1);
        y(0) = p.atoms[static_cast<std::size_t>(j)];
        atoms.row(j) = lift->snap(y).transpose();
      }
      probe.cloud = StateCloud(atoms);
      probes.push_back(std::move(probe));
    }
    out.push_back(std::move(probes));
  }
  return out;
}

double median_abs_residual(const std::vector<ResidualRow>& rows) {
  std::vector<double> vals;
  vals.reserve(rows.size());
  for (const auto& r : rows) vals.push_back(std::abs(r.residual));
  std::sort(vals.begin(), vals.end());
  return vals.empty() ? 0.0 : vals[vals.size() / 2];
}

// ---------------------------------------------------------------------------

int run_fixedpoint_decay(const ExperimentConfig& cfg) {
  ModelPtr model = model_from(cfg);
  Rng rng(cfg.seed);
  CsvWriter csv({"N", "i", "j", "k", "l", "omega", "norm", "norm_over_omega"});

  std::vector<double> ns, offdiag_norms, second_distinct_ns, second_distinct_norms;
  for (int n_players : cfg.n_list) {
    Rng stream = rng.stream(static_cast<std::uint64_t>(n_players));
    PlayerVector x = stream.normal_matrix(n_players, cfg.dim, cfg.sample_scale);
    PlayerVector p = stream.normal_matrix(n_players, cfg.dim, cfg.sample_scale);
    FixedPointOptions opts;
    opts.tol = cfg.tol;
    FixedPointResult fp = solve_action_profile(*model, x, p, opts);
    BlockMatrix jac = action_jacobian_p(*model, x, fp.actions);

    // first-order rows: the diagonal block and the worst off-diagonal block
    double diag = jac.block(0, 0).norm();
    csv.add_row({format_double(n_players), "1", "1", "0", "0", "1", format_double(diag),
                 format_double(diag)});
    double worst = 0.0;
    int wi = 0, wj = 1;
    for (int i = 0; i < n_players; ++i)
      for (int j = 0; j < n_players; ++j) {
        if (i == j) continue;
        double norm = jac.block(i, j).norm();
        if (norm > worst) {
          worst = norm;
          wi = i;
          wj = j;
        }
      }
    double omega = omega_weight(n_players, {wi, wj});
    csv.add_row({format_double(n_players), std::to_string(wi + 1), std::to_string(wj + 1),
                 "0", "0", format_double(omega), format_double(worst),
                 format_double(worst / omega)});
    ns.push_back(n_players);
    offdiag_norms.push_back(worst);

    // second-order probes per index class
    std::vector<DerivativeProbe> probes;
    if (n_players >= 3) probes.push_back({0, 1, 2, -1});  // all distinct
    probes.push_back({0, 0, 0, -1});                      // repeated
    if (n_players >= 2) probes.push_back({0, 1, 1, -1});  // two distinct
    std::vector<DecayRow> rows =
        higher_derivatives(*model, x, p, probes, 1e-4, cfg.tol, cfg.workers);
    for (const DecayRow& row : rows) {
      csv.add_row({format_double(row.n_players), std::to_string(row.i),
                   std::to_string(row.j), std::to_string(row.k), std::to_string(row.l),
                   format_double(row.omega), format_double(row.norm),
                   format_double(row.norm / row.omega)});
      if (row.i != row.j && row.j != row.k && row.i != row.k && row.l == 0) {
        second_distinct_ns.push_back(row.n_players);
        second_distinct_norms.push_back(row.norm);
      }
    }
    // one third-order probe at small N (reported, no band)
    if (n_players >= 4 && n_players <= 16) {
      std::vector<DerivativeProbe> third{{0, 1, 2, 3}};
      for (const DecayRow& row :
           higher_derivatives(*model, x, p, third, 1e-4, cfg.tol, cfg.workers))
        csv.add_row({format_double(row.n_players), std::to_string(row.i),
                     std::to_string(row.j), std::to_string(row.k), std::to_string(row.l),
                     format_double(row.omega), format_double(row.norm),
                     format_double(row.norm / row.omega)});
    }
  }

  ensure_dir(cfg.out_dir);
  std::string csv_path = cfg.out_dir + "/decay.csv";
  csv.write(csv_path);
  emit_plots(csv_path, "decay", cfg.out_dir);

  json summary;
  bool pass = true;
  if (ns.size() >= 2) {
    double slope1 = loglog_slope(ns, offdiag_norms);
    summary["first_order_offdiag_slope"] = slope1;
    summary["first_order_band"] = {kDecaySlopeFirst[0], kDecaySlopeFirst[1]};
    pass = pass && in_band(slope1, kDecaySlopeFirst);
  }
  if (second_distinct_ns.size() >= 2) {
    double slope2 = loglog_slope(second_distinct_ns, second_distinct_norms);
    summary["second_order_distinct_slope"] = slope2;
    summary["second_order_band"] = {kDecaySlopeSecond[0], kDecaySlopeSecond[1]};
    pass = pass && in_band(slope2, kDecaySlopeSecond);
  }
  summary["pass"] = pass;
  write_json(cfg.out_dir + "/summary.json", summary);
  return pass ? 0 : 2;
}

int run_monotonicity_audit(const ExperimentConfig& cfg) {
  ModelPtr model = model_from(cfg);
  AuditOptions opts;
  opts.samples = cfg.samples;
  opts.cloud_size = cfg.cloud_size;
  opts.seed = cfg.seed;
  opts.scale = cfg.sample_scale;

  std::vector<MonotonicityReport> reports;
  for (int n_players : cfg.n_list)
    reports.push_back(audit_discrete_M(*model, n_players, opts));
  MonotonicityReport disp_l = audit_disp_L(*model, opts);
  MonotonicityReport disp_g = audit_disp_G(*model, opts);
  reports.push_back(disp_l);
  reports.push_back(disp_g);
  reports.push_back(audit_ll(*model, AuditTarget::kLagrangian, opts));
  reports.push_back(audit_ll(*model, AuditTarget::kTerminal, opts));
  std::map<std::string, double> fitted;
  for (const auto& kv : disp_l.fitted) fitted[kv.first] = kv.second;
  for (const auto& kv : disp_g.fitted) fitted[kv.first] = kv.second;
  reports.push_back(compute_C_disp(*model, &fitted));

  ensure_dir(cfg.out_dir);
  CsvWriter csv({"kind", "sample_id", "value"});
  for (const auto& report : reports)
    for (const auto& [sample, value] : report.values)
      csv.add_row({audit_kind_name(report.kind), std::to_string(sample),
                   format_double(value)});
  csv.write(cfg.out_dir + "/audits.csv");

  json summary;
  summary["reports"] = json::array();
  bool pass = true;
  for (const auto& report : reports) {
    summary["reports"].push_back(report_to_json(report));
    // disp_G estimates a constant rather than verifying a bound
    if (report.kind != AuditKind::kDispG) pass = pass && report.pass;
  }
  summary["pass"] = pass;
  write_json(cfg.out_dir + "/audit_summary.json", summary);
  return pass ? 0 : 2;
}

int run_nash_solve(const ExperimentConfig& cfg) {
  ModelPtr model = model_from(cfg);
  ensure_dir(cfg.out_dir);
  CsvWriter decay({"N", "i", "j", "k", "l", "omega", "norm", "norm_over_omega"});
  json summary;
  summary["fields"] = json::array();
  bool pass = true;

  for (int n_players : cfg.n_list) {
    Grid grid = Grid::make(cfg.grid_radius, cfg.grid_points, cfg.horizon, n_players, 1,
                           cfg.sigma0);
    NashSolveOptions opts;
    opts.workers = cfg.workers;
    ValueField field = solve_nash_grid(*model, n_players, grid, opts);
    field.model = model;
    std::string bin = cfg.out_dir + "/field_N" + std::to_string(n_players) + ".bin";
    write_field(field, bin);

    json entry;
    entry["N"] = n_players;
    entry["path"] = bin;

    std::vector<ValueDecayProbe> probes;
    probes.push_back({0, 1, -1});
    probes.push_back({0, 0, -1});
    if (n_players >= 3) probes.push_back({0, 1, 2});
    probes.push_back({0, 1, 1});
    for (const DecayRow& row : derivative_decay_report(field, probes))
      decay.add_row({format_double(row.n_players), std::to_string(row.i),
                     std::to_string(row.j), std::to_string(row.k), std::to_string(row.l),
                     format_double(row.omega), format_double(row.norm),
                     format_double(row.norm / row.omega)});

    if (model->family() == "lq" && cfg.sigma0 == 0.0) {
      RiccatiSolution oracle = solve_nash_riccati(*model, n_players);
      // sup error over the inner half of the grid at stored slices
      double err = 0.0;
      int idx[8];
      PlayerVector xs(n_players, 1);
      const int lo = field.grid.points / 4;
      const int hi = field.grid.points - 1 - field.grid.points / 4;
      for (int s = 0; s < field.slice_count(); ++s) {
        for (std::size_t flat = 0; flat < field.node_count(); ++flat) {
          field.unflatten(flat, idx);
          bool inner = true;
          for (int j = 0; j < n_players; ++j)
            if (idx[j] < lo || idx[j] > hi) inner = false;
          if (!inner) continue;
          for (int j = 0; j < n_players; ++j) xs(j, 0) = field.grid.coord(idx[j]);
          err = std::max(err,
                         std::abs(field.value(s, idx) - oracle.value(field.slice_time(s), xs)));
        }
      }
      entry["oracle_sup_error"] = err;
      entry["oracle_band"] = kNashOracleBand;
      if (err > kNashOracleBand) pass = false;
    }
    summary["fields"].push_back(entry);
  }

  std::string decay_path = cfg.out_dir + "/nash_decay.csv";
  decay.write(decay_path);
  emit_plots(decay_path, "decay", cfg.out_dir);
  summary["pass"] = pass;
  write_json(cfg.out_dir + "/nash_summary.json", summary);
  return pass ? 0 : 2;
}

int run_sde_norms(const ExperimentConfig& cfg) {
  ModelPtr model = model_from(cfg);
  ensure_dir(cfg.out_dir);
  const bool zero_drift =
      cfg.spec.lambda == 0.0 && cfg.spec.c_x == 0.0 && cfg.spec.c_g == 0.0;

  CsvWriter norms({"N", "estimator"});
  CsvWriter moments({"N", "t", "mean_sq_disp", "theory", "stderr"});
  bool pass = true;
  std::vector<double> estimators;

  for (int n_players : cfg.n_list) {
    Grid grid = Grid::make(cfg.grid_radius, cfg.grid_points, cfg.horizon, n_players, 1,
                           cfg.sigma0);
    NashSolveOptions opts;
    opts.workers = cfg.workers;
    ValueField field = solve_nash_grid(*model, n_players, grid, opts);

    PlayerVector x0 = PlayerVector::Zero(n_players, 1);
    for (int i = 0; i < n_players; ++i) x0(i, 0) = 0.25 * (i - (n_players - 1) / 2.0);
    TrajectoryBatch batch = simulate_closed_loop(*model, field, 0.0, x0, cfg.n_paths,
                                                 cfg.sde_steps, cfg.seed, cfg.workers);

    if (zero_drift) {
      // displacement second moment vs the exact diffusive value
      std::size_t n_paths = batch.paths.size();
      for (int k : {cfg.sde_steps / 2, cfg.sde_steps}) {
        double t = batch.times[static_cast<std::size_t>(k)];
        double mean = 0.0, second = 0.0;
        for (const auto& path : batch.paths) {
          double disp = 0.0;
          for (int i = 0; i < n_players; ++i) {
            double dxi = path(k, i) - x0(i, 0);
            disp += dxi * dxi;
          }
          disp /= n_players;
          mean += disp;
          second += disp * disp;
        }
        mean /= static_cast<double>(n_paths);
        second /= static_cast<double>(n_paths);
        double se = std::sqrt(std::max(0.0, second - mean * mean) /
                              static_cast<double>(n_paths));
        double theory = 2.0 * (1.0 + cfg.sigma0) * t;
        moments.add_row_values({static_cast<double>(n_players), t, mean, theory, se});
        if (std::abs(mean - theory) > 3.0 * se + 1e-12) pass = false;
      }
    }

    double estimator = offdiagonal_gradient_norm(field, batch);
    norms.add_row_values({static_cast<double>(n_players), estimator});
    estimators.push_back(estimator);
  }

  if (!zero_drift) {
    for (std::size_t k = 1; k < estimators.size(); ++k)
      if (estimators[k] >= estimators[k - 1]) pass = false;
  }

  norms.write(cfg.out_dir + "/sde_norms.csv");
  moments.write(cfg.out_dir + "/sde_moments.csv");
  json summary{{"pass", pass}, {"zero_drift", zero_drift}};
  write_json(cfg.out_dir + "/sde_summary.json", summary);
  return pass ? 0 : 2;
}

int run_master_residual(const ExperimentConfig& cfg) {
  ModelPtr model = model_from(cfg);
  if (model->family() != "lq")
    throw ConfigError("master-residual requires the lq family (quadratic oracle)");
  ensure_dir(cfg.out_dir);

  std::vector<std::shared_ptr<const MasterLift>> lifts;
  for (int n_players : cfg.n_list) {
    auto sol = std::make_shared<RiccatiSolution>(solve_nash_riccati(*model, n_players));
    lifts.push_back(lift_riccati(std::move(sol)));
  }
  auto probe_sets = matched_residual_probes(lifts, cfg.probes, cfg.seed, cfg.sample_scale);

  CsvWriter csv({"N", "t", "probe_id", "residual", "envelope", "ratio"});
  std::vector<double> medians;
  for (std::size_t li = 0; li < lifts.size(); ++li) {
    auto rows = master_residual(*lifts[li], *model, probe_sets[li]);
    for (const auto& row : rows)
      csv.add_row_values({static_cast<double>(row.players), row.t,
                          static_cast<double>(row.probe_id), row.residual, row.envelope,
                          row.ratio});
    medians.push_back(median_abs_residual(rows));
  }
  std::string csv_path = cfg.out_dir + "/residual.csv";
  csv.write(csv_path);
  emit_plots(csv_path, "residual", cfg.out_dir);

  bool pass = true;
  for (std::size_t k = 1; k < medians.size(); ++k)
    if (medians[k] > medians[k - 1] * (1.0 + 1e-9)) pass = false;

  json summary{{"pass", pass}, {"median_abs_residual", medians}};
  write_json(cfg.out_dir + "/residual_summary.json", summary);
  return pass ? 0 : 2;
}

int run_convergence(const ExperimentConfig& cfg) {
  ModelPtr model = model_from(cfg);
  if (model->family() != "lq")
    throw ConfigError("convergence requires the lq family (closed-form limit)");
  ensure_dir(cfg.out_dir);

  MasterLq master = solve_master_lq(*model);
  std::vector<std::shared_ptr<const MasterLift>> lifts;
  for (int n_players : cfg.n_list) {
    auto sol = std::make_shared<RiccatiSolution>(solve_nash_riccati(*model, n_players));
    lifts.push_back(lift_riccati(std::move(sol)));
  }
  auto rows = convergence_report(lifts, master, cfg.probes, cfg.seed, cfg.sample_scale);

  CsvWriter csv({"N", "err"});
  std::vector<double> ns, errs;
  for (const auto& row : rows) {
    csv.add_row_values({static_cast<double>(row.players), row.err});
    ns.push_back(row.players);
    errs.push_back(row.err);
  }
  std::string csv_path = cfg.out_dir + "/convergence.csv";
  csv.write(csv_path);
  emit_plots(csv_path, "convergence", cfg.out_dir);

  bool pass = true;
  json summary;
  if (ns.size() >= 2) {
    double slope_in_n = loglog_slope(ns, errs);  // err ~ N^slope, expect -1
    double slope_in_inv = -slope_in_n;
    summary["slope_vs_inverse_N"] = slope_in_inv;
    summary["band"] = {kConvergenceSlope[0], kConvergenceSlope[1]};
    pass = slope_in_inv >= kConvergenceSlope[0] && slope_in_inv <= kConvergenceSlope[1];
  }
  summary["pass"] = pass;
  write_json(cfg.out_dir + "/convergence_summary.json", summary);
  return pass ? 0 : 2;
}

int run_mfg_picard(const ExperimentConfig& cfg) {
  ModelPtr model = model_from(cfg);
  ensure_dir(cfg.out_dir);
  Grid grid = Grid::make(cfg.mfg_radius, cfg.mfg_points, cfg.horizon, 1, 1, 0.0);

  MfgcOptions opts;
  opts.tol = cfg.picard_tol;
  opts.quad_particles = cfg.quad_particles;
  MfgcSolution sol = solve_mfgc_picard(*model, grid, opts);

  bool pass = sol.final_change < opts.tol;
  json summary{{"iterations", sol.iterations}, {"final_change", sol.final_change}};

  if (model->family() == "lq") {
    MasterLq master = solve_master_lq(*model);
    LqMomentFlow oracle =
        lq_moment_flow(master, opts.m0_mean, opts.m0_std * opts.m0_std, grid.t_steps);
    CsvWriter csv({"t", "mean", "var", "mean_oracle", "var_oracle"});
    double worst_mean = 0.0, worst_var = 0.0;
    const double h = grid.h();
    for (int k = 0; k <= grid.t_steps; ++k) {
      const Eigen::VectorXd& m = sol.density[static_cast<std::size_t>(k)];
      double mass = 0.0, mean = 0.0, second = 0.0;
      for (int i = 1; i < grid.points; ++i) {
        double w = 0.5 * h;
        double xl = grid.coord(i - 1), xr = grid.coord(i);
        mass += w * (m[i - 1] + m[i]);
        mean += w * (m[i - 1] * xl + m[i] * xr);
        second += w * (m[i - 1] * xl * xl + m[i] * xr * xr);
      }
      mean /= mass;
      double var = second / mass - mean * mean;
      worst_mean = std::max(worst_mean,
                            std::abs(mean - oracle.mean[static_cast<std::size_t>(k)]));
      worst_var =
          std::max(worst_var, std::abs(var - oracle.var[static_cast<std::size_t>(k)]));
      if (k % std::max(1, grid.t_steps / 64) == 0 || k == grid.t_steps)
        csv.add_row_values({k * grid.dt, mean, var,
                            oracle.mean[static_cast<std::size_t>(k)],
                            oracle.var[static_cast<std::size_t>(k)]});
    }
    csv.write(cfg.out_dir + "/mfg_moments.csv");
    summary["worst_mean_error"] = worst_mean;
    summary["worst_var_error"] = worst_var;
    summary["moment_band"] = kMomentOracleBand;
    if (worst_mean > kMomentOracleBand || worst_var > kMomentOracleBand) pass = false;
  }

  // snapshot of the value surface in the shared binary layout
  ValueField snap;
  snap.model = model;
  snap.grid = grid;
  snap.players = 1;
  snap.dim = 1;
  snap.stride = 1;
  int keep = std::max(1, grid.t_steps / 64);
  for (int k = 0; k <= grid.t_steps; k += keep)
    snap.slices.push_back(sol.value[static_cast<std::size_t>(k)]);
  snap.stride = keep;
  write_field(snap, cfg.out_dir + "/mfg_value.bin");

  summary["pass"] = pass;
  write_json(cfg.out_dir + "/mfg_summary.json", summary);
  return pass ? 0 : 2;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  log_info("running " + cfg.experiment + " into " + cfg.out_dir);
  if (cfg.experiment == "fixedpoint-decay") return run_fixedpoint_decay(cfg);
  if (cfg.experiment == "monotonicity-audit") return run_monotonicity_audit(cfg);
  if (cfg.experiment == "nash-solve") return run_nash_solve(cfg);
  if (cfg.experiment == "sde-norms") return run_sde_norms(cfg);
  if (cfg.experiment == "master-residual") return run_master_residual(cfg);
  if (cfg.experiment == "convergence") return run_convergence(cfg);
  if (cfg.experiment == "mfg-picard") return run_mfg_picard(cfg);
  throw ConfigError("unknown experiment: " + cfg.experiment);
}

}  // namespace mfgc
