#include "acp_phonon/commands.hpp"

#include "acp_phonon/config.hpp"
#include "acp_phonon/io.hpp"
#include "acp_phonon/phonon.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace acp_phonon {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

RunConfig load_with_overrides(const CommandOptions& options) {
  RunConfig cfg = load_config(options.config_path);
  if (options.out_dir) cfg.output.directory = *options.out_dir;
  if (options.seed) cfg.numerics.seed = cfg.numerics.scf.seed = *options.seed;
  cfg.numerics.scf.seed = cfg.numerics.seed;
  cfg.numerics.scf.verbose = options.verbose;
  return cfg;
}

// Identifies the physical/numerical inputs that determine a ground state.
std::string restart_key(const RunConfig& cfg) {
  std::string text = cfg.to_text();
  text.erase(text.find("[output]"));
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << std::hash<std::string>{}(text);
  return o.str();
}

struct Prepared {
  GroundState gs;
  std::vector<double> relax_energies;
  int restart_used = 0;
  double seconds = 0.0;
};

Prepared prepare_ground_state(const RunConfig& cfg, std::ostream& log, bool use_checkpoint) {
  const AtomicConfiguration config = cfg.configuration();
  const PlaneWaveGrid grid = cfg.grid(config);
  const YukawaKernel kernel = cfg.kernel();
  const auto t0 = Clock::now();
  if (cfg.system.relax_steps > 0) {
    RelaxResult rr = relax(grid, kernel, config, cfg.system.relax_steps,
                           cfg.system.relax_step_size, cfg.numerics.scf);
    log << "relaxed " << cfg.system.relax_steps << " steps, final max force "
        << rr.max_forces.back() << "\n";
    return Prepared{std::move(rr.ground_state), rr.energies, 0, seconds_since(t0)};
  }
  std::optional<Checkpoint> cp;
  if (use_checkpoint && cfg.output.checkpoint) {
    cp = read_checkpoint(cfg.output.directory);
    if (cp && (cp->key != restart_key(cfg) || cp->input_density.size() != grid.size())) {
      log << "checkpoint does not match this configuration, ignoring it\n";
      cp.reset();
    }
  }
  ScfGuess guess;
  if (cp) guess = ScfGuess{cp->input_density, cp->orbitals};
  GroundState gs = scf(grid, kernel, config, cfg.numerics.scf, cp ? &guess : nullptr);
  return Prepared{std::move(gs), {}, cp ? 1 : 0, seconds_since(t0)};
}

json ground_state_json(const RunConfig& cfg, const Prepared& p) {
  const GroundState& gs = p.gs;
  json j;
  j["model"] = to_string(cfg.system.model);
  j["n_atoms"] = gs.config.n_atoms();
  j["n_electrons"] = gs.n_electrons();
  j["grid_points"] = gs.grid.points_per_dim();
  j["cell_lengths"] = gs.grid.cell_lengths();
  j["seed"] = cfg.numerics.seed;
  j["eigenvalues"] = to_json(gs.eigenvalues);
  j["unoccupied_eigenvalues"] = to_json(gs.unoccupied);
  j["gap"] = gs.gap;
  j["total_energy"] = total_energy(gs);
  j["max_force"] = forces(gs).cwiseAbs().maxCoeff();
  j["density_min"] = gs.density.minCoeff();
  j["density_max"] = gs.density.maxCoeff();
  j["electron_count"] = integrate(gs.grid, gs.density);
  j["scf_iterations"] = gs.scf_iterations;
  j["scf_residual_history"] = gs.residual_history;
  j["restarted_from_checkpoint"] = p.restart_used == 1;
  if (!p.relax_energies.empty()) j["relax_energies"] = p.relax_energies;
  return j;
}

std::string density_csv(const GroundState& gs) {
  const Eigen::MatrixXd x = gs.grid.coordinates();
  Eigen::MatrixXd rows(gs.grid.size(), x.cols() + 1);
  rows << x, gs.density;
  std::vector<std::string> header = gs.grid.dim() == 1 ? std::vector<std::string>{"x", "rho"}
                                                       : std::vector<std::string>{"x", "y", "rho"};
  return csv_table(header, rows);
}

std::string dmatrix_csv(const Eigen::MatrixXd& d, int dim) {
  std::vector<std::string> header;
  const char axes[] = {'x', 'y'};
  for (Index c = 0; c < d.cols(); ++c)
    header.push_back("I" + std::to_string(c / dim) + "_" + axes[c % dim]);
  return csv_table(header, d);
}

bool wants(const RunConfig& cfg, const std::string& format) {
  return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), format) !=
         cfg.output.formats.end();
}

// Runs `body`, mapping exception families onto exit codes.
int guarded(std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const ScfError& e) {
    log << "SCF failure: " << e.what() << "\n";
    return exit_scf;
  } catch (const InvalidArgument& e) {
    log << "invalid input: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    log << "response/phonon failure: " << e.what() << "\n";
    return exit_response;
  }
}

struct MethodRun {
  Eigen::MatrixXd d;
  json report;
  double seconds = 0.0;
};

MethodRun run_method(const RunConfig& cfg, const GroundState& gs, PhononMethod method,
                     bool verbose) {
  MethodRun out;
  json& rep = out.report;
  rep["method"] = to_string(method);
  rep["seed"] = cfg.numerics.seed;
  const auto t0 = Clock::now();
  if (method == PhononMethod::fd) {
    FdOptions fo = cfg.fd_options();
    fo.verbose = verbose;
    int iters = 0;
    out.d = dynamical_matrix_fd(gs.grid, gs.kernel, gs.config, fo, &gs, &iters);
    rep["fd_delta"] = fo.delta;
    rep["scf_solves"] = 2 * gs.config.dim * gs.config.n_atoms();
    rep["scf_iterations"] = iters;
  } else {
    ResponseMatrixOptions ro;
    ro.dyson = cfg.dyson_options();
    ro.dyson.verbose = verbose;
    ro.acp = cfg.acp_options();
    ro.acp.verbose = verbose;
    ResponseMatrixResult r = dynamical_matrix_response(gs, method, ro);
    out.d = r.dynamical_matrix;
    rep["asymmetry_before_symmetrization"] = r.asymmetry;
    rep["timings"]["response"] = r.response_seconds;
    rep["timings"]["assemble"] = r.assemble_seconds;
    const ResponseStats& st = method == PhononMethod::dfpt ? r.dyson.stats : r.acp.stats;
    rep["sternheimer"] = {{"solves", st.solves},
                          {"column_iterations", st.column_iterations},
                          {"max_iterations", st.max_iterations},
                          {"max_residual", st.max_residual}};
    if (method == PhononMethod::dfpt) {
      rep["dyson_iterations"] = r.dyson.iterations;
      rep["dyson_residuals"] = r.dyson.residuals;
      rep["dyson_warm_start"] = r.dyson.warm_start_used;
    } else {
      rep["n_mu_history"] = r.acp.n_mu;
      rep["outer_iterations"] = r.acp.iterations;
      rep["outer_updates"] = r.acp.updates;
      rep["outer_converged"] = r.acp.converged;
      rep["sketch_seeds"] = r.acp.seeds;
      rep["rank_saturated"] = r.acp.rank_saturated;
      rep["id_threshold"] = ro.acp.id_threshold;
      rep["n_cheb"] = ro.acp.n_cheb;
      rep["timings"]["id"] = r.acp.timings.id;
      rep["timings"]["sternheimer"] = r.acp.timings.sternheimer;
      rep["timings"]["w_assembly"] = r.acp.timings.assemble;
      rep["timings"]["smw_update"] = r.acp.timings.update;
    }
  }
  out.seconds = seconds_since(t0);
  rep["timings"]["dynamical_matrix"] = out.seconds;
  return out;
}

}  // namespace

double loglog_slope(const std::vector<double>& sizes, const std::vector<double>& seconds) {
  const std::size_t n = sizes.size();
  if (n < 2 || seconds.size() != n) throw InvalidArgument("slope needs at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(sizes[i]);
    my += std::log(seconds[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(sizes[i]) - mx;
    sxy += dx * (std::log(seconds[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InvalidArgument("slope needs at least two distinct sizes");
  return sxy / sxx;
}

int cmd_ground_state(const CommandOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = load_with_overrides(options);
    const Prepared p = prepare_ground_state(cfg, log, true);
    const auto& dir = cfg.output.directory;
    if (wants(cfg, "json"))
      write_text_file(dir / "ground_state.json", ground_state_json(cfg, p).dump(2) + "\n");
    if (wants(cfg, "csv")) write_text_file(dir / "density.csv", density_csv(p.gs));
    if (cfg.output.checkpoint)
      write_checkpoint(dir, Checkpoint{restart_key(cfg), p.gs.input_density, p.gs.orbitals});
    log << "gap " << format_number(p.gs.gap) << " after " << p.gs.scf_iterations
        << " SCF iterations\n";
    return int(exit_ok);
  });
}

int cmd_phonon(const CommandOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = load_with_overrides(options);
    std::vector<PhononMethod> methods = cfg.phonon.methods;
    if (options.method) methods = {parse_method(*options.method)};
    const Prepared p = prepare_ground_state(cfg, log, true);
    const GroundState& gs = p.gs;
    const auto& dir = cfg.output.directory;

    std::vector<std::pair<std::string, Eigen::VectorXd>> spectra;
    for (PhononMethod method : methods) {
      const std::string tag = to_string(method);
      MethodRun run = [&] {
        try {
          return run_method(cfg, gs, method, options.verbose);
        } catch (const ScfError& e) {
          // SCF failures inside frozen phonon are still phonon-stage failures.
          throw SolverError(tag + ": " + e.what(), 0.0);
        }
      }();
      json& rep = run.report;
      rep["acoustic_sum_rule_violation"] = acoustic_sum_rule_violation(run.d, gs.config);
      rep["acoustic_sum_rule_enforced"] = cfg.phonon.acoustic_sum_rule;
      if (cfg.phonon.acoustic_sum_rule) run.d = enforce_acoustic_sum_rule(run.d, gs.config);
      auto t0 = Clock::now();
      const PhononResult pr = phonon_modes(run.d, tag);
      const double t_diag = seconds_since(t0);
      const Eigen::VectorXd omega =
          cfg.phonon.omega_max > cfg.phonon.omega_min
              ? Eigen::VectorXd::LinSpaced(cfg.phonon.omega_points, cfg.phonon.omega_min,
                                           cfg.phonon.omega_max)
              : dos_omega_grid(pr.frequencies, cfg.phonon.dos_sigma, cfg.phonon.omega_points);
      const Eigen::VectorXd dos = phonon_dos(pr.frequencies, cfg.phonon.dos_sigma, omega);

      rep["gap"] = gs.gap;
      rep["clamped_count"] = pr.clamped_count;
      rep["min_eigenvalue"] = pr.eigenvalues.minCoeff();
      rep["timings"]["scf"] = p.seconds;
      rep["timings"]["diagonalize"] = t_diag;

      if (wants(cfg, "csv")) {
        write_text_file(dir / ("dmatrix_" + tag + ".csv"), dmatrix_csv(pr.dynamical_matrix, gs.config.dim));
        Eigen::MatrixXd f(pr.frequencies.size(), 2);
        f.col(0) = Eigen::VectorXd::LinSpaced(f.rows(), 0.0, double(f.rows() - 1));
        f.col(1) = pr.frequencies;
        write_text_file(dir / ("frequencies_" + tag + ".csv"), csv_table({"index", "omega"}, f));
        Eigen::MatrixXd dd(omega.size(), 2);
        dd << omega, dos;
        write_text_file(dir / ("dos_" + tag + ".csv"), csv_table({"omega", "rho"}, dd));
      }
      if (wants(cfg, "json"))
        write_text_file(dir / ("report_" + tag + ".json"), rep.dump(2) + "\n");
      log << tag << ": " << pr.frequencies.size() << " modes, max frequency "
          << format_number(pr.frequencies.maxCoeff()) << ", " << run.seconds << " s\n";
      spectra.emplace_back(tag, pr.frequencies);
    }
    if (spectra.size() > 1 && wants(cfg, "json")) {
      json cmp = json::array();
      for (std::size_t a = 0; a < spectra.size(); ++a)
        for (std::size_t b = a + 1; b < spectra.size(); ++b)
          cmp.push_back({{"reference", spectra[a].first},
                         {"candidate", spectra[b].first},
                         {"linf_freq", spectrum_error(spectra[a].second, spectra[b].second,
                                                      ErrorMetric::linf_freq)}});
      write_text_file(dir / "comparison.json", cmp.dump(2) + "\n");
    }
    return int(exit_ok);
  });
}

int cmd_benchmark(const CommandOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = load_with_overrides(options);
    std::vector<PhononMethod> methods = cfg.phonon.methods;
    if (!options.methods.empty()) {
      methods.clear();
      for (const auto& m : options.methods) methods.push_back(parse_method(m));
    }
    std::vector<int> sizes = options.sizes;
    if (sizes.empty()) sizes = {static_cast<int>(cfg.configuration_of_size(
                                    cfg.system.model == Model::chain1d
                                        ? cfg.system.n_atoms
                                        : 2 * cfg.system.k_cells * cfg.system.k_cells)
                                                     .n_atoms())};
    for (int s : sizes) (void)cfg.configuration_of_size(s);  // reject bad sizes up front
    std::sort(sizes.begin(), sizes.end());

    struct Cell {
      int size;
      std::string method;
      std::optional<double> seconds;
      std::string error;
      double scf_seconds = 0.0;
    };
    std::vector<Cell> cells;
    for (int size : sizes) {
      RunConfig c = cfg;
      c.system.relax_steps = 0;
      const AtomicConfiguration config = c.configuration_of_size(size);
      const PlaneWaveGrid grid = c.grid(config);
      std::optional<GroundState> gs;
      std::string scf_error;
      const auto t0 = Clock::now();
      try {
        gs = scf(grid, c.kernel(), config, c.numerics.scf);
      } catch (const std::exception& e) {
        scf_error = e.what();
      }
      const double t_scf = seconds_since(t0);
      for (PhononMethod m : methods) {
        Cell cell{size, to_string(m), std::nullopt, scf_error, t_scf};
        if (gs) {
          try {
            cell.seconds = run_method(c, *gs, m, options.verbose).seconds;
          } catch (const std::exception& e) {
            cell.error = e.what();
          }
        }
        log << "size " << size << " " << cell.method << ": "
            << (cell.seconds ? format_number(*cell.seconds) + " s" : "failed: " + cell.error)
            << "\n";
        cells.push_back(cell);
      }
    }

    // Slope over the largest half of the sizes, per method.
    std::map<std::string, std::optional<double>> slopes;
    const std::size_t keep = (sizes.size() + 1) / 2;
    for (PhononMethod m : methods) {
      std::vector<double> xs, ys;
      for (const Cell& cell : cells)
        if (cell.method == to_string(m) && cell.seconds &&
            cell.size >= sizes[sizes.size() - keep]) {
          xs.push_back(cell.size);
          ys.push_back(*cell.seconds);
        }
      slopes[to_string(m)] =
          xs.size() >= 2 ? std::optional<double>(loglog_slope(xs, ys)) : std::nullopt;
    }

    std::string csv = "size,method,seconds,slope\n";
    json rep = json::array();
    for (const Cell& cell : cells) {
      const auto& sl = slopes[cell.method];
      csv += std::to_string(cell.size) + "," + cell.method + "," +
             (cell.seconds ? format_number(*cell.seconds) : "") + "," +
             (sl ? format_number(*sl) : "") + "\n";
      json jc{{"size", cell.size}, {"method", cell.method}, {"scf_seconds", cell.scf_seconds}};
      if (cell.seconds) jc["seconds"] = *cell.seconds;
      if (!cell.error.empty()) jc["error"] = cell.error;
      rep.push_back(jc);
    }
    const auto& dir = cfg.output.directory;
    write_text_file(dir / "scaling.csv", csv);
    write_text_file(dir / "scaling_report.json", rep.dump(2) + "\n");
    return int(exit_ok);
  });
}

}  // namespace acp_phonon
