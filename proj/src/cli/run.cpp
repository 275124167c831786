#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "blochdos/cli.hpp"
#include "blochdos/decay.hpp"
#include "blochdos/errors.hpp"
#include "blochdos/fibre.hpp"
#include "blochdos/geometry.hpp"
#include "blochdos/ids.hpp"

namespace blochdos::cli {

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string num(double x) { return fmt::format("{:.17g}", x); }

/// NaN and infinities have no JSON literal; they are written as null.
json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }
json to_json(const IntVector& v) { return json(std::vector<int>(v.data(), v.data() + v.size())); }

Vector to_vector(const json& array) {
  Vector v(static_cast<Eigen::Index>(array.size()));
  for (std::size_t i = 0; i < array.size(); ++i) v[static_cast<Eigen::Index>(i)] = array[i].get<double>();
  return v;
}

FibreOptions fibre_options(const json& params) {
  FibreOptions o;
  o.strict_transcription = params.at("strict_transcription").get<bool>();
  o.dense_threshold = params.at("dense_threshold").get<Eigen::Index>();
  return o;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << contents;
  if (!out) throw Error(fmt::format("failed writing {}", path.string()));
}

class Artifacts {
 public:
  Artifacts(fs::path dir, Command command) : dir_(std::move(dir)), stem_(command_name(command)) {
    fs::create_directories(dir_);
  }

  void csv(const std::string& contents) { write(stem_ + ".csv", contents); }
  void report(const json& report) { write(stem_ + ".json", report.dump(2) + "\n"); }

  RunResult finish(std::string summary) { return {std::move(summary), std::move(written_)}; }

 private:
  void write(const std::string& name, const std::string& contents) {
    const fs::path path = dir_ / name;
    write_file(path, contents);
    written_.push_back(path);
  }

  fs::path dir_;
  std::string stem_;
  std::vector<fs::path> written_;
};

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<Vector> band_path(const json& params) {
  std::vector<Vector> corners;
  for (const auto& k : params.at("kpoints")) corners.push_back(to_vector(k));
  const int steps = params.at("path_steps").get<int>();
  if (steps == 0 || corners.size() == 1) return corners;
  std::vector<Vector> path{corners.front()};
  for (std::size_t c = 1; c < corners.size(); ++c) {
    for (int s = 1; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      path.push_back((1.0 - t) * corners[c - 1] + t * corners[c]);
    }
  }
  return path;
}

RunResult run_bands(const json& config, const PotentialSpec& potential, const RunOptions& options) {
  const json& params = config.at("params");
  const FibreOptions fibre = fibre_options(params);
  const double cutoff = params.at("cutoff").get<double>();
  const int wanted = params.at("num_bands").get<int>();
  const double v_upper = sup_norm_upper(potential);
  const std::vector<Vector> path = band_path(params);
  const int d = potential.dim();

  std::string csv = "k_index";
  for (int i = 0; i < d; ++i) csv += fmt::format(",k{}", i);
  csv += ",band,energy\n";
  json points = json::array();
  for (std::size_t p = 0; p < path.size(); ++p) {
    const FibreMatrix matrix = assemble(potential, path[p], cutoff, fibre);
    const int count = static_cast<int>(std::min<Eigen::Index>(wanted, matrix.size()));
    std::vector<double> energies;
    if (matrix.storage() == Storage::Dense) {
      const auto all = solve_dense(matrix);
      for (int j = 0; j < count; ++j) energies.push_back(all[static_cast<std::size_t>(j)].zeta);
    } else {
      double lowest = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < matrix.size(); ++i) lowest = std::min(lowest, matrix.diagonal(i));
      // Every eigenvalue lies above min diag - |V|_inf, so this target sits below the spectrum.
      const auto near = eigenpairs_near(matrix, lowest - v_upper - 1.0, count);
      for (const auto& s : near) energies.push_back(s.zeta);
      std::sort(energies.begin(), energies.end());
    }
    for (int j = 0; j < count; ++j) {
      csv += std::to_string(p);
      for (int i = 0; i < d; ++i) csv += "," + num(path[p][i]);
      csv += fmt::format(",{},{}\n", j, num(energies[static_cast<std::size_t>(j)]));
    }
    points.push_back(json{{"k", to_json(path[p])}, {"basis_size", matrix.size()}, {"energies", energies}});
  }

  Artifacts out(options.out_dir, Command::Bands);
  out.csv(csv);
  out.report(json{{"config", config}, {"cutoff", cutoff}, {"points", points}});
  return out.finish(fmt::format("bands: {} k-points x {} bands at cutoff {:.6g} -> {}", path.size(),
                                wanted, cutoff, (options.out_dir / "bands.csv").string()));
}

IdsOptions ids_options(const json& params, const RunOptions& options) {
  IdsOptions o;
  o.workers = options.workers;
  o.fibre = fibre_options(params);
  o.buffer = params.at("buffer").get<double>();
  o.check_stability = params.at("check_stability").get<bool>();
  return o;
}

RunResult run_ids(const json& config, const PotentialSpec& potential, const RunOptions& options) {
  const json& params = config.at("params");
  const IdsOptions ids_opts = ids_options(params, options);
  const int G = params.at("grid").get<int>();
  const double cutoff = params.at("cutoff").get<double>();
  const QuadratureGrid grid = QuadratureGrid::uniform(potential.dual(), G);

  std::string csv = "lambda,epsilon,G,cutoff,value,floor,ratio,wall_time_ms\n";
  json rows = json::array();
  for (const auto& l : params.at("lambda")) {
    const Stopwatch clock(options.timing);
    const IdsReport r = ids(potential, l.get<double>(), grid, cutoff, ids_opts);
    const double ms = clock.elapsed_ms();
    const double ratio = r.value / r.free_reference;
    csv += fmt::format("{},0,{},{},{},{},{},{}\n", num(r.lambda), G, num(cutoff), num(r.value),
                       num(r.free_reference), num(ratio), num(ms));
    json row{{"lambda", r.lambda},           {"value", r.value},
             {"grid", r.grid},               {"cutoff", r.cutoff},
             {"free_reference", r.free_reference}, {"ratio_to_free", finite_or_null(ratio)},
             {"counts_min", r.counts_min},   {"counts_max", r.counts_max},
             {"count_total", r.count_total}, {"tie_perturbations", r.tie_perturbations}};
    if (options.timing) row["wall_time_ms"] = ms;
    rows.push_back(row);
  }

  Artifacts out(options.out_dir, Command::Ids);
  out.csv(csv);
  out.report(json{{"config", config}, {"results", rows}});
  const json& last = rows.back();
  return out.finish(fmt::format("ids: {} lambda value(s), G={}, cutoff {:.6g}; N({:.6g}) = {:.10g} -> {}",
                                rows.size(), G, cutoff, last["lambda"].get<double>(),
                                last["value"].get<double>(), (options.out_dir / "ids.csv").string()));
}

RunResult run_window(const json& config, const PotentialSpec& potential, const RunOptions& options) {
  const json& params = config.at("params");
  const IdsOptions ids_opts = ids_options(params, options);
  const int G = params.at("grid").get<int>();
  const double cutoff = params.at("cutoff").get<double>();
  const double epsilon = params.at("epsilon").get<double>();
  const QuadratureGrid grid = QuadratureGrid::uniform(potential.dual(), G);

  std::string csv = "lambda,epsilon,G,cutoff,window,floor,ratio,wall_time_ms\n";
  json rows = json::array();
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& l : params.at("lambda")) {
    const Stopwatch clock(options.timing);
    const WindowReport r = window(potential, l.get<double>(), epsilon, grid, cutoff, ids_opts);
    const double ms = clock.elapsed_ms();
    worst = std::min(worst, r.ratio);
    csv += fmt::format("{},{},{},{},{},{},{},{}\n", num(r.lambda), num(r.epsilon), G, num(cutoff),
                       num(r.window), num(r.floor), num(r.ratio), num(ms));
    json row{{"lambda", r.lambda},   {"epsilon", r.epsilon},
             {"window", r.window},   {"floor", r.floor},
             {"ratio", finite_or_null(r.ratio)}, {"grid", r.grid},
             {"cutoff", r.cutoff},   {"count_difference", r.count_difference},
             {"tie_perturbations", r.tie_perturbations}};
    if (options.timing) row["wall_time_ms"] = ms;
    rows.push_back(row);
  }

  Artifacts out(options.out_dir, Command::Window);
  out.csv(csv);
  out.report(json{{"config", config}, {"results", rows}});
  return out.finish(fmt::format("window: {} lambda value(s), eps={:.6g}, G={}; min ratio {:.6g} -> {}",
                                rows.size(), epsilon, G, worst, (options.out_dir / "window.csv").string()));
}

RunResult run_fraction(const json& config, const PotentialSpec& potential, const RunOptions& options) {
  const json& params = config.at("params");
  const double v = params.at("v").get<double>();
  const bool structural = params.at("theta_radius").is_string();
  const auto samples = params.at("samples").get<std::int64_t>();
  const auto seed = params.at("seed").get<std::uint64_t>();
  const int d = potential.dim();

  std::string csv = "rho,v,theta_radius,samples,fraction,ci_halfwidth\n";
  json rows = json::array();
  for (const auto& r : params.at("rho")) {
    const double rho = r.get<double>();
    const GeometryParams g = structural ? GeometryParams::with_structural_theta(rho, v, d)
                                        : GeometryParams::make(rho, v, d, params.at("theta_radius").get<double>());
    const FractionReport f = regular_direction_fraction(g, potential.dual(), samples, seed, options.workers);
    csv += fmt::format("{},{},{},{},{},{}\n", num(rho), num(v), num(g.theta_radius), f.samples,
                       num(f.fraction), num(f.ci_halfwidth));
    rows.push_back(json{{"rho", rho},
                        {"v", v},
                        {"theta_radius", g.theta_radius},
                        {"samples", f.samples},
                        {"regular", f.regular},
                        {"fraction", f.fraction},
                        {"ci_halfwidth", f.ci_halfwidth}});
  }

  Artifacts out(options.out_dir, Command::Fraction);
  out.csv(csv);
  out.report(json{{"config", config}, {"results", rows}});
  return out.finish(fmt::format("fraction: {} rho value(s), {} samples each -> {}", rows.size(), samples,
                                (options.out_dir / "fraction.csv").string()));
}

json constants_json(const DecayConstants& c) {
  return json{{"d", c.d},         {"eta", c.eta}, {"m", c.m},         {"kappa", c.kappa},
              {"zeta0", c.zeta0}, {"W", c.W},     {"Q", c.Q},         {"M_chain", c.chain}};
}

RunResult run_decay(const json& config, const PotentialSpec& potential, const RunOptions& options) {
  const json& params = config.at("params");
  VerifyOptions vo;
  vo.fibre = fibre_options(params);
  const DecayReport r = verify_decay(potential, to_vector(params.at("k")), params.at("band_target").get<double>(),
                                     params.at("eta").get<double>(), params.at("cutoff").get<double>(), vo);
  json violations = json::array();
  for (const auto& v : r.violations) {
    violations.push_back(json{{"n", to_json(v.n)}, {"magnitude", v.magnitude}, {"bound", v.bound}});
  }
  const json report{{"config", config},
                    {"constants", constants_json(r.constants)},
                    {"k", to_json(r.k)},
                    {"cutoff", r.cutoff},
                    {"zeta", r.zeta},
                    {"gap", r.gap},
                    {"residual", r.residual},
                    {"degenerate", r.degenerate},
                    {"threshold_radius", r.threshold_radius},
                    {"shell_outer", r.shell_outer},
                    {"checked", r.checked},
                    {"violations", violations},
                    {"margin_min", finite_or_null(r.margin_min)}};
  Artifacts out(options.out_dir, Command::VerifyDecay);
  out.report(report);
  return out.finish(fmt::format("verify-decay: zeta={:.10g} (zeta0={:.6g}), {} coefficients checked, {} "
                                "violation(s), min margin {:.4g}{} -> {}",
                                r.zeta, r.constants.zeta0, r.checked, r.violations.size(), r.margin_min,
                                r.degenerate ? " [degenerate eigenvalue]" : "",
                                (options.out_dir / "verify-decay.json").string()));
}

struct GradientTask {
  Vector k;
  double band_target = 0.0;
};

/// Deterministic candidate stream for random gradient checks: k uniform over the dual
/// cell reduced to the Brillouin zone, target uniform in [zeta_min, zeta_max].
class GradientSampler {
 public:
  GradientSampler(const json& spec, const DualLattice& dual)
      : dual_(dual), energy_(spec.at("zeta_min").get<double>(), spec.at("zeta_max").get<double>()) {
    const auto seed = spec.at("seed").get<std::uint64_t>();
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    engine_.seed(seq);
  }

  GradientTask next() {
    Vector coords(dual_.dim());
    for (Eigen::Index i = 0; i < coords.size(); ++i) coords[i] = unit_(engine_);
    const Vector xi = dual_.basis().transpose() * coords;
    return {decompose(xi, dual_).fractional_part, energy_(engine_)};
  }

 private:
  const DualLattice& dual_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::uniform_real_distribution<double> energy_;
};

RunResult run_gradient(const json& config, const PotentialSpec& potential, const RunOptions& options) {
  const json& params = config.at("params");
  VerifyOptions vo;
  vo.fibre = fibre_options(params);
  vo.fd_step = params.at("step").get<double>();
  const double eta = params.at("eta").get<double>();
  const double cutoff = params.at("cutoff").get<double>();

  const auto evaluate = [&](const GradientTask& t) {
    return verify_gradient(potential, t.k, t.band_target, eta, cutoff, vo);
  };
  const auto entry = [](const GradientTask& t, const GradientReport& r) {
    return json{{"k", to_json(t.k)},
                {"band_target", t.band_target},
                {"zeta", r.zeta},
                {"gap", r.gap},
                {"hf_velocity", to_json(r.hf_velocity)},
                {"fd_velocity", to_json(r.fd_velocity)},
                {"bound", r.bound},
                {"bound_ok", r.bound_ok},
                {"relative_difference", r.relative_difference}};
  };

  json results = json::array();
  json skipped = json::array();
  if (params.contains("points")) {
    for (const auto& p : params.at("points")) {
      const GradientTask t{to_vector(p.at("k")), p.at("band_target").get<double>()};
      results.push_back(entry(t, evaluate(t)));
    }
  } else {
    const json& spec = params.at("random");
    const auto wanted = spec.at("count").get<std::size_t>();
    GradientSampler sampler(spec, potential.dual());
    // Degenerate or untrackable bands are not simple; they are logged and replaced.
    const std::size_t max_attempts = 10 * wanted;
    for (std::size_t attempt = 0; attempt < max_attempts && results.size() < wanted; ++attempt) {
      const GradientTask t = sampler.next();
      try {
        results.push_back(entry(t, evaluate(t)));
      } catch (const DegeneracyError& e) {
        skipped.push_back(json{{"k", to_json(t.k)}, {"band_target", t.band_target}, {"reason", e.what()}});
      } catch (const TrackingError& e) {
        skipped.push_back(json{{"k", to_json(t.k)}, {"band_target", t.band_target}, {"reason", e.what()}});
      }
    }
    if (results.size() < wanted) {
      throw SolverError(fmt::format("only {} of {} random samples gave simple, trackable bands", results.size(),
                                    wanted));
    }
  }

  bool all_ok = true;
  double worst = 0.0;
  for (const auto& r : results) {
    all_ok = all_ok && r["bound_ok"].get<bool>();
    worst = std::max(worst, r["relative_difference"].get<double>());
  }
  Artifacts out(options.out_dir, Command::VerifyGradient);
  out.report(json{{"config", config},
                  {"zeta0", decay_constants(potential, eta).zeta0},
                  {"results", results},
                  {"skipped", skipped},
                  {"all_bound_ok", all_ok},
                  {"max_relative_difference", worst}});
  return out.finish(fmt::format("verify-gradient: {} band(s), bound {}, max |hf-fd|/(1+|hf|) = {:.3e} -> {}",
                                results.size(), all_ok ? "holds" : "VIOLATED", worst,
                                (options.out_dir / "verify-gradient.json").string()));
}

}  // namespace

RunResult execute(Command command, const json& resolved, const RunOptions& options) {
  const PotentialSpec potential = build_potential(resolved);
  switch (command) {
    case Command::Bands: return run_bands(resolved, potential, options);
    case Command::Ids: return run_ids(resolved, potential, options);
    case Command::Window: return run_window(resolved, potential, options);
    case Command::Fraction: return run_fraction(resolved, potential, options);
    case Command::VerifyDecay: return run_decay(resolved, potential, options);
    case Command::VerifyGradient: return run_gradient(resolved, potential, options);
  }
  throw ValidationError("unknown command");
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const PreconditionError*>(&error) != nullptr) return 4;
  if (dynamic_cast<const SolverError*>(&error) != nullptr) return 3;
  if (dynamic_cast<const ValidationError*>(&error) != nullptr) return 2;
  return 1;
}

namespace {

std::string_view error_kind(int code) {
  switch (code) {
    case 2: return "validation error";
    case 3: return "solver error";
    case 4: return "precondition error";
    default: return "error";
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Band structures, integrated density of states and spectral checks for periodic "
               "Schroedinger operators",
               "bloch-dos"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  bool timing = false;
  for (const auto name : {"bands", "ids", "window", "fraction", "verify-decay", "verify-gradient"}) {
    CLI::App* sub = app.add_subcommand(name, fmt::format("run the {} command", name));
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory (default: config 'output' or .)");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 1024));
    sub->add_flag("--timing", timing, "record wall-clock times in the artifacts");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "bloch-dos: validation error: " << e.what() << "\n";
    return 2;
  }

  try {
    const Command command = parse_command(app.get_subcommands().front()->get_name());
    const json raw = load_config(config_path);
    const json resolved = resolve_config(raw, command);
    RunOptions options;
    options.out_dir = out_dir ? fs::path(*out_dir) : fs::path(raw.value("output", std::string(".")));
    options.workers = workers ? *workers : raw.value("workers", 1);
    options.timing = timing;
    const RunResult result = execute(command, resolved, options);
    out << result.summary << "\n";
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << "bloch-dos: " << error_kind(code) << ": " << e.what() << "\n";
    return code;
  }
}

}  // namespace blochdos::cli
