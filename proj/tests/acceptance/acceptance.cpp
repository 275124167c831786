// Acceptance suite: one PASS/FAIL line per criterion. Artifact-producing criteria run
// through the command-line pipeline (resolve + execute) and are rerun for determinism.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "blochdos/cli.hpp"
#include "blochdos/decay.hpp"
#include "blochdos/errors.hpp"
#include "blochdos/fibre.hpp"
#include "blochdos/ids.hpp"

using namespace blochdos;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

const json kSquareLattice = {{"basis", {{2.0 * kPi, 0.0}, {0.0, 2.0 * kPi}}}};
const json kMathieu = {{"cosines", {{{"n", {1, 0}}, {"amplitude", 2.0}}, {{"n", {0, 1}}, {"amplitude", 2.0}}}}};

struct Run {
  cli::Command command;
  json config;
  fs::path dir;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Suite {
 public:
  explicit Suite(fs::path out) : out_(std::move(out)) {}

  /// Resolves and executes a config the way the command-line tool does.
  json execute(const std::string& name, cli::Command command, const json& raw, int workers = 1) {
    const json resolved = cli::resolve_config(raw, command);
    cli::RunOptions options;
    options.out_dir = out_ / name;
    options.workers = workers;
    const cli::RunResult result = cli::execute(command, resolved, options);
    runs_.push_back({command, resolved, options.out_dir});
    return json::parse(slurp(out_ / name / (std::string(cli::command_name(command)) + ".json")));
  }

  void record(int id, const std::string& title, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << detail << std::endl;
    failures_ += pass ? 0 : 1;
  }

  void guard(int id, const std::string& title, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      record(id, title, false, fmt::format("exception: {}", e.what()));
    }
  }

  const std::vector<Run>& runs() const { return runs_; }
  const fs::path& out() const { return out_; }
  int failures() const { return failures_; }

 private:
  fs::path out_;
  std::vector<Run> runs_;
  int failures_ = 0;
};

json base_config(bool mathieu) {
  json c = {{"schema_version", 1}, {"lattice", kSquareLattice}};
  if (mathieu) c["potential"] = kMathieu;
  return c;
}

void free_ids(Suite& s) {
  const std::string title = "free IDS accuracy (d=2, V=0, lambda=100, G=200)";
  s.guard(1, title, [&] {
    json c = base_config(false);
    c["params"] = {{"lambda", 100.0}, {"grid", 200}, {"cutoff", suggest_cutoff(100.0, 0.0, 2.0)}};
    const json r = s.execute("c1-free-ids", cli::Command::Ids, c)["results"][0];
    const double value = r["value"].get<double>();
    const double exact = 100.0 / (4.0 * kPi);
    const double rel = std::abs(value - exact) / exact;
    s.record(1, title, rel <= 0.01, fmt::format("N={:.12g}, lambda/(4 pi)={:.12g}, rel={:.3e} (<= 1e-2)", value, exact, rel));
  });
}

void dos_lower_bound(Suite& s) {
  const std::string title = "DOS lower bound (V=2cos x1+2cos x2, eps=0.5, G=64)";
  s.guard(2, title, [&] {
    json c = base_config(true);
    c["params"] = {{"lambda", {60.0, 80.0, 100.0}}, {"epsilon", 0.5}, {"grid", 64}};
    const json rows = s.execute("c2-window", cli::Command::Window, c)["results"];
    bool above = true;
    bool trend = true;
    std::string ratios;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double ratio = rows[i]["ratio"].get<double>();
      above = above && ratio >= 0.9;
      if (i > 0) trend = trend && ratio >= rows[i - 1]["ratio"].get<double>() - 0.05;
      ratios += fmt::format("{}ratio({:g})={:.6f}", i ? ", " : "", rows[i]["lambda"].get<double>(), ratio);
    }
    s.record(2, title, above && trend,
             fmt::format("{}; all >= 0.9: {}; nondecreasing within 0.05: {}", ratios, above, trend));
  });
}

void decay_lemma(Suite& s) {
  const std::string title = "decay lemma (eta=0.9, k=0, zeta in [zeta0, zeta0+50])";
  s.guard(3, title, [&] {
    const PotentialSpec v = cli::build_potential(base_config(true));
    const double zeta0 = decay_constants(v, 0.9).zeta0;
    json c = base_config(true);
    c["params"] = {{"k", {0.0, 0.0}}, {"band_target", zeta0 + 10.0}, {"eta", 0.9}};
    const json r = s.execute("c3-decay", cli::Command::VerifyDecay, c);
    const double zeta = r["zeta"].get<double>();
    const double threshold = r["threshold_radius"].get<double>();
    const double cutoff = r["cutoff"].get<double>();
    const bool in_range = zeta >= zeta0 && zeta <= zeta0 + 50.0;
    const bool shell = cutoff >= 1.15 * threshold;
    const bool clean = r["violations"].empty();
    // null encodes an infinite margin: every tested coefficient is numerically zero.
    const double margin = r["margin_min"].is_null() ? std::numeric_limits<double>::infinity()
                                                    : r["margin_min"].get<double>();
    s.record(3, title, in_range && shell && clean && margin >= 10.0 && r["checked"].get<int>() > 0,
             fmt::format("zeta={:.6f} (zeta0={:.4f}), cutoff={:.3f} >= 1.15*{:.3f}, checked={}, violations={}, "
                         "margin_min={:.3g} (>= 10)",
                         zeta, zeta0, cutoff, threshold, r["checked"].get<int>(), r["violations"].size(), margin));
  });
}

void gradient_bound(Suite& s) {
  const std::string title = "gradient bound (20 random simple bands, zeta >= zeta0)";
  s.guard(4, title, [&] {
    const PotentialSpec v = cli::build_potential(base_config(true));
    const double zeta0 = decay_constants(v, 0.9).zeta0;
    json c = base_config(true);
    c["params"] = {{"random", {{"count", 20}, {"seed", 2024}, {"zeta_min", zeta0 + 5.0}, {"zeta_max", zeta0 + 150.0}}},
                   {"eta", 0.9}};
    const json r = s.execute("c4-gradient", cli::Command::VerifyGradient, c);
    bool ok = r["results"].size() == 20;
    double worst = 0.0;
    double ratio = 0.0;
    for (const auto& e : r["results"]) {
      const double zeta = e["zeta"].get<double>();
      const double rel = e["relative_difference"].get<double>();
      ok = ok && e["bound_ok"].get<bool>() && rel <= 1e-3 && zeta >= zeta0;
      worst = std::max(worst, rel);
      double speed = 0.0;
      for (const auto& x : e["hf_velocity"]) speed += x.get<double>() * x.get<double>();
      ratio = std::max(ratio, std::sqrt(speed) / e["bound"].get<double>());
    }
    s.record(4, title, ok,
             fmt::format("{} bands, {} skipped as non-simple, max |grad|/bound={:.4f} (< 1), max rel |hf-fd|={:.3e} "
                         "(<= 1e-3)",
                         r["results"].size(), r["skipped"].size(), ratio, worst));
  });
}

/// A random real trigonometric polynomial on a random lattice in d = 2 or 3.
PotentialSpec random_instance(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix basis = Matrix::Identity(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) basis(i, j) += 0.25 * u(rng);
  const DualLattice dual = dual_lattice(Lattice(2.0 * kPi * basis));
  std::vector<FourierCoefficient> coeffs{{IntVector::Zero(d), Complex(3.0 * u(rng), 0.0)}};
  const int terms = 1 + static_cast<int>(rng() % 5);
  for (int t = 0; t < terms; ++t) {
    IntVector n(d);
    for (int i = 0; i < d; ++i) n[i] = static_cast<int>(rng() % 5) - 2;
    if (n.isZero()) n[0] = 1;
    const Complex c(2.0 * u(rng), 2.0 * u(rng));
    coeffs.push_back({n, c});
    coeffs.push_back({-n, std::conj(c)});
  }
  return PotentialSpec(dual, coeffs);
}

void oracle_equivalence(Suite& s) {
  const std::string title = "oracle equivalence (100 random instances, basis <= 200)";
  s.guard(5, title, [&] {
    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int mismatched_counts = 0;
    int probes = 0;
    double worst = 0.0;
    Eigen::Index largest = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const int d = trial % 4 == 3 ? 3 : 2;
      const PotentialSpec v = random_instance(rng, d);
      Vector k(d);
      for (int i = 0; i < d; ++i) k[i] = u(rng) - 0.5;
      FibreOptions sparse;
      sparse.storage = Storage::Sparse;
      double cutoff = d == 2 ? 3.0 + 3.0 * u(rng) : 2.0 + 1.2 * u(rng);
      FibreMatrix m = assemble(v, k, cutoff, sparse);
      while (m.size() > 200) {
        cutoff *= 0.9;
        m = assemble(v, k, cutoff, sparse);
      }
      largest = std::max(largest, m.size());
      const Vector dense = dense_eigenvalues(m);
      for (int p = 0; p < 10; ++p) {
        // Probe between, below, above and exactly at eigenvalues.
        double lambda = dense[0] - 1.0 + (dense[dense.size() - 1] - dense[0] + 2.0) * u(rng);
        if (p == 9) lambda = dense[static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(dense.size()))];
        ++probes;
        if (count_below(m, lambda, CountMethod::Inertia).count != count_below(m, lambda, CountMethod::Dense).count) {
          ++mismatched_counts;
        }
      }
      const double target = dense[0] + (dense[dense.size() - 1] - dense[0]) * u(rng);
      const BandSolution near = eigenpair_near(m, target);
      double best = dense[0];
      for (Eigen::Index j = 0; j < dense.size(); ++j) {
        if (std::abs(dense[j] - target) < std::abs(best - target)) best = dense[j];
      }
      worst = std::max(worst, std::abs(near.zeta - best));
    }
    s.record(5, title, mismatched_counts == 0 && worst <= 1e-8,
             fmt::format("{} count probes, {} mismatches; max |zeta_iter - zeta_dense|={:.3e} (<= 1e-8); largest "
                         "basis {}",
                         probes, mismatched_counts, worst, largest));
  });
}

void weyl_bracket(Suite& s) {
  const std::string title = "Weyl bracket (v_upper=4, lambda<100, 50 random k)";
  s.guard(6, title, [&] {
    const PotentialSpec v = cli::build_potential(base_config(true));
    const double v_upper = sup_norm_upper(v);
    const double cutoff = suggest_cutoff(100.0, v_upper, 2.0);
    std::mt19937_64 rng(66);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    double worst = 0.0;
    std::size_t compared = 0;
    for (int t = 0; t < 50; ++t) {
      Vector k(2);
      k << u(rng), u(rng);
      const FibreMatrix m = assemble(v, k, cutoff);
      const Vector z = dense_eigenvalues(m);
      std::vector<double> free;
      for (Eigen::Index i = 0; i < m.size(); ++i) free.push_back((m.basis().point(i) + k).squaredNorm());
      std::sort(free.begin(), free.end());
      for (Eigen::Index j = 0; j < z.size() && z[j] < 100.0; ++j) {
        worst = std::max(worst, std::abs(z[j] - free[static_cast<std::size_t>(j)]));
        ++compared;
      }
    }
    s.record(6, title, worst <= v_upper + 1e-6,
             fmt::format("v_upper={:.6g}, {} eigenvalues compared, max |lambda_j - free_j|={:.6f} (<= 4 + 1e-6)",
                         v_upper, compared, worst));
  });
}

void regular_trend(Suite& s) {
  const std::string title = "regular-direction trend (theta_radius=1, v=0.25, 1e5 samples)";
  s.guard(7, title, [&] {
    json c = base_config(false);
    c["params"] = {{"rho", {1e2, 1e3, 1e4}}, {"v", 0.25}, {"theta_radius", 1.0}, {"samples", 100000}, {"seed", 7}};
    const json rows = s.execute("c7-fraction", cli::Command::Fraction, c)["results"];
    std::vector<double> f;
    for (const auto& r : rows) f.push_back(r["fraction"].get<double>());
    const bool trend = f[1] > f[0] - 0.02 && f[2] > f[1] - 0.02;
    const bool high = f[2] >= 0.95;
    s.record(7, title, trend && high,
             fmt::format("fraction(1e2)={:.5f}, fraction(1e3)={:.5f}, fraction(1e4)={:.5f} (>= 0.95); increasing "
                         "within 0.02: {}",
                         f[0], f[1], f[2], trend));
  });
}

void determinism(Suite& s) {
  const std::string title = "determinism (byte-identical artifacts on rerun)";
  s.guard(8, title, [&] {
    std::size_t files = 0;
    std::vector<std::string> differing;
    for (const Run& run : s.runs()) {
      cli::RunOptions options;
      options.out_dir = s.out() / "rerun" / run.dir.filename();
      options.workers = 2;
      const cli::RunResult again = cli::execute(run.command, run.config, options);
      for (const fs::path& file : again.artifacts) {
        ++files;
        if (slurp(file) != slurp(run.dir / file.filename())) differing.push_back(file.filename().string());
      }
    }
    std::string detail = fmt::format("{} runs, {} artifacts compared (rerun with 2 workers), {} differ", s.runs().size(),
                                     files, differing.size());
    for (const auto& d : differing) detail += " " + d;
    s.record(8, title, files > 0 && differing.empty(), detail);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for bloch-dos", "acceptance"};
  std::string out = "acceptance_artifacts";
  app.add_option("--out", out, "directory for artifacts");
  CLI11_PARSE(app, argc, argv);

  Suite suite{fs::path(out)};
  free_ids(suite);
  dos_lower_bound(suite);
  decay_lemma(suite);
  gradient_bound(suite);
  oracle_equivalence(suite);
  weyl_bracket(suite);
  regular_trend(suite);
  determinism(suite);
  std::cout << fmt::format("{} of 8 criteria passed", 8 - suite.failures()) << std::endl;
  return suite.failures() == 0 ? 0 : 1;
}
