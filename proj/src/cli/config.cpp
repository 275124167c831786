#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <string>

#include <fmt/format.h>

#include "blochdos/cli.hpp"
#include "blochdos/errors.hpp"
#include "blochdos/fibre.hpp"

namespace blochdos::cli {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kCommandNames = {
    "bands", "ids", "window", "fraction", "verify-decay", "verify-gradient"};

/// A JSON object whose keys must all be consumed.
class Section {
 public:
  Section(const json& value, std::string path) : value_(value), path_(std::move(path)) {
    if (!value_.is_object()) throw ValidationError(fmt::format("{} must be an object", path_));
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = value_.find(key);
    return it == value_.end() || it->is_null() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) throw ValidationError(fmt::format("{}.{} is required", path_, key));
    return *v;
  }

  std::string path(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& item : value_.items()) {
      if (!seen_.contains(item.key())) {
        throw ValidationError(fmt::format("unknown key {}.{}", path_, item.key()));
      }
    }
  }

 private:
  const json& value_;
  std::string path_;
  std::set<std::string> seen_;
};

double real(const json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError(fmt::format("{} must be a number", path));
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(fmt::format("{} must be finite", path));
  return x;
}

double positive(const json& v, const std::string& path) {
  const double x = real(v, path);
  if (!(x > 0.0)) throw ValidationError(fmt::format("{} must be positive, got {}", path, x));
  return x;
}

double nonnegative(const json& v, const std::string& path) {
  const double x = real(v, path);
  if (x < 0.0) throw ValidationError(fmt::format("{} must be non-negative, got {}", path, x));
  return x;
}

std::int64_t integer(const json& v, const std::string& path, std::int64_t lo, std::int64_t hi) {
  if (!v.is_number_integer()) throw ValidationError(fmt::format("{} must be an integer", path));
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) {
    throw ValidationError(fmt::format("{} must be at most {}", path, hi));
  }
  const auto x = v.get<std::int64_t>();
  if (x < lo || x > hi) {
    throw ValidationError(fmt::format("{} must lie in [{}, {}], got {}", path, lo, hi, x));
  }
  return x;
}

std::uint64_t seed_value(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ValidationError(fmt::format("{} must be a non-negative integer", path));
  }
  return v.get<std::uint64_t>();
}

bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ValidationError(fmt::format("{} must be true or false", path));
  return v.get<bool>();
}

json real_vector(const json& v, const std::string& path, int dim) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    throw ValidationError(fmt::format("{} must be an array of {} numbers", path, dim));
  }
  json out = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(real(v[i], fmt::format("{}[{}]", path, i)));
  return out;
}

json int_vector(const json& v, const std::string& path, int dim) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    throw ValidationError(fmt::format("{} must be an array of {} integers", path, dim));
  }
  json out = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(integer(v[i], fmt::format("{}[{}]", path, i), -1000000, 1000000));
  }
  return out;
}

/// A number or a non-empty array of numbers, each checked by `check`.
template <class Check>
json real_list(const json& v, const std::string& path, Check check) {
  json out = json::array();
  if (v.is_array()) {
    if (v.empty()) throw ValidationError(fmt::format("{} must not be empty", path));
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(check(v[i], fmt::format("{}[{}]", path, i)));
  } else {
    out.push_back(check(v, path));
  }
  return out;
}

double max_of(const json& list) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& x : list) m = std::max(m, x.get<double>());
  return m;
}

json resolve_lattice(const json& raw) {
  Section s(raw, "lattice");
  const json& basis = s.require("basis");
  const json* dim_value = s.find("dim");
  s.finish();
  if (!basis.is_array() || basis.empty()) {
    throw ValidationError("lattice.basis must be a non-empty array");
  }
  json rows = json::array();
  if (basis[0].is_array()) {
    const int d = static_cast<int>(basis.size());
    if (dim_value != nullptr && integer(*dim_value, "lattice.dim", 2, 64) != d) {
      throw ValidationError("lattice.dim disagrees with the number of basis rows");
    }
    for (int i = 0; i < d; ++i) rows.push_back(real_vector(basis[i], fmt::format("lattice.basis[{}]", i), d));
  } else {
    if (dim_value == nullptr) {
      throw ValidationError("lattice.dim is required when lattice.basis is a flat row-major array");
    }
    const auto d = static_cast<int>(integer(*dim_value, "lattice.dim", 2, 64));
    if (static_cast<int>(basis.size()) != d * d) {
      throw ValidationError(fmt::format("lattice.basis must hold {} entries for dim {}", d * d, d));
    }
    for (int i = 0; i < d; ++i) {
      json row = json::array();
      for (int j = 0; j < d; ++j) row.push_back(real(basis[i * d + j], fmt::format("lattice.basis[{}]", i * d + j)));
      rows.push_back(row);
    }
  }
  return json{{"basis", rows}};
}

json resolve_potential(const json* raw, int d) {
  json out{{"coefficients", json::array()}, {"cosines", json::array()}};
  if (raw == nullptr) return out;
  Section s(*raw, "potential");
  if (const json* list = s.find("coefficients")) {
    if (!list->is_array()) throw ValidationError("potential.coefficients must be an array");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string path = fmt::format("potential.coefficients[{}]", i);
      Section c((*list)[i], path);
      json entry{{"n", int_vector(c.require("n"), c.path("n"), d)}, {"re", real(c.require("re"), c.path("re"))}};
      const json* im = c.find("im");
      entry["im"] = im == nullptr ? 0.0 : real(*im, c.path("im"));
      c.finish();
      out["coefficients"].push_back(entry);
    }
  }
  if (const json* list = s.find("cosines")) {
    if (!list->is_array()) throw ValidationError("potential.cosines must be an array");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string path = fmt::format("potential.cosines[{}]", i);
      Section c((*list)[i], path);
      out["cosines"].push_back(json{{"n", int_vector(c.require("n"), c.path("n"), d)},
                                    {"amplitude", real(c.require("amplitude"), c.path("amplitude"))}});
      c.finish();
    }
  }
  s.finish();
  return out;
}

void resolve_fibre_params(Section& p, json& out) {
  const json* strict = p.find("strict_transcription");
  out["strict_transcription"] = strict == nullptr ? false : boolean(*strict, p.path("strict_transcription"));
  const json* threshold = p.find("dense_threshold");
  out["dense_threshold"] = threshold == nullptr ? 2000 : integer(*threshold, p.path("dense_threshold"), 1, 100000);
}

double resolve_eta(Section& p, json& out) {
  const json* eta = p.find("eta");
  const double value = eta == nullptr ? 0.9 : real(*eta, p.path("eta"));
  if (!(value > 0.0 && value < 1.0)) {
    throw ValidationError(fmt::format("{} must lie in (0, 1), got {}", p.path("eta"), value));
  }
  out["eta"] = value;
  return value;
}

json resolve_params(const json* raw, Command command, const PotentialSpec& potential) {
  const json empty = json::object();
  Section p(raw == nullptr ? empty : *raw, "params");
  const int d = potential.dim();
  const double v_upper = sup_norm_upper(potential);
  json out = json::object();
  resolve_fibre_params(p, out);

  switch (command) {
    case Command::Bands: {
      const json& kpoints = p.require("kpoints");
      if (!kpoints.is_array() || kpoints.empty()) {
        throw ValidationError("params.kpoints must be a non-empty array of k vectors");
      }
      json ks = json::array();
      for (std::size_t i = 0; i < kpoints.size(); ++i) {
        ks.push_back(real_vector(kpoints[i], fmt::format("params.kpoints[{}]", i), d));
      }
      out["kpoints"] = ks;
      const json* steps = p.find("path_steps");
      out["path_steps"] = steps == nullptr ? 0 : integer(*steps, p.path("path_steps"), 0, 100000);
      const json* bands = p.find("num_bands");
      out["num_bands"] = bands == nullptr ? 8 : integer(*bands, p.path("num_bands"), 1, 100000);
      out["cutoff"] = positive(p.require("cutoff"), p.path("cutoff"));
      break;
    }
    case Command::Ids:
    case Command::Window: {
      out["lambda"] = real_list(p.require("lambda"), p.path("lambda"), positive);
      out["grid"] = integer(p.require("grid"), p.path("grid"), 1, 100000);
      double top = max_of(out["lambda"]);
      if (command == Command::Window) {
        const json& eps = p.require("epsilon");
        const double epsilon = real(eps, p.path("epsilon"));
        if (!(epsilon > 0.0)) {
          throw ValidationError(fmt::format("params.epsilon must be positive, got {}", epsilon));
        }
        out["epsilon"] = epsilon;
        top += epsilon;
      }
      const json* buffer = p.find("buffer");
      out["buffer"] = buffer == nullptr ? 2.0 : nonnegative(*buffer, p.path("buffer"));
      const json* stability = p.find("check_stability");
      out["check_stability"] = stability == nullptr ? true : boolean(*stability, p.path("check_stability"));
      const json* cutoff = p.find("cutoff");
      out["cutoff"] = cutoff != nullptr ? positive(*cutoff, p.path("cutoff"))
                                        : suggest_cutoff(top, v_upper, out["buffer"].get<double>());
      break;
    }
    case Command::Fraction: {
      out["rho"] = real_list(p.require("rho"), p.path("rho"), [](const json& v, const std::string& path) {
        const double rho = real(v, path);
        if (!(rho > 1.0)) throw ValidationError(fmt::format("{} must exceed 1, got {}", path, rho));
        return rho;
      });
      const json* v = p.find("v");
      out["v"] = v == nullptr ? v_upper : nonnegative(*v, p.path("v"));
      const json* theta = p.find("theta_radius");
      if (theta == nullptr) {
        out["theta_radius"] = 1.0;
      } else if (theta->is_string()) {
        if (theta->get<std::string>() != "structural") {
          throw ValidationError("params.theta_radius must be a positive number or \"structural\"");
        }
        out["theta_radius"] = "structural";
      } else {
        out["theta_radius"] = positive(*theta, p.path("theta_radius"));
      }
      const json* samples = p.find("samples");
      out["samples"] = samples == nullptr ? 100000 : integer(*samples, p.path("samples"), 1000, 1000000000000);
      const json* seed = p.find("seed");
      out["seed"] = seed == nullptr ? 0 : seed_value(*seed, p.path("seed"));
      break;
    }
    case Command::VerifyDecay: {
      const json* k = p.find("k");
      out["k"] = k == nullptr ? json(std::vector<double>(static_cast<std::size_t>(d), 0.0))
                              : real_vector(*k, p.path("k"), d);
      const double target = positive(p.require("band_target"), p.path("band_target"));
      out["band_target"] = target;
      const double eta = resolve_eta(p, out);
      const json* cutoff = p.find("cutoff");
      if (cutoff != nullptr) {
        out["cutoff"] = positive(*cutoff, p.path("cutoff"));
      } else {
        const int m = (d + 1) / 3 + 1;
        const double kappa = eta / (2 * m + 1);
        out["cutoff"] = 1.3 * (1.0 + m * kappa) * std::sqrt(target + v_upper);
      }
      break;
    }
    case Command::VerifyGradient: {
      const json* points = p.find("points");
      const json* random = p.find("random");
      if ((points == nullptr) == (random == nullptr)) {
        throw ValidationError("params needs exactly one of points or random");
      }
      double top = 0.0;
      if (points != nullptr) {
        if (!points->is_array() || points->empty()) {
          throw ValidationError("params.points must be a non-empty array");
        }
        json list = json::array();
        for (std::size_t i = 0; i < points->size(); ++i) {
          Section q((*points)[i], fmt::format("params.points[{}]", i));
          const double target = positive(q.require("band_target"), q.path("band_target"));
          list.push_back(json{{"k", real_vector(q.require("k"), q.path("k"), d)}, {"band_target", target}});
          q.finish();
          top = std::max(top, target);
        }
        out["points"] = list;
      } else {
        Section r(*random, "params.random");
        json spec{{"count", integer(r.require("count"), r.path("count"), 1, 100000)}};
        const json* seed = r.find("seed");
        spec["seed"] = seed == nullptr ? 0 : seed_value(*seed, r.path("seed"));
        const double lo = positive(r.require("zeta_min"), r.path("zeta_min"));
        const double hi = real(r.require("zeta_max"), r.path("zeta_max"));
        if (!(hi >= lo)) throw ValidationError("params.random.zeta_max must be at least zeta_min");
        r.finish();
        spec["zeta_min"] = lo;
        spec["zeta_max"] = hi;
        out["random"] = spec;
        top = hi;
      }
      resolve_eta(p, out);
      const json* step = p.find("step");
      out["step"] = step == nullptr ? 1e-4 : positive(*step, p.path("step"));
      const json* cutoff = p.find("cutoff");
      out["cutoff"] = cutoff != nullptr ? positive(*cutoff, p.path("cutoff")) : suggest_cutoff(top, v_upper, 4.0);
      break;
    }
  }
  p.finish();
  return out;
}

}  // namespace

std::string_view command_name(Command command) {
  return kCommandNames[static_cast<std::size_t>(command)];
}

Command parse_command(std::string_view name) {
  for (std::size_t i = 0; i < kCommandNames.size(); ++i) {
    if (kCommandNames[i] == name) return static_cast<Command>(i);
  }
  throw ValidationError(fmt::format("unknown command '{}'", name));
}

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open config file {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("config file {} is not valid JSON: {}", path.string(), e.what()));
  }
}

Lattice build_lattice(const json& config) {
  const json& rows = config.at("lattice").at("basis");
  const auto d = static_cast<Eigen::Index>(rows.size());
  Matrix basis(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) basis(i, j) = rows[i][j].get<double>();
  }
  return Lattice(basis);
}

PotentialSpec build_potential(const json& config) {
  const DualLattice dual = dual_lattice(build_lattice(config));
  const int d = dual.dim();
  const auto to_index = [d](const json& n) {
    IntVector out(d);
    for (int i = 0; i < d; ++i) out[i] = n[i].get<int>();
    return out;
  };
  const auto it = config.find("potential");
  if (it == config.end() || it->is_null()) return PotentialSpec::zero(dual);

  std::vector<FourierCoefficient> coeffs;
  if (it->contains("coefficients")) {
    for (const auto& c : it->at("coefficients")) {
      coeffs.push_back({to_index(c.at("n")), Complex(c.at("re").get<double>(), c.value("im", 0.0))});
    }
  }
  if (it->contains("cosines")) {
    std::vector<std::pair<IntVector, double>> terms;
    for (const auto& c : it->at("cosines")) terms.emplace_back(to_index(c.at("n")), c.at("amplitude").get<double>());
    const PotentialSpec cosines = PotentialSpec::cosine_sum(dual, terms);
    coeffs.insert(coeffs.end(), cosines.coefficients().begin(), cosines.coefficients().end());
  }
  return PotentialSpec(dual, std::move(coeffs));
}

json resolve_config(const json& raw, Command command) {
  Section top(raw, "config");
  const json& version = top.require("schema_version");
  if (!version.is_number_integer() || version.get<std::int64_t>() != kSchemaVersion) {
    throw ValidationError(fmt::format("schema_version must be {}", kSchemaVersion));
  }
  if (const json* name = top.find("command")) {
    if (!name->is_string() || name->get<std::string>() != command_name(command)) {
      throw ValidationError(fmt::format("config is for command {}, not {}", name->dump(), command_name(command)));
    }
  }
  if (const json* output = top.find("output"); output != nullptr && !output->is_string()) {
    throw ValidationError("output must be a directory path string");
  }
  if (const json* workers = top.find("workers")) integer(*workers, "workers", 1, 1024);
  const json lattice = resolve_lattice(top.require("lattice"));
  const int d = static_cast<int>(lattice["basis"].size());
  const json potential = resolve_potential(top.find("potential"), d);
  const json* params = top.find("params");
  top.finish();

  json out{{"schema_version", kSchemaVersion},
           {"command", std::string(command_name(command))},
           {"lattice", lattice},
           {"potential", potential}};
  const PotentialSpec spec = build_potential(out);
  out["params"] = resolve_params(params, command, spec);
  return out;
}

}  // namespace blochdos::cli
