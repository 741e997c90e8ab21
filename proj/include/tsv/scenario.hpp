#pragma once

// Declarative scenario files for the batch front end.
//
// A scenario is a JSON object:
//
//   {
//     "experiment": "born_emergence",
//     "seed": 42,                      // required for stochastic experiments
//     "samples": 10000,                // required where the experiment samples
//     "params": { "theta": 1.5707963267948966, "env_dim": 4 },
//     "sweep": { "theta": [0.0, 1.0471975511965976] },   // optional
//     "output": { "path": "out.json", "format": "json" } // optional
//   }
//
// Parsing is strict: unknown keys anywhere are rejected, physical parameters
// have no defaults, and every sweep point is bound (validated and turned into
// library inputs) before any experiment runs. Complex numbers are written as
// a bare number (real) or a [re, im] pair; matrices as arrays of rows.

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tsv/tsv.hpp"

namespace tsv::scenario {

using Json = nlohmann::ordered_json;

// Anything wrong with a scenario file: syntax, schema or parameter values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Kind { real, integer, complex, complex_vector, matrix, boolean, statistics, arcs, schedule, final_boundary };

struct ParamSpec {
  std::string name;
  Kind kind;
  bool required = true;
};

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::string topic;
  std::vector<ParamSpec> params;
  bool stochastic = false;
  bool uses_samples = false;
};

// Alphabetical.
inline const std::vector<ExperimentInfo>& experiments() {
  static const std::vector<ExperimentInfo> table = {
      {"abl",
       "ABL probabilities of every history of a pre- and post-selected process",
       "two-boundary measurement amplitudes",
       {{"initial", Kind::complex_vector}, {"final", Kind::final_boundary}, {"schedule", Kind::schedule},
        {"history_cap", Kind::integer, false}}},
      {"born_emergence",
       "frequency of the dominant matched branch for a spin at angle theta",
       "Born rule from bang/crunch matching",
       {{"theta", Kind::real}, {"env_dim", Kind::integer}},
       true,
       true},
      {"cat_witness",
       "coherence left in a cat after tracing out its witness",
       "witnessed macroscopic superposition",
       {{"witness_overlap", Kind::complex}}},
      {"cpt",
       "CPT asymmetry |conj(a) a' - a conj(a')| of two boundary amplitudes",
       "CPT violation from unequal boundaries",
       {{"a", Kind::complex}, {"a_prime", Kind::complex}}},
      {"dominance",
       "fraction of trials where the top matched weight beats the next by 100x",
       "dominance of one matched history",
       {{"h", Kind::real}, {"k", Kind::integer}},
       true,
       true},
      {"ellipsoid",
       "two antennae in the foci of a mirrored ellipse with a dark spot",
       "mirrored ellipse antennae",
       {{"semi_major", Kind::real},
        {"semi_minor", Kind::real},
        {"wavenumber", Kind::real},
        {"n_surface", Kind::integer},
        {"dark_spot", Kind::arcs},
        {"phase", Kind::real},
        {"inverse_r_weighting", Kind::boolean, false},
        {"source_offset", Kind::real, false}}},
      {"hbt",
       "two-source two-detector intensity interference rate",
       "HBT two-contribution amplitude",
       {{"a13", Kind::complex}, {"a14", Kind::complex}, {"a23", Kind::complex}, {"a24", Kind::complex},
        {"statistics", Kind::statistics}}},
      {"overlap_scaling",
       "decay of |<initial|final>|^2 with the number of binary decisions",
       "boundary overlap per decision",
       {{"n_decisions", Kind::integer}, {"branching", Kind::integer}},
       true,
       false},
      {"stern_gerlach",
       "return fidelity of a spin split along z and recombined",
       "traceless Stern-Gerlach loop",
       {{"input", Kind::complex_vector}, {"with_witness", Kind::boolean}, {"witness_overlap", Kind::complex, false}}},
  };
  return table;
}

inline const ExperimentInfo* find_experiment(const std::string& name) {
  for (const auto& e : experiments())
    if (e.name == name) return &e;
  return nullptr;
}

// Deterministic listing: name, required params, description, topic.
inline std::string list_experiments() {
  std::ostringstream os;
  for (const auto& e : experiments()) {
    std::string required;
    for (const auto& p : e.params) {
      if (!p.required) continue;
      if (!required.empty()) required += ",";
      required += p.name;
    }
    if (e.stochastic) required += ",seed";
    if (e.uses_samples) required += ",samples";
    os << e.name << "\t" << required << "\t" << e.description << "\t[" << e.topic << "]\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Typed readers. `where` is the dotted field path used in diagnostics.
// ---------------------------------------------------------------------------

namespace read {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ConfigError("field " + where + ": " + what);
}

inline double real(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "must be finite");
  return v;
}

inline std::uint64_t integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected a non-negative integer");
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const auto v = j.get<std::int64_t>();
  if (v < 0) fail(where, "expected a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

inline Complex complex(const Json& j, const std::string& where) {
  if (j.is_number()) return {real(j, where), 0.0};
  if (j.is_array() && j.size() == 2) return {real(j[0], where + "[0]"), real(j[1], where + "[1]")};
  fail(where, "expected a number or a [re, im] pair");
}

inline Eigen::VectorXcd complex_vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of complex numbers");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Eigen::MatrixXcd matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::string row_where = where + "[" + std::to_string(r) + "]";
    const auto row = complex_vector(j[static_cast<std::size_t>(r)], row_where);
    if (row.size() != n) fail(row_where, "matrix must be square");
    m.row(r) = row.transpose();
  }
  return m;
}

inline bool boolean(const Json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

inline Statistics statistics(const Json& j, const std::string& where) {
  if (j == "boson") return Statistics::boson;
  if (j == "fermion") return Statistics::fermion;
  fail(where, "expected \"boson\" or \"fermion\"");
}

inline std::vector<std::pair<double, double>> arcs(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of [start, end] pairs");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != 2) fail(w, "expected [start, end]");
    out.emplace_back(real(j[i][0], w + "[0]"), real(j[i][1], w + "[1]"));
  }
  return out;
}

inline void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

// Schedule steps:
//   {"evolve": <matrix>}
//   {"measure": "computational"}
//   {"measure": {"subspace": [indices]}}       -> {P_S, I - P_S}
//   {"measure": {"projectors": [<matrix>...]}}
inline Schedule schedule(const Json& j, std::size_t dim, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of steps");
  Schedule out(dim);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    const Json& step = j[i];
    if (!step.is_object() || step.size() != 1) fail(w, "expected {\"evolve\": ...} or {\"measure\": ...}");
    try {
      if (step.contains("evolve")) {
        out.evolve(Unitary(matrix(step["evolve"], w + ".evolve")));
      } else if (step.contains("measure")) {
        const Json& m = step["measure"];
        const std::string mw = w + ".measure";
        if (m == "computational") {
          out.measure(MeasurementEvent::computational(dim));
        } else if (m.is_object()) {
          only_keys(m, mw, {"subspace", "projectors"});
          if (m.size() != 1) fail(mw, "give exactly one of subspace, projectors");
          if (m.contains("subspace")) {
            std::vector<std::size_t> idx;
            const Json& s = m["subspace"];
            if (!s.is_array()) fail(mw + ".subspace", "expected an array of basis indices");
            for (std::size_t k = 0; k < s.size(); ++k) idx.push_back(integer(s[k], mw + ".subspace[" + std::to_string(k) + "]"));
            out.measure(MeasurementEvent::binary(Projector::onto_basis(dim, idx)));
          } else {
            const Json& ps = m["projectors"];
            if (!ps.is_array() || ps.empty()) fail(mw + ".projectors", "expected a non-empty array of matrices");
            std::vector<Projector> projectors;
            for (std::size_t k = 0; k < ps.size(); ++k)
              projectors.emplace_back(matrix(ps[k], mw + ".projectors[" + std::to_string(k) + "]"));
            out.measure(MeasurementEvent(std::move(projectors)));
          }
        } else {
          fail(mw, "expected \"computational\" or an object");
        }
      } else {
        fail(w, "expected {\"evolve\": ...} or {\"measure\": ...}");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(w, e.what());
    }
  }
  return out;
}

}  // namespace read

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct OutputSpec {
  std::string path;  // empty: stdout
  std::string format = "json";
};

struct Scenario {
  const ExperimentInfo* info = nullptr;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  Json params;
  Json sweep;  // object of param -> list, possibly empty
  OutputSpec output;
  Json source;
};

inline void check_format(const std::string& format, const std::string& where) {
  if (format != "json" && format != "csv") read::fail(where, "expected \"json\" or \"csv\"");
}

// Turns a JSON parse failure into "line L, column C: ..." for the text.
inline ConfigError syntax_error(const std::string& text, const nlohmann::json::parse_error& e) {
  std::size_t line = 1;
  std::size_t col = 1;
  const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
}

/// Parses and schema-checks scenario text. Seed presence is checked later in
/// bind(), after a possible command-line override.
inline Scenario parse(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw syntax_error(text, e);
  }
  read::only_keys(j, "", {"experiment", "seed", "samples", "params", "sweep", "output"});

  Scenario sc;
  sc.source = j;
  if (!j.contains("experiment") || !j["experiment"].is_string()) read::fail("experiment", "required string is missing");
  sc.info = find_experiment(j["experiment"].get<std::string>());
  if (!sc.info) read::fail("experiment", "unknown experiment \"" + j["experiment"].get<std::string>() + "\"");

  if (j.contains("seed")) sc.seed = read::integer(j["seed"], "seed");
  if (j.contains("samples")) {
    if (!sc.info->uses_samples) read::fail("samples", "not used by experiment " + sc.info->name);
    sc.samples = read::integer(j["samples"], "samples");
    if (*sc.samples < 1) read::fail("samples", "must be >= 1");
  } else if (sc.info->uses_samples) {
    read::fail("samples", "required by experiment " + sc.info->name);
  }

  if (!j.contains("params")) read::fail("params", "required object is missing");
  sc.params = j["params"];
  if (!sc.params.is_object()) read::fail("params", "expected an object");
  sc.sweep = j.contains("sweep") ? j["sweep"] : Json::object();
  if (!sc.sweep.is_object()) read::fail("sweep", "expected an object");

  const auto known = [&](const std::string& key) {
    return std::any_of(sc.info->params.begin(), sc.info->params.end(), [&](const ParamSpec& p) { return p.name == key; });
  };
  for (const auto& [key, _] : sc.params.items())
    if (!known(key)) read::fail("params." + key, "unknown key for experiment " + sc.info->name);
  for (const auto& [key, values] : sc.sweep.items()) {
    if (!known(key)) read::fail("sweep." + key, "unknown key for experiment " + sc.info->name);
    if (sc.params.contains(key)) read::fail("sweep." + key, "also given in params");
    if (!values.is_array() || values.empty()) read::fail("sweep." + key, "expected a non-empty list of values");
  }
  for (const auto& p : sc.info->params)
    if (p.required && !sc.params.contains(p.name) && !sc.sweep.contains(p.name))
      read::fail("params." + p.name, "required by experiment " + sc.info->name);

  if (j.contains("output")) {
    const Json& o = j["output"];
    read::only_keys(o, "output", {"path", "format"});
    if (o.contains("path")) {
      if (!o["path"].is_string()) read::fail("output.path", "expected a string");
      sc.output.path = o["path"].get<std::string>();
    }
    if (o.contains("format")) {
      if (!o["format"].is_string()) read::fail("output.format", "expected a string");
      sc.output.format = o["format"].get<std::string>();
      check_format(sc.output.format, "output.format");
    }
  }
  return sc;
}

// Sweep expansion: cartesian product, first sweep key outermost, values in
// listed order. Each point is the params object with sweep values merged in.
inline std::vector<Json> expand_points(const Scenario& sc) {
  std::vector<Json> points{sc.params};
  for (const auto& [key, values] : sc.sweep.items()) {
    std::vector<Json> next;
    for (const auto& base : points)
      for (const auto& v : values) {
        Json p = base;
        p[key] = v;
        next.push_back(std::move(p));
      }
    points = std::move(next);
  }
  return points;
}

// ---------------------------------------------------------------------------
// Binding and running
// ---------------------------------------------------------------------------

struct RunContext {
  std::optional<std::uint64_t> seed;
  std::uint64_t samples = 0;
  std::size_t threads = 1;
};

struct RunOutput {
  Json outputs = Json::object();
  Json tables = Json::object();
};

using BoundRun = std::function<RunOutput(const RunContext&)>;

inline Json complex_json(Complex z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

namespace bind_detail {

inline std::string at(const std::string& key) { return "params." + key; }

inline BoundRun abl(const Json& p) {
  const auto init = read::complex_vector(p["initial"], at("initial"));
  const std::size_t dim = static_cast<std::size_t>(init.size());
  const StateVector initial = [&] {
    try {
      return StateVector(init).normalized();
    } catch (const Error& e) {
      read::fail(at("initial"), e.what());
    }
  }();
  const Schedule schedule = read::schedule(p["schedule"], dim, at("schedule"));
  const std::size_t cap = p.contains("history_cap") ? read::integer(p["history_cap"], at("history_cap")) : kDefaultHistoryCap;

  const Json& fj = p["final"];
  if (fj.is_string()) {
    if (fj != "maximally_mixed") read::fail(at("final"), "expected a state vector or \"maximally_mixed\"");
    return [=](const RunContext&) {
      RunOutput out;
      const auto hs = enumerate_histories(initial, schedule, FinalDensity::maximally_mixed(dim), cap);
      Json rows = Json::array();
      double total = 0.0;
      for (const auto& h : hs) {
        rows.push_back(Json{{"outcomes", h.outcomes}, {"probability", h.probability}});
        total += h.probability;
      }
      out.outputs["n_histories"] = hs.size();
      out.outputs["total_probability"] = total;
      out.tables["histories"] = std::move(rows);
      return out;
    };
  }
  const auto fin = read::complex_vector(fj, at("final"));
  if (static_cast<std::size_t>(fin.size()) != dim) read::fail(at("final"), "dimension differs from initial");
  const StateVector final_state = [&] {
    try {
      return StateVector(fin).normalized();
    } catch (const Error& e) {
      read::fail(at("final"), e.what());
    }
  }();
  const TwoBoundaryProcess proc(initial, final_state, schedule);
  return [=](const RunContext&) {
    RunOutput out;
    const auto hs = enumerate_histories(proc, cap);
    Json rows = Json::array();
    double total = 0.0;
    for (const auto& h : hs) {
      rows.push_back(Json{{"outcomes", h.outcomes}, {"amplitude", complex_json(h.amplitude)}, {"probability", h.probability}});
      total += h.probability;
    }
    out.outputs["n_histories"] = hs.size();
    out.outputs["total_probability"] = total;
    out.tables["histories"] = std::move(rows);
    return out;
  };
}

inline BoundRun born_emergence(const Json& p) {
  const double theta = read::real(p["theta"], at("theta"));
  const auto env_dim = read::integer(p["env_dim"], at("env_dim"));
  if (env_dim < 1) read::fail(at("env_dim"), "must be >= 1");
  return [=](const RunContext& ctx) {
    const auto r = born_emergence_experiment(theta, ctx.samples, Rng(*ctx.seed), env_dim, ctx.threads);
    RunOutput out;
    out.outputs["empirical_p"] = r.empirical_p;
    out.outputs["born_p"] = r.born_p;
    out.outputs["up_count"] = r.up_count;
    out.outputs["samples"] = r.samples;
    out.outputs["binomial_sigma"] = std::sqrt(r.born_p * (1.0 - r.born_p) / double(r.samples));
    return out;
  };
}

inline BoundRun cat_witness(const Json& p) {
  const Complex c = read::complex(p["witness_overlap"], at("witness_overlap"));
  if (std::abs(c) > 1.0 + tol::kEquality) read::fail(at("witness_overlap"), "|c| must be <= 1");
  return [=](const RunContext&) {
    RunOutput out;
    out.outputs["coherence"] = cat_witness_coherence({c});
    return out;
  };
}

inline BoundRun cpt(const Json& p) {
  const CptAmplitudePair pair{read::complex(p["a"], at("a")), read::complex(p["a_prime"], at("a_prime"))};
  return [=](const RunContext&) {
    RunOutput out;
    out.outputs["asymmetry"] = cpt_asymmetry(pair);
    return out;
  };
}

inline BoundRun dominance(const Json& p) {
  const double h = read::real(p["h"], at("h"));
  const auto k = read::integer(p["k"], at("k"));
  if (!(h > 0.0)) read::fail(at("h"), "must be > 0");
  if (k < 2) read::fail(at("k"), "must be >= 2");
  return [=](const RunContext& ctx) {
    const auto r = dominance_experiment(DominanceModel{h, k, Rng(*ctx.seed)}, ctx.samples, ctx.threads);
    RunOutput out;
    out.outputs["fraction"] = r.fraction;
    out.outputs["dominant"] = r.dominant;
    out.outputs["trials"] = r.trials;
    if (k == 2) out.outputs["closed_form"] = dominance_closed_form_k2(h);
    return out;
  };
}

inline BoundRun ellipsoid(const Json& p) {
  EllipsoidConfig cfg{read::real(p["semi_major"], at("semi_major")),
                      read::real(p["semi_minor"], at("semi_minor")),
                      read::real(p["wavenumber"], at("wavenumber")),
                      read::integer(p["n_surface"], at("n_surface")),
                      read::arcs(p["dark_spot"], at("dark_spot")),
                      read::real(p["phase"], at("phase"))};
  if (p.contains("inverse_r_weighting")) cfg.inverse_r_weighting = read::boolean(p["inverse_r_weighting"], at("inverse_r_weighting"));
  if (p.contains("source_offset")) cfg.source_offset = read::real(p["source_offset"], at("source_offset"));
  return [=](const RunContext&) {
    const auto r = ellipsoid_experiment(cfg);
    RunOutput out;
    out.outputs["rate_direct"] = r.rate_direct;
    out.outputs["rate_interference"] = r.rate_interference;
    out.outputs["total_rate"] = r.total_rate;
    out.outputs["emission_probability_shift"] = r.emission_probability_shift;
    out.outputs["dark_fraction"] = r.dark_fraction;
    return out;
  };
}

inline BoundRun hbt(const Json& p) {
  const HbtConfig cfg{read::complex(p["a13"], at("a13")), read::complex(p["a14"], at("a14")),
                      read::complex(p["a23"], at("a23")), read::complex(p["a24"], at("a24")),
                      read::statistics(p["statistics"], at("statistics"))};
  return [=](const RunContext&) {
    RunOutput out;
    out.outputs["rate"] = hbt_rate(cfg);
    return out;
  };
}

inline BoundRun overlap_scaling(const Json& p) {
  const auto n = read::integer(p["n_decisions"], at("n_decisions"));
  const auto b = read::integer(p["branching"], at("branching"));
  if (n < 1 || n > kMaxOverlapDecisions) read::fail(at("n_decisions"), "must be in [1, 30]");
  if (b < 2) read::fail(at("branching"), "must be >= 2");
  return [=](const RunContext& ctx) {
    const auto r = overlap_scaling_experiment(DecisionRun{n, b, Rng(*ctx.seed)});
    RunOutput out;
    out.outputs["squared_base"] = r.squared_base;
    out.outputs["amplitude_base"] = r.amplitude_base;
    Json rows = Json::array();
    for (std::size_t i = 0; i < r.log_squared_overlap.size(); ++i) {
      const double l = r.log_squared_overlap[i];
      rows.push_back(Json{{"n", i + 1}, {"log_squared_overlap", l}, {"squared_overlap", std::exp(l)}, {"overlap", std::exp(0.5 * l)}});
    }
    out.tables["overlaps"] = std::move(rows);
    return out;
  };
}

inline BoundRun stern_gerlach(const Json& p) {
  const auto v = read::complex_vector(p["input"], at("input"));
  if (v.size() != 2) read::fail(at("input"), "expected 2 amplitudes");
  const StateVector input = [&] {
    try {
      return StateVector(v).normalized();
    } catch (const Error& e) {
      read::fail(at("input"), e.what());
    }
  }();
  const bool with_witness = read::boolean(p["with_witness"], at("with_witness"));
  Complex c{0.0, 0.0};
  if (with_witness) {
    if (!p.contains("witness_overlap")) read::fail(at("witness_overlap"), "required when with_witness is true");
    c = read::complex(p["witness_overlap"], at("witness_overlap"));
    if (std::abs(c) > 1.0 + tol::kEquality) read::fail(at("witness_overlap"), "|c| must be <= 1");
  } else if (p.contains("witness_overlap")) {
    read::fail(at("witness_overlap"), "only allowed when with_witness is true");
  }
  return [=](const RunContext&) {
    const auto r = stern_gerlach_recombine(input, with_witness, c);
    RunOutput out;
    out.outputs["return_fidelity"] = r.return_fidelity;
    Json rho = Json::array();
    for (std::size_t i = 0; i < 2; ++i) {
      Json row = Json::array();
      for (std::size_t j = 0; j < 2; ++j) row.push_back(complex_json(r.reduced_density(i, j)));
      rho.push_back(std::move(row));
    }
    out.outputs["reduced_density"] = std::move(rho);
    return out;
  };
}

}  // namespace bind_detail

inline BoundRun bind_point(const ExperimentInfo& info, const Json& params) {
  using Binder = BoundRun (*)(const Json&);
  static const std::map<std::string, Binder> binders = {
      {"abl", bind_detail::abl},
      {"born_emergence", bind_detail::born_emergence},
      {"cat_witness", bind_detail::cat_witness},
      {"cpt", bind_detail::cpt},
      {"dominance", bind_detail::dominance},
      {"ellipsoid", bind_detail::ellipsoid},
      {"hbt", bind_detail::hbt},
      {"overlap_scaling", bind_detail::overlap_scaling},
      {"stern_gerlach", bind_detail::stern_gerlach},
  };
  return binders.at(info.name)(params);
}

struct RunOptions {
  std::size_t threads = 1;
  std::optional<std::uint64_t> seed_override;
};

/// Result of one scenario. Everything except "metadata" is the numeric
/// payload, which is identical across re-runs of the same file.
struct ResultRecord {
  Json document;

  Json payload() const {
    Json p = document;
    p.erase("metadata");
    return p;
  }
};

// Modeling caveats carried into every record of that experiment.
inline Json notes_for(const ExperimentInfo& info) {
  Json notes = Json::array();
  if (info.name == "dominance")
    notes.push_back("modeling choice: matched log10 weights drawn i.i.d. Normal(-h, sqrt(h)); dominance means a gap >= 2 (100x)");
  if (info.name == "born_emergence")
    notes.push_back("modeling choice: Haar-random border state and witness unitaries per sample; branch with the larger matched weight wins");
  if (info.name == "ellipsoid")
    notes.push_back("modeling choice: emission_probability_shift = rate_interference / rate_direct; 2D scalar waves, single reflections");
  if (info.name == "overlap_scaling")
    notes.push_back("squared_base fits |<i|f>|^2 per decision, amplitude_base fits |<i|f>|");
  return notes;
}

/// Binds every point first (all validation happens here), then runs them.
/// Threads are spent inside Monte Carlo experiments and across sweep points;
/// run order in the record always follows the expansion order.
inline ResultRecord run(const Scenario& sc, const RunOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  RunContext ctx;
  ctx.seed = opts.seed_override ? opts.seed_override : sc.seed;
  ctx.samples = sc.samples.value_or(0);
  ctx.threads = std::max<std::size_t>(1, opts.threads);
  if (sc.info->stochastic && !ctx.seed) read::fail("seed", "required by stochastic experiment " + sc.info->name);

  const auto points = expand_points(sc);
  std::vector<BoundRun> bound;
  bound.reserve(points.size());
  for (const auto& p : points) {
    try {
      bound.push_back(bind_point(*sc.info, p));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("params: ") + e.what());
    }
  }

  std::vector<RunOutput> results(points.size());
  // Monte Carlo experiments parallelize internally; the rest across points.
  const bool inner_parallel = sc.info->stochastic;
  RunContext point_ctx = ctx;
  if (!inner_parallel) point_ctx.threads = 1;
  parallel_for(points.size(), inner_parallel ? 1 : ctx.threads, [&](std::size_t i) {
    try {
      results[i] = bound[i](point_ctx);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("params: ") + e.what());
    } catch (const DimensionMismatch& e) {
      throw ConfigError(std::string("params: ") + e.what());
    }
  });

  Json doc;
  doc["experiment"] = sc.info->name;
  doc["library_version"] = kVersion;
  doc["seed"] = ctx.seed ? Json(*ctx.seed) : Json(nullptr);
  doc["rng_algorithm"] = Rng::kAlgorithm;
  doc["scenario"] = sc.source;
  Json runs = Json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    Json r;
    r["params"] = points[i];
    r["outputs"] = std::move(results[i].outputs);
    if (!results[i].tables.empty()) r["tables"] = std::move(results[i].tables);
    runs.push_back(std::move(r));
  }
  doc["runs"] = std::move(runs);
  doc["notes"] = notes_for(*sc.info);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  doc["metadata"] = Json{{"wall_time_seconds", wall}, {"threads", ctx.threads}};
  return ResultRecord{std::move(doc)};
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline std::string render_json(const ResultRecord& rec) { return rec.document.dump(2) + "\n"; }

namespace csv_detail {

inline std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Flattens a JSON value into (column, cell) pairs. Complex {re, im} objects
// become name_re, name_im; lists of integers (outcome tuples) are joined by
// ';'; nested matrices are skipped.
inline void flatten(const std::string& name, const Json& v, std::vector<std::pair<std::string, std::string>>& out) {
  if (v.is_number_integer()) {
    out.emplace_back(name, v.dump());
  } else if (v.is_number()) {
    out.emplace_back(name, number(v.get<double>()));
  } else if (v.is_boolean()) {
    out.emplace_back(name, v.get<bool>() ? "1" : "0");
  } else if (v.is_string()) {
    out.emplace_back(name, quote(v.get<std::string>()));
  } else if (v.is_object() && v.size() == 2 && v.contains("re") && v.contains("im")) {
    out.emplace_back(name + "_re", number(v["re"].get<double>()));
    out.emplace_back(name + "_im", number(v["im"].get<double>()));
  } else if (v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_number_integer(); })) {
    std::string joined;
    for (const auto& x : v) joined += (joined.empty() ? "" : ";") + x.dump();
    out.emplace_back(name, joined);
  } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    out.emplace_back(name + "_re", number(v[0].get<double>()));
    out.emplace_back(name + "_im", number(v[1].get<double>()));
  }
}

// Parameters declared complex always get the _re/_im pair, whether the
// scenario wrote a bare real or a [re, im] pair.
inline void flatten_param(const ExperimentInfo* info, const std::string& name, const Json& v,
                          std::vector<std::pair<std::string, std::string>>& out) {
  const bool is_complex = info && std::any_of(info->params.begin(), info->params.end(), [&](const ParamSpec& p) {
                            return p.name == name && p.kind == Kind::complex;
                          });
  if (is_complex && v.is_number()) {
    out.emplace_back(name + "_re", number(v.get<double>()));
    out.emplace_back(name + "_im", "0");
  } else if (is_complex && v.is_array() && v.size() == 2) {
    out.emplace_back(name + "_re", number(v[0].get<double>()));
    out.emplace_back(name + "_im", number(v[1].get<double>()));
  } else {
    flatten(name, v, out);
  }
}

}  // namespace csv_detail

/// One row per run, or one row per table row when the run has a table.
/// Columns: seed, version, run index, scalar params, scalar outputs, table
/// columns. Complex values take an _re/_im column pair.
inline std::string render_csv(const ResultRecord& rec) {
  const Json& doc = rec.document;
  const ExperimentInfo* info = find_experiment(doc["experiment"].get<std::string>());
  std::vector<std::string> header;
  std::vector<std::vector<std::pair<std::string, std::string>>> rows;

  std::size_t run_index = 0;
  for (const auto& run : doc["runs"]) {
    std::vector<std::pair<std::string, std::string>> base;
    base.emplace_back("seed", doc["seed"].is_null() ? "" : doc["seed"].dump());
    base.emplace_back("version", doc["library_version"].get<std::string>());
    base.emplace_back("run", std::to_string(run_index++));
    for (const auto& [k, v] : run["params"].items()) csv_detail::flatten_param(info, k, v, base);
    for (const auto& [k, v] : run["outputs"].items()) csv_detail::flatten(k, v, base);

    if (run.contains("tables")) {
      for (const auto& [tname, table] : run["tables"].items()) {
        for (const auto& trow : table) {
          auto row = base;
          for (const auto& [k, v] : trow.items()) csv_detail::flatten(k, v, row);
          rows.push_back(std::move(row));
        }
      }
    } else {
      rows.push_back(std::move(base));
    }
  }

  for (const auto& row : rows)
    for (const auto& [col, _] : row)
      if (std::find(header.begin(), header.end(), col) == header.end()) header.push_back(col);

  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out += ",";
      const auto it = std::find_if(row.begin(), row.end(), [&](const auto& cell) { return cell.first == header[i]; });
      if (it != row.end()) out += it->second;
    }
    out += "\n";
  }
  return out;
}

inline std::string render(const ResultRecord& rec, const std::string& format) {
  return format == "csv" ? render_csv(rec) : render_json(rec);
}

}  // namespace tsv::scenario
