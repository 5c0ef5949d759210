// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "modalsim/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "modalsim/errors.hpp"

namespace modalsim {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::kInvalidInput, "scenario: " + what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) bad(std::string(what) + " must be a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) bad(std::string(what) + " must be finite");
  return x;
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j.at(key), key) : fallback;
}

std::uint64_t positive_integer(const json& j, const char* what) {
  if (!j.is_number_integer() || j.get<std::int64_t>() <= 0) bad(std::string(what) + " must be a positive integer");
  return j.get<std::uint64_t>();
}

std::vector<int> dims_from_json(const json& j) {
  if (!j.is_array() || j.empty()) bad("dims must be a nonempty array");
  std::vector<int> dims;
  for (const json& d : j) {
    if (!d.is_number_integer() || d.get<std::int64_t>() < 2 || d.get<std::int64_t>() > 4096)
      bad("every factor dimension must be an integer >= 2");
    dims.push_back(d.get<int>());
  }
  return dims;
}

std::vector<CVector> vectors_from_json(const json& j, const char* what) {
  if (!j.is_array()) bad(std::string(what) + " must be an array of vectors");
  std::vector<CVector> out;
  for (const json& v : j) out.push_back(vector_from_json(v));
  return out;
}

std::vector<Complex> complex_list(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) bad(std::string(what) + " must be a nonempty array");
  std::vector<Complex> out;
  for (const json& z : j) out.push_back(complex_from_json(z));
  return out;
}

/// Normalization is checked at 1e-8 unless `normalize` is set.
StateVector state_from_json(const json& doc) {
  const HilbertStructure s(dims_from_json(field(doc, "dims")));
  CVector amps = vector_from_json(field(doc, "amplitudes"));
  if (amps.size() != s.total_dim())
    bad("amplitudes has " + std::to_string(amps.size()) + " entries, dims need " + std::to_string(s.total_dim()));
  const double n = amps.norm();
  if (!(n > 0.0)) bad("amplitudes must not all vanish");
  if (doc.value("normalize", false)) {
    amps /= n;
  } else if (std::abs(n - 1.0) > tol::kVerify) {
    bad("amplitudes have norm " + format_double(n) + "; set \"normalize\": true to rescale");
  }
  return StateVector(s, amps);
}

MeasurementModel model_from_json(const json& j) {
  MeasurementModel m;
  if (j.contains("system_dims")) m.system_dims = dims_from_json(j.at("system_dims"));
  m.object_eigenvectors = vectors_from_json(field(j, "eigenvectors"), "eigenvectors");
  m.disturbed_states = j.contains("disturbed") ? vectors_from_json(j.at("disturbed"), "disturbed")
                                               : m.object_eigenvectors;
  m.apparatus_states = vectors_from_json(field(j, "apparatus"), "apparatus");
  m.environment_states = vectors_from_json(field(j, "environment"), "environment");
  if (j.contains("microstate_weights")) {
    const json& w = j.at("microstate_weights");
    if (!w.is_array()) bad("microstate_weights must be an array of arrays");
    for (const json& row : w) m.microstate_weights.push_back(complex_list(row, "microstate_weights row"));
  }
  if (j.contains("labels")) {
    for (const json& l : j.at("labels")) {
      if (!l.is_string()) bad("labels must be strings");
      m.outcome_labels.push_back(l.get<std::string>());
    }
  }
  m.validate();
  return m;
}

SearchBudget budget_from_json(const json& j) {
  SearchBudget b;
  if (!j.is_object()) bad("budget must be an object");
  if (j.contains("restarts")) b.restarts = static_cast<int>(positive_integer(j.at("restarts"), "restarts"));
  if (j.contains("max_evaluations"))
    b.max_evaluations = static_cast<int>(positive_integer(j.at("max_evaluations"), "max_evaluations"));
  if (j.contains("seed")) b.seed = positive_integer(j.at("seed"), "budget seed");
  if (j.contains("max_total_dim"))
    b.max_total_dim = static_cast<int>(positive_integer(j.at("max_total_dim"), "max_total_dim"));
  return b;
}

Timing timing_from_json(const json& j, Timing t) {
  if (!j.is_object()) bad("timing must be an object");
  t.t_interaction = number_or(j, "t_interaction", t.t_interaction);
  t.t_first = number_or(j, "t_first", t.t_first);
  t.t_between = number_or(j, "t_between", t.t_between);
  t.t_second = number_or(j, "t_second", t.t_second);
  t.t_final = number_or(j, "t_final", t.t_final);
  t.dt = number_or(j, "dt", t.dt);
  if (j.contains("checkpoints")) {
    t.checkpoints.clear();
    for (const json& c : j.at("checkpoints")) t.checkpoints.push_back(number(c, "checkpoint"));
  }
  if (!(t.dt > 0.0)) bad("dt must be positive");
  for (std::size_t i = 1; i < t.checkpoints.size(); ++i)
    if (!(t.checkpoints[i] > t.checkpoints[i - 1])) bad("checkpoints must be strictly increasing");
  return t;
}

ScenarioKind kind_from_string(const std::string& k) {
  if (k == "state") return ScenarioKind::kState;
  if (k == "single") return ScenarioKind::kSingle;
  if (k == "sequence") return ScenarioKind::kSequence;
  if (k == "evolution") return ScenarioKind::kEvolution;
  bad("unknown kind '" + k + "'");
}

Scenario spin_preset(const json& doc) {
  SpinOptions opt;
  opt.adaptive = doc.value("adaptive", true);
  if (doc.contains("coefficients")) {
    const auto c = complex_list(doc.at("coefficients"), "coefficients");
    if (c.size() != 2) bad("spin_fig1 takes two coefficients");
    opt.c1 = c[0];
    opt.c2 = c[1];
  }
  Scenario s;
  s.kind = ScenarioKind::kSequence;
  s.name = "spin_fig1";
  s.experiment = spin_example(opt);
  return s;
}

}  // namespace

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kState: return "state";
    case ScenarioKind::kSingle: return "single";
    case ScenarioKind::kSequence: return "sequence";
    case ScenarioKind::kEvolution: return "evolution";
  }
  return "unknown";
}

Scenario parse_scenario(const json& doc) {
  try {
    if (!doc.is_object()) bad("document must be a JSON object");
    Scenario s;
    if (doc.contains("preset")) {
      const std::string name = doc.at("preset").get<std::string>();
      if (name != "spin_fig1") bad("unknown preset '" + name + "'");
      s = spin_preset(doc);
    } else {
      s.kind = kind_from_string(field(doc, "kind").get<std::string>());
      switch (s.kind) {
        case ScenarioKind::kState:
          s.state = state_from_json(doc);
          break;
        case ScenarioKind::kSingle:
          s.model = model_from_json(field(doc, "model"));
          s.coefficients = complex_list(field(doc, "coefficients"), "coefficients");
          // surfaces coefficient errors at load time
          (void)initial_state_single(*s.model, s.coefficients);
          break;
        case ScenarioKind::kSequence: {
          AdaptiveExperiment e;
          e.first = model_from_json(field(doc, "first"));
          const json& second = field(doc, "second");
          if (!second.is_array() || second.empty()) bad("second must be a nonempty array of models");
          for (const json& m : second) e.second.push_back(model_from_json(m));
          const json& vars = field(doc, "variables");
          if (!vars.is_array()) bad("variables must be an array of matrices");
          for (const json& v : vars) e.second_variables.push_back(matrix_from_json(v));
          e.a2_initial = vector_from_json(field(doc, "a2_initial"));
          e.e2_initial = vector_from_json(field(doc, "e2_initial"));
          e.coefficients = complex_list(field(doc, "coefficients"), "coefficients");
          e.validate();
          s.experiment = std::move(e);
          break;
        }
        case ScenarioKind::kEvolution: {
          s.state = state_from_json(doc);
          const CMatrix h = matrix_from_json(field(doc, "hamiltonian"));
          if (h.rows() != s.state->dim() || h.cols() != s.state->dim()) bad("hamiltonian shape does not match dims");
          if (!is_hermitian(h, tol::kConstruct)) bad("hamiltonian must be Hermitian");
          s.hamiltonian = Operator(s.state->structure(), h);
          s.paths = doc.value("paths", std::string("preferred"));
          if (s.paths != "preferred" && s.paths != "fixed" && s.paths != "comoving")
            bad("paths must be preferred, fixed or comoving");
          if (s.paths != "preferred") {
            const auto cols = vectors_from_json(field(doc, "basis"), "basis");
            CMatrix b(s.state->dim(), static_cast<Eigen::Index>(cols.size()));
            for (std::size_t i = 0; i < cols.size(); ++i) {
              if (cols[i].size() != s.state->dim()) bad("basis vector has the wrong dimension");
              b.col(static_cast<Eigen::Index>(i)) = cols[i];
            }
            if (b.cols() != b.rows() || !is_unitary(b, tol::kVerify)) bad("basis must be a complete orthonormal set");
            s.basis = b;
          }
          break;
        }
      }
    }
    if (doc.contains("name")) s.name = doc.at("name").get<std::string>();
    if (doc.contains("timing")) s.timing = timing_from_json(doc.at("timing"), s.timing);
    if (doc.contains("n_traj")) s.n_traj = positive_integer(doc.at("n_traj"), "n_traj");
    if (doc.contains("seed")) s.seed = positive_integer(doc.at("seed"), "seed");
    if (doc.contains("budget")) s.budget = budget_from_json(doc.at("budget"));
    return s;
  } catch (const json::exception& e) {
    bad(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidInput) throw;
    // structural or consistency faults in user data are input errors here
    bad(e.what());
  }
}

Scenario parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

Scenario preset_scenario(const std::string& name) {
  if (name != "spin_fig1") bad("unknown preset '" + name + "'");
  return spin_preset(json::object());
}

// --- values ----------------------------------------------------------------------------

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

Complex complex_from_json(const json& j) {
  if (j.is_number()) return {number(j, "amplitude"), 0.0};
  if (j.is_array() && j.size() == 2) return {number(j[0], "real part"), number(j[1], "imaginary part")};
  if (j.is_object() && j.contains("re")) return {number(j.at("re"), "re"), number_or(j, "im", 0.0)};
  bad("complex numbers are a number, [re, im] or {\"re\", \"im\"}");
}

json vector_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
  return out;
}

CVector vector_from_json(const json& j) {
  if (!j.is_array() || j.empty()) bad("vectors must be nonempty arrays");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

CMatrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) bad("matrices must be nonempty arrays of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const CVector first = vector_from_json(j[0]);
  CMatrix m(rows, first.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const CVector row = vector_from_json(j[static_cast<std::size_t>(r)]);
    if (row.size() != first.size()) bad("matrix rows differ in length");
    m.row(r) = row.transpose();
  }
  return m;
}

json decomposition_json(const DecompositionResult& r) {
  const Decomposition& d = r.decomposition;
  json out;
  out["dims"] = d.target().structure().dims();
  out["method"] = to_string(r.method);
  out["status"] = to_string(r.status);
  out["unique"] = r.unique;
  out["entropy"] = r.entropy;
  out["degeneracy_note"] = r.degeneracy_note ? json(*r.degeneracy_note) : json(nullptr);
  if (r.grain) {
    out["grain"] = {{"left", r.grain->left()}, {"right", r.grain->right()}};
  } else {
    out["grain"] = nullptr;
  }
  out["target"] = vector_json(d.target().amplitudes());
  json terms = json::array();
  for (const Term& t : d.terms()) {
    json term;
    term["coefficient"] = complex_json(t.coefficient);
    term["weight"] = std::norm(t.coefficient);
    term["vector"] = vector_json(t.vector.amplitudes());
    if (auto f = factorize_product(t.vector)) {
      json fs = json::array();
      for (const CVector& v : *f) fs.push_back(vector_json(v));
      term["factors"] = std::move(fs);
    } else {
      term["factors"] = nullptr;
    }
    terms.push_back(std::move(term));
  }
  out["terms"] = std::move(terms);
  return out;
}

DecompositionResult decomposition_from_json(const json& j, const HilbertStructure& structure) {
  try {
    if (dims_from_json(field(j, "dims")) != structure.dims()) bad("decomposition dims do not match");
    const StateVector target(structure, vector_from_json(field(j, "target")));
    std::vector<Term> terms;
    for (const json& t : field(j, "terms"))
      terms.push_back(Term{complex_from_json(field(t, "coefficient")),
                           StateVector(structure, vector_from_json(field(t, "vector")))});
    DecompositionResult r{Decomposition(target, std::move(terms)), 0.0, Method::kTheorem4, true, std::nullopt,
                          MinimizationStatus::kResolved, std::nullopt};
    const std::string method = field(j, "method").get<std::string>();
    if (method == "theorem4") {
      r.method = Method::kTheorem4;
    } else if (method == "brute_force") {
      r.method = Method::kBruteForce;
    } else {
      bad("unknown method '" + method + "'");
    }
    const std::string status = field(j, "status").get<std::string>();
    if (status == "resolved") {
      r.status = MinimizationStatus::kResolved;
    } else if (status == "heuristic") {
      r.status = MinimizationStatus::kHeuristic;
    } else if (status == "unresolved") {
      r.status = MinimizationStatus::kUnresolved;
    } else {
      bad("unknown status '" + status + "'");
    }
    r.unique = field(j, "unique").get<bool>();
    r.entropy = number(field(j, "entropy"), "entropy");
    if (j.contains("degeneracy_note") && j.at("degeneracy_note").is_string())
      r.degeneracy_note = j.at("degeneracy_note").get<std::string>();
    if (j.contains("grain") && j.at("grain").is_object())
      r.grain = CoarseGraining(j.at("grain").at("left").get<std::vector<int>>(),
                               j.at("grain").at("right").get<std::vector<int>>(), structure.factor_count());
    return r;
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// --- occupation tables -----------------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_field(const std::string& s, const char* what) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) bad(std::string("bad ") + what + " '" + s + "'");
  return value;
}

std::vector<double> padded_targets(const TimelineCheckpoint& cp, std::size_t d) {
  std::vector<double> p = cp.p;
  p.resize(d, 0.0);
  return p;
}

}  // namespace

std::string write_occupation_csv(const std::vector<OccupationRow>& rows) {
  const std::size_t d = rows.empty() ? 0 : rows.front().p.size();
  std::string out = "time,trajectory_id,path_index";
  for (std::size_t k = 1; k <= d; ++k) out += ",p_" + std::to_string(k);
  out += '\n';
  for (const OccupationRow& r : rows) {
    out += format_double(r.time);
    out += ',';
    out += std::to_string(r.trajectory);
    out += ',';
    out += std::to_string(r.path);
    for (double p : r.p) {
      out += ',';
      out += format_double(p);
    }
    out += '\n';
  }
  return out;
}

std::string occupation_csv(const Timeline& timeline, const EnsembleResult& ens) {
  const std::size_t d = timeline.max_paths();
  std::vector<std::vector<double>> targets;
  for (const auto& cp : timeline.checkpoints) targets.push_back(padded_targets(cp, d));
  std::vector<OccupationRow> rows;
  rows.reserve(ens.n_traj * timeline.checkpoints.size());
  for (std::size_t i = 0; i < ens.n_traj; ++i)
    for (std::size_t c = 0; c < timeline.checkpoints.size(); ++c)
      rows.push_back(OccupationRow{timeline.checkpoints[c].time, i, ens.path_at(i, c) + 1, targets[c]});
  return write_occupation_csv(rows);
}

std::vector<OccupationRow> parse_occupation_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) bad("occupation table is empty");
  const auto header = split(line, ',');
  if (header.size() < 3 || header[0] != "time" || header[1] != "trajectory_id" || header[2] != "path_index")
    bad("occupation header must start with time,trajectory_id,path_index");
  for (std::size_t k = 3; k < header.size(); ++k)
    if (header[k] != "p_" + std::to_string(k - 2)) bad("unexpected column '" + header[k] + "'");
  const std::size_t d = header.size() - 3;
  std::vector<OccupationRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) bad("row has " + std::to_string(f.size()) + " fields");
    OccupationRow r;
    r.time = parse_field<double>(f[0], "time");
    r.trajectory = parse_field<std::uint64_t>(f[1], "trajectory_id");
    r.path = parse_field<int>(f[2], "path_index");
    for (std::size_t k = 0; k < d; ++k) r.p.push_back(parse_field<double>(f[3 + k], "probability"));
    rows.push_back(std::move(r));
  }
  return rows;
}

json occupation_json(const Timeline& timeline, const EnsembleResult& ens) {
  const std::size_t d = timeline.max_paths();
  json cps = json::array();
  for (const auto& cp : timeline.checkpoints)
    cps.push_back({{"time", cp.time}, {"label", cp.label}, {"p", padded_targets(cp, d)}});
  json paths = json::array();
  for (std::size_t i = 0; i < ens.n_traj; ++i) {
    json row = json::array();
    for (std::size_t c = 0; c < timeline.checkpoints.size(); ++c) row.push_back(ens.path_at(i, c) + 1);
    paths.push_back(std::move(row));
  }
  return {{"path_count", d}, {"checkpoints", std::move(cps)}, {"paths", std::move(paths)}};
}

std::vector<OccupationRow> parse_occupation_json(const json& j) {
  try {
    const auto d = field(j, "path_count").get<std::size_t>();
    const json& cps = field(j, "checkpoints");
    std::vector<std::pair<double, std::vector<double>>> targets;
    for (const json& cp : cps) {
      auto p = field(cp, "p").get<std::vector<double>>();
      if (p.size() != d) bad("checkpoint probabilities do not match path_count");
      targets.emplace_back(number(field(cp, "time"), "time"), std::move(p));
    }
    std::vector<OccupationRow> rows;
    std::uint64_t traj = 0;
    for (const json& row : field(j, "paths")) {
      if (row.size() != targets.size()) bad("trajectory row does not match the checkpoints");
      for (std::size_t c = 0; c < targets.size(); ++c)
        rows.push_back(OccupationRow{targets[c].first, traj, row[c].get<int>(), targets[c].second});
      ++traj;
    }
    return rows;
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

}  // namespace modalsim
