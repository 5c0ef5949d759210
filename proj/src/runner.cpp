// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "modalsim/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "modalsim/errors.hpp"

namespace modalsim {

using nlohmann::json;

namespace {

struct Settings {
  std::uint64_t seed;
  std::size_t n_traj;
  double dt;
  int threads;
};

Settings settings_for(const Scenario& s, const RunOverrides& o) {
  Settings out{o.seed.value_or(s.seed), o.n_traj.value_or(s.n_traj), o.dt.value_or(s.timing.dt), std::max(1, o.threads)};
  require(out.seed > 0, ErrorCode::kInvalidInput, "seed must be positive");
  require(out.n_traj > 0, ErrorCode::kInvalidInput, "n_traj must be positive");
  require(std::isfinite(out.dt) && out.dt > 0.0, ErrorCode::kInvalidInput, "dt must be positive");
  return out;
}

SearchBudget budget_for(const Scenario& s, const Settings& st) {
  SearchBudget b = s.budget;
  b.threads = st.threads;
  return b;
}

/// null when the target is certain and missed.
json z_json(std::uint64_t count, std::uint64_t n, double p) {
  if (n == 0) return 0.0;
  const double nd = static_cast<double>(n);
  const double diff = std::abs(static_cast<double>(count) - nd * p);
  const double sd = std::sqrt(nd * p * (1.0 - p));
  if (sd <= 0.0) return diff <= 0.5 ? json(0.0) : json(nullptr);
  return diff / sd;
}

json table_json(const std::vector<std::string>& labels, const std::vector<double>& targets,
                const std::vector<std::uint64_t>& counts) {
  std::uint64_t n = 0;
  for (std::uint64_t c : counts) n += c;
  json freq = json::array(), z = json::array();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    freq.push_back(n == 0 ? 0.0 : static_cast<double>(counts[k]) / static_cast<double>(n));
    z.push_back(z_json(counts[k], n, targets[k]));
  }
  return {{"labels", labels}, {"targets", targets}, {"counts", counts}, {"frequencies", freq}, {"z_scores", z}};
}

std::vector<std::string> labels_of(const MeasurementModel& m) {
  std::vector<std::string> out = m.outcome_labels;
  for (int k = static_cast<int>(out.size()); k < m.outcomes(); ++k) out.push_back(std::to_string(k + 1));
  return out;
}

json timeline_json(const Timeline& tl, const std::vector<std::string>& kernel_methods) {
  return {{"generator_note", tl.generator_note}, {"heuristic", tl.heuristic},
          {"min_path_overlap", tl.min_path_overlap}, {"max_norm_drift", tl.max_norm_drift},
          {"max_paths", tl.max_paths()}, {"kernel_methods", kernel_methods}};
}

json checkpoints_json(const Timeline& tl, const EnsembleResult& ens) {
  json out = json::array();
  for (std::size_t c = 0; c < tl.checkpoints.size(); ++c) {
    const TimelineCheckpoint& cp = tl.checkpoints[c];
    std::vector<double> targets = cp.p;
    const std::vector<std::uint64_t>& counts = ens.counts[c];
    targets.resize(counts.size(), 0.0);
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < counts.size(); ++k) labels.push_back(std::to_string(k + 1));
    json entry = table_json(labels, targets, counts);
    entry.erase("labels");
    entry["time"] = cp.time;
    entry["label"] = cp.label;
    out.push_back(std::move(entry));
  }
  return out;
}

EnsembleResult ensemble(const Timeline& tl, const Settings& st) {
  EnsembleOptions opt;
  opt.n_traj = st.n_traj;
  opt.seed = st.seed;
  opt.threads = st.threads;
  return run_ensemble(tl, opt);
}

SequenceRunConfig sequence_config(const Scenario& s, double dt) {
  return {s.timing.t_first, s.timing.t_between, s.timing.t_second, s.timing.t_final, dt};
}

std::vector<double> checkpoint_times(const Scenario& s) {
  if (!s.timing.checkpoints.empty()) return s.timing.checkpoints;
  return {0.0, s.timing.t_final};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Artifact occupation_artifact(const Timeline& tl, const EnsembleResult& ens, OutputFormat f) {
  if (f == OutputFormat::kJson) return {"occupation.json", dump(occupation_json(tl, ens))};
  return {"occupation.csv", occupation_csv(tl, ens)};
}

json header_json(const Scenario& s, const Settings& st) {
  return {{"scenario", {{"kind", to_string(s.kind)}, {"name", s.name}}},
          {"seed", st.seed},
          {"n_traj", st.n_traj},
          {"dt", st.dt}};
}

}  // namespace

const Artifact* CommandResult::find(const std::string& name) const {
  for (const Artifact& a : artifacts)
    if (a.name == name) return &a;
  return nullptr;
}

CommandResult error_result(const std::exception& e) {
  CommandResult r;
  r.message = e.what();
  r.status = kExitFailed;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->code()) {
      case ErrorCode::kUnresolved: r.status = kExitUnresolved; break;
      case ErrorCode::kStepSize: r.status = kExitStepSize; break;
      default: r.status = kExitInvalid; break;
    }
  }
  return r;
}

CommandResult cmd_decompose(const Scenario& s, const RunOverrides& overrides) {
  try {
    const Settings st = settings_for(s, overrides);
    std::vector<std::pair<std::string, StateVector>> states;
    switch (s.kind) {
      case ScenarioKind::kState:
      case ScenarioKind::kEvolution:
        states.emplace_back("initial", *s.state);
        break;
      case ScenarioKind::kSingle:
        states.emplace_back("initial", initial_state_single(*s.model, s.coefficients));
        states.emplace_back("final", final_state_single(*s.model, s.coefficients));
        break;
      case ScenarioKind::kSequence: {
        const auto [psi1, psi2] = sequence_final_states(*s.experiment);
        states.emplace_back("initial", initial_state_sequence(*s.experiment));
        states.emplace_back("after_first", psi1);
        states.emplace_back("after_second", psi2);
        break;
      }
    }
    CommandResult r;
    json results = json::array();
    bool unresolved = false;
    for (const auto& [label, psi] : states) {
      const DecompositionResult d = preferred_decomposition(psi, psi.structure(), budget_for(s, st));
      unresolved = unresolved || d.status == MinimizationStatus::kUnresolved;
      json entry = decomposition_json(d);
      entry["label"] = label;
      results.push_back(std::move(entry));
    }
    json doc{{"scenario", {{"kind", to_string(s.kind)}, {"name", s.name}}}, {"results", std::move(results)}};
    r.artifacts.push_back({"decomposition.json", dump(doc)});
    if (unresolved) {
      r.status = kExitUnresolved;
      r.message = "entropy minimization unresolved; the report carries the best candidate";
    }
    return r;
  } catch (const std::exception& e) {
    return error_result(e);
  }
}

CommandResult cmd_run(const Scenario& s, const RunOverrides& overrides) {
  try {
    const Settings st = settings_for(s, overrides);
    const SearchBudget budget = budget_for(s, st);
    json summary = header_json(s, st);
    CommandResult r;
    auto finish = [&](const Timeline& tl, const std::vector<std::string>& kernels, const EnsembleResult& ens) {
      summary["timeline"] = timeline_json(tl, kernels);
      summary["jumps"] = ens.jumps;
      summary["checkpoints"] = checkpoints_json(tl, ens);
      r.artifacts.push_back({"summary.json", dump(summary)});
      r.artifacts.push_back(occupation_artifact(tl, ens, overrides.format));
    };
    switch (s.kind) {
      case ScenarioKind::kState: {
        const InteractionRun run =
            build_interaction_timeline(*s.state, {}, s.timing.t_final, st.dt, checkpoint_times(s), budget);
        finish(run.timeline, run.kernel_methods, ensemble(run.timeline, st));
        break;
      }
      case ScenarioKind::kEvolution: {
        const std::vector<double> cps = checkpoint_times(s);
        const Timeline tl =
            s.paths == "preferred"
                ? build_preferred_timeline(*s.state, *s.hamiltonian, s.timing.t_final, st.dt, cps, budget)
                : build_timeline(*s.state, *s.hamiltonian,
                                 s.paths == "fixed"
                                     ? PathFamily::fixed(s.state->structure(), *s.basis)
                                     : PathFamily::comoving(s.state->structure(), *s.basis, s.hamiltonian->entries()),
                                 s.timing.t_final, st.dt, cps);
        finish(tl, {}, ensemble(tl, st));
        break;
      }
      case ScenarioKind::kSingle: {
        const SingleRun run =
            build_single_run(*s.model, s.coefficients, s.timing.t_interaction, s.timing.t_final, st.dt, budget);
        const EnsembleResult ens = ensemble(run.run.timeline, st);
        std::vector<std::uint64_t> counts(static_cast<std::size_t>(s.model->outcomes()), 0);
        std::uint64_t unread = 0;
        const std::size_t last = run.run.timeline.checkpoints.size() - 1;
        for (std::size_t i = 0; i < ens.n_traj; ++i) {
          const int k = run.outcome[last][static_cast<std::size_t>(ens.path_at(i, last))];
          if (k < 0) {
            ++unread;
          } else {
            ++counts[static_cast<std::size_t>(k)];
          }
        }
        std::vector<double> targets;
        for (Complex c : s.coefficients) targets.push_back(std::norm(c));
        json pointer = table_json(labels_of(*s.model), targets, counts);
        pointer["unread"] = unread;
        summary["pointer"] = std::move(pointer);
        finish(run.run.timeline, run.run.kernel_methods, ens);
        break;
      }
      case ScenarioKind::kSequence: {
        const AdaptiveExperiment& exp = *s.experiment;
        const SequenceRun run = build_sequence_run(exp, sequence_config(s, st.dt), budget);
        const EnsembleResult ens = ensemble(run.run.timeline, st);
        const OutcomeStatistics os = outcome_statistics(exp, run, ens);
        json joint_targets = json::array(), conditional_freq = json::array(), conditional_z = json::array(),
             second_labels = json::array();
        for (std::size_t k = 0; k < os.joint_counts.size(); ++k) {
          std::uint64_t n = 0;
          for (std::uint64_t c : os.joint_counts[k]) n += c;
          json jt = json::array(), cf = json::array(), cz = json::array();
          for (std::size_t j = 0; j < os.joint_counts[k].size(); ++j) {
            jt.push_back(os.first_targets[k] * os.conditional_targets[k][j]);
            cf.push_back(n == 0 ? 0.0 : static_cast<double>(os.joint_counts[k][j]) / static_cast<double>(n));
            cz.push_back(z_json(os.joint_counts[k][j], n, os.conditional_targets[k][j]));
          }
          joint_targets.push_back(std::move(jt));
          conditional_freq.push_back(std::move(cf));
          conditional_z.push_back(std::move(cz));
          second_labels.push_back(labels_of(exp.second_for(static_cast<int>(k))));
        }
        const double zf = os.max_first_z(), zc = os.max_conditional_z();
        summary["sequence"] = {
            {"adaptive", exp.adaptive()},
            {"stage1", table_json(labels_of(exp.first), os.first_targets, os.first_counts)},
            {"second_labels", std::move(second_labels)},
            {"joint_counts", os.joint_counts},
            {"joint_targets", std::move(joint_targets)},
            {"conditional_targets", os.conditional_targets},
            {"conditional_frequencies", std::move(conditional_freq)},
            {"conditional_z_scores", std::move(conditional_z)},
            {"unread", os.unread},
            {"max_stage1_z", std::isfinite(zf) ? json(zf) : json(nullptr)},
            {"max_conditional_z", std::isfinite(zc) ? json(zc) : json(nullptr)}};
        finish(run.run.timeline, run.run.kernel_methods, ens);
        break;
      }
    }
    return r;
  } catch (const std::exception& e) {
    return error_result(e);
  }
}

CommandResult cmd_verify(const VerifyOptions& options) {
  try {
    const VerifyReport rep = run_verification(options);
    CommandResult r;
    r.artifacts.push_back({"verify.json", dump(verify_json(rep, options))});
    if (!rep.all_passed()) {
      r.status = kExitFailed;
      for (const PropertyResult& p : rep.properties)
        if (!p.passed()) r.message += (r.message.empty() ? "failed: " : ", ") + p.name;
    }
    return r;
  } catch (const std::exception& e) {
    return error_result(e);
  }
}

CommandResult cmd_faithfulness(const Scenario& s, const RunOverrides& overrides) {
  try {
    require(s.kind == ScenarioKind::kSequence, ErrorCode::kInvalidInput,
            "faithfulness needs a sequence scenario or the spin_fig1 preset");
    const Settings st = settings_for(s, overrides);
    const AdaptiveExperiment& exp = *s.experiment;
    const SequenceRun run = build_sequence_run(exp, sequence_config(s, st.dt), budget_for(s, st));
    const EnsembleResult ens = ensemble(run.run.timeline, st);
    const FaithfulnessReport rep = check_faithfulness(exp, run, ens);
    const std::vector<std::string> labels = labels_of(exp.first);
    json branches = json::array();
    for (const FaithfulnessBranch& b : rep.branches)
      branches.push_back({{"outcome", b.outcome + 1},
                          {"label", labels[static_cast<std::size_t>(b.outcome)]},
                          {"predictable", b.predictable},
                          {"required_value", b.required_value},
                          {"eigenvector_entangled", b.eigenvector_entangled},
                          {"trajectories", b.trajectories},
                          {"faithful", b.faithful},
                          {"fraction", b.fraction}});
    json doc = header_json(s, st);
    doc["checkpoint"] = {{"time", run.run.timeline.checkpoints[run.cp_between].time}, {"label", "between"}};
    doc["branches"] = std::move(branches);
    doc["unsatisfiable"] = rep.unsatisfiable;
    doc["all_faithful"] = rep.all_faithful();
    CommandResult r;
    r.artifacts.push_back({"faithfulness.json", dump(doc)});
    if (!rep.all_faithful()) {
      r.status = kExitFailed;
      r.message = rep.unsatisfiable ? "faithfulness cannot be satisfied: a required eigenvector is entangled"
                                    : "faithfulness criterion violated";
    }
    return r;
  } catch (const std::exception& e) {
    return error_result(e);
  }
}

void write_artifacts(const CommandResult& result, const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  require(!ec, ErrorCode::kInvalidInput, "cannot create output directory '" + directory + "': " + ec.message());
  for (const Artifact& a : result.artifacts) {
    const fs::path path = fs::path(directory) / a.name;
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::kInvalidInput, "cannot write '" + path.string() + "'");
    out.write(a.content.data(), static_cast<std::streamsize>(a.content.size()));
  }
}

}  // namespace modalsim
