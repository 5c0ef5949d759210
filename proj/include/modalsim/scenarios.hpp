// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Measurement models as unitaries on a distinguished factorization, their
// preferred decompositions, and jump ensembles through instantaneous
// interactions.
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "modalsim/ascription.hpp"
#include "modalsim/decomp.hpp"
#include "modalsim/dynamics.hpp"

namespace modalsim {

/// phi_k (x) A_0 (x) E_0  ->  phi~_k (x) sum_mu f_{k,mu} A_{k,mu} (x) E_{k,mu}.
///
/// apparatus_states[0] is the ready state A_0 and apparatus_states[1 + k*M + mu]
/// is A_{k,mu}; environment_states follow the same layout. With no
/// microstate weights M = 1 and f_{k,1} = 1.
struct MeasurementModel {
  std::vector<int> system_dims{2};
  std::vector<CVector> object_eigenvectors;
  std::vector<CVector> disturbed_states;
  std::vector<CVector> apparatus_states;
  std::vector<CVector> environment_states;
  std::vector<std::vector<Complex>> microstate_weights;  // [k][mu]; empty for the simple model
  std::vector<std::string> outcome_labels;

  int outcomes() const { return static_cast<int>(object_eigenvectors.size()); }
  int microstates() const { return microstate_weights.empty() ? 1 : static_cast<int>(microstate_weights[0].size()); }
  Complex weight(int k, int mu) const;
  const CVector& apparatus(int k, int mu) const;
  const CVector& environment(int k, int mu) const;
  int system_dim() const;
  int apparatus_dim() const { return static_cast<int>(apparatus_states.at(0).size()); }
  int environment_dim() const { return static_cast<int>(environment_states.at(0).size()); }
  /// Structure {system factors..., A, E}.
  HilbertStructure structure() const;
  /// Throws kInvalidInput on any violated invariant.
  void validate() const;
  /// Largest |<phi~_k|phi~_l>| over k != l.
  double max_disturbed_overlap() const;
};

/// Unitary extending the map x_k -> y_k (columns), identity on the
/// orthogonal complement of span{x, y}. Both column sets must be
/// orthonormal within 1e-8.
CMatrix extend_isometry(const CMatrix& x, const CMatrix& y);

Operator build_measurement_unitary(const MeasurementModel& model);

/// c must have unit norm within 1e-10.
StateVector initial_state_single(const MeasurementModel& model, const std::vector<Complex>& c);
StateVector final_state_single(const MeasurementModel& model, const std::vector<Complex>& c);
/// Closed-form {(c_k f_{k,mu}, phi~_k (x) A_{k,mu} (x) E_{k,mu})}.
Decomposition expected_preferred_decomposition_single(const MeasurementModel& model, const std::vector<Complex>& c);

/// Same set of weights and rays up to order and phase, within `tolerance`.
bool same_term_set(const Decomposition& a, const Decomposition& b, double tolerance = 1e-8);

/// Two measurements on the layout {system factors..., A1, A2, E1, E2}.
/// `second` holds one model (fixed second measurement) or one per first
/// outcome (adaptive). The second models live on the A2 and E2 spaces;
/// their ready states are the A2/E2 states the first stage writes.
struct AdaptiveExperiment {
  MeasurementModel first;
  std::vector<MeasurementModel> second;
  std::vector<CMatrix> second_variables;  // V_(k) on the system; one per entry of `second`
  CVector a2_initial;                     // A2 state before the first measurement
  CVector e2_initial;
  std::vector<Complex> coefficients;

  bool adaptive() const { return second.size() > 1; }
  const MeasurementModel& second_for(int k) const {
    return second.size() == 1 ? second[0] : second.at(static_cast<std::size_t>(k));
  }
  const CMatrix& variable_for(int k) const {
    return second_variables.size() == 1 ? second_variables[0] : second_variables.at(static_cast<std::size_t>(k));
  }
  HilbertStructure structure() const;
  int factor_a1() const;
  int factor_a2() const { return factor_a1() + 1; }
  int factor_e1() const { return factor_a1() + 2; }
  int factor_e2() const { return factor_a1() + 3; }
  void validate() const;
};

StateVector initial_state_sequence(const AdaptiveExperiment& exp);
Operator first_stage_unitary(const AdaptiveExperiment& exp);
Operator second_stage_unitary(const AdaptiveExperiment& exp);
/// Closed forms for the states after each measurement.
std::pair<StateVector, StateVector> sequence_final_states(const AdaptiveExperiment& exp);
Decomposition expected_decomposition_first(const AdaptiveExperiment& exp);
Decomposition expected_decomposition_second(const AdaptiveExperiment& exp);
/// d_j^k = <phi_(k),j | phi~_k>.
Complex sequence_overlap(const AdaptiveExperiment& exp, int k, int j);

/// |<phi~_k|phi'_j>|^2.
double generalized_born_probability(const MeasurementModel& first, const std::vector<CVector>& second_eigenvectors,
                                    int k, int j);

struct SpinOptions {
  Complex c1 = 0.6;
  Complex c2 = 0.8;
  bool adaptive = true;
};
/// S.z measured first; outcome -z prepares |+x>. The second stage measures
/// S.z after +z and S.x after -z (adaptive), or S.x in both cases.
AdaptiveExperiment spin_example(const SpinOptions& options = {});

/// Spin-1/2 component along the unit axis (nx, ny, nz), in units of hbar.
CMatrix spin_component(double nx, double ny, double nz);

// ---------------------------------------------------------------------------
// Runs through instantaneous interactions

struct Interaction {
  double time = 0.0;
  Operator unitary;
  std::string label;
};

struct InteractionRun {
  Timeline timeline;
  std::vector<std::string> kernel_methods;  // one per interaction
};

/// Paths are the supports of the preferred decompositions; static (H = 0,
/// H~ = 0) between interactions. A checkpoint at an interaction time is
/// taken after it.
InteractionRun build_interaction_timeline(const StateVector& psi0, std::vector<Interaction> interactions,
                                          double t_final, double dt, std::vector<double> checkpoints,
                                          const SearchBudget& budget = {});

/// Outcome k indicated by the apparatus factor for a property state: the
/// reduced preferred projector on `factor` is determinate-1 for P_{A_k,mu}
/// for some mu. Returns -1 when no pointer projector receives value 1.
int pointer_outcome(const StateVector& property_state, int factor, const MeasurementModel& model);

/// One measurement at `t_interaction`; checkpoints at 0 and t_final.
struct SingleRun {
  InteractionRun run;
  std::vector<std::vector<int>> outcome;  // [checkpoint][path]
};
SingleRun build_single_run(const MeasurementModel& model, const std::vector<Complex>& c, double t_interaction,
                           double t_final, double dt, const SearchBudget& budget = {});

struct SequenceRunConfig {
  double t_first = 1.0;
  double t_between = 2.0;  // checkpoint between the measurements
  double t_second = 3.0;
  double t_final = 4.0;
  double dt = 0.5;
};

struct SequenceRun {
  InteractionRun run;
  std::size_t cp_before = 0;    // checkpoint indices
  std::size_t cp_between = 0;
  std::size_t cp_after = 0;
  // pointer outcomes per path at each checkpoint; -1 = not indicating
  std::vector<std::vector<int>> first_outcome;   // [checkpoint][path]
  std::vector<std::vector<int>> second_outcome;  // [checkpoint][path]
};

SequenceRun build_sequence_run(const AdaptiveExperiment& exp, const SequenceRunConfig& config = {},
                               const SearchBudget& budget = {});

struct OutcomeStatistics {
  std::vector<double> first_targets;            // |c_k|^2
  std::vector<std::uint64_t> first_counts;      // stage-1 pointer at the between checkpoint
  std::vector<std::vector<double>> conditional_targets;  // [k][j] |d_j^k|^2
  std::vector<std::vector<std::uint64_t>> joint_counts;  // [k][j] at the final checkpoint
  std::uint64_t unread = 0;                     // trajectories with no pointer reading
  /// Largest |count - n p| / sqrt(n p (1-p)) over the stage-1 table.
  double max_first_z() const;
  /// Same for the conditional tables, binomial in the stage-1 count.
  double max_conditional_z() const;
};

OutcomeStatistics outcome_statistics(const AdaptiveExperiment& exp, const SequenceRun& run, const EnsembleResult& ens);

struct FaithfulnessBranch {
  int outcome = 0;
  bool predictable = false;    // phi~_k is an eigenvector of V_(k)
  double required_value = 0.0; // v_(k),1
  std::uint64_t trajectories = 0;
  std::uint64_t faithful = 0;
  double fraction = 0.0;
  bool eigenvector_entangled = false;
};

struct FaithfulnessReport {
  std::vector<FaithfulnessBranch> branches;
  bool unsatisfiable = false;  // some required eigenvector is not a product state
  bool all_faithful() const;
};

/// Conditions each trajectory on the stage-1 pointer at the between
/// checkpoint and applies variable_status(V_(k) (x) I) to its property
/// state there.
FaithfulnessReport check_faithfulness(const AdaptiveExperiment& exp, const SequenceRun& run,
                                      const EnsembleResult& ens);

}  // namespace modalsim
