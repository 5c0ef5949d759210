// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Schrodinger evolution, preferred paths, Born-rule path probabilities,
// probability currents, jump rates and Monte Carlo jump trajectories.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "modalsim/decomp.hpp"
#include "modalsim/linalg.hpp"
#include "modalsim/random.hpp"

namespace modalsim {

/// Time-indexed orthonormal paths phi_k(t) (matrix columns) together with
/// the Hermitian generator H~(t) with d phi_k / dt = -i H~ phi_k.
class PathFamily {
 public:
  using MatrixFn = std::function<CMatrix(double)>;

  PathFamily(HilbertStructure structure, MatrixFn paths, MatrixFn generator);
  /// Fixed basis; H~ = 0.
  static PathFamily fixed(const HilbertStructure& structure, const CMatrix& basis);
  /// Basis carried along by H: phi_k(t) = exp(-iHt) phi_k(0); H~ = H.
  static PathFamily comoving(const HilbertStructure& structure, const CMatrix& basis, const CMatrix& h);

  const HilbertStructure& structure() const noexcept { return structure_; }
  CMatrix paths(double t) const;
  CMatrix generator(double t) const { return generator_(t); }

 private:
  HilbertStructure structure_;
  MatrixFn paths_;
  MatrixFn generator_;
};

/// One classical fourth-order step of d psi/dt = -i H psi, renormalized.
/// `drift` receives | ||psi'|| - 1 | before renormalization.
StateVector evolve_state(const StateVector& psi, const Operator& h, double dt, double* drift = nullptr);

/// exp(-iHt) by eigendecomposition.
CMatrix propagator(const CMatrix& h, double t);

/// p_k = |<phi_k(t)|psi>|^2. Fails when the paths miss more than 1e-6 of
/// the norm; smaller deficits are renormalized away.
ProbabilityDistribution path_probabilities(const StateVector& psi, const PathFamily& family, double t);

/// dp_k/dt = 2 Im[<psi|phi_k><phi_k|H - H~|psi>].
RVector theoretical_dpdt(const StateVector& psi, const PathFamily& family, const Operator& h, double t);

struct RateMatrix {
  RMatrix currents;  // J(k, j): net flow from path j to path k
  RMatrix rates;     // T(k, j): jump rate from path j to path k; empty until filled
  ProbabilityDistribution p;
};

/// J_kj = 2 Im[<psi|phi_k><phi_k|H - H~|phi_j><phi_j|psi>], computed for
/// k < j and mirrored so antisymmetry is exact.
RateMatrix probability_currents(const StateVector& psi, const PathFamily& family, const Operator& h, double t);
/// Same, from explicit path vectors and H - H~.
RateMatrix probability_currents(const CVector& psi, const CMatrix& paths, const CMatrix& h_minus_generator);

/// Returns (T_kj, T_jk) for one pair k < j from (J_kj, p_j, p_k).
using RateRule = std::function<std::pair<double, double>(double current, double p_from, double p_to)>;

/// T_kj = max(0, J_kj / p_j).
RateRule minimal_rate_rule();
/// Rule from a user choice of T_kj >= max(0, J_kj/p_j); T_jk follows from
/// T_jk = (T_kj p_j - J_kj) / p_k.
RateRule rate_rule_from(std::function<double(double current, double p_from, double p_to)> forward);

/// Fills `rates`. Pairs touching a path with p below 1e-24 get zero rates;
/// a current above 1e-10 on such a pair is an inconsistency error. Negative
/// rates from a custom rule are rejected.
RateMatrix transition_rates(const RateMatrix& rm, const RateRule& rule = minimal_rate_rule());

struct TrajectoryState {
  int path = 0;  // zero-based path index
  double time = 0.0;
};

/// One categorical draw: jump j -> k with probability T_kj dt. Throws
/// StepSizeError when sum_k T_kj dt >= 0.1 for the occupied path.
TrajectoryState step_trajectory(const TrajectoryState& traj, const RateMatrix& rm, double dt, Rng& rng);
/// The same draw for a given uniform variate u.
int sample_jump(int path, const RMatrix& rates, double dt, double u);

/// Maximum-weight assignment: result[i] is the column of `next` matched to
/// column i of `prev`, maximizing sum |<prev_i|next_result[i]>|^2.
std::vector<int> match_paths(const CMatrix& prev, const CMatrix& next);

/// Row-stochastic transition kernel K(j, k) for an instantaneous unitary
/// jump from paths `before` to paths `after`.
struct InteractionKernel {
  RMatrix kernel;
  std::string method;  // "overlap", "proportional_fitting" or "independent"
};
InteractionKernel interaction_kernel(const CVector& psi_before, const CMatrix& before, const CMatrix& u,
                                     const CMatrix& after);

// ---------------------------------------------------------------------------
// Timelines and ensembles

struct TimelineStep {
  double time_end = 0.0;
  double dt = 0.0;             // 0 for instantaneous steps
  RMatrix rates;               // continuous: T(k, j)
  RMatrix kernel;              // instantaneous: K(j, k), rows old paths
  bool instantaneous = false;
};

struct TimelineCheckpoint {
  double time = 0.0;
  std::size_t steps_done = 0;  // checkpoint sits after this many steps
  std::vector<double> p;       // Born targets
  CMatrix paths;               // path vectors at the checkpoint, columns
  std::string label;
};

struct Timeline {
  HilbertStructure structure;
  std::vector<double> p0;
  std::vector<TimelineStep> steps;
  std::vector<TimelineCheckpoint> checkpoints;
  std::string generator_note;     // how H~ was obtained
  bool heuristic = false;         // some step relied on a heuristic decomposition
  double min_path_overlap = 1.0;  // worst |<phi_k(t)|phi_k(t+dt)>|^2 over matched steps
  double max_norm_drift = 0.0;
  std::size_t max_paths() const;
};

/// Continuous run along a given path family. Checkpoints must lie on the
/// dt grid and inside [0, t_final].
Timeline build_timeline(const StateVector& psi0, const Operator& h, const PathFamily& family, double t_final,
                        double dt, const std::vector<double>& checkpoints, const RateRule& rule = minimal_rate_rule());

/// Continuous run along entropy-minimizing paths, recomputed every step,
/// label-matched by maximal overlap, with H~ from finite differences.
Timeline build_preferred_timeline(const StateVector& psi0, const Operator& h, double t_final, double dt,
                                  const std::vector<double>& checkpoints, const SearchBudget& budget = {});

struct EnsembleOptions {
  std::size_t n_traj = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct EnsembleResult {
  std::size_t n_traj = 0;
  std::vector<std::vector<std::uint64_t>> counts;  // [checkpoint][path]
  std::vector<std::int32_t> paths;                 // [trajectory * n_checkpoints + checkpoint]
  std::uint64_t jumps = 0;                         // path changes during continuous steps

  std::size_t n_checkpoints() const { return counts.size(); }
  int path_at(std::size_t traj, std::size_t checkpoint) const {
    return paths[traj * counts.size() + checkpoint];
  }
};

/// Samples the initial path from p0, then one categorical draw per step.
/// Trajectory i uses the stream (seed, i); results do not depend on
/// `threads`.
EnsembleResult run_ensemble(const Timeline& timeline, const EnsembleOptions& options);
/// build_timeline followed by run_ensemble.
EnsembleResult run_ensemble(const StateVector& psi0, const Operator& h, const PathFamily& family, double t_final,
                            double dt, const std::vector<double>& checkpoints, const EnsembleOptions& options);

/// Worker count from MODALSIM_THREADS (falls back to `fallback`).
int threads_from_env(int fallback = 1);

}  // namespace modalsim
