// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "modalsim/scenarios.hpp"
#include "oracles.hpp"

using namespace modalsim;

namespace {
const double kR = 1.0 / std::sqrt(2.0);

CVector unit(int d, int i) {
  CVector v = CVector::Zero(d);
  v(i) = 1.0;
  return v;
}

CVector vec(std::initializer_list<Complex> xs) {
  CVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (Complex x : xs) v(i++) = x;
  return v;
}

CVector kron3(const CVector& a, const CVector& b, const CVector& c) { return oracle::kron2(oracle::kron2(a, b), c); }

MeasurementModel qubit_model(const CVector& d1, const CVector& d2) {
  MeasurementModel m;
  m.object_eigenvectors = {unit(2, 0), unit(2, 1)};
  m.disturbed_states = {d1, d2};
  m.apparatus_states = {unit(3, 0), unit(3, 1), unit(3, 2)};
  m.environment_states = {unit(3, 0), unit(3, 1), unit(3, 2)};
  return m;
}

MeasurementModel microstate_model(std::vector<std::vector<Complex>> f) {
  MeasurementModel m;
  m.object_eigenvectors = {unit(2, 0), unit(2, 1)};
  m.disturbed_states = {unit(2, 0), vec({kR, kR})};
  for (int i = 0; i < 5; ++i) {
    m.apparatus_states.push_back(unit(5, i));
    m.environment_states.push_back(unit(5, i));
  }
  m.microstate_weights = std::move(f);
  return m;
}

bool unitary_oracle(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).norm() < 1e-9;
}

EnsembleResult ensemble(const Timeline& tl, std::size_t n, std::uint64_t seed, int threads = 1) {
  EnsembleOptions opt;
  opt.n_traj = n;
  opt.seed = seed;
  opt.threads = threads;
  return run_ensemble(tl, opt);
}
}  // namespace

TEST_CASE("measurement unitary examples") {
  const MeasurementModel plain = qubit_model(unit(2, 0), unit(2, 1));
  const Operator u = build_measurement_unitary(plain);
  CHECK(unitary_oracle(u.entries()));
  const CVector in = kron3(unit(2, 0), unit(3, 0), unit(3, 0));
  CHECK((u.entries() * in - kron3(unit(2, 0), unit(3, 1), unit(3, 1))).norm() < 1e-10);

  const AdaptiveExperiment spin = spin_example();
  const Operator us = build_measurement_unitary(spin.first);
  const CVector minus_z = kron3(unit(2, 1), unit(3, 0), unit(3, 0));
  CHECK((us.entries() * minus_z - kron3(vec({kR, kR}), unit(3, 2), unit(3, 2))).norm() < 1e-10);

  const MeasurementModel micro = microstate_model({{kR, kR}, {kR, kR}});
  const Operator um = build_measurement_unitary(micro);
  CHECK(unitary_oracle(um.entries()));
  const CVector image = um.entries() * kron3(unit(2, 0), unit(5, 0), unit(5, 0));
  const CVector expect = kR * kron3(unit(2, 0), unit(5, 1), unit(5, 1)) + kR * kron3(unit(2, 0), unit(5, 2), unit(5, 2));
  CHECK((image - expect).norm() < 1e-10);
}

TEST_CASE("final state equals the unitary applied to the initial state") {
  Rng rng(51, 0);
  for (int trial = 0; trial < 20; ++trial) {
    MeasurementModel m;
    const int d = 2 + trial % 2;
    const CMatrix basis = random_unitary(rng, d);
    for (int k = 0; k < d; ++k) {
      m.object_eigenvectors.push_back(basis.col(k));
      m.disturbed_states.push_back(random_state(rng, d));
    }
    m.system_dims = {d};
    const int mm = 1 + trial % 2;
    const CMatrix a = random_unitary(rng, 1 + d * mm);
    const CMatrix e = random_unitary(rng, 1 + d * mm);
    for (int i = 0; i <= d * mm; ++i) {
      m.apparatus_states.push_back(a.col(i));
      m.environment_states.push_back(e.col(i));
    }
    if (mm > 1)
      for (int k = 0; k < d; ++k) {
        const CVector f = random_state(rng, mm);
        m.microstate_weights.push_back({f(0), f(1)});
      }
    const CVector cv = random_state(rng, d);
    std::vector<Complex> c(cv.data(), cv.data() + cv.size());
    const Operator u = build_measurement_unitary(m);
    CHECK(unitary_oracle(u.entries()));
    const CVector expect = u.entries() * initial_state_single(m, c).amplitudes();
    CHECK((final_state_single(m, c).amplitudes() - expect).norm() < 1e-8);
  }
}

TEST_CASE("model validation") {
  MeasurementModel bad = qubit_model(unit(2, 0), unit(2, 1));
  bad.apparatus_states[2] = unit(3, 1);
  CHECK_THROWS_AS(bad.validate(), Error);
  MeasurementModel unnormalized = qubit_model(unit(2, 0), vec({1, 1}));
  CHECK_THROWS_AS(unnormalized.validate(), Error);
  MeasurementModel weights = microstate_model({{0.6, 0.6}, {kR, kR}});
  CHECK_THROWS_AS(weights.validate(), Error);
  CMatrix x = CMatrix::Identity(4, 2);
  CMatrix y = CMatrix::Zero(4, 2);
  y(0, 0) = y(0, 1) = 1.0;
  try {
    extend_isometry(x, y);
    FAIL("expected an inconsistency");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInconsistent);
  }
}

TEST_CASE("closed-form single-measurement decompositions are preferred") {
  const AdaptiveExperiment spin = spin_example();
  const std::vector<Complex> c{0.6, 0.8};
  const MeasurementModel& m = spin.first;
  const StateVector psi = final_state_single(m, c);
  const DecompositionResult r = preferred_decomposition(psi, m.structure());
  CHECK(r.method == Method::kTheorem4);
  CHECK(same_term_set(r.decomposition, expected_preferred_decomposition_single(m, c)));
  CHECK(r.decomposition.weights()[0] == doctest::Approx(0.64));

  const DecompositionResult one = preferred_decomposition(final_state_single(m, {1.0, 0.0}), m.structure());
  CHECK(one.decomposition.size() == 1);

  for (const auto& f : std::vector<std::vector<std::vector<Complex>>>{
           {{0.6, 0.8}, {std::sqrt(0.3), Complex(0, std::sqrt(0.7))}}, {{kR, kR}, {kR, kR}}}) {
    const MeasurementModel micro = microstate_model(f);
    const DecompositionResult rm = preferred_decomposition(final_state_single(micro, c), micro.structure());
    const Decomposition expect = expected_preferred_decomposition_single(micro, c);
    CHECK(rm.method == Method::kTheorem4);
    CHECK(expect.size() == 4);
    CHECK(same_term_set(rm.decomposition, expect));
    // pointer outcome probability sums over microstates
    const auto w = expect.weights().weights();
    CHECK(w[0] + w[1] == doctest::Approx(0.36));
  }
}

TEST_CASE("sequence states and decompositions") {
  for (bool adaptive : {true, false}) {
    CAPTURE(adaptive);
    const AdaptiveExperiment exp = spin_example({0.6, 0.8, adaptive});
    const auto [psi1, psi2] = sequence_final_states(exp);
    const CVector after1 = first_stage_unitary(exp).entries() * initial_state_sequence(exp).amplitudes();
    CHECK((after1 - psi1.amplitudes()).norm() < 1e-8);
    const CVector after2 = second_stage_unitary(exp).entries() * after1;
    CHECK((after2 - psi2.amplitudes()).norm() < 1e-8);
    const DecompositionResult r1 = preferred_decomposition(psi1, exp.structure());
    const DecompositionResult r2 = preferred_decomposition(psi2, exp.structure());
    CHECK(r1.method == Method::kTheorem4);
    CHECK(r2.method == Method::kTheorem4);
    CHECK(same_term_set(r1.decomposition, expected_decomposition_first(exp)));
    CHECK(same_term_set(r2.decomposition, expected_decomposition_second(exp)));
    CHECK(expected_decomposition_second(exp).size() == (adaptive ? 2u : 3u));
  }
}

TEST_CASE("generalized Born probabilities for the spin example") {
  const AdaptiveExperiment exp = spin_example();
  const std::vector<CVector> z{unit(2, 0), unit(2, 1)};
  const std::vector<CVector> x{vec({kR, kR}), vec({kR, -kR})};
  CHECK(generalized_born_probability(exp.first, z, 0, 0) == doctest::Approx(1.0));
  CHECK(generalized_born_probability(exp.first, x, 1, 0) == doctest::Approx(1.0));
  CHECK(generalized_born_probability(exp.first, z, 1, 0) == doctest::Approx(0.5));
  CHECK(generalized_born_probability(exp.first, z, 1, 1) == doctest::Approx(0.5));
  for (int k = 0; k < 2; ++k)
    CHECK(generalized_born_probability(exp.first, x, k, 0) + generalized_born_probability(exp.first, x, k, 1) ==
          doctest::Approx(1.0));
  CHECK(std::norm(sequence_overlap(exp, 1, 0)) == doctest::Approx(1.0));
}

TEST_CASE("spin example subsystem projectors after the first stage") {
  const AdaptiveExperiment exp = spin_example();
  const Decomposition d = expected_decomposition_first(exp);
  const HilbertStructure s = exp.structure();
  const CoarseGraining g({0}, {1, 2, 3, 4}, 5);
  std::vector<PropertyAscription> asc;
  for (const Term& t : d.terms())
    asc.emplace_back(subsystem_preferred_projector(Projector::ray(t.vector.amplitudes()), s, g, Block::kLeft),
                     HilbertStructure::single(2));
  const Projector pz = Projector::ray(unit(2, 0));
  const Projector px = Projector::ray(vec({kR, kR}));
  const bool order = projector_equal(asc[0].preferred(), pz);
  CHECK(projector_equal(asc[order ? 0 : 1].preferred(), pz));
  CHECK(projector_equal(asc[order ? 1 : 0].preferred(), px));
  CHECK(std::abs(unit(2, 0).dot(vec({kR, kR}))) == doctest::Approx(kR));
  CHECK(mutually_exclusive(asc[0], asc[1]));
  CHECK_FALSE(projector_orthogonal(asc[0].preferred(), asc[1].preferred()));
}

TEST_CASE("adaptive spin run: Born statistics, repeatability and faithfulness") {
  const AdaptiveExperiment exp = spin_example();
  const SequenceRun run = build_sequence_run(exp);
  CHECK_FALSE(run.run.timeline.heuristic);
  for (const std::string& m : run.run.kernel_methods) CHECK(m == "overlap");
  const EnsembleResult ens = ensemble(run.run.timeline, 10000, 5);
  const OutcomeStatistics st = outcome_statistics(exp, run, ens);
  CHECK(st.unread == 0);
  CHECK(st.max_first_z() < 4.0);
  CHECK(st.joint_counts[0][1] == 0);
  CHECK(st.joint_counts[1][1] == 0);
  CHECK(st.joint_counts[0][0] == st.first_counts[0]);
  CHECK(st.joint_counts[1][0] == st.first_counts[1]);
  const FaithfulnessReport rep = check_faithfulness(exp, run, ens);
  CHECK_FALSE(rep.unsatisfiable);
  CHECK(rep.all_faithful());
  for (const FaithfulnessBranch& b : rep.branches) {
    CHECK(b.predictable);
    CHECK(b.fraction == 1.0);
    CHECK(b.required_value == doctest::Approx(0.5));
  }
  CHECK(ens.jumps == 0);
}

TEST_CASE("fixed second measurement: conditional statistics") {
  const AdaptiveExperiment exp = spin_example({0.6, 0.8, false});
  const SequenceRun run = build_sequence_run(exp);
  const EnsembleResult ens = ensemble(run.run.timeline, 10000, 6);
  const OutcomeStatistics st = outcome_statistics(exp, run, ens);
  CHECK(st.conditional_targets[0][0] == doctest::Approx(0.5));
  CHECK(st.conditional_targets[1][0] == doctest::Approx(1.0));
  CHECK(st.max_first_z() < 4.0);
  CHECK(st.max_conditional_z() < 4.0);
  const FaithfulnessReport rep = check_faithfulness(exp, run, ens);
  CHECK_FALSE(rep.branches[0].predictable);
  CHECK(rep.branches[1].predictable);
  CHECK(rep.branches[1].fraction == 1.0);
}

TEST_CASE("pointer statistics for both measurement models") {
  const std::vector<Complex> c{0.6, 0.8};
  const std::vector<MeasurementModel> models{spin_example().first, microstate_model({{kR, kR}, {0.6, 0.8}})};
  for (const MeasurementModel& m : models) {
    const SingleRun run = build_single_run(m, c, 1.0, 2.0, 0.5);
    const EnsembleResult ens = ensemble(run.run.timeline, 20000, 8);
    std::vector<std::uint64_t> counts(2, 0);
    for (std::size_t i = 0; i < ens.n_traj; ++i) {
      const int k = run.outcome[1][static_cast<std::size_t>(ens.path_at(i, 1))];
      REQUIRE(k >= 0);
      ++counts[static_cast<std::size_t>(k)];
    }
    CHECK(oracle::sigmas(counts[0], ens.n_traj, 0.36) < 4.0);
    CHECK(run.outcome[0][0] == -1);  // ready apparatus indicates nothing
  }
}

TEST_CASE("entangled eigenvector makes faithfulness unsatisfiable") {
  AdaptiveExperiment exp;
  const CVector bell = kR * (unit(4, 0) + unit(4, 3));
  MeasurementModel f;
  f.system_dims = {2, 2};
  f.object_eigenvectors = {unit(4, 0), unit(4, 3)};
  f.disturbed_states = {unit(4, 0), bell};
  f.apparatus_states = {unit(3, 0), unit(3, 1), unit(3, 2)};
  f.environment_states = f.apparatus_states;
  exp.first = f;
  MeasurementModel s;
  s.system_dims = {2, 2};
  const CVector b2 = kR * (unit(4, 0) - unit(4, 3));
  const CVector b3 = kR * (unit(4, 1) + unit(4, 2));
  const CVector b4 = kR * (unit(4, 1) - unit(4, 2));
  s.object_eigenvectors = {bell, b2, b3, b4};
  s.disturbed_states = s.object_eigenvectors;
  for (int i = 0; i < 5; ++i) s.apparatus_states.push_back(unit(5, i));
  s.environment_states = s.apparatus_states;
  exp.second = {s};
  CMatrix v = CMatrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) v += (i + 1.0) * s.object_eigenvectors[static_cast<std::size_t>(i)] *
                                  s.object_eigenvectors[static_cast<std::size_t>(i)].adjoint();
  exp.second_variables = {v};
  exp.a2_initial = unit(5, 0);
  exp.e2_initial = unit(5, 0);
  exp.coefficients = {0.6, 0.8};
  SearchBudget budget;
  budget.restarts = 2;
  budget.max_evaluations = 200;
  const SequenceRun run = build_sequence_run(exp, {}, budget);
  const EnsembleResult ens = ensemble(run.run.timeline, 2000, 9);
  const FaithfulnessReport rep = check_faithfulness(exp, run, ens);
  CHECK(rep.unsatisfiable);
  CHECK(rep.branches[1].predictable);
  CHECK(rep.branches[1].eigenvector_entangled);
  CHECK_FALSE(rep.all_faithful());
}
