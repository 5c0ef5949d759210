// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#include "modalsim/scenarios.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace modalsim {

namespace {

CVector kron_all(std::initializer_list<CVector> parts) {
  CVector out = CVector::Ones(1);
  for (const CVector& p : parts) out = kron(out, p);
  return out;
}

bool orthonormal(const std::vector<CVector>& vs, double tolerance) {
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i; j < vs.size(); ++j) {
      const Complex ip = vs[i].dot(vs[j]);
      if (std::abs(ip - (i == j ? 1.0 : 0.0)) > tolerance) return false;
    }
  return true;
}

void check_coefficients(const std::vector<Complex>& c, int m) {
  require(static_cast<int>(c.size()) == m, ErrorCode::kInvalidInput,
          "coefficients: expected " + std::to_string(m) + " entries, got " + std::to_string(c.size()));
  double n = 0.0;
  for (Complex x : c) n += std::norm(x);
  require(std::abs(n - 1.0) <= tol::kConstruct, ErrorCode::kInvalidInput, "coefficients must have unit norm");
}

CMatrix columns(const std::vector<CVector>& vs) {
  CMatrix m(vs.at(0).size(), static_cast<Eigen::Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = vs[i];
  return m;
}

std::vector<double> born_weights(const CVector& psi, const CMatrix& paths) {
  const CVector a = paths.adjoint() * psi;
  std::vector<double> p(static_cast<std::size_t>(a.size()));
  double total = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) total += p[static_cast<std::size_t>(k)] = std::norm(a(k));
  for (double& x : p) x /= total;
  return p;
}

// sum_mu f_{k,mu} system (x) A_{k,mu} (x) between (x) E_{k,mu} (x) after_e; the
// single-stage layout passes the 1-dimensional vector for the extra blocks
CVector model_image(const MeasurementModel& m, int k, const CVector& system, const CVector& between,
                    const CVector& after_e) {
  CVector out;
  for (int mu = 0; mu < m.microstates(); ++mu) {
    const CVector term = kron_all({system, m.apparatus(k, mu), between, m.environment(k, mu), after_e});
    if (out.size() == 0) out = CVector::Zero(term.size());
    out += m.weight(k, mu) * term;
  }
  return out;
}

const CVector kOne = CVector::Ones(1);

}  // namespace

// --- MeasurementModel -----------------------------------------------------------

Complex MeasurementModel::weight(int k, int mu) const {
  if (microstate_weights.empty()) return 1.0;
  return microstate_weights.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(mu));
}

const CVector& MeasurementModel::apparatus(int k, int mu) const {
  return apparatus_states.at(static_cast<std::size_t>(1 + k * microstates() + mu));
}

const CVector& MeasurementModel::environment(int k, int mu) const {
  return environment_states.at(static_cast<std::size_t>(1 + k * microstates() + mu));
}

int MeasurementModel::system_dim() const {
  return std::accumulate(system_dims.begin(), system_dims.end(), 1, std::multiplies<>());
}

HilbertStructure MeasurementModel::structure() const {
  std::vector<int> dims = system_dims;
  dims.push_back(apparatus_dim());
  dims.push_back(environment_dim());
  return HilbertStructure(dims);
}

void MeasurementModel::validate() const {
  const int m = outcomes();
  require(m >= 1, ErrorCode::kInvalidInput, "measurement model: no outcomes");
  require(!system_dims.empty(), ErrorCode::kInvalidInput, "measurement model: empty system");
  for (int d : system_dims) require(d >= 1, ErrorCode::kInvalidInput, "measurement model: bad system dimension");
  require(static_cast<int>(disturbed_states.size()) == m, ErrorCode::kInvalidInput,
          "measurement model: one disturbed state per outcome required");
  for (const CVector& v : object_eigenvectors)
    require(v.size() == system_dim(), ErrorCode::kInvalidInput, "measurement model: eigenvector dimension mismatch");
  for (const CVector& v : disturbed_states) {
    require(v.size() == system_dim(), ErrorCode::kInvalidInput, "measurement model: disturbed state dimension mismatch");
    require(std::abs(v.norm() - 1.0) <= tol::kConstruct, ErrorCode::kInvalidInput,
            "measurement model: disturbed states must be normalized");
  }
  require(orthonormal(object_eigenvectors, tol::kConstruct), ErrorCode::kInvalidInput,
          "measurement model: object eigenvectors not orthonormal");
  const int mm = microstates();
  if (!microstate_weights.empty()) {
    require(static_cast<int>(microstate_weights.size()) == m, ErrorCode::kInvalidInput,
            "measurement model: one weight row per outcome required");
    for (const auto& row : microstate_weights) {
      require(static_cast<int>(row.size()) == mm && mm >= 1, ErrorCode::kInvalidInput,
              "measurement model: ragged microstate weights");
      double n = 0.0;
      for (Complex f : row) n += std::norm(f);
      require(std::abs(n - 1.0) <= tol::kConstruct, ErrorCode::kInvalidInput,
              "measurement model: microstate weights must have unit norm per outcome");
    }
  }
  const auto expected = static_cast<std::size_t>(1 + m * mm);
  require(apparatus_states.size() == expected && environment_states.size() == expected, ErrorCode::kInvalidInput,
          "measurement model: expected " + std::to_string(expected) + " apparatus and environment states");
  for (const CVector& v : apparatus_states)
    require(v.size() == apparatus_dim(), ErrorCode::kInvalidInput, "measurement model: apparatus dimension mismatch");
  for (const CVector& v : environment_states)
    require(v.size() == environment_dim(), ErrorCode::kInvalidInput, "measurement model: environment dimension mismatch");
  require(orthonormal(apparatus_states, tol::kConstruct), ErrorCode::kInvalidInput,
          "measurement model: apparatus states not orthonormal");
  require(orthonormal(environment_states, tol::kConstruct), ErrorCode::kInvalidInput,
          "measurement model: environment states not orthonormal");
  require(outcome_labels.empty() || static_cast<int>(outcome_labels.size()) == m, ErrorCode::kInvalidInput,
          "measurement model: one label per outcome required");
}

double MeasurementModel::max_disturbed_overlap() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < disturbed_states.size(); ++k)
    for (std::size_t l = k + 1; l < disturbed_states.size(); ++l)
      worst = std::max(worst, std::abs(disturbed_states[k].dot(disturbed_states[l])));
  return worst;
}

// --- unitaries ------------------------------------------------------------------------

CMatrix extend_isometry(const CMatrix& x, const CMatrix& y) {
  require(x.rows() == y.rows() && x.cols() == y.cols(), ErrorCode::kStructural, "extend_isometry: shape mismatch");
  const Eigen::Index d = x.rows();
  const Eigen::Index m = x.cols();
  const CMatrix id = CMatrix::Identity(m, m);
  require((x.adjoint() * x - id).norm() <= tol::kVerify, ErrorCode::kInconsistent,
          "measurement model inconsistency: inputs are not orthonormal");
  require((y.adjoint() * y - id).norm() <= tol::kVerify, ErrorCode::kInconsistent,
          "measurement model inconsistency: images are not orthonormal");
  std::vector<CVector> all;
  for (Eigen::Index j = 0; j < m; ++j) all.push_back(x.col(j));
  for (Eigen::Index j = 0; j < m; ++j) all.push_back(y.col(j));
  const CMatrix q = columns(gram_schmidt_independent(all).basis);
  const CMatrix xs = q.adjoint() * x;
  const CMatrix ys = q.adjoint() * y;
  const CMatrix small = ys * xs.adjoint() + orthonormal_completion(ys) * orthonormal_completion(xs).adjoint();
  CMatrix u = CMatrix::Identity(d, d) - q * q.adjoint() + q * small * q.adjoint();
  return u;
}

Operator build_measurement_unitary(const MeasurementModel& model) {
  model.validate();
  const int m = model.outcomes();
  CMatrix x(model.structure().total_dim(), m);
  CMatrix y(x.rows(), m);
  for (int k = 0; k < m; ++k) {
    x.col(k) = kron_all({model.object_eigenvectors[static_cast<std::size_t>(k)], model.apparatus_states[0],
                         model.environment_states[0]});
    y.col(k) = model_image(model, k, model.disturbed_states[static_cast<std::size_t>(k)], kOne, kOne);
  }
  return Operator(model.structure(), extend_isometry(x, y));
}

StateVector initial_state_single(const MeasurementModel& model, const std::vector<Complex>& c) {
  model.validate();
  check_coefficients(c, model.outcomes());
  CVector sys = CVector::Zero(model.system_dim());
  for (int k = 0; k < model.outcomes(); ++k) sys += c[static_cast<std::size_t>(k)] * model.object_eigenvectors[static_cast<std::size_t>(k)];
  return StateVector(model.structure(), kron_all({sys, model.apparatus_states[0], model.environment_states[0]}));
}

StateVector final_state_single(const MeasurementModel& model, const std::vector<Complex>& c) {
  model.validate();
  check_coefficients(c, model.outcomes());
  CVector out = CVector::Zero(model.structure().total_dim());
  for (int k = 0; k < model.outcomes(); ++k)
    out += c[static_cast<std::size_t>(k)] * model_image(model, k, model.disturbed_states[static_cast<std::size_t>(k)], kOne, kOne);
  return StateVector(model.structure(), out);
}

Decomposition expected_preferred_decomposition_single(const MeasurementModel& model, const std::vector<Complex>& c) {
  const StateVector target = final_state_single(model, c);
  std::vector<Term> terms;
  for (int k = 0; k < model.outcomes(); ++k)
    for (int mu = 0; mu < model.microstates(); ++mu) {
      const Complex coef = c[static_cast<std::size_t>(k)] * model.weight(k, mu);
      if (std::abs(coef) <= tol::kConstruct) continue;
      terms.push_back(Term{coef, StateVector(target.structure(),
                                             kron_all({model.disturbed_states[static_cast<std::size_t>(k)],
                                                       model.apparatus(k, mu), model.environment(k, mu)}))});
    }
  return Decomposition(target, std::move(terms));
}

bool same_term_set(const Decomposition& a, const Decomposition& b, double tolerance) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const Term& ta : a.terms()) {
    const CVector va = ta.coefficient * ta.vector.amplitudes();
    bool found = false;
    for (std::size_t i = 0; i < b.size() && !found; ++i) {
      if (used[i]) continue;
      const Term& tb = b.terms()[i];
      if (tb.vector.dim() != ta.vector.dim()) continue;
      if ((va - tb.coefficient * tb.vector.amplitudes()).norm() <= tolerance) found = used[i] = true;
    }
    if (!found) return false;
  }
  return true;
}

// --- sequences ------------------------------------------------------------------------

HilbertStructure AdaptiveExperiment::structure() const {
  std::vector<int> dims = first.system_dims;
  dims.push_back(first.apparatus_dim());
  dims.push_back(static_cast<int>(a2_initial.size()));
  dims.push_back(first.environment_dim());
  dims.push_back(static_cast<int>(e2_initial.size()));
  return HilbertStructure(dims);
}

int AdaptiveExperiment::factor_a1() const { return static_cast<int>(first.system_dims.size()); }

void AdaptiveExperiment::validate() const {
  first.validate();
  const int m = first.outcomes();
  require(!second.empty(), ErrorCode::kInvalidInput, "experiment: no second measurement");
  require(second.size() == 1 || static_cast<int>(second.size()) == m, ErrorCode::kInvalidInput,
          "experiment: adaptive second stage needs one model per first outcome");
  require(second_variables.size() == second.size(), ErrorCode::kInvalidInput,
          "experiment: one second-stage variable per second model");
  require(std::abs(a2_initial.norm() - 1.0) <= tol::kConstruct && std::abs(e2_initial.norm() - 1.0) <= tol::kConstruct,
          ErrorCode::kInvalidInput, "experiment: initial A2/E2 states must be normalized");
  for (std::size_t i = 0; i < second.size(); ++i) {
    const MeasurementModel& s = second[i];
    s.validate();
    require(s.system_dims == first.system_dims, ErrorCode::kInvalidInput, "experiment: system layout mismatch");
    require(s.apparatus_dim() == a2_initial.size() && s.environment_dim() == e2_initial.size(),
            ErrorCode::kInvalidInput, "experiment: second-stage A2/E2 dimension mismatch");
    require(s.outcomes() == s.system_dim(), ErrorCode::kInvalidInput,
            "experiment: second-stage eigenvectors must span the system");
    const CMatrix& v = second_variables[i];
    require(v.rows() == s.system_dim() && v.cols() == s.system_dim() && is_hermitian(v), ErrorCode::kInvalidInput,
            "experiment: second-stage variable must be Hermitian on the system");
    for (const CVector& e : s.object_eigenvectors) {
      const Complex lambda = e.dot(v * e);
      require((v * e - lambda * e).norm() <= tol::kVerify, ErrorCode::kInvalidInput,
              "experiment: second-stage eigenvectors do not diagonalize the variable");
    }
  }
  check_coefficients(coefficients, m);
}

StateVector initial_state_sequence(const AdaptiveExperiment& exp) {
  exp.validate();
  CVector sys = CVector::Zero(exp.first.system_dim());
  for (int k = 0; k < exp.first.outcomes(); ++k)
    sys += exp.coefficients[static_cast<std::size_t>(k)] * exp.first.object_eigenvectors[static_cast<std::size_t>(k)];
  return StateVector(exp.structure(), kron_all({sys, exp.first.apparatus_states[0], exp.a2_initial,
                                                exp.first.environment_states[0], exp.e2_initial}));
}

namespace {

// first-stage image for outcome k with the system replaced by `sys`
CVector first_image(const AdaptiveExperiment& exp, int k, const CVector& sys) {
  const MeasurementModel& f = exp.first;
  const MeasurementModel& s = exp.second_for(k);
  return model_image(f, k, sys, s.apparatus_states[0], s.environment_states[0]);
}

}  // namespace

Operator first_stage_unitary(const AdaptiveExperiment& exp) {
  exp.validate();
  const MeasurementModel& f = exp.first;
  const int m = f.outcomes();
  const HilbertStructure s = exp.structure();
  CMatrix x(s.total_dim(), m);
  CMatrix y(s.total_dim(), m);
  for (int k = 0; k < m; ++k) {
    x.col(k) = kron_all({f.object_eigenvectors[static_cast<std::size_t>(k)], f.apparatus_states[0], exp.a2_initial,
                         f.environment_states[0], exp.e2_initial});
    y.col(k) = first_image(exp, k, f.disturbed_states[static_cast<std::size_t>(k)]);
  }
  return Operator(s, extend_isometry(x, y));
}

Operator second_stage_unitary(const AdaptiveExperiment& exp) {
  exp.validate();
  std::vector<CVector> xs;
  std::vector<CVector> ys;
  for (const MeasurementModel& m : exp.second)
    for (int j = 0; j < m.outcomes(); ++j) {
      xs.push_back(kron_all({m.object_eigenvectors[static_cast<std::size_t>(j)], m.apparatus_states[0],
                             m.environment_states[0]}));
      ys.push_back(model_image(m, j, m.disturbed_states[static_cast<std::size_t>(j)], kOne, kOne));
    }
  const CMatrix local = extend_isometry(columns(xs), columns(ys));
  const HilbertStructure s = exp.structure();
  std::vector<int> factors(exp.first.system_dims.size());
  std::iota(factors.begin(), factors.end(), 0);
  factors.push_back(exp.factor_a2());
  factors.push_back(exp.factor_e2());
  return Operator(s, embed_operator(local, s, factors));
}

Complex sequence_overlap(const AdaptiveExperiment& exp, int k, int j) {
  const MeasurementModel& s = exp.second_for(k);
  return s.object_eigenvectors.at(static_cast<std::size_t>(j)).dot(exp.first.disturbed_states.at(static_cast<std::size_t>(k)));
}

namespace {

// every term of the state after both measurements, in (k, mu, j, nu) order
std::vector<Term> second_terms(const AdaptiveExperiment& exp) {
  const MeasurementModel& f = exp.first;
  const HilbertStructure s = exp.structure();
  std::vector<Term> out;
  for (int k = 0; k < f.outcomes(); ++k) {
    const MeasurementModel& sm = exp.second_for(k);
    for (int mu = 0; mu < f.microstates(); ++mu)
      for (int j = 0; j < sm.outcomes(); ++j)
        for (int nu = 0; nu < sm.microstates(); ++nu) {
          const Complex coef = exp.coefficients[static_cast<std::size_t>(k)] * f.weight(k, mu) *
                               sequence_overlap(exp, k, j) * sm.weight(j, nu);
          if (std::abs(coef) <= tol::kConstruct) continue;
          out.push_back(Term{coef, StateVector(s, kron_all({sm.disturbed_states[static_cast<std::size_t>(j)],
                                                            f.apparatus(k, mu), sm.apparatus(j, nu),
                                                            f.environment(k, mu), sm.environment(j, nu)}))});
        }
  }
  return out;
}

std::vector<Term> first_terms(const AdaptiveExperiment& exp) {
  const MeasurementModel& f = exp.first;
  const HilbertStructure s = exp.structure();
  std::vector<Term> out;
  for (int k = 0; k < f.outcomes(); ++k) {
    const MeasurementModel& sm = exp.second_for(k);
    for (int mu = 0; mu < f.microstates(); ++mu) {
      const Complex coef = exp.coefficients[static_cast<std::size_t>(k)] * f.weight(k, mu);
      if (std::abs(coef) <= tol::kConstruct) continue;
      out.push_back(Term{coef, StateVector(s, kron_all({f.disturbed_states[static_cast<std::size_t>(k)],
                                                        f.apparatus(k, mu), sm.apparatus_states[0],
                                                        f.environment(k, mu), sm.environment_states[0]}))});
    }
  }
  return out;
}

StateVector sum_of(const HilbertStructure& s, const std::vector<Term>& terms) {
  CVector out = CVector::Zero(s.total_dim());
  for (const Term& t : terms) out += t.coefficient * t.vector.amplitudes();
  return StateVector(s, out);
}

}  // namespace

std::pair<StateVector, StateVector> sequence_final_states(const AdaptiveExperiment& exp) {
  exp.validate();
  return {sum_of(exp.structure(), first_terms(exp)), sum_of(exp.structure(), second_terms(exp))};
}

Decomposition expected_decomposition_first(const AdaptiveExperiment& exp) {
  exp.validate();
  std::vector<Term> terms = first_terms(exp);
  const StateVector target = sum_of(exp.structure(), terms);
  return Decomposition(target, std::move(terms));
}

Decomposition expected_decomposition_second(const AdaptiveExperiment& exp) {
  exp.validate();
  std::vector<Term> terms = second_terms(exp);
  const StateVector target = sum_of(exp.structure(), terms);
  return Decomposition(target, std::move(terms));
}

double generalized_born_probability(const MeasurementModel& first, const std::vector<CVector>& second_eigenvectors,
                                    int k, int j) {
  require(k >= 0 && k < first.outcomes() && j >= 0 && j < static_cast<int>(second_eigenvectors.size()),
          ErrorCode::kInvalidInput, "generalized_born_probability: index out of range");
  return std::norm(first.disturbed_states[static_cast<std::size_t>(k)].dot(second_eigenvectors[static_cast<std::size_t>(j)]));
}

// --- spin example -----------------------------------------------------------------------

CMatrix spin_component(double nx, double ny, double nz) {
  CMatrix m(2, 2);
  m(0, 0) = 0.5 * nz;
  m(1, 1) = -0.5 * nz;
  m(0, 1) = 0.5 * Complex(nx, -ny);
  m(1, 0) = 0.5 * Complex(nx, ny);
  return m;
}

namespace {

CVector unit(int d, int i) {
  CVector v = CVector::Zero(d);
  v(i) = 1.0;
  return v;
}

MeasurementModel spin_model(const CVector& e1, const CVector& e2, const CVector& d1, const CVector& d2, int dim,
                            std::array<int, 3> slots, std::vector<std::string> labels) {
  MeasurementModel m;
  m.system_dims = {2};
  m.object_eigenvectors = {e1, e2};
  m.disturbed_states = {d1, d2};
  for (int s : slots) {
    m.apparatus_states.push_back(unit(dim, s));
    m.environment_states.push_back(unit(dim, s));
  }
  m.outcome_labels = std::move(labels);
  return m;
}

}  // namespace

AdaptiveExperiment spin_example(const SpinOptions& options) {
  const double r = 1.0 / std::sqrt(2.0);
  const CVector pz = unit(2, 0);
  const CVector mz = unit(2, 1);
  CVector px(2);
  px << r, r;
  CVector mx(2);
  mx << r, -r;

  AdaptiveExperiment exp;
  exp.first = spin_model(pz, mz, pz, px, 3, {0, 1, 2}, {"+z", "-z"});
  if (options.adaptive) {
    // A2 slots: 0 initial, 1 and 2 ready for S.z / S.x, then two outcomes each
    exp.second = {spin_model(pz, mz, pz, mz, 7, {1, 3, 4}, {"+z", "-z"}),
                  spin_model(px, mx, px, mx, 7, {2, 5, 6}, {"+x", "-x"})};
    exp.second_variables = {spin_component(0, 0, 1), spin_component(1, 0, 0)};
    exp.a2_initial = unit(7, 0);
    exp.e2_initial = unit(7, 0);
  } else {
    exp.second = {spin_model(px, mx, px, mx, 3, {0, 1, 2}, {"+x", "-x"})};
    exp.second_variables = {spin_component(1, 0, 0)};
    exp.a2_initial = unit(3, 0);
    exp.e2_initial = unit(3, 0);
  }
  exp.coefficients = {options.c1, options.c2};
  exp.validate();
  return exp;
}

// --- interaction runs ------------------------------------------------------------------

InteractionRun build_interaction_timeline(const StateVector& psi0, std::vector<Interaction> interactions,
                                          double t_final, double dt, std::vector<double> checkpoints,
                                          const SearchBudget& budget) {
  require(dt > 0.0 && t_final >= 0.0, ErrorCode::kInvalidInput, "interaction run: need dt > 0 and t_final >= 0");
  auto grid = [&](double t, const std::string& what) {
    const double steps = t / dt;
    require(t >= 0.0 && std::abs(steps - std::round(steps)) <= 1e-6, ErrorCode::kInvalidInput,
            what + " " + std::to_string(t) + " is not on the dt grid");
    return static_cast<std::size_t>(std::llround(steps));
  };
  const std::size_t n_steps = grid(t_final, "t_final");
  std::stable_sort(interactions.begin(), interactions.end(),
                   [](const Interaction& a, const Interaction& b) { return a.time < b.time; });
  std::vector<std::size_t> at;
  for (const Interaction& it : interactions) {
    require(it.unitary.structure() == psi0.structure(), ErrorCode::kStructural, "interaction run: structure mismatch");
    at.push_back(grid(it.time, "interaction time"));
    require(at.back() <= n_steps, ErrorCode::kInvalidInput, "interaction after t_final");
  }
  std::vector<std::size_t> cps;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (i > 0)
      require(checkpoints[i] > checkpoints[i - 1], ErrorCode::kInvalidInput, "checkpoints must be strictly increasing");
    cps.push_back(grid(checkpoints[i], "checkpoint"));
    require(cps.back() <= n_steps, ErrorCode::kInvalidInput, "checkpoint beyond t_final");
  }

  const HilbertStructure& s = psi0.structure();
  InteractionRun out{Timeline{s, {}, {}, {}, "static paths between instantaneous interactions", false, 1.0, 0.0}, {}};
  Timeline& tl = out.timeline;
  auto paths_of = [&](const StateVector& psi) {
    const DecompositionResult r = preferred_decomposition(psi, s, budget);
    tl.heuristic = tl.heuristic || r.status != MinimizationStatus::kResolved;
    CMatrix b(psi.dim(), static_cast<Eigen::Index>(r.decomposition.size()));
    for (std::size_t k = 0; k < r.decomposition.size(); ++k)
      b.col(static_cast<Eigen::Index>(k)) = r.decomposition.terms()[k].vector.amplitudes();
    return b;
  };

  StateVector psi = psi0;
  CMatrix paths = paths_of(psi);
  tl.p0 = born_weights(psi.amplitudes(), paths);
  std::size_t next_it = 0;
  std::size_t next_cp = 0;
  for (std::size_t step = 0; step <= n_steps; ++step) {
    const double t = static_cast<double>(step) * dt;
    while (next_it < interactions.size() && at[next_it] == step) {
      const Operator& u = interactions[next_it].unitary;
      const StateVector after_state(s, u.entries() * psi.amplitudes());
      const CMatrix after = paths_of(after_state);
      InteractionKernel k = interaction_kernel(psi.amplitudes(), paths, u.entries(), after);
      out.kernel_methods.push_back(k.method);
      tl.steps.push_back(TimelineStep{t, 0.0, RMatrix(), std::move(k.kernel), true});
      psi = after_state;
      paths = after;
      ++next_it;
    }
    while (next_cp < cps.size() && cps[next_cp] == step) {
      tl.checkpoints.push_back(TimelineCheckpoint{t, tl.steps.size(), born_weights(psi.amplitudes(), paths), paths, {}});
      ++next_cp;
    }
    if (step < n_steps)
      tl.steps.push_back(TimelineStep{t + dt, dt, RMatrix::Zero(paths.cols(), paths.cols()), RMatrix(), false});
  }
  return out;
}

int pointer_outcome(const StateVector& property_state, int factor, const MeasurementModel& model) {
  const HilbertStructure& s = property_state.structure();
  std::vector<int> rest;
  for (int f = 0; f < s.factor_count(); ++f)
    if (f != factor) rest.push_back(f);
  const CoarseGraining grain({factor}, rest, s.factor_count());
  const Projector reduced =
      subsystem_preferred_projector(Projector::ray(property_state.amplitudes()), s, grain, Block::kLeft);
  const PropertyAscription a(reduced, HilbertStructure::single(s.dim(factor)));
  for (int k = 0; k < model.outcomes(); ++k)
    for (int mu = 0; mu < model.microstates(); ++mu) {
      const ValueReport r = projector_status(Projector::ray(model.apparatus(k, mu)), a);
      if (r.determinate && *r.value == 1.0) return k;
    }
  return -1;
}

namespace {

std::vector<std::vector<int>> read_pointers(const Timeline& tl, int factor,
                                            const std::function<const MeasurementModel&(std::size_t, int)>& model_for,
                                            const std::vector<std::vector<int>>* condition) {
  std::vector<std::vector<int>> out;
  for (std::size_t c = 0; c < tl.checkpoints.size(); ++c) {
    const TimelineCheckpoint& cp = tl.checkpoints[c];
    std::vector<int> row;
    for (Eigen::Index p = 0; p < cp.paths.cols(); ++p) {
      const int cond = condition != nullptr ? (*condition)[c][static_cast<std::size_t>(p)] : -1;
      row.push_back(pointer_outcome(StateVector(tl.structure, cp.paths.col(p)), factor, model_for(c, cond)));
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

SingleRun build_single_run(const MeasurementModel& model, const std::vector<Complex>& c, double t_interaction,
                           double t_final, double dt, const SearchBudget& budget) {
  require(t_interaction <= t_final, ErrorCode::kInvalidInput, "single run: interaction after t_final");
  const StateVector psi0 = initial_state_single(model, c);
  std::vector<Interaction> its{Interaction{t_interaction, build_measurement_unitary(model), "measurement"}};
  SingleRun out{build_interaction_timeline(psi0, std::move(its), t_final, dt, {0.0, t_final}, budget), {}};
  out.run.timeline.checkpoints[0].label = "initial";
  out.run.timeline.checkpoints[1].label = "final";
  out.outcome = read_pointers(
      out.run.timeline, static_cast<int>(model.system_dims.size()),
      [&](std::size_t, int) -> const MeasurementModel& { return model; }, nullptr);
  return out;
}

SequenceRun build_sequence_run(const AdaptiveExperiment& exp, const SequenceRunConfig& config,
                               const SearchBudget& budget) {
  exp.validate();
  require(0.0 <= config.t_first && config.t_first <= config.t_between && config.t_between < config.t_second &&
              config.t_second <= config.t_final,
          ErrorCode::kInvalidInput, "sequence run: need t_first <= t_between < t_second <= t_final");
  std::vector<Interaction> its{Interaction{config.t_first, first_stage_unitary(exp), "first measurement"},
                               Interaction{config.t_second, second_stage_unitary(exp), "second measurement"}};
  const bool distinct_start = config.t_first > 0.0;
  std::vector<double> cps;
  if (distinct_start) cps.push_back(0.0);
  cps.push_back(config.t_between);
  cps.push_back(config.t_final);
  SequenceRun out{build_interaction_timeline(initial_state_sequence(exp), std::move(its), config.t_final, config.dt,
                                             cps, budget),
                  0, 0, 0, {}, {}};
  out.cp_before = 0;
  out.cp_between = distinct_start ? 1 : 0;
  out.cp_after = out.cp_between + 1;
  Timeline& tl = out.run.timeline;
  if (distinct_start) tl.checkpoints[out.cp_before].label = "initial";
  tl.checkpoints[out.cp_between].label = "between";
  tl.checkpoints[out.cp_after].label = "final";
  out.first_outcome = read_pointers(
      tl, exp.factor_a1(), [&](std::size_t, int) -> const MeasurementModel& { return exp.first; }, nullptr);
  out.second_outcome = read_pointers(
      tl, exp.factor_a2(),
      [&](std::size_t, int k) -> const MeasurementModel& { return exp.second_for(std::max(k, 0)); },
      &out.first_outcome);
  return out;
}

// --- statistics ---------------------------------------------------------------------------

namespace {

double z_score(std::uint64_t count, std::uint64_t n, double p) {
  if (n == 0) return 0.0;
  const double mean = static_cast<double>(n) * p;
  const double diff = std::abs(static_cast<double>(count) - mean);
  const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  if (sd <= 0.0) return diff <= 0.5 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / sd;
}

}  // namespace

double OutcomeStatistics::max_first_z() const {
  std::uint64_t n = unread;
  for (std::uint64_t c : first_counts) n += c;
  double worst = 0.0;
  for (std::size_t k = 0; k < first_counts.size(); ++k) worst = std::max(worst, z_score(first_counts[k], n, first_targets[k]));
  return worst;
}

double OutcomeStatistics::max_conditional_z() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < joint_counts.size(); ++k) {
    std::uint64_t n = 0;
    for (std::uint64_t c : joint_counts[k]) n += c;
    for (std::size_t j = 0; j < joint_counts[k].size(); ++j)
      worst = std::max(worst, z_score(joint_counts[k][j], n, conditional_targets[k][j]));
  }
  return worst;
}

OutcomeStatistics outcome_statistics(const AdaptiveExperiment& exp, const SequenceRun& run, const EnsembleResult& ens) {
  const int m = exp.first.outcomes();
  OutcomeStatistics st;
  for (int k = 0; k < m; ++k) {
    st.first_targets.push_back(std::norm(exp.coefficients[static_cast<std::size_t>(k)]));
    std::vector<double> row;
    for (int j = 0; j < exp.second_for(k).outcomes(); ++j) row.push_back(std::norm(sequence_overlap(exp, k, j)));
    st.conditional_targets.push_back(row);
    st.joint_counts.emplace_back(row.size(), 0);
  }
  st.first_counts.assign(static_cast<std::size_t>(m), 0);
  for (std::size_t i = 0; i < ens.n_traj; ++i) {
    const int pb = ens.path_at(i, run.cp_between);
    const int k = run.first_outcome[run.cp_between][static_cast<std::size_t>(pb)];
    if (k < 0) {
      ++st.unread;
      continue;
    }
    ++st.first_counts[static_cast<std::size_t>(k)];
    const int pa = ens.path_at(i, run.cp_after);
    const int k2 = run.first_outcome[run.cp_after][static_cast<std::size_t>(pa)];
    const int j = run.second_outcome[run.cp_after][static_cast<std::size_t>(pa)];
    if (k2 >= 0 && j >= 0) ++st.joint_counts[static_cast<std::size_t>(k2)][static_cast<std::size_t>(j)];
  }
  return st;
}

bool FaithfulnessReport::all_faithful() const {
  for (const FaithfulnessBranch& b : branches)
    if (b.predictable && b.faithful != b.trajectories) return false;
  return !unsatisfiable;
}

FaithfulnessReport check_faithfulness(const AdaptiveExperiment& exp, const SequenceRun& run, const EnsembleResult& ens) {
  require(run.cp_between < ens.n_checkpoints() && run.cp_between < run.run.timeline.checkpoints.size(),
          ErrorCode::kInvalidInput, "check_faithfulness: missing checkpoint between the measurements");
  const TimelineCheckpoint& cp = run.run.timeline.checkpoints[run.cp_between];
  require(cp.label == "between", ErrorCode::kInvalidInput, "check_faithfulness: checkpoint is not between the measurements");
  const HilbertStructure s = exp.structure();
  const HilbertStructure system(exp.first.system_dims);
  std::vector<int> sys_factors(exp.first.system_dims.size());
  std::iota(sys_factors.begin(), sys_factors.end(), 0);

  FaithfulnessReport rep;
  const int m = exp.first.outcomes();
  std::vector<std::vector<bool>> faithful_path(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    FaithfulnessBranch b;
    b.outcome = k;
    const CVector& phi = exp.first.disturbed_states[static_cast<std::size_t>(k)];
    const CMatrix& v = exp.variable_for(k);
    const Complex lambda = phi.dot(v * phi);
    b.predictable = (v * phi - lambda * phi).norm() <= tol::kVerify;
    b.required_value = lambda.real();
    b.eigenvector_entangled = !factorize_product(StateVector(system, phi)).has_value();
    if (b.predictable && b.eigenvector_entangled) rep.unsatisfiable = true;
    const CMatrix v_full = embed_operator(v, s, sys_factors);
    for (Eigen::Index p = 0; p < cp.paths.cols(); ++p) {
      bool ok = false;
      if (b.predictable && run.first_outcome[run.cp_between][static_cast<std::size_t>(p)] == k) {
        const ValueReport r = variable_status(v_full, PropertyAscription(Projector::ray(cp.paths.col(p)), s));
        ok = r.determinate && std::abs(*r.value - b.required_value) <= tol::kVerify;
      }
      faithful_path[static_cast<std::size_t>(k)].push_back(ok);
    }
    rep.branches.push_back(b);
  }
  for (std::size_t i = 0; i < ens.n_traj; ++i) {
    const int p = ens.path_at(i, run.cp_between);
    const int k = run.first_outcome[run.cp_between][static_cast<std::size_t>(p)];
    if (k < 0) continue;
    FaithfulnessBranch& b = rep.branches[static_cast<std::size_t>(k)];
    ++b.trajectories;
    if (faithful_path[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)]) ++b.faithful;
  }
  for (FaithfulnessBranch& b : rep.branches)
    b.fraction = b.trajectories == 0 ? 0.0 : static_cast<double>(b.faithful) / static_cast<double>(b.trajectories);
  return rep;
}

}  // namespace modalsim
