// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#include "modalsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace modalsim {

namespace {
constexpr double kUnoccupied = 1e-24;
constexpr double kCurrentTolerance = 1e-10;
constexpr double kStepGuard = 0.1;
}  // namespace

// --- path families -------------------------------------------------------------

PathFamily::PathFamily(HilbertStructure structure, MatrixFn paths, MatrixFn generator)
    : structure_(std::move(structure)), paths_(std::move(paths)), generator_(std::move(generator)) {}

PathFamily PathFamily::fixed(const HilbertStructure& structure, const CMatrix& basis) {
  require(basis.rows() == structure.total_dim(), ErrorCode::kStructural, "path family: basis dimension mismatch");
  const Eigen::Index d = basis.rows();
  return PathFamily(
      structure, [basis](double) { return basis; }, [d](double) { return CMatrix(CMatrix::Zero(d, d)); });
}

PathFamily PathFamily::comoving(const HilbertStructure& structure, const CMatrix& basis, const CMatrix& h) {
  require(basis.rows() == structure.total_dim() && h.rows() == basis.rows(), ErrorCode::kStructural,
          "path family: dimension mismatch");
  require(is_hermitian(h), ErrorCode::kStructural, "path family: generator not Hermitian");
  const Eigh e = eigh(h);
  return PathFamily(
      structure,
      [basis, e](double t) {
        CVector ph(e.values.size());
        for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::polar(1.0, -e.values(i) * t);
        return CMatrix(e.vectors * ph.asDiagonal() * e.vectors.adjoint() * basis);
      },
      [h](double) { return h; });
}

CMatrix PathFamily::paths(double t) const {
  CMatrix p = paths_(t);
  require(p.rows() == structure_.total_dim(), ErrorCode::kStructural, "path family: path dimension mismatch");
  require((p.adjoint() * p - CMatrix::Identity(p.cols(), p.cols())).norm() <= tol::kVerify, ErrorCode::kInconsistent,
          "path family: paths not orthonormal at t = " + std::to_string(t));
  return p;
}

// --- evolution ---------------------------------------------------------------------

StateVector evolve_state(const StateVector& psi, const Operator& h, double dt, double* drift) {
  require(h.structure() == psi.structure(), ErrorCode::kStructural, "evolve_state: structure mismatch");
  require(h.is_hermitian(), ErrorCode::kStructural, "evolve_state: Hamiltonian not Hermitian");
  require(dt > 0.0, ErrorCode::kInvalidInput, "evolve_state: dt must be positive");
  const CMatrix mih = Complex(0.0, -1.0) * h.entries();
  const CVector& y = psi.amplitudes();
  const CVector k1 = mih * y;
  const CVector k2 = mih * (y + 0.5 * dt * k1);
  const CVector k3 = mih * (y + 0.5 * dt * k2);
  const CVector k4 = mih * (y + dt * k3);
  CVector next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  const double n = next.norm();
  if (drift != nullptr) *drift = std::abs(n - y.norm());
  return StateVector(psi.structure(), next * (y.norm() / n));
}

CMatrix propagator(const CMatrix& h, double t) {
  const Eigh e = eigh(h);
  CVector ph(e.values.size());
  for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::polar(1.0, -e.values(i) * t);
  return e.vectors * ph.asDiagonal() * e.vectors.adjoint();
}

// --- Born probabilities and currents -------------------------------------------

namespace {

std::vector<double> born(const CVector& psi, const CMatrix& paths) {
  const CVector a = paths.adjoint() * psi;
  std::vector<double> p(static_cast<std::size_t>(a.size()));
  double total = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    p[static_cast<std::size_t>(k)] = std::norm(a(k));
    total += p[static_cast<std::size_t>(k)];
  }
  require(std::abs(total - psi.squaredNorm()) <= 1e-6, ErrorCode::kInconsistent,
          "path probabilities: paths miss " + std::to_string(psi.squaredNorm() - total) + " of the norm");
  for (double& x : p) x /= total;
  return p;
}

}  // namespace

ProbabilityDistribution path_probabilities(const StateVector& psi, const PathFamily& family, double t) {
  return ProbabilityDistribution(born(psi.amplitudes(), family.paths(t)));
}

RVector theoretical_dpdt(const StateVector& psi, const PathFamily& family, const Operator& h, double t) {
  const CMatrix paths = family.paths(t);
  const CMatrix k = h.entries() - family.generator(t);
  const CVector& y = psi.amplitudes();
  const CVector ky = k * y;
  RVector out(paths.cols());
  for (Eigen::Index i = 0; i < paths.cols(); ++i) {
    const Complex left = y.dot(paths.col(i));    // <psi|phi_k>
    const Complex right = paths.col(i).dot(ky);  // <phi_k|K|psi>
    out(i) = 2.0 * (left * right).imag();
  }
  return out;
}

RateMatrix probability_currents(const CVector& psi, const CMatrix& paths, const CMatrix& h_minus_generator) {
  const Eigen::Index d = paths.cols();
  const CVector a = paths.adjoint() * psi;                          // <phi_k|psi>
  const CMatrix m = paths.adjoint() * h_minus_generator * paths;    // <phi_k|K|phi_j>
  RMatrix j = RMatrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = k + 1; l < d; ++l) {
      const double v = 2.0 * (std::conj(a(k)) * m(k, l) * a(l)).imag();
      j(k, l) = v;
      j(l, k) = -v;
    }
  return RateMatrix{std::move(j), RMatrix(), ProbabilityDistribution(born(psi, paths))};
}

RateMatrix probability_currents(const StateVector& psi, const PathFamily& family, const Operator& h, double t) {
  require(h.structure() == psi.structure(), ErrorCode::kStructural, "probability_currents: structure mismatch");
  return probability_currents(psi.amplitudes(), family.paths(t), h.entries() - family.generator(t));
}

RateRule minimal_rate_rule() {
  return [](double current, double p_from, double p_to) {
    return std::pair<double, double>{std::max(0.0, current / p_from), std::max(0.0, -current / p_to)};
  };
}

RateRule rate_rule_from(std::function<double(double, double, double)> forward) {
  return [forward = std::move(forward)](double current, double p_from, double p_to) {
    const double t_forward = forward(current, p_from, p_to);
    return std::pair<double, double>{t_forward, (t_forward * p_from - current) / p_to};
  };
}

RateMatrix transition_rates(const RateMatrix& rm, const RateRule& rule) {
  const Eigen::Index d = rm.currents.rows();
  require(rm.currents.cols() == d && static_cast<Eigen::Index>(rm.p.size()) == d, ErrorCode::kStructural,
          "transition_rates: size mismatch");
  RateMatrix out = rm;
  out.rates = RMatrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index j = k + 1; j < d; ++j) {
      const double current = rm.currents(k, j);  // flow from j to k
      const double pj = rm.p[static_cast<std::size_t>(j)];
      const double pk = rm.p[static_cast<std::size_t>(k)];
      if (pj <= kUnoccupied || pk <= kUnoccupied) {
        require(std::abs(current) <= kCurrentTolerance, ErrorCode::kInconsistent,
                "transition_rates: current " + std::to_string(current) + " touches an unoccupied path");
        continue;
      }
      const auto [t_kj, t_jk] = rule(current, pj, pk);
      require(std::isfinite(t_kj) && std::isfinite(t_jk) && t_kj >= 0.0 && t_jk >= -1e-15, ErrorCode::kInconsistent,
              "transition_rates: rule produced a negative or non-finite rate");
      out.rates(k, j) = t_kj;
      out.rates(j, k) = std::max(0.0, t_jk);
    }
  return out;
}

// --- trajectories ------------------------------------------------------------------

int sample_jump(int path, const RMatrix& rates, double dt, double u) {
  const Eigen::Index d = rates.rows();
  require(path >= 0 && path < d, ErrorCode::kStructural, "step_trajectory: path index out of range");
  double exit = 0.0;
  for (Eigen::Index k = 0; k < d; ++k)
    if (k != path) exit += rates(k, path) * dt;
  if (exit >= kStepGuard) throw StepSizeError(exit, 0.5 * kStepGuard * dt / exit);
  double cum = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (k == path) continue;
    cum += rates(k, path) * dt;
    if (u < cum) return static_cast<int>(k);
  }
  return path;
}

TrajectoryState step_trajectory(const TrajectoryState& traj, const RateMatrix& rm, double dt, Rng& rng) {
  require(rm.rates.rows() == rm.currents.rows(), ErrorCode::kStructural, "step_trajectory: rates not filled");
  const double u = rng.uniform();
  return TrajectoryState{sample_jump(traj.path, rm.rates, dt, u), traj.time + dt};
}

// --- label matching ------------------------------------------------------------------

std::vector<int> match_paths(const CMatrix& prev, const CMatrix& next) {
  const int n = static_cast<int>(prev.cols());
  const int m = static_cast<int>(next.cols());
  require(n <= m && prev.rows() == next.rows(), ErrorCode::kStructural, "match_paths: shape mismatch");
  const CMatrix overlap = prev.adjoint() * next;
  // Hungarian method on cost -|overlap|^2 (rows prev, columns next)
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(m + 1), 0.0);
  std::vector<int> owner(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);
  auto cost = [&](int i, int j) { return -std::norm(overlap(i - 1, j - 1)); };
  for (int i = 1; i <= n; ++i) {
    owner[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = owner[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (owner[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      owner[static_cast<std::size_t>(j0)] = owner[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> result(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (owner[static_cast<std::size_t>(j)] != 0) result[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return result;
}

// --- instantaneous interactions ---------------------------------------------------

InteractionKernel interaction_kernel(const CVector& psi_before, const CMatrix& before, const CMatrix& u,
                                     const CMatrix& after) {
  require(before.rows() == psi_before.size() && u.rows() == psi_before.size() && after.rows() == psi_before.size(),
          ErrorCode::kStructural, "interaction_kernel: dimension mismatch");
  const Eigen::Index m0 = before.cols();
  const Eigen::Index m1 = after.cols();
  const std::vector<double> p_old = born(psi_before, before);
  const std::vector<double> p_new = born(u * psi_before, after);
  const CMatrix amp = after.adjoint() * u * before;  // <phi+_k|U|phi-_j>, rows k
  RMatrix w(m0, m1);
  for (Eigen::Index j = 0; j < m0; ++j)
    for (Eigen::Index k = 0; k < m1; ++k) w(j, k) = std::norm(amp(k, j)) * p_old[static_cast<std::size_t>(j)];

  auto marginal_error = [&](const RMatrix& x) {
    double e = 0.0;
    for (Eigen::Index j = 0; j < m0; ++j) e = std::max(e, std::abs(x.row(j).sum() - p_old[static_cast<std::size_t>(j)]));
    for (Eigen::Index k = 0; k < m1; ++k) e = std::max(e, std::abs(x.col(k).sum() - p_new[static_cast<std::size_t>(k)]));
    return e;
  };

  auto to_kernel = [&](const RMatrix& joint) {
    RMatrix k(m0, m1);
    for (Eigen::Index j = 0; j < m0; ++j) {
      const double row = joint.row(j).sum();
      for (Eigen::Index c = 0; c < m1; ++c)
        k(j, c) = row > 0.0 ? joint(j, c) / row : p_new[static_cast<std::size_t>(c)];
    }
    return k;
  };

  if (marginal_error(w) <= 1e-10) return {to_kernel(w), "overlap"};

  RMatrix x = w;
  for (int iter = 0; iter < 2000 && marginal_error(x) > 1e-12; ++iter) {
    for (Eigen::Index j = 0; j < m0; ++j) {
      const double s = x.row(j).sum();
      if (s > 0.0) x.row(j) *= p_old[static_cast<std::size_t>(j)] / s;
    }
    for (Eigen::Index k = 0; k < m1; ++k) {
      const double s = x.col(k).sum();
      if (s > 0.0) x.col(k) *= p_new[static_cast<std::size_t>(k)] / s;
    }
  }
  if (marginal_error(x) <= 1e-9) return {to_kernel(x), "proportional_fitting"};

  RMatrix ind(m0, m1);
  for (Eigen::Index j = 0; j < m0; ++j)
    for (Eigen::Index k = 0; k < m1; ++k) ind(j, k) = p_old[static_cast<std::size_t>(j)] * p_new[static_cast<std::size_t>(k)];
  return {to_kernel(ind), "independent"};
}

// --- timelines ------------------------------------------------------------------------

std::size_t Timeline::max_paths() const {
  std::size_t m = p0.size();
  for (const TimelineCheckpoint& c : checkpoints) m = std::max(m, c.p.size());
  return m;
}

namespace {

std::size_t grid_index(double t, double dt, const std::string& what) {
  const double steps = t / dt;
  const double rounded = std::round(steps);
  require(t >= -1e-12 && std::abs(steps - rounded) <= 1e-6, ErrorCode::kInvalidInput,
          what + " " + std::to_string(t) + " is not on the dt grid");
  return static_cast<std::size_t>(rounded);
}

std::vector<std::size_t> checkpoint_steps(const std::vector<double>& checkpoints, double dt, std::size_t n_steps) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (i > 0)
      require(checkpoints[i] > checkpoints[i - 1], ErrorCode::kInvalidInput, "checkpoints must be strictly increasing");
    const std::size_t s = grid_index(checkpoints[i], dt, "checkpoint");
    require(s <= n_steps, ErrorCode::kInvalidInput, "checkpoint beyond t_final");
    out.push_back(s);
  }
  return out;
}

}  // namespace

Timeline build_timeline(const StateVector& psi0, const Operator& h, const PathFamily& family, double t_final,
                        double dt, const std::vector<double>& checkpoints, const RateRule& rule) {
  require(dt > 0.0 && t_final >= 0.0, ErrorCode::kInvalidInput, "build_timeline: need dt > 0 and t_final >= 0");
  require(psi0.structure() == family.structure(), ErrorCode::kStructural, "build_timeline: structure mismatch");
  const std::size_t n_steps = grid_index(t_final, dt, "t_final");
  const std::vector<std::size_t> cp = checkpoint_steps(checkpoints, dt, n_steps);

  Timeline tl{psi0.structure(), {}, {}, {}, "supplied path family", false, 1.0, 0.0};
  StateVector psi = psi0;
  tl.p0 = born(psi.amplitudes(), family.paths(0.0));
  std::size_t next_cp = 0;
  auto record = [&](std::size_t step) {
    while (next_cp < cp.size() && cp[next_cp] == step) {
      const double t = static_cast<double>(step) * dt;
      const CMatrix paths = family.paths(t);
      tl.checkpoints.push_back(TimelineCheckpoint{t, step, born(psi.amplitudes(), paths), paths, {}});
      ++next_cp;
    }
  };
  record(0);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    const StateVector mid = evolve_state(psi, h, 0.5 * dt);
    const RateMatrix rm = transition_rates(probability_currents(mid, family, h, t + 0.5 * dt), rule);
    double drift = 0.0;
    psi = evolve_state(psi, h, dt, &drift);
    tl.max_norm_drift = std::max(tl.max_norm_drift, drift);
    tl.steps.push_back(TimelineStep{t + dt, dt, rm.rates, RMatrix(), false});
    record(s + 1);
  }
  return tl;
}

Timeline build_preferred_timeline(const StateVector& psi0, const Operator& h, double t_final, double dt,
                                  const std::vector<double>& checkpoints, const SearchBudget& budget) {
  require(dt > 0.0 && t_final >= 0.0, ErrorCode::kInvalidInput, "build_preferred_timeline: need dt > 0");
  const HilbertStructure& s = psi0.structure();
  const std::size_t n_steps = grid_index(t_final, dt, "t_final");
  const std::vector<std::size_t> cp = checkpoint_steps(checkpoints, dt, n_steps);
  Timeline tl{s, {}, {}, {}, "finite differences of entropy-minimizing paths", false, 1.0, 0.0};

  auto basis_of = [&](const StateVector& psi) {
    const DecompositionResult r = preferred_decomposition(psi, s, budget);
    tl.heuristic = tl.heuristic || r.status != MinimizationStatus::kResolved;
    CMatrix b(psi.dim(), static_cast<Eigen::Index>(r.decomposition.size()));
    for (std::size_t k = 0; k < r.decomposition.size(); ++k)
      b.col(static_cast<Eigen::Index>(k)) = r.decomposition.terms()[k].vector.amplitudes();
    const CMatrix comp = orthonormal_completion(b);
    CMatrix full(psi.dim(), psi.dim());
    full << b, comp;
    return full;
  };
  // relabel and rephase `next` to follow `prev`
  auto follow = [&](const CMatrix& prev, const CMatrix& next) {
    const std::vector<int> perm = match_paths(prev, next);
    CMatrix out(next.rows(), next.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      CVector v = next.col(perm[i]);
      const Complex o = prev.col(static_cast<Eigen::Index>(i)).dot(v);
      if (std::abs(o) > 0.0) v *= std::conj(o) / std::abs(o);
      tl.min_path_overlap = std::min(tl.min_path_overlap, std::norm(o));
      out.col(static_cast<Eigen::Index>(i)) = v;
    }
    return out;
  };

  StateVector psi = psi0;
  CMatrix phi = basis_of(psi);
  tl.p0 = born(psi.amplitudes(), phi);
  std::size_t next_cp = 0;
  auto record = [&](std::size_t step) {
    while (next_cp < cp.size() && cp[next_cp] == step) {
      tl.checkpoints.push_back(
          TimelineCheckpoint{static_cast<double>(step) * dt, step, born(psi.amplitudes(), phi), phi, {}});
      ++next_cp;
    }
  };
  record(0);
  for (std::size_t st = 0; st < n_steps; ++st) {
    const double t = static_cast<double>(st) * dt;
    const StateVector mid = evolve_state(psi, h, 0.5 * dt);
    double drift = 0.0;
    const StateVector end = evolve_state(psi, h, dt, &drift);
    tl.max_norm_drift = std::max(tl.max_norm_drift, drift);
    const CMatrix phi_mid = follow(phi, basis_of(mid));
    const CMatrix phi_end = follow(phi_mid, basis_of(end));
    CMatrix gen = Complex(0.0, 1.0) * (phi_end - phi) / dt * phi_mid.adjoint();
    gen = 0.5 * (gen + gen.adjoint()).eval();
    const RateMatrix rm = transition_rates(probability_currents(mid.amplitudes(), phi_mid, h.entries() - gen));
    tl.steps.push_back(TimelineStep{t + dt, dt, rm.rates, RMatrix(), false});
    psi = end;
    phi = phi_end;
    record(st + 1);
  }
  return tl;
}

// --- ensembles ---------------------------------------------------------------------------

int threads_from_env(int fallback) {
  if (const char* env = std::getenv("MODALSIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  return std::max(1, fallback);
}

}  // namespace modalsim
