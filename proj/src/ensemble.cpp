// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "modalsim/dynamics.hpp"

namespace modalsim {

namespace {

int draw(const std::vector<double>& w, double u) {
  double cum = 0.0;
  int last = -1;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] <= 0.0) continue;
    cum += w[k];
    last = static_cast<int>(k);
    if (u < cum) return last;
  }
  return last;
}

int draw_row(const RMatrix& kernel, int row, double u) {
  double cum = 0.0;
  int last = -1;
  for (Eigen::Index k = 0; k < kernel.cols(); ++k) {
    const double x = kernel(row, k);
    if (x <= 0.0) continue;
    cum += x;
    last = static_cast<int>(k);
    if (u < cum) return last;
  }
  return last;
}

struct TrajectoryError {
  bool failed = false;
  double exit = 0.0;
  double suggested_dt = 0.0;
  std::string message;
  ErrorCode code = ErrorCode::kInvalidInput;
};

}  // namespace

EnsembleResult run_ensemble(const Timeline& timeline, const EnsembleOptions& options) {
  require(options.n_traj > 0, ErrorCode::kInvalidInput, "run_ensemble: n_traj must be positive");
  require(!timeline.p0.empty(), ErrorCode::kStructural, "run_ensemble: empty timeline");
  const std::size_t ncp = timeline.checkpoints.size();
  const std::size_t n = options.n_traj;

  EnsembleResult res;
  res.n_traj = n;
  res.paths.assign(n * ncp, -1);
  std::vector<std::uint64_t> jumps(n, 0);
  std::vector<TrajectoryError> errors(n);

  auto simulate = [&](std::size_t traj) {
    Rng rng(options.seed, traj);
    int path = draw(timeline.p0, rng.uniform());
    std::size_t cp = 0;
    auto record = [&](std::size_t done) {
      while (cp < ncp && timeline.checkpoints[cp].steps_done == done) res.paths[traj * ncp + cp++] = path;
    };
    record(0);
    for (std::size_t s = 0; s < timeline.steps.size(); ++s) {
      const TimelineStep& st = timeline.steps[s];
      const double u = rng.uniform();
      if (st.instantaneous) {
        path = draw_row(st.kernel, path, u);
      } else {
        const int next = sample_jump(path, st.rates, st.dt, u);
        if (next != path) ++jumps[traj];
        path = next;
      }
      record(s + 1);
    }
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(n)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        simulate(i);
      } catch (const StepSizeError& e) {
        errors[i] = TrajectoryError{true, e.exit_probability(), e.suggested_dt(), e.what(), e.code()};
      } catch (const Error& e) {
        errors[i] = TrajectoryError{true, 0.0, 0.0, e.what(), e.code()};
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const TrajectoryError& e : errors) {
    if (!e.failed) continue;
    if (e.code == ErrorCode::kStepSize) throw StepSizeError(e.exit, e.suggested_dt);
    throw Error(e.code, e.message);
  }

  std::size_t width = timeline.max_paths();
  res.counts.assign(ncp, std::vector<std::uint64_t>(width, 0));
  for (std::size_t traj = 0; traj < n; ++traj) {
    res.jumps += jumps[traj];
    for (std::size_t c = 0; c < ncp; ++c) {
      const int p = res.paths[traj * ncp + c];
      require(p >= 0 && static_cast<std::size_t>(p) < width, ErrorCode::kInconsistent,
              "run_ensemble: trajectory left the path set");
      ++res.counts[c][static_cast<std::size_t>(p)];
    }
  }
  return res;
}

EnsembleResult run_ensemble(const StateVector& psi0, const Operator& h, const PathFamily& family, double t_final,
                            double dt, const std::vector<double>& checkpoints, const EnsembleOptions& options) {
  return run_ensemble(build_timeline(psi0, h, family, t_final, dt, checkpoints), options);
}

}  // namespace modalsim
