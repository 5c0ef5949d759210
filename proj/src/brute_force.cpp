// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Multi-start minimization of the IU entropy over orthonormal product
// families. A family is parametrized as a tree of local bases: a basis of
// the first factor (in some factor ordering), then for each of its vectors a
// basis of the next factor, and so on. Every leaf is a product vector and
// the leaves are orthonormal for all parameter values.
#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <thread>

#include "modalsim/decomp.hpp"
#include "modalsim/random.hpp"

namespace modalsim {

namespace {

// --- Nelder-Mead ---------------------------------------------------------------

struct MinimizeResult {
  std::vector<double> x;
  double f = 0.0;
  int evaluations = 0;
};

MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                           double step, int max_evals) {
  const std::size_t n = x0.size();
  if (n == 0) return {x0, f(x0), 1};
  // dimension-adapted coefficients (Gao and Han)
  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / dn;
  const double gamma = 0.75 - 1.0 / (2.0 * dn);
  const double delta = 1.0 - 1.0 / dn;

  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  std::vector<double> fv(n + 1);
  int evals = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    fv[i] = f(pts[i]);
    ++evals;
  }
  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);

  auto point = [&](double t, const std::vector<double>& from, std::vector<double>& out) {
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + t * (from[j] - centroid[j]);
  };

  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double spread = fv[worst] - fv[best];
    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j) diameter = std::max(diameter, std::abs(pts[i][j] - pts[best][j]));
    if (spread < 1e-14 && diameter < 1e-10) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / dn;

    point(-alpha, pts[worst], xr);
    const double fr = f(xr);
    ++evals;
    if (fr < fv[best]) {
      point(-alpha * beta, pts[worst], xe);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    point(outside ? -alpha * gamma : gamma, pts[worst], xc);
    const double fc = f(xc);
    ++evals;
    if (fc < std::min(fr, fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[best][j] + delta * (pts[i][j] - pts[best][j]);
      fv[i] = f(pts[i]);
      ++evals;
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  return {pts[static_cast<std::size_t>(it - fv.begin())], *it, evals};
}

// --- product-basis tree ----------------------------------------------------------

struct Tree {
  std::vector<int> order;  // factor ordering
  std::vector<int> dims;   // dims in that ordering
  std::vector<std::vector<CMatrix>> base;  // base[level][prefix]
  std::size_t param_count = 0;
};

std::size_t params_for(int d) { return static_cast<std::size_t>(d) * static_cast<std::size_t>(d - 1); }

// U0 * exp(iH) with H built from the off-diagonal parameters.
CMatrix local_unitary(const CMatrix& base, const double* theta) {
  const Eigen::Index d = base.rows();
  CMatrix h = CMatrix::Zero(d, d);
  std::size_t k = 0;
  bool any = false;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = a + 1; b < d; ++b) {
      h(a, b) = Complex(theta[k], theta[k + 1]);
      h(b, a) = std::conj(h(a, b));
      any = any || theta[k] != 0.0 || theta[k + 1] != 0.0;
      k += 2;
    }
  if (!any) return base;
  const Eigh e = eigh(h);
  CVector ph(d);
  for (Eigen::Index i = 0; i < d; ++i) ph(i) = std::polar(1.0, e.values(i));
  return base * (e.vectors * ph.asDiagonal() * e.vectors.adjoint());
}

// Coefficients <phi_leaf|psi> for every leaf, in mixed-radix leaf order.
// With `init` set, the base unitaries are chosen greedily from the
// conditional states (left singular vectors), then theta is ignored.
CVector contract(Tree& tree, const CVector& psi_o, const std::vector<double>& theta, bool init) {
  CVector t = psi_o;
  const std::size_t levels = tree.dims.size();
  std::size_t prefix = 1;
  std::size_t rest = static_cast<std::size_t>(psi_o.size());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < levels; ++l) {
    const auto d = static_cast<std::size_t>(tree.dims[l]);
    rest /= d;
    CVector next(t.size());
    for (std::size_t p = 0; p < prefix; ++p) {
      Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> block(
          t.data() + static_cast<Eigen::Index>(p * d * rest), static_cast<Eigen::Index>(d),
          static_cast<Eigen::Index>(rest));
      CMatrix u;
      if (init) {
        const Svd s = svd(CMatrix(block));
        CMatrix full = s.u;
        if (full.cols() < static_cast<Eigen::Index>(d)) {
          const CMatrix comp = orthonormal_completion(full);
          full.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(d));
          full.rightCols(comp.cols()) = comp;
        }
        tree.base[l][p] = full;
        u = full;
      } else {
        u = local_unitary(tree.base[l][p], theta.data() + offset);
      }
      offset += params_for(static_cast<int>(d));
      Eigen::Map<Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> out(
          next.data() + static_cast<Eigen::Index>(p * d * rest), static_cast<Eigen::Index>(d),
          static_cast<Eigen::Index>(rest));
      out.noalias() = u.adjoint() * block;
    }
    t.swap(next);
    prefix *= d;
  }
  return t;
}

// Leaf product vector in the tree's factor ordering.
CVector leaf_vector(const Tree& tree, const std::vector<double>& theta, std::size_t leaf) {
  const std::size_t levels = tree.dims.size();
  std::vector<std::size_t> digits(levels);
  std::size_t rem = leaf;
  for (std::size_t l = levels; l-- > 0;) {
    digits[l] = rem % static_cast<std::size_t>(tree.dims[l]);
    rem /= static_cast<std::size_t>(tree.dims[l]);
  }
  // parameter offsets follow the contraction order: level by level, prefix by prefix
  CVector v = CVector::Ones(1);
  std::size_t offset = 0;
  std::size_t prefix_index = 0;
  std::size_t prefix_count = 1;
  for (std::size_t l = 0; l < levels; ++l) {
    const int d = tree.dims[l];
    const std::size_t off = offset + prefix_index * params_for(d);
    const CMatrix u = local_unitary(tree.base[l][prefix_index], theta.data() + off);
    v = kron(v, CVector(u.col(static_cast<Eigen::Index>(digits[l]))));
    offset += prefix_count * params_for(d);
    prefix_index = prefix_index * static_cast<std::size_t>(d) + digits[l];
    prefix_count *= static_cast<std::size_t>(d);
  }
  return v;
}

double weights_entropy(const CVector& c) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double w = std::norm(c(i));
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

struct Candidate {
  bool feasible = false;
  double entropy = 0.0;
  std::vector<Term> terms;
};

std::vector<std::vector<int>> factor_orderings(int n) {
  std::vector<int> base(static_cast<std::size_t>(n));
  std::iota(base.begin(), base.end(), 0);
  std::vector<std::vector<int>> out;
  if (n <= 4) {
    do out.push_back(base);
    while (std::next_permutation(base.begin(), base.end()));
  } else {
    for (int r = 0; r < n; ++r) {
      out.push_back(base);
      std::rotate(base.begin(), base.begin() + 1, base.end());
    }
  }
  return out;
}

Candidate run_restart(const StateVector& psi, const SearchBudget& budget, int restart,
                      const std::vector<std::vector<int>>& orderings) {
  const HilbertStructure& s = psi.structure();
  Tree tree;
  tree.order = orderings[static_cast<std::size_t>(restart) % orderings.size()];
  std::size_t prefix = 1;
  for (int f : tree.order) tree.dims.push_back(s.dim(f));
  tree.base.resize(tree.dims.size());
  for (std::size_t l = 0; l < tree.dims.size(); ++l) {
    tree.base[l].resize(prefix);
    tree.param_count += prefix * params_for(tree.dims[l]);
    prefix *= static_cast<std::size_t>(tree.dims[l]);
  }
  const CVector psi_o = permute_factors(psi.amplitudes(), s, tree.order);

  // the first pass over the orderings starts from the greedy conditional
  // bases; later restarts start from Haar-random local bases
  std::vector<double> theta(tree.param_count, 0.0);
  const bool greedy = static_cast<std::size_t>(restart) < orderings.size();
  Rng rng(budget.seed, static_cast<std::uint64_t>(restart));
  if (greedy) {
    contract(tree, psi_o, theta, true);
  } else {
    for (std::size_t l = 0; l < tree.base.size(); ++l)
      for (CMatrix& b : tree.base[l]) b = random_unitary(rng, tree.dims[l]);
  }

  const double norm2 = psi.amplitudes().squaredNorm();
  auto objective = [&](const std::vector<double>& x) {
    const CVector c = contract(tree, psi_o, x, false);
    const double deficit = std::abs(norm2 - c.squaredNorm());
    return weights_entropy(c) + budget.penalty_weight * deficit;
  };

  MinimizeResult best{theta, objective(theta), 1};
  int used = 1;
  double step = greedy ? 0.05 : 0.5;
  while (used < budget.max_evaluations && tree.param_count > 0) {
    MinimizeResult r = nelder_mead(objective, best.x, step, budget.max_evaluations - used);
    used += r.evaluations;
    const bool improved = r.f < best.f - 1e-12;
    if (r.f < best.f) best = std::move(r);
    if (!improved) {
      if (step < 1e-6) break;
      step *= 0.1;
    }
  }

  // materialize the leaves with nonzero overlap
  const CVector c = contract(tree, psi_o, best.x, false);
  std::vector<int> inverse(tree.order.size());
  for (std::size_t i = 0; i < tree.order.size(); ++i) inverse[static_cast<std::size_t>(tree.order[i])] = static_cast<int>(i);
  const HilbertStructure ordered(tree.dims);
  Candidate out;
  CVector rebuilt = CVector::Zero(psi.dim());
  std::vector<CVector> vecs;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double mag = std::abs(c(i));
    if (mag <= tol::kConstruct) continue;
    CVector v = permute_factors(leaf_vector(tree, best.x, static_cast<std::size_t>(i)), ordered, inverse);
    const Complex phase = c(i) / mag;
    v *= phase;
    rebuilt += mag * v;
    vecs.push_back(v);
    out.terms.push_back(Term{Complex(mag, 0.0), StateVector(s, v)});
  }
  double worst_overlap = 0.0;
  for (std::size_t i = 0; i < vecs.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j)
      worst_overlap = std::max(worst_overlap, std::abs(vecs[j].dot(vecs[i]) - (i == j ? 1.0 : 0.0)));
  const double residual = (rebuilt - psi.amplitudes()).norm();
  out.feasible = !out.terms.empty() && worst_overlap <= budget.feasibility_tolerance &&
                 residual <= budget.feasibility_tolerance;
  if (out.feasible) {
    canonical_order(out.terms);
    std::vector<double> w;
    for (const Term& t : out.terms) w.push_back(std::norm(t.coefficient));
    out.entropy = shannon_entropy(ProbabilityDistribution::normalized(std::move(w)));
  }
  return out;
}

Decomposition computational_candidate(const StateVector& psi) {
  std::vector<Term> terms;
  const HilbertStructure& s = psi.structure();
  for (int i = 0; i < psi.dim(); ++i) {
    const Complex a = psi.amplitudes()(i);
    if (std::abs(a) <= tol::kConstruct) continue;
    CVector v = CVector::Zero(psi.dim());
    v(i) = a / std::abs(a);
    terms.push_back(Term{Complex(std::abs(a), 0.0), StateVector(s, std::move(v))});
  }
  canonical_order(terms);
  return Decomposition(psi, std::move(terms));
}

DecompositionResult unresolved(const StateVector& psi, const std::string& why) {
  Decomposition d = computational_candidate(psi);
  const double h = iu_entropy(d);
  return DecompositionResult{std::move(d), h, Method::kBruteForce, false, why, MinimizationStatus::kUnresolved,
                             std::nullopt};
}

}  // namespace

DecompositionResult brute_force_min_entropy(const StateVector& psi, const HilbertStructure& structure,
                                            const SearchBudget& budget) {
  require(psi.structure() == structure, ErrorCode::kStructural, "brute_force_min_entropy: structure mismatch");
  require(psi.is_normalized(), ErrorCode::kInvalidInput, "brute_force_min_entropy: state not normalized");
  if (structure.total_dim() > budget.max_total_dim)
    return unresolved(psi, "search skipped: total dimension " + std::to_string(structure.total_dim()) +
                               " exceeds the brute-force limit " + std::to_string(budget.max_total_dim));
  if (budget.restarts <= 0 || budget.max_evaluations <= 0) return unresolved(psi, "search skipped: empty budget");

  const auto orderings = factor_orderings(structure.factor_count());
  std::vector<Candidate> results(static_cast<std::size_t>(budget.restarts));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < budget.restarts; r = next++)
      results[static_cast<std::size_t>(r)] = run_restart(psi, budget, r, orderings);
  };
  const int threads = std::clamp(budget.threads, 1, budget.restarts);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  // deterministic reduction: lowest entropy, ties to the earliest restart
  const Candidate* best = nullptr;
  for (const Candidate& c : results)
    if (c.feasible && (best == nullptr || c.entropy < best->entropy - 1e-12)) best = &c;
  if (best == nullptr) return unresolved(psi, "no feasible candidate within budget");

  Decomposition d(psi, best->terms);
  const double h = iu_entropy(d);
  return DecompositionResult{std::move(d), h, Method::kBruteForce, false,
                             std::string("heuristic minimum from multi-start search; uniqueness not certified"),
                             MinimizationStatus::kHeuristic, std::nullopt};
}

}  // namespace modalsim
