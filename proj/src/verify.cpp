// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "modalsim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "modalsim/ascription.hpp"
#include "modalsim/decomp.hpp"
#include "modalsim/dynamics.hpp"
#include "modalsim/errors.hpp"
#include "modalsim/io.hpp"
#include "modalsim/random.hpp"
#include "modalsim/scenarios.hpp"

namespace modalsim {

using nlohmann::json;

namespace {

int pick(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
}

json matrix_json(const CMatrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

/// Collects violations for one property.
class Suite {
 public:
  Suite(std::string name, std::string module) { r_.name = std::move(name), r_.module = std::move(module); }
  void check(bool ok, const std::function<json()>& dump) {
    ++r_.cases;
    if (ok) return;
    if (r_.violations++ == 0) r_.counterexample = dump();
  }
  /// Errors thrown by a case count as violations.
  void guarded(const std::function<void()>& body, json context) {
    try {
      body();
    } catch (const std::exception& e) {
      ++r_.cases;
      if (r_.violations++ == 0) {
        context["exception"] = e.what();
        r_.counterexample = std::move(context);
      }
    }
  }
  PropertyResult done() { return std::move(r_); }

 private:
  PropertyResult r_;
};

std::vector<double> sorted_desc(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

ProbabilityDistribution random_pd(Rng& rng, int n) { return ProbabilityDistribution(random_distribution(rng, n)); }

// Random orthonormal product family on (dl, dr): per right basis vector an
// independent left basis, m members kept.
Decomposition random_product_decomposition(Rng& rng, int dl, int dr, int m) {
  const HilbertStructure s({dl, dr});
  const CMatrix b = random_unitary(rng, dr);
  std::vector<CVector> members;
  for (int j = 0; j < dr; ++j) {
    const CMatrix a = random_unitary(rng, dl);
    for (int i = 0; i < dl; ++i) members.push_back(kron(CVector(a.col(i)), CVector(b.col(j))));
  }
  std::shuffle(members.begin(), members.end(), rng);
  const CVector c = random_state(rng, m);
  CVector psi = CVector::Zero(dl * dr);
  std::vector<Term> terms;
  for (int i = 0; i < m; ++i) {
    psi += c(i) * members[static_cast<std::size_t>(i)];
    terms.push_back(Term{c(i), StateVector(s, members[static_cast<std::size_t>(i)])});
  }
  return Decomposition(StateVector(s, psi), std::move(terms));
}

// --- linalg ----------------------------------------------------------------------------

PropertyResult schmidt_link(std::uint64_t seed) {
  Suite suite("schmidt_link", "linalg");
  Rng rng(seed, 101);
  for (int trial = 0; trial < 100; ++trial) {
    const int dl = pick(rng, 2, 4), dr = pick(rng, 2, 4);
    const StateVector psi(HilbertStructure({dl, dr}), random_state(rng, dl * dr));
    const CoarseGraining g({0}, {1}, 2);
    const Eigh e = eigh(partial_trace(psi, g, Block::kLeft).entries());
    const Svd d = svd(bipartite_matrix(psi, g));
    std::vector<double> ev(e.values.data(), e.values.data() + e.values.size());
    std::vector<double> sv;
    for (Eigen::Index i = 0; i < d.s.size(); ++i) sv.push_back(d.s(i) * d.s(i));
    ev = sorted_desc(ev);
    sv.resize(ev.size(), 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < ev.size(); ++i) worst = std::max(worst, std::abs(ev[i] - sv[i]));
    suite.check(worst < tol::kVerify, [&] {
      return json{{"dims", {dl, dr}}, {"eigenvalues", ev}, {"squared_singular_values", sv}};
    });
  }
  return suite.done();
}

PropertyResult gram_schmidt_prefix(std::uint64_t seed) {
  Suite suite("gram_schmidt_prefix_span", "linalg");
  Rng rng(seed, 102);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = pick(rng, 2, 5);
    const int k = pick(rng, 1, d);
    std::vector<CVector> in;
    for (int i = 0; i < k; ++i) in.push_back(random_state(rng, d));
    const auto out = gram_schmidt(in);
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      CVector r = in[static_cast<std::size_t>(i)];
      for (int j = 0; j <= i; ++j) r -= out[static_cast<std::size_t>(j)].dot(r) * out[static_cast<std::size_t>(j)];
      worst = std::max(worst, r.norm());
    }
    suite.check(worst < tol::kVerify, [&] { return json{{"dim", d}, {"count", k}, {"residual", worst}}; });
  }
  return suite.done();
}

PropertyResult projector_monotonicity(std::uint64_t seed) {
  Suite suite("projector_monotonicity", "linalg");
  Rng rng(seed, 103);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = pick(rng, 2, 4);
    const Projector p = random_projector(rng, d, pick(rng, 1, d));
    const Projector q = random_projector(rng, d, pick(rng, 1, d));
    const Projector meet = projector_intersection(p, q);
    // a nested pair: a random subspace of P
    const Projector sub(p.basis() * random_unitary(rng, p.rank()).leftCols(pick(rng, 0, p.rank())));
    bool ok = projector_leq(meet, p) && projector_leq(meet, q) && projector_leq(sub, p);
    double gap = 0.0;
    for (int probe = 0; probe < 100; ++probe) {
      const CVector psi = random_state(rng, d);
      gap = std::max(gap, meet.expectation(psi) - p.expectation(psi));
      gap = std::max(gap, sub.expectation(psi) - p.expectation(psi));
    }
    ok = ok && gap <= 1e-12;
    suite.check(ok, [&] {
      return json{{"P", matrix_json(p.matrix())}, {"Q", matrix_json(q.matrix())}, {"largest_gap", gap}};
    });
  }
  return suite.done();
}

// --- decomp ----------------------------------------------------------------------------

PropertyResult schmidt_optimality(std::uint64_t seed, int threads) {
  Suite suite("schmidt_entropy_is_minimal", "decomp");
  Rng rng(seed, 201);
  SearchBudget budget;
  budget.restarts = 3;
  budget.max_evaluations = 1500;
  budget.threads = threads;
  for (int trial = 0; trial < 200; ++trial) {
    const int dl = pick(rng, 2, 4), dr = pick(rng, 2, 4);
    const HilbertStructure s({dl, dr});
    const StateVector psi(s, random_state(rng, dl * dr));
    budget.seed = seed * 1000 + static_cast<std::uint64_t>(trial);
    suite.guarded(
        [&] {
          const double schmidt = bi_orthogonal_decomposition(psi, CoarseGraining({0}, {1}, 2)).entropy;
          const double brute = brute_force_min_entropy(psi, s, budget).entropy;
          suite.check(brute >= schmidt - 1e-6, [&] {
            return json{{"dims", {dl, dr}}, {"state", vector_json(psi.amplitudes())}, {"schmidt", schmidt},
                        {"brute_force", brute}};
          });
        },
        json{{"dims", {dl, dr}}, {"state", vector_json(psi.amplitudes())}});
  }
  return suite.done();
}

PropertyResult a_orthogonalization(std::uint64_t seed) {
  Suite suite("a_orthogonalization_lowers_entropy", "decomp");
  Rng rng(seed, 202);
  for (int trial = 0; trial < 100; ++trial) {
    const int dl = pick(rng, 2, 4), dr = pick(rng, 2, 4);
    const int m = pick(rng, 2, dl * dr);
    const Decomposition d = random_product_decomposition(rng, dl, dr, m);
    const Decomposition a = a_orthogonal_from_product(d, CoarseGraining({0}, {1}, 2));
    suite.check(iu_entropy(a) <= iu_entropy(d) + 1e-10, [&] {
      return json{{"dims", {dl, dr}}, {"terms", m}, {"product_entropy", iu_entropy(d)},
                  {"a_orthogonal_entropy", iu_entropy(a)}};
    });
  }
  return suite.done();
}

PropertyResult bi_orthogonal_below_a_orthogonal(std::uint64_t seed) {
  Suite suite("bi_orthogonal_below_a_orthogonal", "decomp");
  Rng rng(seed, 203);
  for (int trial = 0; trial < 100; ++trial) {
    const int dl = pick(rng, 2, 4), dr = pick(rng, 2, 4);
    const int m = pick(rng, 1, dl);
    const CMatrix a = random_unitary(rng, dl);
    const CVector c = random_state(rng, m);
    std::vector<double> w;
    CVector psi = CVector::Zero(dl * dr);
    for (int i = 0; i < m; ++i) {
      psi += c(i) * kron(CVector(a.col(i)), random_state(rng, dr));
      w.push_back(std::norm(c(i)));
    }
    const double s_a = shannon_entropy(ProbabilityDistribution::normalized(w));
    const double s_b = bi_orthogonal_decomposition(StateVector(HilbertStructure({dl, dr}), psi),
                                                   CoarseGraining({0}, {1}, 2))
                           .entropy;
    suite.check(s_b <= s_a + 1e-10,
                [&] { return json{{"dims", {dl, dr}}, {"a_orthogonal_entropy", s_a}, {"schmidt_entropy", s_b}}; });
  }
  return suite.done();
}

PropertyResult doubly_stochastic(std::uint64_t seed) {
  Suite suite("doubly_stochastic_majorization", "decomp");
  Rng rng(seed, 204);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = pick(rng, 2, 5);
    const ProbabilityDistribution p = random_pd(rng, d);
    const CMatrix u = random_unitary(rng, d);
    const ProbabilityDistribution q = apply_doubly_stochastic(p, u);
    suite.check(majorizes(p, q) && shannon_entropy(p) <= shannon_entropy(q) + 1e-12, [&] {
      return json{{"p", p.weights()}, {"image", q.weights()}, {"unitary", matrix_json(u)}};
    });
  }
  return suite.done();
}

PropertyResult prefix_dominance(std::uint64_t seed) {
  Suite suite("prefix_dominance_implies_majorization", "decomp");
  Rng rng(seed, 205);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = pick(rng, 2, 5);
    const ProbabilityDistribution q = random_pd(rng, d);
    // half the pairs are built to dominate: a random order of a sharpened q
    ProbabilityDistribution p = random_pd(rng, d);
    if (trial % 2 == 0) {
      std::vector<double> w = sorted_desc(q.weights());
      const double shift = rng.uniform() * (1.0 - w[0]);
      w[0] += shift;
      w.back() -= shift;
      for (double& x : w) x = std::max(x, 0.0);
      p = ProbabilityDistribution::normalized(w);
    }
    if (!check_prefix_dominance(p, q)) {
      suite.check(true, [] { return json(); });
      continue;
    }
    suite.check(majorizes(p, q) && shannon_entropy(p) <= shannon_entropy(q) + 1e-12,
                [&] { return json{{"p", p.weights()}, {"q", q.weights()}}; });
  }
  return suite.done();
}

PropertyResult majorization_entropy(std::uint64_t seed) {
  Suite suite("majorization_orders_entropy", "decomp");
  Rng rng(seed, 206);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = pick(rng, 2, 4);
    const ProbabilityDistribution p = random_pd(rng, d);
    const ProbabilityDistribution q = random_pd(rng, pick(rng, 2, 4));
    const bool ok = !majorizes(p, q) || shannon_entropy(p) <= shannon_entropy(q) + 1e-12;
    suite.check(ok, [&] { return json{{"p", p.weights()}, {"q", q.weights()}}; });
  }
  return suite.done();
}

PropertyResult n_orthogonal_reproduction(std::uint64_t seed) {
  Suite suite("n_orthogonal_reproduced", "decomp");
  Rng rng(seed, 207);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = pick(rng, 2, 3);
    std::vector<int> dims;
    for (int f = 0; f < n; ++f) dims.push_back(pick(rng, 2, 3));
    const HilbertStructure s(dims);
    const int m = *std::min_element(dims.begin(), dims.end());
    std::vector<CMatrix> bases;
    for (int d : dims) bases.push_back(random_unitary(rng, d));
    // distinct weights keep the decomposition unique
    std::vector<double> w;
    for (int k = 0; k < m; ++k) w.push_back(1.0 + k + 0.5 * rng.uniform());
    double total = 0.0;
    for (double x : w) total += x;
    CVector psi = CVector::Zero(s.total_dim());
    std::vector<Term> terms;
    for (int k = 0; k < m; ++k) {
      CVector v = bases[0].col(k);
      for (int f = 1; f < n; ++f) v = kron(v, CVector(bases[static_cast<std::size_t>(f)].col(k)));
      const Complex c = std::polar(std::sqrt(w[static_cast<std::size_t>(k)] / total), 2.0 * M_PI * rng.uniform());
      psi += c * v;
      terms.push_back(Term{c, StateVector(s, v)});
    }
    const StateVector target(s, psi);
    const Decomposition expect(target, std::move(terms));
    suite.guarded(
        [&] {
          const DecompositionResult r = preferred_decomposition(target, s);
          suite.check(r.method == Method::kTheorem4 && same_term_set(r.decomposition, expect),
                      [&] { return json{{"dims", dims}, {"state", vector_json(psi)}, {"found", decomposition_json(r)}}; });
        },
        json{{"dims", dims}, {"state", vector_json(psi)}});
  }
  return suite.done();
}

// --- ascription ------------------------------------------------------------------------

PropertyResult ontology_distinctness(std::uint64_t seed) {
  Suite suite("ontology_distinctness", "ascription");
  Rng rng(seed, 301);
  auto ray = [](const CVector& v) { return PropertyAscription(Projector::ray(v), HilbertStructure::single(int(v.size()))); };
  for (int trial = 0; trial < 60; ++trial) {
    const int d = pick(rng, 2, 4);
    const CVector x = random_state(rng, d);
    const CVector y = random_state(rng, d);
    if (std::abs(x.dot(y)) < 1e-6) continue;
    const PropertyAscription a1 = ray(x), a2 = ray(y);
    const Projector meet = projector_intersection(a1.preferred(), a2.preferred());
    // one ontology holding both rays at value 1 would need [P1 and P2] = 1
    const bool contradiction = meet.rank() == 0 && *projector_status(meet, a1).value == 0.0;
    suite.check(!ontologies_identical(a1, a2) && mutually_exclusive(a1, a2) && contradiction,
                [&] { return json{{"x", vector_json(x)}, {"y", vector_json(y)}}; });
  }
  // same ray up to phase: identical
  for (int trial = 0; trial < 10; ++trial) {
    const int d = pick(rng, 2, 4);
    const CVector x = random_state(rng, d);
    const CVector y = std::polar(1.0, 2.0 * M_PI * rng.uniform()) * x;
    suite.check(ontologies_identical(ray(x), ray(y)), [&] { return json{{"x", vector_json(x)}, {"y", vector_json(y)}}; });
  }
  // orthogonal rays: one ontology in dimension 2, distinct above
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + trial % 3;
    const CMatrix u = random_unitary(rng, d);
    const bool identical = ontologies_identical(ray(u.col(0)), ray(u.col(1)));
    suite.check(identical == (d == 2), [&] {
      return json{{"dim", d}, {"x", vector_json(u.col(0))}, {"y", vector_json(u.col(1))}, {"identical", identical}};
    });
  }
  return suite.done();
}

PropertyResult determinate_closure(std::uint64_t seed) {
  Suite suite("determinate_set_closure", "ascription");
  Rng rng(seed, 302);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = pick(rng, 2, 4);
    const Projector p = random_projector(rng, d, pick(rng, 1, d - 1));
    const PropertyAscription a(p, HilbertStructure::single(d));
    auto member = [&](bool above) {
      const CMatrix comp = p.complement().basis();
      const int k = pick(rng, 0, static_cast<int>(comp.cols()));
      const CMatrix sub = comp * random_unitary(rng, static_cast<int>(comp.cols())).leftCols(k);
      if (!above) return Projector::span_of(sub);
      CMatrix both(d, p.rank() + k);
      both << p.basis(), sub;
      return Projector::span_of(both);
    };
    const Projector r1 = member(rng.uniform() < 0.5);
    const Projector r2 = member(rng.uniform() < 0.5);
    const auto v1 = projector_status(r1, a), v2 = projector_status(r2, a);
    const auto vc = projector_status(r1.complement(), a);
    const auto vj = projector_status(projector_join(r1, r2), a);
    const auto vm = projector_status(projector_intersection(r1, r2), a);
    bool ok = v1.determinate && v2.determinate && vc.determinate && vj.determinate && vm.determinate;
    if (ok) {
      const double x = *v1.value, y = *v2.value;
      ok = *vc.value == 1.0 - x && *vj.value == x + y - x * y && *vm.value == x * y;
    }
    suite.check(ok, [&] {
      return json{{"preferred", matrix_json(p.matrix())}, {"R1", matrix_json(r1.matrix())},
                  {"R2", matrix_json(r2.matrix())}};
    });
  }
  return suite.done();
}

PropertyResult reductionist_minimality(std::uint64_t seed) {
  Suite suite("reductionist_rule_minimality", "ascription");
  Rng rng(seed, 303);
  for (int trial = 0; trial < 100; ++trial) {
    const int da = pick(rng, 2, 3), db = pick(rng, 2, 3);
    const HilbertStructure s({da, db});
    const CoarseGraining g({0}, {1}, 2);
    const Projector pab = random_projector(rng, da * db, pick(rng, 1, 2));
    const Projector pa = subsystem_preferred_projector(pab, s, g, Block::kLeft);
    auto lifted = [&](const Projector& r) { return Projector(kron(r.basis(), CMatrix(CMatrix::Identity(db, db)))); };
    bool ok = projector_leq(pab, lifted(pa));
    for (int probe = 0; probe < 6 && ok; ++probe) {
      const Projector r = random_projector(rng, da, pick(rng, 0, da));
      if (projector_leq(pab, lifted(r))) ok = projector_leq(pa, r);
    }
    suite.check(ok, [&] { return json{{"dims", {da, db}}, {"P_AB", matrix_json(pab.matrix())}}; });
  }
  return suite.done();
}

PropertyResult spectral_constraint(std::uint64_t seed) {
  Suite suite("variable_status_spectral_constraint", "ascription");
  Rng rng(seed, 304);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = pick(rng, 2, 4);
    const CMatrix u = random_unitary(rng, d);
    const int split = pick(rng, 1, d - 1);
    const double v1 = 1.0 + rng.uniform(), v2 = -1.0 - rng.uniform();
    const CMatrix v =
        v1 * u.leftCols(split) * u.leftCols(split).adjoint() + v2 * u.rightCols(d - split) * u.rightCols(d - split).adjoint();
    CVector phi;
    switch (trial % 3) {
      case 0: phi = u.leftCols(split) * random_state(rng, split); break;
      case 1: phi = u.rightCols(d - split) * random_state(rng, d - split); break;
      default: phi = random_state(rng, d); break;
    }
    const PropertyAscription a(Projector::ray(phi), HilbertStructure::single(d));
    const bool in1 = projector_leq(a.preferred(), Projector(u.leftCols(split)));
    const bool in2 = projector_leq(a.preferred(), Projector(u.rightCols(d - split)));
    const ValueReport rep = variable_status(v, a);
    bool ok = rep.determinate == (in1 != in2);
    if (ok && rep.determinate) ok = std::abs(*rep.value - (in1 ? v1 : v2)) < tol::kVerify;
    suite.check(ok, [&] { return json{{"variable", matrix_json(v)}, {"state", vector_json(phi)}}; });
  }
  return suite.done();
}

// --- dynamics --------------------------------------------------------------------------

struct RandomSystem {
  CMatrix h, k, basis;
  CVector psi0;
  double t = 0.0;
};

RandomSystem random_system(Rng& rng) {
  const int d = pick(rng, 3, 4);
  return RandomSystem{random_hermitian(rng, d), random_hermitian(rng, d), random_unitary(rng, d), random_state(rng, d),
                      rng.uniform()};
}

json system_json(const RandomSystem& sys) {
  return json{{"hamiltonian", matrix_json(sys.h)}, {"path_generator", matrix_json(sys.k)},
              {"basis", matrix_json(sys.basis)}, {"psi0", vector_json(sys.psi0)}, {"t", sys.t}};
}

PropertyResult continuity(std::uint64_t seed) {
  Suite suite("current_continuity", "dynamics");
  Rng rng(seed, 401);
  for (int trial = 0; trial < 50; ++trial) {
    const RandomSystem sys = random_system(rng);
    const int d = static_cast<int>(sys.h.rows());
    const HilbertStructure s = HilbertStructure::single(d);
    const PathFamily fam = PathFamily::comoving(s, sys.basis, sys.k);
    const Operator h(s, sys.h);
    auto psi_at = [&](double t) { return StateVector(s, propagator(sys.h, t) * sys.psi0); };
    const StateVector psi = psi_at(sys.t);
    const RVector dpdt = theoretical_dpdt(psi, fam, h, sys.t);
    const RateMatrix rm = probability_currents(psi, fam, h, sys.t);
    const double step = 1e-5;
    const auto plus = path_probabilities(psi_at(sys.t + step), fam, sys.t + step);
    const auto minus = path_probabilities(psi_at(sys.t - step), fam, sys.t - step);
    double sum_gap = 0.0, fd_gap = 0.0, antisym = 0.0;
    for (int k = 0; k < d; ++k) {
      sum_gap = std::max(sum_gap, std::abs(rm.currents.row(k).sum() - dpdt(k)));
      const double fd = (plus[static_cast<std::size_t>(k)] - minus[static_cast<std::size_t>(k)]) / (2.0 * step);
      fd_gap = std::max(fd_gap, std::abs(fd - dpdt(k)));
    }
    antisym = (rm.currents + rm.currents.transpose()).cwiseAbs().maxCoeff();
    suite.check(sum_gap < 1e-8 && fd_gap < 1e-6 && antisym == 0.0, [&] {
      json j = system_json(sys);
      j["current_sum_gap"] = sum_gap;
      j["finite_difference_gap"] = fd_gap;
      j["antisymmetry_defect"] = antisym;
      return j;
    });
  }
  return suite.done();
}

PropertyResult rate_balance(std::uint64_t seed, bool faulty) {
  Suite suite("rate_balance", "dynamics");
  Rng rng(seed, 402);
  const RateRule user = faulty ? RateRule([](double j, double p_from, double p_to) {
    return std::pair{std::abs(j) / p_from, std::abs(j) / p_to};
  })
                               : rate_rule_from([](double j, double p_from, double) {
                                   return std::max(0.0, j / p_from) + 0.25;
                                 });
  const std::vector<std::pair<std::string, RateRule>> rules{{"minimal", minimal_rate_rule()},
                                                            {faulty ? "injected_faulty" : "user_supplied", user}};
  for (int trial = 0; trial < 50; ++trial) {
    const RandomSystem sys = random_system(rng);
    const int d = static_cast<int>(sys.h.rows());
    const HilbertStructure s = HilbertStructure::single(d);
    const PathFamily fam = PathFamily::comoving(s, sys.basis, sys.k);
    const StateVector psi(s, propagator(sys.h, sys.t) * sys.psi0);
    const RateMatrix cur = probability_currents(psi, fam, Operator(s, sys.h), sys.t);
    for (const auto& [name, rule] : rules) {
      const RateMatrix rm = transition_rates(cur, rule);
      for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j) {
          if (k == j || rm.p[static_cast<std::size_t>(j)] <= 1e-12 || rm.p[static_cast<std::size_t>(k)] <= 1e-12)
            continue;
          const double lhs = rm.rates(k, j) * rm.p[static_cast<std::size_t>(j)] -
                             rm.rates(j, k) * rm.p[static_cast<std::size_t>(k)];
          const double gap = std::abs(lhs - rm.currents(k, j));
          suite.check(gap < 1e-10, [&, k = k, j = j, name = name] {
            json out = system_json(sys);
            out["rule"] = name;
            out["k"] = k + 1;
            out["j"] = j + 1;
            out["J_kj"] = rm.currents(k, j);
            out["T_kj"] = rm.rates(k, j);
            out["T_jk"] = rm.rates(j, k);
            out["p_j"] = rm.p[static_cast<std::size_t>(j)];
            out["p_k"] = rm.p[static_cast<std::size_t>(k)];
            out["balance_gap"] = gap;
            return out;
          });
        }
    }
  }
  return suite.done();
}

PropertyResult comoving_deterministic(std::uint64_t seed, int threads) {
  Suite suite("comoving_paths_never_jump", "dynamics");
  Rng rng(seed, 403);
  for (int trial = 0; trial < 5; ++trial) {
    const RandomSystem sys = random_system(rng);
    const HilbertStructure s = HilbertStructure::single(static_cast<int>(sys.h.rows()));
    EnsembleOptions opt;
    opt.n_traj = 200;
    opt.seed = seed + static_cast<std::uint64_t>(trial);
    opt.threads = threads;
    const EnsembleResult ens = run_ensemble(StateVector(s, sys.psi0), Operator(s, sys.h),
                                            PathFamily::comoving(s, sys.basis, sys.h), 1.0, 0.01, {0.0, 1.0}, opt);
    suite.check(ens.jumps == 0, [&] {
      json j = system_json(sys);
      j["jumps"] = ens.jumps;
      return j;
    });
  }
  return suite.done();
}

PropertyResult ensemble_marginals(std::uint64_t seed, int threads) {
  Suite suite("ensemble_marginals", "dynamics");
  const HilbertStructure s = HilbertStructure::single(2);
  CMatrix sx(2, 2);
  sx << 0, 1, 1, 0;
  CVector up = CVector::Zero(2);
  up(0) = 1.0;
  const std::vector<double> cps{0.0, 0.4, 0.8, 1.2};
  EnsembleOptions opt;
  opt.n_traj = 4000;
  opt.seed = seed;
  opt.threads = threads;
  const PathFamily fam = PathFamily::fixed(s, CMatrix::Identity(2, 2));
  const Timeline tl = build_timeline(StateVector(s, up), Operator(s, sx), fam, 1.2, 0.005, cps);
  const EnsembleResult ens = run_ensemble(tl, opt);
  for (std::size_t c = 0; c < cps.size(); ++c) {
    const double p = tl.checkpoints[c].p[0];
    const double n = static_cast<double>(ens.n_traj);
    const double sd = std::sqrt(n * p * (1.0 - p));
    const double diff = std::abs(static_cast<double>(ens.counts[c][0]) - n * p);
    const double z = sd > 0.0 ? diff / sd : (diff == 0.0 ? 0.0 : 1e300);
    suite.check(z < 4.0, [&] { return json{{"time", cps[c]}, {"target", p}, {"count", ens.counts[c][0]}, {"z", z}}; });
  }
  return suite.done();
}

// --- scenarios -------------------------------------------------------------------------

MeasurementModel random_model(Rng& rng, int d, int micro) {
  MeasurementModel m;
  m.system_dims = {d};
  const CMatrix basis = random_unitary(rng, d);
  for (int k = 0; k < d; ++k) {
    m.object_eigenvectors.push_back(basis.col(k));
    m.disturbed_states.push_back(random_state(rng, d));
  }
  const CMatrix a = random_unitary(rng, 1 + d * micro);
  const CMatrix e = random_unitary(rng, 1 + d * micro);
  for (int i = 0; i <= d * micro; ++i) {
    m.apparatus_states.push_back(a.col(i));
    m.environment_states.push_back(e.col(i));
  }
  if (micro > 1)
    for (int k = 0; k < d; ++k) {
      const CVector f = random_state(rng, micro);
      m.microstate_weights.emplace_back(f.data(), f.data() + f.size());
    }
  return m;
}

std::vector<Complex> as_list(const CVector& v) { return {v.data(), v.data() + v.size()}; }

PropertyResult unitary_consistency(std::uint64_t seed) {
  Suite suite("unitary_consistency", "scenarios");
  Rng rng(seed, 501);
  for (int trial = 0; trial < 20; ++trial) {
    const MeasurementModel m = random_model(rng, pick(rng, 2, 3), pick(rng, 1, 2));
    const auto c = as_list(random_state(rng, m.outcomes()));
    const Operator u = build_measurement_unitary(m);
    const double gap = (final_state_single(m, c).amplitudes() - u.entries() * initial_state_single(m, c).amplitudes()).norm();
    suite.check(is_unitary(u.entries()) && gap < tol::kVerify,
                [&] { return json{{"outcomes", m.outcomes()}, {"microstates", m.microstates()}, {"gap", gap}}; });
  }
  return suite.done();
}

PropertyResult measurement_decompositions(std::uint64_t seed) {
  Suite suite("measurement_decompositions", "scenarios");
  Rng rng(seed, 502);
  auto agree = [&](const StateVector& psi, const HilbertStructure& s, const Decomposition& expect, const char* what) {
    suite.guarded(
        [&] {
          const DecompositionResult r = preferred_decomposition(psi, s);
          suite.check(r.method == Method::kTheorem4 && same_term_set(r.decomposition, expect),
                      [&] { return json{{"case", what}, {"found", decomposition_json(r)}}; });
        },
        json{{"case", what}});
  };
  for (bool adaptive : {true, false}) {
    const AdaptiveExperiment exp = spin_example({0.6, 0.8, adaptive});
    const auto [psi1, psi2] = sequence_final_states(exp);
    agree(psi1, exp.structure(), expected_decomposition_first(exp), "spin first stage");
    agree(psi2, exp.structure(), expected_decomposition_second(exp), "spin second stage");
  }
  for (int trial = 0; trial < 10; ++trial) {
    const MeasurementModel m = random_model(rng, pick(rng, 2, 3), 1 + trial % 2);
    const auto c = as_list(random_state(rng, m.outcomes()));
    agree(final_state_single(m, c), m.structure(), expected_preferred_decomposition_single(m, c),
          m.microstates() > 1 ? "random microstate model" : "random model");
  }
  return suite.done();
}

PropertyResult spin_sequence(std::uint64_t seed, int threads) {
  Suite suite("spin_sequence_statistics", "scenarios");
  for (bool adaptive : {true, false}) {
    const AdaptiveExperiment exp = spin_example({0.6, 0.8, adaptive});
    const SequenceRun run = build_sequence_run(exp);
    EnsembleOptions opt;
    opt.n_traj = 4000;
    opt.seed = seed;
    opt.threads = threads;
    const EnsembleResult ens = run_ensemble(run.run.timeline, opt);
    const OutcomeStatistics st = outcome_statistics(exp, run, ens);
    suite.check(st.unread == 0 && st.max_first_z() < 4.0 && st.max_conditional_z() < 4.0, [&] {
      return json{{"adaptive", adaptive}, {"first_z", st.max_first_z()}, {"conditional_z", st.max_conditional_z()},
                  {"unread", st.unread}};
    });
    const FaithfulnessReport rep = check_faithfulness(exp, run, ens);
    for (const FaithfulnessBranch& b : rep.branches)
      if (b.predictable)
        suite.check(b.fraction == 1.0, [&] {
          return json{{"adaptive", adaptive}, {"outcome", b.outcome + 1}, {"faithful_fraction", b.fraction}};
        });
    suite.check(rep.all_faithful() && !rep.unsatisfiable, [&] { return json{{"adaptive", adaptive}}; });
  }
  return suite.done();
}

}  // namespace

bool VerifyReport::all_passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed(); });
}

VerifyReport run_verification(const VerifyOptions& options) {
  const std::uint64_t seed = options.seed;
  const int threads = std::max(1, options.threads);
  VerifyReport r;
  r.properties.push_back(schmidt_link(seed));
  r.properties.push_back(gram_schmidt_prefix(seed));
  r.properties.push_back(projector_monotonicity(seed));
  r.properties.push_back(schmidt_optimality(seed, threads));
  r.properties.push_back(a_orthogonalization(seed));
  r.properties.push_back(bi_orthogonal_below_a_orthogonal(seed));
  r.properties.push_back(doubly_stochastic(seed));
  r.properties.push_back(prefix_dominance(seed));
  r.properties.push_back(majorization_entropy(seed));
  r.properties.push_back(n_orthogonal_reproduction(seed));
  r.properties.push_back(ontology_distinctness(seed));
  r.properties.push_back(determinate_closure(seed));
  r.properties.push_back(reductionist_minimality(seed));
  r.properties.push_back(spectral_constraint(seed));
  r.properties.push_back(continuity(seed));
  r.properties.push_back(rate_balance(seed, options.faulty_rate_rule));
  r.properties.push_back(comoving_deterministic(seed, threads));
  r.properties.push_back(ensemble_marginals(seed, threads));
  r.properties.push_back(unitary_consistency(seed));
  r.properties.push_back(measurement_decompositions(seed));
  r.properties.push_back(spin_sequence(seed, threads));
  return r;
}

json verify_json(const VerifyReport& report, const VerifyOptions& options) {
  json props = json::array();
  for (const PropertyResult& p : report.properties)
    props.push_back({{"name", p.name},
                     {"module", p.module},
                     {"passed", p.passed()},
                     {"cases", p.cases},
                     {"violations", p.violations},
                     {"counterexample", p.counterexample}});
  return {{"seed", options.seed},
          {"faulty_rate_rule", options.faulty_rate_rule},
          {"all_passed", report.all_passed()},
          {"properties", std::move(props)}};
}

}  // namespace modalsim
