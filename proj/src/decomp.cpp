// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#include "modalsim/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace modalsim {

namespace {

constexpr double kTieTolerance = 1e-12;

// Descending lexicographic comparison of amplitude vectors, (re, im) per entry.
bool amplitudes_greater(const CVector& a, const CVector& b) {
  for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (std::abs(a(i).real() - b(i).real()) > kTieTolerance) return a(i).real() > b(i).real();
    if (std::abs(a(i).imag() - b(i).imag()) > kTieTolerance) return a(i).imag() > b(i).imag();
  }
  return false;
}

}  // namespace

// --- distributions -----------------------------------------------------------

ProbabilityDistribution::ProbabilityDistribution(std::vector<double> weights) : w_(std::move(weights)) {
  require(!w_.empty(), ErrorCode::kInvalidInput, "distribution: empty");
  double total = 0.0;
  for (double& x : w_) {
    require(std::isfinite(x) && x >= -1e-12 && x <= 1.0 + 1e-12, ErrorCode::kInvalidInput,
            "distribution: weight outside [0,1]");
    x = std::clamp(x, 0.0, 1.0);
    total += x;
  }
  require(std::abs(total - 1.0) <= 1e-10, ErrorCode::kInvalidInput, "distribution: weights do not sum to 1");
}

ProbabilityDistribution ProbabilityDistribution::normalized(std::vector<double> weights) {
  double total = 0.0;
  for (double x : weights) {
    require(std::isfinite(x) && x >= 0.0, ErrorCode::kInvalidInput, "distribution: negative weight");
    total += x;
  }
  require(total > 0.0, ErrorCode::kInvalidInput, "distribution: zero total weight");
  for (double& x : weights) x /= total;
  return ProbabilityDistribution(std::move(weights));
}

ProbabilityDistribution ProbabilityDistribution::padded(std::size_t n) const {
  std::vector<double> w = w_;
  if (w.size() < n) w.resize(n, 0.0);
  return ProbabilityDistribution(std::move(w));
}

std::vector<double> ProbabilityDistribution::sorted_descending() const {
  std::vector<double> w = w_;
  std::sort(w.begin(), w.end(), std::greater<>());
  return w;
}

double shannon_entropy(const ProbabilityDistribution& p) {
  double h = 0.0;
  for (double x : p.weights())
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

double concave_sum(const ProbabilityDistribution& p, const ConcaveFunction& f) {
  double s = 0.0;
  for (double x : p.weights()) s += f(x);
  return s;
}

// --- decompositions ----------------------------------------------------------

void canonical_order(std::vector<Term>& terms) {
  std::stable_sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) {
    const double ma = std::abs(a.coefficient);
    const double mb = std::abs(b.coefficient);
    if (std::abs(ma - mb) > kTieTolerance) return ma > mb;
    return amplitudes_greater(a.vector.amplitudes(), b.vector.amplitudes());
  });
}

Decomposition::Decomposition(StateVector target, std::vector<Term> terms)
    : target_(std::move(target)), terms_(std::move(terms)) {
  require(!terms_.empty(), ErrorCode::kInvalidInput, "decomposition: no terms");
  CVector sum = CVector::Zero(target_.dim());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const Term& t = terms_[i];
    require(t.vector.structure() == target_.structure(), ErrorCode::kStructural,
            "decomposition: term structure differs from target");
    require(std::abs(t.coefficient) > tol::kConstruct, ErrorCode::kInvalidInput,
            "decomposition: zero coefficient");
    for (std::size_t j = 0; j <= i; ++j) {
      const Complex g = terms_[j].vector.inner(t.vector);
      const double expect = i == j ? 1.0 : 0.0;
      require(std::abs(g - expect) <= tol::kVerify, ErrorCode::kInvalidInput,
              "decomposition: term vectors not orthonormal");
    }
    sum += t.coefficient * t.vector.amplitudes();
  }
  require((sum - target_.amplitudes()).norm() <= tol::kVerify, ErrorCode::kInvalidInput,
          "decomposition: terms do not reconstruct the target");
}

Decomposition Decomposition::trivial(const StateVector& psi) {
  const double n = psi.norm();
  require(n > tol::kConstruct, ErrorCode::kInvalidInput, "decomposition: zero vector");
  return Decomposition(psi, {Term{Complex(n, 0.0), psi.normalized()}});
}

ProbabilityDistribution Decomposition::weights() const {
  std::vector<double> w;
  w.reserve(terms_.size());
  for (const Term& t : terms_) w.push_back(std::norm(t.coefficient));
  return ProbabilityDistribution::normalized(std::move(w));
}

CVector Decomposition::reconstruct() const {
  CVector sum = CVector::Zero(target_.dim());
  for (const Term& t : terms_) sum += t.coefficient * t.vector.amplitudes();
  return sum;
}

double iu_entropy(const Decomposition& d) { return shannon_entropy(d.weights()); }

bool is_product_decomposition(const Decomposition& d, const HilbertStructure& structure) {
  require(structure == d.target().structure(), ErrorCode::kStructural, "is_product: structure mismatch");
  return std::all_of(d.terms().begin(), d.terms().end(),
                     [](const Term& t) { return factorize_product(t.vector).has_value(); });
}

bool is_n_orthogonal(const Decomposition& d, const HilbertStructure& structure) {
  require(structure == d.target().structure(), ErrorCode::kStructural, "is_n_orthogonal: structure mismatch");
  std::vector<std::vector<CVector>> factors;
  for (const Term& t : d.terms()) {
    auto f = factorize_product(t.vector);
    if (!f) return false;
    for (CVector& v : *f) v /= v.norm();
    factors.push_back(std::move(*f));
  }
  for (std::size_t i = 0; i < factors.size(); ++i)
    for (std::size_t j = i + 1; j < factors.size(); ++j)
      for (std::size_t f = 0; f < factors[i].size(); ++f)
        if (std::abs(factors[i][f].dot(factors[j][f])) > tol::kVerify) return false;
  return true;
}

std::string to_string(Method m) { return m == Method::kTheorem4 ? "theorem4" : "brute_force"; }

std::string to_string(MinimizationStatus s) {
  switch (s) {
    case MinimizationStatus::kResolved: return "resolved";
    case MinimizationStatus::kHeuristic: return "heuristic";
    case MinimizationStatus::kUnresolved: return "unresolved";
  }
  return "unknown";
}

// --- bi-orthogonal route -----------------------------------------------------

namespace {

struct Schmidt {
  CMatrix u;  // left vectors, columns
  RVector s;
  CMatrix w;  // right vectors (conjugated SVD right factors)
};

Schmidt schmidt(const StateVector& psi, const CoarseGraining& grain) {
  const Svd d = svd(bipartite_matrix(psi, grain));
  Eigen::Index rank = 0;
  while (rank < d.s.size() && d.s(rank) > tol::kConstruct) ++rank;
  return Schmidt{d.u.leftCols(rank), d.s.head(rank), d.v.leftCols(rank).conjugate()};
}

// Index ranges [begin, end) of singular values chained within 1e-8.
std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters(const RVector& s) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  Eigen::Index begin = 0;
  for (Eigen::Index i = 1; i <= s.size(); ++i) {
    if (i == s.size() || s(i - 1) - s(i) >= tol::kVerify) {
      out.emplace_back(begin, i);
      begin = i;
    }
  }
  return out;
}

std::vector<Term> schmidt_terms(const StateVector& psi, const CoarseGraining& grain, const Schmidt& sd) {
  std::vector<Term> terms;
  for (Eigen::Index k = 0; k < sd.s.size(); ++k) {
    CVector v = join_bipartite(sd.u.col(k), sd.w.col(k), psi.structure(), grain);
    v /= v.norm();
    terms.push_back(Term{Complex(sd.s(k), 0.0), StateVector(psi.structure(), std::move(v))});
  }
  canonical_order(terms);
  return terms;
}

// Greedily picks r orthonormal vectors of span(`span`) that lie closest to
// the candidate columns.
CMatrix rebase_within(const CMatrix& span, const CMatrix& candidates) {
  const Eigen::Index r = span.cols();
  CMatrix chosen(span.rows(), 0);
  for (Eigen::Index t = 0; t < r; ++t) {
    CVector best;
    double best_norm = 0.0;
    for (Eigen::Index c = 0; c < candidates.cols(); ++c) {
      CVector proj = span * (span.adjoint() * candidates.col(c));
      if (chosen.cols() > 0) proj -= chosen * (chosen.adjoint() * proj);
      const double n = proj.norm();
      if (n > best_norm + kTieTolerance) {
        best_norm = n;
        best = proj / n;
      }
    }
    if (best_norm < tol::kVerify) return span;
    apply_phase_convention(best);
    chosen.conservativeResize(Eigen::NoChange, chosen.cols() + 1);
    chosen.col(chosen.cols() - 1) = best;
  }
  return chosen;
}

// Product basis of a block built from the eigenbases of each factor's
// reduced state, enumerated in the block's tensor order.
CMatrix local_eigen_basis(const StateVector& piece, const std::vector<int>& block) {
  const HilbertStructure& s = piece.structure();
  const int n = s.factor_count();
  CMatrix basis = CMatrix::Ones(1, 1);
  for (int f : block) {
    std::vector<int> rest;
    for (int g = 0; g < n; ++g)
      if (g != f) rest.push_back(g);
    const Operator rho = partial_trace(piece, CoarseGraining({f}, rest, n), Block::kLeft);
    const Eigh e = eigh(rho.entries());
    CMatrix local = e.vectors.rowwise().reverse();  // descending eigenvalues
    for (Eigen::Index c = 0; c < local.cols(); ++c) {
      CVector v = local.col(c);
      apply_phase_convention(v);
      local.col(c) = v;
    }
    basis = kron(basis, local);
  }
  return basis;
}

enum class Side { kLeft, kRight };

Schmidt rebase_clusters(const StateVector& psi, const CoarseGraining& grain, const Schmidt& sd, Side side,
                        bool local) {
  Schmidt out = sd;
  for (const auto& [b, e] : clusters(sd.s)) {
    const Eigen::Index r = e - b;
    if (r < 2) continue;
    const CMatrix uc = sd.u.middleCols(b, r);
    const CMatrix wc = sd.w.middleCols(b, r);
    CMatrix cands;
    const std::vector<int>& block = side == Side::kLeft ? grain.left() : grain.right();
    if (local) {
      CVector piece = CVector::Zero(psi.dim());
      for (Eigen::Index k = b; k < e; ++k)
        piece += sd.s(k) * join_bipartite(sd.u.col(k), sd.w.col(k), psi.structure(), grain);
      cands = local_eigen_basis(StateVector(psi.structure(), piece), block);
    } else {
      const Eigen::Index dim = side == Side::kLeft ? uc.rows() : wc.rows();
      cands = CMatrix::Identity(dim, dim);
    }
    if (side == Side::kLeft) {
      const CMatrix u2 = rebase_within(uc, cands);
      const CMatrix g = uc.adjoint() * u2;
      out.u.middleCols(b, r) = u2;
      out.w.middleCols(b, r) = wc * g.conjugate();
    } else {
      const CMatrix w2 = rebase_within(wc, cands);
      const CMatrix g = (wc.adjoint() * w2).conjugate();
      out.w.middleCols(b, r) = w2;
      out.u.middleCols(b, r) = uc * g;
    }
  }
  return out;
}

std::string degeneracy_text(const RVector& s) {
  for (Eigen::Index i = 1; i < s.size(); ++i) {
    if (s(i - 1) - s(i) < tol::kVerify) {
      std::ostringstream os;
      os.precision(12);
      os << "degenerate coefficients " << s(i - 1) << " and " << s(i) << " (difference below 1e-8)";
      return os.str();
    }
  }
  return {};
}

DecompositionResult make_result(Decomposition d, Method method, bool unique, std::optional<std::string> note,
                                MinimizationStatus status, std::optional<CoarseGraining> grain) {
  const double h = iu_entropy(d);
  return DecompositionResult{std::move(d), h, method, unique, std::move(note), status, std::move(grain)};
}

}  // namespace

DecompositionResult bi_orthogonal_decomposition(const StateVector& psi, const CoarseGraining& grain) {
  require(psi.is_normalized(), ErrorCode::kInvalidInput, "bi_orthogonal_decomposition: state not normalized");
  const Schmidt sd = schmidt(psi, grain);
  const std::string note = degeneracy_text(sd.s);
  return make_result(Decomposition(psi, schmidt_terms(psi, grain, sd)), Method::kTheorem4, note.empty(),
                     note.empty() ? std::nullopt : std::optional<std::string>(note), MinimizationStatus::kResolved,
                     grain);
}

DecompositionResult preferred_decomposition(const StateVector& psi, const HilbertStructure& structure,
                                            const SearchBudget& budget) {
  require(psi.structure() == structure, ErrorCode::kStructural, "preferred_decomposition: structure mismatch");
  require(structure.factor_count() >= 2, ErrorCode::kStructural,
          "preferred_decomposition: needs at least two factors");
  require(psi.is_normalized(), ErrorCode::kInvalidInput, "preferred_decomposition: state not normalized");

  for (const CoarseGraining& grain : CoarseGraining::all_bipartitions(structure.factor_count())) {
    const Schmidt sd = schmidt(psi, grain);
    const std::string note = degeneracy_text(sd.s);
    std::vector<Schmidt> candidates{sd};
    if (!note.empty()) {
      candidates.push_back(rebase_clusters(psi, grain, sd, Side::kLeft, false));
      candidates.push_back(rebase_clusters(psi, grain, sd, Side::kRight, false));
      candidates.push_back(rebase_clusters(psi, grain, sd, Side::kLeft, true));
      candidates.push_back(rebase_clusters(psi, grain, sd, Side::kRight, true));
    }
    for (const Schmidt& c : candidates) {
      Decomposition d(psi, schmidt_terms(psi, grain, c));
      if (!is_product_decomposition(d, structure)) continue;
      // beyond two factors an n-orthogonal decomposition is unique even when
      // coefficients repeat
      const bool unique = note.empty() || (structure.factor_count() > 2 && is_n_orthogonal(d, structure));
      return make_result(std::move(d), Method::kTheorem4, unique,
                         note.empty() ? std::nullopt : std::optional<std::string>(note),
                         MinimizationStatus::kResolved, grain);
    }
  }
  return brute_force_min_entropy(psi, structure, budget);
}

// --- majorization ------------------------------------------------------------

namespace {
constexpr double kPrefixSlack = 1e-12;
}

bool majorizes(const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  const std::size_t n = std::max(p.size(), q.size());
  const std::vector<double> a = p.padded(n).sorted_descending();
  const std::vector<double> b = q.padded(n).sorted_descending();
  double sa = 0.0;
  double sb = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    sa += a[l];
    sb += b[l];
    if (sa < sb - kPrefixSlack) return false;
  }
  return true;
}

bool check_prefix_dominance(const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  require(p.size() == q.size(), ErrorCode::kStructural, "check_prefix_dominance: length mismatch");
  const std::vector<double> b = q.sorted_descending();
  double sa = 0.0;
  double sb = 0.0;
  for (std::size_t l = 0; l < p.size(); ++l) {
    sa += p[l];
    sb += b[l];
    if (sa < sb - kPrefixSlack) return false;
  }
  return true;
}

ProbabilityDistribution apply_doubly_stochastic(const ProbabilityDistribution& p, const CMatrix& u) {
  require(u.rows() == u.cols() && static_cast<std::size_t>(u.rows()) == p.size(), ErrorCode::kStructural,
          "apply_doubly_stochastic: dimension mismatch");
  require(is_unitary(u, tol::kVerify), ErrorCode::kStructural, "apply_doubly_stochastic: matrix not unitary");
  std::vector<double> out(p.size(), 0.0);
  for (Eigen::Index j = 0; j < u.rows(); ++j)
    for (Eigen::Index k = 0; k < u.cols(); ++k) out[static_cast<std::size_t>(j)] += std::norm(u(j, k)) * p[static_cast<std::size_t>(k)];
  return ProbabilityDistribution::normalized(std::move(out));
}

Decomposition a_orthogonal_from_product(const Decomposition& d, const CoarseGraining& grain) {
  const StateVector& psi = d.target();
  std::vector<Term> sorted = d.terms();
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Term& a, const Term& b) { return std::abs(a.coefficient) > std::abs(b.coefficient); });
  std::vector<CVector> lefts;
  for (const Term& t : sorted) {
    const Svd f = svd(bipartite_matrix(t.vector, grain));
    require(f.s.size() < 2 || f.s(1) <= tol::kVerify, ErrorCode::kInvalidInput,
            "a_orthogonal_from_product: term is entangled across the coarse-graining");
    lefts.push_back(f.u.col(0));
  }
  const GramSchmidtResult gs = gram_schmidt_independent(lefts);
  const CMatrix m = bipartite_matrix(psi, grain);
  std::vector<Term> terms;
  for (const CVector& mu : gs.basis) {
    const CVector nu = m.transpose() * mu.conjugate();
    const double c = nu.norm();
    if (c <= tol::kConstruct) continue;
    CVector v = join_bipartite(mu, nu / c, psi.structure(), grain);
    terms.push_back(Term{Complex(c, 0.0), StateVector(psi.structure(), std::move(v))});
  }
  canonical_order(terms);
  return Decomposition(psi, std::move(terms));
}

}  // namespace modalsim
