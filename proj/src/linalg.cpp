// Copyright 2026 The modalsim Authors.
// SPDX-License-Identifier: Apache-2.0
#include "modalsim/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace modalsim {

namespace {

std::string dims_string(const std::vector<int>& dims) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ')';
  return os.str();
}

// Maps each linear index of the original layout to its index after the
// factor permutation.
std::vector<int> permutation_map(const HilbertStructure& s, std::span<const int> order) {
  const int n = s.factor_count();
  require(static_cast<int>(order.size()) == n, ErrorCode::kStructural,
          "factor permutation has wrong length");
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (int f : order) {
    require(f >= 0 && f < n && !seen[static_cast<std::size_t>(f)]++, ErrorCode::kStructural,
            "factor permutation is not a permutation");
  }
  // stride of old factor f in the new layout
  std::vector<int> new_stride(static_cast<std::size_t>(n));
  int stride = 1;
  for (int i = n - 1; i >= 0; --i) {
    new_stride[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = stride;
    stride *= s.dim(order[static_cast<std::size_t>(i)]);
  }
  std::vector<int> map(static_cast<std::size_t>(s.total_dim()));
  std::vector<int> digit(static_cast<std::size_t>(n), 0);
  for (int idx = 0; idx < s.total_dim(); ++idx) {
    int target = 0;
    for (int f = 0; f < n; ++f) target += digit[static_cast<std::size_t>(f)] * new_stride[static_cast<std::size_t>(f)];
    map[static_cast<std::size_t>(idx)] = target;
    for (int f = n - 1; f >= 0; --f) {
      if (++digit[static_cast<std::size_t>(f)] < s.dim(f)) break;
      digit[static_cast<std::size_t>(f)] = 0;
    }
  }
  return map;
}

std::vector<int> grain_order(const CoarseGraining& g) {
  std::vector<int> order = g.left();
  order.insert(order.end(), g.right().begin(), g.right().end());
  return order;
}

void check_grain(const HilbertStructure& s, const CoarseGraining& g) {
  require(g.factor_count() == s.factor_count(), ErrorCode::kStructural,
          "coarse-graining covers " + std::to_string(g.factor_count()) + " factors, structure has " +
              std::to_string(s.factor_count()));
}

int block_dim(const HilbertStructure& s, const std::vector<int>& block) {
  int d = 1;
  for (int f : block) d *= s.dim(f);
  return d;
}

}  // namespace

// --- HilbertStructure ------------------------------------------------------

HilbertStructure::HilbertStructure(std::vector<int> factor_dims) : dims_(std::move(factor_dims)) {
  require(!dims_.empty(), ErrorCode::kStructural, "structure needs at least one factor");
  for (int d : dims_) {
    require(d >= 2, ErrorCode::kStructural, "factor dimensions must be >= 2, got " + dims_string(dims_));
    require(total_ <= (1 << 24) / d, ErrorCode::kStructural, "total dimension too large");
    total_ *= d;
  }
}

HilbertStructure HilbertStructure::single(int dim) { return HilbertStructure({dim}); }

HilbertStructure HilbertStructure::subset(std::span<const int> factors) const {
  std::vector<int> d;
  for (int f : factors) {
    require(f >= 0 && f < factor_count(), ErrorCode::kStructural, "factor index out of range");
    d.push_back(dim(f));
  }
  return HilbertStructure(std::move(d));
}

HilbertStructure HilbertStructure::concat(const HilbertStructure& other) const {
  std::vector<int> d = dims_;
  d.insert(d.end(), other.dims_.begin(), other.dims_.end());
  return HilbertStructure(std::move(d));
}

std::string HilbertStructure::to_string() const { return dims_string(dims_); }

// --- StateVector / Operator --------------------------------------------------

StateVector::StateVector(HilbertStructure structure, CVector amplitudes)
    : structure_(std::move(structure)), amps_(std::move(amplitudes)) {
  require(amps_.size() == structure_.total_dim(), ErrorCode::kStructural,
          "state has " + std::to_string(amps_.size()) + " amplitudes, structure " +
              structure_.to_string() + " needs " + std::to_string(structure_.total_dim()));
  require(amps_.allFinite(), ErrorCode::kInvalidInput, "state amplitudes must be finite");
}

bool StateVector::is_normalized(double tolerance) const { return std::abs(amps_.norm() - 1.0) <= tolerance; }

StateVector StateVector::normalized() const {
  const double n = amps_.norm();
  require(n > 0.0, ErrorCode::kInvalidInput, "cannot normalize the zero vector");
  return StateVector(structure_, amps_ / n);
}

Complex StateVector::inner(const StateVector& other) const {
  require(structure_ == other.structure_, ErrorCode::kStructural, "inner product across structures");
  return amps_.dot(other.amps_);
}

StateVector StateVector::basis(const HilbertStructure& structure, int index) {
  require(index >= 0 && index < structure.total_dim(), ErrorCode::kStructural, "basis index out of range");
  CVector v = CVector::Zero(structure.total_dim());
  v(index) = 1.0;
  return StateVector(structure, std::move(v));
}

Operator::Operator(HilbertStructure structure, CMatrix entries)
    : structure_(std::move(structure)), m_(std::move(entries)) {
  require(m_.rows() == structure_.total_dim() && m_.cols() == structure_.total_dim(), ErrorCode::kStructural,
          "operator shape does not match structure " + structure_.to_string());
  require(m_.allFinite(), ErrorCode::kInvalidInput, "operator entries must be finite");
}

bool Operator::is_hermitian(double tolerance) const { return modalsim::is_hermitian(m_, tolerance); }

bool is_hermitian(const CMatrix& m, double tolerance) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tolerance;
}

bool is_unitary(const CMatrix& u, double tolerance) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tolerance;
}

// --- Projector ---------------------------------------------------------------

Projector::Projector(CMatrix basis) : basis_(std::move(basis)) {
  if (basis_.cols() > 0) {
    const CMatrix gram = basis_.adjoint() * basis_;
    require((gram - CMatrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= tol::kConstruct,
            ErrorCode::kStructural, "projector basis is not orthonormal");
  }
}

Projector Projector::zero(int dim) { return Projector(CMatrix(dim, 0)); }
Projector Projector::identity(int dim) { return Projector(CMatrix::Identity(dim, dim)); }

Projector Projector::ray(const CVector& v) {
  const double n = v.norm();
  require(n > 0.0, ErrorCode::kStructural, "ray of the zero vector");
  CMatrix b(v.size(), 1);
  b.col(0) = v / n;
  return Projector(std::move(b));
}

Projector Projector::span_of(const CMatrix& vectors, double cutoff) {
  if (vectors.cols() == 0) return zero(static_cast<int>(vectors.rows()));
  const Svd d = svd(vectors);
  int r = 0;
  while (r < d.s.size() && d.s(r) > cutoff) ++r;
  return Projector(d.u.leftCols(r));
}

Projector Projector::support(const CMatrix& hermitian, double cutoff) {
  const Eigh e = eigh(hermitian);
  std::vector<int> keep;
  for (int i = static_cast<int>(e.values.size()) - 1; i >= 0; --i)
    if (e.values(i) > cutoff) keep.push_back(i);
  CMatrix b(hermitian.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = e.vectors.col(keep[j]);
  return Projector(std::move(b));
}

CMatrix Projector::matrix() const { return basis_ * basis_.adjoint(); }

Projector Projector::complement() const { return Projector(orthonormal_completion(basis_)); }

double Projector::expectation(const CVector& psi) const {
  require(psi.size() == dim(), ErrorCode::kStructural, "expectation: dimension mismatch");
  return (basis_.adjoint() * psi).squaredNorm();
}

// --- CoarseGraining ----------------------------------------------------------

CoarseGraining::CoarseGraining(std::vector<int> left, std::vector<int> right, int factor_count)
    : left_(std::move(left)), right_(std::move(right)), n_(factor_count) {
  require(!left_.empty() && !right_.empty(), ErrorCode::kStructural, "coarse-graining blocks must be nonempty");
  std::vector<int> all = left_;
  all.insert(all.end(), right_.begin(), right_.end());
  std::sort(all.begin(), all.end());
  std::vector<int> expect(static_cast<std::size_t>(n_));
  std::iota(expect.begin(), expect.end(), 0);
  require(all == expect, ErrorCode::kStructural,
          "coarse-graining blocks must be disjoint and exhaust factors 0.." + std::to_string(n_ - 1));
  std::sort(left_.begin(), left_.end());
  std::sort(right_.begin(), right_.end());
}

std::string CoarseGraining::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < left_.size(); ++i) os << (i ? "," : "") << left_[i];
  os << "}|{";
  for (std::size_t i = 0; i < right_.size(); ++i) os << (i ? "," : "") << right_[i];
  os << '}';
  return os.str();
}

std::vector<CoarseGraining> CoarseGraining::all_bipartitions(int factor_count) {
  require(factor_count >= 2, ErrorCode::kStructural, "bipartitions need at least two factors");
  require(factor_count <= 20, ErrorCode::kStructural, "too many factors to enumerate bipartitions");
  std::vector<CoarseGraining> out;
  const unsigned full = (1u << factor_count) - 1u;
  // bit f set => factor f on the left; factor 0 always left
  for (unsigned mask = 1; mask < full; mask += 2) {
    std::vector<int> l, r;
    for (int f = 0; f < factor_count; ++f) ((mask >> f) & 1u ? l : r).push_back(f);
    out.emplace_back(std::move(l), std::move(r), factor_count);
  }
  return out;
}

// --- tensor structure ----------------------------------------------------------

CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

StateVector tensor_product(std::span<const StateVector> factors) {
  require(!factors.empty(), ErrorCode::kStructural, "tensor product of nothing");
  HilbertStructure s = factors.front().structure();
  CVector v = factors.front().amplitudes();
  for (std::size_t i = 1; i < factors.size(); ++i) {
    s = s.concat(factors[i].structure());
    v = kron(v, factors[i].amplitudes());
  }
  return StateVector(std::move(s), std::move(v));
}

StateVector tensor_product(const HilbertStructure& structure, std::span<const StateVector> factors) {
  StateVector out = tensor_product(factors);
  require(out.structure() == structure, ErrorCode::kStructural,
          "tensor factors " + out.structure().to_string() + " do not match structure " + structure.to_string());
  return out;
}

CVector permute_factors(const CVector& amps, const HilbertStructure& structure, std::span<const int> order) {
  require(amps.size() == structure.total_dim(), ErrorCode::kStructural, "permute: dimension mismatch");
  const std::vector<int> map = permutation_map(structure, order);
  CVector out(amps.size());
  for (std::size_t i = 0; i < map.size(); ++i) out(map[i]) = amps(static_cast<Eigen::Index>(i));
  return out;
}

CMatrix permute_factors(const CMatrix& op, const HilbertStructure& structure, std::span<const int> order) {
  require(op.rows() == structure.total_dim() && op.cols() == structure.total_dim(), ErrorCode::kStructural,
          "permute: dimension mismatch");
  const std::vector<int> map = permutation_map(structure, order);
  CMatrix out(op.rows(), op.cols());
  for (std::size_t i = 0; i < map.size(); ++i)
    for (std::size_t j = 0; j < map.size(); ++j)
      out(map[i], map[j]) = op(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

CMatrix bipartite_matrix(const StateVector& psi, const CoarseGraining& grain) {
  const HilbertStructure& s = psi.structure();
  check_grain(s, grain);
  const std::vector<int> order = grain_order(grain);
  const CVector p = permute_factors(psi.amplitudes(), s, order);
  const int dl = block_dim(s, grain.left());
  const int dr = block_dim(s, grain.right());
  CMatrix m(dl, dr);
  for (int i = 0; i < dl; ++i)
    for (int j = 0; j < dr; ++j) m(i, j) = p(i * dr + j);
  return m;
}

CVector join_bipartite(const CVector& left, const CVector& right, const HilbertStructure& structure,
                       const CoarseGraining& grain) {
  check_grain(structure, grain);
  require(left.size() == block_dim(structure, grain.left()) && right.size() == block_dim(structure, grain.right()),
          ErrorCode::kStructural, "join_bipartite: block dimension mismatch");
  const std::vector<int> order = grain_order(grain);
  const CVector grouped = kron(left, right);
  // grouped layout is `order`; invert the permutation
  std::vector<int> inverse(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) inverse[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  const std::vector<int> gdims = [&] {
    std::vector<int> d;
    for (int f : order) d.push_back(structure.dim(f));
    return d;
  }();
  return permute_factors(grouped, HilbertStructure(gdims), inverse);
}

Operator partial_trace(const StateVector& psi, const CoarseGraining& grain, Block keep) {
  const CMatrix m = bipartite_matrix(psi, grain);
  const CMatrix rho = keep == Block::kLeft ? CMatrix(m * m.adjoint()) : CMatrix((m.adjoint() * m).transpose());
  return Operator(psi.structure().subset(grain.block(keep)), rho);
}

Operator partial_trace(const Operator& op, const CoarseGraining& grain, Block keep) {
  const HilbertStructure& s = op.structure();
  check_grain(s, grain);
  std::vector<int> order = grain.block(keep);
  const std::vector<int>& other = grain.block(keep == Block::kLeft ? Block::kRight : Block::kLeft);
  order.insert(order.end(), other.begin(), other.end());
  const CMatrix p = permute_factors(op.entries(), s, order);
  const int dk = block_dim(s, grain.block(keep));
  const int dd = block_dim(s, other);
  CMatrix red = CMatrix::Zero(dk, dk);
  for (int a = 0; a < dk; ++a)
    for (int b = 0; b < dk; ++b) {
      Complex acc = 0.0;
      for (int c = 0; c < dd; ++c) acc += p(a * dd + c, b * dd + c);
      red(a, b) = acc;
    }
  return Operator(s.subset(grain.block(keep)), std::move(red));
}

CMatrix embed_operator(const CMatrix& local, const HilbertStructure& full, std::span<const int> factors) {
  const HilbertStructure sub = full.subset(factors);
  require(local.rows() == sub.total_dim() && local.cols() == sub.total_dim(), ErrorCode::kStructural,
          "embed_operator: local operator does not match " + sub.to_string());
  std::vector<int> order(factors.begin(), factors.end());
  std::vector<int> rest;
  for (int f = 0; f < full.factor_count(); ++f)
    if (std::find(order.begin(), order.end(), f) == order.end()) rest.push_back(f);
  int drest = 1;
  for (int f : rest) drest *= full.dim(f);
  const CMatrix grouped = kron(local, CMatrix::Identity(drest, drest));
  order.insert(order.end(), rest.begin(), rest.end());
  std::vector<int> gdims;
  for (int f : order) gdims.push_back(full.dim(f));
  std::vector<int> inverse(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) inverse[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  return permute_factors(grouped, HilbertStructure(gdims), inverse);
}

std::optional<std::vector<CVector>> factorize_product(const StateVector& psi, double tolerance) {
  const HilbertStructure& s = psi.structure();
  const int n = s.factor_count();
  if (n == 1) return std::vector<CVector>{psi.amplitudes()};
  std::vector<CVector> out;
  out.reserve(static_cast<std::size_t>(n));
  const double norm = psi.norm();
  if (norm == 0.0) return std::nullopt;
  for (int f = 0; f < n; ++f) {
    std::vector<int> rest;
    for (int g = 0; g < n; ++g)
      if (g != f) rest.push_back(g);
    const CoarseGraining cut({f}, rest, n);
    const Svd d = svd(bipartite_matrix(psi, cut));
    for (Eigen::Index k = 1; k < d.s.size(); ++k)
      if (d.s(k) > tolerance * norm) return std::nullopt;
    out.push_back(d.u.col(0));
  }
  // fold the global amplitude into the first factor
  CVector prod = out[0];
  for (int f = 1; f < n; ++f) prod = kron(prod, out[static_cast<std::size_t>(f)]);
  out[0] *= prod.dot(psi.amplitudes());
  return out;
}

// --- orthonormalization ------------------------------------------------------

Complex apply_phase_convention(CVector& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12 * std::max(1.0, scale)) {
      const Complex f = std::conj(v(i)) / std::abs(v(i));
      v *= f;
      v(i) = std::abs(v(i));
      return f;
    }
  }
  return 1.0;
}

namespace {

// Returns false when the residual of `w` against `basis` is below tolerance.
bool orthogonalize_against(const std::vector<CVector>& basis, CVector& w, double input_norm) {
  for (int pass = 0; pass < 2; ++pass)
    for (const CVector& q : basis) w -= q * q.dot(w);
  const double r = w.norm();
  if (input_norm == 0.0 || r < tol::kConstruct * input_norm) return false;
  w /= r;
  apply_phase_convention(w);
  return true;
}

}  // namespace

std::vector<CVector> gram_schmidt(std::span<const CVector> vectors) {
  std::vector<CVector> basis;
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    require(vectors[j].size() == vectors.front().size(), ErrorCode::kStructural, "gram_schmidt: ragged input");
    CVector w = vectors[j];
    if (!orthogonalize_against(basis, w, vectors[j].norm())) throw DependentVectorError(j);
    basis.push_back(std::move(w));
  }
  return basis;
}

GramSchmidtResult gram_schmidt_independent(std::span<const CVector> vectors) {
  GramSchmidtResult out;
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    require(vectors[j].size() == vectors.front().size(), ErrorCode::kStructural, "gram_schmidt: ragged input");
    CVector w = vectors[j];
    if (!orthogonalize_against(out.basis, w, vectors[j].norm())) continue;
    out.basis.push_back(std::move(w));
    out.kept.push_back(j);
  }
  return out;
}

CMatrix orthonormal_completion(const CMatrix& basis, Eigen::Index max_columns) {
  const Eigen::Index d = basis.rows();
  const Eigen::Index target = max_columns < 0 ? d : std::min(d, basis.cols() + max_columns);
  std::vector<CVector> all;
  for (Eigen::Index j = 0; j < basis.cols(); ++j) all.push_back(basis.col(j));
  std::vector<CVector> extra;
  for (Eigen::Index i = 0; i < d && static_cast<Eigen::Index>(all.size()) < target; ++i) {
    CVector w = CVector::Zero(d);
    w(i) = 1.0;
    // looser acceptance: a basis vector nearly inside the span is skipped
    for (int pass = 0; pass < 2; ++pass)
      for (const CVector& q : all) w -= q * q.dot(w);
    const double r = w.norm();
    if (r < 1e-6) continue;
    w /= r;
    all.push_back(w);
    extra.push_back(w);
  }
  CMatrix out(d, static_cast<Eigen::Index>(extra.size()));
  for (std::size_t j = 0; j < extra.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = extra[j];
  return out;
}

Eigh eigh(const CMatrix& hermitian) {
  require(hermitian.rows() == hermitian.cols(), ErrorCode::kStructural, "eigh: matrix not square");
  if (hermitian.rows() == 0) return {RVector(0), CMatrix(0, 0)};
  const CMatrix sym = 0.5 * (hermitian + hermitian.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym);
  require(solver.info() == Eigen::Success, ErrorCode::kStructural, "eigh: decomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// --- projector lattice ---------------------------------------------------------

namespace {
void check_same_dim(const Projector& p, const Projector& q) {
  require(p.dim() == q.dim(), ErrorCode::kStructural,
          "projectors act on dimensions " + std::to_string(p.dim()) + " and " + std::to_string(q.dim()));
}
}  // namespace

bool projector_leq(const Projector& p, const Projector& q) {
  check_same_dim(p, q);
  if (p.rank() == 0) return true;
  // QP = P  <=>  every basis vector of P survives Q
  const CMatrix qp = q.basis() * (q.basis().adjoint() * p.basis());
  return (qp - p.basis()).norm() < tol::kVerify;
}

bool projector_orthogonal(const Projector& p, const Projector& q) {
  check_same_dim(p, q);
  if (p.rank() == 0 || q.rank() == 0) return true;
  return (q.basis().adjoint() * p.basis()).norm() < tol::kVerify;
}

bool projector_equal(const Projector& p, const Projector& q) {
  return p.rank() == q.rank() && projector_leq(p, q) && projector_leq(q, p);
}

Projector projector_intersection(const Projector& p, const Projector& q) {
  check_same_dim(p, q);
  if (p.rank() == 0 || q.rank() == 0) return Projector::zero(p.dim());
  const int d = p.dim();
  const CMatrix m = 2.0 * CMatrix::Identity(d, d) - p.matrix() - q.matrix();
  const Eigh e = eigh(m);
  std::vector<int> keep;
  for (int i = 0; i < d; ++i)
    if (e.values(i) < tol::kVerify) keep.push_back(i);
  CMatrix b(d, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = e.vectors.col(keep[j]);
  return Projector(std::move(b));
}

Projector projector_join(const Projector& p, const Projector& q) {
  check_same_dim(p, q);
  CMatrix cols(p.dim(), p.rank() + q.rank());
  cols << p.basis(), q.basis();
  return Projector::span_of(cols, 1e-7);
}

}  // namespace modalsim
