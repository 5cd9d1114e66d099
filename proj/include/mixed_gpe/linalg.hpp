#pragma once

// Sparse symmetric linear algebra used by the solvers.
//
// Storage is Eigen's compressed sparse format. Symmetric positive definite
// systems go through a simplicial Cholesky factorization with approximate
// minimum degree ordering, or through Jacobi-preconditioned conjugate
// gradients when requested. Symmetric indefinite systems use LDL^T with a
// residual check and an LU fallback.

#include <mixed_gpe/errors.hpp>

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace mixed_gpe {

using Vector = Eigen::VectorXd;
/// Compressed column storage; for the symmetric matrices used here this is
/// the same array layout as compressed rows.
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class SpdMethod { Cholesky, ConjugateGradient };

/// Factorization (or iterative surrogate) of a symmetric positive definite matrix.
///
/// With SpdMethod::Cholesky this holds P A P^T = L L^T. Objects are
/// immutable once built except through refactor(); concurrent solve() calls
/// on one object are fine.
class SpdFactor {
public:
  explicit SpdFactor(const SparseMatrix& a, SpdMethod method = SpdMethod::Cholesky,
                     double cg_tolerance = 1e-12)
      : method_(method), cg_tolerance_(cg_tolerance) {
    if (a.rows() != a.cols()) throw InvalidConfiguration("SpdFactor: matrix is not square");
    if (method_ == SpdMethod::Cholesky) {
      llt_ = std::make_shared<Llt>();
      llt_->analyzePattern(a);
    }
    refactor(a);
  }

  /// Numeric refactorization for a matrix with the sparsity pattern seen at construction.
  void refactor(const SparseMatrix& a) {
    dim_ = a.rows();
    if (method_ == SpdMethod::Cholesky) {
      llt_->factorize(a);
      if (llt_->info() != Eigen::Success)
        throw NotSpdError("Cholesky factorization met a nonpositive pivot");
    } else {
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        if (!(a.coeff(i, i) > 0.0)) throw NotSpdError("nonpositive diagonal entry");
      matrix_ = std::make_shared<SparseMatrix>(a);
      cg_ = std::make_shared<Cg>();
      cg_->setTolerance(cg_tolerance_);
      cg_->setMaxIterations(10 * std::max<Eigen::Index>(a.rows(), 1));
      cg_->compute(*matrix_);
    }
  }

  [[nodiscard]] Vector solve(const Vector& b) const {
    if (method_ == SpdMethod::Cholesky) return llt_->solve(b);
    Vector x = cg_->solve(b);
    if (cg_->info() != Eigen::Success) throw NotSpdError("conjugate gradients did not converge");
    return x;
  }

  [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }
  [[nodiscard]] SpdMethod method() const noexcept { return method_; }

  /// Fill-reducing permutation; identity for the iterative method.
  [[nodiscard]] Eigen::VectorXi permutation() const {
    if (method_ == SpdMethod::Cholesky) return llt_->permutationP().indices();
    return Eigen::VectorXi::LinSpaced(static_cast<int>(dim_), 0, static_cast<int>(dim_) - 1);
  }

  /// Lower-triangular factor of the permuted matrix (Cholesky only).
  [[nodiscard]] SparseMatrix factor_l() const {
    if (method_ != SpdMethod::Cholesky) throw InvalidConfiguration("no explicit factor for CG");
    return llt_->matrixL();
  }

private:
  using Llt = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
  using Cg = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                      Eigen::DiagonalPreconditioner<double>>;
  SpdMethod method_;
  double cg_tolerance_;
  Eigen::Index dim_ = 0;
  std::shared_ptr<Llt> llt_;
  std::shared_ptr<SparseMatrix> matrix_;
  std::shared_ptr<Cg> cg_;
};

inline SpdFactor chol(const SparseMatrix& a) { return SpdFactor(a, SpdMethod::Cholesky); }

/// Solver for a symmetric, possibly indefinite, nonsingular matrix.
///
/// LDL^T without pivoting is tried first; if the solution misses the
/// requested normwise backward error |b - A x| / (|A| |x| + |b|) (infinity
/// norms) after one refinement sweep, the matrix is refactored with sparse LU.
/// The backward error stays meaningful for nearly singular shifted systems,
/// where the plain relative residual does not.
class SymmetricSolver {
public:
  explicit SymmetricSolver(double residual_tolerance = 1e-12) : tolerance_(residual_tolerance) {}

  void factor(const SparseMatrix& a) {
    matrix_ = &a;
    norm_ = 0.0;
    Vector rows = Vector::Zero(a.rows());
    for (int k = 0; k < a.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(a, k); it; ++it) rows[it.row()] += std::abs(it.value());
    if (rows.size()) norm_ = rows.maxCoeff();
    if (!ldlt_) {
      ldlt_ = std::make_unique<Ldlt>();
      ldlt_->analyzePattern(a);
    }
    ldlt_->factorize(a);
    ldlt_ok_ = ldlt_->info() == Eigen::Success;
    lu_ready_ = false;
  }

  [[nodiscard]] Vector solve(const Vector& b) {
    if (ldlt_ok_) {
      Vector x = ldlt_->solve(b);
      Vector r = b - (*matrix_) * x;
      x += ldlt_->solve(r);
      r = b - (*matrix_) * x;
      const double scale = norm_ * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
      if (x.allFinite() && r.lpNorm<Eigen::Infinity>() <= tolerance_ * std::max(scale, 1e-300)) return x;
    }
    if (!lu_ready_) {
      if (!lu_) {
        lu_ = std::make_unique<Lu>();
        lu_->analyzePattern(*matrix_);
      }
      lu_->factorize(*matrix_);
      if (lu_->info() != Eigen::Success) throw Error("sparse LU failed: matrix is singular");
      lu_ready_ = true;
      ldlt_ok_ = false;
    }
    Vector x = lu_->solve(b);
    Vector r = b - (*matrix_) * x;
    x += lu_->solve(r);
    return x;
  }

  [[nodiscard]] bool used_lu() const noexcept { return lu_ready_; }

private:
  using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
  using Lu = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;
  double tolerance_;
  double norm_ = 0.0;
  const SparseMatrix* matrix_ = nullptr;
  std::unique_ptr<Ldlt> ldlt_;
  std::unique_ptr<Lu> lu_;
  bool ldlt_ok_ = false;
  bool lu_ready_ = false;
};

/// Position of entry (row, col) in the value array of a compressed matrix, or -1.
inline Eigen::Index value_index(const SparseMatrix& a, Eigen::Index row, Eigen::Index col) {
  const auto* begin = a.innerIndexPtr() + a.outerIndexPtr()[col];
  const auto* end = a.innerIndexPtr() + a.outerIndexPtr()[col + 1];
  const auto* it = std::lower_bound(begin, end, static_cast<int>(row));
  if (it == end || *it != row) return -1;
  return it - a.innerIndexPtr();
}

/// Builds a compressed matrix whose structural pattern holds every given
/// position (explicit zeros are kept).
inline SparseMatrix pattern_from(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& entries) {
  SparseMatrix a(rows, cols);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  return a;
}

/// Applies (D + C^T B^{-1} C)^{-1} to rhs by the Woodbury identity
///   D^{-1} rhs - D^{-1} C^T S^{-1} C D^{-1} rhs,   S = B + C D^{-1} C^T,
/// with `s_factor` a factorization of S. C has one row per facet and one
/// column per element.
inline Vector woodbury_apply(const Vector& d, const SparseMatrix& c, const SpdFactor& s_factor,
                             const Vector& rhs) {
  if (d.size() != c.cols() || rhs.size() != c.cols())
    throw InvalidConfiguration("woodbury_apply: dimension mismatch");
  if ((d.array() <= 0.0).any()) throw DiagonalSingularity("woodbury_apply: diagonal must be positive");
  const Vector d_inv_rhs = rhs.cwiseQuotient(d);
  const Vector y = s_factor.solve(c * d_inv_rhs);
  return d_inv_rhs - (c.transpose() * y).cwiseQuotient(d);
}

/// Keeps S = B + C D^{-1} C^T in a fixed sparsity pattern so that a change of
/// D only rewrites values and refactors numerically.
class WoodburySolver {
public:
  WoodburySolver(const SparseMatrix& b, const SparseMatrix& c, SpdMethod method = SpdMethod::Cholesky)
      : c_(c), method_(method) {
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(b.nonZeros()));
    for (int k = 0; k < b.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(b, k); it; ++it) entries.emplace_back(it.row(), it.col(), 0.0);
    column_rows_.resize(static_cast<std::size_t>(c.cols()));
    for (int k = 0; k < c.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(c, k); it; ++it)
        column_rows_[k].push_back({static_cast<int>(it.row()), it.value()});
    for (const auto& col : column_rows_)
      for (const auto& [i, ci] : col)
        for (const auto& [j, cj] : col) entries.emplace_back(i, j, 0.0);
    s_ = pattern_from(b.rows(), b.cols(), entries);

    b_slots_.reserve(static_cast<std::size_t>(b.nonZeros()));
    for (int k = 0; k < b.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(b, k); it; ++it)
        b_slots_.push_back({value_index(s_, it.row(), it.col()), it.value()});
    for (const auto& col : column_rows_) {
      std::vector<Eigen::Index> slots;
      for (const auto& [i, ci] : col)
        for (const auto& [j, cj] : col) slots.push_back(value_index(s_, i, j));
      element_slots_.push_back(std::move(slots));
    }
  }

  /// Sets D (strictly positive) and refactors S.
  void set_diagonal(const Vector& d) {
    if (d.size() != c_.cols()) throw InvalidConfiguration("WoodburySolver: diagonal size mismatch");
    if ((d.array() <= 0.0).any()) throw DiagonalSingularity("WoodburySolver: diagonal must be positive");
    d_ = d;
    double* v = s_.valuePtr();
    std::fill(v, v + s_.nonZeros(), 0.0);
    for (const auto& [slot, value] : b_slots_) v[slot] += value;
    for (std::size_t k = 0; k < column_rows_.size(); ++k) {
      const auto& col = column_rows_[k];
      const double inv = 1.0 / d[static_cast<Eigen::Index>(k)];
      std::size_t s = 0;
      for (const auto& [i, ci] : col)
        for (const auto& [j, cj] : col) v[element_slots_[k][s++]] += ci * cj * inv;
    }
    if (!factor_) factor_ = std::make_unique<SpdFactor>(s_, method_);
    else factor_->refactor(s_);
  }

  [[nodiscard]] Vector apply(const Vector& rhs) const {
    if (!factor_) throw InvalidConfiguration("WoodburySolver: set_diagonal must be called first");
    return woodbury_apply(d_, c_, *factor_, rhs);
  }

  [[nodiscard]] const SparseMatrix& s_matrix() const noexcept { return s_; }
  [[nodiscard]] const SpdFactor& s_factor() const { return *factor_; }

private:
  const SparseMatrix& c_;
  SpdMethod method_;
  SparseMatrix s_;
  Vector d_;
  std::vector<std::vector<std::pair<int, double>>> column_rows_;
  std::vector<std::pair<Eigen::Index, double>> b_slots_;
  std::vector<std::vector<Eigen::Index>> element_slots_;
  std::unique_ptr<SpdFactor> factor_;
};

} // namespace mixed_gpe
