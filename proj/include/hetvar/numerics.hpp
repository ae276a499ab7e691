#pragma once

// Small dense symmetric-matrix kit used throughout: outer products,
// Jacobi eigenvalues, PSD tests, SPD solves, compensated accumulation.
// Score dimensions stay tiny (v <= 20 or so); everything here is O(v^3)
// dense with no attempt at blocking.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetvar {

/// Neumaier-compensated running sum. Panels reach n ~ 1e5 in simulations
/// and the acceptance tolerances (1e-10 relative) do not survive naive
/// accumulation of that many terms.
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Dense v x v symmetric matrix, stored in full. Symmetry is enforced by
/// construction: writes go through set() which mirrors the entry.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim) : dim_(dim), a_(dim * dim, 0.0) {}

  static SymMatrix identity(std::size_t dim);
  /// x * x^T for a single vector.
  static SymMatrix outer(const std::vector<double>& x);

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    a_[i * dim_ + j] = v;
    a_[j * dim_ + i] = v;
  }
  void add(std::size_t i, std::size_t j, double v) { set(i, j, (*this)(i, j) + v); }

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double c);
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double c) { return a *= c; }

  /// Rank-one update: this += c * x x^T.
  void add_outer(const std::vector<double>& x, double c = 1.0);
  /// this += c * (x y^T + y x^T).
  void add_sym_outer(const std::vector<double>& x, const std::vector<double>& y, double c = 1.0);

  bool all_finite() const;
  double frobenius_norm() const;
  /// Largest |eigenvalue| (spectral norm for symmetric input).
  double spectral_norm() const;
  double max_abs() const;

  const std::vector<double>& raw() const { return a_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> a_;
};

/// All eigenvalues by cyclic Jacobi rotations, ascending. Converges when the
/// off-diagonal Frobenius mass drops below 1e-12 relative to the input norm.
std::vector<double> sym_eigenvalues(const SymMatrix& m);

/// Smallest eigenvalue; accurate to ~1e-10 relative to the spectral norm.
double sym_eigen_min(const SymMatrix& m);

/// True iff sym_eigen_min(m) >= -tol.
bool is_psd(const SymMatrix& m, double tol);

/// Thrown when a matrix handed to solve_spd is not usable as SPD.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// Solve a X = B for SPD a via Cholesky with one step of iterative
/// refinement. B is dim x ncols in row-major order.
/// Requires min eigenvalue > 1e-12 * spectral norm.
std::vector<double> solve_spd(const SymMatrix& a, const std::vector<double>& b,
                              std::size_t ncols);

/// Convenience: solve for a single right-hand-side vector.
std::vector<double> solve_spd_vec(const SymMatrix& a, const std::vector<double>& b);

}  // namespace hetvar
