#include "hetvar/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hetvar {

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::outer(const std::vector<double>& x) {
  SymMatrix m(x.size());
  m.add_outer(x);
  return m;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double c) {
  for (double& v : a_) v *= c;
  return *this;
}

void SymMatrix::add_outer(const std::vector<double>& x, double c) {
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i; j < dim_; ++j) add(i, j, c * x[i] * x[j]);
}

void SymMatrix::add_sym_outer(const std::vector<double>& x, const std::vector<double>& y,
                              double c) {
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i; j < dim_; ++j) add(i, j, c * (x[i] * y[j] + y[i] * x[j]));
}

bool SymMatrix::all_finite() const {
  for (double v : a_)
    if (!std::isfinite(v)) return false;
  return true;
}

double SymMatrix::frobenius_norm() const {
  KahanSum s;
  for (double v : a_) s.add(v * v);
  return std::sqrt(s.value());
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::abs(v));
  return m;
}

double SymMatrix::spectral_norm() const {
  if (dim_ == 0) return 0.0;
  auto ev = sym_eigenvalues(*this);
  return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

std::vector<double> sym_eigenvalues(const SymMatrix& m) {
  if (!m.all_finite()) throw std::invalid_argument("sym_eigenvalues: non-finite entries");
  const std::size_t n = m.dim();
  if (n == 0) return {};
  std::vector<double> a = m.raw();
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  double norm0 = 0.0;
  for (double v : a) norm0 += v * v;
  norm0 = std::sqrt(norm0);
  const double tol = 1e-12 * std::max(norm0, 1.0);

  auto offdiag = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += at(i, j) * at(i, j);
    return std::sqrt(2.0 * s);
  };

  // Cyclic sweeps; v stays tiny so there is no need for thresholding tricks.
  for (int sweep = 0; sweep < 100 && offdiag() > tol; ++sweep) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double app = at(p, p);
        const double aqq = at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0)
                             ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                             : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }

  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

double sym_eigen_min(const SymMatrix& m) { return sym_eigenvalues(m).front(); }

bool is_psd(const SymMatrix& m, double tol) {
  if (tol < 0.0) throw std::invalid_argument("is_psd: tol must be >= 0");
  // eigenvalues carry O(eps * ||A||) roundoff; grant that on top of tol so
  // exact-rank-deficient inputs (outer products) pass at tol = 0
  const double slack = 8.0 * std::numeric_limits<double>::epsilon() * m.spectral_norm();
  return sym_eigen_min(m) >= -(tol + slack);
}

namespace {

// Plain Cholesky; returns false if a non-positive pivot shows up.
bool cholesky(const std::vector<double>& a, std::size_t n, std::vector<double>& l) {
  l.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (s <= 0.0) return false;
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return true;
}

void chol_solve_inplace(const std::vector<double>& l, std::size_t n, std::vector<double>& x,
                        std::size_t ncols) {
  // forward then backward substitution, column block at a time
  for (std::size_t c = 0; c < ncols; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i * ncols + c];
      for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * x[k * ncols + c];
      x[i * ncols + c] = s / l[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x[ii * ncols + c];
      for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * x[k * ncols + c];
      x[ii * ncols + c] = s / l[ii * n + ii];
    }
  }
}

}  // namespace

std::vector<double> solve_spd(const SymMatrix& a, const std::vector<double>& b,
                              std::size_t ncols) {
  const std::size_t n = a.dim();
  if (b.size() != n * ncols) throw std::invalid_argument("solve_spd: shape mismatch");
  if (!a.all_finite()) throw std::invalid_argument("solve_spd: non-finite entries");

  const double lam_min = sym_eigen_min(a);
  const double snorm = a.spectral_norm();
  if (!(lam_min > 1e-12 * snorm)) {
    throw SingularMatrixError(
        "solve_spd: matrix not positive definite (min eigenvalue " +
            std::to_string(lam_min) + ", spectral norm " + std::to_string(snorm) + ")",
        lam_min);
  }

  std::vector<double> l;
  if (!cholesky(a.raw(), n, l)) {
    throw SingularMatrixError("solve_spd: Cholesky breakdown", lam_min);
  }

  std::vector<double> x = b;
  chol_solve_inplace(l, n, x, ncols);

  // one refinement pass: x += A^{-1} (b - A x)
  std::vector<double> r(n * ncols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < ncols; ++c) {
      KahanSum s;
      for (std::size_t k = 0; k < n; ++k) s.add(a(i, k) * x[k * ncols + c]);
      r[i * ncols + c] = b[i * ncols + c] - s.value();
    }
  }
  chol_solve_inplace(l, n, r, ncols);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += r[k];
  return x;
}

std::vector<double> solve_spd_vec(const SymMatrix& a, const std::vector<double>& b) {
  return solve_spd(a, b, 1);
}

}  // namespace hetvar
