#pragma once

// OLS with optional two-way within transformation, score construction
// X_i * uhat_i, and sandwich inference with any of the variance estimators.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetvar/estimators.hpp"
#include "hetvar/kernel.hpp"
#include "hetvar/numerics.hpp"
#include "hetvar/panel.hpp"

namespace hetvar {

struct Design {
  std::vector<double> y;  // length n
  ScoreMatrix X;          // n x v regressor matrix
  PanelIndex panel;
  std::vector<std::string> names;  // column names, optional

  void validate() const;
};

/// Two-way within transformation of y and every X column. Balanced panels
/// (all G*T cells present with a common cell count) use the closed form
/// x - xbar_g - xbar_t + xbar; unbalanced panels alternate cluster/period
/// demeaning until the largest change drops below 1e-10 (500 sweep cap).
Design within_transform(const Design& d);

struct FitResult {
  std::vector<double> beta;
  std::vector<double> residuals;
  SymMatrix bread;     // sum_i X_i X_i'
  ScoreMatrix scores;  // rows X_i * uhat_i
};

FitResult ols_fit(const Design& d);

struct BandwidthPolicy {
  bool auto_select = true;
  KernelKind kind = KernelKind::Triangular;
  std::size_t bandwidth = 0;  // used when auto_select is false

  static BandwidthPolicy automatic(KernelKind kind = KernelKind::Triangular) {
    return {true, kind, 0};
  }
  static BandwidthPolicy fixed(std::size_t m, KernelKind kind = KernelKind::Triangular) {
    return {false, kind, m};
  }
};

struct CoefficientInference {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;       // against a zero null
  double p = 0.0;       // two-sided normal
  double ci_lo = 0.0;   // estimate -/+ 1.959964 * se
  double ci_hi = 0.0;
};

struct InferenceResult {
  Method method;
  std::vector<CoefficientInference> coef;
  KernelSpec kernel_used;       // bandwidth actually applied (0 for EHW/CR/CGM)
  bool bandwidth_was_auto = false;
  bool bandwidth_zero_variance = false;
  double meat_min_eigenvalue = 0.0;
  SymMatrix meat;               // the score-sum variance estimate
  SymMatrix coef_variance;      // bread^{-1} meat bread^{-1}
};

/// Thrown when a sandwich variance has a non-positive diagonal entry
/// (possible for the CGM/CHS estimators).
class NegativeVarianceError : public std::runtime_error {
 public:
  NegativeVarianceError(const std::string& what, std::size_t coefficient, double min_eig)
      : std::runtime_error(what), coefficient_(coefficient), min_eigenvalue_(min_eig) {}
  std::size_t coefficient() const { return coefficient_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  std::size_t coefficient_;
  double min_eigenvalue_;
};

InferenceResult sandwich(const PanelIndex& panel, const FitResult& fit, Method method,
                         const BandwidthPolicy& bw, bool chs_drop_adjustment = false,
                         const std::vector<std::string>& names = {});

/// Two-sided normal critical value at level alpha (1.959964 at 0.05).
double normal_critical_value(double alpha);
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace hetvar
