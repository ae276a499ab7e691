#pragma once

// Sample variance estimators for the sum of panel scores: EHW, one-way
// cluster-robust (by cluster and by period), CGM two-way, CHS with
// kernel-weighted serial terms, and the conservative heterogeneous-means
// estimator. All estimators return the unnormalized sums exactly as their
// defining displays; normalization is the consumer's business.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetvar/kernel.hpp"
#include "hetvar/numerics.hpp"
#include "hetvar/panel.hpp"

namespace hetvar {

/// n x v matrix of per-observation score vectors.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t n, std::size_t v) : n_(n), v_(v), data_(n * v, 0.0) {}
  static ScoreMatrix from_rows(const std::vector<std::vector<double>>& rows);
  /// Scalar scores (v = 1).
  static ScoreMatrix from_scalars(const std::vector<double>& values);

  std::size_t n() const { return n_; }
  std::size_t v() const { return v_; }
  double operator()(std::size_t i, std::size_t c) const { return data_[i * v_ + c]; }
  double& operator()(std::size_t i, std::size_t c) { return data_[i * v_ + c]; }
  std::vector<double> row(std::size_t i) const {
    return std::vector<double>(data_.begin() + i * v_, data_.begin() + (i + 1) * v_);
  }
  bool all_finite() const;

 private:
  std::size_t n_ = 0, v_ = 0;
  std::vector<double> data_;
};

enum class Method { EHW, CRg, CRt, CGM, CHS, HM };

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct VarianceEstimate {
  SymMatrix matrix;
  Method method = Method::EHW;
  std::optional<KernelSpec> kernel;
  bool chs_drop_adjustment = false;
  double min_eigenvalue = 0.0;
};

/// Per-period score sums y_t = sum_{i in N_t} Y_i; empty periods are zero.
struct TimeAggregate {
  std::size_t T = 0;
  std::size_t v = 0;
  std::vector<std::vector<double>> y;  // index t-1
};

TimeAggregate time_aggregate(const PanelIndex& p, const ScoreMatrix& s);

VarianceEstimate ehw(const PanelIndex& p, const ScoreMatrix& s);

enum class OneWayDim { Cluster, Time };
VarianceEstimate cr_one_way(const PanelIndex& p, const ScoreMatrix& s, OneWayDim dim);

/// CGM two-way: CR(cluster) + CR(time) - sum over (t,g) cells of the cell
/// sum outer product.
VarianceEstimate cgm(const PanelIndex& p, const ScoreMatrix& s);

/// CHS: CGM plus kernel-weighted lagged aggregate cross products, minus
/// (unless drop_adjustment) the within-cluster cross-lag double-counting
/// adjustment. Requires bandwidth <= T-1.
VarianceEstimate chs(const PanelIndex& p, const ScoreMatrix& s, const KernelSpec& k,
                     bool drop_adjustment = false);

/// Conservative heterogeneous-means estimator: CR(cluster) + CR(time) plus,
/// for every lag m <= M, w(m,M) times (both-order lagged aggregates plus
/// 2 sum_t y_t y_t'). No cell-intersection subtraction.
VarianceEstimate hm_con(const PanelIndex& p, const ScoreMatrix& s, const KernelSpec& k);

/// Independent reference: every estimator expanded as a weighted sum over
/// ordered observation pairs and evaluated by the direct O(n^2) loop.
/// Guarded at n <= 10^4.
VarianceEstimate brute_force(const PanelIndex& p, const ScoreMatrix& s, Method method,
                             const KernelSpec& k, bool chs_drop_adjustment = false);

/// Dispatch by method tag (kernel ignored for EHW/CR/CGM).
VarianceEstimate estimate(const PanelIndex& p, const ScoreMatrix& s, Method method,
                          const KernelSpec& k, bool chs_drop_adjustment = false);

namespace detail {
/// Weight of the ordered pair (i, j) in the method's expansion as
/// sum_{i,j} w_ij Y_i Y_j'. Shared by brute_force and the population
/// double-sum oracles.
double pair_weight(const PanelIndex& p, std::size_t i, std::size_t j, Method method,
                   const KernelSpec& k, bool chs_drop_adjustment);
}  // namespace detail

}  // namespace hetvar
