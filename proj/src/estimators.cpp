#include "hetvar/estimators.hpp"

#include <cctype>
#include <cmath>

namespace hetvar {

ScoreMatrix ScoreMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("ScoreMatrix: empty rows");
  ScoreMatrix s(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != s.v_) throw std::invalid_argument("ScoreMatrix: ragged rows");
    for (std::size_t c = 0; c < s.v_; ++c) s(i, c) = rows[i][c];
  }
  return s;
}

ScoreMatrix ScoreMatrix::from_scalars(const std::vector<double>& values) {
  ScoreMatrix s(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) s(i, 0) = values[i];
  return s;
}

bool ScoreMatrix::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::EHW: return "EHW";
    case Method::CRg: return "CRg";
    case Method::CRt: return "CRt";
    case Method::CGM: return "CGM";
    case Method::CHS: return "CHS";
    case Method::HM:  return "HM";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  std::string u;
  for (char c : name) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "EHW") return Method::EHW;
  if (u == "CRG" || u == "CRI") return Method::CRg;
  if (u == "CRT") return Method::CRt;
  if (u == "CGM") return Method::CGM;
  if (u == "CHS") return Method::CHS;
  if (u == "HM" || u == "CON") return Method::HM;
  return std::nullopt;
}

namespace {

void require_shapes(const PanelIndex& p, const ScoreMatrix& s) {
  if (s.n() != p.n()) throw std::invalid_argument("scores/panel dimension mismatch");
  if (!s.all_finite()) throw std::invalid_argument("scores contain non-finite entries");
}

void require_bandwidth(const PanelIndex& p, const KernelSpec& k) {
  if (p.num_periods() >= 1 && k.bandwidth >= p.num_periods())
    throw std::invalid_argument("bandwidth M must satisfy M <= T-1 (got M=" +
                                std::to_string(k.bandwidth) +
                                ", T=" + std::to_string(p.num_periods()) + ")");
}

VarianceEstimate finish(SymMatrix m, Method method, std::optional<KernelSpec> k,
                        bool drop_adj) {
  VarianceEstimate e;
  e.min_eigenvalue = sym_eigen_min(m);
  e.matrix = std::move(m);
  e.method = method;
  e.kernel = k;
  e.chs_drop_adjustment = drop_adj;
  return e;
}

// Sum of score rows over an index set, compensated per coordinate.
std::vector<double> group_sum(const ScoreMatrix& s, const std::vector<std::size_t>& idx) {
  std::vector<KahanSum> acc(s.v());
  for (std::size_t i : idx)
    for (std::size_t c = 0; c < s.v(); ++c) acc[c].add(s(i, c));
  std::vector<double> out(s.v());
  for (std::size_t c = 0; c < s.v(); ++c) out[c] = acc[c].value();
  return out;
}

SymMatrix one_way_matrix(const PanelIndex& p, const ScoreMatrix& s, OneWayDim dim) {
  SymMatrix m(s.v());
  if (dim == OneWayDim::Cluster) {
    for (std::size_t c = 0; c < p.num_clusters(); ++c)
      m.add_outer(group_sum(s, p.obs_in_cluster(c)));
  } else {
    for (std::size_t t = 1; t <= p.num_periods(); ++t)
      m.add_outer(group_sum(s, p.obs_in_period(t)));
  }
  return m;
}

SymMatrix cell_matrix(const PanelIndex& p, const ScoreMatrix& s) {
  SymMatrix m(s.v());
  for (const auto& [key, obs] : p.cells()) m.add_outer(group_sum(s, obs));
  return m;
}

// Both-order lagged cross products of per-period aggregates at lag m:
// sum_t (y_t y_{t+m}' + y_{t+m} y_t').
SymMatrix lag_cross(const TimeAggregate& ta, std::size_t m) {
  SymMatrix out(ta.v);
  for (std::size_t t = 1; t + m <= ta.T; ++t)
    out.add_sym_outer(ta.y[t - 1], ta.y[t + m - 1]);
  return out;
}

// Within-cluster cross-lag adjustment at lag m:
// sum_t sum_g (c_{t,g} c_{t+m,g}' + c_{t+m,g} c_{t,g}') over nonempty cells.
SymMatrix cell_lag_cross(const PanelIndex& p, const ScoreMatrix& s, std::size_t m) {
  SymMatrix out(s.v());
  for (const auto& [key, obs] : p.cells()) {
    const auto [t, g] = key;
    const auto& other = p.obs_in_cell(t + m, g);
    if (other.empty()) continue;
    out.add_sym_outer(group_sum(s, obs), group_sum(s, other));
  }
  return out;
}

}  // namespace

TimeAggregate time_aggregate(const PanelIndex& p, const ScoreMatrix& s) {
  require_shapes(p, s);
  TimeAggregate ta;
  ta.T = p.num_periods();
  ta.v = s.v();
  ta.y.resize(ta.T);
  for (std::size_t t = 1; t <= ta.T; ++t) ta.y[t - 1] = group_sum(s, p.obs_in_period(t));
  return ta;
}

VarianceEstimate ehw(const PanelIndex& p, const ScoreMatrix& s) {
  require_shapes(p, s);
  const std::size_t v = s.v();
  std::vector<KahanSum> acc(v * v);
  for (std::size_t i = 0; i < s.n(); ++i)
    for (std::size_t a = 0; a < v; ++a)
      for (std::size_t b = a; b < v; ++b) acc[a * v + b].add(s(i, a) * s(i, b));
  SymMatrix m(v);
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = a; b < v; ++b) m.set(a, b, acc[a * v + b].value());
  return finish(std::move(m), Method::EHW, std::nullopt, false);
}

VarianceEstimate cr_one_way(const PanelIndex& p, const ScoreMatrix& s, OneWayDim dim) {
  require_shapes(p, s);
  return finish(one_way_matrix(p, s, dim),
                dim == OneWayDim::Cluster ? Method::CRg : Method::CRt, std::nullopt, false);
}

VarianceEstimate cgm(const PanelIndex& p, const ScoreMatrix& s) {
  require_shapes(p, s);
  SymMatrix m = one_way_matrix(p, s, OneWayDim::Cluster);
  m += one_way_matrix(p, s, OneWayDim::Time);
  m -= cell_matrix(p, s);
  return finish(std::move(m), Method::CGM, std::nullopt, false);
}

VarianceEstimate chs(const PanelIndex& p, const ScoreMatrix& s, const KernelSpec& k,
                     bool drop_adjustment) {
  require_shapes(p, s);
  require_bandwidth(p, k);
  SymMatrix m = one_way_matrix(p, s, OneWayDim::Cluster);
  m += one_way_matrix(p, s, OneWayDim::Time);
  m -= cell_matrix(p, s);
  const TimeAggregate ta = time_aggregate(p, s);
  for (std::size_t lag = 1; lag <= k.bandwidth; ++lag) {
    const double w = kernel_weight(k, lag);
    if (w == 0.0) continue;
    m += lag_cross(ta, lag) * w;
    if (!drop_adjustment) m -= cell_lag_cross(p, s, lag) * w;
  }
  return finish(std::move(m), Method::CHS, k, drop_adjustment);
}

VarianceEstimate hm_con(const PanelIndex& p, const ScoreMatrix& s, const KernelSpec& k) {
  require_shapes(p, s);
  require_bandwidth(p, k);
  SymMatrix m = one_way_matrix(p, s, OneWayDim::Cluster);
  m += one_way_matrix(p, s, OneWayDim::Time);

  SymMatrix diag_total(s.v());  // sum_t y_t y_t', reused for every lag
  const TimeAggregate ta = time_aggregate(p, s);
  for (std::size_t t = 0; t < ta.T; ++t) diag_total.add_outer(ta.y[t]);

  for (std::size_t lag = 1; lag <= k.bandwidth; ++lag) {
    const double w = kernel_weight(k, lag);
    if (w < 0.0) throw std::invalid_argument("hm_con: kernel weights must be nonnegative");
    if (w == 0.0) continue;
    m += lag_cross(ta, lag) * w;
    m += diag_total * (2.0 * w);
  }
  return finish(std::move(m), Method::HM, k, false);
}

namespace detail {

double pair_weight(const PanelIndex& p, std::size_t i, std::size_t j, Method method,
                   const KernelSpec& k, bool chs_drop_adjustment) {
  const bool same_g = p.cluster_of(i) == p.cluster_of(j);
  const bool same_t = p.time_of(i) == p.time_of(j);
  const std::size_t ti = p.time_of(i), tj = p.time_of(j);
  const std::size_t lag = ti > tj ? ti - tj : tj - ti;
  double w = 0.0;
  switch (method) {
    case Method::EHW: w = (i == j) ? 1.0 : 0.0; break;
    case Method::CRg: w = same_g ? 1.0 : 0.0; break;
    case Method::CRt: w = same_t ? 1.0 : 0.0; break;
    case Method::CGM:
      w = (same_g ? 1.0 : 0.0) + (same_t ? 1.0 : 0.0) - (same_g && same_t ? 1.0 : 0.0);
      break;
    case Method::CHS:
      w = (same_g ? 1.0 : 0.0) + (same_t ? 1.0 : 0.0) - (same_g && same_t ? 1.0 : 0.0);
      if (lag >= 1 && lag <= k.bandwidth) {
        const double kw = kernel_weight(k, lag);
        w += kw;
        if (!chs_drop_adjustment && same_g) w -= kw;
      }
      break;
    case Method::HM:
      // The per-m re-added 2 sum_t y_t y_t' lands on every same-period pair
      // with total weight 2 sum_m w(m,M).
      w = (same_g ? 1.0 : 0.0) +
          (same_t ? 1.0 + 2.0 * kernel_weight_total(k) : 0.0);
      if (lag >= 1 && lag <= k.bandwidth) w += kernel_weight(k, lag);
      break;
  }
  return w;
}

}  // namespace detail

VarianceEstimate brute_force(const PanelIndex& p, const ScoreMatrix& s, Method method,
                             const KernelSpec& k, bool chs_drop_adjustment) {
  require_shapes(p, s);
  if (p.n() > 10000) throw std::invalid_argument("brute_force: n exceeds the 1e4 guard");
  if (method == Method::CHS || method == Method::HM) require_bandwidth(p, k);

  SymMatrix m(s.v());
  for (std::size_t i = 0; i < p.n(); ++i) {
    for (std::size_t j = 0; j < p.n(); ++j) {
      const double w = detail::pair_weight(p, i, j, method, k, chs_drop_adjustment);
      if (w == 0.0) continue;
      // w is symmetric in (i, j) and the loop visits both orders, so
      // accumulating the upper triangle and mirroring is exact.
      for (std::size_t a = 0; a < s.v(); ++a)
        for (std::size_t b = a; b < s.v(); ++b) m.add(a, b, w * s(i, a) * s(j, b));
    }
  }

  std::optional<KernelSpec> kk;
  if (method == Method::CHS || method == Method::HM) kk = k;
  return finish(std::move(m), method, kk, method == Method::CHS && chs_drop_adjustment);
}

VarianceEstimate estimate(const PanelIndex& p, const ScoreMatrix& s, Method method,
                          const KernelSpec& k, bool chs_drop_adjustment) {
  switch (method) {
    case Method::EHW: return ehw(p, s);
    case Method::CRg: return cr_one_way(p, s, OneWayDim::Cluster);
    case Method::CRt: return cr_one_way(p, s, OneWayDim::Time);
    case Method::CGM: return cgm(p, s);
    case Method::CHS: return chs(p, s, k, chs_drop_adjustment);
    case Method::HM:  return hm_con(p, s, k);
  }
  throw std::logic_error("estimate: unknown method");
}

}  // namespace hetvar
