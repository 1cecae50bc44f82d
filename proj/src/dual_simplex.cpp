#include "hublf/dual_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hublf/error.hpp"

namespace hublf {

namespace {

constexpr int kRefactorInterval = 80;
constexpr double kPrimalTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-14;
constexpr double kBox = 1e7;  // artificial bound replacing an infinite one
constexpr int kStallLimit = 150;

double logical_lower(const LinearRow& row) {
  return row.sense == RowSense::LessEqual ? -kInf : row.rhs;
}
double logical_upper(const LinearRow& row) {
  return row.sense == RowSense::GreaterEqual ? kInf : row.rhs;
}

}  // namespace

DualSimplex::DualSimplex(const MilpProblem& problem) : n_(problem.num_variables()), m_(0) {
  cols_.resize(static_cast<std::size_t>(n_));
  for (const Variable& v : problem.variables()) {
    cost_.push_back(v.cost);
    lower_.push_back(v.lower);
    upper_.push_back(v.upper);
  }
  status_.assign(static_cast<std::size_t>(n_), kAtLower);
  boxed_.assign(static_cast<std::size_t>(n_), false);
  x_.assign(static_cast<std::size_t>(n_), 0.0);
  d_ = cost_;
  where_.assign(static_cast<std::size_t>(n_), -1);
  dse_.assign(static_cast<std::size_t>(n_), 1.0);
  for (int j = 0; j < n_; ++j) place_nonbasic(j);
  for (const LinearRow& row : problem.rows()) add_row(row);
}

void DualSimplex::add_row(const LinearRow& input) {
  LinearRow row = input;
  row.normalize();
  const int i = m_;
  std::vector<Entry> entries;
  for (std::size_t t = 0; t < row.index.size(); ++t) {
    const int j = row.index[t];
    if (j < 0 || j >= n_) throw ModelError("row references unknown variable " + std::to_string(j));
    entries.push_back({j, row.value[t]});
    cols_[static_cast<std::size_t>(j)].push_back({i, row.value[t]});
  }
  rows_.push_back(std::move(entries));
  cost_.push_back(0.0);
  lower_.push_back(logical_lower(row));
  upper_.push_back(logical_upper(row));
  status_.push_back(kBasic);
  boxed_.push_back(false);
  x_.push_back(0.0);
  d_.push_back(0.0);
  where_.push_back(i);
  dse_.push_back(1.0);
  head_.push_back(n_ + i);
  ++m_;
  need_refactor_ = true;
}

double DualSimplex::nonbasic_value(int j) const {
  const auto u = static_cast<std::size_t>(j);
  switch (status_[u]) {
    case kAtLower: return std::isfinite(lower_[u]) ? lower_[u] : -kBox;
    case kAtUpper: return std::isfinite(upper_[u]) ? upper_[u] : kBox;
    default: return 0.0;
  }
}

void DualSimplex::place_nonbasic(int j) {
  const auto u = static_cast<std::size_t>(j);
  const bool lo = std::isfinite(lower_[u]);
  const bool hi = std::isfinite(upper_[u]);
  if (lo && hi) {
    status_[u] = (lower_[u] == upper_[u] || d_[u] >= 0.0) ? kAtLower : kAtUpper;
  } else if (lo) {
    status_[u] = kAtLower;
  } else if (hi) {
    status_[u] = kAtUpper;
  } else {
    status_[u] = kAtZero;
  }
  x_[u] = nonbasic_value(j);
}

void DualSimplex::set_bounds(int j, double lower, double upper) {
  const auto u = static_cast<std::size_t>(j);
  lower_[u] = lower;
  upper_[u] = upper;
  if (status_[u] != kBasic) {
    const std::int8_t s = status_[u];
    if (s == kAtLower && std::isfinite(lower)) {
      x_[u] = lower;
    } else if (s == kAtUpper && std::isfinite(upper)) {
      x_[u] = upper;
    } else {
      place_nonbasic(j);
    }
    if (lower == upper) {
      status_[u] = kAtLower;
      x_[u] = lower;
    }
  }
}

LpBasis DualSimplex::basis() const {
  LpBasis b;
  b.status = status_;
  return b;
}

void DualSimplex::set_basis(const LpBasis& basis) {
  const auto total = static_cast<std::size_t>(n_ + m_);
  std::vector<std::int8_t> st = basis.status;
  if (st.size() < static_cast<std::size_t>(n_) || st.size() > total) return;
  while (st.size() < total) st.push_back(kBasic);
  if (std::count(st.begin(), st.end(), kBasic) != m_) return;
  if (st == status_ && !need_refactor_) return;  // already installed; the factorization holds
  status_ = std::move(st);
  int pos = 0;
  std::fill(where_.begin(), where_.end(), -1);
  for (int j = 0; j < n_ + m_; ++j) {
    const auto u = static_cast<std::size_t>(j);
    if (status_[u] == kBasic) {
      head_[static_cast<std::size_t>(pos)] = j;
      where_[u] = pos++;
    } else {
      const std::int8_t s = status_[u];
      if ((s == kAtLower && !std::isfinite(lower_[u])) || (s == kAtUpper && !std::isfinite(upper_[u])) ||
          (s == kAtZero && (std::isfinite(lower_[u]) || std::isfinite(upper_[u]))))
        place_nonbasic(j);
      x_[u] = nonbasic_value(j);
    }
  }
  std::fill(dse_.begin(), dse_.end(), 1.0);
  need_refactor_ = true;
}

// ---------------------------------------------------------------------------
// Product-form inverse

void DualSimplex::push_eta(int pivot_row, const std::vector<double>& column) {
  eta_row_.push_back(pivot_row);
  eta_pivot_.push_back(column[static_cast<std::size_t>(pivot_row)]);
  eta_start_.push_back(static_cast<int>(eta_entries_.size()));
  for (int i = 0; i < m_; ++i) {
    const double v = column[static_cast<std::size_t>(i)];
    if (i != pivot_row && std::abs(v) > kDropTol) eta_entries_.push_back({i, v});
  }
  ++etas_since_refactor_;
}

void DualSimplex::ftran(std::vector<double>& v) const {
  const std::size_t count = eta_row_.size();
  for (std::size_t t = 0; t < count; ++t) {
    const auto r = static_cast<std::size_t>(eta_row_[t]);
    if (v[r] == 0.0) continue;
    const double vr = v[r] / eta_pivot_[t];
    v[r] = vr;
    const auto end = t + 1 < count ? static_cast<std::size_t>(eta_start_[t + 1]) : eta_entries_.size();
    for (auto e = static_cast<std::size_t>(eta_start_[t]); e < end; ++e)
      v[static_cast<std::size_t>(eta_entries_[e].index)] -= eta_entries_[e].value * vr;
  }
}

void DualSimplex::btran(std::vector<double>& v) const {
  const std::size_t count = eta_row_.size();
  for (std::size_t t = count; t-- > 0;) {
    const auto r = static_cast<std::size_t>(eta_row_[t]);
    double s = v[r];
    const auto end = t + 1 < count ? static_cast<std::size_t>(eta_start_[t + 1]) : eta_entries_.size();
    for (auto e = static_cast<std::size_t>(eta_start_[t]); e < end; ++e)
      s -= eta_entries_[e].value * v[static_cast<std::size_t>(eta_entries_[e].index)];
    v[r] = s / eta_pivot_[t];
  }
}

void DualSimplex::refactor() {
  eta_row_.clear();
  eta_pivot_.clear();
  eta_start_.clear();
  eta_entries_.clear();
  etas_since_refactor_ = 0;

  const auto m = static_cast<std::size_t>(m_);
  std::vector<bool> assigned(m, false);
  std::vector<int> head(m, -1);
  std::vector<double> col(m, 0.0);

  auto logical_pivot = [&](std::size_t i) {
    eta_row_.push_back(static_cast<int>(i));
    eta_pivot_.push_back(-1.0);
    eta_start_.push_back(static_cast<int>(eta_entries_.size()));
    assigned[i] = true;
    head[i] = n_ + static_cast<int>(i);
  };

  std::vector<int> structural;
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[static_cast<std::size_t>(j)] != kBasic) continue;
    if (j >= n_)
      logical_pivot(static_cast<std::size_t>(j - n_));
    else
      structural.push_back(j);
  }
  std::stable_sort(structural.begin(), structural.end(), [&](int a, int b) {
    return cols_[static_cast<std::size_t>(a)].size() < cols_[static_cast<std::size_t>(b)].size();
  });

  // Columns are transformed sparsely: `nz` lists the touched rows of `col`.
  std::vector<int> nz;
  std::vector<char> mark(m, 0);
  auto touch = [&](int i) {
    if (!mark[static_cast<std::size_t>(i)]) {
      mark[static_cast<std::size_t>(i)] = 1;
      nz.push_back(i);
    }
  };
  for (int j : structural) {
    nz.clear();
    for (const Entry& e : cols_[static_cast<std::size_t>(j)]) {
      col[static_cast<std::size_t>(e.index)] += e.value;
      touch(e.index);
    }
    const std::size_t count = eta_row_.size();
    for (std::size_t t = 0; t < count; ++t) {
      const auto r = static_cast<std::size_t>(eta_row_[t]);
      if (col[r] == 0.0) continue;
      const double vr = col[r] / eta_pivot_[t];
      col[r] = vr;
      const auto end = t + 1 < count ? static_cast<std::size_t>(eta_start_[t + 1]) : eta_entries_.size();
      for (auto e = static_cast<std::size_t>(eta_start_[t]); e < end; ++e) {
        const int i = eta_entries_[e].index;
        col[static_cast<std::size_t>(i)] -= eta_entries_[e].value * vr;
        touch(i);
      }
    }
    int best = -1;
    double best_abs = 1e-7;
    for (int i : nz)
      if (!assigned[static_cast<std::size_t>(i)] && std::abs(col[static_cast<std::size_t>(i)]) > best_abs) {
        best_abs = std::abs(col[static_cast<std::size_t>(i)]);
        best = i;
      }
    if (best < 0) {
      // Dependent column: drop it from the basis; a logical fills the hole below.
      status_[static_cast<std::size_t>(j)] = kAtLower;
      place_nonbasic(j);
    } else {
      eta_row_.push_back(best);
      eta_pivot_.push_back(col[static_cast<std::size_t>(best)]);
      eta_start_.push_back(static_cast<int>(eta_entries_.size()));
      std::sort(nz.begin(), nz.end());
      for (int i : nz) {
        const double v = col[static_cast<std::size_t>(i)];
        if (i != best && std::abs(v) > kDropTol) eta_entries_.push_back({i, v});
      }
      assigned[static_cast<std::size_t>(best)] = true;
      head[static_cast<std::size_t>(best)] = j;
    }
    for (int i : nz) {
      col[static_cast<std::size_t>(i)] = 0.0;
      mark[static_cast<std::size_t>(i)] = 0;
    }
  }
  for (std::size_t i = 0; i < m; ++i)
    if (!assigned[i]) {
      status_[static_cast<std::size_t>(n_) + i] = kBasic;
      logical_pivot(i);
    }
  head_ = std::move(head);
  std::fill(where_.begin(), where_.end(), -1);
  for (std::size_t i = 0; i < m; ++i) where_[static_cast<std::size_t>(head_[i])] = static_cast<int>(i);
  etas_since_refactor_ = 0;
  need_refactor_ = false;
}

void DualSimplex::compute_primal() {
  const auto m = static_cast<std::size_t>(m_);
  std::vector<double> rhs(m, 0.0);
  for (int j = 0; j < n_ + m_; ++j) {
    const auto u = static_cast<std::size_t>(j);
    if (status_[u] == kBasic) continue;
    x_[u] = nonbasic_value(j);
    if (x_[u] == 0.0) continue;
    if (j < n_) {
      for (const Entry& e : cols_[u]) rhs[static_cast<std::size_t>(e.index)] -= e.value * x_[u];
    } else {
      rhs[static_cast<std::size_t>(j - n_)] += x_[u];
    }
  }
  ftran(rhs);
  for (std::size_t i = 0; i < m; ++i) x_[static_cast<std::size_t>(head_[i])] = rhs[i];
}

void DualSimplex::compute_duals() {
  const auto m = static_cast<std::size_t>(m_);
  std::vector<double> pi(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) pi[i] = cost_[static_cast<std::size_t>(head_[i])];
  btran(pi);
  for (int j = 0; j < n_ + m_; ++j) {
    const auto u = static_cast<std::size_t>(j);
    if (status_[u] == kBasic) {
      d_[u] = 0.0;
    } else if (j < n_) {
      double s = cost_[u];
      for (const Entry& e : cols_[u]) s -= pi[static_cast<std::size_t>(e.index)] * e.value;
      d_[u] = s;
    } else {
      d_[u] = pi[static_cast<std::size_t>(j - n_)];
    }
  }
}

bool DualSimplex::repair_dual_infeasibility() {
  double scale = 1.0;
  for (double c : cost_) scale = std::max(scale, std::abs(c));
  const double tol = 1e-9 * scale;
  bool changed = false;
  for (int j = 0; j < n_ + m_; ++j) {
    const auto u = static_cast<std::size_t>(j);
    const std::int8_t s = status_[u];
    if (s == kBasic || lower_[u] == upper_[u]) continue;
    if (s == kAtLower && d_[u] < -tol) {
      status_[u] = kAtUpper;
      if (!std::isfinite(upper_[u])) boxed_[u] = true;
      changed = true;
    } else if (s == kAtUpper && d_[u] > tol) {
      status_[u] = kAtLower;
      if (!std::isfinite(lower_[u])) boxed_[u] = true;
      changed = true;
    } else if (s == kAtZero && std::abs(d_[u]) > tol) {
      status_[u] = d_[u] > 0.0 ? kAtLower : kAtUpper;
      boxed_[u] = true;
      changed = true;
    }
    if (changed) x_[u] = nonbasic_value(j);
  }
  return changed;
}

int DualSimplex::choose_leaving_row() const {
  int best = -1;
  double best_score = 0.0;
  int best_var = n_ + m_;
  for (int i = 0; i < m_; ++i) {
    const auto j = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
    const double v = x_[j];
    double infeas = 0.0;
    if (v < lower_[j] - kPrimalTol * (1.0 + std::abs(lower_[j])))
      infeas = lower_[j] - v;
    else if (v > upper_[j] + kPrimalTol * (1.0 + std::abs(upper_[j])))
      infeas = v - upper_[j];
    if (infeas <= 0.0) continue;
    if (bland_) {
      if (static_cast<int>(j) < best_var) {
        best_var = static_cast<int>(j);
        best = i;
      }
      continue;
    }
    const double score = infeas * infeas / dse_[j];
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

double DualSimplex::dual_objective() const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j) s += cost_[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
  return s;
}

double DualSimplex::objective() const { return dual_objective(); }

std::vector<double> DualSimplex::primal() const {
  return {x_.begin(), x_.begin() + n_};
}

LpStatus DualSimplex::solve(double cutoff) {
  last_iterations_ = 0;
  double scale = 1.0;
  for (double c : cost_) scale = std::max(scale, std::abs(c));
  const double dual_tol = 1e-9 * scale;

  auto fresh_start = [&] {
    refactor();
    compute_duals();
    repair_dual_infeasibility();
    compute_primal();
  };
  if (need_refactor_ || etas_since_refactor_ >= kRefactorInterval) {
    fresh_start();
  } else {
    // Only bounds changed since the last solve: the factorization still holds.
    compute_duals();
    repair_dual_infeasibility();
    compute_primal();
  }

  const auto total = static_cast<std::size_t>(n_ + m_);
  std::vector<double> rho(static_cast<std::size_t>(m_)), col, tau;
  std::vector<double> arow(total, 0.0);
  std::vector<int> touched;
  std::vector<char> is_touched(total, 0);

  const long max_iter = 200000 + 50L * static_cast<long>(total);
  bool verified = true;
  int stall = 0;
  int numeric_retries = 0;
  double last_obj = -kInf;
  bland_ = false;

  while (true) {
    if (last_iterations_ > max_iter) return LpStatus::IterationLimit;
    if (etas_since_refactor_ >= kRefactorInterval) fresh_start();

    const int r = choose_leaving_row();
    if (r < 0) {
      if (!verified) {
        fresh_start();
        verified = true;
        continue;
      }
      for (int j = 0; j < n_ + m_; ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (status_[u] == kBasic) continue;
        if ((status_[u] == kAtLower && !std::isfinite(lower_[u])) ||
            (status_[u] == kAtUpper && !std::isfinite(upper_[u])) || status_[u] == kAtZero) {
          if (std::abs(x_[u]) >= kBox * 0.5) return LpStatus::Unbounded;
        }
      }
      return LpStatus::Optimal;
    }

    const double obj = dual_objective();
    if (std::isfinite(cutoff) && obj > cutoff + 1e-9 * (1.0 + std::abs(cutoff))) {
      bool any_boxed = false;
      for (std::size_t u = 0; u < total && !any_boxed; ++u)
        any_boxed = boxed_[u] && status_[u] != kBasic &&
                    ((status_[u] == kAtLower && !std::isfinite(lower_[u])) ||
                     (status_[u] == kAtUpper && !std::isfinite(upper_[u])) || status_[u] == kAtZero);
      if (!any_boxed) return LpStatus::Cutoff;
    }
    if (obj > last_obj + 1e-12 * (1.0 + std::abs(obj))) {
      last_obj = obj;
      stall = 0;
      bland_ = false;
    } else if (++stall > kStallLimit) {
      bland_ = true;
    }

    const auto leave = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
    const double xb = x_[leave];
    const bool to_lower = xb < lower_[leave];
    const double bound = to_lower ? lower_[leave] : upper_[leave];
    const double sign = to_lower ? -1.0 : 1.0;

    std::fill(rho.begin(), rho.end(), 0.0);
    rho[static_cast<std::size_t>(r)] = 1.0;
    btran(rho);

    for (int j : touched) {
      arow[static_cast<std::size_t>(j)] = 0.0;
      is_touched[static_cast<std::size_t>(j)] = 0;
    }
    touched.clear();
    for (int i = 0; i < m_; ++i) {
      const double ri = rho[static_cast<std::size_t>(i)];
      if (std::abs(ri) <= kDropTol) continue;
      for (const Entry& e : rows_[static_cast<std::size_t>(i)]) {
        const auto u = static_cast<std::size_t>(e.index);
        if (status_[u] == kBasic) continue;
        if (!is_touched[u]) {
          is_touched[u] = 1;
          touched.push_back(e.index);
        }
        arow[u] += ri * e.value;
      }
      const auto lu = static_cast<std::size_t>(n_ + i);
      if (status_[lu] != kBasic) {
        if (!is_touched[lu]) {
          is_touched[lu] = 1;
          touched.push_back(n_ + i);
        }
        arow[lu] = -ri;
      }
    }

    // Harris two-pass ratio test.
    double bound_ratio = kInf;
    for (int j : touched) {
      const auto u = static_cast<std::size_t>(j);
      if (lower_[u] == upper_[u]) continue;
      const double ahat = sign * arow[u];
      const std::int8_t s = status_[u];
      if (s == kAtLower && ahat > kPivotTol)
        bound_ratio = std::min(bound_ratio, (d_[u] + dual_tol) / ahat);
      else if (s == kAtUpper && ahat < -kPivotTol)
        bound_ratio = std::min(bound_ratio, (d_[u] - dual_tol) / ahat);
      else if (s == kAtZero && std::abs(ahat) > kPivotTol)
        bound_ratio = std::min(bound_ratio, (std::abs(d_[u]) + dual_tol) / std::abs(ahat));
    }
    int q = -1;
    double best_piv = 0.0;
    for (int j : touched) {
      const auto u = static_cast<std::size_t>(j);
      if (lower_[u] == upper_[u]) continue;
      const double ahat = sign * arow[u];
      const std::int8_t s = status_[u];
      double ratio;
      if (s == kAtLower && ahat > kPivotTol)
        ratio = d_[u] / ahat;
      else if (s == kAtUpper && ahat < -kPivotTol)
        ratio = d_[u] / ahat;
      else if (s == kAtZero && std::abs(ahat) > kPivotTol)
        ratio = std::abs(d_[u]) / std::abs(ahat);
      else
        continue;
      if (ratio > bound_ratio) continue;
      if (bland_) {
        if (q < 0 || j < q) q = j;
      } else if (std::abs(ahat) > best_piv) {
        best_piv = std::abs(ahat);
        q = j;
      }
    }
    if (q < 0) {
      if (!verified) {
        fresh_start();
        verified = true;
        continue;
      }
      return LpStatus::Infeasible;
    }
    const auto uq = static_cast<std::size_t>(q);

    col.assign(static_cast<std::size_t>(m_), 0.0);
    if (q < n_) {
      for (const Entry& e : cols_[uq]) col[static_cast<std::size_t>(e.index)] += e.value;
    } else {
      col[static_cast<std::size_t>(q - n_)] = -1.0;
    }
    ftran(col);
    const double alpha_r = col[static_cast<std::size_t>(r)];
    if (std::abs(alpha_r - arow[uq]) > 1e-7 * (1.0 + std::abs(alpha_r)) || std::abs(alpha_r) < kPivotTol) {
      if (++numeric_retries > 20) return LpStatus::NumericFailure;
      fresh_start();
      continue;
    }

    tau = rho;
    ftran(tau);

    const double theta_p = (xb - bound) / alpha_r;
    for (int i = 0; i < m_; ++i) {
      const double ci = col[static_cast<std::size_t>(i)];
      if (ci != 0.0) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= theta_p * ci;
    }
    x_[uq] += theta_p;
    x_[leave] = bound;

    double theta_d = d_[uq] / arow[uq];
    if (sign * theta_d < 0.0) theta_d = 0.0;  // Harris may pick a slightly wrong-signed d
    for (int j : touched) d_[static_cast<std::size_t>(j)] -= theta_d * arow[static_cast<std::size_t>(j)];
    d_[uq] = 0.0;
    d_[leave] = -theta_d;

    const double wr = dse_[leave];
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double ci = col[static_cast<std::size_t>(i)];
      if (ci == 0.0) continue;
      const double ratio = ci / alpha_r;
      const auto bi = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
      dse_[bi] = std::max(dse_[bi] - 2.0 * ratio * tau[static_cast<std::size_t>(i)] + ratio * ratio * wr,
                          std::max(ratio * ratio, 1e-8));
    }
    dse_[uq] = std::max(wr / (alpha_r * alpha_r), 1e-8);

    status_[uq] = kBasic;
    status_[leave] = to_lower ? kAtLower : kAtUpper;
    head_[static_cast<std::size_t>(r)] = q;
    where_[uq] = r;
    where_[leave] = -1;
    push_eta(r, col);
    verified = false;
    ++last_iterations_;
    ++total_iterations_;
  }
}

}  // namespace hublf
