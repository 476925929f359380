#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "certikit/error.hpp"

namespace certikit {

/// Absolute tolerance on constraint residuals and pivot selection.
inline constexpr double kLpTolerance = 1e-9;

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_inf(std::span<const double> a) noexcept {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

namespace lp {

/// Outcome of a Phase-I solve of {A x = c, x >= 0}, A given by its columns.
struct PhaseOneResult {
  bool feasible = false;
  Vec x;       // basic feasible solution (length n) when feasible
  Vec farkas;  // when infeasible: farkas.A_j >= 0 for all j and farkas.c < 0
  std::size_t pivots = 0;
};

namespace detail {

// Solves M y = r in place (M row-major m x m). Returns false when singular.
inline bool solve_dense(std::vector<double> M, std::vector<double>& r, std::size_t m) {
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < m; ++i) {
      if (std::abs(M[i * m + col]) > std::abs(M[piv * m + col])) piv = i;
    }
    if (std::abs(M[piv * m + col]) < 1e-14) return false;
    if (piv != col) {
      for (std::size_t j = 0; j < m; ++j) std::swap(M[col * m + j], M[piv * m + j]);
      std::swap(r[col], r[piv]);
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (i == col) continue;
      const double f = M[i * m + col] / M[col * m + col];
      if (f == 0.0) continue;
      for (std::size_t j = col; j < m; ++j) M[i * m + j] -= f * M[col * m + j];
      r[i] -= f * r[col];
    }
  }
  for (std::size_t i = 0; i < m; ++i) r[i] /= M[i * m + i];
  return true;
}

}  // namespace detail

/// Phase-I simplex with unit-cost artificials and Bland's rule. The dual of
/// the terminal basis yields the Farkas vector on infeasibility.
inline PhaseOneResult phase_one(std::span<const Vec> columns, std::span<const double> rhs,
                                double tol = kLpTolerance) {
  const std::size_t m = rhs.size();
  const std::size_t n = columns.size();
  for (const auto& c : columns) {
    if (c.size() != m) throw InputError("LP column dimension mismatch");
  }
  PhaseOneResult res;
  res.x.assign(n, 0.0);
  if (m == 0) {
    res.feasible = true;
    return res;
  }

  const std::size_t width = n + m + 1;  // original | artificial | rhs
  const std::size_t rhs_col = n + m;
  std::vector<double> T(m * width, 0.0);
  std::vector<double> sign(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (rhs[i] < 0.0) sign[i] = -1.0;
    for (std::size_t j = 0; j < n; ++j) T[i * width + j] = sign[i] * columns[j][i];
    T[i * width + n + i] = 1.0;
    T[i * width + rhs_col] = sign[i] * rhs[i];
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

  // Reduced costs of the Phase-I objective sum(artificials).
  std::vector<double> cost(width, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += T[i * width + j];
    cost[j] = -s;
  }
  {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += T[i * width + rhs_col];
    cost[rhs_col] = -s;
  }

  const std::size_t max_pivots = 50 * (n + m) + 1000;
  while (true) {
    std::size_t enter = width;
    for (std::size_t j = 0; j < n; ++j) {
      if (cost[j] < -tol) {
        enter = j;
        break;
      }
    }
    if (enter == width) break;

    std::size_t leave = m;
    double best_ratio = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double a = T[i * width + enter];
      if (a <= tol) continue;
      const double ratio = T[i * width + rhs_col] / a;
      if (leave == m || ratio < best_ratio - tol) {
        leave = i;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + tol) {
        // Bland: among tied rows the smallest basic variable leaves.
        if (basis[i] < basis[leave]) leave = i;
        best_ratio = std::min(best_ratio, ratio);
      }
    }
    if (leave == m) {
      // A negative reduced cost column with no positive entry cannot occur in
      // Phase I (objective bounded below by 0) unless numerics broke down.
      throw NumericalError("phase-one simplex: unbounded ray in a bounded problem");
    }

    if (++res.pivots > max_pivots) throw NumericalError("phase-one simplex: pivot limit exceeded");

    const double piv = T[leave * width + enter];
    for (std::size_t j = 0; j < width; ++j) T[leave * width + j] /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double f = T[i * width + enter];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width; ++j) T[i * width + j] -= f * T[leave * width + j];
      double& b = T[i * width + rhs_col];
      if (b < 0.0 && b > -10 * tol) b = 0.0;
    }
    {
      const double f = cost[enter];
      for (std::size_t j = 0; j < width; ++j) cost[j] -= f * T[leave * width + j];
    }
    basis[leave] = enter;
  }

  double rhs_scale = 1.0;
  for (double v : rhs) rhs_scale = std::max(rhs_scale, std::abs(v));
  const double objective = -cost[rhs_col];
  res.feasible = objective <= tol * rhs_scale;

  if (res.feasible) {
    // Re-solve B x_B = c on the original data for an accurate BFS.
    std::vector<double> B(m * m, 0.0);
    std::vector<double> r(m);
    for (std::size_t i = 0; i < m; ++i) r[i] = sign[i] * rhs[i];
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t i = 0; i < m; ++i) {
        B[i * m + k] = basis[k] < n ? sign[i] * columns[basis[k]][i] : (basis[k] - n == i ? 1.0 : 0.0);
      }
    }
    const bool solved = detail::solve_dense(B, r, m);
    for (std::size_t k = 0; k < m; ++k) {
      if (basis[k] >= n) continue;
      double v = solved ? r[k] : T[k * width + rhs_col];
      if (v < tol) v = 0.0;
      res.x[basis[k]] = v;
    }
  } else {
    // Phase-I duals y_i = sum_k c_B(k) (B^-1)_{k,i}; B^-1 sits in the
    // artificial block. Farkas vector f = -S y in the original row signs.
    res.farkas.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double y = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        if (basis[k] >= n) y += T[k * width + n + i];
      }
      res.farkas[i] = -sign[i] * y;
    }
  }
  return res;
}

}  // namespace lp

/// Generators z_i (signed points y_i x_i) and a target x.
struct ConicInstance {
  std::vector<Vec> generators;
  Vec target;

  std::size_t dimension() const noexcept { return target.size(); }

  void validate() const {
    if (target.empty()) throw InputError("conic instance needs dimension >= 1");
    for (const auto& z : generators) {
      if (z.size() != target.size()) throw InputError("generator dimension mismatch");
    }
  }

  /// max_inf |sum alpha_i z_i - x|
  double residual(std::span<const double> alpha) const {
    Vec r(target.size(), 0.0);
    for (std::size_t i = 0; i < generators.size(); ++i) {
      if (alpha[i] == 0.0) continue;
      for (std::size_t k = 0; k < r.size(); ++k) r[k] += alpha[i] * generators[i][k];
    }
    double m = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) m = std::max(m, std::abs(r[k] - target[k]));
    return m;
  }
};

struct ConicSolution {
  bool feasible = false;
  Vec coefficients;                 // alpha >= 0 when feasible
  std::vector<std::size_t> support;  // {i : alpha_i > tol}
  Vec separator;                    // w with w.z_i >= 0, w.x < 0 when infeasible
  double residual = 0.0;
};

namespace detail {

inline std::vector<std::size_t> support_of(std::span<const double> alpha, double tol) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] > tol) s.push_back(i);
  }
  return s;
}

inline double instance_scale(const ConicInstance& inst) {
  double s = std::max(1.0, norm_inf(inst.target));
  for (const auto& z : inst.generators) s = std::max(s, norm_inf(z));
  return s;
}

}  // namespace detail

/// Decides x in cone(z_1..z_n). Feasible results are basic (support <= d);
/// infeasible results carry a separating direction.
inline ConicSolution conic_membership(const ConicInstance& inst, double tol = kLpTolerance) {
  inst.validate();
  const std::size_t d = inst.dimension();
  const double scale = detail::instance_scale(inst);
  ConicSolution sol;

  if (norm_inf(inst.target) == 0.0) {
    sol.feasible = true;
    sol.coefficients.assign(inst.generators.size(), 0.0);
    return sol;
  }

  auto res = lp::phase_one(inst.generators, inst.target, tol);
  if (res.feasible) {
    sol.feasible = true;
    sol.coefficients = std::move(res.x);
    sol.support = detail::support_of(sol.coefficients, tol);
    for (std::size_t i = 0; i < sol.coefficients.size(); ++i) {
      if (sol.coefficients[i] <= tol) sol.coefficients[i] = 0.0;
    }
    if (sol.support.size() > d) {
      throw NumericalError("conic membership: basic solution support " + std::to_string(sol.support.size()) +
                           " exceeds dimension " + std::to_string(d));
    }
    sol.residual = inst.residual(sol.coefficients);
    if (sol.residual > 10 * tol * scale) {
      throw NumericalError("conic membership: residual " + std::to_string(sol.residual) + " above tolerance");
    }
    return sol;
  }

  Vec w = std::move(res.farkas);
  const double wn = norm_inf(w);
  if (wn == 0.0) throw NumericalError("conic membership: degenerate separator");
  for (double& v : w) v /= wn;
  for (const auto& z : inst.generators) {
    if (dot(w, z) < -10 * tol * scale) throw NumericalError("conic membership: separator violates a generator");
  }
  if (!(dot(w, inst.target) < 0.0)) throw NumericalError("conic membership: separator does not cut the target");
  sol.separator = std::move(w);
  return sol;
}

/// Shrinks the support of a conic combination to at most d generators by
/// stepping along linear dependencies of the support.
inline ConicSolution caratheodory_reduce(const ConicInstance& inst, std::span<const double> coefficients,
                                         double tol = kLpTolerance) {
  inst.validate();
  const std::size_t d = inst.dimension();
  const std::size_t n = inst.generators.size();
  if (coefficients.size() != n) throw InputError("coefficient count != generator count");
  const double scale = detail::instance_scale(inst);

  Vec alpha(coefficients.begin(), coefficients.end());
  for (double& a : alpha) {
    if (a < -tol) throw InputError("conic coefficients must be nonnegative");
    if (a <= tol) a = 0.0;
  }
  const double start_residual = inst.residual(alpha);
  if (start_residual > 10 * tol * scale) throw InputError("coefficients do not reproduce the target");

  auto support = detail::support_of(alpha, tol);
  while (support.size() > d) {
    // Row-reduce the d x k matrix of support generators to find beta != 0
    // with sum beta_j z_{s_j} = 0.
    const std::size_t k = support.size();
    std::vector<double> M(d * k);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < k; ++c) M[r * k + c] = inst.generators[support[c]][r];
    }
    std::vector<std::size_t> pivot_col_of_row;
    std::vector<char> is_pivot(k, 0);
    std::size_t row = 0;
    for (std::size_t c = 0; c < k && row < d; ++c) {
      std::size_t best = row;
      for (std::size_t r = row + 1; r < d; ++r) {
        if (std::abs(M[r * k + c]) > std::abs(M[best * k + c])) best = r;
      }
      if (std::abs(M[best * k + c]) <= tol * scale) continue;
      for (std::size_t j = 0; j < k; ++j) std::swap(M[row * k + j], M[best * k + j]);
      const double p = M[row * k + c];
      for (std::size_t j = 0; j < k; ++j) M[row * k + j] /= p;
      for (std::size_t r = 0; r < d; ++r) {
        if (r == row) continue;
        const double f = M[r * k + c];
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < k; ++j) M[r * k + j] -= f * M[row * k + j];
      }
      pivot_col_of_row.push_back(c);
      is_pivot[c] = 1;
      ++row;
    }
    std::size_t free_col = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (!is_pivot[c]) {
        free_col = c;
        break;
      }
    }
    if (free_col == k) {
      throw NumericalError("caratheodory reduction: no dependency found on support of size " + std::to_string(k) +
                           " in dimension " + std::to_string(d));
    }
    Vec beta(k, 0.0);
    beta[free_col] = 1.0;
    for (std::size_t r = 0; r < pivot_col_of_row.size(); ++r) beta[pivot_col_of_row[r]] = -M[r * k + free_col];

    bool any_positive = std::any_of(beta.begin(), beta.end(), [&](double b) { return b > tol; });
    if (!any_positive) {
      for (double& b : beta) b = -b;
    }
    double t = 0.0;
    std::size_t argmin = k;
    for (std::size_t j = 0; j < k; ++j) {
      if (beta[j] <= tol) continue;
      const double ratio = alpha[support[j]] / beta[j];
      if (argmin == k || ratio < t) {
        t = ratio;
        argmin = j;
      }
    }
    if (argmin == k) throw NumericalError("caratheodory reduction: dependency has no positive entry");
    for (std::size_t j = 0; j < k; ++j) {
      double& a = alpha[support[j]];
      a -= t * beta[j];
      if (a <= tol) a = 0.0;
    }
    alpha[support[argmin]] = 0.0;
    auto next = detail::support_of(alpha, tol);
    if (next.size() >= support.size()) throw NumericalError("caratheodory reduction made no progress");
    support = std::move(next);
  }

  ConicSolution sol;
  sol.feasible = true;
  sol.coefficients = std::move(alpha);
  sol.support = std::move(support);
  sol.residual = inst.residual(sol.coefficients);
  if (sol.residual > start_residual + static_cast<double>(d) * tol * scale) {
    throw NumericalError("caratheodory reduction: residual grew beyond d*tol");
  }
  return sol;
}

/// Linear constraint w.v >= 0 or w.v <= -1 appended to a consistency query.
struct ExtraConstraint {
  enum class Relation { nonnegative, at_most_minus_one };
  Vec vector;
  Relation relation = Relation::nonnegative;
};

struct ConsistencyResult {
  bool feasible = false;
  Vec witness;  // w when feasible
  // When infeasible: indices (positives first, then negatives, then the extra
  // constraint) whose constraints alone are already contradictory.
  std::vector<std::size_t> conflict;
};

/// Feasibility of {w.p >= 0 for p in positives, w.q <= -1 for q in negatives}.
/// Solved through the Farkas-dual standard form: infeasible iff some
/// lambda, mu >= 0 have sum lambda_i p_i - sum mu_j q_j = 0 and sum mu_j = 1.
inline ConsistencyResult halfspace_consistency_lp(std::span<const Vec> positives, std::span<const Vec> negatives,
                                                  const std::optional<ExtraConstraint>& extra = std::nullopt,
                                                  double tol = kLpTolerance) {
  std::size_t d = 0;
  if (!positives.empty()) d = positives.front().size();
  else if (!negatives.empty()) d = negatives.front().size();
  else if (extra) d = extra->vector.size();
  ConsistencyResult out;
  if (d == 0) {
    out.feasible = true;
    return out;
  }

  std::vector<Vec> cols;
  cols.reserve(positives.size() + negatives.size() + 1);
  double scale = 1.0;
  auto push = [&](std::span<const double> v, bool negative) {
    if (v.size() != d) throw InputError("halfspace consistency: dimension mismatch");
    Vec c(d + 1);
    for (std::size_t k = 0; k < d; ++k) c[k] = negative ? -v[k] : v[k];
    c[d] = negative ? 1.0 : 0.0;
    scale = std::max(scale, norm_inf(v));
    cols.push_back(std::move(c));
  };
  for (const auto& p : positives) push(p, false);
  for (const auto& q : negatives) push(q, true);
  if (extra) push(extra->vector, extra->relation == ExtraConstraint::Relation::at_most_minus_one);

  Vec rhs(d + 1, 0.0);
  rhs[d] = 1.0;
  auto res = lp::phase_one(cols, rhs, tol);
  if (res.feasible) {
    for (std::size_t j = 0; j < res.x.size(); ++j) {
      if (res.x[j] > tol) out.conflict.push_back(j);
    }
    return out;
  }
  const double t = res.farkas[d];
  if (!(t < 0.0)) throw NumericalError("halfspace consistency: Farkas vector has no negative scale");
  Vec w(res.farkas.begin(), res.farkas.begin() + static_cast<std::ptrdiff_t>(d));
  for (double& v : w) v /= -t;
  for (const auto& c : cols) {
    const double s = dot(std::span<const double>(c.data(), d), w);
    const double need = c[d];  // 0 for >= 0 rows, 1 for <= -1 rows (signed)
    if (s < need - 10 * tol * scale * std::max(1.0, norm_inf(w))) {
      throw NumericalError("halfspace consistency: witness fails verification");
    }
  }
  out.feasible = true;
  out.witness = std::move(w);
  // A basic solution leaves some positives exactly on the boundary, where
  // rounding can flip the predicted sign. Prefer a witness with margin when
  // one exists (positives as w.p >= 1); forced zeros keep the plain one.
  if (!positives.empty()) {
    std::vector<Vec> margin(negatives.begin(), negatives.end());
    for (const auto& p : positives) {
      Vec m(p.size());
      for (std::size_t k = 0; k < m.size(); ++k) m[k] = -p[k];
      margin.push_back(std::move(m));
    }
    auto strict = halfspace_consistency_lp({}, margin, extra, tol);
    if (strict.feasible) out.witness = std::move(strict.witness);
  }
  return out;
}

}  // namespace certikit
