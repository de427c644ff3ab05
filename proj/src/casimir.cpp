#include "qsu11/casimir.hpp"

#include <cmath>

namespace qsu11 {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

int pow_m1(long e) { return (e % 2 == 0) ? 1 : -1; }

double sqrt1pk(GridPoint g, double q) { return std::sqrt(1.0 + kappa(g.value(q))); }
}  // namespace

double inner(const TruncatedVector& a, const TruncatedVector& b) {
  const TruncatedVector& small = a.coef.size() <= b.coef.size() ? a : b;
  const TruncatedVector& big = a.coef.size() <= b.coef.size() ? b : a;
  double acc = 0.0;
  for (const auto& [k, v] : small.coef) acc += v * big.at(k);
  return acc;
}

bool subspace_contains(const SubspaceIndex& idx, GridPoint z) {
  if (!z.in_iq() || z.sgn != idx.eps) return false;
  GridPoint image{idx.eta, idx.m + idx.p_exp + z.exp};
  return image.in_iq();
}

std::vector<GridPoint> subspace_grid(const SubspaceIndex& idx, int kmax) {
  std::vector<GridPoint> out;
  for (int k = -kmax; k <= kmax; ++k) {
    GridPoint z{idx.eps, k};
    if (subspace_contains(idx, z)) out.push_back(z);
  }
  return out;
}

BasisVector subspace_basis_vector(const SubspaceIndex& idx, GridPoint z) {
  if (!subspace_contains(idx, z))
    throw std::domain_error("subspace_basis_vector: z outside J(p,m,eps,eta)");
  return BasisVector{-idx.m, GridPoint{idx.eta, idx.m + idx.p_exp + z.exp}, z};
}

std::pair<SubspaceIndex, GridPoint> subspace_of(const BasisVector& f) {
  SubspaceIndex idx;
  idx.m = -f.m;
  idx.eps = f.t.sgn;
  idx.eta = f.p.sgn;
  idx.p_exp = f.p.exp - idx.m - f.t.exp;
  return {idx, f.t};
}

// ---------------------------------------------------------------------------
// generator actions

TruncatedVector k0_apply(const TruncatedVector& v, const QParam& qp) {
  return k0_power_apply(v, 1, qp);
}

TruncatedVector k0_power_apply(const TruncatedVector& v, int power, const QParam& qp) {
  TruncatedVector out;
  for (const auto& [f, c] : v.coef) {
    double ev = std::pow(qp.q, 0.5 * (-f.m + f.p.exp - f.t.exp) * power);
    out.add(f, c * ev);
  }
  return out;
}

TruncatedVector e0_apply(const TruncatedVector& v, const QParam& qp) {
  const double q = qp.q;
  const double denom = q - 1.0 / q;
  TruncatedVector out;
  for (const auto& [f, c] : v.coef) {
    // sgn(t) q^{-(m-1)/2} |p/t|^{1/2} sqrt(1+kappa(t/q)) f_{m-1, p, t/q}
    {
      GridPoint tq{f.t.sgn, f.t.exp - 1};
      if (tq.in_iq()) {
        double coef = f.t.sgn * std::pow(q, -0.5 * (f.m - 1) + 0.5 * (f.p.exp - f.t.exp)) *
                      sqrt1pk(tq, q) / denom;
        out.add(BasisVector{f.m - 1, f.p, tq}, c * coef);
      }
    }
    // - sgn(p) q^{(m-1)/2} |t/p|^{1/2} sqrt(1+kappa(p)) f_{m-1, qp, t}
    {
      GridPoint pq{f.p.sgn, f.p.exp + 1};
      double coef = -f.p.sgn * std::pow(q, 0.5 * (f.m - 1) + 0.5 * (f.t.exp - f.p.exp)) *
                    sqrt1pk(f.p, q) / denom;
      out.add(BasisVector{f.m - 1, pq, f.t}, c * coef);
    }
  }
  return out;
}

TruncatedVector e0dag_apply(const TruncatedVector& v, const QParam& qp) {
  const double q = qp.q;
  const double denom = q - 1.0 / q;
  TruncatedVector out;
  for (const auto& [f, c] : v.coef) {
    // sgn(t) q^{-(m+1)/2} |p/t|^{1/2} sqrt(1+kappa(t)) f_{m+1, p, qt}
    {
      GridPoint tq{f.t.sgn, f.t.exp + 1};
      double coef = f.t.sgn * std::pow(q, -0.5 * (f.m + 1) + 0.5 * (f.p.exp - f.t.exp)) *
                    sqrt1pk(f.t, q) / denom;
      out.add(BasisVector{f.m + 1, f.p, tq}, c * coef);
    }
    // - sgn(p) q^{(m+1)/2} |t/p|^{1/2} sqrt(1+kappa(p/q)) f_{m+1, p/q, t}
    {
      GridPoint pq{f.p.sgn, f.p.exp - 1};
      if (pq.in_iq()) {
        double coef = -f.p.sgn * std::pow(q, 0.5 * (f.m + 1) + 0.5 * (f.t.exp - f.p.exp)) *
                      sqrt1pk(pq, q) / denom;
        out.add(BasisVector{f.m + 1, pq, f.t}, c * coef);
      }
    }
  }
  return out;
}

TruncatedVector casimir_apply(const TruncatedVector& v, const QParam& qp) {
  const double q = qp.q;
  TruncatedVector out;
  for (const auto& [f, c] : v.coef) {
    const int spt = f.p.sgn * f.t.sgn;
    // -sgn(pt) sqrt((1+k(p))(1+k(t))) f_{m,qp,qt}
    {
      GridPoint pp{f.p.sgn, f.p.exp + 1}, tt{f.t.sgn, f.t.exp + 1};
      double coef = -spt * sqrt1pk(f.p, q) * sqrt1pk(f.t, q);
      out.add(BasisVector{f.m, pp, tt}, 0.5 * c * coef);
    }
    // (q^{m-1} p |t| + q^{-m-1} t |p|) f_{mpt}
    {
      double pv = f.p.value(q), tv = f.t.value(q);
      double coef = std::pow(q, f.m - 1.0) * pv * std::abs(tv) +
                    std::pow(q, -f.m - 1.0) * tv * std::abs(pv);
      out.add(f, 0.5 * c * coef);
    }
    // -sgn(pt) sqrt((1+k(p/q))(1+k(t/q))) f_{m, p/q, t/q}
    {
      GridPoint pp{f.p.sgn, f.p.exp - 1}, tt{f.t.sgn, f.t.exp - 1};
      if (pp.in_iq() && tt.in_iq()) {
        double coef = -spt * sqrt1pk(pp, q) * sqrt1pk(tt, q);
        out.add(BasisVector{f.m, pp, tt}, 0.5 * c * coef);
      }
    }
  }
  return out;
}

TruncatedVector modular_j_apply(const TruncatedVector& v) {
  TruncatedVector out;
  for (const auto& [f, c] : v.coef) out.add(BasisVector{-f.m, f.t, f.p}, c);
  return out;
}

TruncatedVector modular_jhat_apply(const TruncatedVector& v) {
  TruncatedVector out;
  for (const auto& [f, c] : v.coef) {
    int sgn = pow_m1(f.m);
    if (f.p.sgn < 0 && (f.p.exp % 2 != 0)) sgn = -sgn;
    if (f.t.sgn < 0 && (f.t.exp % 2 != 0)) sgn = -sgn;
    out.add(BasisVector{-f.m, f.p, f.t}, sgn * c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jacobi reduction table

ASCParams CasimirJacobi::asc_params(const QParam& qp) const {
  return ASCParams(a, b, QParam(qp.q * qp.q));
}
LqJParams CasimirJacobi::lqj_params(const QParam& qp) const {
  return LqJParams(c, d, z, QParam(qp.q * qp.q));
}

CasimirJacobi casimir_to_jacobi(const SubspaceIndex& idx, const QParam& qp) {
  const double q = qp.q;
  const double Q = q * q;
  const int P = idx.p_exp, m = idx.m;
  CasimirJacobi cj;
  if (idx.eps == +1 && idx.eta == -1) {
    // 2 Omega_0 = J(q/p, -q^{1-2m}/p | q^2), n = m + chi(p) + chi(z) - 1
    cj.is_asc = true;
    cj.op_sign = +1.0;
    cj.a = std::pow(q, 1.0 - P);
    cj.b = -std::pow(q, 1.0 - 2.0 * m - P);
    cj.n_offset = m + P - 1;
    cj.pref_sign = pow_m1(m);
    cj.x_negated = false;
  } else if (idx.eps == -1 && idx.eta == +1) {
    // modular-J image of (p^{-1}, -m, +, -): 2 Omega_0 = J(pq, -p q^{1+2m} | q^2)
    cj.is_asc = true;
    cj.op_sign = +1.0;
    cj.a = std::pow(q, 1.0 + P);
    cj.b = -std::pow(q, 1.0 + 2.0 * m + P);
    cj.n_offset = -1;
    cj.pref_sign = +1;
    cj.x_negated = false;
  } else if (idx.eps == -1 && idx.eta == -1) {
    cj.is_asc = true;
    cj.op_sign = -1.0;
    cj.x_negated = true;
    if (m + P >= 0) {
      // 2(-Omega_0) = J(pq, p q^{1+2m} | q^2), n = chi(z) - 1
      cj.a = std::pow(q, 1.0 + P);
      cj.b = std::pow(q, 1.0 + 2.0 * m + P);
      cj.n_offset = -1;
      cj.pref_sign = pow_m1(m);
    } else {
      // modular-J image of (p^{-1}, -m, -, -)
      cj.a = std::pow(q, 1.0 - P);
      cj.b = std::pow(q, 1.0 - 2.0 * m - P);
      cj.n_offset = m + P - 1;
      cj.pref_sign = pow_m1(P);
    }
  } else {
    cj.is_asc = false;
    cj.op_sign = -1.0;
    cj.x_negated = true;
    cj.z = -Q;
    if (m <= 0) {
      // 2(-Omega_0) = L(q^{2-2m}, q^{1-2m}/p, -q^2 | q^2), k = chi(z)
      cj.c = std::pow(Q, 1.0 - m);
      cj.d = std::pow(q, 1.0 - 2.0 * m - P);
      cj.n_offset = 0;
      cj.pref_sign = pow_m1(m);
    } else {
      // parameter-symmetric form L(q^{2+2m}, p q^{1+2m}, -q^2 | q^2), k = m + chi(p) + chi(z)
      cj.c = std::pow(Q, 1.0 + m);
      cj.d = std::pow(q, 1.0 + 2.0 * m + P);
      cj.n_offset = m + P;
      cj.pref_sign = +1;
    }
  }
  return cj;
}

TridiagonalOperator casimir_operator_window(const SubspaceIndex& idx, const QParam& qp,
                                            int z_exp_lo, int z_exp_hi) {
  // entries of 2*Omega_0 straight from the explicit action, indexed by chi(z)
  const double q = qp.q;
  SubspaceIndex id = idx;
  TridiagonalOperator op;
  op.z_indexed = (idx.eps == +1 && idx.eta == +1);
  op.k_lo = z_exp_lo;
  op.k_hi = z_exp_hi;
  // the m = 0, eps = eta = + sector is the deficiency-(1,1) case: the
  // distinguished extension has eigenvectors with u(k-1)/u(k) -> q at the
  // unbounded end, which enters the truncation as a boundary-row term
  const bool boundary_fix = (idx.eps == +1 && idx.eta == +1 && idx.m == 0);
  auto raw_off = [id, q](long k) {
    GridPoint z{id.eps, static_cast<int>(k)};
    GridPoint zn{id.eps, static_cast<int>(k) + 1};
    if (!subspace_contains(id, z) || !subspace_contains(id, zn)) return 0.0;
    BasisVector f = subspace_basis_vector(id, z);
    return -static_cast<double>(f.p.sgn * f.t.sgn) * sqrt1pk(f.p, q) * sqrt1pk(f.t, q);
  };
  op.diag = [id, q, boundary_fix, z_exp_lo, raw_off](long k) {
    GridPoint z{id.eps, static_cast<int>(k)};
    if (!subspace_contains(id, z)) return 0.0;
    BasisVector f = subspace_basis_vector(id, z);
    double pv = f.p.value(q), tv = f.t.value(q);
    double d =
        std::pow(q, f.m - 1.0) * pv * std::abs(tv) + std::pow(q, -f.m - 1.0) * tv * std::abs(pv);
    if (boundary_fix && k == z_exp_lo) d += q * raw_off(k - 1);
    return d;
  };
  op.off = raw_off;
  return op;
}

// ---------------------------------------------------------------------------

DiscreteSpectrum discrete_spectrum(const SubspaceIndex& idx, const QParam& qp, int window) {
  const double q = qp.q;
  const int P = idx.p_exp, m = idx.m;
  DiscreteSpectrum out;
  auto add = [&](int sgn, int e) {
    GridPoint lam{sgn, e};
    out.points.push_back(SpectrumPoint{lam, mu(lam.value(q))});
  };
  if (idx.eps != idx.eta) {
    const int e = idx.eps;  // +1 or -1
    // {q^{1+2r} p^{-eps} : r in N0, > 1} ∪ {-q^{1+2r} p^{-eps} : r >= -eps m, > 1}
    for (int r = 0;; ++r) {
      int ex = 1 + 2 * r - e * P;
      if (ex >= 0) break;
      add(+1, ex);
    }
    for (int r = -e * m;; ++r) {
      int ex = 1 + 2 * r - e * P;
      if (ex >= 0) break;
      add(-1, ex);
    }
  } else if (idx.eps == -1) {
    std::vector<int> exps;
    if (P + m >= 0) {
      // p q^m <= 1: {-q^{1+2r} p} ∪ {-q^{1+2(r+m)} p}, r in N0
      for (int r = 0;; ++r) {
        int ex = 1 + 2 * r + P;
        if (ex >= 0) break;
        exps.push_back(ex);
      }
      for (int r = 0;; ++r) {
        int ex = 1 + 2 * (r + m) + P;
        if (ex >= 0) break;
        exps.push_back(ex);
      }
    } else {
      for (int r = 0;; ++r) {
        int ex = 1 + 2 * r - P;
        if (ex >= 0) break;
        exps.push_back(ex);
      }
      for (int r = 0;; ++r) {
        int ex = 1 + 2 * (r - m) - P;
        if (ex >= 0) break;
        exps.push_back(ex);
      }
    }
    std::sort(exps.begin(), exps.end());
    exps.erase(std::unique(exps.begin(), exps.end()), exps.end());
    for (int ex : exps) add(-1, ex);
  } else {
    // (+,+): infinite family {q^{1+2k} p > 1, k in Z} plus two finite ones
    out.infinite_family = true;
    {
      // members: 1 + 2k + P < 0, i.e. k <= k_max, unbounded below
      int k_max = (-2 - P) >= 0 ? (-2 - P) / 2 : -((P + 3) / 2);
      while (1 + 2 * k_max + P >= 0) --k_max;
      while (1 + 2 * (k_max + 1) + P < 0) ++k_max;
      for (int k = k_max; k >= k_max - window; --k) add(+1, 1 + 2 * k + P);
    }
    for (int r = std::max(0, m);; ++r) {
      int ex = 1 + 2 * r + P;
      if (ex >= 0) break;
      add(-1, ex);
    }
    for (int r = std::max(0, -m);; ++r) {
      int ex = 1 + 2 * r - P;
      if (ex >= 0) break;
      add(-1, ex);
    }
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const SpectrumPoint& a, const SpectrumPoint& b) {
              return std::abs(a.x) < std::abs(b.x);
            });
  return out;
}

// ---------------------------------------------------------------------------

double CasimirPoint::x(double q) const {
  if (discrete) return mu(lambda.value(q));
  return std::cos(psi);
}

namespace {

// match a spectral parameter s to the (family, r) of the measure mass points
std::optional<std::pair<int, int>> match_asc_point(double s, const ASCParams& P) {
  const double logq = std::log(P.base.q);
  for (int family = 0; family < 2; ++family) {
    double e = family == 0 ? P.a : P.b;
    if (e * s <= 0.0) continue;
    double rr = std::log(s / e) / logq;
    long r = std::lround(rr);
    if (r < 0 || std::abs(rr - static_cast<double>(r)) > 1e-8) continue;
    if (!(std::abs(e * std::pow(P.base.q, static_cast<double>(r))) > 1.0)) continue;
    return std::make_pair(family, static_cast<int>(r));
  }
  return std::nullopt;
}

std::optional<std::pair<int, int>> match_lqj_point(double s, const LqJParams& P) {
  const double q = P.base.q;
  const double logq = std::log(q);
  if (!(std::abs(s) > 1.0)) return std::nullopt;
  // family 0: s = q^{1-r}/(dz)
  {
    double t = s * P.d * P.z;
    if (t > 0.0) {
      double rr = 1.0 - std::log(t) / logq;
      long r = std::lround(rr);
      if (std::abs(rr - static_cast<double>(r)) < 1e-8) return std::make_pair(0, static_cast<int>(r));
    }
  }
  // family 1: s = (c/d) q^r, r in N0
  {
    double t = s * P.d / P.c;
    if (t > 0.0) {
      double rr = std::log(t) / logq;
      long r = std::lround(rr);
      if (r >= 0 && std::abs(rr - static_cast<double>(r)) < 1e-8)
        return std::make_pair(1, static_cast<int>(r));
    }
  }
  // family 2: s = d q^r, r in N0
  {
    double t = s / P.d;
    if (t > 0.0) {
      double rr = std::log(t) / logq;
      long r = std::lround(rr);
      if (r >= 0 && std::abs(rr - static_cast<double>(r)) < 1e-8)
        return std::make_pair(2, static_cast<int>(r));
    }
  }
  return std::nullopt;
}

}  // namespace

std::map<int, double> upsilon_g_block(const SubspaceIndex& idx, const CasimirPoint& pt,
                                      int z_window, const QParam& qp) {
  const CasimirJacobi cj = casimir_to_jacobi(idx, qp);
  std::vector<GridPoint> zs = subspace_grid(idx, z_window);
  std::map<int, double> out;
  if (zs.empty()) return out;
  long n_lo = zs.front().exp + cj.n_offset;
  long n_hi = zs.back().exp + cj.n_offset;
  for (const GridPoint& z : zs) {
    n_lo = std::min(n_lo, static_cast<long>(z.exp) + cj.n_offset);
    n_hi = std::max(n_hi, static_cast<long>(z.exp) + cj.n_offset);
  }

  std::vector<double> vals;
  long base_index = 0;
  if (!pt.discrete) {
    double psi_eff = cj.x_negated ? kPi - pt.psi : pt.psi;
    if (cj.is_asc) {
      vals = asc_h_cont_range(n_hi, psi_eff, cj.asc_params(qp));
      base_index = 0;
    } else {
      vals = lqj_j_cont_range(n_lo, n_hi, psi_eff, cj.lqj_params(qp));
      base_index = n_lo;
    }
  } else {
    const double lam = pt.lambda.value(qp.q);
    const double s = cj.x_negated ? -lam : lam;
    if (cj.is_asc) {
      auto fam = match_asc_point(s, cj.asc_params(qp));
      if (!fam) {
        for (const GridPoint& z : zs) out[z.exp] = 0.0;
        return out;
      }
      vals = asc_h_disc_range(n_hi, fam->first, fam->second, cj.asc_params(qp));
      base_index = 0;
    } else {
      auto fam = match_lqj_point(s, cj.lqj_params(qp));
      if (!fam) {
        for (const GridPoint& z : zs) out[z.exp] = 0.0;
        return out;
      }
      vals = lqj_j_disc_range(n_lo, n_hi, fam->first, fam->second, cj.lqj_params(qp));
      base_index = n_lo;
    }
  }
  for (const GridPoint& z : zs) {
    long n = z.exp + cj.n_offset;
    out[z.exp] = cj.pref_sign * vals.at(static_cast<size_t>(n - base_index));
  }
  return out;
}

double upsilon_g(GridPoint z, const CasimirPoint& pt, const SubspaceIndex& idx,
                 const QParam& qp) {
  if (!subspace_contains(idx, z)) throw std::domain_error("upsilon_g: z outside the subspace");
  auto block = upsilon_g_block(idx, pt, std::abs(z.exp) + 1, qp);
  return block.at(z.exp);
}

}  // namespace qsu11
