#include "qsu11/dualops.hpp"

#include <algorithm>
#include <cmath>

namespace qsu11 {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

int sgn_pow(int s, long e) { return (s < 0 && (e % 2 != 0)) ? -1 : 1; }
int m1_pow(long e) { return (e % 2 == 0) ? 1 : -1; }

// 1phi1(a; 0; Q, sgn_x Q^{e_x}) in signed-log form with a cancellation gauge.
LogSumResult one_phi_one_zero(double a, int sgn_x, long e_x, double Q,
                              const SeriesConfig& cfg = {}) {
  const double logQ = std::log(Q);
  if (sgn_x > 0 && e_x < 1) {
    // inversion: 1phi1(a;0;Q,Q^{1+k}) = a^{-k} 1phi1(a;0;Q,Q^{1-k}), k = e_x - 1
    long k = e_x - 1;
    LogSumResult inner = one_phi_one_zero(a, +1, 2 - e_x, Q, cfg);
    inner.value = inner.value * LogReal::from(a).pow_int(-k);
    return inner;
  }
  if (sgn_x < 0 && e_x < 1) {
    // 1phi1(a;0;Q,x) = (x;Q)_inf 0phi1(-;x;Q,ax) for x < 0
    const double x = -std::exp(e_x * logQ);
    LogReal pref = qpoch_inf_log(x, Q);
    LogReal term = LogReal::one();
    std::vector<LogReal> terms{term};
    double maxlg = 0.0;
    LogReal qj = LogReal::one();     // Q^j
    LogReal xj = LogReal::one();     // (x;Q)_j
    LogReal qqj = LogReal::one();    // (Q;Q)_j
    LogReal tri = LogReal::one();    // Q^{j(j-1)}
    LogReal axj = LogReal::one();    // (ax)^j
    for (int j = 1; j < 500; ++j) {
      double Qjm1 = std::exp((j - 1) * logQ);
      xj = xj * LogReal::from(1.0 - x * Qjm1);
      qqj = qqj * LogReal::from(1.0 - Q * Qjm1);
      tri = tri * LogReal{2.0 * (j - 1) * logQ, 1};
      axj = axj * LogReal::from(a * x);
      LogReal t = tri * axj / (qqj * xj);
      terms.push_back(t);
      if (t.s != 0) maxlg = std::max(maxlg, t.lg);
      if (t.s != 0 && j > 6 && t.lg < maxlg + std::log(cfg.tail_tol) - 3.0) break;
      (void)qj;
    }
    long double acc = 0.0L, accabs = 0.0L;
    for (const LogReal& t : terms) {
      if (t.s == 0) continue;
      long double v = t.s * std::exp(static_cast<long double>(t.lg - maxlg));
      acc += v;
      accabs += std::abs(v);
    }
    LogSumResult out;
    out.terms = static_cast<int>(terms.size());
    if (acc == 0.0L) {
      out.value = LogReal::zero();
      return out;
    }
    out.value = pref * LogReal{maxlg + static_cast<double>(std::log(std::abs(acc))),
                               acc > 0 ? 1 : -1};
    out.cancellation = static_cast<double>(std::log10(accabs / std::abs(acc)));
    return out;
  }
  // direct series, |x| <= Q
  const double x = sgn_x * std::exp(e_x * logQ);
  std::vector<LogReal> terms{LogReal::one()};
  double maxlg = 0.0;
  LogReal apoch = LogReal::one(), qpochn = LogReal::one(), xp = LogReal::one(), tri = LogReal::one();
  int sg = 1;
  for (int j = 1; j < 800; ++j) {
    double Qjm1 = std::exp((j - 1) * logQ);
    apoch = apoch * LogReal::from(1.0 - a * Qjm1);
    qpochn = qpochn * LogReal::from(1.0 - Q * Qjm1);
    xp = xp * LogReal::from(x);
    tri = tri * LogReal{(j - 1) * logQ, 1};
    sg = -sg;
    LogReal t = apoch / qpochn * xp * tri;
    t.s *= sg;
    terms.push_back(t);
    if (t.s != 0) maxlg = std::max(maxlg, t.lg);
    if (apoch.s == 0) break;  // terminating a in Q^{-N0}
    if (t.s != 0 && j > 6 && t.lg < maxlg + std::log(cfg.tail_tol) - 3.0) break;
  }
  long double acc = 0.0L, accabs = 0.0L;
  for (const LogReal& t : terms) {
    if (t.s == 0) continue;
    long double v = t.s * std::exp(static_cast<long double>(t.lg - maxlg));
    acc += v;
    accabs += std::abs(v);
  }
  LogSumResult out;
  out.terms = static_cast<int>(terms.size());
  if (acc == 0.0L) {
    out.value = LogReal::zero();
    return out;
  }
  out.value =
      LogReal{maxlg + static_cast<double>(std::log(std::abs(acc))), acc > 0 ? 1 : -1};
  out.cancellation = static_cast<double>(std::log10(accabs / std::abs(acc)));
  return out;
}

// (c;Q)_inf * 2phi1(a,b;c;Q,z) evaluated through suffix products (entire in c)
cx regularized_2phi1(cx a, cx b, double c, double Q, cx z, const SeriesConfig& cfg = {}) {
  const int N = 600;
  std::vector<cx> suffix(static_cast<size_t>(N) + 2);
  suffix[static_cast<size_t>(N) + 1] = qpoch_inf(c * std::pow(Q, N + 1), Q);
  for (int n = N; n >= 0; --n)
    suffix[static_cast<size_t>(n)] =
        (1.0 - c * std::pow(Q, n)) * suffix[static_cast<size_t>(n) + 1];
  cx apoch = 1.0, bpoch = 1.0, qpochn = 1.0, zp = 1.0;
  cx sum = 0.0;
  double Qn = 1.0;
  int small = 0;
  for (int n = 0; n <= N; ++n) {
    cx term = apoch * bpoch * suffix[static_cast<size_t>(n)] / qpochn * zp;
    sum += term;
    if (std::abs(term) <= cfg.tail_tol * std::max(1.0, std::abs(sum)) &&
        std::abs(suffix[static_cast<size_t>(n)]) != 0.0)
      ++small;
    else
      small = 0;
    if (small >= cfg.consecutive_small) break;
    apoch *= (1.0 - a * Qn);
    bpoch *= (1.0 - b * Qn);
    qpochn *= (1.0 - Q * Qn);
    zp *= z;
    Qn *= Q;
  }
  return sum;
}

}  // namespace

// ---------------------------------------------------------------------------
// Q matrix elements and application

double q_matrix_element(const QLabel& L, const BasisVector& in, const BasisVector& out,
                        const QParam& qp) {
  const int u = in.m, l = out.m;
  const GridPoint v = in.p, w = in.t, r = out.p, s = out.t;
  if (u - l != L.n) return 0.0;
  if (l != L.p1.exp + v.exp - L.p2.exp - w.exp) return 0.0;
  GridPoint r_req{v.sgn * w.sgn * s.sgn * L.p2.sgn * L.p1.sgn,
                  s.exp + L.p2.exp + u - L.p1.exp};
  if (!(r == r_req)) return 0.0;
  double val = std::pow(qp.q, static_cast<double>(w.exp - s.exp));
  return val * ap(w, L.p1, s, qp) * ap(v, L.p2, r, qp);
}

double q_jhat_matrix_element(const QLabel& L, const BasisVector& in, const BasisVector& out,
                             const QParam& qp) {
  const int u = in.m, l = out.m;
  const GridPoint v = in.p, w = in.t, r = out.p, s = out.t;
  if (l - u != L.n) return 0.0;
  if (l != L.p2.exp + w.exp - L.p1.exp - v.exp) return 0.0;
  GridPoint r_req{v.sgn * w.sgn * s.sgn * L.p2.sgn * L.p1.sgn,
                  s.exp + L.p2.exp - u - L.p1.exp};
  if (!(r == r_req)) return 0.0;
  double sgns = sgn_pow(r.sgn, r.exp) * sgn_pow(s.sgn, s.exp) * sgn_pow(v.sgn, v.exp) *
                sgn_pow(w.sgn, w.exp) * m1_pow(l + u);
  double val = sgns * std::pow(qp.q, static_cast<double>(w.exp - s.exp));
  return val * ap(w, L.p1, s, qp) * ap(v, L.p2, r, qp);
}

TruncatedVector q_apply(const QLabel& L, const TruncatedVector& v, int w_window,
                        const QParam& qp) {
  const double q = qp.q;
  TruncatedVector out;
  for (const auto& [f, c] : v.coef) {
    auto [idx, z] = subspace_of(f);
    // selection rule q^{2m} p = q^{-n} |p2/p1|
    if (2 * idx.m + idx.p_exp != -L.n + L.p2.exp - L.p1.exp) continue;
    SubspaceIndex up{idx.p_exp, idx.m + L.n, L.p1.sgn * idx.eps, L.p2.sgn * idx.eta};
    const int epeta_out = up.eps * up.eta;
    const double pref = m1_pow(up.m) * sgn_pow(up.eta, L.p1.exp + L.p2.exp + idx.m) *
                        std::pow(q, static_cast<double>(L.p1.exp + L.p2.exp - idx.m - idx.p_exp));
    const GridPoint in_p = f.p;  // eps eta q^m p z
    for (const GridPoint& w : subspace_grid(up, w_window)) {
      BasisVector fw = subspace_basis_vector(up, w);
      double term = pref * sgn_pow(epeta_out, w.exp) *
                    std::pow(q, static_cast<double>(-w.exp - z.exp)) * ap(L.p1, z, w, qp) *
                    ap(L.p2, in_p, fw.p, qp);
      out.add(fw, c * term);
    }
  }
  return out;
}

double q_adjoint_residual(const QLabel& L, int window, const QParam& qp) {
  const double q = qp.q;
  const double factor =
      m1_pow(L.n) * std::pow(q, static_cast<double>(L.n)) * sgn_pow(L.p1.sgn, L.p1.exp) *
      sgn_pow(L.p2.sgn, L.p2.exp);
  QLabel Lm{L.p1, L.p2, -L.n};
  double res = 0.0;
  IqGrid grid(window);
  for (const GridPoint& v : grid.points())
    for (const GridPoint& w : grid.points()) {
      const int l = L.p1.exp + v.exp - L.p2.exp - w.exp;
      const int u = l + L.n;
      for (const GridPoint& s : grid.points()) {
        GridPoint r{v.sgn * w.sgn * s.sgn * L.p2.sgn * L.p1.sgn,
                    s.exp + L.p2.exp + u - L.p1.exp};
        if (!r.in_iq()) continue;
        BasisVector fin{u, v, w}, fout{l, r, s};
        double me1 = q_matrix_element(L, fin, fout, qp);
        double me2 = q_matrix_element(Lm, fout, fin, qp);
        res = std::max(res, std::abs(me1 - factor * me2));
      }
    }
  return res;
}

StructureCheck structure_product_check(const QLabel& l1, const QLabel& l2, int window,
                                       int x_window, const QParam& qp) {
  StructureCheck out;
  const bool gate_ok = (l1.p2.exp - l1.p1.exp == l2.n) && (l2.p1.exp - l2.p2.exp == l1.n);
  out.gated = !gate_ok;

  // trial vectors: interior basis states of gate-compatible subspaces
  std::vector<TruncatedVector> trials;
  for (int k : {0, 1}) {
    for (int eps : {+1, -1})
      for (int eta : {+1, -1}) {
        SubspaceIndex idx{-l2.n + l2.p2.exp - l2.p1.exp - 2 * k, k, eps, eta};
        auto zs = subspace_grid(idx, 3);
        if (zs.empty()) continue;
        TruncatedVector g;
        g.add(subspace_basis_vector(idx, zs[zs.size() / 2]), 1.0);
        trials.push_back(g);
      }
    if (!trials.empty()) break;
  }

  double res = 0.0;
  for (const TruncatedVector& g : trials) {
    TruncatedVector lhs = q_apply(l1, q_apply(l2, g, window, qp), window, qp);
    if (out.gated) {
      for (const auto& [f, c] : lhs.coef) {
        (void)f;
        res = std::max(res, std::abs(c));
      }
      continue;
    }
    TruncatedVector rhs;
    for (int xe = -x_window; xe <= x_window; ++xe) {
      GridPoint x1{l1.p1.sgn * l2.p1.sgn, xe}, x2{l1.p2.sgn * l2.p2.sgn, xe};
      if (!x1.in_iq() || !x2.in_iq()) continue;
      double a1 = ap(x1, l2.p1, l1.p1, qp);
      if (a1 == 0.0) continue;
      double a2 = ap(x2, l2.p2, l1.p2, qp);
      if (a2 == 0.0) continue;
      QLabel Lx{x1, x2, l1.n + l2.n};
      for (const auto& [f, c] : q_apply(Lx, g, window, qp).coef) rhs.add(f, a1 * a2 * c);
    }
    // compare on interior outputs
    for (const auto& [f, c] : lhs.coef) {
      if (std::abs(f.t.exp) > window - 4) continue;
      res = std::max(res, std::abs(c - rhs.at(f)));
    }
    for (const auto& [f, c] : rhs.coef) {
      if (std::abs(f.t.exp) > window - 4) continue;
      res = std::max(res, std::abs(c - lhs.at(f)));
    }
  }
  out.residual = res;
  return out;
}

// ---------------------------------------------------------------------------
// S function

namespace {

cx s_function_bilateral(const SFunctionParams& sp, cx t, const QParam& qp,
                        const SeriesConfig& cfg = {}) {
  const double q = qp.q;
  const double Q = q * q;
  const double logq = std::log(q);
  const int s12 = sp.p1.sgn * sp.p2.sgn;

  // prefactor K
  LogReal K = LogReal{0.5 * sp.n * (sp.n - 1) * logq, 1};
  K = K * LogReal::q_power(sgn_pow(sp.p2.sgn, sp.n), static_cast<double>(sp.n) * sp.p2.exp, logq);
  K = K * LogReal::q_power(+1, static_cast<double>(sp.p1.exp + sp.p2.exp), logq);
  K = K * LogReal::q_power(+1, static_cast<double>(nu_exponent(sp.p1) + nu_exponent(sp.p2)), logq);
  LogReal cq = c_q_log(q);
  K = K * cq * cq;
  const double mk1 = -sp.p1.sgn * std::pow(q, 2.0 * sp.p1.exp);
  const double mk2 = -sp.p2.sgn * std::pow(q, 2.0 * sp.p2.exp);
  K = K * (qpoch_inf_log(mk1, Q) * qpoch_inf_log(mk2, Q)).sqrt();

  const double a1 = -sp.p1.sgn * std::pow(q, 2.0 - 2.0 * sp.p1.exp);
  const double a2 = -sp.p2.sgn * std::pow(q, 2.0 - 2.0 * sp.p2.exp);
  const double tmag = std::abs(t);
  const double targ = std::arg(t);

  // term(k) = (sgn(p1 p2) t q^{3-n-chi(p1 p2)})^k q^{k(k-1)} phi1(k) phi2(k)
  struct Term {
    double lg;
    double phase_k;  // multiples of arg(t)
    int sgn;
  };
  std::vector<Term> terms;
  double maxlg = -1e300;
  auto add_term = [&](long k) {
    LogSumResult f1 = one_phi_one_zero(a1, sp.p1.sgn, 1 + k, Q, cfg);
    LogSumResult f2 = one_phi_one_zero(a2, sp.p2.sgn, 1 + k - sp.n, Q, cfg);
    if (f1.value.s == 0 || f2.value.s == 0) return true;  // structurally zero term
    LogReal mag = LogReal{k * (std::log(tmag) + (3.0 - sp.n - sp.p1.exp - sp.p2.exp) * logq) +
                              static_cast<double>(k) * (k - 1) * logq,
                          sgn_pow(s12, k)};
    LogReal full = mag * f1.value * f2.value;
    terms.push_back(Term{full.lg, static_cast<double>(k), full.s});
    maxlg = std::max(maxlg, full.lg);
    return full.lg > maxlg + std::log(cfg.tail_tol) - 5.0;
  };
  add_term(0);
  for (int dir : {+1, -1}) {
    int small = 0;
    for (long k = dir; std::abs(k) < 4 * cfg.bilateral_window; k += dir) {
      bool big = add_term(k);
      if (!big)
        ++small;
      else
        small = 0;
      if (small >= cfg.consecutive_small) break;
    }
  }
  cx acc = 0.0;
  for (const Term& T : terms)
    acc += static_cast<double>(T.sgn) * std::exp(T.lg - maxlg) * std::polar(1.0, T.phase_k * targ);
  cx result = acc * std::exp(maxlg) * K.to_double();
  if (!std::isfinite(result.real()) || !std::isfinite(result.imag()))
    throw std::overflow_error("s_function_bilateral: overflow");
  return result;
}

cx s_function_closed(const SFunctionParams& sp, cx t, const QParam& qp) {
  const double q = qp.q;
  const double Q = q * q;
  if (sp.p2.exp >= 1) {
    if (sp.p1.exp >= 1)
      throw divergent_error("s_function_closed: both parameters have positive chi");
    // S(t; p1, p2, n) = (q t)^n S(t; p2, p1, -n)
    SFunctionParams sw{sp.p2, sp.p1, -sp.n};
    return std::pow(q * t, static_cast<double>(sp.n)) * s_function_closed(sw, t, qp);
  }
  const double logq = std::log(q);
  const int n = sp.n;
  const double p1v = sp.p1.value(q), p2v = sp.p2.value(q);
  const double ap1 = std::abs(p1v), ap2 = std::abs(p2v);

  LogReal pref = LogReal::q_power(sgn_pow(sp.p2.sgn, n), static_cast<double>(n) * sp.p2.exp, logq);
  pref = pref * LogReal{0.5 * n * (n - 1) * logq, 1};
  pref = pref * LogReal::q_power(+1, static_cast<double>(sp.p1.exp + sp.p2.exp), logq);
  pref = pref *
         LogReal::q_power(+1, static_cast<double>(nu_exponent(sp.p1) + nu_exponent(sp.p2)), logq);
  LogReal cq = c_q_log(q);
  pref = pref * cq * cq;
  const double mk1 = -sp.p1.sgn * std::pow(q, 2.0 * sp.p1.exp);
  const double mk2 = -sp.p2.sgn * std::pow(q, 2.0 * sp.p2.exp);
  pref = pref * (qpoch_inf_log(mk1, Q) * qpoch_inf_log(mk2, Q)).sqrt();

  const double kap2 = sp.p2.sgn * ap2 * ap2;
  cx num = qpoch_inf(cx(Q), Q);
  num *= qpoch_inf(cx(-Q / kap2), Q);
  num *= qpoch_inf(-t * std::pow(q, 3.0 - n) / (p1v * p2v), Q);
  num *= qpoch_inf(-p1v * p2v * std::pow(q, n - 1.0) / t, Q);
  num *= qpoch_inf(p1v * std::pow(q, 1.0 - n) / (p2v * t), Q);
  cx den = qpoch_inf(ap1 * std::pow(q, 1.0 + n) / (ap2 * t), Q);
  den *= qpoch_inf(-p1v * ap2 * std::pow(q, -n - 1.0) / t, Q);
  den *= qpoch_inf(-t * std::pow(q, n + 3.0) / (p1v * ap2), Q);
  if (std::abs(den) < 1e-12 * std::max(1.0, std::abs(num)))
    throw pole_error("s_function_closed: denominator pole");

  const int s12 = sp.p1.sgn * sp.p2.sgn;
  const cx a2f = p2v * std::pow(q, 1.0 + n) / (p1v * t);
  const cx b2f = p2v * t * std::pow(q, 1.0 + n) / p1v;
  const double c2f = s12 * std::pow(q, 2.0 + 2.0 * n);
  const cx z2f = cx(-Q / kap2);
  cx reg;
  if (std::abs(z2f) < 1.0) {
    reg = regularized_2phi1(a2f, b2f, c2f, Q, z2f);
  } else {
    // Heine (c;q)_inf 2phi1(a,b;c;q,z) = ((c/b,bz;q)_inf/(z;q)_inf)
    //                                    * 2phi1(abz/c, b; bz; q, c/b)
    cx cb = c2f / b2f;
    cx bz = b2f * z2f;
    if (!(std::abs(cb) < 1.0))
      throw divergent_error("s_function_closed: no convergent 2phi1 representation");
    cx tr = rphis({a2f * b2f * z2f / c2f, b2f}, {bz}, Q, cb);
    reg = qpoch_inf(cb * b2f / 1.0, Q) * 0.0;  // placeholder, replaced below
    reg = qpoch_inf(cb, Q) * qpoch_inf(bz, Q) / qpoch_inf(z2f, Q) * tr;
  }
  return pref.to_double() * num / den * reg;
}

}  // namespace

cx s_function(const SFunctionParams& sp, cx t, const QParam& qp, SMethod method) {
  if (t == cx(0.0, 0.0)) throw std::domain_error("s_function: t must be nonzero");
  if (!sp.p1.in_iq() || !sp.p2.in_iq())
    throw std::domain_error("s_function: p1, p2 must lie in I_q");
  switch (method) {
    case SMethod::bilateral:
      return s_function_bilateral(sp, t, qp);
    case SMethod::closed_form:
      return s_function_closed(sp, t, qp);
    case SMethod::automatic:
    default:
      try {
        return s_function_closed(sp, t, qp);
      } catch (const pole_error&) {
      } catch (const divergent_error&) {
      }
      return s_function_bilateral(sp, t, qp);
  }
}

cx s_bn_B(const SFunctionParams& sp, cx t, const QParam& qp) {
  const double q = qp.q;
  const double Q = q * q;
  const int n = sp.n;
  const double p1v = sp.p1.value(q), p2v = sp.p2.value(q);
  const double ap1 = std::abs(p1v), ap2 = std::abs(p2v);
  const bool even = ((sp.p1.exp + sp.p2.exp + n) % 2) == 0;
  cx B = std::pow(t, static_cast<double>(n)) *
         qpoch_inf(-ap1 * std::pow(q, 1.0 - n) / (ap2 * t), Q) /
         qpoch_inf(-p1v * std::pow(q, 1.0 + n) / (p2v * t), Q);
  if (!even) B *= (1.0 - static_cast<double>(sp.p2.sgn) / t) / (1.0 - 1.0 / t);
  return B;
}

cx s_bn_N(const SFunctionParams& sp, cx t, const QParam& qp) {
  const double q = qp.q;
  const double Q = q * q;
  const double logq = std::log(q);
  const int n = sp.n;
  const double p1v = sp.p1.value(q), p2v = sp.p2.value(q);
  const double ap1 = std::abs(p1v), ap2 = std::abs(p2v);
  const int tau = sp.p2.sgn;
  const bool even = ((sp.p1.exp + sp.p2.exp + n) % 2) == 0;

  cx h;
  if (even) {
    long e = (sp.p1.exp + sp.p2.exp - n + 2) / 2;
    h = static_cast<double>(sgn_pow(tau, e)) * qpoch_inf(q * t, Q) * qpoch_inf(q / t, Q) /
        (qpoch_inf(static_cast<double>(tau) * q * t, Q) *
         qpoch_inf(static_cast<double>(tau) * q / t, Q));
  } else {
    long e = (sp.p1.exp + sp.p2.exp - n + 3) / 2;
    h = static_cast<double>(sgn_pow(tau, e)) * qpoch_inf(t, Q) * qpoch_inf(1.0 / t, Q) /
        (qpoch_inf(static_cast<double>(tau) * t, Q) *
         qpoch_inf(static_cast<double>(tau) / t, Q));
  }

  LogReal pref = LogReal{2.0 * n * logq, 1};
  pref = pref * LogReal::q_power(sgn_pow(tau, n), static_cast<double>(n) * sp.p2.exp, logq);
  pref = pref * LogReal{0.5 * n * (n - 1) * logq, 1};
  pref = pref * LogReal::q_power(
                    +1, static_cast<double>(sp.p1.exp + sp.p2.exp) * (1.0 - n), logq);
  pref = pref *
         LogReal::q_power(+1, static_cast<double>(nu_exponent(sp.p1) + nu_exponent(sp.p2)), logq);
  LogReal cq = c_q_log(q);
  pref = pref * cq * cq;
  const double kap2 = sp.p2.sgn * ap2 * ap2;
  const double mk1 = -sp.p1.sgn * std::pow(q, 2.0 * sp.p1.exp);
  const double mk2 = -sp.p2.sgn * std::pow(q, 2.0 * sp.p2.exp);
  pref = pref * (qpoch_inf_log(mk1, Q) * qpoch_inf_log(mk2, Q)).sqrt();
  pref = pref * qpoch_inf_log(Q, Q) * qpoch_inf_log(-Q / kap2, Q);

  const int s12 = sp.p1.sgn * sp.p2.sgn;
  cx reg = regularized_2phi1(-ap2 * std::pow(q, 1.0 + n) / (ap1 * t),
                             -ap2 * t * std::pow(q, 1.0 + n) / ap1,
                             s12 * std::pow(q, 2.0 + 2.0 * n), Q, cx(-Q / kap2));
  return pref.to_double() * h * reg;
}

// ---------------------------------------------------------------------------
// A / E / G / nu

namespace {

struct AFactor {
  double coef;
  int lam_pow;  // +1 or -1
};

cx a_function_impl(cx lam, const SubspaceIndex& idx, const QParam& qp) {
  const double q = qp.q;
  const double Q = q * q;
  const int P = idx.p_exp, m = idx.m;
  cx pref;
  std::vector<AFactor> facs;
  if (idx.eps == +1 && idx.eta == -1) {
    pref = static_cast<double>(m1_pow(m)) * std::pow(lam, 1.0 - m - P);
    facs = {{std::pow(q, 1.0 - P), +1}, {-std::pow(q, 1.0 - 2.0 * m - P), +1}};
  } else if (idx.eps == -1 && idx.eta == +1) {
    pref = lam;
    facs = {{std::pow(q, 1.0 + P), +1}, {-std::pow(q, 1.0 + 2.0 * m + P), +1}};
  } else if (idx.eps == -1 && idx.eta == -1) {
    if (P + m >= 0) {
      pref = static_cast<double>(m1_pow(m + 1)) * lam;
      facs = {{-std::pow(q, 1.0 + P), +1}, {-std::pow(q, 1.0 + 2.0 * m + P), +1}};
    } else {
      pref = static_cast<double>(m1_pow(m + 1)) * std::pow(lam, 1.0 - m - P);
      facs = {{-std::pow(q, 1.0 - P), +1}, {-std::pow(q, 1.0 - 2.0 * m - P), +1}};
    }
  } else {
    if (m >= 0) {
      pref = static_cast<double>(m1_pow(m + P)) * std::pow(lam, static_cast<double>(-m - P));
      facs = {{-std::pow(q, 1.0 - P), +1},
              {-std::pow(q, 1.0 + 2.0 * m + P), +1},
              {std::pow(q, 3.0 + 2.0 * m + P), -1},
              {std::pow(q, -1.0 - 2.0 * m - P), +1}};
    } else {
      pref = static_cast<double>(m1_pow(m));
      facs = {{-std::pow(q, 1.0 + P), +1},
              {-std::pow(q, 1.0 - 2.0 * m - P), +1},
              {std::pow(q, 3.0 - 2.0 * m - P), -1},
              {std::pow(q, -1.0 + 2.0 * m + P), +1}};
    }
  }
  const double sinpsi = lam.imag();
  cx num = 1.0;
  double rad = 1.0;
  for (const AFactor& f : facs) {
    cx arg = f.lam_pow > 0 ? f.coef * lam : f.coef / lam;
    num *= qpoch_inf(arg, Q);
    rad /= (qpoch_inf(f.coef * lam, Q) * qpoch_inf(f.coef / lam, Q)).real();
  }
  cx l2 = qpoch_inf(lam * lam, Q);
  cx l2i = qpoch_inf(1.0 / (lam * lam), Q);
  rad *= (l2 * l2i).real();
  return pref * std::sqrt(2.0 / (kPi * std::abs(sinpsi))) * num / l2 * std::sqrt(rad);
}

}  // namespace

cx a_function(double psi, const SubspaceIndex& idx, const QParam& qp) {
  if (std::abs(std::sin(psi)) < 1e-12)
    throw std::domain_error("a_function: lambda = ±1 excluded");
  return a_function_impl(std::polar(1.0, psi), idx, qp);
}

double c_residual_a(GridPoint lambda, const SubspaceIndex& idx, const QParam& qp) {
  // A at a discrete lambda: the stable limit g_z(mu(lambda)) (-eps eta lambda)^{chi(z)}
  const double q = qp.q;
  const int hi = 60;
  auto block = upsilon_g_block(idx, CasimirPoint{true, 0.0, lambda}, hi + 1, qp);
  const double base = -static_cast<double>(idx.eps * idx.eta) * lambda.value(q);
  auto fit = [&](int ze) {
    return block.at(ze) * std::pow(base, static_cast<double>(ze));
  };
  // the subspace grid may start above 0; use the two deepest available z's
  int top = block.rbegin()->first;
  double A1 = fit(top), A2 = fit(top - 1);
  if (std::abs(A1 - A2) > 1e-8 * std::max(1.0, std::abs(A1)))
    throw std::runtime_error("c_residual_a: asymptotic fit did not stabilize");
  return A1;
}

cx e_function(cx lambda, int p_exp, int m, const QParam& qp) {
  const double q = qp.q;
  const double Q = q * q;
  const double coef = -std::pow(q, 1.0 - 2.0 * m - p_exp);
  cx num = qpoch_inf(coef / lambda, Q);
  double rad = (qpoch_inf(coef / lambda, Q) * qpoch_inf(coef * lambda, Q)).real();
  return num / std::sqrt(cx(rad));
}

cx g_function(double psi, const SubspaceIndex& idx, const QParam& qp) {
  cx lam = std::polar(1.0, psi);
  return a_function_impl(lam, idx, qp) * e_function(lam, idx.p_exp, idx.m, qp);
}

cx nu_twist(cx lambda, int tau, int n, int p_exp) {
  if (p_exp % 2 == 0) return std::pow(lambda, static_cast<double>(n));
  // epsilon(p) = 1/2
  return std::sqrt(static_cast<double>(tau) * lambda) / std::sqrt(lambda) *
         std::pow(lambda, static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// the C function

namespace {

struct CGate {
  bool ok = false;
  int p_exp = 0;
  SubspaceIndex lo, up;
  int sigma = 1, tau = 1;
};

CGate c_gate(const CContext& ctx) {
  CGate g;
  g.sigma = ctx.label.p1.sgn;
  g.tau = ctx.label.p2.sgn;
  g.p_exp = -ctx.label.n + ctx.label.p2.exp - ctx.label.p1.exp - 2 * ctx.m;
  g.lo = SubspaceIndex{g.p_exp, ctx.m, ctx.eps, ctx.eta};
  g.up = SubspaceIndex{g.p_exp, ctx.m + ctx.label.n, g.sigma * ctx.eps, g.tau * ctx.eta};
  g.ok = true;
  return g;
}

int c_prefactor(const CContext& ctx, const CGate& g) {
  int pref = sgn_pow(ctx.eps, (1 - g.sigma) / 2);
  pref *= sgn_pow(ctx.eta, (1 - g.tau) / 2 + ctx.label.n);
  return pref;
}

}  // namespace

cx big_c(double psi, const CContext& ctx, const QParam& qp, CRoute route) {
  const CGate g = c_gate(ctx);
  const cx lam = std::polar(1.0, psi);
  const int st = g.sigma * g.tau;
  const cx lam_st = st > 0 ? lam : -lam;
  const double pref = c_prefactor(ctx, g);
  SFunctionParams sp{ctx.label.p1, ctx.label.p2, ctx.label.n};
  cx sval = s_function(sp, static_cast<double>(-st) * lam, qp);
  if (route == CRoute::direct) {
    cx Aup = a_function_impl(lam, g.up, qp);
    cx Alo = a_function_impl(lam_st, g.lo, qp);
    return pref * sval * Aup / Alo;
  }
  // factored route through nu, G and H
  cx nu = nu_twist(lam, g.tau, ctx.label.n, g.p_exp);
  cx Gup = a_function_impl(lam, g.up, qp) * e_function(lam, g.p_exp, ctx.m + ctx.label.n, qp);
  cx Glo = a_function_impl(lam_st, g.lo, qp) * e_function(lam_st, g.p_exp, ctx.m, qp);
  cx H = (1.0 / nu) * e_function(lam_st, g.p_exp, ctx.m, qp) /
         e_function(lam, g.p_exp, ctx.m + ctx.label.n, qp) * sval;
  return pref * nu * (Gup / Glo) * H;
}

double big_c_disc(GridPoint lambda, const CContext& ctx, const QParam& qp) {
  const CGate g = c_gate(ctx);
  const int st = g.sigma * g.tau;
  GridPoint lam_st{st * lambda.sgn, lambda.exp};
  // X-set: lambda in D(up) and sigma tau lambda in D(lo)
  auto in_spectrum = [&](const SubspaceIndex& idx, GridPoint l) {
    for (const auto& pt : discrete_spectrum(idx, qp, 80).points)
      if (pt.lambda == l) return true;
    return false;
  };
  if (!in_spectrum(g.up, lambda) || !in_spectrum(g.lo, lam_st)) return 0.0;
  const double pref = c_prefactor(ctx, g);
  SFunctionParams sp{ctx.label.p1, ctx.label.p2, ctx.label.n};
  cx sval = s_function(sp, static_cast<double>(-st) * lambda.value(qp.q), qp);
  double Aup = c_residual_a(lambda, g.up, qp);
  double Alo = c_residual_a(lam_st, g.lo, qp);
  return pref * sval.real() * Aup / Alo;
}

// ---------------------------------------------------------------------------
// multiplicative unitary

double w_matrix_element(const TensorBasis& in, const TensorBasis& out, const QParam& qp) {
  const BasisVector &f1 = in.first, &f2 = in.second;
  const BasisVector &o1 = out.first, &o2 = out.second;
  // W(f_{m1 p1 t1} (x) f_{m2 p2 t2}) = sum_{r,s} |s/t2| a_s(S, t2) a_r(p1, p2)
  //   f_{m1-D, S, t1} (x) f_{m2+D, r, s},  S = sgn(r p2 t2) s p1 q^{m2}, D = chi(s p2 / t2)
  if (!(o1.t == f1.t)) return 0.0;
  const GridPoint r = o2.p, s = o2.t;
  const int D = s.exp + f2.p.exp - f2.t.exp;
  if (o2.m != f2.m + D || o1.m != f1.m - D) return 0.0;
  GridPoint S{r.sgn * f2.p.sgn * f2.t.sgn * s.sgn * f1.p.sgn, s.exp + f1.p.exp + f2.m};
  if (!S.in_iq() || !(o1.p == S)) return 0.0;
  double val = std::pow(qp.q, static_cast<double>(s.exp - f2.t.exp));
  return val * ap(s, S, f2.t, qp) * ap(r, f1.p, f2.p, qp);
}

double w_star_matrix_element(const TensorBasis& in, const TensorBasis& out, const QParam& qp) {
  const BasisVector &f1 = in.first, &f2 = in.second;
  const BasisVector &o1 = out.first, &o2 = out.second;
  // W*(f1 (x) f2) = sum_{y,z} |t2/y| a_{t2}(p1,y) a_{p2}(z, Z)
  //   f_{m1+m2-D, z, t1} (x) f_{D, Z, y},  Z = sgn(p2 t2) y z q^{m2}/p1,
  //   D = chi(p1 p2 / (t2 z))
  if (!(o1.t == f1.t)) return 0.0;
  const GridPoint z = o1.p, y = o2.t;
  const int D = f1.p.exp + f2.p.exp - f2.t.exp - z.exp;
  if (o2.m != D || o1.m != f1.m + f2.m - D) return 0.0;
  GridPoint Z{f2.p.sgn * f2.t.sgn * y.sgn * z.sgn * f1.p.sgn,
              y.exp + z.exp + f2.m - f1.p.exp};
  if (!Z.in_iq() || !(o2.p == Z)) return 0.0;
  double val = std::pow(qp.q, static_cast<double>(f2.t.exp - y.exp));
  return val * ap(f2.t, f1.p, y, qp) * ap(f2.p, z, Z, qp);
}

std::vector<WTerm> w_expand(const BasisVector& f1, const BasisVector& f2, int window,
                            const QParam& qp) {
  std::vector<WTerm> out;
  IqGrid grid(window);
  for (const GridPoint& r : grid.points()) {
    double ar = ap(r, f1.p, f2.p, qp);
    if (ar == 0.0) continue;
    for (const GridPoint& s : grid.points()) {
      GridPoint S{r.sgn * f2.p.sgn * f2.t.sgn * s.sgn * f1.p.sgn, s.exp + f1.p.exp + f2.m};
      if (!S.in_iq()) continue;
      double as = ap(s, S, f2.t, qp);
      if (as == 0.0) continue;
      const int D = s.exp + f2.p.exp - f2.t.exp;
      double coef = std::pow(qp.q, static_cast<double>(s.exp - f2.t.exp)) * as * ar;
      out.push_back(WTerm{coef, BasisVector{f1.m - D, S, f1.t}, BasisVector{f2.m + D, r, s}});
    }
  }
  return out;
}

namespace {

std::vector<WTerm> expand_w_star(const BasisVector& f1, const BasisVector& f2, int window,
                                 const QParam& qp) {
  std::vector<WTerm> out;
  IqGrid grid(window);
  for (const GridPoint& y : grid.points()) {
    double ay = ap(f2.t, f1.p, y, qp);
    if (ay == 0.0) continue;
    for (const GridPoint& z : grid.points()) {
      GridPoint Z{f2.p.sgn * f2.t.sgn * y.sgn * z.sgn * f1.p.sgn,
                  y.exp + z.exp + f2.m - f1.p.exp};
      if (!Z.in_iq()) continue;
      double az = ap(f2.p, z, Z, qp);
      if (az == 0.0) continue;
      const int D = f1.p.exp + f2.p.exp - f2.t.exp - z.exp;
      double coef = std::pow(qp.q, static_cast<double>(f2.t.exp - y.exp)) * ay * az;
      out.push_back(WTerm{coef, BasisVector{f1.m + f2.m - D, z, f1.t}, BasisVector{D, Z, y}});
    }
  }
  return out;
}

}  // namespace

TensorVector w_apply(const TensorVector& v, int window, const QParam& qp) {
  TensorVector out;
  for (const auto& [b, c] : v.coef)
    for (const WTerm& t : w_expand(b.first, b.second, window, qp))
      out.add({t.o1, t.o2}, c * t.coef);
  return out;
}

TensorVector w_star_apply(const TensorVector& v, int window, const QParam& qp) {
  TensorVector out;
  for (const auto& [b, c] : v.coef)
    for (const WTerm& t : expand_w_star(b.first, b.second, window, qp))
      out.add({t.o1, t.o2}, c * t.coef);
  return out;
}

double pentagon_residual3(const BasisVector& u1, const BasisVector& u2, const BasisVector& u3,
                          const BasisVector& v1, const BasisVector& v2, const BasisVector& v3,
                          int window, const QParam& qp) {
  // <W12 W13 W23 u, v> via two chained O(1) contractions per expansion term
  double lhs = 0.0;
  for (const WTerm& t : w_expand(u2, u3, window, qp)) {
    const BasisVector &x2 = t.o1, &x3 = t.o2;
    // middle factor <W(u1 (x) x3), y1 (x) v3>: (r,s) pinned to v3
    const int D = v3.t.exp + x3.p.exp - x3.t.exp;
    if (v3.m != x3.m + D) continue;
    GridPoint S{v3.p.sgn * x3.p.sgn * x3.t.sgn * v3.t.sgn * u1.p.sgn,
                v3.t.exp + u1.p.exp + x3.m};
    if (!S.in_iq()) continue;
    BasisVector y1{u1.m - D, S, u1.t};
    double me2 = w_matrix_element({u1, x3}, {y1, v3}, qp);
    if (me2 == 0.0) continue;
    double me3 = w_matrix_element({y1, x2}, {v1, v2}, qp);
    if (me3 == 0.0) continue;
    lhs += t.coef * me2 * me3;
  }
  double rhs = 0.0;
  for (const WTerm& t : w_expand(u1, u2, window, qp)) {
    if (!(t.o1 == v1)) continue;
    rhs += t.coef * w_matrix_element({t.o2, u3}, {v2, v3}, qp);
  }
  return std::abs(lhs - rhs);
}

double comult_residual(const QLabel& L, const TensorBasis& u, const TensorBasis& v, int window,
                       const QParam& qp) {
  const BasisVector &a = u.first, &b = u.second, &c = v.first, &d = v.second;
  // LHS: sum_{m,p} <Q(p1,p,m) a, c> <Q(p,p2,n-m) b, d> — the deltas pin (m,p)
  double lhs = 0.0;
  {
    const int m = a.m - c.m;
    const int p_eexp = L.p1.exp + a.p.exp - a.t.exp - c.m;
    const int p_sgn = c.p.sgn * a.p.sgn * a.t.sgn * c.t.sgn * L.p1.sgn;
    GridPoint p{p_sgn, p_eexp};
    if (p.in_iq()) {
      double me1 = q_matrix_element(QLabel{L.p1, p, m}, a, c, qp);
      if (me1 != 0.0) lhs = me1 * q_matrix_element(QLabel{p, L.p2, L.n - m}, b, d, qp);
    }
  }
  // RHS: <(Q (x) Id) W*(a (x) b), W*(c (x) d)>
  double rhs = 0.0;
  for (const WTerm& t : expand_w_star(a, b, window, qp)) {
    const BasisVector &e = t.o1, &g = t.o2;
    // match the second output leg of W*(c (x) d) to g: y' = g.t pinned, z' solved
    const GridPoint yp = g.t;
    GridPoint zp{g.p.sgn * d.p.sgn * d.t.sgn * yp.sgn * c.p.sgn,
                 g.p.exp - yp.exp - d.m + c.p.exp};
    if (!zp.in_iq()) continue;
    BasisVector h{c.m + d.m - (c.p.exp + d.p.exp - d.t.exp - zp.exp), zp, c.t};
    BasisVector j{c.p.exp + d.p.exp - d.t.exp - zp.exp, g.p, yp};
    if (!(j == g)) continue;
    double cw = w_star_matrix_element({c, d}, {h, j}, qp);
    if (cw == 0.0) continue;
    double qme = q_matrix_element(L, e, h, qp);
    if (qme == 0.0) continue;
    rhs += t.coef * cw * qme;
  }
  return std::abs(lhs - rhs);
}

}  // namespace qsu11
