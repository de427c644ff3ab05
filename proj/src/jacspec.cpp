#include "qsu11/jacspec.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <mpfr.h>

#include <algorithm>
#include <cmath>

namespace qsu11 {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Miller-sweep margin: q^margin below machine precision.
int miller_margin(double q) {
  return std::max(40, static_cast<int>(std::ceil(-14.0 / std::log10(q))));
}

// Split (A;q)_inf into exactly-vanishing factors (A q^k = 1) and the rest.
struct PochSplit {
  LogReal rest = LogReal::one();
  std::vector<long> zero_ks;
};

PochSplit qpoch_inf_split(double A, double q, double zero_tol = 1e-9) {
  PochSplit out;
  double x = A;
  for (int k = 0; k < 4000; ++k) {
    double f = 1.0 - x;
    if (std::abs(f) <= zero_tol * std::max(1.0, std::abs(x))) {
      out.zero_ks.push_back(k);
    } else {
      out.rest = out.rest * LogReal::from(f);
    }
    x *= q;
    if (std::abs(x) < 1e-18) break;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Al-Salam--Chihara

double asc_poly(long n, double x, const ASCParams& P) {
  const double q = P.base.q;
  if (n < 0) return 0.0;
  double pm1 = 0.0, p0 = 1.0;
  double qk = 1.0;
  for (long k = 0; k < n; ++k) {
    double p1 = (2.0 * x - qk * (P.a + P.b)) * p0 -
                (1.0 - qk) * (1.0 - P.a * P.b * qk / q) * pm1;
    pm1 = p0;
    p0 = p1;
    qk *= q;
  }
  return p0;
}

namespace {

// Multiprecision complex scratch for the terminating 3phi2: the series with
// upper parameter q^{-n} cancels ~ n(n+1)/2 log10(1/q) digits, so the sum
// runs at adaptive MPFR precision.
struct MpCx {
  mpfr_t re, im;
  explicit MpCx(mpfr_prec_t prec) {
    mpfr_init2(re, prec);
    mpfr_init2(im, prec);
    mpfr_set_zero(re, 1);
    mpfr_set_zero(im, 1);
  }
  ~MpCx() {
    mpfr_clear(re);
    mpfr_clear(im);
  }
  MpCx(const MpCx&) = delete;
  MpCx& operator=(const MpCx&) = delete;
  void set(cx v) {
    mpfr_set_d(re, v.real(), MPFR_RNDN);
    mpfr_set_d(im, v.imag(), MPFR_RNDN);
  }
  cx get() const { return cx(mpfr_get_d(re, MPFR_RNDN), mpfr_get_d(im, MPFR_RNDN)); }
};

// out = a * b
void mp_mul(MpCx& out, const MpCx& a, const MpCx& b, mpfr_t t1, mpfr_t t2) {
  mpfr_mul(t1, a.re, b.re, MPFR_RNDN);
  mpfr_mul(t2, a.im, b.im, MPFR_RNDN);
  mpfr_sub(t1, t1, t2, MPFR_RNDN);
  mpfr_mul(t2, a.re, b.im, MPFR_RNDN);
  mpfr_swap(out.re, t1);
  mpfr_mul(t1, a.im, b.re, MPFR_RNDN);
  mpfr_add(out.im, t1, t2, MPFR_RNDN);
}

}  // namespace

cx asc_poly_3phi2(long n, cx y, const ASCParams& P) {
  const double q = P.base.q;
  const mpfr_prec_t prec = static_cast<mpfr_prec_t>(
      128 + std::ceil(0.5 * static_cast<double>(n) * (n + 1) * std::log2(1.0 / q)));

  mpfr_t qq, qk, qmn, den, t1, t2, pref;
  mpfr_inits2(prec, qq, qk, qmn, den, t1, t2, pref, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_d(qq, q, MPFR_RNDN);
  mpfr_set_ui(qk, 1, MPFR_RNDN);
  mpfr_ui_pow_ui(t1, 1, 1, MPFR_RNDN);
  // q^{-n}
  mpfr_pow_si(qmn, qq, -n, MPFR_RNDN);
  // prefactor a^{-n} (ab;q)_n
  mpfr_set_ui(pref, 1, MPFR_RNDN);
  {
    mpfr_t ab;
    mpfr_init2(ab, prec);
    mpfr_set_d(ab, P.a * P.b, MPFR_RNDN);
    for (long k = 0; k < n; ++k) {
      mpfr_ui_sub(t1, 1, ab, MPFR_RNDN);
      mpfr_mul(pref, pref, t1, MPFR_RNDN);
      mpfr_div_d(pref, pref, P.a, MPFR_RNDN);
      mpfr_mul(ab, ab, qq, MPFR_RNDN);
    }
    mpfr_clear(ab);
  }

  MpCx term(prec), sum(prec), f1(prec), f2(prec), f3(prec), tmp(prec);
  term.set(cx(1.0, 0.0));
  sum.set(cx(1.0, 0.0));
  const cx ay = P.a * y, aoy = P.a / y;
  mpfr_t abk;
  mpfr_init2(abk, prec);
  mpfr_set_d(abk, P.a * P.b, MPFR_RNDN);
  for (long k = 0; k < n; ++k) {
    // numerator factors (1 - q^{-n} q^k), (1 - a y q^k), (1 - a/y q^k)
    mpfr_mul(t1, qmn, qk, MPFR_RNDN);
    mpfr_ui_sub(t1, 1, t1, MPFR_RNDN);
    mpfr_set(f1.re, t1, MPFR_RNDN);
    mpfr_set_zero(f1.im, 1);
    // f2 = 1 - ay q^k  (ay complex, q^k from mpfr)
    mpfr_mul_d(t1, qk, ay.real(), MPFR_RNDN);
    mpfr_ui_sub(f2.re, 1, t1, MPFR_RNDN);
    mpfr_mul_d(f2.im, qk, -ay.imag(), MPFR_RNDN);
    mpfr_mul_d(t1, qk, aoy.real(), MPFR_RNDN);
    mpfr_ui_sub(f3.re, 1, t1, MPFR_RNDN);
    mpfr_mul_d(f3.im, qk, -aoy.imag(), MPFR_RNDN);
    // den = (1 - q^{k+1})(1 - ab q^k); lower parameter 0 contributes 1
    mpfr_mul(t1, qq, qk, MPFR_RNDN);
    mpfr_ui_sub(den, 1, t1, MPFR_RNDN);
    mpfr_ui_sub(t1, 1, abk, MPFR_RNDN);
    mpfr_mul(den, den, t1, MPFR_RNDN);

    mp_mul(tmp, term, f1, t1, t2);
    mp_mul(term, tmp, f2, t1, t2);
    mp_mul(tmp, term, f3, t1, t2);
    mpfr_div(tmp.re, tmp.re, den, MPFR_RNDN);
    mpfr_div(tmp.im, tmp.im, den, MPFR_RNDN);
    // * z with z = q
    mpfr_mul(term.re, tmp.re, qq, MPFR_RNDN);
    mpfr_mul(term.im, tmp.im, qq, MPFR_RNDN);
    mpfr_add(sum.re, sum.re, term.re, MPFR_RNDN);
    mpfr_add(sum.im, sum.im, term.im, MPFR_RNDN);

    mpfr_mul(qk, qk, qq, MPFR_RNDN);
    mpfr_mul(abk, abk, qq, MPFR_RNDN);
  }
  mpfr_mul(sum.re, sum.re, pref, MPFR_RNDN);
  mpfr_mul(sum.im, sum.im, pref, MPFR_RNDN);
  cx out = sum.get();
  mpfr_clears(qq, qk, qmn, den, t1, t2, pref, abk, static_cast<mpfr_ptr>(nullptr));
  return out;
}

cx asc_poly_2phi1(long n, cx y, const ASCParams& P) {
  const double q = P.base.q;
  cx low = std::pow(q, static_cast<double>(1 - n)) * y / P.a;
  cx pref = qpoch(P.a / y, q, n) * std::pow(y, static_cast<double>(n));
  cx ser = rphis({std::pow(q, static_cast<double>(-n)), P.b * y}, {low}, q, q / (y * P.a));
  return pref * ser;
}

double asc_orthonormal(long n, double x, const ASCParams& P) {
  const double q = P.base.q;
  double norm = 1.0;
  double xq = q, xab = P.a * P.b;
  for (long k = 0; k < n; ++k) {
    norm *= (1.0 - xq) * (1.0 - xab);
    xq *= q;
    xab *= q;
  }
  return asc_poly(n, x, P) / std::sqrt(norm);
}

cx asc_c_function(cx y, const ASCParams& P) {
  const double q = P.base.q;
  cx num = qpoch_inf(P.a / y, q) * qpoch_inf(P.b / y, q);
  cx den = qpoch_inf(1.0 / (y * y), q);
  if (std::abs(den) == 0.0) throw pole_error("asc_c_function: nonremovable pole");
  double nrm = std::sqrt((qpoch_inf_log(q, q) * qpoch_inf_log(P.a * P.b, q)).to_double());
  return num / (den * nrm);
}

double asc_c_at_inverse_mass(const ASCParams& P, int family, int r) {
  const double q = P.base.q;
  const double e = family == 0 ? P.a : P.b;
  const double s = e * std::pow(q, r);

  // c(1/s) = (a s, b s; q)_inf / ((s^2;q)_inf sqrt((q,ab;q)_inf)),
  // 0/0 pairs resolved by d/dy at y = s.
  PochSplit na = qpoch_inf_split(P.a * s, q);
  PochSplit nb = qpoch_inf_split(P.b * s, q);
  PochSplit de = qpoch_inf_split(s * s, q);
  size_t nz = na.zero_ks.size() + nb.zero_ks.size();
  if (nz < de.zero_ks.size())
    throw pole_error("asc_c_at_inverse_mass: genuine pole (non-simple zero structure)");
  LogReal val = na.rest * nb.rest / de.rest;
  for (long k : na.zero_ks) val = val * LogReal::from(-P.a * std::pow(q, k));
  for (long k : nb.zero_ks) val = val * LogReal::from(-P.b * std::pow(q, k));
  for (long k : de.zero_ks) val = val / LogReal::from(-2.0 * s * std::pow(q, k));
  if (nz > de.zero_ks.size()) return 0.0;
  double nrm = std::sqrt((qpoch_inf_log(q, q) * qpoch_inf_log(P.a * P.b, q)).to_double());
  return val.to_double() / nrm;
}

double asc_w_mass(const ASCParams& P, int family, int r) {
  const double q = P.base.q;
  const double e = family == 0 ? P.a : P.b;
  const double f = family == 0 ? P.b : P.a;
  LogReal w = qpoch_inf_log(1.0 / (e * e), q) / qpoch_inf_log(f / e, q);
  w = w * qpoch_log(e * e, q, r) * qpoch_log(e * f, q, r);
  w = w / (qpoch_log(q, q, r) * qpoch_log(e * q / f, q, r));
  w = w * LogReal::from(1.0 - e * e * std::pow(q, 2.0 * r)) / LogReal::from(1.0 - e * e);
  const double logq = std::log(q);
  w = w * LogReal{-static_cast<double>(r) * static_cast<double>(r) * logq, 1};
  w = w * LogReal::from(std::pow(e, -3.0 * r)) * LogReal::from(std::pow(f, static_cast<double>(-r)));
  double out = w.to_double();
  if (!(out > 0.0))
    throw std::domain_error("asc_w_mass: nonpositive mass (parameter regime violated)");
  return out;
}

std::vector<MassPoint> asc_mass_points(const ASCParams& P) {
  const double q = P.base.q;
  std::vector<MassPoint> pts;
  for (int family = 0; family < 2; ++family) {
    const double e = family == 0 ? P.a : P.b;
    if (family == 1 && P.b == P.a) break;
    for (int r = 0;; ++r) {
      double s = e * std::pow(q, r);
      if (!(std::abs(s) > 1.0)) break;
      MassPoint mp;
      mp.s = s;
      mp.x = mu(s);
      mp.mass = asc_w_mass(P, family, r);
      mp.family = family;
      mp.r = r;
      pts.push_back(mp);
    }
  }
  return pts;
}

SpectralMeasure asc_measure(const ASCParams& P) {
  SpectralMeasure m;
  m.discrete = asc_mass_points(P);
  ASCParams Pc = P;
  m.density_psi = [Pc](double psi) {
    cx y = std::polar(1.0, psi);
    cx c = asc_c_function(y, Pc);
    return 1.0 / (2.0 * kPi * std::norm(c));
  };
  return m;
}

TridiagonalOperator asc_operator(const ASCParams& P, long k_hi) {
  const double q = P.base.q;
  TridiagonalOperator op;
  const double a = P.a, b = P.b, ab = P.a * P.b;
  op.diag = [a, b, q](long k) { return std::pow(q, static_cast<double>(k)) * (a + b); };
  op.off = [ab, q](long k) {
    return std::sqrt((1.0 - std::pow(q, static_cast<double>(k + 1))) *
                     (1.0 - ab * std::pow(q, static_cast<double>(k))));
  };
  op.z_indexed = false;
  op.k_lo = 0;
  op.k_hi = k_hi;
  return op;
}

double asc_h_cont(long n, double psi, const ASCParams& P) {
  return asc_h_cont_range(n, psi, P).back();
}

std::vector<double> asc_h_cont_range(long nmax, double psi, const ASCParams& P) {
  if (!(std::abs(std::sin(psi)) > 1e-300))
    throw std::domain_error("asc_h_cont: endpoints x = ±1 are excluded");
  const double q = P.base.q;
  const double x = std::cos(psi);
  cx c = asc_c_function(std::polar(1.0, psi), P);
  const double w = 1.0 / std::sqrt(2.0 * kPi * std::abs(std::sin(psi))) / std::abs(c);
  std::vector<double> out(static_cast<size_t>(nmax) + 1);
  double pm1 = 0.0, p0 = 1.0, norm = 1.0;
  double xq = q, xab = P.a * P.b, qk = 1.0;
  for (long n = 0; n <= nmax; ++n) {
    out[static_cast<size_t>(n)] = w * p0 / std::sqrt(norm);
    double p1 = (2.0 * x - qk * (P.a + P.b)) * p0 - (1.0 - qk) * (1.0 - P.a * P.b * qk / q) * pm1;
    pm1 = p0;
    p0 = p1;
    norm *= (1.0 - xq) * (1.0 - xab);
    xq *= q;
    xab *= q;
    qk *= q;
  }
  return out;
}

std::vector<double> asc_h_disc_range(long nmax, int family, int r, const ASCParams& P) {
  const double q = P.base.q;
  const double e = family == 0 ? P.a : P.b;
  const double s = e * std::pow(q, r);
  if (!(std::abs(s) > 1.0)) throw std::domain_error("asc_h_disc_range: not a mass point");
  const double x = mu(s);
  const long K = nmax + miller_margin(q);

  // trial backward sweep; h_n is minimal as n -> infinity, so this is stable
  std::vector<double> t(static_cast<size_t>(K) + 2, 0.0);
  t[static_cast<size_t>(K) + 1] = 0.0;
  t[static_cast<size_t>(K)] = 1.0;
  auto cn = [&](long n) {
    return std::sqrt((1.0 - std::pow(q, static_cast<double>(n + 1))) *
                     (1.0 - P.a * P.b * std::pow(q, static_cast<double>(n))));
  };
  auto dn = [&](long n) { return std::pow(q, static_cast<double>(n)) * (P.a + P.b); };
  for (long k = K; k >= 1; --k) {
    double tm = ((2.0 * x - dn(k)) * t[static_cast<size_t>(k)] -
                 cn(k) * t[static_cast<size_t>(k) + 1]) /
                cn(k - 1);
    t[static_cast<size_t>(k) - 1] = tm;
    if (std::abs(tm) > 1e200) {
      for (size_t j = static_cast<size_t>(k) - 1; j < t.size(); ++j) t[j] *= 1e-200;
    }
  }
  const double scale = std::sqrt(asc_w_mass(P, family, r)) / t[0];
  std::vector<double> out(static_cast<size_t>(nmax) + 1);
  for (long n = 0; n <= nmax; ++n) out[static_cast<size_t>(n)] = t[static_cast<size_t>(n)] * scale;
  return out;
}

// ---------------------------------------------------------------------------
// little q-Jacobi functions

LogReal lqj_rho_log(long k, const LqJParams& P) {
  const double q = P.base.q;
  double qa = std::pow(q, static_cast<double>(1 + k));
  LogReal r2 = qpoch_inf_log(P.c * qa / (P.d * P.d * P.z), q) / qpoch_inf_log(qa / P.z, q);
  return r2.sqrt();
}

double lqj_rho(long k, const LqJParams& P) { return lqj_rho_log(k, P).to_double(); }

cx lqj_f_series(long k, cx y, const LqJParams& P) {
  const double q = P.base.q;
  const double arg = P.z * std::pow(q, static_cast<double>(-k));
  if (!(std::abs(arg) < 1.0))
    throw divergent_error("lqj_f_series: |z q^{-k}| >= 1, use the connection formula");
  cx pref = qpoch_inf(cx(P.c), q) * qpoch_inf(cx(P.z), q) * qpoch_inf(cx(q / P.z), q) *
            std::pow(P.d, static_cast<double>(-k));
  return pref * rphis({P.d * y, P.d / y}, {cx(P.c)}, q, cx(arg));
}

cx lqj_F(long k, cx y, const LqJParams& P) {
  const double q = P.base.q;
  const double arg = std::pow(q, static_cast<double>(1 + k)) * P.c / (P.d * P.d * P.z);
  if (!(std::abs(arg) < 1.0))
    throw divergent_error("lqj_F: argument outside the unit disk");
  return std::pow(y, static_cast<double>(k)) *
         rphis({P.d * y, q * P.d * y / P.c}, {q * y * y}, q, cx(arg));
}

cx lqj_c(cx y, const LqJParams& P) {
  const double q = P.base.q;
  cx num = qpoch_inf(P.c / (P.d * y), q) * qpoch_inf(P.d / y, q) * qpoch_inf(P.d * P.z * y, q) *
           qpoch_inf(q / (P.d * P.z * y), q);
  cx den = qpoch_inf(1.0 / (y * y), q);
  if (std::abs(den) == 0.0) throw pole_error("lqj_c: nonremovable pole");
  return num / den;
}

namespace {
double lqj_mass_s(const LqJParams& P, int family, int r) {
  const double q = P.base.q;
  switch (family) {
    case 0: return std::pow(q, static_cast<double>(1 - r)) / (P.d * P.z);
    case 1: return (P.c / P.d) * std::pow(q, static_cast<double>(r));
    default: return P.d * std::pow(q, static_cast<double>(r));
  }
}
}  // namespace

double lqj_c_at_inverse_mass(const LqJParams& P, int family, int r) {
  const double q = P.base.q;
  const double s = lqj_mass_s(P, family, r);
  // c(1/s) = (cs/d, ds, dz/s, qs/(dz); q)_inf / (s^2;q)_inf, 0/0 removable.
  struct Fac {
    double A;       // argument at y = s
    double dcoeff;  // d/dy of the argument at y = s
  };
  const Fac num[4] = {{P.c * s / P.d, P.c / P.d},
                      {P.d * s, P.d},
                      {P.d * P.z / s, -P.d * P.z / (s * s)},
                      {q * s / (P.d * P.z), q / (P.d * P.z)}};
  LogReal val = LogReal::one();
  size_t nzero = 0;
  for (const Fac& fc : num) {
    PochSplit sp = qpoch_inf_split(fc.A, q);
    val = val * sp.rest;
    for (long k : sp.zero_ks) {
      val = val * LogReal::from(-fc.dcoeff * std::pow(q, k));
      ++nzero;
    }
  }
  PochSplit de = qpoch_inf_split(s * s, q);
  val = val / de.rest;
  size_t dzero = de.zero_ks.size();
  for (long k : de.zero_ks) val = val / LogReal::from(-2.0 * s * std::pow(q, k));
  if (nzero < dzero)
    throw pole_error("lqj_c_at_inverse_mass: genuine pole (non-simple zero structure)");
  if (nzero > dzero) return 0.0;
  return val.to_double();
}

double lqj_v_mass(const LqJParams& P, int r) {
  const double q = P.base.q;
  const double logq = std::log(q);
  const double dz = P.d * P.z;
  LogReal v = LogReal::from(-(1.0 - std::pow(q, 2.0 - 2.0 * r) / (dz * dz)));
  v = v * LogReal::from(dz * dz).pow_int(1 - r);
  v = v * LogReal{-static_cast<double>(r - 2) * static_cast<double>(r - 1) * logq, 1};
  LogReal den = qpoch_inf_log(q, q) * qpoch_inf_log(q, q);
  den = den * qpoch_inf_log(P.c * std::pow(q, 1.0 - r) / (P.d * P.d * P.z), q);
  den = den * qpoch_inf_log(std::pow(q, 1.0 - r) / P.z, q);
  den = den * qpoch_inf_log(P.c * P.z * std::pow(q, r - 1.0), q);
  den = den * qpoch_inf_log(P.d * P.d * P.z * std::pow(q, r - 1.0), q);
  double out = (v / den).to_double();
  if (!(out > 0.0)) throw std::domain_error("lqj_v_mass: nonpositive mass");
  return out;
}

double lqj_w_mass(const LqJParams& P, int r) {
  const double q = P.base.q;
  const double c = P.c, d = P.d, z = P.z;
  LogReal w = qpoch_inf_log(d * d / (c * c), q);
  LogReal den = qpoch_inf_log(q, q) * qpoch_inf_log(c, q) * qpoch_inf_log(d * d / c, q) *
                qpoch_inf_log(c * z, q) * qpoch_inf_log(d * d * z / c, q) *
                qpoch_inf_log(c * q / (d * d * z), q) * qpoch_inf_log(q / (z * c), q);
  w = w / den;
  w = w * LogReal::from((1.0 - c * c * std::pow(q, 2.0 * r) / (d * d)) / (1.0 - c * c / (d * d)));
  w = w * qpoch_log(c * c / (d * d), q, r) * qpoch_log(c, q, r);
  w = w / (qpoch_log(q, q, r) * qpoch_log(c * q / (d * d), q, r));
  w = w * LogReal::from(c).pow_int(-r);
  double out = w.to_double();
  if (!(out > 0.0)) throw std::domain_error("lqj_w_mass: nonpositive mass");
  return out;
}

double lqj_wp_mass(const LqJParams& P, int r) {
  const double q = P.base.q;
  const double c = P.c, d = P.d, z = P.z;
  LogReal w = qpoch_inf_log(1.0 / (d * d), q);
  LogReal den = qpoch_inf_log(q, q) * qpoch_inf_log(c, q) * qpoch_inf_log(c / (d * d), q) *
                qpoch_inf_log(d * d * z, q) * qpoch_inf_log(z, q) * qpoch_inf_log(q / z, q) *
                qpoch_inf_log(q / (d * d * z), q);
  w = w / den;
  w = w * LogReal::from((1.0 - d * d * std::pow(q, 2.0 * r)) / (1.0 - d * d));
  w = w * qpoch_log(d * d, q, r) * qpoch_log(c, q, r);
  w = w / (qpoch_log(q, q, r) * qpoch_log(q * d * d / c, q, r));
  w = w * LogReal::from(c).pow_int(-r);
  double out = w.to_double();
  if (!(out > 0.0)) throw std::domain_error("lqj_wp_mass: nonpositive mass");
  return out;
}

namespace {

// index with |z q^{-k}| < q (safe direct series)
long lqj_direct_index(const LqJParams& P) {
  const double q = P.base.q;
  long k = static_cast<long>(std::floor(std::log(std::abs(P.z)) / std::log(q))) - 1;
  while (!(std::abs(P.z * std::pow(q, static_cast<double>(-k))) < q)) --k;
  return k;
}

struct LqJCoeffs {
  double q, c, d, z;
  double a(long k) const {
    double qk1 = std::pow(q, static_cast<double>(k + 1));
    return std::sqrt((1.0 - qk1 / z) * (1.0 - c * qk1 / (d * d * z)));
  }
  double b(long k) const { return std::pow(q, static_cast<double>(k)) * (c + q) / (d * z); }
};

double lqj_u_direct(long k, double y_real, const LqJParams& P) {
  return (lqj_rho_log(k, P) * LogReal::from(lqj_f_series(k, cx(y_real), P).real()))
      .to_double();
}

// Deepest index at which the direct series is cancellation-free for real y:
// requires |d y z q^{-k}| <= 1 on top of |z q^{-k}| < 1.
long lqj_stable_direct_index(const LqJParams& P, double y_abs) {
  const double q = P.base.q;
  long k = lqj_direct_index(P);
  double big = std::max({std::abs(P.d * y_abs), std::abs(P.d / y_abs), 1.0});
  while (!(big * std::abs(P.z) * std::pow(q, static_cast<double>(-k)) <= 1.0)) --k;
  return k;
}

}  // namespace

std::vector<double> lqj_u_cont_range(long k_lo, long k_hi, double psi, const LqJParams& P) {
  const LqJCoeffs C{P.base.q, P.c, P.d, P.z};
  const double x = std::cos(psi);
  const cx y = std::polar(1.0, psi);
  const long k0 = std::min(lqj_direct_index(P), k_hi);

  std::vector<double> out(static_cast<size_t>(k_hi - k_lo) + 1, 0.0);
  auto put = [&](long k, double v) {
    if (k >= k_lo && k <= k_hi) out[static_cast<size_t>(k - k_lo)] = v;
  };
  // direct series term by term wherever it converges (|y| = 1 keeps the
  // coefficients moderate, so every k <= k0 is cancellation-free)
  for (long k = k_lo; k <= std::min(k_hi, k0); ++k)
    put(k, (lqj_rho_log(k, P) * LogReal::from(lqj_f_series(k, y, P).real())).to_double());
  if (k_hi <= k0) return out;

  // upward recurrence: both solutions stay bounded on the continuous spectrum
  double pm = (lqj_rho_log(k0 - 1, P) * LogReal::from(lqj_f_series(k0 - 1, y, P).real()))
                  .to_double();
  double p0 = (lqj_rho_log(k0, P) * LogReal::from(lqj_f_series(k0, y, P).real())).to_double();
  for (long k = k0; k < k_hi; ++k) {
    double p1 = ((2.0 * x - C.b(k)) * p0 - C.a(k - 1) * pm) / C.a(k);
    pm = p0;
    p0 = p1;
    put(k + 1, p1);
  }
  return out;
}

std::vector<double> lqj_u_disc_range(long k_lo, long k_hi, int family, int r,
                                     const LqJParams& P) {
  const LqJCoeffs C{P.base.q, P.c, P.d, P.z};
  const double s = lqj_mass_s(P, family, r);
  if (!(std::abs(s) > 1.0)) throw std::domain_error("lqj_u_disc_range: not a mass point");
  const double x = mu(s);

  // The eigenvector is minimal upward of its localization site and minimal
  // downward below it, so: direct series at and below k_norm (where the
  // series is cancellation-free), backward Miller sweep above, glued at k_norm.
  const long k_norm = lqj_stable_direct_index(P, std::abs(s));
  const long K = std::max(k_hi, k_norm) + miller_margin(P.base.q);

  std::vector<double> out(static_cast<size_t>(k_hi - k_lo) + 1, 0.0);
  auto put = [&](long k, double v) {
    if (k >= k_lo && k <= k_hi) out[static_cast<size_t>(k - k_lo)] = v;
  };
  for (long k = k_lo; k <= std::min(k_hi, k_norm); ++k) put(k, lqj_u_direct(k, s, P));
  if (k_hi <= k_norm) return out;

  const long lo = k_norm;
  std::vector<double> t(static_cast<size_t>(K - lo) + 2, 0.0);
  auto T = [&](long k) -> double& { return t[static_cast<size_t>(k - lo)]; };
  T(K + 1) = 0.0;
  T(K) = 1.0;
  for (long k = K; k > lo; --k) {
    double tm = ((2.0 * x - C.b(k)) * T(k) - C.a(k) * T(k + 1)) / C.a(k - 1);
    T(k - 1) = tm;
    if (std::abs(tm) > 1e200) {
      for (long j = k - 1; j <= K + 1; ++j) T(j) *= 1e-200;
    }
  }
  double u_norm = lqj_u_direct(k_norm, s, P);
  if (T(k_norm) == 0.0) throw std::runtime_error("lqj_u_disc_range: normalization failed");
  const double scale = u_norm / T(k_norm);
  for (long k = std::max(k_lo, k_norm + 1); k <= k_hi; ++k) put(k, T(k) * scale);
  return out;
}

double lqj_j_cont(long k, double psi, const LqJParams& P) {
  return lqj_j_cont_range(k, k, psi, P).front();
}

std::vector<double> lqj_j_cont_range(long k_lo, long k_hi, double psi, const LqJParams& P) {
  if (!(std::abs(std::sin(psi)) > 1e-300))
    throw std::domain_error("lqj_j_cont: endpoints x = ±1 are excluded");
  std::vector<double> u = lqj_u_cont_range(k_lo, k_hi, psi, P);
  cx c = lqj_c(std::polar(1.0, psi), P);
  const double w = 1.0 / (std::sqrt(2.0 * kPi * std::abs(std::sin(psi))) * std::abs(c));
  for (double& v : u) v *= w;
  return u;
}

std::vector<double> lqj_j_disc_range(long k_lo, long k_hi, int family, int r,
                                     const LqJParams& P) {
  std::vector<double> u = lqj_u_disc_range(k_lo, k_hi, family, r, P);
  double mass = family == 0   ? lqj_v_mass(P, r)
                : family == 1 ? lqj_w_mass(P, r)
                              : lqj_wp_mass(P, r);
  const double w = std::sqrt(mass);
  for (double& v : u) v *= w;
  return u;
}

std::vector<MassPoint> lqj_mass_points(const LqJParams& P, double mass_floor,
                                       double* tail_bound) {
  const double q = P.base.q;
  (void)q;
  std::vector<MassPoint> pts;
  double tail = 0.0;

  auto e0_weight = [&](int family, int r) {
    double u = lqj_u_disc_range(0, 0, family, r, P).front();
    return u * u;
  };

  // v_r family: r in Z with |q^{1-r}/(dz)| > 1; infinite toward r -> +inf,
  // the e0-weighted masses decay like a Gaussian in r
  {
    int r_min = 0;
    while (std::abs(lqj_mass_s(P, 0, r_min)) > 1.0) --r_min;
    while (!(std::abs(lqj_mass_s(P, 0, r_min)) > 1.0)) ++r_min;
    int small_run = 0;
    for (int r = r_min; r < r_min + 200; ++r) {
      double s = lqj_mass_s(P, 0, r);
      double m = lqj_v_mass(P, r);
      double wgt = m * e0_weight(0, r);
      if (wgt < mass_floor) {
        ++small_run;
        tail += wgt;
        if (small_run >= 3) break;
        continue;
      }
      small_run = 0;
      pts.push_back(MassPoint{s, mu(s), m, 0, r});
    }
  }
  // w_r family at (c/d) q^r and w'_r family at d q^r, r in N0, finite
  for (int family = 1; family <= 2; ++family) {
    for (int r = 0;; ++r) {
      double s = lqj_mass_s(P, family, r);
      if (!(std::abs(s) > 1.0)) break;
      double m = family == 1 ? lqj_w_mass(P, r) : lqj_wp_mass(P, r);
      pts.push_back(MassPoint{s, mu(s), m, family, r});
    }
  }
  if (tail_bound) *tail_bound = 2.0 * tail;
  std::sort(pts.begin(), pts.end(),
            [](const MassPoint& a, const MassPoint& b) { return std::abs(a.x) < std::abs(b.x); });
  return pts;
}

SpectralMeasure lqj_measure(const LqJParams& P, double mass_floor) {
  SpectralMeasure m;
  m.discrete = lqj_mass_points(P, mass_floor, &m.discrete_tail_bound);
  LqJParams Pc = P;
  m.density_psi = [Pc](double psi) {
    cx c = lqj_c(std::polar(1.0, psi), Pc);
    return 1.0 / (2.0 * kPi * std::norm(c));
  };
  return m;
}

SpectralMeasure lqj_e0_measure(const LqJParams& P, double mass_floor) {
  SpectralMeasure raw = lqj_measure(P, mass_floor);
  LqJParams Pc = P;
  SpectralMeasure m;
  m.discrete_tail_bound = raw.discrete_tail_bound;
  for (const MassPoint& mp : raw.discrete) {
    MassPoint w = mp;
    double u0 = lqj_u_disc_range(0, 0, mp.family, mp.r, Pc).front();
    w.mass = mp.mass * u0 * u0;
    m.discrete.push_back(w);
  }
  auto raw_density = raw.density_psi;
  m.density_psi = [raw_density, Pc](double psi) {
    double u0 = lqj_u_cont_range(0, 0, psi, Pc).front();
    return raw_density(psi) * u0 * u0;
  };
  return m;
}

TridiagonalOperator lqj_operator(const LqJParams& P, long k_lo, long k_hi) {
  LqJCoeffs C{P.base.q, P.c, P.d, P.z};
  TridiagonalOperator op;
  op.diag = [C](long k) { return C.b(k); };
  op.off = [C](long k) { return C.a(k); };
  op.z_indexed = true;
  op.k_lo = k_lo;
  op.k_hi = k_hi;
  return op;
}

SpectralMeasure cq_extension_measure(double d, double z, const QParam& q, double mass_floor) {
  return lqj_measure(LqJParams(q.q, d, z, q), mass_floor);
}

// ---------------------------------------------------------------------------
// oracle + integration

EigResult truncated_eig(const TridiagonalOperator& op, bool want_vectors) {
  const long n = op.k_hi - op.k_lo + 1;
  if (n < 2) throw std::domain_error("truncated_eig: window must hold at least 2 points");
  Eigen::VectorXd diag(n), sub(n - 1);
  for (long i = 0; i < n; ++i) diag[i] = 0.5 * op.diag(op.k_lo + i);
  for (long i = 0; i + 1 < n; ++i) sub[i] = 0.5 * op.off(op.k_lo + i);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub,
                            want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("truncated_eig: solver failed");
  EigResult out;
  out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  if (want_vectors) {
    out.eigenvectors.resize(static_cast<size_t>(n));
    for (long j = 0; j < n; ++j)
      out.eigenvectors[static_cast<size_t>(j)].assign(es.eigenvectors().col(j).data(),
                                                      es.eigenvectors().col(j).data() + n);
  }
  return out;
}

double operator_moment(const TridiagonalOperator& op, int j, long k0) {
  if (k0 < op.k_lo || k0 > op.k_hi) throw std::domain_error("operator_moment: k0 outside window");
  const long n = op.k_hi - op.k_lo + 1;
  std::vector<double> v(static_cast<size_t>(n), 0.0), w(static_cast<size_t>(n), 0.0);
  v[static_cast<size_t>(k0 - op.k_lo)] = 1.0;
  for (int it = 0; it < j; ++it) {
    for (long i = 0; i < n; ++i) {
      double acc = op.diag(op.k_lo + i) * v[static_cast<size_t>(i)];
      if (i > 0) acc += op.off(op.k_lo + i - 1) * v[static_cast<size_t>(i) - 1];
      if (i + 1 < n) acc += op.off(op.k_lo + i) * v[static_cast<size_t>(i) + 1];
      w[static_cast<size_t>(i)] = 0.5 * acc;
    }
    std::swap(v, w);
  }
  return v[static_cast<size_t>(k0 - op.k_lo)];
}

double measure_integrate(const SpectralMeasure& m, const std::function<double(double)>& f,
                         double quad_tol) {
  double err = 0.0;
  auto g = [&](double psi) { return f(std::cos(psi)) * m.density_psi(psi); };
  double cont = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, kPi, 15,
                                                                              quad_tol, &err);
  if (!(err <= std::max(quad_tol * 100.0, 1e-8 * std::max(1.0, std::abs(cont)))))
    throw std::runtime_error("measure_integrate: quadrature failed to converge");
  double disc = 0.0;
  for (const MassPoint& mp : m.discrete) disc += f(mp.x) * mp.mass;
  return cont + disc;
}

}  // namespace qsu11
