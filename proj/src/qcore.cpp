#include "qsu11/qcore.hpp"

#include <algorithm>
#include <cstdio>
#include <charconv>

namespace qsu11 {

std::string grid_token(GridPoint p) {
  std::string s;
  if (p.sgn < 0) s += '-';
  s += "q^";
  s += std::to_string(p.exp);
  return s;
}

std::optional<GridPoint> parse_grid_token(std::string_view tok) {
  GridPoint p;
  if (!tok.empty() && tok.front() == '-') {
    p.sgn = -1;
    tok.remove_prefix(1);
  }
  if (tok.size() < 3 || tok[0] != 'q' || tok[1] != '^') return std::nullopt;
  tok.remove_prefix(2);
  int k = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), k);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  p.exp = k;
  return p;
}

int chi_of(double x, double q) {
  if (x == 0.0) throw std::domain_error("chi_of: zero is not a grid point");
  double e = std::log(std::abs(x)) / std::log(q);
  long k = std::lround(e);
  if (std::abs(e - static_cast<double>(k)) > 1e-8)
    throw std::domain_error("chi_of: value is not on the grid");
  return static_cast<int>(k);
}

// ---------------------------------------------------------------------------
// q-shifted factorials

cx qpoch_inf(cx a, double q, double tail_tol) {
  cx prod = 1.0;
  cx x = a;
  for (int k = 0; k < 100000; ++k) {
    prod *= (1.0 - x);
    x *= q;
    if (std::abs(x) < tail_tol) break;
  }
  if (!std::isfinite(prod.real()) || !std::isfinite(prod.imag()))
    throw std::overflow_error("qpoch_inf: product overflow");
  return prod;
}

cx qpoch(cx a, double q, long n) {
  if (n >= 0) {
    cx prod = 1.0;
    cx x = a;
    for (long k = 0; k < n; ++k) {
      prod *= (1.0 - x);
      x *= q;
    }
    return prod;
  }
  // (a;q)_{-m} = 1 / (a q^{-m}; q)_m
  long m = -n;
  cx prod = 1.0;
  cx x = a * std::pow(q, static_cast<double>(-m));
  for (long k = 0; k < m; ++k) {
    cx f = 1.0 - x;
    if (std::abs(f) < 1e-14 * (1.0 + std::abs(x)))
      throw pole_error("qpoch: zero factor in denominator at negative n");
    prod *= f;
    x *= q;
  }
  return 1.0 / prod;
}

LogReal qpoch_inf_log(double a, double q) {
  LogReal r = LogReal::one();
  double x = a;
  for (int k = 0; k < 200000; ++k) {
    double f = 1.0 - x;
    if (f == 0.0) return LogReal::zero();
    r = r * LogReal::from(f);
    x *= q;
    if (std::abs(x) < 1e-18) break;
  }
  return r;
}

LogReal qpoch_log(double a, double q, long n) {
  if (n >= 0) {
    LogReal r = LogReal::one();
    double x = a;
    for (long k = 0; k < n; ++k) {
      r = r * LogReal::from(1.0 - x);
      x *= q;
    }
    return r;
  }
  long m = -n;
  LogReal r = LogReal::one();
  double x = a * std::exp(static_cast<double>(-m) * std::log(q));
  for (long k = 0; k < m; ++k) {
    double f = 1.0 - x;
    if (std::abs(f) < 1e-13 * (1.0 + std::abs(x)))
      throw pole_error("qpoch_log: zero factor in denominator at negative n");
    r = r * LogReal::from(f);
    x *= q;
  }
  return LogReal::one() / r;
}

std::vector<LogReal> qpoch_inf_suffix_log(double a, double q, int N) {
  std::vector<LogReal> out(static_cast<size_t>(N) + 1);
  out[static_cast<size_t>(N)] = qpoch_inf_log(a * std::pow(q, N), q);
  double x = a * std::pow(q, N - 1);
  for (int n = N - 1; n >= 0; --n) {
    out[static_cast<size_t>(n)] = LogReal::from(1.0 - x) * out[static_cast<size_t>(n) + 1];
    x /= q;
  }
  return out;
}

std::optional<long> terminating_order(cx a, double q) {
  if (std::abs(a.imag()) > 1e-12 * (1.0 + std::abs(a))) return std::nullopt;
  double ar = a.real();
  if (ar < 1.0 - 1e-10) return std::nullopt;
  // a = q^{-N}  <=>  a * q^N = 1
  double e = -std::log(ar) / std::log(q);
  long N = std::lround(e);
  if (N < 0) return std::nullopt;
  if (std::abs(ar * std::pow(q, static_cast<double>(N)) - 1.0) < 1e-10) return N;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Basic hypergeometric series

cx rphis(const std::vector<cx>& upper, const std::vector<cx>& lower, double q, cx z,
         const SeriesConfig& cfg) {
  const long r = static_cast<long>(upper.size());
  const long s = static_cast<long>(lower.size());

  std::optional<long> term;
  for (const cx& a : upper) {
    auto N = terminating_order(a, q);
    if (N && (!term || *N < *term)) term = N;
  }
  for (const cx& b : lower) {
    auto P = terminating_order(b, q);
    if (P && (!term || *term > *P))
      throw pole_error("rphis: lower parameter in q^{-N0} hit before termination");
  }
  if (!term) {
    if (r > s + 1) throw divergent_error("rphis: nonterminating series with r > s+1");
    if (r == s + 1 && std::abs(z) >= 1.0)
      throw divergent_error("rphis: nonterminating r = s+1 series needs |z| < 1");
  }

  // Exact (N+1)-term sum for terminating series; tail heuristics otherwise.
  const int extra = 1 + s - static_cast<int>(r);
  cx term_k = 1.0;
  cx sum = term_k;
  double qk = 1.0;  // q^k
  int small_run = 0;
  long kmax = term ? *term : cfg.max_terms;
  for (long k = 0; k < kmax; ++k) {
    cx num = 1.0;
    for (const cx& a : upper) num *= (1.0 - a * qk);
    cx den = (1.0 - q * qk);
    for (const cx& b : lower) den *= (1.0 - b * qk);
    if (std::abs(den) == 0.0) throw pole_error("rphis: zero denominator factor");
    // ((-1)^{k+1} q^{k(k+1)/2} / (-1)^k q^{k(k-1)/2})^{1+s-r} = (-q^k)^{1+s-r}
    cx fac = 1.0;
    if (extra != 0) {
      cx base = -qk;
      fac = std::pow(base, extra);
    }
    term_k *= num / den * fac * z;
    sum += term_k;
    qk *= q;
    if (!term) {
      if (std::abs(term_k) <= cfg.tail_tol * std::max(1.0, std::abs(sum)))
        ++small_run;
      else
        small_run = 0;
      if (small_run >= cfg.consecutive_small) break;
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Psi kernel

cx psi_big(cx a, cx b, double q, cx z, const SeriesConfig& cfg) {
  // Suffix products (b q^n; q)_inf computed without division, so zeros of
  // individual factors (b in q^{-N0}) are harmless.
  const int N = cfg.max_terms < 2000 ? cfg.max_terms : 2000;
  std::vector<cx> suffix(static_cast<size_t>(N) + 2);
  suffix[static_cast<size_t>(N) + 1] = qpoch_inf(b * std::pow(q, N + 1), q);
  for (int n = N; n >= 0; --n)
    suffix[static_cast<size_t>(n)] =
        (1.0 - b * std::pow(q, n)) * suffix[static_cast<size_t>(n) + 1];

  cx apoch = 1.0;   // (a;q)_n
  cx qpochn = 1.0;  // (q;q)_n
  cx zpow = 1.0;
  double qtri = 1.0;  // q^{n(n-1)/2}
  double qn = 1.0;    // q^n
  int sgn = 1;
  cx sum = 0.0;
  int small_run = 0;
  for (int n = 0; n <= N; ++n) {
    cx term = apoch * suffix[static_cast<size_t>(n)] / qpochn * (sgn * qtri) * zpow;
    sum += term;
    // leading zeros from vanishing (b q^n;q)_inf factors are structural, not tail
    if (suffix[static_cast<size_t>(n)] == cx(0.0, 0.0))
      small_run = 0;
    else if (std::abs(term) <= cfg.tail_tol * std::max(1.0, std::abs(sum)))
      ++small_run;
    else
      small_run = 0;
    if (small_run >= cfg.consecutive_small) break;
    apoch *= (1.0 - a * qn);
    qpochn *= (1.0 - q * std::pow(q, n));
    zpow *= z;
    qtri *= qn;
    qn *= q;
    sgn = -sgn;
  }
  return sum;
}

LogSumResult psi_big_log(double a, double b, double q, double z, const SeriesConfig& cfg) {
  const double logq = std::log(q);

  // Estimate how many terms matter: quadratic decay kicks in once
  // q^{n(n-1)/2} |z|^n |a|^n shrinks.  Cap generously.
  int N = 64;
  {
    double la = a == 0.0 ? 0.0 : std::max(0.0, std::log(std::abs(a)) / logq * -1.0);
    double lz = z == 0.0 ? 0.0 : std::max(0.0, -std::log(std::abs(z)) / logq * -1.0);
    N = static_cast<int>(64 + 2.5 * (la + lz));
    N = std::min(N, 4000);
  }

  std::vector<LogReal> suffix = qpoch_inf_suffix_log(b, q, N + 1);

  LogReal apoch = LogReal::one();
  LogReal qpochn = LogReal::one();
  LogReal zp = LogReal::from(z);
  std::vector<LogReal> terms;
  terms.reserve(static_cast<size_t>(N) + 1);
  double maxlg = -std::numeric_limits<double>::infinity();
  double qn = 1.0;
  LogReal zpow = LogReal::one();
  long tri = 0;
  int sgn = 1;
  for (int n = 0; n <= N; ++n) {
    LogReal t = apoch * suffix[static_cast<size_t>(n)] / qpochn * zpow;
    t = t * LogReal{static_cast<double>(tri) * logq, sgn};
    terms.push_back(t);
    if (t.s != 0) maxlg = std::max(maxlg, t.lg);
    if (t.s == 0 && n > 0 && apoch.s == 0) break;  // terminating a in q^{-N0}
    // tail test on log scale relative to running max
    if (n > 8 && t.s != 0 && t.lg < maxlg + std::log(cfg.tail_tol) - 5.0) break;
    apoch = apoch * LogReal::from(1.0 - a * qn);
    qpochn = qpochn * LogReal::from(1.0 - q * qn);
    zpow = zpow * zp;
    tri += n;
    sgn = -sgn;
    qn *= q;
  }

  LogSumResult out;
  out.terms = static_cast<int>(terms.size());
  if (!std::isfinite(maxlg)) {
    out.value = LogReal::zero();
    return out;
  }
  long double acc = 0.0L, accabs = 0.0L;
  for (const LogReal& t : terms) {
    if (t.s == 0) continue;
    long double v = static_cast<long double>(t.s) * std::exp(static_cast<long double>(t.lg - maxlg));
    acc += v;
    accabs += std::abs(v);
  }
  if (acc == 0.0L) {
    out.value = LogReal::zero();
    out.cancellation = 300.0;
    return out;
  }
  out.value = LogReal{maxlg + static_cast<double>(std::log(std::abs(acc))), acc > 0 ? 1 : -1};
  out.cancellation = static_cast<double>(std::log10(accabs / std::abs(acc)));
  return out;
}

double q_laguerre(long n, double alpha, double x, double q) {
  // L_n^{(alpha)}(x;q) = ((q^{alpha+1};q)_n/(q;q)_n) 1phi1(q^{-n}; q^{alpha+1}; q, -q^{n+alpha+1} x)
  const double qa1 = std::pow(q, alpha + 1.0);
  double pref_num = 1.0, pref_den = 1.0;
  {
    double xa = qa1, xq = q;
    for (long k = 0; k < n; ++k) {
      pref_num *= (1.0 - xa);
      pref_den *= (1.0 - xq);
      xa *= q;
      xq *= q;
    }
  }
  const double z = -std::pow(q, static_cast<double>(n) + alpha + 1.0) * x;
  // terminating 1phi1, exact n+1 terms
  long double sum = 0.0L;
  long double term = 1.0L;
  double qk = 1.0;
  const double qmn = std::pow(q, static_cast<double>(-n));
  for (long k = 0;; ++k) {
    sum += term;
    if (k == n) break;
    // ratio: (1-q^{-n} q^k) / ((1-q^{k+1})(1-q^{alpha+1} q^k)) * (-q^k) * z
    double num = 1.0 - qmn * qk;
    double den = (1.0 - q * qk) * (1.0 - qa1 * qk);
    term *= static_cast<long double>(num / den * (-qk) * z);
    qk *= q;
  }
  return pref_num / pref_den * static_cast<double>(sum);
}

}  // namespace qsu11
