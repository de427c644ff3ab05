// Core q-series engine: exact grid points of I_q = -q^N ∪ q^Z, the scalar
// maps chi/kappa/nu/s/mu, q-shifted factorials, basic hypergeometric series,
// the entire kernel Psi(a;b;q,z) and q-Laguerre polynomials.
//
// Grid points are stored as exact (sign, integer exponent) pairs; real values
// materialize only at evaluation boundaries. All support predicates are
// integer/sign arithmetic.

#ifndef QSU11_QCORE_HPP
#define QSU11_QCORE_HPP

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qsu11 {

using cx = std::complex<double>;

// A pole (exact zero factor in a denominator), reported distinctly from
// overflow or domain violations.
class pole_error : public std::runtime_error {
 public:
  explicit pole_error(const std::string& what) : std::runtime_error(what) {}
};

class divergent_error : public std::runtime_error {
 public:
  explicit divergent_error(const std::string& what) : std::runtime_error(what) {}
};

struct QParam {
  double q;
  explicit QParam(double q_) : q(q_) {
    if (!(q_ > 0.0 && q_ < 1.0))
      throw std::domain_error("QParam: q must lie in (0,1), got " + std::to_string(q_));
  }
};

// Point sgn * q^exp of the extended grid -q^Z ∪ q^Z.  Membership in
// I_q = -q^N ∪ q^Z is the predicate in_iq().
struct GridPoint {
  int sgn = +1;  // -1 or +1
  int exp = 0;   // chi value

  bool in_iq() const { return sgn > 0 || exp >= 1; }
  double value(double q) const { return sgn * std::pow(q, exp); }
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
  friend auto operator<=>(const GridPoint&, const GridPoint&) = default;
};

inline GridPoint grid_point(int sgn, int k) {
  if (sgn != 1 && sgn != -1) throw std::domain_error("grid_point: sign must be ±1");
  return GridPoint{sgn, k};
}

// Validated member of I_q.
inline GridPoint iq_point(int sgn, int k) {
  GridPoint p = grid_point(sgn, k);
  if (!p.in_iq())
    throw std::domain_error("iq_point: -q^" + std::to_string(k) + " is not in I_q");
  return p;
}

// Token syntax `[-]q^k`, e.g. "-q^2", "q^-3".
std::string grid_token(GridPoint p);
std::optional<GridPoint> parse_grid_token(std::string_view tok);

inline int chi(GridPoint x) { return x.exp; }

// chi of a floating value known to sit on the grid (CLI/test helper).
int chi_of(double x, double q);

inline double kappa(double x) { return (x > 0 ? 1.0 : x < 0 ? -1.0 : 0.0) * x * x; }

// kappa maps the grid to itself: κ(sgn q^e) = sgn q^{2e}.
inline GridPoint kappa_pt(GridPoint x) { return GridPoint{x.sgn, 2 * x.exp}; }

// nu(t) = q^{(chi(t)-1)(chi(t)-2)/2}; the exponent is always an integer.
inline long nu_exponent(GridPoint t) {
  return static_cast<long>(t.exp - 1) * static_cast<long>(t.exp - 2) / 2;
}
inline double nu_weight(GridPoint t, double q) {
  return std::pow(q, static_cast<double>(nu_exponent(t)));
}

// s(x,y) = -1 iff x > 0 and y < 0 (Def of the sign kernel).
inline int sign_s(double x, double y) {
  if (x == 0.0 || y == 0.0) throw std::domain_error("sign_s: arguments must be nonzero");
  return (x > 0 && y < 0) ? -1 : +1;
}

inline cx mu(cx y) {
  if (y == cx(0.0, 0.0)) throw std::domain_error("mu: argument must be nonzero");
  return 0.5 * (y + 1.0 / y);
}
inline double mu(double y) {
  if (y == 0.0) throw std::domain_error("mu: argument must be nonzero");
  return 0.5 * (y + 1.0 / y);
}

// epsilon(p) = (1/2) chi(p) mod 1 ∈ {0, 1/2}; upsilon(q^{2k}) = upsilon(q^{2k-1}) = k.
inline double epsilon_p(int p_exp) { return (p_exp % 2 == 0) ? 0.0 : 0.5; }
inline long upsilon_p(int p_exp) {
  return (p_exp % 2 == 0) ? p_exp / 2 : (p_exp + 1) / 2;
}

struct SeriesConfig {
  double tail_tol = 1e-14;
  int consecutive_small = 3;
  int max_terms = 10000;
  int bilateral_window = 64;
};

// ---------------------------------------------------------------------------
// Signed log-magnitude reals.  Intermediate products in the a_p / S kernels
// span thousands of orders of magnitude; value = s * exp(lg).
struct LogReal {
  double lg = -std::numeric_limits<double>::infinity();
  int s = 0;  // -1, 0, +1

  static LogReal zero() { return LogReal{}; }
  static LogReal one() { return LogReal{0.0, 1}; }
  static LogReal from(double v) {
    if (v == 0.0) return zero();
    return LogReal{std::log(std::abs(v)), v > 0 ? 1 : -1};
  }
  // sgn * q^e
  static LogReal q_power(int sgn, double e, double logq) { return LogReal{e * logq, sgn}; }

  double to_double() const { return s == 0 ? 0.0 : s * std::exp(lg); }
  LogReal operator*(const LogReal& o) const {
    if (s == 0 || o.s == 0) return zero();
    return LogReal{lg + o.lg, s * o.s};
  }
  LogReal operator/(const LogReal& o) const {
    if (o.s == 0) throw pole_error("LogReal: division by exact zero");
    if (s == 0) return zero();
    return LogReal{lg - o.lg, s * o.s};
  }
  LogReal pow_int(long n) const {
    if (s == 0) return n == 0 ? one() : zero();
    int rs = (s < 0 && (n % 2 != 0)) ? -1 : 1;
    return LogReal{lg * static_cast<double>(n), rs};
  }
  LogReal sqrt() const {
    if (s < 0) throw std::domain_error("LogReal::sqrt of negative value");
    if (s == 0) return zero();
    return LogReal{0.5 * lg, 1};
  }
  LogReal abs() const { return LogReal{lg, s == 0 ? 0 : 1}; }
  LogReal neg() const { return LogReal{lg, -s}; }
};

// ---------------------------------------------------------------------------
// q-shifted factorials.
//
// (x;q)_inf as an infinite product truncated at the tail threshold;
// (x;q)_n for n in Z via the ratio formula, with poles reported as pole_error.

cx qpoch(cx a, double q, long n);
cx qpoch_inf(cx a, double q, double tail_tol = 1e-16);

// Real log-domain versions; exact sign tracking, any magnitude.
LogReal qpoch_inf_log(double a, double q);
LogReal qpoch_log(double a, double q, long n);

// Suffix products S_n = (a q^n; q)_inf for n = 0..N (log domain).
std::vector<LogReal> qpoch_inf_suffix_log(double a, double q, int N);

// N with a = q^{-N} (within rel. 1e-10), if any — the termination detector.
std::optional<long> terminating_order(cx a, double q);

// ---------------------------------------------------------------------------
// Basic hypergeometric series r\phi_s(upper; lower; q, z).
cx rphis(const std::vector<cx>& upper, const std::vector<cx>& lower, double q, cx z,
         const SeriesConfig& cfg = {});

// Psi(a;b;q,z) = sum_n (a;q)_n (b q^n;q)_inf / (q;q)_n (-1)^n q^{n(n-1)/2} z^n,
// entire in a, b, z (evaluated by the defining sum; no division by (b;q)_n).
cx psi_big(cx a, cx b, double q, cx z, const SeriesConfig& cfg = {});

struct LogSumResult {
  LogReal value;
  double cancellation = 0.0;  // log10(sum of |terms| / |sum|)
  int terms = 0;
};
// Real log-domain Psi with cancellation diagnostics.
LogSumResult psi_big_log(double a, double b, double q, double z, const SeriesConfig& cfg = {});

// q-Laguerre polynomial L_n^{(alpha)}(x;q).
double q_laguerre(long n, double alpha, double x, double q);

}  // namespace qsu11

#endif
