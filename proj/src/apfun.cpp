#include "qsu11/apfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

namespace qsu11 {

std::vector<GridPoint> IqGrid::points() const {
  std::vector<GridPoint> out;
  out.reserve(3 * static_cast<size_t>(kmax) + 1);
  for (int k = -kmax; k <= kmax; ++k) out.push_back(GridPoint{+1, k});
  for (int k = 1; k <= kmax; ++k) out.push_back(GridPoint{-1, k});
  return out;
}

LogReal c_q_log(double q) {
  const double Q = q * q;
  LogReal den = LogReal::from(std::sqrt(2.0)) * LogReal::from(q) * qpoch_inf_log(Q, Q) *
                qpoch_inf_log(-Q, Q);
  return LogReal::one() / den;
}

namespace {

int pow_sign(int s, long e) { return (s < 0 && (e % 2 != 0)) ? -1 : 1; }
int pow_m1(long e) { return (e % 2 == 0) ? 1 : -1; }

// Def. 5.3 evaluated literally for in-support arguments:
//   c_q s(x,y) (-1)^{chi(p)} (-sgn y)^{chi(x)} |y| nu(py/x)
//   sqrt((-k(p),-k(y);q^2)_inf / (-k(x);q^2)_inf)
//   Psi(-q^2/k(y); q^2 k(x/y); q^2, q^2 k(x/p))
ApValue ap_def_impl(GridPoint p, GridPoint x, GridPoint y, const QParam& qp,
                    const SeriesConfig& cfg) {
  const double q = qp.q;
  const double Q = q * q;
  const double logq = std::log(q);

  LogReal pref = c_q_log(q);
  pref = pref * LogReal{0.0, sign_s(static_cast<double>(x.sgn), static_cast<double>(y.sgn))};
  pref = pref * LogReal{0.0, pow_m1(p.exp)};
  pref = pref * LogReal{0.0, pow_sign(-y.sgn, x.exp)};
  pref = pref * LogReal::q_power(+1, static_cast<double>(y.exp), logq);  // |y|
  const GridPoint pyx{p.sgn * y.sgn * x.sgn, p.exp + y.exp - x.exp};
  pref = pref * LogReal::q_power(+1, static_cast<double>(nu_exponent(pyx)), logq);

  // radicand: all three products are positive in-support
  const double mkp = -static_cast<double>(p.sgn) * std::pow(q, 2.0 * p.exp);
  const double mky = -static_cast<double>(y.sgn) * std::pow(q, 2.0 * y.exp);
  const double mkx = -static_cast<double>(x.sgn) * std::pow(q, 2.0 * x.exp);
  LogReal rad = qpoch_inf_log(mkp, Q) * qpoch_inf_log(mky, Q) / qpoch_inf_log(mkx, Q);
  pref = pref * rad.sqrt();

  // Psi arguments, all exact signed q-powers
  const double a = -static_cast<double>(y.sgn) * std::pow(q, 2.0 - 2.0 * y.exp);
  const double b = static_cast<double>(x.sgn * y.sgn) * std::pow(q, 2.0 + 2.0 * x.exp - 2.0 * y.exp);
  const double z = static_cast<double>(x.sgn * p.sgn) * std::pow(q, 2.0 + 2.0 * x.exp - 2.0 * p.exp);
  LogSumResult psi = psi_big_log(a, b, Q, z, cfg);

  return ApValue{pref * psi.value, psi.cancellation};
}

struct Rep {
  GridPoint P, X, Y;
  int wsgn;       // sign of the symmetry weight
  double wexp;    // q-exponent of the symmetry weight magnitude
  double score;   // a-priori safety (bigger = safer)
};

double safety_score(GridPoint P, GridPoint X, GridPoint Y) {
  const double alpha = 2.0 - 2.0 * Y.exp;              // log_q |a|
  const double zeta = 2.0 + 2.0 * X.exp - 2.0 * P.exp; // log_q |z|
  const double beta = 2.0 + 2.0 * X.exp - 2.0 * Y.exp; // log_q |b|
  double lam = zeta + std::min(alpha, 0.0);
  double quad = 1.0 + (alpha < 0.0 ? 1.0 : 0.0);
  double sc = lam - quad;
  if (beta < 0.0) sc += beta;  // penalize huge (b q^{2n};q^2)_inf magnification
  return sc;
}

}  // namespace

ApValue ap_def_log(GridPoint p, GridPoint x, GridPoint y, const QParam& qp,
                   const SeriesConfig& cfg) {
  if (!p.in_iq() || !x.in_iq() || !y.in_iq())
    throw std::domain_error("ap: arguments must lie in I_q");
  if (x.sgn * y.sgn != p.sgn) return ApValue{LogReal::zero(), 0.0};
  return ap_def_impl(p, x, y, qp, cfg);
}

ApValue ap_log(GridPoint p, GridPoint x, GridPoint y, const QParam& qp,
               const SeriesConfig& cfg) {
  if (!p.in_iq() || !x.in_iq() || !y.in_iq())
    throw std::domain_error("ap: arguments must lie in I_q");
  if (x.sgn * y.sgn != p.sgn) return ApValue{LogReal::zero(), 0.0};

  // Six symmetry-equivalent forms (eq. symmetry relations for a_p):
  //  a_p(x,y) = w * a_P(X,Y)
  std::array<Rep, 6> reps;
  // direct
  reps[0] = Rep{p, x, y, 1, 0.0, 0.0};
  // a_p(y,x)
  reps[1] = Rep{p, y, x, pow_sign(p.sgn, p.exp) * pow_sign(x.sgn, x.exp) * pow_sign(y.sgn, y.exp),
                0.0, 0.0};
  // a_y(x,p): weight (-1)^{chi(yp)} sgn(x)^{chi x} |y/p|
  reps[2] = Rep{y, x, p, pow_m1(y.exp + p.exp) * pow_sign(x.sgn, x.exp),
                static_cast<double>(y.exp - p.exp), 0.0};
  // a_x(p,y): weight (-1)^{chi(xp)} sgn(y)^{chi y} |x/p|
  reps[3] = Rep{x, p, y, pow_m1(x.exp + p.exp) * pow_sign(y.sgn, y.exp),
                static_cast<double>(x.exp - p.exp), 0.0};
  // a_y(p,x): compose rep 2 with the arg swap
  reps[4] = Rep{y, p, x,
                pow_m1(y.exp + p.exp) * pow_sign(y.sgn, y.exp) * pow_sign(p.sgn, p.exp),
                static_cast<double>(y.exp - p.exp), 0.0};
  // a_x(y,p)
  reps[5] = Rep{x, y, p,
                pow_m1(x.exp + p.exp) * pow_sign(x.sgn, x.exp) * pow_sign(p.sgn, p.exp),
                static_cast<double>(x.exp - p.exp), 0.0};

  for (Rep& r : reps) r.score = safety_score(r.P, r.X, r.Y);
  std::sort(reps.begin(), reps.end(), [](const Rep& a, const Rep& b) { return a.score > b.score; });

  const double logq = std::log(qp.q);
  ApValue best;
  double best_canc = std::numeric_limits<double>::infinity();
  for (const Rep& r : reps) {
    ApValue v = ap_def_impl(r.P, r.X, r.Y, qp, cfg);
    v.value = v.value * LogReal::q_power(r.wsgn, r.wexp, logq);
    if (v.cancellation < best_canc) {
      best_canc = v.cancellation;
      best = v;
    }
    if (best_canc < 3.0) break;
  }
  return best;
}

double ap(GridPoint p, GridPoint x, GridPoint y, const QParam& qp, const SeriesConfig& cfg) {
  return ap_log(p, x, y, qp, cfg).value.to_double();
}

OrthoResult ortho_row(const LineTheta& line, GridPoint p, GridPoint r, const IqGrid& grid,
                      const QParam& qp, const SeriesConfig& cfg) {
  OrthoResult out;
  if (p.sgn != line.theta.sgn || r.sgn != line.theta.sgn) {
    out.empty_support = true;
    return out;
  }
  long double acc = 0.0L;
  double first_mag = 0.0, last_mag = 0.0;
  for (const GridPoint& x : grid.points()) {
    if (!line.contains(x)) continue;
    const GridPoint y = line.image(x);
    double t = ap(p, x, y, qp, cfg) * ap(r, x, y, qp, cfg);
    acc += t;
    if (std::abs(x.exp) >= grid.kmax - 1) {
      if (x.exp > 0)
        last_mag = std::max(last_mag, std::abs(t));
      else
        first_mag = std::max(first_mag, std::abs(t));
    }
  }
  out.sum = static_cast<double>(acc);
  // q^{k^2}-type decay: the omitted tail is dominated by a few edge terms
  out.tail_bound = 4.0 * (first_mag + last_mag);
  return out;
}

OrthoResult dual_ortho(const LineTheta& line, GridPoint x, GridPoint y, const IqGrid& grid,
                       const QParam& qp, const SeriesConfig& cfg) {
  OrthoResult out;
  if (!line.contains(x) || !line.contains(y))
    throw std::domain_error("dual_ortho: (x, theta x) must lie on the line");
  const GridPoint tx = line.image(x);
  const GridPoint ty = line.image(y);
  long double acc = 0.0L;
  double edge_mag = 0.0;
  const bool positive = line.theta.sgn > 0;
  const int klo = positive ? -grid.kmax : 1;
  for (int k = klo; k <= grid.kmax; ++k) {
    const GridPoint p{positive ? +1 : -1, k};
    double t = ap(p, x, tx, qp, cfg) * ap(p, y, ty, qp, cfg);
    acc += t;
    if (std::abs(k) >= grid.kmax - 1) edge_mag = std::max(edge_mag, std::abs(t));
  }
  out.sum = static_cast<double>(acc);
  out.tail_bound = 4.0 * edge_mag;
  return out;
}

std::vector<double> ap_scaled_limit(GridPoint p, GridPoint x, int k_from, int k_to,
                                    const QParam& qp, const SeriesConfig& cfg) {
  std::vector<double> out;
  const double logq = std::log(qp.q);
  const long e = p.exp - x.exp;  // chi(p/x)
  for (int k = k_from; k <= k_to; ++k) {
    const GridPoint y{+1, k};
    ApValue v = ap_log(p, x, y, qp, cfg);
    LogReal scaled = v.value * LogReal::q_power(+1, static_cast<double>(-k) * e, logq);
    out.push_back(scaled.to_double());
  }
  return out;
}

void ap_csv_table(std::ostream& os, const LineTheta& line, const IqGrid& grid,
                  const QParam& qp, const SeriesConfig& cfg) {
  os << "p,x,y,value\n";
  for (const GridPoint& p : grid.points()) {
    if (p.sgn != line.theta.sgn) continue;
    for (const GridPoint& x : grid.points()) {
      if (!line.contains(x)) continue;
      const GridPoint y = line.image(x);
      os << grid_token(p) << ',' << grid_token(x) << ',' << grid_token(y) << ','
         << ap(p, x, y, qp, cfg) << '\n';
    }
  }
}

}  // namespace qsu11
