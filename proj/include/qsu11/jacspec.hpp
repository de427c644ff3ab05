// Al-Salam--Chihara polynomials, little q-Jacobi functions, their c-functions
// and spectral measures, symmetric tridiagonal (Jacobi) operators with a
// truncated eigendecomposition oracle, and measure integration.
//
// Discrete-spectrum evaluation: at a mass point the wanted solution is the
// minimal one as the index grows, so values come from a backward (Miller)
// sweep normalized against directly summed series values; c-function values
// at inverse mass points are 0/0-removable limits evaluated in closed form.

#ifndef QSU11_JACSPEC_HPP
#define QSU11_JACSPEC_HPP

#include <functional>
#include <utility>
#include <vector>

#include "qsu11/qcore.hpp"

namespace qsu11 {

struct ASCParams {
  double a, b;
  QParam base;
  ASCParams(double a_, double b_, QParam q_) : a(a_), b(b_), base(q_) {
    if (a == 0.0 || b == 0.0) throw std::domain_error("ASCParams: a, b must be nonzero");
    if (!(a * b < 1.0)) throw std::domain_error("ASCParams: need ab < 1");
  }
};

struct LqJParams {
  double c, d, z;
  QParam base;
  LqJParams(double c_, double d_, double z_, QParam q_) : c(c_), d(d_), z(z_), base(q_) {
    if (!(z < 0.0)) throw std::domain_error("LqJParams: need z < 0");
    if (!(c > 0.0 && c < 1.0)) throw std::domain_error("LqJParams: need 0 < c < 1");
    if (d == 0.0) throw std::domain_error("LqJParams: need d != 0");
  }
};

// Symmetric Jacobi operator J given through the coefficients of 2J:
//   2J e_k = off(k) e_{k+1} + diag(k) e_k + off(k-1) e_{k-1}
struct TridiagonalOperator {
  std::function<double(long)> diag;  // diagonal of 2J
  std::function<double(long)> off;   // coupling k <-> k+1 of 2J
  bool z_indexed = false;            // index domain Z (true) or N0 (false)
  long k_lo = 0, k_hi = 0;           // truncation window, inclusive
};

struct MassPoint {
  double s = 0.0;   // spectral parameter, |s| > 1
  double x = 0.0;   // mu(s)
  double mass = 0.0;
  int family = 0;   // ASC: 0 = 'a', 1 = 'b'; LQJ: 0 = v_r, 1 = w_r, 2 = w'_r
  int r = 0;
};

// continuous density on (-1,1) in the psi variable plus discrete masses
struct SpectralMeasure {
  std::function<double(double)> density_psi;  // integral: ∫_0^π f(cos psi) density_psi(psi) dpsi
  std::vector<MassPoint> discrete;
  double discrete_tail_bound = 0.0;  // omitted mass of truncated infinite families
};

// --------------------------------------------------------------------------
// Al-Salam--Chihara

double asc_poly(long n, double x, const ASCParams& P);          // three-term recurrence
cx asc_poly_3phi2(long n, cx y, const ASCParams& P);            // closed form at x = mu(y)
cx asc_poly_2phi1(long n, cx y, const ASCParams& P);            // second closed form
double asc_orthonormal(long n, double x, const ASCParams& P);   // p_n = P_n / sqrt((q,ab;q)_n)

cx asc_c_function(cx y, const ASCParams& P);
// removable-limit value of c(1/s) at a mass point s = e q^r (e = a or b)
double asc_c_at_inverse_mass(const ASCParams& P, int family, int r);
double asc_w_mass(const ASCParams& P, int family, int r);  // w_r(e;f|q)

std::vector<MassPoint> asc_mass_points(const ASCParams& P);
SpectralMeasure asc_measure(const ASCParams& P);
TridiagonalOperator asc_operator(const ASCParams& P, long k_hi);

// h_n values: continuous x = cos psi (0 < |psi| < pi), and at a mass point
// (whole range 0..nmax via one stable sweep).
double asc_h_cont(long n, double psi, const ASCParams& P);
std::vector<double> asc_h_cont_range(long nmax, double psi, const ASCParams& P);
std::vector<double> asc_h_disc_range(long nmax, int family, int r, const ASCParams& P);

// --------------------------------------------------------------------------
// little q-Jacobi functions

double lqj_rho(long k, const LqJParams& P);
LogReal lqj_rho_log(long k, const LqJParams& P);
cx lqj_f_series(long k, cx y, const LqJParams& P);   // defining 2phi1; needs |z q^{-k}| < 1
cx lqj_F(long k, cx y, const LqJParams& P);          // second-kind solution
cx lqj_c(cx y, const LqJParams& P);
double lqj_c_at_inverse_mass(const LqJParams& P, int family, int r);

double lqj_v_mass(const LqJParams& P, int r);
double lqj_w_mass(const LqJParams& P, int r);
double lqj_wp_mass(const LqJParams& P, int r);

// u_k = rho_k f_k(x) over a window of k
std::vector<double> lqj_u_cont_range(long k_lo, long k_hi, double psi, const LqJParams& P);
std::vector<double> lqj_u_disc_range(long k_lo, long k_hi, int family, int r, const LqJParams& P);

// orthonormal j_k values (measure weights folded in)
double lqj_j_cont(long k, double psi, const LqJParams& P);
std::vector<double> lqj_j_cont_range(long k_lo, long k_hi, double psi, const LqJParams& P);
std::vector<double> lqj_j_disc_range(long k_lo, long k_hi, int family, int r, const LqJParams& P);

std::vector<MassPoint> lqj_mass_points(const LqJParams& P, double mass_floor = 1e-15,
                                       double* tail_bound = nullptr);
SpectralMeasure lqj_measure(const LqJParams& P, double mass_floor = 1e-15);
// e0-projected measure (rho_0 f_0)^2 dnu: unit total mass, operator moments
SpectralMeasure lqj_e0_measure(const LqJParams& P, double mass_floor = 1e-15);
TridiagonalOperator lqj_operator(const LqJParams& P, long k_lo, long k_hi);

// The distinguished self-adjoint extension at c = q: resolution of the
// identity identical to lqj_measure with c = q.
SpectralMeasure cq_extension_measure(double d, double z, const QParam& q,
                                     double mass_floor = 1e-15);

// --------------------------------------------------------------------------
// oracle + integration

struct EigResult {
  std::vector<double> eigenvalues;              // ascending, eigenvalues of J
  std::vector<std::vector<double>> eigenvectors;  // optional, column per eigenvalue
};
EigResult truncated_eig(const TridiagonalOperator& op, bool want_vectors = false);

// <J^j e_k0, e_k0>, exact within the window for j <= distance to the edges
double operator_moment(const TridiagonalOperator& op, int j, long k0 = 0);

double measure_integrate(const SpectralMeasure& m, const std::function<double(double)>& f,
                         double quad_tol = 1e-9);

}  // namespace qsu11

#endif
