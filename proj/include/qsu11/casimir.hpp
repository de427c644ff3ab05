// The truncated GNS-space combinatorics: subspaces K(p,m,eps,eta) with basis
// f_{-m, eps eta q^m p z, z}, the generator actions E0 / E0^dag / K0, the
// Casimir tridiagonal action, its per-sector reduction to Jacobi operators,
// the discrete spectra D(p,m,eps,eta), the spectral transform values g_z,
// and the modular conjugations J, J^hat on basis vectors.

#ifndef QSU11_CASIMIR_HPP
#define QSU11_CASIMIR_HPP

#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "qsu11/jacspec.hpp"
#include "qsu11/qcore.hpp"

namespace qsu11 {

struct SubspaceIndex {
  int p_exp = 0;  // p = q^{p_exp}
  int m = 0;
  int eps = +1;  // -1 or +1
  int eta = +1;
  friend bool operator==(const SubspaceIndex&, const SubspaceIndex&) = default;
};

// basis vector f_{m, p, t} of the GNS space
struct BasisVector {
  int m = 0;
  GridPoint p;
  GridPoint t;
  friend bool operator==(const BasisVector&, const BasisVector&) = default;
  friend bool operator<(const BasisVector& a, const BasisVector& b) {
    if (a.m != b.m) return a.m < b.m;
    if (a.p != b.p) return a.p < b.p;
    return a.t < b.t;
  }
};

struct TruncatedVector {
  std::map<BasisVector, double> coef;

  void add(const BasisVector& b, double v) {
    if (v == 0.0) return;
    auto [it, inserted] = coef.emplace(b, v);
    if (!inserted) {
      it->second += v;
      if (it->second == 0.0) coef.erase(it);
    }
  }
  double at(const BasisVector& b) const {
    auto it = coef.find(b);
    return it == coef.end() ? 0.0 : it->second;
  }
};

double inner(const TruncatedVector& a, const TruncatedVector& b);

// J(p,m,eps,eta) membership and enumeration; the basis vector attached to z.
bool subspace_contains(const SubspaceIndex& idx, GridPoint z);
std::vector<GridPoint> subspace_grid(const SubspaceIndex& idx, int kmax);
BasisVector subspace_basis_vector(const SubspaceIndex& idx, GridPoint z);
// inverse labeling: f_{m,p,t} = f_{-m', eps eta q^{m'} p' z, z}
std::pair<SubspaceIndex, GridPoint> subspace_of(const BasisVector& f);

// generator actions on the free lattice (exact two/three-term formulas)
TruncatedVector k0_apply(const TruncatedVector& v, const QParam& qp);
TruncatedVector k0_power_apply(const TruncatedVector& v, int power, const QParam& qp);
TruncatedVector e0_apply(const TruncatedVector& v, const QParam& qp);
TruncatedVector e0dag_apply(const TruncatedVector& v, const QParam& qp);
TruncatedVector casimir_apply(const TruncatedVector& v, const QParam& qp);

// modular conjugations (antilinear; coefficients here are real)
TruncatedVector modular_j_apply(const TruncatedVector& v);
TruncatedVector modular_jhat_apply(const TruncatedVector& v);

// ---------------------------------------------------------------------------
// Reduction of the Casimir on K(p,m,eps,eta) to a Jacobi operator.
//
//   Omega_0 = op_sign * (operator of the family), basis e_{n(z)} with
//   n(z) = chi(z) + n_offset, and g_z(x) = (-1)^{pref} * [h_n or j_n](arg_x)
//   with arg_x = x_negated ? -x : x.
struct CasimirJacobi {
  bool is_asc = true;
  double op_sign = 1.0;  // Omega_0 = op_sign * J
  // family parameters in base q^2
  double a = 0.0, b = 0.0;            // ASC
  double c = 0.0, d = 0.0, z = 0.0;   // LQJ
  int n_offset = 0;
  int pref_sign = 1;  // global sign of g_z
  bool x_negated = false;

  ASCParams asc_params(const QParam& qp) const;
  LqJParams lqj_params(const QParam& qp) const;
};

CasimirJacobi casimir_to_jacobi(const SubspaceIndex& idx, const QParam& qp);

// the Jacobi operator realizing 2*Omega_0 on the z-window of the subspace
TridiagonalOperator casimir_operator_window(const SubspaceIndex& idx, const QParam& qp,
                                            int z_exp_lo, int z_exp_hi);

// ---------------------------------------------------------------------------
// Discrete spectrum D(p,m,eps,eta) as exact (sign, exponent) pairs.
struct SpectrumPoint {
  GridPoint lambda;   // spectral parameter, |lambda| > 1
  double x = 0.0;     // Casimir eigenvalue mu(lambda)
};
struct DiscreteSpectrum {
  std::vector<SpectrumPoint> points;
  bool infinite_family = false;  // (+,+) carries an infinite family, window-truncated
};
DiscreteSpectrum discrete_spectrum(const SubspaceIndex& idx, const QParam& qp, int window = 40);

// ---------------------------------------------------------------------------
// Spectral-transform values g_z(x; p,m,eps,eta).
struct CasimirPoint {
  bool discrete = false;
  double psi = 0.0;        // continuous: x = cos(psi)
  GridPoint lambda;        // discrete: x = mu(lambda)
  double x(double q) const;
};

// g_z for every z in the window (map keyed by chi(z))
std::map<int, double> upsilon_g_block(const SubspaceIndex& idx, const CasimirPoint& pt,
                                      int z_window, const QParam& qp);
double upsilon_g(GridPoint z, const CasimirPoint& pt, const SubspaceIndex& idx,
                 const QParam& qp);

}  // namespace qsu11

#endif
