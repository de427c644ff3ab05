// Dual-quantum-group computational objects: the Q(p1,p2,n) matrix elements
// and truncated applications, structure constants, adjoints, the S function
// (bilateral sum and 2phi1 closed form), the A/E/G/nu/H/C function stack, the
// truncated multiplicative unitary, and comultiplication matrix elements.

#ifndef QSU11_DUALOPS_HPP
#define QSU11_DUALOPS_HPP

#include "qsu11/apfun.hpp"
#include "qsu11/casimir.hpp"

namespace qsu11 {

struct QLabel {
  GridPoint p1, p2;
  int n = 0;
};

// <Q(p1,p2,n) f_in, f_out> (delta-gated product of two a_p values)
double q_matrix_element(const QLabel& L, const BasisVector& in, const BasisVector& out,
                        const QParam& qp);
// <Jhat Q(p1,p2,n) Jhat f_in, f_out>
double q_jhat_matrix_element(const QLabel& L, const BasisVector& in, const BasisVector& out,
                             const QParam& qp);

// truncated application; output support window is |chi(w)| <= w_window
TruncatedVector q_apply(const QLabel& L, const TruncatedVector& v, int w_window,
                        const QParam& qp);

// max_{windowed basis pairs} |<f, Q(n) g> - (-q)^n sgn(p1)^chi sgn(p2)^chi <Q(-n) f, g>|
double q_adjoint_residual(const QLabel& L, int window, const QParam& qp);

struct StructureCheck {
  bool gated = false;    // product identically zero by the q-power gate
  double residual = 0.0;  // max interior coefficient mismatch
};
StructureCheck structure_product_check(const QLabel& l1, const QLabel& l2, int window,
                                       int x_window, const QParam& qp);

// --------------------------------------------------------------------------
// the S function

struct SFunctionParams {
  GridPoint p1, p2;
  int n = 0;
};

enum class SMethod { automatic, bilateral, closed_form };

cx s_function(const SFunctionParams& sp, cx t, const QParam& qp,
              SMethod method = SMethod::automatic);

// Lemma S=BN split: S(-sgn(p1 p2) t) = B(t) N(mu(t)); N symmetric in t <-> 1/t
cx s_bn_B(const SFunctionParams& sp, cx t, const QParam& qp);
cx s_bn_N(const SFunctionParams& sp, cx t, const QParam& qp);

// --------------------------------------------------------------------------
// the A function stack

// A(lambda; p, m, eps, eta) for lambda = e^{i psi} on T_0
cx a_function(double psi, const SubspaceIndex& idx, const QParam& qp);
// discrete-point A value: the square root of the residue expression realized
// as the stable asymptotic limit g_z(mu(lambda)) (-eps eta lambda)^{chi(z)}
double c_residual_a(GridPoint lambda, const SubspaceIndex& idx, const QParam& qp);

cx e_function(cx lambda, int p_exp, int m, const QParam& qp);
cx g_function(double psi, const SubspaceIndex& idx, const QParam& qp);
cx nu_twist(cx lambda, int tau, int n, int p_exp);

// --------------------------------------------------------------------------
// the C function (both computation routes)

struct CContext {
  int m = 0;
  int eps = +1, eta = +1;
  QLabel label;
};

enum class CRoute { direct, factored };

// C(mu(lambda); m, eps, eta; p1, p2, n) for lambda on T_0 (continuous case)
cx big_c(double psi, const CContext& ctx, const QParam& qp, CRoute route = CRoute::direct);
// discrete lambda (|lambda| > 1 on the grid); zero off the X-set
double big_c_disc(GridPoint lambda, const CContext& ctx, const QParam& qp);

// --------------------------------------------------------------------------
// multiplicative unitary (truncated)

using TensorBasis = std::pair<BasisVector, BasisVector>;
struct TensorVector {
  std::map<TensorBasis, double> coef;
  void add(const TensorBasis& b, double v) {
    if (v == 0.0) return;
    auto [it, ins] = coef.emplace(b, v);
    if (!ins) {
      it->second += v;
      if (it->second == 0.0) coef.erase(it);
    }
  }
  double at(const TensorBasis& b) const {
    auto it = coef.find(b);
    return it == coef.end() ? 0.0 : it->second;
  }
};

TensorVector w_apply(const TensorVector& v, int window, const QParam& qp);
TensorVector w_star_apply(const TensorVector& v, int window, const QParam& qp);

// O(1) matrix elements
double w_matrix_element(const TensorBasis& in, const TensorBasis& out, const QParam& qp);

// one application of W to a tensor basis vector, expanded over the window
struct WTerm {
  double coef;
  BasisVector o1, o2;
};
std::vector<WTerm> w_expand(const BasisVector& f1, const BasisVector& f2, int window,
                            const QParam& qp);
double w_star_matrix_element(const TensorBasis& in, const TensorBasis& out, const QParam& qp);

// pentagon residual <(W12 W13 W23 - W23 W12)(u1 (x) u2 (x) u3), v1 (x) v2 (x) v3>
double pentagon_residual3(const BasisVector& u1, const BasisVector& u2, const BasisVector& u3,
                          const BasisVector& v1, const BasisVector& v2, const BasisVector& v3,
                          int window, const QParam& qp);

// comultiplication: matrix element of sum_{m,p} Q(p1,p,m) (x) Q(p,p2,n-m)
// minus that of W (Q(p1,p2,n) (x) Id) W^*
double comult_residual(const QLabel& L, const TensorBasis& u, const TensorBasis& v, int window,
                       const QParam& qp);

}  // namespace qsu11

#endif
