// The Clebsch-Gordan kernels a_p(x,y) on I_q x I_q: closed-form evaluation,
// support logic, orthogonality sums over lines ell_theta and their duals,
// and the scaled y -> 0+ limit.
//
// Evaluation detail: the defining formula mixes prefactors spanning thousands
// of orders of magnitude with a Psi series whose terms may cancel. The value
// is computed through whichever of the six symmetry-equivalent forms of
// a_p(x,y) realizes the least cancellation; prefactors stay in signed-log
// arithmetic the whole way.

#ifndef QSU11_APFUN_HPP
#define QSU11_APFUN_HPP

#include <iosfwd>
#include <vector>

#include "qsu11/qcore.hpp"

namespace qsu11 {

// Finite window over I_q: positive exponents -kmax..kmax, negative points 1..kmax.
struct IqGrid {
  int kmax;
  explicit IqGrid(int kmax_) : kmax(kmax_) {
    if (kmax_ < 1) throw std::domain_error("IqGrid: kmax must be >= 1");
  }
  std::vector<GridPoint> points() const;
};

// Line ell_theta = {(x, theta x) in I_q x I_q}; theta in -q^Z ∪ q^Z.
struct LineTheta {
  GridPoint theta;
  GridPoint image(GridPoint x) const {
    return GridPoint{theta.sgn * x.sgn, theta.exp + x.exp};
  }
  bool contains(GridPoint x) const { return x.in_iq() && image(x).in_iq(); }
};

// log(c_q) with c_q = (sqrt(2) q (q^2,-q^2;q^2)_inf)^{-1}.
LogReal c_q_log(double q);

struct ApValue {
  LogReal value;
  double cancellation = 0.0;  // digits lost in the best representation
};

// a_p(x,y); zero off the support sgn(xy) = sgn(p).
ApValue ap_log(GridPoint p, GridPoint x, GridPoint y, const QParam& qp,
               const SeriesConfig& cfg = {});
double ap(GridPoint p, GridPoint x, GridPoint y, const QParam& qp,
          const SeriesConfig& cfg = {});

// Single-representation evaluation of the Def. 5.3 closed form (oracle hook;
// no symmetry dispatch).
ApValue ap_def_log(GridPoint p, GridPoint x, GridPoint y, const QParam& qp,
                   const SeriesConfig& cfg = {});

struct OrthoResult {
  double sum = 0.0;
  double tail_bound = 0.0;
  bool empty_support = false;  // sign mismatch: sum identically zero
};

// sum_x a_p(x, theta x) a_r(x, theta x) over the window; -> delta_{p,r}.
OrthoResult ortho_row(const LineTheta& line, GridPoint p, GridPoint r, const IqGrid& grid,
                      const QParam& qp, const SeriesConfig& cfg = {});

// sum_{p in J} a_p(x, theta x) a_p(y, theta y); J = q^Z (theta>0) or -q^N (theta<0).
OrthoResult dual_ortho(const LineTheta& line, GridPoint x, GridPoint y, const IqGrid& grid,
                       const QParam& qp, const SeriesConfig& cfg = {});

// f(y^{-2}) = a_p(x,y) y^{-chi(p/x)} sampled along y = q^k, k in [k_from, k_to].
std::vector<double> ap_scaled_limit(GridPoint p, GridPoint x, int k_from, int k_to,
                                    const QParam& qp, const SeriesConfig& cfg = {});

// CSV rows "p,x,y,value" for all in-window triples on the line y = theta x.
void ap_csv_table(std::ostream& os, const LineTheta& line, const IqGrid& grid,
                  const QParam& qp, const SeriesConfig& cfg = {});

}  // namespace qsu11

#endif
