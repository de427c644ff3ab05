#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qsu11/casimir.hpp"

using namespace qsu11;

namespace {
const QParam qp(0.5);
const double q = 0.5;

TruncatedVector basis(const BasisVector& f) {
  TruncatedVector v;
  v.add(f, 1.0);
  return v;
}

TruncatedVector random_vector(std::mt19937_64& rng, int n_terms) {
  std::uniform_int_distribution<int> mi(-3, 3), pe(-4, 4), te(-4, 4), sg(0, 1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  TruncatedVector v;
  for (int i = 0; i < n_terms; ++i) {
    GridPoint p{sg(rng) ? 1 : -1, pe(rng)}, t{sg(rng) ? 1 : -1, te(rng)};
    if (!p.in_iq()) p.sgn = 1;
    if (!t.in_iq()) t.sgn = 1;
    v.add(BasisVector{mi(rng), p, t}, U(rng));
  }
  return v;
}

std::vector<SubspaceIndex> sample_subspaces() {
  std::vector<SubspaceIndex> out;
  for (int eps : {+1, -1})
    for (int eta : {+1, -1})
      for (int pe : {-2, 0, 1})
        for (int m : {-2, 0, 1}) out.push_back(SubspaceIndex{pe, m, eps, eta});
  return out;
}
}  // namespace

TEST_CASE("subspace grids per the case table") {
  {
    SubspaceIndex idx{2, 1, +1, +1};
    auto g = subspace_grid(idx, 5);
    CHECK(g.size() == 11);  // all q^k, |k| <= 5
  }
  {
    SubspaceIndex idx{2, 1, -1, +1};  // C(p,m) = 1, points -q^N
    auto g = subspace_grid(idx, 5);
    REQUIRE(!g.empty());
    CHECK(g.front().sgn == -1);
    CHECK(g.front().exp == 1);
  }
  {
    // eps=+, eta=-, q^m p = q^{-2}: C = q^{-m}p^{-1} = q^2, J = C q^N = q^{3+N0}
    SubspaceIndex idx{-3, 1, +1, -1};
    auto g = subspace_grid(idx, 8);
    REQUIRE(!g.empty());
    CHECK(g.front().sgn == +1);
    CHECK(g.front().exp == 3);
  }
}

TEST_CASE("basis labeling round-trips") {
  for (const auto& idx : sample_subspaces())
    for (const GridPoint& z : subspace_grid(idx, 4)) {
      BasisVector f = subspace_basis_vector(idx, z);
      auto [idx2, z2] = subspace_of(f);
      CHECK(idx2 == idx);
      CHECK(z2 == z);
    }
}

TEST_CASE("K0 eigenvalues and E0/E0dag adjointness") {
  // K0 f_{0,p,p} = f_{0,p,p}
  BasisVector f0{0, GridPoint{+1, 2}, GridPoint{+1, 2}};
  CHECK(inner(k0_apply(basis(f0), qp), basis(f0)) == doctest::Approx(1.0));
  // eigenvalue q^{-m/2} |p/t|^{1/2}
  BasisVector f1{3, GridPoint{-1, 2}, GridPoint{+1, -1}};
  CHECK(inner(k0_apply(basis(f1), qp), basis(f1)) ==
        doctest::Approx(std::pow(q, -1.5) * std::pow(q, 0.5 * (2 - (-1)))));

  std::mt19937_64 rng(5);
  for (int it = 0; it < 20; ++it) {
    TruncatedVector v = random_vector(rng, 5), w = random_vector(rng, 5);
    CHECK(inner(e0_apply(v, qp), w) == doctest::Approx(inner(v, e0dag_apply(w, qp))).epsilon(1e-12));
  }
}

TEST_CASE("U_q(su(1,1)) relations on windowed vectors") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 20; ++it) {
    TruncatedVector v = random_vector(rng, 4);
    // K0 E0 = q E0 K0
    TruncatedVector lhs = k0_apply(e0_apply(v, qp), qp);
    TruncatedVector rhs = e0_apply(k0_apply(v, qp), qp);
    for (const auto& [f, c] : lhs.coef) CHECK(c == doctest::Approx(q * rhs.at(f)).epsilon(1e-12));
    // E0dag E0 - E0 E0dag = (K0^2 - K0^{-2})/(q - q^{-1})
    TruncatedVector comm;
    for (const auto& [f, c] : e0dag_apply(e0_apply(v, qp), qp).coef) comm.add(f, c);
    for (const auto& [f, c] : e0_apply(e0dag_apply(v, qp), qp).coef) comm.add(f, -c);
    TruncatedVector kk;
    for (const auto& [f, c] : k0_power_apply(v, 2, qp).coef) kk.add(f, c / (q - 1.0 / q));
    for (const auto& [f, c] : k0_power_apply(v, -2, qp).coef) kk.add(f, -c / (q - 1.0 / q));
    for (const auto& [f, c] : kk.coef) CHECK(comm.at(f) == doctest::Approx(c).epsilon(1e-12));
    for (const auto& [f, c] : comm.coef) CHECK(c == doctest::Approx(kk.at(f)).epsilon(1e-12));
  }
}

TEST_CASE("Casimir: compositional identity, symmetry, sector preservation") {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 15; ++it) {
    TruncatedVector v = random_vector(rng, 4);
    TruncatedVector direct = casimir_apply(v, qp);
    // 1/2((q - q^{-1})^2 E0dag E0 - q K0^2 - q^{-1} K0^{-2})
    TruncatedVector comp;
    double c2 = (q - 1.0 / q) * (q - 1.0 / q);
    for (const auto& [f, c] : e0dag_apply(e0_apply(v, qp), qp).coef) comp.add(f, 0.5 * c2 * c);
    for (const auto& [f, c] : k0_power_apply(v, 2, qp).coef) comp.add(f, -0.5 * q * c);
    for (const auto& [f, c] : k0_power_apply(v, -2, qp).coef) comp.add(f, -0.5 / q * c);
    for (const auto& [f, c] : direct.coef) CHECK(c == doctest::Approx(comp.at(f)).epsilon(1e-12));
    for (const auto& [f, c] : comp.coef) CHECK(direct.at(f) == doctest::Approx(c).epsilon(1e-12));

    // symmetry <Omega v, w> = <v, Omega w>
    TruncatedVector w = random_vector(rng, 4);
    CHECK(inner(direct, w) == doctest::Approx(inner(v, casimir_apply(w, qp))).epsilon(1e-12));
  }
  // sector preservation
  for (const auto& idx : sample_subspaces()) {
    auto zs = subspace_grid(idx, 3);
    if (zs.empty()) continue;
    TruncatedVector v = basis(subspace_basis_vector(idx, zs[zs.size() / 2]));
    for (const auto& [f, c] : casimir_apply(v, qp).coef) {
      (void)c;
      CHECK(subspace_of(f).first == idx);
    }
  }
}

TEST_CASE("commutation shift identity for E restricted to sectors") {
  // (E_{p,m})^* E_{p,m} = E_{p,m-1} (E_{p,m-1})^* + (q^{2m} p - q^{-2m} p^{-1})/(q - q^{-1})
  for (const auto& idx : sample_subspaces()) {
    auto zs = subspace_grid(idx, 8);
    if (zs.size() < 3) continue;
    const GridPoint z = zs[zs.size() / 2];
    TruncatedVector v = basis(subspace_basis_vector(idx, z));
    TruncatedVector lhs = e0dag_apply(e0_apply(v, qp), qp);
    TruncatedVector rhs = e0_apply(e0dag_apply(v, qp), qp);
    double pval = std::pow(q, idx.p_exp);
    double cst = (std::pow(q, 2.0 * idx.m) * pval - std::pow(q, -2.0 * idx.m) / pval) / (q - 1.0 / q);
    rhs.add(subspace_basis_vector(idx, z), cst);
    for (const auto& [f, c] : lhs.coef) CHECK(c == doctest::Approx(rhs.at(f)).epsilon(1e-10));
  }
}

TEST_CASE("modular conjugations") {
  std::mt19937_64 rng(13);
  for (int it = 0; it < 10; ++it) {
    TruncatedVector v = random_vector(rng, 5);
    // J^2 = Id, Jhat^2 = Id exactly
    TruncatedVector jj = modular_j_apply(modular_j_apply(v));
    TruncatedVector hh = modular_jhat_apply(modular_jhat_apply(v));
    for (const auto& [f, c] : v.coef) {
      CHECK(jj.at(f) == c);
      CHECK(hh.at(f) == c);
    }
    // J E0dag J = -E0
    TruncatedVector lhs = modular_j_apply(e0dag_apply(modular_j_apply(v), qp));
    TruncatedVector rhs = e0_apply(v, qp);
    for (const auto& [f, c] : lhs.coef) CHECK(c == doctest::Approx(-rhs.at(f)).epsilon(1e-12));
  }
  // J : K(p,m,eps,eta) -> K(1/p, -m, eta, eps)
  SubspaceIndex idx{2, 1, +1, -1};
  auto zs = subspace_grid(idx, 6);
  TruncatedVector v = basis(subspace_basis_vector(idx, zs[0]));
  auto [jidx, jz] = subspace_of(modular_j_apply(v).coef.begin()->first);
  (void)jz;
  CHECK(jidx == SubspaceIndex{-2, -1, -1, +1});
}

TEST_CASE("casimir_to_jacobi: entrywise match of 2*Omega_0 with the family operator") {
  for (const auto& idx : sample_subspaces()) {
    auto zs = subspace_grid(idx, 12);
    if (zs.size() < 4) continue;
    CasimirJacobi cj = casimir_to_jacobi(idx, qp);
    TridiagonalOperator cas = casimir_operator_window(idx, qp, zs.front().exp, zs.back().exp);
    TridiagonalOperator fam =
        cj.is_asc ? asc_operator(cj.asc_params(qp), 10000)
                  : lqj_operator(cj.lqj_params(qp), -10000, 10000);
    const bool skip_boundary = (idx.eps == +1 && idx.eta == +1 && idx.m == 0);
    for (const GridPoint& z : zs) {
      if (skip_boundary && z.exp == zs.front().exp) continue;  // modified boundary row
      long n = z.exp + cj.n_offset;
      CHECK(cas.diag(z.exp) == doctest::Approx(cj.op_sign * fam.diag(n)).epsilon(1e-12));
      GridPoint zn{z.sgn, z.exp + 1};
      if (subspace_contains(idx, zn))
        CHECK(cas.off(z.exp) == doctest::Approx(cj.op_sign * fam.off(n)).epsilon(1e-12));
    }
  }
}

TEST_CASE("discrete spectra: worked instances of the case formulas") {
  {
    SubspaceIndex idx{0, 0, +1, -1};  // p = 1, m = 0: both families empty
    CHECK(discrete_spectrum(idx, qp).points.empty());
  }
  {
    SubspaceIndex idx{-3, 0, +1, +1};  // first family {q^{2k-2} > 1} infinite
    auto sp = discrete_spectrum(idx, qp, 10);
    CHECK(sp.infinite_family);
    bool found = false;
    for (const auto& pt : sp.points)
      if (pt.lambda.sgn == +1 && pt.lambda.exp == -2) found = true;
    CHECK(found);
  }
  {
    // (-,-): at most one of the two subfamilies nonempty
    for (int pe : {-3, -1, 0, 2})
      for (int m : {-2, 0, 3}) {
        auto sp = discrete_spectrum(SubspaceIndex{pe, m, -1, -1}, qp);
        for (const auto& pt : sp.points) CHECK(pt.lambda.sgn == -1);
      }
  }
}

TEST_CASE("windowed Casimir eigenvalues match mu(D) outside [-1.02, 1.02]") {
  for (const auto& idx : sample_subspaces()) {
    // generous window; for (+,+) keep the unbounded end far from the origin
    auto zs = subspace_grid(idx, 180);
    if (zs.size() < 8) continue;
    int zlo = (idx.eps == +1 && idx.eta == +1) ? -30 : zs.front().exp;
    int zhi = zs.back().exp;
    TridiagonalOperator op = casimir_operator_window(idx, qp, zlo, zhi);
    auto eig = truncated_eig(op);
    auto sp = discrete_spectrum(idx, qp, 8);
    for (const auto& pt : sp.points) {
      if (std::abs(pt.x) > 5e4) continue;  // outside the trusted window
      double best = 1e300;
      for (double ev : eig.eigenvalues) best = std::min(best, std::abs(ev - pt.x));
      CHECK(best < 1e-6 * std::max(1.0, std::abs(pt.x)));
    }
  }
}

TEST_CASE("Upsilon intertwines the Casimir with multiplication by x") {
  for (const auto& idx : sample_subspaces()) {
    auto sp = discrete_spectrum(idx, qp, 6);
    std::vector<CasimirPoint> pts;
    if (!sp.points.empty()) {
      CasimirPoint cp;
      cp.discrete = true;
      cp.lambda = sp.points.front().lambda;
      pts.push_back(cp);
    }
    CasimirPoint cont;
    cont.discrete = false;
    cont.psi = 1.1;
    pts.push_back(cont);

    const int W = 26;
    auto zs = subspace_grid(idx, W);
    if (zs.size() < 6) continue;
    TridiagonalOperator cas = casimir_operator_window(idx, qp, zs.front().exp, zs.back().exp);
    for (const CasimirPoint& pt : pts) {
      auto g = upsilon_g_block(idx, pt, W, qp);
      double x = pt.x(q);
      double scale = 1.0;
      for (const auto& [ze, v] : g) scale = std::max(scale, std::abs(v));
      // interior rows only; residual relative to the row scale
      for (size_t i = 2; i + 2 < zs.size(); ++i) {
        int k = zs[i].exp;
        double lhs = cas.off(k - 1) * g.at(k - 1) + cas.diag(k) * g.at(k) + cas.off(k) * g.at(k + 1);
        double row_scale =
            std::max({scale, std::abs(2.0 * x * g.at(k)), std::abs(cas.diag(k)) * scale * 1e-4});
        CHECK(std::abs(lhs - 2.0 * x * g.at(k)) < 1e-8 * row_scale);
      }
    }
  }
}

TEST_CASE("overlap consistency of the two (-,-) and (+,+) definitions") {
  // (-,-) at m + chi(p) = 0: both branch formulas must coincide
  for (int pe : {-2, 1, 3}) {
    SubspaceIndex idx{pe, -pe, -1, -1};
    CasimirJacobi a = casimir_to_jacobi(idx, qp);
    // force the other branch by mirroring the index
    SubspaceIndex mirror{-pe, pe, -1, -1};
    CasimirJacobi bb = casimir_to_jacobi(mirror, qp);
    (void)bb;
    CasimirPoint cp;
    cp.discrete = false;
    cp.psi = 0.9;
    auto g1 = upsilon_g_block(idx, cp, 10, qp);
    // evaluate through the <= branch formula directly: g_z = (-1)^{chi p} h_{m+chi p+chi z-1}(-x; q/p, q^{1-2m}/p)
    ASCParams other(std::pow(q, 1.0 - pe), std::pow(q, 1.0 - 2.0 * (-pe) - pe), QParam(q * q));
    auto h = asc_h_cont_range(30, M_PI - cp.psi, other);
    for (const auto& [ze, val] : g1) {
      long n = idx.m + pe + ze - 1;
      double alt = ((pe % 2) ? -1.0 : 1.0) * h.at(static_cast<size_t>(n));
      CHECK(val == doctest::Approx(alt).epsilon(1e-9));
    }
    (void)a;
  }
  // (+,+) at m = 0: the two parameterizations coincide
  for (int pe : {-2, 0, 2}) {
    SubspaceIndex idx{pe, 0, +1, +1};
    CasimirPoint cp;
    cp.discrete = false;
    cp.psi = 1.7;
    auto g1 = upsilon_g_block(idx, cp, 8, qp);
    LqJParams otherP(std::pow(q * q, 1.0), std::pow(q, 1.0 + pe), -q * q, QParam(q * q));
    auto j = lqj_j_cont_range(-8 + pe, 8 + pe, M_PI - cp.psi, otherP);
    for (const auto& [ze, val] : g1) {
      double alt = j.at(static_cast<size_t>(ze + pe - (-8 + pe)));
      CHECK(val == doctest::Approx(alt).epsilon(1e-9));
    }
  }
}

TEST_CASE("Parseval on discrete points: sum_z g_z(x) g_z(x') = delta") {
  for (const auto& idx : sample_subspaces()) {
    auto sp = discrete_spectrum(idx, qp, 4);
    if (sp.points.size() < 1) continue;
    const int W = 60;
    CasimirPoint p1;
    p1.discrete = true;
    p1.lambda = sp.points[0].lambda;
    auto g1 = upsilon_g_block(idx, p1, W, qp);
    double s11 = 0;
    for (const auto& [ze, v] : g1) s11 += v * v;
    CHECK(s11 == doctest::Approx(1.0).epsilon(1e-6));
    if (sp.points.size() >= 2) {
      CasimirPoint p2;
      p2.discrete = true;
      p2.lambda = sp.points[1].lambda;
      auto g2 = upsilon_g_block(idx, p2, W, qp);
      double s12 = 0;
      for (const auto& [ze, v] : g1) s12 += v * g2.at(ze);
      CHECK(std::abs(s12) < 1e-6);
    }
  }
}

TEST_CASE("E intertwines as multiplication by the square-root factor") {
  for (const auto& idx : sample_subspaces()) {
    SubspaceIndex up{idx.p_exp, idx.m + 1, idx.eps, idx.eta};
    auto sp_lo = discrete_spectrum(idx, qp, 4);
    auto sp_up = discrete_spectrum(up, qp, 4);
    // need a point common to both levels
    CasimirPoint pt;
    pt.discrete = true;
    bool found = false;
    for (const auto& a : sp_lo.points)
      for (const auto& b : sp_up.points)
        if (a.lambda == b.lambda) {
          pt.lambda = a.lambda;
          found = true;
        }
    if (!found) continue;
    const int W = 40;
    auto zs = subspace_grid(idx, W);
    const double x = pt.x(q);
    const double pval = std::pow(q, idx.p_exp);
    const double factor = std::pow(q, -0.5 - idx.m) / std::sqrt(pval) *
                          std::sqrt(1.0 + 2.0 * x * std::pow(q, 2.0 * idx.m + 1) * pval +
                                    std::pow(q, 4.0 * idx.m + 2) * pval * pval) /
                          (1.0 / q - q);
    auto g_lo = upsilon_g_block(idx, pt, W + 2, qp);
    auto g_up = upsilon_g_block(up, pt, W + 2, qp);
    int checked = 0;
    for (size_t i = 2; i + 2 < zs.size(); ++i) {
      const GridPoint z = zs[i];
      TruncatedVector w = e0_apply(basis(subspace_basis_vector(idx, z)), qp);
      double lhs = 0.0;
      for (const auto& [f, c] : w.coef) {
        auto [widx, wz] = subspace_of(f);
        REQUIRE(widx == up);
        lhs += c * g_up.at(wz.exp);
      }
      CHECK(lhs == doctest::Approx(factor * g_lo.at(z.exp)).epsilon(1e-8));
      ++checked;
    }
    CHECK(checked > 0);
  }
}
