#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qsu11/jacspec.hpp"

using namespace qsu11;

namespace {
const QParam qhalf(0.5);
const double q = 0.5;
}  // namespace

TEST_CASE("ASC polynomials: P_0, P_1 and recurrence vs closed forms") {
  ASCParams P(0.8, -1.3, qhalf);
  CHECK(asc_poly(0, 0.3, P) == 1.0);
  CHECK(asc_poly(1, 0.3, P) == doctest::Approx(2.0 * 0.3 - (P.a + P.b)).epsilon(1e-14));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.1, 2.9);
  for (int it = 0; it < 10; ++it) {
    double psi = U(rng);
    cx y = std::polar(1.0, psi);
    double x = std::cos(psi);
    for (long n = 0; n <= 20; ++n) {
      double rec = asc_poly(n, x, P);
      cx cf = asc_poly_3phi2(n, y, P);
      CHECK(std::abs(rec - cf.real()) < 1e-10 * std::max(1.0, std::abs(rec)));
      CHECK(std::abs(cf.imag()) < 1e-10 * std::max(1.0, std::abs(rec)));
      cx cf2 = asc_poly_2phi1(n, y, P);
      CHECK(std::abs(rec - cf2.real()) < 1e-9 * std::max(1.0, std::abs(rec)));
    }
  }
}

TEST_CASE("ASC c-function: zeros, conjugation symmetry, product oracle") {
  ASCParams P(std::pow(q, -2), 0.2, qhalf);
  // zero exactly at y = a q^r
  for (int r = 0; r < 2; ++r) {
    cx v = asc_c_function(cx(P.a * std::pow(q, r)), P);
    CHECK(std::abs(v) < 1e-12);
  }
  // |c(e^{i psi})|^2 symmetric under psi -> -psi
  for (double psi : {0.4, 1.1, 2.7}) {
    double n1 = std::norm(asc_c_function(std::polar(1.0, psi), P));
    double n2 = std::norm(asc_c_function(std::polar(1.0, -psi), P));
    CHECK(n1 == doctest::Approx(n2).epsilon(1e-12));
  }
  // direct 200-factor product oracle at generic y
  cx y(0.37, 0.22);
  auto prod = [&](cx arg) {
    cx p = 1.0;
    cx x = arg;
    for (int k = 0; k < 200; ++k) {
      p *= (1.0 - x);
      x *= q;
    }
    return p;
  };
  cx expect = prod(P.a / y) * prod(P.b / y) /
              (prod(1.0 / (y * y)) * std::sqrt(prod(cx(q)).real() * prod(cx(P.a * P.b)).real()));
  CHECK(std::abs(asc_c_function(y, P) - expect) < 1e-12 * std::abs(expect));
}

TEST_CASE("ASC measure: discrete part, total mass, first moment") {
  {
    ASCParams P(0.8, -0.5, qhalf);
    CHECK(asc_mass_points(P).empty());
    SpectralMeasure m = asc_measure(P);
    double mass = measure_integrate(m, [](double) { return 1.0; });
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-7));
    double mom1 = measure_integrate(m, [](double x) { return x; });
    CHECK(mom1 == doctest::Approx((P.a + P.b) / 2.0).epsilon(1e-7));
  }
  {
    ASCParams P(std::pow(q, -2), 0.15, qhalf);
    auto pts = asc_mass_points(P);
    REQUIRE(pts.size() == 2);  // a q^0 = 4, a q^1 = 2
    for (const auto& mp : pts) CHECK(mp.mass > 0.0);
    SpectralMeasure m = asc_measure(P);
    CHECK(measure_integrate(m, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(measure_integrate(m, [](double x) { return x; }) ==
          doctest::Approx((P.a + P.b) / 2.0).epsilon(1e-7));
  }
}

TEST_CASE("ASC orthonormality of p_n under the measure") {
  ASCParams P(std::pow(q, -1), -0.4, qhalf);
  SpectralMeasure m = asc_measure(P);
  for (long n = 0; n <= 4; ++n)
    for (long k = n; k <= 4; ++k) {
      double v = measure_integrate(
          m, [&](double x) { return asc_orthonormal(n, x, P) * asc_orthonormal(k, x, P); });
      CHECK(v == doctest::Approx(n == k ? 1.0 : 0.0).epsilon(1e-7));
    }
}

TEST_CASE("ASC discrete h_n: ell^2 orthonormality over n <= 400") {
  ASCParams P(std::pow(q, -2), 0.15, qhalf);
  auto h0 = asc_h_disc_range(400, 0, 0, P);  // s = 4
  auto h1 = asc_h_disc_range(400, 0, 1, P);  // s = 2
  double s00 = 0, s01 = 0, s11 = 0;
  for (size_t n = 0; n < h0.size(); ++n) {
    s00 += h0[n] * h0[n];
    s01 += h0[n] * h1[n];
    s11 += h1[n] * h1[n];
  }
  CHECK(s00 == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(s11 == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(s01) < 1e-7);
  // h_0 = sqrt(w_r) exactly by construction of the sweep normalization
  CHECK(h0[0] == doctest::Approx(std::sqrt(asc_w_mass(P, 0, 0))));
}

TEST_CASE("ASC h asymptotics and residue link at a mass point") {
  {
    // generic (non-lattice) a: s^{-2} is not a q-power, so the two
    // asymptotic branches stay separated and the naive prediction holds
    ASCParams P(1.7, 0.15, qhalf);
    const double s = P.a;  // r = 0, |s| > 1
    auto h = asc_h_disc_range(70, 0, 0, P);
    double clim = asc_c_at_inverse_mass(P, 0, 0);
    for (long n : {60L, 64L, 68L}) {
      double predict =
          std::pow(s, static_cast<double>(-n)) * std::sqrt(asc_w_mass(P, 0, 0)) * clim;
      CHECK(std::abs(h[static_cast<size_t>(n)] - predict) <
            5.0 * std::pow(q, n / 2.0) * std::abs(predict));
    }
    CHECK(asc_w_mass(P, 0, 0) * clim * clim > 0.0);
  }
  {
    // lattice case (s^2 in q^{-N}): h_n s^n still converges; its limit is the
    // residual norm (branches collide, so it differs from sqrt(w) c(1/s))
    ASCParams P(std::pow(q, -2), 0.15, qhalf);
    const double s = P.a;
    auto h = asc_h_disc_range(70, 0, 0, P);
    double l1 = h[60] * std::pow(s, 60.0);
    double l2 = h[66] * std::pow(s, 66.0);
    CHECK(std::abs(l1 - l2) < 1e-10 * std::abs(l1));
    CHECK(std::abs(l1) > 0.0);
  }
}

TEST_CASE("ASC continuous asymptotics match the c-function phase form") {
  ASCParams P(0.7, -1.2, qhalf);
  const long n = 60;
  for (double psi : {0.6, 1.3, 2.2}) {
    double h = asc_h_cont(n, psi, P);
    cx c = asc_c_function(std::polar(1.0, psi), P);
    double predict = std::sqrt(2.0 / (M_PI * std::abs(std::sin(psi)))) *
                     (std::polar(1.0, n * psi) * c).real() / std::abs(c);
    CHECK(std::abs(h - predict) < 5.0 * std::pow(q, n / 2.0) * std::max(1.0, std::abs(predict)));
  }
}

TEST_CASE("ASC symmetries of h_n") {
  ASCParams P(0.8, -1.1, qhalf);
  ASCParams Pswap(-1.1, 0.8, qhalf);
  ASCParams Pneg(-0.8, 1.1, qhalf);
  for (double psi : {0.5, 1.9}) {
    for (long n : {0L, 3L, 7L}) {
      double h = asc_h_cont(n, psi, P);
      CHECK(h == doctest::Approx(asc_h_cont(n, psi, Pswap)).epsilon(1e-12));
      // h_n(x;a,b) = (-1)^n h_n(-x;-a,-b)
      double hneg = asc_h_cont(n, M_PI - psi, Pneg);
      CHECK(h == doctest::Approx(((n % 2) ? -1.0 : 1.0) * hneg).epsilon(1e-12));
    }
  }
}

TEST_CASE("ASC contiguous relation in b") {
  // sqrt(1-2bx+b^2) h_n(x;a,b) = sqrt(1-abq^n) h_n(x;a,bq) - b sqrt(1-q^n) h_{n-1}(x;a,bq)
  ASCParams P(std::pow(q, -2), 0.15, qhalf);
  ASCParams Pq(P.a, P.b * q, qhalf);
  for (double psi : {0.7, 2.1}) {
    double x = std::cos(psi);
    for (long n : {1L, 2L, 5L, 9L}) {
      double lhs = std::sqrt(1.0 - 2.0 * P.b * x + P.b * P.b) * asc_h_cont(n, psi, P);
      double rhs = std::sqrt(1.0 - P.a * P.b * std::pow(q, n)) * asc_h_cont(n, psi, Pq) -
                   P.b * std::sqrt(1.0 - std::pow(q, n)) * asc_h_cont(n - 1, psi, Pq);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
  }
  // discrete point: s = a (r=0) is a mass point of both (a,b) and (a,bq)
  {
    auto h = asc_h_disc_range(10, 0, 0, P);
    auto hq = asc_h_disc_range(10, 0, 0, Pq);
    double x = mu(P.a);
    for (long n : {1L, 4L, 8L}) {
      double lhs = std::sqrt(1.0 - 2.0 * P.b * x + P.b * P.b) * h[static_cast<size_t>(n)];
      double rhs = std::sqrt(1.0 - P.a * P.b * std::pow(q, n)) * hq[static_cast<size_t>(n)] -
                   P.b * std::sqrt(1.0 - std::pow(q, n)) * hq[static_cast<size_t>(n - 1)];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
  }
}

TEST_CASE("little q-Jacobi: connection formula c(y)F(y) + c(1/y)F(1/y)") {
  LqJParams P(0.3, 2.0, -0.7, qhalf);
  for (cx y : {cx(0.6, 0.4), cx(0.2, -0.55), cx(-0.45, 0.3)}) {
    for (long k : {-1L, 0L}) {
      cx lhs = lqj_f_series(k, y, P);
      cx rhs = lqj_c(y, P) * lqj_F(k, y, P) + lqj_c(1.0 / y, P) * lqj_F(k, 1.0 / y, P);
      CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("little q-Jacobi symmetries jk1 / jk2 / special") {
  // j_k(x;c,d;z) = j_k(x;c,c/d;z d^2/c)
  LqJParams P(0.3, 2.0, -0.7, qhalf);
  LqJParams Psym(0.3, 0.3 / 2.0, -0.7 * 4.0 / 0.3, qhalf);
  for (double psi : {0.8, 1.7}) {
    auto j1 = lqj_j_cont_range(-4, 4, psi, P);
    auto j2 = lqj_j_cont_range(-4, 4, psi, Psym);
    for (size_t i = 0; i < j1.size(); ++i)
      CHECK(j1[i] == doctest::Approx(j2[i]).epsilon(1e-10));
  }
  // j_k(x;c,d;z q^{-p}) = sgn(d)^p j_{k+p}(x;c,d;z)
  for (int pshift : {1, 2}) {
    LqJParams Pz(0.3, 2.0, -0.7 * std::pow(q, -pshift), qhalf);
    for (double psi : {0.8}) {
      auto js = lqj_j_cont_range(-3, 3, psi, Pz);
      auto j0 = lqj_j_cont_range(-3 + pshift, 3 + pshift, psi, P);
      for (size_t i = 0; i < js.size(); ++i)
        CHECK(js[i] == doctest::Approx(j0[i]).epsilon(1e-9));
    }
  }
  // j_k(x;q,q^{(1-p)/2};z) = j_{k+p}(x;q,q^{(1+p)/2};z)
  for (int pshift : {1, 2}) {
    LqJParams Pa(q, std::pow(q, 0.5 * (1 - pshift)), -0.7, qhalf);
    LqJParams Pb(q, std::pow(q, 0.5 * (1 + pshift)), -0.7, qhalf);
    auto ja = lqj_j_cont_range(-3, 3, 1.1, Pa);
    auto jb = lqj_j_cont_range(-3 + pshift, 3 + pshift, 1.1, Pb);
    for (size_t i = 0; i < ja.size(); ++i)
      CHECK(ja[i] == doctest::Approx(jb[i]).epsilon(1e-9));
  }
}

TEST_CASE("little q-Jacobi contiguous relation") {
  // sqrt(1-2x/d+d^{-2}) j_k(x;qc,qd;z)
  //   = (1/d) sqrt(1-q^k/z) j_{k-1}(x;c,d;z) - sqrt(1-cq^k/(d^2 z)) j_k(x;c,d;z)
  LqJParams P(0.3, 2.0, -0.7, qhalf);
  LqJParams Pq(q * 0.3, q * 2.0, -0.7, qhalf);
  for (double psi : {0.9, 2.0}) {
    double x = std::cos(psi);
    auto jp = lqj_j_cont_range(-4, 4, psi, P);
    auto jq = lqj_j_cont_range(-4, 4, psi, Pq);
    for (long k = -3; k <= 3; ++k) {
      double lhs = std::sqrt(1.0 - 2.0 * x / P.d + 1.0 / (P.d * P.d)) *
                   jq[static_cast<size_t>(k + 4)];
      double rhs = (1.0 / P.d) * std::sqrt(1.0 - std::pow(q, k) / P.z) *
                       jp[static_cast<size_t>(k - 1 + 4)] -
                   std::sqrt(1.0 - P.c * std::pow(q, k) / (P.d * P.d * P.z)) *
                       jp[static_cast<size_t>(k + 4)];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
  }
}

TEST_CASE("little q-Jacobi measure: families, orthogonality, e0 mass") {
  LqJParams P(0.3, 2.0, -0.7, qhalf);
  double tail = 0.0;
  auto pts = lqj_mass_points(P, 1e-15, &tail);
  REQUIRE(!pts.empty());
  int has_w = 0, has_wp = 0;
  for (const auto& mp : pts) {
    CHECK(mp.mass > 0.0);
    if (mp.family == 1) has_w = 1;
    if (mp.family == 2) has_wp = 1;
  }
  CHECK(has_w + has_wp <= 1);  // at most one of w/w' families

  // orthogonality of rho_k f_k under the raw measure
  SpectralMeasure raw = lqj_measure(P);
  for (long k = -2; k <= 2; ++k)
    for (long l = k; l <= 2; ++l) {
      double cont_err;
      (void)cont_err;
      auto f = [&](double) { return 0.0; };
      (void)f;
      // continuous piece
      double v = 0.0;
      {
        SpectralMeasure m_only_cont = raw;
        m_only_cont.discrete.clear();
        v += measure_integrate(m_only_cont, [&](double x) {
          double psi = std::acos(std::min(1.0, std::max(-1.0, x)));
          auto u = lqj_u_cont_range(std::min(k, l), std::max(k, l), psi, P);
          return u.front() * u.back();
        }, 1e-10);
      }
      for (const auto& mp : raw.discrete) {
        auto u = lqj_u_disc_range(std::min(k, l), std::max(k, l), mp.family, mp.r, P);
        v += mp.mass * u.front() * u.back();
      }
      CHECK(v == doctest::Approx(k == l ? 1.0 : 0.0).epsilon(1e-6));
    }

  // e0-projected measure has unit mass
  SpectralMeasure e0 = lqj_e0_measure(P);
  CHECK(measure_integrate(e0, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("lqj discrete ell^2 orthonormality of j_k across mass points") {
  LqJParams P(0.25, 2.0, -0.25, qhalf);  // Casimir-flavored: base q, c = q^2
  auto pts = lqj_mass_points(P, 1e-18);
  REQUIRE(pts.size() >= 2);
  const long klo = -25, khi = 60;
  auto j0 = lqj_j_disc_range(klo, khi, pts[0].family, pts[0].r, P);
  auto j1 = lqj_j_disc_range(klo, khi, pts[1].family, pts[1].r, P);
  double s00 = 0, s01 = 0, s11 = 0;
  for (size_t i = 0; i < j0.size(); ++i) {
    s00 += j0[i] * j0[i];
    s01 += j0[i] * j1[i];
    s11 += j1[i] * j1[i];
  }
  CHECK(s00 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s11 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(s01) < 1e-6);
}

TEST_CASE("c = q extension: measure equals lqj_measure with c = q, moments match") {
  const double d = 2.0, z = -0.25;
  SpectralMeasure ext = cq_extension_measure(d, z, qhalf);
  LqJParams P(q, d, z, qhalf);
  SpectralMeasure ref = lqj_measure(P);
  REQUIRE(ext.discrete.size() == ref.discrete.size());
  for (size_t i = 0; i < ext.discrete.size(); ++i) {
    CHECK(ext.discrete[i].x == ref.discrete[i].x);
    CHECK(ext.discrete[i].mass == ref.discrete[i].mass);
  }
  bool has_v = false;
  for (const auto& mp : ext.discrete) has_v |= (mp.family == 0);
  CHECK(has_v);

  // moment oracle: e0-projected measure vs truncated matrix
  SpectralMeasure e0 = lqj_e0_measure(P);
  TridiagonalOperator op = lqj_operator(P, -40, 40);
  for (int j = 0; j <= 6; ++j) {
    double mm = measure_integrate(e0, [j](double x) { return std::pow(x, j); }, 1e-11);
    double om = operator_moment(op, j, 0);
    CHECK(mm == doctest::Approx(om).epsilon(1e-6));
  }
}

TEST_CASE("truncated_eig: constant diagonal and free Jacobi") {
  {
    TridiagonalOperator op;
    op.diag = [](long) { return 1.4; };  // 2J has constant diagonal 1.4
    op.off = [](long) { return 0.0; };
    op.k_lo = 0;
    op.k_hi = 9;
    auto r = truncated_eig(op);
    for (double ev : r.eigenvalues) CHECK(ev == doctest::Approx(0.7).epsilon(1e-14));
  }
  {
    const long N = 50;
    TridiagonalOperator op;
    op.diag = [](long) { return 0.0; };
    op.off = [](long) { return 1.0; };
    op.k_lo = 1;
    op.k_hi = N;
    auto r = truncated_eig(op);
    std::vector<double> expect;
    for (long j = 1; j <= N; ++j) expect.push_back(std::cos(j * M_PI / (N + 1.0)));
    std::sort(expect.begin(), expect.end());
    for (long j = 0; j < N; ++j)
      CHECK(r.eigenvalues[static_cast<size_t>(j)] ==
            doctest::Approx(expect[static_cast<size_t>(j)]).epsilon(1e-12));
  }
}

TEST_CASE("eigenvalues of the truncated ASC operator reproduce mu(D)") {
  const QParam Q(q * q);
  ASCParams P(std::pow(Q.q, -2), -std::pow(Q.q, 1), Q);
  auto pts = asc_mass_points(P);
  REQUIRE(!pts.empty());
  TridiagonalOperator op = asc_operator(P, 399);
  auto r = truncated_eig(op);
  for (const auto& mp : pts) {
    double best = 1e300;
    for (double ev : r.eigenvalues) best = std::min(best, std::abs(ev - mp.x));
    CHECK(best < 1e-6 * std::max(1.0, std::abs(mp.x)));
  }
  // and no spurious eigenvalues outside [-1.02, 1.02]
  size_t outside = 0;
  for (double ev : r.eigenvalues)
    if (std::abs(ev) > 1.02) ++outside;
  CHECK(outside == pts.size());
}

TEST_CASE("ASC moments 0..6: measure vs truncated matrix") {
  ASCParams P(std::pow(q, -1), -0.4, qhalf);
  SpectralMeasure m = asc_measure(P);
  TridiagonalOperator op = asc_operator(P, 60);
  for (int j = 0; j <= 6; ++j) {
    double mm = measure_integrate(m, [j](double x) { return std::pow(x, j); }, 1e-11);
    double om = operator_moment(op, j, 0);
    CHECK(mm == doctest::Approx(om).epsilon(1e-6));
  }
}

TEST_CASE("lqj moments for a Z-indexed operator, window centered at 0") {
  LqJParams P(0.3, 2.0, -0.7, qhalf);
  SpectralMeasure e0 = lqj_e0_measure(P);
  TridiagonalOperator op = lqj_operator(P, -40, 40);
  for (int j = 0; j <= 6; ++j) {
    double mm = measure_integrate(e0, [j](double x) { return std::pow(x, j); }, 1e-11);
    double om = operator_moment(op, j, 0);
    CHECK(mm == doctest::Approx(om).epsilon(1e-6));
  }
}
