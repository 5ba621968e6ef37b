#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "germforge/fixtures.hpp"
#include "germforge/identities.hpp"
#include "germforge/normalize.hpp"

using namespace germforge;

namespace {

EndoField complex_j() { return as_endo(standard_endo_field(4, StructureKind::complex)); }

Point random_point(Rng& rng, double r = 0.3) {
  return {rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)};
}

MetricField scaled(const MetricField& g, double c) {
  return MetricField{Field(g.field.dim(), Valence{2, 0},
                           [f = g.field, c](std::span<const double> p, int order) {
                             JetTensor t = f.jets(p, order);
                             t *= c;
                             return t;
                           }),
                     g.signature};
}

RealTensor loop2(const std::function<double(int, int)>& f) {
  RealTensor out(4, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) = f(i, j);
  return out;
}

// Sum over n indices in 0..3.
double sum_over(int n, const std::function<double(const int*)>& f) {
  int idx[6] = {0, 0, 0, 0, 0, 0};
  double acc = 0.0;
  const int total = 1 << (2 * n);
  for (int it = 0; it < total; ++it) {
    int rem = it;
    for (int k = 0; k < n; ++k) {
      idx[k] = rem % 4;
      rem /= 4;
    }
    acc += f(idx);
  }
  return acc;
}

// Basic quantities at a point, with every index placement derived by loops.
struct Raw {
  RealTensor g, gi, e, rup, rs, dj;
  double ts = 0.0;
  explicit Raw(const HermitianPoint& h)
      : g(values(h.g())), gi(values(h.ginv())), e(values(h.e())), rup(values(h.r_up())), rs(values(h.rho_star())),
        dj(values(h.dj())), ts(h.tau_star().value()) {}
  double jup(int a, int b) const {
    double s = 0;
    for (int c = 0; c < 4; ++c) s += gi(a, c) * e(c, b);
    return s;
  }
  double jdd(int a, int b) const {
    double s = 0;
    for (int c = 0; c < 4; ++c) s += e(a, c) * g(c, b);
    return s;
  }
  double r(int a, int b, int c, int d) const {
    double s = 0;
    for (int n = 0; n < 4; ++n) s += rup(a, b, c, n) * g(n, d);
    return s;
  }
  double r_uddu(int a, int b, int c, int d) const {
    double s = 0;
    for (int p = 0; p < 4; ++p) s += gi(a, p) * rup(p, b, c, d);
    return s;
  }
  double r_uddd(int a, int b, int c, int d) const {
    double s = 0;
    for (int p = 0; p < 4; ++p) s += gi(a, p) * r(p, b, c, d);
    return s;
  }
  double rs_uu(int a, int b) const {
    double s = 0;
    for (int p = 0; p < 4; ++p)
      for (int q = 0; q < 4; ++q) s += gi(a, p) * gi(b, q) * rs(p, q);
    return s;
  }
  double rs_du(int a, int b) const {
    double s = 0;
    for (int p = 0; p < 4; ++p) s += rs(a, p) * gi(p, b);
    return s;
  }
  double rs_ud(int a, int b) const {
    double s = 0;
    for (int p = 0; p < 4; ++p) s += gi(a, p) * rs(p, b);
    return s;
  }
  double dj_uu(int w, int a, int b) const {
    double s = 0;
    for (int c = 0; c < 4; ++c) s += gi(a, c) * dj(w, c, b);
    return s;
  }
  // (nabla_c J_a^b)(nabla_d J_u^a) J_b^u
  double a(int c, int d) const {
    return sum_over(3, [&](const int* k) { return dj(c, k[0], k[1]) * dj(d, k[2], k[0]) * e(k[1], k[2]); });
  }
  double a_du(int c, int q) const {
    double s = 0;
    for (int d = 0; d < 4; ++d) s += a(c, d) * gi(d, q);
    return s;
  }
  double a_ud(int p, int d) const {
    double s = 0;
    for (int c = 0; c < 4; ++c) s += gi(p, c) * a(c, d);
    return s;
  }
  double kappa() const { return sum_over(2, [&](const int* k) { return a(k[0], k[1]) * jup(k[0], k[1]); }); }
};

struct PointData {
  MetricField g;
  EndoField j;
  Point p;
  HermitianPoint h;
  HermitianTensors t;
  HermitianValues v;
  Raw raw;
  PointData(MetricField g_, EndoField j_, Point p_)
      : g(std::move(g_)), j(std::move(j_)), p(std::move(p_)), h(g, j, p, 2), t(h), v(t), raw(h) {}
};

PointData hermitian_setup(std::uint64_t seed, int negative_pairs = 0) {
  Rng rng(seed);
  MetricField g = as_metric(random_hermitian_metric(rng, 4, StructureKind::complex, negative_pairs, 1, 4, 0.2));
  return PointData(g, complex_j(), random_point(rng));
}

const RealTensor& term(const std::vector<NamedTerm>& terms, const std::string& name) {
  for (const auto& t : terms)
    if (t.name == name) return t.value;
  throw std::runtime_error("no term " + name);
}

void expect_close(const RealTensor& a, const RealTensor& b, const std::string& what) {
  EXPECT_LE(max_abs_difference(a, b), 1e-12 * (1.0 + max_abs(b))) << what;
}

}  // namespace

// ---------------------------------------------------------------------------
// Berger

TEST(Berger, FlatMetricIsExactlyZero) {
  const MetricField g = as_metric(constant_polynomial(standard_metric(Signature{0, 4}), FieldKind::metric));
  EXPECT_EQ(max_abs(berger_residual(g, Point{0.2, 0.1, -0.3, 0.0}).residual), 0.0);
}

TEST(Berger, RandomRiemannianMetrics) {
  Rng rng(101);
  for (int f = 0; f < 5; ++f) {
    const MetricField g = as_metric(random_metric(rng, Signature{0, 4}));
    for (int k = 0; k < 4; ++k) EXPECT_LE(berger_residual(g, random_point(rng, 0.5)).relative(), 1e-8);
  }
}

TEST(Berger, IndefiniteSignatures) {
  Rng rng(102);
  for (int neg : {1, 2}) {
    const MetricField g = as_metric(random_metric(rng, Signature{neg, 4 - neg}));
    EXPECT_LE(berger_residual(g, random_point(rng)).relative(), 1e-8);
  }
}

TEST(Berger, RoundSphereTermsBalance) {
  // Constant curvature 1 at a point with g = Id: R_ijkl = g_jk g_il - g_ik g_jl.
  RealTensor g = standard_metric(Signature{0, 4});
  RealTensor r(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) r(i, j, k, l) = g(j, k) * g(i, l) - g(i, k) * g(j, l);
  const auto terms = berger_terms(g, g, r);
  EXPECT_NEAR(term(terms, "quarter_norms_g")(0, 0), 6.0, 1e-14);
  EXPECT_NEAR(term(terms, "minus_r_check")(0, 0), -6.0, 1e-14);
  EXPECT_NEAR(term(terms, "two_rho_check")(0, 0), 18.0, 1e-14);
  EXPECT_NEAR(term(terms, "l_rho")(0, 0), 18.0, 1e-14);
  EXPECT_NEAR(term(terms, "minus_tau_rho")(0, 0), -36.0, 1e-14);
  EXPECT_EQ(max_abs(sum_terms(terms).total), 0.0);
}

TEST(Berger, RejectsOtherDimensions) {
  const MetricField g = as_metric(constant_polynomial(standard_metric(Signature{0, 3}), FieldKind::metric));
  EXPECT_THROW(berger_residual(g, Point{0, 0, 0}), PreconditionError);
}

// ---------------------------------------------------------------------------
// Gray

TEST(Gray, FlatKahlerIsExactlyZero) {
  const MetricField g = as_metric(constant_polynomial(standard_metric(Signature{0, 4}), FieldKind::metric));
  EXPECT_EQ(max_abs(gray_residual(g, complex_j(), Point{0.1, 0.2, 0.3, 0.4}).residual), 0.0);
}

TEST(Gray, KahlerInputs) {
  Rng rng(201);
  for (int f = 0; f < 3; ++f) {
    const MetricField g = as_metric(random_kahler_metric(rng, 4, StructureKind::complex));
    EXPECT_LE(gray_residual(g, complex_j(), random_point(rng)).relative(), 1e-9);
  }
}

TEST(Gray, RandomAlmostHermitianAndSymmetric) {
  Rng rng(202);
  for (int f = 0; f < 5; ++f) {
    const MetricField g = as_metric(random_hermitian_metric(rng, 4, StructureKind::complex, f % 2, 1, 4, 0.2));
    const IdentityValue r = gray_residual(g, complex_j(), random_point(rng));
    EXPECT_LE(r.relative(), 1e-7);
    EXPECT_LE(max_abs(r.residual - transposed(r.residual)), 1e-10);
  }
}

TEST(Gray, RejectsIncompatiblePairAndParaStructures) {
  Rng rng(203);
  const MetricField g = as_metric(random_metric(rng, Signature{0, 4}, 0, 2, 0.3));
  EXPECT_THROW(gray_residual(g, complex_j(), Point{0, 0, 0, 0}), PreconditionError);
  const MetricField gp = as_metric(random_hermitian_metric(rng, 4, StructureKind::para));
  EXPECT_THROW(gray_residual(gp, as_endo(standard_endo_field(4, StructureKind::para)), Point{0, 0, 0, 0}),
               PreconditionError);
}

// ---------------------------------------------------------------------------
// Term-by-term transcription against index loops

TEST(PontrjaginTerms, AlgebraicTermsMatchIndexLoops) {
  const PointData s = hermitian_setup(301);
  const Raw& w = s.raw;
  const auto tt = t_prime_terms(s.h, s.t, s.v, 1.0);
  const auto st = s_prime_terms(s.v);
  expect_close(term(tt, "t1_rho_star_sq"),
               loop2([&](int i, int j) { return 2 * sum_over(1, [&](const int* k) { return w.rs_ud(k[0], j) * w.rs(k[0], i); }); }),
               "t1");
  expect_close(term(tt, "t2_rho_star_sq"),
               loop2([&](int i, int j) { return -2 * sum_over(1, [&](const int* k) { return w.rs(j, k[0]) * w.rs_du(i, k[0]); }); }),
               "t2");
  expect_close(term(tt, "t3_rho_star_r"), loop2([&](int i, int j) {
                 return 2 * sum_over(4, [&](const int* k) {
                          return w.rs_uu(k[0], k[1]) * w.r(k[0], k[2], k[3], i) * w.e(k[1], k[2]) * w.e(j, k[3]);
                        });
               }),
               "t3");
  const double rr = sum_over(2, [&](const int* k) { return w.rs_uu(k[0], k[1]) * w.rs(k[0], k[1]); });
  expect_close(term(tt, "t5_rho_star_norm"), w.g * rr, "t5");
  expect_close(term(tt, "t6_j_r_r"), loop2([&](int i, int j) {
                 return 4 * sum_over(5, [&](const int* k) {
                          return w.e(j, k[0]) * w.jup(k[1], k[2]) * w.rup(k[0], k[2], k[3], k[4]) * w.rup(i, k[1], k[4], k[3]);
                        });
               }),
               "t6");
  const double jrr = sum_over(6, [&](const int* k) {
    return w.jup(k[0], k[1]) * w.jup(k[2], k[3]) * w.rup(k[1], k[3], k[4], k[5]) * w.rup(k[0], k[2], k[5], k[4]);
  });
  expect_close(term(tt, "t8_j_r_r_trace"), w.g * (0.5 * jrr), "t8");
  expect_close(term(st, "s1_rho_star_j_rho_star"), loop2([&](int i, int j) {
                 return 4 * sum_over(2, [&](const int* k) { return w.rs_uu(k[0], k[1]) * w.jdd(k[1], j) * w.rs(k[0], i); });
               }),
               "s1");
  expect_close(term(st, "s2_rho_star_r"), loop2([&](int i, int j) {
                 return -2 * sum_over(5, [&](const int* k) {
                          return w.rs_uu(k[0], k[1]) * w.e(k[1], k[2]) * w.e(i, k[3]) * w.e(j, k[4]) *
                                 w.r(k[0], k[2], k[3], k[4]);
                        });
               }),
               "s2");
  expect_close(term(st, "s3_j_r_r"), loop2([&](int i, int j) {
                 return -2 * sum_over(4, [&](const int* k) {
                          return w.jup(k[0], k[1]) * w.rup(j, k[1], k[2], k[3]) * w.rup(i, k[0], k[3], k[2]);
                        });
               }),
               "s3");
}

TEST(PontrjaginTerms, SecondDerivativeTermsMatchIndexLoops) {
  const PointData s = hermitian_setup(302);
  const auto tt = t_prime_terms(s.h, s.t, s.v, 1.0);
  const int m = 4;
  // rho*^ac J_i^b J_cj built by loops at jet level
  JetTensor x(m, 4), y(m, 4);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < m; ++i)
      for (int b = 0; b < m; ++b)
        for (int j = 0; j < m; ++j) {
          Jet acc(0.0), acc2(0.0);
          for (int c = 0; c < m; ++c) acc.add_product(s.t.rs_uu(a, c), s.t.e(i, b) * s.t.j_dd(c, j));
          for (int u = 0; u < m; ++u)
            for (int v = 0; v < m; ++v) acc2.add_product(s.t.e(u, a) * s.t.j_dd(v, i), s.t.r_uuud(u, v, j, b));
          x(a, i, b, j) = acc;
          y(a, i, j, b) = acc2;
        }
  const RealTensor nx = s.h.nabla2(x, "udud");
  const RealTensor ny = s.h.nabla2(y, "uddu");
  expect_close(term(tt, "t4_nabla_nabla_rho_star"), loop2([&](int i, int j) {
                 return 4 * sum_over(2, [&](const int* k) { return nx.at(std::vector<int>{k[1], k[0], k[0], i, k[1], j}); });
               }),
               "t4");
  expect_close(term(tt, "t7_nabla_nabla_j_r"), loop2([&](int i, int j) {
                 return 4 * sum_over(2, [&](const int* k) { return ny.at(std::vector<int>{k[1], k[0], k[0], i, j, k[1]}); });
               }),
               "t7");
}

TEST(ChernTerms, AlgebraicTermsMatchIndexLoops) {
  const PointData s = hermitian_setup(303);
  const Raw& w = s.raw;
  const auto ut = u_prime_terms(s.h, s.t, s.v);
  const auto vt = v_prime_terms(s.h, s.t, s.v);
  const double kappa = w.kappa();
  auto check = [&](const std::vector<NamedTerm>& terms, const std::string& name,
                   const std::function<double(int, int)>& f) { expect_close(term(terms, name), loop2(f), name); };
  check(ut, "u1", [&](int i, int j) {
    return sum_over(2, [&](const int* k) { return w.jup(i, k[0]) * w.rs_du(k[0], k[1]) * w.a_du(k[1], j); });
  });
  check(ut, "u2", [&](int i, int j) {
    return sum_over(2, [&](const int* k) { return w.jup(k[0], i) * w.rs_uu(j, k[1]) * w.a(k[1], k[0]); });
  });
  check(ut, "u4", [&](int i, int j) {
    return 0.5 * sum_over(5, [&](const int* k) {
             return w.jup(k[0], k[1]) * w.rup(k[1], k[2], k[3], i) * w.jup(k[4], k[2]) * w.jup(k[3], j) * w.a(k[4], k[0]);
           });
  });
  check(ut, "u6", [&](int i, int j) {
    return -3 * sum_over(5, [&](const int* k) {
             return w.jup(k[0], k[1]) * w.rs_du(k[1], k[2]) * w.dj(k[2], k[3], i) * w.dj_uu(k[0], j, k[4]) * w.e(k[4], k[3]);
           });
  });
  const double u7 = sum_over(3, [&](const int* k) { return w.jup(k[0], k[1]) * w.rs_du(k[1], k[2]) * w.a(k[2], k[0]); });
  check(ut, "u7", [&](int i, int j) { return -0.5 * u7 * w.gi(i, j); });
  check(ut, "u8", [&](int i, int j) { return -0.5 * w.rs_uu(i, j) * kappa; });
  check(ut, "u11", [&](int i, int j) {
    return 1.5 * w.ts * sum_over(4, [&](const int* k) {
             return w.dj_uu(k[0], j, k[1]) * w.dj(k[2], k[3], i) * w.e(k[1], k[3]) * w.jup(k[0], k[2]);
           });
  });
  check(ut, "u12", [&](int i, int j) {
    return w.ts * sum_over(1, [&](const int* k) { return w.a_ud(j, k[0]) * w.jup(i, k[0]); });
  });
  check(ut, "u13", [&](int i, int j) { return -0.25 * w.ts * kappa * w.gi(i, j); });
  check(ut, "u14", [&](int i, int j) {
    return 2 * sum_over(4, [&](const int* k) {
             return w.rs(k[0], k[1]) * w.r_uddu(k[1], k[2], k[3], i) * w.jup(k[0], k[2]) * w.jup(k[3], j);
           });
  });
  const double rr = sum_over(2, [&](const int* k) { return w.rs_uu(k[0], k[1]) * w.rs(k[1], k[0]); });
  check(ut, "u16", [&](int i, int j) { return -rr * w.gi(i, j); });
  check(ut, "u17", [&](int i, int j) { return 2 * w.ts * w.rs_uu(i, j); });
  check(ut, "u19", [&](int i, int j) { return 0.5 * w.ts * w.ts * w.gi(i, j); });

  check(vt, "v1", [&](int p, int q) {
    return -sum_over(3, [&](const int* k) { return w.jup(k[0], k[1]) * w.jup(k[2], q) * w.rs_du(k[1], p) * w.a(k[2], k[0]); });
  });
  check(vt, "v2", [&](int p, int q) {
    return 0.5 * sum_over(6, [&](const int* k) {
             return w.jup(k[0], k[1]) * w.jup(k[2], k[3]) * w.jup(p, k[4]) * w.jup(q, k[5]) *
                    w.r(k[1], k[3], k[4], k[5]) * w.a(k[2], k[0]);
           });
  });
  check(vt, "v4", [&](int p, int q) { return sum_over(1, [&](const int* k) { return w.rs_uu(q, k[0]) * w.a_du(k[0], p); }); });
  check(vt, "v5", [&](int p, int q) {
    return sum_over(4, [&](const int* k) {
      return w.jup(k[0], k[1]) * w.rs_du(k[1], k[2]) * w.dj(k[2], k[3], p) * w.dj_uu(k[0], q, k[3]);
    });
  });
  check(vt, "v6", [&](int p, int q) {
    return kappa * sum_over(1, [&](const int* k) { return w.jup(k[0], p) * w.rs_du(k[0], q); });
  });
  check(vt, "v7", [&](int p, int q) {
    return 0.5 * w.ts * sum_over(3, [&](const int* k) {
             return w.dj(k[0], k[1], p) * w.dj_uu(k[2], q, k[1]) * w.jup(k[0], k[2]);
           });
  });
  check(vt, "v8", [&](int p, int q) {
    return 0.5 * w.ts * sum_over(1, [&](const int* k) { return w.gi(p, k[0]) * w.a_du(k[0], q); });
  });
  check(vt, "v10", [&](int p, int q) {
    return -4 * sum_over(2, [&](const int* k) { return w.jup(k[0], q) * w.rs(k[0], k[1]) * w.rs_uu(k[1], p); });
  });
  check(vt, "v11", [&](int p, int q) {
    return 2 * sum_over(5, [&](const int* k) {
             return w.rs(k[0], k[1]) * w.jup(k[0], k[2]) * w.jup(p, k[3]) * w.jup(q, k[4]) * w.r_uddd(k[1], k[2], k[3], k[4]);
           });
  });
  check(vt, "v12", [&](int p, int q) {
    return -4 * w.ts * sum_over(1, [&](const int* k) { return w.jup(k[0], p) * w.rs_du(k[0], q); });
  });
}

TEST(ChernTerms, DerivativeTermsMatchIndexLoops) {
  const PointData s = hermitian_setup(304);
  const auto ut = u_prime_terms(s.h, s.t, s.v);
  const auto vt = v_prime_terms(s.h, s.t, s.v);
  const HermitianTensors& t = s.t;
  const int m = 4;
  auto build = [m](int rank, const std::function<Jet(const std::vector<int>&)>& f) {
    JetTensor x(m, rank);
    std::vector<int> idx(static_cast<std::size_t>(rank));
    for (std::size_t n = 0; n < x.size(); ++n) {
      x.unflatten(n, idx);
      x.data()[n] = f(idx);
    }
    return x;
  };
  auto jsum = [m](int n, const std::function<Jet(const int*)>& f) {
    Jet acc(0.0);
    int idx[4] = {0, 0, 0, 0};
    const int total = 1 << (2 * n);
    for (int it = 0; it < total; ++it) {
      int rem = it;
      for (int k = 0; k < n; ++k) {
        idx[k] = rem % m;
        rem /= m;
      }
      acc += f(idx);
    }
    return acc;
  };
  // u3: 4 nabla_u (J^cv rho*_v^i nabla_c J^ju), slots (i, j, u)
  const JetTensor x3 = build(3, [&](const std::vector<int>& q) {
    return jsum(2, [&](const int* k) { return t.j_uu(k[0], k[1]) * t.rs_du(k[1], q[0]) * t.dj_uu(k[0], q[1], q[2]); });
  });
  const RealTensor n3 = s.h.nabla1(x3, "uuu");
  expect_close(term(ut, "u3_nabla"), loop2([&](int i, int j) {
                 return 4 * sum_over(1, [&](const int* k) { return n3.at(std::vector<int>{k[0], i, j, k[0]}); });
               }),
               "u3");
  // u18: -2 nabla_b nabla_a (tau* J^ia J^jb), slots (a, b, i, j)
  const JetTensor x18 = build(4, [&](const std::vector<int>& q) { return t.ts * t.j_uu(q[2], q[0]) * t.j_uu(q[3], q[1]); });
  const RealTensor n18 = s.h.nabla2(x18, "uuuu");
  expect_close(term(ut, "u18_nabla_nabla"), loop2([&](int i, int j) {
                 return -2 * sum_over(2, [&](const int* k) { return n18.at(std::vector<int>{k[1], k[0], k[0], k[1], i, j}); });
               }),
               "u18");
  // u15: 4 nabla_a nabla^l (rho*_kl J^ai J^kj), slots (a, l, i, j)
  const JetTensor x15 = build(4, [&](const std::vector<int>& q) {
    return jsum(1, [&](const int* k) { return t.rs(k[0], q[1]) * t.j_uu(q[0], q[2]) * t.j_uu(k[0], q[3]); });
  });
  const RealTensor n15 = s.h.nabla2(x15, "uduu");
  expect_close(term(ut, "u15_nabla_nabla"), loop2([&](int i, int j) {
                 return 4 * sum_over(3, [&](const int* k) {
                          return n15.at(std::vector<int>{k[0], k[1], k[0], k[2], i, j}) * s.v.ginv(k[1], k[2]);
                        });
               }),
               "u15");
  // v9: -nabla_u (tau* (nabla_c J^qb) J_b^p J^cu), slots (u, p, q)
  const JetTensor x9 = build(3, [&](const std::vector<int>& q) {
    return jsum(2, [&](const int* k) { return t.ts * t.dj_uu(k[0], q[2], k[1]) * t.e(k[1], q[1]) * t.j_uu(k[0], q[0]); });
  });
  const RealTensor n9 = s.h.nabla1(x9, "uuu");
  expect_close(term(vt, "v9_nabla"), loop2([&](int p, int q) {
                 return -sum_over(1, [&](const int* k) { return n9.at(std::vector<int>{k[0], k[0], p, q}); });
               }),
               "v9");
}

TEST(IdentityTerms, CovariantUnderLinearChanges) {
  Rng rng(305);
  const MetricField g = as_metric(random_hermitian_metric(rng, 4, StructureKind::complex, 0, 1, 4, 0.2));
  const EndoField j = complex_j();
  CoordinateChange c = CoordinateChange::identity(4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) c.linear(a, b) += 0.2 * rng.uniform(-1, 1);
  const MetricField g2{pull_back_metric(g.field, c), g.signature};
  const EndoField j2{pull_back_endo(j.field, c), j.kind};
  const Point o{0, 0, 0, 0};
  const RealTensor l = c.linear;
  const RealTensor linv = from_eigen(to_eigen(l).inverse());
  const HermitianPoint h1(g, j, o), h2(g2, j2, o);
  const HermitianTensors t1(h1), t2(h2);
  const HermitianValues v1(t1), v2(t2);
  auto lower = [&](const std::vector<NamedTerm>& a, const std::vector<NamedTerm>& b) {
    for (std::size_t k = 0; k < a.size(); ++k)
      expect_close(einsum<double>("ia,jb,ij->ab", {&l, &l, &a[k].value}), b[k].value, a[k].name);
  };
  auto upper = [&](const std::vector<NamedTerm>& a, const std::vector<NamedTerm>& b) {
    for (std::size_t k = 0; k < a.size(); ++k)
      expect_close(einsum<double>("ai,bj,ij->ab", {&linv, &linv, &a[k].value}), b[k].value, a[k].name);
  };
  lower(t_prime_terms(h1, t1, v1, -1.0), t_prime_terms(h2, t2, v2, -1.0));
  lower(s_prime_terms(v1), s_prime_terms(v2));
  upper(u_prime_terms(h1, t1, v1), u_prime_terms(h2, t2, v2));
  upper(v_prime_terms(h1, t1, v1), v_prime_terms(h2, t2, v2));
}

// ---------------------------------------------------------------------------
// Pontrjagin and Chern identities

TEST(Pontrjagin, FlatKahlerIsExactlyZero) {
  const MetricField g = as_metric(constant_polynomial(standard_metric(Signature{0, 4}), FieldKind::metric));
  const PairIdentityValue r = pontrjagin_residuals(g, complex_j(), Point{0.1, 0.0, -0.2, 0.3});
  EXPECT_EQ(r.relative(), 0.0);
  const PairIdentityValue c = chern_residuals(g, complex_j(), Point{0.1, 0.0, -0.2, 0.3});
  EXPECT_EQ(c.relative(), 0.0);
}

TEST(Pontrjagin, JoiningSignAdjudication) {
  Rng rng(401);
  for (int f = 0; f < 3; ++f) {
    const MetricField gk = as_metric(random_kahler_metric(rng, 4, StructureKind::complex));
    const MetricField gh = as_metric(random_hermitian_metric(rng, 4, StructureKind::complex, 0, 1, 4, 0.2));
    const Point p = random_point(rng);
    for (const MetricField* g : {&gk, &gh}) {
      EXPECT_LE(pontrjagin_residuals(*g, complex_j(), p, -1.0).relative(), 1e-10);
      EXPECT_GT(pontrjagin_residuals(*g, complex_j(), p, 1.0).relative(), 1e-3);
    }
  }
  EXPECT_EQ(kPontrjaginJoiningSign, -1.0);
}

TEST(Pontrjagin, KahlerAndAlmostHermitianInputs) {
  Rng rng(402);
  for (int f = 0; f < 3; ++f) {
    const MetricField gk = as_metric(random_kahler_metric(rng, 4, StructureKind::complex, f % 2));
    EXPECT_LE(pontrjagin_residuals(gk, complex_j(), random_point(rng)).relative(), 1e-7);
    const MetricField gh = as_metric(random_hermitian_metric(rng, 4, StructureKind::complex, f % 2, 1, 4, 0.2));
    EXPECT_LE(pontrjagin_residuals(gh, complex_j(), random_point(rng)).relative(), 1e-6);
  }
}

TEST(Chern, KahlerAndAlmostHermitianInputs) {
  Rng rng(403);
  for (int f = 0; f < 3; ++f) {
    const MetricField gk = as_metric(random_kahler_metric(rng, 4, StructureKind::complex, f % 2));
    EXPECT_LE(chern_residuals(gk, complex_j(), random_point(rng)).relative(), 1e-7);
    const MetricField gh = as_metric(random_hermitian_metric(rng, 4, StructureKind::complex, f % 2, 1, 4, 0.2));
    EXPECT_LE(chern_residuals(gh, complex_j(), random_point(rng)).relative(), 1e-6);
  }
}

TEST(Chern, GradientTermsVanishOnKahlerInputs) {
  Rng rng(404);
  const MetricField g = as_metric(random_kahler_metric(rng, 4, StructureKind::complex));
  const PointData s(g, complex_j(), random_point(rng));
  for (const auto& name : {"u1", "u2", "u4", "u6", "u7", "u8", "u11", "u12", "u13"})
    EXPECT_LE(max_abs(term(u_prime_terms(s.h, s.t, s.v), name)), 1e-12) << name;
  for (const auto& name : {"v1", "v2", "v4", "v5", "v6", "v7", "v8"})
    EXPECT_LE(max_abs(term(v_prime_terms(s.h, s.t, s.v), name)), 1e-12) << name;
}

TEST(Pontrjagin, RejectsOtherDimensionsAndParaStructures) {
  const MetricField g6 = as_metric(constant_polynomial(standard_metric(Signature{0, 6}), FieldKind::metric));
  const EndoField j6 = as_endo(standard_endo_field(6, StructureKind::complex));
  const Point o6(6, 0.0);
  EXPECT_THROW(pontrjagin_residuals(g6, j6, o6), PreconditionError);
  EXPECT_THROW(chern_residuals(g6, j6, o6), PreconditionError);
  Rng rng(405);
  const MetricField gp = as_metric(random_hermitian_metric(rng, 4, StructureKind::para));
  const EndoField jp = as_endo(standard_endo_field(4, StructureKind::para));
  EXPECT_THROW(pontrjagin_residuals(gp, jp, Point{0, 0, 0, 0}), PreconditionError);
  EXPECT_THROW(chern_residuals(gp, jp, Point{0, 0, 0, 0}), PreconditionError);
}

// ---------------------------------------------------------------------------
// Kahler identities

TEST(KahlerIdentities, FlatIsExactlyZero) {
  const MetricField g = as_metric(constant_polynomial(standard_metric(Signature{0, 4}), FieldKind::metric));
  EXPECT_EQ(kahler_identity_residuals(g, complex_j(), Point{0.3, 0.1, 0.0, -0.2}).relative(), 0.0);
}

TEST(KahlerIdentities, ProductOfSurfaces) {
  Rng rng(501);
  for (int f = 0; f < 3; ++f) {
    const MetricField g = as_metric(product_kahler_metric(rng, StructureKind::complex, f % 2));
    EXPECT_LE(kahler_identity_residuals(g, complex_j(), random_point(rng)).relative(), 1e-8);
  }
}

TEST(KahlerIdentities, FirstHoldsOnGenericKahlerSecondDoesNot) {
  Rng rng(502);
  const MetricField g = as_metric(random_kahler_metric(rng, 4, StructureKind::complex, 0, 5, 0.1));
  const KahlerIdentityValue r = kahler_identity_residuals(g, complex_j(), random_point(rng));
  EXPECT_LE(r.first.relative(), 1e-10);
  EXPECT_GT(r.second.relative(), 1e-4);
}

TEST(KahlerIdentities, RejectsNonKahler) {
  Rng rng(503);
  const MetricField g = as_metric(random_hermitian_metric(rng, 4, StructureKind::complex, 0, 1, 3, 0.2));
  EXPECT_THROW(kahler_identity_residuals(g, complex_j(), Point{0.1, 0.1, 0.1, 0.1}), PreconditionError);
}

// ---------------------------------------------------------------------------
// Properties and reports

TEST(IdentityProperties, RandomInputsPass) {
  Rng rng(601);
  for (int f = 0; f < 20; ++f) {
    const MetricField gm = as_metric(random_metric(rng, Signature{f % 3, 4 - f % 3}));
    const MetricField gh = as_metric(random_hermitian_metric(rng, 4, StructureKind::complex, f % 2, 1, 4, 0.2));
    const MetricField gp = as_metric(product_kahler_metric(rng, StructureKind::complex, f % 2));
    const auto pts = halton_ball(4, 0.5, 10);
    const EndoField j = complex_j();
    EXPECT_TRUE(identity_report(Identity::berger, gm, nullptr, pts).passed);
    EXPECT_TRUE(identity_report(Identity::gray, gh, &j, pts).passed);
    EXPECT_TRUE(identity_report(Identity::kahler, gp, &j, pts).passed);
    if (f < 4) {
      EXPECT_TRUE(identity_report(Identity::pontrjagin, gh, &j, pts).passed);
      EXPECT_TRUE(identity_report(Identity::chern, gh, &j, pts).passed);
    }
  }
}

TEST(IdentityProperties, ScaleCovarianceOfStatus) {
  Rng rng(602);
  const MetricField gh = as_metric(random_hermitian_metric(rng, 4, StructureKind::complex, 0, 1, 4, 0.2));
  const EndoField j = complex_j();
  const auto pts = halton_ball(4, 0.4, 3);
  for (Identity id : {Identity::berger, Identity::gray, Identity::pontrjagin, Identity::chern}) {
    const bool base = identity_report(id, gh, &j, pts).passed;
    for (double c : {0.5, 3.0}) EXPECT_EQ(identity_report(id, scaled(gh, c), &j, pts).passed, base) << to_string(id);
  }
}

TEST(IdentityReport, JsonAndCsv) {
  Rng rng(603);
  const MetricField g = as_metric(random_metric(rng, Signature{0, 4}));
  const auto pts = halton_ball(4, 0.5, 5);
  const IdentityReport rep = identity_report(Identity::berger, g, nullptr, pts);
  const nlohmann::json js = rep.to_json();
  EXPECT_EQ(js["schema_version"], kSchemaVersion);
  EXPECT_EQ(js["identity"], "berger");
  EXPECT_EQ(js["points_sampled"], 5);
  EXPECT_EQ(js["passed"], rep.max_residual <= rep.tolerance);
  for (const auto& p : rep.points) EXPECT_GE(p.residual, 0.0);
  const std::string csv = rep.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x0,x1,x2,x3,residual");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

TEST(IdentityReport, ParsesNamesAndRequiresStructure) {
  EXPECT_EQ(parse_identity("chern"), Identity::chern);
  EXPECT_THROW(parse_identity("euler"), InputError);
  const MetricField g = as_metric(constant_polynomial(standard_metric(Signature{0, 4}), FieldKind::metric));
  const Point o{0, 0, 0, 0};
  EXPECT_THROW(identity_report(Identity::gray, g, nullptr, std::span<const Point>(&o, 1)), InputError);
}
