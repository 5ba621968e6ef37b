#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "germforge/curvature.hpp"
#include "germforge/field.hpp"
#include "germforge/fixtures.hpp"
#include "germforge/germ_io.hpp"

using namespace germforge;

namespace {

Point radial(int m, double rad, int salt = 0) { return at_radius(m, rad, static_cast<std::uint64_t>(salt)); }

// |grad phi| along a dense radial grid, by central differences of values.
double sampled_gradient_sup(const MesaBump& phi, int m, int steps) {
  double sup = 0.0;
  const double h = phi.outer() * 1e-6;
  for (int s = 0; s <= steps; ++s) {
    const double rad = phi.outer() * 1.05 * s / steps;
    const Point a = radial(m, rad + h), b = radial(m, std::max(0.0, rad - h));
    const double d = (phi.value(a) - phi.value(b)) / (norm(a) - norm(b));
    sup = std::max(sup, std::abs(d));
  }
  return sup;
}

PolynomialField theta_example_metric() {
  PolynomialField g(4, FieldKind::metric);
  g.set_signature({2, 2});
  g.add_symmetric(0, 2, {0, 0, 0, 0}, 1.0);
  g.add_symmetric(1, 3, {0, 0, 0, 0}, 1.0);
  g.add_symmetric(0, 2, {1, 0, 1, 0}, 0.25);
  return g;
}

}  // namespace

TEST(Mesa, PlateausAreExact) {
  const MesaBump phi(0.3);
  EXPECT_EQ(phi.value(Point{0.0, 0.0, 0.0}), 1.0);
  EXPECT_EQ(phi.value(radial(3, 0.29)), 1.0);
  EXPECT_EQ(phi.value(radial(3, 2.5 * 0.3)), 0.0);
  EXPECT_EQ(phi.value(radial(3, 0.61)), 0.0);
  const auto x = coordinate_jets(radial(3, 0.1), 4);
  const Jet j = phi.eval(x);
  EXPECT_EQ(j.max_abs(), 1.0);
}

TEST(Mesa, BoundedAndMonotone) {
  const MesaBump phi(1.0);
  double prev = 1.0;
  for (int s = 0; s <= 400; ++s) {
    const double v = phi.value(radial(2, 2.2 * s / 400.0));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_LE(v, prev + 1e-15);
    prev = v;
  }
}

TEST(Mesa, JetsFiniteInTransition) {
  const MesaBump phi(0.5);
  for (double rad : {0.5000001, 0.6, 0.75, 0.9, 0.99999}) {
    const Jet j = phi.eval(coordinate_jets(radial(4, rad), 4));
    for (double c : j.coefficients()) EXPECT_TRUE(std::isfinite(c));
  }
}

TEST(Mesa, GradientScalesInverselyWithRadius) {
  std::vector<double> c;
  for (double r : {0.5, 1.0, 2.0}) c.push_back(sampled_gradient_sup(MesaBump(r), 3, 4000) * r);
  for (double v : c) EXPECT_NEAR(v / c[1], 1.0, 0.05);
}

TEST(Mesa, JetGradientMatchesDifferences) {
  const MesaBump phi(1.0);
  const Point p = radial(2, 1.4);
  const Jet j = phi.eval(coordinate_jets(p, 1));
  for (int i = 0; i < 2; ++i) {
    Point a = p, b = p;
    a[static_cast<std::size_t>(i)] += 1e-6;
    b[static_cast<std::size_t>(i)] -= 1e-6;
    EXPECT_NEAR(j.gradient(i), (phi.value(a) - phi.value(b)) / 2e-6, 1e-6);
  }
}

TEST(Mesa, RejectsBadRadii) {
  EXPECT_THROW(MesaBump(0.0), InputError);
  EXPECT_THROW(MesaBump(1.0, 0.5), InputError);
}

TEST(Blend, EqualArgumentsGiveTheArgument) {
  Rng rng(1);
  const Field a = random_metric(rng, {0, 3}).field();
  const Field b = blend(a, a, MesaBump(0.2));
  for (int s = 0; s < 10; ++s) {
    const Point p = rng.in_ball(3, 0.6);
    EXPECT_LE(max_abs_difference(a.values(p), b.values(p)), 1e-15);
  }
}

TEST(Blend, AgreementRegionsAreExact) {
  Rng rng(2);
  const Field a = random_metric(rng, {1, 2}).field();
  const Field b = random_metric(rng, {1, 2}).field();
  const double r = 0.2;
  const Field c = blend(a, b, MesaBump(r));
  for (int s = 0; s < 20; ++s) {
    const Point in = rng.in_ball(3, r);
    const JetTensor ci = c.jets(in, 3), ai = a.jets(in, 3);
    for (std::size_t k = 0; k < ci.size(); ++k)
      for (std::size_t q = 0; q < ci.data()[k].coefficients().size(); ++q)
        EXPECT_EQ(ci.data()[k].coefficients()[q], ai.data()[k].coefficients()[q]);
    Point out = rng.direction(3);
    for (auto& x : out) x *= 2.0 * r + 0.3 * r * rng.uniform();
    EXPECT_EQ(max_abs_difference(c.values(out), b.values(out)), 0.0);
  }
  EXPECT_EQ(max_abs_difference(c.values(radial(3, 0.5 * r)), a.values(radial(3, 0.5 * r))), 0.0);
  EXPECT_EQ(max_abs_difference(c.values(radial(3, 2.2 * r)), b.values(radial(3, 2.2 * r))), 0.0);
}

TEST(Blend, RejectsValenceMismatch) {
  Rng rng(3);
  const Field g = random_metric(rng, {0, 2}).field();
  const Field j = standard_endo_field(2, StructureKind::complex).field();
  EXPECT_THROW(blend(g, j, MesaBump(0.1)), InputError);
}

TEST(Blend, FirstOrderShrinksLinearly) {
  // two metrics with equal value and zero first derivatives at 0
  Rng rng(4);
  const Field g1 = random_metric(rng, {0, 3}, 2, 4).field();
  const Field g2 = random_metric(rng, {0, 3}, 2, 4).field();
  auto c1 = [&](double r) {
    const Field d = difference(blend(g1, g2, MesaBump(r)), g2);
    return sampled_norms(d, halton_ball(3, 3.0 * r, 2000)).c1;
  };
  const double big = c1(0.2), small = c1(0.1);
  EXPECT_LE(small, 1.5 * 0.5 * big);
}

TEST(PullbackAverage, FixesCompatibleMetrics) {
  Rng rng(5);
  const PolynomialField g = random_hermitian_metric(rng, 4, StructureKind::complex, 1);
  const EndoField j = as_endo(standard_endo_field(4, StructureKind::complex));
  const MetricField avg = pullback_average(as_metric(g), j);
  for (int s = 0; s < 10; ++s) {
    const Point p = rng.in_ball(4, 0.5);
    EXPECT_LE(max_abs_difference(avg.field.values(p), g.field().values(p)), 1e-14);
  }
}

TEST(PullbackAverage, FlatStaysFlat) {
  for (StructureKind kind : {StructureKind::complex, StructureKind::para}) {
    const RealTensor eps = standard_hermitian_metric(4, kind, hermitian_signature(4, kind, 0));
    const MetricField g = make_metric(Field::constant(eps, {2, 0}, symmetric_pair()));
    const MetricField avg = pullback_average(g, as_endo(standard_endo_field(4, kind)));
    EXPECT_EQ(max_abs_difference(avg.field.values(Point{0.1, 0.2, 0.3, 0.4}), eps), 0.0);
  }
}

TEST(PullbackAverage, RandomPerturbationBecomesCompatible) {
  Rng rng(6);
  for (StructureKind kind : {StructureKind::complex, StructureKind::para}) {
    const Signature s = kind == StructureKind::para ? Signature{2, 2} : Signature{0, 4};
    const Field gf = random_metric(rng, s).field();
    const EndoField j = as_endo(standard_endo_field(4, kind));
    const MetricField avg{pullback_average(MetricField{gf, s}, j).field, s};
    for (int k = 0; k < 20; ++k) {
      const Point p = rng.in_ball(4, 0.7);
      EXPECT_LE(compatibility_defect(avg.field.values(p), j.field.values(p), kind), 1e-10);
    }
  }
}

TEST(PullbackAverage, RejectsNonStructure) {
  RealTensor bad = identity_matrix(2);
  bad(0, 1) = 0.5;
  const Field j(2, {1, 1}, [bad](std::span<const double>, int) { return to_jets(bad); });
  const MetricField g = make_metric(Field::constant(identity_matrix(2), {2, 0}, symmetric_pair()));
  const MetricField avg = pullback_average(g, EndoField{j, StructureKind::complex});
  EXPECT_THROW(avg.field.values(Point{0.0, 0.0}), PreconditionError);
}

TEST(RescaledArgument, PlateausAndSubstitution) {
  const double r = 0.3;
  // Theta(x) = Id + x^1 E_12
  const Field theta = Field::from_coordinates(3, {1, 1}, [](std::span<const Jet> x) {
    JetTensor t = to_jets(identity_matrix(3));
    t(0, 1) = x[0];
    return t;
  });
  const MesaBump phi(r);
  const Field c = compose_with_rescaled_argument(theta, phi);
  const Point inside = radial(3, 0.8 * r);
  EXPECT_EQ(max_abs_difference(c.values(inside), theta.values(inside)), 0.0);
  const Point outside = radial(3, 2.4 * r);
  EXPECT_EQ(max_abs_difference(c.values(outside), identity_matrix(3)), 0.0);
  const Point mid = radial(3, 1.5 * r, 2);
  Point scaled = mid;
  const double w = phi.value(mid);
  for (auto& x : scaled) x *= w;
  EXPECT_LE(max_abs_difference(c.values(mid), theta.values(scaled)), 1e-15);
  // first derivatives through the product and chain rules
  const JetTensor cj = c.jets(mid, 1);
  for (int i = 0; i < 3; ++i) {
    Point a = mid, b = mid;
    a[static_cast<std::size_t>(i)] += 1e-6;
    b[static_cast<std::size_t>(i)] -= 1e-6;
    const double fd = (c.values(a)(0, 1) - c.values(b)(0, 1)) / 2e-6;
    EXPECT_NEAR(cj(0, 1).gradient(i), fd, 1e-7);
  }
}

TEST(PolynomialFields, EvaluationMatchesTable) {
  PolynomialField p(2, FieldKind::scalar);
  p.add({}, {2, 1}, 3.0);
  p.add({}, {0, 0}, -1.0);
  const JetTensor t = p.field().jets(Point{0.5, 2.0}, 3);
  EXPECT_DOUBLE_EQ(t.data()[0].value(), 3.0 * 0.25 * 2.0 - 1.0);
  EXPECT_DOUBLE_EQ(t.data()[0].derivative(MultiIndex{{2, 1}}), 6.0);
}

TEST(PolynomialFields, RejectsBadEntries) {
  PolynomialField p(2, FieldKind::metric, 4);
  EXPECT_THROW(p.add({0}, {0, 0}, 1.0), InputError);
  EXPECT_THROW(p.add({0, 2}, {0, 0}, 1.0), InputError);
  EXPECT_THROW(p.add({0, 1}, {3, 2}, 1.0), InputError);
}

TEST(PolynomialFields, SymmetryTagsHold) {
  Rng rng(8);
  const Field g = random_metric(rng, {1, 3}).field();
  EXPECT_LE(symmetry_defect(g, halton_ball(4, 1.0, 100)), 1e-10);
  Field w = hessian_form(random_scalar(rng, 4, 2, 4, 0.5), standard_endo(4, StructureKind::complex)).field();
  EXPECT_LE(symmetry_defect(w, halton_ball(4, 1.0, 100)), 1e-10);
}

TEST(GermFiles, RoundTripIsExact) {
  Rng rng(9);
  PolynomialField g = random_metric(rng, {1, 3});
  for (int i = 0; i < 4; ++i) g.add({i, i}, {1, 1, 0, 0}, 1.0 / 3.0);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "germforge_roundtrip.json").string();
  write_germ(path, g);
  const PolynomialField back = read_germ(path);
  EXPECT_TRUE(back == g);
  EXPECT_TRUE(back.signature() && *back.signature() == (Signature{1, 3}));
  std::filesystem::remove(path);
}

TEST(GermFiles, OffDiagonalStoredOnceIsSymmetrized) {
  const json j = json::parse(R"({"kind":"metric","dimension":2,"coefficients":[
    {"component":[0,0],"multi_index":[0,0],"value":1},
    {"component":[1,1],"multi_index":[0,0],"value":1},
    {"component":[0,1],"multi_index":[1,0],"value":0.5}]})");
  const PolynomialField g = germ_from_json(j);
  EXPECT_EQ(g.coefficient({1, 0}, {1, 0}), 0.5);
  EXPECT_EQ(g.coefficient({0, 1}, {1, 0}), 0.5);
}

TEST(GermFiles, AsymmetricMetricIsRejected) {
  const json j = json::parse(R"({"kind":"metric","dimension":2,"coefficients":[
    {"component":[0,1],"multi_index":[0,0],"value":0.1},
    {"component":[1,0],"multi_index":[0,0],"value":0.2}]})");
  EXPECT_THROW(germ_from_json(j), InputError);
}

TEST(GermFiles, MalformedInputs) {
  EXPECT_THROW(germ_from_json(json::parse(R"({"dimension":2})")), InputError);
  EXPECT_THROW(germ_from_json(json::parse(R"({"kind":"blob","dimension":2})")), InputError);
  EXPECT_THROW(germ_from_json(json::parse(R"({"kind":"metric","dimension":2,"signature":[1,2]})")), InputError);
  EXPECT_THROW(read_germ("/nonexistent/file.json"), InputError);
}

TEST(GermFiles, ThetaExampleLoadsAsWritten) {
  const PolynomialField g = read_germ(std::string(GERMFORGE_FIXTURES) + "/theta_example.json");
  EXPECT_TRUE(g == theta_example_metric());
  EXPECT_EQ(g.coefficient({0, 2}, {1, 0, 1, 0}), 0.25);
  EXPECT_EQ(g.coefficient({2, 0}, {1, 0, 1, 0}), 0.25);
  EXPECT_EQ(g.table().size(), 6u);
}
