#pragma once

// Polynomial coordinate changes that put germs into the normal forms used by
// the transplant constructions: standard value at 0, vanishing first
// derivatives (metrics) or Christoffel symbols (connections), and the
// standard block form of a (para)-complex structure at 0.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "germforge/curvature.hpp"
#include "germforge/error.hpp"
#include "germforge/field.hpp"

namespace germforge {

/// x = L (y - Q(y, y) / 2), with Q(a, b, k) symmetric in (a, b).
struct CoordinateChange {
  RealTensor linear;     // L(i, a)
  RealTensor quadratic;  // Q(a, b, k)

  static CoordinateChange identity(int m) { return {identity_matrix(m), RealTensor(m, 3)}; }

  [[nodiscard]] int dim() const { return linear.dim(); }

  [[nodiscard]] std::vector<Jet> apply(std::span<const Jet> y) const {
    const int m = dim();
    std::vector<Jet> z(y.begin(), y.end());
    for (int k = 0; k < m; ++k)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          const double q = quadratic(a, b, k);
          if (q != 0.0) z[static_cast<std::size_t>(k)].add_product(y[static_cast<std::size_t>(a)], y[static_cast<std::size_t>(b)], -0.5 * q);
        }
    std::vector<Jet> x(static_cast<std::size_t>(m), Jet(0.0));
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < m; ++a)
        if (linear(i, a) != 0.0) x[static_cast<std::size_t>(i)] += z[static_cast<std::size_t>(a)] * linear(i, a);
    return x;
  }

  [[nodiscard]] bool is_identity() const {
    return max_abs_difference(linear, identity_matrix(dim())) == 0.0 && max_abs(quadratic) == 0.0;
  }
};

namespace detail {

// x-jets at y together with the Jacobian Jac(k, a) = d_a x^k and its inverse.
struct ChartJets {
  std::vector<Jet> x;
  JetTensor jac;
  JetTensor jac_inv;
};

inline ChartJets chart_jets(const CoordinateChange& c, std::span<const double> y, int order) {
  ChartJets out;
  out.x = c.apply(coordinate_jets(y, order));
  const int m = c.dim();
  out.jac = JetTensor(m, 2);
  for (int k = 0; k < m; ++k)
    for (int a = 0; a < m; ++a) out.jac(k, a) = out.x[static_cast<std::size_t>(k)].partial(a);
  out.jac_inv = inverse(out.jac);
  return out;
}

}  // namespace detail

/// g'_ab(y) = d_a x^i d_b x^j g_ij(x(y)).
inline Field pull_back_metric(const Field& g, const CoordinateChange& c) {
  if (c.is_identity()) return g;
  return Field(
      g.dim(), Valence{2, 0},
      [g, c](std::span<const double> y, int order) {
        const auto cj = detail::chart_jets(c, y, order + 1);
        const JetTensor gx = g.compose(cj.x);
        return einsum<Jet>("ia,jb,ij->ab", {&cj.jac, &cj.jac, &gx});
      },
      g.symmetries());
}

/// J' with E'(a, b) = d_a x^i E(i, j) d_j y^b.
inline Field pull_back_endo(const Field& j, const CoordinateChange& c) {
  if (c.is_identity()) return j;
  return Field(j.dim(), Valence{1, 1}, [j, c](std::span<const double> y, int order) {
    const auto cj = detail::chart_jets(c, y, order + 1);
    const JetTensor ex = j.compose(cj.x);
    return einsum<Jet>("ia,ij,bj->ab", {&cj.jac, &ex, &cj.jac_inv});
  });
}

/// Gamma'^c_ab = d_k y^c (d_a d_b x^k + d_a x^i d_b x^j Gamma^k_ij(x(y))).
inline Field pull_back_connection(const Field& gamma, const CoordinateChange& c) {
  if (c.is_identity()) return gamma;
  return Field(gamma.dim(), Valence{2, 1}, [gamma, c](std::span<const double> y, int order) {
    const int m = gamma.dim();
    const auto cj = detail::chart_jets(c, y, order + 2);
    const JetTensor gx = gamma.compose(cj.x);
    JetTensor inner = einsum<Jet>("ia,jb,ijk->abk", {&cj.jac, &cj.jac, &gx});
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int k = 0; k < m; ++k) inner(a, b, k) += cj.jac(k, a).partial(b);
    return einsum<Jet>("abk,ck->abc", {&inner, &cj.jac_inv});
  });
}

/// omega'_a = d_a x^i omega_i.
inline Field pull_back_oneform(const Field& w, const CoordinateChange& c) {
  if (c.is_identity()) return w;
  return Field(w.dim(), Valence{1, 0}, [w, c](std::span<const double> y, int order) {
    const auto cj = detail::chart_jets(c, y, order + 1);
    const JetTensor wx = w.compose(cj.x);
    return einsum<Jet>("ia,i->a", {&cj.jac, &wx});
  });
}

/// Flags of a normalized germ, each verified to 1e-10 at the origin.
struct NormalizationFlags {
  bool value_normalized = false;
  bool derivative_normalized = false;
  bool j_normalized = false;
};

struct NormalizedGerm {
  std::optional<MetricField> metric;
  std::optional<EndoField> endo;
  std::optional<ConnectionField> connection;
  NormalizationFlags flags;
  CoordinateChange change;
};

inline constexpr double kNormalizationTolerance = 1e-10;

inline double torsion_at(const Field& gamma, std::span<const double> p) {
  const RealTensor v = gamma.values(p);
  const int m = v.dim();
  double t = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) t = std::max(t, std::abs(v(i, j, k) - v(j, i, k)));
  return t;
}

inline bool metric_value_normalized(const Field& g, Signature s) {
  const Point o(static_cast<std::size_t>(g.dim()), 0.0);
  return max_abs_difference(g.values(o), standard_metric(s)) <= kNormalizationTolerance;
}

inline bool metric_derivative_normalized(const Field& g) {
  const Point o(static_cast<std::size_t>(g.dim()), 0.0);
  const JetTensor j = g.jets(o, 1);
  double d = 0.0;
  for (const auto& c : j.data())
    if (!c.is_constant())
      for (int a = 0; a < g.dim(); ++a) d = std::max(d, std::abs(c.gradient(a)));
  return d <= kNormalizationTolerance;
}

inline bool pair_value_normalized(const Field& g, const Field& j, StructureKind kind, Signature s) {
  const Point o(static_cast<std::size_t>(g.dim()), 0.0);
  return max_abs_difference(g.values(o), standard_hermitian_metric(g.dim(), kind, s)) <= kNormalizationTolerance &&
         max_abs_difference(j.values(o), standard_endo(g.dim(), kind)) <= kNormalizationTolerance;
}

inline bool endo_normalized(const Field& j, StructureKind kind) {
  const Point o(static_cast<std::size_t>(j.dim()), 0.0);
  return max_abs_difference(j.values(o), standard_endo(j.dim(), kind)) <= kNormalizationTolerance;
}

inline bool connection_normalized(const Field& gamma) {
  const Point o(static_cast<std::size_t>(gamma.dim()), 0.0);
  return max_abs(gamma.values(o)) <= kNormalizationTolerance;
}

inline CoordinateChange quadratic_change(const RealTensor& gamma0) {
  CoordinateChange c = CoordinateChange::identity(gamma0.dim());
  c.quadratic = gamma0;
  return c;
}

/// Coordinates with Gamma(0) = 0 via x = y - Gamma(0)(y, y) / 2.
inline NormalizedGerm normalize_connection(const ConnectionField& nabla) {
  const int m = nabla.field.dim();
  const Point o(static_cast<std::size_t>(m), 0.0);
  if (torsion_at(nabla.field, o) > kNormalizationTolerance)
    throw PreconditionError("connection has torsion at the origin");
  NormalizedGerm out;
  out.change = quadratic_change(nabla.field.values(o));
  out.connection = ConnectionField{pull_back_connection(nabla.field, out.change)};
  out.flags.derivative_normalized = connection_normalized(out.connection->field);
  if (!out.flags.derivative_normalized) throw VerificationError("normalize_connection: Gamma(0) did not vanish");
  out.flags.value_normalized = true;
  return out;
}

/// Linear congruence to diag(-1 x p, +1 x q), then the quadratic change that
/// kills the Christoffel symbols at 0.
inline NormalizedGerm normalize_metric(const MetricField& g, std::optional<Signature> declared = std::nullopt) {
  const int m = g.field.dim();
  const Point o(static_cast<std::size_t>(m), 0.0);
  const RealTensor g0 = g.field.values(o);
  if (std::abs(determinant(g0)) <= 1e-12) throw DomainError("metric is singular at the origin");
  const Signature s = signature_of(g0);
  if (declared && !(*declared == s))
    throw PreconditionError("declared signature " + to_string(*declared) + " does not match " + to_string(s));
  CoordinateChange c = CoordinateChange::identity(m);
  if (max_abs_difference(g0, standard_metric(s)) > kNormalizationTolerance) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(g0));
    // eigenvalues come sorted ascending: negatives first
    Eigen::MatrixXd l = es.eigenvectors();
    for (int a = 0; a < m; ++a) l.col(a) /= std::sqrt(std::abs(es.eigenvalues()(a)));
    c.linear = from_eigen(l);
  }
  const Field g1 = pull_back_metric(g.field, c);
  const RealTensor gamma0 = values(PointGeometry(g1, o, 1).christoffel());
  if (max_abs(gamma0) > 0.0) {
    c.quadratic = gamma0;
  }
  NormalizedGerm out;
  out.change = c;
  out.metric = MetricField{pull_back_metric(g.field, c), s};
  out.flags.value_normalized = metric_value_normalized(out.metric->field, s);
  out.flags.derivative_normalized = metric_derivative_normalized(out.metric->field);
  if (!out.flags.value_normalized || !out.flags.derivative_normalized)
    throw VerificationError("normalize_metric: normal form not reached");
  return out;
}

namespace detail {

// Columns spanning {u in span(basis) : g(u, v) = 0 for v in constraints}.
inline Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& g,
                                             const Eigen::MatrixXd& constraints) {
  const Eigen::MatrixXd a = constraints.transpose() * g * basis;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-12);
  return basis * lu.kernel();
}

}  // namespace detail

/// Constant linear frame (columns) adapted to (g0, J0): the Gram matrix is
/// the standard normal form and J maps column i to column i + m/2.
inline Eigen::MatrixXd adapted_frame(const RealTensor& g0, const RealTensor& e0, StructureKind kind) {
  const int m = g0.dim();
  const int n = m / 2;
  const Eigen::MatrixXd g = to_eigen(g0);
  const Eigen::MatrixXd act = to_eigen(e0).transpose();  // J acting on column vectors
  const Signature s = signature_of(g0);
  if (kind == StructureKind::para && s.negative != s.positive)
    throw PreconditionError("para-Hermitian metrics necessarily have neutral signature; got " + to_string(s));
  if (kind == StructureKind::complex && s.negative % 2 != 0)
    throw PreconditionError("Hermitian metrics have an even number of negative directions; got " + to_string(s));
  int negatives_left = kind == StructureKind::para ? n : s.negative / 2;
  Eigen::MatrixXd frame(m, m);
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(m, m);
  for (int i = 0; i < n; ++i) {
    if (w.cols() < 2) throw PreconditionError("adapted frame: J-invariant complement collapsed");
    const Eigen::MatrixXd gram = w.transpose() * g * w;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const bool want_negative = kind == StructureKind::para || negatives_left > 0;
    const int pick = want_negative ? 0 : static_cast<int>(w.cols()) - 1;
    const double lambda = es.eigenvalues()(pick);
    if ((lambda < 0) != want_negative || std::abs(lambda) < 1e-12)
      throw PreconditionError("metric and structure are incompatible at the origin");
    Eigen::VectorXd v = w * es.eigenvectors().col(pick);
    v /= std::sqrt(std::abs(v.dot(g * v)));
    const Eigen::VectorXd jv = act * v;
    frame.col(i) = v;
    frame.col(i + n) = jv;
    if (kind == StructureKind::complex && negatives_left > 0) --negatives_left;
    Eigen::MatrixXd cons(m, 2);
    cons.col(0) = v;
    cons.col(1) = jv;
    w = detail::orthogonal_complement(w, g, cons);
  }
  return frame;
}

/// Linear change putting J(0) in block form and g(0) in the standard
/// Hermitian normal form.
inline NormalizedGerm normalize_pair(const MetricField& g, const EndoField& j) {
  const int m = g.field.dim();
  if (j.field.dim() != m) throw InputError("normalize_pair: dimension mismatch");
  const Point o(static_cast<std::size_t>(m), 0.0);
  const RealTensor g0 = g.field.values(o);
  const RealTensor e0 = j.field.values(o);
  if (endo_defect_at(j.field, j.kind, o) > 1e-10) throw PreconditionError("J is not a structure at the origin");
  require_compatible(g0, e0, j.kind);
  const Signature s = signature_of(g0);
  NormalizedGerm out;
  out.change = CoordinateChange::identity(m);
  if (!pair_value_normalized(g.field, j.field, j.kind, s)) out.change.linear = from_eigen(adapted_frame(g0, e0, j.kind));
  out.metric = MetricField{pull_back_metric(g.field, out.change), s};
  out.endo = EndoField{pull_back_endo(j.field, out.change), j.kind};
  out.flags.value_normalized = pair_value_normalized(out.metric->field, out.endo->field, j.kind, s);
  out.flags.j_normalized = endo_normalized(out.endo->field, j.kind);
  out.flags.derivative_normalized = metric_derivative_normalized(out.metric->field);
  if (!out.flags.value_normalized || !out.flags.j_normalized)
    throw VerificationError("normalize_pair: normal form not reached");
  return out;
}

/// For a Kahler pair with constant J: linear normalization followed by the
/// quadratic change y -> y - Gamma(0)(y, y)/2, which is J-linear for Kahler
/// metrics and keeps J constant.
inline NormalizedGerm normalize_kahler(const MetricField& g, const EndoField& j) {
  NormalizedGerm lin = normalize_pair(g, j);
  const int m = g.field.dim();
  const Point o(static_cast<std::size_t>(m), 0.0);
  const RealTensor gamma0 = values(PointGeometry(lin.metric->field, o, 1).christoffel());
  NormalizedGerm out = lin;
  if (max_abs(gamma0) > 0.0) {
    out.change.quadratic = gamma0;
    out.metric = MetricField{pull_back_metric(g.field, out.change), lin.metric->signature};
    out.endo = EndoField{pull_back_endo(j.field, out.change), j.kind};
  }
  out.flags.derivative_normalized = metric_derivative_normalized(out.metric->field);
  const JetTensor ej = out.endo->field.jets(o, 1);
  double dj = 0.0;
  for (const auto& c : ej.data())
    if (!c.is_constant())
      for (int a = 0; a < m; ++a) dj = std::max(dj, std::abs(c.gradient(a)));
  if (dj > kNormalizationTolerance)
    throw PreconditionError("structure is not constant after normalization (pair is not Kahler with constant J)");
  return out;
}

}  // namespace germforge
