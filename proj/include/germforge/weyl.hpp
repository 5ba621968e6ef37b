#pragma once

// Weyl structures: recovery of the Weyl one-form, the Weyl connection of a
// metric and one-form, transplantation of Weyl structures through a
// three-piece partition of unity and the 4-dimensional Kahler-Weyl
// structure of a Hermitian or para-Hermitian surface.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "germforge/curvature.hpp"
#include "germforge/field.hpp"
#include "germforge/parallel.hpp"
#include "germforge/report.hpp"
#include "germforge/transplant.hpp"

namespace germforge {

namespace detail {

// omega_k = -(1/2m) g^ij nabla_k g_ij together with nabla g.
inline JetTensor weyl_oneform_jets(const JetTensor& g, const JetTensor& ginv, const JetTensor& gamma,
                                   JetTensor* nabla_g = nullptr) {
  const int m = g.dim();
  const JetTensor ng = covariant_derivative(gamma, g, "dd");
  JetTensor w = einsum<Jet>("ij,kij->k", {&ginv, &ng});
  w *= -1.0 / (2.0 * m);
  if (nabla_g) *nabla_g = ng;
  return w;
}

inline double weyl_residual_of(const JetTensor& g, const JetTensor& ng, const JetTensor& w) {
  const int m = g.dim();
  double res = 0.0;
  const double scale = 1.0 + max_abs(g);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        res = std::max(res, std::abs(ng(k, i, j).value() + 2.0 * w(k).value() * g(i, j).value()) / scale);
  return res;
}

// Gamma_ij^k = LC + w_i delta_j^k + w_j delta_i^k - g_ij w^k.
inline JetTensor weyl_connection_jets(const PointGeometry& geo, const JetTensor& w) {
  const int m = geo.dim();
  JetTensor gamma = geo.christoffel();
  const JetTensor wup = einsum<Jet>("kl,l->k", {&geo.inverse_metric(), &w});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        Jet& c = gamma(i, j, k);
        if (j == k) c += w(i);
        if (i == k) c += w(j);
        c.add_product(geo.metric()(i, j), wup(k), -1.0);
      }
  return gamma;
}

}  // namespace detail

struct WeylCheck {
  OneFormField omega;
  double residual = 0.0;
};

/// Recovers omega from nabla g = -2 omega (x) g and reports the largest
/// violation of that identity over the points.
inline WeylCheck weyl_structure_check(const MetricField& g, const ConnectionField& nabla, std::span<const Point> points) {
  const int m = g.field.dim();
  Field omega(m, Valence{1, 0}, [gf = g.field, cf = nabla.field](std::span<const double> p, int order) {
    const JetTensor gj = gf.jets(p, order + 1);
    return detail::weyl_oneform_jets(gj, inverse(gj), cf.jets(p, order));
  });
  const double res = parallel_max(points.size(), [&](std::size_t i) {
    const JetTensor gj = g.field.jets(points[i], 1);
    JetTensor ng;
    const JetTensor w = detail::weyl_oneform_jets(gj, inverse(gj), nabla.field.jets(points[i], 0), &ng);
    return detail::weyl_residual_of(gj, ng, w);
  });
  return {OneFormField{std::move(omega)}, res};
}

/// The Weyl connection of (g, omega).
inline ConnectionField weyl_connection(const MetricField& g, const OneFormField& omega) {
  return ConnectionField{Field(g.field.dim(), Valence{2, 1}, [gf = g.field, wf = omega.field](std::span<const double> p,
                                                                                             int order) {
    const PointGeometry geo(gf, p, order + 1);
    return detail::weyl_connection_jets(geo, wf.jets(p, order));
  })};
}

inline ConnectionField levi_civita_connection(const MetricField& g) {
  return ConnectionField{Field(g.field.dim(), Valence{2, 1}, [gf = g.field](std::span<const double> p, int order) {
    return PointGeometry(gf, p, order + 1).christoffel();
  })};
}

/// Weyl transplant on the chart B_5r: the metric is blended across
/// (2r, 3r) and the connection is psi1 nabla1 + psi2 LC(g~) + psi3 nabla2 for
/// the partition of unity subordinate to {B_2r, B_4r - B_r, outside B_3r}.
inline TransplantResult transplant_weyl(const MetricField& g1, const ConnectionField& n1, const MetricField& g2,
                                        const ConnectionField& n2, double r, const TransplantOptions& opts = {}) {
  const int m = g1.field.dim();
  if (g2.field.dim() != m || n1.field.dim() != m || n2.field.dim() != m)
    throw InputError("transplant_weyl: dimension mismatch");
  if (!(g1.signature == g2.signature))
    throw PreconditionError("signature mismatch: germ " + to_string(g1.signature) + ", host " + to_string(g2.signature));
  require_metric_normalized(g1);
  require_metric_normalized(g2);
  {
    const auto pts = detail::random_points(m, 5.0 * r, 20, opts.seed + 17);
    if (weyl_structure_check(g1, n1, pts).residual > 1e-9) throw PreconditionError("germ is not a Weyl structure");
    if (weyl_structure_check(g2, n2, pts).residual > 1e-9) throw PreconditionError("host is not a Weyl structure");
  }
  return detail::with_retries(r, opts, [&](double radius) {
    TransplantResult res;
    res.kind = "weyl";
    const Field gt = blend(g1.field, g2.field, MesaBump(2.0 * radius, 3.0 * radius));
    const auto dev = halton_ball(m, 5.0 * radius, opts.deviation_points);
    detail::require_nondegenerate(gt, g2.signature, dev);
    const MesaBump b1(1.5 * radius, 2.0 * radius), b2_outer(3.5 * radius, 4.0 * radius),
        b2_inner(radius, 1.5 * radius), b3(3.0 * radius, 3.5 * radius);
    const Field conn(m, Valence{2, 1}, [=, n1f = n1.field, n2f = n2.field](std::span<const double> p, int order) {
      const auto x = coordinate_jets(p, order);
      const Jet w1 = b1.eval(x);
      const Jet w2 = b2_outer.eval(x) * (Jet(1.0) - b2_inner.eval(x));
      const Jet w3 = Jet(1.0) - b3.eval(x);
      auto zero = [](const Jet& w) { return w.is_constant() && w.value() == 0.0; };
      if (zero(w2) && zero(w3)) return n1f.jets(p, order);
      if (zero(w1) && zero(w2)) return n2f.jets(p, order);
      // nabla2 + psi1 (nabla1 - nabla2) + psi2 (LC(g~) - nabla2)
      const Jet inv = reciprocal(w1 + w2 + w3);
      JetTensor out = n2f.jets(p, order);
      const JetTensor base = out;
      auto accumulate = [&out, &base](const JetTensor& t, const Jet& w) {
        for (std::size_t c = 0; c < t.size(); ++c) out.data()[c].add_product(w, t.data()[c] - base.data()[c]);
      };
      if (!zero(w1)) accumulate(n1f.jets(p, order), w1 * inv);
      if (!zero(w2)) accumulate(PointGeometry(gt, p, order + 1).christoffel(), w2 * inv);
      return out;
    });
    res.metric = MetricField{gt, g2.signature};
    res.connection = ConnectionField{conn};
    const auto pts = detail::random_points(m, 5.0 * radius, opts.check_points, opts.seed);
    const WeylCheck wc = weyl_structure_check(*res.metric, *res.connection, pts);
    res.form = wc.omega.field;
    res.checks.push_back(check_at_most("weyl_residual", wc.residual, 1e-8));
    res.checks.push_back(check_at_most("torsion_free", detail::torsion_max(conn, pts), 1e-10));
    res.checks.push_back(check_flag("nondegenerate", true));
    detail::add_agreement_checks(res.checks, "metric", gt, g1.field, g2.field, 2.0 * radius, 3.0 * radius,
                                 5.0 * radius, opts);
    detail::add_agreement_checks(res.checks, "connection", conn, n1.field, n2.field, radius, 4.0 * radius,
                                 5.0 * radius, opts);
    const auto dpts = halton_ball(m, 3.0 * radius, opts.deviation_points);
    res.deviation = detail::parallel_norms(difference(gt, g2.field), dpts);
    res.deviation_points = dpts.size();
    return res;
  });
}

struct KahlerWeylResult {
  OneFormField omega;
  ConnectionField connection;
  double nijenhuis = 0.0;
  double nabla_j = 0.0;
  double weyl_residual = 0.0;
  std::vector<CheckOutcome> checks;
  [[nodiscard]] bool passed() const { return all_passed(checks); }
};

/// omega_b = s J_b^a theta_a / 2 for the Lee form theta = delta Omega, with
/// s = J^2 = +-1; in the conformally flat case g = e^{2f} g_0 this gives
/// omega = -df.
inline JetTensor lee_form_jets(const Field& g, const Field& j, StructureKind kind, std::span<const double> p,
                               int order) {
  const PointGeometry geo(g, p, order + 2);
  const JetTensor e = j.jets(p, order + 2);
  const JetTensor omega = kahler_form_of(geo.metric(), e);
  const JetTensor delta = codifferential_jets(geo, omega);
  const JetTensor et = truncated(e, order);
  JetTensor w = einsum<Jet>("ba,a->b", {&et, &delta});
  w *= 0.5 * square_sign(kind);
  return truncated(w, order);
}

inline KahlerWeylResult kahler_weyl_4d(const MetricField& g, const EndoField& j, std::span<const Point> points) {
  const int m = g.field.dim();
  if (m != 4) throw PreconditionError("kahler_weyl_4d requires dimension 4, got " + std::to_string(m));
  if (j.field.dim() != 4) throw InputError("kahler_weyl_4d: dimension mismatch");
  const StructureKind kind = j.kind;
  KahlerWeylResult out;
  out.nijenhuis = parallel_max(points.size(), [&](std::size_t i) { return max_abs(nijenhuis(j, points[i])); });
  if (out.nijenhuis > 1e-8) throw PreconditionError("kahler_weyl_4d: J is not integrable (|N_J| = " + std::to_string(out.nijenhuis) + ")");
  for (const auto& p : points) require_compatible(g.field.values(p), j.field.values(p), kind);
  out.omega = OneFormField{Field(4, Valence{1, 0}, [gf = g.field, jf = j.field, kind](std::span<const double> p,
                                                                                    int order) {
    return lee_form_jets(gf, jf, kind, p, order);
  })};
  out.connection = weyl_connection(g, out.omega);
  out.nabla_j = parallel_max(points.size(), [&](std::size_t i) {
    const JetTensor e = j.field.jets(points[i], 1);
    const JetTensor gamma = out.connection.field.jets(points[i], 0);
    return max_abs(values(covariant_derivative(gamma, e, "du")));
  });
  out.weyl_residual = weyl_structure_check(g, out.connection, points).residual;
  out.checks.push_back(check_at_most("nijenhuis", out.nijenhuis, 1e-8));
  out.checks.push_back(check_at_most("nabla_j", out.nabla_j, 1e-8));
  out.checks.push_back(check_at_most("weyl_residual", out.weyl_residual, 1e-8));
  return out;
}

}  // namespace germforge
