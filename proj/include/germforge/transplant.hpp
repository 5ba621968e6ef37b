#pragma once

// Transplanting germs of geometric structures into host structures: mesa
// blending of connections and metrics, frame transport for (para)-complex
// structures, averaging for (para)-Hermitian pairs and the Kahler potential
// construction. Every construction verifies its own postconditions on
// sampled points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "germforge/curvature.hpp"
#include "germforge/error.hpp"
#include "germforge/field.hpp"
#include "germforge/fixtures.hpp"
#include "germforge/normalize.hpp"
#include "germforge/parallel.hpp"
#include "germforge/report.hpp"
#include "germforge/sampling.hpp"

namespace germforge {

struct TransplantOptions {
  std::size_t deviation_points = 2000;
  std::size_t check_points = 100;
  std::size_t agreement_points = 50;
  std::uint64_t seed = 1;
  int max_retries = 8;
};

struct TransplantResult {
  std::string kind;
  std::optional<MetricField> metric;
  std::optional<EndoField> endo;
  std::optional<ConnectionField> connection;
  std::optional<Field> form;  // Kahler form or Weyl one-form of the output
  double radius_requested = 0.0;
  double radius_used = 0.0;
  int retries = 0;
  FieldNorms deviation;
  std::size_t deviation_points = 0;
  std::vector<CheckOutcome> checks;

  [[nodiscard]] bool passed() const { return all_passed(checks); }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"schema_version", kSchemaVersion},
            {"report", "transplant"},
            {"kind", kind},
            {"radius_requested", radius_requested},
            {"radius_used", radius_used},
            {"retries", retries},
            {"deviation", {{"c0", deviation.c0}, {"c1", deviation.c1}, {"points", deviation_points}, {"domain_radius", 3.0 * radius_used}}},
            {"checks", germforge::to_json(checks)},
            {"passed", passed()}};
  }
};

namespace detail {

inline std::vector<Point> random_points(int m, double radius, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(rng.in_ball(m, radius));
  return pts;
}

/// Points with |x| uniform in [lo, hi].
inline std::vector<Point> shell_points(int m, double lo, double hi, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point p = rng.direction(m);
    const double s = rng.uniform(lo, hi);
    for (auto& x : p) x *= s;
    pts.push_back(std::move(p));
  }
  return pts;
}

/// Largest difference of all first-order jet coefficients.
inline double jet_difference(const Field& a, const Field& b, std::span<const Point> points) {
  return parallel_max(points.size(), [&](std::size_t i) {
    const JetTensor ta = a.jets(points[i], 1);
    const JetTensor tb = b.jets(points[i], 1);
    double d = 0.0;
    for (std::size_t c = 0; c < ta.size(); ++c) {
      const Jet diff = ta.data()[c] - tb.data()[c];
      d = std::max(d, std::abs(diff.value()));
      if (!diff.is_constant())
        for (int k = 0; k < a.dim(); ++k) d = std::max(d, std::abs(diff.gradient(k)));
    }
    return d;
  });
}

inline FieldNorms parallel_norms(const Field& h, std::span<const Point> points) {
  std::vector<FieldNorms> parts(points.size());
  parallel_for(points.size(), [&](std::size_t i) { parts[i] = sampled_norms(h, points.subspan(i, 1)); });
  double s0 = 0.0, s1 = 0.0;
  for (const auto& n : parts) {
    s0 = std::max(s0, n.c0);
    s1 = std::max(s1, n.c1 - n.c0);
  }
  return {s0, s0 + s1};
}

/// Throws DomainError (which triggers a retry with a smaller radius) if the
/// metric degenerates or changes signature at a sampled point.
inline void require_nondegenerate(const Field& g, Signature s, std::span<const Point> points) {
  parallel_for(points.size(), [&](std::size_t i) {
    const RealTensor v = g.values(points[i]);
    if (std::abs(determinant(v)) <= 1e-10 || !(signature_of(v) == s))
      throw DomainError("metric degenerates at a sampled point");
  });
}

inline double square_defect(const Field& j, StructureKind kind, std::span<const Point> points) {
  return parallel_max(points.size(), [&](std::size_t i) { return endo_defect_at(j, kind, points[i]); });
}

inline double compatibility_max(const Field& g, const Field& j, StructureKind kind, std::span<const Point> points) {
  return parallel_max(points.size(), [&](std::size_t i) {
    const RealTensor gv = g.values(points[i]);
    return compatibility_defect(gv, j.values(points[i]), kind) / std::max(1.0, max_abs(gv));
  });
}

inline double torsion_max(const Field& gamma, std::span<const Point> points) {
  return parallel_max(points.size(), [&](std::size_t i) { return torsion_at(gamma, points[i]); });
}

template <class Build>
TransplantResult with_retries(double r, const TransplantOptions& opts, Build build) {
  if (!(r > 0.0)) throw InputError("transplant radius must be positive");
  double radius = r;
  for (int attempt = 0;; ++attempt) {
    try {
      TransplantResult res = build(radius);
      res.radius_requested = r;
      res.radius_used = radius;
      res.retries = attempt;
      return res;
    } catch (const DomainError& e) {
      if (attempt >= opts.max_retries)
        throw DomainError(std::string(e.what()) + " (still failing after " + std::to_string(attempt) +
                          " radius halvings)");
      radius *= 0.5;
    }
  }
}

/// Agreement checks: exact equality of values and first derivatives with the
/// germ on B_r and with the host on B_3r minus B_2r.
inline void add_agreement_checks(std::vector<CheckOutcome>& checks, const std::string& what, const Field& out,
                                 const Field& germ, const Field& host, double inner, double outer_lo,
                                 double outer_hi, const TransplantOptions& opts) {
  const int m = out.dim();
  const auto in = shell_points(m, 0.0, inner * 0.999, opts.agreement_points, opts.seed + 11);
  const auto ex = shell_points(m, outer_lo * 1.001, outer_hi, opts.agreement_points, opts.seed + 13);
  checks.push_back(check_at_most(what + "_equals_germ_inside", jet_difference(out, germ, in), 0.0));
  checks.push_back(check_at_most(what + "_equals_host_outside", jet_difference(out, host, ex), 0.0));
}

inline void finish_deviation(TransplantResult& res, const Field& out, const Field& host, double r,
                             const TransplantOptions& opts) {
  const auto pts = halton_ball(out.dim(), 3.0 * r, opts.deviation_points);
  res.deviation = parallel_norms(difference(out, host), pts);
  res.deviation_points = pts.size();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Connections and metrics

inline TransplantResult transplant_connection(const ConnectionField& germ, const ConnectionField& host, double r,
                                              const TransplantOptions& opts = {}) {
  const int m = germ.field.dim();
  if (host.field.dim() != m) throw InputError("transplant_connection: dimension mismatch");
  const Point o(static_cast<std::size_t>(m), 0.0);
  for (const auto* c : {&germ, &host}) {
    if (torsion_at(c->field, o) > kNormalizationTolerance) throw PreconditionError("connection has torsion");
    if (!connection_normalized(c->field)) throw PreconditionError("unnormalized inputs: Gamma(0) != 0");
  }
  return detail::with_retries(r, opts, [&](double radius) {
    TransplantResult res;
    res.kind = "connection";
    const Field out = blend(germ.field, host.field, MesaBump(radius));
    res.connection = ConnectionField{out};
    const auto pts = detail::random_points(m, 3.0 * radius, opts.check_points, opts.seed);
    res.checks.push_back(check_at_most("torsion_free", detail::torsion_max(out, pts), 1e-10));
    detail::add_agreement_checks(res.checks, "connection", out, germ.field, host.field, radius, 2.0 * radius,
                                 3.0 * radius, opts);
    detail::finish_deviation(res, out, host.field, radius, opts);
    return res;
  });
}

inline void require_metric_normalized(const MetricField& g) {
  if (!metric_value_normalized(g.field, g.signature) || !metric_derivative_normalized(g.field))
    throw PreconditionError("unnormalized inputs: metric must equal the standard form at 0 with vanishing first derivatives");
}

inline TransplantResult transplant_metric(const MetricField& germ, const MetricField& host, double r,
                                          const TransplantOptions& opts = {}) {
  const int m = germ.field.dim();
  if (host.field.dim() != m) throw InputError("transplant_metric: dimension mismatch");
  if (!(germ.signature == host.signature))
    throw PreconditionError("signature mismatch: germ " + to_string(germ.signature) + ", host " +
                            to_string(host.signature));
  require_metric_normalized(germ);
  require_metric_normalized(host);
  return detail::with_retries(r, opts, [&](double radius) {
    TransplantResult res;
    res.kind = "metric";
    const Field out = blend(germ.field, host.field, MesaBump(radius));
    const auto dev = halton_ball(m, 3.0 * radius, opts.deviation_points);
    detail::require_nondegenerate(out, host.signature, dev);
    res.metric = MetricField{out, host.signature};
    const auto pts = detail::random_points(m, 3.0 * radius, opts.check_points, opts.seed);
    res.checks.push_back(check_at_most("symmetric", symmetry_defect(out, pts), 1e-12));
    res.checks.push_back(check_flag("nondegenerate", true));
    detail::add_agreement_checks(res.checks, "metric", out, germ.field, host.field, radius, 2.0 * radius,
                                 3.0 * radius, opts);
    detail::finish_deviation(res, out, host.field, radius, opts);
    return res;
  });
}

// ---------------------------------------------------------------------------
// (Para)-complex structures

namespace detail {

// Columns e_i = d_i, e_{i+n} = J d_i (i < n) as a matrix of jets.
inline JetTensor adapted_frame_jets(const JetTensor& e) {
  const int m = e.dim();
  const int n = m / 2;
  JetTensor f(m, 2);
  for (int i = 0; i < n; ++i) {
    f(i, i) = Jet(1.0);
    for (int b = 0; b < m; ++b) f(b, i + n) = e(i, b);
  }
  return f;
}

// Action matrix S of the standard structure: S e_i = e_{i+n}, S e_{i+n} = s e_i.
inline JetTensor standard_action(int m, StructureKind kind) { return to_jets(transposed(standard_endo(m, kind))); }

}  // namespace detail

/// Theta with f = Theta e, i.e. the matrix F^{-1} E of frame coefficients.
inline Field frame_transition(const EndoField& germ, const EndoField& host) {
  return Field(germ.field.dim(), Valence{1, 1}, [g = germ.field, h = host.field](std::span<const double> p, int order) {
    const JetTensor e = detail::adapted_frame_jets(g.jets(p, order));
    const JetTensor f = detail::adapted_frame_jets(h.jets(p, order));
    return matmul(inverse(f, 1e-10), e);
  });
}

/// Theta - Id = F^{-1} (E - F), exactly zero where the frames coincide.
inline Field frame_transition_defect(const EndoField& germ, const EndoField& host) {
  return Field(germ.field.dim(), Valence{1, 1}, [g = germ.field, h = host.field](std::span<const double> p, int order) {
    const JetTensor e = detail::adapted_frame_jets(g.jets(p, order));
    const JetTensor f = detail::adapted_frame_jets(h.jets(p, order));
    return matmul(inverse(f, 1e-10), e - f);
  });
}

inline TransplantResult transplant_almost_complex(const EndoField& germ, const EndoField& host, double r,
                                                  const TransplantOptions& opts = {}) {
  const int m = germ.field.dim();
  if (host.field.dim() != m) throw InputError("transplant_almost_complex: dimension mismatch");
  if (germ.kind != host.kind) throw PreconditionError("germ and host structures are of different kinds");
  if (!endo_normalized(germ.field, germ.kind) || !endo_normalized(host.field, host.kind))
    throw PreconditionError("unnormalized inputs: J(0) must be in standard block form");
  const StructureKind kind = germ.kind;
  return detail::with_retries(r, opts, [&](double radius) {
    TransplantResult res;
    res.kind = "almost_complex";
    const MesaBump phi(radius);
    const Field theta = frame_transition(germ, host);
    const Field defect_r = compose_with_rescaled_argument(frame_transition_defect(germ, host), phi);
    const JetTensor s = detail::standard_action(m, kind);
    // new frame G = F (Id + D), so J~ = J2 + F (D S - S D)(Id + D)^{-1} F^{-1}
    const Field out(m, Valence{1, 1}, [g = germ.field, h = host.field, defect_r, phi, s](std::span<const double> p,
                                                                                       int order) {
      const Jet w = phi.eval(coordinate_jets(p, order));
      if (w.is_constant() && w.value() == 1.0) return g.jets(p, order);
      if (w.is_constant() && w.value() == 0.0) return h.jets(p, order);
      const JetTensor host_e = h.jets(p, order);
      const JetTensor f = detail::adapted_frame_jets(host_e);
      const JetTensor d = defect_r.jets(p, order);
      const JetTensor id = to_jets(identity_matrix(static_cast<int>(p.size())));
      const JetTensor comm = matmul(d, s) - matmul(s, d);
      const JetTensor correction = matmul(matmul(f, matmul(comm, inverse(id + d, 1e-10))), inverse(f, 1e-10));
      return host_e + transposed(correction);
    });
    const auto dev = halton_ball(m, 3.0 * radius, opts.deviation_points);
    parallel_for(dev.size(), [&](std::size_t i) { (void)out.values(dev[i]); });
    res.endo = EndoField{out, kind};
    const Point o(static_cast<std::size_t>(m), 0.0);
    res.checks.push_back(check_at_most("theta_identity_at_origin", max_abs_difference(theta.values(o), identity_matrix(m)), 1e-12));
    const auto pts = detail::random_points(m, 3.0 * radius, opts.check_points, opts.seed);
    res.checks.push_back(check_at_most("square_defect", detail::square_defect(out, kind, pts), 1e-10));
    if (kind == StructureKind::para) {
      const double tr = parallel_max(pts.size(), [&](std::size_t i) {
        const RealTensor v = out.values(pts[i]);
        double t = 0.0;
        for (int a = 0; a < m; ++a) t += v(a, a);
        return std::abs(t);
      });
      res.checks.push_back(check_at_most("trace_zero", tr, 1e-10));
    }
    detail::add_agreement_checks(res.checks, "structure", out, germ.field, host.field, radius, 2.0 * radius,
                                 3.0 * radius, opts);
    detail::finish_deviation(res, out, host.field, radius, opts);
    return res;
  });
}

inline void require_pair_normalized(const MetricField& g, const EndoField& j) {
  if (!pair_value_normalized(g.field, j.field, j.kind, g.signature))
    throw PreconditionError("unnormalized inputs: (g(0), J(0)) must be in the standard normal form");
}

inline TransplantResult transplant_almost_hermitian(const MetricField& germ_g, const EndoField& germ_j,
                                                    const MetricField& host_g, const EndoField& host_j, double r,
                                                    bool keep_host_j = false, const TransplantOptions& opts = {}) {
  const int m = germ_g.field.dim();
  if (host_g.field.dim() != m || germ_j.field.dim() != m || host_j.field.dim() != m)
    throw InputError("transplant_almost_hermitian: dimension mismatch");
  if (germ_j.kind != host_j.kind) throw PreconditionError("germ and host structures are of different kinds");
  if (!(germ_g.signature == host_g.signature))
    throw PreconditionError("signature mismatch: germ " + to_string(germ_g.signature) + ", host " +
                            to_string(host_g.signature));
  require_pair_normalized(germ_g, germ_j);
  require_pair_normalized(host_g, host_j);
  const StructureKind kind = germ_j.kind;
  return detail::with_retries(r, opts, [&](double radius) {
    TransplantResult res;
    res.kind = keep_host_j ? "almost_hermitian_keep_host_j" : "almost_hermitian";
    const MesaBump phi(radius);
    Field jt = host_j.field;
    if (keep_host_j) {
      const auto pts = detail::random_points(m, 3.0 * radius, opts.check_points, opts.seed + 7);
      const double d = parallel_max(pts.size(), [&](std::size_t i) {
        return max_abs_difference(germ_j.field.values(pts[i]), host_j.field.values(pts[i]));
      });
      if (d > 1e-10) throw PreconditionError("keep_host_J requires the germ and host structures to coincide");
    } else {
      TransplantOptions sub = opts;
      sub.max_retries = 0;
      jt = transplant_almost_complex(germ_j, host_j, radius, sub).endo->field;
    }
    const Field g3 = blend(germ_g.field, host_g.field, phi);
    const double sigma = square_sign(kind);
    // (g3 - s J~^*g3)/2 written as g2 + ((g3 - g2) - s (J~^*g3 - J2^*g2))/2, using J2^*g2 = -s g2
    const Field out(
        m, Valence{2, 0},
        [g3, jt, g1 = germ_g.field, g2 = host_g.field, j2 = host_j.field, phi, sigma, kind](std::span<const double> p,
                                                                                            int order) {
          const Jet w = phi.eval(coordinate_jets(p, order));
          if (w.is_constant() && w.value() == 1.0) return g1.jets(p, order);
          if (w.is_constant() && w.value() == 0.0) return g2.jets(p, order);
          if (endo_defect_at(jt, kind, p) > 1e-10) throw DomainError("transplanted structure fails J^2 = +-Id");
          const JetTensor a = g3.jets(p, order);
          const JetTensor b = g2.jets(p, order);
          const JetTensor pa = pull_back(jt.jets(p, order), a);
          const JetTensor pb = pull_back(j2.jets(p, order), b);
          return b + ((a - b) - (pa - pb) * sigma) * 0.5;
        },
        symmetric_pair());
    const auto dev = halton_ball(m, 3.0 * radius, opts.deviation_points);
    detail::require_nondegenerate(out, host_g.signature, dev);
    res.metric = MetricField{out, host_g.signature};
    res.endo = EndoField{jt, kind};
    const auto pts = detail::random_points(m, 3.0 * radius, opts.check_points, opts.seed);
    res.checks.push_back(check_at_most("compatibility_defect", detail::compatibility_max(out, jt, kind, pts), 1e-10));
    res.checks.push_back(check_at_most("square_defect", detail::square_defect(jt, kind, pts), 1e-10));
    res.checks.push_back(check_at_most("symmetric", symmetry_defect(out, pts), 1e-12));
    res.checks.push_back(check_flag("nondegenerate", true));
    detail::add_agreement_checks(res.checks, "metric", out, germ_g.field, host_g.field, radius, 2.0 * radius,
                                 3.0 * radius, opts);
    detail::add_agreement_checks(res.checks, "structure", jt, germ_j.field, host_j.field, radius, 2.0 * radius,
                                 3.0 * radius, opts);
    detail::finish_deviation(res, out, host_g.field, radius, opts);
    return res;
  });
}

// ---------------------------------------------------------------------------
// Kahler potentials

/// Omega_ij = g_ia J_j^a coefficientwise for a constant structure.
inline PolynomialField kahler_form_polynomial(const PolynomialField& g, const RealTensor& e) {
  const int m = g.dim();
  PolynomialField w(m, FieldKind::twoform, g.degree());
  for (const auto& [key, c] : g.table()) {
    const int i = key.first[0], a = key.first[1];
    for (int j = 0; j < m; ++j)
      if (e(j, a) != 0.0) w.add({i, j}, key.second, c * e(j, a));
  }
  w.prune();
  return w;
}

struct PotentialSolution {
  PolynomialField potential;
  double residual = 0.0;  // max coefficient error of P f - Delta
};

/// Solves P f = Delta degree by degree (least-norm solution per degree),
/// where P f = d(J^* df) / 2 for the constant structure e.
inline PotentialSolution kahler_potential_solve(const PolynomialField& delta, const RealTensor& e, StructureKind kind,
                                                int degree) {
  const int m = delta.dim();
  if (delta.kind() != FieldKind::twoform) throw InputError("kahler_potential_solve: Delta must be a 2-form");
  if (degree < 0 || delta.max_degree_present() > degree)
    throw InputError("kahler_potential_solve: Delta has terms above degree " + std::to_string(degree));
  PotentialSolution out{PolynomialField(m, FieldKind::scalar, degree + 2), 0.0};
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  double scale = 1.0;
  for (const auto& [key, c] : delta.table()) scale = std::max(scale, std::abs(c));
  for (int d = 0; d <= degree; ++d) {
    const PolynomialField part = delta.homogeneous(d);
    if (part.table().empty()) continue;
    // monomials of degree d (targets) and d + 2 (unknowns)
    auto enumerate = [m](int deg) {
      std::vector<std::vector<int>> res;
      std::vector<int> e(static_cast<std::size_t>(m), 0);
      std::function<void(int, int)> rec = [&](int slot, int left) {
        if (slot == m - 1) {
          e[static_cast<std::size_t>(slot)] = left;
          res.push_back(e);
          return;
        }
        for (int k = left; k >= 0; --k) {
          e[static_cast<std::size_t>(slot)] = k;
          rec(slot + 1, left - k);
        }
      };
      rec(0, deg);
      return res;
    };
    const auto lower = enumerate(d);
    const auto upper = enumerate(d + 2);
    std::map<std::vector<int>, int> row_of;
    for (std::size_t k = 0; k < lower.size(); ++k) row_of[lower[k]] = static_cast<int>(k);
    const int rows = static_cast<int>(pairs.size() * lower.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, static_cast<int>(upper.size()));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
    auto row = [&](int pair, const std::vector<int>& mono) {
      return pair * static_cast<int>(lower.size()) + row_of.at(mono);
    };
    for (std::size_t c = 0; c < upper.size(); ++c) {
      PolynomialField mono(m, FieldKind::scalar, d + 2);
      mono.add({}, upper[c], 1.0);
      const PolynomialField img = hessian_form(mono, e);
      for (const auto& [key, v] : img.table()) {
        if (key.first[0] >= key.first[1]) continue;
        const auto it = std::find(pairs.begin(), pairs.end(), std::make_pair(key.first[0], key.first[1]));
        a(row(static_cast<int>(it - pairs.begin()), key.second), static_cast<int>(c)) = v;
      }
    }
    for (const auto& [key, v] : part.table()) {
      if (key.first[0] >= key.first[1]) continue;
      const auto it = std::find(pairs.begin(), pairs.end(), std::make_pair(key.first[0], key.first[1]));
      b(row(static_cast<int>(it - pairs.begin()), key.second)) = v;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    cod.setThreshold(1e-12);
    const Eigen::VectorXd x = cod.solve(b);
    out.residual = std::max(out.residual, (a * x - b).cwiseAbs().maxCoeff());
    for (std::size_t c = 0; c < upper.size(); ++c)
      if (std::abs(x(static_cast<int>(c))) > 1e-15 * scale) out.potential.add({}, upper[c], x(static_cast<int>(c)));
  }
  if (out.residual > 1e-10 * scale) {
    const Field w = delta.field();
    const auto pts = detail::random_points(m, 0.5, 8, 3);
    double closed = 0.0, type = 0.0;
    for (const auto& p : pts) {
      closed = std::max(closed, max_abs(exterior_derivative(w, p)));
      const RealTensor v = w.values(p);
      type = std::max(type, max_abs(pull_back(e, v) + v * square_sign(kind)));
    }
    throw PreconditionError("kahler_potential_solve: linear system inconsistent (residual " +
                            std::to_string(out.residual) + "; closedness defect |dDelta| = " + std::to_string(closed) +
                            ", type defect |J^*Delta + s Delta| = " + std::to_string(type) + ")");
  }
  return out;
}

/// P h evaluated on jets: P_ij = (E(j,b) d_i d_b h - E(i,b) d_j d_b h) / 2.
inline JetTensor potential_form_jets(const Jet& h, const RealTensor& e) {
  const int m = e.dim();
  JetTensor hess(m, 2);
  for (int i = 0; i < m; ++i) {
    const Jet hi = h.partial(i);
    for (int b = 0; b < m; ++b) hess(i, b) = hi.partial(b);
  }
  JetTensor w(m, 2);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      Jet acc(0.0);
      for (int b = 0; b < m; ++b) {
        if (e(j, b) != 0.0) acc += hess(i, b) * (0.5 * e(j, b));
        if (e(i, b) != 0.0) acc -= hess(j, b) * (0.5 * e(i, b));
      }
      w(i, j) = std::move(acc);
    }
  return w;
}

/// Kahler transplant for a constant standard structure. Inputs are
/// polynomial metrics, standard at 0 with vanishing first derivatives.
inline TransplantResult transplant_kahler(const PolynomialField& germ, const PolynomialField& host, StructureKind kind,
                                          double r, const TransplantOptions& opts = {}) {
  const int m = germ.dim();
  if (host.dim() != m) throw InputError("transplant_kahler: dimension mismatch");
  if (germ.kind() != FieldKind::metric || host.kind() != FieldKind::metric)
    throw InputError("transplant_kahler: inputs must be metric germs");
  const RealTensor e = standard_endo(m, kind);
  const Field jfield = Field::constant(e, Valence{1, 1});
  const MetricField g1 = as_metric(germ);
  const MetricField g2 = as_metric(host);
  if (!(g1.signature == g2.signature))
    throw PreconditionError("signature mismatch: germ " + to_string(g1.signature) + ", host " + to_string(g2.signature));
  for (const auto* g : {&g1, &g2}) {
    if (!pair_value_normalized(g->field, jfield, kind, g->signature) || !metric_derivative_normalized(g->field))
      throw PreconditionError("unnormalized inputs: Kahler germs need standard g(0), dg(0) = 0 and constant standard J");
  }
  {
    const auto pts = detail::random_points(m, 0.5 * r, 8, opts.seed + 5);
    for (const auto* g : {&germ, &host}) {
      const Field w = kahler_form_polynomial(*g, e).field();
      const Field gf = g->field();
      double d = 0.0, c = 0.0;
      for (const auto& p : pts) {
        d = std::max(d, max_abs(exterior_derivative(w, p)));
        c = std::max(c, compatibility_defect(gf.values(p), e, kind));
      }
      if (d > 1e-9 || c > 1e-10) throw PreconditionError("transplant_kahler: input is not Kahler for the standard structure");
    }
  }
  PolynomialField delta = kahler_form_polynomial(germ, e);
  const PolynomialField host_form = kahler_form_polynomial(host, e);
  for (const auto& [key, c] : host_form.table()) delta.add(key.first, key.second, -c);
  delta.prune();
  const PotentialSolution sol = kahler_potential_solve(delta, e, kind, std::max(germ.degree(), host.degree()));
  const Field potential = sol.potential.field();
  const double sigma = square_sign(kind);
  return detail::with_retries(r, opts, [&](double radius) {
    TransplantResult res;
    res.kind = "kahler";
    const MesaBump phi(radius);
    const Field out(
        m, Valence{2, 0},
        [g1f = g1.field, g2f = g2.field, potential, phi, e, sigma](std::span<const double> p, int order) {
          const auto x = coordinate_jets(p, order + 2);
          const Jet w = phi.eval(x);
          if (w.is_constant() && w.value() == 1.0) return g1f.jets(p, order);
          if (w.is_constant() && w.value() == 0.0) return g2f.jets(p, order);
          const Jet h = w * potential.jets(p, order + 2).data()[0];
          // g~ = g2 + s P(phi f)(., J .)
          const JetTensor pf = potential_form_jets(h, e);
          JetTensor g = g2f.jets(p, order);
          const int mm = g.dim();
          for (int i = 0; i < mm; ++i)
            for (int j = 0; j < mm; ++j)
              for (int a = 0; a < mm; ++a)
                if (e(j, a) != 0.0) g(i, j) += pf(i, a) * (sigma * e(j, a));
          return g;
        },
        symmetric_pair());
    const auto dev = halton_ball(m, 3.0 * radius, opts.deviation_points);
    detail::require_nondegenerate(out, g2.signature, dev);
    res.metric = MetricField{out, g2.signature};
    res.endo = EndoField{jfield, kind};
    const Field omega = kahler_form_field(*res.metric, *res.endo);
    res.form = omega;
    const auto pts = detail::random_points(m, 3.0 * radius, opts.check_points, opts.seed);
    std::vector<Point> dpts(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(50, pts.size())));
    res.checks.push_back(check_at_most("potential_residual", sol.residual, 1e-10));
    res.checks.push_back(check_at_most("d_omega", parallel_max(dpts.size(), [&](std::size_t i) {
                                         return max_abs(exterior_derivative(omega, dpts[i]));
                                       }),
                                       1e-9));
    res.checks.push_back(check_at_most("symmetric", symmetry_defect(out, pts), 1e-12));
    res.checks.push_back(check_at_most("compatibility_defect", detail::compatibility_max(out, jfield, kind, pts), 1e-10));
    res.checks.push_back(check_flag("nondegenerate", true));
    detail::add_agreement_checks(res.checks, "metric", out, g1.field, g2.field, radius, 2.0 * radius, 3.0 * radius,
                                 opts);
    detail::finish_deviation(res, out, g2.field, radius, opts);
    return res;
  });
}

// ---------------------------------------------------------------------------
// Output germs

/// Taylor polynomial at the origin, up to the given degree (at most the jet
/// order cap).
inline PolynomialField taylor_polynomial(const Field& f, FieldKind kind, int degree) {
  const int m = f.dim();
  const int d = std::min(degree, kMaxJetOrder);
  const Point o(static_cast<std::size_t>(m), 0.0);
  const JetTensor t = f.jets(o, d);
  PolynomialField out(m, kind, std::max(degree, 0));
  const auto& table = detail::jet_table(m);
  std::vector<int> idx(static_cast<std::size_t>(t.rank()));
  for (std::size_t c = 0; c < t.size(); ++c) {
    t.unflatten(c, idx);
    const Jet& j = t.data()[c];
    if (j.is_constant()) {
      if (j.value() != 0.0) out.set(idx, std::vector<int>(static_cast<std::size_t>(m), 0), j.value());
      continue;
    }
    for (std::size_t a = 0; a < table.size_upto[static_cast<std::size_t>(d)]; ++a) {
      const double v = j.coefficient(MultiIndex(table.monomials[a]));
      if (v != 0.0) out.set(idx, table.monomials[a], v);
    }
  }
  return out;
}

}  // namespace germforge
