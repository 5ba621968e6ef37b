#pragma once

// Geodesics of affine connections and metrics: adaptive Dormand-Prince
// integration with blowup detection, completeness probes over sampled initial
// data, the incomplete examples (Misner, Meneghini, the circle with
// Gamma_11^1 = 1) and the perturbed flat connection check.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "germforge/curvature.hpp"
#include "germforge/error.hpp"
#include "germforge/field.hpp"
#include "germforge/normalize.hpp"
#include "germforge/parallel.hpp"
#include "germforge/report.hpp"
#include "germforge/sampling.hpp"
#include "germforge/transplant.hpp"

namespace germforge {

/// Christoffel symbols Gamma_ij^k as a function of the point, an optional
/// metric for the energy g(v, v) and the domain of definition.
struct GeodesicSystem {
  int dim = 0;
  std::string name;
  std::function<RealTensor(const Point&)> christoffel;
  std::function<RealTensor(const Point&)> metric;
  std::function<bool(const Point&)> in_domain;
};

inline GeodesicSystem geodesic_system(const ConnectionField& c, std::string name = "connection") {
  return {c.field.dim(), std::move(name), [f = c.field](const Point& p) { return f.values(p); }, nullptr, nullptr};
}

inline GeodesicSystem geodesic_system(const MetricField& g, std::string name = "metric") {
  return {g.field.dim(), std::move(name),
          [f = g.field](const Point& p) { return values(PointGeometry(f, p, 1).christoffel()); },
          [f = g.field](const Point& p) { return f.values(p); }, nullptr};
}

// ---------------------------------------------------------------------------
// Built-in structures

/// Flat metric of the given signature.
inline GeodesicSystem flat_system(Signature s) {
  const RealTensor g = standard_metric(s);
  const int m = g.dim();
  return {m, "flat", [m](const Point&) { return RealTensor(m, 3); }, [g](const Point&) { return g; }, nullptr};
}

/// cos x (dy o dy - dx o dx) + 2 sin x dx o dy on the universal cover of the torus.
inline MetricField misner_metric() {
  return MetricField{Field::from_coordinates(2, Valence{2, 0},
                                             [](std::span<const Jet> x) {
                                               JetTensor g(2, 2);
                                               const Jet c = cos(x[0]), s = sin(x[0]);
                                               g(0, 0) = Jet(0.0) - c;
                                               g(1, 1) = c;
                                               g(0, 1) = s;
                                               g(1, 0) = s;
                                               return g;
                                             }),
                     Signature{1, 1}};
}

/// du o dv / (u^2 + v^2) on the punctured plane.
inline MetricField meneghini_metric() {
  return MetricField{Field::from_coordinates(2, Valence{2, 0},
                                             [](std::span<const Jet> x) {
                                               JetTensor g(2, 2);
                                               const Jet h = reciprocal(x[0] * x[0] + x[1] * x[1]) * 0.5;
                                               g(0, 1) = h;
                                               g(1, 0) = h;
                                               return g;
                                             }),
                     Signature{1, 1}};
}

/// The circle with Gamma_11^1 = 1.
inline ConnectionField circle_connection() {
  RealTensor g(1, 3);
  g(0, 0, 0) = 1.0;
  return ConnectionField{Field::constant(g, Valence{2, 1})};
}

inline GeodesicSystem misner_system() { return geodesic_system(misner_metric(), "misner"); }

/// Closed form: Gamma_uu^u = -2u / r^2, Gamma_vv^v = -2v / r^2.
inline GeodesicSystem meneghini_system() {
  GeodesicSystem s;
  s.dim = 2;
  s.name = "meneghini";
  s.christoffel = [](const Point& p) {
    const double r2 = p[0] * p[0] + p[1] * p[1];
    RealTensor g(2, 3);
    g(0, 0, 0) = -2.0 * p[0] / r2;
    g(1, 1, 1) = -2.0 * p[1] / r2;
    return g;
  };
  s.metric = [](const Point& p) {
    RealTensor g(2, 2);
    g(0, 1) = g(1, 0) = 0.5 / (p[0] * p[0] + p[1] * p[1]);
    return g;
  };
  s.in_domain = [](const Point& p) { return p[0] * p[0] + p[1] * p[1] > 1e-24; };
  return s;
}

inline GeodesicSystem circle_system() { return geodesic_system(circle_connection(), "circle-gamma"); }

// ---------------------------------------------------------------------------
// Integration

enum class GeodesicStatus { reached_horizon, escaped_ball, blowup, left_domain, step_underflow, evaluation_failure };

inline std::string to_string(GeodesicStatus s) {
  switch (s) {
    case GeodesicStatus::reached_horizon: return "reached_horizon";
    case GeodesicStatus::escaped_ball: return "escaped_ball";
    case GeodesicStatus::blowup: return "blowup";
    case GeodesicStatus::left_domain: return "left_domain";
    case GeodesicStatus::step_underflow: return "step_underflow";
    case GeodesicStatus::evaluation_failure: return "evaluation_failure";
  }
  return "unknown";
}

struct GeodesicOptions {
  double t_max = 100.0;  // negative values integrate backward
  double rtol = 1e-10;
  double atol = 1e-12;
  double blowup_speed = 1e6;
  double min_step = 1e-12;
  std::optional<double> escape_radius;
  std::size_t max_samples = 4000;
  std::size_t max_steps = 2000000;
};

struct TrajectorySample {
  double t = 0.0;
  Point x;
  Point v;
};

struct GeodesicResult {
  GeodesicStatus status = GeodesicStatus::reached_horizon;
  double t_end = 0.0;
  Point x_end;
  Point v_end;
  double max_speed = 0.0;
  double energy_initial = 0.0;
  double energy_drift = 0.0;
  bool has_energy = false;
  double equation_residual = 0.0;
  std::size_t steps = 0;
  std::vector<TrajectorySample> trajectory;

  [[nodiscard]] nlohmann::json to_json(bool with_trajectory = false) const {
    nlohmann::json out = {{"status", to_string(status)}, {"t_end", t_end},       {"x_end", x_end},
                          {"v_end", v_end},              {"max_speed", max_speed}, {"steps", steps},
                          {"equation_residual", equation_residual}};
    if (has_energy) {
      out["energy_initial"] = energy_initial;
      out["energy_drift"] = energy_drift;
    }
    if (with_trajectory) {
      nlohmann::json t = nlohmann::json::array();
      for (const auto& s : trajectory) t.push_back({{"t", s.t}, {"x", s.x}, {"v", s.v}});
      out["trajectory"] = t;
    }
    return out;
  }
};

namespace detail {

inline double euclidean_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double quadratic_form(const RealTensor& g, std::span<const double> v) {
  const int m = g.dim();
  double s = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) s += g(i, j) * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
  return s;
}

// State (x, v) of length 2m; derivative (v, -Gamma(v, v)).
inline std::vector<double> geodesic_rhs(const GeodesicSystem& sys, std::span<const double> y) {
  const int m = sys.dim;
  const std::size_t mm = static_cast<std::size_t>(m);
  const Point x(y.begin(), y.begin() + m);
  const RealTensor gamma = sys.christoffel(x);
  std::vector<double> out(2 * mm, 0.0);
  for (std::size_t i = 0; i < mm; ++i) out[i] = y[mm + i];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double vv = y[mm + static_cast<std::size_t>(i)] * y[mm + static_cast<std::size_t>(j)];
      if (vv == 0.0) continue;
      for (int k = 0; k < m; ++k) out[mm + static_cast<std::size_t>(k)] -= gamma(i, j, k) * vv;
    }
  return out;
}

inline bool all_finite(std::span<const double> y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace detail

/// Integrates gamma'' + Gamma(gamma', gamma') = 0 with the Dormand-Prince
/// 5(4) pair. Blowup is reported when the speed exceeds the threshold while
/// the step size falls below min_step.
inline GeodesicResult integrate_geodesic(const GeodesicSystem& sys, const Point& x0, const Point& v0,
                                         const GeodesicOptions& opts = {}) {
  const int m = sys.dim;
  const std::size_t mm = static_cast<std::size_t>(m);
  if (x0.size() != mm || v0.size() != mm) throw InputError("integrate_geodesic: initial data has the wrong dimension");
  if (sys.in_domain && !sys.in_domain(x0)) throw InputError("integrate_geodesic: initial point outside the domain");
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2;
  (void)c3;
  (void)c4;
  (void)c5;

  GeodesicResult res;
  const double dir = opts.t_max < 0.0 ? -1.0 : 1.0;
  const double horizon = std::abs(opts.t_max);
  std::vector<double> y(2 * mm);
  std::copy(x0.begin(), x0.end(), y.begin());
  std::copy(v0.begin(), v0.end(), y.begin() + m);
  auto speed_of = [&](std::span<const double> s) { return detail::euclidean_norm(s.subspan(mm)); };
  auto energy_of = [&](std::span<const double> s) {
    const Point x(s.begin(), s.begin() + m);
    return detail::quadratic_form(sys.metric(x), s.subspan(mm));
  };
  const double speed0 = speed_of(y);
  if (sys.metric) {
    res.has_energy = true;
    res.energy_initial = energy_of(y);
  }
  std::size_t stride = 1, counter = 0;
  auto record = [&](double t, std::span<const double> s) {
    if (counter++ % stride != 0) return;
    res.trajectory.push_back({dir * t, Point(s.begin(), s.begin() + m), Point(s.begin() + m, s.end())});
    if (res.trajectory.size() >= opts.max_samples) {
      std::vector<TrajectorySample> thin;
      for (std::size_t i = 0; i < res.trajectory.size(); i += 2) thin.push_back(res.trajectory[i]);
      res.trajectory = std::move(thin);
      stride *= 2;
    }
  };
  auto finish = [&](GeodesicStatus st, double t, std::span<const double> s) {
    res.status = st;
    res.t_end = dir * t;
    res.x_end.assign(s.begin(), s.begin() + m);
    res.v_end.assign(s.begin() + m, s.end());
    if (res.trajectory.empty() || res.trajectory.back().t != res.t_end)
      res.trajectory.push_back({res.t_end, res.x_end, res.v_end});
    return res;
  };
  // derivative in the scaled time s = dir * t
  auto f = [&](std::span<const double> s) {
    std::vector<double> d = detail::geodesic_rhs(sys, s);
    if (dir < 0)
      for (auto& v : d) v = -v;
    return d;
  };
  auto axpy = [&](std::initializer_list<std::pair<double, const std::vector<double>*>> terms, double h) {
    std::vector<double> out = y;
    for (const auto& [c, k] : terms)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * c * (*k)[i];
    return out;
  };

  double t = 0.0;
  double h = std::min(horizon, 0.01 / std::max(1.0, speed0));
  std::vector<double> k1 = f(y);
  res.max_speed = speed0;
  record(0.0, y);
  while (true) {
    if (t >= horizon) return finish(GeodesicStatus::reached_horizon, t, y);
    if (res.steps >= opts.max_steps) return finish(GeodesicStatus::step_underflow, t, y);
    h = std::min(h, horizon - t);
    const double speed = speed_of(y);
    if (h < opts.min_step && horizon - t > opts.min_step)
      return finish(speed > opts.blowup_speed ? GeodesicStatus::blowup : GeodesicStatus::step_underflow, t, y);
    const auto k2 = f(axpy({{a21, &k1}}, h));
    const auto k3 = f(axpy({{a31, &k1}, {a32, &k2}}, h));
    const auto k4 = f(axpy({{a41, &k1}, {a42, &k2}, {a43, &k3}}, h));
    const auto k5 = f(axpy({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h));
    const auto k6 = f(axpy({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h));
    const auto ynew = axpy({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, h);
    bool ok = detail::all_finite(ynew);
    std::vector<double> k7;
    double err = 0.0;
    if (ok) {
      k7 = f(ynew);
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        err = std::max(err, std::abs(d) / sc);
      }
      ok = std::isfinite(err);
    }
    if (!ok) {
      h *= 0.25;
      continue;
    }
    if (err > 1.0) {
      h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
      continue;
    }
    // cubic Hermite midpoint defect of the accepted step
    {
      std::vector<double> mid(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) mid[i] = 0.5 * (y[i] + ynew[i]) + h * (k1[i] - k7[i]) / 8.0;
      const auto fm = f(mid);
      double defect = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double slope = 1.5 * (ynew[i] - y[i]) / h - 0.25 * (k1[i] + k7[i]);
        defect = std::max(defect, std::abs(slope - fm[i]));
      }
      const double sp = speed_of(ynew);
      if (sp <= 100.0 * std::max(1.0, speed0)) res.equation_residual = std::max(res.equation_residual, defect);
    }
    t += h;
    y = ynew;
    k1 = k7;
    ++res.steps;
    const double sp = speed_of(y);
    res.max_speed = std::max(res.max_speed, sp);
    if (res.has_energy && sp <= 100.0 * std::max(1.0, speed0))
      res.energy_drift =
          std::max(res.energy_drift, std::abs(energy_of(y) - res.energy_initial) / (1.0 + std::abs(res.energy_initial)));
    record(t, y);
    if (sys.in_domain && !sys.in_domain(Point(y.begin(), y.begin() + m)))
      return finish(GeodesicStatus::left_domain, t, y);
    if (opts.escape_radius) {
      const std::span<const double> x(y.data(), mm), v(y.data() + m, mm);
      if (detail::euclidean_norm(x) > *opts.escape_radius && detail::dot(x, v) * dir > 0.0)
        return finish(GeodesicStatus::escaped_ball, t, y);
    }
    h *= std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
  }
}

// ---------------------------------------------------------------------------
// Completeness probes

struct ProbeSpec {
  std::size_t samples = 100;
  double t_max = 100.0;
  double base_radius = 1.0;
  double min_radius = 0.0;  // base points are drawn from the shell min_radius < |x| < base_radius
  bool both_directions = true;
  bool keep_trajectories = false;
  std::uint64_t seed = 1;
  GeodesicOptions options;
};

struct InitialData {
  Point x;
  Point v;
  double t_max = 0.0;
};

struct ProbeSummary {
  std::string structure;
  std::vector<InitialData> initial;
  std::vector<GeodesicResult> results;
  std::size_t reached_horizon = 0;
  std::size_t escaped = 0;
  std::size_t blowups = 0;
  std::size_t other = 0;
  double earliest_blowup = 0.0;

  [[nodiscard]] std::string verdict() const {
    if (blowups > 0) return "incomplete evidence";
    if (other == 0) return "complete up to T_max";
    return "inconclusive";
  }
  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json rs = nlohmann::json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
      nlohmann::json r = results[i].to_json();
      r["x0"] = initial[i].x;
      r["v0"] = initial[i].v;
      r["t_max"] = initial[i].t_max;
      rs.push_back(r);
    }
    nlohmann::json out = {{"schema_version", kSchemaVersion},
                          {"report", "completeness_probe"},
                          {"structure", structure},
                          {"samples", results.size()},
                          {"reached_horizon", reached_horizon},
                          {"escaped", escaped},
                          {"blowups", blowups},
                          {"other", other},
                          {"verdict", verdict()},
                          {"results", rs}};
    if (blowups > 0) out["earliest_blowup"] = earliest_blowup;
    return out;
  }
};

inline std::vector<InitialData> probe_initial_data(int m, const ProbeSpec& spec) {
  Rng rng(spec.seed);
  std::vector<InitialData> out;
  for (std::size_t i = 0; i < spec.samples; ++i) {
    Point x;
    do {
      x = rng.in_ball(m, spec.base_radius);
    } while (detail::euclidean_norm(x) <= spec.min_radius);
    Point v(static_cast<std::size_t>(m));
    double n = 0.0;
    do {
      for (auto& c : v) c = rng.normal();
      n = detail::euclidean_norm(v);
    } while (n < 1e-12);
    for (auto& c : v) c /= n;
    const double sign = spec.both_directions && i % 2 == 1 ? -1.0 : 1.0;
    out.push_back({x, v, sign * spec.t_max});
  }
  return out;
}

inline ProbeSummary completeness_probe(const GeodesicSystem& sys, const ProbeSpec& spec) {
  ProbeSummary out;
  out.structure = sys.name;
  out.initial = probe_initial_data(sys.dim, spec);
  out.results.resize(out.initial.size());
  parallel_for(out.initial.size(), [&](std::size_t i) {
    GeodesicOptions o = spec.options;
    o.t_max = out.initial[i].t_max;
    GeodesicResult r;
    try {
      r = integrate_geodesic(sys, out.initial[i].x, out.initial[i].v, o);
    } catch (const DomainError&) {
      r.status = GeodesicStatus::evaluation_failure;
    }
    if (!spec.keep_trajectories) r.trajectory.clear();
    out.results[i] = std::move(r);
  });
  bool first = true;
  for (const auto& r : out.results) {
    switch (r.status) {
      case GeodesicStatus::reached_horizon: ++out.reached_horizon; break;
      case GeodesicStatus::escaped_ball: ++out.escaped; break;
      case GeodesicStatus::blowup:
        ++out.blowups;
        if (first || std::abs(r.t_end) < std::abs(out.earliest_blowup)) out.earliest_blowup = r.t_end;
        first = false;
        break;
      default: ++out.other; break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Perturbed flat connection

struct LemmaOptions {
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  double t_max = 100.0;
  std::size_t deviation_points = 2000;
  int max_rescalings = 20;
  bool keep_trajectories = false;
};

struct LemmaReport {
  double epsilon = 0.0;
  double radius = 0.0;
  double rescaling = 1.0;
  double deviation = 0.0;
  std::size_t trajectories = 0;
  std::size_t exited = 0;
  std::size_t straight_after_exit = 0;
  double max_pre_exit_speed = 0.0;
  double max_exit_time = 0.0;
  std::vector<GeodesicResult> results;
  std::vector<CheckOutcome> checks;

  [[nodiscard]] bool passed() const { return all_passed(checks); }
  [[nodiscard]] double complete_fraction() const {
    return trajectories == 0 ? 0.0 : static_cast<double>(straight_after_exit) / static_cast<double>(trajectories);
  }
  [[nodiscard]] nlohmann::json to_json() const {
    return {{"schema_version", kSchemaVersion},
            {"report", "lemma_check"},
            {"epsilon", epsilon},
            {"transplant_radius", radius},
            {"rescaling", rescaling},
            {"deviation_c0", deviation},
            {"trajectories", trajectories},
            {"exited", exited},
            {"straight_after_exit", straight_after_exit},
            {"complete_fraction", complete_fraction()},
            {"max_pre_exit_speed", max_pre_exit_speed},
            {"max_exit_time", max_exit_time},
            {"checks", germforge::to_json(checks)},
            {"passed", passed()}};
  }
};

/// Connection equal to the (normalized, possibly rescaled) germ near 0 and
/// flat outside B_eps with C^0 deviation below eps; geodesics from B_eps with
/// unit speed are followed forward and backward until they leave B_eps.
inline LemmaReport lemma_check(const ConnectionField& germ, double eps, const LemmaOptions& lo = {}) {
  if (!(eps > 0.0)) throw InputError("lemma_check: epsilon must be positive");
  const int m = germ.field.dim();
  const ConnectionField normalized =
      connection_normalized(germ.field) ? germ : *normalize_connection(germ).connection;
  const ConnectionField flat{Field::constant(RealTensor(m, 3), Valence{2, 1})};
  LemmaReport rep;
  rep.epsilon = eps;
  const auto dev_pts = halton_ball(m, eps, lo.deviation_points);
  std::optional<TransplantResult> tr;
  double s = 1.0;
  for (int attempt = 0; attempt <= lo.max_rescalings; ++attempt, s *= 0.5) {
    CoordinateChange c = CoordinateChange::identity(m);
    c.linear = identity_matrix(m) * s;
    const ConnectionField scaled{s == 1.0 ? normalized.field : pull_back_connection(normalized.field, c)};
    TransplantResult t = transplant_connection(scaled, flat, 0.5 * eps);
    const double d = parallel_max(dev_pts.size(), [&](std::size_t i) { return max_abs(t.connection->field.values(dev_pts[i])); });
    if (d < eps) {
      rep.rescaling = s;
      rep.deviation = d;
      rep.radius = t.radius_used;
      tr = std::move(t);
      break;
    }
  }
  if (!tr)
    throw PreconditionError("lemma_check: deviation bound not achievable at epsilon " + std::to_string(eps) +
                            " after rescaling the germ by " + std::to_string(s));
  const GeodesicSystem sys = geodesic_system(*tr->connection, "lemma");
  ProbeSpec spec;
  spec.samples = lo.samples;
  spec.t_max = lo.t_max;
  spec.base_radius = eps;
  spec.seed = lo.seed;
  const auto init = probe_initial_data(m, spec);
  std::vector<InitialData> runs;
  for (const auto& d : init) {
    runs.push_back({d.x, d.v, lo.t_max});
    runs.push_back({d.x, d.v, -lo.t_max});
  }
  rep.trajectories = runs.size();
  rep.results.resize(runs.size());
  std::vector<int> straight(runs.size(), 0);
  parallel_for(runs.size(), [&](std::size_t i) {
    GeodesicOptions o;
    o.t_max = runs[i].t_max;
    o.escape_radius = eps;
    GeodesicResult r = integrate_geodesic(sys, runs[i].x, runs[i].v, o);
    if (r.status == GeodesicStatus::escaped_ball) {
      bool flat_ray = true;
      const double dir = r.t_end < 0 ? -1.0 : 1.0;
      for (double a : {0.0, 0.5 * eps, 2.0 * eps, 10.0 * eps}) {
        Point p = r.x_end;
        for (std::size_t k = 0; k < p.size(); ++k) p[k] += dir * a * r.v_end[k];
        if (max_abs(sys.christoffel(p)) != 0.0) flat_ray = false;
      }
      straight[i] = flat_ray ? 1 : 0;
    }
    if (!lo.keep_trajectories) r.trajectory.clear();
    rep.results[i] = std::move(r);
  });
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = rep.results[i];
    if (r.status == GeodesicStatus::escaped_ball) {
      ++rep.exited;
      rep.max_exit_time = std::max(rep.max_exit_time, std::abs(r.t_end));
    }
    rep.straight_after_exit += static_cast<std::size_t>(straight[i]);
    rep.max_pre_exit_speed = std::max(rep.max_pre_exit_speed, r.max_speed);
  }
  rep.checks.push_back(check_at_most("deviation_below_epsilon", rep.deviation, eps));
  rep.checks.push_back(check_flag("all_exit", rep.exited == rep.trajectories));
  rep.checks.push_back(check_flag("straight_after_exit", rep.straight_after_exit == rep.trajectories));
  rep.checks.push_back(check_at_most("pre_exit_speed", rep.max_pre_exit_speed, 2.0 + 1e-6));
  return rep;
}

/// Largest epsilon in the list for which lemma_check passes.
inline std::optional<double> largest_passing_epsilon(const ConnectionField& germ, std::span<const double> eps_list,
                                                     const LemmaOptions& lo = {}) {
  std::optional<double> best;
  for (double e : eps_list) {
    try {
      if (lemma_check(germ, e, lo).passed()) best = std::max(best.value_or(0.0), e);
    } catch (const PreconditionError&) {
    }
  }
  return best;
}

}  // namespace germforge
