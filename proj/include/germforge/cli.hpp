#pragma once

// Batch driver behind the germforge executable:
//
//   germforge verify <identity>      --input F [--points N --seed S --radius R --tolerance T]
//   germforge transplant <kind>      --germ F --host F [--radius R --points N --seed S]
//   germforge realize [kind]         --model F [--host F --radius R --seed S]
//   germforge geodesic <scenario>    [--germ F --epsilon E --samples N --t-max T --seed S --tolerance T]
//
// Every command accepts --out PATH and --format json|csv. Structure arguments
// name a germ file, a bundle file {"metric": germ, "endo": germ, ...} or a
// seeded built-in such as random-riemannian:4. Exit codes: 0 success,
// 1 verification failure, 2 input or usage error.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "germforge/error.hpp"
#include "germforge/field.hpp"
#include "germforge/fixtures.hpp"
#include "germforge/geodesics.hpp"
#include "germforge/germ_io.hpp"
#include "germforge/identities.hpp"
#include "germforge/models.hpp"
#include "germforge/normalize.hpp"
#include "germforge/report.hpp"
#include "germforge/transplant.hpp"
#include "germforge/weyl.hpp"

namespace germforge {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr int kOutputGermDegree = 4;

struct CliOptions {
  std::string command;
  std::string target;
  std::string input, germ, host, model, out;
  std::string format = "json";
  std::optional<double> radius, epsilon, tolerance, t_max;
  std::optional<std::size_t> points, samples;
  std::optional<std::uint64_t> seed;

  [[nodiscard]] std::uint64_t seed_or(std::uint64_t fallback = 1) const { return seed.value_or(fallback); }
};

// ---------------------------------------------------------------------------
// Structures

struct Structure {
  int dim = 0;
  std::optional<PolynomialField> metric, endo, connection, oneform;
  std::optional<StructureKind> kind;
};

namespace cli {

inline std::vector<std::string> builtin_structures() {
  return {"flat",           "random-riemannian",     "random-lorentzian", "random-hermitian",
          "random-para-hermitian", "random-kahler",   "random-para-kahler", "product-kahler",
          "flat-connection", "random-connection",   "random-weyl"};
}

inline std::pair<std::string, std::optional<int>> split_builtin(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, std::nullopt};
  const std::string dim = spec.substr(colon + 1);
  try {
    std::size_t used = 0;
    const int m = std::stoi(dim, &used);
    if (used != dim.size()) throw InputError("bad dimension");
    return {spec.substr(0, colon), m};
  } catch (const std::exception&) {
    throw InputError("bad dimension in '" + spec + "'");
  }
}

inline void set_kind(Structure& s, StructureKind kind) {
  s.kind = kind;
  s.endo = standard_endo_field(s.dim, kind);
  s.endo->set_structure(kind);
}

inline Structure builtin_structure(const std::string& spec, std::uint64_t seed) {
  const auto [name, dim] = split_builtin(spec);
  const auto known = builtin_structures();
  if (std::find(known.begin(), known.end(), name) == known.end())
    throw InputError("'" + spec + "' is neither a readable file nor a built-in structure");
  const bool hermitian = name.find("hermitian") != std::string::npos || name.find("kahler") != std::string::npos;
  const int m = dim.value_or(4);
  if (m < 1 || m > kMaxDimension) throw InputError("dimension out of range in '" + spec + "'");
  if (hermitian && m % 2 != 0) throw PreconditionError("'" + name + "' needs an even dimension, got " + std::to_string(m));
  if (name == "product-kahler" && m != 4) throw PreconditionError("product-kahler is 4-dimensional");
  if (name == "random-lorentzian" && m < 2) throw InputError("random-lorentzian needs dimension at least 2");
  Rng rng(seed);
  Structure s;
  s.dim = m;
  const StructureKind kind = name.find("para") != std::string::npos ? StructureKind::para : StructureKind::complex;
  if (name == "flat") {
    s.metric = constant_polynomial(standard_metric({0, m}), FieldKind::metric);
    s.metric->set_signature({0, m});
  } else if (name == "random-riemannian") {
    s.metric = random_metric(rng, {0, m}, 1, 4, 0.1);
  } else if (name == "random-lorentzian") {
    s.metric = random_metric(rng, {1, m - 1}, 1, 4, 0.1);
  } else if (name == "random-hermitian" || name == "random-para-hermitian") {
    s.metric = random_hermitian_metric(rng, m, kind, 0, 1, 4, 0.1);
    set_kind(s, kind);
  } else if (name == "random-kahler" || name == "random-para-kahler") {
    s.metric = random_kahler_metric(rng, m, kind);
    set_kind(s, kind);
  } else if (name == "product-kahler") {
    s.metric = product_kahler_metric(rng, kind);
    set_kind(s, kind);
  } else if (name == "flat-connection") {
    s.connection = PolynomialField(m, FieldKind::connection, 6);
  } else if (name == "random-connection") {
    s.connection = random_connection(rng, m, 1, 4, 0.1);
  } else if (name == "random-weyl") {
    s.metric = random_metric(rng, {0, m}, 2, 4, 0.1);
    PolynomialField w(m, FieldKind::oneform, 6);
    for (int i = 0; i < m; ++i)
      for (const auto& e : detail::monomials_of_degree(m, 0, 2)) w.add({i}, e, rng.uniform(-0.1, 0.1));
    s.oneform = std::move(w);
  }
  return s;
}

inline void absorb(Structure& s, PolynomialField p, const std::string& slot) {
  if (s.dim != 0 && p.dim() != s.dim) throw InputError("structure file: components have different dimensions");
  s.dim = p.dim();
  switch (p.kind()) {
    case FieldKind::metric:
      if (p.structure()) s.kind = *p.structure();
      s.metric = std::move(p);
      break;
    case FieldKind::endo:
      if (p.structure()) s.kind = *p.structure();
      s.endo = std::move(p);
      break;
    case FieldKind::connection: s.connection = std::move(p); break;
    case FieldKind::oneform: s.oneform = std::move(p); break;
    default: throw InputError("structure file: unsupported field kind '" + to_string(p.kind()) + "' in " + slot);
  }
}

inline Structure structure_from_json(const json& j) {
  if (!j.is_object()) throw InputError("structure file: top level must be an object");
  Structure s;
  if (j.contains("kind")) {
    absorb(s, germ_from_json(j), "germ");
  } else {
    bool any = false;
    for (const char* key : {"metric", "endo", "connection", "oneform"}) {
      if (!j.contains(key)) continue;
      PolynomialField p = germ_from_json(j.at(key));
      if (to_string(p.kind()) != key) throw InputError(std::string("structure file: '") + key + "' holds a germ of another kind");
      absorb(s, std::move(p), key);
      any = true;
    }
    if (!any) throw InputError("structure file: expected a germ or a bundle with metric/endo/connection/oneform");
  }
  if (s.kind && !s.endo) set_kind(s, *s.kind);
  return s;
}

inline Structure load_structure(const std::string& spec, std::uint64_t seed) {
  if (spec.empty()) throw InputError("missing structure argument");
  if (std::filesystem::exists(spec)) return structure_from_json(read_json_file(spec));
  return builtin_structure(spec, seed);
}

inline MetricField metric_of(const Structure& s, const std::string& role) {
  if (!s.metric) throw InputError(role + " has no metric");
  return as_metric(*s.metric);
}

inline EndoField endo_of(const Structure& s, const std::string& role) {
  if (!s.endo) throw InputError(role + " has no structure J");
  return make_endo(s.endo->field(), s.kind);
}

inline ConnectionField connection_of(const Structure& s, const std::string& role) {
  if (s.connection) return ConnectionField{s.connection->field()};
  if (s.metric && s.oneform) return weyl_connection(as_metric(*s.metric), OneFormField{s.oneform->field()});
  if (s.metric) return levi_civita_connection(as_metric(*s.metric));
  throw InputError(role + " has no connection");
}

// ---------------------------------------------------------------------------
// Models

inline CurvatureModel xi1313_model() {
  RealTensor eps(4, 2), e(4, 2);
  eps(0, 2) = eps(2, 0) = eps(1, 3) = eps(3, 1) = 1.0;
  e(0, 0) = e(1, 1) = 1.0;
  e(2, 2) = e(3, 3) = -1.0;
  return {4, eps, xi(4, 0, 2, 0, 2), e};
}

inline CurvatureModel load_model(const std::string& spec, std::uint64_t seed) {
  if (spec.empty()) throw InputError("missing --model");
  if (std::filesystem::exists(spec)) return read_model(spec);
  const auto [name, dim] = split_builtin(spec);
  Rng rng(seed);
  if (name == "xi1313") return xi1313_model();
  if (name == "random-riemannian") return random_riemannian_model(rng, {0, dim.value_or(4)});
  if (name == "random-para-kahler") {
    const int m = dim.value_or(4);
    if (m % 2 != 0 || m < 2) throw PreconditionError("para-Kahler models need an even dimension");
    return random_para_kahler_model(rng, m);
  }
  throw InputError("'" + spec + "' is neither a readable model file nor a built-in model");
}

// ---------------------------------------------------------------------------
// Output

inline std::string checks_csv(const std::vector<CheckOutcome>& checks) {
  std::ostringstream out;
  out.precision(17);
  out << "check,value,tolerance,passed\n";
  for (const auto& c : checks) out << c.name << "," << c.value << "," << c.tolerance << "," << (c.passed ? 1 : 0) << "\n";
  return out.str();
}

inline std::string trajectories_csv(const std::vector<GeodesicResult>& results, int m) {
  std::ostringstream out;
  out.precision(17);
  out << "sample,t";
  for (int i = 0; i < m; ++i) out << ",x" << i;
  out << ",speed\n";
  for (std::size_t k = 0; k < results.size(); ++k)
    for (const auto& s : results[k].trajectory) {
      out << k << "," << s.t;
      for (double x : s.x) out << "," << x;
      out << "," << detail::euclidean_norm(s.v) << "\n";
    }
  return out.str();
}

inline std::string sibling_path(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  std::string stem = p.filename().string();
  if (const auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
  return (p.parent_path() / (stem + suffix)).string();
}

inline void emit(const CliOptions& o, const json& report, const std::string& csv, std::ostream& out) {
  const std::string text = o.format == "csv" ? csv : report.dump(2) + "\n";
  if (o.out.empty())
    out << text;
  else
    write_text_file(o.out, text);
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_verify(const CliOptions& o, std::ostream& out) {
  const Identity id = parse_identity(o.target);
  const Structure s = load_structure(o.input, o.seed_or());
  if (needs_structure(id) && s.dim != 4)
    throw PreconditionError(to_string(id) + " identity requires dimension 4, got " + std::to_string(s.dim));
  const MetricField g = metric_of(s, "input");
  std::optional<EndoField> j;
  if (s.endo) j = endo_of(s, "input");
  if (needs_structure(id) && !j) throw PreconditionError(to_string(id) + " identity needs a structure J");
  const auto pts = detail::random_points(s.dim, o.radius.value_or(1.0), o.points.value_or(10), o.seed_or());
  const IdentityReport rep = identity_report(id, g, j ? &*j : nullptr, pts, o.tolerance);
  json report = rep.to_json();
  report["input"] = o.input;
  report["seed"] = o.seed_or();
  emit(o, report, rep.to_csv(), out);
  return rep.passed ? kExitSuccess : kExitFailure;
}

inline NormalizedGerm normalized_pair(const Structure& s, const std::string& role) {
  return normalize_pair(metric_of(s, role), endo_of(s, role));
}

inline std::pair<MetricField, ConnectionField> normalized_weyl(const Structure& s, const std::string& role) {
  const MetricField g = metric_of(s, role);
  const ConnectionField c = connection_of(s, role);
  const NormalizedGerm n = normalize_metric(g);
  return {*n.metric, ConnectionField{pull_back_connection(c.field, n.change)}};
}

inline TransplantResult run_transplant(const std::string& kind, const Structure& germ, const Structure& host, double r,
                                       const TransplantOptions& opts) {
  if (germ.dim != host.dim)
    throw InputError("germ is " + std::to_string(germ.dim) + "-dimensional, host is " + std::to_string(host.dim) +
                     "-dimensional");
  if (kind == "metric")
    return transplant_metric(*normalize_metric(metric_of(germ, "germ")).metric,
                             *normalize_metric(metric_of(host, "host")).metric, r, opts);
  if (kind == "connection") {
    if (!germ.connection || !host.connection) throw InputError("connection transplant needs connection germs");
    return transplant_connection(*normalize_connection(connection_of(germ, "germ")).connection,
                                 *normalize_connection(connection_of(host, "host")).connection, r, opts);
  }
  if (kind == "almost-complex") {
    auto structure = [](const Structure& s, const std::string& role) {
      return s.metric ? *normalized_pair(s, role).endo : endo_of(s, role);
    };
    return transplant_almost_complex(structure(germ, "germ"), structure(host, "host"), r, opts);
  }
  if (kind == "almost-hermitian") {
    const NormalizedGerm a = normalized_pair(germ, "germ"), b = normalized_pair(host, "host");
    return transplant_almost_hermitian(*a.metric, *a.endo, *b.metric, *b.endo, r, false, opts);
  }
  if (kind == "kahler") {
    if (!germ.metric || !host.metric) throw InputError("kahler transplant needs metric germs");
    if (!germ.kind || !host.kind) throw InputError("kahler transplant needs a declared structure (para or complex)");
    if (*germ.kind != *host.kind) throw PreconditionError("germ and host structures are of different kinds");
    for (const Structure* s : {&germ, &host})
      if (s->endo->table() != standard_endo_field(s->dim, *s->kind).table())
        throw PreconditionError("kahler transplant needs the standard constant structure");
    return transplant_kahler(*germ.metric, *host.metric, *germ.kind, r, opts);
  }
  if (kind == "weyl") {
    const auto [g1, n1] = normalized_weyl(germ, "germ");
    const auto [g2, n2] = normalized_weyl(host, "host");
    return transplant_weyl(g1, n1, g2, n2, r, opts);
  }
  throw InputError("unknown transplant kind '" + kind +
                   "' (expected metric, connection, almost-complex, almost-hermitian, kahler or weyl)");
}

inline PolynomialField output_germ(const TransplantResult& res) {
  if (res.metric) {
    PolynomialField p = taylor_polynomial(res.metric->field, FieldKind::metric, kOutputGermDegree);
    p.set_signature(res.metric->signature);
    return p;
  }
  if (res.connection) return taylor_polynomial(res.connection->field, FieldKind::connection, kOutputGermDegree);
  if (res.endo) {
    PolynomialField p = taylor_polynomial(res.endo->field, FieldKind::endo, kOutputGermDegree);
    p.set_structure(res.endo->kind);
    return p;
  }
  throw VerificationError("transplant produced no output field");
}

inline int cmd_transplant(const CliOptions& o, std::ostream& out) {
  const Structure germ = load_structure(o.germ, o.seed_or());
  const Structure host = load_structure(o.host, o.seed_or() + 1);
  TransplantOptions opts;
  opts.seed = o.seed_or();
  if (o.points) opts.check_points = *o.points;
  const TransplantResult res = run_transplant(o.target, germ, host, o.radius.value_or(0.1), opts);
  json report = res.to_json();
  report["germ"] = o.germ;
  report["host"] = o.host;
  emit(o, report, checks_csv(res.checks), out);
  if (!o.out.empty()) {
    PolynomialField g = output_germ(res);
    if (germ.kind && g.kind() == FieldKind::metric) g.set_structure(*germ.kind);
    write_germ(sibling_path(o.out, ".germ.json"), g);
  }
  return res.passed() ? kExitSuccess : kExitFailure;
}

inline int cmd_realize(const CliOptions& o, std::ostream& out) {
  const CurvatureModel model = load_model(o.model, o.seed_or());
  require_model_shape(model);
  const RealizationKind kind = o.target.empty() ? default_realization_kind(model) : parse_realization_kind(o.target);
  std::optional<PolynomialField> host;
  if (!o.host.empty()) {
    const Structure h = load_structure(o.host, o.seed_or() + 1);
    if (!h.metric) throw InputError("host has no metric");
    host = *h.metric;
  }
  TransplantOptions opts;
  opts.seed = o.seed_or();
  const ModelRealization res = realize_model(model, kind, host, o.radius.value_or(0.1), opts);
  json report = res.to_json();
  report["model"] = model_to_json(model);
  std::vector<CheckOutcome> checks = res.checks;
  if (res.para) checks.insert(checks.end(), res.para->checks.begin(), res.para->checks.end());
  if (res.transplant) checks.insert(checks.end(), res.transplant->checks.begin(), res.transplant->checks.end());
  emit(o, report, checks_csv(checks), out);
  if (!o.out.empty()) {
    write_germ(sibling_path(o.out, ".germ.json"), res.germ);
    if (res.para)
      write_text_file(sibling_path(o.out, ".theta.json"),
                      json{{"schema_version", kSchemaVersion},
                           {"dimension", model.dimension},
                           {"theta", res.para->to_json().at("theta")}}
                              .dump(2) +
                          "\n");
  }
  return res.passed() ? kExitSuccess : kExitFailure;
}

struct GeodesicScenario {
  std::string name;
  std::string expect;
  std::string germ;
  std::optional<double> epsilon, t_max, min_radius;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
};

inline std::string default_expectation(const std::string& name) {
  if (name == "flat" || name == "lemma-check") return "complete";
  if (name == "misner" || name == "meneghini" || name == "circle-gamma") return "incomplete";
  return "any";
}

inline GeodesicScenario load_scenario(const std::string& spec) {
  GeodesicScenario s;
  if (!std::filesystem::exists(spec)) {
    s.name = spec;
  } else {
    const json j = read_json_file(spec);
    try {
      if (!j.is_object() || !j.contains("scenario")) throw InputError("scenario file: missing 'scenario'");
      s.name = j.at("scenario").get<std::string>();
      if (j.contains("expect")) s.expect = j.at("expect").get<std::string>();
      if (j.contains("germ")) {
        s.germ = j.at("germ").get<std::string>();
        const std::filesystem::path rel = std::filesystem::path(spec).parent_path() / s.germ;
        if (!std::filesystem::exists(s.germ) && std::filesystem::exists(rel)) s.germ = rel.string();
      }
      if (j.contains("epsilon")) s.epsilon = j.at("epsilon").get<double>();
      if (j.contains("t_max")) s.t_max = j.at("t_max").get<double>();
      if (j.contains("min_radius")) s.min_radius = j.at("min_radius").get<double>();
      if (j.contains("samples")) s.samples = j.at("samples").get<std::size_t>();
      if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw InputError(std::string("scenario file: ") + e.what());
    }
  }
  if (s.expect.empty()) s.expect = default_expectation(s.name);
  if (s.expect != "complete" && s.expect != "incomplete" && s.expect != "any")
    throw InputError("scenario expectation must be complete, incomplete or any");
  return s;
}

inline GeodesicSystem scenario_system(const GeodesicScenario& s, std::uint64_t seed) {
  if (s.name == "flat") return flat_system({0, 2});
  if (s.name == "misner") return misner_system();
  if (s.name == "meneghini") return meneghini_system();
  if (s.name == "circle-gamma") return circle_system();
  if (s.name == "germ") {
    const Structure g = load_structure(s.germ, seed);
    if (g.connection) return geodesic_system(ConnectionField{g.connection->field()}, "germ");
    if (g.metric) return geodesic_system(as_metric(*g.metric), "germ");
    throw InputError("geodesic germ must be a metric or a connection");
  }
  throw InputError("unknown geodesic scenario '" + s.name +
                   "' (expected flat, misner, meneghini, circle-gamma, lemma-check, germ or a scenario file)");
}

inline int cmd_geodesic(const CliOptions& o, std::ostream& out) {
  GeodesicScenario s = load_scenario(o.target.empty() ? o.input : o.target);
  if (!o.germ.empty()) s.germ = o.germ;
  const std::uint64_t seed = o.seed ? *o.seed : s.seed.value_or(1);
  const double t_max = o.t_max.value_or(s.t_max.value_or(100.0));
  const bool keep = o.format == "csv";
  json report;
  std::string csv;
  bool complete = false;
  if (s.name == "lemma-check") {
    LemmaOptions lo;
    lo.samples = o.samples.value_or(s.samples.value_or(200));
    lo.seed = seed;
    lo.t_max = t_max;
    lo.keep_trajectories = keep;
    const Structure g = load_structure(s.germ.empty() ? "random-connection:3" : s.germ, seed);
    const LemmaReport rep = lemma_check(connection_of(g, "germ"), o.epsilon.value_or(s.epsilon.value_or(0.05)), lo);
    complete = rep.passed();
    report = rep.to_json();
    csv = trajectories_csv(rep.results, g.dim);
  } else {
    const GeodesicSystem sys = scenario_system(s, seed);
    ProbeSpec spec;
    spec.samples = o.samples.value_or(s.samples.value_or(100));
    spec.t_max = t_max;
    spec.seed = seed;
    spec.keep_trajectories = keep;
    spec.min_radius = s.min_radius.value_or(s.name == "meneghini" ? 0.2 : 0.0);
    if (o.tolerance) {
      spec.options.rtol = *o.tolerance;
      spec.options.atol = *o.tolerance * 1e-2;
    }
    const ProbeSummary sum = completeness_probe(sys, spec);
    complete = sum.verdict() == "complete up to T_max";
    const bool incomplete = sum.verdict() == "incomplete evidence";
    report = sum.to_json();
    if (s.expect == "incomplete") complete = !incomplete;
    csv = trajectories_csv(sum.results, sys.dim);
  }
  const bool matches = s.expect == "any" || (s.expect == "complete") == complete;
  report["scenario"] = s.name;
  report["expect"] = s.expect;
  report["seed"] = seed;
  report["matches_expectation"] = matches;
  emit(o, report, csv, out);
  return matches ? kExitSuccess : kExitFailure;
}

inline void add_common(CLI::App* sub, CliOptions& o) {
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--out", o.out, "report path (stdout when omitted)");
  sub->add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace cli

/// Runs the command line; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CliOptions o;
  CLI::App app{"germforge: local geometry germs, transplants, curvature identities and realizations"};
  app.name("germforge");
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "check a curvature identity at sampled points");
  verify->add_option("identity", o.target, "berger, gray, pontrjagin, chern or kahler")->required();
  verify->add_option("--input", o.input, "germ/bundle file or built-in structure")->required();
  verify->add_option("--points", o.points, "number of sample points (default 10)");
  verify->add_option("--radius", o.radius, "sampling radius (default 1)");
  verify->add_option("--tolerance", o.tolerance, "relative residual tolerance");
  cli::add_common(verify, o);

  auto* transplant = app.add_subcommand("transplant", "transplant a germ into a host structure");
  transplant->add_option("kind", o.target, "metric, connection, almost-complex, almost-hermitian, kahler or weyl")
      ->required();
  transplant->add_option("--germ", o.germ, "germ file or built-in structure")->required();
  transplant->add_option("--host", o.host, "host file or built-in structure")->required();
  transplant->add_option("--radius", o.radius, "transplant radius r (default 0.1)");
  transplant->add_option("--points", o.points, "number of postcondition check points");
  cli::add_common(transplant, o);

  auto* realize = app.add_subcommand("realize", "realize a curvature model by a germ");
  realize->add_option("kind", o.target, "riemannian or para-kahler (default from the model)");
  realize->add_option("--model", o.model, "model file or built-in model")->required();
  realize->add_option("--host", o.host, "optional host metric to transplant into");
  realize->add_option("--radius", o.radius, "transplant radius (default 0.1)");
  cli::add_common(realize, o);

  auto* geodesic = app.add_subcommand("geodesic", "probe geodesic completeness");
  geodesic->add_option("scenario", o.target, "flat, misner, meneghini, circle-gamma, lemma-check, germ or a file");
  geodesic->add_option("--input", o.input, "scenario file");
  geodesic->add_option("--germ", o.germ, "germ for the germ and lemma-check scenarios");
  geodesic->add_option("--epsilon", o.epsilon, "lemma-check radius (default 0.05)");
  geodesic->add_option("--samples", o.samples, "number of sampled initial conditions");
  geodesic->add_option("--t-max", o.t_max, "integration horizon (default 100)");
  geodesic->add_option("--tolerance", o.tolerance, "integrator relative tolerance");
  cli::add_common(geodesic, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitSuccess : kExitUsage;
  }

  try {
    if (verify->parsed()) return cli::cmd_verify(o, out);
    if (transplant->parsed()) return cli::cmd_transplant(o, out);
    if (realize->parsed()) return cli::cmd_realize(o, out);
    if (o.target.empty() && o.input.empty()) throw InputError("geodesic: give a scenario name or --input file");
    return cli::cmd_geodesic(o, out);
  } catch (const VerificationError& e) {
    err << "verification failed: " << e.what() << "\n";
    return kExitFailure;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"germforge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace germforge
