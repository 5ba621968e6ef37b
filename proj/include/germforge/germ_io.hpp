#pragma once

// JSON germ files: polynomial fields stored as coefficient tables.
//
// {
//   "kind": "metric", "dimension": 4, "signature": [0, 4], "degree": 6,
//   "coefficients": [ {"component": [0, 1], "multi_index": [1, 0, 0, 1], "value": 0.5} ]
// }
//
// Component and coordinate indices are 0-based. For metrics an off-diagonal
// entry may be stored once; the loader fills in the transposed slot.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "germforge/error.hpp"
#include "germforge/field.hpp"

namespace germforge {

using json = nlohmann::json;

inline FieldKind parse_field_kind(const std::string& s) {
  for (FieldKind k : {FieldKind::scalar, FieldKind::metric, FieldKind::endo, FieldKind::connection,
                      FieldKind::oneform, FieldKind::twoform, FieldKind::matrix})
    if (to_string(k) == s) return k;
  throw InputError("unknown field kind '" + s + "'");
}

inline StructureKind parse_structure_kind(const std::string& s) {
  if (s == "para" || s == "+") return StructureKind::para;
  if (s == "complex" || s == "-") return StructureKind::complex;
  throw InputError("unknown structure kind '" + s + "' (expected para or complex)");
}

namespace detail {

template <class T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("germ file: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("germ file: field '") + key + "' has the wrong type: " + e.what());
  }
}

}  // namespace detail

inline PolynomialField germ_from_json(const json& j) {
  if (!j.is_object()) throw InputError("germ file: top level must be an object");
  const FieldKind kind = parse_field_kind(detail::require<std::string>(j, "kind"));
  const int m = detail::require<int>(j, "dimension");
  if (m < 1 || m > kMaxDimension) throw InputError("germ file: dimension out of range");
  const int degree = j.contains("degree") ? detail::require<int>(j, "degree") : 6;
  PolynomialField p(m, kind, degree);
  if (j.contains("signature")) {
    const auto sig = detail::require<std::vector<int>>(j, "signature");
    if (sig.size() != 2 || sig[0] < 0 || sig[1] < 0 || sig[0] + sig[1] != m)
      throw InputError("germ file: signature must be [p, q] with p + q = dimension");
    p.set_signature({sig[0], sig[1]});
  }
  if (j.contains("structure")) p.set_structure(parse_structure_kind(detail::require<std::string>(j, "structure")));
  const auto& coeffs = j.contains("coefficients") ? j.at("coefficients") : json::array();
  if (!coeffs.is_array()) throw InputError("germ file: 'coefficients' must be an array");

  std::map<PolynomialField::Key, double> seen;
  for (const auto& c : coeffs) {
    auto comp = detail::require<std::vector<int>>(c, "component");
    auto alpha = detail::require<std::vector<int>>(c, "multi_index");
    const double v = detail::require<double>(c, "value");
    if (!std::isfinite(v)) throw InputError("germ file: non-finite coefficient");
    PolynomialField::Key key{comp, alpha};
    if (seen.count(key)) throw InputError("germ file: duplicate coefficient entry");
    seen[key] = v;
  }
  for (const auto& [key, v] : seen) {
    if (kind == FieldKind::metric && key.first.size() == 2 && key.first[0] != key.first[1]) {
      const PolynomialField::Key mirror{{key.first[1], key.first[0]}, key.second};
      auto it = seen.find(mirror);
      if (it != seen.end() && it->second != v)
        throw InputError("germ file: symmetry violation, g_" + std::to_string(key.first[0]) +
                         std::to_string(key.first[1]) + " != g_" + std::to_string(key.first[1]) +
                         std::to_string(key.first[0]));
      p.set(key.first, key.second, v);
      p.set(mirror.first, mirror.second, v);
    } else {
      p.set(key.first, key.second, v);
    }
  }
  p.prune();
  return p;
}

inline json germ_to_json(const PolynomialField& p) {
  json j;
  j["kind"] = to_string(p.kind());
  j["dimension"] = p.dim();
  if (p.signature()) j["signature"] = {p.signature()->negative, p.signature()->positive};
  if (p.structure()) j["structure"] = to_string(*p.structure());
  j["degree"] = p.degree();
  json coeffs = json::array();
  for (const auto& [key, v] : p.table()) {
    if (p.kind() == FieldKind::metric && key.first[0] > key.first[1]) continue;
    coeffs.push_back({{"component", key.first}, {"multi_index", key.second}, {"value", v}});
  }
  j["coefficients"] = std::move(coeffs);
  return j;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

inline PolynomialField read_germ(const std::string& path) { return germ_from_json(read_json_file(path)); }

inline void write_germ(const std::string& path, const PolynomialField& p) {
  write_text_file(path, germ_to_json(p).dump(2) + "\n");
}

}  // namespace germforge
