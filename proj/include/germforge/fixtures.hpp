#pragma once

// Seeded random structures: polynomial metrics, Hermitian and Kahler
// metrics for the standard constant structure, torsion-free connections.
//
// Recipe: coefficients uniform in [-bound, bound] on every monomial of the
// requested degrees, added to the standard value at the origin.

#include <cstdint>
#include <vector>

#include "germforge/field.hpp"
#include "germforge/sampling.hpp"

namespace germforge {

namespace detail {

inline std::vector<std::vector<int>> monomials_of_degree(int m, int lo, int hi) {
  std::vector<std::vector<int>> out;
  const auto& t = jet_table(m);
  for (std::size_t a = 0; a < t.size_upto[static_cast<std::size_t>(hi)]; ++a)
    if (t.degree[a] >= lo) out.push_back(t.monomials[a]);
  return out;
}

// out[component] += s * scalar polynomial
inline void add_scaled(PolynomialField& out, const std::vector<int>& component, const PolynomialField& scalar,
                       double s) {
  if (s == 0.0) return;
  for (const auto& [key, c] : scalar.table()) out.add(component, key.second, s * c);
}

}  // namespace detail

/// Random scalar polynomial with monomials of degree lo..hi.
inline PolynomialField random_scalar(Rng& rng, int m, int lo, int hi, double bound, int degree = 6) {
  PolynomialField f(m, FieldKind::scalar, degree);
  for (const auto& e : detail::monomials_of_degree(m, lo, hi)) f.add({}, e, rng.uniform(-bound, bound));
  return f;
}

/// epsilon + random symmetric perturbation of degree lo..hi.
inline PolynomialField random_metric(Rng& rng, Signature s, int lo = 1, int hi = 4, double bound = 0.1,
                                     int degree = 6) {
  const int m = s.negative + s.positive;
  PolynomialField g = constant_polynomial(standard_metric(s), FieldKind::metric, degree);
  g.set_signature(s);
  const auto monos = detail::monomials_of_degree(m, lo, hi);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j)
      for (const auto& e : monos) g.add_symmetric(i, j, e, rng.uniform(-bound, bound));
  return g;
}

/// Coefficientwise (g - sigma J^*g) / 2 for a constant structure E.
inline PolynomialField hermitian_average(const PolynomialField& g, const RealTensor& e, StructureKind kind) {
  const int m = g.dim();
  std::map<std::vector<int>, RealTensor> blocks;
  for (const auto& [key, c] : g.table()) {
    auto it = blocks.try_emplace(key.second, m, 2).first;
    it->second(key.first[0], key.first[1]) = c;
  }
  PolynomialField out(m, FieldKind::metric, g.degree());
  if (g.signature()) out.set_signature(*g.signature());
  for (const auto& [alpha, c] : blocks) {
    const RealTensor avg = (c - pull_back(e, c) * square_sign(kind)) * 0.5;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (avg(i, j) != 0.0) out.set({i, j}, alpha, avg(i, j));
  }
  out.prune();
  return out;
}

inline PolynomialField standard_endo_field(int m, StructureKind kind) {
  PolynomialField j = constant_polynomial(standard_endo(m, kind), FieldKind::endo);
  j.set_structure(kind);
  return j;
}

inline Signature hermitian_signature(int m, StructureKind kind, int negative_pairs) {
  if (kind == StructureKind::para) return {m / 2, m / 2};
  return {2 * negative_pairs, m - 2 * negative_pairs};
}

/// Random almost (para)-Hermitian metric for the standard constant structure.
inline PolynomialField random_hermitian_metric(Rng& rng, int m, StructureKind kind, int negative_pairs = 0,
                                               int lo = 1, int hi = 4, double bound = 0.1) {
  const Signature s = hermitian_signature(m, kind, negative_pairs);
  PolynomialField g = constant_polynomial(standard_hermitian_metric(m, kind, s), FieldKind::metric);
  g.set_signature(s);
  const auto monos = detail::monomials_of_degree(m, lo, hi);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j)
      for (const auto& e : monos) g.add_symmetric(i, j, e, rng.uniform(-bound, bound));
  return hermitian_average(g, standard_endo(m, kind), kind);
}

/// Real operator f -> (1/2) d(J^*df) for a constant structure, producing
/// the 2-form as a polynomial field of kind twoform.
inline PolynomialField hessian_form(const PolynomialField& f, const RealTensor& e) {
  const int m = f.dim();
  PolynomialField out(m, FieldKind::twoform, f.degree());
  std::vector<PolynomialField> grad;
  for (int a = 0; a < m; ++a) grad.push_back(partial_derivative(f, a));
  for (int i = 0; i < m; ++i)
    for (int b = 0; b < m; ++b) {
      const PolynomialField h = partial_derivative(grad[static_cast<std::size_t>(b)], i);  // d_i d_b f
      for (int j = 0; j < m; ++j) {
        // P_ij = (E(j,b) d_i d_b f - E(i,b) d_j d_b f) / 2, accumulated from both slots
        detail::add_scaled(out, {i, j}, h, 0.5 * e(j, b));
        detail::add_scaled(out, {j, i}, h, -0.5 * e(j, b));
      }
    }
  out.prune();
  return out;
}

/// g(x, y) = sigma * w(x, J y) for a constant structure.
inline PolynomialField metric_from_form(const PolynomialField& w, const RealTensor& e, StructureKind kind) {
  const int m = w.dim();
  PolynomialField g(m, FieldKind::metric, w.degree());
  for (const auto& [key, c] : w.table()) {
    const int i = key.first[0], a = key.first[1];
    for (int j = 0; j < m; ++j)
      if (e(j, a) != 0.0) g.add({i, j}, key.second, square_sign(kind) * c * e(j, a));
  }
  g.prune();
  return g;
}

/// Flat potential sum_i eps_ii (x^i)^2 / 2.
inline PolynomialField flat_potential(const RealTensor& eps, int degree = 6) {
  const int m = eps.dim();
  PolynomialField f(m, FieldKind::scalar, degree);
  for (int i = 0; i < m; ++i) {
    std::vector<int> e(static_cast<std::size_t>(m), 0);
    e[static_cast<std::size_t>(i)] = 2;
    f.add({}, e, 0.5 * eps(i, i));
  }
  return f;
}

/// Kahler metric with potential flat + random terms of degree 4..hi; the
/// metric is standard at 0 with vanishing first derivatives.
inline PolynomialField random_kahler_metric(Rng& rng, int m, StructureKind kind, int negative_pairs = 0, int hi = 5,
                                            double bound = 0.05) {
  const Signature s = hermitian_signature(m, kind, negative_pairs);
  const RealTensor eps = standard_hermitian_metric(m, kind, s);
  PolynomialField f = flat_potential(eps);
  for (const auto& e : detail::monomials_of_degree(m, 4, hi)) f.add({}, e, rng.uniform(-bound, bound));
  PolynomialField g = metric_from_form(hessian_form(f, standard_endo(m, kind)), standard_endo(m, kind), kind);
  g.set_signature(s);
  return g;
}

/// Product of two (para)-Hermitian surfaces: conformal factors depending only
/// on (x^i, x^{i+n}) on each J-invariant plane (m = 4).
inline PolynomialField product_kahler_metric(Rng& rng, StructureKind kind, int negative_pairs = 0,
                                             double bound = 0.1) {
  const int m = 4;
  const Signature s = hermitian_signature(m, kind, negative_pairs);
  const RealTensor eps = standard_hermitian_metric(m, kind, s);
  PolynomialField g = constant_polynomial(eps, FieldKind::metric);
  g.set_signature(s);
  for (int plane = 0; plane < 2; ++plane) {
    const int a = plane, b = plane + 2;
    for (int d = 2; d <= 4; ++d)
      for (int k = 0; k <= d; ++k) {
        std::vector<int> e(4, 0);
        e[static_cast<std::size_t>(a)] = k;
        e[static_cast<std::size_t>(b)] = d - k;
        const double c = rng.uniform(-bound, bound);
        g.add({a, a}, e, eps(a, a) * c);
        g.add({b, b}, e, eps(b, b) * c);
      }
  }
  return g;
}

/// Random torsion-free connection with monomials of degree lo..hi.
inline PolynomialField random_connection(Rng& rng, int m, int lo = 1, int hi = 3, double bound = 0.1) {
  PolynomialField c(m, FieldKind::connection, 6);
  const auto monos = detail::monomials_of_degree(m, lo, hi);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (const auto& e : monos) {
          const double v = rng.uniform(-bound, bound);
          c.add({i, j, k}, e, v);
          if (i != j) c.add({j, i, k}, e, v);
        }
  return c;
}

}  // namespace germforge
