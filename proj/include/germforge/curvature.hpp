#pragma once

// Pointwise differential geometry on jets: Levi-Civita connection, curvature,
// covariant derivatives, forms, Nijenhuis tensor, Ricci *-tensor.
//
// Conventions:
//   Gamma(i, j, k) = Gamma_ij^k, nabla_{d_i} d_j = Gamma_ij^k d_k
//   R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]
//   Rup(i, j, k, l) = R_ijk^l with R(d_i, d_j) d_k = R_ijk^l d_l
//   R(i, j, k, l) = g(R(d_i, d_j) d_k, d_l)
//   rho_jk = g^il R_ijkl, tau = g^jk rho_jk
//   covariant derivatives prepend the new slot: (nabla T)(a, ...) = nabla_a T_...

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "germforge/error.hpp"
#include "germforge/field.hpp"
#include "germforge/jet.hpp"
#include "germforge/tensor.hpp"

namespace germforge {

/// out(a, idx...) = d_a t(idx...); one jet order is lost.
inline JetTensor partials(const JetTensor& t) {
  const int m = t.dim();
  JetTensor out(m, t.rank() + 1);
  const std::size_t n = t.size();
  for (int a = 0; a < m; ++a)
    for (std::size_t f = 0; f < n; ++f) out.data()[static_cast<std::size_t>(a) * n + f] = t.data()[f].partial(a);
  return out;
}

inline JetTensor christoffel_from_metric(const JetTensor& g, const JetTensor& ginv) {
  const int m = g.dim();
  const JetTensor dg = partials(g);
  JetTensor lower(m, 3);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int l = 0; l < m; ++l) lower(i, j, l) = dg(i, j, l) + dg(j, i, l) - dg(l, i, j);
  JetTensor gamma = einsum<Jet>("ijl,lk->ijk", {&lower, &ginv});
  gamma *= 0.5;
  return gamma;
}

/// R_ijk^l from connection jets; two orders below the metric.
inline JetTensor curvature_from_connection(const JetTensor& gamma) {
  const int m = gamma.dim();
  const JetTensor dgam = partials(gamma);  // (a, i, j, k) = d_a Gamma_ij^k
  JetTensor r(m, 4);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
          Jet acc = dgam(i, j, k, l) - dgam(j, i, k, l);
          for (int n = 0; n < m; ++n) {
            acc.add_product(gamma(j, k, n), gamma(i, n, l));
            acc.add_product(gamma(i, k, n), gamma(j, n, l), -1.0);
          }
          r(i, j, k, l) = std::move(acc);
        }
  return r;
}

/// Covariant derivative of a tensor whose slots are described by `slots`
/// ('d' covariant, 'u' contravariant). The new slot comes first.
inline JetTensor covariant_derivative(const JetTensor& gamma, const JetTensor& t, std::string_view slots) {
  const int m = t.dim();
  const int r = t.rank();
  if (static_cast<int>(slots.size()) != r) throw InputError("covariant_derivative: slot pattern length mismatch");
  for (char c : slots)
    if (c != 'd' && c != 'u') throw InputError("covariant_derivative: slot pattern must use 'd' and 'u'");
  for (const auto& c : t.data())
    if (!c.is_constant() && c.order() < 1) throw InputError("covariant_derivative: insufficient jet order");
  JetTensor out = partials(t);
  const std::size_t n = t.size();
  std::vector<int> idx(static_cast<std::size_t>(r)), moved(static_cast<std::size_t>(r));
  for (int a = 0; a < m; ++a)
    for (std::size_t f = 0; f < n; ++f) {
      t.unflatten(f, idx);
      Jet& acc = out.data()[static_cast<std::size_t>(a) * n + f];
      for (int s = 0; s < r; ++s) {
        moved = idx;
        const int is = idx[static_cast<std::size_t>(s)];
        for (int q = 0; q < m; ++q) {
          moved[static_cast<std::size_t>(s)] = q;
          if (slots[static_cast<std::size_t>(s)] == 'd')
            acc.add_product(gamma(a, is, q), t.at(moved), -1.0);
          else
            acc.add_product(gamma(a, q, is), t.at(moved));
        }
      }
    }
  return out;
}

/// Exterior derivative of a p-form stored as a fully antisymmetric tensor:
/// (d w)_{a0..ap} = sum_k (-1)^k d_{a_k} w_{a0..^a_k..ap}.
inline JetTensor exterior_derivative(const JetTensor& form) {
  const int m = form.dim();
  const int p = form.rank();
  const JetTensor dw = partials(form);
  JetTensor out(m, p + 1);
  std::vector<int> idx(static_cast<std::size_t>(p + 1)), rest(static_cast<std::size_t>(p));
  for (std::size_t f = 0; f < out.size(); ++f) {
    out.unflatten(f, idx);
    Jet acc(0.0);
    for (int k = 0; k <= p; ++k) {
      int q = 0;
      for (int s = 0; s <= p; ++s)
        if (s != k) rest[static_cast<std::size_t>(q++)] = idx[static_cast<std::size_t>(s)];
      const Jet& term = dw.data()[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]) * form.size() + form.flat(rest)];
      if (k % 2 == 0)
        acc += term;
      else
        acc -= term;
    }
    out.data()[f] = std::move(acc);
  }
  return out;
}

/// Omega(i, j) = g(d_i, J d_j) = g_ia J_j^a.
template <class T>
Tensor<T> kahler_form_of(const Tensor<T>& g, const Tensor<T>& e) {
  return einsum<T>("ia,ja->ij", {&g, &e});
}

/// max |J^*g + sigma g|, zero exactly when g is (para)-Hermitian for J.
inline double compatibility_defect(const RealTensor& g, const RealTensor& e, StructureKind kind) {
  RealTensor d = pull_back(e, g) + g * square_sign(kind);
  return max_abs(d);
}

/// Everything at one point derived from metric jets of a fixed order.
class PointGeometry {
 public:
  PointGeometry(const Field& g, std::span<const double> p, int order)
      : PointGeometry(g.jets(p, order)) {}
  explicit PointGeometry(JetTensor g) : g_(std::move(g)) {
    ginv_ = inverse(g_);
    order_ = kMaxJetOrder;
    for (const auto& c : g_.data())
      if (!c.is_constant()) order_ = std::min(order_, c.order());
  }

  [[nodiscard]] int dim() const { return g_.dim(); }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] const JetTensor& metric() const { return g_; }
  [[nodiscard]] const JetTensor& inverse_metric() const { return ginv_; }

  [[nodiscard]] const JetTensor& christoffel() const {
    if (!gamma_) {
      require(1);
      gamma_ = christoffel_from_metric(g_, ginv_);
    }
    return *gamma_;
  }
  [[nodiscard]] const JetTensor& riemann_up() const {
    if (!rup_) {
      require(2);
      rup_ = curvature_from_connection(christoffel());
    }
    return *rup_;
  }
  [[nodiscard]] const JetTensor& riemann() const {
    if (!r_) r_ = einsum<Jet>("ijkn,nl->ijkl", {&riemann_up(), &g_});
    return *r_;
  }
  [[nodiscard]] const JetTensor& ricci() const {
    if (!ricci_) ricci_ = einsum<Jet>("il,ijkl->jk", {&ginv_, &riemann()});
    return *ricci_;
  }
  [[nodiscard]] Jet scalar() const {
    const JetTensor t = einsum<Jet>("jk,jk->", {&ginv_, &ricci()});
    return t.data()[0];
  }

  [[nodiscard]] JetTensor nabla(const JetTensor& t, std::string_view slots) const {
    return covariant_derivative(christoffel(), t, slots);
  }

 private:
  void require(int k) const {
    if (order_ < k) throw InputError("metric jets of order " + std::to_string(order_) + " are insufficient (need " +
                                     std::to_string(k) + ")");
  }

  JetTensor g_;
  JetTensor ginv_;
  int order_ = 0;
  mutable std::optional<JetTensor> gamma_, rup_, r_, ricci_;
};

// ---------------------------------------------------------------------------
// Value-level operations

inline RealTensor levi_civita(const MetricField& g, std::span<const double> p) {
  return values(PointGeometry(g.field, p, 1).christoffel());
}

struct CurvatureAtPoint {
  RealTensor r;
  Point point;
  [[nodiscard]] int dim() const { return r.dim(); }
};

inline CurvatureAtPoint riemann(const MetricField& g, std::span<const double> p) {
  return {values(PointGeometry(g.field, p, 2).riemann()), Point(p.begin(), p.end())};
}

struct CurvatureSymmetryDefects {
  double antisymmetry_first = 0.0;   // R_ijkl + R_jikl
  double antisymmetry_second = 0.0;  // R_ijkl + R_ijlk
  double bianchi = 0.0;              // R_ijkl + R_jkil + R_kijl
  double pair = 0.0;                 // R_ijkl - R_klij
  [[nodiscard]] double max() const { return std::max({antisymmetry_first, antisymmetry_second, bianchi, pair}); }
};

inline CurvatureSymmetryDefects curvature_symmetry_defects(const RealTensor& r) {
  CurvatureSymmetryDefects d;
  const int m = r.dim();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
          d.antisymmetry_first = std::max(d.antisymmetry_first, std::abs(r(i, j, k, l) + r(j, i, k, l)));
          d.antisymmetry_second = std::max(d.antisymmetry_second, std::abs(r(i, j, k, l) + r(i, j, l, k)));
          d.bianchi = std::max(d.bianchi, std::abs(r(i, j, k, l) + r(j, k, i, l) + r(k, i, j, l)));
          d.pair = std::max(d.pair, std::abs(r(i, j, k, l) - r(k, l, i, j)));
        }
  return d;
}

/// Quadratic contractions of curvature used by the identities.
template <class T>
struct RicciData {
  Tensor<T> rho;
  T tau{};
  T norm_r2{};    // R_ijkl R^ijkl
  T norm_rho2{};  // rho_ij rho^ij
  Tensor<T> r_check;    // R_abci R^abc_j
  Tensor<T> rho_check;  // rho_ai rho^a_j
  Tensor<T> l_rho;      // 2 R_iabj rho^ab
};

template <class T>
RicciData<T> ricci_data(const Tensor<T>& r, const Tensor<T>& ginv) {
  RicciData<T> d;
  d.rho = einsum<T>("il,ijkl->jk", {&ginv, &r});
  d.tau = einsum<T>("jk,jk->", {&ginv, &d.rho}).data()[0];
  const Tensor<T> r_up = einsum<T>("ap,bq,cs,dt,pqst->abcd", {&ginv, &ginv, &ginv, &ginv, &r});
  d.norm_r2 = einsum<T>("abcd,abcd->", {&r, &r_up}).data()[0];
  const Tensor<T> rho_up = einsum<T>("ap,bq,pq->ab", {&ginv, &ginv, &d.rho});
  d.norm_rho2 = einsum<T>("ab,ab->", {&d.rho, &rho_up}).data()[0];
  const Tensor<T> r_up3 = einsum<T>("ap,bq,cs,pqsj->abcj", {&ginv, &ginv, &ginv, &r});
  d.r_check = einsum<T>("abci,abcj->ij", {&r, &r_up3});
  const Tensor<T> rho_mixed = einsum<T>("ap,pj->aj", {&ginv, &d.rho});
  d.rho_check = einsum<T>("ai,aj->ij", {&d.rho, &rho_mixed});
  d.l_rho = einsum<T>("iabj,ab->ij", {&r, &rho_up});
  d.l_rho *= 2.0;
  return d;
}

/// Sign of the trace formula for rho* fixed so that rho* = rho on Kahler
/// structures (both kinds).
inline double star_ricci_sign(StructureKind kind) { return kind == StructureKind::complex ? 1.0 : -1.0; }

/// rho*_ij = (s/2) tr(Z -> R(d_i, J d_j) J Z) = (s/2) J_j^c J_b^k R_ick^b.
template <class T>
Tensor<T> star_ricci_tensor(const Tensor<T>& r_up, const Tensor<T>& e, StructureKind kind) {
  Tensor<T> s = einsum<T>("jc,bk,ickb->ij", {&e, &e, &r_up});
  s *= 0.5 * star_ricci_sign(kind);
  return s;
}

struct StarRicciData {
  RealTensor rho_star;
  double tau_star = 0.0;
};

inline void require_compatible(const RealTensor& g, const RealTensor& e, StructureKind kind, double tol = 1e-8) {
  const double d = compatibility_defect(g, e, kind);
  if (d > tol * std::max(1.0, max_abs(g)))
    throw PreconditionError("metric and structure are not " +
                            std::string(kind == StructureKind::para ? "para-Hermitian" : "Hermitian") +
                            " at the point (defect " + std::to_string(d) + ")");
}

inline StarRicciData star_ricci(const MetricField& g, const EndoField& j, std::span<const double> p) {
  const PointGeometry geo(g.field, p, 2);
  const RealTensor e = j.field.values(p);
  require_compatible(values(geo.metric()), e, j.kind);
  StarRicciData d;
  d.rho_star = star_ricci_tensor(values(geo.riemann_up()), e, j.kind);
  const RealTensor ginv = values(geo.inverse_metric());
  d.tau_star = einsum<double>("ij,ij->", {&ginv, &d.rho_star}).data()[0];
  return d;
}

/// max |R_ijkl + sigma R_ijab J_k^a J_l^b|: zero for Kahler curvature.
template <class T>
double kahler_symmetry_defect_of(const Tensor<T>& r, const Tensor<T>& e, StructureKind kind) {
  Tensor<T> rj = einsum<T>("ijab,ka,lb->ijkl", {&r, &e, &e});
  rj *= square_sign(kind);
  return max_abs(r + rj);
}

inline double kahler_symmetry_defect(const MetricField& g, const EndoField& j, std::span<const double> p) {
  const RealTensor r = values(PointGeometry(g.field, p, 2).riemann());
  return kahler_symmetry_defect_of(r, j.field.values(p), j.kind);
}

inline RealTensor kahler_form(const MetricField& g, const EndoField& j, std::span<const double> p) {
  const RealTensor gv = g.field.values(p);
  const RealTensor e = j.field.values(p);
  require_compatible(gv, e, j.kind);
  return kahler_form_of(gv, e);
}

/// The Kahler form as a 2-form field.
inline Field kahler_form_field(const MetricField& g, const EndoField& j) {
  return Field(
      g.field.dim(), Valence{2, 0},
      [gf = g.field, jf = j.field](std::span<const double> p, int order) {
        const JetTensor gj = gf.jets(p, order);
        const JetTensor ej = jf.jets(p, order);
        return kahler_form_of(gj, ej);
      },
      antisymmetric_pair());
}

inline RealTensor exterior_derivative(const Field& form, std::span<const double> p) {
  return values(exterior_derivative(form.jets(p, 1)));
}

/// (delta w)_{i...} = -g^ab (nabla w)_{a b i...}; delta d f = -Laplacian f.
inline JetTensor codifferential_jets(const PointGeometry& geo, const JetTensor& form) {
  const int p = form.rank();
  if (p < 1) throw InputError("codifferential of a 0-form");
  const JetTensor nw = geo.nabla(form, std::string(static_cast<std::size_t>(p), 'd'));
  const int m = form.dim();
  JetTensor out(m, p - 1);
  const std::size_t tail = out.size();
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const Jet& gab = geo.inverse_metric()(a, b);
      const std::size_t base = (static_cast<std::size_t>(a) * m + static_cast<std::size_t>(b)) * tail;
      for (std::size_t f = 0; f < tail; ++f) out.data()[f].add_product(gab, nw.data()[base + f], -1.0);
    }
  return out;
}

inline RealTensor codifferential(const Field& form, const MetricField& g, std::span<const double> p) {
  const PointGeometry geo(g.field, p, 1);
  return values(codifferential_jets(geo, form.jets(p, 1)));
}

/// N(d_i, d_j) = [X,Y] - s J[JX,Y] - s J[X,JY] + s [JX,JY] with s = +1 (para)
/// or -1 (complex), stored as N(i, j, c) = N_ij^c.
inline JetTensor nijenhuis_jets(const JetTensor& e, StructureKind kind) {
  const int m = e.dim();
  const double s = square_sign(kind);
  const JetTensor de = partials(e);  // (a, i, b) = d_a J_i^b
  JetTensor n(m, 3);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int c = 0; c < m; ++c) {
        Jet acc(0.0);
        for (int a = 0; a < m; ++a) {
          // J[J d_i, d_j] = -(d_j J_i^a) J_a^c ; J[d_i, J d_j] = (d_i J_j^a) J_a^c
          acc.add_product(de(j, i, a), e(a, c), s);
          acc.add_product(de(i, j, a), e(a, c), -s);
          // [J d_i, J d_j] = J_i^a d_a J_j^c - J_j^a d_a J_i^c
          acc.add_product(e(i, a), de(a, j, c), s);
          acc.add_product(e(j, a), de(a, i, c), -s);
        }
        n(i, j, c) = std::move(acc);
      }
  return n;
}

inline RealTensor nijenhuis(const EndoField& j, std::span<const double> p) {
  if (endo_defect_at(j.field, j.kind, p) > 1e-10)
    throw PreconditionError("nijenhuis: J does not square to " + std::string(j.kind == StructureKind::para ? "+" : "-") +
                            "Id at the point");
  return values(nijenhuis_jets(j.field.jets(p, 1), j.kind));
}

/// Outcomes of the three equivalent Kahler criteria at a set of points.
struct KahlerCriteria {
  double nabla_omega = 0.0;
  double nabla_j = 0.0;
  double nijenhuis = 0.0;
  double d_omega = 0.0;
  bool parallel_omega = false;
  bool parallel_j = false;
  bool integrable_closed = false;
  [[nodiscard]] bool agree() const {
    return parallel_omega == parallel_j && parallel_j == integrable_closed;
  }
};

inline KahlerCriteria kahler_criteria(const MetricField& g, const EndoField& j, std::span<const Point> points,
                                      double tol = 1e-8) {
  KahlerCriteria c;
  for (const auto& p : points) {
    const PointGeometry geo(g.field, p, 1);
    const JetTensor e = j.field.jets(p, 1);
    const JetTensor omega = kahler_form_of(geo.metric(), e);
    c.nabla_omega = std::max(c.nabla_omega, max_abs(values(geo.nabla(omega, "dd"))));
    c.nabla_j = std::max(c.nabla_j, max_abs(values(geo.nabla(e, "du"))));
    c.nijenhuis = std::max(c.nijenhuis, max_abs(values(nijenhuis_jets(e, j.kind))));
    c.d_omega = std::max(c.d_omega, max_abs(values(exterior_derivative(omega))));
  }
  c.parallel_omega = c.nabla_omega <= tol;
  c.parallel_j = c.nabla_j <= tol;
  c.integrable_closed = c.nijenhuis <= tol && c.d_omega <= tol;
  return c;
}

}  // namespace germforge
