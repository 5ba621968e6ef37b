#pragma once

// Pointwise universal curvature identities in dimension 4: Berger's
// quadratic identity, Gray's identity for almost Hermitian structures, the
// Pontrjagin (T, S) and Chern (U, V) identities and the two Kahler identities.
//
// Residuals are max-abs over free indices divided by 1 + the largest
// component of any contributing term.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "germforge/curvature.hpp"
#include "germforge/field.hpp"
#include "germforge/parallel.hpp"
#include "germforge/report.hpp"

namespace germforge {

struct NamedTerm {
  std::string name;
  RealTensor value;
};

/// Sum of terms together with the relative scale used for residuals.
struct TermSum {
  RealTensor total;
  double scale = 1.0;
};

inline TermSum sum_terms(const std::vector<NamedTerm>& terms) {
  if (terms.empty()) throw InputError("sum_terms: no terms");
  TermSum s{terms.front().value * 0.0, 1.0};
  double big = 0.0;
  for (const auto& t : terms) {
    s.total += t.value;
    big = std::max(big, max_abs(t.value));
  }
  s.scale = 1.0 + big;
  return s;
}

namespace detail {

inline void require_dimension_four(int m, const char* what) {
  if (m != 4) throw PreconditionError(std::string(what) + " requires dimension 4, got " + std::to_string(m));
}

inline void require_complex(const EndoField& j, const char* what) {
  if (j.kind != StructureKind::complex)
    throw PreconditionError(std::string(what) + " is stated for almost Hermitian (complex) structures");
}

inline RealTensor j_conjugate(const RealTensor& x, const RealTensor& e) {
  return einsum<double>("ia,jb,ab->ij", {&e, &e, &x});
}

inline RealTensor antisymmetrized_sum(const RealTensor& x, double sign) {
  return (x + transposed(x) * sign) * 0.5;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Berger

inline std::vector<NamedTerm> berger_terms(const RealTensor& g, const RealTensor& ginv, const RealTensor& r) {
  const RicciData<double> d = ricci_data(r, ginv);
  return {
      {"quarter_norms_g", g * (0.25 * (d.norm_r2 - 4.0 * d.norm_rho2 + d.tau * d.tau))},
      {"minus_r_check", d.r_check * -1.0},
      {"two_rho_check", d.rho_check * 2.0},
      {"l_rho", d.l_rho},
      {"minus_tau_rho", d.rho * -d.tau},
  };
}

struct IdentityValue {
  RealTensor residual;
  double scale = 1.0;
  [[nodiscard]] double relative() const { return max_abs(residual) / scale; }
};

/// (1/4)(|R|^2 - 4|rho|^2 + tau^2) g - R_check + 2 rho_check + L rho - tau rho.
inline IdentityValue berger_residual(const MetricField& g, std::span<const double> p) {
  detail::require_dimension_four(g.field.dim(), "berger_residual");
  const PointGeometry geo(g.field, p, 2);
  const TermSum s = sum_terms(berger_terms(values(geo.metric()), values(geo.inverse_metric()), values(geo.riemann())));
  return {s.total, s.scale};
}

// ---------------------------------------------------------------------------
// Pointwise data of an almost (para-)Hermitian structure

/// Jets of the metric, structure and curvature at a point. Jet fields have
/// order 2 (values when order 0 is requested); covariant derivatives of
/// composite expressions are taken on these jets.
class HermitianPoint {
 public:
  HermitianPoint(const MetricField& g, const EndoField& j, std::span<const double> p, int order = 2)
      : kind_(j.kind), order_(order) {
    if (j.field.dim() != g.field.dim()) throw InputError("metric and structure dimensions differ");
    const PointGeometry geo(g.field, p, order + 2);
    const RealTensor gv = values(geo.metric());
    const RealTensor ev = j.field.values(p);
    require_compatible(gv, ev, kind_);
    g_ = truncated(geo.metric(), order);
    ginv_ = truncated(geo.inverse_metric(), order);
    gamma_ = truncated(geo.christoffel(), order);
    rup_ = truncated(geo.riemann_up(), order);
    r_ = truncated(geo.riemann(), order);
    const JetTensor e1 = j.field.jets(p, order + 1);
    e_ = truncated(e1, order);
    dj_ = covariant_derivative(geo.christoffel(), e1, "du");
    rho_star_ = star_ricci_tensor(rup_, e_, kind_);
    tau_star_ = einsum<Jet>("ij,ij->", {&ginv_, &rho_star_}).data()[0];
  }

  [[nodiscard]] int dim() const { return g_.dim(); }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] StructureKind kind() const { return kind_; }
  [[nodiscard]] const JetTensor& g() const { return g_; }
  [[nodiscard]] const JetTensor& ginv() const { return ginv_; }
  [[nodiscard]] const JetTensor& gamma() const { return gamma_; }
  /// R_ijk^l
  [[nodiscard]] const JetTensor& r_up() const { return rup_; }
  /// R_ijkl
  [[nodiscard]] const JetTensor& r() const { return r_; }
  /// J_i^j
  [[nodiscard]] const JetTensor& e() const { return e_; }
  /// nabla_w J_a^b
  [[nodiscard]] const JetTensor& dj() const { return dj_; }
  [[nodiscard]] const JetTensor& rho_star() const { return rho_star_; }
  [[nodiscard]] const Jet& tau_star() const { return tau_star_; }

  /// Second covariant derivative of a composite tensor: slots (outer, inner, ...).
  [[nodiscard]] RealTensor nabla2(const JetTensor& x, std::string_view slots) const {
    const JetTensor d1 = covariant_derivative(gamma_, x, slots);
    const std::string s2 = "d" + std::string(slots);
    return values(covariant_derivative(gamma_, d1, s2));
  }
  [[nodiscard]] RealTensor nabla1(const JetTensor& x, std::string_view slots) const {
    return values(covariant_derivative(gamma_, x, slots));
  }

 private:
  StructureKind kind_;
  int order_;
  JetTensor g_, ginv_, gamma_, rup_, r_, e_, dj_, rho_star_;
  Jet tau_star_;
};

/// Index placements used by the transcribed formulas, at jet level.
struct HermitianTensors {
  JetTensor g, ginv, e;
  JetTensor j_uu;      // J^{ab} = g^{a c} J_c^b
  JetTensor j_dd;      // J_{ab} = J_a^c g_{cb}
  JetTensor rs;        // rho*_ab
  JetTensor rs_uu;     // rho*^{ab}
  JetTensor rs_du;     // rho*_a^b
  JetTensor rs_ud;     // rho*^a_b
  Jet ts;              // tau*
  JetTensor rup;       // R_abk^l
  JetTensor r;         // R_abcd
  JetTensor r_uuud;    // R^{ab}_c^d
  JetTensor r_uddu;    // R^a_bc^d
  JetTensor r_uddd;    // R^a_bcd
  JetTensor dj;        // nabla_w J_a^b
  JetTensor dj_uu;     // nabla_w J^{ab}
  JetTensor a;         // A(c, d) = (nabla_c J_a^b)(nabla_d J_u^a) J_b^u
  JetTensor a_ud;      // A with first slot raised
  JetTensor a_du;      // A with second slot raised
  JetTensor a_uu;
  Jet kappa;           // A(c, u) J^{cu}

  explicit HermitianTensors(const HermitianPoint& h) {
    g = h.g();
    ginv = h.ginv();
    e = h.e();
    j_uu = einsum<Jet>("ac,cb->ab", {&ginv, &e});
    j_dd = einsum<Jet>("ac,cb->ab", {&e, &g});
    rs = h.rho_star();
    rs_du = einsum<Jet>("ac,cb->ab", {&rs, &ginv});
    rs_ud = einsum<Jet>("ac,cb->ab", {&ginv, &rs});
    rs_uu = einsum<Jet>("ac,cb->ab", {&rs_ud, &ginv});
    ts = h.tau_star();
    rup = h.r_up();
    r = h.r();
    r_uddu = einsum<Jet>("ap,pbcd->abcd", {&ginv, &rup});
    r_uuud = einsum<Jet>("bq,aqcd->abcd", {&ginv, &r_uddu});
    r_uddd = einsum<Jet>("ap,pbcd->abcd", {&ginv, &r});
    dj = h.dj();
    dj_uu = einsum<Jet>("ac,wcb->wab", {&ginv, &dj});
    const JetTensor dje = einsum<Jet>("dua,bu->dab", {&dj, &e});
    a = einsum<Jet>("cab,dab->cd", {&dj, &dje});
    a_ud = einsum<Jet>("pc,cd->pd", {&ginv, &a});
    a_du = einsum<Jet>("cd,dq->cq", {&a, &ginv});
    a_uu = einsum<Jet>("pc,cq->pq", {&ginv, &a_du});
    kappa = einsum<Jet>("cu,cu->", {&a, &j_uu}).data()[0];
  }
};

/// Values of HermitianTensors.
struct HermitianValues {
  RealTensor g, ginv, e, j_uu, j_dd, rs, rs_uu, rs_du, rs_ud, rup, r, r_uuud, r_uddu, r_uddd, dj, dj_uu, a, a_ud, a_du, a_uu;
  double ts = 0.0, kappa = 0.0;

  explicit HermitianValues(const HermitianTensors& t)
      : g(values(t.g)), ginv(values(t.ginv)), e(values(t.e)), j_uu(values(t.j_uu)), j_dd(values(t.j_dd)),
        rs(values(t.rs)), rs_uu(values(t.rs_uu)), rs_du(values(t.rs_du)), rs_ud(values(t.rs_ud)),
        rup(values(t.rup)), r(values(t.r)), r_uuud(values(t.r_uuud)), r_uddu(values(t.r_uddu)),
        r_uddd(values(t.r_uddd)), dj(values(t.dj)),
        dj_uu(values(t.dj_uu)), a(values(t.a)), a_ud(values(t.a_ud)), a_du(values(t.a_du)), a_uu(values(t.a_uu)),
        ts(t.ts.value()), kappa(t.kappa.value()) {}
};

// ---------------------------------------------------------------------------
// Gray

inline std::vector<NamedTerm> gray_terms(const HermitianValues& v) {
  const RealTensor rho = einsum<double>("il,ijkl->jk", {&v.ginv, &v.r});
  const double tau = einsum<double>("jk,jk->", {&v.ginv, &rho}).data()[0];
  const double tau_star = einsum<double>("jk,jk->", {&v.ginv, &v.rs}).data()[0];
  return {
      {"rho_star", v.rs},
      {"rho_star_transposed", transposed(v.rs)},
      {"minus_rho", rho * -1.0},
      {"minus_j_rho", detail::j_conjugate(rho, v.e) * -1.0},
      {"trace_g", v.g * (-0.5 * (tau_star - tau))},
  };
}

/// rho*_ij + rho*_ji - rho_ij - J_i^a J_j^b rho_ab - ((tau* - tau)/2) g_ij.
inline IdentityValue gray_residual(const MetricField& g, const EndoField& j, std::span<const double> p) {
  detail::require_dimension_four(g.field.dim(), "gray_residual");
  detail::require_complex(j, "gray_residual");
  const HermitianPoint h(g, j, p, 0);
  const TermSum s = sum_terms(gray_terms(HermitianValues(HermitianTensors(h))));
  return {s.total, s.scale};
}

// ---------------------------------------------------------------------------
// Pontrjagin identities: T'_ij and S'_ij term by term.

inline std::vector<NamedTerm> t_prime_terms(const HermitianPoint& h, const HermitianTensors& t, const HermitianValues& v,
                                            double joining_sign) {
  std::vector<NamedTerm> out;
  // 2 rho*^a_j rho*_ai
  out.push_back({"t1_rho_star_sq", einsum<double>("aj,ai->ij", {&v.rs_ud, &v.rs}) * 2.0});
  // -2 rho*_ja rho*_i^a
  out.push_back({"t2_rho_star_sq", einsum<double>("ja,ia->ij", {&v.rs, &v.rs_du}) * -2.0});
  // 2 rho*^ab R_auvi J_b^u J_j^v
  {
    const RealTensor x = einsum<double>("ab,bu,auvi->vi", {&v.rs_uu, &v.e, &v.r});
    out.push_back({"t3_rho_star_r", einsum<double>("jv,vi->ij", {&v.e, &x}) * 2.0});
  }
  // 4 nabla_b nabla_a (rho*^ac J_i^b J_cj)
  {
    const JetTensor x = einsum<Jet>("ac,ib,cj->aibj", {&t.rs_uu, &t.e, &t.j_dd});
    const RealTensor n = h.nabla2(x, "udud");
    out.push_back({"t4_nabla_nabla_rho_star", einsum<double>("baaibj->ij", {&n}) * 4.0});
  }
  // rho*^ab rho*_ab g_ij
  {
    const double s = einsum<double>("ab,ab->", {&v.rs_uu, &v.rs}).data()[0];
    out.push_back({"t5_rho_star_norm", v.g * s});
  }
  // joining sign * 4 J_j^a J^ub R_abk^l R_iul^k
  {
    const RealTensor x = einsum<double>("ub,abkl->aukl", {&v.j_uu, &v.rup});
    const RealTensor y = einsum<double>("ja,aukl->jukl", {&v.e, &x});
    out.push_back({"t6_j_r_r", einsum<double>("jukl,iulk->ij", {&y, &v.rup}) * (4.0 * joining_sign)});
  }
  // 4 nabla_b nabla_a (J_u^a J_vi R^uv_j^b)
  {
    const JetTensor x = einsum<Jet>("ua,vi,uvjb->aijb", {&t.e, &t.j_dd, &t.r_uuud});
    const RealTensor n = h.nabla2(x, "uddu");
    out.push_back({"t7_nabla_nabla_j_r", einsum<double>("baaijb->ij", {&n}) * 4.0});
  }
  // (1/2) J^ua J^vb R_abk^l R_uvl^k g_ij
  {
    const RealTensor x = einsum<double>("ua,vb,abkl->uvkl", {&v.j_uu, &v.j_uu, &v.rup});
    const double s = einsum<double>("uvkl,uvlk->", {&x, &v.rup}).data()[0];
    out.push_back({"t8_j_r_r_trace", v.g * (0.5 * s)});
  }
  return out;
}

inline std::vector<NamedTerm> s_prime_terms(const HermitianValues& v) {
  std::vector<NamedTerm> out;
  // 4 rho*^ab J_bj rho*_ai
  out.push_back({"s1_rho_star_j_rho_star", einsum<double>("ab,bj,ai->ij", {&v.rs_uu, &v.j_dd, &v.rs}) * 4.0});
  // -2 rho*^ab J_b^c J_i^u J_j^v R_acuv
  {
    const RealTensor x = einsum<double>("ab,bc,acuv->uv", {&v.rs_uu, &v.e, &v.r});
    out.push_back({"s2_rho_star_r", detail::j_conjugate(x, v.e) * -2.0});
  }
  // -2 J^ua R_jak^l R_iul^k
  {
    const RealTensor x = einsum<double>("ua,jakl->ujkl", {&v.j_uu, &v.rup});
    out.push_back({"s3_j_r_r", einsum<double>("ujkl,iulk->ij", {&x, &v.rup}) * -2.0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chern identities: U'^ij and V'^pq term by term (contravariant).

inline std::vector<NamedTerm> u_prime_terms(const HermitianPoint& h, const HermitianTensors& t, const HermitianValues& v) {
  std::vector<NamedTerm> out;
  // J^iv rho*_v^w A(w, j)
  out.push_back({"u1", einsum<double>("iv,vw,wj->ij", {&v.j_uu, &v.rs_du, &v.a_du})});
  // J^wi rho*^jc A(c, w)
  out.push_back({"u2", einsum<double>("wi,jc,cw->ij", {&v.j_uu, &v.rs_uu, &v.a})});
  // 4 nabla_u (J^cv rho*_v^i nabla_c J^ju)
  {
    const JetTensor x = einsum<Jet>("cv,vi,cju->iju", {&t.j_uu, &t.rs_du, &t.dj_uu});
    const RealTensor n = h.nabla1(x, "uuu");
    out.push_back({"u3_nabla", einsum<double>("uiju->ij", {&n}) * 4.0});
  }
  // (1/2) J^cv R_vws^i J^dw J^sj A(d, c)
  {
    const RealTensor x = einsum<double>("cv,dc,dw->vw", {&v.j_uu, &v.a, &v.j_uu});
    const RealTensor y = einsum<double>("vw,vwsi->si", {&x, &v.rup});
    out.push_back({"u4", einsum<double>("si,sj->ij", {&y, &v.j_uu}) * 0.5});
  }
  // -nabla_s nabla_c (J^dj J^si J_k^c A(k^, d))
  {
    const JetTensor kd = einsum<Jet>("kc,kd->cd", {&t.e, &t.a_ud});
    const JetTensor x = einsum<Jet>("cd,dj,si->csij", {&kd, &t.j_uu, &t.j_uu});
    const RealTensor n = h.nabla2(x, "uuuu");
    out.push_back({"u5_nabla_nabla", einsum<double>("sccsij->ij", {&n}) * -1.0});
  }
  // -3 J^cv rho*_v^d (nabla_d J_a^i)(nabla_c J^jw) J_w^a
  {
    const RealTensor x = einsum<double>("cv,vd->cd", {&v.j_uu, &v.rs_du});
    const RealTensor y = einsum<double>("cjw,wa->cja", {&v.dj_uu, &v.e});
    const RealTensor z = einsum<double>("cd,dai->cai", {&x, &v.dj});
    out.push_back({"u6", einsum<double>("cai,cja->ij", {&z, &y}) * -3.0});
  }
  // -(1/2) J^cv rho*_v^d A(d, c) g^ij
  {
    const double s = einsum<double>("cv,vd,dc->", {&v.j_uu, &v.rs_du, &v.a}).data()[0];
    out.push_back({"u7", v.ginv * (-0.5 * s)});
  }
  // -(1/2) rho*^ij kappa
  out.push_back({"u8", v.rs_uu * (-0.5 * v.kappa)});
  // (1/2) nabla_l nabla_k (J^ik J^jl kappa)
  {
    const JetTensor x = einsum<Jet>("ik,jl->klij", {&t.j_uu, &t.j_uu});
    JetTensor xk = x;
    for (auto& c : xk.data()) c = c * t.kappa;
    const RealTensor n = h.nabla2(xk, "uuuu");
    out.push_back({"u9_nabla_nabla", einsum<double>("lkklij->ij", {&n}) * 0.5});
  }
  // 2 nabla_c (tau* (nabla_u J^jc) J^iu)
  {
    JetTensor x = einsum<Jet>("ujc,iu->cij", {&t.dj_uu, &t.j_uu});
    for (auto& c : x.data()) c = c * t.ts;
    const RealTensor n = h.nabla1(x, "uuu");
    out.push_back({"u10_nabla", einsum<double>("ccij->ij", {&n}) * 2.0});
  }
  // (3/2) tau* (nabla_c J^jb)(nabla_u J_v^i) J_b^v J^cu
  {
    const RealTensor x = einsum<double>("cjb,bv->cjv", {&v.dj_uu, &v.e});
    const RealTensor y = einsum<double>("cu,uvi->cvi", {&v.j_uu, &v.dj});
    out.push_back({"u11", einsum<double>("cjv,cvi->ij", {&x, &y}) * (1.5 * v.ts)});
  }
  // tau* A(j^, u) J^iu
  out.push_back({"u12", einsum<double>("ju,iu->ij", {&v.a_ud, &v.j_uu}) * v.ts});
  // -(1/4) tau* kappa g^ij
  out.push_back({"u13", v.ginv * (-0.25 * v.ts * v.kappa)});
  // 2 rho*_lk R^k_ab^i J^la J^bj
  {
    const RealTensor x = einsum<double>("lk,la,kabi->bi", {&v.rs, &v.j_uu, &v.r_uddu});
    out.push_back({"u14", einsum<double>("bi,bj->ij", {&x, &v.j_uu}) * 2.0});
  }
  // 4 nabla_a nabla^l (rho*_kl J^ai J^kj)
  {
    const JetTensor x = einsum<Jet>("kl,ai,kj->alij", {&t.rs, &t.j_uu, &t.j_uu});
    const RealTensor n = h.nabla2(x, "uduu");
    out.push_back({"u15_nabla_nabla", einsum<double>("abalij,bl->ij", {&n, &v.ginv}) * 4.0});
  }
  // -rho*^ab rho*_ba g^ij
  {
    const double s = einsum<double>("ab,ba->", {&v.rs_uu, &v.rs}).data()[0];
    out.push_back({"u16", v.ginv * -s});
  }
  // 2 tau* rho*^ij
  out.push_back({"u17", v.rs_uu * (2.0 * v.ts)});
  // -2 nabla_b nabla_a (tau* J^ia J^jb)
  {
    JetTensor x = einsum<Jet>("ia,jb->abij", {&t.j_uu, &t.j_uu});
    for (auto& c : x.data()) c = c * t.ts;
    const RealTensor n = h.nabla2(x, "uuuu");
    out.push_back({"u18_nabla_nabla", einsum<double>("baabij->ij", {&n}) * -2.0});
  }
  // (1/2) tau*^2 g^ij
  out.push_back({"u19", v.ginv * (0.5 * v.ts * v.ts)});
  return out;
}

inline std::vector<NamedTerm> v_prime_terms(const HermitianPoint& h, const HermitianTensors& t, const HermitianValues& v) {
  std::vector<NamedTerm> out;
  // -J^jv J^iq rho*_v^p A(i, j)
  {
    const RealTensor x = einsum<double>("jv,vp,ij->ip", {&v.j_uu, &v.rs_du, &v.a});
    out.push_back({"v1", einsum<double>("ip,iq->pq", {&x, &v.j_uu}) * -1.0});
  }
  // (1/2) J^jv J^iw J^pc J^qd R_vwcd A(i, j)
  {
    const RealTensor x = einsum<double>("jv,iw,ij->vw", {&v.j_uu, &v.j_uu, &v.a});
    const RealTensor y = einsum<double>("vw,vwcd->cd", {&x, &v.r});
    out.push_back({"v2", einsum<double>("pc,qd,cd->pq", {&v.j_uu, &v.j_uu, &y}) * 0.5});
  }
  // -2 nabla_i (J^jv rho*_v^i (nabla_j J_w^p) J^qw)
  {
    const JetTensor x = einsum<Jet>("jv,vi,jwp,qw->ipq", {&t.j_uu, &t.rs_du, &t.dj, &t.j_uu});
    const RealTensor n = h.nabla1(x, "uuu");
    out.push_back({"v3_nabla", einsum<double>("iipq->pq", {&n}) * -2.0});
  }
  // rho*^qi A(i, p^)
  out.push_back({"v4", einsum<double>("qi,ip->pq", {&v.rs_uu, &v.a_du})});
  // J^jv rho*_v^i (nabla_i J_a^p)(nabla_j J^qa)
  {
    const RealTensor x = einsum<double>("jv,vi->ji", {&v.j_uu, &v.rs_du});
    const RealTensor y = einsum<double>("ji,iap->jap", {&x, &v.dj});
    out.push_back({"v5", einsum<double>("jap,jqa->pq", {&y, &v.dj_uu})});
  }
  // J^ip rho*_i^q kappa
  out.push_back({"v6", einsum<double>("ip,iq->pq", {&v.j_uu, &v.rs_du}) * v.kappa});
  // (1/2) tau* (nabla_c J_a^p)(nabla_u J^qa) J^cu
  {
    const RealTensor x = einsum<double>("cu,cap->uap", {&v.j_uu, &v.dj});
    out.push_back({"v7", einsum<double>("uap,uqa->pq", {&x, &v.dj_uu}) * (0.5 * v.ts)});
  }
  // (1/2) tau* A(p^, q^)
  out.push_back({"v8", v.a_uu * (0.5 * v.ts)});
  // -nabla_u (tau* (nabla_c J^qb) J_b^p J^cu)
  {
    JetTensor x = einsum<Jet>("cqb,bp,cu->upq", {&t.dj_uu, &t.e, &t.j_uu});
    for (auto& c : x.data()) c = c * t.ts;
    const RealTensor n = h.nabla1(x, "uuu");
    out.push_back({"v9_nabla", einsum<double>("uupq->pq", {&n}) * -1.0});
  }
  // -4 J^lq rho*_lk rho*^kp
  out.push_back({"v10", einsum<double>("lq,lk,kp->pq", {&v.j_uu, &v.rs, &v.rs_uu}) * -4.0});
  // 2 rho*_lk J^lc J^pa J^qb R^k_cab
  {
    const RealTensor x = einsum<double>("lk,lc,kcab->ab", {&v.rs, &v.j_uu, &v.r_uddd});
    out.push_back({"v11", einsum<double>("pa,qb,ab->pq", {&v.j_uu, &v.j_uu, &x}) * 2.0});
  }
  // -4 tau* J^ap rho*_a^q
  out.push_back({"v12", einsum<double>("ap,aq->pq", {&v.j_uu, &v.rs_du}) * (-4.0 * v.ts)});
  return out;
}

/// Three residual tensors of a pair of identities X_ij = X_ab J_i^a J_j^b,
/// Y_ij = Y_ab J_i^a J_j^b, X_ib J_j^b + Y_ij = 0.
struct PairIdentityValue {
  RealTensor x, y;
  IdentityValue x_invariance, y_invariance, joint;
  [[nodiscard]] double relative() const {
    return std::max({x_invariance.relative(), y_invariance.relative(), joint.relative()});
  }
};

inline PairIdentityValue pair_identity(const RealTensor& x, const RealTensor& y, const RealTensor& e, double scale) {
  PairIdentityValue out;
  out.x = x;
  out.y = y;
  out.x_invariance = {x - detail::j_conjugate(x, e), scale};
  out.y_invariance = {y - detail::j_conjugate(y, e), scale};
  out.joint = {einsum<double>("ib,jb->ij", {&x, &e}) + y, scale};
  return out;
}

inline double terms_scale(const std::vector<NamedTerm>& a, const std::vector<NamedTerm>& b) {
  double big = 0.0;
  for (const auto* ts : {&a, &b})
    for (const auto& t : *ts) big = std::max(big, max_abs(t.value));
  return 1.0 + big;
}

/// Sign joining the two blocks of T'; the identities hold with -1 and fail
/// with +1 on both Kahler and non-Kahler inputs.
inline constexpr double kPontrjaginJoiningSign = -1.0;

inline PairIdentityValue pontrjagin_residuals(const MetricField& g, const EndoField& j, std::span<const double> p,
                                              double joining_sign = kPontrjaginJoiningSign) {
  detail::require_dimension_four(g.field.dim(), "pontrjagin_residuals");
  detail::require_complex(j, "pontrjagin_residuals");
  const HermitianPoint h(g, j, p, 2);
  const HermitianTensors t(h);
  const HermitianValues v(t);
  const auto tt = t_prime_terms(h, t, v, joining_sign);
  const auto st = s_prime_terms(v);
  const RealTensor tp = sum_terms(tt).total;
  const RealTensor sp = sum_terms(st).total;
  return pair_identity(detail::antisymmetrized_sum(tp, 1.0), detail::antisymmetrized_sum(sp, -1.0), v.e,
                       terms_scale(tt, st));
}

inline PairIdentityValue chern_residuals(const MetricField& g, const EndoField& j, std::span<const double> p) {
  detail::require_dimension_four(g.field.dim(), "chern_residuals");
  detail::require_complex(j, "chern_residuals");
  const HermitianPoint h(g, j, p, 2);
  const HermitianTensors t(h);
  const HermitianValues v(t);
  const auto ut = u_prime_terms(h, t, v);
  const auto vt = v_prime_terms(h, t, v);
  const RealTensor up = detail::antisymmetrized_sum(sum_terms(ut).total, 1.0);
  const RealTensor vp = detail::antisymmetrized_sum(sum_terms(vt).total, -1.0);
  const RealTensor u = einsum<double>("ia,jb,ab->ij", {&v.g, &v.g, &up});
  const RealTensor w = einsum<double>("ia,jb,ab->ij", {&v.g, &v.g, &vp});
  return pair_identity(u, w, v.e, terms_scale(ut, vt));
}

// ---------------------------------------------------------------------------
// Kahler identities

struct KahlerIdentityValue {
  IdentityValue first, second;
  [[nodiscard]] double relative() const { return std::max(first.relative(), second.relative()); }
};

inline constexpr double kKahlerInputTolerance = 1e-8;

/// 2 rho_check - tau rho - (1/2)(|rho|^2 - tau^2/2) g and
/// 2 L rho - 8 rho_check + 2 tau rho + (1/2)(2|rho|^2 - tau^2) g.
inline KahlerIdentityValue kahler_identity_residuals(const MetricField& g, const EndoField& j,
                                                     std::span<const double> p) {
  detail::require_dimension_four(g.field.dim(), "kahler_identity_residuals");
  const PointGeometry geo(g.field, p, 2);
  const RealTensor gv = values(geo.metric());
  const JetTensor ej = j.field.jets(p, 1);
  const RealTensor ev = values(ej);
  require_compatible(gv, ev, j.kind);
  const double nabla_j = max_abs(values(covariant_derivative(geo.christoffel(), ej, "du")));
  if (nabla_j > kKahlerInputTolerance * (1.0 + max_abs(ev)))
    throw PreconditionError("kahler_identity_residuals: structure is not Kahler (|nabla J| = " +
                            std::to_string(nabla_j) + ")");
  const RicciData<double> d = ricci_data(values(geo.riemann()), values(geo.inverse_metric()));
  const std::vector<NamedTerm> first{
      {"two_rho_check", d.rho_check * 2.0},
      {"minus_tau_rho", d.rho * -d.tau},
      {"norm_g", gv * (-0.5 * (d.norm_rho2 - 0.5 * d.tau * d.tau))},
  };
  const std::vector<NamedTerm> second{
      {"two_l_rho", d.l_rho * 2.0},
      {"minus_eight_rho_check", d.rho_check * -8.0},
      {"two_tau_rho", d.rho * (2.0 * d.tau)},
      {"norm_g", gv * (0.5 * (2.0 * d.norm_rho2 - d.tau * d.tau))},
  };
  const TermSum a = sum_terms(first), b = sum_terms(second);
  return {{a.total, a.scale}, {b.total, b.scale}};
}

// ---------------------------------------------------------------------------
// Reports

enum class Identity { berger, gray, pontrjagin, chern, kahler };

inline std::string to_string(Identity id) {
  switch (id) {
    case Identity::berger: return "berger";
    case Identity::gray: return "gray";
    case Identity::pontrjagin: return "pontrjagin";
    case Identity::chern: return "chern";
    case Identity::kahler: return "kahler";
  }
  return "unknown";
}

inline Identity parse_identity(const std::string& name) {
  for (Identity id : {Identity::berger, Identity::gray, Identity::pontrjagin, Identity::chern, Identity::kahler})
    if (to_string(id) == name) return id;
  throw InputError("unknown identity '" + name + "'");
}

inline double default_tolerance(Identity id) {
  return id == Identity::pontrjagin || id == Identity::chern ? 1e-6 : 1e-8;
}

inline bool needs_structure(Identity id) { return id != Identity::berger; }

struct IdentityPointResult {
  Point point;
  double residual = 0.0;
  std::vector<std::pair<std::string, double>> components;
};

struct IdentityReport {
  std::string identity;
  std::vector<IdentityPointResult> points;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& r : points) {
      nlohmann::json c = nlohmann::json::object();
      for (const auto& [k, v] : r.components) c[k] = v;
      pts.push_back({{"point", r.point}, {"residual", r.residual}, {"components", c}});
    }
    return {{"schema_version", kSchemaVersion},
            {"report", "identity"},
            {"identity", identity},
            {"points_sampled", points.size()},
            {"max_residual", max_residual},
            {"tolerance", tolerance},
            {"passed", passed},
            {"points", pts}};
  }

  [[nodiscard]] std::string to_csv() const {
    std::ostringstream out;
    out.precision(17);
    const std::size_t m = points.empty() ? 0 : points.front().point.size();
    for (std::size_t i = 0; i < m; ++i) out << "x" << i << ",";
    out << "residual\n";
    for (const auto& r : points) {
      for (double x : r.point) out << x << ",";
      out << r.residual << "\n";
    }
    return out.str();
  }
};

inline IdentityPointResult evaluate_identity_at(Identity id, const MetricField& g, const EndoField* j,
                                                std::span<const double> p) {
  IdentityPointResult r;
  r.point.assign(p.begin(), p.end());
  if (needs_structure(id) && !j) throw InputError(to_string(id) + " identity needs a structure J");
  auto pair = [&r](const PairIdentityValue& v) {
    r.components = {{"x_invariance", v.x_invariance.relative()},
                    {"y_invariance", v.y_invariance.relative()},
                    {"joint", v.joint.relative()}};
    r.residual = v.relative();
  };
  switch (id) {
    case Identity::berger: r.residual = berger_residual(g, p).relative(); break;
    case Identity::gray: r.residual = gray_residual(g, *j, p).relative(); break;
    case Identity::pontrjagin: pair(pontrjagin_residuals(g, *j, p)); break;
    case Identity::chern: pair(chern_residuals(g, *j, p)); break;
    case Identity::kahler: {
      const KahlerIdentityValue v = kahler_identity_residuals(g, *j, p);
      r.components = {{"first", v.first.relative()}, {"second", v.second.relative()}};
      r.residual = v.relative();
      break;
    }
  }
  return r;
}

/// Evaluates one identity at every point (in parallel).
inline IdentityReport identity_report(Identity id, const MetricField& g, const EndoField* j,
                                      std::span<const Point> points, std::optional<double> tolerance = std::nullopt) {
  if (points.empty()) throw InputError("identity_report: no points");
  IdentityReport rep;
  rep.identity = to_string(id);
  rep.tolerance = tolerance.value_or(default_tolerance(id));
  rep.points.resize(points.size());
  parallel_for(points.size(), [&](std::size_t i) { rep.points[i] = evaluate_identity_at(id, g, j, points[i]); });
  for (const auto& r : rep.points) rep.max_residual = std::max(rep.max_residual, r.residual);
  rep.passed = rep.max_residual <= rep.tolerance;
  return rep;
}

}  // namespace germforge
