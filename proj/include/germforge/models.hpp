#pragma once

// Algebraic curvature models: symmetry validation, the quadratic metric with
// prescribed curvature at the origin, the para-Kahler construction
// g_theta = eps + theta(., ., x, x) with its linear solve, and realization of a
// model inside a host structure.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "germforge/curvature.hpp"
#include "germforge/error.hpp"
#include "germforge/field.hpp"
#include "germforge/germ_io.hpp"
#include "germforge/normalize.hpp"
#include "germforge/report.hpp"
#include "germforge/sampling.hpp"
#include "germforge/transplant.hpp"

namespace germforge {

/// Inner product eps, curvature tensor A and an optional para-complex
/// structure stored as E(i, j) = J_i^j.
struct CurvatureModel {
  int dimension = 0;
  RealTensor epsilon;
  RealTensor a;
  std::optional<RealTensor> j;

  [[nodiscard]] Signature signature() const { return signature_of(epsilon); }
};

inline constexpr double kModelTolerance = 1e-12;
inline constexpr double kModelCutoff = 1e-10;
inline constexpr double kRealizationTolerance = 1e-9;

namespace detail {

template <class F>
void for_each_index4(int m, F&& f) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) f(i, j, k, l);
}

inline Eigen::VectorXd vec(const RealTensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data().data(), static_cast<Eigen::Index>(t.size()));
}

inline RealTensor unvec(const Eigen::VectorXd& v, int m, int rank) {
  return RealTensor(m, rank, std::vector<double>(v.data(), v.data() + v.size()));
}

// Columns of v with singular value above the cutoff (relative to the largest).
inline Eigen::MatrixXd range_basis(const Eigen::MatrixXd& v) {
  if (v.cols() == 0) return v;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double top = s.size() ? s(0) : 0.0;
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > kModelCutoff * std::max(1.0, top)) ++r;
  return svd.matrixU().leftCols(r);
}

// Columns spanning the kernel of a (orthonormal).
inline Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double top = s.size() ? s(0) : 0.0;
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > kModelCutoff * std::max(1.0, top)) ++r;
  return svd.matrixV().rightCols(n - r);
}

// A(x, y, Jz, Jw).
inline RealTensor last_pair_pulled(const RealTensor& a, const RealTensor& e) {
  return einsum<double>("abpq,cp,dq->abcd", {&a, &e, &e});
}

// theta(Jx, Jy, z, w).
inline RealTensor first_pair_pulled(const RealTensor& t, const RealTensor& e) {
  return einsum<double>("pqcd,ap,bq->abcd", {&t, &e, &e});
}

inline double model_scale(const RealTensor& a) { return 1.0 + max_abs(a); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Validation

struct ModelValidation {
  std::vector<CheckOutcome> checks;

  [[nodiscard]] bool passed() const { return all_passed(checks); }
  [[nodiscard]] std::vector<std::string> failed() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
      if (!c.passed) out.push_back(c.name);
    return out;
  }
  [[nodiscard]] nlohmann::json to_json() const {
    return {{"schema_version", kSchemaVersion},
            {"report", "model_validation"},
            {"checks", germforge::to_json(checks)},
            {"passed", passed()}};
  }
};

inline void require_model_shape(const CurvatureModel& model) {
  const int m = model.dimension;
  if (m < 2) throw InputError("model dimension must be at least 2");
  if (model.epsilon.dim() != m || model.epsilon.rank() != 2) throw InputError("model epsilon must be an m x m matrix");
  if (model.a.dim() != m || model.a.rank() != 4) throw InputError("model tensor A must have rank 4 in dimension m");
  if (model.j && (model.j->dim() != m || model.j->rank() != 2)) throw InputError("model J must be an m x m matrix");
}

/// Per-symmetry report: antisymmetry in (x, y), first Bianchi, antisymmetry
/// in (z, w), pair symmetry, and for para-Kahler models J^2 = Id, tr J = 0,
/// J^*eps = -eps and A(x, y, Jz, Jw) = -A(x, y, z, w).
inline ModelValidation validate_model(const CurvatureModel& model) {
  require_model_shape(model);
  const int m = model.dimension;
  const RealTensor& a = model.a;
  const RealTensor& eps = model.epsilon;
  const double scale = detail::model_scale(a);
  const double tol = kModelTolerance * scale;
  double anti1 = 0.0, bianchi = 0.0, anti2 = 0.0, pair = 0.0;
  detail::for_each_index4(m, [&](int i, int j, int k, int l) {
    anti1 = std::max(anti1, std::abs(a(i, j, k, l) + a(j, i, k, l)));
    bianchi = std::max(bianchi, std::abs(a(i, j, k, l) + a(j, k, i, l) + a(k, i, j, l)));
    anti2 = std::max(anti2, std::abs(a(i, j, k, l) + a(i, j, l, k)));
    pair = std::max(pair, std::abs(a(i, j, k, l) - a(k, l, i, j)));
  });
  ModelValidation out;
  out.checks.push_back(check_at_most("epsilon_symmetric", max_abs_difference(eps, transposed(eps)), kModelTolerance));
  out.checks.push_back(check_flag("epsilon_nondegenerate", std::abs(determinant(eps)) > 1e-12));
  out.checks.push_back(check_at_most("antisymmetry_first", anti1, tol));
  out.checks.push_back(check_at_most("bianchi", bianchi, tol));
  out.checks.push_back(check_at_most("antisymmetry_second", anti2, tol));
  out.checks.push_back(check_at_most("pair_symmetry", pair, tol));
  if (model.j) {
    const RealTensor& e = *model.j;
    const double escale = 1.0 + max_abs(e);
    out.checks.push_back(
        check_at_most("j_square", max_abs_difference(matmul(e, e), identity_matrix(m)), kModelTolerance * escale * escale));
    double trace = 0.0;
    for (int i = 0; i < m; ++i) trace += e(i, i);
    out.checks.push_back(check_at_most("j_trace", std::abs(trace), kModelTolerance * escale));
    out.checks.push_back(check_at_most("j_anti_isometry", max_abs(pull_back(e, eps) + eps),
                                       kModelTolerance * escale * escale * (1.0 + max_abs(eps))));
    out.checks.push_back(check_at_most("para_kahler_symmetry", max_abs(detail::last_pair_pulled(a, e) + a),
                                       kModelTolerance * escale * escale * scale));
  }
  return out;
}

inline void require_valid_model(const CurvatureModel& model) {
  const ModelValidation v = validate_model(model);
  if (v.passed()) return;
  std::string names;
  for (const auto& n : v.failed()) names += (names.empty() ? "" : ", ") + n;
  throw InputError("invalid model: violated " + names);
}

/// Model expressed in the frame x = F y.
inline CurvatureModel transformed(const CurvatureModel& model, const Eigen::MatrixXd& frame) {
  const RealTensor f = from_eigen(frame);
  CurvatureModel out;
  out.dimension = model.dimension;
  out.epsilon = einsum<double>("ij,ia,jb->ab", {&model.epsilon, &f, &f});
  out.a = einsum<double>("ijkl,ia,jb,kc,ld->abcd", {&model.a, &f, &f, &f, &f});
  if (model.j) {
    const Eigen::MatrixXd act = frame.inverse() * to_eigen(*model.j).transpose() * frame;
    out.j = from_eigen(act.transpose());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Riemannian realization

/// g_ik = eps_ik - (1/3) A_ijlk x^j x^l.
inline PolynomialField realize_riemannian(const CurvatureModel& model, int degree = 6) {
  require_valid_model(model);
  const int m = model.dimension;
  PolynomialField g(m, FieldKind::metric, degree);
  g.set_signature(model.signature());
  const std::vector<int> zero(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      g.add({i, k}, zero, model.epsilon(i, k));
      for (int j = 0; j < m; ++j)
        for (int l = j; l < m; ++l) {
          double c = model.a(i, j, l, k);
          if (l != j) c += model.a(i, l, j, k);
          std::vector<int> ex = zero;
          ex[static_cast<std::size_t>(j)] += 1;
          ex[static_cast<std::size_t>(l)] += 1;
          g.add({i, k}, ex, -c / 3.0);
        }
    }
  g.prune();
  return g;
}

/// Projection of a tensor onto the algebraic curvature tensors.
inline RealTensor curvature_projection(const RealTensor& c) {
  const int m = c.dim();
  RealTensor t(m, 4);
  detail::for_each_index4(m, [&](int i, int j, int k, int l) {
    t(i, j, k, l) = (c(i, j, k, l) - c(j, i, k, l) - c(i, j, l, k) + c(j, i, l, k) + c(k, l, i, j) - c(l, k, i, j) -
                     c(k, l, j, i) + c(l, k, j, i)) /
                    8.0;
  });
  RealTensor out(m, 4);
  detail::for_each_index4(m, [&](int i, int j, int k, int l) {
    out(i, j, k, l) = t(i, j, k, l) - (t(i, j, k, l) + t(j, k, i, l) + t(k, i, j, l)) / 3.0;
  });
  return out;
}

/// Random valid model with entries of A bounded by roughly `bound`; with
/// `random_frame` the inner product is a random congruent of the standard one.
inline CurvatureModel random_riemannian_model(Rng& rng, Signature s, double bound = 1.0, bool random_frame = false) {
  const int m = s.negative + s.positive;
  RealTensor c(m, 4);
  for (auto& x : c.data()) x = rng.uniform(-bound, bound);
  CurvatureModel model{m, standard_metric(s), curvature_projection(c), std::nullopt};
  if (!random_frame) return model;
  Eigen::MatrixXd f(m, m);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) f(i, k) = (i == k ? 1.0 : 0.0) + rng.uniform(-0.3, 0.3);
  return transformed(model, f);
}

// ---------------------------------------------------------------------------
// The para-Kahler construction

/// Largest deviation of theta from S^2_- (x) S^2: symmetric in each pair and
/// anti-invariant under J in the first pair.
inline double theta_defect(const RealTensor& theta, const RealTensor& e) {
  const int m = theta.dim();
  double d = max_abs(detail::first_pair_pulled(theta, e) + theta);
  detail::for_each_index4(m, [&](int i, int j, int k, int l) {
    d = std::max(d, std::abs(theta(i, j, k, l) - theta(j, i, k, l)));
    d = std::max(d, std::abs(theta(i, j, k, l) - theta(i, j, l, k)));
  });
  return d;
}

inline void require_theta(const RealTensor& theta, const RealTensor& e) {
  if (theta.rank() != 4 || e.rank() != 2 || theta.dim() != e.dim()) throw InputError("theta: shape mismatch");
  const double d = theta_defect(theta, e);
  if (d > kModelCutoff * (1.0 + max_abs(theta)))
    throw PreconditionError("theta is outside S^2_- (x) S^2 (defect " + std::to_string(d) + ")");
}

/// g_theta = eps_ij + theta_ijkl x^k x^l.
inline PolynomialField theta_metric(const RealTensor& eps, const RealTensor& theta, int degree = 6) {
  const int m = eps.dim();
  PolynomialField g(m, FieldKind::metric, degree);
  g.set_signature(signature_of(eps));
  const std::vector<int> zero(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      g.add({i, j}, zero, eps(i, j));
      for (int k = 0; k < m; ++k)
        for (int l = k; l < m; ++l) {
          const double c = l == k ? theta(i, j, k, l) : theta(i, j, k, l) + theta(i, j, l, k);
          std::vector<int> ex = zero;
          ex[static_cast<std::size_t>(k)] += 1;
          ex[static_cast<std::size_t>(l)] += 1;
          g.add({i, j}, ex, c);
        }
    }
  g.prune();
  return g;
}

/// K(a, b, c, l): coefficient of x^l in the 3-form
/// 2 {theta(x, Jy, z, e_l) + theta(y, Jz, x, e_l) + theta(z, Jx, y, e_l)} x^l.
inline RealTensor kappa_plus(const RealTensor& theta, const RealTensor& e) {
  require_theta(theta, e);
  const int m = theta.dim();
  const RealTensor tj = einsum<double>("apcl,bp->abcl", {&theta, &e});
  RealTensor out(m, 4);
  detail::for_each_index4(m, [&](int a, int b, int c, int l) {
    out(a, b, c, l) = 2.0 * (tj(a, b, c, l) + tj(b, c, a, l) + tj(c, a, b, l));
  });
  return out;
}

/// R(x, y, z, w) = theta(x, z, y, w) + theta(y, w, x, z) - theta(x, w, y, z) - theta(y, z, x, w).
inline RealTensor curvature_of_theta(const RealTensor& theta) {
  const int m = theta.dim();
  RealTensor out(m, 4);
  detail::for_each_index4(m, [&](int x, int y, int z, int w) {
    out(x, y, z, w) = theta(x, z, y, w) + theta(y, w, x, z) - theta(x, w, y, z) - theta(y, z, x, w);
  });
  return out;
}

/// dx^i ^ dx^j (x) dx^k ^ dx^l symmetrized into S^2(L^2) and read as a curvature
/// tensor through R(x, y, z, w) = <R(x, y) w, z>, with a ^ b = (a(x)b - b(x)a)/2.
inline RealTensor xi(int m, int i, int j, int k, int l) {
  auto wedge = [m](int a, int b) {
    RealTensor w(m, 2);
    w(a, b) += 0.5;
    w(b, a) -= 0.5;
    return w;
  };
  const RealTensor u = wedge(i, j), v = wedge(k, l);
  RealTensor out(m, 4);
  detail::for_each_index4(m, [&](int x, int y, int z, int w) {
    out(x, y, z, w) = 0.5 * (u(x, y) * v(w, z) + v(x, y) * u(w, z));
  });
  return out;
}

/// Orthonormal basis (columns, m^2 entries) of the J-anti-invariant symmetric
/// bilinear forms.
inline Eigen::MatrixXd s2_minus_basis(const RealTensor& e) {
  const int m = e.dim();
  std::vector<Eigen::VectorXd> cols;
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      RealTensor h(m, 2);
      h(a, b) = 1.0;
      h(b, a) = 1.0;
      cols.push_back(detail::vec((h - pull_back(e, h)) * 0.5));
    }
  Eigen::MatrixXd v(m * m, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) v.col(static_cast<Eigen::Index>(c)) = cols[c];
  return detail::range_basis(v);
}

/// Orthonormal basis (columns, m^4 entries) of S^2_- (x) S^2.
inline Eigen::MatrixXd theta_space_basis(const RealTensor& e) {
  const int m = e.dim();
  const Eigen::MatrixXd minus = s2_minus_basis(e);
  std::vector<Eigen::VectorXd> sym;
  for (int k = 0; k < m; ++k)
    for (int l = k; l < m; ++l) {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(m * m);
      const double w = k == l ? 1.0 : std::sqrt(0.5);
      s(k * m + l) = w;
      s(l * m + k) = w;
      sym.push_back(s);
    }
  const Eigen::Index mm = m * m;
  Eigen::MatrixXd out(mm * mm, minus.cols() * static_cast<Eigen::Index>(sym.size()));
  Eigen::Index c = 0;
  for (Eigen::Index u = 0; u < minus.cols(); ++u)
    for (const auto& s : sym) {
      for (Eigen::Index p = 0; p < mm; ++p) out.col(c).segment(p * mm, mm) = minus(p, u) * s;
      ++c;
    }
  return out;
}

/// Orthonormal basis of the kernel of kappa_plus inside S^2_- (x) S^2.
inline Eigen::MatrixXd kahler_theta_basis(const RealTensor& e) {
  const int m = e.dim();
  const Eigen::MatrixXd basis = theta_space_basis(e);
  Eigen::MatrixXd k(basis.rows(), basis.cols());
  for (Eigen::Index c = 0; c < basis.cols(); ++c)
    k.col(c) = detail::vec(kappa_plus(detail::unvec(basis.col(c), m, 4), e));
  return basis * detail::kernel_basis(k);
}

/// Orthonormal basis of the algebraic curvature tensors satisfying the
/// para-Kahler symmetry, parametrized through the xi tensors.
inline Eigen::MatrixXd para_kahler_model_basis(const RealTensor& e) {
  const int m = e.dim();
  std::vector<std::array<int, 2>> planes;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) planes.push_back({i, j});
  std::vector<Eigen::VectorXd> gens;
  for (std::size_t p = 0; p < planes.size(); ++p)
    for (std::size_t q = p; q < planes.size(); ++q)
      gens.push_back(detail::vec(xi(m, planes[p][0], planes[p][1], planes[q][0], planes[q][1])));
  const Eigen::Index n4 = static_cast<Eigen::Index>(gens.front().size());
  Eigen::MatrixXd s(n4, static_cast<Eigen::Index>(gens.size()));
  for (std::size_t c = 0; c < gens.size(); ++c) s.col(static_cast<Eigen::Index>(c)) = gens[c];
  Eigen::MatrixXd cons(2 * n4, s.cols());
  for (Eigen::Index c = 0; c < s.cols(); ++c) {
    const RealTensor a = detail::unvec(s.col(c), m, 4);
    RealTensor b(m, 4);
    detail::for_each_index4(m, [&](int i, int j, int k, int l) { b(i, j, k, l) = a(i, j, k, l) + a(j, k, i, l) + a(k, i, j, l); });
    cons.col(c) << detail::vec(b), detail::vec(detail::last_pair_pulled(a, e) + a);
  }
  return detail::range_basis(s * detail::kernel_basis(cons));
}

/// Dimension of the span of a list of tensors.
inline int span_dimension(std::span<const RealTensor> ts) {
  if (ts.empty()) return 0;
  Eigen::MatrixXd v(static_cast<Eigen::Index>(ts.front().size()), static_cast<Eigen::Index>(ts.size()));
  for (std::size_t c = 0; c < ts.size(); ++c) v.col(static_cast<Eigen::Index>(c)) = detail::vec(ts[c]);
  return static_cast<int>(detail::range_basis(v).cols());
}

/// Random valid para-Kahler model for the standard structure, optionally
/// expressed in a random frame.
inline CurvatureModel random_para_kahler_model(Rng& rng, int m, double bound = 1.0, bool random_frame = false) {
  const RealTensor e = standard_endo(m, StructureKind::para);
  const Eigen::MatrixXd basis = para_kahler_model_basis(e);
  Eigen::VectorXd coef(basis.cols());
  for (Eigen::Index c = 0; c < coef.size(); ++c) coef(c) = rng.uniform(-bound, bound);
  const Signature s{m / 2, m / 2};
  CurvatureModel model{m, standard_hermitian_metric(m, StructureKind::para, s), detail::unvec(basis * coef, m, 4), e};
  if (!random_frame) return model;
  Eigen::MatrixXd f(m, m);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) f(i, k) = (i == k ? 1.0 : 0.0) + rng.uniform(-0.3, 0.3);
  return transformed(model, f);
}

struct ParaKahlerRealization {
  RealTensor theta;
  PolynomialField metric{2, FieldKind::metric};
  int theta_space_dim = 0;
  int kernel_dim = 0;
  int rank = 0;
  int model_space_dim = 0;
  double residual = 0.0;
  std::vector<CheckOutcome> checks;

  [[nodiscard]] bool passed() const { return all_passed(checks); }
  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json t = nlohmann::json::array();
    std::vector<int> idx(4);
    for (std::size_t f = 0; f < theta.size(); ++f) {
      if (theta.data()[f] == 0.0) continue;
      theta.unflatten(f, idx);
      t.push_back({{"index", idx}, {"value", theta.data()[f]}});
    }
    return {{"schema_version", kSchemaVersion},
            {"report", "para_kahler_realization"},
            {"theta_space_dim", theta_space_dim},
            {"kernel_dim", kernel_dim},
            {"rank", rank},
            {"model_space_dim", model_space_dim},
            {"residual", residual},
            {"theta", t},
            {"checks", germforge::to_json(checks)},
            {"passed", passed()}};
  }
};

inline double origin_curvature_error(const PolynomialField& g, const RealTensor& a) {
  const Point o(static_cast<std::size_t>(g.dim()), 0.0);
  return max_abs_difference(riemann(as_metric(g), o).r, a) / detail::model_scale(a);
}

/// Solves R(theta) = A for theta in ker kappa_plus by least squares and
/// verifies the germ g_theta.
inline ParaKahlerRealization realize_para_kahler(const CurvatureModel& model, std::size_t check_points = 20,
                                                 std::uint64_t seed = 7) {
  if (!model.j) throw InputError("para-Kahler realization needs a model with J");
  require_valid_model(model);
  const int m = model.dimension;
  const RealTensor& e = *model.j;
  ParaKahlerRealization out;
  out.theta_space_dim = static_cast<int>(theta_space_basis(e).cols());
  const Eigen::MatrixXd kb = kahler_theta_basis(e);
  out.kernel_dim = static_cast<int>(kb.cols());
  out.model_space_dim = static_cast<int>(para_kahler_model_basis(e).cols());
  Eigen::MatrixXd rm(kb.rows(), kb.cols());
  for (Eigen::Index c = 0; c < kb.cols(); ++c)
    rm.col(c) = detail::vec(curvature_of_theta(detail::unvec(kb.col(c), m, 4)));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kModelCutoff);
  out.rank = static_cast<int>(svd.rank());
  const Eigen::VectorXd coef = svd.solve(detail::vec(model.a));
  out.theta = detail::unvec(kb * coef, m, 4);
  const double top = max_abs(out.theta);
  for (double& v : out.theta.data())
    if (std::abs(v) <= 1e-14 * top) v = 0.0;
  out.residual = max_abs_difference(curvature_of_theta(out.theta), model.a) / detail::model_scale(model.a);
  if (out.residual > kRealizationTolerance)
    throw VerificationError("inconsistent system: residual " + std::to_string(out.residual) + " with rank " +
                            std::to_string(out.rank) + " of " + std::to_string(out.model_space_dim));
  out.metric = theta_metric(model.epsilon, out.theta);
  const MetricField g = as_metric(out.metric);
  PolynomialField jp = constant_polynomial(e, FieldKind::endo);
  jp.set_structure(StructureKind::para);
  const EndoField j = as_endo(jp);
  const Field omega = kahler_form_field(g, j);
  const auto pts = detail::random_points(m, 0.5, check_points, seed);
  double compat = 0.0, domega = 0.0;
  for (const auto& p : pts) {
    compat = std::max(compat, compatibility_defect(g.field.values(p), e, StructureKind::para));
    domega = std::max(domega, max_abs(exterior_derivative(omega, p)));
  }
  out.checks.push_back(check_at_most("solve_residual", out.residual, kRealizationTolerance));
  out.checks.push_back(check_flag("surjective", out.rank == out.model_space_dim));
  out.checks.push_back(check_at_most("theta_in_kernel", max_abs(kappa_plus(out.theta, e)), kModelCutoff));
  out.checks.push_back(check_at_most("para_hermitian", compat, kModelCutoff));
  out.checks.push_back(check_at_most("d_omega", domega, kRealizationTolerance));
  out.checks.push_back(check_at_most("curvature_at_origin", origin_curvature_error(out.metric, model.a),
                                     kRealizationTolerance));
  return out;
}

// ---------------------------------------------------------------------------
// Realization inside a host

enum class RealizationKind { riemannian, para_kahler };

inline std::string to_string(RealizationKind k) {
  return k == RealizationKind::riemannian ? "riemannian" : "para-kahler";
}

inline RealizationKind parse_realization_kind(const std::string& s) {
  if (s == "riemannian" || s == "metric") return RealizationKind::riemannian;
  if (s == "para-kahler" || s == "para_kahler" || s == "parakahler") return RealizationKind::para_kahler;
  throw InputError("unknown realization kind '" + s + "' (expected riemannian or para-kahler)");
}

inline RealizationKind default_realization_kind(const CurvatureModel& model) {
  return model.j ? RealizationKind::para_kahler : RealizationKind::riemannian;
}

/// Frame x = F y putting the model's inner product (and J) in standard form.
inline Eigen::MatrixXd standard_frame(const CurvatureModel& model, RealizationKind kind) {
  if (kind == RealizationKind::para_kahler) {
    if (!model.j) throw InputError("para-Kahler realization needs a model with J");
    return adapted_frame(model.epsilon, *model.j, StructureKind::para);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(model.epsilon));
  Eigen::MatrixXd f = es.eigenvectors();
  for (Eigen::Index a = 0; a < f.cols(); ++a) f.col(a) /= std::sqrt(std::abs(es.eigenvalues()(a)));
  return f;
}

struct ModelRealization {
  RealizationKind kind = RealizationKind::riemannian;
  Eigen::MatrixXd frame;
  CurvatureModel standardized;
  PolynomialField germ{2, FieldKind::metric};
  std::optional<ParaKahlerRealization> para;
  std::optional<TransplantResult> transplant;
  double curvature_error = 0.0;
  std::vector<CheckOutcome> checks;

  [[nodiscard]] bool passed() const {
    return all_passed(checks) && (!para || para->passed()) && (!transplant || transplant->passed());
  }
  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json f = nlohmann::json::array();
    for (Eigen::Index i = 0; i < frame.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < frame.cols(); ++c) row.push_back(frame(i, c));
      f.push_back(row);
    }
    nlohmann::json out = {{"schema_version", kSchemaVersion},
                          {"report", "realization"},
                          {"kind", to_string(kind)},
                          {"dimension", standardized.dimension},
                          {"frame", f},
                          {"curvature_error", curvature_error},
                          {"checks", germforge::to_json(checks)},
                          {"passed", passed()}};
    if (para) out["para_kahler"] = para->to_json();
    if (transplant) out["transplant"] = transplant->to_json();
    return out;
  }
};

/// Realizes the model as a germ and, with a host, changes to standard
/// coordinates x = F y and transplants it at radius r. The output curvature at 0 is compared
/// with the model expressed in the same coordinates.
inline ModelRealization realize_model(const CurvatureModel& model, RealizationKind kind,
                                      const std::optional<PolynomialField>& host = std::nullopt, double r = 0.1,
                                      const TransplantOptions& opts = {}) {
  require_valid_model(model);
  ModelRealization out;
  out.kind = kind;
  out.frame = host ? standard_frame(model, kind) : Eigen::MatrixXd::Identity(model.dimension, model.dimension);
  out.standardized = transformed(model, out.frame);
  if (kind == RealizationKind::para_kahler) {
    out.para = realize_para_kahler(out.standardized);
    out.germ = out.para->metric;
  } else {
    CurvatureModel plain = out.standardized;
    plain.j.reset();
    out.germ = realize_riemannian(plain);
  }
  const double tol = kRealizationTolerance;
  out.curvature_error = origin_curvature_error(out.germ, out.standardized.a);
  out.checks.push_back(check_at_most("germ_curvature_at_origin", out.curvature_error, tol));
  if (!host) return out;
  if (host->dim() != model.dimension) throw InputError("realize: host dimension does not match the model");
  if (host->kind() != FieldKind::metric) throw InputError("realize: host must be a metric germ");
  if (kind == RealizationKind::para_kahler) {
    out.transplant = transplant_kahler(out.germ, *host, StructureKind::para, r, opts);
  } else {
    out.transplant = transplant_metric(as_metric(out.germ), as_metric(*host), r, opts);
  }
  const Point o(static_cast<std::size_t>(model.dimension), 0.0);
  const double err = max_abs_difference(riemann(*out.transplant->metric, o).r, out.standardized.a) /
                     detail::model_scale(out.standardized.a);
  out.curvature_error = std::max(out.curvature_error, err);
  out.checks.push_back(check_at_most("curvature_at_origin", err, tol));
  return out;
}

inline ModelRealization realize_into_host(const CurvatureModel& model, const PolynomialField& host, double r,
                                          const TransplantOptions& opts = {}) {
  return realize_model(model, default_realization_kind(model), host, r, opts);
}

// ---------------------------------------------------------------------------
// Model files

namespace detail {

inline RealTensor matrix_from_json(const nlohmann::json& j, int m, const std::string& what) {
  RealTensor out(m, 2);
  if (!j.is_array()) throw InputError("model " + what + " must be an array");
  if (j.size() == static_cast<std::size_t>(m) && j[0].is_array()) {
    for (int i = 0; i < m; ++i) {
      if (!j[i].is_array() || j[i].size() != static_cast<std::size_t>(m))
        throw InputError("model " + what + " must be an m x m matrix");
      for (int k = 0; k < m; ++k) out(i, k) = j[i][k].get<double>();
    }
  } else if (j.size() == static_cast<std::size_t>(m * m)) {
    for (int f = 0; f < m * m; ++f) out.data()[static_cast<std::size_t>(f)] = j[f].get<double>();
  } else {
    throw InputError("model " + what + " must be an m x m matrix");
  }
  return out;
}

inline nlohmann::json matrix_to_json(const RealTensor& t) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < t.dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < t.dim(); ++k) row.push_back(t(i, k));
    out.push_back(row);
  }
  return out;
}

}  // namespace detail

/// Reads {"dimension", "signature", "epsilon", "A": [{"index", "value"}], "J"}.
/// A is completed over the antisymmetries and pair symmetry; conflicting
/// entries are rejected.
inline CurvatureModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw InputError("model file must be a JSON object");
    if (!j.contains("dimension")) throw InputError("model file needs 'dimension'");
    CurvatureModel model;
    const int m = j.at("dimension").get<int>();
    if (m < 2 || m > 8) throw InputError("model dimension must be in [2, 8]");
    model.dimension = m;
    std::optional<Signature> sig;
    if (j.contains("signature")) {
      const auto& s = j.at("signature");
      if (!s.is_array() || s.size() != 2) throw InputError("model signature must be [p, q]");
      sig = Signature{s[0].get<int>(), s[1].get<int>()};
      if (sig->negative < 0 || sig->positive < 0 || sig->negative + sig->positive != m)
        throw InputError("model signature does not add up to the dimension");
    }
    if (j.contains("epsilon")) {
      model.epsilon = detail::matrix_from_json(j.at("epsilon"), m, "epsilon");
      if (std::abs(determinant(model.epsilon)) <= 1e-12) throw InputError("model epsilon is degenerate");
      if (sig && !(signature_of(model.epsilon) == *sig))
        throw InputError("model epsilon has signature " + to_string(signature_of(model.epsilon)) + ", declared " +
                         to_string(*sig));
    } else {
      model.epsilon = standard_metric(sig.value_or(Signature{0, m}));
    }
    if (j.contains("J")) {
      const auto& jj = j.at("J");
      if (jj.is_string()) {
        if (jj.get<std::string>() != "standard") throw InputError("model J must be a matrix or \"standard\"");
        model.j = standard_endo(m, StructureKind::para);
      } else {
        model.j = detail::matrix_from_json(jj, m, "J");
      }
    }
    model.a = RealTensor(m, 4);
    RealTensor seen(m, 4);
    if (j.contains("A")) {
      for (const auto& entry : j.at("A")) {
        const auto idx = entry.at("index").get<std::vector<int>>();
        const double v = entry.at("value").get<double>();
        if (idx.size() != 4) throw InputError("model A index must have 4 entries");
        for (int i : idx)
          if (i < 0 || i >= m) throw InputError("model A index out of range");
        const int a = idx[0], b = idx[1], c = idx[2], d = idx[3];
        const std::array<std::pair<std::array<int, 4>, double>, 8> images{{{{a, b, c, d}, v},
                                                                           {{b, a, c, d}, -v},
                                                                           {{a, b, d, c}, -v},
                                                                           {{b, a, d, c}, v},
                                                                           {{c, d, a, b}, v},
                                                                           {{d, c, a, b}, -v},
                                                                           {{c, d, b, a}, -v},
                                                                           {{d, c, b, a}, v}}};
        for (const auto& [ix, w] : images) {
          double& slot = model.a(ix[0], ix[1], ix[2], ix[3]);
          double& mark = seen(ix[0], ix[1], ix[2], ix[3]);
          if (mark != 0.0 && std::abs(slot - w) > kModelTolerance * (1.0 + std::abs(w)))
            throw InputError("model A entries conflict at [" + std::to_string(ix[0]) + "," + std::to_string(ix[1]) +
                             "," + std::to_string(ix[2]) + "," + std::to_string(ix[3]) + "]");
          slot = w;
          mark = 1.0;
        }
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model file: ") + e.what());
  }
}

inline nlohmann::json model_to_json(const CurvatureModel& model) {
  const Signature s = model.signature();
  nlohmann::json a = nlohmann::json::array();
  detail::for_each_index4(model.dimension, [&](int i, int j, int k, int l) {
    if (i < j && k < l && (i < k || (i == k && j <= l)) && model.a(i, j, k, l) != 0.0)
      a.push_back({{"index", {i, j, k, l}}, {"value", model.a(i, j, k, l)}});
  });
  nlohmann::json out = {{"dimension", model.dimension},
                        {"signature", {s.negative, s.positive}},
                        {"epsilon", detail::matrix_to_json(model.epsilon)},
                        {"A", a}};
  if (model.j) out["J"] = detail::matrix_to_json(*model.j);
  return out;
}

inline CurvatureModel read_model(const std::string& path) { return model_from_json(read_json_file(path)); }

}  // namespace germforge
