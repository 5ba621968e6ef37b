#pragma once

// Tensor fields on a coordinate ball, evaluated pointwise to component jets.
//
// Component layout: covariant slots first, then contravariant ones. A metric
// stores g(i, j) = g_ij, an endomorphism stores J(i, j) = J_i^j (the
// coefficient of d_j in J d_i), a connection stores G(i, j, k) = Gamma_ij^k.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "germforge/error.hpp"
#include "germforge/jet.hpp"
#include "germforge/sampling.hpp"
#include "germforge/tensor.hpp"

namespace germforge {

struct ChartSpec {
  int dim = 0;
  double radius = 0.0;  // transplant radius r; the working ball is B_{3r}

  ChartSpec(int m, double r) : dim(m), radius(r) {
    if (m < 1) throw InputError("chart dimension must be >= 1");
    if (!(r > 0.0)) throw InputError("chart radius must be > 0");
  }
  [[nodiscard]] double working_radius() const { return 3.0 * radius; }
};

struct Valence {
  int covariant = 0;
  int contravariant = 0;
  [[nodiscard]] int rank() const { return covariant + contravariant; }
  friend bool operator==(const Valence&, const Valence&) = default;
};

struct SymmetryTag {
  int first = 0;
  int second = 1;
  bool antisymmetric = false;
  friend bool operator==(const SymmetryTag&, const SymmetryTag&) = default;
};

/// J^2 = +Id (para-complex, J_+) or J^2 = -Id (complex, J_-).
enum class StructureKind { para, complex };

/// +1 for para, -1 for complex: J^2 = square_sign * Id.
inline double square_sign(StructureKind k) { return k == StructureKind::para ? 1.0 : -1.0; }

inline std::string to_string(StructureKind k) { return k == StructureKind::para ? "para" : "complex"; }

class Field {
 public:
  using Evaluator = std::function<JetTensor(std::span<const double>, int)>;
  using CoordinateFunction = std::function<JetTensor(std::span<const Jet>)>;

  Field() = default;
  Field(int dim, Valence valence, Evaluator eval, std::vector<SymmetryTag> symmetries = {})
      : dim_(dim), valence_(valence), eval_(std::move(eval)), symmetries_(std::move(symmetries)) {}

  /// Field given as a jet expression in the coordinate functions.
  static Field from_coordinates(int dim, Valence valence, CoordinateFunction fn,
                                std::vector<SymmetryTag> symmetries = {}) {
    return Field(
        dim, valence,
        [fn = std::move(fn)](std::span<const double> p, int order) {
          const auto x = coordinate_jets(p, order);
          return fn(x);
        },
        std::move(symmetries));
  }

  static Field constant(const RealTensor& value, Valence valence, std::vector<SymmetryTag> symmetries = {}) {
    if (value.rank() != valence.rank()) throw InputError("constant field: rank does not match valence");
    return Field(
        value.dim(), valence, [value](std::span<const double>, int) { return to_jets(value); },
        std::move(symmetries));
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] Valence valence() const { return valence_; }
  [[nodiscard]] const std::vector<SymmetryTag>& symmetries() const { return symmetries_; }
  [[nodiscard]] bool valid() const { return static_cast<bool>(eval_); }

  /// Component jets of the requested order at p.
  [[nodiscard]] JetTensor jets(std::span<const double> p, int order) const {
    if (!eval_) throw InputError("evaluation of an empty field");
    if (static_cast<int>(p.size()) != dim_) throw InputError("point dimension does not match field dimension");
    JetTensor out = eval_(p, order);
    if (out.rank() != valence_.rank() || out.dim() != dim_)
      throw InputError("field evaluator returned a tensor of the wrong shape");
    for (auto& c : out.data()) c = c.promoted(dim_, order);
    return out;
  }

  [[nodiscard]] RealTensor values(std::span<const double> p) const { return germforge::values(jets(p, 0)); }

  /// Jets of f(y(x)) given jets y_i(x) (Taylor-mode composition).
  [[nodiscard]] JetTensor compose(std::span<const Jet> y) const {
    if (static_cast<int>(y.size()) != dim_) throw InputError("compose: argument count mismatch");
    Point y0(y.size());
    int order = kMaxJetOrder;
    for (std::size_t i = 0; i < y.size(); ++i) {
      y0[i] = y[i].value();
      if (!y[i].is_constant()) order = std::min(order, y[i].order());
    }
    const JetTensor fy = jets(y0, order);
    JetTensor out(dim_, fy.rank());
    for (std::size_t c = 0; c < fy.size(); ++c) out.data()[c] = substitute(fy.data()[c], y);
    return out;
  }

 private:
  int dim_ = 0;
  Valence valence_{};
  Evaluator eval_;
  std::vector<SymmetryTag> symmetries_;
};

struct Signature {
  int negative = 0;
  int positive = 0;
  friend bool operator==(const Signature&, const Signature&) = default;
};

inline std::string to_string(Signature s) {
  return "(" + std::to_string(s.negative) + "," + std::to_string(s.positive) + ")";
}

/// Signature of a symmetric matrix; throws DomainError when degenerate.
inline Signature signature_of(const RealTensor& g, double tol = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(g));
  Signature s;
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double ev = es.eigenvalues()(i);
    if (std::abs(ev) <= tol * scale) throw DomainError("degenerate symmetric form");
    (ev < 0 ? s.negative : s.positive)++;
  }
  return s;
}

inline double determinant(const RealTensor& m) { return to_eigen(m).determinant(); }

struct MetricField {
  Field field;
  Signature signature;
};

struct EndoField {
  Field field;
  StructureKind kind = StructureKind::complex;
};

struct ConnectionField {
  Field field;
};

struct OneFormField {
  Field field;
};

inline std::vector<SymmetryTag> symmetric_pair() { return {{0, 1, false}}; }
inline std::vector<SymmetryTag> antisymmetric_pair() { return {{0, 1, true}}; }

/// Nondegeneracy and symmetry of g at p.
inline void check_metric_at(const Field& g, std::span<const double> p, double tol = 1e-10) {
  const RealTensor v = g.values(p);
  const double scale = std::max(1.0, max_abs(v));
  for (int i = 0; i < v.dim(); ++i)
    for (int j = 0; j < i; ++j)
      if (std::abs(v(i, j) - v(j, i)) > tol * scale) throw DomainError("metric is not symmetric at a sampled point");
  if (std::abs(determinant(v)) <= 1e-12) throw DomainError("metric is degenerate at a sampled point");
}

/// Wrap a symmetric 2-tensor field as a metric, checking the signature at the
/// chart centre.
inline MetricField make_metric(Field g, std::optional<Signature> declared = std::nullopt) {
  if (g.valence() != Valence{2, 0}) throw InputError("metric must have valence (2,0)");
  const Point origin(static_cast<std::size_t>(g.dim()), 0.0);
  check_metric_at(g, origin);
  const Signature s = signature_of(g.values(origin));
  if (declared && !(*declared == s))
    throw PreconditionError("declared signature " + to_string(*declared) + " does not match " + to_string(s) +
                            " at the chart centre");
  return MetricField{std::move(g), s};
}

/// max |J^2 -+ Id| and, for para structures, |tr J| at p.
inline double endo_defect_at(const Field& j, StructureKind kind, std::span<const double> p) {
  const RealTensor e = j.values(p);
  const RealTensor sq = matmul(e, e);
  const int m = e.dim();
  double d = 0.0;
  double tr = 0.0;
  for (int a = 0; a < m; ++a) {
    tr += e(a, a);
    for (int b = 0; b < m; ++b) d = std::max(d, std::abs(sq(a, b) - (a == b ? square_sign(kind) : 0.0)));
  }
  if (kind == StructureKind::para) d = std::max(d, std::abs(tr));
  return d;
}

inline EndoField make_endo(Field j, std::optional<StructureKind> kind = std::nullopt, double tol = 1e-10) {
  if (j.valence() != Valence{1, 1}) throw InputError("endomorphism field must have valence (1,1)");
  if (j.dim() % 2 != 0) throw PreconditionError("almost (para)-complex structures need even dimension");
  const Point origin(static_cast<std::size_t>(j.dim()), 0.0);
  if (!kind) {
    const RealTensor e = j.values(origin);
    const RealTensor sq = matmul(e, e);
    kind = sq(0, 0) > 0 ? StructureKind::para : StructureKind::complex;
  }
  if (endo_defect_at(j, *kind, origin) > tol)
    throw PreconditionError("field is not an almost " + to_string(*kind) + "-complex structure at the centre");
  return EndoField{std::move(j), *kind};
}

// ---------------------------------------------------------------------------
// Mesa bump

/// Smooth radial cutoff: 1 on B_inner, 0 outside B_outer, with the transition
/// h(t) = psi(t) / (psi(t) + psi(1 - t)), psi(t) = exp(-1/t), in the variable
/// t = (|x|^2 - inner^2) / (outer^2 - inner^2).
class MesaBump {
 public:
  /// The standard bump phi_r: 1 on B_r, 0 outside B_2r.
  explicit MesaBump(double r) : MesaBump(r, 2.0 * r) {}
  MesaBump(double inner, double outer) : inner_(inner), outer_(outer) {
    if (!(inner > 0.0) || !(outer > inner)) throw InputError("mesa bump needs 0 < inner < outer");
  }

  [[nodiscard]] double inner() const { return inner_; }
  [[nodiscard]] double outer() const { return outer_; }

  /// Jet of the bump at the point given by the jets x (any composition).
  [[nodiscard]] Jet eval(std::span<const Jet> x) const {
    Jet s(0.0);
    for (const auto& xi : x) s += xi * xi;
    const double a2 = inner_ * inner_, b2 = outer_ * outer_;
    const Jet t = (s - Jet(a2)) * (1.0 / (b2 - a2));
    const double t0 = t.value();
    if (t0 <= 0.0) return Jet(1.0);
    if (t0 >= 1.0) return Jet(0.0);
    // h = 1 / (1 + exp(u)), u = 1/t - 1/(1-t); flat to machine precision
    // once |u| is large
    const Jet u = reciprocal(t) - reciprocal(Jet(1.0) - t);
    const double u0 = u.value();
    if (u0 > 600.0) return Jet(1.0);
    if (u0 < -600.0) return Jet(0.0);
    if (u0 > 0.0) {
      const Jet e = exp(-u);
      return Jet(1.0) - e / (Jet(1.0) + e);
    }
    const Jet e = exp(u);
    return Jet(1.0) - Jet(1.0) / (Jet(1.0) + e);
  }

  [[nodiscard]] double value(std::span<const double> p) const {
    std::vector<Jet> x;
    for (double c : p) x.emplace_back(c);
    return eval(x).value();
  }

  [[nodiscard]] Field field(int dim) const {
    MesaBump self = *this;
    return Field::from_coordinates(dim, Valence{}, [self](std::span<const Jet> x) {
      JetTensor t(static_cast<int>(x.size()), 0);
      t.data()[0] = self.eval(x);
      return t;
    });
  }

 private:
  double inner_;
  double outer_;
};

/// phi_r of the standard mesa construction.
inline MesaBump mesa(double r, const ChartSpec& chart) {
  (void)chart;
  return MesaBump(r);
}

// ---------------------------------------------------------------------------
// Combinators

inline void check_compatible(const Field& a, const Field& b) {
  if (a.dim() != b.dim()) throw InputError("fields live on charts of different dimension");
  if (a.valence() != b.valence()) throw InputError("valence mismatch");
  if (a.symmetries() != b.symmetries()) throw InputError("symmetry tags differ");
}

/// phi * a + (1 - phi) * b, computed on jets as b + phi (a - b).
inline Field blend(const Field& a, const Field& b, const MesaBump& phi) {
  check_compatible(a, b);
  return Field(
      a.dim(), a.valence(),
      [a, b, phi](std::span<const double> p, int order) {
        const auto x = coordinate_jets(p, order);
        const Jet w = phi.eval(x);
        if (w.is_constant() && w.value() == 1.0) return a.jets(p, order);
        if (w.is_constant() && w.value() == 0.0) return b.jets(p, order);
        const JetTensor ta = a.jets(p, order);
        const JetTensor tb = b.jets(p, order);
        JetTensor out = tb;
        for (std::size_t i = 0; i < ta.size(); ++i) out.data()[i].add_product(w, ta.data()[i] - tb.data()[i]);
        return out;
      },
      a.symmetries());
}

/// a - b componentwise.
inline Field difference(const Field& a, const Field& b) {
  check_compatible(a, b);
  return Field(
      a.dim(), a.valence(),
      [a, b](std::span<const double> p, int order) { return a.jets(p, order) - b.jets(p, order); },
      a.symmetries());
}

/// (J^*h)(i, j) = h(J d_i, J d_j).
template <class T>
Tensor<T> pull_back(const Tensor<T>& e, const Tensor<T>& h) {
  return einsum<T>("ia,jb,ab->ij", {&e, &e, &h});
}

/// Average a metric over the action of J: (g -+ J^*g) / 2. The result is
/// J-invariant (complex) or J-anti-invariant (para).
inline MetricField pullback_average(const MetricField& g, const EndoField& j) {
  if (g.field.dim() != j.field.dim()) throw InputError("pullback_average: dimension mismatch");
  const StructureKind kind = j.kind;
  Field avg(
      g.field.dim(), Valence{2, 0},
      [gf = g.field, jf = j.field, kind](std::span<const double> p, int order) {
        if (endo_defect_at(jf, kind, p) > 1e-10)
          throw PreconditionError("J fails J^2 = " + std::string(kind == StructureKind::para ? "+" : "-") +
                                  "Id at an evaluated point");
        const JetTensor gj = gf.jets(p, order);
        const JetTensor jj = jf.jets(p, order);
        JetTensor out = gj - pull_back(jj, gj) * square_sign(kind);
        return out * 0.5;
      },
      symmetric_pair());
  return MetricField{std::move(avg), g.signature};
}

/// Theta(phi(x) x) for a matrix-valued (or any) field Theta.
inline Field compose_with_rescaled_argument(const Field& theta, const MesaBump& phi) {
  return Field(
      theta.dim(), theta.valence(),
      [theta, phi](std::span<const double> p, int order) {
        const auto x = coordinate_jets(p, order);
        const Jet w = phi.eval(x);
        std::vector<Jet> y;
        y.reserve(x.size());
        for (const auto& xi : x) y.push_back(w * xi);
        return theta.compose(y);
      },
      theta.symmetries());
}

// ---------------------------------------------------------------------------
// Sampled norms

struct FieldNorms {
  double c0 = 0.0;  // sup |h_I|
  double c1 = 0.0;  // sup |h_I| + sup |d_j h_I|
};

inline FieldNorms sampled_norms(const Field& h, std::span<const Point> points) {
  double sup0 = 0.0, sup1 = 0.0;
  for (const auto& p : points) {
    const JetTensor t = h.jets(p, 1);
    for (const auto& c : t.data()) {
      sup0 = std::max(sup0, std::abs(c.value()));
      if (!c.is_constant())
        for (int j = 0; j < h.dim(); ++j) sup1 = std::max(sup1, std::abs(c.gradient(j)));
    }
  }
  return {sup0, sup0 + sup1};
}

/// Largest violation of the declared symmetry tags over the points.
inline double symmetry_defect(const Field& f, std::span<const Point> points) {
  double worst = 0.0;
  const int r = f.valence().rank();
  for (const auto& p : points) {
    const RealTensor v = f.values(p);
    const double scale = std::max(1.0, max_abs(v));
    std::vector<int> idx(static_cast<std::size_t>(r)), sw(static_cast<std::size_t>(r));
    for (const auto& tag : f.symmetries()) {
      for (std::size_t k = 0; k < v.size(); ++k) {
        v.unflatten(k, idx);
        sw = idx;
        std::swap(sw[static_cast<std::size_t>(tag.first)], sw[static_cast<std::size_t>(tag.second)]);
        const double other = v.at(sw) * (tag.antisymmetric ? -1.0 : 1.0);
        worst = std::max(worst, std::abs(v.data()[k] - other) / scale);
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Polynomial fields

enum class FieldKind { scalar, metric, endo, connection, oneform, twoform, matrix };

inline std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::scalar: return "scalar";
    case FieldKind::metric: return "metric";
    case FieldKind::endo: return "endo";
    case FieldKind::connection: return "connection";
    case FieldKind::oneform: return "oneform";
    case FieldKind::twoform: return "twoform";
    case FieldKind::matrix: return "matrix";
  }
  return "?";
}

inline Valence valence_of(FieldKind k) {
  switch (k) {
    case FieldKind::scalar: return {0, 0};
    case FieldKind::metric: return {2, 0};
    case FieldKind::endo: return {1, 1};
    case FieldKind::connection: return {2, 1};
    case FieldKind::oneform: return {1, 0};
    case FieldKind::twoform: return {2, 0};
    case FieldKind::matrix: return {1, 1};
  }
  return {};
}

inline std::vector<SymmetryTag> symmetries_of(FieldKind k) {
  if (k == FieldKind::metric) return symmetric_pair();
  if (k == FieldKind::twoform) return antisymmetric_pair();
  return {};
}

/// Field with polynomial components sum_alpha c_{I,alpha} x^alpha.
class PolynomialField {
 public:
  using Key = std::pair<std::vector<int>, std::vector<int>>;  // (component, exponents)

  PolynomialField(int dim, FieldKind kind, int degree = 6) : dim_(dim), kind_(kind), degree_(degree) {
    if (dim < 1 || dim > kMaxDimension) throw InputError("polynomial field dimension out of range");
    if (degree < 0) throw InputError("negative truncation degree");
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] FieldKind kind() const { return kind_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] Valence valence() const { return valence_of(kind_); }
  [[nodiscard]] const std::map<Key, double>& table() const { return table_; }
  [[nodiscard]] std::optional<Signature> signature() const { return signature_; }
  void set_signature(Signature s) { signature_ = s; }
  [[nodiscard]] std::optional<StructureKind> structure() const { return structure_; }
  void set_structure(StructureKind k) { structure_ = k; }

  /// Add v to the coefficient of x^alpha in the given component.
  void add(std::vector<int> component, std::vector<int> exponents, double v) {
    validate(component, exponents);
    if (v == 0.0) return;
    auto& slot = table_[{std::move(component), std::move(exponents)}];
    slot += v;
  }
  void set(std::vector<int> component, std::vector<int> exponents, double v) {
    validate(component, exponents);
    table_[{std::move(component), std::move(exponents)}] = v;
  }
  [[nodiscard]] double coefficient(const std::vector<int>& component, const std::vector<int>& exponents) const {
    auto it = table_.find({component, exponents});
    return it == table_.end() ? 0.0 : it->second;
  }
  /// Add v to a symmetric pair (i, j) and (j, i) once each (i != j) or once.
  void add_symmetric(int i, int j, std::vector<int> exponents, double v) {
    add({i, j}, exponents, v);
    if (i != j) add({j, i}, std::move(exponents), v);
  }

  /// Drop exact zeros.
  void prune() {
    for (auto it = table_.begin(); it != table_.end();)
      it = it->second == 0.0 ? table_.erase(it) : std::next(it);
  }

  [[nodiscard]] Field field() const {
    // group terms per flat component
    const Valence v = valence();
    const int rank = v.rank();
    std::vector<std::vector<std::pair<std::vector<int>, double>>> terms(Tensor<double>::pow_size(dim_, rank));
    RealTensor shape(dim_, rank);
    for (const auto& [key, c] : table_) terms[shape.flat(key.first)].emplace_back(key.second, c);
    const int m = dim_;
    const int deg = degree_;
    return Field::from_coordinates(
        m, v,
        [terms, m, rank, deg](std::span<const Jet> x) {
          // powers[i][k] = x_i^k
          std::vector<std::vector<Jet>> powers(static_cast<std::size_t>(m));
          for (int i = 0; i < m; ++i) {
            auto& pw = powers[static_cast<std::size_t>(i)];
            pw.emplace_back(1.0);
            for (int k = 1; k <= deg; ++k) pw.push_back(pw.back() * x[static_cast<std::size_t>(i)]);
          }
          JetTensor out(m, rank);
          for (std::size_t c = 0; c < terms.size(); ++c) {
            Jet acc(0.0);
            for (const auto& [e, coef] : terms[c]) {
              Jet mono(coef);
              for (int i = 0; i < m; ++i) {
                const int k = e[static_cast<std::size_t>(i)];
                if (k > 0) mono = mono * powers[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
              }
              acc += mono;
            }
            out.data()[c] = std::move(acc);
          }
          return out;
        },
        symmetries_of(kind_));
  }

  /// Homogeneous part of the given degree.
  [[nodiscard]] PolynomialField homogeneous(int d) const {
    PolynomialField out(dim_, kind_, degree_);
    for (const auto& [key, c] : table_) {
      int s = 0;
      for (int e : key.second) s += e;
      if (s == d) out.table_.emplace(key, c);
    }
    return out;
  }

  [[nodiscard]] int max_degree_present() const {
    int d = 0;
    for (const auto& [key, c] : table_) {
      int s = 0;
      for (int e : key.second) s += e;
      d = std::max(d, s);
    }
    return d;
  }

  friend bool operator==(const PolynomialField& a, const PolynomialField& b) {
    return a.dim_ == b.dim_ && a.kind_ == b.kind_ && a.degree_ == b.degree_ && a.table_ == b.table_;
  }

 private:
  void validate(const std::vector<int>& component, const std::vector<int>& exponents) const {
    if (static_cast<int>(component.size()) != valence().rank())
      throw InputError("component index has " + std::to_string(component.size()) + " entries, expected " +
                       std::to_string(valence().rank()));
    for (int c : component)
      if (c < 0 || c >= dim_) throw InputError("component index out of range");
    if (static_cast<int>(exponents.size()) != dim_) throw InputError("multi-index length does not match dimension");
    int s = 0;
    for (int e : exponents) {
      if (e < 0) throw InputError("negative exponent");
      s += e;
    }
    if (s > degree_)
      throw InputError("monomial degree " + std::to_string(s) + " exceeds truncation degree " +
                       std::to_string(degree_));
  }

  int dim_;
  FieldKind kind_;
  int degree_;
  std::map<Key, double> table_;
  std::optional<Signature> signature_;
  std::optional<StructureKind> structure_;
};

inline std::vector<int> exponents_of(std::initializer_list<int> e) { return std::vector<int>(e); }

/// Componentwise d/dx_i of a polynomial field.
inline PolynomialField partial_derivative(const PolynomialField& p, int i) {
  PolynomialField out(p.dim(), p.kind(), p.degree());
  for (const auto& [key, c] : p.table()) {
    const int e = key.second[static_cast<std::size_t>(i)];
    if (e == 0) continue;
    auto lowered = key.second;
    lowered[static_cast<std::size_t>(i)] -= 1;
    out.add(key.first, lowered, c * e);
  }
  return out;
}

/// Constant polynomial metric/endo/... from a tensor value.
inline PolynomialField constant_polynomial(const RealTensor& t, FieldKind kind, int degree = 6) {
  PolynomialField p(t.dim(), kind, degree);
  std::vector<int> idx(static_cast<std::size_t>(t.rank()));
  const std::vector<int> zero(static_cast<std::size_t>(t.dim()), 0);
  for (std::size_t f = 0; f < t.size(); ++f) {
    if (t.data()[f] == 0.0) continue;
    t.unflatten(f, idx);
    p.set(idx, zero, t.data()[f]);
  }
  return p;
}

inline MetricField as_metric(const PolynomialField& p) {
  if (p.kind() != FieldKind::metric) throw InputError("polynomial field is not a metric");
  return make_metric(p.field(), p.signature());
}

inline EndoField as_endo(const PolynomialField& p) {
  if (p.kind() != FieldKind::endo) throw InputError("polynomial field is not an endomorphism");
  return make_endo(p.field(), p.structure());
}

/// Standard flat metric diag(-1 x p, +1 x q).
inline RealTensor standard_metric(Signature s) {
  const int m = s.negative + s.positive;
  RealTensor g(m, 2);
  for (int i = 0; i < m; ++i) g(i, i) = i < s.negative ? -1.0 : 1.0;
  return g;
}

/// Standard structure J d_i = d_{i+n}, J d_{i+n} = +-d_i (n = m/2), stored as
/// E(i, j) = J_i^j.
inline RealTensor standard_endo(int m, StructureKind kind) {
  if (m % 2 != 0) throw PreconditionError("standard (para)-complex structure needs even dimension");
  const int n = m / 2;
  RealTensor e(m, 2);
  for (int i = 0; i < n; ++i) {
    e(i, i + n) = 1.0;
    e(i + n, i) = square_sign(kind);
  }
  return e;
}

/// Standard normalized metric at the origin for a (para)-Hermitian pair:
/// complex: -1 on the first pbar directions of each J-block; para: -1 on the
/// first half, +1 on the second.
inline RealTensor standard_hermitian_metric(int m, StructureKind kind, Signature s) {
  const int n = m / 2;
  RealTensor g(m, 2);
  if (kind == StructureKind::para) {
    for (int i = 0; i < m; ++i) g(i, i) = i < n ? -1.0 : 1.0;
  } else {
    const int pbar = s.negative / 2;
    for (int i = 0; i < n; ++i) {
      const double v = i < pbar ? -1.0 : 1.0;
      g(i, i) = v;
      g(i + n, i + n) = v;
    }
  }
  return g;
}

}  // namespace germforge
