#pragma once

// Truncated multivariate Taylor arithmetic.
//
// A Jet of dimension m and order K stores the Taylor coefficients
// c_alpha = d^alpha f(P) / alpha! for every multi-index |alpha| <= K in a
// dense vector indexed by a graded-lexicographic enumeration. The enumeration
// for order K is a prefix of the enumeration for any higher order, so jets of
// different orders in the same dimension share one lookup table.
//
// A jet of dimension 0 is a plain constant; it combines with jets of any
// dimension.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "germforge/error.hpp"

namespace germforge {

inline constexpr int kMaxDimension = 8;
// User-facing operations ask for at most order 4; two extra orders are kept
// for fields that are defined through second derivatives of other fields.
inline constexpr int kMaxJetOrder = 6;

struct MultiIndex {
  std::vector<int> exponents;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : exponents(std::move(e)) {}
  MultiIndex(std::initializer_list<int> e) : exponents(e) {}

  [[nodiscard]] int size() const { return static_cast<int>(exponents.size()); }
  [[nodiscard]] int degree() const {
    int d = 0;
    for (int e : exponents) d += e;
    return d;
  }
  [[nodiscard]] double factorial() const {
    double f = 1.0;
    for (int e : exponents)
      for (int k = 2; k <= e; ++k) f *= k;
    return f;
  }
  static MultiIndex unit(int dim, int i) {
    MultiIndex a(std::vector<int>(static_cast<std::size_t>(dim), 0));
    a.exponents[static_cast<std::size_t>(i)] = 1;
    return a;
  }
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

namespace detail {

struct JetTable {
  struct Product {
    int lhs;
    int rhs;
    int out;
  };

  int dim = 0;
  std::vector<std::vector<int>> monomials;
  std::vector<int> degree;
  std::vector<double> factorial;
  // size_upto[k] = number of monomials with degree <= k
  std::array<std::size_t, kMaxJetOrder + 1> size_upto{};
  std::map<std::vector<int>, int> lookup;
  // all (lhs, rhs) pairs with deg(lhs) + deg(rhs) <= kMaxJetOrder, sorted by
  // the degree of the product; products_upto[k] counts those of degree <= k
  std::vector<Product> products;
  std::array<std::size_t, kMaxJetOrder + 1> products_upto{};
  // raise[i][a] = index of monomial a + e_i, or -1 past the maximal order
  std::vector<std::vector<int>> raise;
  // parent[a] = (i, index of a - e_i) for the first i with a_i > 0
  std::vector<std::pair<int, int>> parent;

  explicit JetTable(int m) : dim(m) {
    // degree-by-degree, lexicographically descending exponents
    for (int d = 0; d <= kMaxJetOrder; ++d) {
      std::vector<int> e(static_cast<std::size_t>(m), 0);
      append_degree(e, 0, d);
      size_upto[static_cast<std::size_t>(d)] = monomials.size();
    }
    const int n = static_cast<int>(monomials.size());
    for (int a = 0; a < n; ++a) {
      lookup.emplace(monomials[static_cast<std::size_t>(a)], a);
      int deg = 0;
      double f = 1.0;
      for (int e : monomials[static_cast<std::size_t>(a)]) {
        deg += e;
        for (int k = 2; k <= e; ++k) f *= k;
      }
      degree.push_back(deg);
      factorial.push_back(f);
    }
    raise.assign(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(n), -1));
    parent.assign(static_cast<std::size_t>(n), {-1, -1});
    for (int a = 0; a < n; ++a) {
      const auto& ea = monomials[static_cast<std::size_t>(a)];
      for (int i = 0; i < m; ++i) {
        auto up = ea;
        ++up[static_cast<std::size_t>(i)];
        if (auto it = lookup.find(up); it != lookup.end())
          raise[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] = it->second;
      }
      for (int i = 0; i < m; ++i) {
        if (ea[static_cast<std::size_t>(i)] > 0) {
          auto down = ea;
          --down[static_cast<std::size_t>(i)];
          parent[static_cast<std::size_t>(a)] = {i, lookup.at(down)};
          break;
        }
      }
    }
    for (int a = 0; a < n; ++a) {
      const int room = kMaxJetOrder - degree[static_cast<std::size_t>(a)];
      const auto nb = static_cast<int>(size_upto[static_cast<std::size_t>(room)]);
      for (int b = 0; b < nb; ++b) {
        auto sum = monomials[static_cast<std::size_t>(a)];
        for (int i = 0; i < m; ++i)
          sum[static_cast<std::size_t>(i)] += monomials[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
        products.push_back({a, b, lookup.at(sum)});
      }
    }
    std::stable_sort(products.begin(), products.end(), [this](const Product& x, const Product& y) {
      return degree[static_cast<std::size_t>(x.out)] < degree[static_cast<std::size_t>(y.out)];
    });
    for (int d = 0; d <= kMaxJetOrder; ++d) {
      products_upto[static_cast<std::size_t>(d)] = static_cast<std::size_t>(
          std::partition_point(products.begin(), products.end(),
                               [this, d](const Product& p) { return degree[static_cast<std::size_t>(p.out)] <= d; }) -
          products.begin());
    }
  }

 private:
  void append_degree(std::vector<int>& e, int slot, int remaining) {
    if (slot == dim - 1) {
      e[static_cast<std::size_t>(slot)] = remaining;
      monomials.push_back(e);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[static_cast<std::size_t>(slot)] = k;
      append_degree(e, slot + 1, remaining - k);
    }
    e[static_cast<std::size_t>(slot)] = 0;
  }
};

inline const JetTable& jet_table(int dim) {
  if (dim < 1 || dim > kMaxDimension)
    throw InputError("jet dimension " + std::to_string(dim) + " outside [1, " +
                     std::to_string(kMaxDimension) + "]");
  static std::array<std::once_flag, kMaxDimension + 1> flags;
  static std::array<const JetTable*, kMaxDimension + 1> tables{};
  std::call_once(flags[static_cast<std::size_t>(dim)],
                 [dim] { tables[static_cast<std::size_t>(dim)] = new JetTable(dim); });
  return *tables[static_cast<std::size_t>(dim)];
}

inline void check_order(int order) {
  if (order < 0 || order > kMaxJetOrder)
    throw InputError("jet order " + std::to_string(order) + " outside [0, " +
                     std::to_string(kMaxJetOrder) + "]");
}

}  // namespace detail

/// Number of Taylor coefficients of a jet of the given dimension and order.
inline std::size_t jet_size(int dim, int order) {
  if (dim == 0) return 1;
  detail::check_order(order);
  return detail::jet_table(dim).size_upto[static_cast<std::size_t>(order)];
}

class Jet {
 public:
  Jet() : coeffs_(1, 0.0) {}
  Jet(double constant) : coeffs_(1, constant) {}  // NOLINT: scalars promote to jets
  Jet(int dim, int order, double value = 0.0) : dim_(dim), order_(order), coeffs_(jet_size(dim, order), 0.0) {
    coeffs_[0] = value;
  }

  static Jet variable(int i, double value, int dim, int order) {
    if (i < 0 || i >= dim)
      throw InputError("coordinate index " + std::to_string(i) + " out of range for dimension " +
                       std::to_string(dim));
    Jet x(dim, order, value);
    if (order >= 1) x.coeffs_[static_cast<std::size_t>(1 + i)] = 1.0;
    return x;
  }

  [[nodiscard]] int dimension() const { return dim_; }
  [[nodiscard]] int order() const { return dim_ == 0 ? kMaxJetOrder : order_; }
  [[nodiscard]] bool is_constant() const { return dim_ == 0; }
  [[nodiscard]] double value() const { return coeffs_[0]; }
  [[nodiscard]] std::span<const double> coefficients() const { return coeffs_; }
  [[nodiscard]] std::span<double> coefficients() { return coeffs_; }

  /// Stored Taylor coefficient d^alpha f / alpha!.
  [[nodiscard]] double coefficient(const MultiIndex& alpha) const { return coeffs_[index_of(alpha)]; }

  /// Raw partial derivative d^alpha f, i.e. alpha! times the coefficient.
  [[nodiscard]] double derivative(const MultiIndex& alpha) const {
    return coeffs_[index_of(alpha)] * alpha.factorial();
  }

  /// First partial derivative of the value: coefficient of e_i.
  [[nodiscard]] double gradient(int i) const {
    if (dim_ == 0) return 0.0;
    if (order_ < 1) throw InputError("gradient requested from an order-0 jet");
    return coeffs_[static_cast<std::size_t>(1 + i)];
  }

  /// d/dx_i of the jet; the result has one order less.
  [[nodiscard]] Jet partial(int i) const {
    if (dim_ == 0) return Jet(0.0);
    if (i < 0 || i >= dim_) throw InputError("partial: coordinate index out of range");
    if (order_ == 0) throw InputError("partial derivative of an order-0 jet");
    const auto& t = detail::jet_table(dim_);
    Jet out(dim_, order_ - 1);
    const auto& up = t.raise[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < out.coeffs_.size(); ++a) {
      const int b = up[a];
      const auto& eb = t.monomials[static_cast<std::size_t>(b)];
      out.coeffs_[a] = coeffs_[static_cast<std::size_t>(b)] * eb[static_cast<std::size_t>(i)];
    }
    return out;
  }

  [[nodiscard]] Jet truncated(int order) const {
    if (dim_ == 0 || order >= order_) return *this;
    Jet out(dim_, order);
    std::copy_n(coeffs_.begin(), out.coeffs_.size(), out.coeffs_.begin());
    return out;
  }

  /// Same polynomial viewed in a larger-dimension, higher-or-equal order jet
  /// space is not supported; only promotion of constants is.
  [[nodiscard]] Jet promoted(int dim, int order) const {
    if (dim_ == dim) return truncated(order);
    if (dim_ != 0) throw InputError("cannot promote a jet between dimensions");
    return Jet(dim, order, coeffs_[0]);
  }

  Jet& operator+=(const Jet& o) { return accumulate(o, 1.0); }
  Jet& operator-=(const Jet& o) { return accumulate(o, -1.0); }
  Jet& operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
  }
  Jet& operator/=(const Jet& o);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    if (a.dim_ == 0) return b * a.coeffs_[0];
    if (b.dim_ == 0) return a * b.coeffs_[0];
    if (a.dim_ != b.dim_) throw InputError("jet dimension mismatch in product");
    const int k = std::min(a.order_, b.order_);
    const auto& t = detail::jet_table(a.dim_);
    Jet out(a.dim_, k);
    const std::size_t n = t.products_upto[static_cast<std::size_t>(k)];
    const double* pa = a.coeffs_.data();
    const double* pb = b.coeffs_.data();
    double* po = out.coeffs_.data();
    for (std::size_t p = 0; p < n; ++p) {
      const auto& tr = t.products[p];
      po[tr.out] += pa[tr.lhs] * pb[tr.rhs];
    }
    return out;
  }
  friend Jet operator/(const Jet& a, const Jet& b);

  /// Multiply-accumulate: *this += a * b without a temporary for the sum.
  void add_product(const Jet& a, const Jet& b, double scale = 1.0) {
    if (a.dim_ == 0 || b.dim_ == 0 || a.dim_ != dim_ || dim_ == 0) {
      *this += (a * b) * scale;
      return;
    }
    const int k = std::min({a.order_, b.order_, order_});
    const auto& t = detail::jet_table(dim_);
    const std::size_t n = t.products_upto[static_cast<std::size_t>(k)];
    if (k < order_) *this = truncated(k);
    const double* pa = a.coeffs_.data();
    const double* pb = b.coeffs_.data();
    double* po = coeffs_.data();
    for (std::size_t p = 0; p < n; ++p) {
      const auto& tr = t.products[p];
      po[tr.out] += scale * pa[tr.lhs] * pb[tr.rhs];
    }
  }

  /// Max-abs over all stored coefficients.
  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

 private:
  [[nodiscard]] std::size_t index_of(const MultiIndex& alpha) const {
    if (dim_ == 0) {
      if (alpha.degree() != 0) return coeffs_.size();  // caught below
      return 0;
    }
    if (alpha.size() != dim_) throw InputError("multi-index length does not match jet dimension");
    if (alpha.degree() > order_)
      throw InputError("multi-index degree " + std::to_string(alpha.degree()) + " exceeds jet order " +
                       std::to_string(order_));
    for (int e : alpha.exponents)
      if (e < 0) throw InputError("negative exponent in multi-index");
    return static_cast<std::size_t>(detail::jet_table(dim_).lookup.at(alpha.exponents));
  }

  Jet& accumulate(const Jet& o, double sign) {
    if (o.dim_ == 0) {
      coeffs_[0] += sign * o.coeffs_[0];
      return *this;
    }
    if (dim_ == 0) {
      const double c = coeffs_[0];
      *this = o * sign;
      coeffs_[0] += c;
      return *this;
    }
    if (dim_ != o.dim_) throw InputError("jet dimension mismatch in sum");
    if (o.order_ < order_) *this = truncated(o.order_);
    for (std::size_t a = 0; a < coeffs_.size(); ++a) coeffs_[a] += sign * o.coeffs_[a];
    return *this;
  }

  int dim_ = 0;
  int order_ = 0;
  std::vector<double> coeffs_;
};

enum class ElementaryFunction { exp, sin, cos, sqrt, reciprocal, log };

inline std::string to_string(ElementaryFunction f) {
  switch (f) {
    case ElementaryFunction::exp: return "exp";
    case ElementaryFunction::sin: return "sin";
    case ElementaryFunction::cos: return "cos";
    case ElementaryFunction::sqrt: return "sqrt";
    case ElementaryFunction::reciprocal: return "reciprocal";
    case ElementaryFunction::log: return "log";
  }
  return "?";
}

namespace detail {

// Taylor coefficients f^(n)(x0)/n! for n = 0..order.
inline std::vector<double> univariate_coefficients(ElementaryFunction f, double x0, int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
  if (!std::isfinite(x0)) throw DomainError(to_string(f) + ": non-finite argument");
  double fact = 1.0;
  switch (f) {
    case ElementaryFunction::exp: {
      const double e = std::exp(x0);
      for (int n = 0; n <= order; ++n) {
        if (n > 0) fact *= n;
        c[static_cast<std::size_t>(n)] = e / fact;
      }
      break;
    }
    case ElementaryFunction::sin:
    case ElementaryFunction::cos: {
      const double s = std::sin(x0), co = std::cos(x0);
      // derivatives of sin cycle through sin, cos, -sin, -cos
      const std::array<double, 4> cyc_sin{s, co, -s, -co};
      const std::array<double, 4> cyc_cos{co, -s, -co, s};
      const auto& cyc = f == ElementaryFunction::sin ? cyc_sin : cyc_cos;
      for (int n = 0; n <= order; ++n) {
        if (n > 0) fact *= n;
        c[static_cast<std::size_t>(n)] = cyc[static_cast<std::size_t>(n % 4)] / fact;
      }
      break;
    }
    case ElementaryFunction::sqrt: {
      if (!(x0 > 0.0)) throw DomainError("sqrt: constant term must be positive");
      // binom(1/2, n) x0^(1/2 - n)
      double binom = 1.0;
      for (int n = 0; n <= order; ++n) {
        if (n > 0) binom *= (0.5 - (n - 1)) / n;
        c[static_cast<std::size_t>(n)] = binom * std::pow(x0, 0.5 - n);
      }
      break;
    }
    case ElementaryFunction::reciprocal: {
      if (x0 == 0.0) throw DomainError("reciprocal: constant term is zero");
      double p = 1.0 / x0;
      for (int n = 0; n <= order; ++n) {
        c[static_cast<std::size_t>(n)] = (n % 2 == 0 ? 1.0 : -1.0) * p;
        p /= x0;
      }
      break;
    }
    case ElementaryFunction::log: {
      if (!(x0 > 0.0)) throw DomainError("log: constant term must be positive");
      c[0] = std::log(x0);
      for (int n = 1; n <= order; ++n)
        c[static_cast<std::size_t>(n)] = (n % 2 == 1 ? 1.0 : -1.0) / (n * std::pow(x0, n));
      break;
    }
  }
  return c;
}

}  // namespace detail

/// Compose a univariate series sum_n c_n (x - x0)^n with the jet x.
inline Jet compose_univariate(std::span<const double> series, const Jet& x) {
  if (x.is_constant()) return Jet(series[0]);
  Jet h = x;
  h.coefficients()[0] = 0.0;
  const int k = std::min<int>(x.order(), static_cast<int>(series.size()) - 1);
  Jet out(x.dimension(), x.order(), series[static_cast<std::size_t>(k)]);
  for (int n = k - 1; n >= 0; --n) {
    out = out * h;
    out.coefficients()[0] += series[static_cast<std::size_t>(n)];
  }
  return out;
}

inline Jet apply(ElementaryFunction f, const Jet& x) {
  const auto c = detail::univariate_coefficients(f, x.value(), x.is_constant() ? 0 : x.order());
  return compose_univariate(c, x);
}

inline Jet exp(const Jet& x) { return apply(ElementaryFunction::exp, x); }
inline Jet sin(const Jet& x) { return apply(ElementaryFunction::sin, x); }
inline Jet cos(const Jet& x) { return apply(ElementaryFunction::cos, x); }
inline Jet sqrt(const Jet& x) { return apply(ElementaryFunction::sqrt, x); }
inline Jet reciprocal(const Jet& x) { return apply(ElementaryFunction::reciprocal, x); }
inline Jet log(const Jet& x) { return apply(ElementaryFunction::log, x); }

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet& Jet::operator/=(const Jet& o) {
  *this = *this / o;
  return *this;
}

inline Jet pow(const Jet& x, int n) {
  if (n < 0) return pow(reciprocal(x), -n);
  Jet out = Jet(1.0).promoted(x.dimension(), x.order());
  Jet base = x;
  while (n > 0) {
    if (n & 1) out = out * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return out;
}

/// Coordinate jets x_i = P_i + h_i at the point P.
inline std::vector<Jet> coordinate_jets(std::span<const double> point, int order) {
  const int m = static_cast<int>(point.size());
  std::vector<Jet> x;
  x.reserve(point.size());
  for (int i = 0; i < m; ++i) x.push_back(Jet::variable(i, point[static_cast<std::size_t>(i)], m, order));
  return x;
}

/// Taylor-mode composition: given the jet of f at y0 (in n variables) and
/// jets y_i(x) with y_i(P) = y0_i, return the jet of f(y(x)).
inline Jet substitute(const Jet& f, std::span<const Jet> y) {
  if (f.is_constant()) return f;
  const int n = f.dimension();
  if (static_cast<int>(y.size()) != n) throw InputError("substitute: argument count mismatch");
  int dim = 0;
  int order = f.order();
  for (const auto& yi : y)
    if (!yi.is_constant()) {
      dim = yi.dimension();
      order = std::min(order, yi.order());
    }
  if (dim == 0) return Jet(f.value());
  std::vector<Jet> h;
  h.reserve(y.size());
  for (const auto& yi : y) {
    Jet d = yi.promoted(dim, order);
    d.coefficients()[0] = 0.0;
    h.push_back(std::move(d));
  }
  const auto& t = detail::jet_table(n);
  const std::size_t count = t.size_upto[static_cast<std::size_t>(order)];
  std::vector<Jet> powers;
  powers.reserve(count);
  powers.emplace_back(dim, order, 1.0);
  Jet out(dim, order, f.coefficients()[0]);
  for (std::size_t a = 1; a < count; ++a) {
    const auto [i, p] = t.parent[a];
    powers.push_back(powers[static_cast<std::size_t>(p)] * h[static_cast<std::size_t>(i)]);
    const double c = f.coefficients()[a];
    if (c != 0.0) out += powers.back() * c;
  }
  return out;
}

}  // namespace germforge
