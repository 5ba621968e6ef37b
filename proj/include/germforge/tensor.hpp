#pragma once

// Dense coordinate tensors over a scalar type (double or Jet) and an
// einsum-style contraction used to transcribe index formulas.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "germforge/error.hpp"
#include "germforge/jet.hpp"

namespace germforge {

template <class T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, int rank, const T& fill = T{})
      : dim_(dim), rank_(rank), data_(pow_size(dim, rank), fill) {}
  Tensor(int dim, int rank, std::vector<T> data) : dim_(dim), rank_(rank), data_(std::move(data)) {
    if (data_.size() != pow_size(dim, rank)) throw InputError("tensor data size does not match dim^rank");
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int rank() const { return rank_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::vector<T>& data() { return data_; }
  [[nodiscard]] const std::vector<T>& data() const { return data_; }

  [[nodiscard]] std::size_t flat(std::span<const int> idx) const {
    std::size_t f = 0;
    for (int i : idx) f = f * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return f;
  }
  template <class... I>
  T& operator()(I... idx) {
    const std::array<int, sizeof...(I)> a{static_cast<int>(idx)...};
    return data_[flat(a)];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    const std::array<int, sizeof...(I)> a{static_cast<int>(idx)...};
    return data_[flat(a)];
  }
  T& at(std::span<const int> idx) { return data_[flat(idx)]; }
  const T& at(std::span<const int> idx) const { return data_[flat(idx)]; }

  /// Decompose a flat offset into a multi-index.
  void unflatten(std::size_t f, std::span<int> idx) const {
    for (int k = rank_ - 1; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = static_cast<int>(f % static_cast<std::size_t>(dim_));
      f /= static_cast<std::size_t>(dim_);
    }
  }

  Tensor& operator+=(const Tensor& o) {
    check_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    check_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (auto& x : data_) x *= s;
    return *this;
  }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

  static std::size_t pow_size(int dim, int rank) {
    std::size_t n = 1;
    for (int k = 0; k < rank; ++k) n *= static_cast<std::size_t>(dim);
    return n;
  }

 private:
  void check_shape(const Tensor& o) const {
    if (o.dim_ != dim_ || o.rank_ != rank_) throw InputError("tensor shape mismatch");
  }

  int dim_ = 0;
  int rank_ = 0;
  std::vector<T> data_;
};

using RealTensor = Tensor<double>;
using JetTensor = Tensor<Jet>;

inline double scalar_value(double x) { return x; }
inline double scalar_value(const Jet& x) { return x.value(); }

/// Values (order-0 part) of a jet tensor.
inline RealTensor values(const JetTensor& t) {
  RealTensor out(t.dim(), t.rank());
  for (std::size_t i = 0; i < t.size(); ++i) out.data()[i] = t.data()[i].value();
  return out;
}

/// Truncate every component to the given order.
inline JetTensor truncated(const JetTensor& t, int order) {
  JetTensor out = t;
  for (auto& x : out.data()) x = x.truncated(order);
  return out;
}

template <class T>
double max_abs(const Tensor<T>& t) {
  double m = 0.0;
  for (const auto& x : t.data()) m = std::max(m, std::abs(scalar_value(x)));
  return m;
}

template <class T>
double max_abs_difference(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.size() != b.size()) throw InputError("tensor shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(scalar_value(a.data()[i]) - scalar_value(b.data()[i])));
  return m;
}

/// Reorder slots: out(idx[perm[0]], ..., idx[perm[r-1]]) = in(idx). perm[k]
/// names the input slot that becomes output slot k.
template <class T>
Tensor<T> permuted(const Tensor<T>& in, std::span<const int> perm) {
  const int r = in.rank();
  if (static_cast<int>(perm.size()) != r) throw InputError("permutation length mismatch");
  Tensor<T> out(in.dim(), r);
  std::vector<int> idx(static_cast<std::size_t>(r)), oidx(static_cast<std::size_t>(r));
  for (std::size_t f = 0; f < in.size(); ++f) {
    in.unflatten(f, idx);
    for (int k = 0; k < r; ++k) oidx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
    out.at(oidx) = in.data()[f];
  }
  return out;
}

namespace detail {

inline void multiply_add(double& out, double a, double b) { out += a * b; }
inline void multiply_add(Jet& out, const Jet& a, const Jet& b) { out.add_product(a, b); }

inline int label_slot(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  if (c >= 'A' && c <= 'Z') return 26 + (c - 'A');
  throw InputError(std::string("einsum: invalid label '") + c + "'");
}

template <class T>
struct Labelled {
  std::string labels;
  Tensor<T> tensor;
};

// Contract two labelled tensors, keeping labels listed in `keep` (in order).
template <class T>
Labelled<T> contract_pair(const Labelled<T>& a, const Labelled<T>& b, const std::string& keep, int dim) {
  std::string all;
  for (char c : a.labels + b.labels)
    if (all.find(c) == std::string::npos) all.push_back(c);
  const int n = static_cast<int>(all.size());
  auto pos = [&](char c) { return static_cast<int>(all.find(c)); };
  std::vector<int> a_map, b_map, k_map;
  for (char c : a.labels) a_map.push_back(pos(c));
  for (char c : b.labels) b_map.push_back(pos(c));
  for (char c : keep) k_map.push_back(pos(c));
  Labelled<T> out{keep, Tensor<T>(dim, static_cast<int>(keep.size()))};
  std::vector<int> v(static_cast<std::size_t>(n), 0);
  const std::size_t total = Tensor<T>::pow_size(dim, n);
  auto offset = [&](const std::vector<int>& map) {
    std::size_t f = 0;
    for (int p : map) f = f * static_cast<std::size_t>(dim) + static_cast<std::size_t>(v[static_cast<std::size_t>(p)]);
    return f;
  };
  for (std::size_t it = 0; it < total; ++it) {
    std::size_t rem = it;
    for (int k = n - 1; k >= 0; --k) {
      v[static_cast<std::size_t>(k)] = static_cast<int>(rem % static_cast<std::size_t>(dim));
      rem /= static_cast<std::size_t>(dim);
    }
    multiply_add(out.tensor.data()[offset(k_map)], a.tensor.data()[offset(a_map)], b.tensor.data()[offset(b_map)]);
  }
  return out;
}

// Sum/permute a single labelled tensor down to `keep`.
template <class T>
Tensor<T> reduce_to(const Labelled<T>& a, const std::string& keep, int dim) {
  std::string all;
  for (char c : a.labels)
    if (all.find(c) == std::string::npos) all.push_back(c);
  const int n = static_cast<int>(all.size());
  auto pos = [&](char c) { return static_cast<int>(all.find(c)); };
  std::vector<int> a_map, k_map;
  for (char c : a.labels) a_map.push_back(pos(c));
  for (char c : keep) k_map.push_back(pos(c));
  Tensor<T> out(dim, static_cast<int>(keep.size()));
  std::vector<int> v(static_cast<std::size_t>(n), 0);
  const std::size_t total = Tensor<T>::pow_size(dim, n);
  for (std::size_t it = 0; it < total; ++it) {
    std::size_t rem = it;
    for (int k = n - 1; k >= 0; --k) {
      v[static_cast<std::size_t>(k)] = static_cast<int>(rem % static_cast<std::size_t>(dim));
      rem /= static_cast<std::size_t>(dim);
    }
    std::size_t fa = 0, fk = 0;
    for (int p : a_map) fa = fa * static_cast<std::size_t>(dim) + static_cast<std::size_t>(v[static_cast<std::size_t>(p)]);
    for (int p : k_map) fk = fk * static_cast<std::size_t>(dim) + static_cast<std::size_t>(v[static_cast<std::size_t>(p)]);
    out.data()[fk] += a.tensor.data()[fa];
  }
  return out;
}

}  // namespace detail

/// Einstein-summation contraction, e.g. einsum("ab,bc->ac", {&A, &B}).
/// Operands are contracted pairwise left to right; a label is summed as soon
/// as no later operand and not the output refers to it.
template <class T>
Tensor<T> einsum(std::string_view spec, std::initializer_list<const Tensor<T>*> operands) {
  const auto arrow = spec.find("->");
  if (arrow == std::string_view::npos) throw InputError("einsum: missing '->'");
  const std::string output(spec.substr(arrow + 2));
  std::vector<std::string> inputs;
  {
    std::string cur;
    for (char c : spec.substr(0, arrow)) {
      if (c == ',') {
        inputs.push_back(cur);
        cur.clear();
      } else if (c != ' ') {
        cur.push_back(c);
      }
    }
    inputs.push_back(cur);
  }
  if (inputs.size() != operands.size()) throw InputError("einsum: operand count mismatch");
  std::vector<const Tensor<T>*> ops(operands);
  const int dim = ops.front()->dim();
  for (std::size_t k = 0; k < ops.size(); ++k) {
    if (ops[k]->rank() != static_cast<int>(inputs[k].size()))
      throw InputError("einsum: rank of operand " + std::to_string(k) + " does not match '" + inputs[k] + "'");
    if (ops[k]->dim() != dim) throw InputError("einsum: dimension mismatch");
    for (char c : inputs[k]) (void)detail::label_slot(c);
  }
  detail::Labelled<T> acc{inputs[0], *ops[0]};
  for (std::size_t k = 1; k < ops.size(); ++k) {
    std::string later = output;
    for (std::size_t j = k + 1; j < ops.size(); ++j) later += inputs[j];
    std::string keep;
    for (char c : acc.labels + inputs[k])
      if (later.find(c) != std::string::npos && keep.find(c) == std::string::npos) keep.push_back(c);
    acc = detail::contract_pair(acc, detail::Labelled<T>{inputs[k], *ops[k]}, keep, dim);
  }
  return detail::reduce_to(acc, output, dim);
}

// ---------------------------------------------------------------------------
// Square matrices stored as rank-2 tensors M(i, j) (row i, column j).

inline Eigen::MatrixXd to_eigen(const RealTensor& m) {
  const int n = m.dim();
  Eigen::MatrixXd e(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) e(i, j) = m(i, j);
  return e;
}

inline RealTensor from_eigen(const Eigen::MatrixXd& e) {
  const int n = static_cast<int>(e.rows());
  RealTensor m(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = e(i, j);
  return m;
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  return einsum<T>("ij,jk->ik", {&a, &b});
}

template <class T>
Tensor<T> transposed(const Tensor<T>& a) {
  const std::array<int, 2> perm{1, 0};
  return permuted(a, perm);
}

/// Inverse of a matrix of jets: value inverse plus the terminating Neumann
/// series in the nilpotent part. Throws DomainError if the value is singular.
inline JetTensor inverse(const JetTensor& m, double singular_tol = 1e-12) {
  const int n = m.dim();
  const Eigen::MatrixXd v = to_eigen(values(m));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(v);
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  if (!lu.isInvertible() || std::abs(v.determinant()) < singular_tol * std::pow(scale, n))
    throw DomainError("singular matrix (|det| below tolerance)");
  const Eigen::MatrixXd vinv = lu.inverse();
  JetTensor inv0(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) inv0(i, j) = Jet(vinv(i, j));
  // N = m - value(m); inverse = sum_k (-inv0 N)^k inv0
  JetTensor nil = m;
  int order = 0;
  for (auto& x : nil.data()) {
    x.coefficients()[0] = 0.0;
    if (!x.is_constant()) order = std::max(order, x.order());
  }
  JetTensor step = matmul(inv0, nil);
  step *= -1.0;
  JetTensor term = inv0;
  JetTensor out = inv0;
  for (int k = 1; k <= order; ++k) {
    term = matmul(step, term);
    out += term;
  }
  return out;
}

inline RealTensor identity_matrix(int n) {
  RealTensor id(n, 2);
  for (int i = 0; i < n; ++i) id(i, i) = 1.0;
  return id;
}

inline JetTensor to_jets(const RealTensor& t) {
  JetTensor out(t.dim(), t.rank());
  for (std::size_t i = 0; i < t.size(); ++i) out.data()[i] = Jet(t.data()[i]);
  return out;
}

}  // namespace germforge
