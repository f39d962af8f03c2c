#pragma once

// Linearized polynomials f(x) = sum_i m_i x^{q^{i-1}} over F_{q^l}: the file
// encoding used by the storage code. Evaluation is F_q-linear in x, so any
// F_q-combination of stored evaluations is again an evaluation.

#include <cstddef>
#include <vector>

#include "regen/finite_field.hpp"

namespace regen {

using EvaluationPoint = ExtElement;

class LinearizedPolynomial {
 public:
  LinearizedPolynomial(ExtField field, std::vector<ExtElement> coeffs)
      : field_(std::move(field)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() > field_.degree()) {
      throw FieldError("linearized polynomial needs P <= l (P = " +
                       std::to_string(coeffs_.size()) +
                       ", l = " + std::to_string(field_.degree()) + ")");
    }
    for (const auto& c : coeffs_) field_.check(c);
  }

  [[nodiscard]] const ExtField& field() const noexcept { return field_; }
  [[nodiscard]] const std::vector<ExtElement>& coeffs() const noexcept { return coeffs_; }
  [[nodiscard]] std::size_t size() const noexcept { return coeffs_.size(); }

  // Sum of m_i * theta^{q^{i-1}}, keeping a running Frobenius image of theta.
  [[nodiscard]] ExtElement evaluate(const EvaluationPoint& theta) const {
    ExtElement acc = field_.zero();
    ExtElement power = theta;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      if (i > 0) power = field_.frobenius(power);
      acc = field_.add(acc, field_.mul(coeffs_[i], power));
    }
    return acc;
  }

  friend bool operator==(const LinearizedPolynomial& a, const LinearizedPolynomial& b) {
    return a.field_ == b.field_ && a.coeffs_ == b.coeffs_;
  }

 private:
  ExtField field_;
  std::vector<ExtElement> coeffs_;
};

inline LinearizedPolynomial encode_file(const ExtField& field,
                                        std::vector<ExtElement> packets) {
  return LinearizedPolynomial(field, std::move(packets));
}

// Q[i][j] = theta_i^{q^j}; one row per point, one column per monomial.
inline ExtMatrix moore_matrix(const ExtField& field,
                              const std::vector<EvaluationPoint>& points) {
  const std::size_t p = points.size();
  ExtMatrix q(p);
  for (std::size_t i = 0; i < p; ++i) {
    q[i].reserve(p);
    ExtElement power = points[i];
    field.check(power);
    for (std::size_t j = 0; j < p; ++j) {
      if (j > 0) power = field.frobenius(power);
      q[i].push_back(power);
    }
  }
  return q;
}

// The F_q-rank of a set of points viewed as vectors in F_q^l.
inline std::size_t points_rank(const ExtField& field,
                               const std::vector<EvaluationPoint>& points) {
  Matrix m(0, field.degree());
  for (const auto& pt : points) {
    field.check(pt);
    m.append_row(pt.coeffs);
  }
  return rank(field.base(), std::move(m));
}

class DependentPointsError : public FieldError {
 public:
  using FieldError::FieldError;
};

// Recovers several polynomials sharing the same evaluation points at once:
// values[i][s] is the evaluation of polynomial s at points[i].
inline std::vector<LinearizedPolynomial> interpolate_many(
    const ExtField& field, const std::vector<EvaluationPoint>& points,
    const std::vector<std::vector<ExtElement>>& values) {
  const std::size_t p = points.size();
  if (values.size() != p) throw FieldError("one value row per evaluation point is required");
  if (p > field.degree()) throw FieldError("more points than the extension degree");
  if (points_rank(field, points) < p) {
    throw DependentPointsError("evaluation points are linearly dependent over F_q");
  }
  const std::size_t stripes = p == 0 ? 0 : values.front().size();
  std::vector<std::vector<ExtElement>> solution;
  try {
    solution = solve_linear(field, moore_matrix(field, points), values);
  } catch (const SingularMatrixError&) {
    throw DependentPointsError("Moore matrix is singular");
  }
  std::vector<LinearizedPolynomial> out;
  out.reserve(stripes);
  for (std::size_t s = 0; s < stripes; ++s) {
    std::vector<ExtElement> coeffs;
    coeffs.reserve(p);
    for (std::size_t i = 0; i < p; ++i) coeffs.push_back(solution[i][s]);
    out.emplace_back(field, std::move(coeffs));
  }
  return out;
}

inline LinearizedPolynomial interpolate(const ExtField& field,
                                        const std::vector<EvaluationPoint>& points,
                                        const std::vector<ExtElement>& values) {
  if (values.size() != points.size()) {
    throw FieldError("one value per evaluation point is required");
  }
  if (points.empty()) return LinearizedPolynomial(field, {});
  std::vector<std::vector<ExtElement>> rows;
  rows.reserve(values.size());
  for (const auto& v : values) rows.push_back({v});
  return std::move(interpolate_many(field, points, rows).front());
}

}  // namespace regen
