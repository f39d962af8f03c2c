#pragma once

// Arithmetic over a prime field F_q, dense matrices over F_q, and the
// extension field F_{q^l} in the polynomial basis.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace regen {

using Residue = std::uint32_t;

class FieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public FieldError {
 public:
  using FieldError::FieldError;
};

inline bool is_prime(std::uint64_t v) {
  if (v < 2) return false;
  if (v % 2 == 0) return v == 2;
  for (std::uint64_t p = 3; p * p <= v; p += 2) {
    if (v % p == 0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// PrimeField
// ---------------------------------------------------------------------------

class PrimeField {
 public:
  explicit PrimeField(std::uint32_t q) : q_(q) {
    if (!is_prime(q)) {
      throw FieldError("field modulus " + std::to_string(q) + " is not prime");
    }
    if (q >= (1u << 31)) {
      throw FieldError("field modulus must be below 2^31");
    }
    // Lemire's fastmod constant: a mod q == ((M * a) * q) >> 64 for a < 2^32.
    fastmod_ = ~std::uint64_t{0} / q + 1;
  }

  [[nodiscard]] std::uint32_t order() const noexcept { return q_; }

  [[nodiscard]] Residue reduce(std::uint64_t v) const noexcept {
    if (v >> 32) return static_cast<Residue>(v % q_);
    return reduce32(static_cast<std::uint32_t>(v));
  }

  [[nodiscard]] Residue reduce32(std::uint32_t v) const noexcept {
    const std::uint64_t low = fastmod_ * v;
    return static_cast<Residue>(
        (static_cast<unsigned __int128>(low) * q_) >> 64);
  }

  [[nodiscard]] Residue add(Residue a, Residue b) const noexcept {
    const std::uint32_t s = a + b;
    return s >= q_ ? s - q_ : s;
  }
  [[nodiscard]] Residue sub(Residue a, Residue b) const noexcept {
    return a >= b ? a - b : a + q_ - b;
  }
  [[nodiscard]] Residue neg(Residue a) const noexcept {
    return a == 0 ? 0 : q_ - a;
  }
  [[nodiscard]] Residue mul(Residue a, Residue b) const noexcept {
    return reduce(static_cast<std::uint64_t>(a) * b);
  }
  [[nodiscard]] Residue pow(Residue a, std::uint64_t e) const noexcept {
    Residue result = 1 % q_;
    Residue base = a;
    while (e) {
      if (e & 1) result = mul(result, base);
      base = mul(base, base);
      e >>= 1;
    }
    return result;
  }
  [[nodiscard]] Residue inv(Residue a) const {
    if (a % q_ == 0) throw FieldError("inverse of zero in F_q");
    return pow(a, q_ - 2);
  }

  // Small fields keep products of two residues plus one residue below 2^32.
  [[nodiscard]] bool fits_u32_products() const noexcept { return q_ <= 65536; }

  template <typename Rng>
  [[nodiscard]] Residue random(Rng& rng) const {
    return std::uniform_int_distribution<std::uint32_t>(0, q_ - 1)(rng);
  }
  template <typename Rng>
  [[nodiscard]] Residue random_nonzero(Rng& rng) const {
    return std::uniform_int_distribution<std::uint32_t>(1, q_ - 1)(rng);
  }

  friend bool operator==(const PrimeField& a, const PrimeField& b) noexcept {
    return a.q_ == b.q_;
  }

 private:
  std::uint32_t q_;
  std::uint64_t fastmod_;
};

// dst[i] += factor * src[i]  (mod q). The hot loop of every elimination.
inline void axpy(const PrimeField& f, Residue factor, std::span<const Residue> src,
                 std::span<Residue> dst) noexcept {
  if (factor == 0) return;
  const std::size_t n = std::min(src.size(), dst.size());
  if (f.fits_u32_products()) {
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = f.reduce32(dst[i] + factor * src[i]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      dst[i] = f.reduce(dst[i] + static_cast<std::uint64_t>(factor) * src[i]);
    }
  }
}

inline void scale_in_place(const PrimeField& f, Residue factor,
                           std::span<Residue> v) noexcept {
  for (auto& x : v) x = f.mul(x, factor);
}

// ---------------------------------------------------------------------------
// Matrix over F_q (row-major, value type)
// ---------------------------------------------------------------------------

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<Residue> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw FieldError("matrix data size does not match its shape");
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  // Builds a matrix from nested rows; every row must have the same length.
  static Matrix from_rows(const std::vector<std::vector<Residue>>& rows,
                          std::size_t cols_if_empty = 0) {
    const std::size_t cols = rows.empty() ? cols_if_empty : rows.front().size();
    Matrix m(0, cols);
    for (const auto& r : rows) m.append_row(r);
    return m;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

  Residue& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  Residue operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<Residue> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  [[nodiscard]] std::span<const Residue> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  void append_row(std::span<const Residue> r) {
    if (r.size() != cols_) throw FieldError("row length does not match matrix width");
    data_.insert(data_.end(), r.begin(), r.end());
    ++rows_;
  }

  void append_rows(const Matrix& other) {
    if (other.rows_ == 0) return;
    if (other.cols_ != cols_) throw FieldError("column count mismatch when stacking");
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
    rows_ += other.rows_;
  }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    std::swap_ranges(data_.begin() + a * cols_, data_.begin() + (a + 1) * cols_,
                     data_.begin() + b * cols_);
  }

  void truncate_rows(std::size_t n) {
    rows_ = std::min(rows_, n);
    data_.resize(rows_ * cols_);
  }

  [[nodiscard]] const std::vector<Residue>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Residue> data_;
};

inline Matrix stack(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0 && a.cols() != b.cols()) return b;
  Matrix out = a;
  out.append_rows(b);
  return out;
}

inline Matrix multiply(const PrimeField& f, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw FieldError("matrix product shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t t = 0; t < a.cols(); ++t) {
      axpy(f, a(i, t), b.row(t), out.row(i));
    }
  }
  return out;
}

inline std::vector<Residue> multiply(const PrimeField& f, const Matrix& a,
                                     std::span<const Residue> x) {
  if (a.cols() != x.size()) throw FieldError("matrix-vector shape mismatch");
  std::vector<Residue> out(a.rows(), 0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::uint64_t acc = 0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      acc += static_cast<std::uint64_t>(a(i, j)) * x[j];
      if (acc >= (std::uint64_t{1} << 63)) acc = f.reduce(acc);
    }
    out[i] = f.reduce(acc);
  }
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

struct EchelonForm {
  Matrix reduced;                   // reduced row echelon form, zero rows dropped
  std::vector<std::size_t> pivots;  // pivot column of each kept row
  [[nodiscard]] std::size_t rank() const noexcept { return pivots.size(); }
};

// Gauss-Jordan elimination; only the first `active_cols` columns are used to
// choose pivots (remaining columns ride along, e.g. an augmented identity).
inline std::size_t eliminate(const PrimeField& f, Matrix& m,
                             std::vector<std::size_t>* pivots = nullptr,
                             std::size_t active_cols = static_cast<std::size_t>(-1),
                             bool full_reduce = true) {
  const std::size_t cols = std::min(active_cols, m.cols());
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < m.rows(); ++c) {
    std::size_t p = rank;
    while (p < m.rows() && m(p, c) == 0) ++p;
    if (p == m.rows()) continue;
    m.swap_rows(rank, p);
    const Residue inv = f.inv(m(rank, c));
    if (inv != 1) scale_in_place(f, inv, m.row(rank).subspan(c));
    const auto pivot_row = m.row(rank).subspan(c);
    for (std::size_t i = full_reduce ? 0 : rank + 1; i < m.rows(); ++i) {
      if (i == rank) continue;
      const Residue v = m(i, c);
      if (v != 0) axpy(f, f.neg(v), pivot_row, m.row(i).subspan(c));
    }
    if (pivots) pivots->push_back(c);
    ++rank;
  }
  return rank;
}

inline EchelonForm echelon(const PrimeField& f, Matrix m) {
  EchelonForm e;
  const std::size_t r = eliminate(f, m, &e.pivots);
  m.truncate_rows(r);
  e.reduced = std::move(m);
  return e;
}

inline std::size_t rank(const PrimeField& f, Matrix m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  return eliminate(f, m, nullptr, static_cast<std::size_t>(-1), false);
}

// Unique x with A x = y for square invertible A over F_q.
inline std::vector<Residue> solve_linear(const PrimeField& f, const Matrix& a,
                                         std::span<const Residue> y) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw FieldError("solve_linear needs a square matrix");
  if (y.size() != n) throw FieldError("right-hand side length mismatch");
  Matrix aug(n, n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(a.row(i).begin(), a.row(i).end(), aug.row(i).begin());
    aug(i, n) = y[i];
  }
  if (eliminate(f, aug, nullptr, n) < n) throw SingularMatrixError("singular matrix");
  std::vector<Residue> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = aug(i, n);
  return x;
}

// Rows spanning { x : x * m = 0 }.
inline Matrix left_kernel(const PrimeField& f, const Matrix& m) {
  const std::size_t rows = m.rows();
  Matrix aug(rows, m.cols() + rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy(m.row(i).begin(), m.row(i).end(), aug.row(i).begin());
    aug(i, m.cols() + i) = 1;
  }
  const std::size_t r = eliminate(f, aug, nullptr, m.cols());
  Matrix kernel(0, rows);
  for (std::size_t i = r; i < rows; ++i) {
    kernel.append_row(aug.row(i).subspan(m.cols()));
  }
  return kernel;
}

// Basis (rows, reduced echelon) of rowspace(U) ∩ rowspace(V).
inline Matrix intersection_basis(const PrimeField& f, const Matrix& u, const Matrix& v) {
  if (u.cols() != v.cols()) throw FieldError("ambient dimension mismatch");
  const std::size_t l = u.cols();
  if (u.rows() == 0 || v.rows() == 0) return Matrix(0, l);
  // (a, b) in the left kernel of [U; V] gives a U = -b V in both row spaces.
  const Matrix kernel = left_kernel(f, stack(u, v));
  Matrix out(0, l);
  std::vector<Residue> w(l);
  for (std::size_t i = 0; i < kernel.rows(); ++i) {
    std::fill(w.begin(), w.end(), 0);
    for (std::size_t t = 0; t < u.rows(); ++t) axpy(f, kernel(i, t), u.row(t), w);
    out.append_row(w);
  }
  return echelon(f, std::move(out)).reduced;
}

// ---------------------------------------------------------------------------
// Polynomials over F_q (coefficient vectors, lowest degree first)
// ---------------------------------------------------------------------------

namespace poly {

using Poly = std::vector<Residue>;

inline void trim(Poly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

inline std::ptrdiff_t degree(const Poly& p) {
  return static_cast<std::ptrdiff_t>(p.size()) - 1;
}

inline Poly sub(const PrimeField& f, Poly a, const Poly& b) {
  if (a.size() < b.size()) a.resize(b.size(), 0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] = f.sub(a[i], b[i]);
  trim(a);
  return a;
}

inline Poly mul(const PrimeField& f, const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<std::uint64_t> acc(a.size() + b.size() - 1, 0);
  const std::uint64_t limit = std::uint64_t{1} << 62;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) {
      acc[i + j] += static_cast<std::uint64_t>(a[i]) * b[j];
      if (acc[i + j] >= limit) acc[i + j] = f.reduce(acc[i + j]);
    }
  }
  Poly out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = f.reduce(acc[i]);
  trim(out);
  return out;
}

// Remainder of a modulo b (b nonzero).
inline Poly mod(const PrimeField& f, Poly a, const Poly& b) {
  trim(a);
  if (b.empty()) throw FieldError("polynomial division by zero");
  const std::size_t db = b.size() - 1;
  const Residue lead_inv = f.inv(b.back());
  while (a.size() > db) {
    const Residue factor = f.mul(a.back(), lead_inv);
    const std::size_t shift = a.size() - 1 - db;
    for (std::size_t i = 0; i <= db; ++i) {
      a[shift + i] = f.sub(a[shift + i], f.mul(factor, b[i]));
    }
    trim(a);
  }
  return a;
}

inline std::pair<Poly, Poly> divmod(const PrimeField& f, Poly a, const Poly& b) {
  trim(a);
  if (b.empty()) throw FieldError("polynomial division by zero");
  const std::size_t db = b.size() - 1;
  const Residue lead_inv = f.inv(b.back());
  Poly quot(a.size() > db ? a.size() - db : 0, 0);
  while (a.size() > db) {
    const Residue factor = f.mul(a.back(), lead_inv);
    const std::size_t shift = a.size() - 1 - db;
    quot[shift] = factor;
    for (std::size_t i = 0; i <= db; ++i) {
      a[shift + i] = f.sub(a[shift + i], f.mul(factor, b[i]));
    }
    trim(a);
  }
  trim(quot);
  return {std::move(quot), std::move(a)};
}

inline Poly mulmod(const PrimeField& f, const Poly& a, const Poly& b, const Poly& m) {
  return mod(f, mul(f, a, b), m);
}

inline Poly powmod(const PrimeField& f, Poly base, std::uint64_t e, const Poly& m) {
  Poly result{1};
  result = mod(f, result, m);
  base = mod(f, std::move(base), m);
  while (e) {
    if (e & 1) result = mulmod(f, result, base, m);
    e >>= 1;
    if (e) base = mulmod(f, base, base, m);
  }
  return result;
}

inline Poly make_monic(const PrimeField& f, Poly a) {
  trim(a);
  if (a.empty()) return a;
  const Residue inv = f.inv(a.back());
  for (auto& c : a) c = f.mul(c, inv);
  return a;
}

inline Poly gcd(const PrimeField& f, Poly a, Poly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = mod(f, a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return make_monic(f, std::move(a));
}

// Ben-Or test: a monic f of degree l is irreducible iff
// gcd(x^{q^i} - x, f) = 1 for every 1 <= i <= l/2.
inline bool is_irreducible(const PrimeField& f, const Poly& m) {
  Poly p = m;
  trim(p);
  const auto l = degree(p);
  if (l < 1) return false;
  if (l == 1) return true;
  const Poly x{0, 1};
  Poly h = mod(f, x, p);
  for (std::ptrdiff_t i = 1; i <= l / 2; ++i) {
    h = powmod(f, h, f.order(), p);
    const Poly g = gcd(f, p, sub(f, h, x));
    if (g.size() != 1) return false;
  }
  return true;
}

}  // namespace poly

// ---------------------------------------------------------------------------
// Extension field F_{q^l}
// ---------------------------------------------------------------------------

// An element of F_{q^l}: l coordinates over F_q in the basis 1, x, ..., x^{l-1}.
// `field_id` ties the element to the context that produced it.
struct ExtElement {
  std::vector<Residue> coeffs;
  std::uint64_t field_id = 0;

  [[nodiscard]] bool is_zero() const noexcept {
    return std::all_of(coeffs.begin(), coeffs.end(), [](Residue c) { return c == 0; });
  }
  friend bool operator==(const ExtElement& a, const ExtElement& b) {
    return a.coeffs == b.coeffs;
  }
};

inline constexpr std::uint64_t kDefaultFieldSeed = 0x5eed0f1e1d5ULL;

class ExtField {
 public:
  // Searches for a monic irreducible modulus of degree l with a seeded RNG.
  static ExtField make(std::uint32_t q, std::size_t l,
                       std::uint64_t seed = kDefaultFieldSeed) {
    const PrimeField base(q);
    if (l == 0) throw FieldError("extension degree must be at least 1");
    std::mt19937_64 rng(seed);
    const std::size_t budget = 1000 + 200 * l;
    for (std::size_t attempt = 0; attempt < budget; ++attempt) {
      poly::Poly cand(l + 1);
      for (std::size_t i = 0; i < l; ++i) cand[i] = base.random(rng);
      cand[l] = 1;
      if (l > 1 && cand[0] == 0) continue;  // divisible by x
      if (poly::is_irreducible(base, cand)) return ExtField(base, std::move(cand));
    }
    throw FieldError("no irreducible polynomial found within the search budget");
  }

  // Uses the given monic modulus; rejects reducible candidates.
  static ExtField with_modulus(std::uint32_t q, poly::Poly modulus) {
    const PrimeField base(q);
    for (auto& c : modulus) c = base.reduce(c);
    poly::trim(modulus);
    if (modulus.size() < 2 || modulus.back() != 1) {
      throw FieldError("modulus must be monic of degree at least 1");
    }
    if (!poly::is_irreducible(base, modulus)) {
      throw FieldError("modulus is reducible over F_q");
    }
    return ExtField(base, std::move(modulus));
  }

  [[nodiscard]] const PrimeField& base() const noexcept { return impl_->base; }
  [[nodiscard]] std::uint32_t q() const noexcept { return impl_->base.order(); }
  [[nodiscard]] std::size_t degree() const noexcept { return impl_->l; }
  [[nodiscard]] const poly::Poly& modulus() const noexcept { return impl_->modulus; }
  [[nodiscard]] const Matrix& frobenius_matrix() const noexcept { return impl_->frobenius; }
  [[nodiscard]] std::uint64_t id() const noexcept { return impl_->id; }

  [[nodiscard]] ExtElement zero() const { return {std::vector<Residue>(degree(), 0), id()}; }
  [[nodiscard]] ExtElement one() const {
    ExtElement e = zero();
    e.coeffs[0] = 1;
    return e;
  }
  [[nodiscard]] ExtElement element(std::vector<Residue> coeffs) const {
    if (coeffs.size() != degree()) throw FieldError("element has wrong number of coordinates");
    for (auto& c : coeffs) {
      if (c >= q()) throw FieldError("coordinate out of range for F_q");
    }
    return {std::move(coeffs), id()};
  }
  // The basis vector x^i, i.e. e_{i+1} of F_q^l.
  [[nodiscard]] ExtElement basis(std::size_t i) const {
    ExtElement e = zero();
    e.coeffs.at(i) = 1;
    return e;
  }
  template <typename Rng>
  [[nodiscard]] ExtElement random(Rng& rng) const {
    ExtElement e = zero();
    for (auto& c : e.coeffs) c = base().random(rng);
    return e;
  }

  [[nodiscard]] ExtElement add(const ExtElement& a, const ExtElement& b) const {
    check(a);
    check(b);
    ExtElement out = a;
    for (std::size_t i = 0; i < degree(); ++i) out.coeffs[i] = base().add(a.coeffs[i], b.coeffs[i]);
    return out;
  }
  [[nodiscard]] ExtElement sub(const ExtElement& a, const ExtElement& b) const {
    check(a);
    check(b);
    ExtElement out = a;
    for (std::size_t i = 0; i < degree(); ++i) out.coeffs[i] = base().sub(a.coeffs[i], b.coeffs[i]);
    return out;
  }
  [[nodiscard]] ExtElement neg(const ExtElement& a) const {
    check(a);
    ExtElement out = a;
    for (auto& c : out.coeffs) c = base().neg(c);
    return out;
  }
  // Multiplication by an element of the base field.
  [[nodiscard]] ExtElement scale(Residue s, const ExtElement& a) const {
    check(a);
    ExtElement out = a;
    scale_in_place(base(), base().reduce(s), out.coeffs);
    return out;
  }
  [[nodiscard]] ExtElement mul(const ExtElement& a, const ExtElement& b) const {
    check(a);
    check(b);
    poly::Poly prod = poly::mul(base(), a.coeffs, b.coeffs);
    return from_poly(poly::mod(base(), std::move(prod), modulus()));
  }
  [[nodiscard]] ExtElement inv(const ExtElement& a) const {
    check(a);
    if (a.is_zero()) throw FieldError("inverse of zero in F_{q^l}");
    // Extended Euclid: track s with s * a == r (mod modulus).
    poly::Poly r0 = modulus(), r1 = a.coeffs;
    poly::trim(r1);
    poly::Poly s0{}, s1{1};
    while (r1.size() > 1) {
      auto [quot, rem] = poly::divmod(base(), r0, r1);
      poly::Poly s2 = poly::sub(base(), s0, poly::mul(base(), quot, s1));
      r0 = std::move(r1);
      r1 = std::move(rem);
      s0 = std::move(s1);
      s1 = std::move(s2);
    }
    // r1 is a nonzero constant since the modulus is irreducible.
    const Residue c = base().inv(r1.at(0));
    for (auto& v : s1) v = base().mul(v, c);
    return from_poly(poly::mod(base(), std::move(s1), modulus()));
  }
  [[nodiscard]] ExtElement pow(const ExtElement& a, std::uint64_t e) const {
    ExtElement result = one();
    ExtElement b = a;
    while (e) {
      if (e & 1) result = mul(result, b);
      e >>= 1;
      if (e) b = mul(b, b);
    }
    return result;
  }

  // a^q via the precomputed Frobenius matrix.
  [[nodiscard]] ExtElement frobenius(const ExtElement& a) const {
    check(a);
    return {multiply(base(), frobenius_matrix(), a.coeffs), id()};
  }
  // a^{q^i}; i is reduced mod l because the Frobenius map has order l.
  [[nodiscard]] ExtElement frobenius_power(const ExtElement& a, std::uint64_t i) const {
    ExtElement out = a;
    check(out);
    for (std::uint64_t t = 0; t < i % degree(); ++t) out = frobenius(out);
    return out;
  }

  void check(const ExtElement& a) const {
    if (a.coeffs.size() != degree() || (a.field_id != 0 && a.field_id != id())) {
      throw FieldError("element belongs to a different field context");
    }
  }

  friend bool operator==(const ExtField& a, const ExtField& b) {
    return a.q() == b.q() && a.modulus() == b.modulus();
  }

 private:
  struct Impl {
    PrimeField base;
    std::size_t l;
    poly::Poly modulus;
    Matrix frobenius;
    std::uint64_t id;
  };

  ExtField(PrimeField base, poly::Poly modulus) {
    const std::size_t l = modulus.size() - 1;
    // Column j of the Frobenius matrix holds (x^q)^j mod modulus.
    Matrix frob(l, l);
    const poly::Poly xq = poly::powmod(base, poly::Poly{0, 1}, base.order(), modulus);
    poly::Poly col{1};
    for (std::size_t j = 0; j < l; ++j) {
      for (std::size_t i = 0; i < col.size(); ++i) frob(i, j) = col[i];
      col = poly::mulmod(base, col, xq, modulus);
    }
    std::uint64_t h = std::hash<std::uint64_t>{}(base.order()) ^ (l * 0x9e3779b97f4a7c15ULL);
    for (Residue c : modulus) h = (h ^ c) * 0x100000001b3ULL;
    if (h == 0) h = 1;
    impl_ = std::make_shared<const Impl>(
        Impl{base, l, std::move(modulus), std::move(frob), h});
  }

  [[nodiscard]] ExtElement from_poly(poly::Poly p) const {
    p.resize(degree(), 0);
    return {std::move(p), id()};
  }

  std::shared_ptr<const Impl> impl_;
};

// Dense matrix over F_{q^l}, row-major.
using ExtMatrix = std::vector<std::vector<ExtElement>>;

// Solves A X = Y for square invertible A over F_{q^l}; Y may carry several
// right-hand-side columns (one per column index of each row).
inline std::vector<std::vector<ExtElement>> solve_linear(
    const ExtField& field, ExtMatrix a, std::vector<std::vector<ExtElement>> rhs) {
  const std::size_t n = a.size();
  if (rhs.size() != n) throw FieldError("right-hand side length mismatch");
  for (const auto& row : a) {
    if (row.size() != n) throw FieldError("solve_linear needs a square matrix");
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && a[p][c].is_zero()) ++p;
    if (p == n) throw SingularMatrixError("singular matrix over F_{q^l}");
    std::swap(a[c], a[p]);
    std::swap(rhs[c], rhs[p]);
    const ExtElement inv = field.inv(a[c][c]);
    for (std::size_t j = c; j < n; ++j) a[c][j] = field.mul(a[c][j], inv);
    for (auto& v : rhs[c]) v = field.mul(v, inv);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || a[i][c].is_zero()) continue;
      const ExtElement factor = a[i][c];
      for (std::size_t j = c; j < n; ++j) {
        a[i][j] = field.sub(a[i][j], field.mul(factor, a[c][j]));
      }
      for (std::size_t t = 0; t < rhs[i].size(); ++t) {
        rhs[i][t] = field.sub(rhs[i][t], field.mul(factor, rhs[c][t]));
      }
    }
  }
  return rhs;
}

inline std::vector<ExtElement> solve_linear(const ExtField& field, const ExtMatrix& a,
                                            const std::vector<ExtElement>& y) {
  std::vector<std::vector<ExtElement>> rhs;
  rhs.reserve(y.size());
  for (const auto& v : y) rhs.push_back({v});
  auto x = solve_linear(field, a, std::move(rhs));
  std::vector<ExtElement> out;
  out.reserve(x.size());
  for (auto& row : x) out.push_back(std::move(row.front()));
  return out;
}

}  // namespace regen
