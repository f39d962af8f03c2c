#pragma once

// Subspace view of node contents: each node stores the span of its
// evaluation points in F_q^l, and every information-theoretic quantity the
// code needs is a rank.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "regen/finite_field.hpp"

namespace regen {

class Subspace {
 public:
  Subspace(PrimeField field, std::size_t ambient_dim)
      : field_(field), basis_(0, ambient_dim) {}

  // Spans the given rows; the stored basis is the reduced echelon form.
  Subspace(PrimeField field, Matrix rows)
      : field_(field), basis_(echelon(field, std::move(rows)).reduced) {}

  [[nodiscard]] std::size_t dim() const noexcept { return basis_.rows(); }
  [[nodiscard]] std::size_t ambient_dim() const noexcept { return basis_.cols(); }
  [[nodiscard]] const Matrix& basis() const noexcept { return basis_; }
  [[nodiscard]] const PrimeField& field() const noexcept { return field_; }

  [[nodiscard]] bool contains(std::span<const Residue> v) const {
    Matrix m = basis_;
    m.append_row(v);
    return rank(field_, std::move(m)) == dim();
  }

  friend bool operator==(const Subspace& a, const Subspace& b) {
    return a.basis_ == b.basis_;
  }

 private:
  PrimeField field_;
  Matrix basis_;
};

inline Subspace sum(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim()) throw FieldError("ambient dimension mismatch");
  return Subspace(a.field(), stack(a.basis(), b.basis()));
}

inline Subspace intersect(const Subspace& a, const Subspace& b) {
  return Subspace(a.field(), intersection_basis(a.field(), a.basis(), b.basis()));
}

// dim(∩_i (W_i + W_0)) - dim(W_0): the part of the common intersection that is
// new relative to the conditioning space.
inline std::size_t conditional_intersection_dim(std::span<const Subspace> spaces,
                                                const Subspace& given) {
  if (spaces.empty()) throw FieldError("conditional intersection needs at least one space");
  Subspace acc = sum(spaces.front(), given);
  for (std::size_t i = 1; i < spaces.size(); ++i) acc = intersect(acc, sum(spaces[i], given));
  return acc.dim() - intersect(acc, given).dim();
}

inline std::size_t conditional_intersection_dim(const Subspace& a, const Subspace& b,
                                                const Subspace& given) {
  const Subspace pair[] = {a, b};
  return conditional_intersection_dim(pair, given);
}

using NodeSet = std::vector<std::size_t>;

// Per-node subspaces W_1..W_n sharing one ambient space (0-based indices).
class NodeSubspaceFamily {
 public:
  NodeSubspaceFamily(PrimeField field, std::size_t ambient_dim)
      : field_(field), ambient_(ambient_dim) {}

  NodeSubspaceFamily(PrimeField field, std::size_t ambient_dim, std::vector<Subspace> nodes)
      : field_(field), ambient_(ambient_dim), nodes_(std::move(nodes)) {
    for (const auto& s : nodes_) {
      if (s.ambient_dim() != ambient_) throw FieldError("ambient dimension mismatch in family");
    }
  }

  void push_back(Subspace s) {
    if (s.ambient_dim() != ambient_) throw FieldError("ambient dimension mismatch in family");
    nodes_.push_back(std::move(s));
  }

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] std::size_t ambient_dim() const noexcept { return ambient_; }
  [[nodiscard]] const PrimeField& field() const noexcept { return field_; }
  [[nodiscard]] const Subspace& node(std::size_t i) const { return nodes_.at(i); }

  // W_A as a spanning (not necessarily independent) set of rows.
  [[nodiscard]] Matrix stacked(std::span<const std::size_t> set) const {
    Matrix m(0, ambient_);
    for (std::size_t i : set) m.append_rows(node(i).basis());
    return m;
  }

  [[nodiscard]] Subspace span_of(std::span<const std::size_t> set) const {
    return Subspace(field_, stacked(set));
  }

 private:
  PrimeField field_;
  std::size_t ambient_;
  std::vector<Subspace> nodes_;
};

inline std::size_t dim_sum(const NodeSubspaceFamily& family, std::span<const std::size_t> set) {
  if (set.empty()) return 0;
  return rank(family.field(), family.stacked(set));
}

inline std::size_t conditional_intersection_dim(const NodeSubspaceFamily& family,
                                                const std::vector<NodeSet>& sets,
                                                const NodeSet& given) {
  std::vector<Subspace> spaces;
  spaces.reserve(sets.size());
  for (const auto& s : sets) spaces.push_back(family.span_of(s));
  return conditional_intersection_dim(spaces, family.span_of(given));
}

// ---------------------------------------------------------------------------
// Optimality conditions
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kL1ExhaustiveLimit = 100'000;
inline constexpr std::size_t kL1SampleCount = 10'000;

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // Saturate instead of overflowing; callers only compare with budgets.
    if (result > (~std::uint64_t{0}) / (n - k + i)) return ~std::uint64_t{0};
    result = result * (n - k + i) / i;
  }
  return result;
}

struct L1Report {
  bool holds = true;
  std::optional<NodeSet> witness;
  // Sets of size j̄r + 1 used by the Lemma 1 argument; reported, never fatal.
  bool extended_holds = true;
  std::optional<NodeSet> extended_witness;
  bool exhaustive = true;
  std::size_t sets_checked = 0;
};

namespace detail {

inline bool sum_is_direct(const NodeSubspaceFamily& family, const NodeSet& set) {
  std::size_t total = 0;
  for (std::size_t i : set) total += family.node(i).dim();
  return dim_sum(family, set) == total;
}

// Visits every size-m subset of [0, n) (exhaustive) or `samples` random ones.
// Stops early when `visit` returns false.
template <typename Rng, typename Visit>
bool for_subsets(std::size_t n, std::size_t m, std::uint64_t limit, std::size_t samples,
                 Rng& rng, bool& exhaustive, Visit&& visit) {
  exhaustive = binomial(n, m) <= limit;
  if (exhaustive) {
    NodeSet set(m);
    std::iota(set.begin(), set.end(), 0);
    while (true) {
      if (!visit(set)) return false;
      std::size_t i = m;
      while (i > 0 && set[i - 1] == n - m + i - 1) --i;
      if (i == 0) break;
      ++set[i - 1];
      for (std::size_t j = i; j < m; ++j) set[j] = set[j - 1] + 1;
    }
    return true;
  }
  NodeSet all(n);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t t = 0; t < samples; ++t) {
    std::shuffle(all.begin(), all.end(), rng);
    NodeSet set(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(set.begin(), set.end());
    if (!visit(set)) return false;
  }
  return true;
}

}  // namespace detail

// L1: W_A is a direct sum for every node set with |A| <= max_set (= j̄r).
// Only the largest sets need checking since direct sums restrict to subsets.
template <typename Rng>
L1Report check_L1(const NodeSubspaceFamily& family, std::size_t max_set, Rng& rng,
                  std::uint64_t exhaustive_limit = kL1ExhaustiveLimit,
                  std::size_t samples = kL1SampleCount, bool check_extended = true) {
  L1Report report;
  const std::size_t n = family.size();
  const std::size_t m = std::min(max_set, n);
  bool exhaustive = true;
  detail::for_subsets(n, m, exhaustive_limit, samples, rng, exhaustive,
                      [&](const NodeSet& set) {
                        ++report.sets_checked;
                        if (detail::sum_is_direct(family, set)) return true;
                        report.holds = false;
                        report.witness = set;
                        return false;
                      });
  report.exhaustive = exhaustive;
  if (check_extended && report.holds && m + 1 <= n) {
    bool ext_exhaustive = true;
    detail::for_subsets(n, m + 1, exhaustive_limit, samples, rng, ext_exhaustive,
                        [&](const NodeSet& set) {
                          if (detail::sum_is_direct(family, set)) return true;
                          report.extended_holds = false;
                          report.extended_witness = set;
                          return false;
                        });
  }
  return report;
}

// L2: two transmissions of the same helper share no nonzero vector.
inline bool check_L2(const Subspace& first, const Subspace& second) {
  return intersect(first, second).dim() == 0;
}

struct L3Result {
  bool holds = true;
  std::size_t dim = 0;
};

// L3: dim(W_A ∩ W_{R_last} | Σ_{earlier} W_{R_i}) <= bound.
inline L3Result check_L3(const NodeSubspaceFamily& family, std::size_t node,
                         const std::vector<NodeSet>& groups, std::size_t bound) {
  if (groups.empty()) throw FieldError("L3 needs at least one group");
  std::set<std::size_t> seen;
  for (const auto& g : groups) {
    if (g.size() != groups.front().size()) throw FieldError("L3 groups must have equal size");
    for (std::size_t v : g) {
      if (!seen.insert(v).second) throw FieldError("L3 groups overlap");
    }
  }
  NodeSet earlier;
  for (std::size_t i = 0; i + 1 < groups.size(); ++i) {
    earlier.insert(earlier.end(), groups[i].begin(), groups[i].end());
  }
  const NodeSet a{node};
  L3Result res;
  res.dim = conditional_intersection_dim(family, {a, groups.back()}, earlier);
  res.holds = res.dim <= bound;
  return res;
}

struct Lemma1Sides {
  std::size_t lhs = 0;
  std::size_t rhs = 0;
};

// Both sides of dim(W_A ∩ W_B) = Σ_{s >= j̄} dim(W_A ∩ W_{R_s} | Σ_{t<j̄} W_{R_t}),
// with B split in order into r-groups R_1, R_2, ... and a remainder.
inline Lemma1Sides lemma1_decomposition(const NodeSubspaceFamily& family, std::size_t node,
                                        const NodeSet& helpers, std::size_t j_bar,
                                        std::size_t r) {
  if (r == 0 || j_bar == 0) throw FieldError("lemma 1 needs r >= 1 and j_bar >= 1");
  Lemma1Sides out;
  const NodeSet a{node};
  out.lhs = intersect(family.span_of(a), family.span_of(helpers)).dim();
  const std::size_t groups = helpers.size() / r;
  if (groups < j_bar) return out;
  const NodeSet conditioning(helpers.begin(),
                             helpers.begin() + static_cast<std::ptrdiff_t>((j_bar - 1) * r));
  for (std::size_t s = j_bar; s <= groups; ++s) {
    const NodeSet group(helpers.begin() + static_cast<std::ptrdiff_t>((s - 1) * r),
                        helpers.begin() + static_cast<std::ptrdiff_t>(s * r));
    out.rhs += conditional_intersection_dim(family, {a, group}, conditioning);
  }
  return out;
}

}  // namespace regen
