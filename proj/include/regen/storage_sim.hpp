#pragma once

// Functional-repair storage system built on linearized polynomials.
//
// Every stored packet is kept as one row: its evaluation point theta in F_q^l,
// followed (in full-payload mode) by f_s(theta) for each file stripe s. Repair
// only forms F_q-linear combinations of rows, so the theta part alone tracks
// the subspace W_i exactly and the payload part stays consistent for free.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "regen/finite_field.hpp"
#include "regen/linearized_poly.hpp"
#include "regen/subspace.hpp"
#include "regen/tradeoff.hpp"

namespace regen {

enum class PayloadMode { Dimension, Full };

inline const char* to_string(PayloadMode m) {
  return m == PayloadMode::Full ? "full-payload" : "dimension";
}

class RepairError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class YLayoutError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ReconstructionError : public std::runtime_error {
 public:
  ReconstructionError(std::size_t dimension, std::size_t required)
      : std::runtime_error("reconstruction needs dimension " + std::to_string(required) +
                           ", data collector reached " + std::to_string(dimension)),
        dimension_(dimension),
        required_(required) {}
  [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
  [[nodiscard]] std::size_t required() const noexcept { return required_; }

 private:
  std::size_t dimension_;
  std::size_t required_;
};

namespace detail {

inline int exact_int(const Rational& v, const std::string& what) {
  if (denominator(v) != 1) throw ParamError(what + " must be an integer");
  return numerator(v).convert_to<int>();
}

// m distinct indices from [0, n), in random order.
template <typename Rng>
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, Rng& rng) {
  if (m > n) throw std::invalid_argument("cannot sample more items than available");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(m);
  return idx;
}

template <typename Rng>
void random_nonzero_vector(const PrimeField& f, std::span<Residue> out, Rng& rng) {
  while (true) {
    bool any = false;
    for (auto& c : out) {
      c = f.random(rng);
      any |= c != 0;
    }
    if (any || out.empty()) return;
  }
}

inline Matrix leading_columns(const Matrix& m, std::size_t cols) {
  Matrix out(m.rows(), cols);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::copy_n(m.row(i).begin(), cols, out.row(i).begin());
  }
  return out;
}

// Greedy independent-row selection on the first `cols` coordinates.
class IncrementalBasis {
 public:
  IncrementalBasis(PrimeField f, std::size_t cols) : f_(f), cols_(cols) {}

  bool add(std::span<const Residue> v) {
    std::vector<Residue> w(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(cols_));
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const Residue c = w[pivots_[i]];
      if (c != 0) axpy(f_, f_.neg(c), rows_[i], w);
    }
    const auto it = std::find_if(w.begin(), w.end(), [](Residue c) { return c != 0; });
    if (it == w.end()) return false;
    const auto p = static_cast<std::size_t>(it - w.begin());
    scale_in_place(f_, f_.inv(w[p]), w);
    rows_.push_back(std::move(w));
    pivots_.push_back(p);
    return true;
  }

  [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }

 private:
  PrimeField f_;
  std::size_t cols_;
  std::vector<std::vector<Residue>> rows_;
  std::vector<std::size_t> pivots_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct CodeConfig {
  SystemParams params;
  int j_bar = 1;
  int e = 0;
  int xi = 1;
  std::uint32_t q = 1021;
  std::size_t l = 0;  // 0 selects the smallest admissible degree
  PayloadMode mode = PayloadMode::Dimension;
  std::uint64_t seed = 1;

  [[nodiscard]] int window() const { return params.d - (j_bar - 1) * params.r; }
  [[nodiscard]] int packets_per_node() const { return window() * xi; }
  [[nodiscard]] int transmitted_per_helper() const {
    return detail::exact_int(params.erased() * xi * params.r, "(1 - rho) xi r");
  }
  [[nodiscard]] int own_per_slot() const {
    return detail::exact_int(params.rho * xi * params.r, "rho xi r");
  }
  [[nodiscard]] int helper_sample() const {
    return detail::exact_int(params.erased() * (params.r + e) * xi, "(1 - rho)(r + e) xi");
  }
  [[nodiscard]] int erased_per_node() const {
    return detail::exact_int(params.erased() * packets_per_node(), "(1 - rho) S");
  }
  [[nodiscard]] std::int64_t file_packets() const {
    return pstar(params.k, params.d, params.r, j_bar, params.rho, xi);
  }
  [[nodiscard]] std::size_t min_degree() const {
    return static_cast<std::size_t>(params.n - params.r) *
           static_cast<std::size_t>(packets_per_node());
  }
  [[nodiscard]] std::size_t degree() const { return l == 0 ? min_degree() : l; }

  void validate() const {
    params.validate();
    const int r = params.r;
    if (!params.r_divides_k()) throw ParamError("the code construction needs r dividing k");
    if (j_bar < 1 || j_bar > params.k / r) throw ParamError("j_bar must lie in [1, k/r]");
    if (e < 0 || e > params.d - j_bar * r) throw ParamError("need 0 <= e <= d - j_bar r");
    if (xi < 1) throw ParamError("xi must be at least 1");
    if (denominator(params.rho * xi) != 1) throw ParamError("rho xi must be an integer");
    if (!is_prime(q) || q >= (1u << 31)) throw ParamError("q must be a prime below 2^31");
    if (l != 0 && l < min_degree()) {
      throw ParamError("l must be at least (n - r)(d - (j_bar - 1) r) xi = " +
                       std::to_string(min_degree()));
    }
    (void)transmitted_per_helper();
    (void)own_per_slot();
    (void)helper_sample();
    (void)erased_per_node();
    (void)file_packets();
  }
};

// ---------------------------------------------------------------------------
// Repair matrix layout
// ---------------------------------------------------------------------------

struct YEntry {
  std::size_t slot = 0;    // position in the helper list
  std::size_t packet = 0;  // index into that slot's received packets

  friend bool operator==(const YEntry&, const YEntry&) = default;
};

// Y has one row per newly stored packet (S rows) and j̄r columns.
struct RepairMatrixY {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<YEntry> entries;
  bool rotation_applied = false;

  [[nodiscard]] const YEntry& at(std::size_t i, std::size_t j) const {
    return entries[i * cols + j];
  }
};

// Row g = b r + m of Y^T holds packet m of helpers br+1 .. br+W, then is rotated
// left by m. With ξ > 1 each helper slot carries ξr packets: Y row t W + c
// reads packet m ξ + t.
inline RepairMatrixY assemble_Y(const CodeConfig& cfg, bool rotate = true) {
  const auto r = static_cast<std::size_t>(cfg.params.r);
  const auto jr = static_cast<std::size_t>(cfg.j_bar) * r;
  const auto w = static_cast<std::size_t>(cfg.window());
  const auto xi = static_cast<std::size_t>(cfg.xi);
  RepairMatrixY y;
  y.rows = w * xi;
  y.cols = jr;
  y.rotation_applied = rotate;
  y.entries.resize(y.rows * y.cols);
  for (std::size_t t = 0; t < xi; ++t) {
    for (std::size_t c = 0; c < w; ++c) {
      for (std::size_t g = 0; g < jr; ++g) {
        const std::size_t b = g / r;
        const std::size_t m = g % r;
        const std::size_t col = rotate ? (c + m) % w : c;
        y.entries[(t * w + c) * jr + g] = {b * r + col, m * xi + t};
      }
    }
  }
  if (rotate) {
    for (std::size_t i = 0; i < y.rows; ++i) {
      std::vector<std::size_t> slots;
      for (std::size_t g = 0; g < jr; ++g) slots.push_back(y.at(i, g).slot);
      std::sort(slots.begin(), slots.end());
      if (std::adjacent_find(slots.begin(), slots.end()) != slots.end()) {
        throw YLayoutError("row " + std::to_string(i) + " of Y repeats a helper (d = " +
                           std::to_string(cfg.params.d) + ", r = " + std::to_string(r) +
                           ", j_bar = " + std::to_string(cfg.j_bar) + ", window " +
                           std::to_string(w) + ")");
      }
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// Helper sampling and the T-matrix rank probability
// ---------------------------------------------------------------------------

// Coefficients (send x S) of `send` random combinations of `sample` randomly
// chosen packets out of S. Each combination is nonzero and the combinations
// are redrawn until independent, so a helper never sends a degenerate set.
template <typename Rng>
Matrix sample_combination(const PrimeField& f, std::size_t s, std::size_t sample,
                          std::size_t send, Rng& rng) {
  const auto chosen = detail::sample_indices(s, sample, rng);
  std::vector<Residue> coeffs(sample);
  while (true) {
    Matrix c(send, s);
    for (std::size_t i = 0; i < send; ++i) {
      detail::random_nonzero_vector(f, coeffs, rng);
      for (std::size_t j = 0; j < sample; ++j) c(i, chosen[j]) = coeffs[j];
    }
    if (send > sample || rank(f, c) == send) return c;
  }
}

namespace detail {

inline BigInt binomial_big(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  BigInt out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

}  // namespace detail

// Probability that two helper transmissions (r combinations each of r+e
// sampled packets) together have rank 2r: the sampled sets overlap in at most
// 2e packets.
inline Rational t_fullrank_probability(int d, int r, int j_bar, int e) {
  if (r == 0) return 1;
  if (r < 0 || j_bar < 1) throw ParamError("need r >= 0 and j_bar >= 1");
  if (e < 0 || e > d - j_bar * r) throw ParamError("need 0 <= e <= d - j_bar r");
  const int w = d - (j_bar - 1) * r;
  BigInt favourable = 0;
  for (int i = 0; i <= 2 * e; ++i) {
    favourable += detail::binomial_big(r + e, i) * detail::binomial_big(w - (r + e), r + e - i);
  }
  return Rational(favourable) / Rational(detail::binomial_big(w, r + e));
}

// e = 0 specialisation: prod_{i=1..r} (W - 2r + i) / (W - r + i).
inline Rational t_fullrank_probability_e0(int d, int r, int j_bar) {
  const int w = d - (j_bar - 1) * r;
  Rational p = 1;
  for (int i = 1; i <= r; ++i) {
    if (w - 2 * r + i <= 0) return 0;
    p *= Rational(w - 2 * r + i, w - r + i);
  }
  return p;
}

inline double t_fullrank_monte_carlo(int d, int r, int j_bar, int e, std::size_t draws,
                                     std::uint64_t seed, std::uint32_t q = 65521) {
  if (e < 0 || e > d - j_bar * r) throw ParamError("need 0 <= e <= d - j_bar r");
  const PrimeField f(q);
  const auto w = static_cast<std::size_t>(d - (j_bar - 1) * r);
  const auto ru = static_cast<std::size_t>(r);
  std::mt19937_64 rng(seed);
  std::size_t full = 0;
  for (std::size_t t = 0; t < draws; ++t) {
    Matrix m = sample_combination(f, w, ru + e, ru, rng);
    m.append_rows(sample_combination(f, w, ru + e, ru, rng));
    if (rank(f, std::move(m)) == 2 * ru) ++full;
  }
  return draws == 0 ? 0.0 : static_cast<double>(full) / static_cast<double>(draws);
}

// ---------------------------------------------------------------------------
// File codec: bytes <-> stripes of F_{q^l} packets
// ---------------------------------------------------------------------------

inline std::size_t bits_per_digit(std::uint32_t q) {
  std::size_t b = 0;
  while ((std::uint64_t{1} << (b + 1)) <= q) ++b;
  return b;
}

// An 8-byte little-endian length prefix followed by the data, packed
// floor(log2 q) bits per base-q digit, l digits per element and `packets`
// elements per stripe.
inline std::vector<std::vector<ExtElement>> encode_bytes(const std::vector<std::uint8_t>& data,
                                                         const ExtField& field,
                                                         std::size_t packets) {
  if (packets == 0) throw ParamError("a stripe needs at least one packet");
  std::vector<std::uint8_t> framed(8);
  const std::uint64_t len = data.size();
  for (int i = 0; i < 8; ++i) framed[i] = static_cast<std::uint8_t>(len >> (8 * i));
  framed.insert(framed.end(), data.begin(), data.end());

  const std::size_t b = bits_per_digit(field.q());
  const std::size_t l = field.degree();
  const std::size_t total_bits = framed.size() * 8;
  const std::size_t digits_per_stripe = packets * l;
  const std::size_t digits = (total_bits + b - 1) / b;
  const std::size_t stripes = std::max<std::size_t>(1, (digits + digits_per_stripe - 1) /
                                                           digits_per_stripe);
  std::vector<std::vector<ExtElement>> out(stripes);
  std::size_t bit = 0;
  for (auto& stripe : out) {
    for (std::size_t p = 0; p < packets; ++p) {
      std::vector<Residue> coeffs(l, 0);
      for (auto& c : coeffs) {
        Residue v = 0;
        for (std::size_t i = 0; i < b; ++i, ++bit) {
          if (bit < total_bits && ((framed[bit / 8] >> (bit % 8)) & 1)) v |= Residue{1} << i;
        }
        c = v;
      }
      stripe.push_back(field.element(std::move(coeffs)));
    }
  }
  return out;
}

inline std::vector<std::uint8_t> decode_bytes(const std::vector<std::vector<ExtElement>>& stripes,
                                              const ExtField& field) {
  const std::size_t b = bits_per_digit(field.q());
  std::vector<std::uint8_t> bytes;
  std::uint32_t acc = 0;
  std::size_t have = 0;
  for (const auto& stripe : stripes) {
    for (const auto& el : stripe) {
      for (Residue c : el.coeffs) {
        if (c >> b) throw std::runtime_error("decoded digit exceeds the packing width");
        for (std::size_t i = 0; i < b; ++i) {
          acc |= ((c >> i) & 1u) << have;
          if (++have == 8) {
            bytes.push_back(static_cast<std::uint8_t>(acc));
            acc = 0;
            have = 0;
          }
        }
      }
    }
  }
  if (bytes.size() < 8) throw std::runtime_error("stream too short for a length prefix");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= std::uint64_t{bytes[i]} << (8 * i);
  if (len > bytes.size() - 8) throw std::runtime_error("length prefix exceeds decoded data");
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(len)};
}

template <typename Rng>
std::vector<std::vector<ExtElement>> random_file(const ExtField& field, std::size_t packets,
                                                 std::size_t stripes, Rng& rng) {
  std::vector<std::vector<ExtElement>> out(stripes);
  for (auto& s : out)
    for (std::size_t p = 0; p < packets; ++p) s.push_back(field.random(rng));
  return out;
}

// ---------------------------------------------------------------------------
// Storage system
// ---------------------------------------------------------------------------

struct NodeState {
  Matrix packets;  // S rows: theta | payload of stripe 0 | payload of stripe 1 ...
  std::vector<bool> erased;
};

struct RepairStats {
  std::size_t rounds = 0;
  std::size_t rank_retries = 0;
  std::size_t rank_failures = 0;  // kept despite a rank deficit (non-strict mode)
  std::size_t last_packets_per_helper = 0;
  std::size_t last_packets_moved = 0;
};

struct Reconstruction {
  std::size_t dimension = 0;
  std::vector<std::vector<ExtElement>> stripes;  // full-payload mode only
};

inline constexpr int kRankRetries = 16;

class StorageSystem {
 public:
  // Dimension tracking: only evaluation points are stored.
  explicit StorageSystem(CodeConfig cfg) : cfg_(checked(std::move(cfg))), field_(cfg_.q) {
    if (cfg_.mode == PayloadMode::Full) {
      throw ParamError("full-payload mode needs a field and file stripes");
    }
    initialize();
  }

  // Full payload: each stripe holds ξP* packets of F_{q^l}.
  StorageSystem(CodeConfig cfg, ExtField ext, std::vector<std::vector<ExtElement>> stripes)
      : cfg_(checked(std::move(cfg))), field_(cfg_.q) {
    cfg_.mode = PayloadMode::Full;
    if (ext.q() != cfg_.q || ext.degree() != cfg_.degree()) {
      throw ParamError("extension field does not match q and l of the configuration");
    }
    const auto p = static_cast<std::size_t>(cfg_.file_packets());
    if (stripes.empty()) throw ParamError("at least one file stripe is required");
    for (const auto& s : stripes) {
      if (s.size() != p) {
        throw ParamError("each stripe must hold xi P* = " + std::to_string(p) + " packets");
      }
    }
    for (auto& s : stripes) polys_.push_back(encode_file(ext, std::move(s)));
    ext_ = std::move(ext);
    initialize();
  }

  static ExtField make_field(const CodeConfig& cfg) { return ExtField::make(cfg.q, cfg.degree()); }

  [[nodiscard]] const CodeConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const PrimeField& field() const noexcept { return field_; }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] std::size_t degree() const noexcept { return l_; }
  [[nodiscard]] const NodeState& node(std::size_t i) const { return nodes_.at(i); }
  [[nodiscard]] const RepairStats& stats() const noexcept { return stats_; }
  [[nodiscard]] std::size_t stripes() const noexcept { return polys_.size(); }
  void set_strict(bool strict) noexcept { strict_ = strict; }

  [[nodiscard]] Matrix thetas(std::size_t i) const {
    return detail::leading_columns(node(i).packets, l_);
  }

  [[nodiscard]] NodeSubspaceFamily family() const {
    NodeSubspaceFamily fam(field_, l_);
    for (std::size_t i = 0; i < nodes_.size(); ++i) fam.push_back(Subspace(field_, thetas(i)));
    return fam;
  }

  // Evaluation points of the most recent transmission of a node, if the node
  // has not been repaired since.
  [[nodiscard]] const std::optional<Matrix>& last_transmission(std::size_t i) const {
    return last_tx_.at(i);
  }

  // Packets a helper sends in one round: rows of the same width as storage.
  Matrix helper_transmit(std::size_t helper) {
    return helper_transmit(helper, static_cast<std::size_t>(cfg_.helper_sample()),
                           static_cast<std::size_t>(cfg_.transmitted_per_helper()));
  }

  template <typename Rng>
  void mark_erasures(std::size_t i, Rng& rng) {
    auto& nd = nodes_.at(i);
    const auto count = static_cast<std::size_t>(cfg_.erased_per_node());
    // A whole-node failure consumes no randomness, keeping rho = 0 runs aligned
    // with repair_full.
    std::fill(nd.erased.begin(), nd.erased.end(), count == nd.erased.size());
    if (count == nd.erased.size()) return;
    for (std::size_t p : detail::sample_indices(nd.erased.size(), count, rng)) nd.erased[p] = true;
  }
  void mark_erasures(std::size_t i) { mark_erasures(i, rng_); }

  // Whole-node failures; only meaningful for rho = 0.
  void repair_full(const NodeSet& failed, const NodeSet& helpers,
                   std::optional<std::size_t> dropped_slot = std::nullopt) {
    if (cfg_.params.rho != 0) throw ParamError("full repair needs rho = 0; use repair_partial");
    check_round(failed, helpers);
    for (std::size_t f : failed) {
      auto& er = nodes_.at(f).erased;
      std::fill(er.begin(), er.end(), true);
    }
    repair_round(failed, helpers, false, dropped_slot);
  }

  // Each failed node must already carry (1 - rho) S erasure marks.
  void repair_partial(const NodeSet& failed, const NodeSet& helpers) {
    check_round(failed, helpers);
    const auto need = static_cast<std::size_t>(cfg_.erased_per_node());
    for (std::size_t f : failed) {
      const auto& er = nodes_.at(f).erased;
      if (static_cast<std::size_t>(std::count(er.begin(), er.end(), true)) != need) {
        throw ParamError("node " + std::to_string(f) + " must have exactly " +
                         std::to_string(need) + " erased packets");
      }
    }
    repair_round(failed, helpers, false, std::nullopt);
  }

  [[nodiscard]] std::size_t dc_dimension(const NodeSet& dc) const {
    Matrix m(0, l_);
    for (std::size_t i : dc) m.append_rows(thetas(i));
    return rank(field_, std::move(m));
  }

  [[nodiscard]] Reconstruction reconstruct(const NodeSet& dc) const {
    if (dc.size() != static_cast<std::size_t>(cfg_.params.k)) {
      throw ParamError("a data collector contacts exactly k nodes");
    }
    check_distinct(dc, "data collector");
    const auto need = static_cast<std::size_t>(cfg_.file_packets());
    Reconstruction out;
    out.dimension = dc_dimension(dc);
    if (out.dimension < need) throw ReconstructionError(out.dimension, need);
    if (!ext_) return out;

    detail::IncrementalBasis basis(field_, l_);
    std::vector<EvaluationPoint> points;
    std::vector<std::vector<ExtElement>> values;
    for (std::size_t i : dc) {
      const auto& pk = nodes_[i].packets;
      for (std::size_t p = 0; p < pk.rows() && points.size() < need; ++p) {
        const auto row = pk.row(p);
        if (!basis.add(row)) continue;
        points.push_back(ext_->element(std::vector<Residue>(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(l_))));
        std::vector<ExtElement> vals;
        for (std::size_t s = 0; s < polys_.size(); ++s) {
          const auto off = static_cast<std::ptrdiff_t>((s + 1) * l_);
          vals.push_back(ext_->element(std::vector<Residue>(row.begin() + off, row.begin() + off + static_cast<std::ptrdiff_t>(l_))));
        }
        values.push_back(std::move(vals));
      }
    }
    for (auto& poly : interpolate_many(*ext_, points, values)) {
      out.stripes.push_back(poly.coeffs());
    }
    return out;
  }

  // Every payload equals f_s(theta) for its evaluation point.
  [[nodiscard]] bool payloads_consistent(std::size_t i) const {
    if (!ext_) return true;
    const auto& pk = node(i).packets;
    for (std::size_t p = 0; p < pk.rows(); ++p) {
      const auto row = pk.row(p);
      const auto theta = ext_->element(std::vector<Residue>(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(l_)));
      for (std::size_t s = 0; s < polys_.size(); ++s) {
        const auto v = polys_[s].evaluate(theta);
        if (!std::equal(v.coeffs.begin(), v.coeffs.end(),
                        row.begin() + static_cast<std::ptrdiff_t>((s + 1) * l_))) {
          return false;
        }
      }
    }
    return true;
  }

  std::mt19937_64& rng() noexcept { return rng_; }

 private:
  static CodeConfig checked(CodeConfig cfg) {
    cfg.validate();
    return cfg;
  }

  void check_distinct(const NodeSet& set, const char* what) const {
    std::vector<bool> seen(nodes_.size(), false);
    for (std::size_t i : set) {
      if (i >= nodes_.size()) throw ParamError(std::string(what) + " index out of range");
      if (seen[i]) throw ParamError(std::string(what) + " contains a node twice");
      seen[i] = true;
    }
  }

  void check_round(const NodeSet& failed, const NodeSet& helpers) const {
    if (failed.size() != static_cast<std::size_t>(cfg_.params.r)) {
      throw ParamError("exactly r nodes must fail");
    }
    if (helpers.size() != static_cast<std::size_t>(cfg_.params.d)) {
      throw ParamError("exactly d helpers are required");
    }
    NodeSet all = failed;
    all.insert(all.end(), helpers.begin(), helpers.end());
    check_distinct(all, "failed and helper sets");
  }

  void initialize() {
    l_ = cfg_.degree();
    width_ = l_ * (1 + polys_.size());
    rng_.seed(cfg_.seed);
    const auto n = static_cast<std::size_t>(cfg_.params.n);
    const auto r = static_cast<std::size_t>(cfg_.params.r);
    const auto s = static_cast<std::size_t>(cfg_.packets_per_node());
    nodes_.assign(n, NodeState{Matrix(s, width_), std::vector<bool>(s, false)});
    last_tx_.assign(n, std::nullopt);
    for (std::size_t i = 0; i + r < n; ++i) {
      for (std::size_t p = 0; p < s; ++p) {
        auto row = nodes_[i].packets.row(p);
        row[i * s + p] = 1;
        if (ext_) {
          std::vector<Residue> unit(l_, 0);
          unit[i * s + p] = 1;
          const auto theta = ext_->element(std::move(unit));
          for (std::size_t k = 0; k < polys_.size(); ++k) {
            const auto v = polys_[k].evaluate(theta);
            std::copy(v.coeffs.begin(), v.coeffs.end(), row.begin() + static_cast<std::ptrdiff_t>((k + 1) * l_));
          }
        }
      }
    }
    NodeSet failed, helpers;
    for (std::size_t i = n - r; i < n; ++i) failed.push_back(i);
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg_.params.d); ++i) helpers.push_back(i);
    for (std::size_t f : failed) std::fill(nodes_[f].erased.begin(), nodes_[f].erased.end(), true);
    repair_round(failed, helpers, true, std::nullopt);
    stats_ = {};
    std::fill(last_tx_.begin(), last_tx_.end(), std::nullopt);
  }

  Matrix helper_transmit(std::size_t helper, std::size_t sample, std::size_t send) {
    const auto& src = nodes_.at(helper).packets;
    const Matrix c = sample_combination(field_, src.rows(), sample, send, rng_);
    Matrix out = multiply(field_, c, src);
    last_tx_[helper] = detail::leading_columns(out, l_);
    return out;
  }

  // The nodes in `failed` start from scratch when `initializing`: they have no
  // surviving packets, so helpers send ξr packets each as in a ρ = 0 round.
  void repair_round(const NodeSet& failed, const NodeSet& helpers, bool initializing,
                    std::optional<std::size_t> dropped_slot) {
    const auto& p = cfg_.params;
    check_round(failed, helpers);

    const auto xi = static_cast<std::size_t>(cfg_.xi);
    const auto r = static_cast<std::size_t>(p.r);
    const std::size_t sample = initializing ? (r + static_cast<std::size_t>(cfg_.e)) * xi
                                            : static_cast<std::size_t>(cfg_.helper_sample());
    const std::size_t send = initializing ? xi * r : static_cast<std::size_t>(cfg_.transmitted_per_helper());
    const std::size_t own = initializing ? 0 : static_cast<std::size_t>(cfg_.own_per_slot());

    std::vector<Matrix> tx;
    tx.reserve(helpers.size());
    for (std::size_t h : helpers) tx.push_back(helper_transmit(h, sample, send));
    if (dropped_slot) {
      if (*dropped_slot >= tx.size()) throw ParamError("dropped helper slot out of range");
      tx[*dropped_slot] = Matrix(send, width_);
    }
    stats_.last_packets_per_helper = send;
    stats_.last_packets_moved = send * helpers.size();

    const RepairMatrixY y = assemble_Y(cfg_);
    for (std::size_t nc : failed) {
      auto& nd = nodes_[nc];
      std::vector<std::size_t> surviving;
      for (std::size_t i = 0; i < nd.erased.size(); ++i)
        if (!nd.erased[i]) surviving.push_back(i);
      if (surviving.size() < own) throw RepairError("not enough surviving packets");

      // Received packets per helper slot, extended with fresh own samples.
      std::vector<Matrix> slots;
      slots.reserve(tx.size());
      for (const auto& t : tx) {
        Matrix slot = t;
        for (std::size_t idx : detail::sample_indices(surviving.size(), own, rng_)) {
          slot.append_row(nd.packets.row(surviving[idx]));
        }
        slots.push_back(std::move(slot));
      }

      Matrix fresh(y.rows, width_);
      std::vector<Residue> coeffs(y.cols);
      bool ok = false;
      for (int attempt = 0; attempt <= kRankRetries && !ok; ++attempt) {
        if (attempt > 0) ++stats_.rank_retries;
        fresh = Matrix(y.rows, width_);
        for (std::size_t i = 0; i < y.rows; ++i) {
          detail::random_nonzero_vector(field_, coeffs, rng_);
          for (std::size_t g = 0; g < y.cols; ++g) {
            const auto& en = y.at(i, g);
            axpy(field_, coeffs[g], slots[en.slot].row(en.packet), fresh.row(i));
          }
        }
        ok = rank(field_, detail::leading_columns(fresh, l_)) == y.rows;
      }
      if (!ok) {
        if (strict_) {
          throw RepairError("newcomer " + std::to_string(nc) + " stayed rank deficient after " +
                            std::to_string(kRankRetries) + " redraws");
        }
        ++stats_.rank_failures;
      }
      nd.packets = std::move(fresh);
      std::fill(nd.erased.begin(), nd.erased.end(), false);
      last_tx_[nc].reset();
    }
    ++stats_.rounds;
  }

  CodeConfig cfg_;
  PrimeField field_;
  std::optional<ExtField> ext_;
  std::vector<LinearizedPolynomial> polys_;
  std::size_t l_ = 0;
  std::size_t width_ = 0;
  std::vector<NodeState> nodes_;
  std::vector<std::optional<Matrix>> last_tx_;
  std::mt19937_64 rng_;
  RepairStats stats_;
  bool strict_ = true;
};

inline StorageSystem init_system(const CodeConfig& cfg) { return StorageSystem(cfg); }

inline StorageSystem init_system(const CodeConfig& cfg, const ExtField& field,
                                 std::vector<std::vector<ExtElement>> stripes) {
  return StorageSystem(cfg, field, std::move(stripes));
}

// Uniform random r failures and d helpers among the remaining nodes.
template <typename Rng>
std::pair<NodeSet, NodeSet> random_round(int n, int r, int d, Rng& rng) {
  auto idx = detail::sample_indices(static_cast<std::size_t>(n), static_cast<std::size_t>(r + d), rng);
  NodeSet failed(idx.begin(), idx.begin() + r);
  NodeSet helpers(idx.begin() + r, idx.end());
  std::sort(failed.begin(), failed.end());
  std::sort(helpers.begin(), helpers.end());
  return {failed, helpers};
}

template <typename Rng>
NodeSet random_dc(int n, int k, Rng& rng) {
  auto idx = detail::sample_indices(static_cast<std::size_t>(n), static_cast<std::size_t>(k), rng);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// ---------------------------------------------------------------------------
// Experiment harness
// ---------------------------------------------------------------------------

struct ExperimentOptions {
  int rounds = 100;
  int trials = 50;
  int dc_samples = 1;        // k-subsets measured per trial
  double check_rate = 0.0;   // fraction of rounds followed by L1/L2/L3 checks
  std::size_t l1_samples = 200;
  std::uint64_t l1_exhaustive_limit = 500;
  bool strict_rank = false;
};

struct CheckTally {
  std::size_t checked = 0;
  std::size_t passed = 0;

  void record(bool ok) {
    ++checked;
    passed += ok ? 1 : 0;
  }
  [[nodiscard]] double rate() const {
    return checked == 0 ? 1.0 : static_cast<double>(passed) / static_cast<double>(checked);
  }
};

struct ExperimentReport {
  CodeConfig config;
  ExperimentOptions options;
  int rounds_run = 0;
  std::size_t min_dim = 0;
  double avg_dim = 0;
  std::int64_t pstar = 0;
  bool passed = false;
  CheckTally l1, l2, l3;
  std::size_t rank_retries = 0;
  std::size_t rank_failures = 0;
  std::size_t packets_per_helper = 0;
  std::size_t packets_per_node = 0;
  double wall_seconds = 0;
};

inline ExperimentReport run_experiment(const CodeConfig& cfg, const ExperimentOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  if (opt.rounds < 0 || opt.trials < 0 || opt.dc_samples < 0) {
    throw ParamError("rounds, trials and dc samples must be non-negative");
  }
  std::optional<StorageSystem> sys;
  if (cfg.mode == PayloadMode::Full) {
    const ExtField field = StorageSystem::make_field(cfg);
    std::mt19937_64 file_rng(cfg.seed ^ 0xf11e5eedULL);
    sys.emplace(cfg, field, random_file(field, static_cast<std::size_t>(cfg.file_packets()), 1, file_rng));
  } else {
    sys.emplace(cfg);
  }
  sys->set_strict(opt.strict_rank);
  // Checks draw from their own stream so the check rate never changes the run.
  std::mt19937_64 check_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution do_check(std::clamp(opt.check_rate, 0.0, 1.0));

  ExperimentReport rep;
  rep.config = cfg;
  rep.options = opt;
  rep.pstar = cfg.file_packets();
  const auto& p = cfg.params;
  const std::size_t jr = static_cast<std::size_t>(cfg.j_bar * p.r);
  const std::size_t l3_bound = static_cast<std::size_t>(cfg.transmitted_per_helper());

  std::vector<std::optional<Matrix>> previous(static_cast<std::size_t>(p.n));
  for (int round = 0; round < opt.rounds; ++round) {
    auto [failed, helpers] = random_round(p.n, p.r, p.d, sys->rng());
    for (std::size_t f : failed) sys->mark_erasures(f);
    for (std::size_t h : helpers) previous[h] = sys->last_transmission(h);
    sys->repair_partial(failed, helpers);
    ++rep.rounds_run;
    if (!do_check(check_rng)) continue;

    for (std::size_t h : helpers) {
      if (!previous[h]) continue;
      rep.l2.record(check_L2(Subspace(sys->field(), *previous[h]),
                             Subspace(sys->field(), *sys->last_transmission(h))));
    }
    const auto fam = sys->family();
    rep.l1.record(check_L1(fam, jr, check_rng, opt.l1_exhaustive_limit, opt.l1_samples, false).holds);
    std::vector<NodeSet> groups;
    for (int b = 0; b < cfg.j_bar; ++b) {
      groups.emplace_back(helpers.begin() + b * p.r, helpers.begin() + (b + 1) * p.r);
    }
    for (std::size_t nc : failed) rep.l3.record(check_L3(fam, nc, groups, l3_bound).holds);
  }

  double total = 0;
  std::size_t count = 0;
  rep.min_dim = std::numeric_limits<std::size_t>::max();
  for (int t = 0; t < opt.trials; ++t) {
    for (int s = 0; s < opt.dc_samples; ++s) {
      const std::size_t dim = sys->dc_dimension(random_dc(p.n, p.k, sys->rng()));
      rep.min_dim = std::min(rep.min_dim, dim);
      total += static_cast<double>(dim);
      ++count;
    }
  }
  if (count == 0) rep.min_dim = 0;
  rep.avg_dim = count == 0 ? 0.0 : total / static_cast<double>(count);
  rep.passed = count > 0 && rep.min_dim >= static_cast<std::size_t>(rep.pstar);
  rep.rank_retries = sys->stats().rank_retries;
  rep.rank_failures = sys->stats().rank_failures;
  rep.packets_per_helper = static_cast<std::size_t>(cfg.transmitted_per_helper());
  rep.packets_per_node = static_cast<std::size_t>(cfg.packets_per_node());
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Parameter sets of the published experiments
// ---------------------------------------------------------------------------

struct TableRow {
  int n, k, d, r, j_bar;
  std::uint32_t q;
  int e;
  std::int64_t pstar;
};

inline const std::vector<TableRow>& table2_rows() {
  static const std::vector<TableRow> rows{
      {27, 15, 17, 5, 1, 29, 0, 180},   {27, 15, 17, 5, 2, 29, 0, 155},
      {27, 15, 17, 5, 3, 257, 2, 105},  {24, 16, 16, 4, 1, 29, 1, 160},
      {24, 16, 16, 4, 2, 29, 1, 144},   {24, 16, 16, 4, 3, 29, 1, 112},
      {24, 16, 16, 4, 4, 29, 0, 64},    {20, 12, 12, 4, 1, 29, 1, 96},
      {20, 12, 12, 4, 2, 29, 1, 80},    {20, 12, 12, 4, 3, 29, 0, 48},
      {16, 12, 12, 3, 1, 1021, 3, 90},  {16, 12, 12, 3, 2, 1021, 3, 81},
      {16, 12, 12, 3, 3, 257, 3, 63},   {16, 12, 12, 3, 4, 257, 0, 36},
      {16, 8, 11, 2, 1, 29, 1, 64},     {16, 8, 11, 2, 2, 29, 1, 60},
      {16, 8, 11, 2, 3, 29, 1, 52},     {16, 8, 11, 2, 4, 29, 1, 40},
      {14, 10, 10, 2, 1, 29, 2, 60},    {14, 10, 10, 2, 2, 29, 1, 56},
      {14, 10, 10, 2, 3, 29, 2, 48},    {14, 10, 10, 2, 4, 29, 2, 36},
      {14, 10, 10, 2, 5, 127, 0, 20},   {9, 6, 6, 3, 1, 1021, 3, 27},
      {9, 6, 6, 3, 2, 1021, 0, 18},
  };
  return rows;
}

inline CodeConfig config_from_row(const TableRow& row, std::uint64_t seed = 1) {
  CodeConfig c;
  c.params = SystemParams{row.n, row.k, row.d, row.r, 0, 1};
  c.j_bar = row.j_bar;
  c.e = row.e;
  c.q = row.q;
  c.seed = seed;
  return c;
}

}  // namespace regen
