#pragma once

// Optimal storage / repair-bandwidth trade-off for broadcast repair of r
// partially failed nodes. All arithmetic is exact (arbitrary-precision
// rationals); floating point only appears when a caller formats output.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace regen {

using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                            boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                              boost::multiprecision::et_off>;

class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline double to_double(const Rational& v) { return v.convert_to<double>(); }

// Parses "3", "-2/7", "0.125" or "1e-3" into an exact rational.
inline Rational parse_rational(const std::string& text) {
  if (text.empty()) throw ParamError("empty number");
  if (auto slash = text.find('/'); slash != std::string::npos) {
    const BigInt num(text.substr(0, slash));
    const BigInt den(text.substr(slash + 1));
    if (den == 0) throw ParamError("zero denominator in '" + text + "'");
    return Rational(num, den);
  }
  std::string mantissa = text;
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string::npos) {
    mantissa = text.substr(0, e);
    exponent = std::stol(text.substr(e + 1));
  }
  bool negative = false;
  if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
    negative = mantissa[0] == '-';
    mantissa.erase(0, 1);
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_point = false;
  for (char c : mantissa) {
    if (c == '.') {
      if (seen_point) throw ParamError("malformed number '" + text + "'");
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_point) ++frac_digits;
    } else {
      throw ParamError("malformed number '" + text + "'");
    }
  }
  if (digits.empty()) throw ParamError("malformed number '" + text + "'");
  Rational value{BigInt(digits)};
  const long shift = exponent - frac_digits;
  const BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::abs(shift)));
  value = shift >= 0 ? value * scale : value / scale;
  return negative ? -value : value;
}

struct SystemParams {
  int n = 0;
  int k = 0;
  int d = 0;
  int r = 0;
  Rational rho = 0;  // surviving fraction of a faulty node
  Rational M = 1;    // file size

  [[nodiscard]] bool r_divides_k() const { return r > 0 && k % r == 0; }
  [[nodiscard]] Rational erased() const { return 1 - rho; }

  void validate() const {
    if (r < 1) throw ParamError("r must be at least 1");
    if (k < 1) throw ParamError("k must be at least 1");
    if (k > d) throw ParamError("need k <= d");
    if (d > n - r) throw ParamError("need d <= n - r");
    if (rho < 0 || rho >= 1) throw ParamError("need 0 <= rho < 1");
    if (M <= 0) throw ParamError("need M > 0");
  }
};

enum class SegmentKind { Plateau, Msr, Corner, Interior, Mbr };

struct TradeoffPoint {
  Rational gamma;
  Rational alpha;
  Rational beta;
  SegmentKind kind = SegmentKind::Interior;
  int segment = 0;  // branch index i of the threshold function

  [[nodiscard]] std::string label() const {
    switch (kind) {
      case SegmentKind::Plateau: return "plateau";
      case SegmentKind::Msr: return "msr";
      case SegmentKind::Mbr: return "mbr";
      case SegmentKind::Corner: return "corner" + std::to_string(segment);
      case SegmentKind::Interior: break;
    }
    return "s" + std::to_string(segment);
  }
};

// ---------------------------------------------------------------------------
// Min-cut capacity of the worst-case information flow graph
// ---------------------------------------------------------------------------

inline Rational group_term(const SystemParams& p, int size, int previous,
                           const Rational& alpha, const Rational& beta) {
  const Rational storage = size * alpha;
  const Rational inflow = size * p.rho * alpha + (p.d - previous) * beta;
  return std::min(storage, inflow);
}

// Minimum over every ordered split of the k data-collector nodes into repair
// groups of at most r nodes; a group of s nodes repaired after x earlier DC
// nodes contributes min{s α, s α1 + (d - x) β}.
inline Rational composition_min_cut(const SystemParams& p, const Rational& alpha,
                                    const Rational& beta) {
  std::vector<std::optional<Rational>> best(static_cast<std::size_t>(p.k) + 1);
  best[0] = Rational(0);
  for (int x = 0; x < p.k; ++x) {
    if (!best[x]) continue;
    for (int s = 1; s <= p.r && x + s <= p.k; ++s) {
      Rational v = *best[x] + group_term(p, s, x, alpha, beta);
      auto& slot = best[x + s];
      if (!slot || v < *slot) slot = std::move(v);
    }
  }
  return *best[p.k];
}

// Σ_{s=1}^{⌊k/r⌋} min{r α1 + (d - r(s-1)) β, r α}, plus the remainder group
// min{(k-k0) α, (k-k0) α1 + (d-k0) β} placed last when r does not divide k.
inline Rational remainder_last_min_cut(const SystemParams& p, const Rational& alpha,
                                       const Rational& beta) {
  const int groups = p.k / p.r;
  Rational total = 0;
  for (int s = 1; s <= groups; ++s) total += group_term(p, p.r, p.r * (s - 1), alpha, beta);
  const int k0 = groups * p.r;
  if (k0 < p.k) total += group_term(p, p.k - k0, k0, alpha, beta);
  return total;
}

// Exact min-cut capacity separating the source from the worst data collector.
// For r | k this is the equal-group sum; otherwise the remainder group may sit
// at any position, and the minimum over splits is taken.
inline Rational min_cut_capacity(const SystemParams& p, const Rational& alpha,
                                 const Rational& beta) {
  if (alpha < 0 || beta < 0) throw ParamError("alpha and beta must be nonnegative");
  if (p.r_divides_k()) return remainder_last_min_cut(p, alpha, beta);
  return composition_min_cut(p, alpha, beta);
}

// ---------------------------------------------------------------------------
// Closed forms for r | k
// ---------------------------------------------------------------------------

inline void require_r_divides_k(const SystemParams& p) {
  if (!p.r_divides_k()) throw ParamError("r must divide k on this path");
}

inline Rational f_boundary(const SystemParams& p, int i) {
  require_r_divides_k(p);
  if (i < 0 || i > p.k / p.r - 1) throw ParamError("segment index out of range");
  const Rational e = p.erased();
  const Rational den = (2 * p.k - i * p.r * e) * (i + 1) + Rational(2 * p.k, p.r) * (p.d - p.k);
  return 2 * p.M * p.d * e / den;
}

// i (2d - 2k + r + i r) / (2d): the bandwidth coefficient obtained by
// inverting the piecewise-linear capacity.
inline Rational g_coefficient(const SystemParams& p, int i) {
  if (i < 0) throw ParamError("segment index out of range");
  return Rational(i * (2 * p.d - 2 * p.k + p.r + i * p.r), 2 * p.d);
}

// Variant (2d - 2k + r + i r) i r / (2d) with an extra factor r; it does not
// match the capacity inversion and exists only for comparison.
inline Rational g_coefficient_scaled_by_r(const SystemParams& p, int i) {
  return Rational((2 * p.d - 2 * p.k + p.r + i * p.r) * i * p.r, 2 * p.d);
}

// α as a function of capacity for fixed β: inverts the concave piecewise-linear
// map α ↦ capacity(p, α, β). Returns nullopt when M is never reached.
template <typename Capacity>
std::optional<Rational> invert_capacity_with(const SystemParams& p, const Rational& beta,
                                             Capacity&& capacity) {
  // Breakpoints of every group term min{s α, s α1 + (d - x) β}.
  std::vector<Rational> points{Rational(0)};
  const Rational e = p.erased();
  for (int x = 0; x < p.k; ++x) {
    for (int s = 1; s <= p.r; ++s) points.push_back((p.d - x) * beta / (s * e));
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  Rational prev_a = 0;
  Rational prev_c = 0;
  for (const auto& a : points) {
    const Rational c = capacity(p, a, beta);
    if (c >= p.M) {
      if (a == prev_a) return a;
      return prev_a + (p.M - prev_c) * (a - prev_a) / (c - prev_c);
    }
    prev_a = a;
    prev_c = c;
  }
  // Past the last breakpoint the capacity grows with slope k ρ.
  const Rational slope = p.k * p.rho;
  if (slope == 0) return std::nullopt;
  return prev_a + (p.M - prev_c) / slope;
}

inline std::optional<Rational> invert_capacity(const SystemParams& p, const Rational& beta) {
  return invert_capacity_with(p, beta, min_cut_capacity);
}

struct Corner {
  Rational gamma;
  Rational alpha;
};

// Corner points of the trade-off curve from the capacity breakpoints: at a
// breakpoint ratio c = α/β the capacity is β·C(c, 1), so γ = d M / C(c, 1).
// Ordered by increasing γ (MBR first, MSR last).
inline std::vector<Corner> corner_points(const SystemParams& p) {
  std::vector<Rational> ratios;
  const Rational e = p.erased();
  for (int x = 0; x < p.k; ++x) {
    for (int s = 1; s <= p.r; ++s) ratios.push_back(Rational(p.d - x) / (s * e));
  }
  std::vector<Corner> candidates;
  for (const auto& c : ratios) {
    const Rational gamma = p.d * p.M / min_cut_capacity(p, c, Rational(1));
    candidates.push_back({gamma, c * gamma / p.d});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Corner& a, const Corner& b) { return a.gamma < b.gamma; });
  // A breakpoint of one group term need not lie on the curve; keep those that do.
  std::vector<Corner> on_curve;
  for (const auto& c : candidates) {
    if (!on_curve.empty() && on_curve.back().gamma == c.gamma) continue;
    if (const auto exact = invert_capacity(p, c.gamma / p.d); exact && *exact == c.alpha) {
      on_curve.push_back(c);
    }
  }
  // Past the first point with α = M/k the curve is flat.
  const Rational msr_alpha = p.M / p.k;
  for (std::size_t i = 0; i < on_curve.size(); ++i) {
    if (on_curve[i].alpha == msr_alpha) {
      on_curve.resize(i + 1);
      break;
    }
  }
  // With ρ > 0 the curve continues below the last breakpoint; a probe point
  // there lets the collinearity filter drop breakpoints on that extension.
  bool probed = false;
  if (!on_curve.empty()) {
    const Rational g = on_curve.front().gamma / 2;
    if (const auto a = invert_capacity(p, g / p.d)) {
      on_curve.insert(on_curve.begin(), {g, *a});
      probed = true;
    }
  }
  // Collinear neighbours are not corners.
  std::vector<Corner> out;
  for (std::size_t i = 0; i < on_curve.size(); ++i) {
    if (!out.empty() && i + 1 < on_curve.size()) {
      const auto& a = out.back();
      const auto& b = on_curve[i];
      const auto& c = on_curve[i + 1];
      if ((b.alpha - a.alpha) * (c.gamma - b.gamma) == (c.alpha - b.alpha) * (b.gamma - a.gamma)) {
        continue;
      }
    }
    out.push_back(on_curve[i]);
  }
  if (probed) out.erase(out.begin());
  return out;
}

inline Rational mbr_gamma(const SystemParams& p) {
  if (p.r_divides_k()) return f_boundary(p, p.k / p.r - 1);
  return corner_points(p).front().gamma;
}

// Threshold function α*(γ). Below the MBR bandwidth no storage is feasible on
// the curve and an error is raised.
inline Rational alpha_star(const SystemParams& p, const Rational& gamma) {
  p.validate();
  if (gamma <= 0) throw ParamError("gamma must be positive");
  if (gamma < mbr_gamma(p)) throw ParamError("gamma below the minimum-bandwidth point");
  if (!p.r_divides_k()) {
    auto a = invert_capacity(p, gamma / p.d);
    if (!a) throw ParamError("capacity never reaches M");
    return *a;
  }
  if (gamma >= f_boundary(p, 0)) return p.M / p.k;
  const int last = p.k / p.r - 1;
  for (int i = 1; i <= last; ++i) {
    if (gamma >= f_boundary(p, i)) {
      return (p.M - g_coefficient(p, i) * gamma) / (p.k - i * p.r * p.erased());
    }
  }
  // gamma == f(last) is caught above; unreachable.
  throw ParamError("gamma below the minimum-bandwidth point");
}

inline TradeoffPoint msr_point(const SystemParams& p) {
  p.validate();
  TradeoffPoint pt;
  pt.alpha = p.M / p.k;
  pt.gamma = p.M * p.r * p.d * p.erased() / (p.k * (p.d - p.k + p.r));
  pt.beta = pt.gamma / p.d;
  pt.kind = SegmentKind::Msr;
  pt.segment = 0;
  return pt;
}

inline TradeoffPoint mbr_point(const SystemParams& p) {
  p.validate();
  const Rational den = p.k * (2 * p.d - (p.k - p.r) * p.erased());
  TradeoffPoint pt;
  pt.alpha = 2 * p.M * p.d / den;
  pt.gamma = 2 * p.M * p.r * p.d * p.erased() / den;
  pt.beta = pt.gamma / p.d;
  pt.kind = SegmentKind::Mbr;
  pt.segment = p.k / p.r - 1;
  return pt;
}

// ---------------------------------------------------------------------------
// Four-branch closed form for r not dividing k
// ---------------------------------------------------------------------------

struct RemainderFormParams {
  int p = 0;
  int k0 = 0;
  std::optional<int> t_star;  // nullopt when no t in [0, p-2] satisfies the condition
  bool t_star_exact = false;  // false when the nearest t was substituted
  Rational k_prime;
  std::optional<Rational> f_prime;
};

inline RemainderFormParams remainder_form_params(const SystemParams& sp) {
  if (sp.r_divides_k()) throw ParamError("remainder-form parameters need r not dividing k");
  RemainderFormParams t;
  t.p = sp.k / sp.r;
  t.k0 = t.p * sp.r;
  t.k_prime = sp.k * sp.rho + sp.erased() * t.k0;
  const Rational target(sp.d - t.k0, sp.k - t.k0);
  std::optional<int> nearest;
  Rational nearest_gap;
  for (int c = 0; c <= t.p - 2; ++c) {
    const Rational lo(sp.d - t.k0 + c * sp.r, sp.r);
    const Rational hi(sp.d - t.k0 + (c + 1) * sp.r, sp.r);
    if (lo <= target && target <= hi) {
      t.t_star = c;
      t.t_star_exact = true;
      break;
    }
    const Rational gap = target < lo ? lo - target : target - hi;
    if (!nearest || gap < nearest_gap) {
      nearest = c;
      nearest_gap = gap;
    }
  }
  if (!t.t_star) t.t_star = nearest;
  if (t.t_star) {
    const int ts = *t.t_star;
    const Rational kk = sp.k - t.k0;
    const Rational den = (2 * Rational(sp.d - t.k0) * (kk - sp.r) / kk + (ts + 1) * sp.r) * ts +
                         2 * sp.k * Rational(sp.d - t.k0) / (kk * sp.erased());
    t.f_prime = 2 * sp.M * sp.d / den;
  }
  return t;
}

// Branch boundaries f(i) of the four-branch form (f(-1) = ∞ is nullopt).
inline std::optional<Rational> remainder_form_f(const SystemParams& sp, const RemainderFormParams& t, int i) {
  if (i < 0) return std::nullopt;
  const Rational e = sp.erased();
  const int ts = t.t_star.value_or(0);
  Rational den;
  if (i <= ts - 1) {
    den = (2 * sp.k - sp.r * (i + 1) * e) * i + Rational(2 * sp.k, sp.r) * (sp.d - t.k0);
  } else {
    den = (2 * t.k_prime - sp.r * (i + 1) * e) * i + 2 * t.k_prime * (sp.d - t.k0) / sp.r +
          (sp.d - t.k0);
  }
  return 2 * sp.M * sp.d * e / den;
}

// Four-branch threshold (g evaluated with k0 in place of k). Returns
// nullopt when t* does not exist or γ lies outside every branch.
inline std::optional<Rational> remainder_form_alpha(const SystemParams& sp, const Rational& gamma) {
  const RemainderFormParams t = remainder_form_params(sp);
  if (!t.t_star || !t.f_prime) return std::nullopt;
  const int ts = *t.t_star;
  const Rational e = sp.erased();
  SystemParams g0 = sp;
  g0.k = t.k0;  // g uses k0 in place of k
  const Rational extra(sp.d - t.k0, sp.d);
  auto in_range = [&](const std::optional<Rational>& lo, const std::optional<Rational>& hi) {
    return (!lo || gamma >= *lo) && (!hi || gamma <= *hi);
  };
  for (int i = 0; i <= ts - 1; ++i) {
    if (in_range(remainder_form_f(sp, t, i), remainder_form_f(sp, t, i - 1))) {
      return (sp.M - g_coefficient(g0, i) * gamma) / (sp.k - i * sp.r * e);
    }
  }
  if (in_range(t.f_prime, remainder_form_f(sp, t, ts - 1))) {
    return (sp.M - g_coefficient(g0, ts) * gamma) / (sp.k - ts * sp.r * e);
  }
  if (in_range(remainder_form_f(sp, t, ts), t.f_prime)) {
    return (sp.M - (g_coefficient(g0, ts) + extra) * gamma) / (t.k_prime - ts * sp.r * e);
  }
  for (int i = ts + 1; i <= t.p - 1; ++i) {
    if (in_range(remainder_form_f(sp, t, i), remainder_form_f(sp, t, i - 1))) {
      return (sp.M - (g_coefficient(g0, i) + extra) * gamma) / (t.k_prime - i * sp.r * e);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Packet counts and curve sampling
// ---------------------------------------------------------------------------

// ξ P*: packets of a file coded at trade-off index j̄ with expansion ξ.
inline std::int64_t pstar(int k, int d, int r, int j_bar, const Rational& rho = 0, int xi = 1) {
  if (r < 1 || k % r != 0) throw ParamError("P* needs r dividing k");
  if (j_bar < 1 || j_bar > k / r) throw ParamError("j_bar must lie in [1, k/r]");
  if (xi < 1) throw ParamError("xi must be at least 1");
  if (rho < 0 || rho >= 1) throw ParamError("need 0 <= rho < 1");
  const Rational e = 1 - rho;
  const int s = d - (j_bar - 1) * r;
  const Rational value =
      Rational(k, 2) * (2 * s - e * (k - r)) +
      r * e * (Rational((j_bar - 1) * k) - Rational(j_bar * (j_bar - 1) * r, 2));
  const Rational total = value * xi;
  if (denominator(total) != 1) {
    throw ParamError("xi * P* is not an integer (rho * xi must be integral)");
  }
  return numerator(total).convert_to<std::int64_t>();
}

struct CurvePoint {
  TradeoffPoint point;
  Rational gamma_normalized;  // γ / (r (1 - ρ))
};

// Samples α*(γ) between the MBR bandwidth and 1.2 f(0); every corner is emitted
// exactly. Output is sorted by increasing γ.
inline std::vector<CurvePoint> emit_curve(const SystemParams& p, int num_points) {
  p.validate();
  if (num_points < 2) throw ParamError("num_points must be at least 2");
  struct Tagged {
    Rational gamma;
    SegmentKind kind;
    int segment;
  };
  std::vector<Tagged> gammas;
  std::vector<Rational> corner_gammas;
  if (p.r_divides_k()) {
    const int last = p.k / p.r - 1;
    for (int i = last; i >= 0; --i) corner_gammas.push_back(f_boundary(p, i));
  } else {
    for (const auto& c : corner_points(p)) corner_gammas.push_back(c.gamma);
  }
  const Rational lo = corner_gammas.front();
  const Rational msr = corner_gammas.back();
  const Rational hi = msr * Rational(6, 5);
  const int corner_count = static_cast<int>(corner_gammas.size());
  for (int c = 0; c < corner_count; ++c) {
    SegmentKind kind = SegmentKind::Corner;
    if (c == 0) kind = SegmentKind::Mbr;
    if (c == corner_count - 1) kind = SegmentKind::Msr;
    // Segment index counts down from the MBR end to 0 at the MSR corner.
    gammas.push_back({corner_gammas[c], kind, corner_count - 1 - c});
  }
  for (int s = 0; s < num_points; ++s) {
    const Rational g = lo + (hi - lo) * Rational(s, num_points - 1);
    if (std::find(corner_gammas.begin(), corner_gammas.end(), g) != corner_gammas.end()) continue;
    if (g > msr) {
      gammas.push_back({g, SegmentKind::Plateau, 0});
      continue;
    }
    int seg = corner_count - 1;
    for (int c = 0; c + 1 < corner_count; ++c) {
      if (g > corner_gammas[c] && g < corner_gammas[c + 1]) seg = corner_count - 1 - c;
    }
    gammas.push_back({g, SegmentKind::Interior, seg});
  }
  std::sort(gammas.begin(), gammas.end(),
            [](const Tagged& a, const Tagged& b) { return a.gamma < b.gamma; });
  std::vector<CurvePoint> out;
  out.reserve(gammas.size());
  for (const auto& t : gammas) {
    CurvePoint cp;
    cp.point.gamma = t.gamma;
    cp.point.alpha = alpha_star(p, t.gamma);
    cp.point.beta = t.gamma / p.d;
    cp.point.kind = t.kind;
    cp.point.segment = t.segment;
    cp.gamma_normalized = t.gamma / (p.r * p.erased());
    out.push_back(std::move(cp));
  }
  return out;
}

}  // namespace regen
