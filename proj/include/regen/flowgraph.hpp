#pragma once

// Information flow graphs for broadcast repair of partially failed nodes and
// an exact max-flow oracle. Nodes are 0-based; a pattern is a sequence of
// repair rounds plus the nodes a data collector reads at the end.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "regen/tradeoff.hpp"

namespace regen {

enum class VertexType { Source, In, Mid, Out, Fail, Aux, DC };

struct Vertex {
  VertexType type;
  int node = -1;   // storage node, or the helper an Aux vertex belongs to
  int round = 0;   // repair round that created the vertex (0 = initial)
};

// Symbolic capacity: resolved against (α, β, ρ) when a flow is computed.
enum class CapKind { Infinite, Alpha, Alpha1, AlphaMinusAlpha1, Beta };

struct Edge {
  int from;
  int to;
  CapKind kind;
};

struct RepairRound {
  std::vector<int> failed;
  std::vector<int> helpers;
};

struct FailurePattern {
  std::vector<RepairRound> rounds;
  std::vector<int> dc_selection;
};

class PatternError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void validate_pattern(const SystemParams& p, const FailurePattern& pattern,
                             bool require_dc = true) {
  auto check_nodes = [&](const std::vector<int>& v, std::size_t size, const char* what) {
    if (v.size() != size) {
      throw PatternError(std::string(what) + " must have " + std::to_string(size) + " nodes");
    }
    std::set<int> seen;
    for (int x : v) {
      if (x < 0 || x >= p.n) throw PatternError(std::string(what) + " node out of range");
      if (!seen.insert(x).second) throw PatternError(std::string(what) + " repeats a node");
    }
  };
  for (const auto& round : pattern.rounds) {
    check_nodes(round.failed, static_cast<std::size_t>(p.r), "failed set");
    check_nodes(round.helpers, static_cast<std::size_t>(p.d), "helper set");
    for (int h : round.helpers) {
      if (std::find(round.failed.begin(), round.failed.end(), h) != round.failed.end()) {
        throw PatternError("a helper cannot be among the failed nodes");
      }
    }
  }
  if (require_dc) check_nodes(pattern.dc_selection, static_cast<std::size_t>(p.k), "DC selection");
}

class FlowGraph {
 public:
  int add_vertex(VertexType type, int node = -1, int round = 0) {
    vertices_.push_back({type, node, round});
    return static_cast<int>(vertices_.size()) - 1;
  }
  void add_edge(int from, int to, CapKind kind) { edges_.push_back({from, to, kind}); }

  [[nodiscard]] const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
  [[nodiscard]] std::size_t count(VertexType t) const {
    return static_cast<std::size_t>(std::count_if(
        vertices_.begin(), vertices_.end(), [t](const Vertex& v) { return v.type == t; }));
  }
  [[nodiscard]] int source() const { return find_first(VertexType::Source); }
  [[nodiscard]] int sink() const { return find_first(VertexType::DC); }

  // Capacities of the graph it was built for.
  Rational alpha = 0;
  Rational beta = 0;
  Rational rho = 0;

 private:
  [[nodiscard]] int find_first(VertexType t) const {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      if (vertices_[i].type == t) return static_cast<int>(i);
    }
    throw PatternError("graph has no vertex of the requested type");
  }

  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
};

namespace detail {

// Graph of a repair history without the DC; `outs` holds the final Out vertex
// of every node so any DC selection can be attached afterwards.
struct HistoryGraph {
  FlowGraph graph;
  std::vector<int> outs;
};

inline HistoryGraph build_history(const SystemParams& p, const std::vector<RepairRound>& rounds) {
  HistoryGraph h;
  auto& g = h.graph;
  // remaining[v]: failures of node v still ahead; decides gadget shape.
  std::vector<int> remaining(p.n, 0);
  for (const auto& rd : rounds) {
    for (int f : rd.failed) ++remaining[f];
  }
  std::vector<int> content(p.n);  // vertex helpers read from
  std::vector<int> out(p.n);
  auto make_version = [&](int node, int round) {
    const int in = g.add_vertex(VertexType::In, node, round);
    if (remaining[node] > 0) {
      const int mid = g.add_vertex(VertexType::Mid, node, round);
      const int o = g.add_vertex(VertexType::Out, node, round);
      const int fail = g.add_vertex(VertexType::Fail, node, round);
      g.add_edge(in, mid, CapKind::Alpha);
      g.add_edge(mid, o, CapKind::Alpha1);
      g.add_edge(mid, fail, CapKind::AlphaMinusAlpha1);
      content[node] = mid;
      out[node] = o;
    } else {
      const int o = g.add_vertex(VertexType::Out, node, round);
      g.add_edge(in, o, CapKind::Alpha);
      content[node] = o;
      out[node] = o;
    }
    return in;
  };
  const int src = g.add_vertex(VertexType::Source);
  for (int v = 0; v < p.n; ++v) g.add_edge(src, make_version(v, 0), CapKind::Infinite);
  for (std::size_t s = 0; s < rounds.size(); ++s) {
    const int round = static_cast<int>(s) + 1;
    std::vector<int> aux;
    for (int hlp : rounds[s].helpers) {
      const int a = g.add_vertex(VertexType::Aux, hlp, round);
      g.add_edge(content[hlp], a, CapKind::Beta);
      aux.push_back(a);
    }
    for (int f : rounds[s].failed) {
      const int old_out = out[f];
      --remaining[f];
      const int in = make_version(f, round);
      for (int a : aux) g.add_edge(a, in, CapKind::Infinite);
      g.add_edge(old_out, in, CapKind::Infinite);
    }
  }
  h.outs = out;
  return h;
}

inline BigInt lcm_big(const BigInt& a, const BigInt& b) {
  return a / boost::multiprecision::gcd(a, b) * b;
}

// Dinic max-flow on integer capacities; the topology is fixed and capacities
// are reloaded for each (α, β, DC) evaluation.
class IntegerFlow {
 public:
  explicit IntegerFlow(int vertices) : head_(vertices, -1), level_(vertices), iter_(vertices) {}

  int add_edge(int from, int to) {
    const int id = static_cast<int>(to_.size());
    to_.push_back(to);
    cap_.push_back(0);
    next_.push_back(head_[from]);
    head_[from] = id;
    to_.push_back(from);
    cap_.push_back(0);
    next_.push_back(head_[to]);
    head_[to] = id + 1;
    base_.push_back(0);
    base_.push_back(0);
    return id;
  }

  void set_capacity(int edge, std::int64_t c) { base_[edge] = c; }

  std::int64_t max_flow(int s, int t) {
    cap_ = base_;
    std::int64_t flow = 0;
    while (bfs(s, t)) {
      std::copy(head_.begin(), head_.end(), iter_.begin());
      while (std::int64_t f = dfs(s, t, std::numeric_limits<std::int64_t>::max())) flow += f;
    }
    return flow;
  }

  // Vertices reachable from s along edges of positive base capacity.
  [[nodiscard]] bool reachable(int s, int t) const {
    std::vector<char> seen(head_.size(), 0);
    std::vector<int> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (v == t) return true;
      for (int e = head_[v]; e != -1; e = next_[e]) {
        if ((e & 1) == 0 && base_[e] > 0 && !seen[to_[e]]) {
          seen[to_[e]] = 1;
          stack.push_back(to_[e]);
        }
      }
    }
    return false;
  }

 private:
  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int e = head_[v]; e != -1; e = next_[e]) {
        if (cap_[e] > 0 && level_[to_[e]] < 0) {
          level_[to_[e]] = level_[v] + 1;
          q.push(to_[e]);
        }
      }
    }
    return level_[t] >= 0;
  }

  std::int64_t dfs(int v, int t, std::int64_t pushed) {
    if (v == t) return pushed;
    for (int& e = iter_[v]; e != -1; e = next_[e]) {
      const int u = to_[e];
      if (cap_[e] <= 0 || level_[u] != level_[v] + 1) continue;
      if (std::int64_t f = dfs(u, t, std::min(pushed, cap_[e]))) {
        cap_[e] -= f;
        cap_[e ^ 1] += f;
        return f;
      }
    }
    return 0;
  }

  std::vector<int> head_;
  std::vector<int> to_;
  std::vector<int> next_;
  std::vector<std::int64_t> cap_;
  std::vector<std::int64_t> base_;
  std::vector<int> level_;
  std::vector<int> iter_;
};

struct ScaledCapacities {
  BigInt scale;
  std::array<std::int64_t, 5> by_kind{};  // indexed by CapKind; Infinite filled later
};

inline ScaledCapacities scale_capacities(const Rational& alpha, const Rational& beta,
                                         const Rational& rho) {
  const Rational a1 = rho * alpha;
  const Rational values[] = {alpha, a1, alpha - a1, beta};
  BigInt scale = 1;
  for (const auto& v : values) scale = lcm_big(scale, denominator(v));
  ScaledCapacities sc;
  sc.scale = scale;
  const BigInt limit = BigInt(1) << 40;
  for (int i = 0; i < 4; ++i) {
    const BigInt iv = numerator(values[i] * scale);
    if (iv > limit) throw BudgetExceeded("capacities too large for exact integer max-flow");
    sc.by_kind[i + 1] = iv.convert_to<std::int64_t>();
  }
  return sc;
}

// Evaluates a history graph against many DC selections and (α, β) points.
class HistoryEvaluator {
 public:
  HistoryEvaluator(const SystemParams& p, const HistoryGraph& h)
      : flow_(static_cast<int>(h.graph.vertices().size()) + 1) {
    sink_ = static_cast<int>(h.graph.vertices().size());
    source_ = h.graph.source();
    for (const auto& e : h.graph.edges()) {
      edge_ids_.push_back(flow_.add_edge(e.from, e.to));
      kinds_.push_back(e.kind);
    }
    for (int v = 0; v < p.n; ++v) dc_edges_.push_back(flow_.add_edge(h.outs[v], sink_));
    finite_edges_ = 0;
    for (auto k : kinds_) finite_edges_ += k == CapKind::Infinite ? 0 : 1;
  }

  void load(const ScaledCapacities& sc) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < kinds_.size(); ++i) {
      if (kinds_[i] != CapKind::Infinite) total += sc.by_kind[static_cast<int>(kinds_[i])];
    }
    inf_ = total + 1;
    for (std::size_t i = 0; i < kinds_.size(); ++i) {
      const auto k = kinds_[i];
      flow_.set_capacity(edge_ids_[i], k == CapKind::Infinite ? inf_ : sc.by_kind[static_cast<int>(k)]);
    }
  }

  std::int64_t evaluate(const std::vector<int>& dc) {
    for (int e : dc_edges_) flow_.set_capacity(e, 0);
    for (int v : dc) flow_.set_capacity(dc_edges_[v], inf_);
    return flow_.max_flow(source_, sink_);
  }

  bool connected(const std::vector<int>& dc) {
    for (int e : dc_edges_) flow_.set_capacity(e, 0);
    for (int v : dc) flow_.set_capacity(dc_edges_[v], inf_);
    return flow_.reachable(source_, sink_);
  }

 private:
  IntegerFlow flow_;
  int source_ = 0;
  int sink_ = 0;
  std::vector<int> edge_ids_;
  std::vector<CapKind> kinds_;
  std::vector<int> dc_edges_;
  std::size_t finite_edges_ = 0;
  std::int64_t inf_ = 1;
};

inline void for_each_subset(int n, int m, const std::function<void(const std::vector<int>&)>& visit) {
  if (m > n || m < 0) return;
  std::vector<int> s(m);
  std::iota(s.begin(), s.end(), 0);
  while (true) {
    visit(s);
    int i = m;
    while (i > 0 && s[i - 1] == n - m + i - 1) --i;
    if (i == 0) return;
    ++s[i - 1];
    for (int j = i; j < m; ++j) s[j] = s[j - 1] + 1;
  }
}

}  // namespace detail

inline FlowGraph build_graph(const SystemParams& p, const FailurePattern& pattern,
                             const Rational& alpha, const Rational& beta) {
  validate_pattern(p, pattern);
  if (alpha < 0 || beta < 0) throw ParamError("alpha and beta must be nonnegative");
  auto h = detail::build_history(p, pattern.rounds);
  const int dc = h.graph.add_vertex(VertexType::DC, -1, static_cast<int>(pattern.rounds.size()));
  for (int v : pattern.dc_selection) h.graph.add_edge(h.outs[v], dc, CapKind::Infinite);
  h.graph.alpha = alpha;
  h.graph.beta = beta;
  h.graph.rho = p.rho;
  return std::move(h.graph);
}

inline Rational resolve(const FlowGraph& g, CapKind kind) {
  switch (kind) {
    case CapKind::Alpha: return g.alpha;
    case CapKind::Alpha1: return g.rho * g.alpha;
    case CapKind::AlphaMinusAlpha1: return g.alpha - g.rho * g.alpha;
    case CapKind::Beta: return g.beta;
    case CapKind::Infinite: break;
  }
  throw PatternError("infinite capacity has no finite value");
}

struct MinCutResult {
  Rational value;
  bool dc_connected = true;  // false: no path from the source at all
};

inline MinCutResult min_cut(const FlowGraph& g) {
  const int n = static_cast<int>(g.vertices().size());
  detail::IntegerFlow flow(n);
  const auto sc = detail::scale_capacities(g.alpha, g.beta, g.rho);
  std::int64_t total = 0;
  for (const auto& e : g.edges()) {
    if (e.kind != CapKind::Infinite) total += sc.by_kind[static_cast<int>(e.kind)];
  }
  for (const auto& e : g.edges()) {
    const int id = flow.add_edge(e.from, e.to);
    flow.set_capacity(id, e.kind == CapKind::Infinite ? total + 1
                                                      : sc.by_kind[static_cast<int>(e.kind)]);
  }
  MinCutResult res;
  const int s = g.source();
  const int t = g.sink();
  // Structural reachability ignores capacities that happen to be zero.
  detail::IntegerFlow shape(n);
  for (const auto& e : g.edges()) shape.set_capacity(shape.add_edge(e.from, e.to), 1);
  res.dc_connected = shape.reachable(s, t);
  res.value = Rational(flow.max_flow(s, t)) / Rational(sc.scale);
  return res;
}

// Repairs ⌈k/r⌉ groups in order (lowest indices first) after any extra leading
// rounds, with the d lowest-indexed non-failed nodes as helpers; the DC reads
// the first k nodes. When r does not divide k the partial group comes last.
inline FailurePattern worst_case_pattern(const SystemParams& p, int rounds) {
  p.validate();
  const int groups = (p.k + p.r - 1) / p.r;
  if (rounds < groups) throw PatternError("need at least ceil(k/r) rounds");
  auto helpers_for = [&](const std::vector<int>& failed) {
    std::vector<int> h;
    for (int v = 0; v < p.n && static_cast<int>(h.size()) < p.d; ++v) {
      if (std::find(failed.begin(), failed.end(), v) == failed.end()) h.push_back(v);
    }
    return h;
  };
  FailurePattern pat;
  for (int extra = 0; extra < rounds - groups; ++extra) {
    std::vector<int> failed;
    for (int v = p.n - p.r; v < p.n; ++v) failed.push_back(v);
    pat.rounds.push_back({failed, helpers_for(failed)});
  }
  for (int g = 0; g < groups; ++g) {
    std::vector<int> failed;
    for (int v = g * p.r; v < (g + 1) * p.r; ++v) failed.push_back(v);
    pat.rounds.push_back({failed, helpers_for(failed)});
  }
  for (int v = 0; v < p.k; ++v) pat.dc_selection.push_back(v);
  return pat;
}

struct GridPoint {
  Rational alpha;
  Rational beta;
};

struct EnumerationLimits {
  std::size_t max_states = 500'000;
};

struct ExhaustiveResult {
  std::vector<Rational> minima;  // one per grid point
  std::size_t states = 0;        // canonical repair histories evaluated
  std::size_t flows = 0;         // max-flow computations
};

namespace detail {

using RoundMasks = std::vector<std::uint32_t>;  // (failed, helpers) per round, flattened

class Canonicalizer {
 public:
  explicit Canonicalizer(int n) : n_(n) {
    if (n <= 7) {
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      const std::uint32_t masks = 1u << n;
      do {
        std::vector<std::uint32_t> table(masks);
        for (std::uint32_t m = 0; m < masks; ++m) {
          std::uint32_t out = 0;
          for (int b = 0; b < n; ++b) {
            if (m >> b & 1u) out |= 1u << perm[b];
          }
          table[m] = out;
        }
        tables_.push_back(std::move(table));
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
  }

  // Lexicographically least relabeling; identity when n is too large.
  [[nodiscard]] RoundMasks canonical(const RoundMasks& s) const {
    if (tables_.empty()) return s;
    RoundMasks best;
    RoundMasks cand(s.size());
    for (const auto& t : tables_) {
      bool smaller = best.empty();
      bool decided = best.empty();
      for (std::size_t i = 0; i < s.size(); ++i) {
        cand[i] = t[s[i]];
        if (!decided && cand[i] != best[i]) {
          smaller = cand[i] < best[i];
          decided = true;
          if (!smaller) break;
        }
      }
      if (smaller) best = cand;
    }
    return best;
  }

 private:
  int n_;
  std::vector<std::vector<std::uint32_t>> tables_;
};

struct MasksHash {
  std::size_t operator()(const RoundMasks& m) const noexcept {
    std::size_t h = m.size();
    for (auto x : m) h = h * 1000003u ^ x;
    return h;
  }
};

inline std::vector<int> mask_nodes(std::uint32_t m) {
  std::vector<int> v;
  for (int b = 0; m; ++b, m >>= 1) {
    if (m & 1u) v.push_back(b);
  }
  return v;
}

inline std::vector<RepairRound> to_rounds(const RoundMasks& s) {
  std::vector<RepairRound> rounds;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) {
    rounds.push_back({mask_nodes(s[i]), mask_nodes(s[i + 1])});
  }
  return rounds;
}

}  // namespace detail

// Minimum min-cut over every repair history with at most max_rounds rounds and
// every DC selection of k nodes, for each grid point at once.
inline ExhaustiveResult exhaustive_min_grid(const SystemParams& p, const std::vector<GridPoint>& grid,
                                            int max_rounds, EnumerationLimits limits = {}) {
  p.validate();
  if (p.n > 16) throw BudgetExceeded("too many nodes for enumeration");
  if (max_rounds < 0) throw ParamError("max_rounds must be nonnegative");
  std::vector<detail::ScaledCapacities> scaled;
  for (const auto& gp : grid) scaled.push_back(detail::scale_capacities(gp.alpha, gp.beta, p.rho));

  // Round choices: failed r-set and helper d-set from the rest.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> choices;
  detail::for_each_subset(p.n, p.r, [&](const std::vector<int>& failed) {
    std::uint32_t fm = 0;
    for (int v : failed) fm |= 1u << v;
    std::vector<int> rest;
    for (int v = 0; v < p.n; ++v) {
      if (!(fm >> v & 1u)) rest.push_back(v);
    }
    detail::for_each_subset(static_cast<int>(rest.size()), p.d, [&](const std::vector<int>& pick) {
      std::uint32_t hm = 0;
      for (int i : pick) hm |= 1u << rest[i];
      choices.emplace_back(fm, hm);
    });
  });

  std::vector<std::vector<int>> dcs;
  detail::for_each_subset(p.n, p.k, [&](const std::vector<int>& s) { dcs.push_back(s); });

  ExhaustiveResult res;
  res.minima.assign(grid.size(), Rational(0));
  std::vector<std::int64_t> best(grid.size(), std::numeric_limits<std::int64_t>::max());

  const detail::Canonicalizer canon(p.n);
  std::vector<detail::RoundMasks> level{detail::RoundMasks{}};
  for (int depth = 0; depth <= max_rounds && !level.empty(); ++depth) {
    for (const auto& state : level) {
      auto h = detail::build_history(p, detail::to_rounds(state));
      detail::HistoryEvaluator ev(p, h);
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        ev.load(scaled[gi]);
        for (const auto& dc : dcs) {
          const std::int64_t v = ev.evaluate(dc);
          ++res.flows;
          best[gi] = std::min(best[gi], v);
        }
      }
      ++res.states;
    }
    if (depth == max_rounds) break;
    std::unordered_set<detail::RoundMasks, detail::MasksHash> next;
    for (const auto& state : level) {
      for (const auto& [fm, hm] : choices) {
        detail::RoundMasks s = state;
        s.push_back(fm);
        s.push_back(hm);
        next.insert(canon.canonical(s));
        if (next.size() + res.states > limits.max_states) {
          throw BudgetExceeded("enumeration exceeded " + std::to_string(limits.max_states) +
                               " repair histories");
        }
      }
    }
    level.assign(next.begin(), next.end());
    std::sort(level.begin(), level.end());
  }
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    res.minima[gi] = Rational(best[gi]) / Rational(scaled[gi].scale);
  }
  return res;
}

inline Rational exhaustive_min(const SystemParams& p, const Rational& alpha, const Rational& beta,
                               int max_rounds, EnumerationLimits limits = {}) {
  return exhaustive_min_grid(p, {{alpha, beta}}, max_rounds, limits).minima.front();
}

}  // namespace regen
