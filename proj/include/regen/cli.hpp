#pragma once

// Command-line front end shared by the `regen` binary and its tests.
//
// Exit codes: 0 success, 1 verification or reconstruction failure,
// 2 invalid configuration, 3 enumeration budget exceeded.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "regen/flowgraph.hpp"
#include "regen/report.hpp"
#include "regen/storage_sim.hpp"
#include "regen/tradeoff.hpp"

namespace regen::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInvalid = 2, kBudget = 3 };

struct RunConfig {
  int n = 0;  // 0 means d + r
  int k = 8;
  int d = 10;
  int r = 2;
  std::string rho = "0";
  std::string M = "1";
  int j_bar = 1;
  int e = 0;
  int xi = 1;
  std::uint32_t q = 1021;
  std::size_t l = 0;
  int rounds = 100;
  int trials = 50;
  int dc_samples = 1;
  double check_rate = 0.1;
  std::uint64_t seed = 1;
  std::string format = "csv";
  std::string out;
  std::string preset;
  std::string mode = "dimension";
  bool timing = false;
  int points = 20;
  int grid = 5;
  int max_rounds = 0;  // 0 means ceil(k / r)
  std::size_t max_states = 500'000;
  std::string input;
  std::size_t random_bytes = 1024;
  bool sabotage = false;
};

inline SystemParams system_params(const RunConfig& c) {
  SystemParams p;
  p.n = c.n == 0 ? c.d + c.r : c.n;
  p.k = c.k;
  p.d = c.d;
  p.r = c.r;
  p.rho = parse_rational(c.rho);
  p.M = parse_rational(c.M);
  p.validate();
  return p;
}

inline CodeConfig code_config(const RunConfig& c) {
  CodeConfig cfg;
  cfg.params = system_params(c);
  cfg.j_bar = c.j_bar;
  cfg.e = c.e;
  cfg.xi = c.xi;
  cfg.q = c.q;
  cfg.l = c.l;
  cfg.seed = c.seed;
  if (c.mode == "full") {
    cfg.mode = PayloadMode::Full;
  } else if (c.mode != "dimension") {
    throw ParamError("--mode must be dimension or full");
  }
  cfg.validate();
  return cfg;
}

inline std::string decimal(const Rational& v) {
  std::ostringstream os;
  os << std::setprecision(12) << to_double(v);
  return os.str();
}

// Writes to --out when given, otherwise to the supplied stream.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ParamError("cannot open output file " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

inline int cmd_tradeoff(const RunConfig& c, std::ostream& out) {
  const auto p = system_params(c);
  const auto curve = emit_curve(p, c.points);
  Output o(c.out, out);
  if (c.format == "json") {
    Json rows = Json::array();
    for (const auto& cp : curve) {
      rows.push_back(Json{{"gamma", rational_string(cp.point.gamma)},
                          {"alpha", rational_string(cp.point.alpha)},
                          {"gamma_normalized", rational_string(cp.gamma_normalized)},
                          {"segment", cp.point.label()}});
    }
    *o << Json{{"params", to_json(p)}, {"curve", rows}}.dump(2) << '\n';
    return kOk;
  }
  if (c.format != "csv") throw ParamError("--format must be csv or json");
  *o << "gamma,alpha,gamma_normalized,segment\n";
  for (const auto& cp : curve) {
    *o << decimal(cp.point.gamma) << ',' << decimal(cp.point.alpha) << ','
       << decimal(cp.gamma_normalized) << ',' << cp.point.label() << '\n';
  }
  return kOk;
}

inline int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const CodeConfig cfg = code_config(c);
  if (cfg.mode == PayloadMode::Full && cfg.degree() > 64) {
    err << "warning: full-payload mode at l = " << cfg.degree()
        << " is slow; dimension mode tracks the same subspaces\n";
  }
  ExperimentOptions opt;
  opt.rounds = c.rounds;
  opt.trials = c.trials;
  opt.dc_samples = c.dc_samples;
  opt.check_rate = c.check_rate;
  const auto rep = run_experiment(cfg, opt);
  Output o(c.out, out);
  if (c.format == "csv") {
    *o << "n,k,d,r,rho,j_bar,e,xi,q,seed,rounds,trials,pstar,min_dim,avg_dim,passed\n";
    const auto& p = cfg.params;
    *o << p.n << ',' << p.k << ',' << p.d << ',' << p.r << ',' << rational_string(p.rho) << ','
       << cfg.j_bar << ',' << cfg.e << ',' << cfg.xi << ',' << cfg.q << ',' << cfg.seed << ','
       << rep.rounds_run << ',' << opt.trials << ',' << rep.pstar << ',' << rep.min_dim << ','
       << std::setprecision(12) << rep.avg_dim << ',' << (rep.passed ? "true" : "false") << '\n';
  } else {
    *o << to_json(rep, c.timing).dump(2) << '\n';
  }
  return rep.passed ? kOk : kFailure;
}

inline std::vector<GridPoint> rational_grid(int g) {
  if (g < 1) throw ParamError("--grid must be at least 1");
  std::vector<GridPoint> grid;
  for (int a = 1; a <= g; ++a)
    for (int b = 1; b <= g; ++b) grid.push_back({Rational(a, g), Rational(b, 2 * g)});
  return grid;
}

inline int cmd_verify_mincut(const RunConfig& c, std::ostream& out) {
  const auto p = system_params(c);
  const auto grid = rational_grid(c.grid);
  const int rounds = c.max_rounds > 0 ? c.max_rounds : (p.k + p.r - 1) / p.r;
  EnumerationLimits limits;
  limits.max_states = c.max_states;
  const auto res = exhaustive_min_grid(p, grid, rounds, limits);
  Rational worst = 0;
  Json mismatches = Json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Rational bound = min_cut_capacity(p, grid[i].alpha, grid[i].beta);
    const Rational gap = abs(res.minima[i] - bound);
    if (gap > worst) worst = gap;
    if (gap != 0) {
      mismatches.push_back(Json{{"alpha", rational_string(grid[i].alpha)},
                                {"beta", rational_string(grid[i].beta)},
                                {"exhaustive", rational_string(res.minima[i])},
                                {"formula", rational_string(bound)}});
    }
  }
  Output o(c.out, out);
  *o << Json{{"params", to_json(p)},
             {"r_divides_k", p.r_divides_k()},
             {"max_rounds", rounds},
             {"grid_points", grid.size()},
             {"states", res.states},
             {"flows", res.flows},
             {"max_discrepancy", rational_string(worst)},
             {"mismatches", mismatches}}
            .dump(2)
     << '\n';
  return worst == 0 ? kOk : kFailure;
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParamError("cannot read input file " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline int cmd_roundtrip(const RunConfig& c, std::ostream& out, std::ostream& err) {
  CodeConfig cfg = code_config(c);
  cfg.mode = PayloadMode::Full;
  if (cfg.degree() > 64) {
    err << "warning: full-payload round trip at l = " << cfg.degree() << " is slow\n";
  }
  std::vector<std::uint8_t> data;
  if (!c.input.empty()) {
    data = read_file(c.input);
  } else {
    std::mt19937_64 gen(c.seed ^ 0xda7aULL);
    data.resize(c.random_bytes);
    for (auto& b : data) b = static_cast<std::uint8_t>(gen());
  }
  const ExtField field = StorageSystem::make_field(cfg);
  const auto packets = static_cast<std::size_t>(cfg.file_packets());
  const auto stripes = encode_bytes(data, field, packets);
  StorageSystem sys(cfg, field, stripes);
  const auto& p = cfg.params;
  NodeSet last_failed, last_helpers;
  for (int round = 0; round < c.rounds; ++round) {
    auto [failed, helpers] = random_round(p.n, p.r, p.d, sys.rng());
    const bool drop = c.sabotage && round + 1 == c.rounds;
    if (p.rho == 0) {
      sys.repair_full(failed, helpers, drop ? std::optional<std::size_t>(p.d - 1) : std::nullopt);
    } else {
      if (drop) throw ParamError("--sabotage needs rho = 0");
      for (std::size_t f : failed) sys.mark_erasures(f);
      sys.repair_partial(failed, helpers);
    }
    last_failed = failed;
    last_helpers = helpers;
  }
  NodeSet dc;
  if (c.sabotage && c.rounds > 0) {
    // Newcomers plus helpers that did transmit: their span cannot grow past
    // what d - 1 helpers hold.
    dc = last_failed;
    for (std::size_t i = 0; dc.size() < static_cast<std::size_t>(p.k); ++i) dc.push_back(last_helpers[i]);
  } else {
    dc = random_dc(p.n, p.k, sys.rng());
  }
  Json rep{{"config", to_json(cfg)},
           {"bytes", data.size()},
           {"stripes", stripes.size()},
           {"rounds", c.rounds},
           {"sabotage", c.sabotage},
           {"dc", dc},
           {"required", packets}};
  int code = kOk;
  try {
    const auto rec = sys.reconstruct(dc);
    const auto back = decode_bytes(rec.stripes, field);
    rep["dimension"] = rec.dimension;
    rep["match"] = back == data;
    code = back == data ? kOk : kFailure;
  } catch (const ReconstructionError& ex) {
    rep["dimension"] = ex.dimension();
    rep["match"] = false;
    err << "reconstruction failed: " << ex.what() << '\n';
    code = kFailure;
  }
  Output o(c.out, out);
  *o << rep.dump(2) << '\n';
  return code;
}

inline void apply_preset(RunConfig& c, const std::string& preset) {
  const std::string prefix = "tableII:";
  if (preset.rfind(prefix, 0) != 0) throw ParamError("presets look like tableII:<row>");
  int row = 0;
  try {
    row = std::stoi(preset.substr(prefix.size()));
  } catch (const std::exception&) {
    throw ParamError("bad preset row in " + preset);
  }
  const auto& rows = table2_rows();
  if (row < 1 || row > static_cast<int>(rows.size())) {
    throw ParamError("preset row must lie in 1.." + std::to_string(rows.size()));
  }
  const auto& t = rows[static_cast<std::size_t>(row - 1)];
  c.n = t.n;
  c.k = t.k;
  c.d = t.d;
  c.r = t.r;
  c.j_bar = t.j_bar;
  c.q = t.q;
  c.e = t.e;
  c.rho = "0";
  c.xi = 1;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cooperative regenerating codes: trade-off, simulation and verification", "regen"};
  app.require_subcommand(1);
  RunConfig c;

  auto add_params = [&](CLI::App* sub) {
    sub->add_option("--n", c.n, "number of nodes (default d + r)");
    sub->add_option("--k", c.k, "nodes contacted by a data collector");
    sub->add_option("--d", c.d, "helpers per repair");
    sub->add_option("--r", c.r, "nodes repaired together");
    sub->add_option("--rho", c.rho, "surviving fraction of a faulty node, e.g. 1/2");
    sub->add_option("--M", c.M, "file size");
    sub->add_option("--out", c.out, "output path (default stdout)");
  };
  auto add_code = [&](CLI::App* sub) {
    sub->add_option("--j-bar", c.j_bar, "trade-off index");
    sub->add_option("--e", c.e, "helper sampling surplus");
    sub->add_option("--xi", c.xi, "packet expansion factor");
    sub->add_option("--q", c.q, "base field prime");
    sub->add_option("--l", c.l, "extension degree (default (n - r) S)");
    sub->add_option("--seed", c.seed, "random seed (REGEN_SEED when absent)");
    sub->add_option("--rounds", c.rounds, "repair rounds");
    sub->add_option("--preset", c.preset, "tableII:<row> parameter set");
  };

  auto* trade = app.add_subcommand("tradeoff", "storage / repair-bandwidth curve");
  add_params(trade);
  trade->add_option("--points", c.points, "sampled points besides the corners");
  trade->add_option("--format", c.format, "csv or json");

  auto* sim = app.add_subcommand("simulate", "repair rounds and data collector dimensions");
  add_params(sim);
  add_code(sim);
  sim->add_option("--trials", c.trials, "data collector trials");
  sim->add_option("--dc-samples", c.dc_samples, "k-subsets per trial");
  sim->add_option("--check-rate", c.check_rate, "fraction of rounds with L1/L2/L3 checks");
  sim->add_option("--mode", c.mode, "dimension or full");
  sim->add_option("--format", c.format, "json or csv");
  sim->add_flag("--timing", c.timing, "include wall time in the report");

  auto* mc = app.add_subcommand("verify-mincut", "exhaustive flow-graph oracle vs formula");
  add_params(mc);
  mc->add_option("--grid", c.grid, "alpha and beta grid size");
  mc->add_option("--max-rounds", c.max_rounds, "repair rounds to enumerate (default ceil(k/r))");
  mc->add_option("--max-states", c.max_states, "history budget");

  auto* rt = app.add_subcommand("roundtrip", "encode, repair, reconstruct and compare a file");
  add_params(rt);
  add_code(rt);
  rt->add_option("--input", c.input, "file to encode (default: random bytes)");
  rt->add_option("--random-bytes", c.random_bytes, "size of the random file");
  rt->add_flag("--sabotage", c.sabotage, "drop one helper in the last round");

  // Sensible defaults for the code-level commands.
  for (auto* sub : {sim, rt}) {
    sub->preparse_callback([&c, sub, rt](std::size_t) {
      c.format = "json";
      if (sub == rt) c.rounds = 5;
    });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kInvalid;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    if (!c.preset.empty()) {
      RunConfig explicit_values = c;
      apply_preset(c, c.preset);
      // Flags given on the command line win over the preset.
      auto keep = [&](const char* flag, auto member) {
        if (chosen->count(flag) > 0) c.*member = explicit_values.*member;
      };
      keep("--n", &RunConfig::n);
      keep("--k", &RunConfig::k);
      keep("--d", &RunConfig::d);
      keep("--r", &RunConfig::r);
      keep("--j-bar", &RunConfig::j_bar);
      keep("--q", &RunConfig::q);
      keep("--e", &RunConfig::e);
      keep("--rho", &RunConfig::rho);
      keep("--xi", &RunConfig::xi);
    }
    if (chosen->get_option_no_throw("--seed") != nullptr && chosen->count("--seed") == 0) {
      if (const char* env = std::getenv("REGEN_SEED")) {
        try {
          c.seed = std::stoull(env);
        } catch (const std::exception&) {
          throw ParamError("REGEN_SEED must be an unsigned integer");
        }
      }
    }
    if (chosen == trade) return cmd_tradeoff(c, out);
    if (chosen == sim) return cmd_simulate(c, out, err);
    if (chosen == mc) return cmd_verify_mincut(c, out);
    return cmd_roundtrip(c, out, err);
  } catch (const ParamError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInvalid;
  } catch (const PatternError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInvalid;
  } catch (const FieldError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInvalid;
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

inline int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run_cli(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace regen::cli
