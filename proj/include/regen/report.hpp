#pragma once

// JSON rendering of experiment reports. Keys keep insertion order so that a
// fixed seed yields byte-identical output.

#include <sstream>
#include <string>

#include "json.hpp"
#include "regen/storage_sim.hpp"

namespace regen {

using Json = nlohmann::ordered_json;

inline std::string rational_string(const Rational& v) {
  std::ostringstream os;
  os << numerator(v);
  if (denominator(v) != 1) os << '/' << denominator(v);
  return os.str();
}

inline Json to_json(const SystemParams& p) {
  return Json{{"n", p.n}, {"k", p.k}, {"d", p.d}, {"r", p.r},
              {"rho", rational_string(p.rho)}, {"M", rational_string(p.M)}};
}

inline Json to_json(const CodeConfig& c) {
  Json j = to_json(c.params);
  j["j_bar"] = c.j_bar;
  j["e"] = c.e;
  j["xi"] = c.xi;
  j["q"] = c.q;
  j["l"] = c.degree();
  j["mode"] = to_string(c.mode);
  j["seed"] = c.seed;
  return j;
}

inline Json to_json(const CheckTally& t) {
  return Json{{"checked", t.checked}, {"passed", t.passed}, {"rate", t.rate()}};
}

inline Json to_json(const ExperimentReport& rep, bool include_timing = false) {
  Json j;
  j["config"] = to_json(rep.config);
  j["rounds_run"] = rep.rounds_run;
  j["trials"] = rep.options.trials;
  j["dc_samples"] = rep.options.dc_samples;
  j["pstar"] = rep.pstar;
  j["min_dim"] = rep.min_dim;
  j["avg_dim"] = rep.avg_dim;
  j["passed"] = rep.passed;
  j["checks"] = Json{{"rate", rep.options.check_rate},
                     {"l1", to_json(rep.l1)},
                     {"l2", to_json(rep.l2)},
                     {"l3", to_json(rep.l3)}};
  j["rank_retries"] = rep.rank_retries;
  j["rank_failures"] = rep.rank_failures;
  j["packets_per_helper"] = rep.packets_per_helper;
  j["packets_per_node"] = rep.packets_per_node;
  if (include_timing) j["wall_seconds"] = rep.wall_seconds;
  return j;
}

}  // namespace regen
