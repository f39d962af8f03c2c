#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "regen/storage_sim.hpp"

using namespace regen;

namespace {

CodeConfig small_config(int j_bar = 2, std::uint32_t q = 1021, int e = 0) {
  CodeConfig c;
  c.params = SystemParams{9, 6, 6, 3, 0, 1};
  c.j_bar = j_bar;
  c.e = e;
  c.q = q;
  c.seed = 5;
  return c;
}

CodeConfig partial_config() {
  CodeConfig c;
  c.params = SystemParams{9, 6, 6, 3, Rational(1, 2), 1};
  c.j_bar = 1;
  c.e = 1;
  c.xi = 2;
  c.q = 1021;
  c.seed = 11;
  return c;
}

NodeSet range(std::size_t from, std::size_t to) {
  NodeSet s;
  for (std::size_t i = from; i < to; ++i) s.push_back(i);
  return s;
}

}  // namespace

TEST(CodeConfig, DerivedSizes) {
  const auto c = small_config();
  EXPECT_EQ(c.packets_per_node(), 3);
  EXPECT_EQ(c.file_packets(), 18);
  EXPECT_EQ(c.degree(), 18u);
  const auto p = partial_config();
  EXPECT_EQ(p.packets_per_node(), 12);
  EXPECT_EQ(p.transmitted_per_helper(), 3);
  EXPECT_EQ(p.own_per_slot(), 3);
  EXPECT_EQ(p.erased_per_node(), 6);
}

TEST(CodeConfig, RejectsInvalid) {
  auto c = small_config();
  c.params.r = 4;
  EXPECT_THROW(c.validate(), ParamError);
  c = small_config();
  c.e = 1;  // d - j_bar r = 0
  EXPECT_THROW(c.validate(), ParamError);
  c = small_config();
  c.q = 1000;
  EXPECT_THROW(c.validate(), ParamError);
  c = small_config();
  c.l = 17;
  EXPECT_THROW(c.validate(), ParamError);
  c = partial_config();
  c.params.rho = Rational(1, 3);
  EXPECT_THROW(c.validate(), ParamError);
}

TEST(TableRows, PstarMatchesFormula) {
  ASSERT_EQ(table2_rows().size(), 25u);
  for (const auto& row : table2_rows()) {
    const auto c = config_from_row(row);
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.file_packets(), row.pstar) << row.n << "," << row.k << " j=" << row.j_bar;
  }
}

TEST(Init, StandardBasisBlocks) {
  const auto sys = init_system(small_config());
  for (std::size_t i = 0; i < 6; ++i) {
    const Matrix t = sys.thetas(i);
    ASSERT_EQ(t.rows(), 3u);
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t j = 0; j < 18; ++j) EXPECT_EQ(t(p, j), j == 3 * i + p ? 1u : 0u);
    }
  }
  EXPECT_GE(sys.dc_dimension(range(0, 9)), 18u);
  for (std::size_t i = 6; i < 9; ++i) EXPECT_EQ(sys.dc_dimension({i}), 3u);
}

TEST(AssembleY, SingleBlockUsesEveryPacketOnce) {
  auto c = small_config(1, 1021, 3);
  const auto y = assemble_Y(c);
  EXPECT_EQ(y.rows, 6u);
  EXPECT_EQ(y.cols, 3u);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& en : y.entries) EXPECT_TRUE(seen.insert({en.slot, en.packet}).second);
  EXPECT_EQ(seen.size(), 18u);
}

TEST(AssembleY, TwoBlocksDistinctHelpers) {
  const auto y = assemble_Y(small_config(2));
  EXPECT_EQ(y.rows, 3u);
  EXPECT_EQ(y.cols, 6u);
  for (std::size_t i = 0; i < y.rows; ++i) {
    std::set<std::size_t> helpers;
    for (std::size_t g = 0; g < y.cols; ++g) helpers.insert(y.at(i, g).slot);
    EXPECT_EQ(helpers.size(), 6u);
  }
  // First block reads helpers 0..2, second block helpers 3..5.
  for (std::size_t i = 0; i < y.rows; ++i) {
    for (std::size_t g = 0; g < 3; ++g) EXPECT_LT(y.at(i, g).slot, 3u);
    for (std::size_t g = 3; g < 6; ++g) EXPECT_GE(y.at(i, g).slot, 3u);
  }
}

TEST(AssembleY, OverlappingWindowsRepeatPackets) {
  CodeConfig c;
  c.params = SystemParams{14, 10, 10, 2, 0, 1};
  c.j_bar = 2;
  const auto y = assemble_Y(c);
  EXPECT_EQ(y.rows * y.cols, 32u);
  std::set<std::pair<std::size_t, std::size_t>> distinct;
  for (const auto& en : y.entries) distinct.insert({en.slot, en.packet});
  EXPECT_EQ(distinct.size(), 20u);
}

TEST(AssembleY, RotationIsLeftShiftByRowIndex) {
  const auto c = small_config(2);
  const auto plain = assemble_Y(c, false);
  const auto rot = assemble_Y(c);
  EXPECT_FALSE(plain.rotation_applied);
  // Row g of Y^T is column g of Y; rotated entry c equals plain entry (c + g mod r).
  for (std::size_t g = 0; g < 6; ++g) {
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(rot.at(i, g), plain.at((i + g % 3) % 3, g));
    }
  }
}

TEST(AssembleY, ReportsRepeatedHelperWhenRDoesNotDivideD) {
  const auto& rows = table2_rows();
  EXPECT_THROW(assemble_Y(config_from_row(rows[2])), YLayoutError);   // 27,15,17,5 j=3
  EXPECT_THROW(assemble_Y(config_from_row(rows[17])), YLayoutError);  // 16,8,11,2 j=4
  EXPECT_NO_THROW(assemble_Y(config_from_row(rows[22])));
}

TEST(HelperTransmit, CountsAndNonzero) {
  auto sys = init_system(small_config(2, 65521));
  for (int t = 0; t < 20; ++t) {
    const Matrix tx = sys.helper_transmit(0);
    ASSERT_EQ(tx.rows(), 3u);
    for (std::size_t i = 0; i < tx.rows(); ++i) {
      const auto row = tx.row(i);
      EXPECT_TRUE(std::any_of(row.begin(), row.end(), [](Residue v) { return v != 0; }));
    }
    EXPECT_EQ(rank(sys.field(), tx), 3u);
  }
  auto partial = init_system(partial_config());
  EXPECT_EQ(partial.helper_transmit(1).rows(), 3u);
}

TEST(HelperTransmit, SupportIsSampledSet) {
  // With e = 0 and r < S the r combinations stay inside r sampled packets.
  CodeConfig c;
  c.params = SystemParams{14, 10, 10, 2, 0, 1};
  c.j_bar = 1;
  c.q = 65521;
  auto sys = init_system(c);
  const Matrix tx = sys.helper_transmit(0);
  std::set<std::size_t> support;
  for (std::size_t i = 0; i < tx.rows(); ++i)
    for (std::size_t j = 0; j < sys.degree(); ++j)
      if (tx(i, j) != 0) support.insert(j);
  EXPECT_EQ(support.size(), 2u);
}

TEST(RepairFull, SubpacketizationAtCorners) {
  for (int j_bar : {1, 2}) {
    auto sys = init_system(small_config(j_bar, 1021, j_bar == 1 ? 3 : 0));
    sys.repair_full({0, 1, 2}, {3, 4, 5, 6, 7, 8});
    const std::size_t s = j_bar == 1 ? 6 : 3;  // d and d - k + r
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(sys.node(i).packets.rows(), s);
      EXPECT_EQ(sys.dc_dimension({i}), s);
    }
    EXPECT_EQ(sys.stats().last_packets_moved, 18u);
  }
}

TEST(RepairFull, RejectsBadSets) {
  auto sys = init_system(small_config());
  EXPECT_THROW(sys.repair_full({0, 1}, {3, 4, 5, 6, 7, 8}), ParamError);
  EXPECT_THROW(sys.repair_full({0, 1, 2}, {2, 4, 5, 6, 7, 8}), ParamError);
  EXPECT_THROW(sys.repair_full({0, 1, 2}, {3, 4, 5, 6, 7}), ParamError);
  EXPECT_THROW(sys.repair_full({0, 1, 9}, {3, 4, 5, 6, 7, 8}), ParamError);
}

TEST(RepairPartial, ZeroRhoMatchesFullRepair) {
  auto a = init_system(small_config());
  auto b = init_system(small_config());
  a.repair_full({0, 4, 8}, {1, 2, 3, 5, 6, 7});
  for (std::size_t f : {0, 4, 8}) b.mark_erasures(f);
  b.repair_partial({0, 4, 8}, {1, 2, 3, 5, 6, 7});
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(a.node(i).packets, b.node(i).packets);
}

TEST(RepairPartial, RequiresErasureMarks) {
  auto sys = init_system(partial_config());
  EXPECT_THROW(sys.repair_partial({0, 1, 2}, {3, 4, 5, 6, 7, 8}), ParamError);
  EXPECT_THROW(sys.repair_full({0, 1, 2}, {3, 4, 5, 6, 7, 8}), ParamError);
}

TEST(RepairPartial, AccountingAndL3) {
  auto sys = init_system(partial_config());
  std::mt19937_64 rng(3);
  for (int round = 0; round < 10; ++round) {
    auto [failed, helpers] = random_round(9, 3, 6, rng);
    for (std::size_t f : failed) sys.mark_erasures(f);
    sys.repair_partial(failed, helpers);
    EXPECT_EQ(sys.stats().last_packets_per_helper, 3u);
    EXPECT_EQ(sys.stats().last_packets_moved, 18u);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(sys.node(i).packets.rows(), 12u);
    const auto fam = sys.family();
    for (std::size_t f : failed) {
      EXPECT_EQ(fam.node(f).dim(), 12u);
      EXPECT_LE(check_L3(fam, f, {NodeSet(helpers.begin(), helpers.begin() + 3)}, 3).dim, 3u);
    }
  }
}

TEST(Reconstruct, RoundTripAfterInitAndRepairs) {
  auto cfg = small_config();
  cfg.mode = PayloadMode::Full;
  const ExtField F = StorageSystem::make_field(cfg);
  std::mt19937_64 rng(21);
  const auto file = random_file(F, 18, 2, rng);
  auto sys = init_system(cfg, F, file);
  const auto out = sys.reconstruct(range(0, 6));
  EXPECT_EQ(out.dimension, 18u);
  EXPECT_EQ(out.stripes, file);
  for (int round = 0; round < 5; ++round) {
    auto [failed, helpers] = random_round(9, 3, 6, rng);
    sys.repair_full(failed, helpers);
  }
  for (std::size_t i = 0; i < 9; ++i) EXPECT_TRUE(sys.payloads_consistent(i));
  int ok = 0;
  for (int t = 0; t < 10; ++t) {
    try {
      ok += sys.reconstruct(random_dc(9, 6, rng)).stripes == file;
    } catch (const ReconstructionError&) {
    }
  }
  EXPECT_GE(ok, 9);
}

TEST(Reconstruct, DuplicatedNodeHasDimensionS) {
  const auto sys = init_system(small_config());
  EXPECT_EQ(sys.dc_dimension({2, 2, 2, 2, 2, 2}), 3u);
  EXPECT_THROW((void)sys.reconstruct({2, 2, 2, 2, 2, 2}), ParamError);
}

TEST(Reconstruct, DroppedHelperLeavesDeficit) {
  auto sys = init_system(small_config());
  sys.repair_full({6, 7, 8}, {0, 1, 2, 3, 4, 5}, 5);
  try {
    (void)sys.reconstruct({0, 1, 2, 6, 7, 8});
    FAIL() << "expected a dimension deficit";
  } catch (const ReconstructionError& err) {
    EXPECT_LE(err.dimension(), 15u);
    EXPECT_EQ(err.required(), 18u);
  }
}

TEST(TRank, ExactValues) {
  EXPECT_EQ(t_fullrank_probability(10, 2, 1, 0), Rational(28, 45));
  EXPECT_EQ(t_fullrank_probability(10, 2, 1, 2), 1);
  EXPECT_EQ(t_fullrank_probability(10, 2, 1, 3), 1);
  EXPECT_EQ(t_fullrank_probability(10, 0, 1, 0), 1);
  EXPECT_THROW((void)t_fullrank_probability(10, 2, 1, 9), ParamError);
  for (int d = 4; d <= 16; ++d)
    for (int r = 1; r <= 3; ++r)
      for (int j = 1; j * r <= d; ++j)
        EXPECT_EQ(t_fullrank_probability(d, r, j, 0), t_fullrank_probability_e0(d, r, j));
}

TEST(TRank, MonteCarloAgrees) {
  for (int e : {0, 1}) {
    const double mc = t_fullrank_monte_carlo(10, 2, 1, e, 20000, 7 + e);
    EXPECT_NEAR(mc, to_double(t_fullrank_probability(10, 2, 1, e)), 0.02);
  }
}

TEST(Codec, RoundTrip) {
  const ExtField F = ExtField::make(1021, 18);
  std::mt19937_64 rng(4);
  for (std::size_t len : {0u, 1u, 7u, 300u, 1024u}) {
    std::vector<std::uint8_t> data(len);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    const auto stripes = encode_bytes(data, F, 18);
    EXPECT_EQ(decode_bytes(stripes, F), data);
  }
  const ExtField G = ExtField::make(2, 16);
  const std::vector<std::uint8_t> data{1, 2, 3, 250};
  EXPECT_EQ(decode_bytes(encode_bytes(data, G, 5), G), data);
}

TEST(Codec, DigitsStayBelowQ) {
  EXPECT_EQ(bits_per_digit(2), 1u);
  EXPECT_EQ(bits_per_digit(1021), 9u);
  EXPECT_EQ(bits_per_digit(1024 + 7), 10u);
}

TEST(Experiment, ZeroRoundsIsInitialization) {
  ExperimentOptions opt;
  opt.rounds = 0;
  opt.trials = 10;
  const auto rep = run_experiment(small_config(), opt);
  EXPECT_EQ(rep.rounds_run, 0);
  EXPECT_EQ(static_cast<double>(rep.min_dim), rep.avg_dim);
  EXPECT_GE(rep.min_dim, 18u);
  EXPECT_TRUE(rep.passed);
}

TEST(Experiment, SmallTableRowMeetsBoundOverLargeField) {
  ExperimentOptions opt;
  opt.check_rate = 0.2;
  auto cfg = config_from_row(table2_rows().back(), 3);
  cfg.q = 65521;
  const auto rep = run_experiment(cfg, opt);
  EXPECT_EQ(rep.pstar, 18);
  EXPECT_GE(rep.min_dim, 18u);
  EXPECT_LE(static_cast<double>(rep.min_dim), rep.avg_dim);
  EXPECT_GT(rep.l1.checked, 0u);
  EXPECT_EQ(rep.l1.passed, rep.l1.checked);
}

TEST(Experiment, Deterministic) {
  ExperimentOptions opt;
  opt.rounds = 20;
  opt.trials = 5;
  opt.check_rate = 0.5;
  const auto cfg = config_from_row(table2_rows()[22], 9);
  const auto a = run_experiment(cfg, opt);
  const auto b = run_experiment(cfg, opt);
  EXPECT_EQ(a.min_dim, b.min_dim);
  EXPECT_EQ(a.avg_dim, b.avg_dim);
  EXPECT_EQ(a.l2.passed, b.l2.passed);
  EXPECT_EQ(a.rank_retries, b.rank_retries);
}
