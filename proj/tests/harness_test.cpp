#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "modigw/harness.hpp"

using namespace modigw;

namespace {

const std::filesystem::path kScenarios = MODIGW_SCENARIO_DIR;

RegretTrace power_trace(double c, double power, std::size_t T) {
  RegretTrace tr;
  tr.cumulative.resize(T + 1);
  for (std::size_t t = 0; t <= T; ++t) tr.cumulative[t] = c * std::pow(double(t), power);
  return tr;
}

json small_doc() {
  return json::parse(R"({
    "name": "unit",
    "environment": {"true_model": [[0.2, 0.6], [0.7, 0.4]], "noise": {"kind": "bernoulli"}, "seed": 3},
    "classes": [{"kind": "tabular", "partition": "arm"}, {"kind": "tabular", "partition": "full", "d": 4}],
    "run": {"T": 2000, "tau1": 8, "C1": 0.1, "seeds": [5, 6, 7]}
  })");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Slope, ExactPowerLaws) {
  const std::vector<RegretTrace> linear{power_trace(0.3, 1.0, 50000)};
  EXPECT_NEAR(fit_regret_slope(linear, 4096, 50000).slope, 1.0, 1e-6);
  const std::vector<RegretTrace> root{power_trace(2.0, 0.5, 50000)};
  const auto fit = fit_regret_slope(root, 4096, 50000);
  EXPECT_NEAR(fit.slope, 0.5, 1e-6);
  EXPECT_EQ(fit.points, 5u);  // 4096 .. 32768 and 50000
}

TEST(Slope, RejectsDegenerateWindow) {
  const std::vector<RegretTrace> tr{power_trace(1.0, 0.5, 1000)};
  EXPECT_THROW(fit_regret_slope(tr, 256, 1000), InvalidArgument);
  EXPECT_THROW(fit_regret_slope(tr, 16, 2000), InvalidArgument);
}

TEST(Aggregate, GridAndStderr) {
  EXPECT_EQ(log_grid(10), (std::vector<std::size_t>{1, 2, 4, 8, 10}));
  EXPECT_EQ(log_grid(8), (std::vector<std::size_t>{1, 2, 4, 8}));
  const std::vector<RegretTrace> tr{power_trace(1.0, 1.0, 8), power_trace(3.0, 1.0, 8)};
  const auto c = aggregate(tr, log_grid(8));
  EXPECT_EQ(c.mean.back(), 16.0);
  EXPECT_NEAR(c.stderr_.back(), 8.0, 1e-12);  // sd 8 sqrt(2), over sqrt(2)
}

TEST(Trace, FromRounds) {
  std::vector<RoundRecord> rounds;
  for (std::size_t t = 1; t <= 6; ++t) {
    RoundRecord r;
    r.t = t;
    r.epoch = t <= 2 ? 1 : (t <= 4 ? 2 : 3);
    r.regret = 0.5;
    r.active_index = r.epoch == 3 ? 2 : 1;
    rounds.push_back(r);
  }
  const auto tr = make_trace(1, rounds);
  EXPECT_EQ(tr.cumulative.front(), 0.0);
  EXPECT_EQ(tr.cumulative.back(), 3.0);
  EXPECT_EQ(tr.epoch_ends, (std::vector<std::size_t>{2, 4, 6}));
  EXPECT_EQ(tr.active_index, (std::vector<std::size_t>{1, 1, 2}));
}

TEST(Detection, EvictionAndCensoring) {
  EpochTimeline tl;
  tl.seed = 1;
  tl.num_classes = 3;
  tl.active_index = {1, 1, 2, 3, 3};
  tl.evicted = {{}, {1}, {2}, {}};
  tl.tau_end = {4, 8, 16, 32};
  const std::vector<EpochTimeline> all{tl};
  const auto d = detection_report(all);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].m_hat, 2u);
  EXPECT_EQ(d[0].eviction_round, 8u);
  EXPECT_FALSE(d[0].censored);
  EXPECT_EQ(d[1].m_hat, 3u);
  EXPECT_EQ(d[1].eviction_epoch, 3u);
  EXPECT_EQ(d[2].m_hat, 5u);
  EXPECT_TRUE(d[2].censored);
  EXPECT_EQ(d[2].eviction_round, kUnbounded);
}

TEST(Detection, SingleClassNeverEvicted) {
  auto doc = small_doc();
  doc["classes"] = json::array({json{{"kind", "tabular"}, {"partition", "full"}}});
  const auto s = parse_scenario(doc);
  const auto results = run_scenario(s, {}, 1);
  std::vector<EpochTimeline> tls;
  for (const auto& r : results) tls.push_back(r.timeline);
  for (const auto& d : detection_report(tls)) {
    EXPECT_EQ(d.class_index, 1u);
    EXPECT_EQ(d.eviction_round, kUnbounded);
    EXPECT_TRUE(d.censored);
  }
}

TEST(RunLogIo, RoundTrip) {
  const auto s = parse_scenario(small_doc());
  const auto log = run_algorithm(s, 5);
  std::stringstream ss;
  write_run_log(ss, log);
  const auto back = read_run_log(ss);
  EXPECT_EQ(back.rounds, log.rounds);
  ASSERT_EQ(back.epochs.size(), log.epochs.size());
  for (std::size_t k = 0; k < log.epochs.size(); ++k) {
    EXPECT_EQ(back.epochs[k].epoch, log.epochs[k].epoch);
    EXPECT_EQ(back.epochs[k].index_set, log.epochs[k].index_set);
    EXPECT_EQ(back.epochs[k].gamma, log.epochs[k].gamma);
    EXPECT_EQ(back.epochs[k].verdicts.size(), log.epochs[k].verdicts.size());
  }
}

TEST(Scenario, ReplayIsByteIdentical) {
  const auto s = parse_scenario(small_doc());
  const auto dir = std::filesystem::temp_directory_path() / "modigw_replay";
  std::filesystem::remove_all(dir);
  run_scenario(s, dir / "a", 2);
  run_scenario(s, dir / "b", 1);
  for (auto seed : s.seeds) {
    const auto name = "seed_" + std::to_string(seed) + ".jsonl";
    const auto a = slurp(dir / "a" / name);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir / "b" / name));
  }
  EXPECT_NE(report_directory(dir / "a").find("seeds: 3"), std::string::npos);
  report_directory(dir / "b");
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "regret_curve.csv"));
  EXPECT_EQ(slurp(dir / "a" / "detection.csv"), slurp(dir / "b" / "detection.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Scenario, SingleClassModIgwEqualsFixedClass) {
  auto doc = small_doc();
  doc["classes"] = json::array({json{{"kind", "tabular"}, {"partition", "full"}}});
  const auto single = parse_scenario(doc);
  auto fixed_doc = small_doc();
  fixed_doc["algorithm"] = {{"kind", "fixed-class-igw"}, {"class_index", 2}};
  const auto fixed = parse_scenario(fixed_doc);
  for (auto seed : single.seeds) {
    const auto a = run_algorithm(single, seed);
    auto b = run_algorithm(fixed, seed);
    // fixed-class logs report the original class index
    for (auto& r : b.rounds) {
      EXPECT_EQ(r.active_index, 2u);
      r.active_index = 1;
    }
    EXPECT_EQ(a.rounds, b.rounds);
  }
}

TEST(Scenario, UniformBaselineHasNoIndices) {
  auto doc = small_doc();
  doc["algorithm"] = {{"kind", "uniform-random"}};
  const auto s = parse_scenario(doc);
  const auto results = run_scenario(s, {}, 1);
  for (const auto& r : results) {
    EXPECT_TRUE(r.error.empty());
    EXPECT_EQ(r.timeline.num_classes, 0u);
    EXPECT_EQ(r.trace.cumulative.size(), 2001u);
  }
}

TEST(Invariants, TamperedLogIsRejected) {
  const auto s = parse_scenario(small_doc());
  auto cfg = s.run;
  cfg.seed = 5;
  auto log = run_mod_igw(s.env, s.classes, cfg);
  EXPECT_NO_THROW(check_run_invariants(log, s.classes, cfg, true));
  auto bad_gamma = log;
  bad_gamma.epochs[2].gamma *= 1.0 + 1e-15;
  EXPECT_THROW(check_run_invariants(bad_gamma, s.classes, cfg, true), InvariantViolation);
  auto bad_regret = log;
  bad_regret.rounds[10].regret = -0.5;
  EXPECT_THROW(check_run_invariants(bad_regret, s.classes, cfg, true), InvariantViolation);
  auto regrown = log;
  regrown.epochs[1].index_set = {2};
  regrown.epochs[1].active_index = 2;
  regrown.epochs[2].index_set = {1, 2};
  EXPECT_THROW(check_run_invariants(regrown, s.classes, cfg, true), InvariantViolation);
}

TEST(Config, DescriptiveErrors) {
  auto doc = small_doc();
  doc["run"].erase("T");
  EXPECT_THROW(parse_scenario(doc), InvalidArgument);
  doc = small_doc();
  doc["run"]["seeds"] = {1, 1};
  EXPECT_THROW(parse_scenario(doc), InvalidArgument);
  doc = small_doc();
  doc["classes"][1]["d"] = 3;
  try {
    parse_scenario(doc);
    FAIL() << "declared d mismatch accepted";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("d=3"), std::string::npos);
  }
  doc = small_doc();
  doc["algorithm"] = {{"kind", "fixed-class-igw"}, {"class_index", 3}};
  EXPECT_THROW(parse_scenario(doc), InvalidArgument);
  doc = small_doc();
  doc["environment"]["weights"] = {0.5, 0.6};
  EXPECT_THROW(parse_scenario(doc), InvalidArgument);
  EXPECT_THROW(load_scenario(kScenarios / "no_such_file.json"), InvalidArgument);
}

TEST(Config, Overrides) {
  auto doc = small_doc();
  apply_override(doc, "run.T=123");
  apply_override(doc, "run.cumulative_data=true");
  apply_override(doc, "name=renamed");
  apply_override(doc, "run.seeds=[9,10]");
  const auto s = parse_scenario(doc);
  EXPECT_EQ(s.run.horizon, 123u);
  EXPECT_TRUE(s.run.cumulative_data);
  EXPECT_EQ(s.name, "renamed");
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{9, 10}));
  EXPECT_THROW(apply_override(doc, "novalue"), InvalidArgument);
}

TEST(Config, ShippedScenariosLoad) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".json") continue;
    const auto doc = read_json_file(entry.path());
    if (!doc.contains("run")) continue;  // environment-only files
    EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 1u);
}
