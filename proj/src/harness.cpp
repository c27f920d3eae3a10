#include "modigw/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

namespace modigw {

RegretTrace make_trace(std::uint64_t seed, std::span<const RoundRecord> rounds) {
  RegretTrace tr;
  tr.seed = seed;
  tr.cumulative.assign(rounds.size() + 1, 0.0);
  for (std::size_t k = 0; k < rounds.size(); ++k) {
    tr.cumulative[k + 1] = tr.cumulative[k] + rounds[k].regret;
    const bool last_of_epoch = k + 1 == rounds.size() || rounds[k + 1].epoch != rounds[k].epoch;
    if (last_of_epoch) {
      tr.epoch_ends.push_back(rounds[k].t);
      tr.active_index.push_back(rounds[k].active_index);
    }
  }
  return tr;
}

void check_run_invariants(const RunLog& log, std::span<const ModelClass> classes,
                          const RunConfig& config, bool learner_is_igw) {
  auto fail = [](const std::string& what) { throw InvariantViolation(what); };
  for (std::size_t k = 0; k < log.rounds.size(); ++k) {
    const auto& r = log.rounds[k];
    if (r.t != k + 1) fail("round numbering is not consecutive at t=" + std::to_string(r.t));
    if (!(r.regret >= -1e-12 && r.regret <= 1.0 + 1e-12)) {
      fail("instantaneous regret outside [0, 1] at t=" + std::to_string(r.t));
    }
  }
  if (!learner_is_igw) return;

  const std::size_t num_classes = classes.size();
  const std::size_t arms = classes.front().num_arms();
  std::vector<std::size_t> index_set(num_classes);
  for (std::size_t i = 0; i < num_classes; ++i) index_set[i] = i + 1;
  std::size_t active = 1;
  std::vector<double> gamma_of_epoch{1.0};
  std::vector<std::size_t> active_of_epoch{1};

  for (const auto& e : log.epochs) {
    if (!std::includes(index_set.begin(), index_set.end(), e.index_set.begin(),
                       e.index_set.end())) {
      fail("index set grew after epoch " + std::to_string(e.epoch));
    }
    if (e.index_set.empty() || e.active_index != e.index_set.front()) {
      fail("active index is not the smallest surviving index after epoch " +
           std::to_string(e.epoch));
    }
    if (e.active_index < active) fail("active index decreased after epoch " + std::to_string(e.epoch));
    const double expected_zeta = epoch_confidence(config.delta, num_classes, e.epoch);
    if (e.zeta != expected_zeta) fail("test confidence mismatch after epoch " + std::to_string(e.epoch));
    const double expected = exploration_gamma(
        config.rate(), static_cast<double>(classes[e.active_index - 1].dim()), e.epoch, arms,
        config.delta, num_classes, config.tau1);
    if (e.gamma != expected) fail("gamma mismatch after epoch " + std::to_string(e.epoch));
    index_set = e.index_set;
    active = e.active_index;
    gamma_of_epoch.push_back(e.gamma);
    active_of_epoch.push_back(e.active_index);
  }
  for (const auto& r : log.rounds) {
    if (r.epoch == 0 || r.epoch > gamma_of_epoch.size()) {
      fail("round " + std::to_string(r.t) + " belongs to an unknown epoch");
    }
    if (r.gamma != gamma_of_epoch[r.epoch - 1] || r.active_index != active_of_epoch[r.epoch - 1]) {
      fail("round " + std::to_string(r.t) + " used a stale gamma or index");
    }
    if (static_cast<double>(r.t) > epoch_end(r.epoch, config.tau1) ||
        static_cast<double>(r.t) <= epoch_end(r.epoch - 1, config.tau1)) {
      fail("round " + std::to_string(r.t) + " lies outside its epoch");
    }
  }
}

namespace {

void remap_indices(RunLog& log, std::size_t original) {
  for (auto& r : log.rounds) r.active_index = original;
  for (auto& e : log.epochs) {
    for (auto& i : e.index_set) i = original;
    e.active_index = original;
    e.model_class = original;
    for (auto& v : e.verdicts) v.class_index = original;
  }
}

}  // namespace

RunLog run_algorithm(const Scenario& scenario, std::uint64_t seed) {
  RunConfig cfg = scenario.run;
  cfg.seed = seed;
  switch (scenario.algorithm.kind) {
    case AlgorithmKind::mod_igw: {
      RunLog log = run_mod_igw(scenario.env, scenario.classes, cfg);
      check_run_invariants(log, scenario.classes, cfg, true);
      return log;
    }
    case AlgorithmKind::fixed_class_igw: {
      const std::size_t i = scenario.algorithm.class_index;
      RunLog log = run_fixed_class_igw(scenario.env, scenario.classes, i, cfg);
      check_run_invariants(log, std::span(scenario.classes).subspan(i - 1, 1), cfg, true);
      remap_indices(log, i);
      return log;
    }
    case AlgorithmKind::uniform_random: {
      RunLog log = run_uniform_random(scenario.env, cfg);
      check_run_invariants(log, scenario.classes, cfg, false);
      return log;
    }
  }
  throw InvalidArgument("unknown algorithm");
}

EpochTimeline make_timeline(std::uint64_t seed, std::size_t num_classes, const RunLog& log) {
  EpochTimeline tl;
  tl.seed = seed;
  tl.num_classes = num_classes;
  std::vector<std::size_t> current;
  if (!log.rounds.empty()) {
    tl.active_index.push_back(log.rounds.front().active_index);
    if (tl.active_index.front() != 0) {
      for (std::size_t i = tl.active_index.front(); i <= num_classes; ++i) current.push_back(i);
    }
  }
  for (const auto& e : log.epochs) {
    std::vector<std::size_t> removed;
    std::set_difference(current.begin(), current.end(), e.index_set.begin(), e.index_set.end(),
                        std::back_inserter(removed));
    tl.evicted.push_back(std::move(removed));
    tl.tau_end.push_back(e.tau_end);
    tl.active_index.push_back(e.active_index);
    current = e.index_set;
  }
  return tl;
}

namespace {

std::string seed_file(std::uint64_t seed) { return "seed_" + std::to_string(seed) + ".jsonl"; }

// The uniform baseline keeps no index set, so it has nothing to detect.
std::size_t timeline_classes(const Scenario& scenario) {
  return scenario.algorithm.kind == AlgorithmKind::uniform_random ? 0 : scenario.classes.size();
}

SeedResult run_one(const Scenario& scenario, std::uint64_t seed,
                   const std::filesystem::path& out_dir) {
  SeedResult res;
  res.seed = seed;
  try {
    const RunLog log = run_algorithm(scenario, seed);
    res.trace = make_trace(seed, log.rounds);
    res.timeline = make_timeline(seed, timeline_classes(scenario), log);
    if (!out_dir.empty()) {
      std::ofstream out(out_dir / seed_file(seed));
      if (!out) throw InvalidArgument("cannot write to " + out_dir.string());
      write_run_log(out, log);
    }
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

}  // namespace

std::vector<SeedResult> run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir,
                                     std::size_t threads) {
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(out_dir / "scenario.json") << scenario.document.dump(2) << '\n';
  }
  std::vector<SeedResult> results(scenario.seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, scenario.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < scenario.seeds.size(); k = next++) {
      results[k] = run_one(scenario, scenario.seeds[k], out_dir);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  return results;
}

std::vector<std::size_t> log_grid(std::size_t horizon) {
  std::vector<std::size_t> grid;
  for (std::size_t t = 1; t <= horizon; t *= 2) grid.push_back(t);
  if (grid.empty() || grid.back() != horizon) grid.push_back(horizon);
  return grid;
}

RegretCurve aggregate(std::span<const RegretTrace> traces, std::span<const std::size_t> grid) {
  if (traces.empty()) throw InvalidArgument("aggregate: no traces");
  RegretCurve c;
  const double n = static_cast<double>(traces.size());
  for (std::size_t t : grid) {
    double sum = 0.0, sq = 0.0;
    for (const auto& tr : traces) {
      if (t >= tr.cumulative.size()) throw InvalidArgument("aggregate: grid beyond trace length");
      sum += tr.cumulative[t];
    }
    const double mean = sum / n;
    for (const auto& tr : traces) sq += (tr.cumulative[t] - mean) * (tr.cumulative[t] - mean);
    c.t.push_back(t);
    c.mean.push_back(mean);
    c.stderr_.push_back(traces.size() > 1 ? std::sqrt(sq / (n - 1.0) / n) : 0.0);
  }
  return c;
}

SlopeFit fit_regret_slope(const RegretCurve& curve, std::size_t t0, std::size_t t1) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < curve.t.size(); ++k) {
    if (curve.t[k] < t0 || curve.t[k] > t1) continue;
    if (!(curve.mean[k] > 0.0)) {
      throw InvalidArgument("fit_regret_slope: non-positive regret at t=" +
                            std::to_string(curve.t[k]));
    }
    xs.push_back(std::log(static_cast<double>(curve.t[k])));
    ys.push_back(std::log(curve.mean[k]));
  }
  if (xs.size() < 5) {
    throw InvalidArgument("fit_regret_slope: window [" + std::to_string(t0) + ", " +
                          std::to_string(t1) + "] has " + std::to_string(xs.size()) +
                          " grid points, need at least 5");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  SlopeFit fit;
  fit.points = xs.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double e = ys[k] - fit.intercept - fit.slope * xs[k];
    rss += e * e;
  }
  fit.stderr_ = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

SlopeFit fit_regret_slope(std::span<const RegretTrace> traces, std::size_t t0, std::size_t t1) {
  if (traces.empty()) throw InvalidArgument("fit_regret_slope: no traces");
  const std::size_t horizon = traces.front().cumulative.size() - 1;
  if (t1 > horizon || t0 > t1) throw InvalidArgument("fit_regret_slope: window outside the trace");
  return fit_regret_slope(aggregate(traces, log_grid(horizon)), t0, t1);
}

std::vector<DetectionEntry> detection_report(std::span<const EpochTimeline> timelines) {
  std::vector<DetectionEntry> out;
  for (const auto& tl : timelines) {
    for (std::size_t i = 1; i <= tl.num_classes; ++i) {
      DetectionEntry d;
      d.seed = tl.seed;
      d.class_index = i;
      for (std::size_t m = 1; m <= tl.active_index.size(); ++m) {
        if (tl.active_index[m - 1] <= i) d.m_hat = m;
      }
      d.censored = d.m_hat == tl.active_index.size();
      for (std::size_t m = 1; m <= tl.evicted.size(); ++m) {
        const auto& ev = tl.evicted[m - 1];
        if (std::find(ev.begin(), ev.end(), i) != ev.end()) {
          d.eviction_epoch = m;
          d.eviction_round = tl.tau_end[m - 1];
        }
      }
      out.push_back(d);
    }
  }
  return out;
}

void write_run_log(std::ostream& out, const RunLog& log) {
  std::size_t next_epoch = 0;
  for (std::size_t k = 0; k < log.rounds.size(); ++k) {
    const auto& r = log.rounds[k];
    out << json{{"type", "round"},   {"t", r.t},           {"epoch", r.epoch},
                {"context", r.context}, {"action", r.action}, {"reward", r.reward},
                {"regret", r.regret},   {"gamma", r.gamma},   {"i_m", r.active_index}}
               .dump()
        << '\n';
    const bool epoch_done = k + 1 < log.rounds.size() && log.rounds[k + 1].epoch != r.epoch;
    if (epoch_done && next_epoch < log.epochs.size()) {
      const auto& e = log.epochs[next_epoch++];
      json tests = json::array();
      for (const auto& v : e.verdicts) {
        tests.push_back({{"i", v.class_index},
                         {"misspecified", v.misspecified},
                         {"lhs", v.lhs},
                         {"rhs", v.rhs()},
                         {"loss_gM", v.loss_full},
                         {"rate_term", v.rate_term},
                         {"bernstein_term", v.bernstein_term},
                         {"n_tr", v.n_train},
                         {"n_ho", v.n_holdout}});
      }
      out << json{{"type", "epoch"},
                  {"m", e.epoch + 1},
                  {"tau_prev", e.tau_end},
                  {"I", e.index_set},
                  {"i_m", e.active_index},
                  {"gamma", e.gamma},
                  {"model_class", e.model_class},
                  {"samples", e.samples},
                  {"zeta", e.zeta},
                  {"tests_skipped", e.tests_skipped},
                  {"tests", tests}}
                 .dump()
          << '\n';
    }
  }
}

RunLog read_run_log(std::istream& in) {
  RunLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InvalidArgument("log line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto type = j.value("type", std::string());
    if (type == "round") {
      RoundRecord r;
      r.t = j.at("t");
      r.epoch = j.at("epoch");
      r.context = j.at("context");
      r.action = j.at("action");
      r.reward = j.at("reward");
      r.regret = j.at("regret");
      r.gamma = j.at("gamma");
      r.active_index = j.at("i_m");
      log.rounds.push_back(r);
    } else if (type == "epoch") {
      EpochRecord e;
      e.epoch = j.at("m").get<std::size_t>() - 1;
      e.tau_end = j.at("tau_prev");
      e.index_set = j.at("I").get<std::vector<std::size_t>>();
      e.active_index = j.at("i_m");
      e.gamma = j.at("gamma");
      e.model_class = j.at("model_class");
      e.samples = j.at("samples");
      e.zeta = j.at("zeta");
      e.tests_skipped = j.at("tests_skipped");
      for (const auto& t : j.at("tests")) {
        TestVerdict v;
        v.class_index = t.at("i");
        v.misspecified = t.at("misspecified");
        v.lhs = t.at("lhs");
        v.loss_full = t.at("loss_gM");
        v.rate_term = t.at("rate_term");
        v.bernstein_term = t.at("bernstein_term");
        v.n_train = t.at("n_tr");
        v.n_holdout = t.at("n_ho");
        v.zeta = e.zeta;
        e.verdicts.push_back(v);
      }
      log.epochs.push_back(std::move(e));
    } else {
      throw InvalidArgument("log line " + std::to_string(lineno) + ": unknown record type");
    }
  }
  return log;
}

namespace {

std::string fmt_index(std::size_t v) { return v == kUnbounded ? "inf" : std::to_string(v); }

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string write_report(const std::filesystem::path& dir, std::span<const SeedResult> results,
                         std::size_t horizon) {
  std::vector<RegretTrace> traces;
  std::vector<EpochTimeline> timelines;
  std::ostringstream summary;
  for (const auto& r : results) {
    if (!r.error.empty()) {
      summary << "seed " << r.seed << " FAILED: " << r.error << '\n';
      continue;
    }
    traces.push_back(r.trace);
    timelines.push_back(r.timeline);
  }
  if (traces.empty()) return summary.str() + "no successful seeds\n";

  std::filesystem::create_directories(dir);
  const auto curve = aggregate(traces, log_grid(horizon));
  {
    std::ofstream csv(dir / "regret_curve.csv");
    csv << "t,mean_regret,stderr,seeds\n" << std::setprecision(17);
    for (std::size_t k = 0; k < curve.t.size(); ++k) {
      csv << curve.t[k] << ',' << curve.mean[k] << ',' << curve.stderr_[k] << ','
          << traces.size() << '\n';
    }
  }
  const auto detections = detection_report(timelines);
  {
    std::ofstream csv(dir / "detection.csv");
    csv << "seed,class,m_hat,censored,eviction_epoch,eviction_round\n";
    for (const auto& d : detections) {
      csv << d.seed << ',' << d.class_index << ',' << d.m_hat << ',' << (d.censored ? 1 : 0)
          << ',' << fmt_index(d.eviction_epoch) << ',' << fmt_index(d.eviction_round) << '\n';
    }
  }
  {
    std::ofstream csv(dir / "index_timeline.csv");
    csv << "epoch,tau_end,mean_i_m,min_i_m,max_i_m,seeds\n" << std::setprecision(17);
    std::size_t epochs = 0;
    for (const auto& tl : timelines) epochs = std::max(epochs, tl.active_index.size());
    for (std::size_t m = 1; m <= epochs; ++m) {
      double sum = 0.0;
      std::size_t lo = kUnbounded, hi = 0, n = 0;
      for (const auto& tl : timelines) {
        if (m > tl.active_index.size()) continue;
        const std::size_t i = tl.active_index[m - 1];
        sum += static_cast<double>(i);
        lo = std::min(lo, i);
        hi = std::max(hi, i);
        ++n;
      }
      const auto tau = static_cast<std::size_t>(
          std::min(static_cast<double>(horizon),
                   epoch_end(m, traces.front().epoch_ends.empty()
                                    ? horizon
                                    : traces.front().epoch_ends.front())));
      csv << m << ',' << tau << ',' << sum / static_cast<double>(n) << ',' << lo << ',' << hi
          << ',' << n << '\n';
    }
  }

  summary << std::setprecision(6);
  summary << "seeds: " << traces.size() << "  T: " << horizon << '\n';
  summary << "mean R_T: " << curve.mean.back() << " +- " << curve.stderr_.back() << '\n';
  try {
    const auto fit = fit_regret_slope(curve, horizon / 16, horizon);
    summary << "log-log slope on [" << horizon / 16 << ", " << horizon << "]: " << fit.slope
            << " +- " << fit.stderr_ << '\n';
  } catch (const InvalidArgument&) {
  }
  const std::size_t num_classes = timelines.front().num_classes;
  for (std::size_t i = 1; i <= num_classes; ++i) {
    std::vector<double> rounds;
    std::size_t evicted = 0, total = 0;
    for (const auto& d : detections) {
      if (d.class_index != i) continue;
      ++total;
      if (d.eviction_round != kUnbounded) {
        ++evicted;
        rounds.push_back(static_cast<double>(d.eviction_round));
      }
    }
    summary << "class " << i << ": evicted in " << evicted << "/" << total << " seeds";
    if (!rounds.empty()) summary << ", median eviction round " << median(rounds);
    summary << '\n';
  }
  return summary.str();
}

std::string report_directory(const std::filesystem::path& dir) {
  const Scenario scenario = parse_scenario(read_json_file(dir / "scenario.json"), dir);
  std::vector<SeedResult> results;
  for (std::uint64_t seed : scenario.seeds) {
    SeedResult r;
    r.seed = seed;
    std::ifstream in(dir / seed_file(seed));
    if (!in) {
      r.error = "missing log " + seed_file(seed);
      results.push_back(std::move(r));
      continue;
    }
    try {
      const RunLog log = read_run_log(in);
      if (log.rounds.size() != scenario.run.horizon) {
        throw InvalidArgument("log has " + std::to_string(log.rounds.size()) + " rounds, expected " +
                              std::to_string(scenario.run.horizon));
      }
      r.trace = make_trace(seed, log.rounds);
      r.timeline = make_timeline(seed, timeline_classes(scenario), log);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    results.push_back(std::move(r));
  }
  return write_report(dir, results, scenario.run.horizon);
}

}  // namespace modigw
