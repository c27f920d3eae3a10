#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "modigw/bandit.hpp"
#include "modigw/config.hpp"

namespace modigw {

// Cumulative expected regret of one run plus its epoch structure.
struct RegretTrace {
  std::uint64_t seed = 0;
  // cumulative[t] = R_t for t = 0..T, cumulative[0] = 0.
  std::vector<double> cumulative;
  // Last round of each epoch that was played (the final one may be truncated).
  std::vector<std::size_t> epoch_ends;
  // i_m for each played epoch m = 1, 2, ...
  std::vector<std::size_t> active_index;
};

RegretTrace make_trace(std::uint64_t seed, std::span<const RoundRecord> rounds);

// Checks the per-run invariants: R_t non-decreasing with increments in
// [0, 1], shrinking index sets, non-decreasing i_m, and gamma_m matching the
// class-specific exploration parameter. Throws InvariantViolation.
void check_run_invariants(const RunLog& log, std::span<const ModelClass> classes,
                          const RunConfig& config, bool learner_is_igw);

RunLog run_algorithm(const Scenario& scenario, std::uint64_t seed);

// Epoch-level view of a run, as needed by the detection report.
struct EpochTimeline {
  std::uint64_t seed = 0;
  std::size_t num_classes = 0;
  // i_m for m = 1..(last epoch)
  std::vector<std::size_t> active_index;
  // For each completed epoch m: indices removed by its tests and tau_m.
  std::vector<std::vector<std::size_t>> evicted;
  std::vector<std::size_t> tau_end;
};

EpochTimeline make_timeline(std::uint64_t seed, std::size_t num_classes, const RunLog& log);

struct SeedResult {
  std::uint64_t seed = 0;
  RegretTrace trace;
  EpochTimeline timeline;
  // Empty on success; otherwise the diagnostic that aborted the seed.
  std::string error;
};

// Runs every seed (concurrently, up to `threads`), writing per-seed JSON-lines
// logs under `out_dir` when it is non-empty. Results are in seed order.
std::vector<SeedResult> run_scenario(const Scenario& scenario,
                                     const std::filesystem::path& out_dir = {},
                                     std::size_t threads = 0);

// Log-spaced aggregation grid: powers of two up to T, plus T itself.
std::vector<std::size_t> log_grid(std::size_t horizon);

struct RegretCurve {
  std::vector<std::size_t> t;
  std::vector<double> mean;
  std::vector<double> stderr_;
};

RegretCurve aggregate(std::span<const RegretTrace> traces, std::span<const std::size_t> grid);

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

// Least-squares slope of log R_t against log t over grid points in [t0, t1].
SlopeFit fit_regret_slope(const RegretCurve& curve, std::size_t t0, std::size_t t1);
SlopeFit fit_regret_slope(std::span<const RegretTrace> traces, std::size_t t0, std::size_t t1);

struct DetectionEntry {
  std::uint64_t seed = 0;
  std::size_t class_index = 0;
  // Last epoch with i_m <= i; `censored` when that is the final epoch played.
  std::size_t m_hat = 0;
  bool censored = false;
  // Epoch whose test removed index i and tau at that epoch's end; kUnbounded
  // when never evicted.
  std::size_t eviction_epoch = kUnbounded;
  std::size_t eviction_round = kUnbounded;
};

std::vector<DetectionEntry> detection_report(std::span<const EpochTimeline> timelines);

// JSON-lines serialization of a run log.
void write_run_log(std::ostream& out, const RunLog& log);

// Reads a log written by write_run_log back into rounds and epoch records.
RunLog read_run_log(std::istream& in);

// Writes regret_curve.csv, detection.csv and index_timeline.csv to `dir` and
// returns a short human-readable summary.
std::string write_report(const std::filesystem::path& dir, std::span<const SeedResult> results,
                         std::size_t horizon);

// Rebuilds seed results from a directory produced by `run` and writes the report.
std::string report_directory(const std::filesystem::path& dir);

}  // namespace modigw
