#pragma once

// Experiment drivers behind the CLI subcommands. Each driver reads its
// parameters from a Config, runs with a base seed and a worker count, and
// returns plain results; csv output lives in cli.cpp. Results depend only on
// (config, seed), never on the worker count.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "cscg/composition.hpp"
#include "cscg/exploration.hpp"
#include "cscg/mpg.hpp"
#include "cscg/planner.hpp"
#include "cscg/quantizer.hpp"
#include "cscg/rooms.hpp"
#include "cscg/schemas.hpp"

namespace cscg::cli {

/// Room selectors: "rectangle" (with a size class or "grow"), "digit:N", or
/// "file:PATH" (.pbm or room text format).
RoomSpec room_from(const std::string& selector, const std::string& size, std::size_t grow);

/// EM options under a config section; defaults from `base`.
EmOptions em_from(Config& c, EmOptions base);

// train -------------------------------------------------------------------
struct TrainResult {
  UngroundedSchema schema;
  std::vector<double> nll_trace;
  std::size_t n_obs = 0;
};
TrainResult run_train(Config& c, std::uint64_t seed, std::size_t workers);

// bind --------------------------------------------------------------------
struct BindResult {
  GroundedSchema model;
  std::vector<double> nll_trace;
  double ground_truth_nll = 0.0;
  std::optional<Quantizer> quantizer;
};
BindResult run_bind(Config& c, std::uint64_t seed, std::size_t workers);

// match -------------------------------------------------------------------
struct MatchCell {
  std::string room;
  std::string size;
  std::size_t truth = 0;
  std::vector<std::size_t> steps;
  /// Per walk, nll[schema][evaluation].
  std::vector<std::vector<std::vector<double>>> walk_nll;
  /// Mean over walks.
  std::vector<std::vector<double>> mean_nll;
  MatchDecision decision;
};
struct MatchResult {
  std::vector<std::string> schemas;
  std::vector<MatchCell> cells;
};
MatchResult run_match(Config& c, std::uint64_t seed, std::size_t workers);

// match-window ------------------------------------------------------------
struct WindowRun {
  std::string pair;
  std::size_t seed_index = 0;
  WindowReport report;
  /// True room of the agent at each report position.
  std::vector<std::size_t> truth;
  std::vector<std::size_t> cell;
  /// Fraction of visited locations whose mean probability of the true
  /// schema exceeds 0.5.
  double location_accuracy = 0.0;
  std::size_t locations = 0;
};
struct WindowResult {
  std::vector<WindowRun> runs;
  double mean_accuracy = 0.0;
};
WindowResult run_window(Config& c, std::uint64_t seed, std::size_t workers);

// compose -----------------------------------------------------------------
struct ComposeRow {
  std::size_t length = 0;
  std::string mode;  // "schemas" or "scratch"
  std::size_t seed_index = 0;
  double nll = 0.0;
  double ground_truth_nll = 0.0;
};
struct ComposeResult {
  std::vector<ComposeRow> rows;
};
ComposeResult run_compose(Config& c, std::uint64_t seed, std::size_t workers);

// plan --------------------------------------------------------------------
struct PlanTrial {
  std::string room;
  std::size_t extra = 0;
  double lambda = 0.0;
  std::size_t trial = 0;
  std::size_t bfs_distance = 0;
  EpisodeLog log;
};
struct PlanExperiment {
  std::vector<PlanTrial> trials;
};
PlanExperiment run_plan(Config& c, std::uint64_t seed, std::size_t workers);

// mpg ---------------------------------------------------------------------
struct MpgRun {
  MpgSchemaResult learning;
  std::vector<bool> grid_after_episode;
  std::vector<MpgEpisodeResult> episodes;
  MpgSummary summary;
};
MpgRun run_mpg(Config& c, std::uint64_t seed, std::size_t workers);

// report ------------------------------------------------------------------
struct ReportRow {
  std::vector<std::string> group;
  std::size_t n = 0;
  double mean = 0.0;
  double sem = 0.0;
  /// Half-width of the 95% interval (1.96 * SEM).
  double ci95 = 0.0;
};
/// Groups the rows of a csv artifact by the given columns and summarizes
/// one numeric column.
std::vector<ReportRow> aggregate(const std::string& csv_text,
                                 const std::vector<std::string>& group_by,
                                 const std::string& value);

}  // namespace cscg::cli
