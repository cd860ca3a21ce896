#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "cscg/error.hpp"
#include "cscg/model_io.hpp"
#include "cscg/version.hpp"
#include "csv.hpp"
#include "experiments.hpp"

namespace cscg::cli {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::size_t workers = 1;
};

void add_common(CLI::App* sub, CommonFlags& f, bool needs_config) {
  auto* opt = sub->add_option("--config", f.config, "Experiment config (JSON)");
  if (needs_config) opt->required();
  sub->add_option("--seed", f.seed, "Base seed")->capture_default_str();
  sub->add_option("--out-dir", f.out_dir, "Directory for artifacts")->capture_default_str();
  sub->add_option("--override", f.overrides, "key=value (dotted keys, JSON values)");
  sub->add_option("--workers", f.workers, "Worker threads; results do not depend on it")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

struct Prepared {
  Config config;
  Provenance prov;
  fs::path out;
};

Prepared prepare(const CommonFlags& f, const std::string& command) {
  Json j = f.config.empty() ? Json::object() : load_config(f.config);
  for (const auto& o : f.overrides) apply_override(j, o);
  Provenance prov{f.seed, config_hash(j), command};
  fs::path out(f.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out.string());
  return {Config(std::move(j), f.config), prov, out};
}

GroundedSchema as_model(const UngroundedSchema& s) {
  if (!s.clones) throw InvalidArgument("schema has no clone structure to ground");
  return grounded(s, EmissionMatrix::deterministic(*s.clones));
}

void write_trace(const fs::path& path, const Provenance& prov, const std::vector<double>& trace) {
  CsvWriter w(path, prov, {"iteration", "nll"});
  for (std::size_t i = 0; i < trace.size(); ++i) w.row(i, trace[i]);
}

void cmd_train(const CommonFlags& f, std::ostream& out) {
  Prepared p = prepare(f, "train");
  const TrainResult r = run_train(p.config, f.seed, f.workers);
  write_trace(p.out / "train_trace.csv", p.prov, r.nll_trace);
  save_model(p.out / "schema.cscg", ModelBundle{as_model(r.schema), std::nullopt});
  out << "train: " << r.schema.n_states() << " states, final nll "
      << format_double(r.nll_trace.empty() ? 0.0 : r.nll_trace.back()) << '\n';
}

void cmd_bind(const CommonFlags& f, std::ostream& out) {
  Prepared p = prepare(f, "bind");
  const BindResult r = run_bind(p.config, f.seed, f.workers);
  CsvWriter w(p.out / "bind_trace.csv", p.prov, {"iteration", "nll", "ground_truth_nll"});
  for (std::size_t i = 0; i < r.nll_trace.size(); ++i) w.row(i, r.nll_trace[i], r.ground_truth_nll);
  save_model(p.out / "bound.cscg", ModelBundle{r.model, r.quantizer});
  out << "bind: final nll "
      << format_double(r.nll_trace.empty() ? 0.0 : r.nll_trace.back())
      << ", ground truth " << format_double(r.ground_truth_nll) << '\n';
}

std::string optional_step(const std::optional<std::size_t>& s) {
  return s ? std::to_string(*s) : std::string();
}

void cmd_match(const CommonFlags& f, std::ostream& out) {
  Prepared p = prepare(f, "match");
  const MatchResult r = run_match(p.config, f.seed, f.workers);
  CsvWriter trace(p.out / "match.csv", p.prov,
                  {"room", "size", "step", "schema", "nll", "probability"});
  CsvWriter dec(p.out / "match_decisions.csv", p.prov,
                {"room", "size", "truth", "winner", "correct", "decision_step"});
  std::size_t correct = 0;
  for (const MatchCell& cell : r.cells) {
    for (std::size_t e = 0; e < cell.steps.size(); ++e) {
      std::vector<double> loglik;
      for (const auto& h : cell.mean_nll) loglik.push_back(-static_cast<double>(cell.steps[e]) * h[e]);
      const std::vector<double> prob = softmax(loglik);
      for (std::size_t h = 0; h < r.schemas.size(); ++h) {
        trace.row(cell.room, cell.size, cell.steps[e], r.schemas[h], cell.mean_nll[h][e], prob[h]);
      }
    }
    const bool ok = cell.decision.winner == cell.truth && cell.decision.decision_step.has_value();
    correct += ok ? 1 : 0;
    dec.row(cell.room, cell.size, r.schemas[cell.truth], r.schemas[cell.decision.winner], ok,
            optional_step(cell.decision.decision_step));
  }
  out << "match: " << correct << "/" << r.cells.size() << " cells decided correctly\n";
}

void cmd_window(const CommonFlags& f, std::ostream& out) {
  Prepared p = prepare(f, "match-window");
  const WindowResult r = run_window(p.config, f.seed, f.workers);
  CsvWriter w(p.out / "window.csv", p.prov,
              {"pair", "seed", "position", "cell", "truth", "p_first", "p_second", "selected"});
  CsvWriter s(p.out / "window_summary.csv", p.prov, {"pair", "seed", "locations", "accuracy"});
  for (const WindowRun& run : r.runs) {
    for (std::size_t i = 0; i < run.report.positions.size(); ++i) {
      w.row(run.pair, run.seed_index, run.report.positions[i], run.cell[i], run.truth[i],
            run.report.prob[i][0], run.report.prob[i][1], run.report.selected[i]);
    }
    s.row(run.pair, run.seed_index, run.locations, run.location_accuracy);
  }
  out << "match-window: mean per-location accuracy " << format_double(r.mean_accuracy) << '\n';
}

void cmd_compose(const CommonFlags& f, std::ostream& out) {
  Prepared p = prepare(f, "compose");
  const ComposeResult r = run_compose(p.config, f.seed, f.workers);
  CsvWriter w(p.out / "compose.csv", p.prov, {"length", "mode", "seed", "nll", "ground_truth_nll"});
  for (const ComposeRow& row : r.rows) {
    w.row(row.length, row.mode, row.seed_index, row.nll, row.ground_truth_nll);
  }
  out << "compose: " << r.rows.size() << " rows\n";
}

void cmd_plan(const CommonFlags& f, std::ostream& out) {
  Prepared p = prepare(f, "plan");
  const PlanExperiment r = run_plan(p.config, f.seed, f.workers);
  CsvWriter w(p.out / "plan.csv", p.prov,
              {"room", "extra", "lambda", "trial", "bfs_distance", "steps", "plans", "replans",
               "believed_goal", "success", "final_distance"});
  CsvWriter e(p.out / "plan_steps.csv", p.prov,
              {"room", "extra", "lambda", "trial", "step", "action", "observation",
               "belief_entropy", "replanned"});
  std::size_t success = 0;
  for (const PlanTrial& t : r.trials) {
    w.row(t.room, t.extra, t.lambda, t.trial, t.bfs_distance, t.log.steps.size(), t.log.plans,
          t.log.replans, t.log.believed_goal, t.log.success, t.log.final_distance);
    for (std::size_t i = 0; i < t.log.steps.size(); ++i) {
      const NavStep& s = t.log.steps[i];
      e.row(t.room, t.extra, t.lambda, t.trial, i, s.action, s.observation, s.belief_entropy,
            s.replanned);
    }
    success += t.log.success ? 1 : 0;
  }
  out << "plan: " << success << "/" << r.trials.size() << " trials reached the goal\n";
}

void cmd_mpg(const CommonFlags& f, std::ostream& out) {
  Prepared p = prepare(f, "mpg");
  const MpgRun r = run_mpg(p.config, f.seed, f.workers);
  {
    CsvWriter w(p.out / "mpg_learning.csv", p.prov, {"episode", "nll", "grid"});
    for (std::size_t e = 0; e < r.learning.nll.size(); ++e) {
      w.row(e, r.learning.nll[e], static_cast<bool>(r.grid_after_episode[e]));
    }
  }
  {
    CsvWriter w(p.out / "mpg_tasks.csv", p.prov,
                {"episode", "task", "steps", "optimal", "completed"});
    CsvWriter e(p.out / "mpg_episodes.csv", p.prov,
                {"episode", "reward", "tasks", "explore_steps", "plan_steps"});
    for (std::size_t i = 0; i < r.episodes.size(); ++i) {
      const MpgEpisodeResult& ep = r.episodes[i];
      e.row(i, ep.reward, ep.tasks.size(), ep.explore_steps, ep.plan_steps);
      for (std::size_t t = 0; t < ep.tasks.size(); ++t) {
        w.row(i, t, ep.tasks[t].steps, ep.tasks[t].optimal, ep.tasks[t].completed);
      }
    }
  }
  const MpgSummary& s = r.summary;
  CsvWriter w(p.out / "mpg_summary.csv", p.prov,
              {"episodes", "mean_reward", "sem_reward", "ci95_reward", "mean_first_task_steps",
               "optimal_fraction", "later_tasks"});
  w.row(s.episodes, s.mean_reward, s.sem_reward, 1.96 * s.sem_reward, s.mean_first_task_steps,
        s.optimal_fraction, s.later_tasks);
  out << "mpg: reward " << format_double(s.mean_reward) << " +- " << format_double(s.sem_reward)
      << ", optimal fraction " << format_double(s.optimal_fraction) << '\n';
}

struct ReportFlags {
  std::string input;
  std::vector<std::string> group_by;
  std::string value;
  std::string out_dir = ".";
};

void cmd_report(const ReportFlags& f, std::ostream& out) {
  std::ifstream in(f.input, std::ios::binary);
  if (!in) throw InvalidArgument("report: cannot read " + f.input);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::vector<ReportRow> rows = aggregate(buf.str(), f.group_by, f.value);
  Json args = {{"input", fs::path(f.input).filename().string()}, {"group_by", f.group_by},
               {"value", f.value}};
  const Provenance prov{0, config_hash(args), "report"};
  fs::create_directories(f.out_dir);
  std::vector<std::string> columns = f.group_by;
  for (const char* c : {"n", "mean", "sem", "ci95"}) columns.emplace_back(c);
  CsvWriter w(fs::path(f.out_dir) / "report.csv", prov, columns);
  for (const ReportRow& r : rows) {
    std::vector<std::string> fields = r.group;
    fields.push_back(std::to_string(r.n));
    for (double v : {r.mean, r.sem, r.ci95}) fields.push_back(format_double(v));
    w.fields(fields);
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Clone-structured cognitive graph experiments", "cscg"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonFlags flags;
  ReportFlags report;
  std::function<void()> action;
  const std::pair<const char*, const char*> experiments[] = {
      {"train", "Learn a schema from a random walk in a room"},
      {"bind", "Re-learn the emissions of a saved schema in a new room"},
      {"match", "Rank a schema library on walks through test rooms"},
      {"match-window", "Sliding-window matching on walks through two joined rooms"},
      {"compose", "Composed learning vs learning from scratch over walk lengths"},
      {"plan", "Shortcut navigation with a bound schema"},
      {"mpg", "Memory and planning game episodes"},
  };
  const std::map<std::string, void (*)(const CommonFlags&, std::ostream&)> handlers = {
      {"train", cmd_train},     {"bind", cmd_bind},       {"match", cmd_match},
      {"match-window", cmd_window}, {"compose", cmd_compose}, {"plan", cmd_plan},
      {"mpg", cmd_mpg},
  };
  for (const auto& [name, help] : experiments) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, flags, false);
    sub->callback([&, n = std::string(name)] {
      action = [&, n] { handlers.at(n)(flags, out); };
    });
  }
  CLI::App* rep = app.add_subcommand("report", "Mean, SEM and 95% interval of a csv column");
  rep->add_option("--input", report.input, "CSV artifact")->required();
  rep->add_option("--group-by", report.group_by, "Grouping columns")->delimiter(',');
  rep->add_option("--value", report.value, "Numeric column")->required();
  rep->add_option("--out-dir", report.out_dir, "Directory for report.csv")->capture_default_str();
  rep->callback([&] { action = [&] { cmd_report(report, out); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  }

  try {
    action();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kValidationError;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kValidationError;
  } catch (const FormatError& e) {
    err << "bad file: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace cscg::cli
