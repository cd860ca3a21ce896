#include "cscg/composition.hpp"

#include <istream>
#include <ostream>

#include "json.hpp"

#include "cscg/error.hpp"
#include "cscg/inference.hpp"

namespace cscg {

void check_frontier(const FrontierSpec& f, const UngroundedSchema& schema) {
  for (const auto& [s, a] : f.exits) {
    if (s >= schema.n_states() || a >= schema.n_actions()) {
      throw InvalidArgument("frontier of '" + schema.name + "': exit (" + std::to_string(s) +
                            ", " + std::to_string(a) + ") out of range");
    }
  }
  for (std::size_t s : f.entries) {
    if (s >= schema.n_states()) {
      throw InvalidArgument("frontier of '" + schema.name + "': entry " + std::to_string(s) +
                            " out of range");
    }
  }
}

UngroundedSchema build_prior(std::span<const UngroundedSchema> schemas,
                             std::span<const FrontierSpec> frontiers) {
  if (schemas.size() != frontiers.size()) {
    throw InvalidArgument("build_prior: " + std::to_string(schemas.size()) + " schemas but " +
                          std::to_string(frontiers.size()) + " frontiers");
  }
  UngroundedSchema out;
  out.transitions = block_diagonal(schemas);
  std::vector<std::size_t> offset;
  std::size_t total = 0;
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    check_frontier(frontiers[i], schemas[i]);
    offset.push_back(total);
    total += schemas[i].n_states();
  }
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    std::vector<std::size_t> targets;
    for (std::size_t h = 0; h < schemas.size(); ++h) {
      if (h == i) continue;
      for (std::size_t s : frontiers[h].entries) targets.push_back(offset[h] + s);
    }
    for (const auto& [s, a] : frontiers[i].exits) {
      if (targets.empty()) {
        throw InvalidArgument("build_prior: exit (" + std::to_string(s) + ", " +
                              std::to_string(a) + ") of '" + schemas[i].name +
                              "' has no entry state in another schema");
      }
      auto row = out.transitions.row(a, offset[i] + s);
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t k : targets) row[k] += 1.0;
      for (double& v : row) v /= static_cast<double>(targets.size());
    }
  }
  bool all_clones = true;
  std::vector<std::size_t> groups;
  std::size_t group_offset = 0;
  for (const auto& s : schemas) {
    if (!s.clones) {
      all_clones = false;
      break;
    }
    for (std::size_t g : s.clones->group_of_state()) groups.push_back(group_offset + g);
    group_offset += s.clones->n_groups();
  }
  if (all_clones) out.clones = CloneStructure(std::move(groups));
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    out.name += (i ? "+" : "") + schemas[i].name;
  }
  return out;
}

ComposedResult learn_composed(const UngroundedSchema& prior,
                              std::span<const Trajectory> walks, std::size_t n_obs,
                              const ComposeOptions& opts) {
  if (walks.empty()) throw InvalidArgument("learn_composed: no walks");
  const CloneStructure* tie = nullptr;
  if (opts.tie_clones) {
    if (!prior.clones) {
      throw InvalidArgument("learn_composed: clone tying needs the prior's clone structure");
    }
    tie = &*prior.clones;
  }
  const std::vector<double> pi = InitialDistribution::uniform(prior.n_states()).probs;
  ComposedResult res;

  const TransitionIndex index(prior.transitions);
  EmissionLearningResult em =
      learn_emissions(index, tie, walks, std::span<const std::vector<double>>(&pi, 1), n_obs,
                      opts.emission);
  res.emission_trace = std::move(em.nll_trace);

  TransitionFit fit =
      refine_transitions(prior.transitions, walks,
                         std::span<const EmissionMatrix>(&em.emissions, 1),
                         std::span<const std::vector<double>>(&pi, 1), opts.transition);
  res.transition_trace = std::move(fit.nll_trace);

  UngroundedSchema learned{std::move(fit.transitions), tie ? prior.clones : std::nullopt,
                           prior.name};
  GroundedSchema model = grounded(learned, std::move(em.emissions));
  ViterbiRefineResult vr =
      viterbi_refine(model, walks, opts.viterbi_pseudocount, opts.viterbi_iters);
  res.viterbi_trace = std::move(vr.nll_trace);
  res.model = std::move(vr.model);
  return res;
}

ComposedResult learn_composed(const UngroundedSchema& prior, const Trajectory& walk,
                              std::size_t n_obs, const ComposeOptions& opts) {
  return learn_composed(prior, std::span<const Trajectory>(&walk, 1), n_obs, opts);
}

namespace {

std::size_t index_of(const nlohmann::json& v, const std::string& what) {
  if (!v.is_number_unsigned()) {
    throw FormatError("frontier file: " + what + " must be a non-negative integer, got " + v.dump());
  }
  return v.get<std::size_t>();
}

}  // namespace

std::vector<NamedFrontier> read_frontiers(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("frontier file: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kFrontierFormatVersion) {
      throw FormatError("frontier file: unsupported version " + j.at("version").dump());
    }
    std::vector<NamedFrontier> out;
    for (const auto& s : j.at("schemas")) {
      NamedFrontier f;
      f.name = s.at("name").get<std::string>();
      for (const auto& e : s.value("exits", nlohmann::json::array())) {
        if (!e.is_array() || e.size() != 2) {
          throw FormatError("frontier file: exit of '" + f.name + "' must be [state, action]");
        }
        f.frontier.exits.emplace_back(index_of(e[0], "exit state"), index_of(e[1], "exit action"));
      }
      for (const auto& e : s.value("entries", nlohmann::json::array())) {
        f.frontier.entries.push_back(index_of(e, "entry state"));
      }
      out.push_back(std::move(f));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("frontier file: ") + e.what());
  }
}

void write_frontiers(std::ostream& out, std::span<const NamedFrontier> frontiers) {
  nlohmann::json j;
  j["version"] = kFrontierFormatVersion;
  j["schemas"] = nlohmann::json::array();
  for (const auto& f : frontiers) {
    nlohmann::json s;
    s["name"] = f.name;
    s["exits"] = nlohmann::json::array();
    for (const auto& [st, a] : f.frontier.exits) s["exits"].push_back({st, a});
    s["entries"] = f.frontier.entries;
    j["schemas"].push_back(std::move(s));
  }
  out << j.dump(2) << '\n';
}

}  // namespace cscg
