#include "scry/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "scry/json_io.hpp"
#include "scry/rng.hpp"

namespace scry::harness {

namespace {

constexpr uint64_t kMapStream = 0x4d41505353ull;
constexpr uint64_t kAgentStream = 0x4147454e54ull;
constexpr uint64_t kMaskStream = 0x4d41534bull;
constexpr uint64_t kContextStream = 0x43545854ull;

void log_line(const std::string& message) { std::cerr << "[scry] " << message << "\n"; }

}  // namespace

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::full: return "full";
    case Mode::no_inference: return "no_inference";
    case Mode::no_reweight: return "no_reweight";
  }
  throw ContractError("unknown mode");
}

Mode mode_from_name(const std::string& name) {
  if (name == "full") return Mode::full;
  if (name == "no_inference") return Mode::no_inference;
  if (name == "no_reweight") return Mode::no_reweight;
  throw ContractError("unknown mode name: " + name);
}

ExperimentConfig ExperimentConfig::defaults(Domain d) {
  ExperimentConfig cfg;
  cfg.domain = d;
  cfg.tau = default_tau(d);
  cfg.optimizer = default_optimizer_config(d);
  cfg.budget = default_reveal_budget(d);
  switch (d) {
    case Domain::lake:
      cfg.seeds = {1, 2, 3};
      cfg.map_size = 16;
      cfg.min_path = 25;
      cfg.proposal_period = 5;
      cfg.proposer_k = 10;
      cfg.rerank = false;
      break;
    case Domain::crafter:
      cfg.seeds = {1, 2, 3};
      cfg.map_size = 64;
      cfg.proposal_period = 5;
      cfg.proposer_k = 10;
      cfg.rerank = true;
      break;
    case Domain::cube:
      cfg.seeds = {42, 43, 44};
      cfg.map_size = 0;
      cfg.proposal_period = 10;
      cfg.proposer_k = 3;
      cfg.rerank = false;
      // A corner pattern's evidence is its two companion stickers; gating
      // on partial context would let a single sticker select among the
      // piece's four legal completions.
      cfg.gate_mode = GateMode::strict;
      break;
  }
  if (d == Domain::crafter) {
    cfg.masks_per_model = 4;  // models carry ~1-2k facts; 4 masks suffice
  }
  return cfg;
}

json ExperimentConfig::to_json() const {
  return json{{"domain", domain_name(domain)},
              {"episodes", episodes},
              {"seeds", seeds},
              {"trials", trials},
              {"mode", mode_name(mode)},
              {"tau", tau},
              {"epsilon", epsilon},
              {"gate_mode", gate_mode_name(gate_mode)},
              {"rerank", rerank},
              {"mask_fraction", mask_fraction},
              {"masks_per_model", masks_per_model},
              {"reweight_min_models", reweight_min_models},
              {"optimizer",
               json{{"step_size", optimizer.step_size},
                    {"max_iterations", optimizer.max_iterations},
                    {"reparameterization",
                     optimizer.reparameterization == Reparam::exponential
                         ? "exponential"
                         : "softplus"},
                    {"grad_tol", optimizer.grad_tol}}},
              {"proposal_period", proposal_period},
              {"proposer_k", proposer_k},
              {"proposer", proposer},
              {"remote",
               json{{"endpoint", remote.endpoint},
                    {"model", remote.model},
                    {"timeout_seconds", remote.timeout_seconds},
                    {"api_key_env", remote.api_key_env}}},
              {"initial_library", initial_library},
              {"budget_in", budget.input_tokens_per_reveal},
              {"budget_out", budget.output_tokens_per_reveal},
              {"map_size", map_size},
              {"min_path", min_path},
              {"gen_method",
               gen_method == lake::GenMethod::reject ? "reject" : "allpairs"},
              {"quota",
               json{{"trees", quota.trees},
                    {"stones", quota.stones},
                    {"coal", quota.coal},
                    {"iron", quota.iron},
                    {"diamond", quota.diamond}}},
              {"scramble_moves", scramble_moves},
              {"out_dir", out_dir},
              {"record_traces", record_traces},
              {"frozen_library", frozen_library}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.contains("domain")) throw ContractError("config needs a domain");
  ExperimentConfig cfg = defaults(domain_from_name(j.at("domain").get<std::string>()));
  if (j.contains("episodes")) cfg.episodes = j["episodes"].get<int>();
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<uint64_t>>();
  if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
  if (j.contains("mode")) cfg.mode = mode_from_name(j["mode"].get<std::string>());
  if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
  if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
  if (j.contains("gate_mode")) {
    cfg.gate_mode = gate_mode_from_name(j["gate_mode"].get<std::string>());
  }
  if (j.contains("rerank")) cfg.rerank = j["rerank"].get<bool>();
  if (j.contains("mask_fraction")) cfg.mask_fraction = j["mask_fraction"].get<double>();
  if (j.contains("masks_per_model")) cfg.masks_per_model = j["masks_per_model"].get<int>();
  if (j.contains("reweight_min_models")) {
    cfg.reweight_min_models = j["reweight_min_models"].get<int>();
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    if (o.contains("step_size")) cfg.optimizer.step_size = o["step_size"].get<double>();
    if (o.contains("max_iterations")) {
      cfg.optimizer.max_iterations = o["max_iterations"].get<int>();
    }
    if (o.contains("reparameterization")) {
      cfg.optimizer.reparameterization =
          o["reparameterization"].get<std::string>() == "softplus"
              ? Reparam::softplus
              : Reparam::exponential;
    }
    if (o.contains("grad_tol")) cfg.optimizer.grad_tol = o["grad_tol"].get<double>();
  }
  if (j.contains("proposal_period")) cfg.proposal_period = j["proposal_period"].get<int>();
  if (j.contains("proposer_k")) cfg.proposer_k = j["proposer_k"].get<int>();
  if (j.contains("proposer")) cfg.proposer = j["proposer"].get<std::string>();
  if (j.contains("remote")) {
    const json& r = j["remote"];
    if (r.contains("endpoint")) cfg.remote.endpoint = r["endpoint"].get<std::string>();
    if (r.contains("model")) cfg.remote.model = r["model"].get<std::string>();
    if (r.contains("timeout_seconds")) {
      cfg.remote.timeout_seconds = r["timeout_seconds"].get<int>();
    }
    if (r.contains("api_key_env")) {
      cfg.remote.api_key_env = r["api_key_env"].get<std::string>();
    }
  }
  if (j.contains("initial_library")) {
    cfg.initial_library = j["initial_library"].get<std::string>();
  }
  if (j.contains("budget_in")) {
    cfg.budget.input_tokens_per_reveal = j["budget_in"].get<uint32_t>();
  }
  if (j.contains("budget_out")) {
    cfg.budget.output_tokens_per_reveal = j["budget_out"].get<uint32_t>();
  }
  if (j.contains("map_size")) cfg.map_size = j["map_size"].get<int>();
  if (j.contains("min_path")) cfg.min_path = j["min_path"].get<int>();
  if (j.contains("gen_method")) {
    cfg.gen_method = j["gen_method"].get<std::string>() == "allpairs"
                         ? lake::GenMethod::allpairs
                         : lake::GenMethod::reject;
  }
  if (j.contains("quota")) {
    const json& q = j["quota"];
    if (q.contains("trees")) cfg.quota.trees = q["trees"].get<int>();
    if (q.contains("stones")) cfg.quota.stones = q["stones"].get<int>();
    if (q.contains("coal")) cfg.quota.coal = q["coal"].get<int>();
    if (q.contains("iron")) cfg.quota.iron = q["iron"].get<int>();
    if (q.contains("diamond")) cfg.quota.diamond = q["diamond"].get<int>();
  }
  if (j.contains("scramble_moves")) cfg.scramble_moves = j["scramble_moves"].get<int>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("record_traces")) cfg.record_traces = j["record_traces"].get<bool>();
  if (j.contains("frozen_library")) {
    cfg.frozen_library = j["frozen_library"].get<std::string>();
  }
  return cfg;
}

json EpisodeReport::to_json() const {
  return json{{"episode", episode},
              {"seed", seed},
              {"trial", trial},
              {"revealed_total", revealed_total},
              {"revealed_correct", revealed_correct},
              {"imputed_total", imputed_total},
              {"imputed_correct", imputed_correct},
              {"grounding", grounding},
              {"planning_success", planning_success},
              {"failure_reason", failure_reason},
              {"trace_ref", trace_ref},
              {"ledger", ledger.to_json()}};
}

std::vector<double> smooth_series(const std::vector<double>& values, double sigma) {
  if (!(sigma > 0.0)) throw ContractError("smoothing sigma must be positive");
  if (values.empty()) return {};
  const int n = static_cast<int>(values.size());
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double norm = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    double w = std::exp(-0.5 * (k / sigma) * (k / sigma));
    kernel[static_cast<size_t>(k + radius)] = w;
    norm += w;
  }
  for (double& w : kernel) w /= norm;

  auto reflect = [n](int idx) {
    while (idx < 0 || idx >= n) {
      if (idx < 0) idx = -idx - 1;
      if (idx >= n) idx = 2 * n - 1 - idx;
    }
    return idx;
  };

  std::vector<double> out(values.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      acc += kernel[static_cast<size_t>(k + radius)] *
             values[static_cast<size_t>(reflect(i + k))];
    }
    out[static_cast<size_t>(i)] = acc;
  }
  return out;
}

void RunReport::compute_aggregates() {
  episodes = static_cast<int>(episode_reports.size());
  if (episodes == 0) return;
  double g = 0.0, pin = 0.0, pout = 0.0, reveals = 0.0;
  int successes = 0;
  reveal_series.clear();
  for (const EpisodeReport& e : episode_reports) {
    g += e.grounding;
    pin += static_cast<double>(e.ledger.perception_in);
    pout += static_cast<double>(e.ledger.perception_out);
    reveals += static_cast<double>(e.ledger.reveal_count);
    successes += e.planning_success ? 1 : 0;
    reveal_series.push_back(static_cast<double>(e.ledger.reveal_count));
  }
  grounding_mean = g / episodes;
  planning_accuracy = static_cast<double>(successes) / episodes;
  perception_in_mean = pin / episodes;
  perception_out_mean = pout / episodes;
  reveal_mean = reveals / episodes;
  proposal_in_per_proposal =
      proposal_count ? static_cast<double>(proposal_in_total) / proposal_count : 0.0;
  proposal_out_per_proposal =
      proposal_count ? static_cast<double>(proposal_out_total) / proposal_count : 0.0;
  total_in_mean =
      perception_in_mean + static_cast<double>(proposal_in_total) / episodes;
  total_out_mean =
      perception_out_mean + static_cast<double>(proposal_out_total) / episodes;
  reveal_series_smoothed = smooth_series(reveal_series, 2.0);
}

json RunReport::to_json() const {
  return json{{"domain", domain},
              {"mode", mode},
              {"seed", seed},
              {"trial", trial},
              {"episodes", episodes},
              {"grounding_mean", grounding_mean},
              {"planning_accuracy", planning_accuracy},
              {"perception_in_mean", perception_in_mean},
              {"perception_out_mean", perception_out_mean},
              {"proposal_count", proposal_count},
              {"proposal_in_total", proposal_in_total},
              {"proposal_out_total", proposal_out_total},
              {"proposal_in_per_proposal", proposal_in_per_proposal},
              {"proposal_out_per_proposal", proposal_out_per_proposal},
              {"total_in_mean", total_in_mean},
              {"total_out_mean", total_out_mean},
              {"reveal_mean", reveal_mean},
              {"reveal_series", reveal_series},
              {"reveal_series_smoothed", reveal_series_smoothed}};
}

EnvInstance make_instance(const ExperimentConfig& config, uint64_t seed, int episode) {
  switch (config.domain) {
    case Domain::lake:
      return lake::generate_map(lake::default_templates(), config.map_size,
                                config.min_path,
                                mix_seed({seed, static_cast<uint64_t>(episode), kMapStream}),
                                config.gen_method);
    case Domain::crafter:
      return crafter::generate_world(
          mix_seed({seed, static_cast<uint64_t>(episode), kMapStream}),
          config.map_size, config.quota);
    case Domain::cube: {
      cube::CubeDataset dataset =
          cube::scramble_dataset(seed, config.episodes, config.scramble_moves);
      return dataset.states[static_cast<size_t>((episode - 1) %
                                                static_cast<int>(dataset.states.size()))];
    }
  }
  throw ContractError("unknown domain tag");
}

namespace {

struct EpisodeOutcome {
  bool success = false;
  std::string reason;
};

EpisodeOutcome lake_episode(const lake::LakeInstance& instance,
                            const PatternLibrary* library,
                            const ExperimentConfig& config, WorldModel& world,
                            TokenLedger& ledger) {
  GroundTruthInstance truth = instance.truth();
  world = truth.empty_world();
  const bool inference =
      config.mode != Mode::no_inference && library != nullptr && !library->empty();

  std::optional<lake::PathPlan> plan;
  int guard = 0;
  const int guard_limit = 16 * instance.size * instance.size;
  while (true) {
    if (++guard > guard_limit) {
      throw std::runtime_error("lake episode exceeded its loop guard");
    }
    lake::LazyStep step = lake::lazysp_step(world, instance.geometry());
    if (step.done) {
      plan = step.path;
      break;
    }
    if (inference) {
      auto candidates = lake::path_block_candidates(world, step.path);
      impute_closure(world, *library, {config.tau}, candidates);
      if (world.known(step.next)) continue;  // replan with the new facts
    }
    reveal(truth, step.next, world, ledger);
  }
  lake::ExecResult result = lake::execute_plan(*plan, truth);
  return {result.success, result.reason};
}

EpisodeOutcome cube_episode(const cube::CubeState& state, const PatternLibrary* library,
                            const ExperimentConfig& config, uint64_t agent_seed,
                            WorldModel& world, TokenLedger& ledger) {
  GroundTruthInstance truth = cube::truth_of(state);
  world = WorldModel::for_cube();
  Rng rng(agent_seed);
  const bool inference =
      config.mode != Mode::no_inference && library != nullptr && !library->empty();

  while (!cube::sufficiency(world)) {
    VariableId u = cube::random_candidate(world, rng);
    reveal(truth, u, world, ledger);
    if (inference) {
      std::vector<VariableId> unknown;
      for (uint32_t i = 0; i < cube::kFaceletCount; ++i) {
        if (!world.known({Domain::cube, i})) unknown.push_back({Domain::cube, i});
      }
      if (!unknown.empty()) {
        impute_closure(world, *library, {config.tau}, unknown);
      }
    }
  }
  bool success = cube::reconstruction_success(world, truth);
  return {success, success ? "" : "reconstruction_mismatch"};
}

EpisodeOutcome crafter_episode(const crafter::CrafterMap& map,
                               const PatternLibrary* library,
                               const ExperimentConfig& config, WorldModel& world,
                               TokenLedger& ledger,
                               std::vector<crafter::TraceEvent>* trace_out) {
  const bool inference =
      config.mode != Mode::no_inference && library != nullptr && !library->empty();
  crafter::CrafterEpisode::Options options;
  options.library = inference ? library : nullptr;
  options.rerank = inference && config.rerank;
  options.tau = inference ? config.tau : 1.0;
  options.record_trace = trace_out != nullptr;

  crafter::CrafterEpisode episode(map, options, ledger);
  EpisodeOutcome outcome;
  try {
    episode.run_all();
    outcome.success =
        episode.state().achievements.size() == crafter::kAchievementCount;
  } catch (const std::exception& e) {
    outcome.success = false;
    outcome.reason = e.what();
  }
  world = episode.world();
  if (trace_out) *trace_out = episode.trace();
  return outcome;
}

}  // namespace

EpisodeReport run_episode(const EnvInstance& instance, const PatternLibrary* library,
                          const ExperimentConfig& config, uint64_t agent_seed,
                          WorldModel* final_world,
                          std::vector<crafter::TraceEvent>* trace_out) {
  EpisodeReport report;
  report.ledger.budget = config.budget;
  WorldModel world;
  GroundTruthInstance truth;

  EpisodeOutcome outcome;
  try {
    if (const auto* lake_inst = std::get_if<lake::LakeInstance>(&instance)) {
      truth = lake_inst->truth();
      outcome = lake_episode(*lake_inst, library, config, world, report.ledger);
    } else if (const auto* map = std::get_if<crafter::CrafterMap>(&instance)) {
      truth = map->truth();
      outcome = crafter_episode(*map, library, config, world, report.ledger, trace_out);
    } else {
      const auto& state = std::get<cube::CubeState>(instance);
      truth = cube::truth_of(state);
      outcome = cube_episode(state, library, config, agent_seed, world, report.ledger);
    }
  } catch (const std::exception& e) {
    outcome.success = false;
    outcome.reason = e.what();
  }

  report.planning_success = outcome.success;
  report.failure_reason = outcome.reason;
  if (world.merged_size() > 0) {
    GroundingBreakdown b = grounding_breakdown(world, truth);
    report.revealed_total = b.revealed_total;
    report.revealed_correct = b.revealed_correct;
    report.imputed_total = b.imputed_total;
    report.imputed_correct = b.imputed_correct;
    report.grounding = b.accuracy();
  }
  if (final_world) *final_world = std::move(world);
  return report;
}

PatternLibrary builtin_library(const std::string& name, const ExperimentConfig& config,
                               uint64_t run_seed) {
  PatternLibrary lib(config.domain, config.epsilon, config.gate_mode);
  if (name == "lake_templates") {
    lib.add_macros(lake::template_macros(lake::default_templates()));
  } else if (name == "lake_salted") {
    lib.add_macros(lake::template_macros(
        lake::salted_templates(lake::default_templates(), 4, 1337)));
  } else if (name == "crafter_oracle") {
    lib.add_macros(crafter::oracle_cross_macros());
  } else if (name == "cube_dataset_corners") {
    cube::CubeDataset dataset =
        cube::scramble_dataset(run_seed, config.episodes, config.scramble_moves);
    lib.add_macros(cube::dataset_corner_macros(dataset.states));
  } else if (name == "cube_placeholder") {
    lib.add_macros(cube::placeholder_corner_macros());
  } else {
    throw ContractError("unknown builtin library: " + name);
  }
  return lib;
}

json library_snapshot_json(Domain domain, const PatternLibrary& library) {
  return json{{"domain", domain_name(domain)}, {"library", library.to_json()}};
}

PatternLibrary library_from_snapshot(const json& snapshot,
                                     std::optional<Domain> expect_domain) {
  Domain domain = domain_from_name(snapshot.at("domain").get<std::string>());
  if (expect_domain && domain != *expect_domain) {
    throw ContractError("library domain does not match the configured domain");
  }
  return PatternLibrary::from_json(domain, snapshot.at("library"));
}

namespace {

ProposerHandle make_proposer(const ExperimentConfig& config, uint64_t run_seed) {
  if (config.proposer == "none" || config.mode == Mode::no_inference ||
      !config.frozen_library.empty()) {
    return ProposerHandle::none_handle();
  }
  if (config.proposer == "oracle") {
    std::vector<MacroPattern> macros;
    switch (config.domain) {
      case Domain::lake:
        macros = lake::template_macros(lake::default_templates());
        break;
      case Domain::crafter:
        macros = crafter::oracle_cross_macros();
        break;
      case Domain::cube: {
        cube::CubeDataset dataset =
            cube::scramble_dataset(run_seed, config.episodes, config.scramble_moves);
        macros = cube::dataset_corner_macros(dataset.states);
        break;
      }
    }
    return ProposerHandle::oracle_handle(std::move(macros), config.proposer_k);
  }
  if (config.proposer.rfind("scripted:", 0) == 0) {
    json responses = read_json_file(config.proposer.substr(9));
    return ProposerHandle::scripted_handle(
        responses.get<std::vector<std::string>>(), config.proposer_k);
  }
  if (config.proposer == "remote") {
    return ProposerHandle::remote_handle(config.remote, config.proposer_k);
  }
  throw ContractError("unknown proposer kind: " + config.proposer);
}

PatternLibrary make_initial_library(const ExperimentConfig& config, uint64_t run_seed) {
  if (!config.frozen_library.empty()) {
    return library_from_snapshot(read_json_file(config.frozen_library), config.domain);
  }
  if (config.initial_library.empty()) {
    return PatternLibrary(config.domain, config.epsilon, config.gate_mode);
  }
  if (config.initial_library.rfind("builtin:", 0) == 0) {
    return builtin_library(config.initial_library.substr(8), config, run_seed);
  }
  return library_from_snapshot(read_json_file(config.initial_library), config.domain);
}

std::string truth_at_model_json(const WorldModel& world,
                                const GroundTruthInstance& truth) {
  json out = json::object();
  for (const SymbolicFact& f : world.merged_facts()) {
    out[std::to_string(f.var.index)] =
        value_name(truth.domain, truth.true_value(f.var));
  }
  return out.dump();
}

}  // namespace

RunArtifacts run_single(const ExperimentConfig& config, uint64_t seed, int trial) {
  RunArtifacts artifacts;
  artifacts.library = make_initial_library(config, seed);
  ProposerHandle proposer = make_proposer(config, seed);

  const bool induction_on =
      config.mode != Mode::no_inference && config.frozen_library.empty();
  const bool reweight_on = induction_on && config.mode == Mode::full;

  RunReport& report = artifacts.report;
  report.domain = domain_name(config.domain);
  report.mode = mode_name(config.mode);
  report.seed = seed;
  report.trial = trial;

  std::filesystem::path run_dir;
  std::ostringstream episodes_jsonl;
  std::ostringstream traces_jsonl;
  std::vector<json> library_snapshots;

  for (int ep = 1; ep <= config.episodes; ++ep) {
    EnvInstance instance = make_instance(config, seed, ep);
    uint64_t agent_seed = mix_seed(
        {seed, static_cast<uint64_t>(trial), static_cast<uint64_t>(ep), kAgentStream});

    WorldModel final_world;
    std::vector<crafter::TraceEvent> trace;
    EpisodeReport episode_report = run_episode(
        instance, &artifacts.library, config, agent_seed, &final_world,
        config.record_traces && config.domain == Domain::crafter ? &trace : nullptr);
    episode_report.episode = ep;
    episode_report.seed = seed;
    episode_report.trial = trial;

    GroundTruthInstance truth =
        std::visit([](const auto& inst) -> GroundTruthInstance {
          using T = std::decay_t<decltype(inst)>;
          if constexpr (std::is_same_v<T, cube::CubeState>) {
            return cube::truth_of(inst);
          } else {
            return inst.truth();
          }
        }, instance);

    if (config.record_traces && config.domain == Domain::crafter) {
      episode_report.trace_ref = "traces.jsonl#" + std::to_string(ep);
      json events = json::array();
      for (const crafter::TraceEvent& e : trace) {
        events.push_back(json{{"step", e.step}, {"kind", e.kind}, {"detail", e.detail}});
      }
      traces_jsonl << json{{"episode", ep}, {"events", events}}.dump() << "\n";
    }
    json episode_json = episode_report.to_json();
    episode_json["truth_at_model"] = json::parse(truth_at_model_json(final_world, truth));
    episodes_jsonl << episode_json.dump() << "\n";

    artifacts.buffer.append(
        {ep, episode_report.planning_success, false, std::move(final_world)});
    report.episode_reports.push_back(std::move(episode_report));

    const bool trigger = induction_on && config.proposal_period > 0 &&
                         ep % config.proposal_period == 0 && ep < config.episodes;
    if (!trigger) continue;

    if (proposer.kind != ProposerHandle::Kind::none) {
      uint64_t ctx_seed = mix_seed(
          {seed, static_cast<uint64_t>(trial), static_cast<uint64_t>(ep), kContextStream});
      ProposalContext context =
          extract_proposal_context(artifacts.buffer, config.domain, ctx_seed);
      if (context.skipped) {
        log_line("proposal round at episode " + std::to_string(ep) +
                 " skipped: no qualifying minimaps");
      } else {
        ProposalResult result = propose(proposer, context, nullptr);
        if (!result.error.empty()) {
          log_line("proposal round at episode " + std::to_string(ep) +
                   " failed: " + result.error);
        }
        for (const std::string& reason : result.rejected) {
          log_line("macro rejected: " + reason);
        }
        report.proposal_count += 1;
        report.proposal_in_total += result.in_tokens;
        report.proposal_out_total += result.out_tokens;
        artifacts.library.add_macros(result.macros);
        for (size_t idx : context.used_entries) {
          artifacts.buffer[idx].reflected = true;
        }
      }
    }

    if (reweight_on && !artifacts.library.empty() &&
        artifacts.buffer.size() >= static_cast<size_t>(config.reweight_min_models)) {
      uint64_t mask_seed = mix_seed(
          {seed, static_cast<uint64_t>(trial), static_cast<uint64_t>(ep), kMaskStream});
      std::vector<MaskedSample> dataset = build_mask_dataset(
          artifacts.buffer, config.mask_fraction, config.masks_per_model, mask_seed);
      if (!dataset.empty()) {
        artifacts.library.reset_weights(1.0);  // refit, never compound
        optimize_weights(artifacts.library, dataset, config.optimizer);
      }
    }
    library_snapshots.push_back(library_snapshot_json(config.domain, artifacts.library));
  }

  report.compute_aggregates();

  if (!config.out_dir.empty()) {
    run_dir = std::filesystem::path(config.out_dir) /
              ("run_s" + std::to_string(seed) + "_t" + std::to_string(trial));
    json config_snapshot = config.to_json();
    config_snapshot["seed"] = seed;
    config_snapshot["trial"] = trial;
    write_json_file(run_dir / "config.json", config_snapshot);
    atomic_write_file(run_dir / "episodes.jsonl", episodes_jsonl.str());
    atomic_write_file(run_dir / "replay.jsonl", artifacts.buffer.to_jsonl());
    for (size_t i = 0; i < library_snapshots.size(); ++i) {
      std::ostringstream name;
      name << "library_trigger_" << std::setw(3) << std::setfill('0') << i << ".json";
      write_json_file(run_dir / name.str(), library_snapshots[i]);
    }
    write_json_file(run_dir / "library_final.json",
                    library_snapshot_json(config.domain, artifacts.library));
    write_json_file(run_dir / "report.json", report.to_json());
    if (config.record_traces && config.domain == Domain::crafter) {
      atomic_write_file(run_dir / "traces.jsonl", traces_jsonl.str());
    }
  }
  return artifacts;
}

std::vector<RunReport> run_experiment(const ExperimentConfig& config) {
  std::vector<RunReport> reports;
  for (uint64_t seed : config.seeds) {
    for (int trial = 0; trial < config.trials; ++trial) {
      reports.push_back(run_single(config, seed, trial).report);
    }
  }
  if (!config.out_dir.empty() && !reports.empty()) {
    double grounding = 0.0, planning = 0.0, total_in = 0.0, total_out = 0.0,
           reveals = 0.0;
    for (const RunReport& r : reports) {
      grounding += r.grounding_mean;
      planning += r.planning_accuracy;
      total_in += r.total_in_mean;
      total_out += r.total_out_mean;
      reveals += r.reveal_mean;
    }
    double n = static_cast<double>(reports.size());
    write_json_file(std::filesystem::path(config.out_dir) / "summary.json",
                    json{{"runs", reports.size()},
                         {"domain", domain_name(config.domain)},
                         {"mode", mode_name(config.mode)},
                         {"grounding_mean", grounding / n},
                         {"planning_accuracy", planning / n},
                         {"total_in_mean", total_in / n},
                         {"total_out_mean", total_out / n},
                         {"reveal_mean", reveals / n}});
  }
  return reports;
}

std::vector<RunReport> run_ood(const ExperimentConfig& config,
                               const std::string& frozen_library_path) {
  if (!std::filesystem::exists(frozen_library_path)) {
    throw ContractError("frozen library file does not exist: " + frozen_library_path);
  }
  // Validates the domain eagerly so a mismatch fails before any episode runs.
  library_from_snapshot(read_json_file(frozen_library_path), config.domain);

  ExperimentConfig ood = config;
  ood.frozen_library = frozen_library_path;
  ood.proposer = "none";
  return run_experiment(ood);
}

json report_schema() {
  auto number = [] { return json{{"type", "number"}}; };
  auto integer = [] { return json{{"type", "integer"}}; };
  auto string = [] { return json{{"type", "string"}}; };
  json series{{"type", "array"}, {"items", json{{"type", "number"}}}};
  return json{
      {"$schema", "http://json-schema.org/draft-07/schema#"},
      {"title", "RunReport"},
      {"type", "object"},
      {"required",
       json::array({"domain", "mode", "seed", "trial", "episodes", "grounding_mean",
                    "planning_accuracy", "perception_in_mean", "perception_out_mean",
                    "proposal_count", "proposal_in_total", "proposal_out_total",
                    "proposal_in_per_proposal", "proposal_out_per_proposal",
                    "total_in_mean", "total_out_mean", "reveal_mean", "reveal_series",
                    "reveal_series_smoothed"})},
      {"properties",
       json{{"domain", string()},
            {"mode", string()},
            {"seed", integer()},
            {"trial", integer()},
            {"episodes", integer()},
            {"grounding_mean", number()},
            {"planning_accuracy", number()},
            {"perception_in_mean", number()},
            {"perception_out_mean", number()},
            {"proposal_count", integer()},
            {"proposal_in_total", integer()},
            {"proposal_out_total", integer()},
            {"proposal_in_per_proposal", number()},
            {"proposal_out_per_proposal", number()},
            {"total_in_mean", number()},
            {"total_out_mean", number()},
            {"reveal_mean", number()},
            {"reveal_series", series},
            {"reveal_series_smoothed", series}}}};
}

namespace {

void check_value(const json& value, const json& schema, const std::string& where) {
  const std::string type = schema.value("type", "");
  if (type == "object") {
    if (!value.is_object()) throw ContractError(where + ": expected object");
    if (schema.contains("required")) {
      for (const auto& key : schema["required"]) {
        if (!value.contains(key.get<std::string>())) {
          throw ContractError(where + ": missing required key " + key.get<std::string>());
        }
      }
    }
    if (schema.contains("properties")) {
      for (const auto& [key, sub] : schema["properties"].items()) {
        if (value.contains(key)) check_value(value[key], sub, where + "." + key);
      }
    }
  } else if (type == "array") {
    if (!value.is_array()) throw ContractError(where + ": expected array");
    if (schema.contains("items")) {
      for (size_t i = 0; i < value.size(); ++i) {
        check_value(value[i], schema["items"], where + "[" + std::to_string(i) + "]");
      }
    }
  } else if (type == "number") {
    if (!value.is_number()) throw ContractError(where + ": expected number");
  } else if (type == "integer") {
    if (!value.is_number_integer() && !value.is_number_unsigned()) {
      throw ContractError(where + ": expected integer");
    }
  } else if (type == "string") {
    if (!value.is_string()) throw ContractError(where + ": expected string");
  }
}

}  // namespace

void validate_report(const json& report) {
  check_value(report, report_schema(), "report");
}

}  // namespace scry::harness
