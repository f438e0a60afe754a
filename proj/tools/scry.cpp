// Command-line front end: dataset/map generation, experiment runs, OOD
// transfer runs, report inspection, and run-directory validation.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "scry/harness.hpp"
#include "scry/json_io.hpp"

using namespace scry;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRunFailure = 2;

struct RunFlags {
  std::string config_path;
  std::string domain;
  std::string mode;
  std::string proposer;
  std::string initial_library;
  std::string out_dir;
  std::vector<uint64_t> seeds;
  int episodes = -1;
  int trials = -1;
  int map_size = -1;
  double tau = -1.0;
  bool record_traces = false;
};

harness::ExperimentConfig resolve_config(const RunFlags& flags) {
  json base = json::object();
  if (!flags.config_path.empty()) base = read_json_file(flags.config_path);
  if (!flags.domain.empty()) base["domain"] = flags.domain;
  if (!base.contains("domain")) {
    throw ContractError("a domain is required (config file or --domain)");
  }
  harness::ExperimentConfig cfg = harness::ExperimentConfig::from_json(base);
  if (!flags.mode.empty()) cfg.mode = harness::mode_from_name(flags.mode);
  if (!flags.proposer.empty()) cfg.proposer = flags.proposer;
  if (!flags.initial_library.empty()) cfg.initial_library = flags.initial_library;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (!flags.seeds.empty()) cfg.seeds = flags.seeds;
  if (flags.episodes >= 0) cfg.episodes = flags.episodes;
  if (flags.trials >= 0) cfg.trials = flags.trials;
  if (flags.map_size >= 0) cfg.map_size = flags.map_size;
  if (flags.tau >= 0.0) cfg.tau = flags.tau;
  if (flags.record_traces) cfg.record_traces = true;
  return cfg;
}

void print_report_summary(const json& report) {
  std::cout << report.value("domain", "?") << " " << report.value("mode", "?")
            << " seed=" << report.value("seed", 0)
            << " trial=" << report.value("trial", 0) << "\n"
            << "  episodes:          " << report.value("episodes", 0) << "\n"
            << "  grounding mean:    " << report.value("grounding_mean", 0.0) << "\n"
            << "  planning accuracy: " << report.value("planning_accuracy", 0.0) << "\n"
            << "  reveal mean:       " << report.value("reveal_mean", 0.0) << "\n"
            << "  perception tokens: " << report.value("perception_in_mean", 0.0) << "/"
            << report.value("perception_out_mean", 0.0) << " per episode\n"
            << "  proposal tokens:   " << report.value("proposal_in_per_proposal", 0.0)
            << "/" << report.value("proposal_out_per_proposal", 0.0) << " per proposal ("
            << report.value("proposal_count", 0) << " proposals)\n"
            << "  total tokens:      " << report.value("total_in_mean", 0.0) << "/"
            << report.value("total_out_mean", 0.0) << " per episode\n";
}

int validate_run_dir(const fs::path& dir) {
  json report = read_json_file(dir / "report.json");
  harness::validate_report(report);

  // Recompute each episode's grounding from the stored model and truth.
  std::istringstream episodes(read_text_file(dir / "episodes.jsonl"));
  std::istringstream replay(read_text_file(dir / "replay.jsonl"));
  std::string episode_line, replay_line;
  int episode_count = 0;
  while (std::getline(episodes, episode_line)) {
    if (episode_line.empty()) continue;
    if (!std::getline(replay, replay_line)) {
      throw ContractError("replay buffer shorter than the episode log");
    }
    json ep = json::parse(episode_line);
    json rp = json::parse(replay_line);
    WorldModel model = WorldModel::from_json(rp.at("world"));
    const json& truth_at_model = ep.at("truth_at_model");

    int revealed_correct = 0, imputed_correct = 0, revealed_total = 0,
        imputed_total = 0;
    for (const SymbolicFact& f : model.merged_facts()) {
      const std::string truth_name =
          truth_at_model.at(std::to_string(f.var.index)).get<std::string>();
      bool correct = value_name(model.domain(), f.value) == truth_name;
      if (f.source == FactSource::revealed) {
        ++revealed_total;
        revealed_correct += correct ? 1 : 0;
      } else {
        ++imputed_total;
        imputed_correct += correct ? 1 : 0;
      }
    }
    if (revealed_total != ep.at("revealed_total").get<int>() ||
        revealed_correct != ep.at("revealed_correct").get<int>() ||
        imputed_total != ep.at("imputed_total").get<int>() ||
        imputed_correct != ep.at("imputed_correct").get<int>()) {
      throw ContractError("episode " + std::to_string(ep.at("episode").get<int>()) +
                          ": stored grounding counts do not match the stored model");
    }
    double grounding = static_cast<double>(revealed_correct + imputed_correct) /
                       std::max(1, revealed_total + imputed_total);
    if (std::abs(grounding - ep.at("grounding").get<double>()) > 1e-9) {
      throw ContractError("stored grounding accuracy mismatch");
    }
    TokenLedger ledger = TokenLedger::from_json(ep.at("ledger"));
    if (!ledger.linear()) {
      throw ContractError("perception tokens are not linear in reveal count");
    }
    ++episode_count;
  }
  if (episode_count != report.at("episodes").get<int>()) {
    throw ContractError("episode log length does not match the report");
  }
  std::cout << "ok: " << episode_count << " episodes validated\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scry: pattern-guided active world-model construction"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Generate maps or datasets");
  std::string gen_domain, gen_out = "generated";
  uint64_t gen_seed = 1;
  int gen_count = 1, gen_size = -1, gen_min_path = -1, gen_moves = 20;
  std::string gen_method = "reject";
  generate->add_option("domain", gen_domain, "lake | crafter | cube")->required();
  generate->add_option("--seed", gen_seed, "Base seed");
  generate->add_option("--count", gen_count, "Instances (or cube states)");
  generate->add_option("--size", gen_size, "Grid size");
  generate->add_option("--min-path", gen_min_path, "Minimum shortest path (lake)");
  generate->add_option("--method", gen_method, "reject | allpairs (lake)");
  generate->add_option("--moves", gen_moves, "Scramble moves per state (cube)");
  generate->add_option("-o,--out", gen_out, "Output directory or file");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment");
  RunFlags run_flags;
  run->add_option("--config", run_flags.config_path, "Config JSON file");
  run->add_option("--domain", run_flags.domain, "lake | crafter | cube");
  run->add_option("--mode", run_flags.mode, "full | no_inference | no_reweight");
  run->add_option("--episodes", run_flags.episodes, "Episodes per run");
  run->add_option("--seeds", run_flags.seeds, "Environment seeds");
  run->add_option("--trials", run_flags.trials, "Trials per seed");
  run->add_option("--proposer", run_flags.proposer,
                  "none | oracle | scripted:<file> | remote");
  run->add_option("--initial-library", run_flags.initial_library,
                  "builtin:<name> or a library snapshot file");
  run->add_option("--map-size", run_flags.map_size, "Grid size override");
  run->add_option("--tau", run_flags.tau, "Imputation confidence threshold");
  run->add_option("--out", run_flags.out_dir, "Run directory root");
  run->add_flag("--traces", run_flags.record_traces, "Record crafter episode traces");

  // ood
  auto* ood = app.add_subcommand("ood", "Frozen-library transfer run");
  RunFlags ood_flags;
  std::string ood_library;
  ood->add_option("--config", ood_flags.config_path, "Config JSON file");
  ood->add_option("--domain", ood_flags.domain, "lake | crafter | cube");
  ood->add_option("--library", ood_library, "Frozen library snapshot")->required();
  ood->add_option("--episodes", ood_flags.episodes, "Episodes per run");
  ood->add_option("--seeds", ood_flags.seeds, "Environment seeds");
  ood->add_option("--trials", ood_flags.trials, "Trials per seed");
  ood->add_option("--map-size", ood_flags.map_size, "Grid size override");
  ood->add_option("--out", ood_flags.out_dir, "Run directory root");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Pretty-print a report");
  std::string inspect_path;
  inspect->add_option("path", inspect_path, "report.json or a run directory")
      ->required();

  // validate
  auto* validate = app.add_subcommand("validate", "Audit a run directory");
  std::string validate_path;
  validate->add_option("path", validate_path, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      fs::path out(gen_out);
      if (gen_domain == "lake") {
        int size = gen_size > 0 ? gen_size : 16;
        int min_path = gen_min_path > 0 ? gen_min_path : (size >= 32 ? 50 : 25);
        auto method = gen_method == "allpairs" ? lake::GenMethod::allpairs
                                               : lake::GenMethod::reject;
        fs::create_directories(out);
        for (int i = 0; i < gen_count; ++i) {
          auto map = lake::generate_map(lake::default_templates(), size, min_path,
                                        gen_seed + static_cast<uint64_t>(i), method);
          write_json_file(out / ("lake_" + std::to_string(gen_seed + i) + ".json"),
                          map.to_json());
        }
      } else if (gen_domain == "crafter") {
        int size = gen_size > 0 ? gen_size : 64;
        fs::create_directories(out);
        for (int i = 0; i < gen_count; ++i) {
          auto map = crafter::generate_world(gen_seed + static_cast<uint64_t>(i), size, {});
          write_json_file(out / ("crafter_" + std::to_string(gen_seed + i) + ".json"),
                          map.to_json());
        }
      } else if (gen_domain == "cube") {
        auto dataset = cube::scramble_dataset(gen_seed, gen_count, gen_moves);
        fs::path file = out;
        if (!file.has_extension()) file = out / "cube_dataset.json";
        write_json_file(file, dataset.manifest());
      } else {
        std::cerr << "unknown domain: " << gen_domain << "\n";
        return kExitConfigError;
      }
      return kExitOk;
    }

    if (*run) {
      harness::ExperimentConfig cfg;
      try {
        cfg = resolve_config(run_flags);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
      }
      auto reports = harness::run_experiment(cfg);
      for (const auto& report : reports) print_report_summary(report.to_json());
      return kExitOk;
    }

    if (*ood) {
      harness::ExperimentConfig cfg;
      try {
        cfg = resolve_config(ood_flags);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
      }
      auto reports = harness::run_ood(cfg, ood_library);
      for (const auto& report : reports) print_report_summary(report.to_json());
      return kExitOk;
    }

    if (*inspect) {
      fs::path path(inspect_path);
      if (fs::is_directory(path)) path /= "report.json";
      print_report_summary(read_json_file(path));
      return kExitOk;
    }

    if (*validate) {
      return validate_run_dir(validate_path);
    }
  } catch (const ContractError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "run failure: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitOk;
}
