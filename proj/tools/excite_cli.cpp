#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "excite/excite.h"

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool lenient = false;
};

int report(excite_status status) {
  if (status != EXCITE_OK)
    std::cerr << "excite: " << excite_status_string(status) << ": " << excite_last_error() << '\n';
  return static_cast<int>(status);
}

int run_stage(const Globals& g, excite_stage stage, const std::string& events_path) {
  if (g.config.empty() && stage != EXCITE_STAGE_FIT) {
    std::cerr << "excite: configuration error: --config is required\n";
    return EXCITE_ERROR_CONFIG;
  }
  if (g.config.empty() && events_path.empty()) {
    std::cerr << "excite: configuration error: fit needs --config or --events\n";
    return EXCITE_ERROR_CONFIG;
  }
  excite_pipeline* p = nullptr;
  excite_status st = excite_pipeline_create(g.config.empty() ? nullptr : g.config.c_str(), &p);
  if (st != EXCITE_OK) return report(st);
  if (!g.out.empty()) st = excite_pipeline_set_output_dir(p, g.out.c_str());
  if (st == EXCITE_OK && g.seed) st = excite_pipeline_set_seed(p, *g.seed);
  if (st == EXCITE_OK && g.lenient) st = excite_pipeline_set_lenient(p, 1);
  if (st == EXCITE_OK && !events_path.empty()) st = excite_pipeline_set_events_path(p, events_path.c_str());
  if (st == EXCITE_OK) st = excite_pipeline_run(p, stage);

  for (std::size_t i = 0; i < excite_pipeline_warning_count(p); ++i)
    std::cerr << "warning: " << excite_pipeline_warning(p, i) << '\n';
  if (st == EXCITE_OK) {
    for (std::size_t i = 0; i < excite_pipeline_output_count(p); ++i)
      std::cout << excite_pipeline_output(p, i) << '\n';
  } else if (const char* manifest = excite_pipeline_manifest_path(p)) {
    std::cerr << "partial progress recorded in " << manifest << '\n';
  }
  excite_pipeline_destroy(p);
  return report(st);
}

int run_simulate(const Globals& g, const std::string& network, std::size_t buckets, const std::string& output) {
  excite_network* net = nullptr;
  excite_status st = excite_network_load(network.c_str(), &net);
  if (st != EXCITE_OK) return report(st);
  excite_process_set* set = nullptr;
  st = excite_simulate(net, buckets, g.seed.value_or(1), &set);
  excite_network_destroy(net);
  if (st != EXCITE_OK) return report(st);

  std::string path = output;
  if (path.empty()) {
    const std::string dir = g.out.empty() ? std::string("out") : g.out;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    path = dir + "/events.csv";
  }
  st = excite_process_set_write(set, path.c_str());
  if (st == EXCITE_OK) {
    for (std::size_t i = 0; i < excite_process_set_size(set); ++i)
      std::cout << excite_process_set_label(set, i) << ' ' << excite_process_set_event_count(set, i) << '\n';
    std::cout << path << '\n';
  }
  excite_process_set_destroy(set);
  return report(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic and market event-stream analysis with multivariate Hawkes models"};
  app.set_version_flag("--version", excite_version());
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config, "Pipeline configuration file (TOML)");
  app.add_option("--out", g.out, "Output directory (overrides [general] output_dir)");
  app.add_option("--seed", g.seed, "Master seed (overrides [general] seed)");
  app.add_flag("--lenient", g.lenient, "Skip malformed input records instead of failing");

  auto* topics = app.add_subcommand("topics", "Fit per-source dynamic topic models");
  auto* events = app.add_subcommand("events", "Build jump event streams from topics and prices");
  std::string events_path;
  auto* fitcmd = app.add_subcommand("fit", "Fit the Hawkes model to event streams");
  fitcmd->add_option("--events", events_path, "Event CSV to fit (default: <out>/events.csv)");
  auto* run = app.add_subcommand("run", "Run topics, events and fit in order");

  std::string network;
  std::size_t buckets = 0;
  std::string sim_output;
  auto* sim = app.add_subcommand("simulate", "Simulate event streams from a network description");
  sim->add_option("--network", network, "Network JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--buckets", buckets, "Number of buckets")->required()->check(CLI::PositiveNumber);
  sim->add_option("--output", sim_output, "Event CSV path (default: <out>/events.csv)");

  // Global options are accepted after the subcommand as well.
  for (auto* sub : {topics, events, fitcmd, run, sim}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return EXCITE_ERROR_CONFIG;
  }

  if (*topics) return run_stage(g, EXCITE_STAGE_TOPICS, {});
  if (*events) return run_stage(g, EXCITE_STAGE_EVENTS, {});
  if (*fitcmd) return run_stage(g, EXCITE_STAGE_FIT, events_path);
  if (*run) return run_stage(g, EXCITE_STAGE_ALL, {});
  return run_simulate(g, network, buckets, sim_output);
}
