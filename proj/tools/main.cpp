#include "s5id/error.hpp"
#include "s5id/harness.hpp"
#include "s5id/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool out_required) {
  cmd->add_option("--config", o.config, "configuration document (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "base seed (overrides the config)");
  auto* out = cmd->add_option("--out", o.out, "output path");
  if (out_required) out->required();
  cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::Range(1u, 1024u));
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

int run_simulate(const CommonOptions& o, const std::string& model_out) {
  s5id::SimulateConfig cfg;
  if (!o.config.empty()) cfg = s5id::simulate_config_from_json(s5id::io::read_text(o.config));
  const auto sys = s5id::load_system(cfg);
  s5id::SimulationOptions sim;
  sim.init = cfg.init;
  sim.noise = cfg.noise;
  const s5id::SystemSimulator simulator(sys.model, sys.input_law, sim);
  const auto data = simulator.simulate(cfg.Tbar + 1, o.seed.value_or(1));
  s5id::io::write_dataset(o.out, data);
  if (!model_out.empty()) s5id::io::write_model(model_out, sys.model, &sys.input_law);
  std::cerr << "wrote " << data.length() << " samples to " << o.out << '\n';
  return 0;
}

int run_identify(const CommonOptions& o, const std::string& data_path, std::optional<long> order,
                 bool no_timings) {
  s5id::IdentifyConfig cfg;
  if (!o.config.empty()) cfg = s5id::identify_config_from_json(s5id::io::read_text(o.config));
  if (order) cfg.order = *order;
  const std::string doc = s5id::identify_from_file(data_path, cfg, !no_timings);
  if (o.out.empty()) {
    std::cout << doc;
  } else {
    s5id::io::write_text(o.out, doc);
  }
  return 0;
}

int run_repro(s5id::ExperimentMode mode, const CommonOptions& o, bool no_timings) {
  s5id::ExperimentConfig cfg = o.config.empty()
                                   ? s5id::ExperimentConfig::defaults(mode)
                                   : s5id::config_from_json(s5id::io::read_text(o.config));
  if (cfg.mode != mode && !(mode == s5id::ExperimentMode::Consistency && cfg.mode == s5id::ExperimentMode::Custom)) {
    throw s5id::Error(s5id::ErrorCode::InvalidArgument,
                      "config mode '" + s5id::to_string(cfg.mode) + "' does not match this command");
  }
  if (o.seed) cfg.base_seed = *o.seed;
  std::string out = o.out.empty() ? cfg.output_path : o.out;
  if (out.empty()) throw s5id::Error(s5id::ErrorCode::InvalidArgument, "give --out or output_path");
  cfg.output_path = out;

  s5id::RunOptions run;
  run.jobs = o.jobs;
  run.log = log_line;
  const auto record = s5id::run_experiment(cfg, run);
  s5id::io::write_text(fs::path(out) / "record.json", s5id::record_to_json(record, !no_timings));
  s5id::write_csv_exports(record, out);
  for (const auto& g : record.groups) {
    const auto a = s5id::aggregate(g);
    std::cerr << "n=" << g.n << " Tbar=" << g.Tbar << " attempts=" << g.attempts << " kept=" << a.kept
              << " incidence=" << a.unstable_incidence << " median_hinf_hard=" << a.stats.at("hinf_hard").median
              << " all_stable=" << (a.all_stable ? "yes" : "no") << " status=" << g.status << '\n';
  }
  std::cerr << "wrote " << (fs::path(out) / "record.json").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable closed-form subspace identification toolkit"};
  app.require_subcommand(1);

  CommonOptions sim_opts;
  std::string model_out;
  auto* sim = app.add_subcommand("simulate", "simulate a dataset from a model");
  add_common(sim, sim_opts, true);
  sim->add_option("--model-out", model_out, "also write the true model document here");

  CommonOptions id_opts;
  std::string data_path;
  std::optional<long> order;
  bool id_no_timings = false;
  auto* id = app.add_subcommand("identify", "identify a model from a dataset CSV");
  add_common(id, id_opts, false);
  id->add_option("--data", data_path, "dataset CSV")->required()->check(CLI::ExistingFile);
  id->add_option("--order", order, "model order (overrides the config)");
  id->add_flag("--no-timings", id_no_timings, "omit wall-clock fields");

  CommonOptions low_opts, high_opts, cons_opts;
  bool low_nt = false, high_nt = false, cons_nt = false;
  auto* low = app.add_subcommand("repro-lowdim", "low-dimensional Monte Carlo study");
  add_common(low, low_opts, false);
  low->add_flag("--no-timings", low_nt, "omit wall-clock fields from record.json");
  auto* high = app.add_subcommand("repro-highdim", "high-dimensional Monte Carlo study");
  add_common(high, high_opts, false);
  high->add_flag("--no-timings", high_nt, "omit wall-clock fields from record.json");
  auto* cons = app.add_subcommand("consistency", "sample-size sweep of estimation errors");
  add_common(cons, cons_opts, false);
  cons->add_flag("--no-timings", cons_nt, "omit wall-clock fields from record.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return run_simulate(sim_opts, model_out);
    if (*id) return run_identify(id_opts, data_path, order, id_no_timings);
    if (*low) return run_repro(s5id::ExperimentMode::LowDim, low_opts, low_nt);
    if (*high) return run_repro(s5id::ExperimentMode::HighDim, high_opts, high_nt);
    if (*cons) return run_repro(s5id::ExperimentMode::Consistency, cons_opts, cons_nt);
  } catch (const s5id::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
