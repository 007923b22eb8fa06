// gyronn: batch front-end for simulation, training and sweep experiments.
//
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gyronn/csv.hpp"
#include "gyronn/errors.hpp"
#include "gyronn/experiment.hpp"

namespace fs = std::filesystem;
using namespace gyronn;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<long> cell;
  std::optional<double> duration;
  bool strict = false;
};

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2 };

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = load_experiment(o.config);
  if (o.seed) cfg.seed = o.seed;
  if (o.duration) {
    cfg.cell.sim.duration = *o.duration;
    cfg.cell.sim.validate();
  }
  return cfg;
}

std::string out_path(const Options& o, const std::string& name) {
  return (fs::path(o.out) / name).string();
}

void write_run_info(const Options& o, const std::string& command, const ExperimentConfig& cfg) {
  std::ofstream f = open_output(out_path(o, "run.txt"));
  f << "command = " << command << "\n";
  f << "config = " << fs::absolute(o.config).string() << "\n";
  if (cfg.seed) f << "seed = " << *cfg.seed << "\n";
  f << "cutoff_hz = " << format_double(cfg.cutoff_hz) << "\n";
}

SamplingConfig sampling_for(const CellConfig& cell) {
  SamplingConfig s = cell.sampling;
  s.target = cell.topology == TopologyKind::nn_as_regulator ? TargetKind::control : TargetKind::state;
  return s;
}

TrainingSet obtain_set(const ExperimentConfig& cfg, const CellConfig& cell) {
  if (cfg.data_file) return load_training_set(*cfg.data_file);
  return generate_training_set(cell.plant, cell.gain, sampling_for(cell));
}

void print_warnings(const TrainingSet& set) {
  for (const auto& w : set.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_simulate(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const CellConfig cell = cfg.run_cell_config();
  std::optional<Controller> controller;
  switch (cell.topology) {
    case TopologyKind::full_state_feedback:
      controller = Controller::full_state_feedback(cell.gain, cell.sampling.saturation);
      break;
    case TopologyKind::nn_as_observer_plus_p:
    case TopologyKind::nn_as_regulator: {
      if (!cfg.network_file)
        throw ValidationError("simulate: topology '" + to_string(cell.topology) +
                              "' needs network.file");
      NetworkRecord net = load_network_file(*cfg.network_file);
      controller = cell.topology == TopologyKind::nn_as_regulator
                       ? Controller::regulator(std::move(net), cell.sampling.saturation)
                       : Controller::observer(std::move(net), cell.gain, cell.sampling.saturation);
      break;
    }
  }
  const Disturbance dist = verification_disturbance(cell.sampling, cell.verify_step_time);
  const SimTrace trace = simulate_closed_loop(cell.plant, *controller, dist, cell.sim);
  {
    std::ofstream f = open_output(out_path(o, "trace.csv"));
    write_trace_csv(f, trace);
  }
  write_run_info(o, "simulate", cfg);
  const auto angle = max_pumping_angle(trace);
  if (angle) {
    std::printf("topology=%s max_pumping_angle_arcmin=%s STABLE\n", to_string(cell.topology).c_str(),
                format_double(*angle, 8).c_str());
    return kOk;
  }
  std::printf("topology=%s UNSTABLE diverged_at_s=%s\n", to_string(cell.topology).c_str(),
              format_double(trace.divergence_time, 8).c_str());
  return o.strict ? kRuntime : kOk;
}

int cmd_gen_data(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const CellConfig cell = cfg.run_cell_config();
  const TrainingSet set = generate_training_set(cell.plant, cell.gain, sampling_for(cell));
  print_warnings(set);
  save_training_set(out_path(o, "training_set.csv"), set);
  write_run_info(o, "gen-data", cfg);
  std::printf("samples=%ld inputs=%ld targets=%ld\n", static_cast<long>(set.size()),
              static_cast<long>(set.raw.inputs.rows()), static_cast<long>(set.raw.targets.rows()));
  return kOk;
}

int cmd_train(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const CellConfig cell = cfg.run_cell_config();
  const TrainingSet set = obtain_set(cfg, cell);
  print_warnings(set);
  const Dataset data = set.standardized();
  const Mlp init = initial_network(cell.arch, static_cast<int>(data.inputs.rows()),
                                   static_cast<int>(data.targets.rows()), cell.init_seed);
  TrainResult result = train(init, data, cell.trainer);
  save_network_file(out_path(o, "network.txt"), set.make_record(result.net));
  {
    std::ofstream f = open_output(out_path(o, "training_report.csv"));
    write_report_csv(f, result.report);
  }
  write_run_info(o, "train", cfg);
  const TrainingReport& r = result.report;
  std::printf("algorithm=%s epochs=%d initial_loss=%s final_loss=%s converged=%d stalled=%d\n",
              to_string(cell.trainer.algorithm).c_str(), r.epochs_used,
              format_double(r.initial_loss, 8).c_str(), format_double(r.final_loss, 8).c_str(),
              r.converged ? 1 : 0, r.stalled ? 1 : 0);
  return (o.strict && !r.converged) ? kRuntime : kOk;
}

int run_sweep(const Options& o, const ExperimentConfig& cfg, const std::vector<CellPlan>& plans,
              const std::string& name) {
  {
    std::ofstream f = open_output(out_path(o, "manifest_" + name + ".csv"));
    write_manifest(f, plans);
  }
  write_run_info(o, "sweep-" + name, cfg);
  if (o.cell) {
    if (*o.cell < 0 || *o.cell >= static_cast<long>(plans.size()))
      throw ValidationError("--cell out of range (0.." + std::to_string(plans.size() - 1) + ")");
    const std::vector<CellPlan> one = {plans[static_cast<std::size_t>(*o.cell)]};
    const std::vector<SweepRecord> rec = run_plans(one);
    std::ofstream f = open_output(out_path(o, "cell_" + std::to_string(*o.cell) + ".csv"));
    write_sweep_csv(f, rec);
    std::cout << "cell " << *o.cell << ": " << format_angle(rec[0].max_angle_arcmin)
              << (rec[0].failed() ? " error: " + rec[0].error : "") << "\n";
    return rec[0].failed() ? kRuntime : kOk;
  }
  const std::vector<SweepRecord> records = run_plans(plans);
  {
    std::ofstream f = open_output(out_path(o, "sweep_" + name + ".csv"));
    write_sweep_csv(f, records);
  }
  std::size_t failed = 0;
  for (const SweepRecord& r : records) {
    if (r.failed()) {
      ++failed;
      std::cerr << "cell failed:";
      for (const auto& [k, v] : r.coords) std::cerr << " " << k << "=" << v;
      std::cerr << " replicate=" << r.replicate << ": " << r.error << "\n";
    }
  }
  std::printf("cells=%zu failed=%zu\n", records.size(), failed);
  if (name == "architecture") {
    const auto cells = summarize(records);
    for (Activation a : cfg.sweep_activations) {
      std::ofstream f = open_output(out_path(o, "table_" + to_string(a) + ".csv"));
      write_architecture_table(f, cells, to_string(a));
    }
  } else {
    for (const CellSummary& c : summarize(records))
      std::printf("%s=%s epochs_median=%s angle_median=%s\n", c.coords[0].first.c_str(),
                  c.coords[0].second.c_str(), format_double(c.median_epochs, 6).c_str(),
                  c.stable ? format_double(*c.median_angle, 6).c_str() : "UNSTABLE");
  }
  return failed == records.size() ? kRuntime : kOk;
}

int cmd_sweep_freq(const Options& o) {
  const ExperimentConfig cfg = load(o);
  std::vector<double> freqs = cfg.sweep_frequencies;
  if (freqs.empty()) freqs = {0.5, 1, 2, 3, 4, 5, 6.1};
  return run_sweep(o, cfg, plan_frequency(cfg.cell, freqs, cfg.master_seed_or_throw(),
                                          cfg.sweep_replicates),
                   "frequency");
}

int cmd_sweep_arch(const Options& o) {
  const ExperimentConfig cfg = load(o);
  return run_sweep(o, cfg,
                   plan_architecture(cfg.cell, cfg.sweep_hidden, cfg.sweep_memory_depths,
                                     cfg.sweep_activations, cfg.master_seed_or_throw(),
                                     cfg.sweep_replicates),
                   "architecture");
}

int cmd_sweep_trainers(const Options& o) {
  const ExperimentConfig cfg = load(o);
  const std::uint64_t master = cfg.master_seed_or_throw();
  CellConfig cell = cfg.cell;
  const ReplicateSeeds seeds = ReplicateSeeds::derive(master, 0);
  seeds.apply(cell);
  const TrainingSet set = obtain_set(cfg, cell);
  print_warnings(set);
  const auto runs = compare_trainers(set, cfg.sweep_architectures, cfg.sweep_algorithms,
                                     cell.trainer, seeds.init);
  {
    std::ofstream f = open_output(out_path(o, "loss_histories.csv"));
    write_loss_histories_csv(f, runs);
  }
  std::size_t failed = 0;
  {
    std::ofstream f = open_output(out_path(o, "trainers_summary.csv"));
    CsvWriter csv(f);
    csv.header({"architecture", "algorithm", "epochs", "initial_loss", "final_loss", "converged",
                "error"});
    for (const TrainerRun& r : runs) {
      if (!r.error.empty()) ++failed;
      csv.row({r.architecture, to_string(r.algorithm), std::to_string(r.report.epochs_used),
               format_double(r.report.initial_loss), format_double(r.report.final_loss),
               r.report.converged ? "1" : "0", r.error});
      std::printf("%s %s epochs=%d final_loss=%s converged=%d%s\n", r.architecture.c_str(),
                  to_string(r.algorithm).c_str(), r.report.epochs_used,
                  format_double(r.report.final_loss, 6).c_str(), r.report.converged ? 1 : 0,
                  r.error.empty() ? "" : (" error: " + r.error).c_str());
    }
  }
  write_run_info(o, "sweep-trainers", cfg);
  return failed == runs.size() ? kRuntime : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-network observer experiments for a gyro stabilizer"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "master seed (overrides the config)");
    sub->add_option("--jobs", o.jobs, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
    sub->add_flag("--strict", o.strict, "nonzero exit on divergence or non-convergence");
  };
  struct Cmd {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Cmd cmds[] = {
      {"simulate", "one closed-loop run, writes trace.csv", cmd_simulate},
      {"train", "generate or load a training set and train a network", cmd_train},
      {"gen-data", "generate a training set", cmd_gen_data},
      {"sweep-freq", "excitation-frequency sweep", cmd_sweep_freq},
      {"sweep-arch", "hidden-size x memory-depth sweep", cmd_sweep_arch},
      {"sweep-trainers", "loss histories per training algorithm", cmd_sweep_trainers},
  };
  int (*selected)(const Options&) = nullptr;
  for (const Cmd& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    common(sub);
    const std::string name = c.name;
    if (name == "simulate") sub->add_option("--duration", o.duration, "verification duration, s");
    if (name.rfind("sweep-", 0) == 0 && name != "sweep-trainers")
      sub->add_option("--cell", o.cell, "run only this cell of the manifest");
    sub->callback([&selected, fn = c.fn] { selected = fn; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  if (o.jobs) omp_set_num_threads(*o.jobs);
  try {
    return selected(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
