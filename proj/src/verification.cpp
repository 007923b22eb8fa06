#include "gyronn/verification.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "gyronn/csv.hpp"
#include "gyronn/errors.hpp"
#include "gyronn/seeding.hpp"

namespace gyronn {

SimTrace simulate_closed_loop(const PlantParams& plant, Controller& controller,
                              const Disturbance& disturbance, const LoopConfig& cfg,
                              bool record_windows) {
  SimTrace trace;
  const auto n = static_cast<std::size_t>(std::max(0L, cfg.tick_count()));
  trace.t.reserve(n);
  trace.states.reserve(n);
  trace.controls.reserve(n);
  const LoopOutcome outcome =
      run_closed_loop(plant, controller, disturbance, cfg, [&](const TickInfo& tick) {
        trace.t.push_back(tick.t);
        trace.states.push_back(tick.state);
        trace.controls.push_back(tick.control.moments);
        if (tick.control.x_hat) trace.x_hat.push_back(*tick.control.x_hat);
        if (record_windows) trace.windows.push_back(controller.last_window());
      });
  if (outcome.diverged) {
    trace.diverged = true;
    trace.divergence_time = outcome.divergence_time;
    // Close the series with the state that breached the threshold.
    trace.t.push_back(outcome.divergence_time);
    trace.states.push_back(outcome.final_state);
    trace.controls.push_back(trace.controls.empty() ? Vec3::Zero() : trace.controls.back());
    if (!trace.x_hat.empty()) trace.x_hat.push_back(trace.x_hat.back());
    if (record_windows && !trace.windows.empty()) trace.windows.push_back(trace.windows.back());
  }
  return trace;
}

std::optional<double> max_pumping_angle(const SimTrace& trace) {
  if (trace.diverged) return std::nullopt;
  double peak = 0.0;
  for (const PlantState& s : trace.states) peak = std::max(peak, std::abs(s.angles[0]));
  return peak * kRadToArcmin;
}

Disturbance verification_disturbance(const SamplingConfig& training, double step_time) {
  const Excitation& exc = training.excitation;
  Excitation harmonic;
  harmonic.kind = ExcitationKind::harmonic;
  harmonic.amplitude = exc.amplitude;
  harmonic.frequency = exc.kind == ExcitationKind::chirp ? exc.f_end : exc.frequency;
  Disturbance d;
  d.signal = harmonic;
  d.step_amplitude = exc.amplitude;
  d.step_time = step_time;
  d.axes = training.axes;
  return d;
}

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  CsvWriter csv(out);
  std::vector<std::string> header = {"t",     "alpha1", "alpha2", "alpha3", "rate1",
                                     "rate2", "rate3",  "u1",     "u2",     "u3"};
  const bool has_xhat = !trace.x_hat.empty();
  if (has_xhat)
    for (int i = 1; i <= kStateDim; ++i) header.push_back("xhat" + std::to_string(i));
  csv.header(header);
  std::vector<std::string> row;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    row.clear();
    row.push_back(format_double(trace.t[i]));
    const Vec6 x = trace.states[i].vector();
    for (int j = 0; j < kStateDim; ++j) row.push_back(format_double(x[j]));
    for (int j = 0; j < kAxes; ++j) row.push_back(format_double(trace.controls[i][j]));
    if (has_xhat)
      for (int j = 0; j < kStateDim; ++j) row.push_back(format_double(trace.x_hat[i][j]));
    csv.row(row);
  }
}

// ---------------------------------------------------------------------------

ReplicateSeeds ReplicateSeeds::derive(std::uint64_t master, int replicate) {
  const std::uint64_t root = derive_seed(master, "replicate", static_cast<std::uint64_t>(replicate));
  ReplicateSeeds s;
  s.init = derive_seed(root, "init", 0);
  s.shuffle = derive_seed(root, "shuffle", 0);
  s.sampling_imu = derive_seed(root, "sampling-imu", 0);
  s.excitation = derive_seed(root, "excitation", 0);
  s.sim_imu = derive_seed(root, "sim-imu", 0);
  return s;
}

void ReplicateSeeds::apply(CellConfig& cell) const {
  cell.init_seed = init;
  cell.trainer.shuffle_seed = shuffle;
  cell.sampling.imu_seed = sampling_imu;
  cell.sampling.excitation.seed = excitation;
  cell.sim.imu_seed = sim_imu;
}

Mlp initial_network(const ObserverArch& arch, int inputs, int outputs, std::uint64_t seed) {
  std::vector<int> sizes = {inputs};
  std::vector<Activation> acts;
  for (int h : arch.hidden) {
    sizes.push_back(h);
    acts.push_back(arch.hidden_activation);
  }
  sizes.push_back(outputs);
  acts.push_back(arch.output_activation);
  return Mlp::random(sizes, acts, seed);
}

namespace {

SamplingConfig cell_sampling(const CellConfig& cell) {
  SamplingConfig sc = cell.sampling;
  sc.target = cell.topology == TopologyKind::nn_as_regulator ? TargetKind::control : TargetKind::state;
  return sc;
}

}  // namespace

CellOutcome run_cell(const CellConfig& cell) {
  CellOutcome out;
  try {
    const SamplingConfig sc = cell_sampling(cell);
    const TrainingSet set = generate_training_set(cell.plant, cell.gain, sc);
    const Dataset data = set.standardized();
    const Mlp init = initial_network(cell.arch, static_cast<int>(data.inputs.rows()),
                                     static_cast<int>(data.targets.rows()), cell.init_seed);
    TrainResult trained = train(init, data, cell.trainer);
    out.report = trained.report;
    NetworkRecord rec = set.make_record(std::move(trained.net));
    Controller controller = cell.topology == TopologyKind::nn_as_regulator
                                ? Controller::regulator(rec, sc.saturation)
                                : Controller::observer(rec, cell.gain, sc.saturation);
    out.trace = simulate_closed_loop(cell.plant, controller,
                                     verification_disturbance(sc, cell.verify_step_time), cell.sim);
    out.network = std::move(rec);
    out.record.epochs_used = out.report.epochs_used;
    out.record.final_loss = out.report.final_loss;
    out.record.converged = out.report.converged;
    out.record.max_angle_arcmin = max_pumping_angle(out.trace);
  } catch (const std::exception& e) {
    out.record.error = e.what();
  }
  return out;
}

SimTrace oracle_trace(const CellConfig& cell) {
  const SamplingConfig sc = cell_sampling(cell);
  Controller oracle = Controller::full_state_feedback(cell.gain, sc.saturation);
  return simulate_closed_loop(cell.plant, oracle, verification_disturbance(sc, cell.verify_step_time),
                              cell.sim);
}

std::vector<CellPlan> plan_frequency(const CellConfig& base, const std::vector<double>& freqs,
                                     std::uint64_t master_seed, int replicates) {
  if (freqs.empty()) throw ValidationError("sweep_frequency: empty frequency list");
  if (replicates < 1) throw ValidationError("sweep: replicates must be >= 1");
  std::vector<CellPlan> plans;
  for (double f : freqs) {
    if (!(f > 0.0)) throw ValidationError("sweep_frequency: frequencies must be > 0");
    for (int r = 0; r < replicates; ++r) {
      CellPlan p;
      p.coords = {{"frequency_hz", format_double(f)}};
      p.replicate = r;
      p.seed = derive_seed(master_seed, "replicate", static_cast<std::uint64_t>(r));
      p.config = base;
      p.config.sampling.excitation.kind = ExcitationKind::harmonic;
      p.config.sampling.excitation.frequency = f;
      ReplicateSeeds::derive(master_seed, r).apply(p.config);
      plans.push_back(std::move(p));
    }
  }
  return plans;
}

std::vector<CellPlan> plan_architecture(const CellConfig& base,
                                        const std::vector<int>& hidden_sizes,
                                        const std::vector<int>& memory_depths,
                                        const std::vector<Activation>& activations,
                                        std::uint64_t master_seed, int replicates) {
  if (hidden_sizes.empty() || memory_depths.empty() || activations.empty())
    throw ValidationError("sweep_architecture: empty grid");
  if (replicates < 1) throw ValidationError("sweep: replicates must be >= 1");
  std::vector<CellPlan> plans;
  for (Activation act : activations) {
    for (int m : hidden_sizes) {
      if (m < 1) throw ValidationError("sweep_architecture: hidden sizes must be >= 1");
      for (int k : memory_depths) {
        if (k < 0) throw ValidationError("sweep_architecture: memory depths must be >= 0");
        for (int r = 0; r < replicates; ++r) {
          CellPlan p;
          p.coords = {{"activation", to_string(act)},
                      {"hidden", std::to_string(m)},
                      {"memory_depth", std::to_string(k)}};
          p.replicate = r;
          p.seed = derive_seed(master_seed, "replicate", static_cast<std::uint64_t>(r));
          p.config = base;
          p.config.arch.hidden = {m};
          p.config.arch.hidden_activation = act;
          p.config.sampling.memory_depth = k;
          ReplicateSeeds::derive(master_seed, r).apply(p.config);
          plans.push_back(std::move(p));
        }
      }
    }
  }
  return plans;
}

std::vector<SweepRecord> run_plans(const std::vector<CellPlan>& plans) {
  std::vector<SweepRecord> records(plans.size());
  const auto n = static_cast<long>(plans.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    const CellPlan& p = plans[static_cast<std::size_t>(i)];
    SweepRecord rec = run_cell(p.config).record;
    rec.coords = p.coords;
    rec.replicate = p.replicate;
    rec.seed = p.seed;
    records[static_cast<std::size_t>(i)] = std::move(rec);
  }
  return records;
}

std::vector<SweepRecord> sweep_frequency(const CellConfig& base, const std::vector<double>& freqs,
                                         std::uint64_t master_seed, int replicates) {
  return run_plans(plan_frequency(base, freqs, master_seed, replicates));
}

std::vector<SweepRecord> sweep_architecture(const CellConfig& base,
                                            const std::vector<int>& hidden_sizes,
                                            const std::vector<int>& memory_depths,
                                            const std::vector<Activation>& activations,
                                            std::uint64_t master_seed, int replicates) {
  return run_plans(
      plan_architecture(base, hidden_sizes, memory_depths, activations, master_seed, replicates));
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string coord_value(const std::vector<std::pair<std::string, std::string>>& coords,
                        const std::string& key) {
  for (const auto& [k, v] : coords)
    if (k == key) return v;
  return {};
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace

std::vector<CellSummary> summarize(const std::vector<SweepRecord>& records) {
  std::vector<CellSummary> cells;
  std::map<std::vector<std::pair<std::string, std::string>>, std::size_t> index;
  std::vector<std::vector<double>> angles, epochs;
  for (const SweepRecord& r : records) {
    auto [it, fresh] = index.try_emplace(r.coords, cells.size());
    if (fresh) {
      cells.emplace_back();
      cells.back().coords = r.coords;
      angles.emplace_back();
      epochs.emplace_back();
    }
    const std::size_t i = it->second;
    CellSummary& c = cells[i];
    ++c.replicates;
    if (r.failed()) {
      ++c.failed;
      continue;
    }
    epochs[i].push_back(r.epochs_used);
    if (r.unstable()) ++c.unstable;
    else angles[i].push_back(*r.max_angle_arcmin);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CellSummary& c = cells[i];
    const int stable = static_cast<int>(angles[i].size());
    c.stable = 2 * stable > c.replicates;
    if (stable > 0) c.median_angle = median(angles[i]);
    c.median_epochs = median(epochs[i]);
  }
  return cells;
}

std::string format_angle(const std::optional<double>& arcmin) {
  return arcmin ? format_double(*arcmin) : std::string("UNSTABLE");
}

std::vector<std::string> sweep_csv_header(const SweepRecord& first) {
  std::vector<std::string> h;
  for (const auto& [k, v] : first.coords) h.push_back(k);
  for (const char* c : {"replicate", "seed", "epochs", "final_loss", "converged",
                        "max_angle_arcmin", "error"})
    h.emplace_back(c);
  return h;
}

std::vector<std::string> sweep_csv_row(const SweepRecord& r) {
  std::vector<std::string> row;
  for (const auto& [k, v] : r.coords) row.push_back(v);
  row.push_back(std::to_string(r.replicate));
  row.push_back(std::to_string(r.seed));
  row.push_back(std::to_string(r.epochs_used));
  row.push_back(format_double(r.final_loss));
  row.push_back(r.converged ? "1" : "0");
  row.push_back(r.failed() ? std::string("ERROR") : format_angle(r.max_angle_arcmin));
  row.push_back(sanitize(r.error));
  return row;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  if (records.empty()) return;
  CsvWriter csv(out);
  csv.header(sweep_csv_header(records.front()));
  for (const SweepRecord& r : records) csv.row(sweep_csv_row(r));
}

void write_manifest(std::ostream& out, const std::vector<CellPlan>& plans) {
  CsvWriter csv(out);
  std::vector<std::string> header = {"cell"};
  if (!plans.empty())
    for (const auto& [k, v] : plans.front().coords) header.push_back(k);
  for (const char* c : {"replicate", "seed", "init_seed", "shuffle_seed", "sampling_imu_seed",
                        "excitation_seed", "sim_imu_seed"})
    header.emplace_back(c);
  csv.header(header);
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const CellPlan& p = plans[i];
    std::vector<std::string> row = {std::to_string(i)};
    for (const auto& [k, v] : p.coords) row.push_back(v);
    row.push_back(std::to_string(p.replicate));
    row.push_back(std::to_string(p.seed));
    row.push_back(std::to_string(p.config.init_seed));
    row.push_back(std::to_string(p.config.trainer.shuffle_seed));
    row.push_back(std::to_string(p.config.sampling.imu_seed));
    row.push_back(std::to_string(p.config.sampling.excitation.seed));
    row.push_back(std::to_string(p.config.sim.imu_seed));
    csv.row(row);
  }
}

void write_architecture_table(std::ostream& out, const std::vector<CellSummary>& cells,
                              const std::string& activation) {
  std::set<int> ms, ks;
  std::map<std::pair<int, int>, const CellSummary*> grid;
  for (const CellSummary& c : cells) {
    if (coord_value(c.coords, "activation") != activation) continue;
    const int m = std::stoi(coord_value(c.coords, "hidden"));
    const int k = std::stoi(coord_value(c.coords, "memory_depth"));
    ms.insert(m);
    ks.insert(k);
    grid[{m, k}] = &c;
  }
  CsvWriter csv(out);
  std::vector<std::string> header = {"hidden"};
  for (int k : ks) header.push_back("k" + std::to_string(k));
  csv.header(header);
  for (int m : ms) {
    std::vector<std::string> row = {std::to_string(m)};
    for (int k : ks) {
      const auto it = grid.find({m, k});
      if (it == grid.end()) row.emplace_back("");
      else if (!it->second->stable) row.emplace_back("UNSTABLE");
      else row.push_back(format_double(*it->second->median_angle, 6));
    }
    csv.row(row);
  }
}

// ---------------------------------------------------------------------------

std::string describe(const ObserverArch& arch) {
  std::string s = to_string(arch.hidden_activation);
  for (int h : arch.hidden) s += "-" + std::to_string(h);
  return s + "-" + to_string(arch.output_activation);
}

std::vector<TrainerRun> compare_trainers(const TrainingSet& set,
                                         const std::vector<ObserverArch>& architectures,
                                         const std::vector<Algorithm>& algorithms,
                                         const TrainerConfig& base, std::uint64_t init_seed) {
  if (architectures.empty() || algorithms.empty())
    throw ValidationError("compare_trainers: empty architecture or algorithm list");
  if (base.max_epochs < 0) throw ValidationError("compare_trainers: max_epochs must be >= 0");
  const Dataset data = set.standardized();
  std::vector<TrainerRun> runs;
  for (const ObserverArch& arch : architectures) {
    const Mlp init = initial_network(arch, static_cast<int>(data.inputs.rows()),
                                     static_cast<int>(data.targets.rows()), init_seed);
    for (Algorithm alg : algorithms) {
      TrainerRun run;
      run.architecture = describe(arch);
      run.algorithm = alg;
      try {
        if (base.max_epochs == 0) {
          run.report.initial_loss = run.report.final_loss = loss(init, data);
          run.report.converged = run.report.initial_loss <= base.loss_goal;
        } else {
          TrainerConfig cfg = base;
          cfg.algorithm = alg;
          run.report = train(init, data, cfg).report;
        }
      } catch (const std::exception& e) {
        run.error = e.what();
      }
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

void write_loss_histories_csv(std::ostream& out, const std::vector<TrainerRun>& runs) {
  CsvWriter csv(out);
  csv.header({"architecture", "algorithm", "epoch", "loss"});
  for (const TrainerRun& r : runs) {
    const std::string alg = to_string(r.algorithm);
    csv.row({r.architecture, alg, "0", format_double(r.report.initial_loss)});
    for (std::size_t e = 0; e < r.report.loss_history.size(); ++e)
      csv.row({r.architecture, alg, std::to_string(e + 1), format_double(r.report.loss_history[e])});
  }
}

}  // namespace gyronn
