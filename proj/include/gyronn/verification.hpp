#pragma once

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gyronn/control.hpp"
#include "gyronn/sampling.hpp"
#include "gyronn/training.hpp"

namespace gyronn {

inline constexpr double kRadToArcmin = 180.0 * 60.0 / std::numbers::pi;

/// Closed-loop run sampled at every control tick.
struct SimTrace {
  std::vector<double> t;
  std::vector<PlantState> states;
  std::vector<Vec3> controls;
  std::vector<Vec6> x_hat;                ///< empty unless the topology has an observer
  std::vector<Eigen::VectorXd> windows;   ///< only when requested
  bool diverged = false;
  double divergence_time = 0.0;

  std::size_t size() const { return t.size(); }
};

SimTrace simulate_closed_loop(const PlantParams& plant, Controller& controller,
                              const Disturbance& disturbance, const LoopConfig& cfg,
                              bool record_windows = false);

/// max |alpha1| in arcmin; nullopt for a diverged trace (UNSTABLE).
std::optional<double> max_pumping_angle(const SimTrace& trace);

/// Step of the training amplitude at `step_time` plus a harmonic at the
/// training frequency (chirp: its end frequency) with the same amplitude,
/// on the training axes.
Disturbance verification_disturbance(const SamplingConfig& training, double step_time = 0.5);

void write_trace_csv(std::ostream& out, const SimTrace& trace);

// ---------------------------------------------------------------------------
// Experiment cells

struct ObserverArch {
  std::vector<int> hidden = {6};
  Activation hidden_activation = Activation::tansig;
  Activation output_activation = Activation::purelin;
};

/// Everything needed to run one train+verify experiment.
struct CellConfig {
  PlantParams plant;
  RegulatorGain gain;
  TopologyKind topology = TopologyKind::nn_as_observer_plus_p;
  SamplingConfig sampling;
  ObserverArch arch;
  TrainerConfig trainer;
  LoopConfig sim;
  double verify_step_time = 0.5;
  std::uint64_t init_seed = 0;
};

/// Seeds for replicate `r` of a sweep with master seed `master`. Every cell
/// of a sweep shares the seeds of its replicate, so only the swept variable
/// differs between cells of one replicate.
struct ReplicateSeeds {
  std::uint64_t init = 0;
  std::uint64_t shuffle = 0;
  std::uint64_t sampling_imu = 0;
  std::uint64_t excitation = 0;
  std::uint64_t sim_imu = 0;

  static ReplicateSeeds derive(std::uint64_t master, int replicate);
  void apply(CellConfig& cell) const;
};

struct SweepRecord {
  std::vector<std::pair<std::string, std::string>> coords;
  int replicate = 0;
  std::uint64_t seed = 0;  ///< replicate root seed
  int epochs_used = 0;
  double final_loss = 0.0;
  bool converged = false;
  std::optional<double> max_angle_arcmin;  ///< nullopt = UNSTABLE
  std::string error;                       ///< nonempty when the cell failed

  bool unstable() const { return error.empty() && !max_angle_arcmin; }
  bool failed() const { return !error.empty(); }
};

struct CellOutcome {
  SweepRecord record;
  std::optional<NetworkRecord> network;
  TrainingReport report;
  SimTrace trace;
};

/// generate set -> train -> simulate -> record. Exceptions are caught and
/// recorded in the record's error field.
CellOutcome run_cell(const CellConfig& cell);

Mlp initial_network(const ObserverArch& arch, int inputs, int outputs, std::uint64_t seed);

/// Reference (full-state-feedback) verification run for the same disturbance.
SimTrace oracle_trace(const CellConfig& cell);

/// One cell per (frequency, replicate). Harmonic excitation at each f.
std::vector<SweepRecord> sweep_frequency(const CellConfig& base, const std::vector<double>& freqs,
                                         std::uint64_t master_seed, int replicates = 1);

/// One cell per (activation, m, k, replicate), m = single hidden layer width,
/// k = memory depth.
std::vector<SweepRecord> sweep_architecture(const CellConfig& base,
                                            const std::vector<int>& hidden_sizes,
                                            const std::vector<int>& memory_depths,
                                            const std::vector<Activation>& activations,
                                            std::uint64_t master_seed, int replicates = 3);

/// Cell definitions of a sweep in run order, for manifests and single-cell
/// reruns.
struct CellPlan {
  std::vector<std::pair<std::string, std::string>> coords;
  int replicate = 0;
  std::uint64_t seed = 0;
  CellConfig config;
};
std::vector<CellPlan> plan_frequency(const CellConfig& base, const std::vector<double>& freqs,
                                     std::uint64_t master_seed, int replicates);
std::vector<CellPlan> plan_architecture(const CellConfig& base,
                                        const std::vector<int>& hidden_sizes,
                                        const std::vector<int>& memory_depths,
                                        const std::vector<Activation>& activations,
                                        std::uint64_t master_seed, int replicates);
/// Runs the plans in parallel (dynamic schedule); results in plan order.
std::vector<SweepRecord> run_plans(const std::vector<CellPlan>& plans);

/// Majority vote over replicates of one grid point.
struct CellSummary {
  std::vector<std::pair<std::string, std::string>> coords;
  int replicates = 0;
  int unstable = 0;
  int failed = 0;
  bool stable = false;                    ///< strict majority of replicates stable
  std::optional<double> median_angle;     ///< median over stable replicates
  double median_epochs = 0.0;
};
std::vector<CellSummary> summarize(const std::vector<SweepRecord>& records);

/// Columns: coordinates, replicate, seed, epochs, final_loss, converged,
/// max_angle_arcmin (number or UNSTABLE), error.
std::vector<std::string> sweep_csv_header(const SweepRecord& first);
std::vector<std::string> sweep_csv_row(const SweepRecord& record);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records);
void write_manifest(std::ostream& out, const std::vector<CellPlan>& plans);

/// Tables of median angle (or UNSTABLE) per (m, k) for one activation.
void write_architecture_table(std::ostream& out, const std::vector<CellSummary>& cells,
                              const std::string& activation);

std::string format_angle(const std::optional<double>& arcmin);

// ---------------------------------------------------------------------------
// Optimizer comparison

struct TrainerRun {
  std::string architecture;
  Algorithm algorithm = Algorithm::levenberg_marquardt;
  TrainingReport report;
  std::string error;
};

/// Trains each architecture under each algorithm from the same initial
/// weights (seeded by `init_seed`). max_epochs = 0 yields histories holding
/// only the initial loss.
std::vector<TrainerRun> compare_trainers(const TrainingSet& set,
                                         const std::vector<ObserverArch>& architectures,
                                         const std::vector<Algorithm>& algorithms,
                                         const TrainerConfig& base, std::uint64_t init_seed);

/// Long format: architecture,algorithm,epoch,loss with epoch 0 the initial loss.
void write_loss_histories_csv(std::ostream& out, const std::vector<TrainerRun>& runs);

std::string describe(const ObserverArch& arch);

}  // namespace gyronn
