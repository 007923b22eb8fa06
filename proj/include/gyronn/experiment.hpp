#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gyronn/keyvalue.hpp"
#include "gyronn/verification.hpp"

namespace gyronn {

/// Experiment description loaded from a flat key=value file with dotted
/// sections (plant.*, imu.*, control.*, network.*, sampling.*, trainer.*,
/// sim.*, sweep.*, data.*) plus the top-level `seed`. Relative paths are
/// resolved against the config file's directory. See README.md for keys.
struct ExperimentConfig {
  std::string source;
  std::string plant_file;
  PlantParams plant;
  ImuParams imu;
  std::vector<double> natural_freqs = {25.0, 30.0, 35.0};
  double zeta = 0.7;
  std::optional<std::string> gain_file;
  RegulatorGain gain;
  LinearModel linear_model;  ///< open loop at the origin
  double cutoff_hz = 0.0;    ///< closed-loop axis-1 cutoff with `gain`

  CellConfig cell;  ///< seeds not yet applied
  bool sim_noisy = false;
  std::optional<std::string> network_file;
  std::optional<std::string> data_file;

  std::vector<double> sweep_frequencies;
  std::vector<int> sweep_hidden;
  std::vector<int> sweep_memory_depths;
  std::vector<Activation> sweep_activations;
  std::vector<Algorithm> sweep_algorithms;
  std::vector<ObserverArch> sweep_architectures;
  int sweep_replicates = 3;

  std::optional<std::uint64_t> seed;

  /// Single-run cell with the seeds of replicate 0 of the master seed
  /// (0 when no seed is configured).
  CellConfig run_cell_config() const;
  std::uint64_t master_seed_or_throw() const;
};

ExperimentConfig parse_experiment(const KeyValueFile& kv, const std::string& base_dir);
ExperimentConfig load_experiment(const std::string& path);

/// Integer list with ranges: "1-4, 8" -> {1, 2, 3, 4, 8}.
std::vector<int> parse_int_list(const std::vector<std::string>& items);
/// "6" -> {6}; "8x4" -> {8, 4}.
std::vector<int> parse_layer_spec(const std::string& spec);

}  // namespace gyronn
