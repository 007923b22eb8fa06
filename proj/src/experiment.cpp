#include "gyronn/experiment.hpp"

#include <filesystem>
#include <fstream>

#include "gyronn/errors.hpp"
#include "gyronn/seeding.hpp"

namespace gyronn {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKeys = {
    "seed",
    "plant.file",
    "imu.file", "imu.gyro_gain", "imu.accel_gain", "imu.gyro_noise_std", "imu.accel_noise_std",
    "control.natural_freqs", "control.zeta", "control.gain_file", "control.saturation",
    "control.topology",
    "network.hidden", "network.activation", "network.output_activation", "network.file",
    "sampling.duration", "sampling.dt", "sampling.control_stride", "sampling.record_stride",
    "sampling.transient_skip", "sampling.memory_depth", "sampling.channels",
    "sampling.excitation", "sampling.amplitude", "sampling.frequency", "sampling.f_start",
    "sampling.f_end", "sampling.chirp_duration", "sampling.hold", "sampling.noisy",
    "sampling.axes",
    "trainer.algorithm", "trainer.learning_rate", "trainer.lm_damping_init",
    "trainer.lm_damping_up", "trainer.lm_damping_down", "trainer.lm_max_retries",
    "trainer.lm_damping_max", "trainer.newton_max_halvings", "trainer.loss_goal", "trainer.max_epochs",
    "sim.duration", "sim.dt", "sim.control_stride", "sim.step_time", "sim.divergence_angle",
    "sim.noisy",
    "sweep.frequencies", "sweep.hidden", "sweep.memory_depths", "sweep.activations",
    "sweep.algorithms", "sweep.architectures", "sweep.replicates",
    "data.file",
};

std::string resolve(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
  if (!fs::exists(p)) throw ValidationError("referenced file does not exist: " + p.string());
  return p.string();
}

Vec3 vec3_or(const KeyValueFile& kv, const std::string& key, const Vec3& fallback) {
  if (!kv.has(key)) return fallback;
  const auto v = kv.get_doubles(key);
  if (v.size() == 1) return Vec3::Constant(v[0]);
  if (v.size() != 3) throw ValidationError(key + ": expected 1 or 3 values");
  return Vec3(v[0], v[1], v[2]);
}

int int_value(const KeyValueFile& kv, const std::string& key, int fallback) {
  return static_cast<int>(kv.get_int_or(key, fallback));
}

}  // namespace

std::vector<int> parse_int_list(const std::vector<std::string>& items) {
  std::vector<int> out;
  for (const std::string& item : items) {
    const auto dash = item.find('-', 1);
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int lo = std::stoi(item.substr(0, dash));
        const int hi = std::stoi(item.substr(dash + 1));
        if (hi < lo) throw ValidationError("bad range '" + item + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw ValidationError("bad integer list item '" + item + "'");
    }
  }
  return out;
}

std::vector<int> parse_layer_spec(const std::string& spec) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : spec) {
    if (c == 'x') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  std::vector<int> sizes = parse_int_list(parts);
  for (int s : sizes)
    if (s < 1) throw ValidationError("layer width must be >= 1 in '" + spec + "'");
  return sizes;
}

ExperimentConfig parse_experiment(const KeyValueFile& kv, const std::string& base_dir) {
  kv.reject_unknown(kKeys);
  ExperimentConfig cfg;
  cfg.source = kv.source();

  if (!kv.has("plant.file")) throw ValidationError("plant.file is required");
  cfg.plant_file = resolve(base_dir, kv.get("plant.file"));
  cfg.plant = load_plant_params(cfg.plant_file);

  if (kv.has("imu.file")) cfg.imu = load_imu_params(resolve(base_dir, kv.get("imu.file")));
  cfg.imu.gyro_gain = vec3_or(kv, "imu.gyro_gain", cfg.imu.gyro_gain);
  cfg.imu.accel_gain = vec3_or(kv, "imu.accel_gain", cfg.imu.accel_gain);
  cfg.imu.gyro_noise_std = kv.get_double_or("imu.gyro_noise_std", cfg.imu.gyro_noise_std);
  cfg.imu.accel_noise_std = kv.get_double_or("imu.accel_noise_std", cfg.imu.accel_noise_std);
  cfg.imu.validate();

  // Regulator
  if (kv.has("control.natural_freqs")) cfg.natural_freqs = kv.get_doubles("control.natural_freqs");
  cfg.zeta = kv.get_double_or("control.zeta", cfg.zeta);
  cfg.linear_model = linearize(cfg.plant, PlantState{}, cfg.imu);
  if (kv.has("control.gain_file")) {
    cfg.gain_file = resolve(base_dir, kv.get("control.gain_file"));
    std::ifstream in(*cfg.gain_file);
    cfg.gain = load_gain_csv(in);
  } else {
    cfg.gain = design_gain(cfg.linear_model, damped_pole_pairs(cfg.natural_freqs, cfg.zeta));
  }
  cfg.cutoff_hz = recommend_frequency(closed_loop(cfg.linear_model, cfg.gain), 0);

  CellConfig& cell = cfg.cell;
  cell.plant = cfg.plant;
  cell.gain = cfg.gain;
  cell.topology = parse_topology(kv.get_or("control.topology", "observer"));

  // Network
  cell.arch.hidden = parse_layer_spec(kv.get_or("network.hidden", "6"));
  cell.arch.hidden_activation = parse_activation(kv.get_or("network.activation", "tansig"));
  cell.arch.output_activation = parse_activation(kv.get_or("network.output_activation", "purelin"));
  if (kv.has("network.file")) cfg.network_file = resolve(base_dir, kv.get("network.file"));

  // Sampling
  SamplingConfig& s = cell.sampling;
  s.duration = kv.get_double_or("sampling.duration", s.duration);
  s.dt = kv.get_double_or("sampling.dt", s.dt);
  s.control_stride = int_value(kv, "sampling.control_stride", s.control_stride);
  s.record_stride = int_value(kv, "sampling.record_stride", s.record_stride);
  s.transient_skip = kv.get_double_or("sampling.transient_skip", s.transient_skip);
  s.memory_depth = int_value(kv, "sampling.memory_depth", s.memory_depth);
  if (kv.has("sampling.channels")) s.channels = parse_channels(kv.get_list("sampling.channels"));
  s.imu = cfg.imu;
  s.noisy_inputs = kv.get_bool_or("sampling.noisy", false);
  s.saturation = kv.get_double_or("control.saturation", s.saturation);
  s.axes = vec3_or(kv, "sampling.axes", s.axes);
  Excitation& e = s.excitation;
  e.kind = parse_excitation_kind(kv.get_or("sampling.excitation", "harmonic"));
  e.amplitude = kv.get_double_or("sampling.amplitude", e.amplitude);
  const std::string freq = kv.get_or("sampling.frequency", "auto");
  e.frequency = freq == "auto" ? cfg.cutoff_hz : kv.get_double("sampling.frequency");
  e.f_start = kv.get_double_or("sampling.f_start", e.f_start);
  e.f_end = kv.get_double_or("sampling.f_end", e.f_end);
  e.duration = kv.get_double_or("sampling.chirp_duration", s.duration);
  e.hold = kv.get_double_or("sampling.hold", s.dt);

  // Trainer
  TrainerConfig& t = cell.trainer;
  t.algorithm = parse_algorithm(kv.get_or("trainer.algorithm", "levenberg_marquardt"));
  t.learning_rate = kv.get_double_or("trainer.learning_rate", t.learning_rate);
  t.lm_damping_init = kv.get_double_or("trainer.lm_damping_init", t.lm_damping_init);
  t.lm_damping_up = kv.get_double_or("trainer.lm_damping_up", t.lm_damping_up);
  t.lm_damping_down = kv.get_double_or("trainer.lm_damping_down", t.lm_damping_down);
  t.lm_max_retries = int_value(kv, "trainer.lm_max_retries", t.lm_max_retries);
  t.lm_damping_max = kv.get_double_or("trainer.lm_damping_max", t.lm_damping_max);
  t.newton_max_halvings = int_value(kv, "trainer.newton_max_halvings", t.newton_max_halvings);
  t.loss_goal = kv.get_double_or("trainer.loss_goal", t.loss_goal);
  t.max_epochs = int_value(kv, "trainer.max_epochs", t.max_epochs);

  // Verification loop
  LoopConfig& sim = cell.sim;
  sim.duration = kv.get_double_or("sim.duration", sim.duration);
  sim.dt = kv.get_double_or("sim.dt", s.dt);
  sim.control_stride = int_value(kv, "sim.control_stride", s.control_stride);
  sim.divergence_angle = kv.get_double_or("sim.divergence_angle", sim.divergence_angle);
  cfg.sim_noisy = kv.get_bool_or("sim.noisy", false);
  sim.imu = cfg.imu;
  if (!cfg.sim_noisy) sim.imu.gyro_noise_std = sim.imu.accel_noise_std = 0.0;
  cell.verify_step_time = kv.get_double_or("sim.step_time", cell.verify_step_time);

  // Sweeps
  if (kv.has("sweep.frequencies")) cfg.sweep_frequencies = kv.get_doubles("sweep.frequencies");
  cfg.sweep_hidden = parse_int_list(split_list(kv.get_or("sweep.hidden", "1-12")));
  cfg.sweep_memory_depths = parse_int_list(split_list(kv.get_or("sweep.memory_depths", "1-12")));
  for (const auto& a : split_list(kv.get_or("sweep.activations", "tansig, logsig")))
    cfg.sweep_activations.push_back(parse_activation(a));
  for (const auto& a : split_list(kv.get_or("sweep.algorithms", "lm, newton, gradient")))
    cfg.sweep_algorithms.push_back(parse_algorithm(a));
  for (const auto& spec : split_list(kv.get_or("sweep.architectures", kv.get_or("network.hidden", "6")))) {
    ObserverArch arch = cell.arch;
    arch.hidden = parse_layer_spec(spec);
    cfg.sweep_architectures.push_back(arch);
  }
  cfg.sweep_replicates = int_value(kv, "sweep.replicates", cfg.sweep_replicates);
  if (cfg.sweep_replicates < 1) throw ValidationError("sweep.replicates must be >= 1");

  if (kv.has("data.file")) cfg.data_file = resolve(base_dir, kv.get("data.file"));
  if (kv.has("seed")) cfg.seed = kv.get_u64("seed");

  s.validate();
  t.validate();
  sim.validate();
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  const KeyValueFile kv = KeyValueFile::load(path);
  return parse_experiment(kv, fs::path(path).parent_path().string());
}

CellConfig ExperimentConfig::run_cell_config() const {
  CellConfig c = cell;
  ReplicateSeeds::derive(seed.value_or(0), 0).apply(c);
  return c;
}

std::uint64_t ExperimentConfig::master_seed_or_throw() const {
  if (!seed) throw ValidationError("a master seed is required for sweeps (config `seed` or --seed)");
  return *seed;
}

}  // namespace gyronn
