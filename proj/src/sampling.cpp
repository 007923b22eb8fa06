#include "gyronn/sampling.hpp"

#include <cmath>
#include <numbers>

#include "gyronn/csv.hpp"
#include "gyronn/errors.hpp"
#include "gyronn/seeding.hpp"

namespace gyronn {

// ---------------------------------------------------------------------------
// Excitation

std::string to_string(ExcitationKind k) {
  switch (k) {
    case ExcitationKind::harmonic: return "harmonic";
    case ExcitationKind::chirp: return "chirp";
    case ExcitationKind::random_normalized: return "random";
  }
  return "?";
}

ExcitationKind parse_excitation_kind(const std::string& name) {
  if (name == "harmonic") return ExcitationKind::harmonic;
  if (name == "chirp") return ExcitationKind::chirp;
  if (name == "random" || name == "random_normalized") return ExcitationKind::random_normalized;
  throw ValidationError("unknown excitation '" + name + "'");
}

void Excitation::validate() const {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw ValidationError("excitation: amplitude must be finite and >= 0");
  switch (kind) {
    case ExcitationKind::harmonic:
      if (!(frequency > 0.0)) throw ValidationError("excitation: frequency must be > 0");
      break;
    case ExcitationKind::chirp:
      if (!(f_start > 0.0) || !(f_end > f_start))
        throw ValidationError("excitation: chirp needs 0 < f_start < f_end");
      if (!(duration > 0.0)) throw ValidationError("excitation: chirp duration must be > 0");
      break;
    case ExcitationKind::random_normalized:
      if (!(hold > 0.0)) throw ValidationError("excitation: hold interval must be > 0");
      break;
  }
}

double excitation_value(const Excitation& exc, double t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (exc.kind) {
    case ExcitationKind::harmonic:
      return exc.amplitude * std::sin(two_pi * exc.frequency * t);
    case ExcitationKind::chirp:
      return exc.amplitude *
             std::sin(two_pi * (exc.f_start * t +
                                (exc.f_end - exc.f_start) * t * t / (2.0 * exc.duration)));
    case ExcitationKind::random_normalized: {
      // Small offset keeps exact multiples of the hold interval in their own slot.
      const auto slot = static_cast<std::uint64_t>(std::floor(t / exc.hold + 1e-9));
      return exc.amplitude * counter_normal(exc.seed, slot);
    }
  }
  return 0.0;
}

double chirp_frequency(const Excitation& exc, double t) {
  return exc.f_start + (exc.f_end - exc.f_start) * t / exc.duration;
}

Vec3 Disturbance::value(double t) const {
  double m = 0.0;
  if (signal) m += excitation_value(*signal, t);
  if (step_amplitude != 0.0 && t >= step_time) m += step_amplitude;
  return axes * m;
}

// ---------------------------------------------------------------------------
// Training set synthesis

void SamplingConfig::validate() const {
  excitation.validate();
  imu.validate();
  if (!(dt > 0.0)) throw ValidationError("sampling: dt must be > 0");
  if (control_stride < 1 || record_stride < 1)
    throw ValidationError("sampling: strides must be >= 1");
  if (record_stride % control_stride != 0)
    throw ValidationError("sampling: record_stride must be a multiple of control_stride");
  if (memory_depth < 0) throw ValidationError("sampling: memory_depth must be >= 0");
  if (channels.empty()) throw ValidationError("sampling: no measurement channels");
  if (!(transient_skip >= 0.0)) throw ValidationError("sampling: transient_skip must be >= 0");
  const double usable = duration - transient_skip;
  const double steps = usable / (dt * record_stride);
  if (!(duration > 0.0) || steps < memory_depth + 10)
    throw ValidationError("sampling: duration too short (need >= memory_depth + 10 samples)");
}

TrainingSet generate_training_set(const PlantParams& plant, const RegulatorGain& gain,
                                  const SamplingConfig& cfg) {
  cfg.validate();
  LoopConfig loop;
  loop.duration = cfg.duration;
  loop.dt = cfg.dt;
  loop.control_stride = cfg.control_stride;
  loop.imu = cfg.imu;
  if (!cfg.noisy_inputs) loop.imu.gyro_noise_std = loop.imu.accel_noise_std = 0.0;
  loop.imu_seed = cfg.imu_seed;

  Disturbance dist;
  dist.signal = cfg.excitation;
  dist.axes = cfg.axes;

  Controller reference = Controller::full_state_feedback(gain, cfg.saturation);
  TappedDelayBuffer buffer(cfg.memory_depth, static_cast<int>(cfg.channels.size()));
  const long every = cfg.record_stride / cfg.control_stride;
  const long first = std::lround(std::ceil(cfg.transient_skip / loop.control_period() - 1e-9));

  std::vector<Eigen::VectorXd> windows;
  std::vector<Eigen::VectorXd> targets;
  const LoopOutcome outcome =
      run_closed_loop(plant, reference, dist, loop, [&](const TickInfo& tick) {
        const Eigen::VectorXd w = buffer.push(select_channels(tick.reading, cfg.channels));
        if (tick.tick < first || (tick.tick - first) % every != 0) return;
        windows.push_back(w);
        if (cfg.target == TargetKind::state) targets.push_back(tick.state.vector());
        else targets.push_back(tick.control.moments);
      });
  if (outcome.diverged)
    throw DivergenceError(outcome.divergence_time, "generate_training_set: reference loop diverged");

  TrainingSet set;
  set.memory_depth = cfg.memory_depth;
  set.channels = cfg.channels;
  const auto n = static_cast<Eigen::Index>(windows.size());
  if (n < cfg.memory_depth + 10) throw ValidationError("generate_training_set: too few samples");
  set.raw.inputs.resize(windows.front().size(), n);
  set.raw.targets.resize(targets.front().size(), n);
  for (Eigen::Index s = 0; s < n; ++s) {
    set.raw.inputs.col(s) = windows[static_cast<std::size_t>(s)];
    set.raw.targets.col(s) = targets[static_cast<std::size_t>(s)];
  }
  set.fit_scaling();
  if (cfg.excitation.amplitude == 0.0 || set.raw.inputs.cwiseAbs().maxCoeff() == 0.0)
    set.warnings.push_back("degenerate training set: excitation produced no signal");

  auto& md = set.metadata;
  md["excitation"] = to_string(cfg.excitation.kind);
  md["amplitude"] = format_double(cfg.excitation.amplitude);
  md["frequency"] = format_double(cfg.excitation.frequency);
  if (cfg.excitation.kind == ExcitationKind::chirp) {
    md["f_start"] = format_double(cfg.excitation.f_start);
    md["f_end"] = format_double(cfg.excitation.f_end);
  }
  md["excitation_seed"] = std::to_string(cfg.excitation.seed);
  md["dt"] = format_double(cfg.dt);
  md["control_stride"] = std::to_string(cfg.control_stride);
  md["record_stride"] = std::to_string(cfg.record_stride);
  md["duration"] = format_double(cfg.duration);
  md["transient_skip"] = format_double(cfg.transient_skip);
  md["imu_seed"] = std::to_string(cfg.imu_seed);
  md["noisy_inputs"] = cfg.noisy_inputs ? "true" : "false";
  md["target"] = cfg.target == TargetKind::state ? "state" : "control";
  md["samples"] = std::to_string(n);
  return set;
}

double recommend_frequency(const LinearModel& closed_loop_model, int axis) {
  return cutoff_frequency(closed_loop_model, axis);
}

Eigen::VectorXd target_variance(const TrainingSet& set) {
  const Eigen::MatrixXd& y = set.raw.targets;
  const Eigen::VectorXd mean = y.rowwise().mean();
  return (y.colwise() - mean).array().square().rowwise().mean();
}

}  // namespace gyronn
