#pragma once

#include <cstdint>

#include "gyronn/control.hpp"
#include "gyronn/excitation.hpp"
#include "gyronn/training.hpp"

namespace gyronn {

enum class TargetKind {
  state,    ///< true plant state (observer training)
  control,  ///< reference moments -P x (regulator training)
};

struct SamplingConfig {
  double duration = 20.0;
  double dt = kDefaultDt;
  int control_stride = 10;  ///< integration steps per IMU/controller tick
  int record_stride = 10;   ///< integration steps between recorded samples
  double transient_skip = 1.0;
  Excitation excitation;
  Vec3 axes = Vec3::UnitX();
  int memory_depth = 6;
  ChannelList channels = {0, 3};  // g1, a1
  ImuParams imu;
  std::uint64_t imu_seed = 0;
  bool noisy_inputs = false;
  TargetKind target = TargetKind::state;
  double saturation = kDefaultSaturation;

  void validate() const;
};

/// Runs the full-state-feedback reference loop under the excitation and
/// records (memory-unit window -> target) at every record_stride step after
/// the transient. Scaling is fitted on the recorded set. Throws
/// DivergenceError if the reference loop leaves the gimbal limits.
TrainingSet generate_training_set(const PlantParams& plant, const RegulatorGain& gain,
                                  const SamplingConfig& cfg);

/// Excitation frequency for training: the -3 dB cutoff of the closed-loop
/// moment->angle response on `axis`.
double recommend_frequency(const LinearModel& closed_loop_model, int axis = 0);

/// Variance of every target component over the set.
Eigen::VectorXd target_variance(const TrainingSet& set);

}  // namespace gyronn
