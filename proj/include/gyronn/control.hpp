#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gyronn/dynamics.hpp"
#include "gyronn/excitation.hpp"
#include "gyronn/nn.hpp"

namespace gyronn {

/// State feedback u = -P x; P is (control channels x state dimension).
struct RegulatorGain {
  Eigen::MatrixXd P;
};

inline constexpr double kDefaultSaturation = 1.0;  // N*m

/// Conjugate pairs -zeta*wn +/- j*wn*sqrt(1 - zeta^2), one pair per entry.
std::vector<std::complex<double>> damped_pole_pairs(std::span<const double> natural_freqs,
                                                    double zeta);

/// Pole placement by eigenstructure assignment. For each requested pole a
/// closed-loop eigenvector is picked from null([A - lambda I, B]): the
/// open-loop eigenvector when lambda is already an eigenvalue of A,
/// otherwise the member closest to the state axis `preferred_axis[i]`
/// (defaults to cycling over the first m states). P = -W V^-1.
///
/// Throws ValidationError for a non-conjugate-closed or non-LHP pole set,
/// NumericalError for an uncontrollable pair or a failed post-check
/// (|eig(A - BP) - poles| >= 1e-6).
RegulatorGain design_gain(const LinearModel& model,
                          const std::vector<std::complex<double>>& desired_poles);

/// Controllability matrix rank test with SVD tolerance.
bool is_controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// A - B P with the same B and C.
LinearModel closed_loop(const LinearModel& model, const RegulatorGain& gain);

/// u = -P x_hat, each component clamped to [-saturation, saturation].
Eigen::VectorXd regulator_output(const RegulatorGain& gain, const Eigen::VectorXd& x_hat,
                                 double saturation = kDefaultSaturation);

void save_gain_csv(std::ostream& out, const RegulatorGain& gain);
RegulatorGain load_gain_csv(std::istream& in);

enum class TopologyKind {
  nn_as_regulator,        ///< window -> net -> moments
  nn_as_observer_plus_p,  ///< window -> net -> x_hat -> -P x_hat
  full_state_feedback,    ///< true state -> -P x (reference)
};

std::string to_string(TopologyKind k);
TopologyKind parse_topology(const std::string& name);

struct ControlOutput {
  Vec3 moments = Vec3::Zero();
  std::optional<Vec6> x_hat;
};

/// One feedback path. Component/shape mismatches are rejected on
/// construction. Holds the memory unit, so a Controller is single-owner.
class Controller {
 public:
  static Controller full_state_feedback(RegulatorGain gain,
                                        double saturation = kDefaultSaturation);
  static Controller observer(NetworkRecord net, RegulatorGain gain,
                             double saturation = kDefaultSaturation);
  static Controller regulator(NetworkRecord net, double saturation = kDefaultSaturation);

  TopologyKind kind() const { return kind_; }
  const std::optional<NetworkRecord>& network() const { return net_; }
  const std::optional<RegulatorGain>& gain() const { return gain_; }
  double saturation() const { return saturation_; }

  /// Feeds one IMU reading to the memory unit and returns the moments.
  /// `true_state` is used only by the full-state-feedback path.
  ControlOutput step(const ImuReading& reading, const PlantState& true_state);
  /// Window fed to the network on the last step (empty before any step or
  /// for the full-state path).
  const Eigen::VectorXd& last_window() const { return window_; }
  void reset();

 private:
  Controller(TopologyKind kind, std::optional<NetworkRecord> net,
             std::optional<RegulatorGain> gain, double saturation);

  TopologyKind kind_;
  std::optional<NetworkRecord> net_;
  std::optional<RegulatorGain> gain_;
  double saturation_;
  std::optional<TappedDelayBuffer> buffer_;
  Eigen::VectorXd window_;
};

inline ControlOutput controller_step(Controller& c, const ImuReading& reading,
                                     const PlantState& true_state) {
  return c.step(reading, true_state);
}

// ---------------------------------------------------------------------------
// Closed-loop integration shared by data generation and verification.

struct LoopConfig {
  double duration = 3.0;
  double dt = kDefaultDt;
  int control_stride = 10;  ///< integration steps per control/IMU tick
  ImuParams imu;
  std::uint64_t imu_seed = 0;
  PlantState initial;
  double divergence_angle = kDivergenceAngle;

  void validate() const;
  long tick_count() const;
  double control_period() const { return dt * control_stride; }
};

struct TickInfo {
  long tick;
  double t;
  const PlantState& state;
  const ImuReading& reading;
  const ControlOutput& control;
};

struct LoopOutcome {
  bool diverged = false;
  double divergence_time = 0.0;
  long ticks = 0;
  PlantState final_state;
};

/// At each tick: sample the IMU, run the controller, report the tick, then
/// hold the moments for control_stride RK4 steps. Stops early on divergence.
LoopOutcome run_closed_loop(const PlantParams& plant, Controller& controller,
                            const Disturbance& disturbance, const LoopConfig& cfg,
                            const std::function<void(const TickInfo&)>& on_tick = {});

}  // namespace gyronn
