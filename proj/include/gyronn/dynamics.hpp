#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gyronn {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

inline constexpr int kStateDim = 6;
inline constexpr int kAxes = 3;

/// Mechanical parameters of one stabilization channel (three nested bodies:
/// platform, inner frame, outer frame, plus the gyro unit).
struct PlantParams {
  double H = 0.0;  ///< kinetic moment of the gyro unit, N*m*s
  double J_xp = 0.0, J_yp = 0.0, J_zp = 0.0;  ///< platform, kg*m^2
  double J_xi = 0.0, J_yi = 0.0, J_zi = 0.0;  ///< inner frame
  double J_xe = 0.0, J_ye = 0.0, J_ze = 0.0;  ///< outer frame
  double h = 0.0;   ///< damping of axes 1 and 2, N*m*s/rad
  double h3 = 0.0;  ///< damping of axis 3

  /// Throws ValidationError on non-positive inertia, negative damping or H.
  void validate() const;
};

/// Angles (rad) and rates (rad/s). The same layout is used for derivatives:
/// `angles` then holds angular rates and `rates` holds accelerations.
struct PlantState {
  Vec3 angles = Vec3::Zero();
  Vec3 rates = Vec3::Zero();

  Vec6 vector() const;
  static PlantState from_vector(const Vec6& v);
  bool finite() const;
};

struct MomentInput {
  Vec3 external = Vec3::Zero();
  Vec3 control = Vec3::Zero();
};

struct ImuParams {
  Vec3 gyro_gain = Vec3::Ones();   ///< V*s/rad
  Vec3 accel_gain = Vec3::Ones();  ///< V/rad
  double gyro_noise_std = 0.0;
  double accel_noise_std = 0.0;

  void validate() const;
};

struct ImuReading {
  Vec3 u_g = Vec3::Zero();
  Vec3 u_a = Vec3::Zero();
};

/// Measurement channels index the stacked reading [u_g; u_a]:
/// 0..2 are gyro axes "g1".."g3", 3..5 accelerometer axes "a1".."a3".
using ChannelList = std::vector<int>;

ChannelList parse_channels(const std::vector<std::string>& names);
std::string channel_name(int channel);
Eigen::VectorXd select_channels(const ImuReading& reading, const ChannelList& channels);

/// x' = A x + B u, y = C x around `op_point`. Inputs u are the control
/// moments; outputs y are [u_g; u_a] without noise.
struct LinearModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  PlantState op_point;

  void validate() const;
};

/// Gimbal limit; past it a run is classified as unstable.
inline constexpr double kDivergenceAngle = std::numbers::pi / 2.0;
inline constexpr double kDefaultDt = 1e-4;
inline constexpr double kDefaultMaxDt = 1e-2;

/// True when the state is non-finite or any |angle| exceeds `threshold`.
bool is_diverged(const PlantState& state, double threshold = kDivergenceAngle);

/// Coefficients A1, A2, A3 of the angular accelerations at a configuration.
Vec3 inertia_coefficients(const PlantParams& p, const Vec3& angles);

/// Right-hand side of the plant equations solved for the accelerations.
/// See docs/dynamics.md for the implemented form of the equations.
PlantState plant_derivative(const PlantState& state, const PlantParams& params,
                            const MomentInput& moments);

using MomentFn = std::function<MomentInput(double)>;

/// One classical Runge-Kutta step of size dt starting at time t.
PlantState step_rk4(const PlantState& state, const PlantParams& params,
                    const MomentFn& moment_fn, double t, double dt,
                    double dt_max = kDefaultMaxDt);

/// Tilt of the platform w.r.t. the horizon; equal to the pumping angles.
Vec3 tilt_angles(const PlantState& state);

ImuReading imu_measure(const PlantState& state, const ImuParams& imu, std::uint64_t rng_seed);

/// Central finite-difference linearization of plant_derivative.
LinearModel linearize(const PlantParams& params, const PlantState& op_point,
                      const ImuParams& imu = {});

/// Magnitude of the transfer function from input `axis` (column of B) to
/// state `axis` of a stable model, at frequency f in Hz.
double response_magnitude(const LinearModel& model, int axis, double f_hz);

/// -3 dB frequency (Hz, relative to DC gain) of the moment->angle response of
/// an already closed-loop model. Throws NumericalError if no crossing exists
/// in [f_min, f_max] or the model is not Hurwitz.
double cutoff_frequency(const LinearModel& model, int axis, double f_min = 1e-3,
                        double f_max = 1e3);

/// Quadratic form 0.5 * sum A_i(angles) * rate_i^2.
double kinetic_energy(const PlantState& state, const PlantParams& params);

PlantParams load_plant_params(const std::string& path);
ImuParams load_imu_params(const std::string& path);

}  // namespace gyronn
