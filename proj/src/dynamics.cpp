#include "gyronn/dynamics.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "gyronn/errors.hpp"
#include "gyronn/keyvalue.hpp"
#include "gyronn/seeding.hpp"

namespace gyronn {
namespace {

std::string describe(const PlantState& s) {
  std::ostringstream os;
  os.precision(17);
  os << "angles=(" << s.angles.transpose() << ") rates=(" << s.rates.transpose() << ")";
  return os.str();
}

Vec6 derivative_vector(const Vec6& x, const PlantParams& p, const MomentInput& m) {
  return plant_derivative(PlantState::from_vector(x), p, m).vector();
}

}  // namespace

void PlantParams::validate() const {
  const double inertia[] = {J_xp, J_yp, J_zp, J_xi, J_yi, J_zi, J_xe, J_ye, J_ze};
  for (double j : inertia)
    if (!(j > 0.0) || !std::isfinite(j))
      throw ValidationError("plant: inertia moments must be finite and > 0");
  if (!(h >= 0.0) || !(h3 >= 0.0) || !std::isfinite(h) || !std::isfinite(h3))
    throw ValidationError("plant: damping must be finite and >= 0");
  if (!(H >= 0.0) || !std::isfinite(H))
    throw ValidationError("plant: kinetic moment H must be finite and >= 0");
}

Vec6 PlantState::vector() const {
  Vec6 v;
  v << angles, rates;
  return v;
}

PlantState PlantState::from_vector(const Vec6& v) {
  return {v.head<3>(), v.tail<3>()};
}

bool PlantState::finite() const { return angles.allFinite() && rates.allFinite(); }

void ImuParams::validate() const {
  for (int i = 0; i < kAxes; ++i)
    if (gyro_gain[i] == 0.0 || accel_gain[i] == 0.0 || !std::isfinite(gyro_gain[i]) ||
        !std::isfinite(accel_gain[i]))
      throw ValidationError("imu: gains must be finite and nonzero");
  if (!(gyro_noise_std >= 0.0) || !(accel_noise_std >= 0.0))
    throw ValidationError("imu: noise std must be >= 0");
}

void LinearModel::validate() const {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || (C.size() != 0 && C.cols() != n))
    throw DimensionError("linear model: inconsistent A/B/C dimensions");
}

ChannelList parse_channels(const std::vector<std::string>& names) {
  ChannelList out;
  for (const auto& n : names) {
    if (n.size() != 2 || (n[0] != 'g' && n[0] != 'a') || n[1] < '1' || n[1] > '3')
      throw ValidationError("unknown measurement channel '" + n + "' (expected g1..g3, a1..a3)");
    out.push_back((n[0] == 'g' ? 0 : kAxes) + (n[1] - '1'));
  }
  if (out.empty()) throw ValidationError("channel list is empty");
  return out;
}

std::string channel_name(int channel) {
  if (channel < 0 || channel >= 2 * kAxes) throw ValidationError("channel index out of range");
  return std::string(1, channel < kAxes ? 'g' : 'a') + std::to_string(channel % kAxes + 1);
}

Eigen::VectorXd select_channels(const ImuReading& reading, const ChannelList& channels) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(channels.size()));
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const int c = channels[i];
    if (c < 0 || c >= 2 * kAxes) throw ValidationError("channel index out of range");
    out[static_cast<Eigen::Index>(i)] = c < kAxes ? reading.u_g[c] : reading.u_a[c - kAxes];
  }
  return out;
}

bool is_diverged(const PlantState& state, double threshold) {
  if (!state.finite()) return true;
  return state.angles.cwiseAbs().maxCoeff() > threshold;
}

Vec3 inertia_coefficients(const PlantParams& p, const Vec3& a) {
  const double c2 = std::cos(a[1]), s2 = std::sin(a[1]);
  const double c3 = std::cos(a[2]), s3 = std::sin(a[2]);
  return {p.J_ye + p.J_yi * c2 * c2 + p.J_zi * s2 * s2 + p.J_yp * c2 * c2 * c3 * c3 +
              p.J_xp * c2 * c2 * s3 * s3,
          p.J_xi + p.J_xp * c3 * c3 + p.J_yp * s3 * s3, p.J_zp};
}

// Implemented equations (rates w = alpha', accelerations e = alpha''):
//
//   A1 e1 - c12 g e2 + h  w1 + (J_ze - J_xp) w2 w3 + H cos(a2) w2 = M1 + Mc1
//   A2 e2 - c21 g e1 + h  w2 + (J_xp - J_ye) w3 w1 - H cos(a2) w1 = M2 + Mc2
//   A3 e3 - J_ze sin(a3) e1 + h3 w3 + (J_zp - J_yi) w1 w2         = M3 + Mc3
//
// with g = cos(a2) sin(2 a2), c12 = (J_xp - J_yp)/2, c21 = (J_ye - J_xe)/2.
// Axes 1-2 form a 2x2 system; axis 3 follows by back-substitution.
PlantState plant_derivative(const PlantState& state, const PlantParams& p,
                            const MomentInput& m) {
  if (!state.finite()) throw NumericalError("plant_derivative: non-finite state " + describe(state));
  const Vec3& a = state.angles;
  const Vec3& w = state.rates;
  const Vec3 inertia = inertia_coefficients(p, a);
  const double g = std::cos(a[1]) * std::sin(2.0 * a[1]);
  const double c12 = 0.5 * (p.J_xp - p.J_yp) * g;
  const double c21 = 0.5 * (p.J_ye - p.J_xe) * g;
  const double gyro = p.H * std::cos(a[1]);

  const Vec3 total = m.external + m.control;
  const double r1 = total[0] - p.h * w[0] - (p.J_ze - p.J_xp) * w[1] * w[2] - gyro * w[1];
  const double r2 = total[1] - p.h * w[1] - (p.J_xp - p.J_ye) * w[2] * w[0] + gyro * w[0];
  const double r3 = total[2] - p.h3 * w[2] - (p.J_zp - p.J_yi) * w[0] * w[1];

  const double det = inertia[0] * inertia[1] - c12 * c21;
  if (!(std::abs(det) > 1e-12 * inertia[0] * inertia[1]))
    throw SingularMatrixError("plant_derivative: singular acceleration coefficients at " +
                              describe(state));
  PlantState d;
  d.angles = w;
  d.rates[0] = (r1 * inertia[1] + c12 * r2) / det;
  d.rates[1] = (inertia[0] * r2 + c21 * r1) / det;
  d.rates[2] = (r3 + p.J_ze * std::sin(a[2]) * d.rates[0]) / inertia[2];
  return d;
}

PlantState step_rk4(const PlantState& state, const PlantParams& params, const MomentFn& moment_fn,
                    double t, double dt, double dt_max) {
  if (!(dt > 0.0) || dt > dt_max)
    throw ValidationError("step_rk4: dt must satisfy 0 < dt <= " + std::to_string(dt_max));
  const Vec6 x = state.vector();
  const MomentInput m0 = moment_fn(t);
  const MomentInput mh = moment_fn(t + 0.5 * dt);
  const MomentInput m1 = moment_fn(t + dt);
  auto stage = [&](const Vec6& xs, const MomentInput& m) {
    if (!xs.allFinite()) throw DivergenceError(t, "step_rk4: non-finite intermediate state");
    return derivative_vector(xs, params, m);
  };
  const Vec6 k1 = stage(x, m0);
  const Vec6 k2 = stage(x + 0.5 * dt * k1, mh);
  const Vec6 k3 = stage(x + 0.5 * dt * k2, mh);
  const Vec6 k4 = stage(x + dt * k3, m1);
  const Vec6 next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw DivergenceError(t + dt, "step_rk4: non-finite state");
  return PlantState::from_vector(next);
}

Vec3 tilt_angles(const PlantState& state) { return state.angles; }

ImuReading imu_measure(const PlantState& state, const ImuParams& imu, std::uint64_t rng_seed) {
  ImuReading r;
  r.u_g = imu.gyro_gain.cwiseProduct(state.rates);
  r.u_a = imu.accel_gain.cwiseProduct(tilt_angles(state));
  if (imu.gyro_noise_std > 0.0)
    for (int i = 0; i < kAxes; ++i) r.u_g[i] += imu.gyro_noise_std * counter_normal(rng_seed, i);
  if (imu.accel_noise_std > 0.0)
    for (int i = 0; i < kAxes; ++i)
      r.u_a[i] += imu.accel_noise_std * counter_normal(rng_seed, kAxes + i);
  return r;
}

LinearModel linearize(const PlantParams& params, const PlantState& op_point,
                      const ImuParams& imu) {
  if (!op_point.finite()) throw ValidationError("linearize: non-finite operating point");
  params.validate();
  const Vec6 x0 = op_point.vector();
  const MomentInput m0{};
  LinearModel lm;
  lm.op_point = op_point;
  lm.A = Eigen::MatrixXd::Zero(kStateDim, kStateDim);
  lm.B = Eigen::MatrixXd::Zero(kStateDim, kAxes);
  // Kinematic rows are exact: angle' = rate.
  lm.A.block<3, 3>(0, 3).setIdentity();
  for (int j = 0; j < kStateDim; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(x0[j]));
    Vec6 xp = x0, xm = x0;
    xp[j] += step;
    xm[j] -= step;
    const Vec6 col = (derivative_vector(xp, params, m0) - derivative_vector(xm, params, m0)) /
                     (2.0 * step);
    lm.A.block<3, 1>(3, j) = col.tail<3>();
  }
  for (int j = 0; j < kAxes; ++j) {
    const double step = 1e-6;
    MomentInput mp, mm;
    mp.control[j] = step;
    mm.control[j] = -step;
    const Vec6 col = (derivative_vector(x0, params, mp) - derivative_vector(x0, params, mm)) /
                     (2.0 * step);
    lm.B.block<3, 1>(3, j) = col.tail<3>();
  }
  lm.C = Eigen::MatrixXd::Zero(2 * kAxes, kStateDim);
  lm.C.block<3, 3>(0, 3) = imu.gyro_gain.asDiagonal();
  lm.C.block<3, 3>(3, 0) = imu.accel_gain.asDiagonal();
  return lm;
}

double response_magnitude(const LinearModel& model, int axis, double f_hz) {
  model.validate();
  const auto n = model.A.rows();
  if (axis < 0 || axis >= model.B.cols() || axis >= n)
    throw DimensionError("response_magnitude: axis out of range");
  using Cplx = std::complex<double>;
  const double omega = 2.0 * std::numbers::pi * f_hz;
  Eigen::MatrixXcd M = -model.A.cast<Cplx>();
  M.diagonal().array() += Cplx(0.0, omega);
  const Eigen::VectorXcd rhs = model.B.col(axis).cast<Cplx>();
  const Eigen::VectorXcd x = M.partialPivLu().solve(rhs);
  return std::abs(x[axis]);
}

double cutoff_frequency(const LinearModel& model, int axis, double f_min, double f_max) {
  model.validate();
  const Eigen::VectorXcd eig = model.A.eigenvalues();
  if (eig.real().maxCoeff() >= 0.0)
    throw NumericalError("cutoff_frequency: model is not Hurwitz");
  const double dc = response_magnitude(model, axis, 0.0);
  if (!(dc > 0.0)) throw NumericalError("cutoff_frequency: zero DC gain");
  const double level = dc / std::sqrt(2.0);

  constexpr int kScan = 4000;
  const double log_lo = std::log(f_min), log_hi = std::log(f_max);
  double prev = log_lo;
  for (int i = 0; i <= kScan; ++i) {
    const double lf = log_lo + (log_hi - log_lo) * i / kScan;
    if (response_magnitude(model, axis, std::exp(lf)) < level) {
      if (i == 0) throw NumericalError("cutoff_frequency: response below -3 dB at f_min");
      double lo = prev, hi = lf;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (response_magnitude(model, axis, std::exp(mid)) < level ? hi : lo) = mid;
      }
      return std::exp(0.5 * (lo + hi));
    }
    prev = lf;
  }
  throw NumericalError("cutoff_frequency: no -3 dB crossing in the scanned band");
}

double kinetic_energy(const PlantState& state, const PlantParams& params) {
  const Vec3 inertia = inertia_coefficients(params, state.angles);
  return 0.5 * (inertia.array() * state.rates.array().square()).sum();
}

PlantParams load_plant_params(const std::string& path) {
  const auto kv = KeyValueFile::load(path);
  kv.reject_unknown({"H", "J_xp", "J_yp", "J_zp", "J_xi", "J_yi", "J_zi", "J_xe", "J_ye", "J_ze",
                     "h", "h3"});
  PlantParams p;
  p.H = kv.get_double("H");
  p.J_xp = kv.get_double("J_xp");
  p.J_yp = kv.get_double("J_yp");
  p.J_zp = kv.get_double("J_zp");
  p.J_xi = kv.get_double("J_xi");
  p.J_yi = kv.get_double("J_yi");
  p.J_zi = kv.get_double("J_zi");
  p.J_xe = kv.get_double("J_xe");
  p.J_ye = kv.get_double("J_ye");
  p.J_ze = kv.get_double("J_ze");
  p.h = kv.get_double("h");
  p.h3 = kv.get_double("h3");
  p.validate();
  return p;
}

ImuParams load_imu_params(const std::string& path) {
  const auto kv = KeyValueFile::load(path);
  kv.reject_unknown({"gyro_gain1", "gyro_gain2", "gyro_gain3", "accel_gain1", "accel_gain2",
                     "accel_gain3", "gyro_noise_std", "accel_noise_std"});
  ImuParams imu;
  for (int i = 0; i < kAxes; ++i) {
    const std::string n = std::to_string(i + 1);
    imu.gyro_gain[i] = kv.get_double_or("gyro_gain" + n, 1.0);
    imu.accel_gain[i] = kv.get_double_or("accel_gain" + n, 1.0);
  }
  imu.gyro_noise_std = kv.get_double_or("gyro_noise_std", 0.0);
  imu.accel_noise_std = kv.get_double_or("accel_noise_std", 0.0);
  imu.validate();
  return imu;
}

}  // namespace gyronn
