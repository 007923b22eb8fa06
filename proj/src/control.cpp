#include "gyronn/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "gyronn/csv.hpp"
#include "gyronn/errors.hpp"
#include "gyronn/seeding.hpp"

namespace gyronn {

using Cplx = std::complex<double>;

std::vector<Cplx> damped_pole_pairs(std::span<const double> natural_freqs, double zeta) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw ValidationError("pole pairs: damping must be in (0, 1)");
  std::vector<Cplx> poles;
  for (double wn : natural_freqs) {
    if (!(wn > 0.0)) throw ValidationError("pole pairs: natural frequency must be > 0");
    const double re = -zeta * wn, im = wn * std::sqrt(1.0 - zeta * zeta);
    poles.emplace_back(re, im);
    poles.emplace_back(re, -im);
  }
  return poles;
}

bool is_controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  // Popov-Belevitch-Hautus: rank [A - lambda I, B] = n at every eigenvalue.
  const auto n = A.rows();
  const Eigen::VectorXcd eig = A.eigenvalues();
  const double scale = std::max({1.0, A.norm(), B.norm()});
  for (Eigen::Index k = 0; k < eig.size(); ++k) {
    Eigen::MatrixXcd m(n, n + B.cols());
    m << A.cast<Cplx>() - eig[k] * Eigen::MatrixXcd::Identity(n, n), B.cast<Cplx>();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues();
    if (sv[n - 1] < 1e-9 * scale) return false;
  }
  return true;
}

namespace {

void check_pole_set(const std::vector<Cplx>& poles, Eigen::Index n) {
  if (static_cast<Eigen::Index>(poles.size()) != n)
    throw ValidationError("design_gain: need exactly " + std::to_string(n) + " poles");
  std::vector<bool> used(poles.size(), false);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    const Cplx p = poles[i];
    if (!(p.real() < 0.0)) throw ValidationError("design_gain: poles must be in the open left half-plane");
    const double tol = 1e-9 * std::max(1.0, std::abs(p));
    if (std::abs(p.imag()) <= tol || used[i]) continue;
    bool found = false;
    for (std::size_t j = 0; j < poles.size() && !found; ++j)
      if (j != i && !used[j] && std::abs(poles[j] - std::conj(p)) <= tol) {
        used[i] = used[j] = true;
        found = true;
      }
    if (!found) throw ValidationError("design_gain: pole set is not closed under conjugation");
  }
}

// Right singular vectors for the `count` smallest singular values.
Eigen::MatrixXcd null_basis(const Eigen::MatrixXcd& m, Eigen::Index count) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(count);
}

}  // namespace

RegulatorGain design_gain(const LinearModel& model, const std::vector<Cplx>& desired) {
  model.validate();
  const Eigen::MatrixXd& A = model.A;
  const Eigen::MatrixXd& B = model.B;
  const Eigen::Index n = A.rows(), m = B.cols();
  check_pole_set(desired, n);
  if (!is_controllable(A, B)) throw NumericalError("design_gain: (A, B) is not controllable");

  const double scale = std::max(1.0, A.norm());
  Eigen::MatrixXcd V(n, n), W(m, n);
  Eigen::Index col = 0, group = 0;
  std::vector<bool> done(desired.size(), false);
  for (std::size_t i = 0; i < desired.size(); ++i) {
    if (done[i]) continue;
    const Cplx lambda = desired[i];
    const bool complex_pair = std::abs(lambda.imag()) > 1e-9 * std::max(1.0, std::abs(lambda));
    Eigen::MatrixXcd shifted = A.cast<Cplx>() - lambda * Eigen::MatrixXcd::Identity(n, n);

    Eigen::VectorXcd v, w;
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(shifted).singularValues();
    if (sv[n - 1] < 1e-10 * scale) {
      // Already a mode of A: keep it, no feedback needed along it.
      v = null_basis(shifted, 1).col(0);
      w = Eigen::VectorXcd::Zero(m);
    } else {
      Eigen::MatrixXcd aug(n, n + m);
      aug << shifted, B.cast<Cplx>();
      const Eigen::MatrixXcd basis = null_basis(aug, m);
      const Eigen::MatrixXcd bv = basis.topRows(n);
      const Eigen::MatrixXcd bw = basis.bottomRows(m);
      const Eigen::VectorXcd target = Eigen::VectorXcd::Unit(n, group % n);
      Eigen::VectorXcd c = bv.completeOrthogonalDecomposition().solve(target);
      if ((bv * c).norm() < 1e-8) c = Eigen::VectorXcd::Unit(m, 0);
      v = bv * c;
      w = bw * c;
      const double norm = v.norm();
      v /= norm;
      w /= norm;
    }
    V.col(col) = v;
    W.col(col) = w;
    ++col;
    done[i] = true;
    if (complex_pair) {
      for (std::size_t j = i + 1; j < desired.size(); ++j)
        if (!done[j] && std::abs(desired[j] - std::conj(lambda)) <= 1e-9 * std::max(1.0, std::abs(lambda))) {
          done[j] = true;
          break;
        }
      V.col(col) = v.conjugate();
      W.col(col) = w.conjugate();
      ++col;
    }
    ++group;
  }

  const Eigen::VectorXd vsv = Eigen::JacobiSVD<Eigen::MatrixXcd>(V).singularValues();
  if (vsv[n - 1] < 1e-10 * vsv[0])
    throw NumericalError("design_gain: closed-loop eigenvectors are not independent");
  // P V = -W  =>  P = -W V^-1
  const Eigen::MatrixXcd Pc = -W * V.inverse();
  RegulatorGain gain{Pc.real()};

  // Post-check placement.
  const Eigen::VectorXcd got = (A - B * gain.P).eigenvalues();
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  for (const Cplx& want : desired) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_k = -1;
    for (Eigen::Index k = 0; k < n; ++k)
      if (!taken[static_cast<std::size_t>(k)] && std::abs(got[k] - want) < best) {
        best = std::abs(got[k] - want);
        best_k = k;
      }
    if (best_k < 0 || !(best < 1e-6))
      throw NumericalError("design_gain: pole placement check failed (error " +
                           std::to_string(best) + ")");
    taken[static_cast<std::size_t>(best_k)] = true;
  }
  return gain;
}

LinearModel closed_loop(const LinearModel& model, const RegulatorGain& gain) {
  model.validate();
  if (gain.P.rows() != model.B.cols() || gain.P.cols() != model.A.rows())
    throw DimensionError("closed_loop: gain shape does not match model");
  LinearModel cl = model;
  cl.A = model.A - model.B * gain.P;
  return cl;
}

Eigen::VectorXd regulator_output(const RegulatorGain& gain, const Eigen::VectorXd& x_hat,
                                 double saturation) {
  if (x_hat.size() != gain.P.cols())
    throw DimensionError("regulator_output: state estimate has " + std::to_string(x_hat.size()) +
                         " entries, gain expects " + std::to_string(gain.P.cols()));
  Eigen::VectorXd u = -(gain.P * x_hat);
  return u.cwiseMax(-saturation).cwiseMin(saturation);
}

void save_gain_csv(std::ostream& out, const RegulatorGain& gain) {
  out << "# rows=" << gain.P.rows() << " cols=" << gain.P.cols() << '\n';
  CsvWriter csv(out);
  std::vector<std::string> header;
  for (Eigen::Index c = 0; c < gain.P.cols(); ++c) header.push_back("x" + std::to_string(c + 1));
  csv.header(header);
  for (Eigen::Index r = 0; r < gain.P.rows(); ++r) {
    std::vector<std::string> row;
    for (Eigen::Index c = 0; c < gain.P.cols(); ++c) row.push_back(format_double(gain.P(r, c)));
    csv.row(row);
  }
}

RegulatorGain load_gain_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  long rows = -1, cols = -1;
  for (const auto& c : t.comments) std::sscanf(c.c_str(), "# rows=%ld cols=%ld", &rows, &cols);
  if (rows <= 0 || cols <= 0) throw ValidationError("gain csv: missing '# rows=R cols=C' comment");
  if (static_cast<long>(t.rows.size()) != rows || static_cast<long>(t.header.size()) != cols)
    throw DimensionError("gain csv: body does not match declared dimensions");
  RegulatorGain g{Eigen::MatrixXd(rows, cols)};
  for (long r = 0; r < rows; ++r) {
    if (static_cast<long>(t.rows[static_cast<std::size_t>(r)].size()) != cols)
      throw DimensionError("gain csv: ragged row");
    for (long c = 0; c < cols; ++c)
      g.P(r, c) = parse_double(t.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
  }
  if (!g.P.allFinite()) throw ValidationError("gain csv: non-finite entry");
  return g;
}

// ---------------------------------------------------------------------------
// Controller

std::string to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::nn_as_regulator: return "regulator";
    case TopologyKind::nn_as_observer_plus_p: return "observer";
    case TopologyKind::full_state_feedback: return "oracle";
  }
  return "?";
}

TopologyKind parse_topology(const std::string& name) {
  if (name == "regulator" || name == "nn_as_regulator") return TopologyKind::nn_as_regulator;
  if (name == "observer" || name == "nn_as_observer_plus_p") return TopologyKind::nn_as_observer_plus_p;
  if (name == "oracle" || name == "full_state_feedback") return TopologyKind::full_state_feedback;
  throw ValidationError("unknown topology '" + name + "'");
}

Controller::Controller(TopologyKind kind, std::optional<NetworkRecord> net,
                       std::optional<RegulatorGain> gain, double saturation)
    : kind_(kind), net_(std::move(net)), gain_(std::move(gain)), saturation_(saturation) {
  if (!(saturation_ > 0.0)) throw ValidationError("controller: saturation must be > 0");
  if (gain_ && (gain_->P.rows() != kAxes || gain_->P.cols() != kStateDim || !gain_->P.allFinite()))
    throw DimensionError("controller: gain must be a finite 3x6 matrix");
  if (net_) {
    net_->validate();
    const Eigen::Index want = kind_ == TopologyKind::nn_as_regulator ? kAxes : kStateDim;
    if (net_->net.output_width() != want)
      throw DimensionError("controller: " + to_string(kind_) + " topology needs a network with " +
                           std::to_string(want) + " outputs, got " +
                           std::to_string(net_->net.output_width()));
    buffer_.emplace(net_->memory_depth, static_cast<int>(net_->channels.size()));
  }
}

Controller Controller::full_state_feedback(RegulatorGain gain, double saturation) {
  return Controller(TopologyKind::full_state_feedback, std::nullopt, std::move(gain), saturation);
}

Controller Controller::observer(NetworkRecord net, RegulatorGain gain, double saturation) {
  return Controller(TopologyKind::nn_as_observer_plus_p, std::move(net), std::move(gain),
                    saturation);
}

Controller Controller::regulator(NetworkRecord net, double saturation) {
  return Controller(TopologyKind::nn_as_regulator, std::move(net), std::nullopt, saturation);
}

void Controller::reset() {
  if (buffer_) buffer_->reset();
  window_.resize(0);
}

ControlOutput Controller::step(const ImuReading& reading, const PlantState& true_state) {
  ControlOutput out;
  if (kind_ == TopologyKind::full_state_feedback) {
    out.moments = regulator_output(*gain_, true_state.vector(), saturation_);
    return out;
  }
  window_ = buffer_->push(select_channels(reading, net_->channels));
  const Eigen::VectorXd y = net_->evaluate(window_);
  if (kind_ == TopologyKind::nn_as_observer_plus_p) {
    out.x_hat = Vec6(y);
    out.moments = regulator_output(*gain_, y, saturation_);
  } else {
    out.moments = y.cwiseMax(-saturation_).cwiseMin(saturation_);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loop

void LoopConfig::validate() const {
  if (!(dt > 0.0)) throw ValidationError("loop: dt must be > 0");
  if (control_stride < 1) throw ValidationError("loop: control_stride must be >= 1");
  if (!(duration > 0.0)) throw ValidationError("loop: duration must be > 0");
  if (tick_count() < 1) throw ValidationError("loop: duration shorter than one control period");
  if (!(divergence_angle > 0.0)) throw ValidationError("loop: divergence angle must be > 0");
  imu.validate();
}

long LoopConfig::tick_count() const { return std::lround(duration / control_period()); }

LoopOutcome run_closed_loop(const PlantParams& plant, Controller& controller,
                            const Disturbance& disturbance, const LoopConfig& cfg,
                            const std::function<void(const TickInfo&)>& on_tick) {
  cfg.validate();
  plant.validate();
  controller.reset();
  LoopOutcome outcome;
  PlantState x = cfg.initial;
  const long ticks = cfg.tick_count();
  const double period = cfg.control_period();
  const double max_step = std::max(cfg.dt, kDefaultMaxDt);
  for (long tick = 0; tick < ticks; ++tick) {
    const double t = static_cast<double>(tick) * period;
    const ImuReading reading =
        imu_measure(x, cfg.imu, derive_seed(cfg.imu_seed, "imu", static_cast<std::uint64_t>(tick)));
    const ControlOutput u = controller.step(reading, x);
    if (on_tick) on_tick(TickInfo{tick, t, x, reading, u});
    outcome.ticks = tick + 1;
    const MomentFn moments = [&](double tau) { return MomentInput{disturbance.value(tau), u.moments}; };
    for (int s = 0; s < cfg.control_stride; ++s) {
      const double ts = t + s * cfg.dt;
      try {
        x = step_rk4(x, plant, moments, ts, cfg.dt, max_step);
      } catch (const DivergenceError& e) {
        outcome.diverged = true;
        outcome.divergence_time = e.time();
        outcome.final_state = x;
        return outcome;
      }
      if (is_diverged(x, cfg.divergence_angle)) {
        outcome.diverged = true;
        outcome.divergence_time = ts + cfg.dt;
        outcome.final_state = x;
        return outcome;
      }
    }
  }
  outcome.final_state = x;
  return outcome;
}

}  // namespace gyronn
