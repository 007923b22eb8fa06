#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gyronn/dynamics.hpp"

namespace gyronn {

enum class ExcitationKind { harmonic, chirp, random_normalized };

std::string to_string(ExcitationKind k);
ExcitationKind parse_excitation_kind(const std::string& name);

/// Scalar external-moment signal, N*m.
struct Excitation {
  ExcitationKind kind = ExcitationKind::harmonic;
  double amplitude = 0.2;
  double frequency = 4.0;   ///< harmonic, Hz
  double f_start = 0.5;     ///< chirp, Hz
  double f_end = 6.0;       ///< chirp, Hz
  double duration = 20.0;   ///< chirp sweep length, s
  double hold = kDefaultDt; ///< random_normalized hold interval, s
  std::uint64_t seed = 0;   ///< random_normalized stream

  /// amplitude >= 0 (zero is allowed and yields a degenerate signal).
  void validate() const;
};

/// harmonic:  A sin(2 pi f t)
/// chirp:     A sin(2 pi (f0 t + (f1 - f0) t^2 / (2 T)))
/// random:    A z_i, z_i ~ N(0,1) i.i.d., i = floor(t / hold)
double excitation_value(const Excitation& exc, double t);

/// Instantaneous frequency (Hz) of a chirp at time t.
double chirp_frequency(const Excitation& exc, double t);

/// External moment applied to the plant: an optional signal plus an optional
/// step, distributed over the axes by `axes`.
struct Disturbance {
  std::optional<Excitation> signal;
  double step_amplitude = 0.0;
  double step_time = 0.0;
  Vec3 axes = Vec3::UnitX();

  Vec3 value(double t) const;
};

}  // namespace gyronn
