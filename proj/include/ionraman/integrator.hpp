// integrator.hpp - fixed-step RK4 propagation of density matrices

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ionraman/lindblad.hpp"
#include "ionraman/observables.hpp"

namespace ionraman {

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A monitored quantity left its allowed band during integration.
class MonitorError : public Error {
 public:
  MonitorError(std::string monitor, double time, double value)
      : Error(format(monitor, time, value)), monitor_(std::move(monitor)), time_(time), value_(value) {}
  const std::string& monitor() const { return monitor_; }
  double time() const { return time_; }
  double value() const { return value_; }

 private:
  static std::string format(const std::string& monitor, double time, double value) {
    std::ostringstream os;
    os.precision(6);
    os << "monitor '" << monitor << "' violated at t = " << time << " s (value " << value << ")";
    return os.str();
  }
  std::string monitor_;
  double time_;
  double value_;
};

struct Monitors {
  bool trace = true;
  bool hermiticity = true;
  bool min_eigenvalue = true;
  double trace_limit = 1e-6;           ///< abort when |Tr rho - 1| exceeds this
  double min_eigenvalue_limit = -1e-6;  ///< abort when the smallest eigenvalue drops below this
};

struct IntegrationPlan {
  double t_max = 0.0;
  double dt = 0.0;
  int sample_stride = 1;
  Monitors monitors;

  std::int64_t steps() const {
    return static_cast<std::int64_t>(std::ceil(t_max / dt - 1e-9));
  }

  /// Step-size invariants, including the guard dt * fastest_rate < 0.1.
  void validate(double fastest_rate) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("plan: dt must be > 0");
    if (!(t_max >= dt) || !std::isfinite(t_max)) throw ParameterError("plan: dt must not exceed t_max");
    if (sample_stride < 1) throw ParameterError("plan: sample_stride must be >= 1");
    if (dt * fastest_rate >= 0.1) {
      std::ostringstream os;
      os << "plan: step guard violated, dt * fastest_rate = " << dt * fastest_rate << " (must be < 0.1)";
      throw ParameterError(os.str());
    }
  }
};

struct Sample {
  double p_down = 0.0;
  Complex coherence{};
  double n_mean = 0.0;
  double trace = 0.0;
  double min_eig = std::numeric_limits<double>::quiet_NaN();
  double herm_dev = 0.0;
};

/// Extremes of the monitored quantities over a run.
struct MonitorSummary {
  double max_trace_drift = 0.0;
  double max_herm_dev = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Sample> samples;
  MonitorSummary monitors;
  std::map<std::string, std::string> metadata;

  std::vector<double> p_down() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.p_down);
    return out;
  }
};

/// Classical fourth-order Runge-Kutta with preallocated stage buffers.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(const MasterEquation& me) : me_(me) {}

  /// Advances a Hermitian rho in place by dt. No renormalization.
  void step(Operator& rho, double t, double dt) {
    me_.rhs_hermitian_into(rho, k1_, work_);
    stage_ = rho + (0.5 * dt) * k1_;
    me_.rhs_hermitian_into(stage_, k2_, work_);
    stage_ = rho + (0.5 * dt) * k2_;
    me_.rhs_hermitian_into(stage_, k3_, work_);
    stage_ = rho + dt * k3_;
    me_.rhs_hermitian_into(stage_, k4_, work_);
    rho += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    if (!rho.allFinite()) {
      std::ostringstream os;
      os << "step_rk4: non-finite density matrix after step at t = " << t << " s with dt = " << dt << " s";
      throw NumericalError(os.str());
    }
  }

 private:
  const MasterEquation& me_;
  Operator k1_, k2_, k3_, k4_, stage_, work_;
};

inline Operator step_rk4(const MasterEquation& me, const Operator& rho, double t, double dt) {
  Operator out = rho;
  Rk4Stepper(me).step(out, t, dt);
  return out;
}

inline Sample observe(const Operator& rho, const SystemSpace& space, bool with_min_eig) {
  Sample s;
  s.p_down = p_down(rho, space);
  s.coherence = coherence_01(rho, space);
  s.n_mean = mean_phonon(rho, space);
  s.trace = rho.trace().real();
  s.herm_dev = hermiticity_deviation(rho);
  if (with_min_eig) s.min_eig = min_eigenvalue(rho);
  return s;
}

/// Fixed-step march from rho0, recording observables at step 0, every
/// sample_stride steps and at the final step. `space` tells the observables
/// how rho is laid out.
inline Trajectory integrate(const MasterEquation& me, const Operator& rho0, const IntegrationPlan& plan,
                            const SystemSpace& space) {
  if (me.dim() != space.dim()) throw DimensionError("integrate: master equation and space dimensions differ");
  check_density(rho0, 1e-10);
  plan.validate(me.fastest_rate());

  Trajectory traj;
  const std::int64_t steps = plan.steps();
  const std::int64_t expected = steps / plan.sample_stride + 2;
  traj.times.reserve(static_cast<std::size_t>(expected));
  traj.samples.reserve(static_cast<std::size_t>(expected));

  auto record = [&](const Operator& rho, double t) {
    Sample s = observe(rho, space, plan.monitors.min_eigenvalue);
    const double drift = std::abs(s.trace - 1.0);
    traj.monitors.max_trace_drift = std::max(traj.monitors.max_trace_drift, drift);
    traj.monitors.max_herm_dev = std::max(traj.monitors.max_herm_dev, s.herm_dev);
    if (plan.monitors.min_eigenvalue) traj.monitors.min_eigenvalue = std::min(traj.monitors.min_eigenvalue, s.min_eig);
    if (plan.monitors.trace && drift > plan.monitors.trace_limit) throw MonitorError("trace", t, s.trace);
    if (plan.monitors.min_eigenvalue && s.min_eig < plan.monitors.min_eigenvalue_limit) {
      throw MonitorError("min_eigenvalue", t, s.min_eig);
    }
    traj.times.push_back(t);
    traj.samples.push_back(s);
  };

  Operator rho = rho0;
  Rk4Stepper stepper(me);
  record(rho, 0.0);
  for (std::int64_t k = 1; k <= steps; ++k) {
    stepper.step(rho, static_cast<double>(k - 1) * plan.dt, plan.dt);
    if (k % plan.sample_stride == 0 || k == steps) record(rho, static_cast<double>(k) * plan.dt);
  }
  return traj;
}

/// Propagates without recording; returns the final density matrix.
inline Operator propagate(const MasterEquation& me, const Operator& rho0, double dt, std::int64_t steps) {
  Operator rho = rho0;
  Rk4Stepper stepper(me);
  for (std::int64_t k = 0; k < steps; ++k) stepper.step(rho, static_cast<double>(k) * dt, dt);
  return rho;
}

}  // namespace ionraman
