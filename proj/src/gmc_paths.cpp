#include <cmath>
#include <deque>

#include "liouville/errors.hpp"
#include "liouville/gmc.hpp"

namespace liouville {

double BesselDriftPath::step(double dt, RngStream& rng) {
  const double sd = std::sqrt(dt);
  p_[0] += nu_ * dt + sd * rng.normal();
  p_[1] += sd * rng.normal();
  p_[2] += sd * rng.normal();
  return value();
}

double BesselDriftPath::value() const { return -std::sqrt(p_[0] * p_[0] + p_[1] * p_[1] + p_[2] * p_[2]); }

CothEulerPath::CothEulerPath(double nu, double dt) : nu_(nu), dt_(dt), x_(std::sqrt(dt)) {}

double CothEulerPath::step(double ds, RngStream& rng) {
  const int n = std::max(1, int(std::ceil(ds / dt_ - 1e-9)));
  const double h = ds / n, sh = std::sqrt(h);
  for (int k = 0; k < n; ++k) {
    const double drift = nu_ / std::tanh(nu_ * x_) * h;
    double y;
    int tries = 0;
    do {
      y = x_ + drift + sh * rng.normal();
      if (++tries > 10000) throw PrecisionError("conditioned path: step rejection did not terminate");
    } while (y <= 0.0);
    x_ = y;
  }
  return -x_;
}

namespace {
void check_nu(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw BoundsError("conditioned path: need nu > 0");
}

template <class Stepper>
ConditionedPath two_sided(double nu, double horizon, double dt, RngStream& rng, Stepper make) {
  check_nu(nu);
  if (!(horizon > 0.0)) throw BoundsError("conditioned path: need horizon > 0");
  const long n = long(std::ceil(horizon / dt - 1e-9));
  ConditionedPath p;
  p.nu = nu;
  p.s.resize(2 * n + 1);
  p.values.resize(2 * n + 1);
  for (long k = -n; k <= n; ++k) p.s[k + n] = k * dt;
  p.values[n] = 0.0;
  for (int side = 0; side < 2; ++side) {
    auto st = make();
    const long dir = side == 0 ? 1 : -1;
    for (long k = 1; k <= n; ++k) p.values[n + dir * k] = st.step(dt, rng);
  }
  return p;
}
}  // namespace

ConditionedPath sample_conditioned_bm(double nu, double horizon, double dt, RngStream& rng) {
  check_nu(nu);
  if (!(dt > 0.0) || dt > 1e-3 * std::min(1.0, 1.0 / (nu * nu)) * (1 + 1e-12))
    throw BoundsError("conditioned path: need dt <= 1e-3 min(1, 1/nu^2)");
  return two_sided(nu, horizon, dt, rng, [&] { return CothEulerPath(nu, dt); });
}

ConditionedPath sample_conditioned_bm_exact(double nu, double horizon, double dt, RngStream& rng) {
  if (!(dt > 0.0)) throw BoundsError("conditioned path: need dt > 0");
  return two_sided(nu, horizon, dt, rng, [&] { return BesselDriftPath(nu); });
}

std::vector<double> williams_post_max_path(double nu, double length, double dt, RngStream& rng) {
  check_nu(nu);
  const long need = long(std::ceil(length / dt - 1e-9)) + 1;
  // Once the path sits this far below its running maximum, a new maximum has
  // probability exp(-2 nu gap) < 1e-12.
  const double gap = 14.0 / nu;
  const double sd = std::sqrt(dt);
  std::deque<double> tail{0.0};
  double x = 0.0, mx = 0.0;
  for (;;) {
    x += -nu * dt + sd * rng.normal();
    if (x > mx) {
      mx = x;
      tail.clear();
    }
    tail.push_back(x);
    if (long(tail.size()) >= need && x < mx - gap) break;
  }
  // tail[0] is the running maximum (the starting point if none was exceeded).
  std::vector<double> out(need);
  for (long k = 0; k < need; ++k) out[k] = tail[k] - mx;
  return out;
}

double sample_max_drifted_bm(double nu, RngStream& rng) {
  check_nu(nu);
  return -std::log(rng.uniform()) / (2.0 * nu);
}

}  // namespace liouville
