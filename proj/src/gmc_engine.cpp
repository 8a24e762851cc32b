#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include <gsl/gsl_integration.h>
#include <json.hpp>

#include "liouville/engine.hpp"
#include "liouville/errors.hpp"
#include "liouville/lateral.hpp"

namespace liouville {

using nlohmann::json;
using cplx = std::complex<double>;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GLRule {
  std::vector<double> x, w;  // on [0, 1]
};

const GLRule& gl_rule(int n) {
  static std::mutex mu;
  static std::map<int, GLRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GLRule r;
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
  for (int i = 0; i < n; ++i) {
    double xi, wi;
    gsl_integration_glfixed_point(0.0, 1.0, i, &xi, &wi, t);
    r.x.push_back(xi);
    r.w.push_back(wi);
  }
  gsl_integration_glfixed_table_free(t);
  return cache.emplace(n, std::move(r)).first->second;
}

struct LogAcc {
  double m = -kInf, s = 0.0;
  void add(double l) {
    if (l == -kInf) return;
    if (l <= m) {
      s += std::exp(l - m);
    } else {
      s = s * std::exp(m - l) + 1.0;
      m = l;
    }
  }
  double value() const { return m == -kInf ? -kInf : m + std::log(s); }
};

// ln int_a^b e^{k u} du
double log_int_exp(double k, double a, double b) {
  const double h = b - a;
  if (std::abs(k * h) < 1e-10) return std::log(h) + k * 0.5 * (a + b);
  if (k > 0) return k * b + std::log(-std::expm1(-k * h) / k);
  return k * a + std::log(-std::expm1(k * h) / -k);
}

cplx expm1c(cplx w) {
  if (std::abs(w) < 1e-2)
    return w * (1.0 + w / 2.0 * (1.0 + w / 3.0 * (1.0 + w / 4.0 * (1.0 + w / 5.0 * (1.0 + w / 6.0)))));
  return std::exp(w) - 1.0;
}

double wrap_near(double t, double ref) { return t + 2.0 * M_PI * std::round((ref - t) / (2.0 * M_PI)); }

// Effective envelope drop: a drifted maximum is re-reached from `drop` below with probability exp(-2 nu drop / gamma).
double effective_drop(double drop, double gamma, double nu) { return std::max(drop, gamma * drop / (2.0 * nu)); }

// sum_j w_j e^{g y_j} (w may be null for unit weights), returned as a log.
double log_row_sum(const double* w, const double* y, int n, double g) {
  double s = 0.0;
  if (w) {
    for (int j = 0; j < n; ++j)
      if (w[j] > 0.0) s += w[j] * std::exp(g * y[j]);
  } else {
    for (int j = 0; j < n; ++j) s += std::exp(g * y[j]);
  }
  return s > 0.0 ? std::log(s) : -kInf;
}

double dirichlet_variance(double u, int m) {
  double v = 0.0;
  for (int k = m; k >= 1; --k) v += -std::expm1(-2.0 * k * u) / k;
  return v;
}

}  // namespace

// ---------------------------------------------------------------- kernel

double KernelSpec::log_fw(double s, double theta) const {
  const cplx x = std::exp(cplx(-s, theta));
  const double total = alpha_zero + alpha_inf + [&] {
    double t = 0.0;
    for (const auto& p : points) t += p.weight;
    return t;
  }();
  double v = gamma * total * std::max(-s, 0.0) + gamma * alpha_zero * s - 2.0 * std::abs(s);
  for (const auto& p : points)
    if (p.weight != 0.0) v -= gamma * p.weight * std::log(std::abs(x - p.z));
  return v;
}

double KernelSpec::log_fw_near(int k, double ds, double dth) const {
  const auto& pk = points.at(k);
  const double s = -std::log(std::abs(pk.z)) + ds;
  const double theta = std::arg(pk.z) + dth;
  const cplx x = std::exp(cplx(-s, theta));
  double total = alpha_zero + alpha_inf;
  for (const auto& p : points) total += p.weight;
  double v = gamma * total * std::max(-s, 0.0) + gamma * alpha_zero * s - 2.0 * std::abs(s);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.weight == 0.0) continue;
    const double d = int(i) == k ? std::abs(pk.z) * std::abs(expm1c(cplx(-ds, dth))) : std::abs(x - p.z);
    v -= gamma * p.weight * std::log(d);
  }
  return v;
}

void KernelSpec::validate() const {
  if (!(gamma > 0.0 && gamma < 2.0)) throw BoundsError("kernel: need 0 < gamma < 2");
  const double q = Q();
  if (!std::isfinite(alpha_zero) || !std::isfinite(alpha_inf)) throw BoundsError("kernel: weights must be finite");
  if (!(alpha_inf < q)) throw BoundsError("kernel: weight at infinity must be < Q");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(std::abs(p.z) > 0.0) || !std::isfinite(std::abs(p.z))) throw BoundsError("kernel: insertion points must be finite and non-zero");
    if (!(p.weight < q)) throw BoundsError("kernel: insertion weights must be < Q");
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(points[j].z - p.z) < 1e-12) throw BoundsError("kernel: insertion points must be distinct");
  }
}

std::string KernelSpec::to_json() const {
  json pts = json::array();
  for (const auto& p : points) pts.push_back({p.z.real(), p.z.imag(), p.weight});
  return json{{"gamma", gamma}, {"alpha_zero", alpha_zero}, {"alpha_inf", alpha_inf}, {"points", pts}}.dump();
}

void EngineConfig::validate() const {
  if (n_modes < 1 || 2 * n_modes >= n_theta || n_theta % 2) throw BoundsError("engine: need n_theta > 2 n_modes, n_theta even");
  if (!(ds > 0.0)) throw BoundsError("engine: ds must be positive");
  if (band_levels < 0 || band_levels > 6) throw BoundsError("engine: band_levels must be in [0, 6]");
  if (!(band_halfwidth > 0.0)) throw BoundsError("engine: band_halfwidth must be positive");
  if (!(ball_radius > 0.0) || ball_modes < 1 || 2 * ball_modes >= ball_ntheta || ball_ntheta % 2)
    throw BoundsError("engine: invalid local disk parameters");
  if (!(envelope_drop > 0.0) || !(s_cap > 0.0)) throw BoundsError("engine: envelope_drop and s_cap must be positive");
}

std::string EngineConfig::to_json() const {
  return json{{"n_modes", n_modes},
              {"n_theta", n_theta},
              {"ds", ds},
              {"band_levels", band_levels},
              {"band_halfwidth", band_halfwidth},
              {"ball_radius", ball_radius},
              {"ball_modes", ball_modes},
              {"ball_ntheta", ball_ntheta},
              {"envelope_drop", envelope_drop},
              {"s_cap", s_cap}}
      .dump();
}

EngineConfig EngineConfig::from_grid(const CylinderGrid& g) {
  g.validate();
  EngineConfig c;
  c.n_modes = g.n_modes;
  c.n_theta = g.n_theta;
  c.ds = g.ds();
  c.band_levels = std::max(g.max_levels(), 0);
  c.s_cap = std::max(-g.s_min, g.s_max) * 50.0;
  return c;
}

// ---------------------------------------------------------------- cylinder integrator

struct CylinderIntegrator::Row {
  double s0 = 0.0, s1 = 0.0, mid = 0.0;  // |s| (or u) range
  int n_theta = 0, n_modes = 0;
  double logc = 0.0;      // log scale minus normalization at the row midpoint
  std::vector<double> w;  // relative cell weights (already carrying any per-cell normalization)
  double log_w = -kInf;   // log of the un-normalized row integral
};

struct CylinderIntegrator::Ball {
  int point = 0;
  double s0 = 0.0, th0 = 0.0, R = 0.0, a = 0.0;
  int K = 0, M = 0;
  double du = 0.0;
  std::vector<double> probe_s, probe_th;
  std::vector<int> probe_side;
  Eigen::MatrixXd T;  // trace projection: (2M+1) x K
  double var_c0 = 0.0;
  double log_g0 = 0.0;
  double H = 0.0;
  std::vector<Row> rows;
};

namespace {

struct Event {
  double pos;
  int kind;  // 0: band row, 1: probe
  int idx, sub;
};

}  // namespace

CylinderIntegrator::CylinderIntegrator(const KernelSpec& kernel, const EngineConfig& cfg, std::vector<double> checkpoints)
    : kernel_(kernel), cfg_(cfg) {
  kernel_.validate();
  cfg_.validate();
  const double q = kernel_.Q();
  if (checkpoints.empty() && !(kernel_.alpha_zero < q)) throw BoundsError("kernel: weight at zero must be < Q");
  const int f = 1 << cfg_.band_levels;
  const int nc = std::max(1, int(std::ceil(cfg_.band_halfwidth / cfg_.ds - 1e-9)));
  s_band_ = nc * cfg_.ds;
  ds_band_ = cfg_.ds / f;
  n_band_rows_ = nc * f;
  nth_band_ = cfg_.n_theta * f;
  nm_band_ = cfg_.n_modes * f;
  s_tab_ = s_band_ + std::ceil((40.0 - s_band_) / cfg_.ds) * cfg_.ds;
  for (double c : checkpoints) {
    if (!(c > s_band_)) throw BoundsError("engine: checkpoints must lie beyond the refined band");
    checkpoints_.push_back(s_band_ + std::round((c - s_band_) / cfg_.ds) * cfg_.ds);
  }
  std::sort(checkpoints_.begin(), checkpoints_.end());
  build_balls();
  build_rows();
}

CylinderIntegrator::~CylinderIntegrator() = default;

namespace {

// Integral of exp(f - ref) over [s0,s1] x [t0,t1] minus the disk of radius R at (cs,ct).
template <class F>
double rect_minus_disk(F&& f, double ref, double s0, double s1, double t0, double t1, double cs, double ct, double R, int n) {
  const auto& g = gl_rule(n);
  double total = 0.0;
  auto theta_line = [&](double s, double wt) {
    double acc = 0.0;
    auto seg = [&](double a, double b) {
      if (!(b > a)) return;
      for (int i = 0; i < n; ++i) {
        const double t = a + (b - a) * g.x[i];
        acc += g.w[i] * (b - a) * std::exp(f(s, t) - ref);
      }
    };
    const double d = s - cs;
    if (std::abs(d) < R) {
      const double h = std::sqrt(R * R - d * d);
      seg(t0, std::min(t1, ct - h));
      seg(std::max(t0, ct + h), t1);
    } else {
      seg(t0, t1);
    }
    total += wt * acc;
  };
  // outside the disk span: plain s nodes; inside: s = cs - R cos(phi) keeps the chord length smooth
  auto plain = [&](double a, double b) {
    if (!(b > a)) return;
    for (int i = 0; i < n; ++i) theta_line(a + (b - a) * g.x[i], g.w[i] * (b - a));
  };
  plain(s0, std::min(s1, cs - R));
  plain(std::max(s0, cs + R), s1);
  const double a = std::max(s0, cs - R), b = std::min(s1, cs + R);
  if (b > a) {
    const double pa = std::acos(std::clamp((cs - a) / R, -1.0, 1.0));
    const double pb = std::acos(std::clamp((cs - b) / R, -1.0, 1.0));
    for (int i = 0; i < n; ++i) {
      const double ph = pa + (pb - pa) * g.x[i];
      theta_line(cs - R * std::cos(ph), g.w[i] * (pb - pa) * R * std::sin(ph));
    }
  }
  return total;
}

template <class F>
double rect_gl(F&& f, double ref, double s0, double s1, double t0, double t1, int n, int sub) {
  const auto& g = gl_rule(n);
  double total = 0.0;
  const double hs = (s1 - s0) / sub, ht = (t1 - t0) / sub;
  for (int a = 0; a < sub; ++a)
    for (int b = 0; b < sub; ++b)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double s = s0 + hs * (a + g.x[i]), t = t0 + ht * (b + g.x[j]);
          total += g.w[i] * g.w[j] * std::exp(f(s, t) - ref);
        }
  return total * hs * ht;
}

}  // namespace

void CylinderIntegrator::build_balls() {
  const double q = kernel_.Q();
  for (std::size_t k = 0; k < kernel_.points.size(); ++k) {
    const auto& p = kernel_.points[k];
    if (!(p.weight > 0.0)) continue;
    Ball b;
    b.point = int(k);
    b.s0 = -std::log(std::abs(p.z));
    b.th0 = std::arg(p.z);
    b.R = cfg_.ball_radius;
    b.a = p.weight;
    b.K = cfg_.ball_ntheta;
    b.M = cfg_.ball_modes;
    b.du = 2.0 * M_PI / b.K;
    if (std::abs(b.s0) + b.R + ds_band_ > s_band_)
      throw BoundsError("engine: positive-weight insertions must sit inside the refined band");
    if (b.a >= q) throw BoundsError("engine: insertion weight must be < Q");
    const double dphi = 2.0 * M_PI / b.K;
    for (int j = 0; j < b.K; ++j) {
      const double ph = (j + 0.5) * dphi;
      const double s = b.s0 + b.R * std::cos(ph);
      b.probe_s.push_back(s);
      b.probe_th.push_back(b.th0 + b.R * std::sin(ph));
      b.probe_side.push_back(s >= 0.0 ? 0 : 1);
    }
    // probe covariance of the band field
    Eigen::MatrixXd cov(b.K, b.K);
    for (int i = 0; i < b.K; ++i)
      for (int j = 0; j <= i; ++j) {
        const double si = b.probe_s[i], sj = b.probe_s[j];
        double c = (si >= 0) == (sj >= 0) ? std::min(std::abs(si), std::abs(sj)) : 0.0;
        const double e = std::exp(-std::abs(si - sj)), dt = b.probe_th[i] - b.probe_th[j];
        double en = 1.0;
        for (int n = 1; n <= nm_band_; ++n) {
          en *= e;
          c += en * std::cos(n * dt) / n;
        }
        cov(i, j) = cov(j, i) = c;
      }
    b.T.resize(2 * b.M + 1, b.K);
    for (int j = 0; j < b.K; ++j) {
      const double ph = (j + 0.5) * dphi;
      b.T(0, j) = 1.0 / b.K;
      for (int m = 1; m <= b.M; ++m) {
        b.T(2 * m - 1, j) = 2.0 / b.K * std::cos(m * ph);
        b.T(2 * m, j) = 2.0 / b.K * std::sin(m * ph);
      }
    }
    const Eigen::MatrixXd str = b.T * cov * b.T.transpose();
    b.var_c0 = str(0, 0);
    b.H = harmonic(b.M);
    const double ga = kernel_.gamma * b.a;
    {
      const double r = 1e-12;
      b.log_g0 = 0.5 * (kernel_.log_fw_near(b.point, r, 0.0) + kernel_.log_fw_near(b.point, -r, 0.0)) + ga * std::log(r);
    }
    const double u_tab = std::log(b.R / 1e-10);
    const int n_tab = int(std::ceil(u_tab / b.du));
    const double g2 = 0.5 * kernel_.gamma * kernel_.gamma;
    Eigen::VectorXd v(2 * b.M + 1);
    for (int k2 = 0; k2 < n_tab; ++k2) {
      Row row;
      row.s0 = k2 * b.du;
      row.s1 = row.s0 + b.du;
      row.mid = row.s0 + 0.5 * b.du;
      row.n_theta = b.K;
      row.n_modes = b.M;
      const double ref = kernel_.log_fw_near(b.point, b.R * std::exp(-row.mid), 0.0) + std::log(b.R * b.R) - 2.0 * row.mid;
      auto f = [&](double u, double ph) {
        const double r = b.R * std::exp(-u);
        return kernel_.log_fw_near(b.point, r * std::cos(ph), r * std::sin(ph)) + 2.0 * std::log(r);
      };
      std::vector<double> W(b.K);
      double wmax = 0.0, wsum = 0.0;
      for (int j = 0; j < b.K; ++j) {
        W[j] = rect_gl(f, ref, row.s0, row.s1, j * dphi, (j + 1) * dphi, 4, 1);
        wsum += W[j];
        const double ph = (j + 0.5) * dphi;
        v(0) = 1.0;
        for (int m = 1; m <= b.M; ++m) {
          const double e = std::exp(-m * row.mid);
          v(2 * m - 1) = e * std::cos(m * ph);
          v(2 * m) = e * std::sin(m * ph);
        }
        const double vt = v.dot(str * v);
        W[j] *= std::exp(-g2 * (vt - b.var_c0));
        wmax = std::max(wmax, W[j]);
      }
      row.log_w = ref + std::log(wsum);
      for (double& x : W) x /= wmax;
      row.w = std::move(W);
      row.logc = ref + std::log(wmax) - g2 * (b.var_c0 + row.mid + dirichlet_variance(row.mid, b.M));
      b.rows.push_back(std::move(row));
    }
    balls_.push_back(std::move(b));
  }
}

void CylinderIntegrator::build_rows() {
  const double g2 = 0.5 * kernel_.gamma * kernel_.gamma;
  auto fill = [&](int side, double a0, double a1, int nth, int nm) {
    Row row;
    row.s0 = a0;
    row.s1 = a1;
    row.mid = 0.5 * (a0 + a1);
    row.n_theta = nth;
    row.n_modes = nm;
    const double sg = side == 0 ? 1.0 : -1.0;
    const double lo = side == 0 ? a0 : -a1, hi = side == 0 ? a1 : -a0;
    const double dth = 2.0 * M_PI / nth, h = std::max(a1 - a0, dth);
    auto f = [&](double s, double t) { return kernel_.log_fw(s, t); };
    row.w.resize(nth);
    double ref = -kInf;
    for (int j = 0; j < nth; ++j) ref = std::max(ref, kernel_.log_fw(sg * row.mid, (j + 0.5) * dth));
    if (!std::isfinite(ref)) ref = kernel_.log_fw(sg * row.mid, 0.5 * dth + 1e-3);
    double wmax = 0.0, wsum = 0.0;
    for (int j = 0; j < nth; ++j) {
      const double t0 = j * dth, t1 = t0 + dth, tc = t0 + 0.5 * dth;
      int disk = -1;
      bool near = false;
      for (const auto& b : balls_) {
        const double ct = wrap_near(b.th0, tc);
        const double dx = std::max({lo - b.s0, 0.0, b.s0 - hi}), dy = std::max({t0 - ct, 0.0, ct - t1});
        const double d = std::hypot(dx, dy);
        if (d < b.R) disk = int(&b - balls_.data());
        else if (d < b.R + 3.0 * h) near = true;
      }
      for (const auto& p : kernel_.points) {
        if (p.weight >= 0.0) continue;
        const double ps = -std::log(std::abs(p.z)), ct = wrap_near(std::arg(p.z), tc);
        const double dx = std::max({lo - ps, 0.0, ps - hi}), dy = std::max({t0 - ct, 0.0, ct - t1});
        if (std::hypot(dx, dy) < 3.0 * h) near = true;
      }
      double w;
      if (disk >= 0) {
        const auto& b = balls_[disk];
        w = rect_minus_disk(f, ref, lo, hi, t0, t1, b.s0, wrap_near(b.th0, tc), b.R, 10);
      } else if (near) {
        w = rect_gl(f, ref, lo, hi, t0, t1, 5, 4);
      } else {
        w = rect_gl(f, ref, lo, hi, t0, t1, 3, 1);
      }
      if (!std::isfinite(w) || w < 0.0) throw SingularCellError("engine: non-finite cell weight");
      row.w[j] = w;
      wsum += w;
      wmax = std::max(wmax, w);
    }
    if (!(wmax > 0.0)) throw SingularCellError("engine: empty row");
    for (double& x : row.w) x /= wmax;
    row.log_w = ref + std::log(wsum);
    row.logc = ref + std::log(wmax) - g2 * (row.mid + harmonic(nm));
    return row;
  };
  for (int side = 0; side < 2; ++side) {
    auto& rs = rows_[side];
    for (int k = 0; k < n_band_rows_; ++k) rs.push_back(fill(side, k * ds_band_, (k + 1) * ds_band_, nth_band_, nm_band_));
    const int n_out = int(std::round((s_tab_ - s_band_) / cfg_.ds));
    for (int k = 0; k < n_out; ++k)
      rs.push_back(fill(side, s_band_ + k * cfg_.ds, s_band_ + (k + 1) * cfg_.ds, cfg_.n_theta, cfg_.n_modes));
  }
}

CylinderIntegrator::Row CylinderIntegrator::far_row(int side, int k) const {
  Row row;
  row.s0 = s_band_ + k * cfg_.ds;
  row.s1 = row.s0 + cfg_.ds;
  row.mid = row.s0 + 0.5 * cfg_.ds;
  row.n_theta = cfg_.n_theta;
  row.n_modes = cfg_.n_modes;
  const double g = kernel_.gamma;
  double lw = 0.0;
  if (side == 0)
    for (const auto& p : kernel_.points)
      if (p.weight != 0.0) lw -= g * p.weight * std::log(std::abs(p.z));
  const double kap = g * (side == 0 ? kernel_.alpha_zero : kernel_.alpha_inf) - 2.0;
  const double cell = lw + std::log(2.0 * M_PI / cfg_.n_theta) + log_int_exp(kap, row.s0, row.s1);
  row.log_w = cell + std::log(double(cfg_.n_theta));
  row.logc = cell - 0.5 * g * g * (row.mid + harmonic(cfg_.n_modes));
  return row;
}

double CylinderIntegrator::expected_mass(double s_limit) const {
  LogAcc acc;
  for (int side = 0; side < 2; ++side) {
    const int n_tab = int(rows_[side].size()) - n_band_rows_;
    for (const auto& r : rows_[side])
      if (r.s1 <= s_limit + 1e-9) acc.add(r.log_w);
    for (int k = n_tab;; ++k) {
      Row r = far_row(side, k);
      if (r.s1 > s_limit + 1e-9) break;
      acc.add(r.log_w);
    }
  }
  for (const auto& b : balls_) {
    for (const auto& r : b.rows) acc.add(r.log_w);
    const double kap = kernel_.gamma * b.a - 2.0;
    if (kap < 0.0) {
      const double u0 = b.rows.size() * b.du;
      acc.add(b.log_g0 + (2.0 - kernel_.gamma * b.a) * std::log(b.R) + std::log(2.0 * M_PI) + kap * u0 - std::log(-kap));
    } else {
      return kInf;
    }
  }
  return std::exp(acc.value());
}

CylinderSample CylinderIntegrator::sample(std::uint64_t seed, std::uint64_t index) const {
  RngStream rng(seed, derive_stream(stream_tag::kField, index));
  const double g = kernel_.gamma, q = kernel_.Q();
  CylinderSample out;
  out.log_checkpoints.assign(checkpoints_.size(), -kInf);
  LogAcc total;
  std::vector<LogAcc> ck(checkpoints_.size());
  double running_max = -kInf;
  auto add = [&](int side, double s1, double l) {
    total.add(l);
    for (std::size_t i = 0; i < checkpoints_.size(); ++i)
      if (side != 0 || s1 <= checkpoints_[i] + 1e-9) ck[i].add(l);
    running_max = std::max(running_max, l);
  };

  LateralModes start(nm_band_);
  start.draw_stationary(rng);
  struct SideState {
    LateralModes modes;
    double B = 0.0, pos = 0.0;
  };
  SideState st[2] = {{start}, {start}};
  std::vector<std::vector<double>> probe_val(balls_.size());
  for (std::size_t b = 0; b < balls_.size(); ++b) probe_val[b].assign(balls_[b].K, 0.0);
  std::vector<double> y(std::max({nth_band_, cfg_.n_theta, cfg_.ball_ntheta}));

  auto move_to = [&](SideState& ss, double pos, int n_active) {
    const double d = pos - ss.pos;
    if (d <= 0.0) return;
    ss.B += std::sqrt(d) * rng.normal();
    ss.modes.advance(d, n_active, rng);
    ss.pos = pos;
  };

  // refined band and trace probes
  for (int side = 0; side < 2; ++side) {
    std::vector<Event> ev;
    for (int k = 0; k < n_band_rows_; ++k) ev.push_back({rows_[side][k].mid, 0, k, 0});
    for (std::size_t b = 0; b < balls_.size(); ++b)
      for (int j = 0; j < balls_[b].K; ++j)
        if (balls_[b].probe_side[j] == side) ev.push_back({std::abs(balls_[b].probe_s[j]), 1, int(b), j});
    std::stable_sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.pos < b.pos; });
    auto& ss = st[side];
    for (const auto& e : ev) {
      move_to(ss, e.pos, nm_band_);
      if (e.kind == 0) {
        const Row& r = rows_[side][e.idx];
        thread_synth(r.n_theta).eval(ss.modes.a(), ss.modes.b(), r.n_modes, y.data());
        add(side, r.s1, r.logc + g * ss.B + log_row_sum(r.w.data(), y.data(), r.n_theta, g));
      } else {
        const double th = balls_[e.idx].probe_th[e.sub];
        double v = ss.B;
        const double* a = ss.modes.a();
        const double* bb = ss.modes.b();
        for (int n = 1; n <= nm_band_; ++n) v += (a[n - 1] * std::cos(n * th) + bb[n - 1] * std::sin(n * th)) / std::sqrt(double(n));
        probe_val[e.idx][e.sub] = v;
      }
    }
  }

  // local disks
  for (std::size_t bi = 0; bi < balls_.size(); ++bi) {
    const Ball& b = balls_[bi];
    const Eigen::VectorXd c = b.T * Eigen::Map<const Eigen::VectorXd>(probe_val[bi].data(), b.K);
    LateralModes lm(b.M);
    for (int m = 1; m <= b.M; ++m) {
      lm.a()[m - 1] = std::sqrt(double(m)) * c(2 * m - 1);
      lm.b()[m - 1] = std::sqrt(double(m)) * c(2 * m);
    }
    const double drop = effective_drop(cfg_.envelope_drop, g, q - b.a);
    const int n_tab = int(b.rows.size());
    const double kap = g * b.a - 2.0;
    const double dphi = 2.0 * M_PI / b.K;
    double beta = 0.0, u = 0.0;
    LogAcc ball;
    for (int k = 0;; ++k) {
      const double mid = (k + 0.5) * b.du;
      const double d = mid - u;
      beta += std::sqrt(d) * rng.normal();
      lm.advance(d, b.M, rng);
      u = mid;
      thread_synth(b.K).eval(lm.a(), lm.b(), b.M, y.data());
      double l;
      if (k < n_tab) {
        const Row& r = b.rows[k];
        l = r.logc + g * (c(0) + beta) + log_row_sum(r.w.data(), y.data(), b.K, g);
      } else {
        const double cell = b.log_g0 + (2.0 - g * b.a) * std::log(b.R) + std::log(dphi) + log_int_exp(kap, k * b.du, (k + 1) * b.du);
        l = cell - 0.5 * g * g * (b.var_c0 + mid + b.H) + g * (c(0) + beta) + log_row_sum(nullptr, y.data(), b.K, g);
      }
      ball.add(l);
      add(1, 0.0, l);
      if (l < running_max - drop && mid > 1.0) break;
      if (mid > cfg_.s_cap) {
        out.capped = true;
        break;
      }
    }
    out.log_ball = ball.value();
  }

  // outer rows, streamed until the envelope rule or the hard checkpoint
  for (int side = 0; side < 2; ++side) {
    auto& ss = st[side];
    const double alpha = side == 0 ? kernel_.alpha_zero : kernel_.alpha_inf;
    const bool hard = side == 0 && !checkpoints_.empty();
    const double drop = hard ? 0.0 : effective_drop(cfg_.envelope_drop, g, q - alpha);
    const int n_tab = int(rows_[side].size()) - n_band_rows_;
    int count = 0;
    for (int k = 0;; ++k) {
      Row far;
      const Row* r;
      if (k < n_tab) {
        r = &rows_[side][n_band_rows_ + k];
      } else {
        far = far_row(side, k);
        r = &far;
      }
      if (hard && r->s1 > checkpoints_.back() + 1e-9) break;
      move_to(ss, r->mid, cfg_.n_modes);
      thread_synth(r->n_theta).eval(ss.modes.a(), ss.modes.b(), r->n_modes, y.data());
      const double l = r->logc + g * ss.B + log_row_sum(k < n_tab ? r->w.data() : nullptr, y.data(), r->n_theta, g);
      add(side, r->s1, l);
      ++count;
      if (!hard && l < running_max - drop) break;
      if (r->s1 > cfg_.s_cap) {
        out.capped = true;
        break;
      }
    }
    (side == 0 ? out.rows_pos : out.rows_neg) = count + n_band_rows_;
  }

  out.log_mass = total.value();
  for (std::size_t i = 0; i < ck.size(); ++i) out.log_checkpoints[i] = ck[i].value();
  if (!std::isfinite(out.log_mass)) throw SingularCellError("engine: non-finite sample mass");
  return out;
}

// ---------------------------------------------------------------- reflection

void ReflectionConfig::validate() const {
  if (n_modes < 1 || 2 * n_modes >= n_theta || n_theta % 2) throw BoundsError("reflection: need n_theta > 2 n_modes, n_theta even");
  if (!(ds > 0.0) || !(em_dt > 0.0)) throw BoundsError("reflection: steps must be positive");
  if (!(envelope_drop > 0.0) || !(s_cap > 0.0) || horizon < 0.0) throw BoundsError("reflection: invalid horizon settings");
}

std::string ReflectionConfig::to_json() const {
  return json{{"n_modes", n_modes},     {"n_theta", n_theta}, {"ds", ds},
              {"exact_path", exact_path}, {"em_dt", em_dt},     {"envelope_drop", envelope_drop},
              {"horizon", horizon},       {"s_cap", s_cap}}
      .dump();
}

ReflectionSample sample_reflection_integral(double gamma, double alpha, const ReflectionConfig& cfg, std::uint64_t seed,
                                            std::uint64_t index) {
  cfg.validate();
  const double q = 2.0 / gamma + gamma / 2.0, nu = q - alpha;
  if (!(nu > 0.0)) throw BoundsError("reflection: need alpha < Q");
  RngStream rng(seed, derive_stream(stream_tag::kPath, index));
  LateralModes start(cfg.n_modes);
  start.draw_stationary(rng);
  const double g2h = 0.5 * gamma * gamma * harmonic(cfg.n_modes);
  const double dth = 2.0 * M_PI / cfg.n_theta;
  const double drop = effective_drop(cfg.envelope_drop, gamma, nu);
  std::vector<double> y(cfg.n_theta);
  LogAcc acc;
  double running_max = -kInf;
  ReflectionSample out;
  for (int side = 0; side < 2; ++side) {
    LateralModes lm = start;
    BesselDriftPath bessel(nu);
    CothEulerPath coth(nu, cfg.em_dt);
    auto step = [&](double h) { return cfg.exact_path ? bessel.step(h, rng) : coth.step(h, rng); };
    double b0 = 0.0, s = 0.0;
    for (int k = 0;; ++k) {
      const double bm = step(0.5 * cfg.ds), b1 = step(0.5 * cfg.ds);
      lm.advance(k == 0 ? 0.5 * cfg.ds : cfg.ds, cfg.n_modes, rng);
      thread_synth(cfg.n_theta).eval(lm.a(), lm.b(), cfg.n_modes, y.data());
      // Simpson on the path, midpoint on the lateral mass
      const double top = std::max({b0, bm, b1});
      const double simpson = cfg.ds / 6.0 * (std::exp(gamma * (b0 - top)) + 4.0 * std::exp(gamma * (bm - top)) + std::exp(gamma * (b1 - top)));
      const double l = gamma * top + std::log(simpson) + std::log(dth) - g2h + log_row_sum(nullptr, y.data(), cfg.n_theta, gamma);
      acc.add(l);
      running_max = std::max(running_max, l);
      b0 = b1;
      s += cfg.ds;
      if (cfg.horizon > 0.0) {
        if (s >= cfg.horizon - 1e-9) break;
      } else if (l < running_max - drop && s > 1.0) {
        break;
      }
      if (s > cfg.s_cap) {
        out.capped = true;
        break;
      }
    }
    out.horizon_used = std::max(out.horizon_used, s);
  }
  out.log_integral = acc.value();
  return out;
}

// ---------------------------------------------------------------- local disk around z

void LocalBallConfig::validate() const {
  if (n_modes < 1 || 2 * n_modes >= n_theta || n_theta % 2) throw BoundsError("local disk: need n_theta > 2 n_modes, n_theta even");
  if (!(du > 0.0) || !(envelope_drop > 0.0) || !(u_cap > 0.0)) throw BoundsError("local disk: invalid step settings");
}

LocalBallSampler::LocalBallSampler(double gamma, double alpha, std::complex<double> z, const LocalBallConfig& cfg,
                                   std::vector<double> u_marks, double u_max, std::function<double(std::complex<double>)> log_f)
    : gamma_(gamma), alpha_(alpha), z_(z), cfg_(cfg), u_max_(u_max) {
  cfg_.validate();
  const double q = 2.0 / gamma + gamma / 2.0;
  if (!(gamma > 0.0 && gamma < 2.0)) throw BoundsError("local disk: need 0 < gamma < 2");
  if (!(std::abs(z) > 2.0)) throw BoundsError("local disk: need |z| > 2");
  if (!(alpha < q) && !(u_max > 0.0)) throw BoundsError("local disk: need alpha < Q");
  if (u_marks.empty()) u_marks.push_back(0.0);
  for (double m : u_marks) {
    if (m < 0.0) throw BoundsError("local disk: marks must be >= 0");
    marks_.push_back(std::round(m / cfg_.du) * cfg_.du);
  }
  std::sort(marks_.begin(), marks_.end());
  const int M = cfg_.n_modes;
  const double rz = std::abs(z), psi = std::arg(z);
  lambda_c_.resize(M);
  lambda_s_.resize(M);
  double used = 0.0;
  for (int k = 1; k <= M; ++k) {
    const double c = (k % 2 ? 1.0 : -1.0) * std::pow(rz, -k) / std::sqrt(double(k));
    lambda_c_[k - 1] = c * std::cos(k * psi);
    lambda_s_[k - 1] = c * std::sin(k * psi);
    used += std::pow(rz, -2.0 * k) / k;
  }
  eta_sd_ = std::sqrt(2.0 * std::log(rz) - used);

  const double g = gamma, dphi = 2.0 * M_PI / cfg_.n_theta;
  auto lf = [&](double u, double ph) {
    const cplx x = z + std::exp(cplx(-u, ph));
    double v = -(4.0 + g * g) * std::log(std::abs(x)) + (g * alpha - 2.0) * u;
    if (log_f) v += log_f(x);
    return v;
  };
  far_logc0_ = -(4.0 + g * g) * std::log(rz) + (log_f ? log_f(z) : 0.0) + std::log(dphi);
  auto le = [&](double u, double ph) { return lf(u, ph) + g * g * std::log(std::abs(z + std::exp(cplx(-u, ph)))); };
  far_slope_ = g * alpha - 2.0;
  n_tab_ = int(std::ceil(30.0 / cfg_.du));
  const double hm = harmonic(M);
  for (int k = 0; k < n_tab_; ++k) {
    const double u0 = k * cfg_.du, u1 = u0 + cfg_.du, mid = u0 + 0.5 * cfg_.du;
    const double ref = lf(mid, 0.0);
    std::vector<double> w(cfg_.n_theta);
    double wmax = 0.0;
    for (int j = 0; j < cfg_.n_theta; ++j) {
      w[j] = rect_gl(lf, ref, u0, u1, j * dphi, (j + 1) * dphi, 3, 1);
      wmax = std::max(wmax, w[j]);
    }
    for (double& x : w) x /= wmax;
    double e = 0.0;
    for (int j = 0; j < cfg_.n_theta; ++j) e += rect_gl(le, ref, u0, u1, j * dphi, (j + 1) * dphi, 3, 1);
    row_log_e_.push_back(ref + std::log(e));
    row_w_.push_back(std::move(w));
    row_logc_.push_back(ref + std::log(wmax) - 0.5 * g * g * (mid + hm));
  }
}

double LocalBallSampler::row_logc(int k, std::vector<double>* w) const {
  if (k < n_tab_) {
    if (w) *w = row_w_[k];
    return row_logc_[k];
  }
  const double mid = (k + 0.5) * cfg_.du;
  return far_logc0_ + log_int_exp(far_slope_, k * cfg_.du, (k + 1) * cfg_.du) -
         0.5 * gamma_ * gamma_ * (mid + harmonic(cfg_.n_modes));
}

double LocalBallSampler::expected_mass(int mark) const {
  LogAcc acc;
  const int k0 = int(std::round(marks_.at(mark) / cfg_.du));
  for (int k = k0; k < n_tab_; ++k) acc.add(row_log_e_[k]);
  if (!(far_slope_ < 0.0)) return kInf;
  const double u0 = std::max(k0, n_tab_) * cfg_.du;
  acc.add(far_logc0_ + gamma_ * gamma_ * std::log(std::abs(z_)) + std::log(double(cfg_.n_theta)) + far_slope_ * u0 -
          std::log(-far_slope_));
  return std::exp(acc.value());
}

std::vector<double> LocalBallSampler::sample(std::uint64_t seed, std::uint64_t index, bool with_far) const {
  RngStream rng(seed, derive_stream(stream_tag::kField, index));
  const int M = cfg_.n_modes, K = cfg_.n_theta;
  const double g = gamma_, q = 2.0 / g + g / 2.0;
  LateralModes lm(M);
  lm.draw_stationary(rng);
  const double eta = rng.normal();
  double y0 = with_far ? eta_sd_ * eta : 0.0;
  for (int k = 0; k < M; ++k) y0 += lambda_c_[k] * lm.a()[k] + lambda_s_[k] * lm.b()[k];
  const double drop = alpha_ < q ? effective_drop(cfg_.envelope_drop, g, q - alpha_) : 0.0;
  std::vector<LogAcc> acc(marks_.size());
  std::vector<double> y(K), w;
  double beta = 0.0, u = 0.0, tail_max = -kInf;
  for (int k = 0;; ++k) {
    const double u0 = k * cfg_.du, mid = u0 + 0.5 * cfg_.du;
    if (u_max_ > 0.0 && u0 >= u_max_ - 1e-9) break;
    const double d = mid - u;
    beta += std::sqrt(d) * rng.normal();
    lm.advance(d, M, rng);
    u = mid;
    thread_synth(K).eval(lm.a(), lm.b(), M, y.data());
    const bool tab = k < n_tab_;
    const double lc = row_logc(k, nullptr);
    const double l = lc + g * (y0 + beta) + log_row_sum(tab ? row_w_[k].data() : nullptr, y.data(), K, g);
    for (std::size_t i = 0; i < marks_.size(); ++i)
      if (u0 >= marks_[i] - 1e-9) acc[i].add(l);
    if (u0 >= marks_.back() - 1e-9) {
      tail_max = std::max(tail_max, l);
      if (u_max_ <= 0.0 && l < tail_max - drop && mid > marks_.back() + 1.0) break;
    }
    if (mid > cfg_.u_cap) break;
  }
  std::vector<double> out(marks_.size());
  for (std::size_t i = 0; i < marks_.size(); ++i) out[i] = acc[i].value();
  return out;
}

}  // namespace liouville
