#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "liouville/errors.hpp"
#include "liouville/gmc.hpp"
#include "liouville/lateral.hpp"

namespace liouville {

using nlohmann::json;

double CylinderGrid::dtheta() const { return 2.0 * M_PI / n_theta; }

int CylinderGrid::max_levels() const {
  int l = 0;
  for (const auto& r : refine) l = std::max(l, r.levels);
  return l;
}

void CylinderGrid::validate() const {
  if (!(s_min < 0.0 && 0.0 < s_max)) throw BoundsError("grid: need s_min < 0 < s_max");
  if (n_s < 2 || n_theta < 4 || n_modes < 1) throw BoundsError("grid: sizes too small");
  if (n_theta < 4 * n_modes) throw BoundsError("grid: n_theta must be >= 4 * n_modes");
  if (n_theta % 2) throw BoundsError("grid: n_theta must be even");
  for (const auto& r : refine)
    if (r.levels < 0) throw BoundsError("grid: refinement levels must be >= 0");
}

std::string CylinderGrid::to_json() const {
  json j = {{"s_min", s_min}, {"s_max", s_max}, {"n_s", n_s}, {"n_theta", n_theta}, {"n_modes", n_modes}};
  json r = json::array();
  for (const auto& a : refine) r.push_back({a.s0, a.theta0, a.levels});
  j["refine"] = r;
  return j.dump();
}

double CylinderField::lateral(int i, int j) const {
  const double th = grid.theta_mid(j);
  double y = 0.0;
  for (int n = 1; n <= grid.n_modes; ++n)
    y += (a[n - 1][i] * std::cos(n * th) + b[n - 1][i] * std::sin(n * th)) / std::sqrt(double(n));
  return y;
}

double CylinderField::variance(int i) const { return std::abs(grid.s_mid(i)) + harmonic(grid.n_modes); }

double ChaosMeasure::total() const {
  double s = 0.0, c = 0.0;
  for (double v : cell_mass) {
    double y = v - c, t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

double ConditionedPath::at(double t) const {
  if (s.empty()) return 0.0;
  if (t <= s.front()) return values.front();
  if (t >= s.back()) return values.back();
  auto it = std::upper_bound(s.begin(), s.end(), t);
  std::size_t k = std::size_t(it - s.begin());
  double w = (t - s[k - 1]) / (s[k] - s[k - 1]);
  return (1 - w) * values[k - 1] + w * values[k];
}

CylinderField sample_field(const CylinderGrid& grid, RngStream& rng) {
  grid.validate();
  CylinderField f;
  f.grid = grid;
  f.seed = {rng.master_seed(), rng.stream_index()};
  const int ns = grid.n_s, nm = grid.n_modes;
  f.radial.assign(ns, 0.0);
  f.a.assign(nm, std::vector<double>(ns));
  f.b.assign(nm, std::vector<double>(ns));

  LateralModes at0(nm);
  at0.draw_stationary(rng);
  // first row with s_mid >= 0
  int i0 = 0;
  while (i0 < ns && grid.s_mid(i0) < 0.0) ++i0;
  for (int side = 0; side < 2; ++side) {
    LateralModes m = at0;
    double prev = 0.0, bm = 0.0;
    const int step = side == 0 ? 1 : -1;
    for (int i = side == 0 ? i0 : i0 - 1; i >= 0 && i < ns; i += step) {
      const double s = std::abs(grid.s_mid(i));
      const double d = s - prev;
      bm += std::sqrt(d) * rng.normal();
      m.advance(d, nm, rng);
      f.radial[i] = bm;
      for (int n = 0; n < nm; ++n) {
        f.a[n][i] = m.a()[n];
        f.b[n][i] = m.b()[n];
      }
      prev = s;
    }
  }
  return f;
}

namespace {
// Integral of exp(-2|s|) over [s0, s1].
double ref_weight(double s0, double s1) {
  auto prim = [](double s) { return s >= 0 ? -0.5 * std::exp(-2 * s) : 0.5 * std::exp(2 * s) - 1.0; };
  return prim(s1) - prim(s0);
}
}  // namespace

ChaosMeasure build_chaos(const CylinderField& field, double gamma) {
  const CylinderGrid& g = field.grid;
  ChaosMeasure m;
  m.grid = g;
  m.gamma = gamma;
  m.n_modes = g.n_modes;
  m.seed = field.seed;
  m.cell_mass.resize(std::size_t(g.n_s) * g.n_theta);
  std::vector<double> y(g.n_theta);
  LateralSynth synth(g.n_theta);
  std::vector<double> a(g.n_modes), b(g.n_modes);
  for (int i = 0; i < g.n_s; ++i) {
    for (int n = 0; n < g.n_modes; ++n) a[n] = field.a[n][i], b[n] = field.b[n][i];
    synth.eval(a.data(), b.data(), g.n_modes, y.data());
    const double s0 = g.s_min + i * g.ds();
    const double w = ref_weight(s0, s0 + g.ds()) * g.dtheta();
    const double base = gamma * field.radial[i] - 0.5 * gamma * gamma * field.variance(i);
    for (int j = 0; j < g.n_theta; ++j)
      m.cell_mass[std::size_t(i) * g.n_theta + j] = w * std::exp(base + gamma * y[j]);
  }
  return m;
}

double expected_truncated_mass(const CylinderGrid& grid) {
  return 2.0 * M_PI * (1.0 - 0.5 * (std::exp(-2.0 * grid.s_max) + std::exp(2.0 * grid.s_min)));
}

double integrate_kernel(const ChaosMeasure& m, const CylinderKernel& kernel) {
  const CylinderGrid& g = m.grid;
  const double ds = g.ds(), dth = g.dtheta();
  double sum = 0.0, comp = 0.0;
  auto add = [&](double v) {
    double y = v - comp, t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  for (int i = 0; i < g.n_s; ++i) {
    const double s0 = g.s_min + i * ds;
    for (int j = 0; j < g.n_theta; ++j) {
      const double th0 = j * dth;
      int lev = 0;
      for (const auto& r : g.refine) {
        double dth_a = std::remainder(th0 + 0.5 * dth - r.theta0, 2 * M_PI);
        if (std::abs(s0 + 0.5 * ds - r.s0) <= 1.5 * ds && std::abs(dth_a) <= 1.5 * dth)
          lev = std::max(lev, r.levels);
      }
      double kv;
      if (lev == 0) {
        kv = kernel(s0 + 0.5 * ds, th0 + 0.5 * dth);
      } else {
        const int k = 1 << lev;
        const double hs = ds / k, ht = dth / k;
        const double wc = ref_weight(s0, s0 + ds);
        kv = 0.0;
        for (int p = 0; p < k; ++p) {
          const double ws = ref_weight(s0 + p * hs, s0 + (p + 1) * hs) / wc / k;
          for (int q = 0; q < k; ++q) kv += ws * kernel(s0 + (p + 0.5) * hs, th0 + (q + 0.5) * ht);
        }
      }
      if (!std::isfinite(kv)) throw SingularCellError("kernel is not finite in cell (" + std::to_string(i) + ", " +
                                                      std::to_string(j) + "); add a refinement anchor");
      add(kv * m.mass(i, j));
    }
  }
  return sum;
}

std::vector<double> sample_Z_process(int n_cells, double ds, int n_modes, int n_theta, double gamma,
                                     RngStream& rng) {
  if (n_theta < 4 * n_modes) throw BoundsError("Z process: n_theta must be >= 4 * n_modes");
  LateralModes m(n_modes);
  m.draw_stationary(rng);
  LateralSynth& synth = thread_synth(n_theta);
  std::vector<double> y(n_theta), z(n_cells);
  const double h = harmonic(n_modes), dth = 2 * M_PI / n_theta;
  for (int k = 0; k < n_cells; ++k) {
    m.advance(k == 0 ? 0.5 * ds : ds, n_modes, rng);
    synth.eval(m.a(), m.b(), n_modes, y.data());
    double acc = 0.0;
    for (int j = 0; j < n_theta; ++j) acc += std::exp(gamma * y[j] - 0.5 * gamma * gamma * h);
    z[k] = acc * dth * ds;
  }
  return z;
}

namespace {
constexpr char kMagic[4] = {'L', 'V', 'C', 'M'};
constexpr std::uint32_t kDumpVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}
}  // namespace

void dump_chaos_measure(const ChaosMeasure& m, const std::string& path, const std::string& extra_json) {
  json h = {{"grid", json::parse(m.grid.to_json())},
            {"gamma", m.gamma},
            {"n_modes", m.n_modes},
            {"seed", {{"master", m.seed.master_seed}, {"stream", m.seed.stream_index}}},
            {"extra", json::parse(extra_json)}};
  const std::string hs = h.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw BoundsError("cannot open " + path);
  os.write(kMagic, 4);
  put_u32(os, kDumpVersion);
  put_u32(os, std::uint32_t(hs.size()));
  os.write(hs.data(), std::streamsize(hs.size()));
  for (double v : m.cell_mass) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(u >> (8 * k));
    os.write(reinterpret_cast<const char*>(b), 8);
  }
}

ChaosMeasure load_chaos_measure(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw BoundsError("cannot open " + path);
  char mg[4];
  is.read(mg, 4);
  if (std::memcmp(mg, kMagic, 4) != 0) throw BoundsError("not a chaos measure dump");
  if (get_u32(is) != kDumpVersion) throw BoundsError("unsupported dump version");
  std::string hs(get_u32(is), '\0');
  is.read(hs.data(), std::streamsize(hs.size()));
  json h = json::parse(hs);
  ChaosMeasure m;
  const json& g = h["grid"];
  m.grid.s_min = g["s_min"];
  m.grid.s_max = g["s_max"];
  m.grid.n_s = g["n_s"];
  m.grid.n_theta = g["n_theta"];
  m.grid.n_modes = g["n_modes"];
  for (const auto& r : g["refine"]) m.grid.refine.push_back({r[0], r[1], r[2]});
  m.gamma = h["gamma"];
  m.n_modes = h["n_modes"];
  m.seed = {h["seed"]["master"], h["seed"]["stream"]};
  m.cell_mass.resize(std::size_t(m.grid.n_s) * m.grid.n_theta);
  for (double& v : m.cell_mass) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int k = 0; k < 8; ++k) u |= std::uint64_t(b[k]) << (8 * k);
    std::memcpy(&v, &u, 8);
  }
  if (!is) throw BoundsError("truncated chaos measure dump");
  return m;
}

}  // namespace liouville
