#include "moodyn/problems.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace moodyn {

namespace {

// region boundaries of M1/M2/M3 get a small guard band; the value pieces agree there
constexpr double kGuard = 1e-14;

double hinge_sq(double y) { return y > 0.0 ? y * y : 0.0; }

// phi(y) = 1/2 max(y-3,0)^2 + 1/2 max(2-y,0)^2
double band_penalty(double y) { return 0.5 * hinge_sq(y - 3.0) + 0.5 * hinge_sq(2.0 - y); }
double band_penalty_deriv(double y) { return std::max(y - 3.0, 0.0) - std::max(2.0 - y, 0.0); }

enum class Region { M1, M2, M3 };

Region classify(const Vec& x) {
  double ax = std::abs(x[0]);
  if (ax <= 1.0 + kGuard && x[1] + 1.0 <= std::sqrt(std::max(0.0, 1.0 - x[0] * x[0])) + kGuard)
    return Region::M1;
  if (ax > 1.0 && x[1] + 1.0 <= 0.0) return Region::M2;
  return Region::M3;
}

}  // namespace

double Example25Config::t0() const { return std::pow(192.0 * beta, 1.0 / p); }

void validate(const Example25Config& config) {
  if (!(config.beta > 0.0)) throw std::invalid_argument("example25: beta must be > 0");
  if (!(config.p > 0.0 && config.p <= 2.0)) throw std::invalid_argument("example25: p out of (0,2]");
  if (!(config.eta > 0.0)) throw std::invalid_argument("example25: eta must be > 0");
}

Vec example25_projection_m1(const Vec& x) {
  switch (classify(x)) {
    case Region::M1:
      return x;
    case Region::M2:
      return Vec{{x[0] > 0.0 ? 1.0 : -1.0, x[1]}};
    case Region::M3:
    default: {
      double r = std::hypot(x[0], x[1] + 1.0);
      return Vec{{x[0] / r, (x[1] + 1.0) / r - 1.0}};
    }
  }
}

double example25_g(const Vec& x) {
  switch (classify(x)) {
    case Region::M1:
      return 0.5 * x[0] * x[0] + 0.5 * x[1] * x[1];
    case Region::M2:
      return std::abs(x[0]) + 0.5 * x[1] * x[1] - 0.5;
    case Region::M3:
    default:
      return std::hypot(x[0], x[1] + 1.0) - (x[1] + 1.0);
  }
}

Problem example25_problem(const Example25Config& config) {
  validate(config);
  auto make = [](double shift) {
    Objective o;
    o.value = [shift](const Vec& x) {
      return 0.5 * (x[0] - shift) * (x[0] - shift) + band_penalty(x[1]) + example25_g(x);
    };
    o.gradient = [shift](const Vec& x) {
      Vec g = example25_projection_m1(x);
      g[0] += x[0] - shift;
      g[1] += band_penalty_deriv(x[1]);
      return g;
    };
    return o;
  };
  Problem::Definition def;
  def.label = "example25";
  def.n = 2;
  def.components = {make(1.0), make(-1.0)};
  def.lipschitz = {3.0, 3.0};
  def.analytic_path = [config](double t, const Vec& q) -> std::optional<Vec> {
    if (t < config.t0() || q.size() != 2) return std::nullopt;
    ClosedPathPoint cp = example25_closed_path(config, t);
    if ((cp.q - q).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + cp.q.cwiseAbs().maxCoeff())) return std::nullopt;
    return cp.z;
  };
  return Problem(std::move(def));
}

ClosedPathPoint example25_closed_path(const Example25Config& config, double t) {
  validate(config);
  if (!(t >= config.t0())) {
    std::ostringstream os;
    os << "example25 path requires t >= t0 = " << config.t0() << ", got " << t;
    throw std::domain_error(os.str());
  }
  double omega = (10.0 + std::sin(config.eta * t)) / 4.0;
  double tp = std::pow(t, config.p);
  double ratio = tp / (tp - config.beta * omega);
  double root = std::sqrt(ratio * ratio - 1.0);
  ClosedPathPoint out;
  out.q = Vec{{2.0 * (omega + 1.0) * root, 0.0}};
  out.z = Vec{{-(omega + 1.0) * root, omega}};
  return out;
}

Example25Stationarity example25_stationarity(const Example25Config& config, double t) {
  ClosedPathPoint cp = example25_closed_path(config, t);
  const double z1 = cp.z[0], z2 = cp.z[1];
  const double eps = config.beta / std::pow(t, config.p);
  const double r = std::hypot(z1, z2 + 1.0);
  Example25Stationarity s;
  s.second_residual = (z2 + 1.0) / r - 1.0 + eps * z2;
  s.first_smooth_part = z1 + z1 / r + eps * z1;
  return s;
}

Problem mop_ex1_problem() {
  auto make = [](double c) {
    Objective o;
    o.value = [c](const Vec& x) {
      double dy = x[1] - std::clamp(x[1], 1.0, 2.0);
      return 0.5 * ((x[0] - c) * (x[0] - c) + dy * dy);
    };
    o.gradient = [c](const Vec& x) { return Vec{{x[0] - c, x[1] - std::clamp(x[1], 1.0, 2.0)}}; };
    return o;
  };
  Problem::Definition def;
  def.label = "mop-ex1";
  def.n = 2;
  def.components = {make(-1.0), make(1.0)};
  def.lipschitz = {1.0, 1.0};
  // the weak Pareto set is [-1,1] x [1,2]; minimal-norm preimages are (s, 1)
  def.r_bound = std::sqrt(2.0);
  def.analytic_merit = [f1 = make(-1.0).value, f2 = make(1.0).value](const Vec& x) {
    // sup over weak Pareto points (s, .) of min(f1(x) - (s+1)^2/2, f2(x) - (s-1)^2/2)
    double a = f1(x), b = f2(x);
    double s = 0.5 * (a - b);
    if (s >= 1.0) return b;
    if (s <= -1.0) return a;
    return a - 0.5 * (s + 1.0) * (s + 1.0);
  };
  def.analytic_limit = [](const Vec& z) { return Vec{{std::clamp(z[0], -1.0, 1.0), 1.0}}; };
  return Problem(std::move(def));
}

Problem mop_ex2_problem() {
  auto make = [](double c) {
    Objective o;
    o.value = [c](const Vec& x) { return 0.5 * (x[0] - c) * (x[0] - c) + 0.5 * (x[1] - 1.0) * (x[1] - 1.0); };
    o.gradient = [c](const Vec& x) { return Vec{{x[0] - c, x[1] - 1.0, 0.0, 0.0}}; };
    return o;
  };
  Problem::Definition def;
  def.label = "mop-ex2";
  def.n = 4;
  def.components = {make(1.0), make(-1.0)};
  def.lipschitz = {1.0, 1.0};
  def.r_bound = std::sqrt(2.0);
  // half the squared distance of (x1, x2) to [-1,1] x {1}
  def.analytic_merit = [](const Vec& x) {
    double d1 = std::max(std::abs(x[0]) - 1.0, 0.0);
    double d2 = x[1] - 1.0;
    return 0.5 * (d1 * d1 + d2 * d2);
  };
  def.analytic_limit = [](const Vec& z) { return Vec{{std::clamp(z[0], -1.0, 1.0), 1.0, 0.0, 0.0}}; };
  return Problem(std::move(def));
}

Problem random_quadratics(std::uint64_t seed, int n, int m, double conditioning) {
  if (n < 1 || m < 1) throw std::invalid_argument("random_quadratics: n and m must be >= 1");
  if (!(conditioning >= 1.0)) throw std::invalid_argument("random_quadratics: conditioning must be >= 1");
  // raw engine bits only: the standard distributions are implementation-defined
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  };

  Problem::Definition def;
  def.label = "quad:" + std::to_string(seed) + ":" + std::to_string(n) + ":" + std::to_string(m);
  def.n = n;
  for (int i = 0; i < m; ++i) {
    Mat raw(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) raw(r, c) = uniform(-1.0, 1.0);
    Mat basis = Eigen::HouseholderQR<Mat>(raw).householderQ();
    Vec spectrum(n);
    for (int k = 0; k < n; ++k) spectrum[k] = uniform(1.0 / conditioning, 1.0);
    Mat A = basis * spectrum.asDiagonal() * basis.transpose();
    A = 0.5 * (A + A.transpose());
    Vec center(n);
    for (int k = 0; k < n; ++k) center[k] = uniform(-2.0, 2.0);

    Objective o;
    o.value = [A, center](const Vec& x) {
      Vec d = x - center;
      return 0.5 * d.dot(A * d);
    };
    o.gradient = [A, center](const Vec& x) -> Vec { return A * (x - center); };
    def.components.push_back(std::move(o));
    def.lipschitz.push_back(spectrum.maxCoeff());
  }
  return Problem(std::move(def));
}

Problem make_problem(const std::string& label) {
  if (label == "example25") return example25_problem();
  if (label == "mop-ex1") return mop_ex1_problem();
  if (label == "mop-ex2") return mop_ex2_problem();
  if (label.rfind("quad:", 0) == 0) {
    std::istringstream is(label.substr(5));
    std::string seed, n, m;
    if (std::getline(is, seed, ':') && std::getline(is, n, ':') && std::getline(is, m) && !seed.empty()) {
      try {
        size_t pos = 0;
        unsigned long long s = std::stoull(seed, &pos);
        if (pos != seed.size()) throw std::invalid_argument(seed);
        int ni = std::stoi(n, &pos);
        if (pos != n.size()) throw std::invalid_argument(n);
        int mi = std::stoi(m, &pos);
        if (pos != m.size()) throw std::invalid_argument(m);
        return random_quadratics(s, ni, mi);
      } catch (const std::logic_error&) {
      }
    }
    throw std::invalid_argument("malformed quadratic label '" + label + "' (expected quad:<seed>:<n>:<m>)");
  }
  throw std::invalid_argument("unknown problem '" + label + "'");
}

}  // namespace moodyn
