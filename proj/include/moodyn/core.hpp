#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace moodyn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One smooth convex component f_i with value and gradient oracles.
struct Objective {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

/// Raised when an oracle violates its contract (wrong length, non-finite output).
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A bundle of m convex objectives on R^n plus optional analytic oracles.
///
/// Immutable after construction; every oracle is a pure function, so a Problem
/// can be shared freely between threads.
class Problem {
 public:
  using MeritOracle = std::function<double(const Vec&)>;
  /// (t, anchor q) -> z(t). Returns nullopt when the closed form does not
  /// apply to the given anchor.
  using PathOracle = std::function<std::optional<Vec>(double, const Vec&)>;
  /// Weak Pareto point z -> minimal-norm element of the common level set at F(z).
  using LimitOracle = std::function<Vec(const Vec&)>;

  struct Definition {
    std::string label;
    int n = 0;
    std::vector<Objective> components;
    std::vector<double> lipschitz;  // empty = unknown
    std::optional<double> r_bound;
    MeritOracle analytic_merit;
    PathOracle analytic_path;
    LimitOracle analytic_limit;
  };

  explicit Problem(Definition def);

  const std::string& label() const { return def_.label; }
  int dim() const { return def_.n; }
  int num_objectives() const { return static_cast<int>(def_.components.size()); }
  const std::vector<double>& lipschitz() const { return def_.lipschitz; }
  const std::optional<double>& r_bound() const { return def_.r_bound; }

  double value(int i, const Vec& x) const;
  Vec gradient(int i, const Vec& x) const;
  /// F(x) = (f_1(x), ..., f_m(x)).
  Vec values(const Vec& x) const;
  /// Gradients as columns of an n x m matrix.
  Mat jacobian(const Vec& x) const;

  bool has_analytic_merit() const { return static_cast<bool>(def_.analytic_merit); }
  bool has_analytic_path() const { return static_cast<bool>(def_.analytic_path); }
  bool has_analytic_limit() const { return static_cast<bool>(def_.analytic_limit); }
  double analytic_merit(const Vec& x) const;
  std::optional<Vec> analytic_path(double t, const Vec& q) const;
  Vec analytic_limit(const Vec& z) const;

 private:
  void check_point(const Vec& x) const;
  Definition def_;
};

/// Parameters of the inertial system plus integrator settings.
/// beta = 0 selects the unregularized system.
struct DynParams {
  double alpha = 4.0;
  double beta = 0.5;
  double p = 1.75;
  double q = 0.875;
  double t0 = 1.0;
  double h = 1e-2;
  double T = 100.0;
  double eps_v = 1e-10;
  double eps_tie = 1e-9;

  bool regularized() const { return beta > 0.0; }
  /// alpha / t^q
  double damping(double t) const;
  /// beta / t^p, exactly zero when beta == 0
  double tikhonov(double t) const;
};

/// Throws std::invalid_argument naming the offending field.
void validate_params(const DynParams& params);

struct State {
  double t = 0.0;
  Vec x;
  Vec v;
};

/// a_i = beta/(2 t0^p) |x0|^2 + 1/2 |v0|^2 for every i.
Vec level_offset(const Problem& problem, const DynParams& params, const Vec& x0, const Vec& v0);

/// True iff f_i(x) <= reference_i for all i.
bool level_set_membership(const Problem& problem, const Vec& x, const Vec& reference_values);

/// Largest relative deviation between the gradient oracle of component i and a
/// central finite-difference gradient at x.
double gradient_fd_error(const Problem& problem, int i, const Vec& x, double step = 1e-6);

}  // namespace moodyn
