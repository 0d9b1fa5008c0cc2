#include "cureweib/optim.hpp"

#include "cureweib/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace cureweib {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sanitize(double v) { return std::isfinite(v) ? v : kInf; }

// Objective/gradient wrapper that counts evaluations and supplies the
// finite-difference fallback.
class Evaluator {
 public:
  explicit Evaluator(const OptimProblem& p) : problem_(p) {}

  double value(const Eigen::VectorXd& x) {
    ++evaluations;
    return sanitize(problem_.objective(x));
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) {
    if (problem_.gradient) return problem_.gradient(x);
    evaluations += 2 * static_cast<int>(x.size());
    return central_difference_gradient(problem_.objective, x);
  }

  int evaluations = 0;

 private:
  const OptimProblem& problem_;
};

struct LinePoint {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;
  Eigen::VectorXd grad;
};

// Minimizer of the quadratic through (lo.f, lo.slope) and (hi.f), safeguarded
// to the interior of the bracket; falls back to bisection.
double interpolate(const LinePoint& lo, const LinePoint& hi) {
  const double d = hi.alpha - lo.alpha;
  const double denom = 2.0 * (hi.f - lo.f - lo.slope * d);
  double a = lo.alpha + 0.5 * d;
  if (std::isfinite(hi.f) && denom > 0.0) a = lo.alpha - lo.slope * d * d / denom;
  const double left = std::min(lo.alpha, hi.alpha);
  const double right = std::max(lo.alpha, hi.alpha);
  const double margin = 0.1 * (right - left);
  if (!std::isfinite(a) || a < left + margin || a > right - margin) a = 0.5 * (left + right);
  return a;
}

// Line search satisfying the strong Wolfe conditions (bracketing + zoom).
// Returns false when no acceptable point was found.
bool wolfe_search(Evaluator& ev, const Eigen::VectorXd& x, double f0, const Eigen::VectorXd& g0,
                  const Eigen::VectorXd& dir, double alpha_init, double c1, double c2, LinePoint& out) {
  const double slope0 = g0.dot(dir);
  auto probe = [&](double a, LinePoint& pt) {
    pt.alpha = a;
    pt.f = ev.value(x + a * dir);
  };
  auto attach_gradient = [&](LinePoint& pt) {
    pt.grad = ev.gradient(x + pt.alpha * dir);
    pt.slope = pt.grad.dot(dir);
  };
  auto sufficient = [&](const LinePoint& pt) { return pt.f <= f0 + c1 * pt.alpha * slope0; };

  auto zoom = [&](LinePoint lo, LinePoint hi) -> bool {
    for (int j = 0; j < 40; ++j) {
      LinePoint trial;
      probe(interpolate(lo, hi), trial);
      if (!sufficient(trial) || trial.f >= lo.f) {
        hi = trial;
      } else {
        attach_gradient(trial);
        if (std::fabs(trial.slope) <= -c2 * slope0) {
          out = trial;
          return true;
        }
        if (trial.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = trial;
      }
      if (std::fabs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
    }
    if (lo.alpha > 0.0 && lo.f < f0) {
      out = lo;
      return true;
    }
    return false;
  };

  LinePoint prev{0.0, f0, slope0, g0};
  double a = alpha_init;
  for (int i = 0; i < 40; ++i) {
    LinePoint cur;
    probe(a, cur);
    if (!sufficient(cur) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
    attach_gradient(cur);
    if (std::fabs(cur.slope) <= -c2 * slope0) {
      out = cur;
      return true;
    }
    if (cur.slope >= 0.0) return zoom(cur, prev);
    prev = cur;
    a *= 2.0;
  }
  return false;
}

}  // namespace

Eigen::VectorXd central_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                            const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::fabs(x[i]));
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

OptimResult minimize_bfgs(const OptimProblem& problem, const Eigen::VectorXd& x0, double tol_grad,
                          int max_iter) {
  BfgsOptions opts;
  opts.tol_grad = tol_grad;
  opts.max_iter = max_iter;
  return minimize_bfgs(problem, x0, opts);
}

OptimResult minimize_bfgs(const OptimProblem& problem, const Eigen::VectorXd& x0,
                          const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  if (n != problem.dimension) throw InputError("minimize_bfgs: x0 has wrong dimension");
  if (!x0.allFinite()) throw InputError("minimize_bfgs: x0 is not finite");

  Evaluator ev(problem);
  OptimResult res;
  Eigen::VectorXd x = x0;
  double f = ev.value(x);
  if (!std::isfinite(f)) throw InputError("minimize_bfgs: objective is not finite at x0");
  Eigen::VectorXd g = ev.gradient(x);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;

  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= options.tol_grad) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -h_inv * g;
    if (!(g.dot(dir) < 0.0)) {
      h_inv.setIdentity();
      scaled = false;
      dir = -g;
    }
    const double alpha0 = scaled ? 1.0 : std::min(1.0, 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-300));
    LinePoint next;
    if (!wolfe_search(ev, x, f, g, dir, alpha0, options.wolfe_c1, options.wolfe_c2, next)) {
      if (scaled) {
        // Stale curvature; retry once along steepest descent.
        h_inv.setIdentity();
        scaled = false;
        continue;
      }
      break;
    }
    const Eigen::VectorXd s = next.alpha * dir;
    const Eigen::VectorXd y = next.grad - g;
    const double sy = s.dot(y);
    x += s;
    f = next.f;
    g = next.grad;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h_inv = (sy / y.squaredNorm()) * Eigen::MatrixXd::Identity(n, n);
        scaled = true;
      }
      const Eigen::VectorXd hy = h_inv * y;
      const double rho = 1.0 / sy;
      h_inv += (rho * rho * (sy + y.dot(hy))) * (s * s.transpose()) -
               rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
  if (!res.converged && g.lpNorm<Eigen::Infinity>() <= options.tol_grad) res.converged = true;

  res.argmin = x;
  res.value = f;
  res.iterations = iter;
  res.evaluations = ev.evaluations;
  h_inv = 0.5 * (h_inv + h_inv.transpose());
  res.inverse_hessian = h_inv;
  res.approx_hessian = h_inv.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
  return res;
}

OptimResult minimize_nelder_mead(const OptimProblem& problem, const Eigen::VectorXd& x0, double tol_size,
                                 int max_iter) {
  NelderMeadOptions opts;
  opts.tol_size = tol_size;
  opts.max_iter = max_iter;
  return minimize_nelder_mead(problem, x0, opts);
}

OptimResult minimize_nelder_mead(const OptimProblem& problem, const Eigen::VectorXd& x0,
                                 const NelderMeadOptions& options) {
  const Eigen::Index n = x0.size();
  if (n != problem.dimension) throw InputError("minimize_nelder_mead: x0 has wrong dimension");
  if (!x0.allFinite()) throw InputError("minimize_nelder_mead: x0 is not finite");

  Evaluator ev(problem);
  const auto m = static_cast<std::size_t>(n + 1);
  std::vector<Eigen::VectorXd> vertex(m, x0);
  std::vector<double> fval(m);
  fval[0] = ev.value(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    vertex[static_cast<std::size_t>(i + 1)][i] += 0.05 * (1.0 + std::fabs(x0[i]));
    fval[static_cast<std::size_t>(i + 1)] = ev.value(vertex[static_cast<std::size_t>(i + 1)]);
  }

  std::vector<std::size_t> order(m);
  auto budget_left = [&] {
    return options.max_evaluations <= 0 || ev.evaluations < options.max_evaluations;
  };

  OptimResult res;
  int iter = 0;
  for (;; ++iter) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fval[a] < fval[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[m - 2];

    double diameter = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      diameter = std::max(diameter, (vertex[i] - vertex[best]).lpNorm<Eigen::Infinity>());
    if (diameter <= options.tol_size || fval[worst] == fval[best]) {
      res.converged = true;
      break;
    }
    if (iter >= options.max_iter || !budget_left()) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < m; ++i)
      if (i != worst) centroid += vertex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - vertex[worst]);
    const double f_reflected = ev.value(reflected);

    if (f_reflected < fval[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - vertex[worst]);
      const double f_expanded = ev.value(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        fval[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        fval[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < fval[second_worst]) {
      vertex[worst] = reflected;
      fval[worst] = f_reflected;
      continue;
    }

    bool accepted = false;
    if (f_reflected < fval[worst]) {
      const Eigen::VectorXd outside = centroid + 0.5 * (reflected - centroid);
      const double f_outside = ev.value(outside);
      if (f_outside <= f_reflected) {
        vertex[worst] = outside;
        fval[worst] = f_outside;
        accepted = true;
      }
    } else {
      const Eigen::VectorXd inside = centroid + 0.5 * (vertex[worst] - centroid);
      const double f_inside = ev.value(inside);
      if (f_inside < fval[worst]) {
        vertex[worst] = inside;
        fval[worst] = f_inside;
        accepted = true;
      }
    }
    if (!accepted) {
      for (std::size_t i = 0; i < m; ++i) {
        if (i == best) continue;
        vertex[i] = vertex[best] + 0.5 * (vertex[i] - vertex[best]);
        fval[i] = ev.value(vertex[i]);
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < m; ++i)
    if (fval[i] < fval[best]) best = i;
  res.argmin = vertex[best];
  res.value = fval[best];
  res.iterations = iter;
  res.evaluations = ev.evaluations;
  return res;
}

}  // namespace cureweib
