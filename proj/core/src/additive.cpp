#include "cureweib/additive.hpp"

#include "cureweib/error.hpp"
#include "cureweib/numeric.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cureweib {
namespace {

constexpr double kMinWeight = 1e-10;

struct WorkingModel {
  Eigen::VectorXd w;
  Eigen::VectorXd z;
  Eigen::MatrixXd xtwx;
  Eigen::VectorXd xtwz;
};

WorkingModel working_model(const Eigen::MatrixXd& x, const Eigen::VectorXd& eta, const Eigen::VectorXd& u) {
  const Eigen::Index n = x.rows();
  WorkingModel wm;
  wm.w.resize(n);
  wm.z.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = logistic(eta[i]);
    const double w = std::max(mu * (1.0 - mu), kMinWeight);
    wm.w[i] = w;
    wm.z[i] = eta[i] + (u[i] - mu) / w;
  }
  const Eigen::MatrixXd wx = x.array().colwise() * wm.w.array();
  wm.xtwx = wx.transpose() * x;
  wm.xtwz = wx.transpose() * wm.z;
  return wm;
}

// Solves (A) b = rhs for symmetric positive (semi)definite A, adding a tiny
// ridge when the plain factorization fails.
Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double ridge = 1e-10 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  Eigen::MatrixXd reg = a;
  for (int attempt = 0; attempt < 8; ++attempt) {
    reg.diagonal().array() += ridge * std::pow(10.0, attempt);
    llt.compute(reg);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw FitError("penalized normal equations are not positive definite");
}

double negative_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& u) {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    s.add(u[i] * softplus(-eta[i]) + (1.0 - u[i]) * softplus(eta[i]));
  return s.value();
}

double clipped_cross_entropy(const Eigen::VectorXd& eta, const Eigen::VectorXd& u) {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double th = clip_probability(logistic(eta[i]));
    s.add(u[i] * std::log(th) + (1.0 - u[i]) * std::log1p(-th));
  }
  return s.value();
}

Eigen::VectorXd initial_eta(const Eigen::VectorXd& u) {
  Eigen::VectorXd eta(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double mu = (u[i] + 0.5) / 2.0;
    eta[i] = std::log(mu / (1.0 - mu));
  }
  return eta;
}

}  // namespace

Eigen::MatrixXd total_penalty(std::span<const Penalty> penalties, std::span<const double> lambdas,
                              Eigen::Index p) {
  if (penalties.size() != lambdas.size()) throw InputError("one smoothing parameter per penalty required");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t j = 0; j < penalties.size(); ++j) {
    const auto& pen = penalties[j];
    const Eigen::Index w = pen.matrix.rows();
    if (pen.start + w > p) throw InputError("penalty block exceeds design width");
    if (!(lambdas[j] >= 0.0)) throw InputError("smoothing parameters must be >= 0");
    s.block(pen.start, pen.start, w, w) += lambdas[j] * pen.matrix;
  }
  return s;
}

PirlsResult fit_additive_pirls(const Eigen::MatrixXd& x, std::span<const Penalty> penalties,
                               const Eigen::VectorXd& u, std::span<const double> lambdas,
                               const Eigen::VectorXd* warm_start, const PirlsOptions& options) {
  const Eigen::Index p = x.cols();
  if (x.rows() != u.size() || x.rows() == 0) throw InputError("fit_additive_pirls: size mismatch");
  if (!x.allFinite() || !u.allFinite()) throw InputError("fit_additive_pirls: non-finite input");
  const Eigen::MatrixXd s = total_penalty(penalties, lambdas, p);

  auto penalized = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& eta) {
    return negative_loglik(eta, u) + 0.5 * b.dot(s * b);
  };

  PirlsResult res;
  Eigen::VectorXd beta;
  Eigen::VectorXd eta;
  double objective = std::numeric_limits<double>::infinity();
  if (warm_start && warm_start->size() == p) {
    beta = *warm_start;
    eta = x * beta;
    objective = penalized(beta, eta);
  } else {
    eta = initial_eta(u);
  }

  int it = 0;
  for (; it < options.max_iter; ++it) {
    const WorkingModel wm = working_model(x, eta, u);
    const auto llt = factorize(wm.xtwx + s);
    Eigen::VectorXd proposal = llt.solve(wm.xtwz);
    Eigen::VectorXd eta_new = x * proposal;
    double obj_new = penalized(proposal, eta_new);
    if (beta.size() == p) {
      // Step halving keeps the penalized objective from increasing.
      for (int h = 0; h < 30 && !(obj_new <= objective); ++h) {
        proposal = 0.5 * (proposal + beta);
        eta_new = x * proposal;
        obj_new = penalized(proposal, eta_new);
      }
      if (!(obj_new <= objective)) {
        res.converged = true;  // no further descent possible
        break;
      }
    }
    const double change = std::fabs(objective - obj_new);
    beta = std::move(proposal);
    eta = std::move(eta_new);
    const double previous = objective;
    objective = obj_new;
    if (std::isfinite(previous) && change <= options.tol * (std::fabs(objective) + 0.1)) {
      res.converged = true;
      ++it;
      break;
    }
  }

  const WorkingModel wm = working_model(x, eta, u);
  const auto llt = factorize(wm.xtwx + s);
  res.influence_diagonal = llt.solve(wm.xtwx).diagonal();
  res.coefficients = beta;
  res.penalized_objective = objective;
  res.cross_entropy = clipped_cross_entropy(eta, u);
  res.iterations = it;
  return res;
}

std::vector<double> block_edf(const Eigen::VectorXd& influence_diagonal,
                              std::span<const CoefficientBlock> blocks) {
  std::vector<double> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(influence_diagonal.segment(b.start, b.width).sum());
  return out;
}

std::vector<double> GcvOptions::default_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 13; ++i) grid.push_back(std::pow(10.0, -4.0 + 8.0 * i / 12.0));
  return grid;
}

double gcv_score(const Eigen::MatrixXd& xtwx, const Eigen::VectorXd& xtwz, const Eigen::MatrixXd& x,
                 const Eigen::VectorXd& w, const Eigen::VectorXd& z, const Eigen::MatrixXd& penalty) {
  const auto n = static_cast<double>(x.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(xtwx + penalty);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd beta = llt.solve(xtwz);
  const double edf = llt.solve(xtwx).trace();
  const Eigen::VectorXd r = z - x * beta;
  const double deviance = (w.array() * r.array().square()).sum();
  const double denom = n - edf;
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  const double score = n * deviance / (denom * denom);
  return std::isfinite(score) ? score : std::numeric_limits<double>::infinity();
}

GcvResult select_smoothing_gcv(const Eigen::MatrixXd& x, std::span<const Penalty> penalties,
                               const Eigen::VectorXd& u, const GcvOptions& options,
                               std::span<const double> initial, const Eigen::VectorXd* warm_start) {
  const Eigen::Index p = x.cols();
  if (x.rows() != u.size() || x.rows() == 0) throw InputError("select_smoothing_gcv: size mismatch");
  const std::vector<double> grid = options.grid.empty() ? GcvOptions::default_grid() : options.grid;
  const std::size_t m = penalties.size();

  // Start from the grid point nearest (in log scale) to each initial value.
  std::vector<std::size_t> pick(m, grid.size() / 2);
  if (initial.size() == m) {
    for (std::size_t j = 0; j < m; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const double d = std::fabs(std::log(grid[g]) - std::log(std::max(initial[j], 1e-300)));
        if (d < best) {
          best = d;
          pick[j] = g;
        }
      }
    }
  }
  auto lambdas_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> l(m);
    for (std::size_t j = 0; j < m; ++j) l[j] = grid[idx[j]];
    return l;
  };

  Eigen::VectorXd eta = (warm_start && warm_start->size() == p) ? Eigen::VectorXd(x * *warm_start)
                                                                 : initial_eta(u);
  GcvResult res;
  double score = std::numeric_limits<double>::infinity();
  bool any_finite = false;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    const WorkingModel wm = working_model(x, eta, u);
    auto evaluate = [&](const std::vector<std::size_t>& idx) {
      const auto l = lambdas_of(idx);
      return gcv_score(wm.xtwx, wm.xtwz, x, wm.w, wm.z, total_penalty(penalties, l, p));
    };

    const auto previous_pick = pick;
    score = evaluate(pick);
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
      bool changed = false;
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t g = 0; g < grid.size(); ++g) {
          if (g == pick[j]) continue;
          auto trial = pick;
          trial[j] = g;
          const double s = evaluate(trial);
          if (s < score) {
            score = s;
            pick = trial;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (std::isfinite(score)) any_finite = true;

    const auto l = lambdas_of(pick);
    const auto llt = factorize(wm.xtwx + total_penalty(penalties, l, p));
    const Eigen::VectorXd eta_new = x * llt.solve(wm.xtwz);
    const double change = (eta_new - eta).lpNorm<Eigen::Infinity>();
    eta = eta_new;
    res.outer_iterations = outer + 1;
    if (pick == previous_pick && change <= options.tol * (1.0 + eta.lpNorm<Eigen::Infinity>())) break;
  }
  if (!any_finite) throw FitError("GCV: every smoothing candidate produced a non-finite score");
  res.lambdas = lambdas_of(pick);
  res.score = score;
  return res;
}

}  // namespace cureweib
