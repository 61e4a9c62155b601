#include "quadmpc/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace quadmpc {

void SolverConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("solver.max_iterations must be >= 1");
  if (!(kkt_tolerance > 0.0)) throw std::invalid_argument("solver.kkt_tolerance must be > 0");
  if (!(line_search_shrink > 0.0 && line_search_shrink < 1.0))
    throw std::invalid_argument("solver.line_search_shrink must be in (0,1)");
  if (!(line_search_min_step > 0.0))
    throw std::invalid_argument("solver.line_search_min_step must be > 0");
  if (!(constraint_tolerance > 0.0))
    throw std::invalid_argument("solver.constraint_tolerance must be > 0");
}

namespace {

ControlVec clamp_control(const ControlVec& u, const OcpConfig& cfg) {
  return u.cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
}

std::vector<StateVec> rollout(const StateVec& x0, const std::vector<ControlVec>& controls,
                              const ModelParams& p, double dt) {
  std::vector<StateVec> states(controls.size());
  StateVec x = x0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    x = step_euler(x, controls[k], p, dt);
    states[k] = x;
  }
  return states;
}

double residual_l1(const std::vector<StateVec>& res) {
  double sum = 0.0;
  for (const StateVec& r : res) sum += r.lpNorm<1>();
  return sum;
}

double residual_inf(const std::vector<StateVec>& res) {
  double max = 0.0;
  for (const StateVec& r : res) max = std::max(max, r.lpNorm<Eigen::Infinity>());
  return max;
}

/// min 1/2 d'Hd + g'd over lb <= d <= ub, H symmetric PSD. Projected-gradient
/// sweeps settle the active set; an equality solve on the free variables
/// refines it. Terminates on the projected-gradient residual. Fully
/// deterministic: no randomized components, bounds scanned in a fixed
/// component-major order.
class BoxQp {
 public:
  BoxQp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, const Eigen::VectorXd& lb,
        const Eigen::VectorXd& ub)
      : h_(h), g_(g), lb_(lb), ub_(ub) {}

  Eigen::VectorXd solve(double tol, int max_outer = 100) const {
    const Eigen::Index nv = g_.size();
    Eigen::VectorXd d = project(Eigen::VectorXd::Zero(nv));
    const double lip = h_.cwiseAbs().rowwise().sum().maxCoeff();
    if (!(lip > 0.0)) {
      // H = 0: the linear objective is minimized at the bounds.
      for (Eigen::Index j = 0; j < nv; ++j)
        d(j) = g_(j) > 0.0 ? lb_(j) : (g_(j) < 0.0 ? ub_(j) : d(j));
      return snap(d);
    }
    const double alpha = 1.0 / lip;

    for (int outer = 0; outer < max_outer; ++outer) {
      for (int sweep = 0; sweep < 10; ++sweep)
        d = project(d - alpha * (h_ * d + g_).eval());

      Eigen::VectorXd grad = h_ * d + g_;
      if (pg_residual(d, grad) <= tol) break;

      const Eigen::VectorXd candidate = refine(d, grad);
      if (quad(candidate) < quad(d)) d = candidate;
    }
    return snap(d);
  }

 private:
  Eigen::VectorXd project(Eigen::VectorXd v) const { return v.cwiseMax(lb_).cwiseMin(ub_); }

  double quad(const Eigen::VectorXd& d) const { return 0.5 * d.dot(h_ * d) + g_.dot(d); }

  double pg_residual(const Eigen::VectorXd& d, const Eigen::VectorXd& grad) const {
    return (d - project(d - grad)).lpNorm<Eigen::Infinity>();
  }

  // Variables scanned thrust, roll, pitch, yaw-rate, then by time index when
  // partitioning into active/free sets.
  Eigen::VectorXd refine(const Eigen::VectorXd& d, const Eigen::VectorXd& grad) const {
    const Eigen::Index nv = d.size();
    std::vector<Eigen::Index> free;
    free.reserve(nv);
    std::vector<bool> is_free(nv, false);
    for (int comp = 0; comp < kInputDim; ++comp) {
      for (Eigen::Index j = comp; j < nv; j += kInputDim) {
        const double span = 1.0 + std::abs(ub_(j)) + std::abs(lb_(j));
        const bool at_lb = d(j) <= lb_(j) + 1e-10 * span;
        const bool at_ub = d(j) >= ub_(j) - 1e-10 * span;
        const bool active = (at_lb && grad(j) >= 0.0) || (at_ub && grad(j) <= 0.0);
        if (!active) {
          is_free[j] = true;
          free.push_back(j);
        }
      }
    }
    if (free.empty()) return d;

    const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd hff(nf, nf);
    Eigen::VectorXd rhs(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      rhs(a) = -g_(free[a]);
      for (Eigen::Index b = 0; b < nf; ++b) hff(a, b) = h_(free[a], free[b]);
      for (Eigen::Index j = 0; j < nv; ++j)
        if (!is_free[j]) rhs(a) -= h_(free[a], j) * d(j);
    }
    const Eigen::VectorXd sol = hff.ldlt().solve(rhs);
    Eigen::VectorXd candidate = d;
    for (Eigen::Index a = 0; a < nf; ++a) candidate(free[a]) = sol(a);
    return project(candidate);
  }

  Eigen::VectorXd snap(Eigen::VectorXd d) const {
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      const double span = 1.0 + std::abs(ub_(j)) + std::abs(lb_(j));
      if (std::abs(d(j) - lb_(j)) <= 1e-12 * span) d(j) = lb_(j);
      if (std::abs(d(j) - ub_(j)) <= 1e-12 * span) d(j) = ub_(j);
    }
    return d;
  }

  const Eigen::MatrixXd& h_;
  const Eigen::VectorXd& g_;
  const Eigen::VectorXd& lb_;
  const Eigen::VectorXd& ub_;
};

struct Linearization {
  std::vector<StateVec> residuals;
  std::vector<StepJacobians> jac;
  ObjectiveGradient grad;
};

Linearization linearize_all(const Decision& d, const OcpProblem& prob) {
  const int n = prob.config.horizon;
  Linearization lin;
  lin.residuals = continuity_residuals(d, prob);
  lin.jac.resize(n);
  for (int k = 0; k < n; ++k) {
    const StateVec& x_k = (k == 0) ? prob.x0 : d.states[k - 1];
    lin.jac[k] = linearize_step(x_k, d.controls[k], prob.params, prob.config.dt);
  }
  lin.grad = objective_gradient(d, prob);
  return lin;
}

std::vector<StateVec> multipliers_from(const Linearization& lin, int n) {
  std::vector<StateVec> lambda(n);
  lambda[n - 1] = -lin.grad.states[n - 1];
  for (int k = n - 1; k >= 1; --k)
    lambda[k - 1] = lin.jac[k].a.transpose() * lambda[k] - lin.grad.states[k - 1];
  return lambda;
}

double kkt_from(const Decision& d, const OcpProblem& prob, const Linearization& lin,
                const std::vector<StateVec>& lambda) {
  const int n = prob.config.horizon;
  double stat = 0.0;
  for (int k = 1; k <= n; ++k) {
    StateVec sx = lin.grad.states[k - 1];
    sx += lambda[k - 1];
    if (k < n) sx -= lin.jac[k].a.transpose() * lambda[k];
    stat = std::max(stat, sx.lpNorm<Eigen::Infinity>());
  }
  for (int k = 0; k < n; ++k) {
    const ControlVec su = lin.grad.controls[k] - lin.jac[k].b.transpose() * lambda[k];
    const ControlVec proj =
        d.controls[k] - clamp_control(d.controls[k] - su, prob.config);
    stat = std::max(stat, proj.lpNorm<Eigen::Infinity>());
  }
  return stat + residual_inf(lin.residuals);
}

}  // namespace

Decision cold_start(const OcpProblem& prob) {
  prob.validate();
  const int n = prob.config.horizon;
  Decision d;
  d.controls.resize(n);
  for (int k = 0; k < n; ++k) d.controls[k] = clamp_control(prob.refs[k].input, prob.config);
  d.states = rollout(prob.x0, d.controls, prob.params, prob.config.dt);
  return d;
}

Decision shift_warm_start(const Decision& prev, const OcpProblem& prob) {
  prob.validate();
  const int n = prob.config.horizon;
  if (!prev.sized_for(n))
    throw std::invalid_argument("shift_warm_start: decision sized for a different horizon");
  Decision d;
  d.controls.resize(n);
  for (int k = 0; k + 1 < n; ++k) d.controls[k] = prev.controls[k + 1];
  d.controls[n - 1] = prev.controls[n - 1];
  d.states = rollout(prob.x0, d.controls, prob.params, prob.config.dt);
  return d;
}

std::vector<StateVec> estimate_multipliers(const Decision& d, const OcpProblem& prob) {
  const Linearization lin = linearize_all(d, prob);
  return multipliers_from(lin, prob.config.horizon);
}

double kkt_residual(const Decision& d, const OcpProblem& prob,
                    const std::vector<StateVec>& multipliers) {
  if (multipliers.size() != static_cast<std::size_t>(prob.config.horizon))
    throw std::invalid_argument("kkt_residual: one multiplier per shooting gap expected");
  const Linearization lin = linearize_all(d, prob);
  return kkt_from(d, prob, lin, multipliers);
}

SolveResult solve(const OcpProblem& prob, const Decision& init, const SolverConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  prob.validate();
  cfg.validate();
  if (!init.sized_for(prob.config.horizon))
    throw std::invalid_argument("solve: init sized for a different horizon");
  if (!init.all_entries_finite()) throw std::invalid_argument("solve: init must be finite");

  const int n = prob.config.horizon;
  const int nv = kInputDim * n;
  const Weights& w = prob.weights;

  Decision z = init;
  for (ControlVec& u : z.controls) u = clamp_control(u, prob.config);
  if (!std::isfinite(total_objective(z, prob)))
    throw std::invalid_argument("solve: objective not finite at the initial guess");

  SolveResult result;
  result.status = SolveStatus::max_iterations;
  double mu = 1.0;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Linearization lin = linearize_all(z, prob);
    const std::vector<StateVec> lambda = multipliers_from(lin, n);
    const double cont_inf = residual_inf(lin.residuals);
    const double kkt = kkt_from(z, prob, lin, lambda);

    if (kkt <= cfg.kkt_tolerance && cont_inf <= cfg.constraint_tolerance) {
      result.status = SolveStatus::converged;
      result.iterations = it;
      break;
    }

    // Condense: eliminate the state steps through the linearized dynamics,
    // leaving a box QP in the stacked control steps.
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(nv, nv);
    Eigen::VectorXd grad_c(nv);
    Eigen::VectorXd lb(nv), ub(nv);
    for (int k = 0; k < n; ++k) {
      ControlVec diag = 2.0 * w.r + 2.0 * w.r_delta;
      if (k + 1 < n) {
        diag += 2.0 * w.r_delta;
        h.block<kInputDim, kInputDim>(kInputDim * k, kInputDim * (k + 1)).diagonal() =
            -2.0 * w.r_delta;
        h.block<kInputDim, kInputDim>(kInputDim * (k + 1), kInputDim * k).diagonal() =
            -2.0 * w.r_delta;
      }
      h.block<kInputDim, kInputDim>(kInputDim * k, kInputDim * k).diagonal() = diag;
      grad_c.segment<kInputDim>(kInputDim * k) = lin.grad.controls[k];
      lb.segment<kInputDim>(kInputDim * k) = prob.config.u_min - z.controls[k];
      ub.segment<kInputDim>(kInputDim * k) = prob.config.u_max - z.controls[k];
    }

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kStateDim, nv);
    StateVec wvec;
    for (int k = 0; k < n; ++k) {
      if (k == 0) {
        m.block<kStateDim, kInputDim>(0, 0) = lin.jac[0].b;
        wvec = -lin.residuals[0];
      } else {
        m.leftCols(kInputDim * k) = (lin.jac[k].a * m.leftCols(kInputDim * k)).eval();
        m.block<kStateDim, kInputDim>(0, kInputDim * k) = lin.jac[k].b;
        wvec = lin.jac[k].a * wvec - lin.residuals[k];
      }
      const int node = k + 1;
      const int mcols = kInputDim * node;
      const StateVec hx = (node < n) ? StateVec(2.0 * w.q) : StateVec(2.0 * w.q_f);
      const Mat3 hpos = node_obstacle_gn_hessian(position(z.states[node - 1]), prob.field,
                                                 prob.config.obstacle_mode);
      const auto ml = m.leftCols(mcols);
      Eigen::MatrixXd wm = hx.asDiagonal() * ml;
      wm.topRows<3>() += hpos * ml.topRows<3>();
      h.topLeftCorner(mcols, mcols) += ml.transpose() * wm;
      StateVec hw = hx.cwiseProduct(wvec) + lin.grad.states[node - 1];
      hw.head<3>() += hpos * wvec.head<3>();
      grad_c.head(mcols) += ml.transpose() * hw;
    }
    if (h.diagonal().minCoeff() < 1e-10) h.diagonal().array() += 1e-10;

    const Eigen::VectorXd du = BoxQp(h, grad_c, lb, ub).solve(1e-8);

    std::vector<ControlVec> step_u(n);
    std::vector<StateVec> step_x(n);
    for (int k = 0; k < n; ++k) {
      step_u[k] = du.segment<kInputDim>(kInputDim * k);
      step_x[k] = (k == 0) ? StateVec(lin.jac[0].b * step_u[0] - lin.residuals[0])
                           : StateVec(lin.jac[k].a * step_x[k - 1] + lin.jac[k].b * step_u[k] -
                                      lin.residuals[k]);
    }

    double lambda_max = 0.0;
    for (const StateVec& l : lambda)
      lambda_max = std::max(lambda_max, l.lpNorm<Eigen::Infinity>());
    mu = std::max({mu, 10.0 * lambda_max, 1.0});

    const double cont_l1 = residual_l1(lin.residuals);
    const double merit0 = total_objective(z, prob) + mu * cont_l1;
    double dir_deriv = -mu * cont_l1;
    for (int k = 0; k < n; ++k) {
      dir_deriv += lin.grad.states[k].dot(step_x[k]);
      dir_deriv += lin.grad.controls[k].dot(step_u[k]);
    }

    bool accepted = false;
    double t = 1.0;
    Decision trial;
    double merit_t = merit0;
    while (t >= cfg.line_search_min_step) {
      trial = z;
      for (int k = 0; k < n; ++k) {
        trial.states[k] += t * step_x[k];
        trial.controls[k] = clamp_control(trial.controls[k] + t * step_u[k], prob.config);
      }
      const double obj_t = total_objective(trial, prob);
      merit_t = obj_t + mu * residual_l1(continuity_residuals(trial, prob));
      // Near a stationary point the achievable merit decrease drops below
      // the representable resolution at the merit's scale; the acceptance
      // slack keeps full Newton-type steps viable there.
      const double slack = 1e-13 * (1.0 + std::abs(merit0));
      const bool armijo = merit_t <= merit0 + 1e-4 * t * dir_deriv + slack;
      const bool plain_decrease = merit_t < merit0 + slack;
      if (std::isfinite(merit_t) && (dir_deriv < 0.0 ? armijo : plain_decrease)) {
        accepted = true;
        break;
      }
      t *= cfg.line_search_shrink;
    }

    if (!accepted) {
      result.status = SolveStatus::line_search_failure;
      result.iterations = it;
      break;
    }

    z = trial;
    result.iterations = it + 1;
    result.trace.push_back({merit0, merit_t, t, mu, kkt});
  }

  const Linearization fin = linearize_all(z, prob);
  result.decision = std::move(z);
  result.objective = total_objective(result.decision, prob);
  result.continuity_residual_inf = residual_inf(fin.residuals);
  result.kkt_residual = kkt_from(result.decision, prob, fin, multipliers_from(fin, n));
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace quadmpc
