// SPDX-License-Identifier: Apache-2.0
#include "cfjcas/socp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "cfjcas/errors.hpp"

namespace cfjcas::socp {

namespace {

struct PreparedCone {
  RMatrix a;
  RVector b;
  RVector f;
  double g = 0.0;
  RMatrix ata;  // A^T A, cached for Hessian assembly
};

// Row-scaled copy of the program. Scaling each cone by a positive factor and
// the objective to unit infinity-norm leaves the feasible set and argmin
// unchanged while keeping the barrier numerics well conditioned.
struct Prepared {
  int n = 0;
  RVector c;
  double obj_scale = 1.0;
  std::vector<PreparedCone> cones;
  bool nonneg = true;
  double nu = 0.0;
};

void validate_shapes(const Program& p) {
  if (p.n_vars < 1) throw ShapeError("socp: n_vars must be >= 1");
  if (p.objective.size() != p.n_vars)
    throw ShapeError("socp: objective size mismatch");
  if (p.cones.empty() && !p.nonneg)
    throw ShapeError("socp: at least one cone or bound constraint required");
  for (const Cone& c : p.cones) {
    if (c.f.size() != p.n_vars) throw ShapeError("socp: cone f size mismatch");
    if (c.a.rows() != c.b.size()) throw ShapeError("socp: cone A/b rows mismatch");
    if (c.a.rows() > 0 && c.a.cols() != p.n_vars)
      throw ShapeError("socp: cone A cols mismatch");
  }
}

Prepared prepare(const Program& p) {
  validate_shapes(p);
  Prepared w;
  w.n = p.n_vars;
  w.nonneg = p.nonneg;
  w.obj_scale = p.objective.cwiseAbs().maxCoeff();
  if (!(w.obj_scale > 0.0)) w.obj_scale = 1.0;
  w.c = p.objective / w.obj_scale;
  w.cones.reserve(p.cones.size());
  for (const Cone& c : p.cones) {
    double s = std::max(c.f.cwiseAbs().maxCoeff(), std::abs(c.g));
    if (c.a.rows() > 0)
      s = std::max({s, c.a.cwiseAbs().maxCoeff(), c.b.cwiseAbs().maxCoeff()});
    if (!(s > 0.0)) s = 1.0;
    PreparedCone pc;
    pc.a = c.a / s;
    pc.b = c.b / s;
    pc.f = c.f / s;
    pc.g = c.g / s;
    pc.ata = (pc.a.rows() > 0) ? RMatrix(pc.a.transpose() * pc.a)
                               : RMatrix::Zero(w.n, w.n);
    w.cones.push_back(std::move(pc));
  }
  w.nu = 2.0 * static_cast<double>(w.cones.size()) + (w.nonneg ? w.n : 0);
  return w;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Barrier over the scaled cones: -sum ln((f.x+g)^2 - ||Ax+b||^2) - sum ln x_i.
// Returns false when x is outside the domain.
bool barrier_eval(const Prepared& w, const RVector& x, double* value,
                  RVector* grad, RMatrix* hess) {
  double val = 0.0;
  if (grad) grad->setZero(w.n);
  if (hess) hess->setZero(w.n, w.n);
  if (w.nonneg) {
    for (int i = 0; i < w.n; ++i) {
      if (!(x(i) > 0.0)) return false;
      val -= std::log(x(i));
      if (grad) (*grad)(i) -= 1.0 / x(i);
      if (hess) (*hess)(i, i) += 1.0 / (x(i) * x(i));
    }
  }
  for (const PreparedCone& c : w.cones) {
    const double t = c.f.dot(x) + c.g;
    if (!(t > 0.0)) return false;
    double z;
    RVector atu;  // A^T u
    if (c.a.rows() > 0) {
      const RVector u = c.a * x + c.b;
      z = t * t - u.squaredNorm();
      if (grad || hess) atu = c.a.transpose() * u;
    } else {
      z = t * t;
      if (grad || hess) atu = RVector::Zero(w.n);
    }
    if (!(z > 0.0) || !std::isfinite(z)) return false;
    val -= std::log(z);
    if (grad) *grad += (2.0 / z) * (atu - t * c.f);
    if (hess) {
      const RVector v = (2.0 / z) * (t * c.f - atu);
      hess->noalias() += (2.0 / z) * (c.ata - c.f * c.f.transpose());
      hess->noalias() += v * v.transpose();
    }
  }
  if (value) *value = val;
  return std::isfinite(val);
}

// Newton centering for t*c.x + phi(x); x updated in place. Returns the number
// of Newton steps. `early` may stop the descent as soon as the current point
// satisfies a caller-side goal (used by phase-1).
int center(const Prepared& w, double t, RVector& x, int max_steps,
           const std::function<bool(const RVector&)>* early = nullptr) {
  RVector grad(w.n);
  RMatrix hess(w.n, w.n);
  int steps = 0;
  for (; steps < max_steps; ++steps) {
    if (early && (*early)(x)) break;
    double phi;
    if (!barrier_eval(w, x, &phi, &grad, &hess)) break;
    RVector g_tot = t * w.c + grad;

    const double reg0 = 1e-12 * (1.0 + hess.trace() / w.n);
    RVector dx;
    bool solved = false;
    for (double reg = reg0; reg < 1e6; reg *= 1e3) {
      RMatrix h = hess;
      h.diagonal().array() += reg;
      Eigen::LLT<RMatrix> llt(h);
      if (llt.info() == Eigen::Success) {
        dx = llt.solve(-g_tot);
        solved = dx.allFinite();
        if (solved) break;
      }
    }
    if (!solved) break;

    const double lambda2 = -g_tot.dot(dx);
    if (lambda2 * 0.5 <= 1e-10) break;

    const double merit0 = t * w.c.dot(x) + phi;
    const double slope = g_tot.dot(dx);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 70; ++ls, alpha *= 0.5) {
      const RVector trial = x + alpha * dx;
      double phi_trial;
      if (!barrier_eval(w, trial, &phi_trial, nullptr, nullptr)) continue;
      if (t * w.c.dot(trial) + phi_trial <= merit0 + 0.25 * alpha * slope) {
        x = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (x.cwiseAbs().maxCoeff() > 1e14) break;  // runaway iterates
  }
  return steps;
}

bool strictly_feasible_start(const Prepared& w, const RVector& x) {
  if (x.size() != w.n) return false;
  if (w.nonneg && (x.array() <= 0.0).any()) return false;
  for (const PreparedCone& c : w.cones) {
    const double t = c.f.dot(x) + c.g;
    const double un = (c.a.rows() > 0) ? (c.a * x + c.b).norm() : 0.0;
    if (!(t - un > 1e-12 * (1.0 + std::abs(t)))) return false;
  }
  double phi;
  return barrier_eval(w, x, &phi, nullptr, nullptr);
}

struct Phase1Result {
  bool interior_found = false;
  bool certified_infeasible = false;
  RVector x;
};

// Max-min-slack feasibility problem over (x, s): maximize s subject to every
// cone keeping slack >= s (and x_i >= s under the nonneg bound). The analytic
// start s0 = min slack - 1 is strictly feasible by construction.
Phase1Result phase1(const Prepared& w, const RVector* hint,
                    const SolverOptions& opt, int* stages, int* newton) {
  double g_max = 1.0;
  for (const PreparedCone& c : w.cones) g_max = std::max(g_max, std::abs(c.g));
  const double s_cap = 10.0 * (1.0 + g_max);

  Prepared p1;
  p1.n = w.n + 1;
  p1.nonneg = false;
  p1.obj_scale = 1.0;
  p1.c = RVector::Zero(p1.n);
  p1.c(w.n) = -1.0;  // maximize s
  for (const PreparedCone& c : w.cones) {
    PreparedCone e;
    if (c.a.rows() > 0) {
      e.a = RMatrix::Zero(c.a.rows(), p1.n);
      e.a.leftCols(w.n) = c.a;
    } else {
      e.a = RMatrix(0, p1.n);
    }
    e.b = c.b;
    e.f = RVector::Zero(p1.n);
    e.f.head(w.n) = c.f;
    e.f(w.n) = -1.0;
    e.g = c.g;
    e.ata = (e.a.rows() > 0) ? RMatrix(e.a.transpose() * e.a)
                             : RMatrix::Zero(p1.n, p1.n);
    p1.cones.push_back(std::move(e));
  }
  if (w.nonneg) {
    for (int i = 0; i < w.n; ++i) {
      PreparedCone e;
      e.a = RMatrix(0, p1.n);
      e.b = RVector(0);
      e.f = RVector::Zero(p1.n);
      e.f(i) = 1.0;
      e.f(w.n) = -1.0;
      e.g = 0.0;
      e.ata = RMatrix::Zero(p1.n, p1.n);
      p1.cones.push_back(std::move(e));
    }
  }
  {
    PreparedCone cap;  // s <= s_cap keeps phase-1 bounded
    cap.a = RMatrix(0, p1.n);
    cap.b = RVector(0);
    cap.f = RVector::Zero(p1.n);
    cap.f(w.n) = -1.0;
    cap.g = s_cap;
    cap.ata = RMatrix::Zero(p1.n, p1.n);
    p1.cones.push_back(std::move(cap));
  }
  p1.nu = 2.0 * static_cast<double>(p1.cones.size());

  RVector x0 = (hint && hint->size() == w.n) ? *hint : RVector::Ones(w.n);
  double min_slack = kInf;
  for (const PreparedCone& c : w.cones) {
    const double t = c.f.dot(x0) + c.g;
    const double un = (c.a.rows() > 0) ? (c.a * x0 + c.b).norm() : 0.0;
    min_slack = std::min(min_slack, t - un);
  }
  if (w.nonneg)
    for (int i = 0; i < w.n; ++i) min_slack = std::min(min_slack, x0(i));

  RVector x(p1.n);
  x.head(w.n) = x0;
  x(w.n) = std::min(min_slack, s_cap) - 1.0;

  const double exit_margin = 1e-3;
  std::function<bool(const RVector&)> early = [&](const RVector& p) {
    return p(w.n) >= exit_margin;
  };

  Phase1Result res;
  double t_bar = 1.0;
  for (int stage = 0; stage < opt.max_barrier_stages; ++stage) {
    ++*stages;
    *newton += center(p1, t_bar, x, opt.max_newton_per_stage, &early);
    const double s = x(w.n);
    if (s >= exit_margin) break;
    const double gap = p1.nu / t_bar;
    // Central-path bound: the optimal slack cannot exceed s + gap.
    if (s + gap < opt.tol) {
      res.certified_infeasible = true;
      return res;
    }
    if (gap <= opt.tol * (1.0 + std::abs(s))) break;
    t_bar *= opt.barrier_growth;
  }

  RVector cand = x.head(w.n);
  if (x(w.n) > 0.0 && strictly_feasible_start(w, cand)) {
    res.interior_found = true;
    res.x = std::move(cand);
  } else {
    res.certified_infeasible = x(w.n) <= opt.tol;
  }
  return res;
}

Solution solve_impl(const Program& program, const RVector* hint,
                    const SolverOptions& opt) {
  const Prepared w = prepare(program);
  Solution sol;

  RVector x;
  if (hint && strictly_feasible_start(w, *hint)) {
    x = *hint;
  } else {
    Phase1Result p1 = phase1(w, hint, opt, &sol.barrier_stages, &sol.newton_steps);
    if (!p1.interior_found) {
      sol.status = Status::infeasible;
      sol.q = RVector::Zero(w.n);
      return sol;
    }
    x = std::move(p1.x);
  }

  double t_bar = 1.0;
  double gap_rel = kInf;
  for (int stage = 0; stage < opt.max_barrier_stages; ++stage) {
    ++sol.barrier_stages;
    sol.newton_steps += center(w, t_bar, x, opt.max_newton_per_stage);
    gap_rel = w.nu / (t_bar * (1.0 + std::abs(w.c.dot(x))));
    if (gap_rel <= opt.tol) break;
    t_bar *= opt.barrier_growth;
  }

  sol.q = x;
  sol.objective_value = program.objective.dot(x);
  sol.kkt_residual = gap_rel;
  // Runaway iterates mean the objective is unbounded over the cones (or the
  // problem is numerically hopeless at that scale); never call that optimal.
  const bool diverged = !x.allFinite() || x.cwiseAbs().maxCoeff() > 1e12;
  sol.status =
      (gap_rel <= opt.tol && !diverged) ? Status::optimal : Status::max_iter;
  return sol;
}

}  // namespace

Solution solve(const Program& program, const SolverOptions& options) {
  return solve_impl(program, nullptr, options);
}

Solution solve(const Program& program, const RVector& hint,
               const SolverOptions& options) {
  return solve_impl(program, &hint, options);
}

std::optional<RVector> find_interior(const Program& program,
                                     const SolverOptions& options) {
  const Prepared w = prepare(program);
  int stages = 0, newton = 0;
  Phase1Result p1 = phase1(w, nullptr, options, &stages, &newton);
  if (!p1.interior_found) return std::nullopt;
  return p1.x;
}

FeasibilityReport feasibility_check(const Program& program, const RVector& q,
                                    double tol) {
  validate_shapes(program);
  if (q.size() != program.n_vars)
    throw ShapeError("feasibility_check: point size mismatch");
  FeasibilityReport rep;
  for (std::size_t i = 0; i < program.cones.size(); ++i) {
    const Cone& c = program.cones[i];
    const double un = (c.a.rows() > 0) ? (c.a * q + c.b).norm() : 0.0;
    const double viol = un - (c.f.dot(q) + c.g);
    if (viol > rep.worst_cone_violation) {
      rep.worst_cone_violation = viol;
      rep.worst_cone = static_cast<int>(i);
    }
  }
  rep.min_variable = q.minCoeff();
  rep.feasible = (program.cones.empty() || rep.worst_cone_violation <= tol) &&
                 (!program.nonneg || rep.min_variable >= -tol);
  return rep;
}

std::string dump(const Program& program) {
  std::ostringstream os;
  os << "minimize " << program.objective.transpose() << "\n";
  for (std::size_t i = 0; i < program.cones.size(); ++i) {
    const Cone& c = program.cones[i];
    os << "cone " << i << ": ||";
    for (Eigen::Index r = 0; r < c.a.rows(); ++r)
      os << (r ? "; " : "") << c.a.row(r) << " q + " << c.b(r);
    os << "|| <= " << c.f.transpose() << " q + " << c.g << "\n";
  }
  if (program.nonneg) os << "q >= 0\n";
  return os.str();
}

}  // namespace cfjcas::socp
