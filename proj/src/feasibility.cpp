#include <algorithm>
#include <cmath>
#include <limits>

#include "cforge/errors.hpp"
#include "cforge/lmi.hpp"

// ============================================================================
// Strict feasibility search for affine matrix inequalities.
//
// The problem  "find x with lambda_max(M(x)) <= -margin_tol"  is solved as the
// epigraph program  min t  s.t.  M(x) - t I < 0,  via a log-det barrier with
// damped Newton centering and a geometric schedule on the path parameter.
// Flagged variables carry -log(x_j) terms; every variable lives in a large box
// so the analytic center always exists (some multipliers are otherwise free to
// drift to infinity once their blocks stop being active).
//
// The solver is only a search. The returned margin is always recomputed from
// scratch by negdef_margin, and callers are expected to trust that number, not
// the path that produced it.
// ============================================================================

namespace cforge {

namespace {

struct BarrierState {
    Vector z;       // x stacked with the epigraph variable t
    Matrix s;       // t I - M(x)
    Eigen::LLT<Matrix> llt;
};

double barrier_value(const AffineLmi& lmi, const SolverOptions& opt,
                     const BarrierState& st) {
    const int v = lmi.variable_count;
    const Matrix& l = st.llt.matrixL();
    double val = 0.0;
    for (int i = 0; i < l.rows(); ++i) val -= 2.0 * std::log(l(i, i));
    for (int j = 0; j < v; ++j) {
        const double xj = st.z(j);
        if (lmi.positive[j]) {
            val -= std::log(xj) + std::log(opt.var_bound - xj);
        } else {
            val -= std::log(opt.var_bound - xj) + std::log(opt.var_bound + xj);
        }
    }
    return val;
}

bool in_box(const AffineLmi& lmi, const SolverOptions& opt, const Vector& z) {
    for (int j = 0; j < lmi.variable_count; ++j) {
        if (lmi.positive[j] && z(j) <= 0.0) return false;
        if (std::abs(z(j)) >= opt.var_bound) return false;
    }
    return true;
}

// Rebuilds S = t I - M(x) and factors it. Returns false if not PD.
bool refresh(const AffineLmi& lmi, const SolverOptions& opt, BarrierState& st) {
    if (!in_box(lmi, opt, st.z)) return false;
    const int v = lmi.variable_count;
    const int m = lmi.dim();
    st.s = -lmi.constant.mat();
    for (int j = 0; j < v; ++j) st.s -= st.z(j) * lmi.coeffs[j].mat();
    st.s += st.z(v) * Matrix::Identity(m, m);
    st.llt.compute(st.s);
    return st.llt.info() == Eigen::Success && st.llt.matrixLLT()(0, 0) > 0.0;
}

double max_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("eigenvalue computation failed");
    }
    return eig.eigenvalues().maxCoeff();
}

}  // namespace

FeasibilityResult solve_feasibility(const AffineLmi& lmi, double margin_tol,
                                    const SolverOptions& opt) {
    const int v = lmi.variable_count;
    const int m = lmi.dim();
    if (v <= 0 || m <= 0) {
        throw DimensionMismatch("feasibility problem is empty");
    }
    if (static_cast<int>(lmi.positive.size()) != v ||
        static_cast<int>(lmi.coeffs.size()) != v) {
        throw DimensionMismatch("inconsistent LMI description");
    }
    if (margin_tol <= 0.0) {
        throw DimensionMismatch("margin tolerance must be positive");
    }

    BarrierState st;
    st.z.resize(v + 1);
    if (opt.start && opt.start->size() == v) {
        st.z.head(v) = *opt.start;
        for (int j = 0; j < v; ++j) {
            if (lmi.positive[j] && st.z(j) <= 0.0) st.z(j) = 1.0;
        }
    } else {
        for (int j = 0; j < v; ++j) st.z(j) = lmi.positive[j] ? 1.0 : 0.0;
    }
    {
        Matrix m0 = lmi.constant.mat();
        for (int j = 0; j < v; ++j) m0 += st.z(j) * lmi.coeffs[j].mat();
        const double lam = max_eigenvalue(m0);
        st.z(v) = lam + std::max(1.0, 0.05 * m0.cwiseAbs().maxCoeff());
    }
    if (!refresh(lmi, opt, st)) {
        throw NumericalFailure("could not build a strictly interior start");
    }

    const double nu = static_cast<double>(m) + 2.0 * v;
    double mu = nu / std::max(1.0, std::abs(st.z(v)));

    FeasibilityResult res;
    res.diagnostics.lower_bound = -std::numeric_limits<double>::infinity();
    int total_newton = 0;
    bool budget_exhausted = false;
    bool converged = false;
    bool stalled_early = false;

    std::vector<Matrix> w(v + 1);
    Vector grad(v + 1), step(v + 1);
    Matrix hess(v + 1, v + 1);

    while (true) {
        ++res.diagnostics.centering_rounds;
        bool centered = false;
        bool stalled = false;
        for (int it = 0; it < opt.max_newton_per_center; ++it) {
            if (++total_newton > opt.max_newton_total) {
                budget_exhausted = true;
                break;
            }

            const Matrix sinv = st.llt.solve(Matrix::Identity(m, m));
            for (int a = 0; a <= v; ++a) {
                if (a < v) {
                    w[a] = sinv * lmi.coeffs[a].mat();
                    grad(a) = lmi.coeffs[a].mat().cwiseProduct(sinv).sum();
                } else {
                    w[a] = -sinv;
                    grad(a) = -sinv.trace();
                }
            }
            for (int j = 0; j < v; ++j) {
                const double xj = st.z(j);
                if (lmi.positive[j]) {
                    grad(j) += -1.0 / xj + 1.0 / (opt.var_bound - xj);
                } else {
                    grad(j) += 1.0 / (opt.var_bound - xj) - 1.0 / (opt.var_bound + xj);
                }
            }
            grad(v) += mu;

            for (int a = 0; a <= v; ++a) {
                for (int b = a; b <= v; ++b) {
                    const double h = w[a].cwiseProduct(w[b].transpose()).sum();
                    hess(a, b) = h;
                    hess(b, a) = h;
                }
            }
            for (int j = 0; j < v; ++j) {
                const double xj = st.z(j);
                if (lmi.positive[j]) {
                    hess(j, j) += 1.0 / (xj * xj) +
                                  1.0 / ((opt.var_bound - xj) * (opt.var_bound - xj));
                } else {
                    hess(j, j) += 1.0 / ((opt.var_bound - xj) * (opt.var_bound - xj)) +
                                  1.0 / ((opt.var_bound + xj) * (opt.var_bound + xj));
                }
            }
            hess.diagonal().array() += 1e-13 * std::max(1.0, hess.trace());

            step = hess.ldlt().solve(-grad);
            const double decrement_sq = -grad.dot(step);
            if (!(decrement_sq > 1e-10)) {
                centered = true;
                break;
            }

            const double psi0 = mu * st.z(v) + barrier_value(lmi, opt, st);
            const double slope = grad.dot(step);
            BarrierState trial = st;
            double s = 1.0;
            bool moved = false;
            while (s > 1e-14) {
                trial.z = st.z + s * step;
                if (refresh(lmi, opt, trial)) {
                    const double psi = mu * trial.z(v) + barrier_value(lmi, opt, trial);
                    if (psi <= psi0 + 0.01 * s * slope) {
                        st = std::move(trial);
                        moved = true;
                        break;
                    }
                    trial = st;
                }
                s *= 0.5;
            }
            if (!moved) {
                stalled = true;
                break;
            }
        }
        res.diagnostics.newton_iterations = total_newton;
        res.diagnostics.objective = st.z(v);

        if (budget_exhausted) break;

        const double gap = nu / mu;
        res.diagnostics.duality_gap = gap;
        if (centered) {
            res.diagnostics.lower_bound =
                std::max(res.diagnostics.lower_bound, st.z(v) - 2.0 * gap);
        }
        if (res.diagnostics.lower_bound > -margin_tol) {
            converged = true;
            res.diagnostics.note = "epigraph optimum certified above the margin";
            break;
        }
        if (st.z(v) <= opt.objective_floor) {
            converged = true;
            res.diagnostics.note = "objective floor reached";
            break;
        }
        if (gap <= opt.gap_abs_tol + opt.gap_rel_tol * std::abs(st.z(v))) {
            converged = true;
            res.diagnostics.note = "path converged";
            break;
        }
        if (stalled) {
            // A stall once the gap is already small is ordinary endgame noise;
            // anywhere else it means the search never reached the optimum.
            if (gap <= 1e-6 + 1e-3 * std::abs(st.z(v))) {
                converged = true;
                res.diagnostics.note = "path converged (line search exhausted)";
            } else {
                stalled_early = true;
                res.diagnostics.note = "line search stalled off the central path";
            }
            break;
        }
        mu *= 10.0;
    }

    // The trust anchor: recompute the margin from the returned point.
    res.x = st.z.head(v);
    res.margin = negdef_margin(lmi.eval(res.x));

    bool positivity_ok = true;
    for (int j = 0; j < v; ++j) {
        if (lmi.positive[j] && res.x(j) < opt.pos_tol) positivity_ok = false;
    }
    bool blocks_ok = true;
    for (const auto& blk : lmi.pd_blocks) {
        Matrix y = Matrix::Zero(blk.dim, blk.dim);
        int idx = 0;
        for (int a = 0; a < blk.dim; ++a) {
            for (int b = a; b < blk.dim; ++b) {
                const double val = res.x(blk.vars[idx++]);
                y(a, b) = val;
                y(b, a) = val;
            }
        }
        if (negdef_margin(SymMatrix(-y)) < opt.pos_tol) blocks_ok = false;
    }

    if (res.margin >= margin_tol && positivity_ok && blocks_ok) {
        res.status = FeasStatus::Feasible;
    } else if (res.diagnostics.lower_bound > -margin_tol) {
        res.status = FeasStatus::Infeasible;
    } else if (budget_exhausted || stalled_early || !converged) {
        res.status = FeasStatus::Indeterminate;
        if (budget_exhausted) res.diagnostics.note = "newton budget exhausted";
    } else {
        res.status = FeasStatus::Infeasible;
        res.diagnostics.note = "optimum margin below requested tolerance";
    }
    return res;
}

}  // namespace cforge
