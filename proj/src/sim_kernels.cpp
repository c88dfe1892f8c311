#include "cforge/sim_kernels.hpp"

#include <cstring>

#include "cforge/errors.hpp"

namespace cforge::kernels {

namespace {

void flatten(const Matrix& m, std::vector<double>& out) {
    out.resize(static_cast<size_t>(m.rows()) * m.cols());
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            out[static_cast<size_t>(r) * m.cols() + c] = m(r, c);
        }
    }
}

// y += M x for a row-major dense block
inline void mat_vec_add(const double* m, int rows, int cols, const double* x,
                        double* y) {
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = m + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] += acc;
    }
}

inline double quad_form(const double* m, int dim, const double* x) {
    double acc = 0.0;
    for (int r = 0; r < dim; ++r) {
        const double* row = m + static_cast<size_t>(r) * dim;
        double partial = 0.0;
        for (int c = 0; c < dim; ++c) partial += row[c] * x[c];
        acc += x[r] * partial;
    }
    return acc;
}

// Relative states and coupling outputs for one ordered pair.
inline void pair_body(const ClosedLoopModel& mo, const double* state, int owner,
                      int p, Workspace& ws) {
    const double* xi = state + mo.agent_at(owner);
    const double* xj = state + mo.agent_at(mo.nbr[p]);
    double* rel = ws.rel.data() + static_cast<size_t>(p) * mo.n;
    for (int c = 0; c < mo.n; ++c) rel[c] = xj[c] - xi[c];

    double* out = ws.pair_out.data() + static_cast<size_t>(p) * mo.nw;
    std::memset(out, 0, sizeof(double) * mo.nw);
    if (mo.has_filter) {
        const double* z = state + mo.filter_at(p);
        mat_vec_add(mo.cf.data(), mo.nw, mo.nf, z, out);
        mat_vec_add(mo.df.data(), mo.nw, mo.n, rel, out);
    } else {
        mat_vec_add(mo.gamma.data(), mo.nw, mo.n, rel, out);
    }
}

// Control, state derivative, and cost integrand for one agent.
inline void agent_body(const ClosedLoopModel& mo, const double* state,
                       double* deriv, int i, Workspace& ws) {
    const int n = mo.n;
    const int m = mo.m;
    const double* x0 = state + mo.leader_at();
    const double* xi = state + mo.agent_at(i);

    double zsum[32];  // n is small by construction; guarded in build()
    for (int c = 0; c < n; ++c) zsum[c] = mo.pin[i] * (x0[c] - xi[c]);
    for (int p = mo.nbr_offset[i]; p < mo.nbr_offset[i + 1]; ++p) {
        const double* rel = ws.rel.data() + static_cast<size_t>(p) * n;
        for (int c = 0; c < n; ++c) zsum[c] += rel[c];
    }

    double* u = ws.u.data() + static_cast<size_t>(i) * m;
    for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        const double* row = mo.k.data() + static_cast<size_t>(r) * n;
        for (int c = 0; c < n; ++c) acc += row[c] * zsum[c];
        u[r] = -acc;
    }

    double* dxi = deriv + mo.agent_at(i);
    std::memset(dxi, 0, sizeof(double) * n);
    mat_vec_add(mo.a.data(), n, n, xi, dxi);
    mat_vec_add(mo.b1.data(), n, m, u, dxi);
    for (int p = mo.nbr_offset[i]; p < mo.nbr_offset[i + 1]; ++p) {
        const double* out = ws.pair_out.data() + static_cast<size_t>(p) * mo.nw;
        mat_vec_add(mo.b2.data(), n, mo.nw, out, dxi);
    }

    double cost = 0.0;
    for (int p = mo.nbr_offset[i]; p < mo.nbr_offset[i + 1]; ++p) {
        cost += 0.5 * quad_form(mo.q.data(), n,
                                ws.rel.data() + static_cast<size_t>(p) * n);
    }
    if (mo.pin[i] != 0.0) {
        double e[32];
        for (int c = 0; c < n; ++c) e[c] = x0[c] - xi[c];
        cost += mo.pin[i] * quad_form(mo.q.data(), n, e);
    }
    cost += quad_form(mo.r.data(), m, u);
    ws.cost[i] = cost;
}

inline void filter_body(const ClosedLoopModel& mo, const double* state,
                        double* deriv, int p, Workspace& ws) {
    const double* z = state + mo.filter_at(p);
    double* dz = deriv + mo.filter_at(p);
    std::memset(dz, 0, sizeof(double) * mo.nf);
    mat_vec_add(mo.af.data(), mo.nf, mo.nf, z, dz);
    mat_vec_add(mo.bf.data(), mo.nf, mo.n,
                ws.rel.data() + static_cast<size_t>(p) * mo.n, dz);
}

inline void finish(const ClosedLoopModel& mo, const double* state, double* deriv,
                   Workspace& ws) {
    double* dx0 = deriv + mo.leader_at();
    std::memset(dx0, 0, sizeof(double) * mo.n);
    mat_vec_add(mo.a.data(), mo.n, mo.n, state + mo.leader_at(), dx0);

    double total = 0.0;
    for (int i = 0; i < mo.agents; ++i) total += ws.cost[i];
    deriv[mo.cost_at()] = total;
}

}  // namespace

ClosedLoopModel ClosedLoopModel::build(const NetworkSpec& spec, const Matrix& gain,
                                       const CouplingOperator& coupling) {
    spec.validate();
    validate_coupling(coupling, spec.n);
    if (gain.rows() != spec.m_in || gain.cols() != spec.n) {
        throw DimensionMismatch("gain must be m_in x n");
    }
    if (coupling_output_dim(coupling, spec.n) != spec.coupling_width()) {
        throw DimensionMismatch("coupling output width does not match B2");
    }
    if (spec.n > 32) {
        throw DimensionMismatch("agent state dimension above the kernel limit (32)");
    }

    ClosedLoopModel mo;
    mo.n = spec.n;
    mo.m = spec.m_in;
    mo.nw = spec.coupling_width();
    mo.agents = spec.agent_count();
    mo.has_filter = std::holds_alternative<LtiFilter>(coupling);
    mo.nf = coupling_state_dim(coupling);

    flatten(spec.A, mo.a);
    flatten(spec.B1, mo.b1);
    flatten(spec.B2, mo.b2);
    flatten(gain, mo.k);
    flatten(spec.Q, mo.q);
    flatten(spec.R, mo.r);
    if (mo.has_filter) {
        const auto& f = std::get<LtiFilter>(coupling);
        flatten(f.A, mo.af);
        flatten(f.B, mo.bf);
        flatten(f.C, mo.cf);
        flatten(f.D, mo.df);
    } else {
        flatten(std::get<MemorylessGain>(coupling).gamma, mo.gamma);
    }

    mo.nbr_offset.assign(mo.agents + 1, 0);
    for (int i = 1; i <= mo.agents; ++i) {
        mo.nbr_offset[i] =
            mo.nbr_offset[i - 1] + spec.graph.degree(i);
    }
    mo.pairs = mo.nbr_offset[mo.agents];
    mo.nbr.resize(mo.pairs);
    for (int i = 1; i <= mo.agents; ++i) {
        int at = mo.nbr_offset[i - 1];
        for (int j : spec.graph.neighbors(i)) mo.nbr[at++] = j - 1;
    }
    mo.pin.resize(mo.agents);
    for (int i = 0; i < mo.agents; ++i) {
        mo.pin[i] = static_cast<double>(spec.pinning.gains[i]);
    }

    mo.state_dim = mo.n * (1 + mo.agents) + mo.pairs * mo.nf + 1;
    return mo;
}

Workspace::Workspace(const ClosedLoopModel& model)
    : rel(static_cast<size_t>(model.pairs) * model.n, 0.0),
      pair_out(static_cast<size_t>(model.pairs) * model.nw, 0.0),
      u(static_cast<size_t>(model.agents) * model.m, 0.0),
      cost(model.agents, 0.0) {}

void rhs_serial(const ClosedLoopModel& mo, const double* state, double* deriv,
                Workspace& ws) {
    for (int i = 0; i < mo.agents; ++i) {
        for (int p = mo.nbr_offset[i]; p < mo.nbr_offset[i + 1]; ++p) {
            pair_body(mo, state, i, p, ws);
        }
    }
    for (int i = 0; i < mo.agents; ++i) agent_body(mo, state, deriv, i, ws);
    if (mo.has_filter) {
        for (int p = 0; p < mo.pairs; ++p) filter_body(mo, state, deriv, p, ws);
    }
    finish(mo, state, deriv, ws);
}

void rhs_parallel(const ClosedLoopModel& mo, const double* state, double* deriv,
                  Workspace& ws) {
#ifdef CFORGE_HAVE_OPENMP
#pragma omp parallel for schedule(static)
    for (int i = 0; i < mo.agents; ++i) {
        for (int p = mo.nbr_offset[i]; p < mo.nbr_offset[i + 1]; ++p) {
            pair_body(mo, state, i, p, ws);
        }
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < mo.agents; ++i) agent_body(mo, state, deriv, i, ws);
    if (mo.has_filter) {
#pragma omp parallel for schedule(static)
        for (int p = 0; p < mo.pairs; ++p) filter_body(mo, state, deriv, p, ws);
    }
    finish(mo, state, deriv, ws);
#else
    rhs_serial(mo, state, deriv, ws);
#endif
}

void evaluate_outputs(const ClosedLoopModel& mo, const double* state,
                      Workspace& ws) {
    std::vector<double> scratch(static_cast<size_t>(mo.state_dim), 0.0);
    for (int i = 0; i < mo.agents; ++i) {
        for (int p = mo.nbr_offset[i]; p < mo.nbr_offset[i + 1]; ++p) {
            pair_body(mo, state, i, p, ws);
        }
    }
    for (int i = 0; i < mo.agents; ++i) {
        agent_body(mo, state, scratch.data(), i, ws);
    }
}

bool parallel_available() {
#ifdef CFORGE_HAVE_OPENMP
    return true;
#else
    return false;
#endif
}

}  // namespace cforge::kernels
