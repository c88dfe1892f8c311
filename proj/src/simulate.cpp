#include "cforge/simulate.hpp"

#include <cmath>
#include <cstring>
#include <vector>

#include "cforge/errors.hpp"

namespace cforge {

namespace {

constexpr double kBlowupGuard = 1e9;
constexpr double kHorizonTail = 1e-4;

using RhsFn = void (*)(const kernels::ClosedLoopModel&, const double*, double*,
                       kernels::Workspace&);

void rk4_step(const kernels::ClosedLoopModel& mo, RhsFn rhs, double h,
              std::vector<double>& x, std::vector<double>& k1,
              std::vector<double>& k2, std::vector<double>& k3,
              std::vector<double>& k4, std::vector<double>& tmp,
              kernels::Workspace& ws) {
    const int dim = mo.state_dim;
    rhs(mo, x.data(), k1.data(), ws);
    for (int c = 0; c < dim; ++c) tmp[c] = x[c] + 0.5 * h * k1[c];
    rhs(mo, tmp.data(), k2.data(), ws);
    for (int c = 0; c < dim; ++c) tmp[c] = x[c] + 0.5 * h * k2[c];
    rhs(mo, tmp.data(), k3.data(), ws);
    for (int c = 0; c < dim; ++c) tmp[c] = x[c] + h * k3[c];
    rhs(mo, tmp.data(), k4.data(), ws);
    for (int c = 0; c < dim; ++c) {
        x[c] += (h / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
}

}  // namespace

SimulationResult simulate(const NetworkSpec& spec, const Matrix& gain,
                          const SimConfig& cfg) {
    spec.validate();
    const int n = spec.n;
    const int m = spec.m_in;
    const int big_n = spec.agent_count();
    if (cfg.dt <= 0.0) throw DimensionMismatch("dt must be positive");
    if (cfg.t_final < cfg.dt) throw DimensionMismatch("t_final must cover a step");
    if (cfg.record_stride < 1) throw DimensionMismatch("record stride must be >= 1");
    if (cfg.x0_init.size() != n) throw DimensionMismatch("x0_init must have length n");
    if (cfg.agent_init.rows() != n || cfg.agent_init.cols() != big_n) {
        throw DimensionMismatch("agent_init must be n x N");
    }

    const long long steps = std::llround(cfg.t_final / cfg.dt);
    if (steps < 1 || std::abs(steps * cfg.dt - cfg.t_final) > 1e-9 * cfg.t_final) {
        throw DimensionMismatch("t_final must be an integer number of steps");
    }
    if (steps % cfg.record_stride != 0) {
        throw DimensionMismatch("record stride must divide the step count");
    }

    const auto mo = kernels::ClosedLoopModel::build(spec, gain, cfg.coupling);
    const bool parallel =
        cfg.exec == kernels::Exec::Parallel ||
        (cfg.exec == kernels::Exec::Auto && big_n >= 64 &&
         kernels::parallel_available());
    RhsFn rhs = parallel ? kernels::rhs_parallel : kernels::rhs_serial;

    const int samples = static_cast<int>(steps / cfg.record_stride) + 1;
    SimulationResult res;
    res.dt = cfg.dt * cfg.record_stride;
    res.gain = gain;
    res.coupling = cfg.coupling;
    res.time.resize(samples);
    res.leader.resize(n, samples);
    res.agents.resize(big_n * n, samples);
    res.errors.resize(big_n * n, samples);
    res.controls.resize(big_n * m, samples);
    res.pair_inputs.resize(mo.pairs * n, samples);
    res.pair_outputs.resize(mo.pairs * mo.nw, samples);
    res.e_norm.resize(samples);
    res.running_cost.resize(samples);

    std::vector<double> x(mo.state_dim, 0.0);
    for (int c = 0; c < n; ++c) x[mo.leader_at() + c] = cfg.x0_init(c);
    for (int i = 0; i < big_n; ++i) {
        for (int c = 0; c < n; ++c) x[mo.agent_at(i) + c] = cfg.agent_init(c, i);
    }

    kernels::Workspace ws(mo);
    std::vector<double> k1(mo.state_dim), k2(mo.state_dim), k3(mo.state_dim),
        k4(mo.state_dim), tmp(mo.state_dim);

    const auto record = [&](int s, double t) {
        kernels::evaluate_outputs(mo, x.data(), ws);
        res.time(s) = t;
        double en2 = 0.0;
        for (int c = 0; c < n; ++c) res.leader(c, s) = x[mo.leader_at() + c];
        for (int i = 0; i < big_n; ++i) {
            for (int c = 0; c < n; ++c) {
                const double xv = x[mo.agent_at(i) + c];
                const double ev = x[mo.leader_at() + c] - xv;
                res.agents(i * n + c, s) = xv;
                res.errors(i * n + c, s) = ev;
                en2 += ev * ev;
            }
            for (int r = 0; r < m; ++r) {
                res.controls(i * m + r, s) = ws.u[static_cast<size_t>(i) * m + r];
            }
        }
        for (int p = 0; p < mo.pairs; ++p) {
            for (int c = 0; c < n; ++c) {
                res.pair_inputs(p * n + c, s) = ws.rel[static_cast<size_t>(p) * n + c];
            }
            for (int c = 0; c < mo.nw; ++c) {
                res.pair_outputs(p * mo.nw + c, s) =
                    ws.pair_out[static_cast<size_t>(p) * mo.nw + c];
            }
        }
        res.e_norm(s) = std::sqrt(en2);
        res.running_cost(s) = x[mo.cost_at()];
    };

    int sample = 0;
    record(sample++, 0.0);
    for (long long step = 1; step <= steps; ++step) {
        rk4_step(mo, rhs, cfg.dt, x, k1, k2, k3, k4, tmp, ws);
        double worst = 0.0;
        for (double v : x) worst = std::max(worst, std::abs(v));
        if (!(worst < kBlowupGuard)) {
            throw NumericalBlowup("state norm exceeded the overflow guard at t = " +
                                      std::to_string(step * cfg.dt),
                                  step * cfg.dt);
        }
        if (step % cfg.record_stride == 0) record(sample++, step * cfg.dt);
    }

    res.final_cost = res.running_cost(samples - 1);
    const double e0 = res.e_norm(0);
    const double eT = res.e_norm(samples - 1);
    res.tail_indicator = e0 > 0.0 ? (eT * eT) / (e0 * e0) : 0.0;
    res.horizon_warning = res.tail_indicator > kHorizonTail;

    {
        SampledSignal in, out;
        in.dt = res.dt;
        in.values = res.pair_inputs;
        out.dt = res.dt;
        out.values = res.pair_outputs;
        std::vector<double> times(res.time.data(), res.time.data() + samples);
        res.iqc = iqc_ledger(in, out, spec.d, times);
    }
    return res;
}

CostBreakdown evaluate_cost(const SimulationResult& result, const NetworkSpec& spec) {
    const int n = spec.n;
    const int m = spec.m_in;
    const int big_n = spec.agent_count();
    const int samples = static_cast<int>(result.time.size());
    if (result.errors.rows() != big_n * n || result.controls.rows() != big_n * m) {
        throw DimensionMismatch("simulation result does not match the network");
    }

    const SpectralData spectral = analyze_network(spec.graph, spec.pinning);
    const Matrix lg = build_laplacian(spec.graph) + spec.pinning.matrix();
    const Matrix eps = transform_errors(result, spectral);
    const Matrix& k = result.gain;

    Vector direct(samples), stacked(samples), hat(samples);
    for (int s = 0; s < samples; ++s) {
        double v_direct = 0.0;
        for (int i = 0; i < big_n; ++i) {
            const auto ei = result.errors.block(i * n, s, n, 1);
            for (int j : spec.graph.neighbors(i + 1)) {
                const auto ej = result.errors.block((j - 1) * n, s, n, 1);
                v_direct += 0.5 * ((ei - ej).transpose() * spec.Q * (ei - ej))(0, 0);
            }
            if (spec.pinning.gains[i]) {
                v_direct += (ei.transpose() * spec.Q * ei)(0, 0);
            }
            const auto ui = result.controls.block(i * m, s, m, 1);
            v_direct += (ui.transpose() * spec.R * ui)(0, 0);
        }
        direct(s) = v_direct;

        double v_stacked = 0.0;
        for (int i = 0; i < big_n; ++i) {
            const auto ei = result.errors.block(i * n, s, n, 1);
            for (int j = 0; j < big_n; ++j) {
                if (lg(i, j) == 0.0) continue;
                const auto ej = result.errors.block(j * n, s, n, 1);
                v_stacked += lg(i, j) * (ei.transpose() * spec.Q * ej)(0, 0);
            }
            const auto ui = result.controls.block(i * m, s, m, 1);
            v_stacked += (ui.transpose() * spec.R * ui)(0, 0);
        }
        stacked(s) = v_stacked;

        double v_hat = 0.0;
        for (int i = 0; i < big_n; ++i) {
            const double lam = spectral.lambdas(i);
            const auto eps_i = eps.block(i * n, s, n, 1);
            const Vector u_hat = k * eps_i;
            v_hat += lam * (eps_i.transpose() * spec.Q * eps_i)(0, 0);
            v_hat += lam * lam * u_hat.dot(spec.R * u_hat);
        }
        hat(s) = v_hat;
    }

    const auto trapezoid = [&](const Vector& f) {
        double acc = 0.5 * (f(0) + f(samples - 1));
        for (int s = 1; s + 1 < samples; ++s) acc += f(s);
        return acc * result.dt;
    };

    CostBreakdown out;
    out.j_direct = trapezoid(direct);
    out.j_stacked = trapezoid(stacked);
    out.j_hat = trapezoid(hat);
    return out;
}

Matrix transform_errors(const SimulationResult& result, const SpectralData& spectral) {
    const int big_n = static_cast<int>(spectral.lambdas.size());
    if (result.errors.rows() % big_n != 0) {
        throw DimensionMismatch("error block size does not divide by agent count");
    }
    const int n = static_cast<int>(result.errors.rows()) / big_n;
    const int samples = static_cast<int>(result.errors.cols());

    Matrix eps = Matrix::Zero(big_n * n, samples);
    for (int i = 0; i < big_n; ++i) {
        for (int j = 0; j < big_n; ++j) {
            const double w = spectral.T(j, i);
            if (w == 0.0) continue;
            eps.middleRows(i * n, n) += w * result.errors.middleRows(j * n, n);
        }
    }
    return eps;
}

Vector decomposition_residual(const SimulationResult& result, const NetworkSpec& spec,
                              const SpectralData& spectral) {
    if (!std::holds_alternative<MemorylessGain>(result.coupling)) {
        throw UnsupportedOperator(
            "mode decomposition residual requires memoryless coupling");
    }
    const Matrix& gamma = std::get<MemorylessGain>(result.coupling).gamma;
    const int n = spec.n;
    const int big_n = spec.agent_count();
    const int samples = static_cast<int>(result.time.size());
    if (samples < 5) throw DimensionMismatch("need at least five samples");

    const Matrix eps = transform_errors(result, spectral);
    const Matrix& k = result.gain;
    const double h = result.dt;

    Vector residual(big_n);
    for (int i = 0; i < big_n; ++i) {
        const double lam = spectral.lambdas(i);
        const Matrix a_cl = spec.A + lam * spec.B1 * k;
        double worst = 0.0;
        double scale = 0.0;
        for (int s = 2; s + 2 < samples; ++s) {
            Vector rhs = a_cl * eps.block(i * n, s, n, 1);
            rhs += spectral.p(i) * spec.B2 * (gamma * eps.block(i * n, s, n, 1));
            for (int j = 0; j < big_n; ++j) {
                if (j == i) continue;
                rhs += spectral.f(i, j) * spec.B2 *
                       (gamma * eps.block(j * n, s, n, 1));
            }
            // Five-point derivative keeps the stencil's own truncation well
            // below the residual levels this check is meant to flag.
            const Vector fd = (-eps.block(i * n, s + 2, n, 1) +
                               8.0 * eps.block(i * n, s + 1, n, 1) -
                               8.0 * eps.block(i * n, s - 1, n, 1) +
                               eps.block(i * n, s - 2, n, 1)) /
                              (12.0 * h);
            worst = std::max(worst, (fd - rhs).norm());
            scale = std::max(scale, rhs.norm());
        }
        residual(i) = worst / std::max(scale, 1e-30);
    }
    return residual;
}

BoundCheck check_bound(const SimulationResult& result,
                       const SynthesisCertificate& cert, const NetworkSpec& spec) {
    BoundCheck out;
    out.tail_indicator = result.tail_indicator;
    out.horizon_warning = result.horizon_warning;
    out.j_direct = evaluate_cost(result, spec).j_direct;

    const Eigen::LLT<Matrix> y_llt(cert.Y);
    if (y_llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("certificate Y is not positive definite");
    }
    const int n = spec.n;
    const int big_n = spec.agent_count();
    double quad = 0.0;
    for (int i = 0; i < big_n; ++i) {
        const Vector e = result.errors.block(i * n, 0, n, 1);
        quad += e.dot(y_llt.solve(e));
    }
    out.bound_total = cert.bound_constant + quad;

    if (const auto* gain = std::get_if<MemorylessGain>(&result.coupling)) {
        const auto adm = iqc_admissible_gain(*gain);
        if (!adm.admissible) {
            out.verdict = BoundCheck::Verdict::NotApplicable;
            out.note = "coupling outside the admissible class (sigma_max = " +
                       std::to_string(adm.sigma_max) + ")";
            return out;
        }
    } else if (!result.iqc.pass) {
        out.verdict = BoundCheck::Verdict::NotApplicable;
        out.note = "realized coupling violated the energy constraint";
        return out;
    }

    if (out.j_direct <= out.bound_total) {
        out.verdict = BoundCheck::Verdict::Satisfied;
        out.note = "cost within the certified bound";
    } else {
        out.verdict = BoundCheck::Verdict::Violated;
        out.note = "cost exceeds the certified bound";
    }
    return out;
}

}  // namespace cforge
