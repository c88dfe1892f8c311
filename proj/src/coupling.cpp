#include "cforge/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cforge/errors.hpp"

namespace cforge {

int coupling_output_dim(const CouplingOperator& op, int input_dim) {
    if (const auto* gain = std::get_if<MemorylessGain>(&op)) {
        if (gain->gamma.cols() != input_dim) {
            throw DimensionMismatch("gain width does not match the input signal");
        }
        return static_cast<int>(gain->gamma.rows());
    }
    const auto& f = std::get<LtiFilter>(op);
    if (f.D.cols() != input_dim) {
        throw DimensionMismatch("filter D width does not match the input signal");
    }
    return static_cast<int>(f.D.rows());
}

int coupling_state_dim(const CouplingOperator& op) {
    if (std::holds_alternative<MemorylessGain>(op)) return 0;
    return static_cast<int>(std::get<LtiFilter>(op).A.rows());
}

void validate_coupling(const CouplingOperator& op, int input_dim) {
    if (const auto* gain = std::get_if<MemorylessGain>(&op)) {
        if (gain->gamma.size() == 0 || gain->gamma.cols() != input_dim) {
            throw DimensionMismatch("gain must map the n-dimensional relative state");
        }
        return;
    }
    const auto& f = std::get<LtiFilter>(op);
    const int nf = static_cast<int>(f.A.rows());
    const int nw = static_cast<int>(f.C.rows());
    if (f.A.cols() != nf) throw DimensionMismatch("filter A must be square");
    if (f.B.rows() != nf || f.B.cols() != input_dim) {
        throw DimensionMismatch("filter B must be n_f x n");
    }
    if (f.C.cols() != nf) throw DimensionMismatch("filter C must be n_w x n_f");
    if (f.D.rows() != nw || f.D.cols() != input_dim) {
        throw DimensionMismatch("filter D must be n_w x n");
    }
}

SampledSignal apply(const CouplingOperator& op, const SampledSignal& y) {
    if (y.samples() < 1 || y.dt <= 0.0) {
        throw DimensionMismatch("signal needs a positive step and at least one sample");
    }
    validate_coupling(op, y.dim());

    SampledSignal out;
    out.dt = y.dt;
    if (const auto* gain = std::get_if<MemorylessGain>(&op)) {
        out.values = gain->gamma * y.values;
        return out;
    }

    const auto& f = std::get<LtiFilter>(op);
    const int nw = static_cast<int>(f.D.rows());
    const int samples = y.samples();
    out.values.resize(nw, samples);

    Vector z = Vector::Zero(f.A.rows());
    out.values.col(0) = f.C * z + f.D * y.values.col(0);
    const double h = y.dt;
    for (int s = 0; s + 1 < samples; ++s) {
        const Vector u0 = y.values.col(s);
        const Vector u1 = y.values.col(s + 1);
        const Vector um = 0.5 * (u0 + u1);
        const Vector k1 = f.A * z + f.B * u0;
        const Vector k2 = f.A * (z + 0.5 * h * k1) + f.B * um;
        const Vector k3 = f.A * (z + 0.5 * h * k2) + f.B * um;
        const Vector k4 = f.A * (z + h * k3) + f.B * u1;
        z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.values.col(s + 1) = f.C * z + f.D * u1;
    }
    return out;
}

IqcLedger iqc_ledger(const SampledSignal& input, const SampledSignal& output,
                     double d, const std::vector<double>& check_times,
                     double rel_tol) {
    if (input.samples() != output.samples() || input.dt != output.dt) {
        throw DimensionMismatch("input and output grids differ");
    }
    if (d < 0.0) throw DimensionMismatch("offset d must be nonnegative");

    const int samples = input.samples();
    std::vector<double> in_cum(samples, 0.0), out_cum(samples, 0.0);
    for (int s = 1; s < samples; ++s) {
        const double in_a = input.values.col(s - 1).squaredNorm();
        const double in_b = input.values.col(s).squaredNorm();
        const double out_a = output.values.col(s - 1).squaredNorm();
        const double out_b = output.values.col(s).squaredNorm();
        in_cum[s] = in_cum[s - 1] + 0.5 * input.dt * (in_a + in_b);
        out_cum[s] = out_cum[s - 1] + 0.5 * input.dt * (out_a + out_b);
    }

    const auto energy_at = [&](const std::vector<double>& cum, double t) {
        const double pos = t / input.dt;
        const int lo = std::clamp(static_cast<int>(std::floor(pos)), 0, samples - 1);
        const int hi = std::min(lo + 1, samples - 1);
        const double w = pos - lo;
        return (1.0 - w) * cum[lo] + w * cum[hi];
    };

    IqcLedger ledger;
    ledger.d = d;
    ledger.pass = true;
    for (double t : check_times) {
        if (t < 0.0 || t > input.duration() * (1.0 + 1e-12) + 1e-15) {
            throw DimensionMismatch("check time outside the sampled window");
        }
        const double in_e = energy_at(in_cum, t);
        const double out_e = energy_at(out_cum, t);
        ledger.check_times.push_back(t);
        ledger.input_energy.push_back(in_e);
        ledger.output_energy.push_back(out_e);
        if (out_e > in_e + d + rel_tol * std::max(1.0, in_e) && ledger.pass) {
            ledger.pass = false;
            ledger.first_violation =
                static_cast<int>(ledger.check_times.size()) - 1;
        }
    }
    return ledger;
}

IqcLedger verify_iqc(const CouplingOperator& op, const SampledSignal& y, double d,
                     const std::vector<double>& check_times, double rel_tol) {
    return iqc_ledger(y, apply(op, y), d, check_times, rel_tol);
}

AdmissibilityResult iqc_admissible_gain(const MemorylessGain& gain) {
    if (gain.gamma.size() == 0) {
        throw DimensionMismatch("gain matrix is empty");
    }
    AdmissibilityResult out;
    Eigen::JacobiSVD<Matrix> svd(gain.gamma);
    out.sigma_max = svd.singularValues()(0);
    out.admissible = out.sigma_max <= 1.0 + 1e-12;
    out.d_required =
        out.admissible ? 0.0 : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace cforge
