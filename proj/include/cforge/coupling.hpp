#pragma once

#include <variant>
#include <vector>

#include "cforge/types.hpp"

namespace cforge {

// Static linear coupling: phi(y) = gamma * y.
struct MemorylessGain {
    Matrix gamma;
};

// Causal LTI coupling: z' = A z + B y, phi(y) = C z + D y, z(0) = 0.
struct LtiFilter {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;
};

using CouplingOperator = std::variant<MemorylessGain, LtiFilter>;

int coupling_output_dim(const CouplingOperator& op, int input_dim);
int coupling_state_dim(const CouplingOperator& op);
void validate_coupling(const CouplingOperator& op, int input_dim);

// Uniformly sampled vector signal starting at t = 0.
struct SampledSignal {
    double dt = 0.0;
    Matrix values;  // dim x samples

    int dim() const { return static_cast<int>(values.rows()); }
    int samples() const { return static_cast<int>(values.cols()); }
    double duration() const { return dt * (samples() - 1); }
};

// Runs the operator over the signal. Filters are integrated with the same
// fourth-order scheme as the simulator, treating the input as piecewise linear.
SampledSignal apply(const CouplingOperator& op, const SampledSignal& y);

// Energy bookkeeping for the integral quadratic constraint
//   int_0^{t_l} |phi(y)|^2 dt  <=  int_0^{t_l} |y|^2 dt + d   at every t_l.
struct IqcLedger {
    std::vector<double> check_times;
    std::vector<double> input_energy;
    std::vector<double> output_energy;
    double d = 0.0;
    bool pass = false;
    int first_violation = -1;  // index into check_times, -1 when none
};

// Checks the constraint from already-realized input/output samples.
IqcLedger iqc_ledger(const SampledSignal& input, const SampledSignal& output,
                     double d, const std::vector<double>& check_times,
                     double rel_tol = 1e-6);

// Applies the operator to y, then checks the constraint at the given times.
IqcLedger verify_iqc(const CouplingOperator& op, const SampledSignal& y, double d,
                     const std::vector<double>& check_times, double rel_tol = 1e-6);

struct AdmissibilityResult {
    bool admissible = false;
    double sigma_max = 0.0;
    double d_required = 0.0;  // infinity when no finite offset works
};

// A static gain satisfies the constraint for some d iff its largest singular
// value is at most one, and then d = 0 already suffices.
AdmissibilityResult iqc_admissible_gain(const MemorylessGain& gain);

}  // namespace cforge
