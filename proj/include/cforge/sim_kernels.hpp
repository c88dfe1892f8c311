#pragma once

#include <vector>

#include "cforge/coupling.hpp"
#include "cforge/synthesis.hpp"
#include "cforge/types.hpp"

namespace cforge::kernels {

enum class Exec { Auto, Serial, Parallel };

// Closed-loop network flattened into row-major arrays for the hot loops.
//
// Packed state layout:
//   [ leader (n) | agent states (N*n) | filter states (pairs*nf) | cost (1) ]
//
// Ordered neighbor pairs are stored CSR-style, grouped by owning agent, so a
// kernel pass writes disjoint slices per agent / per pair. The parallel and
// serial kernels perform identical arithmetic in identical order per slice and
// therefore produce bitwise identical derivatives.
struct ClosedLoopModel {
    int n = 0;
    int m = 0;
    int nw = 0;
    int nf = 0;
    int agents = 0;
    int pairs = 0;
    bool has_filter = false;

    std::vector<double> a;      // n x n
    std::vector<double> b1;     // n x m
    std::vector<double> b2;     // n x nw
    std::vector<double> k;      // m x n
    std::vector<double> q;      // n x n
    std::vector<double> r;      // m x m
    std::vector<double> gamma;  // nw x n (memoryless)
    std::vector<double> af;     // nf x nf
    std::vector<double> bf;     // nf x n
    std::vector<double> cf;     // nw x nf
    std::vector<double> df;     // nw x n

    std::vector<int> nbr_offset;  // agents + 1
    std::vector<int> nbr;         // neighbor agent index per ordered pair
    std::vector<double> pin;      // agents

    int state_dim = 0;

    static ClosedLoopModel build(const NetworkSpec& spec, const Matrix& gain,
                                 const CouplingOperator& coupling);

    int leader_at() const { return 0; }
    int agent_at(int i) const { return n * (1 + i); }
    int filter_at(int p) const { return n * (1 + agents) + p * nf; }
    int cost_at() const { return state_dim - 1; }
};

// Scratch sized once per run; slices are written disjointly by the kernels.
struct Workspace {
    std::vector<double> rel;       // pairs * n, relative states x_j - x_i
    std::vector<double> pair_out;  // pairs * nw, coupling outputs
    std::vector<double> u;         // agents * m
    std::vector<double> cost;      // agents

    explicit Workspace(const ClosedLoopModel& model);
};

void rhs_serial(const ClosedLoopModel& model, const double* state, double* deriv,
                Workspace& ws);
void rhs_parallel(const ClosedLoopModel& model, const double* state, double* deriv,
                  Workspace& ws);

// Controls and realized per-pair coupling signals at one state, for recording.
void evaluate_outputs(const ClosedLoopModel& model, const double* state,
                      Workspace& ws);

bool parallel_available();

}  // namespace cforge::kernels
