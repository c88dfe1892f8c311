#pragma once

#include <optional>
#include <string>

#include "cforge/graph.hpp"
#include "cforge/lmi.hpp"
#include "cforge/spectral.hpp"
#include "cforge/types.hpp"

namespace cforge {

// Problem instance: identical agent dynamics, tracking weights, communication
// topology, and the energy offset d of the admissible coupling class.
struct NetworkSpec {
    int n = 0;       // agent state dimension
    int m_in = 0;    // control input dimension
    Matrix A;        // n x n
    Matrix B1;       // n x m_in
    Matrix B2;       // n x n_w, coupling input matrix
    Matrix Q;        // n x n, symmetric PD tracking weight
    Matrix R;        // m_in x m_in, symmetric PD control weight
    Graph graph{1, {}};
    Pinning pinning{std::vector<int>{0}};
    double d = 0.0;
    std::optional<Matrix> e0;  // initial errors, n x N, column per agent

    int agent_count() const { return graph.node_count(); }
    int coupling_width() const { return static_cast<int>(B2.cols()); }
    void validate() const;
};

enum class Method { Th1, Th2 };

std::string method_name(Method method);

// Synthesis output together with everything needed to re-certify it.
struct SynthesisCertificate {
    Method method = Method::Th1;
    Matrix K;                  // m_in x n tracking gain
    Matrix Y;                  // n x n, positive definite
    Matrix F;                  // m_in x n (derived for Th2)
    Vector pi;                 // one multiplier per subsystem (uniform for Th2)
    Vector theta;              // empty when N = 1
    Vector lmi_margins;        // per subsystem block (single entry for Th2)
    Vector riccati_margins;    // per subsystem
    double bound_constant = 0.0;
    std::optional<double> bound_total;  // set when NetworkSpec carries e0
    double margin_tol_used = 0.0;
};

// Joint LMI over shared Y, F and reciprocal multipliers alpha_i = 1/pi_i,
// beta_i = 1/theta_i: one block per subsystem plus a -Y block. Every block is
// affine in the packed variables.
AffineLmi assemble_th1(const NetworkSpec& spec, const SpectralData& spectral);

// Single reduced LMI using only the extreme eigenvalues and the worst-case
// coupling coefficients; variables Y, alpha, beta.
AffineLmi assemble_th2(const NetworkSpec& spec, const SpectralData& spectral);

// Variable vectors in the packing the assemblers use, for re-evaluating an
// LMI at a known point. Beta entries are dropped when N = 1.
Vector pack_th1_variables(const NetworkSpec& spec, const Matrix& y, const Matrix& f,
                          const Vector& alpha, const Vector& beta);
Vector pack_th2_variables(const NetworkSpec& spec, const Matrix& y, double alpha,
                          double beta);

SynthesisCertificate synthesize(const NetworkSpec& spec, Method method,
                                const Tolerances& tol = {});

// Negativity margin of the subsystem Riccati expression
//   A Y + Y A' + (p_i^2/pi_i + q_i^2/theta_i) B2 B2'
//   + Y (lambda_i Q + (pi_i + theta_bar_i) I) Y
//   + lambda_i^2 F' R F + lambda_i F' B1' + lambda_i B1 F
// with theta_bar_i the sum of the other agents' theta. Index i is 0-based.
double verify_riccati(const NetworkSpec& spec, const SpectralData& spectral,
                      const Matrix& y, const Matrix& f, const Vector& pi,
                      const Vector& theta, int i);

struct LiftedSolution {
    Matrix Y;
    Matrix F;
    Vector pi;
    Vector theta;
    Vector riccati_margins;
};

// Expands a reduced (Th2) solution into per-subsystem form and re-checks every
// Riccati margin. Throws LiftRejected when any margin is not positive.
LiftedSolution lemma3_lift(const NetworkSpec& spec, const SpectralData& spectral,
                           const Matrix& y, double pi, double theta);

struct BoundResult {
    double bound_constant = 0.0;
    std::optional<double> bound_total;
};

// Guaranteed-cost bound: multiplier term scaled by d plus, when initial errors
// are known, the quadratic term sum_i e_i(0)' Y^{-1} e_i(0).
BoundResult compute_bound(const SynthesisCertificate& cert, const NetworkSpec& spec);

// Symmetric PSD square root via eigendecomposition.
Matrix psd_sqrt(const Matrix& m);

}  // namespace cforge
