#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cforge/types.hpp"

namespace cforge {

// Dense symmetric matrix. Construction rejects asymmetry beyond sym_tol
// (scaled by the largest entry) and symmetrizes what remains.
class SymMatrix {
  public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix m, double sym_tol = 1e-12);

    const Matrix& mat() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }

  private:
    Matrix m_;
};

// A set of variables whose packed entries (row-major upper triangle) form a
// symmetric matrix that must itself be positive definite.
struct PdBlockConstraint {
    std::string label;
    std::vector<int> vars;
    int dim = 0;
};

// Affine symmetric-matrix map  x -> M0 + sum_j x_j * Mj.
struct AffineLmi {
    int variable_count = 0;
    SymMatrix constant;
    std::vector<SymMatrix> coeffs;
    std::vector<std::string> labels;     // optional, for diagnostics
    std::vector<bool> positive;          // flagged variables must stay > 0
    std::vector<PdBlockConstraint> pd_blocks;

    int dim() const { return constant.dim(); }
    SymMatrix eval(const Vector& x) const;
};

// Strict negativity margin: -lambda_max(M). Positive iff M is negative definite.
double negdef_margin(const SymMatrix& m);

// Eliminates the trailing block of [[A, B], [B', D]] (split after leading_dim
// rows), returning A - B D^{-1} B'. The trailing block must be negative
// definite; throws BlockNotNegativeDefinite otherwise.
SymMatrix schur_reduce(const SymMatrix& m, int leading_dim);

enum class FeasStatus { Feasible, Infeasible, Indeterminate };

struct SolverDiagnostics {
    int newton_iterations = 0;
    int centering_rounds = 0;
    double objective = 0.0;      // best epigraph value t reached
    double lower_bound = 0.0;    // certified lower bound on min lambda_max
    double duality_gap = 0.0;
    std::string note;
};

struct FeasibilityResult {
    FeasStatus status = FeasStatus::Indeterminate;
    Vector x;
    double margin = 0.0;         // -lambda_max(M(x)) at the returned point
    SolverDiagnostics diagnostics;
};

struct SolverOptions {
    double pos_tol = 1e-8;
    double var_bound = 1e8;      // box |x_j| <= var_bound keeps the barrier proper
    double objective_floor = -1e7;
    double gap_rel_tol = 1e-6;
    double gap_abs_tol = 1e-9;
    int max_newton_total = 20000;
    int max_newton_per_center = 80;
    std::optional<Vector> start;
};

// Searches for x with lambda_max(M(x)) <= -margin_tol by path-following on the
// epigraph of the largest eigenvalue. Every Feasible answer is re-verified
// through negdef_margin before it is returned; Infeasible carries a certified
// lower bound on the achievable eigenvalue within the variable box.
FeasibilityResult solve_feasibility(const AffineLmi& lmi, double margin_tol,
                                    const SolverOptions& options = {});

}  // namespace cforge
