#pragma once

#include <Eigen/Dense>

namespace cforge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Numeric tolerances shared across synthesis and verification.
// margin_tol: strict negative-definiteness margin demanded from LMI solutions.
// pos_tol:    strict positivity demanded from scalar multipliers.
struct Tolerances {
    double margin_tol = 1e-7;
    double pos_tol = 1e-8;
    double sym_tol = 1e-12;
    double orth_tol = 1e-12;
    double iqc_rel_tol = 1e-6;
};

}  // namespace cforge
