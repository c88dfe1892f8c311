#include "cforge/lmi.hpp"

#include <cmath>

#include "cforge/errors.hpp"

namespace cforge {

SymMatrix::SymMatrix(Matrix m, double sym_tol) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch("symmetric matrix must be square");
    }
    if (m.size() > 0) {
        const double defect = (m - m.transpose()).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if (defect > sym_tol * scale) {
            throw DimensionMismatch("matrix is not symmetric within tolerance");
        }
        m = 0.5 * (m + m.transpose()).eval();
    }
    m_ = std::move(m);
}

SymMatrix AffineLmi::eval(const Vector& x) const {
    if (static_cast<int>(x.size()) != variable_count) {
        throw DimensionMismatch("variable vector has wrong length");
    }
    if (static_cast<int>(coeffs.size()) != variable_count) {
        throw DimensionMismatch("coefficient count does not match variable count");
    }
    Matrix m = constant.mat();
    for (int j = 0; j < variable_count; ++j) {
        if (coeffs[j].dim() != dim()) {
            throw DimensionMismatch("coefficient dimension mismatch");
        }
        m += x(j) * coeffs[j].mat();
    }
    return SymMatrix(std::move(m));
}

double negdef_margin(const SymMatrix& m) {
    if (m.dim() == 0) {
        throw DimensionMismatch("margin of an empty matrix is undefined");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m.mat(), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("eigenvalue computation failed");
    }
    return -eig.eigenvalues().maxCoeff();
}

SymMatrix schur_reduce(const SymMatrix& m, int leading_dim) {
    const int total = m.dim();
    if (leading_dim <= 0 || leading_dim >= total) {
        throw DimensionMismatch("split must leave both blocks nonempty");
    }
    const int k = leading_dim;
    const int r = total - k;
    const Matrix a = m.mat().topLeftCorner(k, k);
    const Matrix b = m.mat().topRightCorner(k, r);
    const Matrix d = m.mat().bottomRightCorner(r, r);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(d, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("eigenvalue computation failed");
    }
    if (eig.eigenvalues().maxCoeff() >= 0.0) {
        throw BlockNotNegativeDefinite("trailing block is not negative definite");
    }

    const Matrix reduced = a - b * d.ldlt().solve(b.transpose());
    return SymMatrix(0.5 * (reduced + reduced.transpose()));
}

}  // namespace cforge
