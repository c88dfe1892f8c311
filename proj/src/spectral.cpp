#include "cforge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cforge/errors.hpp"

namespace cforge {

namespace {

int dominant_component(const Vector& v) {
    int best = 0;
    double best_mag = std::abs(v(0));
    for (int r = 1; r < v.size(); ++r) {
        if (std::abs(v(r)) > best_mag + 1e-14) {
            best = r;
            best_mag = std::abs(v(r));
        }
    }
    return best;
}

}  // namespace

SpectralData spectral_decomposition(const Matrix& grounded, double orth_tol) {
    if (grounded.rows() != grounded.cols()) {
        throw DimensionMismatch("grounded matrix must be square");
    }
    const int n = static_cast<int>(grounded.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(grounded);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("eigendecomposition of L + G failed");
    }
    Vector lambdas = eig.eigenvalues();
    Matrix t = eig.eigenvectors();
    if (lambdas(0) <= 0.0) {
        throw NotPositiveDefinite("grounded matrix L + G is not positive definite");
    }

    // Within groups of numerically equal eigenvalues, order the eigenvectors by
    // their dominant component so the basis does not depend on solver internals.
    const double scale = std::max(1.0, std::abs(lambdas(n - 1)));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (std::abs(lambdas(a) - lambdas(b)) > 1e-9 * scale) {
            return lambdas(a) < lambdas(b);
        }
        return dominant_component(t.col(a)) < dominant_component(t.col(b));
    });

    SpectralData out;
    out.lambdas.resize(n);
    out.T.resize(n, n);
    for (int c = 0; c < n; ++c) {
        out.lambdas(c) = lambdas(order[c]);
        Vector col = t.col(order[c]);
        if (col(dominant_component(col)) < 0.0) col = -col;
        out.T.col(c) = col;
    }

    const double orth_defect =
        (out.T.transpose() * out.T - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (orth_defect > std::max(orth_tol, 1e-10)) {
        throw NumericalFailure("eigenvector basis lost orthogonality");
    }

    out.lambda_min = out.lambdas(0);
    out.lambda_max = out.lambdas(n - 1);
    return out;
}

SpectralData coupling_coefficients(SpectralData spectral, const Pinning& pinning) {
    const int n = static_cast<int>(spectral.lambdas.size());
    if (pinning.node_count() != n) {
        throw DimensionMismatch("pinning size does not match spectral data");
    }
    spectral.f = spectral.T.transpose() * pinning.matrix() * spectral.T;
    spectral.p.resize(n);
    spectral.q.resize(n);
    for (int i = 0; i < n; ++i) {
        spectral.p(i) = spectral.f(i, i) - spectral.lambdas(i);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j != i) sum += spectral.f(i, j) * spectral.f(i, j);
        }
        spectral.q(i) = std::sqrt(sum);
    }
    spectral.p_sq = spectral.p.cwiseAbs2().maxCoeff();
    spectral.q_sq = spectral.q.cwiseAbs2().maxCoeff();
    return spectral;
}

SpectralData analyze_network(const Graph& graph, const Pinning& pinning) {
    if (graph.node_count() != pinning.node_count()) {
        throw DimensionMismatch("pinning size does not match graph");
    }
    const Matrix lap = build_laplacian(graph);
    const GroundedMatrix lg = grounded_matrix(lap, pinning);
    return coupling_coefficients(
        spectral_decomposition(lg.require_positive_definite()), pinning);
}

}  // namespace cforge
