#pragma once

#include "cforge/graph.hpp"
#include "cforge/types.hpp"

namespace cforge {

// Orthogonal diagonalization of the grounded Laplacian together with the
// scalar coupling coefficients consumed by the synthesis LMIs.
//
// f encodes how the pinning pattern mixes across eigenmodes: f = T' G T.
// p_i = f_ii - lambda_i is the self-coupling defect of mode i and q_i the
// root-sum-square of its cross couplings.
struct SpectralData {
    Matrix T;           // orthogonal, columns are eigenvectors of L + G
    Vector lambdas;     // ascending
    Matrix f;
    Vector p;
    Vector q;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double p_sq = 0.0;  // max_i p_i^2
    double q_sq = 0.0;  // max_i q_i^2
};

// Eigendecomposition only (f, p, q left empty). Eigenvalues ascending; for
// repeated eigenvalues the eigenvectors are ordered by the index of their
// dominant component, and each column is sign-fixed so that component is
// positive. Throws NotPositiveDefinite unless L + G is strictly PD.
SpectralData spectral_decomposition(const Matrix& grounded, double orth_tol = 1e-12);

// Fills f, p, q and the extreme values from the pinning pattern.
SpectralData coupling_coefficients(SpectralData spectral, const Pinning& pinning);

// Full chain: Laplacian, grounding, decomposition, coefficients.
SpectralData analyze_network(const Graph& graph, const Pinning& pinning);

}  // namespace cforge
