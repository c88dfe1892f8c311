#include "cforge/synthesis.hpp"

#include <cmath>
#include <sstream>

#include "cforge/errors.hpp"

namespace cforge {

namespace {

int sym_var_count(int n) { return n * (n + 1) / 2; }

// Basis matrix of the packed symmetric entry (a, b), a <= b.
Matrix sym_basis(int n, int a, int b) {
    Matrix s = Matrix::Zero(n, n);
    s(a, b) = 1.0;
    s(b, a) = 1.0;
    return s;
}

void check_sym_pd(const Matrix& m, int dim, const char* what) {
    if (m.rows() != dim || m.cols() != dim) {
        throw DimensionMismatch(std::string(what) + " has wrong dimensions");
    }
    if ((m - m.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
        throw DimensionMismatch(std::string(what) + " must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("eigenvalue computation failed");
    }
    if (eig.eigenvalues()(0) <= 0.0) {
        throw NotPositiveDefinite(std::string(what) + " must be positive definite");
    }
}

Matrix unpack_sym(const Vector& x, int offset, int n) {
    Matrix y(n, n);
    int idx = offset;
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            y(a, b) = x(idx);
            y(b, a) = x(idx);
            ++idx;
        }
    }
    return y;
}

double max_real_eig(const Matrix& m) {
    Eigen::EigenSolver<Matrix> eig(m);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("eigenvalue computation failed");
    }
    return eig.eigenvalues().real().maxCoeff();
}

}  // namespace

void NetworkSpec::validate() const {
    if (n < 1 || m_in < 1) {
        throw DimensionMismatch("state and input dimensions must be positive");
    }
    if (A.rows() != n || A.cols() != n) throw DimensionMismatch("A must be n x n");
    if (B1.rows() != n || B1.cols() != m_in) {
        throw DimensionMismatch("B1 must be n x m_in");
    }
    if (B2.rows() != n || B2.cols() < 1) {
        throw DimensionMismatch("B2 must be n x n_w with n_w >= 1");
    }
    check_sym_pd(Q, n, "Q");
    check_sym_pd(R, m_in, "R");
    if (pinning.node_count() != graph.node_count()) {
        throw DimensionMismatch("pinning size does not match graph");
    }
    if (d < 0.0) throw DimensionMismatch("IQC offset d must be nonnegative");
    if (e0 && (e0->rows() != n || e0->cols() != graph.node_count())) {
        throw DimensionMismatch("e0 must be n x N");
    }
}

std::string method_name(Method method) {
    return method == Method::Th1 ? "th1" : "th2";
}

Matrix psd_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("eigenvalue computation failed");
    }
    Vector vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

AffineLmi assemble_th1(const NetworkSpec& spec, const SpectralData& spectral) {
    spec.validate();
    const int n = spec.n;
    const int m = spec.m_in;
    const int big_n = spec.agent_count();
    if (spectral.lambdas.size() != big_n || spectral.p.size() != big_n) {
        throw DimensionMismatch("spectral data does not match the network");
    }

    const int n_y = sym_var_count(n);
    const int n_f = m * n;
    const bool has_beta = big_n > 1;
    const int var_count = n_y + n_f + big_n + (has_beta ? big_n : 0);
    const int bs = 3 * n + m + n * (big_n - 1);  // one subsystem block
    const int total = big_n * bs + n;            // plus the -Y block
    const int oy = big_n * bs;

    const Matrix rinv = spec.R.llt().solve(Matrix::Identity(m, m));
    const Matrix q_sqrt = psd_sqrt(spec.Q);
    const Matrix b2b2 = spec.B2 * spec.B2.transpose();

    const auto r0 = [&](int i) { return i * bs; };
    const auto r1 = [&](int i) { return i * bs + n; };
    const auto r2 = [&](int i) { return i * bs + n + m; };
    const auto r3 = [&](int i) { return i * bs + 2 * n + m; };
    const auto r4 = [&](int i) { return i * bs + 3 * n + m; };

    Matrix constant = Matrix::Zero(total, total);
    for (int i = 0; i < big_n; ++i) {
        const double lam = spectral.lambdas(i);
        constant.block(r1(i), r1(i), m, m) = -(1.0 / (lam * lam)) * rinv;
        constant.block(r2(i), r2(i), n, n) = -Matrix::Identity(n, n);
    }

    std::vector<Matrix> coeffs(var_count, Matrix::Zero(total, total));
    std::vector<std::string> labels(var_count);
    std::vector<bool> positive(var_count, false);

    int idx = 0;
    for (int a = 0; a < n; ++a) {
        for (int b = a; b <= n - 1; ++b, ++idx) {
            Matrix& c = coeffs[idx];
            labels[idx] = "Y(" + std::to_string(a) + "," + std::to_string(b) + ")";
            const Matrix s = sym_basis(n, a, b);
            for (int i = 0; i < big_n; ++i) {
                const double lam = spectral.lambdas(i);
                const Matrix qs = std::sqrt(lam) * q_sqrt;
                c.block(r0(i), r0(i), n, n) += spec.A * s + s * spec.A.transpose();
                c.block(r2(i), r0(i), n, n) += qs * s;
                c.block(r0(i), r2(i), n, n) += s * qs;
                c.block(r3(i), r0(i), n, n) += s;
                c.block(r0(i), r3(i), n, n) += s;
                for (int t = 0; t < big_n - 1; ++t) {
                    c.block(r4(i) + t * n, r0(i), n, n) += s;
                    c.block(r0(i), r4(i) + t * n, n, n) += s;
                }
            }
            c.block(oy, oy, n, n) -= s;
        }
    }
    for (int row = 0; row < m; ++row) {
        for (int col = 0; col < n; ++col, ++idx) {
            Matrix& c = coeffs[idx];
            labels[idx] = "F(" + std::to_string(row) + "," + std::to_string(col) + ")";
            Matrix e = Matrix::Zero(m, n);
            e(row, col) = 1.0;
            for (int i = 0; i < big_n; ++i) {
                const double lam = spectral.lambdas(i);
                c.block(r0(i), r0(i), n, n) +=
                    lam * (e.transpose() * spec.B1.transpose() + spec.B1 * e);
                c.block(r1(i), r0(i), m, n) += e;
                c.block(r0(i), r1(i), n, m) += e.transpose();
            }
        }
    }
    for (int i = 0; i < big_n; ++i, ++idx) {
        Matrix& c = coeffs[idx];
        labels[idx] = "alpha_" + std::to_string(i + 1);
        positive[idx] = true;
        const double p = spectral.p(i);
        c.block(r0(i), r0(i), n, n) += p * p * b2b2;
        c.block(r3(i), r3(i), n, n) -= Matrix::Identity(n, n);
    }
    if (has_beta) {
        for (int i = 0; i < big_n; ++i, ++idx) {
            Matrix& c = coeffs[idx];
            labels[idx] = "beta_" + std::to_string(i + 1);
            positive[idx] = true;
            const double q = spectral.q(i);
            c.block(r0(i), r0(i), n, n) += q * q * b2b2;
            for (int j = 0; j < big_n; ++j) {
                if (j == i) continue;
                const int pos = (i < j) ? i : i - 1;
                c.block(r4(j) + pos * n, r4(j) + pos * n, n, n) -=
                    Matrix::Identity(n, n);
            }
        }
    }

    AffineLmi lmi;
    lmi.variable_count = var_count;
    lmi.constant = SymMatrix(std::move(constant));
    lmi.coeffs.reserve(var_count);
    for (auto& c : coeffs) lmi.coeffs.emplace_back(std::move(c));
    lmi.labels = std::move(labels);
    lmi.positive = std::move(positive);
    PdBlockConstraint y_block;
    y_block.label = "Y";
    y_block.dim = n;
    for (int j = 0; j < n_y; ++j) y_block.vars.push_back(j);
    lmi.pd_blocks.push_back(std::move(y_block));
    return lmi;
}

AffineLmi assemble_th2(const NetworkSpec& spec, const SpectralData& spectral) {
    spec.validate();
    const int n = spec.n;
    const int m = spec.m_in;
    const int big_n = spec.agent_count();
    if (spectral.lambdas.size() != big_n) {
        throw DimensionMismatch("spectral data does not match the network");
    }

    const bool has_beta = big_n > 1;
    const int n_y = sym_var_count(n);
    const int var_count = n_y + 1 + (has_beta ? 1 : 0);
    const int alpha_idx = n_y;
    const int beta_idx = n_y + 1;

    const int bs = has_beta ? 4 * n : 3 * n;
    const int total = bs + n;
    const int oy = bs;
    const int r0 = 0, r1 = n, r2 = 2 * n, r3 = 3 * n;

    const double lo = spectral.lambda_min;
    const double hi = spectral.lambda_max;
    const Matrix rinv = spec.R.llt().solve(Matrix::Identity(m, m));
    const Matrix qbar_sqrt = psd_sqrt(hi * spec.Q);
    const Matrix b2b2 = spec.B2 * spec.B2.transpose();

    Matrix constant = Matrix::Zero(total, total);
    constant.block(r0, r0, n, n) =
        -(lo * lo / (hi * hi)) * spec.B1 * rinv * spec.B1.transpose();
    constant.block(r1, r1, n, n) = -Matrix::Identity(n, n);

    std::vector<Matrix> coeffs(var_count, Matrix::Zero(total, total));
    std::vector<std::string> labels(var_count);
    std::vector<bool> positive(var_count, false);

    int idx = 0;
    for (int a = 0; a < n; ++a) {
        for (int b = a; b <= n - 1; ++b, ++idx) {
            Matrix& c = coeffs[idx];
            labels[idx] = "Y(" + std::to_string(a) + "," + std::to_string(b) + ")";
            const Matrix s = sym_basis(n, a, b);
            c.block(r0, r0, n, n) += spec.A * s + s * spec.A.transpose();
            c.block(r1, r0, n, n) += qbar_sqrt * s;
            c.block(r0, r1, n, n) += s * qbar_sqrt;
            c.block(r2, r0, n, n) += s;
            c.block(r0, r2, n, n) += s;
            if (has_beta) {
                c.block(r3, r0, n, n) += s;
                c.block(r0, r3, n, n) += s;
            }
            c.block(oy, oy, n, n) -= s;
        }
    }
    {
        Matrix& c = coeffs[alpha_idx];
        labels[alpha_idx] = "alpha";
        positive[alpha_idx] = true;
        c.block(r0, r0, n, n) += spectral.p_sq * b2b2;
        c.block(r2, r2, n, n) -= Matrix::Identity(n, n);
    }
    if (has_beta) {
        Matrix& c = coeffs[beta_idx];
        labels[beta_idx] = "beta";
        positive[beta_idx] = true;
        c.block(r0, r0, n, n) += spectral.q_sq * b2b2;
        c.block(r3, r3, n, n) -=
            (1.0 / static_cast<double>(big_n - 1)) * Matrix::Identity(n, n);
    }

    AffineLmi lmi;
    lmi.variable_count = var_count;
    lmi.constant = SymMatrix(std::move(constant));
    lmi.coeffs.reserve(var_count);
    for (auto& c : coeffs) lmi.coeffs.emplace_back(std::move(c));
    lmi.labels = std::move(labels);
    lmi.positive = std::move(positive);
    PdBlockConstraint y_block;
    y_block.label = "Y";
    y_block.dim = n;
    for (int j = 0; j < n_y; ++j) y_block.vars.push_back(j);
    lmi.pd_blocks.push_back(std::move(y_block));
    return lmi;
}

Vector pack_th1_variables(const NetworkSpec& spec, const Matrix& y, const Matrix& f,
                          const Vector& alpha, const Vector& beta) {
    const int n = spec.n;
    const int m = spec.m_in;
    const int big_n = spec.agent_count();
    if (y.rows() != n || y.cols() != n) throw DimensionMismatch("Y must be n x n");
    if (f.rows() != m || f.cols() != n) throw DimensionMismatch("F must be m x n");
    if (alpha.size() != big_n) throw DimensionMismatch("alpha needs one entry per agent");
    const bool has_beta = big_n > 1;
    if (has_beta && beta.size() != big_n) {
        throw DimensionMismatch("beta needs one entry per agent when N > 1");
    }
    Vector x(sym_var_count(n) + m * n + big_n + (has_beta ? big_n : 0));
    int idx = 0;
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) x(idx++) = y(a, b);
    for (int row = 0; row < m; ++row)
        for (int col = 0; col < n; ++col) x(idx++) = f(row, col);
    for (int i = 0; i < big_n; ++i) x(idx++) = alpha(i);
    if (has_beta) {
        for (int i = 0; i < big_n; ++i) x(idx++) = beta(i);
    }
    return x;
}

Vector pack_th2_variables(const NetworkSpec& spec, const Matrix& y, double alpha,
                          double beta) {
    const int n = spec.n;
    if (y.rows() != n || y.cols() != n) throw DimensionMismatch("Y must be n x n");
    const bool has_beta = spec.agent_count() > 1;
    Vector x(sym_var_count(n) + 1 + (has_beta ? 1 : 0));
    int idx = 0;
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) x(idx++) = y(a, b);
    x(idx++) = alpha;
    if (has_beta) x(idx) = beta;
    return x;
}

double verify_riccati(const NetworkSpec& spec, const SpectralData& spectral,
                      const Matrix& y, const Matrix& f, const Vector& pi,
                      const Vector& theta, int i) {
    const int big_n = spec.agent_count();
    if (i < 0 || i >= big_n) throw DimensionMismatch("subsystem index out of range");
    if (pi.size() != big_n) throw DimensionMismatch("pi must have one entry per agent");
    if (big_n > 1 && theta.size() != big_n) {
        throw DimensionMismatch("theta must have one entry per agent when N > 1");
    }

    const double lam = spectral.lambdas(i);
    const double p = spectral.p(i);
    const double q = spectral.q(i);
    const Matrix b2b2 = spec.B2 * spec.B2.transpose();

    double multiplier = p * p / pi(i);
    double theta_bar = 0.0;
    if (big_n > 1) {
        multiplier += q * q / theta(i);
        theta_bar = theta.sum() - theta(i);
    }

    Matrix riccati = spec.A * y + y * spec.A.transpose() + multiplier * b2b2 +
                     y * (lam * spec.Q +
                          (pi(i) + theta_bar) * Matrix::Identity(spec.n, spec.n)) *
                         y +
                     lam * lam * f.transpose() * spec.R * f +
                     lam * (f.transpose() * spec.B1.transpose() + spec.B1 * f);
    return negdef_margin(SymMatrix(0.5 * (riccati + riccati.transpose())));
}

LiftedSolution lemma3_lift(const NetworkSpec& spec, const SpectralData& spectral,
                           const Matrix& y, double pi, double theta) {
    const int big_n = spec.agent_count();
    const double lo = spectral.lambda_min;
    const double hi = spectral.lambda_max;
    const Matrix rinv =
        spec.R.llt().solve(Matrix::Identity(spec.m_in, spec.m_in));

    LiftedSolution lift;
    lift.Y = y;
    lift.F = -(lo / (hi * hi)) * rinv * spec.B1.transpose();
    lift.pi = Vector::Constant(big_n, pi);
    lift.theta = big_n > 1 ? Vector::Constant(big_n, theta) : Vector();
    lift.riccati_margins.resize(big_n);
    for (int i = 0; i < big_n; ++i) {
        lift.riccati_margins(i) =
            verify_riccati(spec, spectral, y, lift.F, lift.pi, lift.theta, i);
        if (lift.riccati_margins(i) <= 0.0) {
            std::ostringstream msg;
            msg << "lifted Riccati margin for subsystem " << (i + 1)
                << " is not positive (" << lift.riccati_margins(i)
                << "); re-solve with a larger margin tolerance";
            throw LiftRejected(msg.str());
        }
    }
    return lift;
}

BoundResult compute_bound(const SynthesisCertificate& cert, const NetworkSpec& spec) {
    const int big_n = spec.agent_count();
    if (cert.pi.size() != big_n) {
        throw DimensionMismatch("certificate multipliers do not match the network");
    }
    BoundResult out;
    out.bound_constant = 0.0;
    for (int i = 0; i < big_n; ++i) {
        double term = cert.pi(i);
        if (big_n > 1) term += cert.theta(i) * (big_n - 1);
        out.bound_constant += term * spec.d;
    }
    if (spec.e0) {
        const Eigen::LLT<Matrix> y_llt(cert.Y);
        if (y_llt.info() != Eigen::Success) {
            throw NotPositiveDefinite("certificate Y is not positive definite");
        }
        double quad = 0.0;
        for (int i = 0; i < big_n; ++i) {
            const Vector e = spec.e0->col(i);
            quad += e.dot(y_llt.solve(e));
        }
        out.bound_total = out.bound_constant + quad;
    }
    return out;
}

SynthesisCertificate synthesize(const NetworkSpec& spec, Method method,
                                const Tolerances& tol) {
    spec.validate();
    if (!spec.pinning.any() || !spec.graph.connected()) {
        throw DegenerateNetwork(
            "graph must be connected with at least one pinned node");
    }
    const SpectralData spectral = analyze_network(spec.graph, spec.pinning);

    const int n = spec.n;
    const int m = spec.m_in;
    const int big_n = spec.agent_count();
    const int n_y = sym_var_count(n);
    const bool has_beta = big_n > 1;

    const AffineLmi lmi = method == Method::Th1 ? assemble_th1(spec, spectral)
                                                : assemble_th2(spec, spectral);
    SolverOptions sopt;
    sopt.pos_tol = tol.pos_tol;
    const FeasibilityResult sol = solve_feasibility(lmi, tol.margin_tol, sopt);
    if (sol.status != FeasStatus::Feasible) {
        std::ostringstream msg;
        msg << method_name(method) << " synthesis LMI "
            << (sol.status == FeasStatus::Infeasible ? "infeasible" : "indeterminate")
            << " at margin " << tol.margin_tol;
        if (!sol.diagnostics.note.empty()) msg << " (" << sol.diagnostics.note << ")";
        throw InfeasibleError(msg.str());
    }

    SynthesisCertificate cert;
    cert.method = method;
    cert.margin_tol_used = tol.margin_tol;
    cert.Y = unpack_sym(sol.x, 0, n);

    if (method == Method::Th1) {
        cert.F.resize(m, n);
        for (int row = 0, idx = n_y; row < m; ++row) {
            for (int col = 0; col < n; ++col, ++idx) cert.F(row, col) = sol.x(idx);
        }
        const int alpha0 = n_y + m * n;
        cert.pi.resize(big_n);
        for (int i = 0; i < big_n; ++i) cert.pi(i) = 1.0 / sol.x(alpha0 + i);
        if (has_beta) {
            cert.theta.resize(big_n);
            for (int i = 0; i < big_n; ++i) {
                cert.theta(i) = 1.0 / sol.x(alpha0 + big_n + i);
            }
        }
        cert.K = cert.Y.llt().solve(cert.F.transpose()).transpose();

        const Matrix joint = lmi.eval(sol.x).mat();
        const int bs = 3 * n + m + n * (big_n - 1);
        cert.lmi_margins.resize(big_n);
        for (int i = 0; i < big_n; ++i) {
            cert.lmi_margins(i) =
                negdef_margin(SymMatrix(joint.block(i * bs, i * bs, bs, bs)));
        }
        cert.riccati_margins.resize(big_n);
        for (int i = 0; i < big_n; ++i) {
            cert.riccati_margins(i) = verify_riccati(spec, spectral, cert.Y, cert.F,
                                                     cert.pi, cert.theta, i);
        }
    } else {
        const double alpha = sol.x(n_y);
        const double pi = 1.0 / alpha;
        const double theta = has_beta ? 1.0 / sol.x(n_y + 1) : 0.0;
        LiftedSolution lift;
        try {
            lift = lemma3_lift(spec, spectral, cert.Y, pi, theta);
        } catch (const LiftRejected& e) {
            throw CertificateRejected(e.what());
        }
        cert.F = lift.F;
        cert.pi = lift.pi;
        cert.theta = lift.theta;
        cert.riccati_margins = lift.riccati_margins;
        cert.K = cert.Y.llt().solve(cert.F.transpose()).transpose();

        const Matrix joint = lmi.eval(sol.x).mat();
        const int bs = has_beta ? 4 * n : 3 * n;
        cert.lmi_margins.resize(1);
        cert.lmi_margins(0) = negdef_margin(SymMatrix(joint.block(0, 0, bs, bs)));
    }

    for (int i = 0; i < cert.lmi_margins.size(); ++i) {
        if (cert.lmi_margins(i) < tol.margin_tol) {
            throw CertificateRejected("stored LMI margin fell below the tolerance");
        }
    }
    for (int i = 0; i < big_n; ++i) {
        if (cert.riccati_margins(i) <= 0.0) {
            throw CertificateRejected("Riccati verification failed after synthesis");
        }
        const double re =
            max_real_eig(spec.A + spectral.lambdas(i) * spec.B1 * cert.K);
        if (re >= 0.0) {
            throw CertificateRejected("closed loop is not Hurwitz for mode " +
                                      std::to_string(i + 1));
        }
    }

    const BoundResult bound = compute_bound(cert, spec);
    cert.bound_constant = bound.bound_constant;
    cert.bound_total = bound.bound_total;
    return cert;
}

}  // namespace cforge
