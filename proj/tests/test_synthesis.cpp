#include "doctest.h"

#include <random>

#include "cforge/errors.hpp"
#include "cforge/synthesis.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cforge;

namespace {

SpectralData pendulum_network() {
    return analyze_network(Graph::path(3), Pinning::single(3, 1));
}

Vector th1_alpha(const SynthesisCertificate& cert) { return cert.pi.cwiseInverse(); }
Vector th1_beta(const SynthesisCertificate& cert) {
    return cert.theta.size() > 0 ? Vector(cert.theta.cwiseInverse()) : Vector();
}

}  // namespace

TEST_CASE("joint assembly has the documented shape") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = pendulum_network();
    AffineLmi lmi = assemble_th1(spec, sd);

    // 11x11 per subsystem (n + m + n + n + n*(N-1)), three subsystems, -Y tail.
    CHECK(lmi.dim() == 3 * 11 + 2);
    // vech(Y) + F + three alphas + three betas.
    CHECK(lmi.variable_count == 3 + 2 + 3 + 3);
    int flagged = 0;
    for (bool flag : lmi.positive) flagged += flag ? 1 : 0;
    CHECK(flagged == 6);
    REQUIRE(lmi.pd_blocks.size() == 1);
    CHECK(lmi.pd_blocks[0].dim == 2);
}

TEST_CASE("reduced assembly has the documented shape") {
    NetworkSpec spec = pendulum_spec();
    AffineLmi lmi = assemble_th2(spec, pendulum_network());
    CHECK(lmi.dim() == 4 * 2 + 2);
    CHECK(lmi.variable_count == 3 + 1 + 1);
}

TEST_CASE("joint assembly at the unit point matches explicit block placement") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = pendulum_network();
    AffineLmi lmi = assemble_th1(spec, sd);

    const Matrix y = Matrix::Identity(2, 2);
    const Matrix f = Matrix::Zero(1, 2);
    const Vector alpha = Vector::Ones(3);
    const Vector beta = Vector::Ones(3);
    const Matrix joint = lmi.eval(pack_th1_variables(spec, y, f, alpha, beta)).mat();

    const int bs = 11;
    for (int i = 0; i < 3; ++i) {
        const Matrix block = joint.block(i * bs, i * bs, bs, bs);
        const Matrix expected = oracle::joint_block_by_hand(
            spec.A, spec.B1, spec.B2, spec.Q, spec.R, sd.lambdas(i), sd.p(i),
            sd.q(i), y, f, alpha, beta, i);
        CHECK((block - expected).cwiseAbs().maxCoeff() < 1e-12);

        const Matrix z = spec.A + spec.A.transpose() +
                         (sd.p(i) * sd.p(i) + sd.q(i) * sd.q(i)) * spec.B2 *
                             spec.B2.transpose();
        CHECK((block.topLeftCorner(2, 2) - z).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK((joint.bottomRightCorner(2, 2) + y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("joint assembly at a generic point matches explicit block placement") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = pendulum_network();
    AffineLmi lmi = assemble_th1(spec, sd);

    Matrix y(2, 2);
    y << 1.3, -0.2, -0.2, 0.9;
    Matrix f(1, 2);
    f << 0.7, -1.1;
    Vector alpha(3), beta(3);
    alpha << 0.5, 1.5, 2.5;
    beta << 2.0, 0.25, 1.0;

    const Matrix joint = lmi.eval(pack_th1_variables(spec, y, f, alpha, beta)).mat();
    const int bs = 11;
    for (int i = 0; i < 3; ++i) {
        const Matrix expected = oracle::joint_block_by_hand(
            spec.A, spec.B1, spec.B2, spec.Q, spec.R, sd.lambdas(i), sd.p(i),
            sd.q(i), y, f, alpha, beta, i);
        CHECK((joint.block(i * bs, i * bs, bs, bs) - expected).cwiseAbs().maxCoeff() <
              1e-12);
    }
    // Subsystem blocks never couple to each other.
    CHECK(joint.block(0, bs, bs, bs).cwiseAbs().maxCoeff() == 0.0);
    CHECK(joint.block(bs, 2 * bs, bs, bs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reduced assembly at a sampled point matches explicit block placement") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = pendulum_network();
    AffineLmi lmi = assemble_th2(spec, sd);

    Matrix y(2, 2);
    y << 0.8, 0.1, 0.1, 1.4;
    const double alpha = 0.6;
    const double beta = 1.7;

    const Matrix value = lmi.eval(pack_th2_variables(spec, y, alpha, beta)).mat();
    const Matrix expected = oracle::uniform_matrix_by_hand(
        spec.A, spec.B1, spec.B2, spec.Q, spec.R, sd.lambda_min, sd.lambda_max,
        sd.p_sq, sd.q_sq, y, alpha, beta, 3);
    CHECK((value - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("coupling input matrix of zero removes only the multiplier term") {
    NetworkSpec spec = pendulum_spec();
    spec.B2 = Matrix::Zero(2, 1);
    SpectralData sd = pendulum_network();
    AffineLmi lmi = assemble_th1(spec, sd);
    CHECK(lmi.dim() == 35);

    const Matrix y = Matrix::Identity(2, 2);
    const Matrix f = Matrix::Zero(1, 2);
    const Matrix joint =
        lmi.eval(pack_th1_variables(spec, y, f, Vector::Ones(3), Vector::Ones(3)))
            .mat();
    CHECK((joint.topLeftCorner(2, 2) - (spec.A + spec.A.transpose()))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    // The multiplier rows keep their -I diagonals and Y off-diagonals.
    CHECK(joint.block(5, 5, 2, 2).diagonal().maxCoeff() == doctest::Approx(-1.0));
    CHECK((joint.block(7, 0, 2, 2) - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single pinned agent with unit extremes loses the eigenvalue ratio") {
    NetworkSpec spec = pendulum_spec();
    spec.graph = Graph(1, {});
    spec.pinning = Pinning::single(1, 1);
    SpectralData sd = analyze_network(spec.graph, spec.pinning);
    CHECK(sd.lambda_min == doctest::Approx(1.0));
    CHECK(sd.lambda_max == doctest::Approx(1.0));

    AffineLmi lmi = assemble_th2(spec, sd);
    const Matrix rinv = spec.R.inverse();
    const Matrix expected_const =
        -spec.B1 * rinv * spec.B1.transpose();
    CHECK((lmi.constant.mat().topLeftCorner(2, 2) - expected_const)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("both methods synthesize a certificate for the pendulum network") {
    NetworkSpec spec = pendulum_spec_with_offsets();
    for (Method method : {Method::Th1, Method::Th2}) {
        CAPTURE(method_name(method));
        SynthesisCertificate cert = synthesize(spec, method);

        CHECK(cert.lmi_margins.minCoeff() >= 1e-7);
        CHECK(cert.riccati_margins.minCoeff() > 0.0);
        CHECK(cert.pi.minCoeff() > 0.0);
        CHECK(cert.theta.minCoeff() > 0.0);

        Eigen::SelfAdjointEigenSolver<Matrix> yeig(cert.Y, Eigen::EigenvaluesOnly);
        CHECK(yeig.eigenvalues()(0) > 0.0);

        SpectralData sd = pendulum_network();
        for (int i = 0; i < 3; ++i) {
            Matrix acl = spec.A + sd.lambdas(i) * spec.B1 * cert.K;
            Eigen::EigenSolver<Matrix> eig(acl);
            CHECK(eig.eigenvalues().real().maxCoeff() < 0.0);
        }

        REQUIRE(cert.bound_total.has_value());
        CHECK(*cert.bound_total > 0.0);
        CHECK(cert.bound_constant == 0.0);
    }
}

TEST_CASE("gain formulas match their defining identities") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = pendulum_network();

    SynthesisCertificate joint = synthesize(spec, Method::Th1);
    CHECK((joint.K * joint.Y - joint.F).cwiseAbs().maxCoeff() <= 1e-8);

    SynthesisCertificate reduced = synthesize(spec, Method::Th2);
    const double ratio = sd.lambda_min / (sd.lambda_max * sd.lambda_max);
    Matrix expected_k =
        -ratio * spec.R.inverse() * spec.B1.transpose() * reduced.Y.inverse();
    CHECK((reduced.K - expected_k).cwiseAbs().maxCoeff() <= 1e-8);
    Matrix expected_f = -ratio * spec.R.inverse() * spec.B1.transpose();
    CHECK((reduced.F - expected_f).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("degenerate networks are refused") {
    NetworkSpec spec = pendulum_spec();
    spec.pinning = Pinning::none(3);
    CHECK_THROWS_AS(synthesize(spec, Method::Th1), DegenerateNetwork);

    NetworkSpec split = pendulum_spec();
    split.graph = Graph(3, {{1, 2}});
    split.pinning = Pinning::single(3, 1);
    CHECK_THROWS_AS(synthesize(split, Method::Th2), DegenerateNetwork);
}

TEST_CASE("single agent without coupling reduces to stabilizable state feedback") {
    NetworkSpec spec = pendulum_spec();
    spec.graph = Graph(1, {});
    spec.pinning = Pinning::single(1, 1);
    spec.B2 = Matrix::Zero(2, 1);

    CHECK(oracle::controllability_rank(spec.A, spec.B1) == 2);
    SynthesisCertificate cert = synthesize(spec, Method::Th1);
    CHECK(cert.riccati_margins.minCoeff() > 0.0);
    CHECK(cert.theta.size() == 0);

    Eigen::EigenSolver<Matrix> eig(spec.A + spec.B1 * cert.K);
    CHECK(eig.eigenvalues().real().maxCoeff() < 0.0);
}

TEST_CASE("riccati margin matches the schur reduction of the subsystem block") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = pendulum_network();
    SynthesisCertificate cert = synthesize(spec, Method::Th1);

    AffineLmi lmi = assemble_th1(spec, sd);
    Vector x = pack_th1_variables(spec, cert.Y, cert.F, th1_alpha(cert),
                                  th1_beta(cert));
    const Matrix joint = lmi.eval(x).mat();
    const int bs = 11;

    for (int i = 0; i < 3; ++i) {
        const SymMatrix block(Matrix(joint.block(i * bs, i * bs, bs, bs)));
        const Matrix reduced = schur_reduce(block, 2).mat();

        const double theta_bar = cert.theta.sum() - cert.theta(i);
        const Matrix direct = oracle::riccati_by_hand(
            spec.A, spec.B1, spec.B2, spec.Q, spec.R, sd.lambdas(i), sd.p(i),
            sd.q(i), cert.Y, cert.F, cert.pi(i), theta_bar, cert.theta(i));
        CHECK((reduced - direct).cwiseAbs().maxCoeff() < 1e-8);

        const double lib_margin =
            verify_riccati(spec, sd, cert.Y, cert.F, cert.pi, cert.theta, i);
        CHECK(lib_margin ==
              doctest::Approx(negdef_margin(SymMatrix(direct))).epsilon(1e-9));
        CHECK((negdef_margin(block) > 0.0) == (lib_margin > 0.0));
        CHECK(lib_margin > 0.0);
    }
}

TEST_CASE("inflating Y breaks the riccati inequality") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = pendulum_network();
    SynthesisCertificate cert = synthesize(spec, Method::Th1);

    const Matrix huge = 1e6 * cert.Y;
    for (int i = 0; i < 3; ++i) {
        CHECK(verify_riccati(spec, sd, huge, cert.F, cert.pi, cert.theta, i) < 0.0);
    }
}

TEST_CASE("reduced solutions lift to every mode") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = pendulum_network();
    SynthesisCertificate cert = synthesize(spec, Method::Th2);

    LiftedSolution lifted =
        lemma3_lift(spec, sd, cert.Y, cert.pi(0), cert.theta(0));
    REQUIRE(lifted.riccati_margins.size() == 3);
    CHECK(lifted.riccati_margins.minCoeff() > 0.0);
    CHECK((lifted.pi.array() == cert.pi(0)).all());
    CHECK((lifted.theta.array() == cert.theta(0)).all());
}

TEST_CASE("scaled-down feasible points stay liftable") {
    // Scaling all variables by t in (0, 1] keeps the reduced condition strictly
    // feasible because its constant block is negative semidefinite; the lift
    // must then accept (tY, pi/t, theta/t) for every t.
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = pendulum_network();
    SynthesisCertificate cert = synthesize(spec, Method::Th2);
    AffineLmi lmi = assemble_th2(spec, sd);

    for (double t : {1.0, 0.7, 0.4, 0.2, 0.1}) {
        CAPTURE(t);
        const Matrix y = t * cert.Y;
        const double alpha = t / cert.pi(0);
        const double beta = t / cert.theta(0);
        CHECK(negdef_margin(lmi.eval(pack_th2_variables(spec, y, alpha, beta))) >
              0.0);
        LiftedSolution lifted =
            lemma3_lift(spec, sd, y, cert.pi(0) / t, cert.theta(0) / t);
        CHECK(lifted.riccati_margins.minCoeff() > 0.0);
    }
}

TEST_CASE("a broken Y is rejected by the lift") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = pendulum_network();
    SynthesisCertificate cert = synthesize(spec, Method::Th2);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    bool rejected = false;
    for (int trial = 0; trial < 8 && !rejected; ++trial) {
        Matrix noise = Matrix::Zero(2, 2);
        noise(0, 0) = dist(rng);
        noise(1, 1) = dist(rng);
        noise(0, 1) = noise(1, 0) = 0.3 * dist(rng);
        const Matrix y = cert.Y + 50.0 * noise * noise.transpose();
        try {
            lemma3_lift(spec, sd, y, cert.pi(0), cert.theta(0));
        } catch (const LiftRejected&) {
            rejected = true;
        }
    }
    CHECK(rejected);
}

TEST_CASE("single agent lift is the identity reduction") {
    NetworkSpec spec = pendulum_spec();
    spec.graph = Graph(1, {});
    spec.pinning = Pinning::single(1, 1);
    SpectralData sd = analyze_network(spec.graph, spec.pinning);
    SynthesisCertificate cert = synthesize(spec, Method::Th2);

    LiftedSolution lifted = lemma3_lift(spec, sd, cert.Y, cert.pi(0), 1.0);
    CHECK(lifted.riccati_margins.size() == 1);
    CHECK(lifted.riccati_margins(0) > 0.0);
    CHECK(lifted.theta.size() == 0);
}

TEST_CASE("bound arithmetic") {
    NetworkSpec spec = pendulum_spec_with_offsets();
    SynthesisCertificate cert = synthesize(spec, Method::Th1);

    SUBCASE("zero offsets and zero d give a zero bound") {
        NetworkSpec quiet = spec;
        quiet.e0 = Matrix::Zero(2, 3);
        BoundResult bound = compute_bound(cert, quiet);
        CHECK(bound.bound_constant == 0.0);
        REQUIRE(bound.bound_total.has_value());
        CHECK(*bound.bound_total == 0.0);
    }

    SUBCASE("unit Y turns the quadratic term into the squared norm") {
        SynthesisCertificate unit = cert;
        unit.Y = Matrix::Identity(2, 2);
        BoundResult bound = compute_bound(unit, spec);
        REQUIRE(bound.bound_total.has_value());
        CHECK(*bound.bound_total ==
              doctest::Approx(spec.e0->squaredNorm()).epsilon(1e-12));
    }

    SUBCASE("quadratic term agrees with a dense inverse") {
        BoundResult bound = compute_bound(cert, spec);
        REQUIRE(bound.bound_total.has_value());
        const Matrix yinv = cert.Y.inverse();
        double quad = 0.0;
        for (int i = 0; i < 3; ++i) {
            quad += spec.e0->col(i).dot(yinv * spec.e0->col(i));
        }
        CHECK(*bound.bound_total == doctest::Approx(quad).epsilon(1e-10));
    }

    SUBCASE("the offset term is linear in d with the multiplier slope") {
        NetworkSpec offset = spec;
        offset.d = 0.25;
        BoundResult at_quarter = compute_bound(cert, offset);
        offset.d = 0.5;
        BoundResult at_half = compute_bound(cert, offset);

        double slope = 0.0;
        for (int i = 0; i < 3; ++i) slope += cert.pi(i) + cert.theta(i) * 2;
        CHECK(at_quarter.bound_constant == doctest::Approx(0.25 * slope));
        CHECK(at_half.bound_constant == doctest::Approx(0.5 * slope));
    }

    SUBCASE("without initial errors only the offset term is certified") {
        NetworkSpec blank = pendulum_spec();
        BoundResult bound = compute_bound(cert, blank);
        CHECK_FALSE(bound.bound_total.has_value());
    }
}

TEST_CASE("uniform bound uses the agent count times the common multipliers") {
    NetworkSpec spec = pendulum_spec_with_offsets();
    spec.d = 0.1;
    SynthesisCertificate cert = synthesize(spec, Method::Th2);
    BoundResult bound = compute_bound(cert, spec);
    const double expected = 3.0 * (cert.pi(0) + cert.theta(0) * 2.0) * 0.1;
    CHECK(bound.bound_constant == doctest::Approx(expected).epsilon(1e-12));
}
