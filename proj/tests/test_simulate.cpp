#include "doctest.h"

#include <cmath>

#include "cforge/errors.hpp"
#include "cforge/simulate.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cforge;

namespace {

constexpr double kPeriod = 1.9869176531592245;  // 2 pi / sqrt(10)

SimConfig pendulum_sim(double k = 0.5) {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_final = 20.0;
    cfg.x0_init = (Vector(2) << 0.1, 0.0).finished();
    cfg.agent_init = Matrix::Zero(2, 3);
    cfg.coupling = MemorylessGain{k * Matrix::Identity(2, 2)};
    cfg.record_stride = 1;
    return cfg;
}

const SynthesisCertificate& joint_cert() {
    static SynthesisCertificate cert =
        synthesize(pendulum_spec_with_offsets(), Method::Th1);
    return cert;
}

}  // namespace

TEST_CASE("agents starting on the leader stay on it") {
    NetworkSpec spec = pendulum_spec();
    SimConfig cfg = pendulum_sim();
    cfg.t_final = 2.0;
    cfg.agent_init.col(0) = cfg.x0_init;
    cfg.agent_init.col(1) = cfg.x0_init;
    cfg.agent_init.col(2) = cfg.x0_init;

    SimulationResult result = simulate(spec, joint_cert().K, cfg);
    CHECK(result.errors.cwiseAbs().maxCoeff() == 0.0);
    CHECK(result.controls.cwiseAbs().maxCoeff() == 0.0);
    CHECK(result.final_cost == 0.0);
    CHECK(result.e_norm.maxCoeff() == 0.0);
    CHECK(result.tail_indicator == 0.0);
    CHECK_FALSE(result.horizon_warning);

    CostBreakdown cost = evaluate_cost(result, spec);
    CHECK(cost.j_direct == 0.0);
    CHECK(cost.j_stacked == 0.0);
    CHECK(cost.j_hat == 0.0);

    SpectralData sd = analyze_network(spec.graph, spec.pinning);
    CHECK(decomposition_residual(result, spec, sd).maxCoeff() == 0.0);
}

TEST_CASE("the leader follows the analytic pendulum solution") {
    NetworkSpec spec = pendulum_spec();
    SimConfig cfg = pendulum_sim();
    cfg.t_final = 1.0;

    SimulationResult result = simulate(spec, joint_cert().K, cfg);
    const int last = static_cast<int>(result.time.size()) - 1;
    CHECK(result.time(last) == doctest::Approx(1.0));
    const Vector analytic = oracle::pendulum_leader_analytic(1.0);
    CHECK((result.leader.col(last) - analytic).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("with no coupling the cost matches the stacked Lyapunov solution") {
    NetworkSpec spec = pendulum_spec();
    const Matrix& k = joint_cert().K;
    SimConfig cfg = pendulum_sim(0.0);

    SimulationResult result = simulate(spec, k, cfg);
    const double j = evaluate_cost(result, spec).j_direct;

    const Matrix grounded =
        grounded_matrix(build_laplacian(spec.graph), spec.pinning).value;
    const Matrix eye3 = Matrix::Identity(3, 3);
    const Matrix a_cl =
        oracle::kron(eye3, spec.A) + oracle::kron(grounded, spec.B1 * k);
    const Matrix w = oracle::kron(grounded, spec.Q) +
                     oracle::kron(grounded * grounded,
                                  k.transpose() * spec.R * k);
    const Matrix p = oracle::solve_lyapunov(a_cl, w);

    Vector e0(6);
    e0 << 0.1, 0.0, 0.1, 0.0, 0.1, 0.0;
    const double expected = e0.dot(p * e0);
    CHECK(j == doctest::Approx(expected).epsilon(0.005));
}

TEST_CASE("the three cost forms agree on simulated trajectories") {
    NetworkSpec spec = pendulum_spec();

    SUBCASE("spring coupling") {
        SimulationResult result = simulate(spec, joint_cert().K, pendulum_sim());
        CostBreakdown cost = evaluate_cost(result, spec);
        CHECK(std::abs(cost.j_direct - cost.j_stacked) <= 1e-8 * cost.j_direct);
        CHECK(std::abs(cost.j_stacked - cost.j_hat) <= 1e-6 * cost.j_stacked);
    }

    SUBCASE("filter coupling") {
        LtiFilter lag;
        lag.A = -2.0 * Matrix::Identity(2, 2);
        lag.B = Matrix::Identity(2, 2);
        lag.C = Matrix::Identity(2, 2);
        lag.D = Matrix::Zero(2, 2);
        SimConfig cfg = pendulum_sim();
        cfg.coupling = lag;
        cfg.t_final = 10.0;

        SimulationResult result = simulate(spec, joint_cert().K, cfg);
        CostBreakdown cost = evaluate_cost(result, spec);
        CHECK(std::abs(cost.j_direct - cost.j_stacked) <= 1e-8 * cost.j_direct);
        CHECK(std::abs(cost.j_stacked - cost.j_hat) <= 1e-6 * cost.j_stacked);
        CHECK(result.iqc.pass);
    }
}

TEST_CASE("eigenmode coordinates are an isometric relabeling") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = analyze_network(spec.graph, spec.pinning);
    SimConfig cfg = pendulum_sim();
    cfg.t_final = 2.0;

    SimulationResult result = simulate(spec, joint_cert().K, cfg);
    Matrix eps = transform_errors(result, sd);

    const Matrix dense =
        oracle::kron(sd.T.transpose(), Matrix::Identity(2, 2));
    for (int s = 0; s < static_cast<int>(result.time.size()); s += 200) {
        const Vector expected = dense * result.errors.col(s);
        CHECK((eps.col(s) - expected).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(eps.col(s).norm() ==
              doctest::Approx(result.errors.col(s).norm()).epsilon(1e-10));
    }
}

TEST_CASE("per-mode dynamics explain the simulated errors") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = analyze_network(spec.graph, spec.pinning);

    SimConfig coarse = pendulum_sim();
    coarse.t_final = 4.0;
    SimulationResult run = simulate(spec, joint_cert().K, coarse);
    Vector residual = decomposition_residual(run, spec, sd);
    CHECK(residual.maxCoeff() <= 1e-4);

    SimConfig fine = coarse;
    fine.dt = 0.5e-3;
    Vector finer = decomposition_residual(simulate(spec, joint_cert().K, fine),
                                          spec, sd);
    // The stencil converges much faster; halving must at least halve it.
    for (int i = 0; i < 3; ++i) CHECK(finer(i) <= 0.5 * residual(i) + 1e-12);
}

TEST_CASE("residual check reduces to the linear part without coupling") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = analyze_network(spec.graph, spec.pinning);
    SimConfig cfg = pendulum_sim(0.0);
    cfg.t_final = 4.0;
    Vector residual =
        decomposition_residual(simulate(spec, joint_cert().K, cfg), spec, sd);
    CHECK(residual.maxCoeff() <= 1e-4);
}

TEST_CASE("residual check rejects stateful coupling") {
    NetworkSpec spec = pendulum_spec();
    SpectralData sd = analyze_network(spec.graph, spec.pinning);
    LtiFilter lag;
    lag.A = -2.0 * Matrix::Identity(2, 2);
    lag.B = Matrix::Identity(2, 2);
    lag.C = Matrix::Identity(2, 2);
    lag.D = Matrix::Zero(2, 2);
    SimConfig cfg = pendulum_sim();
    cfg.coupling = lag;
    cfg.t_final = 1.0;
    SimulationResult run = simulate(spec, joint_cert().K, cfg);
    CHECK_THROWS_AS(decomposition_residual(run, spec, sd), UnsupportedOperator);
}

TEST_CASE("bound verdicts") {
    NetworkSpec spec = pendulum_spec_with_offsets();
    const SynthesisCertificate& cert = joint_cert();

    SUBCASE("certified gain with admissible coupling satisfies the bound") {
        SimulationResult result = simulate(spec, cert.K, pendulum_sim());
        BoundCheck check = check_bound(result, cert, spec);
        CHECK(check.verdict == BoundCheck::Verdict::Satisfied);
        CHECK(check.j_direct <= check.bound_total);
        CHECK(result.iqc.pass);
    }

    SUBCASE("zero initial error sits on the equality edge") {
        SimConfig cfg = pendulum_sim();
        cfg.agent_init.col(0) = cfg.x0_init;
        cfg.agent_init.col(1) = cfg.x0_init;
        cfg.agent_init.col(2) = cfg.x0_init;
        SimulationResult result = simulate(spec, cert.K, cfg);
        BoundCheck check = check_bound(result, cert, spec);
        CHECK(check.j_direct == 0.0);
        CHECK(check.bound_total == 0.0);
        CHECK(check.verdict == BoundCheck::Verdict::Satisfied);
    }

    SUBCASE("an expansive spring voids the claim instead of judging it") {
        SimulationResult result = simulate(spec, cert.K, pendulum_sim(2.0));
        BoundCheck check = check_bound(result, cert, spec);
        CHECK(check.verdict == BoundCheck::Verdict::NotApplicable);
        CHECK(check.note.find("admissible") != std::string::npos);
    }
}

TEST_CASE("short horizons raise the tail warning") {
    NetworkSpec spec = pendulum_spec();
    SimConfig cfg = pendulum_sim();
    cfg.t_final = 0.5;
    SimulationResult result = simulate(spec, joint_cert().K, cfg);
    CHECK(result.tail_indicator > 1e-4);
    CHECK(result.horizon_warning);
}

TEST_CASE("an expansive gain drives the integrator to a diagnosed blowup") {
    NetworkSpec spec = pendulum_spec();
    Matrix bad(1, 2);
    bad << -10.0, -10.0;
    bool thrown = false;
    try {
        simulate(spec, bad, pendulum_sim());
    } catch (const NumericalBlowup& err) {
        thrown = true;
        CHECK(err.time_of_divergence > 0.0);
        CHECK(err.time_of_divergence <= 20.0);
    }
    CHECK(thrown);
}

TEST_CASE("recording stride subsamples the same trajectory") {
    NetworkSpec spec = pendulum_spec();
    SimConfig dense = pendulum_sim();
    dense.t_final = 2.0;
    SimConfig sparse = dense;
    sparse.record_stride = 10;

    SimulationResult full = simulate(spec, joint_cert().K, dense);
    SimulationResult sub = simulate(spec, joint_cert().K, sparse);
    REQUIRE(sub.time.size() == 201);
    for (int s = 0; s < 201; ++s) {
        CHECK((sub.agents.col(s) - full.agents.col(10 * s)).cwiseAbs().maxCoeff() ==
              0.0);
        CHECK((sub.leader.col(s) - full.leader.col(10 * s)).cwiseAbs().maxCoeff() ==
              0.0);
    }
    CHECK(sub.dt == doctest::Approx(10 * dense.dt));
}

TEST_CASE("integration error falls sixteenfold per step halving") {
    NetworkSpec spec = pendulum_spec();
    const Matrix& k = joint_cert().K;

    double previous = 0.0;
    for (int level = 0; level < 4; ++level) {
        const int steps = 256 << level;
        SimConfig cfg = pendulum_sim();
        cfg.dt = kPeriod / steps;
        cfg.t_final = kPeriod;
        SimulationResult result = simulate(spec, k, cfg);

        const int last = static_cast<int>(result.time.size()) - 1;
        const Vector analytic = oracle::pendulum_leader_analytic(kPeriod);
        const double err = (result.leader.col(last) - analytic).norm();

        if (level > 0) {
            const double ratio = previous / err;
            CHECK(ratio > 12.0);
            CHECK(ratio < 20.0);
        }
        previous = err;
    }
}
