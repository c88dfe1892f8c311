#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cforge/config.hpp"
#include "cforge/errors.hpp"
#include "cforge/simulate.hpp"
#include "cforge/synthesis.hpp"

namespace {

using namespace cforge;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRejected = 2;
constexpr int kExitWarning = 3;

int exit_code_for(const Error& err) {
    if (dynamic_cast<const InfeasibleError*>(&err)) return kExitRejected;
    if (dynamic_cast<const CertificateRejected*>(&err)) return kExitRejected;
    if (dynamic_cast<const LiftRejected*>(&err)) return kExitRejected;
    if (dynamic_cast<const NumericalBlowup*>(&err)) return kExitRejected;
    return kExitUsage;
}

std::optional<double> env_margin_tol() {
    const char* raw = std::getenv("CONSENSUS_FORGE_TOL");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(raw, &end);
    if (end == raw || *end != '\0' || !(v > 0.0)) {
        throw ConfigError("CONSENSUS_FORGE_TOL", "expected a positive number");
    }
    return v;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_matrix(const Matrix& m) {
    std::ostringstream out;
    out << '[';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (r > 0) out << "; ";
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) out << ", ";
            out << fmt(m(r, c));
        }
    }
    out << ']';
    return out.str();
}

Method method_from_name(const std::string& name, const std::string& where) {
    if (name == "th1") return Method::Th1;
    if (name == "th2") return Method::Th2;
    throw ConfigError(where, "unknown method \"" + name + "\"; expected th1 or th2");
}

kernels::Exec exec_from_name(const std::string& name) {
    if (name == "auto") return kernels::Exec::Auto;
    if (name == "serial") return kernels::Exec::Serial;
    if (name == "parallel") return kernels::Exec::Parallel;
    throw ConfigError("--exec", "expected auto, serial, or parallel");
}

double resolve_margin_tol(double from_config) {
    return env_margin_tol().value_or(from_config);
}

void require_simulation_section(const ProblemConfig& cfg) {
    if (!cfg.has_simulation) {
        throw ConfigError("/simulation",
                          "this command needs the simulation section "
                          "(dt, t_final, x0_init, agent_init)");
    }
}

SynthesisCertificate load_checked_certificate(const std::string& path,
                                              const NetworkSpec& spec,
                                              double* pos_tol_out = nullptr) {
    StoredCertificate stored = load_certificate(path);
    const std::string expect = spec_hash(spec);
    if (stored.spec_hash != expect) {
        throw SpecHashMismatch("certificate " + path + " was issued for hash " +
                               stored.spec_hash + " but the problem hashes to " +
                               expect);
    }
    if (pos_tol_out != nullptr) *pos_tol_out = stored.pos_tol;
    return stored.cert;
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
    std::string config;
    std::string method;
    std::string out = "certificate.json";
};

int run_synth(const SynthArgs& args) {
    ProblemConfig cfg = load_config(args.config);
    if (!args.method.empty()) cfg.method = method_from_name(args.method, "--method");

    Tolerances tol;
    tol.margin_tol = resolve_margin_tol(cfg.margin_tol);
    SynthesisCertificate cert = synthesize(cfg.spec, cfg.method, tol);

    write_json(args.out, certificate_to_json(cert, spec_hash(cfg.spec), tol.pos_tol));

    std::cout << "method          " << method_name(cert.method) << '\n';
    std::cout << "gain K          " << fmt_matrix(cert.K) << '\n';
    std::cout << "lmi margin      " << fmt(cert.lmi_margins.minCoeff()) << '\n';
    std::cout << "riccati margin  " << fmt(cert.riccati_margins.minCoeff()) << '\n';
    std::cout << "bound constant  " << fmt(cert.bound_constant) << '\n';
    if (cert.bound_total) {
        std::cout << "bound total     " << fmt(*cert.bound_total) << '\n';
    }
    std::cout << "certificate     " << args.out << '\n';
    return kExitOk;
}

// ------------------------------------------------------------- simulate ----

struct SimulateArgs {
    std::string config;
    std::string cert;
    std::string gain;
    double k = 0.0;
    bool k_set = false;
    std::string out;
    std::string exec = "auto";
};

int run_simulate(const SimulateArgs& args) {
    ProblemConfig cfg = load_config(args.config);
    require_simulation_section(cfg);
    NetworkSpec& spec = cfg.spec;

    Matrix gain;
    std::optional<SynthesisCertificate> cert;
    if (!args.cert.empty()) {
        cert = load_checked_certificate(args.cert, spec);
        gain = cert->K;
    } else if (!args.gain.empty()) {
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(args.gain);
        } catch (const nlohmann::json::parse_error& err) {
            throw ConfigError("--gain", err.what());
        }
        gain = matrix_from_json(parsed, "--gain", spec.m_in, spec.n);
    } else {
        throw ConfigError("--gain", "provide either --cert or --gain");
    }

    if (args.k_set) {
        if (spec.coupling_width() != spec.n) {
            throw ConfigError("--k",
                              "scalar coupling override needs square coupling; "
                              "this problem has width " +
                                  std::to_string(spec.coupling_width()));
        }
        cfg.sim.coupling =
            MemorylessGain{args.k * Matrix::Identity(spec.n, spec.n)};
    } else if (!cfg.has_coupling) {
        throw ConfigError("/coupling",
                          "no coupling section in the config; add one or pass --k");
    }
    cfg.sim.exec = exec_from_name(args.exec);

    SimulationResult result = simulate(spec, gain, cfg.sim);
    CostBreakdown cost = evaluate_cost(result, spec);

    std::cout << "agents          " << spec.agent_count() << ", horizon "
              << fmt(cfg.sim.t_final) << " s, dt " << fmt(cfg.sim.dt) << '\n';
    std::cout << "tracking cost   " << fmt(cost.j_direct) << " (stacked "
              << fmt(cost.j_stacked) << ", modal " << fmt(cost.j_hat) << ")\n";
    if (result.iqc.pass) {
        std::cout << "coupling ledger pass at all " << result.iqc.check_times.size()
                  << " check times\n";
    } else {
        std::cout << "coupling ledger FAIL at t = "
                  << fmt(result.iqc.check_times[static_cast<std::size_t>(
                         result.iqc.first_violation)])
                  << '\n';
    }
    std::cout << "tail indicator  " << fmt(result.tail_indicator) << '\n';
    if (result.tail_indicator <= 1e-6) {
        std::cout << "synchronization pass (|e| fell below 1e-3 of its initial "
                     "value)\n";
    } else {
        std::cout << "synchronization NOT reached within the horizon\n";
    }

    int code = kExitOk;
    if (cert) {
        BoundCheck check = check_bound(result, *cert, spec);
        std::cout << "certified bound " << fmt(check.bound_total) << '\n';
        switch (check.verdict) {
            case BoundCheck::Verdict::Satisfied:
                std::cout << "verdict         satisfied (cost within bound)\n";
                break;
            case BoundCheck::Verdict::Violated:
                std::cout << "verdict         VIOLATED: " << check.note << '\n';
                code = kExitRejected;
                break;
            case BoundCheck::Verdict::NotApplicable:
                std::cout << "verdict         not applicable: " << check.note << '\n';
                break;
        }
    }

    if (!args.out.empty()) {
        write_trajectory_csv(args.out, result, spec);
        std::cout << "trajectory      " << args.out << '\n';
    }

    if (result.horizon_warning) {
        std::cout << "warning: tail energy " << fmt(result.tail_indicator)
                  << " of the initial error remains at t_final; "
                     "the horizon may be too short\n";
        if (code == kExitOk) code = kExitWarning;
    }
    return code;
}

// --------------------------------------------------------------- verify ----

struct VerifyArgs {
    std::string config;
    std::string cert;
};

std::string fmt_margins(const Vector& values) {
    std::string text = "[";
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (i > 0) text += ", ";
        text += fmt(values(i));
    }
    return text + "]";
}

int verify_report(const NetworkSpec& spec, const SynthesisCertificate& cert,
                  double margin_tol) {
    const SpectralData spectral = analyze_network(spec.graph, spec.pinning);
    const int big_n = spec.agent_count();

    bool all_ok = true;
    auto report = [&](bool ok, const std::string& what) {
        std::cout << (ok ? "  ok  " : "FAIL  ") << what << '\n';
        all_ok = all_ok && ok;
    };

    report(true, "problem hash matches (" + spec_hash(spec) + ")");

    Eigen::SelfAdjointEigenSolver<Matrix> yeig(cert.Y, Eigen::EigenvaluesOnly);
    double ymin = yeig.eigenvalues()(0);
    report(ymin > 0.0, "Y positive definite (min eigenvalue " + fmt(ymin) + ")");

    bool mult_ok = (cert.pi.array() > 0.0).all() &&
                   (cert.theta.size() == 0 || (cert.theta.array() > 0.0).all());
    report(mult_ok, "multipliers positive");

    Matrix k_check = cert.Y.llt().solve(cert.F.transpose()).transpose();
    double k_err = (k_check - cert.K).cwiseAbs().maxCoeff();
    report(k_err <= 1e-8 * std::max(1.0, cert.K.cwiseAbs().maxCoeff()),
           "gain consistent with K = F Y^-1 (error " + fmt(k_err) + ")");

    Vector riccati(big_n);
    for (int i = 0; i < big_n; ++i) {
        riccati(i) =
            verify_riccati(spec, spectral, cert.Y, cert.F, cert.pi, cert.theta, i);
    }
    report(riccati.minCoeff() > 0.0,
           "per-mode riccati inequalities hold, margins " + fmt_margins(riccati));

    if (cert.method == Method::Th1) {
        Vector alpha = cert.pi.cwiseInverse();
        Vector beta = cert.theta.size() > 0 ? Vector(cert.theta.cwiseInverse())
                                            : Vector();
        AffineLmi lmi = assemble_th1(spec, spectral);
        Vector x = pack_th1_variables(spec, cert.Y, cert.F, alpha, beta);
        const Matrix joint = lmi.eval(x).mat();
        const int bs = 3 * spec.n + spec.m_in + spec.n * (big_n - 1);
        Vector block_margins(big_n);
        for (int i = 0; i < big_n; ++i) {
            block_margins(i) =
                negdef_margin(SymMatrix(joint.block(i * bs, i * bs, bs, bs)));
        }
        double margin = negdef_margin(SymMatrix(joint));
        report(margin >= margin_tol,
               "joint synthesis condition negative definite (margin " + fmt(margin) +
                   ", tolerance " + fmt(margin_tol) + ", per-subsystem " +
                   fmt_margins(block_margins) + ")");
    } else {
        AffineLmi lmi = assemble_th2(spec, spectral);
        double theta0 = cert.theta.size() > 0 ? cert.theta(0) : 1.0;
        Vector x = pack_th2_variables(spec, cert.Y, 1.0 / cert.pi(0),
                                      cert.theta.size() > 0 ? 1.0 / theta0 : 0.0);
        double margin = negdef_margin(lmi.eval(x));
        report(margin >= margin_tol,
               "reduced synthesis condition negative definite (margin " +
                   fmt(margin) + ", tolerance " + fmt(margin_tol) + ")");
        bool lift_ok = true;
        std::string lift_note;
        try {
            LiftedSolution lifted =
                lemma3_lift(spec, spectral, cert.Y, cert.pi(0), theta0);
            lift_note = "reduced solution lifts to every mode, margins " +
                        fmt_margins(lifted.riccati_margins);
        } catch (const LiftRejected& err) {
            lift_ok = false;
            lift_note = err.what();
        }
        report(lift_ok, lift_note);
    }

    double worst_real = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < big_n; ++i) {
        Matrix acl = spec.A + spectral.lambdas(i) * spec.B1 * cert.K;
        Eigen::EigenSolver<Matrix> eig(acl);
        worst_real = std::max(worst_real, eig.eigenvalues().real().maxCoeff());
    }
    report(worst_real < 0.0,
           "closed loop Hurwitz in every mode (max real part " + fmt(worst_real) +
               ")");

    try {
        BoundResult bound = compute_bound(cert, spec);
        double bound_err = std::abs(bound.bound_constant - cert.bound_constant);
        report(bound_err <= 1e-9 * std::max(1.0, std::abs(cert.bound_constant)),
               "stored bound constant reproducible (error " + fmt(bound_err) + ")");
    } catch (const Error& err) {
        report(false, std::string("bound constant not reproducible: ") + err.what());
    }

    if (all_ok) {
        std::cout << "certificate verified\n";
        return kExitOk;
    }
    std::cout << "certificate REJECTED\n";
    return kExitRejected;
}

int run_verify(const VerifyArgs& args) {
    ProblemConfig cfg = load_config(args.config);
    double pos_tol = 1e-8;
    SynthesisCertificate cert =
        load_checked_certificate(args.cert, cfg.spec, &pos_tol);
    return verify_report(cfg.spec, cert, resolve_margin_tol(cert.margin_tol_used));
}

// ----------------------------------------------------------------- demo ----

struct DemoArgs {
    std::string name = "pendulum";
    std::string out = "demo_out";
};

ProblemConfig pendulum_config() {
    ProblemConfig cfg;
    NetworkSpec& spec = cfg.spec;
    spec.n = 2;
    spec.m_in = 1;
    spec.A = (Matrix(2, 2) << 0.0, 1.0, -10.0, 0.0).finished();
    spec.B1 = (Matrix(2, 1) << 0.0, -4.0).finished();
    spec.B2 = (Matrix(2, 2) << 0.0, 0.0, 1.0, 0.0).finished();
    spec.Q = Matrix::Identity(2, 2);
    spec.R = (Matrix(1, 1) << 0.1).finished();
    spec.graph = Graph::path(3);
    spec.pinning = Pinning::single(3, 1);
    spec.d = 0.0;

    cfg.coupling = MemorylessGain{0.5 * Matrix::Identity(2, 2)};
    cfg.has_coupling = true;

    cfg.has_simulation = true;
    cfg.sim.dt = 1e-3;
    cfg.sim.t_final = 20.0;
    cfg.sim.x0_init = (Vector(2) << 0.1, 0.0).finished();
    cfg.sim.agent_init = Matrix::Zero(2, 3);
    cfg.sim.record_stride = 1;
    cfg.sim.coupling = cfg.coupling;

    Matrix e0(2, 3);
    for (int i = 0; i < 3; ++i) e0.col(i) = cfg.sim.x0_init;
    spec.e0 = e0;

    cfg.method = Method::Th1;
    cfg.margin_tol = 1e-7;
    return cfg;
}

void write_errors_csv(const std::string& path, const SimulationResult& result,
                      const NetworkSpec& spec) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "t";
    for (int i = 1; i <= spec.agent_count(); ++i)
        for (int k = 1; k <= spec.n; ++k) out << ",e" << i << "_" << k;
    out << '\n';
    for (Eigen::Index s = 0; s < result.time.size(); ++s) {
        out << fmt_full(result.time(s));
        for (Eigen::Index c = 0; c < result.errors.rows(); ++c)
            out << ',' << fmt_full(result.errors(c, s));
        out << '\n';
    }
    if (!out) throw Error("failed writing " + path);
}

int run_demo(const DemoArgs& args) {
    if (args.name != "pendulum") {
        throw ConfigError("--name", "unknown demo \"" + args.name +
                                        "\"; available: pendulum");
    }
    namespace fs = std::filesystem;
    fs::create_directories(args.out);
    auto in_dir = [&](const std::string& file) {
        return (fs::path(args.out) / file).string();
    };

    ProblemConfig cfg = pendulum_config();
    const NetworkSpec& spec = cfg.spec;
    const std::string hash = spec_hash(spec);
    write_json(in_dir("config.json"), config_to_json(cfg));

    Tolerances tol;
    tol.margin_tol = resolve_margin_tol(cfg.margin_tol);

    std::cout << "pendulum network: 3 agents on a path, leader pinned at node 1\n";
    for (Method method : {Method::Th1, Method::Th2}) {
        const std::string tag = method_name(method);
        SynthesisCertificate cert = synthesize(spec, method, tol);
        write_json(in_dir("cert_" + tag + ".json"),
                   certificate_to_json(cert, hash, tol.pos_tol));

        SimConfig sim = cfg.sim;
        SimulationResult result = simulate(spec, cert.K, sim);
        CostBreakdown cost = evaluate_cost(result, spec);
        BoundCheck check = check_bound(result, cert, spec);
        write_trajectory_csv(in_dir("traj_" + tag + ".csv"), result, spec);
        write_errors_csv(in_dir("errors_" + tag + ".csv"), result, spec);

        std::cout << tag << ": K = " << fmt_matrix(cert.K) << '\n';
        std::cout << tag << ": cost " << fmt(cost.j_direct) << " <= bound "
                  << fmt(check.bound_total) << " ("
                  << (check.verdict == BoundCheck::Verdict::Satisfied
                          ? "satisfied"
                          : "NOT satisfied")
                  << "), tail " << fmt(result.tail_indicator) << '\n';
        if (verify_report(spec, cert, tol.margin_tol) != kExitOk) {
            return kExitRejected;
        }
    }
    std::cout << "wrote config.json, cert_th1.json, cert_th2.json, traj_*.csv, "
                 "errors_*.csv under "
              << args.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- sweep ----

struct SweepArgs {
    std::string config;
    std::string cert;
    std::string k_grid = "0,0.25,0.5,0.75,1";
    std::string out = "sweep.csv";
};

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> values;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (item.empty()) continue;
        char* end = nullptr;
        double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0') {
            throw ConfigError("--k-grid", "bad entry \"" + item + "\"");
        }
        values.push_back(v);
    }
    if (values.empty()) throw ConfigError("--k-grid", "no values given");
    return values;
}

int run_sweep(const SweepArgs& args) {
    ProblemConfig cfg = load_config(args.config);
    require_simulation_section(cfg);
    const NetworkSpec& spec = cfg.spec;
    if (spec.coupling_width() != spec.n) {
        throw ConfigError("--k-grid",
                          "scalar sweep needs square coupling (width equals "
                          "state dimension)");
    }
    SynthesisCertificate cert = load_checked_certificate(args.cert, spec);
    std::vector<double> grid = parse_grid(args.k_grid);

    struct Row {
        double k = 0.0;
        double j_direct = 0.0;
        double bound_total = 0.0;
        std::string verdict;
        double tail = 0.0;
        bool iqc_pass = false;
        std::string error;
    };
    std::vector<Row> rows(grid.size());

    const auto count = static_cast<std::int64_t>(grid.size());
#ifdef CFORGE_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::int64_t idx = 0; idx < count; ++idx) {
        Row& row = rows[static_cast<std::size_t>(idx)];
        row.k = grid[static_cast<std::size_t>(idx)];
        try {
            SimConfig sim = cfg.sim;
            sim.coupling =
                MemorylessGain{row.k * Matrix::Identity(spec.n, spec.n)};
            sim.exec = kernels::Exec::Serial;
            SimulationResult result = simulate(spec, cert.K, sim);
            CostBreakdown cost = evaluate_cost(result, spec);
            BoundCheck check = check_bound(result, cert, spec);
            row.j_direct = cost.j_direct;
            row.bound_total = check.bound_total;
            switch (check.verdict) {
                case BoundCheck::Verdict::Satisfied: row.verdict = "satisfied"; break;
                case BoundCheck::Verdict::Violated: row.verdict = "violated"; break;
                case BoundCheck::Verdict::NotApplicable:
                    row.verdict = "not_applicable";
                    break;
            }
            row.tail = result.tail_indicator;
            row.iqc_pass = result.iqc.pass;
        } catch (const std::exception& err) {
            row.verdict = "error";
            row.error = err.what();
        }
    }

    std::ofstream out(args.out);
    if (!out) throw Error("cannot open " + args.out + " for writing");
    out << "k,j_direct,bound_total,verdict,tail_indicator,iqc_pass\n";
    for (const Row& row : rows) {
        out << fmt_full(row.k) << ',' << fmt_full(row.j_direct) << ','
            << fmt_full(row.bound_total) << ',' << row.verdict << ','
            << fmt_full(row.tail) << ',' << (row.iqc_pass ? 1 : 0) << '\n';
    }
    if (!out) throw Error("failed writing " + args.out);

    std::cout << "k        cost         bound        verdict\n";
    for (const Row& row : rows) {
        if (row.verdict == "error") {
            std::cout << fmt(row.k) << "  " << row.error << '\n';
        } else {
            std::cout << fmt(row.k) << "  " << fmt(row.j_direct) << "  "
                      << fmt(row.bound_total) << "  " << row.verdict << '\n';
        }
    }
    std::cout << "summary " << args.out << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Gain synthesis, certification, and closed-loop validation for "
        "leader-follower networks of identical linear agents"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand(
        "synth", "Synthesize a tracking gain and write its certificate");
    synth->add_option("--config", synth_args.config, "Problem file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    synth->add_option("--method", synth_args.method,
                      "th1 (per-mode joint) or th2 (reduced); overrides the config");
    synth->add_option("--out", synth_args.out, "Certificate output path")
        ->capture_default_str();

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand(
        "simulate", "Run the closed loop and compare cost against a certificate");
    sim->add_option("--config", sim_args.config, "Problem file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    CLI::Option* cert_opt =
        sim->add_option("--cert", sim_args.cert, "Certificate to validate")
            ->check(CLI::ExistingFile);
    sim->add_option("--gain", sim_args.gain,
                    "Inline gain matrix as JSON rows, e.g. [[3.99,4.52]]")
        ->excludes(cert_opt);
    sim->add_option("--k", sim_args.k,
                    "Override the coupling with k times the identity")
        ->each([&sim_args](const std::string&) { sim_args.k_set = true; });
    sim->add_option("--out", sim_args.out, "Write the trajectory CSV here");
    sim->add_option("--exec", sim_args.exec, "auto, serial, or parallel")
        ->capture_default_str();

    VerifyArgs verify_args;
    CLI::App* verify = app.add_subcommand(
        "verify", "Re-derive every claim a stored certificate makes");
    verify->add_option("--config", verify_args.config, "Problem file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    verify->add_option("--cert", verify_args.cert, "Certificate to check")
        ->required()
        ->check(CLI::ExistingFile);

    DemoArgs demo_args;
    CLI::App* demo = app.add_subcommand(
        "demo", "Generate the worked example end to end");
    demo->add_option("--name", demo_args.name, "Demo name")
        ->capture_default_str();
    demo->add_option("--out", demo_args.out, "Output directory")
        ->capture_default_str();

    SweepArgs sweep_args;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "Simulate a grid of coupling strengths against one certificate");
    sweep->add_option("--config", sweep_args.config, "Problem file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("--cert", sweep_args.cert, "Certificate to validate")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("--k-grid", sweep_args.k_grid,
                      "Comma-separated coupling strengths")
        ->capture_default_str();
    sweep->add_option("--out", sweep_args.out, "Summary CSV path")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        int code = app.exit(err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) return run_synth(synth_args);
        if (sim->parsed()) return run_simulate(sim_args);
        if (verify->parsed()) return run_verify(verify_args);
        if (demo->parsed()) return run_demo(demo_args);
        if (sweep->parsed()) return run_sweep(sweep_args);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return exit_code_for(err);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
