#include "cforge/config.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "cforge/errors.hpp"

namespace cforge {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path, msg);
}

const json& member(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path + "/" + key, "missing required field");
    return *it;
}

bool has(const json& j, const char* key) {
    return j.is_object() && j.contains(key);
}

double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

Vector as_vector(const json& j, const std::string& path, Eigen::Index size) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    if (size >= 0 && static_cast<Eigen::Index>(j.size()) != size)
        fail(path, "expected " + std::to_string(size) + " entries, got " +
                       std::to_string(j.size()));
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = as_double(j[static_cast<std::size_t>(i)],
                         path + "/" + std::to_string(i));
    return v;
}

// rows/cols of -1 mean "infer from the data"; rectangularity is always checked.
Matrix as_matrix(const json& j, const std::string& path, Eigen::Index rows,
                 Eigen::Index cols) {
    if (!j.is_array() || j.empty())
        fail(path, "expected a non-empty array of rows");
    if (rows >= 0 && static_cast<Eigen::Index>(j.size()) != rows)
        fail(path, "expected " + std::to_string(rows) + " rows, got " +
                       std::to_string(j.size()));
    const auto& first = j[0];
    if (!first.is_array() || first.empty())
        fail(path + "/0", "expected a non-empty row of numbers");
    Eigen::Index ncols = static_cast<Eigen::Index>(first.size());
    if (cols >= 0 && ncols != cols)
        fail(path + "/0", "expected " + std::to_string(cols) +
                              " columns, got " + std::to_string(ncols));
    Matrix m(static_cast<Eigen::Index>(j.size()), ncols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        std::string rpath = path + "/" + std::to_string(r);
        if (!row.is_array() ||
            static_cast<Eigen::Index>(row.size()) != ncols)
            fail(rpath, "ragged row; every row needs " +
                            std::to_string(ncols) + " entries");
        for (Eigen::Index c = 0; c < ncols; ++c)
            m(r, c) = as_double(row[static_cast<std::size_t>(c)],
                                rpath + "/" + std::to_string(c));
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

CouplingOperator parse_coupling(const json& j, const std::string& path,
                                Eigen::Index n, Eigen::Index nw) {
    const std::string kind = member(j, "kind", path).get<std::string>();
    const json& params = member(j, "parameters", path);
    const std::string ppath = path + "/parameters";
    if (kind == "memoryless_gain") {
        if (has(params, "k")) {
            double k = as_double(params["k"], ppath + "/k");
            if (nw != n)
                fail(ppath + "/k",
                     "scalar gain needs square coupling (input and output "
                     "widths differ); give a full gamma matrix instead");
            return MemorylessGain{k * Matrix::Identity(nw, n)};
        }
        if (has(params, "gamma"))
            return MemorylessGain{
                as_matrix(params["gamma"], ppath + "/gamma", nw, n)};
        fail(ppath, "memoryless_gain needs either \"k\" or \"gamma\"");
    }
    if (kind == "lti_filter") {
        Matrix a = as_matrix(member(params, "A", ppath), ppath + "/A", -1, -1);
        if (a.rows() != a.cols()) fail(ppath + "/A", "state matrix must be square");
        Eigen::Index nf = a.rows();
        LtiFilter filt;
        filt.A = a;
        filt.B = as_matrix(member(params, "B", ppath), ppath + "/B", nf, n);
        filt.C = as_matrix(member(params, "C", ppath), ppath + "/C", nw, nf);
        filt.D = as_matrix(member(params, "D", ppath), ppath + "/D", nw, n);
        return filt;
    }
    fail(path + "/kind",
         "unknown coupling kind \"" + kind +
             "\"; expected memoryless_gain or lti_filter");
}

json coupling_to_json(const CouplingOperator& op) {
    json out;
    if (const auto* gain = std::get_if<MemorylessGain>(&op)) {
        out["kind"] = "memoryless_gain";
        const Matrix& g = gain->gamma;
        bool scalar = g.rows() == g.cols() && g.rows() > 0;
        if (scalar) {
            Matrix diff = g - g(0, 0) * Matrix::Identity(g.rows(), g.cols());
            scalar = diff.cwiseAbs().maxCoeff() == 0.0;
        }
        if (scalar)
            out["parameters"] = {{"k", g(0, 0)}};
        else
            out["parameters"] = {{"gamma", matrix_to_json(g)}};
    } else {
        const auto& filt = std::get<LtiFilter>(op);
        out["kind"] = "lti_filter";
        out["parameters"] = {{"A", matrix_to_json(filt.A)},
                             {"B", matrix_to_json(filt.B)},
                             {"C", matrix_to_json(filt.C)},
                             {"D", matrix_to_json(filt.D)}};
    }
    return out;
}

class Fnv1a64 {
  public:
    void bytes(const void* data, std::size_t count) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < count; ++i) {
            hash_ ^= static_cast<std::uint64_t>(p[i]);
            hash_ *= 1099511628211ull;
        }
    }
    void u64(std::uint64_t v) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(buf, 8);
    }
    void f64(double v) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void matrix(const Matrix& m) {
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(hash_));
        return buf;
    }

  private:
    std::uint64_t hash_ = 1469598103934665603ull;
};

Method parse_method(const std::string& name, const std::string& path) {
    if (name == "th1") return Method::Th1;
    if (name == "th2") return Method::Th2;
    fail(path, "unknown method \"" + name + "\"; expected th1 or th2");
}

}  // namespace

Matrix matrix_from_json(const json& j, const std::string& path, Eigen::Index rows,
                        Eigen::Index cols) {
    return as_matrix(j, path, rows, cols);
}

ProblemConfig parse_config(const json& j) {
    if (!j.is_object()) fail("", "top level must be an object");
    ProblemConfig cfg;
    NetworkSpec& spec = cfg.spec;

    const json& dyn = member(j, "dynamics", "");
    spec.n = as_int(member(dyn, "n", "/dynamics"), "/dynamics/n");
    spec.m_in = as_int(member(dyn, "m_in", "/dynamics"), "/dynamics/m_in");
    if (spec.n <= 0) fail("/dynamics/n", "state dimension must be positive");
    if (spec.m_in <= 0) fail("/dynamics/m_in", "input dimension must be positive");
    spec.A = as_matrix(member(dyn, "A", "/dynamics"), "/dynamics/A", spec.n, spec.n);
    spec.B1 = as_matrix(member(dyn, "B1", "/dynamics"), "/dynamics/B1", spec.n,
                        spec.m_in);
    spec.B2 = as_matrix(member(dyn, "B2", "/dynamics"), "/dynamics/B2", spec.n, -1);

    const json& wts = member(j, "weights", "");
    spec.Q = as_matrix(member(wts, "Q", "/weights"), "/weights/Q", spec.n, spec.n);
    spec.R = as_matrix(member(wts, "R", "/weights"), "/weights/R", spec.m_in,
                       spec.m_in);

    const json& graph = member(j, "graph", "");
    int agents = as_int(member(graph, "N", "/graph"), "/graph/N");
    if (agents <= 0) fail("/graph/N", "agent count must be positive");
    std::vector<std::pair<int, int>> edges;
    const json& edge_list = member(graph, "edges", "/graph");
    if (!edge_list.is_array()) fail("/graph/edges", "expected an array of pairs");
    for (std::size_t e = 0; e < edge_list.size(); ++e) {
        std::string epath = "/graph/edges/" + std::to_string(e);
        const json& pair = edge_list[e];
        if (!pair.is_array() || pair.size() != 2)
            fail(epath, "expected a pair [i, j]");
        edges.emplace_back(as_int(pair[0], epath + "/0"),
                           as_int(pair[1], epath + "/1"));
    }
    try {
        spec.graph = Graph(agents, edges);
    } catch (const Error& err) {
        fail("/graph/edges", err.what());
    }
    std::vector<int> gains(static_cast<std::size_t>(agents), 0);
    const json& pinned = member(graph, "pinned", "/graph");
    if (!pinned.is_array()) fail("/graph/pinned", "expected an array of node ids");
    for (std::size_t p = 0; p < pinned.size(); ++p) {
        int node = as_int(pinned[p], "/graph/pinned/" + std::to_string(p));
        if (node < 1 || node > agents)
            fail("/graph/pinned/" + std::to_string(p),
                 "node id out of range 1.." + std::to_string(agents));
        gains[static_cast<std::size_t>(node - 1)] = 1;
    }
    spec.pinning = Pinning(std::move(gains));

    spec.d = 0.0;
    if (has(j, "iqc")) {
        const json& iqc = j["iqc"];
        if (has(iqc, "d")) spec.d = as_double(iqc["d"], "/iqc/d");
        if (spec.d < 0) fail("/iqc/d", "IQC offset must be nonnegative");
    }

    if (has(j, "coupling")) {
        cfg.coupling = parse_coupling(j["coupling"], "/coupling", spec.n,
                                      spec.coupling_width());
        cfg.has_coupling = true;
    } else if (spec.coupling_width() == spec.n) {
        cfg.coupling = MemorylessGain{0.5 * Matrix::Identity(spec.n, spec.n)};
        cfg.has_coupling = true;
    }

    if (has(j, "simulation")) {
        const json& sim = j["simulation"];
        cfg.has_simulation = true;
        cfg.sim.dt = has(sim, "dt") ? as_double(sim["dt"], "/simulation/dt") : 1e-3;
        cfg.sim.t_final = has(sim, "t_final")
                              ? as_double(sim["t_final"], "/simulation/t_final")
                              : 20.0;
        if (cfg.sim.dt <= 0) fail("/simulation/dt", "step must be positive");
        if (cfg.sim.t_final <= 0) fail("/simulation/t_final", "horizon must be positive");
        cfg.sim.x0_init = as_vector(member(sim, "x0_init", "/simulation"),
                                    "/simulation/x0_init", spec.n);
        Matrix rows = as_matrix(member(sim, "agent_init", "/simulation"),
                                "/simulation/agent_init", agents, spec.n);
        cfg.sim.agent_init = rows.transpose();
        if (has(sim, "record_stride")) {
            cfg.sim.record_stride =
                as_int(sim["record_stride"], "/simulation/record_stride");
            if (cfg.sim.record_stride <= 0)
                fail("/simulation/record_stride", "stride must be positive");
        }
        if (cfg.has_coupling) cfg.sim.coupling = cfg.coupling;
        Matrix e0(spec.n, agents);
        for (int i = 0; i < agents; ++i)
            e0.col(i) = cfg.sim.x0_init - cfg.sim.agent_init.col(i);
        spec.e0 = e0;
    }

    if (has(j, "synthesis")) {
        const json& syn = j["synthesis"];
        if (has(syn, "method"))
            cfg.method = parse_method(syn["method"].get<std::string>(),
                                      "/synthesis/method");
        if (has(syn, "margin_tol")) {
            cfg.margin_tol = as_double(syn["margin_tol"], "/synthesis/margin_tol");
            if (cfg.margin_tol <= 0)
                fail("/synthesis/margin_tol", "tolerance must be positive");
        }
    }

    try {
        spec.validate();
    } catch (const Error& err) {
        fail("", err.what());
    }
    return cfg;
}

ProblemConfig load_config(const std::string& path) {
    return parse_config(read_json(path));
}

json config_to_json(const ProblemConfig& cfg) {
    const NetworkSpec& spec = cfg.spec;
    json j;
    j["dynamics"] = {{"n", spec.n},
                     {"m_in", spec.m_in},
                     {"A", matrix_to_json(spec.A)},
                     {"B1", matrix_to_json(spec.B1)},
                     {"B2", matrix_to_json(spec.B2)}};
    j["weights"] = {{"Q", matrix_to_json(spec.Q)}, {"R", matrix_to_json(spec.R)}};
    json edges = json::array();
    for (const auto& [a, b] : spec.graph.edges()) edges.push_back({a, b});
    json pinned = json::array();
    for (int i = 0; i < spec.agent_count(); ++i)
        if (spec.pinning.gains[static_cast<std::size_t>(i)] != 0) pinned.push_back(i + 1);
    j["graph"] = {{"N", spec.agent_count()},
                  {"edges", std::move(edges)},
                  {"pinned", std::move(pinned)}};
    j["iqc"] = {{"d", spec.d}};
    if (cfg.has_coupling) j["coupling"] = coupling_to_json(cfg.coupling);
    if (cfg.has_simulation) {
        json sim;
        sim["dt"] = cfg.sim.dt;
        sim["t_final"] = cfg.sim.t_final;
        sim["x0_init"] = vector_to_json(cfg.sim.x0_init);
        sim["agent_init"] = matrix_to_json(cfg.sim.agent_init.transpose());
        sim["record_stride"] = cfg.sim.record_stride;
        j["simulation"] = std::move(sim);
    }
    j["synthesis"] = {{"method", method_name(cfg.method)},
                      {"margin_tol", cfg.margin_tol}};
    return j;
}

std::string spec_hash(const NetworkSpec& spec) {
    Fnv1a64 h;
    h.bytes("cforge-spec-1", 13);
    h.u64(static_cast<std::uint64_t>(spec.n));
    h.u64(static_cast<std::uint64_t>(spec.m_in));
    h.matrix(spec.A);
    h.matrix(spec.B1);
    h.matrix(spec.B2);
    h.matrix(spec.Q);
    h.matrix(spec.R);
    h.u64(static_cast<std::uint64_t>(spec.agent_count()));
    const auto& edges = spec.graph.edges();
    h.u64(edges.size());
    for (const auto& [a, b] : edges) {
        h.u64(static_cast<std::uint64_t>(a));
        h.u64(static_cast<std::uint64_t>(b));
    }
    h.u64(spec.pinning.gains.size());
    for (int g : spec.pinning.gains) h.u64(static_cast<std::uint64_t>(g));
    h.f64(spec.d);
    return h.hex();
}

json certificate_to_json(const SynthesisCertificate& cert,
                         const std::string& hash, double pos_tol) {
    json j;
    j["tool_version"] = kToolVersion;
    j["spec_hash"] = hash;
    j["method"] = method_name(cert.method);
    j["K"] = matrix_to_json(cert.K);
    j["Y"] = matrix_to_json(cert.Y);
    j["F"] = matrix_to_json(cert.F);
    j["pi"] = vector_to_json(cert.pi);
    j["theta"] = vector_to_json(cert.theta);
    j["lmi_margins"] = vector_to_json(cert.lmi_margins);
    j["riccati_margins"] = vector_to_json(cert.riccati_margins);
    j["bound_constant"] = cert.bound_constant;
    if (cert.bound_total) j["bound_total"] = *cert.bound_total;
    j["tolerances"] = {{"margin_tol", cert.margin_tol_used},
                       {"pos_tol", pos_tol}};
    return j;
}

StoredCertificate certificate_from_json(const json& j) {
    if (!j.is_object()) fail("", "certificate must be an object");
    StoredCertificate stored;
    stored.tool_version = member(j, "tool_version", "").get<std::string>();
    stored.spec_hash = member(j, "spec_hash", "").get<std::string>();
    SynthesisCertificate& cert = stored.cert;
    cert.method = parse_method(member(j, "method", "").get<std::string>(),
                               "/method");
    cert.K = as_matrix(member(j, "K", ""), "/K", -1, -1);
    Eigen::Index n = cert.K.cols();
    Eigen::Index m = cert.K.rows();
    cert.Y = as_matrix(member(j, "Y", ""), "/Y", n, n);
    cert.F = as_matrix(member(j, "F", ""), "/F", m, n);
    cert.pi = as_vector(member(j, "pi", ""), "/pi", -1);
    if (cert.pi.size() == 0) fail("/pi", "needs at least one multiplier");
    cert.theta = as_vector(member(j, "theta", ""), "/theta", -1);
    if (cert.theta.size() != 0 && cert.theta.size() != cert.pi.size())
        fail("/theta", "length must match pi (or be empty for a single agent)");
    cert.lmi_margins = as_vector(member(j, "lmi_margins", ""), "/lmi_margins", -1);
    cert.riccati_margins =
        as_vector(member(j, "riccati_margins", ""), "/riccati_margins",
                  cert.pi.size());
    cert.bound_constant = as_double(member(j, "bound_constant", ""),
                                    "/bound_constant");
    if (has(j, "bound_total"))
        cert.bound_total = as_double(j["bound_total"], "/bound_total");
    const json& tol = member(j, "tolerances", "");
    cert.margin_tol_used = as_double(member(tol, "margin_tol", "/tolerances"),
                                     "/tolerances/margin_tol");
    stored.pos_tol = as_double(member(tol, "pos_tol", "/tolerances"),
                               "/tolerances/pos_tol");
    return stored;
}

StoredCertificate load_certificate(const std::string& path) {
    return certificate_from_json(read_json(path));
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw Error("failed writing " + path);
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& err) {
        throw ConfigError(path, err.what());
    }
    return j;
}

void write_trajectory_csv(const std::string& path, const SimulationResult& result,
                          const NetworkSpec& spec) {
    const int n = spec.n;
    const int agents = spec.agent_count();
    const int m = spec.m_in;
    std::ostringstream header;
    header << "t";
    for (int k = 1; k <= n; ++k) header << ",x0_" << k;
    for (int i = 1; i <= agents; ++i)
        for (int k = 1; k <= n; ++k) header << ",x" << i << "_" << k;
    for (int k = 1; k <= agents * m; ++k) header << ",u_" << k;
    header << ",e_norm,J_running";

    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << header.str() << '\n';
    char buf[32];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    const Eigen::Index samples = result.time.size();
    for (Eigen::Index s = 0; s < samples; ++s) {
        emit(result.time(s));
        for (int k = 0; k < n; ++k) { out << ','; emit(result.leader(k, s)); }
        for (int c = 0; c < agents * n; ++c) { out << ','; emit(result.agents(c, s)); }
        for (int c = 0; c < agents * m; ++c) { out << ','; emit(result.controls(c, s)); }
        out << ','; emit(result.e_norm(s));
        out << ','; emit(result.running_cost(s));
        out << '\n';
    }
    if (!out) throw Error("failed writing " + path);
}

}  // namespace cforge
