#pragma once

#include <string>

#include "json.hpp"

#include "cforge/simulate.hpp"
#include "cforge/synthesis.hpp"

namespace cforge {

inline constexpr const char* kToolVersion = "0.1.0";

// Parsed problem file. The simulation section is optional; without it only
// synthesis-oriented fields are populated and no initial errors are known.
struct ProblemConfig {
    NetworkSpec spec;
    CouplingOperator coupling = MemorylessGain{Matrix()};
    bool has_coupling = false;
    bool has_simulation = false;
    SimConfig sim;
    Method method = Method::Th1;
    double margin_tol = 1e-7;
};

ProblemConfig parse_config(const nlohmann::json& j);
ProblemConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ProblemConfig& cfg);

// Nested-array to matrix, with ConfigError paths anchored at `path`.
// Pass -1 for a dimension to infer it from the data.
Matrix matrix_from_json(const nlohmann::json& j, const std::string& path,
                        Eigen::Index rows, Eigen::Index cols);

// Stable fingerprint of the synthesis-relevant fields (dynamics, weights,
// topology, IQC offset), built from the raw IEEE bytes of each number.
std::string spec_hash(const NetworkSpec& spec);

nlohmann::json certificate_to_json(const SynthesisCertificate& cert,
                                   const std::string& hash, double pos_tol);

struct StoredCertificate {
    SynthesisCertificate cert;
    std::string spec_hash;
    std::string tool_version;
    double pos_tol = 1e-8;
};

StoredCertificate certificate_from_json(const nlohmann::json& j);
StoredCertificate load_certificate(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// Column layout: t, leader states, agent states, controls, |e|, running cost.
void write_trajectory_csv(const std::string& path, const SimulationResult& result,
                          const NetworkSpec& spec);

}  // namespace cforge
