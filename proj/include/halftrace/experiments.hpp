#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "halftrace/extension.hpp"
#include "halftrace/fields.hpp"

namespace halftrace::experiments {

struct ExperimentConfig {
    std::string scenario = "scan";
    int m = 2;
    double p = 1.5;
    double lambda = 2.0;
    double theta = 1.0;
    std::vector<double> kappas = {0.5, 0.25};     // strictly decreasing
    std::vector<double> window_lo = {-1.0, 0.0};  // physical box, last axis is height
    std::vector<double> window_hi = {1.0, 1.0};
    int skeleton_intervals = 4;
    double grid_step = 0.0;  // reconstruction grid step; 0 = kappa/8
    int h_per_axis = 4;
    std::uint64_t seed = 0;
    std::string out_dir = ".";

    std::string boundary_kind = "constant";  // constant | linear | vortex | from-file
    int vortex_degree = 1;
    double linear_frequency = 1.0;
    std::string boundary_file;

    void validate() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Defined-everywhere S^1-valued boundary datum on {x_m = 0}.
std::function<std::vector<double>(std::span<const double>)> boundary_datum(
    const ExperimentConfig& cfg);

struct ScanEntry {
    double kappa = 0.0;
    std::vector<double> h;
    double raw_energy = 0.0;
    double normalized_energy = 0.0;  // kappa^{m - floor(p)} * raw
    int iterations = 0;
    bool converged = true;
};

struct ScanResult {
    ExperimentConfig config;
    std::vector<ScanEntry> entries;
    std::vector<double> kappas;
    std::vector<double> admissible_fraction;  // per kappa, at threshold theta
    double liminf_estimate = 0.0;             // min over the three smallest kappas
};

// For each kappa and each lattice shift h: sample the datum on the boundary
// skeleton, minimize the p-energy of its extension to the floor(p)-skeleton,
// and record the normalized energy and admissibility at theta.
ScanResult condition_iii_scan(const ExperimentConfig& cfg);

struct ReconstructResult {
    fields::DiscreteMap extension;  // on the full window grid
    fields::EnergyReport energy;
    double energy_bound = 0.0;  // chain constant * theta (with slack)
    bool energy_within_bound = true;
    std::vector<double> chosen_h;
    double chosen_kappa = 0.0;
    std::vector<double> trace_depths;
    std::vector<double> trace_errors;  // L^p mismatch against the datum per depth
};

ReconstructResult reconstruct_from_scan(const ScanResult& scan, const ExperimentConfig& cfg);

struct VerifyInstance {
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // >= 0 means pass
    std::string note;
};

struct VerifyReport {
    std::string name;
    std::vector<VerifyInstance> instances;
    bool pass = true;
};

// name in {pyramid, chain, integration_lemma, translation_lemma, kernel_mass,
// gamma_oracle}; each runs seeded random instances and reports margins.
VerifyReport verify_suite(const std::string& name, std::uint64_t seed);

// Deterministic report files <scenario>_<seed>.<ext>; returns the path.
std::string emit_scan_report(const ScanResult& scan, const std::string& format,
                             const std::string& out_dir);
std::string emit_verify_report(const VerifyReport& report, std::uint64_t seed,
                               const std::string& format, const std::string& out_dir);

nlohmann::json scan_to_json(const ScanResult& scan);

// Helpers shared by the scan, the CLI and the acceptance suite.
cubical::Cubication make_cubication(const ExperimentConfig& cfg, double kappa,
                                    const std::vector<double>& h);
double trace_mismatch(const std::function<std::vector<double>(std::span<const double>)>& u,
                      const ExperimentConfig& cfg, double kappa, const std::vector<double>& h,
                      double step);

}  // namespace halftrace::experiments
