#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "halftrace/density.hpp"
#include "halftrace/errors.hpp"
#include "halftrace/experiments.hpp"
#include "halftrace/extension.hpp"
#include "halftrace/fields.hpp"
#include "halftrace/simplicial.hpp"

namespace {

using halftrace::experiments::ExperimentConfig;

ExperimentConfig load_config(const std::string& path, std::uint64_t seed, const std::string& out) {
    ExperimentConfig cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw halftrace::ConfigError("cannot read config file " + path);
        nlohmann::json j;
        in >> j;
        cfg = ExperimentConfig::from_json(j);
    }
    if (seed != static_cast<std::uint64_t>(-1)) cfg.seed = seed;
    if (!out.empty()) cfg.out_dir = out;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for skeleton extensions of half-space boundary maps"};
    app.require_subcommand(1);

    std::string config_path, out_dir, format = "json";
    std::uint64_t seed = static_cast<std::uint64_t>(-1);
    app.add_option("--config", config_path, "JSON experiment config");
    app.add_option("--seed", seed, "seed override");
    app.add_option("--out", out_dir, "output directory override");
    app.add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

    auto* scan_cmd = app.add_subcommand("scan", "normalized minimal extension energies over (kappa, shift)");
    auto* reconstruct_cmd = app.add_subcommand("reconstruct", "rebuild a half-space extension from an admissible shift");
    auto* verify_cmd = app.add_subcommand("verify", "run an inequality verification suite");
    std::string suite = "pyramid";
    verify_cmd->add_option("suite", suite,
                           "pyramid|chain|integration_lemma|translation_lemma|kernel_mass|gamma_oracle|all");
    auto* density_cmd = app.add_subcommand("density", "extension energy density of the reconstructed map");
    std::string kernel = "trace";
    density_cmd->add_option("--kernel", kernel, "trace|qualitative")->check(CLI::IsMember({"trace", "qualitative"}));
    auto* gamma_cmd = app.add_subcommand("gamma", "Ahlfors-type ratio of a complex file");
    std::string complex_path;
    double lambda_arg = 2.0;
    gamma_cmd->add_option("complex", complex_path, "complex JSON file")->required();
    gamma_cmd->add_option("--lambda", lambda_arg, "ball dilation factor");
    auto* energy_cmd = app.add_subcommand("energy", "p-energy of a serialized map");
    std::string map_path;
    double p_arg = 2.0;
    energy_cmd->add_option("map", map_path, "map sidecar JSON")->required();
    energy_cmd->add_option("--p", p_arg, "energy exponent");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scan_cmd->parsed()) {
            auto cfg = load_config(config_path, seed, out_dir);
            cfg.scenario = cfg.scenario.empty() ? "scan" : cfg.scenario;
            const auto result = halftrace::experiments::condition_iii_scan(cfg);
            const auto path = halftrace::experiments::emit_scan_report(result, format, cfg.out_dir);
            std::cout << "scan report: " << path << "\n";
            for (std::size_t i = 0; i < result.kappas.size(); ++i)
                std::cout << "kappa=" << result.kappas[i]
                          << " admissible_fraction=" << result.admissible_fraction[i] << "\n";
            std::cout << "liminf_estimate=" << result.liminf_estimate << "\n";
            return 0;
        }
        if (reconstruct_cmd->parsed()) {
            auto cfg = load_config(config_path, seed, out_dir);
            const auto scan = halftrace::experiments::condition_iii_scan(cfg);
            const auto rec = halftrace::experiments::reconstruct_from_scan(scan, cfg);
            const std::string sidecar =
                cfg.out_dir + "/" + cfg.scenario + "_" + std::to_string(cfg.seed) + "_extension.json";
            halftrace::fields::save_map(rec.extension, sidecar);
            std::cout << "extension: " << sidecar << "\n";
            std::cout << "energy=" << rec.energy.value << " bound=" << rec.energy_bound
                      << " within_bound=" << (rec.energy_within_bound ? 1 : 0) << "\n";
            for (std::size_t i = 0; i < rec.trace_depths.size(); ++i)
                std::cout << "trace_error[depth=" << rec.trace_depths[i]
                          << "]=" << rec.trace_errors[i] << "\n";
            return rec.energy_within_bound ? 0 : 2;
        }
        if (verify_cmd->parsed()) {
            const std::uint64_t s = seed == static_cast<std::uint64_t>(-1) ? 0 : seed;
            const std::string dir = out_dir.empty() ? "." : out_dir;
            std::vector<std::string> names;
            if (suite == "all")
                names = {"pyramid", "chain", "integration_lemma", "translation_lemma",
                         "kernel_mass", "gamma_oracle"};
            else
                names = {suite};
            bool all_pass = true;
            for (const auto& name : names) {
                const auto report = halftrace::experiments::verify_suite(name, s);
                halftrace::experiments::emit_verify_report(report, s, format, dir);
                for (const auto& inst : report.instances)
                    std::cout << name << ": lhs=" << inst.lhs << " rhs=" << inst.rhs
                              << " margin=" << inst.margin << " (" << inst.note << ")\n";
                std::cout << name << ": " << (report.pass ? "PASS" : "FAIL") << "\n";
                all_pass = all_pass && report.pass;
            }
            return all_pass ? 0 : 2;
        }
        if (density_cmd->parsed()) {
            auto cfg = load_config(config_path, seed, out_dir);
            const auto scan = halftrace::experiments::condition_iii_scan(cfg);
            const auto rec = halftrace::experiments::reconstruct_from_scan(scan, cfg);
            auto grad = halftrace::fields::gradient_magnitude_field(rec.extension);
            for (double& v : grad.values) v = std::pow(v, cfg.p);
            std::vector<double> blo(cfg.window_lo.begin(), cfg.window_lo.end() - 1);
            std::vector<double> bhi(cfg.window_hi.begin(), cfg.window_hi.end() - 1);
            const double step = cfg.grid_step > 0.0 ? cfg.grid_step : cfg.kappas.back() / 8.0;
            auto bgrid = halftrace::fields::GridDomain::boundary_window(cfg.m, blo, bhi, step);
            const auto tag = kernel == "trace" ? halftrace::density::KernelTag::Trace
                                               : halftrace::density::KernelTag::Qualitative;
            const double gamma_exp = std::min(1.0, (cfg.p - 1.0) / 2.0);
            const auto w = halftrace::density::extension_density(grad, bgrid, tag, gamma_exp, cfg.p);
            const std::string path =
                cfg.out_dir + "/" + cfg.scenario + "_" + std::to_string(cfg.seed) + "_density.csv";
            std::ofstream out(path);
            out << "# kernel=" << kernel << " gamma=" << gamma_exp << "\n";
            for (std::size_t i = 0; i < w.values.size(); ++i) {
                const auto pos = w.domain.position(i);
                for (double c : pos) out << c << ',';
                out << w.values[i] << '\n';
            }
            std::cout << "density: " << path << "\n";
            return 0;
        }
        if (gamma_cmd->parsed()) {
            std::ifstream in(complex_path);
            if (!in) throw halftrace::ConfigError("cannot read " + complex_path);
            nlohmann::json j;
            in >> j;
            const auto [complex, sub] = halftrace::simplicial::load_complex_json(j);
            const double value = halftrace::simplicial::gamma(complex, sub, {lambda_arg, {}, 16});
            std::cout << "gamma(lambda=" << lambda_arg << ") = " << value << "\n";
            return 0;
        }
        if (energy_cmd->parsed()) {
            const auto map = halftrace::fields::load_map(map_path);
            const auto report = halftrace::fields::energy_p(map, p_arg);
            std::cout << "energy_p(p=" << report.p << ") = " << report.value
                      << " over " << report.cell_count << " cells at step " << report.step << "\n";
            return 0;
        }
    } catch (const halftrace::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
