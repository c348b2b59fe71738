#pragma once

#include "bilin/pfp.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bilin {

// Overrides applied to the certificate during verification only.
struct CertificateTamper {
    std::optional<double> p11;
    std::optional<double> p22;
    std::optional<double> dfrak22;
    std::optional<double> psigma11;
    std::optional<double> psigma22;
    std::optional<double> dsigma;
    double omega_sign = 1.0;

    bool any() const;
};

/// Effective run configuration. Every field has a default; the file only
/// overrides. Sections: plant, gains, certificate, scenario, output, analysis.
struct RunConfig {
    pfp::PfpParams plant;
    pfp::PfpGains gains = pfp::PfpGains::defaults_for(pfp::PfpParams{});
    double phi0 = 1e-6;
    bool saturate = true;
    double u_min = -1.0;
    double u_max = 1.0;
    CertificateTamper tamper;
    Scenario scenario;
    pfp::ReferenceKind reference = pfp::ReferenceKind::exact;
    std::string output_path = "run.csv";
    double pe_window = 0.02;

    pfp::LoopSpec loop_spec() const;
    void validate() const;  // throws ConfigError
};

/// Parses the INI text. Unknown sections/keys, duplicates and malformed
/// numbers throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Writes every effective value with round-trip precision, so parsing the
/// result reproduces the configuration bit for bit.
std::string serialize_config(const RunConfig& config);

/// "t KEY value; t KEY value; ..." or the word "benchmark" for the standard
/// schedule built from `nominal`.
std::vector<Event> parse_events(const std::string& text, const pfp::PfpParams& nominal);
std::string format_events(const std::vector<Event>& events);

}  // namespace bilin
