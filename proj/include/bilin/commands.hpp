#pragma once

#include "bilin/analysis.hpp"
#include "bilin/config.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace bilin::cli {

// Process exit codes, part of the public interface.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // config error or failed check
inline constexpr int kExitNumeric = 2;  // numeric blow-up

// Runs the configured scenario (event hook included).
SimLog run(const RunConfig& config);

struct VerifyResult {
    std::vector<std::pair<std::string, CertificateReport>> sections;
    TrajectoryResidual reference;
    bool reference_passed = false;
    double output_ripple = 0.0;  // reported, never failed

    bool passed() const;
    std::vector<std::string> failing() const;
};

/// Checks the (possibly tampered) certificates against the ideal design
/// plant, plus the reference against the dynamics.
VerifyResult verify(const RunConfig& config);

struct PeCheckResult {
    PeReport q_gram;
    PeReport u_d;
    std::optional<PeReport> regressor;
};

// Throws ConfigError when the window exceeds the horizon.
PeCheckResult pe_check(const RunConfig& config, bool with_regressor);

/// Adaptive run over 0.45 s with the standard event schedule; the plant,
/// gains, step and pwm model come from `config`.
SimLog repro_run(const RunConfig& config);

int cmd_simulate(const RunConfig& config, const std::filesystem::path& out_path, std::ostream& out,
                 std::ostream& err);
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_pe_check(const RunConfig& config, bool with_regressor, std::ostream& out, std::ostream& err);
int cmd_repro(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& out,
              std::ostream& err);

}  // namespace bilin::cli
