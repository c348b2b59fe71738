#pragma once

#include "bilin/pfp.hpp"

#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace bilin {

// Fixed column order of the simulation log.
std::span<const std::string_view> log_columns();

/// Writes the header once, then one row per record. Floats carry 9
/// significant digits; quantities that do not exist in the run's mode are
/// left empty. Besides the log columns, "v_d" (output setpoint) and "g"
/// (true load conductance) may be selected.
void write_csv(std::ostream& out, const SimLog& log, const pfp::PfpParams& params,
               std::span<const std::string_view> columns = log_columns(),
               double t_max = std::numeric_limits<double>::infinity());

}  // namespace bilin
