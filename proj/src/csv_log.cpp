#include "bilin/csv_log.hpp"

#include "bilin/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

namespace bilin {

namespace {

constexpr std::array<std::string_view, 15> kColumns = {
    "t", "v_i", "i", "v", "i_hat", "v_hat", "g_hat", "u", "u_d", "duty", "pf", "v_c", "v_o", "det_phi", "eps",
};

std::optional<double> finite(double v)
{
    return std::isfinite(v) ? std::optional<double>(v) : std::nullopt;
}

std::optional<double> entry(const Vector& v, Index k)
{
    return v.size() > k ? finite(v(k)) : std::nullopt;
}

std::optional<double> value_of(std::string_view col, const LogRecord& r, std::optional<double> pf,
                               const pfp::PfpParams& params)
{
    if (col == "t") return r.t;
    if (col == "v_i") return params.e_amp * r.s(0);
    if (col == "i") return entry(r.x, 0);
    if (col == "v") return entry(r.x, 1);
    if (col == "i_hat") return entry(r.x_hat, 0);
    if (col == "v_hat") return entry(r.x_hat, 1);
    if (col == "g_hat") return entry(r.theta_hat, 0);
    if (col == "u") return entry(r.u_plant, 0);
    if (col == "u_d") return entry(r.u_d, 0);
    if (col == "duty") {
        return r.u_cmd.size() > 0 ? finite((r.u_cmd(0) + 1.0) / 2.0) : std::nullopt;
    }
    if (col == "pf") return pf;
    if (col == "v_c") return finite(r.v_c);
    if (col == "v_o") return finite(r.v_o);
    if (col == "det_phi") return finite(r.det_phi);
    if (col == "eps") return entry(r.eps, 0);
    if (col == "v_d") return entry(r.y_d, 0);
    if (col == "g") return entry(r.theta_true, 0);
    throw ConfigError(fmt::format("csv: unknown column '{}'", col));
}

}  // namespace

std::span<const std::string_view> log_columns() { return kColumns; }

void write_csv(std::ostream& out, const SimLog& log, const pfp::PfpParams& params,
               std::span<const std::string_view> columns, double t_max)
{
    for (auto col : columns) {
        if (std::find(kColumns.begin(), kColumns.end(), col) == kColumns.end() && col != "v_d" && col != "g") {
            throw ConfigError(fmt::format("csv: unknown column '{}'", col));
        }
    }
    std::vector<std::optional<double>> pf(log.records.size());
    if (params.omega > 0.0 && !log.records.empty()) {
        pf = pfp::power_factor(log, params);
    }
    std::string line;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        line += c == 0 ? "" : ",";
        line += columns[c];
    }
    out << line << '\n';
    for (std::size_t k = 0; k < log.records.size(); ++k) {
        const LogRecord& r = log.records[k];
        if (r.t > t_max) {
            break;
        }
        line.clear();
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c > 0) {
                line += ',';
            }
            if (auto v = value_of(columns[c], r, pf[k], params)) {
                line += fmt::format("{:.9g}", *v);
            }
        }
        out << line << '\n';
    }
}

}  // namespace bilin
