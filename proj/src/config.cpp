#include "bilin/config.hpp"

#include "bilin/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bilin {

namespace {

namespace bpt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys = {
        {"plant", {"model", "e_amp", "omega", "l_ind", "c_cap", "g_load", "v_target", "r_source", "f_sw"}},
        {"gains", {"k_gain", "gamma1", "gamma2", "lambda", "t_filter", "phi0", "u_min", "u_max", "saturate"}},
        {"certificate", {"p11", "p22", "dfrak22", "psigma11", "psigma22", "dsigma", "omega_sign"}},
        {"scenario", {"mode", "pwm", "dt", "t_end", "events", "reference", "hold_control"}},
        {"output", {"path", "decimation"}},
        {"analysis", {"pe_window"}},
    };
    return keys;
}

std::string trim(std::string s)
{
    const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

double to_double(const std::string& raw, std::string_view what)
{
    const std::string text = trim(raw);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError(fmt::format("{}: '{}' is not a number", what, text));
    }
    return value;
}

int to_int(const std::string& raw, std::string_view what)
{
    const std::string text = trim(raw);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError(fmt::format("{}: '{}' is not an integer", what, text));
    }
    return value;
}

bool to_bool(const std::string& raw, std::string_view what)
{
    const std::string text = trim(raw);
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw ConfigError(fmt::format("{}: '{}' is not a boolean", what, text));
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

class Section {
public:
    Section(const bpt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    std::optional<std::string> raw(const std::string& key) const
    {
        if (tree_ == nullptr) {
            return std::nullopt;
        }
        if (auto v = tree_->get_optional<std::string>(bpt::ptree::path_type(key, '\0'))) {
            return trim(*v);
        }
        return std::nullopt;
    }

    void read(const std::string& key, double& out) const
    {
        if (auto v = raw(key)) {
            out = to_double(*v, name_ + "." + key);
        }
    }

    void read(const std::string& key, std::optional<double>& out) const
    {
        if (auto v = raw(key)) {
            out = to_double(*v, name_ + "." + key);
        }
    }

    void read(const std::string& key, int& out) const
    {
        if (auto v = raw(key)) {
            out = to_int(*v, name_ + "." + key);
        }
    }

    void read(const std::string& key, bool& out) const
    {
        if (auto v = raw(key)) {
            out = to_bool(*v, name_ + "." + key);
        }
    }

private:
    const bpt::ptree* tree_;
    std::string name_;
};

}  // namespace

bool CertificateTamper::any() const
{
    return p11 || p22 || dfrak22 || psigma11 || psigma22 || dsigma || omega_sign != 1.0;
}

pfp::LoopSpec RunConfig::loop_spec() const
{
    pfp::LoopSpec spec;
    spec.truth = plant;
    spec.design = plant;
    spec.design.r_source = 0.0;
    spec.gains = gains;
    spec.mode = scenario.mode;
    spec.reference = reference;
    spec.saturate = saturate;
    spec.u_min = u_min;
    spec.u_max = u_max;
    return spec;
}

void RunConfig::validate() const
{
    plant.validate();
    scenario.validate();
    if (saturate && !(u_min < u_max)) {
        throw ConfigError("gains: u_min must be below u_max");
    }
    if (!(phi0 > 0.0)) {
        throw ConfigError("gains: phi0 must be positive");
    }
    if (!(pe_window > 0.0)) {
        throw ConfigError("analysis: pe_window must be positive");
    }
    if (tamper.omega_sign != 1.0 && tamper.omega_sign != -1.0) {
        throw ConfigError("certificate: omega_sign must be +1 or -1");
    }
}

std::vector<Event> parse_events(const std::string& text, const pfp::PfpParams& nominal)
{
    const std::string trimmed = trim(text);
    if (trimmed == "benchmark") {
        return pfp::benchmark_events(nominal);
    }
    std::vector<Event> events;
    std::stringstream all(trimmed);
    std::string item;
    while (std::getline(all, item, ';')) {
        item = trim(item);
        if (item.empty()) {
            continue;
        }
        std::istringstream parts(item);
        std::string t_text;
        std::string key;
        std::string v_text;
        std::string extra;
        if (!(parts >> t_text >> key >> v_text) || (parts >> extra)) {
            throw ConfigError(fmt::format("scenario.events: '{}' is not 'time KEY value'", item));
        }
        events.push_back({to_double(t_text, "event time"), key, to_double(v_text, "event value")});
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
    return events;
}

std::string format_events(const std::vector<Event>& events)
{
    std::string out;
    for (std::size_t k = 0; k < events.size(); ++k) {
        out += fmt::format("{}{} {} {}", k == 0 ? "" : "; ", num(events[k].time), events[k].key, num(events[k].value));
    }
    return out;
}

RunConfig parse_config(const std::string& text)
{
    bpt::ptree tree;
    std::istringstream in(text);
    try {
        bpt::read_ini(in, tree);
    } catch (const bpt::ini_parser_error& err) {
        throw ConfigError(fmt::format("config line {}: {}", err.line(), err.message()));
    }

    const auto& known = known_keys();
    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) {
            if (body.empty()) {
                throw ConfigError(fmt::format("config: key '{}' outside a section", section));
            }
            throw ConfigError(fmt::format("config: unknown section [{}]", section));
        }
        for (const auto& [key, value] : body) {
            if (!it->second.contains(key)) {
                throw ConfigError(fmt::format("config: unknown key '{}' in [{}]", key, section));
            }
        }
    }
    auto section = [&](const std::string& name) {
        const auto child = tree.get_child_optional(name);
        return Section(child ? &*child : nullptr, name);
    };

    RunConfig cfg;
    const Section plant = section("plant");
    if (auto model = plant.raw("model"); model && *model != "pfp") {
        throw ConfigError(fmt::format("plant.model: unsupported model '{}' (pfp)", *model));
    }
    plant.read("e_amp", cfg.plant.e_amp);
    plant.read("omega", cfg.plant.omega);
    plant.read("l_ind", cfg.plant.l_ind);
    plant.read("c_cap", cfg.plant.c_cap);
    plant.read("g_load", cfg.plant.g_load);
    plant.read("v_target", cfg.plant.v_target);
    plant.read("r_source", cfg.plant.r_source);
    plant.read("f_sw", cfg.plant.f_sw);
    cfg.plant.validate();

    // Gain defaults follow the (possibly overridden) plant.
    cfg.gains = pfp::PfpGains::defaults_for(cfg.plant);
    const Section gains = section("gains");
    gains.read("k_gain", cfg.gains.k_gain);
    gains.read("gamma1", cfg.gains.gamma1);
    gains.read("gamma2", cfg.gains.gamma2);
    gains.read("lambda", cfg.gains.lambda);
    gains.read("t_filter", cfg.gains.t_filter);
    gains.read("phi0", cfg.phi0);
    gains.read("u_min", cfg.u_min);
    gains.read("u_max", cfg.u_max);
    gains.read("saturate", cfg.saturate);

    const Section cert = section("certificate");
    cert.read("p11", cfg.tamper.p11);
    cert.read("p22", cfg.tamper.p22);
    cert.read("dfrak22", cfg.tamper.dfrak22);
    cert.read("psigma11", cfg.tamper.psigma11);
    cert.read("psigma22", cfg.tamper.psigma22);
    cert.read("dsigma", cfg.tamper.dsigma);
    cert.read("omega_sign", cfg.tamper.omega_sign);

    const Section sc = section("scenario");
    if (auto v = sc.raw("mode")) {
        cfg.scenario.mode = parse_control_mode(*v);
    }
    if (auto v = sc.raw("pwm")) {
        cfg.scenario.pwm = parse_pwm_model(*v);
    }
    sc.read("dt", cfg.scenario.dt);
    sc.read("t_end", cfg.scenario.t_end);
    if (auto v = sc.raw("events")) {
        cfg.scenario.events = parse_events(*v, cfg.plant);
    }
    if (auto v = sc.raw("reference")) {
        cfg.reference = pfp::parse_reference_kind(*v);
    }
    sc.read("hold_control", cfg.scenario.hold_control);

    const Section out = section("output");
    if (auto v = out.raw("path")) {
        cfg.output_path = *v;
    }
    out.read("decimation", cfg.scenario.log_decimation);

    section("analysis").read("pe_window", cfg.pe_window);

    cfg.scenario.phi0 = cfg.phi0;
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string serialize_config(const RunConfig& c)
{
    std::string out;
    auto line = [&out](std::string_view key, const std::string& value) {
        out += fmt::format("{} = {}\n", key, value);
    };
    out += "[plant]\n";
    line("model", "pfp");
    line("e_amp", num(c.plant.e_amp));
    line("omega", num(c.plant.omega));
    line("l_ind", num(c.plant.l_ind));
    line("c_cap", num(c.plant.c_cap));
    line("g_load", num(c.plant.g_load));
    line("v_target", num(c.plant.v_target));
    line("r_source", num(c.plant.r_source));
    line("f_sw", num(c.plant.f_sw));

    out += "\n[gains]\n";
    line("k_gain", num(c.gains.k_gain));
    line("gamma1", num(c.gains.gamma1));
    line("gamma2", num(c.gains.gamma2));
    line("lambda", num(c.gains.lambda));
    line("t_filter", num(c.gains.t_filter));
    line("phi0", num(c.phi0));
    line("u_min", num(c.u_min));
    line("u_max", num(c.u_max));
    line("saturate", c.saturate ? "true" : "false");

    if (c.tamper.any()) {
        out += "\n[certificate]\n";
        const std::pair<const char*, const std::optional<double>*> fields[] = {
            {"p11", &c.tamper.p11},           {"p22", &c.tamper.p22},
            {"dfrak22", &c.tamper.dfrak22},   {"psigma11", &c.tamper.psigma11},
            {"psigma22", &c.tamper.psigma22}, {"dsigma", &c.tamper.dsigma},
        };
        for (const auto& [key, value] : fields) {
            if (*value) {
                line(key, num(**value));
            }
        }
        line("omega_sign", num(c.tamper.omega_sign));
    }

    out += "\n[scenario]\n";
    line("mode", std::string(to_string(c.scenario.mode)));
    line("pwm", std::string(to_string(c.scenario.pwm)));
    line("dt", num(c.scenario.dt));
    line("t_end", num(c.scenario.t_end));
    line("events", format_events(c.scenario.events));
    line("reference", std::string(pfp::to_string(c.reference)));
    line("hold_control", c.scenario.hold_control ? "true" : "false");

    out += "\n[output]\n";
    line("path", c.output_path);
    line("decimation", std::to_string(c.scenario.log_decimation));

    out += "\n[analysis]\n";
    line("pe_window", num(c.pe_window));
    return out;
}

}  // namespace bilin
