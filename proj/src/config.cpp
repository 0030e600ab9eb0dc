#include "vp/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>

namespace vp {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& v, int line, const std::string& key) {
    T out{};
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("line " + std::to_string(line) + ": bad value '" + v + "' for " + key, line, key);
    return out;
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("line " + std::to_string(line) + ": bad boolean '" + v + "' for " + key, line, key);
}

using Setter = std::function<void(RunConfig&, const std::string&, int, const std::string&)>;

template <class T>
Setter num(T RunConfig::*field) {
    return [field](RunConfig& c, const std::string& v, int line, const std::string& key) {
        c.*field = parse_number<T>(v, line, key);
    };
}

template <class T>
Setter data_num(T DataSpec::*field) {
    return [field](RunConfig& c, const std::string& v, int line, const std::string& key) {
        c.data.*field = parse_number<T>(v, line, key);
        c.data.present = true;
    };
}

Setter data_pair(std::array<double, 2> DataSpec::*field) {
    return [field](RunConfig& c, const std::string& v, int line, const std::string& key) {
        const auto comma = v.find(',');
        if (comma == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": " + key + " needs 'a, b'", line, key);
        (c.data.*field)[0] = parse_number<double>(trim(v.substr(0, comma)), line, key);
        (c.data.*field)[1] = parse_number<double>(trim(v.substr(comma + 1)), line, key);
        c.data.present = true;
    };
}

Setter flag(bool RunConfig::*field) {
    return [field](RunConfig& c, const std::string& v, int line, const std::string& key) {
        c.*field = parse_bool(v, line, key);
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"run.mode", [](RunConfig& c, const std::string& v, int, const std::string&) { c.mode = v; }},
        {"run.seed", num(&RunConfig::seed)},
        {"run.threads", num(&RunConfig::threads)},
        {"grid.n", num(&RunConfig::n)},
        {"grid.L", num(&RunConfig::L)},
        {"data.amplitude", data_num(&DataSpec::amplitude)},
        {"data.q_center", data_pair(&DataSpec::q_center)},
        {"data.p_center", data_pair(&DataSpec::p_center)},
        {"data.q_width", data_num(&DataSpec::q_width)},
        {"data.p_width", data_num(&DataSpec::p_width)},
        {"data.c0", data_num(&DataSpec::c0)},
        {"data.center_offset", data_num(&DataSpec::center_offset)},
        {"solver.lambda", num(&RunConfig::lambda)},
        {"solver.m", num(&RunConfig::m)},
        {"solver.ds_uniform", num(&RunConfig::ds_uniform)},
        {"solver.s_end", num(&RunConfig::s_end)},
        {"solver.picard_S", num(&RunConfig::picard_S)},
        {"solver.picard_steps", num(&RunConfig::picard_steps)},
        {"solver.picard_tol", num(&RunConfig::picard_tol)},
        {"solver.picard_max_iter", num(&RunConfig::picard_max_iter)},
        {"solver.field_ceiling", num(&RunConfig::field_ceiling)},
        {"solver.cadence", num(&RunConfig::cadence)},
        {"scattering.K", num(&RunConfig::K)},
        {"scattering.fit_lo", num(&RunConfig::fit_lo)},
        {"scattering.fit_hi", num(&RunConfig::fit_hi)},
        {"scattering.window", num(&RunConfig::window)},
        {"wave.T", num(&RunConfig::T)},
        {"wave.m", num(&RunConfig::wave_m)},
        {"wave.K0", num(&RunConfig::K0)},
        {"wave.picard_tol", num(&RunConfig::wave_tol)},
        {"wave.picard_max_iter", num(&RunConfig::wave_max_iter)},
        {"wave.roundtrip", flag(&RunConfig::roundtrip)},
        {"bounds.A", num(&RunConfig::bound_A)},
        {"bounds.theta", num(&RunConfig::bound_theta)},
        {"bounds.quad_nodes", num(&RunConfig::quad_nodes)},
        {"particles.enabled", flag(&RunConfig::particles)},
        {"particles.N", num(&RunConfig::N)},
        {"particles.mass", num(&RunConfig::particle_mass)},
        {"particles.width", num(&RunConfig::particle_width)},
        {"particles.m", num(&RunConfig::particle_m)},
        {"particles.K", num(&RunConfig::particle_K)},
    };
    return table;
}

void check_ranges(const RunConfig& c) {
    auto bad = [](const std::string& key, const std::string& why) { throw ConfigError(key + ": " + why, 0, key); };
    if (c.n < 8) bad("grid.n", "must be >= 8");
    if (!(c.L > 0)) bad("grid.L", "must be positive");
    if (c.lambda != 1 && c.lambda != -1) bad("solver.lambda", "must be +1 or -1");
    if (c.m < 1) bad("solver.m", "must be >= 1");
    if (!(c.ds_uniform > 0)) bad("solver.ds_uniform", "must be positive");
    if (!(c.s_end > 0 && c.s_end < 1)) bad("solver.s_end", "must lie in (0, 1)");
    if (c.K < 4 || c.K > 20) bad("scattering.K", "must lie in [4, 20]");
    if (c.fit_lo < 0 || c.fit_hi > c.K || c.fit_hi - c.fit_lo < 2) bad("scattering.fit_lo", "need 0 <= fit_lo, fit_hi <= K, fit_hi - fit_lo >= 2");
    if (!(c.T > -1 && c.T <= 0)) bad("wave.T", "must lie in (-1, 0]");
    if (c.wave_m < 1) bad("wave.m", "must be >= 1");
    if (c.K0 < 1) bad("wave.K0", "must be >= 1");
    if (c.threads < 0) bad("run.threads", "must be >= 0");
    if (c.data.present && !(c.data.q_width > 0 && c.data.p_width > 0)) bad("data.q_width", "widths must be positive");
}

}  // namespace

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string section, raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']')
                throw ConfigError("line " + std::to_string(line) + ": unterminated section header", line);
            section = trim(text.substr(1, text.size() - 2));
            if (section == "data") cfg.data.present = true;
            if (section == "particles") cfg.particles = true;
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected key = value", line);
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        const std::string full = section.empty() ? "run." + key : section + "." + key;
        const auto it = setters().find(full);
        if (it == setters().end())
            throw ConfigError("line " + std::to_string(line) + ": unknown key '" + full + "'", line, full);
        if (value.empty()) throw ConfigError("line " + std::to_string(line) + ": empty value for " + full, line, full);
        it->second(cfg, value, line, full);
    }
    check_ranges(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path, 0);
    return parse_config(in);
}

}  // namespace vp
