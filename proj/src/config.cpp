#include "ssepwin/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ssepwin/io.hpp"

namespace ssepwin {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& is) {
    ConfigFile cfg;
    std::string line;
    while (std::getline(is, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line without '=': " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config line with empty key");
        cfg.kv_[key] = value;
        cfg.lines_.push_back(key + " = " + value);
    }
    return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    return parse(f);
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
    std::istringstream ss(text);
    return parse(ss);
}

bool ConfigFile::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string ConfigFile::get_string(const std::string& key,
                                   const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return std::stod(it->second);
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return std::stoi(it->second);
}

std::uint64_t ConfigFile::get_u64(const std::string& key,
                                  std::uint64_t fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return std::stoull(it->second);
}

std::vector<double> ConfigFile::get_list(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return {};
    std::string v = trim(it->second);
    if (!v.empty() && v.front() == '[') v = v.substr(1);
    if (!v.empty() && v.back() == ']') v.pop_back();
    std::vector<double> out;
    std::string item;
    std::istringstream ss(v);
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(std::stod(t));
    }
    return out;
}

std::vector<int> ConfigFile::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (double v : get_list(key)) out.push_back(static_cast<int>(v));
    return out;
}

void ConfigFile::set(const std::string& key, const std::string& value) {
    kv_[key] = value;
    lines_.push_back(key + " = " + value);
}

BoundaryParams params_from_config(const ConfigFile& cfg) {
    BoundaryParams p;
    p.K = cfg.get_int("K", 1);
    p.theta = cfg.get_double("theta", 1.0);
    p.alpha = cfg.get_list("alpha");
    p.beta = cfg.get_list("beta");
    p.gamma = cfg.get_list("gamma");
    p.delta = cfg.get_list("delta");
    p.require_valid();
    return p;
}

std::vector<std::string> params_echo(const BoundaryParams& p) {
    const auto list = [](const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ", ";
            s += format_double(v[i]);
        }
        return s + "]";
    };
    return {"K = " + std::to_string(p.K),
            "theta = " + format_double(p.theta),
            "alpha = " + list(p.alpha),
            "beta = " + list(p.beta),
            "gamma = " + list(p.gamma),
            "delta = " + list(p.delta)};
}

}  // namespace ssepwin
