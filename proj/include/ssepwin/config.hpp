#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ssepwin/params.hpp"

namespace ssepwin {

// Plain-text key/value configuration:
//   # comment
//   K = 2
//   theta = 1
//   alpha = [1, 0.5]
//   N_list = [64, 128, 256]
//   kind = hydrodynamic
// Raw assignment lines are kept verbatim so they can be echoed into output
// headers for provenance.
class ConfigFile {
public:
    static ConfigFile parse(std::istream& is);
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value);

    const std::vector<std::string>& raw_lines() const { return lines_; }
    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
    std::vector<std::string> lines_;
};

// Builds parameters from the K/theta/alpha/beta/gamma/delta keys.
BoundaryParams params_from_config(const ConfigFile& cfg);

// Assignment lines describing a parameter set, suitable for echoing into
// output headers and for re-parsing.
std::vector<std::string> params_echo(const BoundaryParams& p);

}  // namespace ssepwin
