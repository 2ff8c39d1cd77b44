#pragma once

#include <map>
#include <string>
#include <vector>

#include "qrtrend/mc.hpp"

namespace qrtrend::cli {

/// Flat sectioned key-value text:
///
///     # comment (also ';')
///     [section]
///     key = value
///
/// Keys outside any section live in section "". Duplicate keys are errors.
class KeyValueConfig {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static KeyValueConfig parse(const std::string& text, const std::string& source);
    static KeyValueConfig load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    const Entry* find(const std::string& section, const std::string& key) const;
    const std::map<std::string, std::map<std::string, Entry>>& sections() const { return sections_; }
    const std::string& source() const { return source_; }

private:
    std::string source_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
};

/// Simulation settings read from a config file. Output paths are empty when unset.
struct SimulateSettings {
    mc::CoverageConfig coverage;
    std::string csv_path;
    std::string json_path;
};

/// Maps [experiment], [grid] and [run] sections onto settings, starting from
/// `defaults`. Unknown sections/keys and malformed values raise ValidationError
/// naming "section.key" and the line.
SimulateSettings simulate_settings_from(const KeyValueConfig& cfg, SimulateSettings defaults = {});

std::vector<std::string> split_list(const std::string& s);
double parse_double(const std::string& s, const std::string& field);
long long parse_integer(const std::string& s, const std::string& field);

}  // namespace qrtrend::cli
