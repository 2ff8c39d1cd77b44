#include "qrtrend/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "qrtrend/error.hpp"

namespace qrtrend::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& source) {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const std::string at = source + ":" + std::to_string(line_no) + ": ";
        if (t.front() == '[') {
            if (t.back() != ']') throw ValidationError(at + "unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ValidationError(at + "empty section name");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ValidationError(at + "expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ValidationError(at + "empty key");
        auto& sec = cfg.sections_[section];
        if (sec.count(key))
            throw ValidationError(at + "duplicate key '" + (section.empty() ? "" : section + ".") + key + "'");
        sec[key] = Entry{value, line_no};
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse(buf.str(), path);
}

bool KeyValueConfig::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

const KeyValueConfig::Entry* KeyValueConfig::find(const std::string& section,
                                                  const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& s, const std::string& field) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError(field + ": cannot parse '" + s + "' as a number");
    return v;
}

long long parse_integer(const std::string& s, const std::string& field) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError(field + ": cannot parse '" + s + "' as an integer");
    return v;
}

SimulateSettings simulate_settings_from(const KeyValueConfig& cfg, SimulateSettings out) {
    static const std::map<std::string, std::set<std::string>> kKnown = {
        {"experiment", {"tau", "level", "replications", "seed", "degree", "coefficient", "noise_scale"}},
        {"grid", {"families", "T", "alpha"}},
        {"run", {"threads", "csv", "json"}},
    };
    for (const auto& [section, entries] : cfg.sections()) {
        const auto known = kKnown.find(section);
        for (const auto& [key, entry] : entries) {
            const std::string name = (section.empty() ? std::string("<top>") : section) + "." + key;
            if (known == kKnown.end() || !known->second.count(key))
                throw ValidationError(cfg.source() + ":" + std::to_string(entry.line) +
                                      ": unknown setting '" + name + "'");
        }
    }

    auto& c = out.coverage;
    auto with = [&](const std::string& section, const std::string& key, auto&& apply) {
        if (const auto* e = cfg.find(section, key)) {
            const std::string field = cfg.source() + ":" + std::to_string(e->line) + ": " + section + "." + key;
            try {
                apply(e->value, field);
            } catch (const ValidationError&) {
                throw;
            } catch (const Error& err) {
                throw ValidationError(field + ": " + err.what());
            }
        }
    };
    auto positive_int = [](long long v, const std::string& field) {
        if (v < 1) throw ValidationError(field + ": must be a positive integer");
        return v;
    };

    with("experiment", "tau", [&](const std::string& v, const std::string& f) { c.tau = parse_double(v, f); });
    with("experiment", "level", [&](const std::string& v, const std::string& f) { c.level = parse_double(v, f); });
    with("experiment", "replications", [&](const std::string& v, const std::string& f) {
        c.replications = static_cast<int>(positive_int(parse_integer(v, f), f));
    });
    with("experiment", "seed", [&](const std::string& v, const std::string& f) {
        const long long s = parse_integer(v, f);
        if (s < 0) throw ValidationError(f + ": seed must be nonnegative");
        c.seed = static_cast<std::uint64_t>(s);
    });
    with("experiment", "degree", [&](const std::string& v, const std::string& f) {
        c.degree = static_cast<int>(parse_integer(v, f));
    });
    with("experiment", "coefficient", [&](const std::string& v, const std::string& f) {
        c.coefficient = static_cast<int>(parse_integer(v, f));
    });
    with("experiment", "noise_scale", [&](const std::string& v, const std::string& f) {
        c.noise_scale = parse_double(v, f);
    });
    with("grid", "families", [&](const std::string& v, const std::string&) {
        c.families.clear();
        for (const auto& item : split_list(v)) c.families.push_back(noise::family_from_string(item));
    });
    with("grid", "T", [&](const std::string& v, const std::string& f) {
        c.T_grid.clear();
        for (const auto& item : split_list(v)) c.T_grid.push_back(positive_int(parse_integer(item, f), f));
    });
    with("grid", "alpha", [&](const std::string& v, const std::string& f) {
        c.alpha_grid.clear();
        for (const auto& item : split_list(v)) c.alpha_grid.push_back(parse_double(item, f));
    });
    with("run", "threads", [&](const std::string& v, const std::string& f) {
        const long long t = parse_integer(v, f);
        if (t < 0) throw ValidationError(f + ": must be nonnegative (0 = all cores)");
        c.threads = static_cast<unsigned>(t);
    });
    with("run", "csv", [&](const std::string& v, const std::string&) { out.csv_path = v; });
    with("run", "json", [&](const std::string& v, const std::string&) { out.json_path = v; });
    return out;
}

}  // namespace qrtrend::cli
