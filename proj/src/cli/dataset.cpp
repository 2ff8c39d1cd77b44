#include "qrtrend/cli/dataset.hpp"

#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qrtrend/error.hpp"

namespace qrtrend::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Splits one CSV record; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

}  // namespace

SeriesDataset parse_csv(const std::string& text, const std::string& source,
                        const std::string& value_column,
                        const std::optional<std::string>& label_column) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (!trim(line).empty()) {
            header = split_record(line);
            break;
        }
    }
    if (header.empty()) throw ValidationError(source + ": file is empty (no header row)");

    std::set<std::string> seen;
    for (const auto& h : header)
        if (!seen.insert(h).second)
            throw ValidationError(where(source, line_no) + "duplicate header '" + h + "'");

    auto find_column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ValidationError(where(source, line_no) + "missing column '" + name + "'");
    };
    const std::size_t value_idx = find_column(value_column);
    std::optional<std::size_t> label_idx;
    if (label_column) label_idx = find_column(*label_column);

    SeriesDataset ds;
    ds.source = source;
    ds.value_column = value_column;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_record(line);
        if (fields.size() != header.size())
            throw ValidationError(where(source, line_no) + "expected " + std::to_string(header.size()) +
                                  " fields, found " + std::to_string(fields.size()));
        const std::string& raw = fields[value_idx];
        if (raw.empty())
            throw ValidationError(where(source, line_no) + "missing value in column '" + value_column + "'");
        double v = 0.0;
        const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
        if (res.ec != std::errc() || res.ptr != raw.data() + raw.size() || !std::isfinite(v))
            throw ValidationError(where(source, line_no) + "cannot parse '" + raw + "' as a number");
        ds.values.push_back(v);
        if (label_idx) ds.labels.push_back(fields[*label_idx]);
    }
    if (ds.values.empty()) throw ValidationError(source + ": no data rows after the header");
    return ds;
}

SeriesDataset ingest_csv(const std::string& path, const std::string& value_column,
                         const std::optional<std::string>& label_column) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError(path + ": cannot open file");
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_csv(buf.str(), path, value_column, label_column);
}

std::optional<long> parse_iso_date(const std::string& s) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string format_iso_date(long days_since_epoch) {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days_since_epoch}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace qrtrend::cli
