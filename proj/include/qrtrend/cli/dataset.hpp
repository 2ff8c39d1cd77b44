#pragma once

#include <optional>
#include <string>
#include <vector>

namespace qrtrend::cli {

/// A univariate series read from CSV. Row r (0-based) has time index t = r + 1.
struct SeriesDataset {
    std::string source;
    std::string value_column;
    std::vector<double> values;
    std::vector<std::string> labels;  // empty when no label column was requested

    std::size_t size() const { return values.size(); }
};

/// Reads a comma-separated UTF-8 file with a header row. Blank lines are
/// skipped; every other row must carry a parseable value. Throws
/// ValidationError with the offending line number.
SeriesDataset ingest_csv(const std::string& path, const std::string& value_column,
                         const std::optional<std::string>& label_column = std::nullopt);

/// Same as ingest_csv on in-memory text (`source` names it in messages).
SeriesDataset parse_csv(const std::string& text, const std::string& source,
                        const std::string& value_column,
                        const std::optional<std::string>& label_column = std::nullopt);

/// Calendar date parsed from "YYYY-MM-DD" as days since 1970-01-01.
std::optional<long> parse_iso_date(const std::string& s);
std::string format_iso_date(long days_since_epoch);

}  // namespace qrtrend::cli
