#pragma once

#include "lowfreq/series.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lowfreq::ingest {

// ---------------------------------------------------------------------------
// NOAA nClimDiv fixed-width files

enum class Layout {
    County,    ///< SS CCC EE YYYY (11 chars) + 12 x 7 = 95 chars
    Division,  ///< SS DD EE YYYY (10 chars) + 12 x 7 = 94 chars
};

inline constexpr double kMissing = -99.90;
inline constexpr int kAverageTemperature = 2;

struct Record {
    int state = 0;        ///< nClimDiv state code (01-48 alphabetical contiguous states)
    int area = 0;         ///< county FIPS or climate division
    int element = 0;
    int year = 0;
    std::array<double, 12> months{};
};

struct RecordSet {
    Layout layout = Layout::County;
    std::vector<Record> records;
};

/**
 * Parses every line of an nClimDiv file. The layout is detected from the
 * first non-empty line and all lines must match it. Element codes are
 * checked against the published list (UnknownElementCode) but not filtered.
 */
[[nodiscard]] RecordSet parse_records(std::string_view text);

/// Writes records in the layout they were read with.
[[nodiscard]] std::string write_records(const RecordSet& set);

/// Two-letter postal code for nClimDiv state codes 1-48; nullopt otherwise.
[[nodiscard]] std::optional<std::string> state_abbreviation(int code);

/// Area id used for weights: state abbreviation plus zero-padded area code, e.g. "CA037".
[[nodiscard]] std::string area_id(const Record& r, Layout layout);

struct AuditEntry {
    std::string area;
    int year = 0;
    std::string action;  ///< "interpolated", "rejected", "dropped-state"
    std::string detail;
};

struct NclimdivOptions {
    /// Area weights keyed by area_id; absent means equal weights within a state.
    std::optional<std::map<std::string, double>> weights;
};

struct NclimdivResult {
    Panel panel;  ///< state x year, degF
    std::vector<AuditEntry> audit;
    std::size_t skipped_element_records = 0;
};

/**
 * Average-temperature panel by state. Annual values are unweighted means of
 * the 12 months. A year with one missing month is filled from its adjacent
 * months; with two or more it is rejected for that area and logged. Areas
 * are averaged to states with weights renormalized over the areas present
 * in each year. Codes above 48 (Alaska, Hawaii, regional aggregates) are
 * dropped. Every state must cover every year (MissingYearCoverage).
 */
[[nodiscard]] NclimdivResult parse_nclimdiv(std::string_view text, const NclimdivOptions& options = {});

// ---------------------------------------------------------------------------
// Long CSV formats

/// `unit,year,value` (optional header). Rectangularity is required.
[[nodiscard]] Panel read_long_csv(std::string_view text, std::string units_label = {});
[[nodiscard]] std::string write_long_csv(const Panel& panel);

/// `unit,weight` (optional header). Weights are returned raw.
[[nodiscard]] std::map<std::string, double> read_weights_csv(std::string_view text);

/**
 * Aggregates a panel of cells into regions: value_rt = sum_c w_c x_ct / sum_c w_c
 * over the cells mapped to region r. Cells missing from @p membership are ignored.
 */
[[nodiscard]] Panel aggregate_cells(const Panel& cells,
                                    const std::map<std::string, std::pair<std::string, double>>& membership);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Dataset construction

/// 100 (log Y_t - log Y_{t-1}); the first year is dropped. Throws NonPositiveLevel.
[[nodiscard]] Panel build_growth(const Panel& levels);

struct Dataset {
    Panel temperature;  ///< demeaned, full temperature record for the common units
    Panel growth;       ///< common units and years
    std::vector<std::string> provenance;

    /// Temperature restricted to the growth years.
    [[nodiscard]] Panel temperature_aligned() const;
};

/**
 * Restricts both panels to their common units (sorted by id), subtracts each
 * unit's pre-cutoff temperature mean over the full temperature record, and
 * trims growth to the years the temperature record covers. Weights,
 * when given, are attached to both panels after renormalizing over the
 * common units. Throws EmptyIntersection when no units or years overlap.
 */
[[nodiscard]] Dataset assemble_dataset(const Panel& temperature, const Panel& growth,
                                       const std::optional<std::map<std::string, double>>& weights = std::nullopt,
                                       int cutoff = 1980);

}  // namespace lowfreq::ingest
