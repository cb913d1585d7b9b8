#include "lowfreq/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

namespace lowfreq::ingest {

namespace {

constexpr std::array<const char*, 48> kStates = {
    "AL", "AZ", "AR", "CA", "CO", "CT", "DE", "FL", "GA", "ID", "IL", "IN", "IA", "KS", "KY", "LA",
    "ME", "MD", "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM", "NY", "NC", "ND",
    "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY"};

// Elements published in the nClimDiv county and division files.
const std::set<int> kKnownElements = {1, 2, 5, 6, 7, 8, 25, 26, 27, 28, 71, 72, 73, 74, 75, 76};

constexpr std::size_t kValueWidth = 7;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find('\n', start);
        const std::string_view line = text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
        out.push_back(line);
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t end = line.find(sep, start);
        out.push_back(trim(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start)));
        if (end == std::string_view::npos) return out;
        start = end + 1;
    }
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
    throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_no) + ": " + what);
}

int parse_int(std::string_view s, std::size_t line_no, const char* field) {
    s = trim(s);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        malformed(line_no, std::string("cannot parse ") + field + " '" + std::string(s) + "'");
    }
    return v;
}

double parse_double(std::string_view s, std::size_t line_no, const char* field) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        malformed(line_no, std::string("cannot parse ") + field + " '" + std::string(s) + "'");
    }
    return v;
}

bool is_missing(double v) { return v <= -99.0; }

std::size_t id_width(Layout layout) { return layout == Layout::County ? 11 : 10; }

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

}  // namespace

RecordSet parse_records(std::string_view text) {
    RecordSet set;
    bool detected = false;
    std::size_t line_no = 0;
    for (std::string_view raw : lines(text)) {
        ++line_no;
        std::string_view line = raw;
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t')) {
            line.remove_suffix(1);
        }
        if (line.empty()) continue;
        if (!detected) {
            if (line.size() == 11 + 12 * kValueWidth) {
                set.layout = Layout::County;
            } else if (line.size() == 10 + 12 * kValueWidth) {
                set.layout = Layout::Division;
            } else {
                malformed(line_no, "length " + std::to_string(line.size()) + " matches neither the 95-char county nor the 94-char division layout");
            }
            detected = true;
        }
        const std::size_t w = id_width(set.layout);
        if (line.size() != w + 12 * kValueWidth) {
            malformed(line_no, "length " + std::to_string(line.size()) + ", expected " +
                                   std::to_string(w + 12 * kValueWidth));
        }
        Record r;
        const std::size_t area_w = set.layout == Layout::County ? 3 : 2;
        r.state = parse_int(line.substr(0, 2), line_no, "state code");
        r.area = parse_int(line.substr(2, area_w), line_no, "area code");
        r.element = parse_int(line.substr(2 + area_w, 2), line_no, "element code");
        r.year = parse_int(line.substr(4 + area_w, 4), line_no, "year");
        if (!kKnownElements.count(r.element)) {
            throw Error(ErrorCode::UnknownElementCode,
                        "line " + std::to_string(line_no) + ": element code " + std::to_string(r.element));
        }
        for (std::size_t m = 0; m < 12; ++m) {
            r.months[m] = parse_double(line.substr(w + m * kValueWidth, kValueWidth), line_no, "monthly value");
        }
        set.records.push_back(r);
    }
    return set;
}

std::string write_records(const RecordSet& set) {
    std::ostringstream out;
    char buf[16];
    for (const Record& r : set.records) {
        if (set.layout == Layout::County) {
            std::snprintf(buf, sizeof buf, "%02d%03d%02d%04d", r.state, r.area, r.element, r.year);
        } else {
            std::snprintf(buf, sizeof buf, "%02d%02d%02d%04d", r.state, r.area, r.element, r.year);
        }
        out << buf;
        for (double v : r.months) {
            std::snprintf(buf, sizeof buf, "%7.2f", v);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

std::optional<std::string> state_abbreviation(int code) {
    if (code < 1 || code > 48) return std::nullopt;
    return std::string(kStates[static_cast<std::size_t>(code - 1)]);
}

std::string area_id(const Record& r, Layout layout) {
    const auto st = state_abbreviation(r.state);
    char buf[16];
    std::snprintf(buf, sizeof buf, layout == Layout::County ? "%03d" : "%02d", r.area);
    return (st ? *st : std::to_string(r.state)) + buf;
}

NclimdivResult parse_nclimdiv(std::string_view text, const NclimdivOptions& options) {
    const RecordSet set = parse_records(text);
    NclimdivResult out{Panel({"_"}, 0, Eigen::MatrixXd::Zero(1, 1)), {}, 0};

    // state -> year -> (weighted sum, weight)
    std::map<int, std::map<int, std::pair<double, double>>> acc;
    std::set<std::tuple<int, int, int>> seen;
    std::set<int> dropped;
    // Year range over every usable record, including rejected ones.
    int first = std::numeric_limits<int>::max();
    int last = std::numeric_limits<int>::min();
    for (const Record& r : set.records) {
        if (r.element != kAverageTemperature) {
            ++out.skipped_element_records;
            continue;
        }
        if (!state_abbreviation(r.state)) {
            if (dropped.insert(r.state).second) {
                out.audit.push_back({std::to_string(r.state), 0, "dropped-state",
                                     "state code outside the contiguous 48"});
            }
            continue;
        }
        first = std::min(first, r.year);
        last = std::max(last, r.year);
        auto& state_years = acc[r.state];
        const std::string id = area_id(r, set.layout);
        if (!seen.emplace(r.state, r.area, r.year).second) {
            throw Error(ErrorCode::MalformedRecord, "duplicate record for " + id + " " + std::to_string(r.year));
        }
        std::vector<int> missing;
        for (int m = 0; m < 12; ++m) {
            if (is_missing(r.months[static_cast<std::size_t>(m)])) missing.push_back(m);
        }
        if (missing.size() > 1) {
            out.audit.push_back({id, r.year, "rejected", std::to_string(missing.size()) + " missing months"});
            continue;
        }
        std::array<double, 12> months = r.months;
        if (missing.size() == 1) {
            const int m = missing.front();
            double sum = 0.0;
            int n = 0;
            if (m > 0) sum += months[static_cast<std::size_t>(m - 1)], ++n;
            if (m < 11) sum += months[static_cast<std::size_t>(m + 1)], ++n;
            months[static_cast<std::size_t>(m)] = sum / n;
            out.audit.push_back({id, r.year, "interpolated", "month " + std::to_string(m + 1)});
        }
        double annual = 0.0;
        for (double v : months) annual += v;
        annual /= 12.0;

        double w = 1.0;
        if (options.weights) {
            const auto it = options.weights->find(id);
            if (it == options.weights->end()) throw Error(ErrorCode::MissingWeights, "no weight for area " + id);
            w = it->second;
            if (!(w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative weight for area " + id);
        }
        auto& cell = state_years[r.year];
        cell.first += w * annual;
        cell.second += w;
    }
    if (acc.empty()) throw Error(ErrorCode::MissingYearCoverage, "no average-temperature records for the 48 states");

    const Eigen::Index T = last - first + 1;
    Eigen::MatrixXd values(static_cast<Eigen::Index>(acc.size()), T);
    std::vector<std::string> ids;
    Eigen::Index i = 0;
    for (const auto& [state, years] : acc) {
        const std::string st = *state_abbreviation(state);
        for (int y = first; y <= last; ++y) {
            const auto it = years.find(y);
            if (it == years.end() || !(it->second.second > 0.0)) {
                throw Error(ErrorCode::MissingYearCoverage, st + " has no usable data for " + std::to_string(y));
            }
            values(i, y - first) = it->second.first / it->second.second;
        }
        ids.push_back(st);
        ++i;
    }
    out.panel = Panel(std::move(ids), first, std::move(values), std::nullopt, "degF");
    return out;
}

Panel read_long_csv(std::string_view text, std::string units_label) {
    std::vector<std::string> order;
    std::map<std::string, std::map<int, double>> data;
    std::size_t line_no = 0;
    for (std::string_view raw : lines(text)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 3) malformed(line_no, "expected unit,year,value");
        if (line_no == 1 && f[0] == "unit") continue;
        if (f[0].empty()) malformed(line_no, "empty unit id");
        const std::string unit(f[0]);
        const int year = parse_int(f[1], line_no, "year");
        const double value = parse_double(f[2], line_no, "value");
        if (!data.count(unit)) order.push_back(unit);
        if (!data[unit].emplace(year, value).second) {
            malformed(line_no, "duplicate observation for " + unit + " " + std::to_string(year));
        }
    }
    if (data.empty()) throw Error(ErrorCode::MissingYearCoverage, "no observations");
    int first = std::numeric_limits<int>::max();
    int last = std::numeric_limits<int>::min();
    for (const auto& [unit, years] : data) {
        first = std::min(first, years.begin()->first);
        last = std::max(last, years.rbegin()->first);
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(order.size()), last - first + 1);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& years = data[order[i]];
        for (int y = first; y <= last; ++y) {
            const auto it = years.find(y);
            if (it == years.end()) {
                throw Error(ErrorCode::MissingYearCoverage, order[i] + " has no value for " + std::to_string(y));
            }
            values(static_cast<Eigen::Index>(i), y - first) = it->second;
        }
    }
    return Panel(order, first, std::move(values), std::nullopt, std::move(units_label));
}

std::string write_long_csv(const Panel& panel) {
    std::string out = "unit,year,value\n";
    for (Eigen::Index i = 0; i < panel.N(); ++i) {
        for (Eigen::Index t = 0; t < panel.T(); ++t) {
            out += panel.unit_ids()[static_cast<std::size_t>(i)];
            out += ',';
            out += std::to_string(panel.first_year() + t);
            out += ',';
            out += format_double(panel.values()(i, t));
            out += '\n';
        }
    }
    return out;
}

std::map<std::string, double> read_weights_csv(std::string_view text) {
    std::map<std::string, double> out;
    std::size_t line_no = 0;
    for (std::string_view raw : lines(text)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 2) malformed(line_no, "expected unit,weight");
        if (line_no == 1 && f[0] == "unit") continue;
        const double w = parse_double(f[1], line_no, "weight");
        if (w < 0.0) malformed(line_no, "negative weight");
        if (!out.emplace(std::string(f[0]), w).second) malformed(line_no, "duplicate unit " + std::string(f[0]));
    }
    return out;
}

Panel aggregate_cells(const Panel& cells,
                      const std::map<std::string, std::pair<std::string, double>>& membership) {
    std::map<std::string, std::pair<Eigen::VectorXd, double>> acc;
    for (Eigen::Index i = 0; i < cells.N(); ++i) {
        const auto it = membership.find(cells.unit_ids()[static_cast<std::size_t>(i)]);
        if (it == membership.end()) continue;
        const auto& [region, w] = it->second;
        auto [slot, fresh] = acc.try_emplace(region, Eigen::VectorXd::Zero(cells.T()), 0.0);
        slot->second.first += w * cells.values().row(i).transpose();
        slot->second.second += w;
    }
    if (acc.empty()) throw Error(ErrorCode::EmptyIntersection, "no cell belongs to a region");
    std::vector<std::string> ids;
    Eigen::MatrixXd values(static_cast<Eigen::Index>(acc.size()), cells.T());
    Eigen::Index r = 0;
    for (const auto& [region, sum] : acc) {
        if (!(sum.second > 0.0)) throw Error(ErrorCode::MissingWeights, "region " + region + " has zero total weight");
        values.row(r++) = (sum.first / sum.second).transpose();
        ids.push_back(region);
    }
    return Panel(std::move(ids), cells.first_year(), std::move(values), std::nullopt, cells.units_label());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Panel build_growth(const Panel& levels) {
    if (levels.T() < 2) throw Error(ErrorCode::InvalidArgument, "growth needs at least two years");
    for (Eigen::Index i = 0; i < levels.N(); ++i) {
        for (Eigen::Index t = 0; t < levels.T(); ++t) {
            if (!(levels.values()(i, t) > 0.0)) {
                throw Error(ErrorCode::NonPositiveLevel, levels.unit_ids()[static_cast<std::size_t>(i)] + " " +
                                                             std::to_string(levels.first_year() + t));
            }
        }
    }
    const Eigen::MatrixXd logs = levels.values().array().log().matrix();
    const Eigen::MatrixXd g = 100.0 * (logs.rightCols(levels.T() - 1) - logs.leftCols(levels.T() - 1));
    return Panel(levels.unit_ids(), levels.first_year() + 1, g, levels.weights(), "percent");
}

Panel Dataset::temperature_aligned() const {
    return temperature.slice_years(growth.first_year(), growth.last_year());
}

Dataset assemble_dataset(const Panel& temperature, const Panel& growth,
                         const std::optional<std::map<std::string, double>>& weights, int cutoff) {
    std::vector<std::string> a = temperature.unit_ids();
    std::vector<std::string> b = growth.unit_ids();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::string> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    if (common.empty()) throw Error(ErrorCode::EmptyIntersection, "temperature and growth share no units");
    const int from = std::max(temperature.first_year(), growth.first_year());
    const int to = std::min(temperature.last_year(), growth.last_year());
    if (from > to) {
        throw Error(ErrorCode::EmptyIntersection,
                    "temperature " + std::to_string(temperature.first_year()) + "-" +
                        std::to_string(temperature.last_year()) + " and growth " +
                        std::to_string(growth.first_year()) + "-" + std::to_string(growth.last_year()) +
                        " do not overlap");
    }

    Dataset out{demean_pre_cutoff(temperature.select_units(common), cutoff),
                growth.select_units(common).slice_years(from, to), {}};
    out.provenance.push_back("units: " + std::to_string(common.size()) + " common to temperature (" +
                             std::to_string(temperature.N()) + ") and growth (" + std::to_string(growth.N()) + ")");
    out.provenance.push_back("temperature: unit means over years before " + std::to_string(cutoff) +
                             " subtracted, " + std::to_string(out.temperature.first_year()) + "-" +
                             std::to_string(out.temperature.last_year()));
    out.provenance.push_back("growth: years " + std::to_string(from) + "-" + std::to_string(to) +
                             " (T=" + std::to_string(to - from + 1) + ")");
    if (weights) {
        Eigen::VectorXd w(static_cast<Eigen::Index>(common.size()));
        for (std::size_t i = 0; i < common.size(); ++i) {
            const auto it = weights->find(common[i]);
            if (it == weights->end()) throw Error(ErrorCode::MissingWeights, "no weight for " + common[i]);
            w(static_cast<Eigen::Index>(i)) = it->second;
        }
        const Eigen::VectorXd nw = normalize_weights(w);
        out.temperature = out.temperature.with_weights(nw);
        out.growth = out.growth.with_weights(nw);
        out.provenance.push_back("weights: attached and renormalized over common units");
    }
    return out;
}

}  // namespace lowfreq::ingest
