// lowfreq: batch front end for decomposition, panel and time-series
// estimation, inference and the Monte Carlo studies.

#include "lowfreq/error.hpp"
#include "lowfreq/factor.hpp"
#include "lowfreq/filters.hpp"
#include "lowfreq/fracuc.hpp"
#include "lowfreq/inference.hpp"
#include "lowfreq/ingest.hpp"
#include "lowfreq/montecarlo.hpp"
#include "lowfreq/panel.hpp"
#include "lowfreq/parallel.hpp"
#include "lowfreq/series.hpp"
#include "lowfreq/synthetic.hpp"
#include "lowfreq/tsreg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace lowfreq;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
    std::string output_dir = ".";
    int threads = 1;
    std::string temperature;
    std::string growth;
    std::string weights;
    int cutoff = 1980;
    std::uint64_t synthetic_seed = synthetic::SyntheticOptions{}.seed;
    bool quiet = false;
};

// ---------------------------------------------------------------------------
// Output helpers

std::string num(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

void write_text(const Common& c, const std::string& name, const std::string& text) {
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
}

void write_json(const Common& c, const std::string& name, const json& j) {
    write_text(c, name, j.dump(2) + "\n");
}

json versions() {
    return {{"lowfreq", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"cli11", CLI11_VERSION}};
}

/// Metadata block: everything needed to re-run the command.
json metadata(const std::string& command, const Common& c, const std::string& source, json config,
              std::optional<std::uint64_t> seed = std::nullopt) {
    json inputs = {{"source", source}, {"cutoff", c.cutoff}};
    if (!c.temperature.empty()) inputs["temperature"] = c.temperature;
    if (!c.growth.empty()) inputs["growth"] = c.growth;
    if (!c.weights.empty()) inputs["weights"] = c.weights;
    if (c.temperature.empty()) inputs["synthetic_seed"] = c.synthetic_seed;
    json m = {{"command", command}, {"inputs", inputs}, {"config", std::move(config)}};
    if (seed) m["seed"] = *seed;
    m["threads"] = c.threads;
    m["versions"] = versions();
    return m;
}

json interval_json(const inference::Interval& iv) { return json::array({iv.lo, iv.hi}); }

std::string level_key(double level) { return std::to_string(static_cast<int>(std::lround(level * 100.0))); }

void say(const Common& c, const std::string& text) {
    if (!c.quiet) std::cout << text;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

std::string fixed(double v, int digits = 4) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

/// Aligned text table: first row is the header.
std::string table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        if (width.size() < r.size()) width.resize(r.size(), 0);
        for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
    }
    std::string out;
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) out += pad(r[j], width[j] + 2);
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inputs

struct Inputs {
    Panel temperature;  // raw levels
    std::optional<Panel> growth;
    std::optional<std::map<std::string, double>> weights;
    std::string source;
};

Inputs load_inputs(const Common& c, bool need_growth) {
    if (c.temperature.empty()) {
        if (!c.growth.empty()) {
            throw Error(ErrorCode::InvalidArgument, "--growth requires --temperature (or neither for the synthetic sample)");
        }
        synthetic::SyntheticOptions o;
        o.seed = c.synthetic_seed;
        auto d = synthetic::make_synthetic(o);
        return {d.temperature, d.growth, d.weights, "synthetic"};
    }
    Inputs in{ingest::read_long_csv(ingest::read_file(c.temperature), "temperature"), std::nullopt, std::nullopt,
              "files"};
    if (!c.growth.empty()) in.growth = ingest::read_long_csv(ingest::read_file(c.growth), "percent");
    if (need_growth && !in.growth) throw Error(ErrorCode::InvalidArgument, "--growth is required with --temperature");
    if (!c.weights.empty()) in.weights = ingest::read_weights_csv(ingest::read_file(c.weights));
    return in;
}

ingest::Dataset load_dataset(const Common& c, const Inputs& in) {
    return ingest::assemble_dataset(in.temperature, *in.growth, in.weights, c.cutoff);
}

/// Temperatures demeaned pre-cutoff, with weights attached when available.
Panel demeaned_temperature(const Common& c, const Inputs& in) {
    Panel p = demean_pre_cutoff(in.temperature, c.cutoff);
    if (in.weights) {
        Eigen::VectorXd w(p.N());
        for (Eigen::Index i = 0; i < p.N(); ++i) {
            const auto it = in.weights->find(p.unit_ids()[static_cast<std::size_t>(i)]);
            if (it == in.weights->end()) {
                throw Error(ErrorCode::MissingWeights, "no weight for " + p.unit_ids()[static_cast<std::size_t>(i)]);
            }
            w(i) = it->second;
        }
        p = p.with_weights(normalize_weights(w));
    }
    return p;
}

std::pair<Panel, Panel> mw_components(const Panel& p, int q) {
    Eigen::MatrixXd low(p.N(), p.T()), high(p.N(), p.T());
    for (Eigen::Index i = 0; i < p.N(); ++i) {
        const Decomposition d = filters::mw_decompose(p.unit(i), q);
        low.row(i) = d.low.values().transpose();
        high.row(i) = d.high.values().transpose();
    }
    return {p.with_values(low), p.with_values(high)};
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_levels(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        double v = 0.0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
            throw Error(ErrorCode::InvalidArgument, "cannot parse confidence level '" + item + "'");
        }
        if (v > 1.0) v /= 100.0;
        if (!(v > 0.0 && v < 1.0)) throw Error(ErrorCode::InvalidArgument, "confidence levels must lie in (0, 100)");
        out.push_back(v);
    }
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, "--ci needs at least one level");
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOpts {
    std::string source = "nclimdiv";
    std::string input;
    std::string weights;
    bool levels = false;
    std::optional<int> cutoff;
};

int run_ingest(const Common& c, const IngestOpts& o) {
    const std::string text = ingest::read_file(o.input);
    json config = {{"source", o.source}, {"input", o.input}, {"levels", o.levels}};
    if (!o.weights.empty()) config["weights"] = o.weights;
    std::optional<std::map<std::string, double>> weights;
    if (!o.weights.empty()) weights = ingest::read_weights_csv(ingest::read_file(o.weights));

    Panel panel = [&] {
        if (o.source == "nclimdiv") {
            ingest::NclimdivOptions opts;
            opts.weights = weights;
            auto res = ingest::parse_nclimdiv(text, opts);
            std::string audit = "area,year,action,detail\n";
            for (const auto& a : res.audit) {
                audit += a.area + "," + std::to_string(a.year) + "," + a.action + "," + a.detail + "\n";
            }
            write_text(c, "ingest_audit.csv", audit);
            config["audit_entries"] = res.audit.size();
            config["skipped_element_records"] = res.skipped_element_records;
            return res.panel;
        }
        Panel p = ingest::read_long_csv(text);
        if (o.levels) p = ingest::build_growth(p);
        return p;
    }();

    write_text(c, "ingest.csv", ingest::write_long_csv(panel));
    if (o.cutoff) {
        config["cutoff"] = *o.cutoff;
        write_text(c, "ingest_demeaned.csv", ingest::write_long_csv(demean_pre_cutoff(panel, *o.cutoff)));
    }
    json j = {{"metadata", json{{"command", "ingest"}, {"config", config}, {"versions", versions()}}},
              {"result", {{"units", panel.N()}, {"first_year", panel.first_year()}, {"last_year", panel.last_year()},
                          {"units_label", panel.units_label()}}}};
    write_json(c, "ingest.json", j);
    say(c, "ingest: " + std::to_string(panel.N()) + " units, " + std::to_string(panel.first_year()) + "-" +
               std::to_string(panel.last_year()) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// decompose

struct DecomposeOpts {
    std::string method = "mw";
    int q = 8;
    double lambda = 100.0;
    std::optional<int> m;
    int p = 1;
    int h = 2;
    bool standardize = false;
    bool aggregate = false;
    std::string units;
    int correlogram = 0;
};

int run_decompose(const Common& c, const DecomposeOpts& o) {
    const Inputs in = load_inputs(c, false);
    const Panel z = demeaned_temperature(c, in);

    filters::FilterConfig fc;
    if (o.method == "mw") {
        fc = filters::FilterConfig::mw(o.q);
    } else if (o.method == "hp") {
        fc = filters::FilterConfig::hp(o.lambda);
    } else if (o.method == "bhp") {
        filters::BhpStopping stop;
        if (o.m) {
            stop.kind = filters::BhpStopping::Kind::Fixed;
            stop.m = *o.m;
        }
        fc = filters::FilterConfig::bhp(o.lambda, stop);
    } else {
        fc = filters::FilterConfig::jh(o.p, o.h);
    }
    fc.validate();

    std::vector<TimeSeries> series;
    if (o.aggregate) {
        series.push_back(weighted_aggregate(z).with_unit_id("aggregate"));
    } else if (!o.units.empty()) {
        for (const auto& u : split_list(o.units)) {
            const auto i = z.index_of(u);
            if (!i) throw Error(ErrorCode::InvalidArgument, "unknown unit '" + u + "'");
            series.push_back(z.unit(*i));
        }
    } else {
        for (Eigen::Index i = 0; i < z.N(); ++i) series.push_back(z.unit(i));
    }

    std::vector<Decomposition> out(series.size(), filters::decompose(series.front(), fc));
    parallel_for(series.size() - 1, c.threads,
                 [&](std::size_t k) { out[k + 1] = filters::decompose(series[k + 1], fc); });

    std::string csv = "unit,year,value,low,high\n";
    json units = json::array();
    for (const auto& d : out) {
        TimeSeries value = d.source, low = d.low, high = d.high;
        if (o.standardize) {
            value = filters::standardize(value);
            low = filters::standardize(low);
            high = filters::standardize(high);
        }
        for (Eigen::Index t = 0; t < value.size(); ++t) {
            csv += d.source.unit_id() + "," + std::to_string(d.source.first_year() + static_cast<int>(t)) + "," +
                   num(value[t]) + "," + num(low[t]) + "," + num(high[t]) + "\n";
        }
        json u = {{"unit", d.source.unit_id()}, {"method", describe(d.method)},
                  {"defined_from", d.defined_from}, {"delta_low", d.low[d.low.size() - 1] - d.low[d.defined_from]}};
        if (!d.notes.empty()) u["notes"] = d.notes;
        units.push_back(u);
    }
    write_text(c, "decompose.csv", csv);

    if (o.correlogram > 0) {
        std::string cg = "unit,lag,r,null_band\n";
        for (const auto& d : out) {
            const Correlogram r = autocorrelation(d.source, o.correlogram);
            for (std::size_t k = 0; k < r.r.size(); ++k) {
                cg += d.source.unit_id() + "," + std::to_string(k + 1) + "," + num(r.r[k]) + "," + num(r.null_band) + "\n";
            }
        }
        write_text(c, "correlogram.csv", cg);
    }

    json config = {{"method", o.method}, {"label", fc.label()}, {"standardize", o.standardize},
                   {"aggregate", o.aggregate}, {"units", o.units}, {"correlogram", o.correlogram}};
    write_json(c, "decompose.json", {{"metadata", metadata("decompose", c, in.source, config)}, {"units", units}});
    say(c, "decompose: " + fc.label() + " on " + std::to_string(out.size()) + " series\n");
    return 0;
}

// ---------------------------------------------------------------------------
// uc-fit

struct UcOpts {
    double sigma_L = 0.2;
    int p = 1;
    std::string units;
};

int run_uc_fit(const Common& c, const UcOpts& o) {
    const Inputs in = load_inputs(c, false);
    const Panel z = demeaned_temperature(c, in);
    std::vector<TimeSeries> series;
    if (o.units.empty() || o.units == "aggregate") {
        series.push_back(weighted_aggregate(z).with_unit_id("aggregate"));
    } else if (o.units == "all") {
        for (Eigen::Index i = 0; i < z.N(); ++i) series.push_back(z.unit(i));
    } else {
        for (const auto& u : split_list(o.units)) {
            const auto i = z.index_of(u);
            if (!i) throw Error(ErrorCode::InvalidArgument, "unknown unit '" + u + "'");
            series.push_back(z.unit(*i));
        }
    }
    std::vector<std::optional<fracuc::UcFit>> fits(series.size());
    parallel_for(series.size(), c.threads, [&](std::size_t k) { fits[k] = fracuc::uc_fit(series[k], o.sigma_L, o.p); });

    std::string csv = "unit,d,";
    for (int j = 1; j <= o.p; ++j) csv += "a" + std::to_string(j) + ",";
    csv += "sigma_H,nu,loglik,delta_low,converged\n";
    std::string paths = "unit,year,value,low,high\n";
    json units = json::array();
    std::vector<std::vector<std::string>> rows{{"unit", "d", "sigma_H", "nu", "delta_low", "loglik"}};
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& f = *fits[k];
        const auto& low = f.decomposition.low;
        const double delta = low[low.size() - 1] - low[0];
        csv += series[k].unit_id() + "," + num(f.params.d) + ",";
        for (double a : f.params.a) csv += num(a) + ",";
        csv += num(f.params.sigma_H) + "," + num(f.params.nu()) + "," + num(f.loglik) + "," + num(delta) + "," +
               (f.convergence.converged ? "1" : "0") + "\n";
        for (Eigen::Index t = 0; t < low.size(); ++t) {
            paths += series[k].unit_id() + "," + std::to_string(low.first_year() + static_cast<int>(t)) + "," +
                     num(series[k][t]) + "," + num(low[t]) + "," + num(f.decomposition.high[t]) + "\n";
        }
        units.push_back({{"unit", series[k].unit_id()},
                         {"d", f.params.d},
                         {"a", f.params.a},
                         {"sigma_L", f.params.sigma_L},
                         {"sigma_H", f.params.sigma_H},
                         {"nu", f.params.nu()},
                         {"loglik", f.loglik},
                         {"delta_low", delta},
                         {"converged", f.convergence.converged},
                         {"evaluations", f.convergence.evaluations},
                         {"gradient_norm", f.convergence.gradient_norm}});
        rows.push_back({series[k].unit_id(), fixed(f.params.d, 3), fixed(f.params.sigma_H, 3), fixed(f.params.nu(), 3),
                        fixed(delta, 3), fixed(f.loglik, 2)});
    }
    write_text(c, "uc_fit.csv", csv);
    write_text(c, "uc_low.csv", paths);
    json config = {{"sigma_L", o.sigma_L}, {"p", o.p}, {"units", o.units.empty() ? "aggregate" : o.units}};
    write_json(c, "uc_fit.json", {{"metadata", metadata("uc-fit", c, in.source, config)}, {"units", units}});
    say(c, table(rows));
    return 0;
}

// ---------------------------------------------------------------------------
// factors

struct FactorOpts {
    int q = 4;
    bool standardize = false;
};

int run_factors(const Common& c, const FactorOpts& o) {
    const Inputs in = load_inputs(c, true);
    const ingest::Dataset ds = load_dataset(c, in);
    const Panel x = ds.temperature_aligned();
    const auto [fx, fy] = factor::lowfreq_factor_model(x, ds.growth, o.q, o.standardize);

    std::string loadings = "unit,loading_x,loading_y,r2\n";
    for (std::size_t i = 0; i < fx.unit_ids.size(); ++i) {
        const auto j = fy.index_of(fx.unit_ids[i]);
        loadings += fx.unit_ids[i] + "," + num(fx.loadings(static_cast<Eigen::Index>(i), 0)) + "," +
                    num(j ? fy.loadings(*j, 0) : std::nan("")) + "," +
                    num(fx.communalities(static_cast<Eigen::Index>(i))) + "\n";
    }
    write_text(c, "factor_loadings.csv", loadings);

    const Eigen::MatrixXd psi = filters::cosine_basis(x.T(), o.q);
    const Eigen::VectorXd px = psi * fx.factors.row(0).transpose();
    const Eigen::VectorXd py = psi * fy.factors.row(0).transpose();
    std::string paths = "year,factor_x,factor_y\n";
    for (Eigen::Index t = 0; t < x.T(); ++t) {
        paths += std::to_string(x.first_year() + static_cast<int>(t)) + "," + num(px(t)) + "," + num(py(t)) + "\n";
    }
    write_text(c, "factors.csv", paths);

    const double corr = [&] {
        const Eigen::VectorXd a = fx.loadings.col(0).array() - fx.loadings.col(0).mean();
        const Eigen::VectorXd b = fy.loadings.col(0).array() - fy.loadings.col(0).mean();
        return a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
    }();
    json config = {{"q", o.q}, {"standardize", o.standardize}};
    json result = {{"N", x.N()},
                   {"first_year", x.first_year()},
                   {"last_year", x.last_year()},
                   {"loading_correlation", corr},
                   {"mean_r2_x", fx.communalities.mean()},
                   {"mean_r2_y", fy.communalities.mean()}};
    write_json(c, "factors.json",
               {{"metadata", metadata("factors", c, in.source, config)}, {"result", result}, {"provenance", ds.provenance}});
    say(c, "factors: N=" + std::to_string(x.N()) + ", loading correlation " + fixed(corr, 3) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// panel

struct PanelOpts {
    std::string model = "fe";
    bool dynamic = false;
    bool interact = false;
    bool no_high = false;
    int r = 1;
    int q = 4;
    int boot = 0;
    std::uint64_t seed = 1;
    std::string ci = "68,90";
    bool keep_draws = false;
    bool gaussian = false;
};

int run_panel(const Common& c, const PanelOpts& o) {
    if (o.dynamic && o.interact) throw Error(ErrorCode::InvalidArgument, "--dynamic and --interact are exclusive");
    if (o.no_high && (o.dynamic || o.interact)) {
        throw Error(ErrorCode::InvalidArgument, "--no-high applies to the static model only");
    }
    const std::vector<double> levels = parse_levels(o.ci);
    const panel::Heterogeneity het = o.model == "fe"    ? panel::Heterogeneity::FE
                                     : o.model == "afe" ? panel::Heterogeneity::AFE
                                                        : panel::Heterogeneity::IFE;
    const Inputs in = load_inputs(c, true);
    const ingest::Dataset ds = load_dataset(c, in);
    const auto [low, high] = mw_components(ds.temperature_aligned(), o.q);
    const panel::PanelSpec spec = o.interact  ? panel::interaction_spec(ds.growth, low, high, het, o.r)
                                  : o.dynamic ? panel::dynamic_spec(ds.growth, low, high, het, o.r)
                                              : panel::static_spec(ds.growth, low,
                                                                   o.no_high ? std::nullopt : std::optional<Panel>(high),
                                                                   het, o.r);
    const panel::PanelEstimator estimator(spec);
    const panel::PanelEstimate est = estimator.estimate(spec.dependent.values());
    const auto one = inference::cluster_se_oneway(est);
    const auto two = inference::cluster_se_twoway(est);
    std::optional<inference::VarianceEstimate> boot;
    if (o.boot > 0) {
        inference::BootstrapOptions bo;
        bo.B = o.boot;
        bo.levels = levels;
        bo.seed = o.seed;
        bo.threads = c.threads;
        bo.keep_draws = o.keep_draws;
        bo.resampling = o.gaussian ? inference::Resampling::Gaussian : inference::Resampling::Empirical;
        boot = inference::fixed_design_bootstrap(estimator, est, bo);
    }

    const std::size_t k = est.names.size();
    json coefs = json::object();
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{""};
    for (const auto& n : est.names) head.push_back(n);
    rows.push_back(head);
    std::vector<std::string> r_est{"estimate"}, r_one{"1way SE"}, r_two{"2way SE"};
    std::map<double, std::vector<std::string>> r_ci;
    for (double l : levels) r_ci[l] = {"CI" + level_key(l)};
    for (std::size_t j = 0; j < k; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        json cj = {{"estimate", est.coefficients(jj)}, {"se_oneway", one.se(jj)}, {"se_twoway", two.se(jj)}};
        json cis = json::object();
        for (double l : levels) {
            inference::Interval iv;
            if (boot) {
                iv = boot->ci.at(l)[j];
            } else {
                const double z = tsreg::normal_quantile(0.5 + l / 2.0);
                iv = {est.coefficients(jj) - z * one.se(jj), est.coefficients(jj) + z * one.se(jj)};
            }
            cis[level_key(l)] = interval_json(iv);
            r_ci[l].push_back("[" + fixed(iv.lo, 3) + ", " + fixed(iv.hi, 3) + "]");
        }
        cj["ci"] = cis;
        coefs[est.names[j]] = cj;
        r_est.push_back(fixed(est.coefficients(jj)));
        r_one.push_back(fixed(one.se(jj)));
        r_two.push_back(fixed(two.se(jj)));
    }
    rows.push_back(r_est);
    rows.push_back(r_one);
    rows.push_back(r_two);
    for (auto& [l, r] : r_ci) rows.push_back(r);

    json result = {{"model", panel::to_string(het)},
                   {"N", est.N},
                   {"T", est.T},
                   {"first_year", spec.dependent.first_year()},
                   {"ssr", est.ssr},
                   {"iterations", est.iterations},
                   {"converged", est.converged},
                   {"ci_source", boot ? "bootstrap" : "normal, one-way clustered"},
                   {"coefficients", coefs}};
    if (o.dynamic) {
        result["long_run_effect"] = panel::long_run_effect(est.coefficient("b_L"), est.coefficient("alpha"));
    }
    if (boot) {
        json b = {{"replications", boot->replications}, {"degenerate", boot->degenerate},
                  {"nonconverged", boot->nonconverged}, {"se", std::vector<double>(boot->se.data(), boot->se.data() + k)}};
        if (o.keep_draws) {
            json draws = json::array();
            for (Eigen::Index b2 = 0; b2 < boot->draws.rows(); ++b2) {
                draws.push_back(std::vector<double>(k));
                for (std::size_t j = 0; j < k; ++j) draws.back()[j] = boot->draws(b2, static_cast<Eigen::Index>(j));
            }
            b["draws"] = draws;
        }
        result["bootstrap"] = b;
    }

    if (o.interact) {
        const auto me = panel::marginal_effects(est.coefficients, est.names, spec);
        std::string csv = "year,high,low\n";
        for (std::size_t t = 0; t < me.years.size(); ++t) {
            const auto tt = static_cast<Eigen::Index>(t);
            csv += std::to_string(me.years[t]) + "," + num(me.high(tt)) + "," + num(me.low(tt)) + "\n";
        }
        write_text(c, "marginal_effects.csv", csv);
    }
    if (het == panel::Heterogeneity::IFE) {
        std::string csv = "year";
        for (Eigen::Index f = 0; f < est.factors.rows(); ++f) csv += ",factor" + std::to_string(f + 1);
        csv += "\n";
        for (Eigen::Index t = 0; t < est.factors.cols(); ++t) {
            csv += std::to_string(spec.dependent.first_year() + static_cast<int>(t));
            for (Eigen::Index f = 0; f < est.factors.rows(); ++f) csv += "," + num(est.factors(f, t));
            csv += "\n";
        }
        write_text(c, "panel_factors.csv", csv);
    }

    json config = {{"model", o.model}, {"dynamic", o.dynamic}, {"interact", o.interact}, {"high", !o.no_high},
                   {"r", o.r},         {"q", o.q},             {"boot", o.boot},         {"ci", levels},
                   {"resampling", o.gaussian ? "gaussian" : "empirical"}};
    write_json(c, "panel.json", {{"metadata", metadata("panel", c, in.source, config, o.seed)},
                                 {"result", result},
                                 {"provenance", ds.provenance}});
    say(c, table(rows));
    if (o.dynamic) say(c, "long-run effect: " + fixed(result["long_run_effect"].get<double>()) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// ts-reg and density

struct TsOpts {
    int q = 4;
    std::string mode = "aggregate";
    bool with_high = false;
    int dols = 0;
    double level = 0.90;
    int bandwidth = -1;
};

json ts_json(const tsreg::TsEstimate& e) {
    json coefs = json::object();
    for (std::size_t j = 0; j < e.names.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        coefs[e.names[j]] = {{"estimate", e.coefficients(jj)}, {"se", e.se(jj)}, {"ci", interval_json(e.ci[j])}};
    }
    return {{"unit", e.unit_id},        {"first_year", e.first_year}, {"T", e.T},
            {"bandwidth", e.bandwidth}, {"r_squared", e.r_squared},   {"durbin_watson", e.durbin_watson},
            {"coefficients", coefs}};
}

std::vector<tsreg::TsEstimate> ts_run(const ingest::Dataset& ds, const TsOpts& o, int threads, bool units) {
    tsreg::TsOptions opts;
    opts.level = o.level;
    opts.bandwidth = o.bandwidth;
    opts.dols = o.dols;
    const Panel x = ds.temperature_aligned();
    if (!units) {
        const TimeSeries dy = weighted_aggregate(ds.growth).with_unit_id("aggregate");
        const Decomposition d = filters::mw_decompose(weighted_aggregate(x).with_unit_id("aggregate"), o.q);
        return {tsreg::ts_estimate(dy, d.low, o.with_high ? std::optional<TimeSeries>(d.high) : std::nullopt, opts)};
    }
    const auto [low, high] = mw_components(x, o.q);
    return tsreg::unit_estimates(ds.growth, low, o.with_high ? std::optional<Panel>(high) : std::nullopt, opts, threads);
}

json ts_config(const TsOpts& o) {
    return {{"q", o.q},       {"mode", o.mode},   {"with_high", o.with_high},
            {"dols", o.dols}, {"level", o.level}, {"bandwidth", o.bandwidth}};
}

int run_ts_reg(const Common& c, const TsOpts& o) {
    const Inputs in = load_inputs(c, true);
    const ingest::Dataset ds = load_dataset(c, in);
    const auto ests = ts_run(ds, o, c.threads, o.mode == "units");
    json out = json::array();
    std::string csv = "unit,name,estimate,se,lo,hi\n";
    std::vector<std::vector<std::string>> rows{{"unit", "beta_L", "se", "CI" + level_key(o.level)}};
    for (const auto& e : ests) {
        out.push_back(ts_json(e));
        for (std::size_t j = 0; j < e.names.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            csv += e.unit_id + "," + e.names[j] + "," + num(e.coefficients(jj)) + "," + num(e.se(jj)) + "," +
                   num(e.ci[j].lo) + "," + num(e.ci[j].hi) + "\n";
        }
        const auto iv = e.interval("beta_L");
        rows.push_back({e.unit_id, fixed(e.coefficient("beta_L")), fixed(e.se(1)),
                        "[" + fixed(iv.lo, 3) + ", " + fixed(iv.hi, 3) + "]"});
    }
    write_text(c, "ts_reg.csv", csv);
    write_json(c, "ts_reg.json", {{"metadata", metadata("ts-reg", c, in.source, ts_config(o))}, {"estimates", out}});
    say(c, table(rows));
    return 0;
}

int run_density(const Common& c, TsOpts o, bool weighted) {
    o.mode = "units";
    const Inputs in = load_inputs(c, true);
    const ingest::Dataset ds = load_dataset(c, in);
    const auto ests = ts_run(ds, o, c.threads, true);
    std::vector<double> betas;
    for (const auto& e : ests) betas.push_back(e.coefficient("beta_L"));
    const auto& w = ds.growth.weights();
    const tsreg::Density d = tsreg::unit_density(betas, weighted ? w : std::nullopt);
    std::string csv = "x,f\n";
    for (std::size_t i = 0; i < d.grid.size(); ++i) csv += num(d.grid[i]) + "," + num(d.f[i]) + "\n";
    write_text(c, "density.csv", csv);
    std::string est_csv = "unit,beta_L\n";
    for (std::size_t i = 0; i < ests.size(); ++i) est_csv += ests[i].unit_id + "," + num(betas[i]) + "\n";
    write_text(c, "density_estimates.csv", est_csv);
    json config = ts_config(o);
    config["weighted"] = weighted;
    json summary = {{"n", d.n},       {"bandwidth", d.bandwidth}, {"median", d.median},      {"mode", d.mode},
                    {"mean", d.mean}, {"weighted_mean", d.weighted_mean}, {"degenerate", d.degenerate}};
    write_json(c, "density.json", {{"metadata", metadata("density", c, in.source, config)}, {"summary", summary}});
    say(c, "density: n=" + std::to_string(d.n) + " median " + fixed(d.median) + " mode " + fixed(d.mode) +
               " weighted mean " + fixed(d.weighted_mean) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct McOpts {
    std::string config_file;
    std::string design = "ife";
    std::optional<int> reps;
    std::optional<int> boot;
    std::optional<double> sigma_L;
    std::vector<int> q;
    std::optional<std::uint64_t> seed;
    std::optional<int> N;
    std::optional<int> T;
};

montecarlo::McConfig mc_config(const Common& c, const McOpts& o, montecarlo::Design design) {
    montecarlo::McConfig cfg;
    cfg.design = design;
    if (!o.config_file.empty()) {
        const json j = json::parse(ingest::read_file(o.config_file), nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorCode::InvalidArgument, "config file is not a JSON object");
        }
        for (const auto& [key, v] : j.items()) {
            if (key == "replications") cfg.replications = v.get<int>();
            else if (key == "sigma_L") cfg.sigma_L = v.get<double>();
            else if (key == "q_values") cfg.q_values = v.get<std::vector<int>>();
            else if (key == "B") cfg.B = v.get<int>();
            else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
            else if (key == "hp_lambda") cfg.hp_lambda = v.get<double>();
            else if (key == "include_hp") cfg.include_hp = v.get<bool>();
            else if (key == "include_bhp") cfg.include_bhp = v.get<bool>();
            else if (key == "include_uc") cfg.include_uc = v.get<bool>();
            else if (key == "sigma_H_scale") cfg.sigma_H_scale = v.get<double>();
            else if (key == "N") cfg.N = v.get<int>();
            else if (key == "T") cfg.T = v.get<int>();
            else if (key == "oracle_components") cfg.oracle_components = v.get<bool>();
            else if (key == "noise_scale") cfg.noise_scale = v.get<double>();
            else if (key == "ife_tolerance") cfg.ife_tolerance = v.get<double>();
            else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
        }
    }
    if (o.reps) cfg.replications = *o.reps;
    if (o.boot) cfg.B = *o.boot;
    if (o.sigma_L) cfg.sigma_L = *o.sigma_L;
    if (!o.q.empty()) cfg.q_values = o.q;
    if (o.seed) cfg.seed = *o.seed;
    if (o.N) cfg.N = *o.N;
    if (o.T) cfg.T = *o.T;
    cfg.threads = c.threads;
    cfg.validate();
    return cfg;
}

json mc_config_json(const montecarlo::McConfig& cfg) {
    return {{"design", montecarlo::to_string(cfg.design)},
            {"replications", cfg.replications},
            {"sigma_L", cfg.sigma_L},
            {"q_values", cfg.q_values},
            {"B", cfg.B},
            {"hp_lambda", cfg.hp_lambda},
            {"include_hp", cfg.include_hp},
            {"include_bhp", cfg.include_bhp},
            {"include_uc", cfg.include_uc},
            {"sigma_H_scale", cfg.sigma_H_scale},
            {"N", cfg.N},
            {"T", cfg.T},
            {"oracle_components", cfg.oracle_components},
            {"noise_scale", cfg.noise_scale},
            {"ife_tolerance", cfg.ife_tolerance}};
}

void write_mc_report(const Common& c, const std::string& stem, const std::string& source,
                     const montecarlo::McReport& rep) {
    std::vector<std::string> schemes;
    for (const auto& cell : rep.cells) {
        for (const auto& [s, v] : cell.coverage) {
            if (std::find(schemes.begin(), schemes.end(), s) == schemes.end()) schemes.push_back(s);
        }
    }
    std::string csv = "row,column,truth,mean,bias,sd,rmse,count";
    for (const auto& s : schemes) csv += ",cov_" + s;
    csv += "\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"row", "column", "truth", "mean", "bias", "sd", "rmse"};
    for (const auto& s : schemes) head.push_back(s);
    rows.push_back(head);
    json cells = json::array();
    for (const auto& cell : rep.cells) {
        csv += cell.row + "," + cell.column + "," + num(cell.truth) + "," + num(cell.mean) + "," + num(cell.bias) +
               "," + num(cell.sd) + "," + num(cell.rmse) + "," + std::to_string(cell.count);
        std::vector<std::string> r{cell.row, cell.column, fixed(cell.truth), fixed(cell.mean),
                                   fixed(cell.bias), fixed(cell.sd), fixed(cell.rmse)};
        for (const auto& s : schemes) {
            const auto it = cell.coverage.find(s);
            csv += "," + (it == cell.coverage.end() ? std::string() : num(it->second));
            r.push_back(it == cell.coverage.end() ? "" : fixed(it->second, 3));
        }
        csv += "\n";
        rows.push_back(r);
        cells.push_back({{"row", cell.row},   {"column", cell.column}, {"truth", cell.truth},
                         {"mean", cell.mean}, {"bias", cell.bias},     {"sd", cell.sd},
                         {"rmse", cell.rmse}, {"count", cell.count},   {"coverage", cell.coverage},
                         {"info", cell.info}});
    }
    json header = json::object();
    for (const auto& [k, v] : rep.header) header[k] = v;
    write_text(c, stem + ".csv", csv);
    write_json(c, stem + ".json",
               {{"metadata", metadata(stem == "mc_filters" ? "mc-filters" : "mc-panel", c, source,
                                      mc_config_json(rep.config), rep.config.seed)},
                {"header", header},
                {"nonconverged", rep.nonconverged},
                {"cells", cells}});
    say(c, table(rows));
}

int run_mc_filters(const Common& c, const McOpts& o) {
    const auto cfg = mc_config(c, o, montecarlo::Design::FilterRmse);
    const Inputs in = load_inputs(c, false);
    const Panel z = demean_pre_cutoff(in.temperature, c.cutoff);
    const auto cal = montecarlo::calibrate_filters(z, montecarlo::filter_states(), cfg.sigma_L, 1, c.threads);
    write_mc_report(c, "mc_filters", in.source, montecarlo::mc_filter_rmse(cal, cfg));
    return 0;
}

int run_mc_panel(const Common& c, const McOpts& o) {
    const auto design = o.design == "fe" ? montecarlo::Design::PanelFe : montecarlo::Design::PanelIfe;
    const auto cfg = mc_config(c, o, design);
    const Inputs in = load_inputs(c, true);
    const ingest::Dataset ds = load_dataset(c, in);
    const auto cal = montecarlo::calibrate_panel(ds.growth, ds.temperature_aligned(), cfg.q_values.front());
    write_mc_report(c, "mc_panel", in.source, montecarlo::mc_panel(cal, cfg));
    return 0;
}

// ---------------------------------------------------------------------------
// synth

int run_synth(const Common& c, bool components) {
    synthetic::SyntheticOptions o;
    o.seed = c.synthetic_seed;
    const auto d = synthetic::make_synthetic(o);
    write_text(c, "temperature.csv", ingest::write_long_csv(d.temperature));
    write_text(c, "growth.csv", ingest::write_long_csv(d.growth));
    std::string w = "unit,weight\n";
    for (const auto& [u, v] : d.weights) w += u + "," + num(v) + "\n";
    write_text(c, "weights.csv", w);
    if (components) {
        std::string truth = "component,unit,year,value\n";
        for (const auto* p : {&d.low, &d.high}) {
            const std::string name = p == &d.low ? "low" : "high";
            for (Eigen::Index i = 0; i < p->N(); ++i) {
                for (Eigen::Index t = 0; t < p->T(); ++t) {
                    truth += name + "," + p->unit_ids()[static_cast<std::size_t>(i)] + "," +
                             std::to_string(p->first_year() + static_cast<int>(t)) + "," + num(p->values()(i, t)) + "\n";
                }
            }
        }
        write_text(c, "components.csv", truth);
    }
    json sigma = json::object();
    for (const auto& [u, v] : d.sigma_H) sigma[u] = v;
    write_json(c, "synthetic.json", {{"metadata", {{"command", "synth"}, {"seed", o.seed}, {"versions", versions()}}},
                                     {"truth", d.truth},
                                     {"sigma_H", sigma}});
    say(c, std::string("synth: wrote temperature.csv, growth.csv, weights.csv") + (components ? ", components.csv" : "") + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-frequency climate-economy toolkit: decomposition, panel and time-series estimation, "
                 "inference and Monte Carlo studies."};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    Common c;
    c.threads = default_thread_count();
    app.add_option("--output-dir,-o", c.output_dir, "Directory for CSV/JSON artifacts")->capture_default_str();
    app.add_option("--threads", c.threads, "Worker threads (default from LOWFREQ_THREADS)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("--quiet", c.quiet, "Suppress the summary table");

    auto add_inputs = [&](CLI::App* sub) {
        sub->add_option("--temperature", c.temperature, "Long CSV (unit,year,value) of temperatures")
            ->check(CLI::ExistingFile);
        sub->add_option("--growth", c.growth, "Long CSV of growth rates in percent")->check(CLI::ExistingFile);
        sub->add_option("--weights", c.weights, "CSV (unit,weight)")->check(CLI::ExistingFile);
        sub->add_option("--cutoff", c.cutoff, "Demeaning cutoff year")->capture_default_str();
        sub->add_option("--synthetic-seed", c.synthetic_seed, "Seed of the built-in synthetic sample")
            ->capture_default_str();
    };

    IngestOpts ingest_o;
    auto* ingest_cmd = app.add_subcommand("ingest", "Parse raw data into the canonical long CSV");
    ingest_cmd->add_option("--source", ingest_o.source)->check(CLI::IsMember({"nclimdiv", "csv"}))->capture_default_str();
    ingest_cmd->add_option("--input", ingest_o.input, "Input file")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("--weights", ingest_o.weights, "Area weights CSV (unit,weight)")->check(CLI::ExistingFile);
    ingest_cmd->add_flag("--levels", ingest_o.levels, "CSV holds levels: convert to 100 x log growth");
    ingest_cmd->add_option("--cutoff", ingest_o.cutoff, "Also write the panel demeaned before this year");

    DecomposeOpts dec_o;
    auto* dec_cmd = app.add_subcommand("decompose", "Split series into low- and high-frequency components");
    dec_cmd->set_help_flag("--help", "Print this help message and exit");
    add_inputs(dec_cmd);
    dec_cmd->add_option("--method", dec_o.method)->check(CLI::IsMember({"mw", "hp", "bhp", "jh"}))->capture_default_str();
    dec_cmd->add_option("--q", dec_o.q)->capture_default_str();
    dec_cmd->add_option("--lambda", dec_o.lambda)->capture_default_str();
    dec_cmd->add_option("--m", dec_o.m, "Fixed boosting passes (default: information criterion)");
    dec_cmd->add_option("--p", dec_o.p)->capture_default_str();
    dec_cmd->add_option("--h", dec_o.h)->capture_default_str();
    dec_cmd->add_flag("--standardize", dec_o.standardize, "Zero mean, unit variance output columns");
    dec_cmd->add_flag("--aggregate", dec_o.aggregate, "Decompose the weighted aggregate only");
    dec_cmd->add_option("--units", dec_o.units, "Comma-separated unit ids");
    dec_cmd->add_option("--correlogram", dec_o.correlogram, "Also write autocorrelations up to this lag");

    UcOpts uc_o;
    auto* uc_cmd = app.add_subcommand("uc-fit", "Fit the fractional unobserved-components model");
    add_inputs(uc_cmd);
    uc_cmd->add_option("--sigma-l", uc_o.sigma_L)->check(CLI::PositiveNumber)->capture_default_str();
    uc_cmd->add_option("--p", uc_o.p, "MA order of the high component")->check(CLI::NonNegativeNumber)->capture_default_str();
    uc_cmd->add_option("--units", uc_o.units, "aggregate (default), all, or comma-separated ids");

    FactorOpts fac_o;
    auto* fac_cmd = app.add_subcommand("factors", "Low-frequency factor models of temperature and growth");
    add_inputs(fac_cmd);
    fac_cmd->add_option("--q", fac_o.q)->capture_default_str();
    fac_cmd->add_flag("--standardize", fac_o.standardize);

    PanelOpts pan_o;
    auto* pan_cmd = app.add_subcommand("panel", "Panel regressions with clustered and bootstrap inference");
    add_inputs(pan_cmd);
    pan_cmd->add_option("--model", pan_o.model)->check(CLI::IsMember({"fe", "afe", "ife"}))->capture_default_str();
    pan_cmd->add_flag("--dynamic", pan_o.dynamic, "ADL model with lagged growth and dH, H(-1)");
    pan_cmd->add_flag("--interact", pan_o.interact, "Add the H x L interaction");
    pan_cmd->add_flag("--no-high", pan_o.no_high, "Static model without the high component");
    pan_cmd->add_option("--r", pan_o.r, "IFE factors")->check(CLI::PositiveNumber)->capture_default_str();
    pan_cmd->add_option("--q", pan_o.q)->capture_default_str();
    pan_cmd->add_option("--boot", pan_o.boot, "Bootstrap replications (0: none)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    pan_cmd->add_option("--seed", pan_o.seed)->capture_default_str();
    pan_cmd->add_option("--ci", pan_o.ci, "Confidence levels in percent")->capture_default_str();
    pan_cmd->add_flag("--keep-draws", pan_o.keep_draws, "Embed replication estimates in the JSON");
    pan_cmd->add_flag("--gaussian", pan_o.gaussian, "Gaussian instead of empirical residual resampling");

    TsOpts ts_o;
    bool unweighted = false;
    auto* ts_cmd = app.add_subcommand("ts-reg", "Time-series regressions of growth on the low component");
    auto* den_cmd = app.add_subcommand("density", "Kernel density of unit-level low-frequency estimates");
    for (auto* sub : {ts_cmd, den_cmd}) {
        add_inputs(sub);
        sub->add_option("--q", ts_o.q)->capture_default_str();
        sub->add_flag("--with-high", ts_o.with_high, "Include the high component");
        sub->add_option("--dols", ts_o.dols, "Leads and lags of dL")->check(CLI::NonNegativeNumber)->capture_default_str();
        sub->add_option("--level", ts_o.level)->capture_default_str();
        sub->add_option("--bandwidth", ts_o.bandwidth, "Newey-West lags (negative: automatic)")->capture_default_str();
    }
    ts_cmd->add_option("--mode", ts_o.mode)->check(CLI::IsMember({"aggregate", "units"}))->capture_default_str();
    den_cmd->add_flag("--unweighted", unweighted, "Ignore unit weights");

    McOpts mcf_o, mcp_o;
    auto* mcf_cmd = app.add_subcommand("mc-filters", "Filter RMSE Monte Carlo calibrated to seven states");
    auto* mcp_cmd = app.add_subcommand("mc-panel", "Panel estimation and coverage Monte Carlo");
    for (auto [sub, o] : {std::pair{mcf_cmd, &mcf_o}, std::pair{mcp_cmd, &mcp_o}}) {
        add_inputs(sub);
        sub->add_option("--config", o->config_file, "JSON config; flags override")->check(CLI::ExistingFile);
        sub->add_option("--reps", o->reps, "Replications");
        sub->add_option("--sigma-l", o->sigma_L);
        sub->add_option("--q", o->q, "MW orders");
        sub->add_option("--seed", o->seed);
    }
    mcp_cmd->add_option("--design", mcp_o.design)->check(CLI::IsMember({"fe", "ife"}))->capture_default_str();
    mcp_cmd->add_option("--boot", mcp_o.boot, "Bootstrap replications per Monte Carlo replication");
    mcp_cmd->add_option("--N", mcp_o.N);
    mcp_cmd->add_option("--T", mcp_o.T);

    auto* syn_cmd = app.add_subcommand("synth", "Write the synthetic sample as long CSVs");
    syn_cmd->add_option("--seed", c.synthetic_seed)->capture_default_str();
    bool syn_components = false;
    syn_cmd->add_flag("--components", syn_components, "Also write the true low and high components");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ingest_cmd) return run_ingest(c, ingest_o);
        if (*dec_cmd) return run_decompose(c, dec_o);
        if (*uc_cmd) return run_uc_fit(c, uc_o);
        if (*fac_cmd) return run_factors(c, fac_o);
        if (*pan_cmd) return run_panel(c, pan_o);
        if (*ts_cmd) return run_ts_reg(c, ts_o);
        if (*den_cmd) return run_density(c, ts_o, !unweighted);
        if (*mcf_cmd) return run_mc_filters(c, mcf_o);
        if (*mcp_cmd) return run_mc_panel(c, mcp_o);
        if (*syn_cmd) return run_synth(c, syn_components);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_validation_error(e.code()) ? 2 : 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
