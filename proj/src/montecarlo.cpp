#include "lowfreq/montecarlo.hpp"

#include "lowfreq/factor.hpp"
#include "lowfreq/filters.hpp"
#include "lowfreq/inference.hpp"
#include "lowfreq/parallel.hpp"
#include "lowfreq/random.hpp"
#include "lowfreq/tsreg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <tuple>

namespace lowfreq::montecarlo {

namespace {

enum Purpose : std::uint64_t { kFilterDraws = 11, kPanelLow, kPanelHigh, kPanelFactor, kPanelNoise, kPanelBoot };

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

// Symmetric PSD square root factor A with A A' = S (negative eigenvalues clipped).
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s + s.transpose()));
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal();
}

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    }
    return m;
}

// Row-wise MW split of a panel matrix.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> mw_split(const Eigen::MatrixXd& x, int q) {
    const Eigen::MatrixXd psi = filters::cosine_basis(x.cols(), q);
    const double T = static_cast<double>(x.cols());
    const Eigen::VectorXd mean = x.rowwise().mean();
    const Eigen::MatrixXd centered = x.colwise() - mean;
    Eigen::MatrixXd low = (centered * psi / T) * psi.transpose();
    low.colwise() += mean;
    return {low, x - low};
}

McCell summarize(std::string row, std::string column, double truth, const std::vector<double>& values) {
    McCell c;
    c.row = std::move(row);
    c.column = std::move(column);
    c.truth = truth;
    c.count = values.size();
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    c.mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - c.mean) * (v - c.mean);
    c.variance = ss / n;
    c.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    c.bias = c.mean - truth;
    c.rmse = std::sqrt(c.bias * c.bias + c.variance);
    return c;
}

}  // namespace

std::string to_string(Design design) {
    switch (design) {
        case Design::FilterRmse: return "filter_rmse";
        case Design::PanelFe: return "panel_fe";
        case Design::PanelIfe: return "panel_ife";
    }
    return "?";
}

void McConfig::validate() const {
    if (replications < 1) throw Error(ErrorCode::InvalidArgument, "replications must be >= 1");
    if (!(sigma_L > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_L must be positive");
    if (q_values.empty()) throw Error(ErrorCode::InvalidArgument, "at least one q is required");
    for (int q : q_values) {
        if (q < 1) throw Error(ErrorCode::InvalidArgument, "q must be >= 1");
    }
    if (design != Design::FilterRmse && B < 99) throw Error(ErrorCode::InvalidArgument, "bootstrap needs B >= 99");
    if (!(sigma_H_scale >= 0.0) || !(noise_scale >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "scales must be nonnegative");
    }
    if (N < 2 || T < 10) throw Error(ErrorCode::InvalidArgument, "panel study needs N >= 2 and T >= 10");
}

const McCell& McReport::cell(const std::string& row, const std::string& column) const {
    for (const McCell& c : cells) {
        if (c.row == row && c.column == column) return c;
    }
    throw Error(ErrorCode::InvalidArgument, "no cell " + row + "/" + column);
}

// ---------------------------------------------------------------------------
// Filter study

const std::vector<std::string>& filter_states() {
    static const std::vector<std::string> states{"CA", "FL", "IL", "MA", "ND", "NY", "WA"};
    return states;
}

FilterCalibration calibrate_filters(const Panel& temperature, const std::vector<std::string>& units,
                                    double sigma_L, int p, int threads) {
    if (units.empty()) throw Error(ErrorCode::MissingCalibration, "no units to calibrate");
    FilterCalibration cal;
    cal.sigma_L = sigma_L;
    cal.first_year = temperature.first_year();
    cal.states.resize(units.size());
    for (const std::string& u : units) {
        if (!temperature.index_of(u)) throw Error(ErrorCode::MissingCalibration, "no temperature series for " + u);
    }
    parallel_for(units.size(), threads, [&](std::size_t k) {
        const TimeSeries raw = temperature.unit(*temperature.index_of(units[k]));
        const TimeSeries z = raw.with_values(raw.values().array() - raw.values().mean());
        const fracuc::UcFit fit = fracuc::uc_fit(z, sigma_L, p);
        cal.states[k] = {units[k], fit.params, fracuc::uc_filter(z, fit.params).low.values(), fit.loglik};
    });
    return cal;
}

McReport mc_filter_rmse(const FilterCalibration& cal, const McConfig& config) {
    config.validate();
    if (cal.states.empty()) throw Error(ErrorCode::MissingCalibration, "filter study needs calibrated states");
    const Eigen::Index T = cal.states.front().low.size();
    for (const StateCalibration& s : cal.states) {
        if (s.low.size() != T || T < 10) throw Error(ErrorCode::MissingCalibration, "calibrated paths for " + s.unit + " are unusable");
        s.params.validate();
    }

    std::vector<std::string> filters_used;
    for (int q : config.q_values) filters_used.push_back("MW" + std::to_string(q));
    if (config.include_hp) filters_used.push_back("HP" + fmt(config.hp_lambda));
    if (config.include_bhp) filters_used.push_back("bHP");
    if (config.include_uc) filters_used.push_back("UC");
    const std::size_t F = filters_used.size();
    const std::size_t S = cal.states.size();
    const auto R = static_cast<std::size_t>(config.replications);
    const filters::HpSmoother hp(T, config.hp_lambda);

    // slot (s, r): per filter sum of errors, sum of squared errors.
    std::vector<std::vector<std::pair<double, double>>> slots(S * R);
    parallel_for(S * R, config.threads, [&](std::size_t job) {
        const std::size_t s = job / R;
        const StateCalibration& st = cal.states[s];
        RngStream rng(derive_seed(config.seed, kFilterDraws), job);
        const Eigen::VectorXd high =
            fracuc::simulate_high(st.params.a, config.sigma_H_scale * st.params.sigma_H, T, rng);
        const TimeSeries z(st.unit, cal.first_year, st.low + high);
        std::vector<std::pair<double, double>> out;
        auto record = [&](const Eigen::VectorXd& estimate) {
            const Eigen::VectorXd e = estimate - st.low;
            out.emplace_back(e.sum(), e.squaredNorm());
        };
        for (int q : config.q_values) record(filters::mw_decompose(z, q).low.values());
        if (config.include_hp) record(hp.trend(z.values()));
        if (config.include_bhp) record(filters::bhp_decompose(z, config.hp_lambda).low.values());
        if (config.include_uc) record(fracuc::uc_filter(z, st.params).low.values());
        slots[job] = std::move(out);
    });

    McReport report;
    report.design = Design::FilterRmse;
    report.config = config;
    report.estimates.resize(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(S * F));
    const double n = static_cast<double>(R) * static_cast<double>(T);
    for (std::size_t s = 0; s < S; ++s) {
        const StateCalibration& st = cal.states[s];
        for (std::size_t f = 0; f < F; ++f) {
            double sum = 0.0;
            double sq = 0.0;
            for (std::size_t r = 0; r < R; ++r) {
                const auto [a, b] = slots[s * R + r][f];
                sum += a;
                sq += b;
                report.estimates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s * F + f)) =
                    std::sqrt(b / static_cast<double>(T));
            }
            McCell c;
            c.row = st.unit;
            c.column = filters_used[f];
            c.count = R * static_cast<std::size_t>(T);
            c.mean = sum / n;
            c.bias = c.mean;
            c.rmse = std::sqrt(sq / n);
            c.variance = std::max(0.0, sq / n - c.bias * c.bias);
            c.sd = std::sqrt(c.variance * n / std::max(1.0, n - 1.0));
            c.info = {{"sigma_H", config.sigma_H_scale * st.params.sigma_H},
                      {"d", st.params.d},
                      {"a1", st.params.a.empty() ? 0.0 : st.params.a.front()}};
            report.cells.push_back(std::move(c));
        }
    }
    report.header = {{"design", to_string(Design::FilterRmse)},
                     {"replications", std::to_string(R)},
                     {"seed", std::to_string(config.seed)},
                     {"sigma_L", fmt(cal.sigma_L)},
                     {"T", std::to_string(T)},
                     {"first_year", std::to_string(cal.first_year)},
                     {"truth", "fitted UC low component held fixed; high component redrawn"}};
    for (const StateCalibration& st : cal.states) {
        report.header.emplace_back("calibration." + st.unit,
                                   "d=" + fmt(st.params.d) + " sigma_H=" + fmt(st.params.sigma_H) +
                                       " a1=" + fmt(st.params.a.empty() ? 0.0 : st.params.a.front()));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Panel study

std::vector<std::pair<std::string, double>> PanelCalibration::summary() const {
    return {{"alpha", alpha},
            {"b_L", b_L},
            {"delta_H", delta_H},
            {"gamma_H", gamma_H},
            {"q", q},
            {"N", static_cast<double>(units.size())},
            {"T", static_cast<double>(low_common.cols())},
            {"factor_sd", factor.size() > 1 ? std::sqrt(factor.squaredNorm() / static_cast<double>(factor.size() - 1)) : 0.0},
            {"sigma_u_trace", (chol_u * chol_u.transpose()).trace()},
            {"low_factor_scale", low_factor_scale},
            {"sigma_L_trace", (chol_low * chol_low.transpose()).trace()},
            {"sigma_H_trace", (chol_high * chol_high.transpose()).trace()},
            {"high_rho", high_rho},
            {"high_sigma", high_sigma}};
}

PanelCalibration calibrate_panel(const Panel& growth, const Panel& temperature, int q) {
    const Eigen::Index N = growth.N();
    const Eigen::Index T = growth.T();
    if (T < 10 || N < 3) throw Error(ErrorCode::MissingCalibration, "growth panel too small to calibrate");
    if (temperature.first_year() > growth.first_year() || temperature.last_year() < growth.last_year()) {
        throw Error(ErrorCode::MissingCalibration, "temperature does not cover the growth years");
    }
    const Panel x = panel::align_to(temperature, growth).select_units(growth.unit_ids());
    const auto [low, high] = mw_split(x.values(), q);

    PanelCalibration cal;
    cal.units = growth.unit_ids();
    cal.first_year = growth.first_year();
    cal.q = q;

    const Panel pl(cal.units, cal.first_year, low);
    const Panel ph(cal.units, cal.first_year, high);
    const panel::PanelEstimate est =
        panel::ife_estimate(panel::dynamic_spec(growth, pl, ph, panel::Heterogeneity::IFE, 1));
    cal.alpha = est.coefficient("alpha");
    cal.b_L = est.coefficient("b_L");
    cal.delta_H = est.coefficient("delta_H");
    cal.gamma_H = est.coefficient("gamma_H");
    cal.unit_effects = est.unit_effects;
    cal.loadings = est.loadings.col(0);
    cal.factor = Eigen::VectorXd::Zero(T);
    cal.factor.tail(T - 1) = est.factors.row(0).transpose();
    cal.chol_u = psd_factor(est.residuals * est.residuals.transpose() / static_cast<double>(est.T));
    cal.dy0 = growth.values().col(0);

    // Low component: one common factor, redrawn in the cosine domain at its
    // fitted scale, plus cosine-domain idiosyncratic draws.
    const Eigen::MatrixXd psi = filters::cosine_basis(T, q);
    const factor::PcResult pl_fac = factor::principal_components(low, 1);
    const Eigen::VectorXd fl = pl_fac.factors.row(0).transpose();
    cal.low_loadings = pl_fac.loadings.col(0);
    cal.low_factor_mean = fl.mean();
    cal.low_factor_scale = std::sqrt((psi.transpose() * (fl.array() - fl.mean()).matrix() / static_cast<double>(T))
                                         .squaredNorm() / q);
    Eigen::MatrixXd common = pl_fac.loadings * pl_fac.factors;
    const Eigen::MatrixXd idio = low - common;
    cal.low_offset = idio.rowwise().mean();
    common.colwise() += cal.low_offset;
    const Eigen::MatrixXd coeffs = (idio.colwise() - cal.low_offset) * psi / static_cast<double>(T);  // N x q
    cal.low_common = common;
    cal.chol_low = psd_factor(coeffs * coeffs.transpose() / static_cast<double>(q));

    // High component: factor with a smooth deterministic part and an AR(1) cycle.
    const factor::PcResult ph_fac = factor::principal_components(high, 1);
    cal.high_loadings = ph_fac.loadings.col(0);
    const Eigen::VectorXd fh = ph_fac.factors.row(0).transpose();
    const int q_smooth = std::min<int>(28, static_cast<int>(T / 2));
    cal.high_smooth = filters::mw_decompose(TimeSeries("factor", cal.first_year, fh), q_smooth).low.values();
    const Eigen::VectorXd cycle = fh - cal.high_smooth;
    const double denom = cycle.head(T - 1).squaredNorm();
    cal.high_rho = denom > 0.0 ? cycle.tail(T - 1).dot(cycle.head(T - 1)) / denom : 0.0;
    cal.high_rho = std::clamp(cal.high_rho, -0.99, 0.99);
    const Eigen::VectorXd innov = cycle.tail(T - 1) - cal.high_rho * cycle.head(T - 1);
    cal.high_sigma = std::sqrt(innov.squaredNorm() / static_cast<double>(T - 1));
    const Eigen::MatrixXd idio_high = high - cal.high_loadings * fh.transpose();
    cal.chol_high = psd_factor(idio_high * idio_high.transpose() / static_cast<double>(T));
    return cal;
}

PanelDraw simulate_panel(const PanelCalibration& cal, const McConfig& config, int rep) {
    const auto N = static_cast<Eigen::Index>(cal.units.size());
    const Eigen::Index T = cal.low_common.cols();
    const Eigen::Index n = std::min<Eigen::Index>(config.N, N);
    const Eigen::Index tt = std::min<Eigen::Index>(config.T, T);
    const auto stream = static_cast<std::uint64_t>(rep);

    RngStream low_rng(derive_seed(config.seed, kPanelLow), stream);
    RngStream high_rng(derive_seed(config.seed, kPanelHigh), stream);
    RngStream factor_rng(derive_seed(config.seed, kPanelFactor), stream);
    RngStream noise_rng(derive_seed(config.seed, kPanelNoise), stream);

    const Eigen::MatrixXd psi = filters::cosine_basis(T, cal.q);
    const Eigen::VectorXd fl = (cal.low_factor_mean +
                                (psi * (cal.low_factor_scale * low_rng.normal_vector(cal.q))).array()).matrix();
    Eigen::MatrixXd low = cal.low_loadings * fl.transpose() +
                          cal.chol_low * normal_matrix(N, cal.q, low_rng) * psi.transpose();
    low.colwise() += cal.low_offset;

    Eigen::VectorXd g(T);
    const double sd0 = cal.high_sigma / std::sqrt(1.0 - cal.high_rho * cal.high_rho);
    g(0) = sd0 * factor_rng.normal();
    for (Eigen::Index t = 1; t < T; ++t) g(t) = cal.high_rho * g(t - 1) + cal.high_sigma * factor_rng.normal();
    Eigen::MatrixXd high = cal.high_loadings * (cal.high_smooth + g).transpose() +
                           cal.chol_high * normal_matrix(N, T, high_rng);

    const Eigen::MatrixXd u = config.noise_scale * cal.chol_u * normal_matrix(N, T, noise_rng);
    Eigen::MatrixXd dy(N, T);
    dy.col(0) = cal.dy0;
    for (Eigen::Index t = 1; t < T; ++t) {
        dy.col(t) = cal.alpha * dy.col(t - 1) + cal.b_L * low.col(t) +
                    cal.delta_H * (high.col(t) - high.col(t - 1)) + cal.gamma_H * high.col(t - 1) +
                    cal.unit_effects + cal.loadings * cal.factor(t) + u.col(t);
    }
    return {dy.topLeftCorner(n, tt), low.topLeftCorner(n, tt), high.topLeftCorner(n, tt)};
}

McReport mc_panel(const PanelCalibration& cal, const McConfig& config) {
    config.validate();
    if (config.design == Design::FilterRmse) throw Error(ErrorCode::InvalidArgument, "mc_panel needs a panel design");
    if (cal.units.empty() || cal.low_common.size() == 0 || cal.chol_u.size() == 0 || cal.low_loadings.size() == 0) {
        throw Error(ErrorCode::MissingCalibration, "panel study needs a fitted calibration");
    }
    const bool ife = config.design == Design::PanelIfe;
    const auto heterogeneity = ife ? panel::Heterogeneity::IFE : panel::Heterogeneity::FE;
    const int q = config.q_values.front();
    const std::vector<std::string> names{"alpha", "b_L", "delta_H", "gamma_H"};
    const Eigen::Vector4d truth(cal.alpha, cal.b_L, cal.delta_H, cal.gamma_H);
    const std::vector<std::string> schemes = ife ? std::vector<std::string>{"asy1", "boot"}
                                                 : std::vector<std::string>{"asy1", "asy2", "boot"};
    const double z = tsreg::normal_quantile(0.95);
    const auto R = static_cast<std::size_t>(config.replications);

    struct Slot {
        Eigen::Vector4d beta;
        std::vector<std::array<bool, 4>> covered;  // per scheme
        int nonconverged = 0;
    };
    std::vector<Slot> slots(R);
    parallel_for(R, config.threads, [&](std::size_t r) {
        const PanelDraw draw = simulate_panel(cal, config, static_cast<int>(r));
        const Eigen::Index n = draw.dy.rows();
        const std::vector<std::string> ids(cal.units.begin(), cal.units.begin() + n);
        Eigen::MatrixXd low = draw.low;
        Eigen::MatrixXd high = draw.high;
        if (!config.oracle_components) std::tie(low, high) = mw_split(draw.low + draw.high, q);
        const panel::PanelSpec spec =
            panel::dynamic_spec(Panel(ids, cal.first_year, draw.dy), Panel(ids, cal.first_year, low),
                                Panel(ids, cal.first_year, high), heterogeneity, 1);
        const panel::PanelEstimator estimator(spec, panel::IfeOptions{config.ife_tolerance, 1000});
        const panel::PanelEstimate est = estimator.estimate(spec.dependent.values());

        Slot slot;
        slot.beta = est.coefficients;
        slot.nonconverged = est.converged ? 0 : 1;
        auto add = [&](const std::vector<inference::Interval>& ci, bool degenerate) {
            std::array<bool, 4> c{};
            for (std::size_t j = 0; j < 4; ++j) {
                const double tol = degenerate ? 1e-8 * (1.0 + std::abs(truth(static_cast<Eigen::Index>(j)))) : 0.0;
                c[j] = ci[j].lo - tol <= truth(static_cast<Eigen::Index>(j)) &&
                       truth(static_cast<Eigen::Index>(j)) <= ci[j].hi + tol;
            }
            slot.covered.push_back(c);
        };
        auto symmetric = [&](const inference::VarianceEstimate& v) {
            std::vector<inference::Interval> ci;
            for (Eigen::Index j = 0; j < 4; ++j) {
                ci.push_back({est.coefficients(j) - z * v.se(j), est.coefficients(j) + z * v.se(j)});
            }
            return ci;
        };
        // Numerically zero residuals (noiseless designs): every interval collapses on the estimate.
        const double scale = std::max(1.0, draw.dy.cwiseAbs().maxCoeff());
        const bool noiseless = !(est.residuals.cwiseAbs().maxCoeff() > inference::kZeroResidual * scale);
        add(symmetric(inference::cluster_se_oneway(est)), noiseless);
        if (!ife) add(symmetric(inference::cluster_se_twoway(est)), noiseless);
        inference::BootstrapOptions bo;
        bo.B = config.B;
        bo.levels = {0.90};
        bo.seed = derive_seed(derive_seed(config.seed, kPanelBoot), r);
        const inference::VarianceEstimate boot = inference::fixed_design_bootstrap(estimator, est, bo);
        add(boot.ci.at(0.90), noiseless || boot.degenerate);
        slot.nonconverged += boot.nonconverged;
        slots[r] = std::move(slot);
    });

    McReport report;
    report.design = config.design;
    report.config = config;
    report.estimates.resize(static_cast<Eigen::Index>(R), 4);
    for (std::size_t r = 0; r < R; ++r) {
        report.estimates.row(static_cast<Eigen::Index>(r)) = slots[r].beta.transpose();
        report.nonconverged += slots[r].nonconverged;
    }
    const std::string column = ife ? "IFE" : "FE";
    for (Eigen::Index j = 0; j < 4; ++j) {
        std::vector<double> values(R);
        for (std::size_t r = 0; r < R; ++r) values[r] = slots[r].beta(j);
        McCell c = summarize(names[static_cast<std::size_t>(j)], column, truth(j), values);
        for (std::size_t s = 0; s < schemes.size(); ++s) {
            std::size_t hits = 0;
            for (std::size_t r = 0; r < R; ++r) hits += slots[r].covered[s][static_cast<std::size_t>(j)] ? 1 : 0;
            c.coverage[schemes[s]] = static_cast<double>(hits) / static_cast<double>(R);
        }
        report.cells.push_back(std::move(c));
    }
    report.header = {{"design", to_string(config.design)},
                     {"replications", std::to_string(R)},
                     {"bootstrap_B", std::to_string(config.B)},
                     {"seed", std::to_string(config.seed)},
                     {"q", std::to_string(q)},
                     {"N", std::to_string(std::min<std::size_t>(static_cast<std::size_t>(config.N), cal.units.size()))},
                     {"T", std::to_string(std::min<Eigen::Index>(config.T, cal.low_common.cols()))},
                     {"components", config.oracle_components ? "true" : "re-estimated by MW"},
                     {"nominal_level", "0.90"}};
    for (const auto& [k, v] : cal.summary()) report.header.emplace_back("calibration." + k, fmt(v));
    return report;
}

}  // namespace lowfreq::montecarlo
