#include "lowfreq/tsreg.hpp"

#include "lowfreq/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lowfreq::tsreg {

namespace {

void require_same_axis(const TimeSeries& a, const TimeSeries& b, const char* what) {
    if (a.first_year() != b.first_year() || a.size() != b.size()) {
        throw Error(ErrorCode::AxisMismatch,
                    std::string(what) + " covers " + std::to_string(b.first_year()) + "-" +
                        std::to_string(b.last_year()) + ", dependent covers " +
                        std::to_string(a.first_year()) + "-" + std::to_string(a.last_year()));
    }
}

std::size_t find_name(const std::vector<std::string>& names, const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error(ErrorCode::InvalidArgument, "no coefficient named '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

double TsEstimate::coefficient(const std::string& name) const {
    return coefficients(static_cast<Eigen::Index>(find_name(names, name)));
}

inference::Interval TsEstimate::interval(const std::string& name) const { return ci[find_name(names, name)]; }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "probability must lie in (0, 1)");
    // Bisection on the CDF, then two Newton steps.
    double lo = -40.0;
    double hi = 40.0;
    auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 2; ++i) {
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        if (pdf > 0.0) x -= (cdf(x) - p) / pdf;
    }
    return x;
}

TsEstimate ts_estimate(const TimeSeries& dy, const TimeSeries& lx, const std::optional<TimeSeries>& hx,
                       const TsOptions& options) {
    require_same_axis(dy, lx, "low component");
    if (hx) require_same_axis(dy, *hx, "high component");
    if (!(options.level > 0.0 && options.level < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "confidence level must lie in (0, 1)");
    }
    if (options.dols < 0) throw Error(ErrorCode::InvalidArgument, "dols must be >= 0");
    const Eigen::Index full = dy.size();
    const Eigen::Index k = options.dols;
    // DOLS needs dL_{t-k} .. dL_{t+k}, so the first k+1 and last k years are dropped.
    const Eigen::Index begin = k > 0 ? k + 1 : 0;
    const Eigen::Index T = full - begin - k;
    if (T < 20) {
        throw Error(ErrorCode::SampleTooShort,
                    "time-series regression needs at least 20 usable years, got " + std::to_string(T));
    }

    TsEstimate out;
    out.unit_id = dy.unit_id();
    out.names = {"beta_0", "beta_L"};
    if (hx) out.names.emplace_back("beta_H");
    for (Eigen::Index j = -k; j <= k && k > 0; ++j) {
        out.names.push_back("dL(" + std::string(j >= 0 ? "+" : "") + std::to_string(j) + ")");
    }
    const auto p = static_cast<Eigen::Index>(out.names.size());
    Eigen::MatrixXd x(T, p);
    const Eigen::VectorXd& l = lx.values();
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::Index s = begin + t;
        Eigen::Index c = 0;
        x(t, c++) = 1.0;
        x(t, c++) = l(s);
        if (hx) x(t, c++) = hx->values()(s);
        for (Eigen::Index j = -k; j <= k && k > 0; ++j) x(t, c++) = l(s + j) - l(s + j - 1);
    }
    const Eigen::VectorXd y = dy.values().segment(begin, T);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < p) throw Error(ErrorCode::RankDeficientDesign, "time-series design is collinear");
    out.coefficients = qr.solve(y);
    out.residuals = y - x * out.coefficients;
    out.bandwidth = options.bandwidth < 0 ? inference::default_nw_bandwidth(T) : options.bandwidth;
    const inference::VarianceEstimate v = inference::newey_west_se(x, out.residuals, out.bandwidth);
    out.se = v.se;
    out.level = options.level;
    const double z = normal_quantile(0.5 + 0.5 * options.level);
    for (Eigen::Index j = 0; j < p; ++j) {
        out.ci.push_back({out.coefficients(j) - z * out.se(j), out.coefficients(j) + z * out.se(j)});
    }
    out.first_year = dy.first_year() + static_cast<int>(begin);
    out.T = T;
    const double tss = (y.array() - y.mean()).square().sum();
    const double ssr = out.residuals.squaredNorm();
    out.r_squared = tss > 0.0 ? 1.0 - ssr / tss : 0.0;
    const double diff = (out.residuals.tail(T - 1) - out.residuals.head(T - 1)).squaredNorm();
    out.durbin_watson = ssr > 0.0 ? diff / ssr : 0.0;
    return out;
}

std::vector<TsEstimate> unit_estimates(const Panel& dy, const Panel& lx, const std::optional<Panel>& hx,
                                       const TsOptions& options, int threads) {
    if (lx.unit_ids() != dy.unit_ids() || (hx && hx->unit_ids() != dy.unit_ids())) {
        throw Error(ErrorCode::AxisMismatch, "panels list different units");
    }
    std::vector<TsEstimate> out(static_cast<std::size_t>(dy.N()));
    parallel_for(out.size(), threads, [&](std::size_t i) {
        const auto u = static_cast<Eigen::Index>(i);
        out[i] = ts_estimate(dy.unit(u), lx.unit(u), hx ? std::optional<TimeSeries>(hx->unit(u)) : std::nullopt,
                             options);
    });
    return out;
}

Density unit_density(const std::vector<double>& estimates, const std::optional<Eigen::VectorXd>& weights) {
    const std::size_t n = estimates.size();
    if (n < 5) {
        throw Error(ErrorCode::TooFewEstimates, "density needs at least 5 estimates, got " + std::to_string(n));
    }
    for (double e : estimates) {
        if (!std::isfinite(e)) throw Error(ErrorCode::InvalidArgument, "non-finite estimate");
    }
    Density out;
    out.n = n;
    std::vector<double> sorted = estimates;
    std::sort(sorted.begin(), sorted.end());
    out.median = inference::quantile_sorted(sorted, 0.5);
    const Eigen::Map<const Eigen::VectorXd> v(estimates.data(), static_cast<Eigen::Index>(n));
    out.mean = v.mean();
    if (weights) {
        if (weights->size() != static_cast<Eigen::Index>(n)) {
            throw Error(ErrorCode::InvalidArgument, "one weight per estimate is required");
        }
        out.weighted_mean = normalize_weights(*weights).dot(v);
    } else {
        out.weighted_mean = out.mean;
    }

    const double sd = std::sqrt((v.array() - out.mean).square().sum() / static_cast<double>(n - 1));
    if (sorted.front() == sorted.back()) {
        out.degenerate = true;
        out.mode = sorted.front();
        out.median = out.mean = out.weighted_mean = sorted.front();
        return out;
    }
    const double iqr = inference::quantile_sorted(sorted, 0.75) - inference::quantile_sorted(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    out.bandwidth = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

    constexpr int points = 512;
    const double lo = sorted.front() - 3.0 * out.bandwidth;
    const double hi = sorted.back() + 3.0 * out.bandwidth;
    const double norm = 1.0 / (static_cast<double>(n) * out.bandwidth * std::sqrt(2.0 * std::numbers::pi));
    out.grid.resize(points);
    out.f.resize(points);
    std::size_t best = 0;
    for (int g = 0; g < points; ++g) {
        const double x = lo + (hi - lo) * g / (points - 1);
        double acc = 0.0;
        for (double e : estimates) {
            const double u = (x - e) / out.bandwidth;
            acc += std::exp(-0.5 * u * u);
        }
        out.grid[static_cast<std::size_t>(g)] = x;
        out.f[static_cast<std::size_t>(g)] = acc * norm;
        if (out.f[static_cast<std::size_t>(g)] > out.f[best]) best = static_cast<std::size_t>(g);
    }
    out.mode = out.grid[best];
    return out;
}

}  // namespace lowfreq::tsreg
