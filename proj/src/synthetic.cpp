#include "lowfreq/synthetic.hpp"

#include "lowfreq/fracuc.hpp"
#include "lowfreq/ingest.hpp"
#include "lowfreq/random.hpp"

#include <array>
#include <cmath>

namespace lowfreq::synthetic {

namespace {

// Interannual temperature volatility for a few states; the rest are drawn.
const std::map<std::string, double> kSigmaH = {
    {"CA", 1.10}, {"FL", 0.85}, {"IL", 1.55}, {"MA", 1.30}, {"ND", 2.05}, {"NY", 1.40}, {"WA", 1.00},
};

enum Purpose : std::uint64_t { kUnits = 1, kCommonLow, kIdioLow, kCommonHigh, kIdioHigh, kGrowth };

}  // namespace

SyntheticData make_synthetic(const SyntheticOptions& o) {
    if (o.last_year - o.first_year < 20 || o.growth_first_year <= o.first_year ||
        o.growth_first_year + 10 > o.last_year || o.cutoff <= o.first_year + 1) {
        throw Error(ErrorCode::InvalidArgument, "synthetic year settings are inconsistent");
    }
    constexpr int N = 48;
    const int T = o.last_year - o.first_year + 1;
    std::vector<std::string> ids;
    for (int c = 1; c <= N; ++c) ids.push_back(*ingest::state_abbreviation(c));

    SyntheticData out{Panel(ids, o.first_year, Eigen::MatrixXd::Zero(N, T)),
                      Panel(ids, o.first_year, Eigen::MatrixXd::Zero(N, T)),
                      Panel(ids, o.first_year, Eigen::MatrixXd::Zero(N, T)),
                      Panel(ids, o.first_year, Eigen::MatrixXd::Zero(N, T)),
                      {}, {}, {}};

    RngStream units(derive_seed(o.seed, kUnits), 0);
    Eigen::VectorXd level(N), load_low(N), load_factor(N), effect(N), sigma_h(N), raw_w(N);
    for (int i = 0; i < N; ++i) {
        level(i) = 42.0 + 28.0 * static_cast<double>(units.index(1000)) / 1000.0;
        load_low(i) = 1.0 + 0.3 * units.normal();
        load_factor(i) = 1.0 + 0.4 * units.normal();
        effect(i) = 2.0 + 0.5 * units.normal();
        raw_w(i) = std::exp(1.5 + units.normal());
        const double drawn = 0.9 + 1.0 * static_cast<double>(units.index(1000)) / 1000.0;
        const auto known = kSigmaH.find(ids[static_cast<std::size_t>(i)]);
        sigma_h(i) = known != kSigmaH.end() ? known->second : drawn;
        out.weights[ids[static_cast<std::size_t>(i)]] = raw_w(i);
        out.sigma_H[ids[static_cast<std::size_t>(i)]] = sigma_h(i);
    }

    // Common low component: random walk plus a warming drift after 1970.
    RngStream common_low(derive_seed(o.seed, kCommonLow), 0);
    Eigen::VectorXd g(T);
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
        acc += o.common_sigma_L * common_low.normal();
        g(t) = acc + (o.first_year + t > 1970 ? o.warming_per_year * (o.first_year + t - 1970) : 0.0);
    }
    RngStream common_high(derive_seed(o.seed, kCommonHigh), 0);
    const std::array<double, 1> ma{o.ma1};
    const Eigen::VectorXd c = fracuc::simulate_high(ma, 1.0, T, common_high);

    Eigen::MatrixXd low(N, T), high(N, T);
    const double idio_share = std::sqrt(1.0 - o.high_common_share * o.high_common_share);
    for (int i = 0; i < N; ++i) {
        RngStream idio_low(derive_seed(o.seed, kIdioLow), static_cast<std::uint64_t>(i));
        RngStream idio_high(derive_seed(o.seed, kIdioHigh), static_cast<std::uint64_t>(i));
        double walk = 0.0;
        for (int t = 0; t < T; ++t) {
            walk += o.idio_sigma_L * idio_low.normal();
            low(i, t) = load_low(i) * g(t) + walk;
        }
        const Eigen::VectorXd e = fracuc::simulate_high(ma, 1.0, T, idio_high);
        high.row(i) = (sigma_h(i) * (o.high_common_share * c + idio_share * e)).transpose();
    }
    // Express the low component relative to its pre-cutoff mean so that the
    // true components match the demeaned temperatures.
    const int pre = o.cutoff - o.first_year;
    for (int i = 0; i < N; ++i) low.row(i).array() -= (low.row(i).head(pre).array() + high.row(i).head(pre).array()).mean();

    const Eigen::VectorXd w = normalize_weights(raw_w);
    out.temperature = Panel(ids, o.first_year, (low + high).colwise() + level, w, "degF");
    out.low = Panel(ids, o.first_year, low, w, "degF");
    out.high = Panel(ids, o.first_year, high, w, "degF");

    // Growth: dY_t = alpha dY_t-1 + b_L L_t + delta_H dH_t + gamma_H H_t-1 + gamma_i + lambda_i f_t + u_t.
    const int g0 = o.growth_first_year - o.first_year;
    const int Tg = o.last_year - o.growth_first_year + 1;
    RngStream growth(derive_seed(o.seed, kGrowth), 0);
    Eigen::VectorXd f(Tg);
    for (int t = 0; t < Tg; ++t) f(t) = o.factor_scale * growth.normal();
    Eigen::MatrixXd dy(N, Tg);
    for (int i = 0; i < N; ++i) {
        RngStream noise(derive_seed(o.seed, kGrowth), static_cast<std::uint64_t>(i) + 1);
        double prev = effect(i) / (1.0 - o.alpha);
        for (int t = 0; t < Tg; ++t) {
            const int s = g0 + t;
            const double v = o.alpha * prev + o.b_L * low(i, s) + o.delta_H * (high(i, s) - high(i, s - 1)) +
                             o.gamma_H * high(i, s - 1) + effect(i) + load_factor(i) * f(t) +
                             o.noise_sd * noise.normal();
            dy(i, t) = v;
            prev = v;
        }
    }
    out.growth = Panel(ids, o.growth_first_year, dy, w, "percent");
    out.truth = {{"alpha", o.alpha}, {"b_L", o.b_L}, {"delta_H", o.delta_H}, {"gamma_H", o.gamma_H}};
    return out;
}

}  // namespace lowfreq::synthetic
