#include "lowfreq/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lowfreq::optim {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             const NelderMeadOptions& options) {
    const Eigen::Index n = x0.size();
    int evaluations = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), x0);
    std::vector<double> values(static_cast<std::size_t>(n + 1));
    for (Eigen::Index j = 0; j < n; ++j) simplex[static_cast<std::size_t>(j + 1)](j) += step(j);
    for (std::size_t k = 0; k < simplex.size(); ++k) values[k] = eval(simplex[k]);

    std::vector<std::size_t> order(simplex.size());
    NelderMeadResult result{x0, 0.0, 0, 0, false, 0.0, 0.0, {}};
    Eigen::VectorXd previous_best = x0;

    for (;;) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];

        const Eigen::VectorXd& best_x = simplex[best];
        if ((best_x - previous_best).norm() > 0.0) result.last_step = (best_x - previous_best).norm();
        previous_best = best_x;
        result.best_path.push_back(values[best]);

        double diameter = 0.0;
        for (const auto& v : simplex) diameter = std::max(diameter, (v - best_x).norm());
        const double spread = values[worst] - values[best];
        result.spread = spread;
        if (std::isfinite(values[best]) && spread <= options.f_tolerance &&
            diameter <= options.x_tolerance) {
            result.converged = true;
            break;
        }
        if (evaluations >= options.max_evaluations) break;
        ++result.iterations;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t k : order) {
            if (k != worst) centroid += simplex[k];
        }
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
        const double f_reflected = eval(reflected);
        if (f_reflected < values[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected) {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected < values[second_worst]) {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
            continue;
        }
        const bool outside = f_reflected < values[worst];
        const Eigen::VectorXd contracted =
            outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                    : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
        const double f_contracted = eval(contracted);
        if (f_contracted < (outside ? f_reflected : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = f_contracted;
            continue;
        }
        for (std::size_t k : order) {
            if (k == best) continue;
            simplex[k] = best_x + 0.5 * (simplex[k] - best_x);
            values[k] = eval(simplex[k]);
        }
    }

    const auto best_it = std::min_element(values.begin(), values.end());
    const auto best_index = static_cast<std::size_t>(best_it - values.begin());
    result.x = simplex[best_index];
    result.value = *best_it;
    result.evaluations = evaluations;
    return result;
}

}  // namespace lowfreq::optim
