#include "atcl/gradcheck.hpp"

#include <cmath>

namespace atcl {

namespace {
double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) / denom;
}
} // namespace

GradCheckReport grad_check(
    const std::function<double()>& scalar_fn,
    const std::vector<std::pair<std::string, TensorPtr>>& leaves,
    const std::function<void()>& backward_fn,
    double relative_tolerance, double fd_step) {
    require(relative_tolerance > 0.0, "grad_check: tolerance must be positive");
    GradCheckReport report;

    backward_fn();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(leaves.size());
    for (const auto& [name, t] : leaves) {
        (void)name;
        require(t->grad.size() == t->value.size(),
                "grad_check: leaf has no gradient after backward");
        analytic.push_back(t->grad);
    }

    for (std::size_t li = 0; li < leaves.size(); ++li) {
        const auto& [name, t] = leaves[li];
        GradCheckEntry entry;
        entry.name = name;
        for (std::size_t i = 0; i < t->value.size(); ++i) {
            const double orig = t->value[i];
            t->value[i] = orig + fd_step;
            const double fp = scalar_fn();
            t->value[i] = orig - fd_step;
            const double fm = scalar_fn();
            t->value[i] = orig;
            const double fd = (fp - fm) / (2.0 * fd_step);
            entry.max_rel_error = std::max(entry.max_rel_error, rel_err(analytic[li][i], fd));
        }
        entry.pass = entry.max_rel_error < relative_tolerance;
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.pass = report.pass && entry.pass;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

GradCheckReport grad_check(const std::function<TensorPtr(const TensorPtr&)>& fn,
                           const TensorPtr& point,
                           double relative_tolerance, double fd_step) {
    auto scalar_fn = [&]() { return fn(point)->scalar(); };
    auto backward_fn = [&]() { backward(fn(point)); };
    return grad_check(scalar_fn, {{"point", point}}, backward_fn,
                      relative_tolerance, fd_step);
}

} // namespace atcl
