#include "alanet/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "alanet/errors.hpp"

namespace alanet {

GradCheckReport grad_check(const std::string& name, const std::function<TensorPtr()>& f,
                           const std::vector<TensorPtr>& inputs, double step,
                           double tolerance) {
    if (step < 1e-7 || step > 1e-4) {
        throw ConfigError("grad_check: step " + std::to_string(step) +
                          " outside [1e-7, 1e-4]");
    }
    for (const auto& in : inputs) {
        if (!in || !in->requires_grad) {
            throw ConfigError("grad_check: every checked input must require gradients");
        }
        in->ensure_grad();
        in->zero_grad();
    }

    auto out = f();
    out->backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (const auto& in : inputs) {
        in->ensure_grad();
        analytic.push_back(in->grad);
    }

    GradCheckReport report;
    report.name = name;
    report.tolerance = tolerance;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        auto& in = *inputs[t];
        for (std::size_t i = 0; i < in.data.size(); ++i) {
            double saved = in.data[i];
            in.data[i] = saved + step;
            double up = f()->value();
            in.data[i] = saved - step;
            double down = f()->value();
            in.data[i] = saved;
            double numeric = (up - down) / (2.0 * step);
            double a = analytic[t][i];
            double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            report.max_rel_error = std::max(report.max_rel_error, std::fabs(a - numeric) / denom);
            ++report.checked;
        }
    }
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

} // namespace alanet
