#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "alanet/tensor.hpp"

namespace alanet {

struct GradCheckReport {
    std::string name;
    double max_rel_error = 0.0;
    std::int64_t checked = 0;   // number of perturbed elements
    double tolerance = 0.0;
    bool passed = false;
};

// Compares the reverse-mode gradient of f against central differences
// (f(x+h) - f(x-h)) / 2h for every element of every tensor in `inputs`.
// f must rebuild its graph on each call and return a single-element tensor.
// Relative error uses max(|analytic|, |numeric|, 1e-8) as the denominator.
// step must lie in [1e-7, 1e-4].
GradCheckReport grad_check(const std::string& name, const std::function<TensorPtr()>& f,
                           const std::vector<TensorPtr>& inputs, double step = 1e-5,
                           double tolerance = 1e-4);

} // namespace alanet
