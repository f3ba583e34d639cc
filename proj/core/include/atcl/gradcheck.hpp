#ifndef ATCL_GRADCHECK_HPP
#define ATCL_GRADCHECK_HPP

#include <functional>
#include <string>
#include <vector>

#include "atcl/tensor.hpp"

namespace atcl {

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    bool pass = true;
};

// Central finite differences against reverse-mode gradients. The function
// must rebuild its graph from the supplied leaf tensors on every call (the
// leaves are perturbed in place between evaluations).
GradCheckReport grad_check(
    const std::function<double()>& scalar_fn,
    const std::vector<std::pair<std::string, TensorPtr>>& leaves,
    const std::function<void()>& backward_fn,
    double relative_tolerance = 1e-4,
    double fd_step = 1e-5);

// Convenience wrapper for a single-tensor function.
GradCheckReport grad_check(const std::function<TensorPtr(const TensorPtr&)>& fn,
                           const TensorPtr& point,
                           double relative_tolerance = 1e-4,
                           double fd_step = 1e-5);

} // namespace atcl

#endif
