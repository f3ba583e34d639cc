#ifndef ATCL_TEST_UTIL_HPP
#define ATCL_TEST_UTIL_HPP

#include <string>
#include <vector>

#include "atcl/rng.hpp"
#include "atcl/tensor.hpp"

namespace atcl_test {

inline atcl::TensorPtr random_tensor(atcl::Shape shape, atcl::Rng& rng,
                                     double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(atcl::shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return atcl::make_tensor(std::move(shape), std::move(v), true);
}

} // namespace atcl_test

#endif
