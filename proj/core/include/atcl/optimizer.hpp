#ifndef ATCL_OPTIMIZER_HPP
#define ATCL_OPTIMIZER_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "atcl/tensor.hpp"

namespace atcl {

struct AdamConfig {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected adaptive-moment update. Moment buffers mirror the model's
// canonical parameter order, so serialized state is position-stable.
class Adam {
  public:
    Adam(std::vector<std::pair<std::string, TensorPtr>> params, AdamConfig cfg);

    // Applies one update from the gradients currently stored on the
    // parameter tensors. Parameters without a gradient buffer are treated
    // as having zero gradient.
    void step();

    std::uint64_t step_count() const { return t_; }

    void save(std::ostream& out) const;
    void load(std::istream& in);

  private:
    std::vector<std::pair<std::string, TensorPtr>> params_;
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t t_ = 0;
    AdamConfig cfg_;
};

} // namespace atcl

#endif
