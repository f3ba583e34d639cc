#ifndef ATCL_TENSOR_HPP
#define ATCL_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "atcl/common.hpp"

namespace atcl {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;
using Shape = std::vector<std::size_t>;

// Dense row-major tensor of 64-bit reals, doubling as a node in the
// define-by-run computation graph. Leaf tensors have no parents; interior
// nodes carry a backprop closure that scatters this node's grad into its
// parents' grads. The graph is rebuilt every step; backward() walks it in
// reverse topological order.
class Tensor {
  public:
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // sized lazily by backward()
    bool requires_grad = false;

    std::vector<TensorPtr> parents;
    std::function<void(Tensor&)> backprop;

    std::size_t size() const { return value.size(); }
    bool is_scalar() const { return value.size() == 1; }
    double scalar() const {
        if (!is_scalar()) throw InvalidInputError("tensor: scalar() on non-scalar");
        return value[0];
    }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

std::size_t shape_numel(const Shape& s);

TensorPtr make_tensor(Shape shape, std::vector<double> values, bool requires_grad = false);
TensorPtr make_zeros(Shape shape, bool requires_grad = false);
TensorPtr make_scalar(double v);

// Reverse-mode sweep from a scalar root. Zeroes grads of every reachable
// node first, so repeated backward calls over overlapping graphs never mix
// accumulations. Deterministic: topological order depends only on graph
// construction order.
void backward(const TensorPtr& root);

// Topological order (parents before children) of the subgraph under root.
std::vector<Tensor*> topo_order(const TensorPtr& root);

} // namespace atcl

#endif
