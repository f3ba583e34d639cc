#include "atcl/tensor.hpp"

#include <cmath>
#include <unordered_set>

namespace atcl {

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) {
        require(d > 0, "tensor: shape dimensions must be positive");
        n *= d;
    }
    return n;
}

TensorPtr make_tensor(Shape shape, std::vector<double> values, bool requires_grad) {
    require(shape_numel(shape) == values.size(), "tensor: shape/value length mismatch");
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->value = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr make_zeros(Shape shape, bool requires_grad) {
    std::size_t n = shape_numel(shape);
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->value.assign(n, 0.0);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr make_scalar(double v) { return make_tensor({1}, {v}); }

std::vector<Tensor*> topo_order(const TensorPtr& root) {
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    // Iterative post-order DFS; graphs can be a few thousand nodes deep.
    struct Frame { Tensor* node; std::size_t next_child; };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_child < f.node->parents.size()) {
            Tensor* p = f.node->parents[f.next_child++].get();
            if (visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }
    return order; // parents precede children
}

void backward(const TensorPtr& root) {
    require(root != nullptr, "backward: null root");
    require(root->is_scalar(), "backward: root must be scalar");
    auto order = topo_order(root);
    for (Tensor* t : order) {
        t->grad.assign(t->value.size(), 0.0);
    }
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* t = *it;
        if (t->backprop) t->backprop(*t);
    }
}

} // namespace atcl
