#include "atcl/contrastive.hpp"

#include "atcl/common.hpp"
#include "atcl/ops.hpp"

namespace atcl {

NegativeSample sample_negatives(const std::vector<std::size_t>& available_rows,
                                std::size_t anchor_row, std::size_t n, Rng& rng) {
    require(n >= 1, "sample_negatives: n must be >= 1");
    std::vector<std::size_t> pool;
    pool.reserve(available_rows.size());
    for (auto r : available_rows)
        if (r != anchor_row) pool.push_back(r);
    require(!pool.empty(), "sample_negatives: no non-anchor positions available");

    NegativeSample out;
    if (pool.size() <= n) {
        out.rows = pool;
        out.short_supply = pool.size() < n;
        return out;
    }
    // partial Fisher-Yates; draw order is a pure function of the rng stream
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.uniform_index(pool.size() - i);
        std::swap(pool[i], pool[j]);
        out.rows.push_back(pool[i]);
    }
    return out;
}

TensorPtr contrastive_loss(const TensorPtr& h_clean, const TensorPtr& h_perturbed,
                           const std::vector<ContrastiveAnchor>& anchors, double tau,
                           bool include_positive_in_denominator) {
    require(tau > 0.0, "contrastive_loss: temperature must be positive");
    require(!anchors.empty(), "contrastive_loss: no anchors supplied");
    TensorPtr total;
    for (const auto& a : anchors) {
        require(!a.negative_rows.empty(), "contrastive_loss: anchor without negatives");
        for (auto r : a.negative_rows)
            if (r == a.row)
                throw InternalError("contrastive_loss: anchor sampled as its own negative");
        auto anchor = slice_row(h_clean, a.row);
        auto positive = slice_row(h_perturbed, a.row);
        std::vector<TensorPtr> negatives;
        negatives.reserve(a.negative_rows.size());
        for (auto r : a.negative_rows) negatives.push_back(slice_row(h_clean, r));
        auto term = info_nce(anchor, positive, negatives, tau,
                             include_positive_in_denominator);
        total = total ? add(total, term) : term;
    }
    return scale(total, 1.0 / double(anchors.size()));
}

} // namespace atcl
