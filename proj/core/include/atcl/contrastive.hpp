#ifndef ATCL_CONTRASTIVE_HPP
#define ATCL_CONTRASTIVE_HPP

#include <cstdint>
#include <vector>

#include "atcl/rng.hpp"
#include "atcl/tensor.hpp"

namespace atcl {

struct NegativeSample {
    std::vector<std::size_t> rows;
    bool short_supply = false; // fewer than n positions were available
};

// Uniform sample without replacement over available rows minus the anchor's
// own row. Throws when nothing is available; uses everything (and flags
// short_supply) when fewer than n rows exist.
NegativeSample sample_negatives(const std::vector<std::size_t>& available_rows,
                                std::size_t anchor_row, std::size_t n, Rng& rng);

struct ContrastiveAnchor {
    std::size_t row = 0; // shared row index into H (clean) and H' (perturbed)
    std::vector<std::size_t> negative_rows;
};

// Mean per-anchor InfoNCE-style loss over (H, H') pairs; gradients flow into
// anchors, positives and negatives alike. tau must be positive.
TensorPtr contrastive_loss(const TensorPtr& h_clean, const TensorPtr& h_perturbed,
                           const std::vector<ContrastiveAnchor>& anchors, double tau,
                           bool include_positive_in_denominator);

} // namespace atcl

#endif
