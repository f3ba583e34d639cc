#ifndef ATCL_OPS_HPP
#define ATCL_OPS_HPP

#include <cstdint>
#include <vector>

#include "atcl/tensor.hpp"

namespace atcl {

// Fixed primitive set. Every op registers a backprop closure; shapes are
// validated up front and violations throw InvalidInputError.

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b); // (R,K)x(K,C)
TensorPtr add(const TensorPtr& a, const TensorPtr& b);    // same shape
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);    // elementwise
TensorPtr scale(const TensorPtr& a, double c);
TensorPtr add_bias(const TensorPtr& a, const TensorPtr& bias); // (R,C)+(C)

// Row lookup into an embedding matrix (V,D); ids must be < V.
TensorPtr embedding_lookup(const TensorPtr& table, const std::vector<int>& ids);

// Per-row layer normalization with affine scale/shift; eps guards the
// zero-variance row (output collapses to the shift).
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain,
                     const TensorPtr& shift, double eps = 1e-5);

TensorPtr softmax_rows(const TensorPtr& x); // max-subtracted, last axis
TensorPtr relu(const TensorPtr& x);

// Scaled dot-product attention. q is (B*H, Nq, Dh); k and v are
// (B*H, Nk, Dh). attend_mask has B*Nq*Nk entries (1 = query may attend to
// key), shared across heads. Cross-attention is the Nq != Nk case.
TensorPtr attention(const TensorPtr& q, const TensorPtr& k, const TensorPtr& v,
                    const std::vector<std::uint8_t>& attend_mask,
                    std::size_t batch, std::size_t n_heads);

TensorPtr split_heads(const TensorPtr& x, std::size_t batch, std::size_t seq,
                      std::size_t n_heads); // (B*N,D) -> (B*H,N,D/H)
TensorPtr merge_heads(const TensorPtr& x, std::size_t batch, std::size_t seq,
                      std::size_t n_heads); // inverse

// Mean negative log-likelihood of logits rows against integer targets,
// averaged over rows with valid != 0. Softmax is fused for stability.
TensorPtr cross_entropy_logits(const TensorPtr& logits, const std::vector<int>& targets,
                               const std::vector<std::uint8_t>& valid);

TensorPtr sum_all(const TensorPtr& x);
TensorPtr mean_all(const TensorPtr& x);
TensorPtr slice_row(const TensorPtr& x, std::size_t row); // (R,C) -> (C)

// Weighted row combination: out[c] = sum_r w[r] * x[r,c]. Weights are
// constants (no gradient into them).
TensorPtr weighted_row_sum(const TensorPtr& x, const std::vector<double>& weights);

TensorPtr cosine_similarity(const TensorPtr& u, const TensorPtr& v); // scalar
TensorPtr l2_norm(const TensorPtr& u);                               // scalar

// Per-anchor contrastive term: -log[ exp(cos(a,p)/tau) / sum_n exp(cos(a,n)/tau) ].
// With include_positive_in_denominator the positive joins the partition sum.
TensorPtr info_nce(const TensorPtr& anchor, const TensorPtr& positive,
                   const std::vector<TensorPtr>& negatives, double tau,
                   bool include_positive_in_denominator);

// Plain-value helpers (no graph) shared by eval paths.
void softmax_inplace(double* row, std::size_t n);
double log_sum_exp(const double* row, std::size_t n);

} // namespace atcl

#endif
