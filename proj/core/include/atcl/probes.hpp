#ifndef ATCL_PROBES_HPP
#define ATCL_PROBES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "atcl/fgm.hpp"
#include "atcl/rng.hpp"
#include "atcl/transformer.hpp"
#include "atcl/vocab.hpp"

namespace atcl {

// exp of the mean per-token NLL over contiguous windows of seq_len (trailing
// remainder unscored, matching training batching).
double perplexity(const TransformerModel& model, const std::vector<int>& stream,
                  std::size_t seq_len);

// Greedy decode of a single source sentence; stops at <eos> or max_len_out.
std::vector<int> greedy_translate(const TransformerModel& model,
                                  const std::vector<int>& src_ids,
                                  std::size_t max_len_out = 64);

struct Neighbor {
    std::string token;
    double distance;
};
// Exact top-k by Euclidean distance over embedding rows, excluding the query
// and the special tokens.
std::vector<Neighbor> nearest_neighbors(const TransformerModel& model,
                                        const Vocabulary& vocab,
                                        const std::string& word, std::size_t k);

struct AttackReport {
    std::vector<std::string> continuation;
    double mean_nll = 0.0;
    double perplexity = 1.0;
    bool degenerate = false; // zero gradient, no perturbation applied
};
// Perturbs the embedding of the token at target_position (which must satisfy
// the candidate mask), then greedily completes the sentence (cap 20 tokens)
// and self-scores the continuation.
AttackReport targeted_attack_completion(const TransformerModel& model,
                                        const Vocabulary& vocab,
                                        const std::vector<std::string>& sentence,
                                        std::size_t target_position, double epsilon,
                                        FgmSign sign = FgmSign::PaperMinus,
                                        std::size_t max_new_tokens = 20);

// Mean KL(clean || perturbed) between next-token distributions at sampled
// (window, candidate) pairs. epsilon == 0 yields exactly 0.
double robustness_divergence(const TransformerModel& model, const Vocabulary& vocab,
                             const std::vector<int>& stream, std::size_t seq_len,
                             double epsilon, std::size_t n_samples, Rng& rng,
                             FgmSign sign = FgmSign::PaperMinus);

} // namespace atcl

#endif
