#ifndef ATCL_BATCHING_HPP
#define ATCL_BATCHING_HPP

#include <cstdint>
#include <vector>

#include "atcl/vocab.hpp"

namespace atcl {

// One training unit. token_ids/pad_mask are B x N row-major; for NMT the
// target side has its own length M. For LM, target_ids are the next-token
// labels aligned with token_ids.
struct Batch {
    std::size_t batch_size = 0;
    std::size_t seq_len = 0;    // N
    std::size_t target_len = 0; // M (== N for LM)
    std::vector<int> token_ids;
    std::vector<std::uint8_t> pad_mask; // 1 = real token
    std::vector<int> decoder_input_ids; // NMT only: <bos> + y, padded
    std::vector<int> target_ids;
    std::vector<std::uint8_t> target_mask;
};

// Continuous LM token stream: each sentence's ids followed by <eos>.
std::vector<int> lm_token_stream(const std::vector<std::string>& sentences,
                                 const Vocabulary& vocab);

// Contiguous windows of seq_len with next-token targets; trailing remainder
// dropped; window order shuffled deterministically by shuffle_seed.
std::vector<Batch> make_lm_batches(const std::vector<int>& stream,
                                   std::size_t batch_size, std::size_t seq_len,
                                   std::uint64_t shuffle_seed);

// Parallel sentence pairs, length-bucketed and padded. Source rows carry an
// <eos>; target input is <bos> + y and target labels are y + <eos>.
std::vector<Batch> make_nmt_batches(const std::vector<std::vector<int>>& src_ids,
                                    const std::vector<std::vector<int>>& trg_ids,
                                    std::size_t batch_size, std::uint64_t shuffle_seed);

} // namespace atcl

#endif
