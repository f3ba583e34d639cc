#include "atcl/batching.hpp"

#include <algorithm>
#include <numeric>

#include "atcl/common.hpp"
#include "atcl/rng.hpp"

namespace atcl {

std::vector<int> lm_token_stream(const std::vector<std::string>& sentences,
                                 const Vocabulary& vocab) {
    std::vector<int> stream;
    for (const auto& line : sentences) {
        for (const auto& tok : split_whitespace(line)) stream.push_back(vocab.id(tok));
        stream.push_back(Vocabulary::kEos);
    }
    return stream;
}

std::vector<Batch> make_lm_batches(const std::vector<int>& stream,
                                   std::size_t batch_size, std::size_t seq_len,
                                   std::uint64_t shuffle_seed) {
    require(batch_size >= 1, "make_batches: batch_size must be >= 1");
    require(seq_len >= 2, "make_batches: seq_len must be >= 2");
    const std::size_t window = seq_len + 1; // inputs + one-step-ahead targets
    require(stream.size() >= window, "make_batches: corpus shorter than one window");

    const std::size_t n_windows = stream.size() / window;
    std::vector<std::size_t> order(n_windows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(shuffle_seed);
    rng.shuffle(order);

    std::vector<Batch> batches;
    for (std::size_t start = 0; start < n_windows; start += batch_size) {
        const std::size_t b = std::min(batch_size, n_windows - start);
        Batch batch;
        batch.batch_size = b;
        batch.seq_len = seq_len;
        batch.target_len = seq_len;
        batch.token_ids.resize(b * seq_len);
        batch.pad_mask.assign(b * seq_len, 1);
        batch.target_ids.resize(b * seq_len);
        batch.target_mask.assign(b * seq_len, 1);
        for (std::size_t k = 0; k < b; ++k) {
            const std::size_t w = order[start + k] * window;
            for (std::size_t i = 0; i < seq_len; ++i) {
                batch.token_ids[k * seq_len + i] = stream[w + i];
                batch.target_ids[k * seq_len + i] = stream[w + i + 1];
            }
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

std::vector<Batch> make_nmt_batches(const std::vector<std::vector<int>>& src_ids,
                                    const std::vector<std::vector<int>>& trg_ids,
                                    std::size_t batch_size, std::uint64_t shuffle_seed) {
    require(batch_size >= 1, "make_batches: batch_size must be >= 1");
    require(src_ids.size() == trg_ids.size(),
            "make_batches: source/target pair counts differ");
    require(!src_ids.empty(), "make_batches: empty parallel corpus");

    // length-bucketed order keeps padding waste low; stable sort for determinism
    std::vector<std::size_t> order(src_ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (src_ids[a].size() != src_ids[b].size())
            return src_ids[a].size() < src_ids[b].size();
        return trg_ids[a].size() < trg_ids[b].size();
    });

    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t start = 0; start < order.size(); start += batch_size)
        groups.emplace_back(order.begin() + start,
                            order.begin() + start +
                                std::min(batch_size, order.size() - start));
    Rng rng(shuffle_seed);
    rng.shuffle(groups);

    std::vector<Batch> batches;
    for (const auto& g : groups) {
        std::size_t n = 0, m = 0;
        for (auto i : g) {
            n = std::max(n, src_ids[i].size() + 1); // + <eos>
            m = std::max(m, trg_ids[i].size() + 1); // + <bos> / <eos>
        }
        n = std::max<std::size_t>(n, 2);
        m = std::max<std::size_t>(m, 2);
        Batch batch;
        batch.batch_size = g.size();
        batch.seq_len = n;
        batch.target_len = m;
        batch.token_ids.assign(g.size() * n, Vocabulary::kPad);
        batch.pad_mask.assign(g.size() * n, 0);
        batch.decoder_input_ids.assign(g.size() * m, Vocabulary::kPad);
        batch.target_ids.assign(g.size() * m, Vocabulary::kPad);
        batch.target_mask.assign(g.size() * m, 0);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const auto& s = src_ids[g[k]];
            const auto& t = trg_ids[g[k]];
            for (std::size_t i = 0; i < s.size(); ++i) {
                batch.token_ids[k * n + i] = s[i];
                batch.pad_mask[k * n + i] = 1;
            }
            batch.token_ids[k * n + s.size()] = Vocabulary::kEos;
            batch.pad_mask[k * n + s.size()] = 1;
            batch.decoder_input_ids[k * m] = Vocabulary::kBos;
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (i + 1 < m) batch.decoder_input_ids[k * m + i + 1] = t[i];
                batch.target_ids[k * m + i] = t[i];
                batch.target_mask[k * m + i] = 1;
            }
            batch.target_ids[k * m + t.size()] = Vocabulary::kEos;
            batch.target_mask[k * m + t.size()] = 1;
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

} // namespace atcl
