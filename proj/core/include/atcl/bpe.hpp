#ifndef ATCL_BPE_HPP
#define ATCL_BPE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace atcl {

// Internal end-of-word symbol used during merge training and encoding.
inline constexpr const char* kEndOfWord = "</w>";

// Ordered merge pairs; rank = position. Greedy highest-frequency training
// with lexicographic tie-breaking keeps builds deterministic.
struct MergeTable {
    std::vector<std::pair<std::string, std::string>> merges;

    void save(const std::string& path) const; // "left<space>right" per line
    static MergeTable load(const std::string& path);
};

MergeTable bpe_train(const std::map<std::string, std::uint64_t>& word_counts,
                     std::size_t num_merges);

// Word -> surface subword pieces. Non-initial pieces are prefixed with the
// continuation marker; the end-of-word symbol never leaks into the output.
std::vector<std::string> bpe_encode(const std::string& word, const MergeTable& merges);

// Inverse over a stream of surface pieces; returns the reassembled words.
std::vector<std::string> bpe_decode(const std::vector<std::string>& pieces);

} // namespace atcl

#endif
