#ifndef ATCL_VOCAB_HPP
#define ATCL_VOCAB_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace atcl {

// Non-initial subword pieces carry this prefix; complete words never do.
inline constexpr const char* kContinuationMarker = "@@";

// Ordered token inventory. Ids 0..3 are always the special tokens, which
// are never members of the restricted (perturbable) subset.
class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;

    std::vector<std::string> tokens;
    std::vector<std::uint64_t> frequencies;
    std::vector<std::uint8_t> restricted; // true iff token is in V_R

    std::size_t size() const { return tokens.size(); }

    // Unknown strings map to the unk id.
    int id(std::string_view token) const;
    const std::string& token(int id) const;

    // Pure per-type rule for membership in the restricted subset: all
    // characters alphabetic, length >= 2, not a continuation subword, not a
    // special token. Excludes lone characters, symbols, numbers, mixed
    // strings like "Z." and marked subword pieces.
    static bool is_restricted_candidate(std::string_view token);

    // Frequency-sorted vocabulary (descending count, ties lexicographic);
    // tokens under min_frequency fold into unk.
    static Vocabulary build(const std::vector<std::string>& sentences,
                            std::uint64_t min_frequency);
    static Vocabulary build_from_token_lists(
        const std::vector<std::vector<std::string>>& token_lists,
        std::uint64_t min_frequency);

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

  private:
    std::unordered_map<std::string, int> index_;
    void rebuild_index();
};

std::vector<std::string> split_whitespace(std::string_view line);
std::vector<std::string> read_lines(const std::string& path);

} // namespace atcl

#endif
