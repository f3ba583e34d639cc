#ifndef ATCL_BLEU_HPP
#define ATCL_BLEU_HPP

#include <string>
#include <vector>

namespace atcl {

struct BleuResult {
    double score = 0.0;      // smoothed, in [0, 1]
    double unsmoothed = 0.0; // zero when any n-gram precision is zero
    double precisions[4] = {0, 0, 0, 0};
    double brevity_penalty = 1.0;
};

// Corpus-level BLEU-4 with brevity penalty against a single reference per
// hypothesis. Zero higher-order precisions (n >= 2) get add-one smoothing;
// a zero unigram precision zeroes the score outright.
BleuResult corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                       const std::vector<std::vector<std::string>>& references);

// Whitespace-tokenizing convenience over raw lines.
BleuResult corpus_bleu_lines(const std::vector<std::string>& hypothesis_lines,
                             const std::vector<std::string>& reference_lines);

} // namespace atcl

#endif
