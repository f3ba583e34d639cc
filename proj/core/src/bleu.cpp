#include "atcl/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "atcl/common.hpp"
#include "atcl/vocab.hpp"

namespace atcl {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& toks, std::size_t n) {
    NgramCounts counts;
    if (toks.size() < n) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i)
        ++counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
    return counts;
}

} // namespace

BleuResult corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                       const std::vector<std::vector<std::string>>& references) {
    require(hypotheses.size() == references.size(),
            "bleu: hypothesis/reference counts differ");
    require(!hypotheses.empty(), "bleu: empty corpus");

    std::size_t matched[4] = {0, 0, 0, 0};
    std::size_t total[4] = {0, 0, 0, 0};
    std::size_t hyp_len = 0, ref_len = 0;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        hyp_len += hypotheses[s].size();
        ref_len += references[s].size();
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto h = ngrams(hypotheses[s], n);
            const auto r = ngrams(references[s], n);
            for (const auto& [gram, c] : h) {
                total[n - 1] += c;
                auto it = r.find(gram);
                if (it != r.end()) matched[n - 1] += std::min(c, it->second);
            }
        }
    }

    BleuResult res;
    res.brevity_penalty =
        (hyp_len >= ref_len || hyp_len == 0)
            ? (hyp_len == 0 ? 0.0 : 1.0)
            : std::exp(1.0 - double(ref_len) / double(hyp_len));

    double log_sum = 0.0, log_sum_unsmoothed = 0.0;
    bool zero_unsmoothed = false;
    for (std::size_t n = 0; n < 4; ++n) {
        const double raw = total[n] ? double(matched[n]) / double(total[n]) : 0.0;
        res.precisions[n] = raw;
        double p = raw;
        if (matched[n] == 0) {
            if (n == 0) {
                // no unigram overlap: score is zero, smoothed or not
                res.score = 0.0;
                res.unsmoothed = 0.0;
                return res;
            }
            p = 1.0 / double(total[n] + 1); // add-one smoothing
            zero_unsmoothed = true;
        }
        log_sum += std::log(p) / 4.0;
        if (raw > 0.0) log_sum_unsmoothed += std::log(raw) / 4.0;
    }
    res.score = res.brevity_penalty * std::exp(log_sum);
    res.unsmoothed = zero_unsmoothed ? 0.0 : res.brevity_penalty * std::exp(log_sum_unsmoothed);
    return res;
}

BleuResult corpus_bleu_lines(const std::vector<std::string>& hypothesis_lines,
                             const std::vector<std::string>& reference_lines) {
    require(hypothesis_lines.size() == reference_lines.size(),
            "bleu: hypothesis/reference counts differ");
    std::vector<std::vector<std::string>> h, r;
    h.reserve(hypothesis_lines.size());
    r.reserve(reference_lines.size());
    for (const auto& l : hypothesis_lines) h.push_back(split_whitespace(l));
    for (const auto& l : reference_lines) r.push_back(split_whitespace(l));
    return corpus_bleu(h, r);
}

} // namespace atcl
