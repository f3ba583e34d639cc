#include "atcl/bpe.hpp"

#include <fstream>
#include <unordered_map>

#include "atcl/common.hpp"
#include "atcl/vocab.hpp"

namespace atcl {

namespace {

std::vector<std::string> word_symbols(const std::string& word) {
    std::vector<std::string> syms;
    for (char c : word) syms.emplace_back(1, c);
    syms.emplace_back(kEndOfWord);
    return syms;
}

void merge_in_place(std::vector<std::string>& syms,
                    const std::pair<std::string, std::string>& pair) {
    std::vector<std::string> out;
    out.reserve(syms.size());
    std::size_t i = 0;
    while (i < syms.size()) {
        if (i + 1 < syms.size() && syms[i] == pair.first && syms[i + 1] == pair.second) {
            out.push_back(syms[i] + syms[i + 1]);
            i += 2;
        } else {
            out.push_back(syms[i]);
            ++i;
        }
    }
    syms = std::move(out);
}

struct PairHash {
    std::size_t operator()(const std::pair<std::string, std::string>& p) const {
        std::hash<std::string> h;
        return h(p.first) * 1000003u ^ h(p.second);
    }
};

} // namespace

MergeTable bpe_train(const std::map<std::string, std::uint64_t>& word_counts,
                     std::size_t num_merges) {
    std::vector<std::pair<std::vector<std::string>, std::uint64_t>> words;
    words.reserve(word_counts.size());
    for (const auto& [w, c] : word_counts)
        if (!w.empty()) words.emplace_back(word_symbols(w), c);

    MergeTable table;
    for (std::size_t it = 0; it < num_merges; ++it) {
        // pair frequencies across the working corpus
        std::map<std::pair<std::string, std::string>, std::uint64_t> pair_counts;
        for (const auto& [syms, c] : words)
            for (std::size_t i = 0; i + 1 < syms.size(); ++i)
                pair_counts[{syms[i], syms[i + 1]}] += c;
        if (pair_counts.empty()) break;

        // highest count; ties resolved by lexicographic pair order, which the
        // std::map iteration order supplies for free
        std::pair<std::string, std::string> best;
        std::uint64_t best_count = 0;
        for (const auto& [p, c] : pair_counts) {
            if (c > best_count) {
                best = p;
                best_count = c;
            }
        }
        for (auto& [syms, c] : words) {
            (void)c;
            merge_in_place(syms, best);
        }
        table.merges.push_back(best);
    }
    return table;
}

std::vector<std::string> bpe_encode(const std::string& word, const MergeTable& merges) {
    if (word.empty()) return {};
    std::unordered_map<std::pair<std::string, std::string>, std::size_t, PairHash> rank;
    for (std::size_t i = 0; i < merges.merges.size(); ++i)
        rank.emplace(merges.merges[i], i);

    auto syms = word_symbols(word);
    while (syms.size() > 1) {
        std::size_t best_rank = merges.merges.size();
        for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
            auto it = rank.find({syms[i], syms[i + 1]});
            if (it != rank.end() && it->second < best_rank) best_rank = it->second;
        }
        if (best_rank == merges.merges.size()) break;
        merge_in_place(syms, merges.merges[best_rank]);
    }

    // internal symbols -> surface pieces
    std::vector<std::string> pieces;
    const std::string eow = kEndOfWord;
    for (auto& s : syms) {
        if (s == eow) continue;
        if (s.size() > eow.size() && s.compare(s.size() - eow.size(), eow.size(), eow) == 0)
            s.resize(s.size() - eow.size());
        if (!s.empty()) pieces.push_back(std::move(s));
    }
    for (std::size_t i = 1; i < pieces.size(); ++i)
        pieces[i] = std::string(kContinuationMarker) + pieces[i];
    return pieces;
}

std::vector<std::string> bpe_decode(const std::vector<std::string>& pieces) {
    std::vector<std::string> words;
    const std::string marker = kContinuationMarker;
    for (const auto& p : pieces) {
        if (p.size() >= marker.size() && p.compare(0, marker.size(), marker) == 0 &&
            !words.empty()) {
            words.back() += p.substr(marker.size());
        } else {
            words.push_back(p);
        }
    }
    return words;
}

void MergeTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write merge table: " + path);
    for (const auto& [l, r] : merges) out << l << ' ' << r << '\n';
}

MergeTable MergeTable::load(const std::string& path) {
    MergeTable t;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        auto sp = line.find(' ');
        require(sp != std::string::npos, "merge table: malformed line");
        t.merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
    }
    return t;
}

} // namespace atcl
