#include "atcl/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "atcl/common.hpp"

namespace atcl {

namespace {
const char* kSpecialNames[4] = {"<pad>", "<unk>", "<bos>", "<eos>"};
}

std::vector<std::string> split_whitespace(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.emplace_back(line.substr(start, i - start));
    }
    return out;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

int Vocabulary::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    require(id >= 0 && static_cast<std::size_t>(id) < tokens.size(),
            "vocabulary: token id out of range");
    return tokens[static_cast<std::size_t>(id)];
}

bool Vocabulary::is_restricted_candidate(std::string_view token) {
    if (token.size() < 2) return false;
    for (const char* s : kSpecialNames)
        if (token == s) return false;
    if (token.substr(0, 2) == kContinuationMarker) return false;
    for (char c : token)
        if (!std::isalpha(static_cast<unsigned char>(c))) return false;
    return true;
}

void Vocabulary::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < tokens.size(); ++i)
        index_[tokens[i]] = static_cast<int>(i);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& sentences,
                             std::uint64_t min_frequency) {
    std::vector<std::vector<std::string>> lists;
    lists.reserve(sentences.size());
    for (const auto& s : sentences) lists.push_back(split_whitespace(s));
    return build_from_token_lists(lists, min_frequency);
}

Vocabulary Vocabulary::build_from_token_lists(
    const std::vector<std::vector<std::string>>& token_lists,
    std::uint64_t min_frequency) {
    require(!token_lists.empty(), "build_vocab: empty corpus");
    require(min_frequency >= 1, "build_vocab: min_frequency must be >= 1");

    std::map<std::string, std::uint64_t> counts;
    for (const auto& toks : token_lists)
        for (const auto& t : toks) ++counts[t];

    std::vector<std::pair<std::string, std::uint64_t>> kept;
    std::uint64_t unk_count = 0;
    for (const auto& [tok, c] : counts) {
        bool special = false;
        for (const char* s : kSpecialNames) special = special || tok == s;
        if (special) continue; // specials get fixed slots below
        if (c >= min_frequency) kept.emplace_back(tok, c);
        else unk_count += c;
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    for (const char* s : kSpecialNames) {
        v.tokens.emplace_back(s);
        v.frequencies.push_back(0);
    }
    v.frequencies[kUnk] = unk_count;
    for (auto& [tok, c] : kept) {
        v.tokens.push_back(std::move(tok));
        v.frequencies.push_back(c);
    }
    v.restricted.resize(v.tokens.size());
    for (std::size_t i = 0; i < v.tokens.size(); ++i)
        v.restricted[i] = i >= 4 && is_restricted_candidate(v.tokens[i]);
    v.rebuild_index();
    return v;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write vocabulary file: " + path);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        out << tokens[i] << '\t' << frequencies[i] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    Vocabulary v;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        require(tab != std::string::npos, "vocabulary file: missing tab separator");
        v.tokens.push_back(line.substr(0, tab));
        v.frequencies.push_back(std::stoull(line.substr(tab + 1)));
    }
    require(v.tokens.size() >= 4, "vocabulary file: fewer than four entries");
    for (int i = 0; i < 4; ++i)
        require(v.tokens[static_cast<std::size_t>(i)] == kSpecialNames[i],
                "vocabulary file: first four lines must be the special tokens");
    v.restricted.resize(v.tokens.size());
    for (std::size_t i = 0; i < v.tokens.size(); ++i)
        v.restricted[i] = i >= 4 && is_restricted_candidate(v.tokens[i]);
    v.rebuild_index();
    return v;
}

} // namespace atcl
