#include "atcl/probes.hpp"

#include <algorithm>
#include <cmath>

#include "atcl/ops.hpp"

namespace atcl {

namespace {

// single-sentence LM batch with one-step-ahead targets inside the window
Batch window_batch(const std::vector<int>& ids, int final_target) {
    Batch b;
    b.batch_size = 1;
    b.seq_len = ids.size();
    b.target_len = ids.size();
    b.token_ids = ids;
    b.pad_mask.assign(ids.size(), 1);
    b.target_ids.resize(ids.size());
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) b.target_ids[i] = ids[i + 1];
    b.target_ids.back() = final_target;
    b.target_mask.assign(ids.size(), 1);
    return b;
}

std::vector<double> row_log_softmax(const TensorPtr& logits, std::size_t row) {
    const std::size_t V = logits->shape[1];
    const double* z = logits->value.data() + row * V;
    const double lse = log_sum_exp(z, V);
    std::vector<double> lp(V);
    for (std::size_t j = 0; j < V; ++j) lp[j] = z[j] - lse;
    return lp;
}

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(
        std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<double> embed_rows(const TransformerModel& model,
                               const std::vector<int>& ids) {
    const std::size_t D = model.config().d_model;
    const auto& E = model.embedding()->value;
    std::vector<double> rows(ids.size() * D);
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(E.data() + static_cast<std::size_t>(ids[i]) * D, D,
                    rows.data() + i * D);
    return rows;
}

} // namespace

double perplexity(const TransformerModel& model, const std::vector<int>& stream,
                  std::size_t seq_len) {
    require(seq_len >= 2, "perplexity: seq_len must be >= 2");
    const std::size_t window = seq_len + 1;
    require(stream.size() >= window, "perplexity: corpus shorter than one window");
    const std::size_t n_windows = stream.size() / window;

    double total_nll = 0.0;
    std::size_t total_count = 0;
    const std::size_t chunk = 16;
    for (std::size_t start = 0; start < n_windows; start += chunk) {
        const std::size_t b = std::min(chunk, n_windows - start);
        Batch batch;
        batch.batch_size = b;
        batch.seq_len = seq_len;
        batch.target_len = seq_len;
        batch.token_ids.resize(b * seq_len);
        batch.pad_mask.assign(b * seq_len, 1);
        batch.target_ids.resize(b * seq_len);
        batch.target_mask.assign(b * seq_len, 1);
        for (std::size_t k = 0; k < b; ++k) {
            const std::size_t w = (start + k) * window;
            for (std::size_t i = 0; i < seq_len; ++i) {
                batch.token_ids[k * seq_len + i] = stream[w + i];
                batch.target_ids[k * seq_len + i] = stream[w + i + 1];
            }
        }
        auto res = model.lm_forward(batch);
        total_nll += res.loss->scalar() * double(res.valid_count);
        total_count += res.valid_count;
    }
    return std::exp(total_nll / double(total_count));
}

std::vector<int> greedy_translate(const TransformerModel& model,
                                  const std::vector<int>& src_ids,
                                  std::size_t max_len_out) {
    require(!src_ids.empty(), "greedy_translate: empty source");
    std::vector<int> out;
    for (std::size_t step = 0; step < max_len_out; ++step) {
        Batch b;
        b.batch_size = 1;
        b.seq_len = src_ids.size() + 1;
        b.token_ids = src_ids;
        b.token_ids.push_back(Vocabulary::kEos);
        b.pad_mask.assign(b.seq_len, 1);
        b.target_len = out.size() + 1;
        b.decoder_input_ids.assign(1, Vocabulary::kBos);
        b.decoder_input_ids.insert(b.decoder_input_ids.end(), out.begin(), out.end());
        b.target_ids.assign(b.target_len, 0); // dummy labels, loss ignored
        b.target_mask.assign(b.target_len, 1);
        auto res = model.seq2seq_forward(b);
        const auto lp = row_log_softmax(res.logits, b.target_len - 1);
        const int next = static_cast<int>(argmax(lp));
        if (next == Vocabulary::kEos) break;
        out.push_back(next);
    }
    return out;
}

std::vector<Neighbor> nearest_neighbors(const TransformerModel& model,
                                        const Vocabulary& vocab,
                                        const std::string& word, std::size_t k) {
    require(k < vocab.size(), "nearest_neighbors: k must be smaller than the vocabulary");
    const int qid = vocab.id(word);
    require(vocab.token(qid) == word, "nearest_neighbors: word not in vocabulary");

    const std::size_t D = model.config().d_model;
    const auto& E = model.embedding()->value;
    const double* q = E.data() + static_cast<std::size_t>(qid) * D;
    std::vector<Neighbor> all;
    for (std::size_t i = 4; i < vocab.size(); ++i) { // specials excluded
        if (static_cast<int>(i) == qid) continue;
        const double* e = E.data() + i * D;
        double d2 = 0.0;
        for (std::size_t j = 0; j < D; ++j) d2 += (q[j] - e[j]) * (q[j] - e[j]);
        all.push_back({vocab.tokens[i], std::sqrt(d2)});
    }
    std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.token < b.token;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

AttackReport targeted_attack_completion(const TransformerModel& model,
                                        const Vocabulary& vocab,
                                        const std::vector<std::string>& sentence,
                                        std::size_t target_position, double epsilon,
                                        FgmSign sign, std::size_t max_new_tokens) {
    require(!sentence.empty(), "targeted_attack: empty sentence");
    require(target_position < sentence.size(), "targeted_attack: position out of range");
    require(max_new_tokens >= 1, "targeted_attack: need at least one new token");
    std::vector<int> ids;
    for (const auto& t : sentence) ids.push_back(vocab.id(t));
    const int tid = ids[target_position];
    require(vocab.restricted[static_cast<std::size_t>(tid)],
            "targeted_attack: target token does not satisfy the candidate mask");

    const std::size_t D = model.config().d_model;
    AttackReport report;
    std::vector<double> rows = embed_rows(model, ids);
    if (epsilon > 0.0) {
        auto batch = window_batch(ids, Vocabulary::kEos);
        auto clean = model.lm_forward(batch);
        backward(clean.loss);
        const double* g = clean.embedded->grad.data() + target_position * D;
        report.degenerate =
            !fgm_perturb(rows.data() + target_position * D, g, D, epsilon, sign);
    }

    double total_nll = 0.0;
    std::size_t generated = 0;
    std::vector<int> cur = ids;
    while (generated < max_new_tokens) {
        auto embedded = make_tensor({cur.size(), D}, rows);
        auto batch = window_batch(cur, Vocabulary::kEos);
        auto res = model.lm_forward(batch, nullptr, embedded);
        const auto lp = row_log_softmax(res.logits, cur.size() - 1);
        const int next = static_cast<int>(argmax(lp));
        total_nll += -lp[static_cast<std::size_t>(next)];
        ++generated;
        report.continuation.push_back(vocab.token(next));
        if (next == Vocabulary::kEos) break;
        cur.push_back(next);
        const auto& E = model.embedding()->value;
        rows.insert(rows.end(), E.begin() + static_cast<std::size_t>(next) * D,
                    E.begin() + static_cast<std::size_t>(next + 1) * D);
    }
    report.mean_nll = total_nll / double(generated);
    report.perplexity = std::exp(report.mean_nll);
    return report;
}

double robustness_divergence(const TransformerModel& model, const Vocabulary& vocab,
                             const std::vector<int>& stream, std::size_t seq_len,
                             double epsilon, std::size_t n_samples, Rng& rng,
                             FgmSign sign) {
    require(n_samples >= 1, "robustness_divergence: n_samples must be >= 1");
    const std::size_t window = seq_len + 1;
    require(stream.size() >= window, "robustness_divergence: corpus too short");
    const std::size_t n_windows = stream.size() / window;
    const std::size_t D = model.config().d_model;
    const std::size_t V = model.config().vocab_size;

    double total = 0.0;
    std::size_t collected = 0;
    std::vector<std::size_t> qualifying;
    for (std::size_t s = 0; s < n_samples; ++s) {
        // bounded retries to find a window holding a mask-qualifying token
        for (int attempt = 0; attempt < 64; ++attempt) {
            const std::size_t w = rng.uniform_index(n_windows);
            std::vector<int> ids(stream.begin() + w * window,
                                 stream.begin() + w * window + seq_len);
            qualifying.clear();
            for (std::size_t j = 0; j < seq_len; ++j)
                if (vocab.restricted[static_cast<std::size_t>(ids[j])])
                    qualifying.push_back(j);
            if (qualifying.empty()) continue;
            const std::size_t j = qualifying[rng.uniform_index(qualifying.size())];

            auto batch = window_batch(ids, stream[w * window + seq_len]);
            auto clean = model.lm_forward(batch);
            std::vector<double> p(clean.logits->value.data() + j * V,
                                  clean.logits->value.data() + (j + 1) * V);
            softmax_inplace(p.data(), V);

            double kl = 0.0;
            if (epsilon > 0.0) {
                backward(clean.loss);
                std::vector<double> rows = embed_rows(model, ids);
                const double* g = clean.embedded->grad.data() + j * D;
                if (fgm_perturb(rows.data() + j * D, g, D, epsilon, sign)) {
                    auto embedded = make_tensor({seq_len, D}, std::move(rows));
                    auto pert = model.lm_forward(batch, nullptr, embedded);
                    std::vector<double> q(pert.logits->value.data() + j * V,
                                          pert.logits->value.data() + (j + 1) * V);
                    softmax_inplace(q.data(), V);
                    for (std::size_t i = 0; i < V; ++i)
                        if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
                }
            }
            total += kl;
            ++collected;
            break;
        }
    }
    require(collected > 0, "robustness_divergence: no qualifying samples found");
    return total / double(collected);
}

} // namespace atcl
