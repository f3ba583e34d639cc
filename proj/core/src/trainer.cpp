#include "atcl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "atcl/bleu.hpp"
#include "atcl/checkpoint.hpp"
#include "atcl/ops.hpp"
#include "atcl/probes.hpp"

namespace atcl {

namespace {

ModelConfig model_config_of(const TrainConfig& cfg, std::size_t vocab_size) {
    ModelConfig mc;
    mc.vocab_size = vocab_size;
    mc.d_model = cfg.d_model;
    mc.n_heads = cfg.n_heads;
    mc.n_layers = cfg.n_layers;
    mc.n_enc_layers = cfg.n_enc_layers;
    mc.n_dec_layers = cfg.n_dec_layers;
    mc.d_ff = cfg.d_ff;
    mc.max_len = cfg.max_len;
    mc.seq2seq = cfg.task == TaskKind::Nmt;
    mc.validate();
    return mc;
}

std::string fmt_real(double d) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    return buf;
}

// Per-sentence masked-mean weights over the flattened target rows.
std::vector<double> pooling_weights(const Batch& batch, std::size_t sentence) {
    const std::size_t M = batch.target_len;
    std::vector<double> w(batch.batch_size * M, 0.0);
    std::size_t len = 0;
    for (std::size_t i = 0; i < M; ++i)
        if (batch.target_mask[sentence * M + i]) ++len;
    if (len == 0) return w;
    for (std::size_t i = 0; i < M; ++i)
        if (batch.target_mask[sentence * M + i])
            w[sentence * M + i] = 1.0 / double(len);
    return w;
}

} // namespace

Trainer::Trainer(const TrainConfig& cfg, const Vocabulary& vocab)
    : cfg_(cfg),
      vocab_(vocab),
      adv_rng_(named_stream(cfg.seed, "adversarial")) {
    cfg_.validate();
    model_ = std::make_unique<TransformerModel>(model_config_of(cfg_, vocab.size()),
                                                cfg_.seed);
    AdamConfig ac;
    ac.learning_rate = cfg_.learning_rate;
    ac.beta1 = cfg_.beta1;
    ac.beta2 = cfg_.beta2;
    ac.epsilon = cfg_.adam_epsilon;
    adam_ = std::make_unique<Adam>(model_->parameters(), ac);
}

StepRecord Trainer::atcl_step(const Batch& batch) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    StepRecord rec;
    const bool is_nmt = cfg_.task == TaskKind::Nmt;
    const double beta_eff = cfg_.mode == TrainMode::AdvOnly ? 0.0 : cfg_.beta;
    // With both weights at zero the step must be indistinguishable from a
    // baseline step, down to random-stream positions.
    const bool adversarial_active = cfg_.mode != TrainMode::Baseline &&
                                    !(cfg_.alpha == 0.0 && beta_eff == 0.0);

    TensorPtr clean_loss, clean_embedded, clean_anchor_h, clean_dec_h;
    TensorPtr j;

    if (is_nmt) {
        auto res = model_->seq2seq_forward(batch);
        clean_loss = res.loss;
        clean_embedded = res.src_embedded;
        clean_anchor_h = res.enc_hidden;
        clean_dec_h = res.dec_hidden;
    } else {
        auto res = model_->lm_forward(batch);
        clean_loss = res.loss;
        clean_embedded = res.embedded;
        clean_anchor_h = res.hidden;
    }
    rec.loss = clean_loss->scalar();
    j = clean_loss;

    if (adversarial_active) {
        backward(clean_loss); // per-position embedding gradients
        AdversarialPlan plan = select_candidates(batch, vocab_, adv_rng_,
                                                 cfg_.epsilon, cfg_.fgm_sign);
        TensorPtr adv_embedded = build_adversarial_batch(
            clean_embedded, batch.batch_size, batch.seq_len, plan);
        for (const auto& s : plan.sentences)
            if (s.position && s.degenerate) ++rec.degenerate_count;
        rec.active_candidates = plan.active_count();

        if (rec.active_candidates > 0) {
            // Adversarial loss counts only sentences that actually carry a
            // perturbation.
            const std::size_t M = batch.target_len;
            std::vector<std::uint8_t> adv_valid(batch.batch_size * M, 0);
            for (std::size_t b = 0; b < batch.batch_size; ++b) {
                const auto& s = plan.sentences[b];
                if (!s.position || s.degenerate) continue;
                for (std::size_t i = 0; i < M; ++i)
                    adv_valid[b * M + i] = batch.target_mask[b * M + i];
            }

            TensorPtr adv_loss, adv_anchor_h, adv_dec_h;
            if (is_nmt) {
                auto res = model_->seq2seq_forward(batch, &adv_valid, adv_embedded);
                adv_loss = res.loss;
                adv_anchor_h = res.enc_hidden;
                adv_dec_h = res.dec_hidden;
            } else {
                auto res = model_->lm_forward(batch, &adv_valid, adv_embedded);
                adv_loss = res.loss;
                adv_anchor_h = res.hidden;
            }
            rec.adv_loss = adv_loss->scalar();
            if (cfg_.alpha != 0.0) j = add(j, scale(adv_loss, cfg_.alpha));

            if (beta_eff != 0.0 && rec.active_candidates >= 2) {
                TensorPtr con_loss;
                const bool decoder_side =
                    is_nmt && cfg_.contrastive_side == ContrastiveSide::Decoder;
                if (decoder_side) {
                    // Sentence-level anchors: masked mean over decoder rows.
                    std::vector<std::size_t> active;
                    for (std::size_t b = 0; b < batch.batch_size; ++b)
                        if (plan.sentences[b].position && !plan.sentences[b].degenerate)
                            active.push_back(b);
                    std::vector<TensorPtr> clean_pool(batch.batch_size),
                        adv_pool(batch.batch_size);
                    for (std::size_t b : active) {
                        auto w = pooling_weights(batch, b);
                        clean_pool[b] = weighted_row_sum(clean_dec_h, w);
                        adv_pool[b] = weighted_row_sum(adv_dec_h, w);
                    }
                    TensorPtr sum;
                    for (std::size_t b : active) {
                        auto neg = sample_negatives(active, b, cfg_.n_negatives,
                                                    adv_rng_);
                        // negatives come from the clean batch, as in the
                        // token-level case
                        std::vector<TensorPtr> negatives;
                        for (std::size_t nb : neg.rows)
                            negatives.push_back(clean_pool[nb]);
                        auto term = info_nce(clean_pool[b], adv_pool[b], negatives,
                                             cfg_.tau,
                                             cfg_.include_positive_in_denominator);
                        sum = sum ? add(sum, term) : term;
                    }
                    con_loss = scale(sum, 1.0 / double(active.size()));
                } else {
                    // Token-level anchors at the perturbed positions, paired
                    // across the clean and perturbed final representations.
                    std::vector<std::size_t> anchor_rows;
                    for (std::size_t b = 0; b < batch.batch_size; ++b) {
                        const auto& s = plan.sentences[b];
                        if (s.position && !s.degenerate)
                            anchor_rows.push_back(b * batch.seq_len + *s.position);
                    }
                    std::vector<ContrastiveAnchor> anchors;
                    for (std::size_t row : anchor_rows) {
                        auto neg = sample_negatives(anchor_rows, row,
                                                    cfg_.n_negatives, adv_rng_);
                        anchors.push_back({row, std::move(neg.rows)});
                    }
                    con_loss = contrastive_loss(clean_anchor_h, adv_anchor_h,
                                                anchors, cfg_.tau,
                                                cfg_.include_positive_in_denominator);
                }
                rec.con_loss = con_loss->scalar();
                j = add(j, scale(con_loss, beta_eff));
            }
        }
    }

    rec.objective = j->scalar();
    if (!std::isfinite(rec.objective))
        throw NumericAbort("training step produced a non-finite objective");
    backward(j);
    adam_->step();

    rec.step = step_;
    if (cfg_.timing)
        rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          clock::now() - t0)
                          .count();
    return rec;
}

void Trainer::set_lm_data(std::vector<int> train_stream, std::vector<int> valid_stream) {
    lm_train_ = std::move(train_stream);
    lm_valid_ = std::move(valid_stream);
}

void Trainer::set_nmt_data(std::vector<std::vector<int>> train_src,
                           std::vector<std::vector<int>> train_trg,
                           std::vector<std::vector<int>> valid_src,
                           std::vector<std::vector<int>> valid_trg) {
    nmt_train_src_ = std::move(train_src);
    nmt_train_trg_ = std::move(train_trg);
    nmt_valid_src_ = std::move(valid_src);
    nmt_valid_trg_ = std::move(valid_trg);
}

std::vector<Batch> Trainer::epoch_batches(std::uint64_t epoch) const {
    const std::uint64_t shuffle_seed =
        named_stream(cfg_.seed, "batching", epoch).next_u64();
    if (cfg_.task == TaskKind::Lm)
        return make_lm_batches(lm_train_, cfg_.batch_size, cfg_.seq_len, shuffle_seed);
    return make_nmt_batches(nmt_train_src_, nmt_train_trg_, cfg_.batch_size,
                            shuffle_seed);
}

double Trainer::validation_perplexity() const {
    return perplexity(*model_, lm_valid_, cfg_.seq_len);
}

double Trainer::validation_bleu(const Vocabulary& vocab) const {
    std::vector<std::vector<std::string>> hyp, ref;
    const std::size_t cap = std::min<std::size_t>(64, cfg_.max_len - 1);
    for (std::size_t s = 0; s < nmt_valid_src_.size(); ++s) {
        auto out = greedy_translate(*model_, nmt_valid_src_[s], cap);
        std::vector<std::string> h, r;
        for (int id : out) h.push_back(vocab.token(id));
        for (int id : nmt_valid_trg_[s]) r.push_back(vocab.token(id));
        hyp.push_back(std::move(h));
        ref.push_back(std::move(r));
    }
    return corpus_bleu(hyp, ref).score;
}

std::string format_metrics_line(const StepRecord& rec, const double* ppl,
                                const double* bleu) {
    std::string line = "{\"step\":" + std::to_string(rec.step);
    line += ",\"L\":" + fmt_real(rec.loss);
    line += ",\"L_adv\":" + fmt_real(rec.adv_loss);
    line += ",\"L_cont\":" + fmt_real(rec.con_loss);
    line += ",\"J\":" + fmt_real(rec.objective);
    if (ppl) line += ",\"ppl\":" + fmt_real(*ppl);
    if (bleu) line += ",\"bleu\":" + fmt_real(*bleu);
    line += ",\"wall_ms\":" + std::to_string(rec.wall_ms);
    line += "}";
    return line;
}

void Trainer::save_training_state(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write training state: " + path);
    out << "ATCLS1\n";
    auto put_u64 = [&](std::uint64_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    };
    put_u64(step_);
    put_u64(epoch_);
    put_u64(epoch_pos_);
    for (int i = 0; i < 4; ++i) put_u64(adv_rng_.state()[i]);
    adam_->save(out);
    if (!out) throw IoError("failed while writing training state: " + path);
}

void Trainer::load_training_state(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read training state: " + path);
    std::string magic(7, '\0');
    in.read(magic.data(), 7);
    require(in && magic == "ATCLS1\n", "training state: bad header in " + path);
    auto get_u64 = [&]() {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof v);
        return v;
    };
    step_ = get_u64();
    epoch_ = get_u64();
    epoch_pos_ = get_u64();
    std::uint64_t st[4];
    for (auto& v : st) v = get_u64();
    adv_rng_.set_state(st);
    adam_->load(in);
    if (!in) throw IoError("truncated training state: " + path);
}

void Trainer::run() {
    const bool is_nmt = cfg_.task == TaskKind::Nmt;
    if (!cfg_.resume_path.empty()) {
        load_checkpoint(*model_, cfg_.resume_path);
        load_training_state(cfg_.resume_path + ".state");
    }

    std::ofstream metrics(cfg_.metrics_path, std::ios::app);
    if (!metrics) throw IoError("cannot open metrics log: " + cfg_.metrics_path);
    if (step_ == 0)
        for (const auto& [k, v] : cfg_.items())
            metrics << "# " << k << " = " << v << "\n";

    auto checkpoint_now = [&]() {
        save_checkpoint(*model_, cfg_.checkpoint_path);
        save_training_state(cfg_.checkpoint_path + ".state");
    };

    while (step_ < cfg_.max_steps) {
        auto batches = epoch_batches(epoch_);
        require(!batches.empty(), "training: corpus produced no batches");
        while (epoch_pos_ < batches.size() && step_ < cfg_.max_steps) {
            auto rec = atcl_step(batches[epoch_pos_]);
            ++epoch_pos_;
            ++step_;
            rec.step = step_;

            const bool eval_now =
                step_ % cfg_.eval_interval == 0 || step_ == cfg_.max_steps;
            double ppl = 0.0, bleu = 0.0;
            const double* ppl_p = nullptr;
            const double* bleu_p = nullptr;
            if (eval_now) {
                if (!is_nmt && !lm_valid_.empty()) {
                    ppl = validation_perplexity();
                    ppl_p = &ppl;
                } else if (is_nmt && !nmt_valid_src_.empty()) {
                    bleu = validation_bleu(vocab_);
                    bleu_p = &bleu;
                }
            }
            metrics << format_metrics_line(rec, ppl_p, bleu_p) << "\n";
            metrics.flush();
            if (!metrics) throw IoError("failed writing metrics log: " + cfg_.metrics_path);
            if (eval_now) checkpoint_now();
        }
        if (epoch_pos_ >= batches.size()) {
            ++epoch_;
            epoch_pos_ = 0;
        }
    }
    checkpoint_now();
}

} // namespace atcl
