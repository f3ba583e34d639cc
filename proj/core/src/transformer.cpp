#include "atcl/transformer.hpp"

#include <cmath>
#include <unordered_map>

#include "atcl/rng.hpp"

namespace atcl {

void ModelConfig::validate() const {
    require(vocab_size > 0, "model config: vocab_size must be positive");
    require(d_model > 0 && n_heads > 0, "model config: d_model/n_heads must be positive");
    require(d_model % n_heads == 0, "model config: d_model must be divisible by n_heads");
    require(max_len > 0, "model config: max_len must be positive");
    if (seq2seq)
        require(n_enc_layers > 0 && n_dec_layers > 0,
                "model config: encoder/decoder depth must be positive");
    else
        require(n_layers > 0, "model config: n_layers must be positive");
}

std::vector<std::uint8_t> causal_mask(std::size_t batch, std::size_t seq,
                                      const std::vector<std::uint8_t>& pad_mask) {
    std::vector<std::uint8_t> m(batch * seq * seq, 0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < seq; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                m[(b * seq + i) * seq + j] = pad_mask[b * seq + j];
    return m;
}

std::vector<std::uint8_t> causal_mask(const Batch& batch) {
    return causal_mask(batch.batch_size, batch.seq_len, batch.pad_mask);
}

std::vector<std::uint8_t> padding_mask(std::size_t batch, std::size_t q_seq,
                                       std::size_t k_seq,
                                       const std::vector<std::uint8_t>& key_pad_mask) {
    std::vector<std::uint8_t> m(batch * q_seq * k_seq, 0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < q_seq; ++i)
            for (std::size_t j = 0; j < k_seq; ++j)
                m[(b * q_seq + i) * k_seq + j] = key_pad_mask[b * k_seq + j];
    return m;
}

TensorPtr TransformerModel::add_param(const std::string& name, Shape shape,
                                      std::vector<double> values) {
    auto t = make_tensor(std::move(shape), std::move(values), true);
    params_.emplace_back(name, t);
    return t;
}

TransformerModel::TransformerModel(ModelConfig cfg, std::uint64_t init_seed)
    : cfg_(cfg) {
    cfg_.validate();
    Rng rng = named_stream(init_seed, "init");
    const std::size_t D = cfg_.d_model, V = cfg_.vocab_size, F = cfg_.ff_dim();
    const double bound = 1.0 / std::sqrt(double(D));

    auto uniform_vec = [&](std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform(-bound, bound);
        return v;
    };
    auto weight = [&](const std::string& name, std::size_t r, std::size_t c) {
        return add_param(name, {r, c}, uniform_vec(r * c));
    };
    auto bias = [&](const std::string& name, std::size_t n) {
        return add_param(name, {n}, std::vector<double>(n, 0.0));
    };
    auto ln = [&](const std::string& prefix) {
        add_param(prefix + ".gain", {D}, std::vector<double>(D, 1.0));
        add_param(prefix + ".shift", {D}, std::vector<double>(D, 0.0));
    };
    auto attn_params = [&](const std::string& prefix) {
        weight(prefix + ".wq", D, D);
        bias(prefix + ".bq", D);
        weight(prefix + ".wk", D, D);
        bias(prefix + ".bk", D);
        weight(prefix + ".wv", D, D);
        bias(prefix + ".bv", D);
        weight(prefix + ".wo", D, D);
        bias(prefix + ".bo", D);
    };
    auto ffn_params = [&](const std::string& prefix) {
        weight(prefix + ".w1", D, F);
        bias(prefix + ".b1", F);
        weight(prefix + ".w2", F, D);
        bias(prefix + ".b2", D);
    };

    weight("embed.E", V, D);
    if (!cfg_.seq2seq) {
        for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
            const std::string p = "lm." + std::to_string(l);
            ln(p + ".ln1");
            attn_params(p + ".self_attn");
            ln(p + ".ln2");
            ffn_params(p + ".ffn");
        }
        ln("lm.final_ln");
    } else {
        for (std::size_t l = 0; l < cfg_.n_enc_layers; ++l) {
            const std::string p = "enc." + std::to_string(l);
            ln(p + ".ln1");
            attn_params(p + ".self_attn");
            ln(p + ".ln2");
            ffn_params(p + ".ffn");
        }
        ln("enc.final_ln");
        for (std::size_t l = 0; l < cfg_.n_dec_layers; ++l) {
            const std::string p = "dec." + std::to_string(l);
            ln(p + ".ln1");
            attn_params(p + ".self_attn");
            ln(p + ".ln_cross");
            attn_params(p + ".cross_attn");
            ln(p + ".ln2");
            ffn_params(p + ".ffn");
        }
        ln("dec.final_ln");
    }
    weight("head.w", D, V);
    bias("head.b", V);

    // sinusoidal positions
    pos_table_.resize(cfg_.max_len * D);
    for (std::size_t p = 0; p < cfg_.max_len; ++p)
        for (std::size_t i = 0; i < D; ++i) {
            const double angle =
                double(p) / std::pow(10000.0, double(2 * (i / 2)) / double(D));
            pos_table_[p * D + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
}

const TensorPtr& TransformerModel::param(const std::string& name) const {
    for (const auto& [n, t] : params_)
        if (n == name) return t;
    throw InternalError("transformer: unknown parameter " + name);
}

TensorPtr TransformerModel::positional_block(std::size_t batch, std::size_t seq) const {
    require(seq <= cfg_.max_len, "transformer: sequence longer than max_len");
    const std::size_t D = cfg_.d_model;
    std::vector<double> v(batch * seq * D);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t n = 0; n < seq; ++n)
            for (std::size_t i = 0; i < D; ++i)
                v[(b * seq + n) * D + i] = pos_table_[n * D + i];
    return make_tensor({batch * seq, D}, std::move(v));
}

TensorPtr TransformerModel::attention_sublayer(
    const std::string& prefix, const TensorPtr& q_in, const TensorPtr& kv_in,
    std::size_t batch, std::size_t q_seq, std::size_t kv_seq,
    const std::vector<std::uint8_t>& mask) const {
    const std::size_t H = cfg_.n_heads;
    auto q = add_bias(matmul(q_in, param(prefix + ".wq")), param(prefix + ".bq"));
    auto k = add_bias(matmul(kv_in, param(prefix + ".wk")), param(prefix + ".bk"));
    auto v = add_bias(matmul(kv_in, param(prefix + ".wv")), param(prefix + ".bv"));
    auto att = attention(split_heads(q, batch, q_seq, H),
                         split_heads(k, batch, kv_seq, H),
                         split_heads(v, batch, kv_seq, H), mask, batch, H);
    auto merged = merge_heads(att, batch, q_seq, H);
    return add_bias(matmul(merged, param(prefix + ".wo")), param(prefix + ".bo"));
}

TensorPtr TransformerModel::encoder_stack(
    const std::string& prefix, std::size_t n_layers, TensorPtr x, std::size_t batch,
    std::size_t seq, const std::vector<std::uint8_t>& self_mask,
    const TensorPtr& cross_memory, std::size_t memory_seq,
    const std::vector<std::uint8_t>* cross_mask) const {
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::string p = prefix + "." + std::to_string(l);
        auto h = layer_norm(x, param(p + ".ln1.gain"), param(p + ".ln1.shift"));
        x = add(x, attention_sublayer(p + ".self_attn", h, h, batch, seq, seq, self_mask));
        if (cross_memory) {
            auto hc = layer_norm(x, param(p + ".ln_cross.gain"), param(p + ".ln_cross.shift"));
            x = add(x, attention_sublayer(p + ".cross_attn", hc, cross_memory, batch, seq,
                                          memory_seq, *cross_mask));
        }
        auto h2 = layer_norm(x, param(p + ".ln2.gain"), param(p + ".ln2.shift"));
        auto ff1 = relu(add_bias(matmul(h2, param(p + ".ffn.w1")), param(p + ".ffn.b1")));
        auto ff2 = add_bias(matmul(ff1, param(p + ".ffn.w2")), param(p + ".ffn.b2"));
        x = add(x, ff2);
    }
    return layer_norm(x, param(prefix + ".final_ln.gain"),
                      param(prefix + ".final_ln.shift"));
}

TransformerModel::LmResult TransformerModel::lm_forward(
    const Batch& batch, const std::vector<std::uint8_t>* target_valid,
    const TensorPtr& embedded_override) const {
    require(!cfg_.seq2seq, "lm_forward called on a seq2seq model");
    const std::size_t B = batch.batch_size, N = batch.seq_len;

    LmResult res;
    res.embedded = embedded_override ? embedded_override
                                     : embedding_lookup(embedding(), batch.token_ids);
    require(res.embedded->shape == Shape{B * N, cfg_.d_model},
            "lm_forward: embedded shape mismatch");
    auto x = add(res.embedded, positional_block(B, N));
    const auto mask = causal_mask(batch);
    res.hidden = encoder_stack("lm", cfg_.n_layers, x, B, N, mask, nullptr, 0, nullptr);
    res.logits = add_bias(matmul(res.hidden, param("head.w")), param("head.b"));

    const auto& valid = target_valid ? *target_valid : batch.target_mask;
    res.loss = cross_entropy_logits(res.logits, batch.target_ids, valid);
    for (auto v : valid) res.valid_count += v ? 1 : 0;
    return res;
}

TransformerModel::Seq2SeqResult TransformerModel::seq2seq_forward(
    const Batch& batch, const std::vector<std::uint8_t>* target_valid,
    const TensorPtr& src_embedded_override) const {
    require(cfg_.seq2seq, "seq2seq_forward called on an LM model");
    require(!batch.decoder_input_ids.empty(),
            "seq2seq_forward: batch has no target side");
    const std::size_t B = batch.batch_size, N = batch.seq_len, M = batch.target_len;

    Seq2SeqResult res;
    res.src_embedded = src_embedded_override
                           ? src_embedded_override
                           : embedding_lookup(embedding(), batch.token_ids);
    require(res.src_embedded->shape == Shape{B * N, cfg_.d_model},
            "seq2seq_forward: source embedded shape mismatch");
    auto x = add(res.src_embedded, positional_block(B, N));
    const auto enc_mask = padding_mask(B, N, N, batch.pad_mask);
    res.enc_hidden =
        encoder_stack("enc", cfg_.n_enc_layers, x, B, N, enc_mask, nullptr, 0, nullptr);

    auto y = embedding_lookup(embedding(), batch.decoder_input_ids);
    auto yd = add(y, positional_block(B, M));
    const auto self_mask = causal_mask(B, M, batch.target_mask);
    const auto cross_mask = padding_mask(B, M, N, batch.pad_mask);
    res.dec_hidden = encoder_stack("dec", cfg_.n_dec_layers, yd, B, M, self_mask,
                                   res.enc_hidden, N, &cross_mask);
    res.logits = add_bias(matmul(res.dec_hidden, param("head.w")), param("head.b"));

    const auto& valid = target_valid ? *target_valid : batch.target_mask;
    res.loss = cross_entropy_logits(res.logits, batch.target_ids, valid);
    for (auto v : valid) res.valid_count += v ? 1 : 0;
    return res;
}

} // namespace atcl
