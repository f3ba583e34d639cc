#ifndef ATCL_TRANSFORMER_HPP
#define ATCL_TRANSFORMER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "atcl/batching.hpp"
#include "atcl/ops.hpp"
#include "atcl/tensor.hpp"

namespace atcl {

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t d_model = 64;
    std::size_t n_heads = 2;
    std::size_t n_layers = 2;     // LM depth
    std::size_t n_enc_layers = 3; // NMT
    std::size_t n_dec_layers = 3;
    std::size_t d_ff = 0; // 0 -> 4 * d_model
    std::size_t max_len = 512;
    bool seq2seq = false;

    std::size_t ff_dim() const { return d_ff ? d_ff : 4 * d_model; }
    void validate() const;
};

// Pre-LN transformer with sinusoidal positions. Parameters are plain leaf
// tensors enumerated in a fixed canonical order; forward passes build a
// fresh graph every call. Embedding and output head are separate tensors.
class TransformerModel {
  public:
    TransformerModel(ModelConfig cfg, std::uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }
    const std::vector<std::pair<std::string, TensorPtr>>& parameters() const {
        return params_;
    }
    const TensorPtr& param(const std::string& name) const;
    const TensorPtr& embedding() const { return params_.front().second; }

    struct LmResult {
        TensorPtr embedded; // B*N x D lookup output; per-position grads live here
        TensorPtr hidden;   // B*N x D, the pre-softmax representation H
        TensorPtr logits;   // B*N x V
        TensorPtr loss;     // mean NLL over valid positions (null if none requested)
        std::size_t valid_count = 0;
    };
    // target_valid limits which positions enter the loss (defaults to the
    // batch target mask). embedded_override substitutes a constant embedding
    // tensor for the lookup: the adversarial second pass.
    LmResult lm_forward(const Batch& batch,
                        const std::vector<std::uint8_t>* target_valid = nullptr,
                        const TensorPtr& embedded_override = nullptr) const;

    struct Seq2SeqResult {
        TensorPtr src_embedded; // B*N x D
        TensorPtr enc_hidden;   // B*N x D
        TensorPtr dec_hidden;   // B*M x D
        TensorPtr logits;       // B*M x V
        TensorPtr loss;
        std::size_t valid_count = 0;
    };
    Seq2SeqResult seq2seq_forward(const Batch& batch,
                                  const std::vector<std::uint8_t>* target_valid = nullptr,
                                  const TensorPtr& src_embedded_override = nullptr) const;

    // Constant B x N positional-encoding block as a leaf tensor.
    TensorPtr positional_block(std::size_t batch, std::size_t seq) const;

  private:
    ModelConfig cfg_;
    std::vector<std::pair<std::string, TensorPtr>> params_;
    std::vector<double> pos_table_; // max_len x d_model

    TensorPtr add_param(const std::string& name, Shape shape,
                        std::vector<double> values);
    TensorPtr encoder_stack(const std::string& prefix, std::size_t n_layers,
                            TensorPtr x, std::size_t batch, std::size_t seq,
                            const std::vector<std::uint8_t>& self_mask,
                            const TensorPtr& cross_memory,
                            std::size_t memory_seq,
                            const std::vector<std::uint8_t>* cross_mask) const;
    TensorPtr attention_sublayer(const std::string& prefix, const TensorPtr& q_in,
                                 const TensorPtr& kv_in, std::size_t batch,
                                 std::size_t q_seq, std::size_t kv_seq,
                                 const std::vector<std::uint8_t>& mask) const;
};

// Causal mask restricted to unpadded keys: entry (b, i, j) = [j <= i && key j real].
std::vector<std::uint8_t> causal_mask(const Batch& batch);
std::vector<std::uint8_t> causal_mask(std::size_t batch, std::size_t seq,
                                      const std::vector<std::uint8_t>& pad_mask);
// Bidirectional mask over unpadded keys, B x Nq x Nk.
std::vector<std::uint8_t> padding_mask(std::size_t batch, std::size_t q_seq,
                                       std::size_t k_seq,
                                       const std::vector<std::uint8_t>& key_pad_mask);

} // namespace atcl

#endif
