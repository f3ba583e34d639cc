#ifndef ATCL_CONFIG_HPP
#define ATCL_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "atcl/fgm.hpp"

namespace atcl {

enum class TrainMode { Baseline, AdvOnly, Atcl };
enum class TaskKind { Lm, Nmt };
enum class ContrastiveSide { Encoder, Decoder };

// Flat "key = value" configuration; every field is addressable from the
// config file and from repeated --set overrides. Unknown keys are rejected.
struct TrainConfig {
    TaskKind task = TaskKind::Lm;
    TrainMode mode = TrainMode::Atcl;

    double epsilon = 0.03;
    double alpha = 0.1;
    double beta = 0.1;
    double tau = 0.07;
    std::size_t n_negatives = 10;
    std::size_t batch_size = 45;
    std::size_t seq_len = 32;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t max_steps = 1000;
    std::uint64_t eval_interval = 200;
    std::uint64_t seed = 1;
    FgmSign fgm_sign = FgmSign::PaperMinus;
    bool include_positive_in_denominator = false;
    ContrastiveSide contrastive_side = ContrastiveSide::Encoder;

    std::size_t d_model = 64;
    std::size_t n_heads = 2;
    std::size_t n_layers = 2;
    std::size_t n_enc_layers = 3;
    std::size_t n_dec_layers = 3;
    std::size_t d_ff = 0;
    std::size_t max_len = 512;
    std::uint64_t min_frequency = 1;

    // wall_ms in the metrics log is 0 unless timing is on; measured times
    // would break the byte-identical reproducibility contract.
    bool timing = false;

    std::string train_path;
    std::string valid_path;
    std::string train_src, train_trg;
    std::string valid_src, valid_trg;
    std::string vocab_path;
    std::string merges_path;
    std::string checkpoint_path = "model.ckpt";
    std::string metrics_path = "metrics.log";
    std::string resume_path;

    void set(const std::string& key, const std::string& value);
    void validate() const;

    // Canonical "key = value" lines in a fixed field order.
    std::vector<std::pair<std::string, std::string>> items() const;

    static TrainConfig from_file(const std::string& path);
};

const char* to_string(TrainMode m);
const char* to_string(TaskKind t);
const char* to_string(FgmSign s);
const char* to_string(ContrastiveSide s);

} // namespace atcl

#endif
