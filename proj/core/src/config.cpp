#include "atcl/config.hpp"

#include <charconv>
#include <cstdio>

#include "atcl/common.hpp"
#include "atcl/vocab.hpp"

namespace atcl {

namespace {

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        require(pos == v.size(), "config: malformed number for " + key + ": " + v);
        return d;
    } catch (const std::exception&) {
        throw InvalidInputError("config: malformed number for " + key + ": " + v);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    require(ec == std::errc() && p == v.data() + v.size(),
            "config: malformed integer for " + key + ": " + v);
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InvalidInputError("config: malformed boolean for " + key + ": " + v);
}

std::string fmt_double(double d) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    return buf;
}

} // namespace

const char* to_string(TrainMode m) {
    switch (m) {
        case TrainMode::Baseline: return "baseline";
        case TrainMode::AdvOnly: return "adv-only";
        case TrainMode::Atcl: return "atcl";
    }
    return "?";
}
const char* to_string(TaskKind t) { return t == TaskKind::Lm ? "lm" : "nmt"; }
const char* to_string(FgmSign s) {
    return s == FgmSign::PaperMinus ? "paper-minus" : "classic-plus";
}
const char* to_string(ContrastiveSide s) {
    return s == ContrastiveSide::Encoder ? "encoder" : "decoder";
}

void TrainConfig::set(const std::string& key, const std::string& v) {
    if (key == "task") {
        if (v == "lm") task = TaskKind::Lm;
        else if (v == "nmt") task = TaskKind::Nmt;
        else throw InvalidInputError("config: task must be lm or nmt, got " + v);
    } else if (key == "mode") {
        if (v == "baseline") mode = TrainMode::Baseline;
        else if (v == "adv-only") mode = TrainMode::AdvOnly;
        else if (v == "atcl") mode = TrainMode::Atcl;
        else throw InvalidInputError("config: unknown mode " + v);
    } else if (key == "epsilon") epsilon = parse_double(key, v);
    else if (key == "alpha") alpha = parse_double(key, v);
    else if (key == "beta") beta = parse_double(key, v);
    else if (key == "tau") tau = parse_double(key, v);
    else if (key == "n_negatives") n_negatives = parse_u64(key, v);
    else if (key == "batch_size") batch_size = parse_u64(key, v);
    else if (key == "seq_len") seq_len = parse_u64(key, v);
    else if (key == "learning_rate") learning_rate = parse_double(key, v);
    else if (key == "beta1") beta1 = parse_double(key, v);
    else if (key == "beta2") beta2 = parse_double(key, v);
    else if (key == "adam_epsilon") adam_epsilon = parse_double(key, v);
    else if (key == "max_steps") max_steps = parse_u64(key, v);
    else if (key == "eval_interval") eval_interval = parse_u64(key, v);
    else if (key == "seed") seed = parse_u64(key, v);
    else if (key == "fgm_sign") {
        if (v == "paper-minus") fgm_sign = FgmSign::PaperMinus;
        else if (v == "classic-plus") fgm_sign = FgmSign::ClassicPlus;
        else throw InvalidInputError("config: fgm_sign must be paper-minus or classic-plus");
    } else if (key == "include_positive_in_denominator")
        include_positive_in_denominator = parse_bool(key, v);
    else if (key == "contrastive_side") {
        if (v == "encoder") contrastive_side = ContrastiveSide::Encoder;
        else if (v == "decoder") contrastive_side = ContrastiveSide::Decoder;
        else throw InvalidInputError("config: contrastive_side must be encoder or decoder");
    } else if (key == "d_model") d_model = parse_u64(key, v);
    else if (key == "n_heads") n_heads = parse_u64(key, v);
    else if (key == "n_layers") n_layers = parse_u64(key, v);
    else if (key == "n_enc_layers") n_enc_layers = parse_u64(key, v);
    else if (key == "n_dec_layers") n_dec_layers = parse_u64(key, v);
    else if (key == "d_ff") d_ff = parse_u64(key, v);
    else if (key == "max_len") max_len = parse_u64(key, v);
    else if (key == "min_frequency") min_frequency = parse_u64(key, v);
    else if (key == "timing") timing = parse_bool(key, v);
    else if (key == "train_path") train_path = v;
    else if (key == "valid_path") valid_path = v;
    else if (key == "train_src") train_src = v;
    else if (key == "train_trg") train_trg = v;
    else if (key == "valid_src") valid_src = v;
    else if (key == "valid_trg") valid_trg = v;
    else if (key == "vocab_path") vocab_path = v;
    else if (key == "merges_path") merges_path = v;
    else if (key == "checkpoint_path") checkpoint_path = v;
    else if (key == "metrics_path") metrics_path = v;
    else if (key == "resume_path") resume_path = v;
    else throw InvalidInputError("config: unknown key " + key);
}

void TrainConfig::validate() const {
    require(alpha >= 0.0 && alpha <= 1.0, "config: alpha must lie in [0,1]");
    require(beta >= 0.0 && beta <= 1.0, "config: beta must lie in [0,1]");
    require(epsilon > 0.0, "config: epsilon must be positive");
    require(tau > 0.0, "config: tau must be positive");
    require(n_negatives >= 1, "config: n_negatives must be >= 1");
    require(batch_size >= 1, "config: batch_size must be >= 1");
    require(seq_len >= 2, "config: seq_len must be >= 2");
    require(learning_rate > 0.0, "config: learning_rate must be positive");
    require(max_steps >= 1, "config: max_steps must be >= 1");
    require(eval_interval >= 1, "config: eval_interval must be >= 1");
}

std::vector<std::pair<std::string, std::string>> TrainConfig::items() const {
    std::vector<std::pair<std::string, std::string>> out;
    auto put = [&](const char* k, std::string v) { out.emplace_back(k, std::move(v)); };
    put("task", to_string(task));
    put("mode", to_string(mode));
    put("epsilon", fmt_double(epsilon));
    put("alpha", fmt_double(alpha));
    put("beta", fmt_double(beta));
    put("tau", fmt_double(tau));
    put("n_negatives", std::to_string(n_negatives));
    put("batch_size", std::to_string(batch_size));
    put("seq_len", std::to_string(seq_len));
    put("learning_rate", fmt_double(learning_rate));
    put("beta1", fmt_double(beta1));
    put("beta2", fmt_double(beta2));
    put("adam_epsilon", fmt_double(adam_epsilon));
    put("max_steps", std::to_string(max_steps));
    put("eval_interval", std::to_string(eval_interval));
    put("seed", std::to_string(seed));
    put("fgm_sign", to_string(fgm_sign));
    put("include_positive_in_denominator",
        include_positive_in_denominator ? "true" : "false");
    put("contrastive_side", to_string(contrastive_side));
    put("d_model", std::to_string(d_model));
    put("n_heads", std::to_string(n_heads));
    put("n_layers", std::to_string(n_layers));
    put("n_enc_layers", std::to_string(n_enc_layers));
    put("n_dec_layers", std::to_string(n_dec_layers));
    put("d_ff", std::to_string(d_ff));
    put("max_len", std::to_string(max_len));
    put("min_frequency", std::to_string(min_frequency));
    put("timing", timing ? "true" : "false");
    put("train_path", train_path);
    put("valid_path", valid_path);
    put("train_src", train_src);
    put("train_trg", train_trg);
    put("valid_src", valid_src);
    put("valid_trg", valid_trg);
    put("vocab_path", vocab_path);
    put("merges_path", merges_path);
    put("checkpoint_path", checkpoint_path);
    put("metrics_path", metrics_path);
    put("resume_path", resume_path);
    return out;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    TrainConfig cfg;
    for (const auto& raw : read_lines(path)) {
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        auto toks = split_whitespace(line);
        if (toks.empty()) continue;
        require(toks.size() >= 2 && toks[1] == "=",
                "config: expected 'key = value' line, got: " + raw);
        std::string value = toks.size() > 2 ? toks[2] : std::string();
        for (std::size_t i = 3; i < toks.size(); ++i) value += " " + toks[i];
        cfg.set(toks[0], value);
    }
    return cfg;
}

} // namespace atcl
