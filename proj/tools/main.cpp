// atcl: command-line front end for training, evaluation, and probing.
//
// Exit codes: 0 success; 2 usage or schema violation (bad flags, malformed
// config, rejected input); 3 file/stream failure; 4 non-finite loss abort.

#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atcl/bleu.hpp"
#include "atcl/bpe.hpp"
#include "atcl/checkpoint.hpp"
#include "atcl/config.hpp"
#include "atcl/probes.hpp"
#include "atcl/trainer.hpp"
#include "atcl/transformer.hpp"
#include "atcl/vocab.hpp"

namespace {

using namespace atcl;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides; // key=value
    std::string checkpoint;
    std::string corpus;
};

TrainConfig resolve_config(const CommonArgs& args) {
    TrainConfig cfg;
    if (!args.config_path.empty()) cfg = TrainConfig::from_file(args.config_path);
    for (const auto& kv : args.overrides) {
        auto eq = kv.find('=');
        require(eq != std::string::npos && eq > 0,
                "--set expects key=value, got: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

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

std::unique_ptr<MergeTable> maybe_merges(const TrainConfig& cfg) {
    if (cfg.merges_path.empty()) return nullptr;
    return std::make_unique<MergeTable>(MergeTable::load(cfg.merges_path));
}

std::vector<std::string> tokenize_line(const std::string& line,
                                       const MergeTable* merges) {
    auto words = split_whitespace(line);
    if (!merges) return words;
    std::vector<std::string> out;
    for (const auto& w : words)
        for (auto& p : bpe_encode(w, *merges)) out.push_back(std::move(p));
    return out;
}

std::vector<std::vector<std::string>> tokenize_file(const std::string& path,
                                                    const MergeTable* merges) {
    std::vector<std::vector<std::string>> out;
    for (const auto& line : read_lines(path)) out.push_back(tokenize_line(line, merges));
    return out;
}

// Token stream for language modeling: ids per sentence followed by <eos>.
std::vector<int> id_stream(const std::vector<std::vector<std::string>>& sentences,
                           const Vocabulary& vocab) {
    std::vector<int> stream;
    for (const auto& toks : sentences) {
        for (const auto& t : toks) stream.push_back(vocab.id(t));
        stream.push_back(Vocabulary::kEos);
    }
    return stream;
}

std::vector<std::vector<int>> id_lists(
    const std::vector<std::vector<std::string>>& sentences, const Vocabulary& vocab) {
    std::vector<std::vector<int>> out;
    for (const auto& toks : sentences) {
        std::vector<int> ids;
        for (const auto& t : toks) ids.push_back(vocab.id(t));
        out.push_back(std::move(ids));
    }
    return out;
}

Vocabulary load_vocab(const TrainConfig& cfg) {
    require(!cfg.vocab_path.empty(), "vocab_path must be set");
    return Vocabulary::load(cfg.vocab_path);
}

TransformerModel load_model(const TrainConfig& cfg, const Vocabulary& vocab,
                            const std::string& checkpoint) {
    TransformerModel model(model_config_of(cfg, vocab.size()), cfg.seed);
    require(!checkpoint.empty(), "a checkpoint path is required");
    load_checkpoint(model, checkpoint);
    return model;
}

std::string detokenize(const std::vector<std::string>& pieces, bool bpe) {
    const auto words = bpe ? bpe_decode(pieces) : pieces;
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

int cmd_train(const CommonArgs& args) {
    TrainConfig cfg = resolve_config(args);
    cfg.validate();
    auto merges = maybe_merges(cfg);

    Vocabulary vocab;
    std::vector<std::vector<std::string>> train_tok, valid_tok;
    std::vector<std::vector<std::string>> train_src_tok, train_trg_tok;
    std::vector<std::vector<std::string>> valid_src_tok, valid_trg_tok;

    if (cfg.task == TaskKind::Lm) {
        require(!cfg.train_path.empty(), "train_path must be set");
        train_tok = tokenize_file(cfg.train_path, merges.get());
        if (!cfg.valid_path.empty())
            valid_tok = tokenize_file(cfg.valid_path, merges.get());
        vocab = cfg.vocab_path.empty()
                    ? Vocabulary::build_from_token_lists(train_tok, cfg.min_frequency)
                    : Vocabulary::load(cfg.vocab_path);
    } else {
        require(!cfg.train_src.empty() && !cfg.train_trg.empty(),
                "train_src and train_trg must be set");
        train_src_tok = tokenize_file(cfg.train_src, merges.get());
        train_trg_tok = tokenize_file(cfg.train_trg, merges.get());
        require(train_src_tok.size() == train_trg_tok.size(),
                "train_src/train_trg line counts differ");
        if (!cfg.valid_src.empty()) {
            valid_src_tok = tokenize_file(cfg.valid_src, merges.get());
            valid_trg_tok = tokenize_file(cfg.valid_trg, merges.get());
            require(valid_src_tok.size() == valid_trg_tok.size(),
                    "valid_src/valid_trg line counts differ");
        }
        if (cfg.vocab_path.empty()) {
            // shared source/target vocabulary
            auto all = train_src_tok;
            all.insert(all.end(), train_trg_tok.begin(), train_trg_tok.end());
            vocab = Vocabulary::build_from_token_lists(all, cfg.min_frequency);
        } else {
            vocab = Vocabulary::load(cfg.vocab_path);
        }
    }

    Trainer trainer(cfg, vocab);
    if (cfg.task == TaskKind::Lm)
        trainer.set_lm_data(id_stream(train_tok, vocab), id_stream(valid_tok, vocab));
    else
        trainer.set_nmt_data(id_lists(train_src_tok, vocab),
                             id_lists(train_trg_tok, vocab),
                             id_lists(valid_src_tok, vocab),
                             id_lists(valid_trg_tok, vocab));
    trainer.run();
    std::cout << "checkpoint: " << cfg.checkpoint_path << "\n";
    std::cout << "metrics: " << cfg.metrics_path << "\n";
    return 0;
}

int cmd_eval_ppl(const CommonArgs& args) {
    TrainConfig cfg = resolve_config(args);
    auto vocab = load_vocab(cfg);
    auto model = load_model(cfg, vocab, args.checkpoint);
    auto merges = maybe_merges(cfg);
    require(!args.corpus.empty(), "--corpus is required");
    auto stream = id_stream(tokenize_file(args.corpus, merges.get()), vocab);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", perplexity(model, stream, cfg.seq_len));
    std::cout << buf << "\n";
    return 0;
}

int cmd_eval_bleu(const CommonArgs& args, const std::string& src_path,
                  const std::string& ref_path) {
    TrainConfig cfg = resolve_config(args);
    auto vocab = load_vocab(cfg);
    auto model = load_model(cfg, vocab, args.checkpoint);
    auto merges = maybe_merges(cfg);
    auto src = id_lists(tokenize_file(src_path, merges.get()), vocab);
    auto ref = tokenize_file(ref_path, merges.get());
    const std::size_t cap = std::min<std::size_t>(64, cfg.max_len - 1);
    std::vector<std::vector<std::string>> hyp;
    for (const auto& s : src) {
        std::vector<std::string> toks;
        for (int id : greedy_translate(model, s, cap)) toks.push_back(vocab.token(id));
        hyp.push_back(std::move(toks));
    }
    auto res = corpus_bleu(hyp, ref);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", res.score);
    std::cout << buf << "\n";
    return 0;
}

int cmd_translate(const CommonArgs& args, const std::string& src_path) {
    TrainConfig cfg = resolve_config(args);
    auto vocab = load_vocab(cfg);
    auto model = load_model(cfg, vocab, args.checkpoint);
    auto merges = maybe_merges(cfg);
    const std::size_t cap = std::min<std::size_t>(64, cfg.max_len - 1);
    for (const auto& s : id_lists(tokenize_file(src_path, merges.get()), vocab)) {
        std::vector<std::string> toks;
        for (int id : greedy_translate(model, s, cap)) toks.push_back(vocab.token(id));
        std::cout << detokenize(toks, merges != nullptr) << "\n";
    }
    return 0;
}

int cmd_probe_neighbors(const CommonArgs& args, const std::string& word,
                        std::size_t k) {
    TrainConfig cfg = resolve_config(args);
    auto vocab = load_vocab(cfg);
    auto model = load_model(cfg, vocab, args.checkpoint);
    for (const auto& n : nearest_neighbors(model, vocab, word, k)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", n.distance);
        std::cout << n.token << "\t" << buf << "\n";
    }
    return 0;
}

int cmd_attack(const CommonArgs& args, const std::string& sentence,
               std::size_t position, double epsilon) {
    TrainConfig cfg = resolve_config(args);
    auto vocab = load_vocab(cfg);
    auto model = load_model(cfg, vocab, args.checkpoint);
    auto report = targeted_attack_completion(model, vocab, split_whitespace(sentence),
                                             position, epsilon, cfg.fgm_sign);
    std::cout << "continuation:";
    for (const auto& t : report.continuation) std::cout << " " << t;
    std::cout << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "mean_nll: %.6f\nperplexity: %.6f\n",
                  report.mean_nll, report.perplexity);
    std::cout << buf;
    if (report.degenerate) std::cout << "note: zero gradient, no perturbation applied\n";
    return 0;
}

int cmd_robustness(const CommonArgs& args, double epsilon, std::size_t samples) {
    TrainConfig cfg = resolve_config(args);
    auto vocab = load_vocab(cfg);
    auto model = load_model(cfg, vocab, args.checkpoint);
    auto merges = maybe_merges(cfg);
    require(!args.corpus.empty(), "--corpus is required");
    auto stream = id_stream(tokenize_file(args.corpus, merges.get()), vocab);
    Rng rng = named_stream(cfg.seed, "robustness");
    const double kl = robustness_divergence(model, vocab, stream, cfg.seq_len,
                                            epsilon, samples, rng, cfg.fgm_sign);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9f", kl);
    std::cout << buf << "\n";
    return 0;
}

int cmd_bpe_train(const CommonArgs& args, std::size_t num_merges,
                  const std::string& out_path) {
    require(!args.corpus.empty(), "--corpus is required");
    std::map<std::string, std::uint64_t> counts;
    for (const auto& line : read_lines(args.corpus))
        for (const auto& w : split_whitespace(line)) ++counts[w];
    bpe_train(counts, num_merges).save(out_path);
    std::cout << "merges: " << out_path << "\n";
    return 0;
}

int cmd_vocab_build(const CommonArgs& args, const std::string& out_path) {
    TrainConfig cfg = resolve_config(args);
    require(!args.corpus.empty(), "--corpus is required");
    auto merges = maybe_merges(cfg);
    auto tok = tokenize_file(args.corpus, merges.get());
    Vocabulary::build_from_token_lists(tok, cfg.min_frequency).save(out_path);
    std::cout << "vocab: " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Adversarially trained transformer LM / NMT with contrastive "
        "regularization.\nExit codes: 2 usage or invalid input, 3 I/O failure, "
        "4 non-finite loss."};
    app.require_subcommand(1);

    CommonArgs args;
    std::string src_path, ref_path, word, sentence, out_path;
    std::size_t k = 4, position = 0, samples = 100, num_merges = 100;
    double epsilon = 0.03;

    auto add_common = [&](CLI::App* sub, bool needs_ckpt) {
        sub->add_option("--config", args.config_path, "config file (key = value lines)");
        sub->add_option("--set", args.overrides, "override: key=value (repeatable)");
        if (needs_ckpt) sub->add_option("--checkpoint", args.checkpoint, "model checkpoint");
    };

    auto* train = app.add_subcommand("train", "train a model");
    add_common(train, false);

    auto* ppl = app.add_subcommand("eval-ppl", "perplexity of a corpus");
    add_common(ppl, true);
    ppl->add_option("--corpus", args.corpus, "text file")->required();

    auto* bleu = app.add_subcommand("eval-bleu", "corpus BLEU of greedy translations");
    add_common(bleu, true);
    bleu->add_option("--src", src_path)->required();
    bleu->add_option("--ref", ref_path)->required();

    auto* translate = app.add_subcommand("translate", "greedy-decode a source file");
    add_common(translate, true);
    translate->add_option("--src", src_path)->required();

    auto* neighbors = app.add_subcommand("probe-neighbors", "closest embedding neighbors");
    add_common(neighbors, true);
    neighbors->add_option("--word", word)->required();
    neighbors->add_option("--k", k);

    auto* attack = app.add_subcommand("attack",
                                      "perturb one word's embedding, then complete");
    add_common(attack, true);
    attack->add_option("--sentence", sentence)->required();
    attack->add_option("--position", position)->required();
    attack->add_option("--epsilon", epsilon);

    auto* robust = app.add_subcommand("robustness",
                                      "mean KL between clean and perturbed predictions");
    add_common(robust, true);
    robust->add_option("--corpus", args.corpus)->required();
    robust->add_option("--epsilon", epsilon);
    robust->add_option("--samples", samples);

    auto* bpe = app.add_subcommand("bpe-train", "learn merge operations");
    add_common(bpe, false);
    bpe->add_option("--corpus", args.corpus)->required();
    bpe->add_option("--num-merges", num_merges);
    bpe->add_option("--out", out_path)->required();

    auto* vb = app.add_subcommand("vocab-build", "build a vocabulary file");
    add_common(vb, false);
    vb->add_option("--corpus", args.corpus)->required();
    vb->add_option("--out", out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train) return cmd_train(args);
        if (*ppl) return cmd_eval_ppl(args);
        if (*bleu) return cmd_eval_bleu(args, src_path, ref_path);
        if (*translate) return cmd_translate(args, src_path);
        if (*neighbors) return cmd_probe_neighbors(args, word, k);
        if (*attack) return cmd_attack(args, sentence, position, epsilon);
        if (*robust) return cmd_robustness(args, epsilon, samples);
        if (*bpe) return cmd_bpe_train(args, num_merges, out_path);
        if (*vb) return cmd_vocab_build(args, out_path);
    } catch (const atcl::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const atcl::NumericAbort& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
