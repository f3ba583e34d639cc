#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = ATCL_CLI_PATH;
const fs::path kDir = "cli_scratch";

int run(const std::string& args, const std::string& out_file = "out.txt") {
    const std::string cmd =
        kCli + " " + args + " > " + (kDir / out_file).string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

std::size_t line_count(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

struct Fixture {
    Fixture() {
        fs::remove_all(kDir);
        fs::create_directories(kDir);
        std::string corpus;
        const char* words[] = {"alpha", "bravo", "charlie", "delta", "echo",
                               "foxtrot", "golf", "hotel"};
        for (int line = 0; line < 30; ++line) {
            for (int w = 0; w < 8; ++w) corpus += std::string(words[(line + w) % 8]) + " ";
            corpus += "\n";
        }
        write(kDir / "corpus.txt", corpus);
    }
    ~Fixture() { fs::remove_all(kDir); }
};

std::string lm_flags() {
    return "--set task=lm --set d_model=8 --set n_heads=2 --set n_layers=1 "
           "--set seq_len=5 --set batch_size=4 --set max_steps=3 "
           "--set eval_interval=3 --set max_len=16 "
           "--set train_path=" + (kDir / "corpus.txt").string() +
           " --set valid_path=" + (kDir / "corpus.txt").string() +
           " --set vocab_path=" + (kDir / "vocab.txt").string() +
           " --set checkpoint_path=" + (kDir / "model.ckpt").string() +
           " --set metrics_path=" + (kDir / "metrics.log").string();
}

} // namespace

TEST_CASE("command-line workflows") {
    Fixture fx;

    SUBCASE("vocab-build then a full LM train/eval/probe round") {
        REQUIRE(run("vocab-build --corpus " + (kDir / "corpus.txt").string() +
                    " --out " + (kDir / "vocab.txt").string()) == 0);
        REQUIRE(fs::exists(kDir / "vocab.txt"));

        REQUIRE(run("train " + lm_flags()) == 0);
        CHECK(fs::exists(kDir / "model.ckpt"));
        CHECK(fs::exists(kDir / "metrics.log"));
        const auto log = slurp(kDir / "metrics.log");
        CHECK(log.find("# mode = ") != std::string::npos); // config header
        CHECK(log.find("\"step\":1") != std::string::npos);
        CHECK(log.find("\"ppl\":") != std::string::npos);

        REQUIRE(run("eval-ppl " + lm_flags() + " --checkpoint " +
                    (kDir / "model.ckpt").string() + " --corpus " +
                    (kDir / "corpus.txt").string()) == 0);
        CHECK(std::stod(slurp(kDir / "out.txt")) > 1.0);

        REQUIRE(run("probe-neighbors " + lm_flags() + " --checkpoint " +
                    (kDir / "model.ckpt").string() + " --word alpha --k 3") == 0);
        CHECK(line_count(slurp(kDir / "out.txt")) == 3);

        REQUIRE(run("attack " + lm_flags() + " --checkpoint " +
                    (kDir / "model.ckpt").string() +
                    " --sentence \"alpha bravo charlie\" --position 1 "
                    "--epsilon 0.03") == 0);
        CHECK(slurp(kDir / "out.txt").find("continuation:") != std::string::npos);

        REQUIRE(run("robustness " + lm_flags() + " --checkpoint " +
                    (kDir / "model.ckpt").string() + " --corpus " +
                    (kDir / "corpus.txt").string() + " --epsilon 0 --samples 5") == 0);
        CHECK(std::stod(slurp(kDir / "out.txt")) == 0.0);
    }

    SUBCASE("bpe-train writes a merge file usable for vocab building") {
        REQUIRE(run("bpe-train --corpus " + (kDir / "corpus.txt").string() +
                    " --num-merges 10 --out " + (kDir / "merges.txt").string()) == 0);
        REQUIRE(fs::exists(kDir / "merges.txt"));
        CHECK(line_count(slurp(kDir / "merges.txt")) == 10);
        REQUIRE(run("vocab-build --corpus " + (kDir / "corpus.txt").string() +
                    " --set merges_path=" + (kDir / "merges.txt").string() +
                    " --out " + (kDir / "vocab.txt").string()) == 0);
        CHECK(fs::exists(kDir / "vocab.txt"));
    }

    SUBCASE("NMT train, translate, and BLEU") {
        std::string src, trg;
        const char* words[] = {"uno", "dos", "tres", "cuatro"};
        for (int i = 0; i < 24; ++i) {
            const std::string a = words[i % 4], b = words[(i + 1) % 4];
            src += a + " " + b + "\n";
            trg += b + " " + a + "\n"; // reversal task
        }
        write(kDir / "src.txt", src);
        write(kDir / "trg.txt", trg);
        const std::string flags =
            "--set task=nmt --set d_model=8 --set n_heads=2 "
            "--set n_enc_layers=1 --set n_dec_layers=1 --set batch_size=4 "
            "--set max_steps=3 --set eval_interval=3 --set max_len=16 "
            "--set train_src=" + (kDir / "src.txt").string() +
            " --set train_trg=" + (kDir / "trg.txt").string() +
            " --set vocab_path=" + (kDir / "vocab.txt").string() +
            " --set checkpoint_path=" + (kDir / "nmt.ckpt").string() +
            " --set metrics_path=" + (kDir / "nmt.log").string();
        REQUIRE(run("vocab-build --corpus " + (kDir / "src.txt").string() +
                    " --out " + (kDir / "vocab.txt").string()) == 0);
        REQUIRE(run("train " + flags) == 0);
        REQUIRE(run("translate " + flags + " --checkpoint " +
                    (kDir / "nmt.ckpt").string() + " --src " +
                    (kDir / "src.txt").string()) == 0);
        CHECK(line_count(slurp(kDir / "out.txt")) == 24);
        REQUIRE(run("eval-bleu " + flags + " --checkpoint " +
                    (kDir / "nmt.ckpt").string() + " --src " +
                    (kDir / "src.txt").string() + " --ref " +
                    (kDir / "trg.txt").string()) == 0);
        CHECK(std::stod(slurp(kDir / "out.txt")) >= 0.0);
    }

    SUBCASE("error paths use distinct exit codes") {
        CHECK(run("no-such-subcommand") == 2);
        CHECK(run("train --set no_such_key=1") == 2);
        CHECK(run("eval-ppl --checkpoint missing.ckpt --corpus missing.txt "
                  "--set vocab_path=missing_vocab.txt") == 3);
    }
}
