#include <benchmark/benchmark.h>

#include <vector>

#include "atcl/batching.hpp"
#include "atcl/config.hpp"
#include "atcl/ops.hpp"
#include "atcl/rng.hpp"
#include "atcl/tensor.hpp"
#include "atcl/trainer.hpp"
#include "atcl/vocab.hpp"

using namespace atcl;

namespace {

TensorPtr random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    std::vector<double> v(r * c);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return make_tensor({r, c}, std::move(v), true);
}

Vocabulary bench_vocab() {
    std::vector<std::vector<std::string>> lists(1);
    for (int i = 0; i < 40; ++i)
        lists[0].push_back("word" + std::string(1, char('a' + i % 26)) +
                           std::string(1, char('a' + i / 26)));
    // drop the digit-bearing prefix: tokens must stay alphabetic
    for (auto& t : lists[0]) t = t.substr(4);
    return Vocabulary::build_from_token_lists(lists, 1);
}

void bm_matmul(benchmark::State& state) {
    Rng rng(1);
    const std::size_t n = state.range(0);
    auto a = random_matrix(n, n, rng);
    auto b = random_matrix(n, n, rng);
    for (auto _ : state) {
        auto c = matmul(a, b);
        benchmark::DoNotOptimize(c->value.data());
    }
}
BENCHMARK(bm_matmul)->Arg(32)->Arg(64)->Arg(128);

void bm_matmul_backward(benchmark::State& state) {
    Rng rng(2);
    const std::size_t n = state.range(0);
    auto a = random_matrix(n, n, rng);
    auto b = random_matrix(n, n, rng);
    for (auto _ : state) {
        backward(mean_all(matmul(a, b)));
        benchmark::DoNotOptimize(a->grad.data());
    }
}
BENCHMARK(bm_matmul_backward)->Arg(32)->Arg(64);

void bm_training_step(benchmark::State& state) {
    auto vocab = bench_vocab();
    TrainConfig cfg;
    cfg.d_model = 32;
    cfg.n_heads = 2;
    cfg.n_layers = 2;
    cfg.seq_len = 16;
    cfg.batch_size = 16;
    cfg.max_len = 32;
    cfg.mode = state.range(0) ? TrainMode::Atcl : TrainMode::Baseline;
    Trainer trainer(cfg, vocab);

    std::vector<int> stream;
    for (int i = 0; i < 2000; ++i) stream.push_back(4 + i % int(vocab.size() - 4));
    auto batches = make_lm_batches(stream, cfg.batch_size, cfg.seq_len, 1);
    std::size_t i = 0;
    for (auto _ : state) {
        auto rec = trainer.atcl_step(batches[i++ % batches.size()]);
        benchmark::DoNotOptimize(rec.objective);
    }
}
BENCHMARK(bm_training_step)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
