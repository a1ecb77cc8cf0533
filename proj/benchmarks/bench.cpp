#include <benchmark/benchmark.h>

#include "translit/ctc.hpp"
#include "translit/seq2seq.hpp"

using namespace translit;

namespace {

Tensor2D random_tensor(size_t r, size_t c, Rng &rng) {
    Tensor2D t(r, c);
    for (auto &v : t.values) v = rng.uniform(-1, 1);
    return t;
}

void bm_matmul(benchmark::State &state) {
    const size_t n = static_cast<size_t>(state.range(0));
    Rng rng(1);
    Tensor2D a = random_tensor(n, n, rng), b = random_tensor(n, n, rng);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(bm_matmul)->Arg(64)->Arg(256);

void bm_lstm_step(benchmark::State &state) {
    const size_t h = static_cast<size_t>(state.range(0));
    Rng rng(2);
    LstmParams p = LstmParams::random(h, h, rng);
    Vec x(h, 0.1), h0(h, 0.0), c0(h, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(lstm_step(p, x, h0, c0));
}
BENCHMARK(bm_lstm_step)->Arg(64)->Arg(256);

void bm_gru_step(benchmark::State &state) {
    const size_t h = static_cast<size_t>(state.range(0));
    Rng rng(3);
    GruParams p = GruParams::random(h, h, rng);
    Vec x(h, 0.1), h0(h, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(gru_step(p, x, h0));
}
BENCHMARK(bm_gru_step)->Arg(64)->Arg(256);

Tensor2D random_logprobs(size_t T, size_t V, Rng &rng) {
    Tensor2D t(T, V);
    for (size_t r = 0; r < T; ++r) {
        Vec logits(V);
        for (auto &v : logits) v = rng.uniform(-2, 2);
        Vec lp = log_softmax(logits);
        std::copy(lp.begin(), lp.end(), &t.values[r * V]);
    }
    return t;
}

void bm_ctc_loss(benchmark::State &state) {
    const size_t T = static_cast<size_t>(state.range(0));
    Rng rng(4);
    Tensor2D lp = random_logprobs(T, 40, rng);
    LabelSeq target;
    for (size_t i = 0; i < T / 4; ++i) target.push_back(1 + rng.next_u64() % 39);
    for (auto _ : state) benchmark::DoNotOptimize(ctc_loss(lp, target));
}
BENCHMARK(bm_ctc_loss)->Arg(32)->Arg(128);

void bm_greedy_decode(benchmark::State &state) {
    const size_t h = static_cast<size_t>(state.range(0));
    Rng rng(5);
    Seq2SeqConfig cfg;
    cfg.cell = CellKind::Gru;
    cfg.hidden = h;
    Seq2SeqModel m = Seq2SeqModel::create(cfg, 40, 40, rng);
    std::vector<size_t> src = {4, 5, 6, 7, 8, 9};
    const DecodeLimits limits = DecodeLimits::for_source(src.size());
    for (auto _ : state) benchmark::DoNotOptimize(greedy_decode(m, src, limits));
}
BENCHMARK(bm_greedy_decode)->Arg(64)->Arg(128);

void bm_beam_decode(benchmark::State &state) {
    Rng rng(6);
    Seq2SeqConfig cfg;
    cfg.cell = CellKind::Gru;
    cfg.hidden = 64;
    Seq2SeqModel m = Seq2SeqModel::create(cfg, 40, 40, rng);
    std::vector<size_t> src = {4, 5, 6, 7, 8, 9};
    const DecodeLimits limits =
        DecodeLimits::for_source(src.size(), static_cast<size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(beam_decode(m, src, limits));
}
BENCHMARK(bm_beam_decode)->Arg(4)->Arg(16);

} // namespace

BENCHMARK_MAIN();
