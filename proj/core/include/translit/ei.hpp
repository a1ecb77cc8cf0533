#pragma once

#include "translit/cells.hpp"
#include "translit/ctc.hpp"
#include "translit/dataset.hpp"

namespace translit {

// Epsilon-insertion model: the source is expanded with epsilons, a
// (possibly bidirectional, deep) recurrent stack emits one frame per
// expanded position, and CTC aligns frames to the target.
struct EiConfig {
    CellKind cell = CellKind::Lstm;
    size_t layers = 1;
    size_t hidden = 100;     // units per direction
    bool bidirectional = true;
    size_t epsilons = 3;     // k epsilons per source slot
    size_t embed_dim = 0;    // 0 -> hidden

    size_t embed() const { return embed_dim ? embed_dim : hidden; }
};

struct EiModel {
    EiConfig config;
    EmbeddingTable embed; // source vocab (epsilon id 0 included)
    LayerStack stack;
    Tensor2D out_w; // tgt_vocab x stack_width
    Tensor2D out_b;

    size_t src_vocab() const { return embed.vocab_size; }
    size_t tgt_vocab() const { return out_w.rows; }

    static EiModel create(const EiConfig &config, size_t src_vocab_total, size_t tgt_vocab_total,
                          Rng &rng);
    static EiModel zeros_like(const EiModel &m);

    template <class F> void visit(F &&f) {
        embed.visit([&](const char *n, Tensor2D &t) { f(std::string("embed.") + n, t); });
        stack.visit([&](const std::string &n, Tensor2D &t) { f("stack." + n, t); });
        f("out.w", out_w);
        f("out.b", out_b);
    }
};

// Expands source_ids with config.epsilons epsilon ids per slot.
std::vector<size_t> ei_expand(const EiModel &m, const std::vector<size_t> &source_ids);

// One log-distribution row per expanded frame.
Tensor2D ei_frame_logprobs(const EiModel &m, const std::vector<size_t> &expanded_ids);

struct EiLossResult {
    double nll = 0.0;
    EiModel grads;
};

EiLossResult ei_loss(const EiModel &m, const std::vector<size_t> &source_ids,
                     const std::vector<size_t> &target_ids);

double ei_loss_value(const EiModel &m, const std::vector<size_t> &source_ids,
                     const std::vector<size_t> &target_ids);

// Greedy (beam_width <= 1) or prefix-beam CTC decode over the expanded
// source. Output labels are content ids only.
LabelSeq ei_decode(const EiModel &m, const std::vector<size_t> &source_ids, size_t beam_width = 1);

} // namespace translit
