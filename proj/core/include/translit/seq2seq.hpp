#pragma once

#include <vector>

#include "translit/cells.hpp"
#include "translit/dataset.hpp"

namespace translit {

// Additive (concat) attention: score_j = v . tanh(Wq q + Wk annotation_j).
struct AttentionParams {
    Tensor2D wq; // A x query_width
    Tensor2D wk; // A x annotation_width
    Tensor2D v;  // A x 1

    static AttentionParams zeros(size_t dim, size_t query_width, size_t annotation_width);
    static AttentionParams random(size_t dim, size_t query_width, size_t annotation_width,
                                  Rng &rng);

    template <class F> void visit(F &&f) {
        f("wq", wq);
        f("wk", wk);
        f("v", v);
    }
};

struct AttendResult {
    Vec context;
    Vec weights; // probability distribution over annotations
};

AttendResult attend(const AttentionParams &p, const Vec &query, const std::vector<Vec> &annotations);

struct Seq2SeqConfig {
    CellKind cell = CellKind::Gru;
    size_t layers = 1;
    size_t hidden = 64;       // units per direction
    bool bidirectional_encoder = false;
    bool reverse_source = true;
    size_t embed_dim = 0;     // 0 -> hidden
    size_t attention_dim = 0; // 0 -> hidden

    size_t embed() const { return embed_dim ? embed_dim : hidden; }
    size_t attention() const { return attention_dim ? attention_dim : hidden; }
    size_t encoder_width() const { return hidden * (bidirectional_encoder ? 2 : 1); }
};

struct Seq2SeqModel {
    Seq2SeqConfig config;
    EmbeddingTable src_embed;
    EmbeddingTable tgt_embed;
    LayerStack encoder;
    LayerStack decoder; // always unidirectional
    AttentionParams attention;
    Tensor2D bridge_w; // decoder init states from the final encoder annotation
    Tensor2D bridge_b;
    Tensor2D out_w;    // tgt_vocab x (hidden + encoder_width)
    Tensor2D out_b;    // tgt_vocab x 1

    size_t src_vocab() const { return src_embed.vocab_size; }
    size_t tgt_vocab() const { return tgt_embed.vocab_size; }

    static Seq2SeqModel create(const Seq2SeqConfig &config, size_t src_vocab_total,
                               size_t tgt_vocab_total, Rng &rng);
    static Seq2SeqModel zeros_like(const Seq2SeqModel &m);

    template <class F> void visit(F &&f) {
        src_embed.visit([&](const char *n, Tensor2D &t) { f(std::string("src_embed.") + n, t); });
        tgt_embed.visit([&](const char *n, Tensor2D &t) { f(std::string("tgt_embed.") + n, t); });
        encoder.visit([&](const std::string &n, Tensor2D &t) { f("enc." + n, t); });
        decoder.visit([&](const std::string &n, Tensor2D &t) { f("dec." + n, t); });
        attention.visit([&](const char *n, Tensor2D &t) { f(std::string("attn.") + n, t); });
        f("bridge.w", bridge_w);
        f("bridge.b", bridge_b);
        f("out.w", out_w);
        f("out.b", out_b);
    }
};

// One annotation per source position, indexed by consumption order (the
// encoder consumes back-to-front when reverse is set).
std::vector<Vec> encode(const Seq2SeqModel &model, const std::vector<size_t> &source_ids,
                        bool reverse);

struct Seq2SeqLossResult {
    double loss = 0.0; // mean NLL per target symbol
    Seq2SeqModel grads;
};

// target_ids must end with CodepointVocabulary::kEosId; decoder input at
// step t is the gold symbol at t-1 (GO at t=0).
Seq2SeqLossResult teacher_forced_loss(const Seq2SeqModel &model,
                                      const std::vector<size_t> &source_ids,
                                      const std::vector<size_t> &target_ids);

double teacher_forced_loss_value(const Seq2SeqModel &model, const std::vector<size_t> &source_ids,
                                 const std::vector<size_t> &target_ids);

struct DecodeLimits {
    size_t max_length = 0;
    size_t beam_width = 1;

    static DecodeLimits for_source(size_t source_length, size_t beam_width = 1) {
        return {2 * source_length + 5, beam_width};
    }
};

// Argmax fed back autoregressively; stops at EOS (not included) or
// max_length; ties break to the lowest id.
std::vector<size_t> greedy_decode(const Seq2SeqModel &model, const std::vector<size_t> &source_ids,
                                  const DecodeLimits &limits);

// Length-normalized log-probability beam search; width 1 equals greedy.
std::vector<size_t> beam_decode(const Seq2SeqModel &model, const std::vector<size_t> &source_ids,
                                const DecodeLimits &limits);

} // namespace translit
