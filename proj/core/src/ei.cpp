#include "translit/ei.hpp"

#include <cmath>

#include "translit/error.hpp"

namespace translit {

EiModel EiModel::create(const EiConfig &config, size_t src_vocab_total, size_t tgt_vocab_total,
                        Rng &rng) {
    EiModel m;
    m.config = config;
    m.embed = EmbeddingTable::random(src_vocab_total, config.embed(), rng);
    m.stack = LayerStack::make(config.cell, config.embed(), config.hidden, config.layers,
                               config.bidirectional, rng);
    m.out_w = Tensor2D::random_uniform(tgt_vocab_total, m.stack.output_size(), rng);
    m.out_b = Tensor2D(tgt_vocab_total, 1);
    return m;
}

EiModel EiModel::zeros_like(const EiModel &src) {
    EiModel m;
    m.config = src.config;
    m.embed = EmbeddingTable::zeros(src.embed.vocab_size, src.embed.dim);
    m.stack = LayerStack::zeros_like(src.stack);
    m.out_w = Tensor2D::zeros_like(src.out_w);
    m.out_b = Tensor2D::zeros_like(src.out_b);
    return m;
}

std::vector<size_t> ei_expand(const EiModel &m, const std::vector<size_t> &source_ids) {
    return insert_epsilons(source_ids, m.config.epsilons, CodepointVocabulary::kEpsilonId);
}

static std::vector<Vec> embed_ids(const EmbeddingTable &table, const std::vector<size_t> &ids) {
    std::vector<Vec> out;
    out.reserve(ids.size());
    for (size_t id : ids) out.push_back(table.lookup(id));
    return out;
}

static Vec frame_logits(const EiModel &m, const Vec &hidden) {
    Vec logits = matvec(m.out_w, hidden);
    for (size_t i = 0; i < logits.size(); ++i) logits[i] += m.out_b.values[i];
    return logits;
}

Tensor2D ei_frame_logprobs(const EiModel &m, const std::vector<size_t> &expanded_ids) {
    const std::vector<Vec> hidden = run_sequence(m.stack, embed_ids(m.embed, expanded_ids)).back();
    Tensor2D out(hidden.size(), m.tgt_vocab());
    for (size_t t = 0; t < hidden.size(); ++t) {
        const Vec logp = log_softmax(frame_logits(m, hidden[t]));
        std::copy(logp.begin(), logp.end(), &out.values[t * out.cols]);
    }
    return out;
}

double ei_loss_value(const EiModel &m, const std::vector<size_t> &source_ids,
                     const std::vector<size_t> &target_ids) {
    return ctc_loss(ei_frame_logprobs(m, ei_expand(m, source_ids)), target_ids).nll;
}

EiLossResult ei_loss(const EiModel &m, const std::vector<size_t> &source_ids,
                     const std::vector<size_t> &target_ids) {
    const std::vector<size_t> expanded = ei_expand(m, source_ids);
    const std::vector<Vec> inputs = embed_ids(m.embed, expanded);
    const StackTrace trace = run_sequence_cached(m.stack, inputs);
    const std::vector<Vec> &hidden = trace.outputs();
    const size_t T = hidden.size();
    const size_t V = m.tgt_vocab();

    Tensor2D logprobs(T, V);
    std::vector<Vec> probs(T);
    for (size_t t = 0; t < T; ++t) {
        const Vec logp = log_softmax(frame_logits(m, hidden[t]));
        std::copy(logp.begin(), logp.end(), &logprobs.values[t * V]);
        probs[t].resize(V);
        for (size_t i = 0; i < V; ++i) probs[t][i] = std::exp(logp[i]);
    }

    const CtcLossResult ctc = ctc_loss(logprobs, target_ids);

    EiLossResult res;
    res.nll = ctc.nll;
    res.grads = EiModel::zeros_like(m);
    EiModel &g = res.grads;

    // through log-softmax into logits, then the output projection
    std::vector<Vec> upstream(T);
    for (size_t t = 0; t < T; ++t) {
        const double *d_lp = &ctc.grad.values[t * V];
        double total = 0.0;
        for (size_t i = 0; i < V; ++i) total += d_lp[i];
        Vec d_logits(V);
        for (size_t i = 0; i < V; ++i) d_logits[i] = d_lp[i] - probs[t][i] * total;
        add_outer(g.out_w, d_logits, hidden[t]);
        for (size_t i = 0; i < V; ++i) g.out_b.values[i] += d_logits[i];
        upstream[t] = matvec_transpose(m.out_w, d_logits);
    }

    SequenceGrads sg = backprop_sequence(m.stack, trace, upstream);
    g.stack = std::move(sg.params);
    for (size_t t = 0; t < expanded.size(); ++t) g.embed.accumulate(expanded[t], sg.inputs[t]);
    return res;
}

LabelSeq ei_decode(const EiModel &m, const std::vector<size_t> &source_ids, size_t beam_width) {
    Tensor2D logprobs = ei_frame_logprobs(m, ei_expand(m, source_ids));
    // pad/go/eos are never legal CTC labels; keep blank available
    for (size_t t = 0; t < logprobs.rows; ++t)
        for (size_t id : {CodepointVocabulary::kPadId, CodepointVocabulary::kGoId,
                          CodepointVocabulary::kEosId})
            logprobs(t, id) = -1e30;
    if (beam_width <= 1) return ctc_greedy_decode(logprobs);
    return ctc_beam_decode(logprobs, beam_width);
}

} // namespace translit
