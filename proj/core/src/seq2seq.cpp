#include "translit/seq2seq.hpp"

#include <algorithm>
#include <cmath>

#include "translit/error.hpp"

namespace translit {

AttentionParams AttentionParams::zeros(size_t dim, size_t query_width, size_t annotation_width) {
    AttentionParams p;
    p.wq = Tensor2D(dim, query_width);
    p.wk = Tensor2D(dim, annotation_width);
    p.v = Tensor2D(dim, 1);
    return p;
}

AttentionParams AttentionParams::random(size_t dim, size_t query_width, size_t annotation_width,
                                        Rng &rng) {
    AttentionParams p;
    p.wq = Tensor2D::random_uniform(dim, query_width, rng);
    p.wk = Tensor2D::random_uniform(dim, annotation_width, rng);
    p.v = Tensor2D::random_uniform(dim, 1, rng);
    return p;
}

Seq2SeqModel Seq2SeqModel::create(const Seq2SeqConfig &config, size_t src_vocab_total,
                                  size_t tgt_vocab_total, Rng &rng) {
    Seq2SeqModel m;
    m.config = config;
    const size_t E = config.embed();
    const size_t H = config.hidden;
    const size_t W = config.encoder_width();
    m.src_embed = EmbeddingTable::random(src_vocab_total, E, rng);
    m.tgt_embed = EmbeddingTable::random(tgt_vocab_total, E, rng);
    m.encoder = LayerStack::make(config.cell, E, H, config.layers, config.bidirectional_encoder, rng);
    m.decoder = LayerStack::make(config.cell, E, H, config.layers, false, rng);
    m.attention = AttentionParams::random(config.attention(), H, W, rng);
    const size_t state_total = config.layers * H * (config.cell == CellKind::Lstm ? 2 : 1);
    m.bridge_w = Tensor2D::random_uniform(state_total, W, rng);
    m.bridge_b = Tensor2D(state_total, 1);
    m.out_w = Tensor2D::random_uniform(tgt_vocab_total, H + W, rng);
    m.out_b = Tensor2D(tgt_vocab_total, 1);
    return m;
}

Seq2SeqModel Seq2SeqModel::zeros_like(const Seq2SeqModel &src) {
    Seq2SeqModel m;
    m.config = src.config;
    m.src_embed = EmbeddingTable::zeros(src.src_embed.vocab_size, src.src_embed.dim);
    m.tgt_embed = EmbeddingTable::zeros(src.tgt_embed.vocab_size, src.tgt_embed.dim);
    m.encoder = LayerStack::zeros_like(src.encoder);
    m.decoder = LayerStack::zeros_like(src.decoder);
    m.attention = AttentionParams::zeros(src.attention.wq.rows, src.attention.wq.cols,
                                         src.attention.wk.cols);
    m.bridge_w = Tensor2D::zeros_like(src.bridge_w);
    m.bridge_b = Tensor2D::zeros_like(src.bridge_b);
    m.out_w = Tensor2D::zeros_like(src.out_w);
    m.out_b = Tensor2D::zeros_like(src.out_b);
    return m;
}

AttendResult attend(const AttentionParams &p, const Vec &query, const std::vector<Vec> &annotations) {
    if (annotations.empty()) throw ArgumentError("attend: no annotations");
    const size_t A = p.v.rows;
    const Vec q_proj = matvec(p.wq, query);
    Vec scores(annotations.size());
    for (size_t j = 0; j < annotations.size(); ++j) {
        Vec u = matvec(p.wk, annotations[j]);
        double s = 0.0;
        for (size_t a = 0; a < A; ++a) s += p.v.values[a] * std::tanh(u[a] + q_proj[a]);
        scores[j] = s;
    }
    AttendResult res;
    res.weights = softmax(scores);
    res.context.assign(annotations[0].size(), 0.0);
    for (size_t j = 0; j < annotations.size(); ++j) axpy(res.weights[j], annotations[j], res.context);
    return res;
}

// --- shared forward machinery ---------------------------------------------

namespace {

std::vector<Vec> embed_sequence(const EmbeddingTable &table, const std::vector<size_t> &ids,
                                bool reverse) {
    if (ids.empty()) throw ArgumentError("encode: empty source");
    std::vector<Vec> out;
    out.reserve(ids.size());
    for (size_t i = 0; i < ids.size(); ++i)
        out.push_back(table.lookup(ids[reverse ? ids.size() - 1 - i : i]));
    return out;
}

// Decoder initial state: tanh affine of the final encoder annotation,
// sliced into per-layer h (then per-layer c for LSTM).
struct BridgeCache {
    Vec enc_final;
    Vec activated; // tanh(bridge_w enc_final + bridge_b)
};

StackState apply_bridge(const Seq2SeqModel &m, const Vec &enc_final, BridgeCache *cache) {
    Vec pre = matvec(m.bridge_w, enc_final);
    for (size_t i = 0; i < pre.size(); ++i) pre[i] = std::tanh(pre[i] + m.bridge_b.values[i]);
    StackState st = StackState::zeros(m.decoder);
    const size_t H = m.config.hidden;
    size_t off = 0;
    for (size_t l = 0; l < m.config.layers; ++l, off += H)
        std::copy(pre.begin() + off, pre.begin() + off + H, st.h[l].begin());
    if (m.config.cell == CellKind::Lstm)
        for (size_t l = 0; l < m.config.layers; ++l, off += H)
            std::copy(pre.begin() + off, pre.begin() + off + H, st.c[l].begin());
    if (cache) {
        cache->enc_final = enc_final;
        cache->activated = std::move(pre);
    }
    return st;
}

// d(init state) -> accumulate bridge grads, return d(enc_final).
Vec bridge_backward(const Seq2SeqModel &m, const BridgeCache &cache, const StackState &d_init,
                    Seq2SeqModel &grads) {
    const size_t H = m.config.hidden;
    Vec d_act(cache.activated.size(), 0.0);
    size_t off = 0;
    for (size_t l = 0; l < m.config.layers; ++l, off += H)
        for (size_t j = 0; j < H; ++j) d_act[off + j] = d_init.h[l][j];
    if (m.config.cell == CellKind::Lstm)
        for (size_t l = 0; l < m.config.layers; ++l, off += H)
            for (size_t j = 0; j < H; ++j) d_act[off + j] = d_init.c[l][j];
    Vec d_pre(d_act.size());
    for (size_t i = 0; i < d_act.size(); ++i) {
        const double a = cache.activated[i];
        d_pre[i] = d_act[i] * (1.0 - a * a);
    }
    add_outer(grads.bridge_w, d_pre, cache.enc_final);
    for (size_t i = 0; i < d_pre.size(); ++i) grads.bridge_b.values[i] += d_pre[i];
    return matvec_transpose(m.bridge_w, d_pre);
}

struct AttendCache {
    Vec q_proj;
    std::vector<Vec> tanh_u; // tanh(q_proj + key_j) per annotation
    Vec weights;
    Vec context;
};

// Keys (wk . annotation_j) are shared across decoder steps.
AttendResult attend_with_keys(const AttentionParams &p, const Vec &query,
                              const std::vector<Vec> &keys, const std::vector<Vec> &annotations,
                              AttendCache *cache) {
    const size_t A = p.v.rows;
    Vec q_proj = matvec(p.wq, query);
    Vec scores(annotations.size());
    std::vector<Vec> tanh_u(annotations.size());
    for (size_t j = 0; j < annotations.size(); ++j) {
        Vec u(A);
        double s = 0.0;
        for (size_t a = 0; a < A; ++a) {
            u[a] = std::tanh(keys[j][a] + q_proj[a]);
            s += p.v.values[a] * u[a];
        }
        tanh_u[j] = std::move(u);
        scores[j] = s;
    }
    AttendResult res;
    res.weights = softmax(scores);
    res.context.assign(annotations[0].size(), 0.0);
    for (size_t j = 0; j < annotations.size(); ++j) axpy(res.weights[j], annotations[j], res.context);
    if (cache) {
        cache->q_proj = std::move(q_proj);
        cache->tanh_u = std::move(tanh_u);
        cache->weights = res.weights;
        cache->context = res.context;
    }
    return res;
}

// Returns d(query); accumulates into d_annotations and attention grads.
Vec attend_backward(const AttentionParams &p, const AttendCache &cache, const Vec &query,
                    const std::vector<Vec> &annotations, const Vec &d_context,
                    Seq2SeqModel &grads, std::vector<Vec> &d_annotations) {
    const size_t A = p.v.rows;
    const size_t J = annotations.size();
    // context = sum_j w_j ann_j
    Vec d_w(J);
    for (size_t j = 0; j < J; ++j) {
        double acc = 0.0;
        for (size_t i = 0; i < d_context.size(); ++i) acc += d_context[i] * annotations[j][i];
        d_w[j] = acc;
        axpy(cache.weights[j], d_context, d_annotations[j]);
    }
    // softmax backward
    double dot = 0.0;
    for (size_t j = 0; j < J; ++j) dot += d_w[j] * cache.weights[j];
    Vec d_scores(J);
    for (size_t j = 0; j < J; ++j) d_scores[j] = cache.weights[j] * (d_w[j] - dot);
    // score_j = v . tanh_u_j
    Vec d_qproj(A, 0.0);
    for (size_t j = 0; j < J; ++j) {
        const double ds = d_scores[j];
        if (ds == 0.0) continue;
        Vec d_arg(A);
        for (size_t a = 0; a < A; ++a) {
            const double u = cache.tanh_u[j][a];
            grads.attention.v.values[a] += ds * u;
            d_arg[a] = ds * p.v.values[a] * (1.0 - u * u);
            d_qproj[a] += d_arg[a];
        }
        add_outer(grads.attention.wk, d_arg, annotations[j]);
        axpy(1.0, matvec_transpose(p.wk, d_arg), d_annotations[j]);
    }
    add_outer(grads.attention.wq, d_qproj, query);
    return matvec_transpose(p.wq, d_qproj);
}

// Decoder emissions never produce epsilon/pad/go; EOS stays available so
// decoding can terminate.
constexpr double kMaskedLogProb = -1e30;

void mask_non_emittable(Vec &logp) {
    logp[CodepointVocabulary::kEpsilonId] = kMaskedLogProb;
    logp[CodepointVocabulary::kPadId] = kMaskedLogProb;
    logp[CodepointVocabulary::kGoId] = kMaskedLogProb;
}

} // namespace

std::vector<Vec> encode(const Seq2SeqModel &model, const std::vector<size_t> &source_ids,
                        bool reverse) {
    const std::vector<Vec> inputs = embed_sequence(model.src_embed, source_ids, reverse);
    return run_sequence(model.encoder, inputs).back();
}

double teacher_forced_loss_value(const Seq2SeqModel &model, const std::vector<size_t> &source_ids,
                                 const std::vector<size_t> &target_ids) {
    if (target_ids.empty() || target_ids.back() != CodepointVocabulary::kEosId)
        throw ArgumentError("teacher_forced_loss: target must end with EOS");
    const std::vector<Vec> inputs =
        embed_sequence(model.src_embed, source_ids, model.config.reverse_source);
    const std::vector<Vec> annotations = run_sequence(model.encoder, inputs).back();
    std::vector<Vec> keys(annotations.size());
    for (size_t j = 0; j < annotations.size(); ++j) keys[j] = matvec(model.attention.wk, annotations[j]);
    StackState state = apply_bridge(model, annotations.back(), nullptr);

    double loss = 0.0;
    for (size_t t = 0; t < target_ids.size(); ++t) {
        const size_t prev = t == 0 ? CodepointVocabulary::kGoId : target_ids[t - 1];
        const Vec x = model.tgt_embed.lookup(prev);
        const Vec h_top = stack_step(model.decoder, x, state, nullptr);
        const AttendResult att = attend_with_keys(model.attention, h_top, keys, annotations, nullptr);
        Vec feat = h_top;
        feat.insert(feat.end(), att.context.begin(), att.context.end());
        Vec logits = matvec(model.out_w, feat);
        for (size_t i = 0; i < logits.size(); ++i) logits[i] += model.out_b.values[i];
        loss -= log_softmax(logits)[target_ids[t]];
    }
    return loss / static_cast<double>(target_ids.size());
}

Seq2SeqLossResult teacher_forced_loss(const Seq2SeqModel &model,
                                      const std::vector<size_t> &source_ids,
                                      const std::vector<size_t> &target_ids) {
    if (target_ids.empty() || target_ids.back() != CodepointVocabulary::kEosId)
        throw ArgumentError("teacher_forced_loss: target must end with EOS");
    const size_t T = target_ids.size();
    const size_t H = model.config.hidden;

    // encoder forward
    const bool reverse = model.config.reverse_source;
    const std::vector<Vec> enc_inputs = embed_sequence(model.src_embed, source_ids, reverse);
    const StackTrace enc_trace = run_sequence_cached(model.encoder, enc_inputs);
    const std::vector<Vec> &annotations = enc_trace.outputs();
    const size_t J = annotations.size();
    std::vector<Vec> keys(J);
    for (size_t j = 0; j < J; ++j) keys[j] = matvec(model.attention.wk, annotations[j]);

    BridgeCache bridge_cache;
    StackState state = apply_bridge(model, annotations.back(), &bridge_cache);

    // decoder forward with caches
    struct StepCache {
        std::vector<CellCache> cells;
        Vec h_top;
        AttendCache att;
        Vec probs; // softmax over logits
        Vec feat;
    };
    std::vector<StepCache> steps(T);
    double loss = 0.0;
    for (size_t t = 0; t < T; ++t) {
        StepCache &sc = steps[t];
        const size_t prev = t == 0 ? CodepointVocabulary::kGoId : target_ids[t - 1];
        const Vec x = model.tgt_embed.lookup(prev);
        sc.h_top = stack_step(model.decoder, x, state, &sc.cells);
        attend_with_keys(model.attention, sc.h_top, keys, annotations, &sc.att);
        sc.feat = sc.h_top;
        sc.feat.insert(sc.feat.end(), sc.att.context.begin(), sc.att.context.end());
        Vec logits = matvec(model.out_w, sc.feat);
        for (size_t i = 0; i < logits.size(); ++i) logits[i] += model.out_b.values[i];
        const Vec logp = log_softmax(logits);
        loss -= logp[target_ids[t]];
        sc.probs.resize(logp.size());
        for (size_t i = 0; i < logp.size(); ++i) sc.probs[i] = std::exp(logp[i]);
    }

    Seq2SeqLossResult res;
    res.loss = loss / static_cast<double>(T);
    res.grads = Seq2SeqModel::zeros_like(model);
    Seq2SeqModel &g = res.grads;

    // decoder backward
    const double inv_T = 1.0 / static_cast<double>(T);
    std::vector<Vec> d_annotations(J, Vec(annotations[0].size(), 0.0));
    StackState d_state = StackState::zeros(model.decoder);
    for (size_t t = T; t-- > 0;) {
        const StepCache &sc = steps[t];
        Vec d_logits = sc.probs;
        for (double &v : d_logits) v *= inv_T;
        d_logits[target_ids[t]] -= inv_T;
        add_outer(g.out_w, d_logits, sc.feat);
        for (size_t i = 0; i < d_logits.size(); ++i) g.out_b.values[i] += d_logits[i];
        const Vec d_feat = matvec_transpose(model.out_w, d_logits);
        Vec d_h_top(d_feat.begin(), d_feat.begin() + H);
        const Vec d_context(d_feat.begin() + H, d_feat.end());
        const Vec d_query = attend_backward(model.attention, sc.att, sc.h_top, annotations,
                                            d_context, g, d_annotations);
        axpy(1.0, d_query, d_h_top);
        const Vec d_x = stack_step_backward(model.decoder, sc.cells, d_h_top, d_state, g.decoder);
        const size_t prev = t == 0 ? CodepointVocabulary::kGoId : target_ids[t - 1];
        g.tgt_embed.accumulate(prev, d_x);
    }

    // bridge + encoder backward
    axpy(1.0, bridge_backward(model, bridge_cache, d_state, g), d_annotations.back());
    const SequenceGrads enc_grads = backprop_sequence(model.encoder, enc_trace, d_annotations);
    g.encoder = enc_grads.params;
    for (size_t i = 0; i < enc_grads.inputs.size(); ++i) {
        const size_t id = source_ids[reverse ? source_ids.size() - 1 - i : i];
        g.src_embed.accumulate(id, enc_grads.inputs[i]);
    }
    return res;
}

// --- decoding -------------------------------------------------------------

namespace {

struct DecoderContext {
    std::vector<Vec> annotations;
    std::vector<Vec> keys;
    StackState init_state;
};

DecoderContext prepare_decode(const Seq2SeqModel &model, const std::vector<size_t> &source_ids) {
    DecoderContext ctx;
    ctx.annotations =
        run_sequence(model.encoder,
                     embed_sequence(model.src_embed, source_ids, model.config.reverse_source))
            .back();
    ctx.keys.resize(ctx.annotations.size());
    for (size_t j = 0; j < ctx.annotations.size(); ++j)
        ctx.keys[j] = matvec(model.attention.wk, ctx.annotations[j]);
    ctx.init_state = apply_bridge(model, ctx.annotations.back(), nullptr);
    return ctx;
}

Vec decode_step_logp(const Seq2SeqModel &model, const DecoderContext &ctx, size_t prev_sym,
                     StackState &state) {
    const Vec x = model.tgt_embed.lookup(prev_sym);
    const Vec h_top = stack_step(model.decoder, x, state, nullptr);
    const AttendResult att =
        attend_with_keys(model.attention, h_top, ctx.keys, ctx.annotations, nullptr);
    Vec feat = h_top;
    feat.insert(feat.end(), att.context.begin(), att.context.end());
    Vec logits = matvec(model.out_w, feat);
    for (size_t i = 0; i < logits.size(); ++i) logits[i] += model.out_b.values[i];
    Vec logp = log_softmax(logits);
    mask_non_emittable(logp);
    return logp;
}

} // namespace

std::vector<size_t> greedy_decode(const Seq2SeqModel &model, const std::vector<size_t> &source_ids,
                                  const DecodeLimits &limits) {
    if (limits.max_length < 1) throw ArgumentError("greedy_decode: max_length must be >= 1");
    const DecoderContext ctx = prepare_decode(model, source_ids);
    StackState state = ctx.init_state;
    std::vector<size_t> out;
    size_t prev = CodepointVocabulary::kGoId;
    for (size_t t = 0; t < limits.max_length; ++t) {
        const Vec logp = decode_step_logp(model, ctx, prev, state);
        const size_t best =
            static_cast<size_t>(std::max_element(logp.begin(), logp.end()) - logp.begin());
        if (best == CodepointVocabulary::kEosId) break;
        out.push_back(best);
        prev = best;
    }
    return out;
}

std::vector<size_t> beam_decode(const Seq2SeqModel &model, const std::vector<size_t> &source_ids,
                                const DecodeLimits &limits) {
    if (limits.beam_width < 1) throw ArgumentError("beam_decode: width must be >= 1");
    if (limits.max_length < 1) throw ArgumentError("beam_decode: max_length must be >= 1");
    const DecoderContext ctx = prepare_decode(model, source_ids);

    struct Hyp {
        std::vector<size_t> symbols;
        double log_prob = 0.0;
        StackState state;
        size_t prev = CodepointVocabulary::kGoId;
    };
    struct Finished {
        std::vector<size_t> symbols;
        double score; // log-prob normalized by emitted length (incl. EOS)
    };
    std::vector<Hyp> live{Hyp{{}, 0.0, ctx.init_state, CodepointVocabulary::kGoId}};
    std::vector<Finished> finished;

    for (size_t t = 0; t < limits.max_length && !live.empty(); ++t) {
        struct Cand {
            size_t hyp;
            size_t sym;
            double log_prob;
        };
        std::vector<Cand> cands;
        std::vector<Vec> logps(live.size());
        for (size_t i = 0; i < live.size(); ++i) {
            logps[i] = decode_step_logp(model, ctx, live[i].prev, live[i].state);
            for (size_t s = 0; s < logps[i].size(); ++s)
                cands.push_back({i, s, live[i].log_prob + logps[i][s]});
        }
        std::stable_sort(cands.begin(), cands.end(), [](const Cand &a, const Cand &b) {
            if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
            if (a.hyp != b.hyp) return a.hyp < b.hyp;
            return a.sym < b.sym;
        });
        std::vector<Hyp> next;
        size_t taken = 0;
        for (const Cand &c : cands) {
            if (taken >= limits.beam_width) break;
            ++taken;
            Hyp h = live[c.hyp]; // state already advanced by decode_step_logp
            h.log_prob = c.log_prob;
            if (c.sym == CodepointVocabulary::kEosId) {
                const double len = static_cast<double>(h.symbols.size() + 1);
                finished.push_back({std::move(h.symbols), h.log_prob / len});
            } else {
                h.symbols.push_back(c.sym);
                h.prev = c.sym;
                next.push_back(std::move(h));
            }
        }
        live = std::move(next);
    }
    // length-limited hypotheses compete without an EOS term
    for (Hyp &h : live) {
        const double len = std::max<size_t>(1, h.symbols.size());
        finished.push_back({std::move(h.symbols), h.log_prob / static_cast<double>(len)});
    }

    const Finished *best = nullptr;
    for (const Finished &f : finished)
        if (!best || f.score > best->score) best = &f;
    return best ? best->symbols : std::vector<size_t>{};
}

} // namespace translit
