#include "translit/training.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "translit/error.hpp"

namespace translit {

double global_norm(const std::vector<const Tensor2D *> &grads) {
    double sq = 0.0;
    for (const Tensor2D *t : grads)
        for (double v : t->values) sq += v * v;
    return std::sqrt(sq);
}

void clip_gradients(const std::vector<Tensor2D *> &grads, double max_norm) {
    if (max_norm <= 0.0) throw ArgumentError("clip_gradients: max_norm must be > 0");
    std::vector<const Tensor2D *> view(grads.begin(), grads.end());
    const double norm = global_norm(view);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (Tensor2D *t : grads)
        for (double &v : t->values) v *= scale;
}

void sgd_momentum_step(Tensor2D &params, const Tensor2D &grads, Tensor2D &velocity, double lr,
                       double momentum) {
    if (!params.same_shape(grads) || !params.same_shape(velocity))
        throw ShapeError("sgd_momentum_step: shape mismatch");
    for (size_t i = 0; i < params.values.size(); ++i) {
        velocity.values[i] = momentum * velocity.values[i] - lr * grads.values[i];
        params.values[i] += velocity.values[i];
    }
}

ModelFamily family_from_name(const std::string &name) {
    if (name == "ei") return ModelFamily::Ei;
    if (name == "seq2seq") return ModelFamily::Seq2Seq;
    throw ArgumentError("unknown model family: " + name + " (expected ei or seq2seq)");
}

const char *family_name(ModelFamily family) {
    return family == ModelFamily::Ei ? "ei" : "seq2seq";
}

namespace {

struct EncodedPair {
    std::vector<size_t> source;
    std::vector<size_t> target;
};

std::vector<EncodedPair> encode_pairs(const PairList &pairs, const CodepointVocabulary &src_vocab,
                                      const CodepointVocabulary &tgt_vocab, bool append_eos) {
    std::vector<EncodedPair> out;
    out.reserve(pairs.size());
    for (const auto &p : pairs) {
        EncodedPair ep{src_vocab.encode(p.source), tgt_vocab.encode(p.target)};
        if (append_eos) ep.target.push_back(CodepointVocabulary::kEosId);
        out.push_back(std::move(ep));
    }
    return out;
}

struct EvalScore {
    double cer = -1.0;
    double wer = -1.0;
};

template <class DecodeFn>
EvalScore score_split(const PairList &pairs, DecodeFn &&decode) {
    std::vector<std::u32string> refs, hyps;
    refs.reserve(pairs.size());
    hyps.reserve(pairs.size());
    for (const auto &p : pairs) {
        refs.push_back(p.target);
        hyps.push_back(decode(p.source));
    }
    return {cer(refs, hyps), wer(refs, hyps)};
}

// Shared epoch/batch loop for both families. loss_fn returns per-pair loss
// and accumulates gradients; it may throw InfeasibleTargetError, which skips
// the pair with a count.
template <class Model, class LossFn, class DecodeFn>
TrainResult train_impl(Model model, const CorpusSplits &splits,
                       const CodepointVocabulary &src_vocab, const CodepointVocabulary &tgt_vocab,
                       const Hyperparameters &hparams, const TrainOptions &options, bool append_eos,
                       LossFn &&loss_fn, DecodeFn &&decode_fn) {
    hparams.validate();
    if (splits.train.empty()) throw ArgumentError("train: empty training split");

    const std::vector<EncodedPair> train_set =
        encode_pairs(splits.train, src_vocab, tgt_vocab, append_eos);

    Model velocity = Model::zeros_like(model);
    Model grads = Model::zeros_like(model);

    Rng shuffle_rng = Rng(hparams.seed).fork(1);

    TrainResult result;
    Model best_model = model;
    double best_wer = -1.0, best_cer = -1.0;
    uint64_t best_step = 0;

    const auto decode_token = [&](const Model &m, const std::u32string &source) -> std::u32string {
        return tgt_vocab.decode(decode_fn(m, src_vocab.encode(source)));
    };

    const auto run_eval = [&](uint64_t step) {
        if (splits.eval.empty()) return;
        const EvalScore s =
            score_split(splits.eval, [&](const std::u32string &src) { return decode_token(model, src); });
        if (options.verbose)
            fprintf(stderr, "step %llu eval CER %.2f WER %.2f\n",
                    static_cast<unsigned long long>(step), s.cer, s.wer);
        const bool better = best_wer < 0.0 || s.wer < best_wer ||
                            (s.wer == best_wer && s.cer < best_cer);
        if (better) {
            best_model = model;
            best_wer = s.wer;
            best_cer = s.cer;
            best_step = step;
        }
        result.final_eval_cer = s.cer;
        result.final_eval_wer = s.wer;
    };

    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    uint64_t step = 0;
    bool done = false;
    for (size_t epoch = 0; epoch < options.max_epochs && !done; ++epoch) {
        for (size_t i = order.size(); i-- > 1;)
            std::swap(order[i],
                      order[static_cast<size_t>(shuffle_rng.uniform_int(0, static_cast<int64_t>(i)))]);
        for (size_t start = 0; start < order.size() && !done; start += hparams.batch_size) {
            const size_t end = std::min(order.size(), start + hparams.batch_size);
            grads = Model::zeros_like(model);
            double batch_loss = 0.0;
            size_t contributed = 0;
            for (size_t bi = start; bi < end; ++bi) {
                const EncodedPair &ep = train_set[order[bi]];
                try {
                    batch_loss += loss_fn(model, ep, grads);
                    ++contributed;
                } catch (const InfeasibleTargetError &) {
                    ++result.skipped_infeasible;
                }
            }
            if (contributed == 0) continue;
            const double mean_loss = batch_loss / static_cast<double>(contributed);
            if (!std::isfinite(mean_loss))
                throw NumericError("training diverged: non-finite loss at step " +
                                   std::to_string(step));
            if (contributed > 1) {
                const double inv = 1.0 / static_cast<double>(contributed);
                grads.visit([&](const std::string &, Tensor2D &t) {
                    for (double &v : t.values) v *= inv;
                });
            }
            clip_gradients(grads, hparams.clip_norm);
            sgd_momentum_step(model, grads, velocity, hparams.learning_rate, hparams.momentum);
            ++step;
            if (options.loss_curve_stride && step % options.loss_curve_stride == 0)
                result.loss_curve.push_back(mean_loss);
            if (options.eval_every && step % options.eval_every == 0) run_eval(step);
            if (step >= options.max_steps) done = true;
        }
        run_eval(step); // end of epoch
    }
    if (best_wer < 0.0) {
        run_eval(step);
        if (best_wer < 0.0) { // no eval split at all
            best_model = model;
            best_step = step;
        }
    }

    result.steps_run = step;
    result.checkpoint.model = std::move(best_model);
    result.checkpoint.hparams = hparams;
    result.checkpoint.src_vocab = src_vocab;
    result.checkpoint.tgt_vocab = tgt_vocab;
    result.checkpoint.metadata = {best_step, best_cer, best_wer, hparams.seed};
    return result;
}

} // namespace

TrainResult train(ModelFamily family, const CorpusSplits &splits,
                  const CodepointVocabulary &src_vocab, const CodepointVocabulary &tgt_vocab,
                  const Hyperparameters &hparams, const TrainOptions &options) {
    Rng rng(hparams.seed);
    if (family == ModelFamily::Ei) {
        EiConfig cfg;
        cfg.cell = hparams.cell;
        cfg.layers = hparams.layers;
        cfg.hidden = hparams.hidden;
        cfg.bidirectional = hparams.bidirectional;
        cfg.epsilons = hparams.epsilons;
        EiModel model = EiModel::create(cfg, src_vocab.total_size(), tgt_vocab.total_size(), rng);
        return train_impl(
            std::move(model), splits, src_vocab, tgt_vocab, hparams, options, /*append_eos=*/false,
            [](const EiModel &m, const EncodedPair &ep, EiModel &grads) {
                EiLossResult r = ei_loss(m, ep.source, ep.target);
                std::vector<Tensor2D *> dst, src;
                grads.visit([&](const std::string &, Tensor2D &t) { dst.push_back(&t); });
                r.grads.visit([&](const std::string &, Tensor2D &t) { src.push_back(&t); });
                for (size_t i = 0; i < dst.size(); ++i)
                    for (size_t k = 0; k < dst[i]->values.size(); ++k)
                        dst[i]->values[k] += src[i]->values[k];
                // per-symbol loss keeps the curve comparable across lengths
                return r.nll / static_cast<double>(std::max<size_t>(1, ep.target.size()));
            },
            [](const EiModel &m, const std::vector<size_t> &src) { return ei_decode(m, src); });
    }
    Seq2SeqConfig cfg;
    cfg.cell = hparams.cell;
    cfg.layers = hparams.layers;
    cfg.hidden = hparams.hidden;
    cfg.bidirectional_encoder = hparams.bidirectional;
    Seq2SeqModel model =
        Seq2SeqModel::create(cfg, src_vocab.total_size(), tgt_vocab.total_size(), rng);
    return train_impl(
        std::move(model), splits, src_vocab, tgt_vocab, hparams, options, /*append_eos=*/true,
        [](const Seq2SeqModel &m, const EncodedPair &ep, Seq2SeqModel &grads) {
            Seq2SeqLossResult r = teacher_forced_loss(m, ep.source, ep.target);
            std::vector<Tensor2D *> dst, src;
            grads.visit([&](const std::string &, Tensor2D &t) { dst.push_back(&t); });
            r.grads.visit([&](const std::string &, Tensor2D &t) { src.push_back(&t); });
            for (size_t i = 0; i < dst.size(); ++i)
                for (size_t k = 0; k < dst[i]->values.size(); ++k)
                    dst[i]->values[k] += src[i]->values[k];
            return r.loss;
        },
        [](const Seq2SeqModel &m, const std::vector<size_t> &src) {
            return greedy_decode(m, src, DecodeLimits::for_source(src.size()));
        });
}

SearchSpace SearchSpace::ei_defaults() {
    SearchSpace s;
    s.learning_rate = {1e-5, 0.1};
    s.momentum = {0.5, 0.99};
    s.batch_size = {1, 1};
    s.clip_norm = {9.0, 9.0};
    s.hidden = {100, 1000};
    s.epsilons = 3;
    return s;
}

SearchSpace SearchSpace::seq2seq_defaults() {
    SearchSpace s;
    s.learning_rate = {1e-5, 10.0};
    s.momentum = {0.5, 0.99};
    s.batch_size = {1, 50};
    s.clip_norm = {1.0, 10.0};
    s.hidden = {50, 1000};
    return s;
}

Hyperparameters SearchSpace::sample(Rng &rng, const Hyperparameters &base) const {
    Hyperparameters h = base;
    h.learning_rate = std::exp(rng.uniform(std::log(learning_rate.lo), std::log(learning_rate.hi)));
    h.momentum = rng.uniform(momentum.lo, momentum.hi);
    h.batch_size = static_cast<size_t>(rng.uniform_int(batch_size.lo, batch_size.hi));
    h.clip_norm = clip_norm.fixed() ? clip_norm.lo : rng.uniform(clip_norm.lo, clip_norm.hi);
    h.hidden = static_cast<size_t>(rng.uniform_int(hidden.lo, hidden.hi));
    h.epsilons = epsilons;
    return h;
}

SearchResult random_search(ModelFamily family, const SearchSpace &space, size_t trials,
                           uint64_t seed, const CorpusSplits &splits,
                           const CodepointVocabulary &src_vocab,
                           const CodepointVocabulary &tgt_vocab, const Hyperparameters &base,
                           const TrainOptions &options, size_t workers) {
    if (trials < 1) throw ArgumentError("random_search: trials must be >= 1");
    // All sampling happens up front from one stream so results do not depend
    // on worker scheduling.
    Rng rng(seed);
    std::vector<TrialRecord> records(trials);
    for (size_t i = 0; i < trials; ++i) {
        records[i].id = i;
        records[i].hparams = space.sample(rng, base);
        records[i].hparams.seed = rng.next_u64();
    }

    std::vector<TrainResult> results(trials);
    std::atomic<size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= trials) return;
            try {
                results[i] = train(family, splits, src_vocab, tgt_vocab, records[i].hparams, options);
                records[i].eval_cer = results[i].checkpoint.metadata.eval_cer;
                records[i].eval_wer = results[i].checkpoint.metadata.eval_wer;
            } catch (const std::exception &e) {
                records[i].failed = true;
                records[i].error = e.what();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < std::min(workers, trials); ++w) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }

    SearchResult out;
    size_t best = trials; // sentinel
    for (size_t i = 0; i < trials; ++i) {
        if (records[i].failed) continue;
        if (best == trials || records[i].eval_wer < records[best].eval_wer ||
            (records[i].eval_wer == records[best].eval_wer && records[i].eval_cer < records[best].eval_cer))
            best = i;
    }
    if (best == trials) throw NumericError("random_search: every trial failed");
    out.best = std::move(results[best].checkpoint);
    out.best_trial = best;

    if (!splits.test.empty()) {
        const EvalReport rep = evaluate_checkpoint(out.best, splits.test, 0);
        records[best].test_cer = rep.cer_percent;
        records[best].test_wer = rep.wer_percent;
    }
    out.trials = std::move(records);
    return out;
}

std::string trial_table_tsv(const SearchResult &result) {
    std::ostringstream out;
    out << "trial\tlr\tmomentum\tbatch\tclip\thidden\tlayers\tcell\tbidi\tepsilons\tseed\t"
           "status\teval_cer\teval_wer\ttest_cer\ttest_wer\n";
    char buf[64];
    const auto pct = [&](double v) -> std::string {
        if (v < 0.0) return "-";
        snprintf(buf, sizeof buf, "%.4f", v);
        return buf;
    };
    for (const auto &t : result.trials) {
        snprintf(buf, sizeof buf, "%.6g", t.hparams.learning_rate);
        out << t.id << "\t" << buf << "\t";
        snprintf(buf, sizeof buf, "%.6g", t.hparams.momentum);
        out << buf << "\t" << t.hparams.batch_size << "\t";
        snprintf(buf, sizeof buf, "%.6g", t.hparams.clip_norm);
        out << buf << "\t" << t.hparams.hidden << "\t" << t.hparams.layers << "\t"
            << cell_kind_name(t.hparams.cell) << "\t" << (t.hparams.bidirectional ? 1 : 0) << "\t"
            << t.hparams.epsilons << "\t" << t.hparams.seed << "\t"
            << (t.failed ? "failed" : "ok") << "\t" << pct(t.eval_cer) << "\t" << pct(t.eval_wer)
            << "\t" << pct(t.test_cer) << "\t" << pct(t.test_wer) << "\n";
    }
    return out.str();
}

EvalReport evaluate_checkpoint(const ModelCheckpoint &ck, const PairList &pairs, size_t top_n,
                               size_t beam_width) {
    return error_report(
        [&](const std::u32string &src) { return ck.transliterate(src, beam_width); }, pairs, top_n);
}

} // namespace translit
