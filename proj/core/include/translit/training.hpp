#pragma once

#include <string>
#include <vector>

#include "translit/checkpoint.hpp"
#include "translit/metrics.hpp"

namespace translit {

// --- optimizer primitives -------------------------------------------------

double global_norm(const std::vector<const Tensor2D *> &grads);

// Scales every gradient by max_norm / g when the global L2 norm g exceeds
// max_norm; otherwise leaves them unchanged.
void clip_gradients(const std::vector<Tensor2D *> &grads, double max_norm);

template <class Model>
concept VisitableModel = requires(Model m) {
    m.visit([](const std::string &, Tensor2D &) {});
};

template <VisitableModel Model> void clip_gradients(Model &grads, double max_norm) {
    std::vector<Tensor2D *> all;
    grads.visit([&](const std::string &, Tensor2D &t) { all.push_back(&t); });
    clip_gradients(all, max_norm);
}

// Classical momentum: v' = momentum * v - lr * g ; p' = p + v'.
void sgd_momentum_step(Tensor2D &params, const Tensor2D &grads, Tensor2D &velocity, double lr,
                       double momentum);

template <VisitableModel Model>
void sgd_momentum_step(Model &params, Model &grads, Model &velocity, double lr, double momentum) {
    std::vector<Tensor2D *> p, g, v;
    params.visit([&](const std::string &, Tensor2D &t) { p.push_back(&t); });
    grads.visit([&](const std::string &, Tensor2D &t) { g.push_back(&t); });
    velocity.visit([&](const std::string &, Tensor2D &t) { v.push_back(&t); });
    for (size_t i = 0; i < p.size(); ++i) sgd_momentum_step(*p[i], *g[i], *v[i], lr, momentum);
}

// --- training loop --------------------------------------------------------

struct TrainOptions {
    size_t max_steps = 200000; // one step = one mini-batch
    size_t max_epochs = 50;
    size_t eval_every = 1000;
    size_t loss_curve_stride = 1; // record every n-th step's mean loss
    bool verbose = false;
};

struct TrainResult {
    ModelCheckpoint checkpoint; // best-eval-WER snapshot
    std::vector<double> loss_curve;
    size_t steps_run = 0;
    size_t skipped_infeasible = 0;
    double final_eval_cer = -1.0;
    double final_eval_wer = -1.0;
};

enum class ModelFamily { Ei, Seq2Seq };
ModelFamily family_from_name(const std::string &name);
const char *family_name(ModelFamily family);

TrainResult train(ModelFamily family, const CorpusSplits &splits,
                  const CodepointVocabulary &src_vocab, const CodepointVocabulary &tgt_vocab,
                  const Hyperparameters &hparams, const TrainOptions &options);

// --- random hyperparameter search -----------------------------------------

struct SearchSpace {
    struct Range {
        double lo = 0.0, hi = 0.0;
        bool fixed() const { return lo == hi; }
    };
    struct IntRange {
        int64_t lo = 0, hi = 0;
    };

    Range learning_rate;  // sampled log-uniformly
    Range momentum;
    IntRange batch_size;
    Range clip_norm;
    IntRange hidden;
    size_t epsilons = 3; // EI only, fixed

    static SearchSpace ei_defaults();      // lr [1e-5, 0.1], batch 1, clip 9
    static SearchSpace seq2seq_defaults(); // lr [1e-5, 10], batch [1,50], clip [1,10]

    Hyperparameters sample(Rng &rng, const Hyperparameters &base) const;
};

struct TrialRecord {
    size_t id = 0;
    Hyperparameters hparams;
    bool failed = false;
    std::string error;
    double eval_cer = -1.0;
    double eval_wer = -1.0;
    double test_cer = -1.0; // winner only
    double test_wer = -1.0;
};

struct SearchResult {
    ModelCheckpoint best;
    size_t best_trial = 0;
    std::vector<TrialRecord> trials;
};

SearchResult random_search(ModelFamily family, const SearchSpace &space, size_t trials,
                           uint64_t seed, const CorpusSplits &splits,
                           const CodepointVocabulary &src_vocab,
                           const CodepointVocabulary &tgt_vocab, const Hyperparameters &base,
                           const TrainOptions &options, size_t workers = 1);

// trial id, sampled hparams, eval CER/WER, test CER/WER (winner only).
std::string trial_table_tsv(const SearchResult &result);

// Greedy-decode every pair and score.
EvalReport evaluate_checkpoint(const ModelCheckpoint &ck, const PairList &pairs, size_t top_n = 10,
                               size_t beam_width = 1);

} // namespace translit
