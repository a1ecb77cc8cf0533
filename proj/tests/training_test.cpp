#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "translit/error.hpp"
#include "translit/training.hpp"

using namespace translit;

TEST_CASE("global_norm of a 3-4 pair is 5") {
    Tensor2D a{{3.0}};
    Tensor2D b{{4.0}};
    CHECK(global_norm({&a, &b}) == doctest::Approx(5.0));
    CHECK(global_norm({}) == 0.0);
}

TEST_CASE("clip_gradients halves a norm-18 gradient at max 9") {
    // single tensor [18] has L2 norm 18
    Tensor2D g{{18.0}};
    std::vector<Tensor2D *> grads = {&g};
    clip_gradients(grads, 9.0);
    CHECK(g(0, 0) == doctest::Approx(9.0));
    // multi-tensor: [2] and [8, 16] -> sum of squares 324, norm 18 again
    Tensor2D a{{2.0}};
    Tensor2D b{{8.0, 16.0}};
    std::vector<Tensor2D *> both = {&a, &b};
    clip_gradients(both, 9.0);
    CHECK(a(0, 0) == doctest::Approx(1.0));
    CHECK(b(0, 0) == doctest::Approx(4.0));
    CHECK(b(0, 1) == doctest::Approx(8.0));
    CHECK(global_norm({&a, &b}) == doctest::Approx(9.0));
}

TEST_CASE("clip_gradients leaves small gradients untouched") {
    Tensor2D g{{1.0, -2.0}};
    std::vector<Tensor2D *> grads = {&g};
    clip_gradients(grads, 9.0);
    CHECK(g(0, 0) == 1.0);
    CHECK(g(0, 1) == -2.0);
    Tensor2D z(1, 3);
    std::vector<Tensor2D *> zero = {&z};
    CHECK_NOTHROW(clip_gradients(zero, 9.0));
    CHECK_THROWS_AS(clip_gradients(grads, 0.0), ArgumentError);
}

TEST_CASE("sgd_momentum_step worked values") {
    Tensor2D p(1, 1), v(1, 1);
    Tensor2D g{{1.0}};
    sgd_momentum_step(p, g, v, 0.1, 0.9);
    CHECK(p(0, 0) == doctest::Approx(-0.1));
    CHECK(v(0, 0) == doctest::Approx(-0.1));
    sgd_momentum_step(p, g, v, 0.1, 0.9);
    // v = 0.9 * -0.1 - 0.1 = -0.19 ; p = -0.1 - 0.19
    CHECK(v(0, 0) == doctest::Approx(-0.19));
    CHECK(p(0, 0) == doctest::Approx(-0.29));
}

TEST_CASE("sgd_momentum_step rejects shape mismatch") {
    Tensor2D p(1, 2), v(1, 2), g(2, 1);
    CHECK_THROWS_AS(sgd_momentum_step(p, g, v, 0.1, 0.9), ShapeError);
}

TEST_CASE("momentum sgd minimizes a quadratic") {
    // f(x) = x^2, df/dx = 2x, start at x = 3
    for (double momentum : {0.0, 0.9}) {
        Tensor2D x{{3.0}}, v(1, 1);
        const double lr = momentum == 0.0 ? 0.1 : 0.01;
        for (int step = 0; step < 500; ++step) {
            Tensor2D g{{2.0 * x(0, 0)}};
            sgd_momentum_step(x, g, v, lr, momentum);
        }
        CHECK(std::abs(x(0, 0)) < 1e-3);
    }
}

TEST_CASE("model-level clip and step run over every parameter") {
    Rng rng(71);
    EiConfig cfg;
    cfg.hidden = 3;
    cfg.epsilons = 1;
    EiModel grads = EiModel::create(cfg, 6, 6, rng);
    grads.visit([](const std::string &, Tensor2D &t) {
        for (double &v : t.values) v = 1.0;
    });
    size_t count = 0;
    grads.visit([&](const std::string &, Tensor2D &t) { count += t.values.size(); });
    const double norm = std::sqrt(static_cast<double>(count));
    clip_gradients(grads, norm / 2.0);
    grads.visit([&](const std::string &, Tensor2D &t) {
        for (double v : t.values) CHECK(v == doctest::Approx(0.5));
    });
    EiModel params = EiModel::create(cfg, 6, 6, rng);
    params.visit([](const std::string &, Tensor2D &t) { t.fill(0.0); });
    EiModel velocity = EiModel::zeros_like(params);
    sgd_momentum_step(params, grads, velocity, 0.1, 0.0);
    params.visit([&](const std::string &, Tensor2D &t) {
        for (double v : t.values) CHECK(v == doctest::Approx(-0.05));
    });
}

TEST_CASE("hyperparameter validation") {
    Hyperparameters h;
    CHECK_NOTHROW(h.validate());
    auto bad = [&](auto mutate) {
        Hyperparameters x;
        mutate(x);
        CHECK_THROWS_AS(x.validate(), ArgumentError);
    };
    bad([](Hyperparameters &x) { x.learning_rate = 0.0; });
    bad([](Hyperparameters &x) { x.momentum = 1.0; });
    bad([](Hyperparameters &x) { x.momentum = -0.1; });
    bad([](Hyperparameters &x) { x.batch_size = 0; });
    bad([](Hyperparameters &x) { x.clip_norm = 0.0; });
    bad([](Hyperparameters &x) { x.hidden = 0; });
    bad([](Hyperparameters &x) { x.layers = 0; });
}

TEST_CASE("family names round trip") {
    CHECK(family_from_name("ei") == ModelFamily::Ei);
    CHECK(family_from_name("seq2seq") == ModelFamily::Seq2Seq);
    CHECK(family_from_name(family_name(ModelFamily::Ei)) == ModelFamily::Ei);
    CHECK_THROWS_AS(family_from_name("rnn"), ArgumentError);
}

TEST_CASE("search space samples stay inside their ranges") {
    Rng rng(72);
    const SearchSpace ei = SearchSpace::ei_defaults();
    const SearchSpace s2s = SearchSpace::seq2seq_defaults();
    Hyperparameters base;
    for (int it = 0; it < 1000; ++it) {
        Hyperparameters a = ei.sample(rng, base);
        CHECK(a.learning_rate >= 1e-5);
        CHECK(a.learning_rate <= 0.1);
        CHECK(a.batch_size == 1);
        CHECK(a.clip_norm == 9.0);
        CHECK(a.hidden >= 100);
        CHECK(a.hidden <= 1000);
        CHECK(a.epsilons == 3);
        CHECK_NOTHROW(a.validate());
        Hyperparameters b = s2s.sample(rng, base);
        CHECK(b.learning_rate >= 1e-5);
        CHECK(b.learning_rate <= 10.0);
        CHECK(b.batch_size >= 1);
        CHECK(b.batch_size <= 50);
        CHECK(b.clip_norm >= 1.0);
        CHECK(b.clip_norm <= 10.0);
        CHECK(b.hidden >= 50);
        CHECK(b.hidden <= 1000);
        CHECK_NOTHROW(b.validate());
    }
}

TEST_CASE("search space sampling is deterministic per seed") {
    const SearchSpace space = SearchSpace::seq2seq_defaults();
    Hyperparameters base;
    Rng a(5), b(5);
    for (int it = 0; it < 20; ++it) {
        Hyperparameters x = space.sample(a, base);
        Hyperparameters y = space.sample(b, base);
        CHECK(x.learning_rate == y.learning_rate);
        CHECK(x.hidden == y.hidden);
        CHECK(x.batch_size == y.batch_size);
    }
}

namespace {

ModelCheckpoint tiny_checkpoint(bool ei, uint64_t seed) {
    Rng rng(seed);
    ModelCheckpoint ck;
    ck.src_vocab = CodepointVocabulary({U'a', U'b', U'c'});
    ck.tgt_vocab = CodepointVocabulary({U'x', U'y'});
    ck.hparams.hidden = 3;
    ck.hparams.epsilons = 1;
    ck.hparams.seed = seed;
    ck.metadata = {42, 1.5, 3.25, seed};
    if (ei) {
        EiConfig cfg;
        cfg.hidden = 3;
        cfg.epsilons = 1;
        ck.model = EiModel::create(cfg, ck.src_vocab.total_size(), ck.tgt_vocab.total_size(), rng);
    } else {
        Seq2SeqConfig cfg;
        cfg.hidden = 3;
        ck.model =
            Seq2SeqModel::create(cfg, ck.src_vocab.total_size(), ck.tgt_vocab.total_size(), rng);
    }
    return ck;
}

} // namespace

TEST_CASE("checkpoint bytes start with magic and version") {
    const std::string bytes = tiny_checkpoint(true, 1).serialize();
    REQUIRE(bytes.size() > 20);
    CHECK(std::memcmp(bytes.data(), kCheckpointMagic, 8) == 0);
    CHECK(static_cast<unsigned char>(bytes[8]) == kCheckpointVersion);
    CHECK(bytes[9] == 0);
    CHECK(bytes[10] == 0);
    CHECK(bytes[11] == 0);
}

TEST_CASE("checkpoint round trip is bit exact") {
    for (bool ei : {true, false}) {
        const ModelCheckpoint ck = tiny_checkpoint(ei, 7);
        const std::string bytes = ck.serialize();
        const ModelCheckpoint back = ModelCheckpoint::deserialize(bytes);
        CHECK(back.serialize() == bytes);
        CHECK(back.is_ei() == ei);
        CHECK(back.src_vocab == ck.src_vocab);
        CHECK(back.tgt_vocab == ck.tgt_vocab);
        CHECK(back.metadata.steps == 42);
        CHECK(back.metadata.eval_cer == 1.5);
        CHECK(back.metadata.eval_wer == 3.25);
        CHECK(back.hparams.hidden == 3);
    }
}

TEST_CASE("checkpoint serialization is deterministic") {
    CHECK(tiny_checkpoint(false, 3).serialize() == tiny_checkpoint(false, 3).serialize());
}

TEST_CASE("checkpoint rejects corrupted input") {
    std::string bytes = tiny_checkpoint(true, 2).serialize();
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(ModelCheckpoint::deserialize(bad_magic), FormatError);
    std::string bad_version = bytes;
    bad_version[8] = 99;
    CHECK_THROWS_AS(ModelCheckpoint::deserialize(bad_version), FormatError);
    CHECK_THROWS_AS(ModelCheckpoint::deserialize(bytes.substr(0, bytes.size() - 4)), FormatError);
    CHECK_THROWS_AS(ModelCheckpoint::deserialize(bytes.substr(0, 12)), FormatError);
    CHECK_THROWS_AS(ModelCheckpoint::deserialize(bytes + "x"), FormatError);
}

TEST_CASE("checkpoint save and load") {
    const std::string path = "tmp_ck_roundtrip.bin";
    const ModelCheckpoint ck = tiny_checkpoint(false, 11);
    ck.save(path);
    const ModelCheckpoint back = ModelCheckpoint::load(path);
    CHECK(back.serialize() == ck.serialize());
    std::remove(path.c_str());
    CHECK_THROWS_AS(ModelCheckpoint::load("no_such_checkpoint.bin"), IoError);
}

TEST_CASE("transliterate is deterministic and emits target symbols") {
    const ModelCheckpoint ck = tiny_checkpoint(false, 13);
    const std::u32string hyp = ck.transliterate(U"abc");
    CHECK(ck.transliterate(U"abc") == hyp);
    for (char32_t cp : hyp) CHECK(ck.tgt_vocab.contains(cp));
    CHECK_THROWS_AS(ck.transliterate(U"z"), VocabularyError);
}

namespace {

CorpusSplits toy_corpus() {
    // short invertible-ish mapping, easy to memorize
    PairList all = parse_pairs("ab\tba\nba\tab\naa\tbb\nbb\taa\n"
                               "aab\tbba\nabb\tbaa\nbab\taba\naba\tbab\n");
    CorpusSplits s;
    s.train = all;
    s.eval = {all[0], all[2], all[4], all[6]};
    s.test = {all[1], all[3]};
    return s;
}

} // namespace

TEST_CASE("seq2seq training memorizes a toy corpus") {
    const CorpusSplits splits = toy_corpus();
    std::vector<std::u32string> sources, targets;
    for (const auto &p : splits.train) {
        sources.push_back(p.source);
        targets.push_back(p.target);
    }
    const CodepointVocabulary sv = build_vocab(sources), tv = build_vocab(targets);
    Hyperparameters h;
    h.learning_rate = 0.1;
    h.momentum = 0.9;
    h.hidden = 12;
    h.cell = CellKind::Gru;
    h.seed = 3;
    TrainOptions opt;
    opt.max_epochs = 60;
    opt.max_steps = 480;
    opt.eval_every = 0; // epoch-end evals only
    TrainResult r = train(ModelFamily::Seq2Seq, splits, sv, tv, h, opt);
    CHECK(r.steps_run > 0);
    CHECK(r.skipped_infeasible == 0);
    REQUIRE(r.loss_curve.size() == r.steps_run);
    const double early =
        std::accumulate(r.loss_curve.begin(), r.loss_curve.begin() + 8, 0.0) / 8.0;
    const double late = std::accumulate(r.loss_curve.end() - 8, r.loss_curve.end(), 0.0) / 8.0;
    CHECK(late < early);
    CHECK(r.checkpoint.metadata.eval_wer == 0.0);
    CHECK(std::string(r.checkpoint.family()) == "seq2seq");
    // the snapshot actually reproduces the eval pairs
    for (const auto &p : splits.eval) CHECK(r.checkpoint.transliterate(p.source) == p.target);
}

TEST_CASE("ei training memorizes a toy corpus") {
    const CorpusSplits splits = toy_corpus();
    std::vector<std::u32string> sources, targets;
    for (const auto &p : splits.train) {
        sources.push_back(p.source);
        targets.push_back(p.target);
    }
    const CodepointVocabulary sv = build_vocab(sources), tv = build_vocab(targets);
    Hyperparameters h;
    h.learning_rate = 0.3;
    h.momentum = 0.9;
    h.hidden = 12;
    h.cell = CellKind::Lstm;
    h.bidirectional = true;
    h.epsilons = 2;
    h.seed = 4;
    TrainOptions opt;
    opt.max_epochs = 80;
    opt.max_steps = 640;
    opt.eval_every = 0;
    TrainResult r = train(ModelFamily::Ei, splits, sv, tv, h, opt);
    CHECK(r.steps_run > 0);
    CHECK(std::string(r.checkpoint.family()) == "ei");
    CHECK(r.checkpoint.metadata.eval_wer == 0.0);
}

TEST_CASE("training with the same seed produces identical checkpoints") {
    const CorpusSplits splits = toy_corpus();
    std::vector<std::u32string> sources, targets;
    for (const auto &p : splits.train) {
        sources.push_back(p.source);
        targets.push_back(p.target);
    }
    const CodepointVocabulary sv = build_vocab(sources), tv = build_vocab(targets);
    Hyperparameters h;
    h.hidden = 6;
    h.cell = CellKind::Gru;
    h.seed = 9;
    TrainOptions opt;
    opt.max_epochs = 3;
    opt.eval_every = 0;
    TrainResult a = train(ModelFamily::Seq2Seq, splits, sv, tv, h, opt);
    TrainResult b = train(ModelFamily::Seq2Seq, splits, sv, tv, h, opt);
    CHECK(a.checkpoint.serialize() == b.checkpoint.serialize());
    CHECK(a.loss_curve == b.loss_curve);
}

TEST_CASE("training rejects an empty train split") {
    CorpusSplits empty;
    Hyperparameters h;
    h.hidden = 4;
    CHECK_THROWS_AS(train(ModelFamily::Seq2Seq, empty, CodepointVocabulary({U'a'}),
                          CodepointVocabulary({U'b'}), h, TrainOptions{}),
                    ArgumentError);
}

TEST_CASE("random search picks the lowest eval wer and scores it on test") {
    const CorpusSplits splits = toy_corpus();
    std::vector<std::u32string> sources, targets;
    for (const auto &p : splits.train) {
        sources.push_back(p.source);
        targets.push_back(p.target);
    }
    const CodepointVocabulary sv = build_vocab(sources), tv = build_vocab(targets);
    SearchSpace space;
    space.learning_rate = {0.01, 0.3};
    space.momentum = {0.5, 0.95};
    space.batch_size = {1, 2};
    space.clip_norm = {5.0, 5.0};
    space.hidden = {6, 10};
    Hyperparameters base;
    base.cell = CellKind::Gru;
    TrainOptions opt;
    opt.max_epochs = 12;
    opt.eval_every = 0;
    opt.loss_curve_stride = 0;
    SearchResult r = random_search(ModelFamily::Seq2Seq, space, 3, 77, splits, sv, tv, base, opt, 2);
    REQUIRE(r.trials.size() == 3);
    const TrialRecord &best = r.trials[r.best_trial];
    CHECK_FALSE(best.failed);
    for (const auto &t : r.trials) {
        CHECK(t.hparams.hidden >= 6);
        CHECK(t.hparams.hidden <= 10);
        if (!t.failed) CHECK(best.eval_wer <= t.eval_wer);
        if (t.id != best.id) CHECK(t.test_wer == -1.0); // winner only
    }
    CHECK(best.test_cer >= 0.0);
    CHECK(best.test_wer >= 0.0);
    const std::string tsv = trial_table_tsv(r);
    CHECK(tsv.rfind("trial\tlr\t", 0) == 0);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 4);
}

TEST_CASE("random search rejects zero trials") {
    CHECK_THROWS_AS(random_search(ModelFamily::Ei, SearchSpace::ei_defaults(), 0, 1, CorpusSplits{},
                                  CodepointVocabulary{}, CodepointVocabulary{}, Hyperparameters{},
                                  TrainOptions{}),
                    ArgumentError);
}
