#include <doctest.h>

#include <cmath>
#include <map>
#include <string>

#include "test_helpers.hpp"
#include "translit/ctc.hpp"
#include "translit/error.hpp"
#include "translit/rng.hpp"

using namespace translit;

TEST_CASE("insert_epsilons kyoto example") {
    std::u32string kyoto = U"きょうと";
    CHECK(insert_epsilons(kyoto, 2, U'_') == std::u32string(U"__き__ょ__う__と__"));
}

TEST_CASE("insert_epsilons empty and small") {
    CHECK(insert_epsilons(std::u32string(), 3, U'_') == std::u32string(U"___"));
    CHECK(insert_epsilons(std::u32string(U"ab"), 1, U'_') == std::u32string(U"_a_b_"));
    CHECK(insert_epsilons(std::u32string(U"ab"), 0, U'_') == std::u32string(U"ab"));
}

TEST_CASE("collapse examples") {
    CHECK(collapse(std::u32string(U"__ky_o_____to_"), U'_') == std::u32string(U"kyoto"));
    CHECK(collapse(std::u32string(U"aa_a"), U'_') == std::u32string(U"aa"));
    CHECK(collapse(std::u32string(U"____"), U'_') == std::u32string());
}

TEST_CASE("epsilon round trip") {
    Rng rng(21);
    for (int it = 0; it < 500; ++it) {
        std::u32string s;
        const size_t n = rng.next_u64() % 8;
        for (size_t i = 0; i < n; ++i) s.push_back(U'a' + static_cast<char32_t>(rng.next_u64() % 3));
        for (size_t k = 1; k <= 3; ++k) CHECK(collapse(insert_epsilons(s, k, U'_'), U'_') == s);
    }
}

namespace {

Tensor2D uniform_logprobs(size_t T, size_t V) {
    Tensor2D t(T, V);
    t.fill(-std::log(static_cast<double>(V)));
    return t;
}

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

// exhaustive (V)^T path oracle
double brute_force_nll(const Tensor2D &lp, const LabelSeq &target, size_t blank) {
    const size_t T = lp.rows, V = lp.cols;
    double total = kLogZero;
    LabelSeq path(T, 0);
    for (;;) {
        if (collapse(path, blank) == target) {
            double p = 0;
            for (size_t t = 0; t < T; ++t) p += lp(t, path[t]);
            total = log_add(total, p);
        }
        size_t i = 0;
        while (i < T && ++path[i] == V) path[i++] = 0;
        if (i == T) break;
    }
    return -total;
}

} // namespace

TEST_CASE("ctc_loss two uniform frames target a") {
    // paths collapsing to "a": a_, _a, aa -> 3/4
    Tensor2D lp = uniform_logprobs(2, 2);
    CtcLossResult r = ctc_loss(lp, {1});
    CHECK(r.nll == doctest::Approx(-std::log(3.0 / 4.0)).epsilon(1e-12));
}

TEST_CASE("ctc_loss infeasible target") {
    Tensor2D lp = uniform_logprobs(1, 3);
    CHECK_THROWS_AS(ctc_loss(lp, {1, 2}), InfeasibleTargetError);
    // repeated label needs a separating blank
    CHECK_THROWS_AS(ctc_loss(uniform_logprobs(2, 3), {1, 1}), InfeasibleTargetError);
    CHECK_NOTHROW(ctc_loss(uniform_logprobs(3, 3), {1, 1}));
}

TEST_CASE("ctc_loss rejects blank in target") {
    CHECK_THROWS_AS(ctc_loss(uniform_logprobs(3, 3), {0}), ArgumentError);
}

TEST_CASE("ctc_loss matches brute-force enumeration") {
    Rng rng(22);
    for (int it = 0; it < 100; ++it) {
        const size_t T = 1 + rng.next_u64() % 6;
        const size_t V = 2 + rng.next_u64() % 3; // blank + 1..3 content labels
        LabelSeq target;
        const size_t L = rng.next_u64() % 4;
        for (size_t i = 0; i < L; ++i) target.push_back(1 + rng.next_u64() % (V - 1));
        Tensor2D lp = random_logprobs(T, V, rng);
        double oracle;
        try {
            oracle = brute_force_nll(lp, target, 0);
        } catch (...) {
            continue;
        }
        if (!std::isfinite(oracle) || oracle > 600) {
            CHECK_THROWS_AS(ctc_loss(lp, target), InfeasibleTargetError);
            continue;
        }
        CtcLossResult r = ctc_loss(lp, target);
        CHECK(r.nll == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("ctc_loss gradient matches finite differences") {
    Rng rng(23);
    for (int it = 0; it < 10; ++it) {
        const size_t T = 3 + rng.next_u64() % 3;
        const size_t V = 3;
        LabelSeq target = {1, 2};
        Tensor2D lp = random_logprobs(T, V, rng);
        CtcLossResult r = ctc_loss(lp, target);
        // treat the table entries as free variables
        auto f = [&](const Vec &x) {
            Tensor2D t(T, V, x);
            return ctc_loss(t, target).nll;
        };
        CHECK(grad_check(f, lp.values, r.grad.values) < 1e-4);
    }
}

TEST_CASE("forward backward consistency across frames") {
    Rng rng(24);
    Tensor2D lp = random_logprobs(5, 4, rng);
    LabelSeq target = {1, 3, 2};
    CtcLattice lat = ctc_lattice(lp, target);
    for (size_t t = 0; t < lat.frames; ++t) {
        double total = kLogZero;
        for (size_t s = 0; s < lat.extended.size(); ++s) {
            const double a = lat.alpha(t, s), b = lat.beta(t, s);
            if (a > kLogZero && b > kLogZero) total = log_add(total, a + b);
        }
        CHECK(total == doctest::Approx(lat.log_prob).epsilon(1e-9));
    }
}

namespace {

Tensor2D one_hot_frames(const LabelSeq &path, size_t V) {
    Tensor2D lp(path.size(), V);
    lp.fill(-40.0);
    for (size_t t = 0; t < path.size(); ++t) lp(t, path[t]) = -1e-9;
    return lp;
}

} // namespace

TEST_CASE("greedy decode follows argmax then collapse") {
    // path _ 1 1 _ 2 over {blank,1,2} -> [1, 2]
    Tensor2D lp = one_hot_frames({0, 1, 1, 0, 2}, 3);
    CHECK(ctc_greedy_decode(lp) == LabelSeq{1, 2});
}

TEST_CASE("greedy decode all-blank and tie break") {
    Tensor2D blank_frames = one_hot_frames({0, 0, 0}, 3);
    CHECK(ctc_greedy_decode(blank_frames).empty());
    // exact tie between blank (id 0) and label 1 on every frame -> blank wins
    Tensor2D tie(2, 2);
    tie.fill(std::log(0.5));
    CHECK(ctc_greedy_decode(tie).empty());
}

TEST_CASE("beam width 1 on one-hot frames equals greedy") {
    Rng rng(25);
    for (int it = 0; it < 20; ++it) {
        LabelSeq path(4);
        for (auto &p : path) p = rng.next_u64() % 3;
        Tensor2D lp = one_hot_frames(path, 3);
        CHECK(ctc_beam_decode(lp, 1) == ctc_greedy_decode(lp));
    }
}

TEST_CASE("beam decode all-blank one-hot frames") {
    CHECK(ctc_beam_decode(one_hot_frames({0, 0, 0, 0}, 3), 4).empty());
}

TEST_CASE("beam decode rejects width zero") {
    CHECK_THROWS_AS(ctc_beam_decode(one_hot_frames({0}, 2), 0), ArgumentError);
}

namespace {

// most probable collapsed string by full enumeration
LabelSeq exhaustive_best_collapsed(const Tensor2D &lp, size_t blank) {
    const size_t T = lp.rows, V = lp.cols;
    std::map<LabelSeq, double> mass;
    LabelSeq path(T, 0);
    for (;;) {
        double p = 0;
        for (size_t t = 0; t < T; ++t) p += lp(t, path[t]);
        LabelSeq key = collapse(path, blank);
        auto it = mass.find(key);
        if (it == mass.end())
            mass[key] = p;
        else
            it->second = log_add(it->second, p);
        size_t i = 0;
        while (i < T && ++path[i] == V) path[i++] = 0;
        if (i == T) break;
    }
    LabelSeq best;
    double best_p = kLogZero;
    for (const auto &[k, v] : mass)
        if (v > best_p) {
            best = k;
            best_p = v;
        }
    return best;
}

} // namespace

TEST_CASE("beam decode with huge width equals exhaustive argmax") {
    Rng rng(26);
    for (int it = 0; it < 30; ++it) {
        const size_t T = 1 + rng.next_u64() % 4;
        Tensor2D lp = random_logprobs(T, 3, rng); // blank + 2 content labels
        CHECK(ctc_beam_decode(lp, 100000) == exhaustive_best_collapsed(lp, 0));
    }
}
