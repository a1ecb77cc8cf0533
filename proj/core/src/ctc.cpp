#include "translit/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "translit/error.hpp"

namespace translit {

double log_add(double a, double b) {
    if (a <= kLogZero) return b;
    if (b <= kLogZero) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

static size_t min_frames_needed(const LabelSeq &target) {
    size_t repeats = 0;
    for (size_t i = 1; i < target.size(); ++i)
        if (target[i] == target[i - 1]) ++repeats;
    return target.size() + repeats;
}

CtcLattice ctc_lattice(const Tensor2D &frame_logprobs, const LabelSeq &target, size_t blank) {
    const size_t T = frame_logprobs.rows;
    const size_t V = frame_logprobs.cols;
    if (T == 0) throw ArgumentError("ctc: need at least one frame");
    for (size_t lab : target) {
        if (lab == blank) throw ArgumentError("ctc: target contains the blank label");
        if (lab >= V) throw ArgumentError("ctc: target label out of range");
    }
    if (T < min_frames_needed(target))
        throw InfeasibleTargetError("ctc: target needs " + std::to_string(min_frames_needed(target)) +
                                    " frames but only " + std::to_string(T) + " available");

    CtcLattice lat;
    lat.frames = T;
    const size_t L = target.size();
    const size_t S = 2 * L + 1;
    lat.extended.resize(S);
    for (size_t s = 0; s < S; ++s) lat.extended[s] = (s % 2 == 0) ? blank : target[s / 2];

    const auto lp = [&](size_t t, size_t s) { return frame_logprobs(t, lat.extended[s]); };
    const auto can_skip = [&](size_t s) {
        return s >= 2 && lat.extended[s] != blank && lat.extended[s] != lat.extended[s - 2];
    };

    lat.alpha = Tensor2D(T, S);
    lat.alpha.fill(kLogZero);
    lat.alpha(0, 0) = lp(0, 0);
    if (S > 1) lat.alpha(0, 1) = lp(0, 1);
    for (size_t t = 1; t < T; ++t) {
        for (size_t s = 0; s < S; ++s) {
            double a = lat.alpha(t - 1, s);
            if (s >= 1) a = log_add(a, lat.alpha(t - 1, s - 1));
            if (can_skip(s)) a = log_add(a, lat.alpha(t - 1, s - 2));
            lat.alpha(t, s) = a <= kLogZero ? kLogZero : a + lp(t, s);
        }
    }

    // beta(t,s): log-prob of emitting frames t+1..T-1 starting from state s.
    lat.beta = Tensor2D(T, S);
    lat.beta.fill(kLogZero);
    lat.beta(T - 1, S - 1) = 0.0;
    if (S > 1) lat.beta(T - 1, S - 2) = 0.0;
    for (size_t t = T - 1; t-- > 0;) {
        for (size_t s = 0; s < S; ++s) {
            double b = lat.beta(t + 1, s) <= kLogZero ? kLogZero : lat.beta(t + 1, s) + lp(t + 1, s);
            if (s + 1 < S && lat.beta(t + 1, s + 1) > kLogZero)
                b = log_add(b, lat.beta(t + 1, s + 1) + lp(t + 1, s + 1));
            if (s + 2 < S && can_skip(s + 2) && lat.beta(t + 1, s + 2) > kLogZero)
                b = log_add(b, lat.beta(t + 1, s + 2) + lp(t + 1, s + 2));
            lat.beta(t, s) = b;
        }
    }

    lat.log_prob = lat.alpha(T - 1, S - 1);
    if (S > 1) lat.log_prob = log_add(lat.log_prob, lat.alpha(T - 1, S - 2));
    return lat;
}

CtcLossResult ctc_loss(const Tensor2D &frame_logprobs, const LabelSeq &target, size_t blank) {
    CtcLattice lat = ctc_lattice(frame_logprobs, target, blank);
    if (lat.log_prob <= kLogZero)
        throw NumericError("ctc_loss: zero total path probability");
    CtcLossResult res;
    res.nll = -lat.log_prob;
    res.grad = Tensor2D(frame_logprobs.rows, frame_logprobs.cols);
    const size_t S = lat.extended.size();
    for (size_t t = 0; t < lat.frames; ++t) {
        for (size_t s = 0; s < S; ++s) {
            const double a = lat.alpha(t, s), b = lat.beta(t, s);
            if (a <= kLogZero || b <= kLogZero) continue;
            res.grad(t, lat.extended[s]) -= std::exp(a + b - lat.log_prob);
        }
    }
    return res;
}

LabelSeq ctc_greedy_decode(const Tensor2D &frame_logprobs, size_t blank) {
    LabelSeq path(frame_logprobs.rows);
    for (size_t t = 0; t < frame_logprobs.rows; ++t) {
        const double *row = &frame_logprobs.values[t * frame_logprobs.cols];
        path[t] = static_cast<size_t>(
            std::max_element(row, row + frame_logprobs.cols) - row); // first max = lowest id
    }
    return collapse(path, blank);
}

LabelSeq ctc_beam_decode(const Tensor2D &frame_logprobs, size_t width, size_t blank) {
    if (width == 0) throw ArgumentError("ctc_beam_decode: width must be >= 1");
    const size_t T = frame_logprobs.rows;
    const size_t V = frame_logprobs.cols;

    struct Mass {
        double blank_end = kLogZero;   // paths ending in blank
        double label_end = kLogZero;   // paths ending in the prefix's last label
        double total() const { return log_add(blank_end, label_end); }
    };
    // std::map keeps prefixes in lexicographic order, which fixes tie-breaks.
    std::map<LabelSeq, Mass> beam;
    beam[{}] = Mass{0.0, kLogZero};

    for (size_t t = 0; t < T; ++t) {
        const auto lp = [&](size_t c) { return frame_logprobs(t, c); };
        std::map<LabelSeq, Mass> next;
        for (const auto &[prefix, mass] : beam) {
            const double total = mass.total();
            // emit blank: prefix unchanged
            auto &nb = next[prefix];
            nb.blank_end = log_add(nb.blank_end, total + lp(blank));
            for (size_t c = 0; c < V; ++c) {
                if (c == blank) continue;
                if (!prefix.empty() && prefix.back() == c) {
                    // repeat without separator merges into the same prefix
                    nb.label_end = log_add(nb.label_end, mass.label_end + lp(c));
                    LabelSeq ext = prefix;
                    ext.push_back(c);
                    auto &ne = next[ext];
                    ne.label_end = log_add(ne.label_end, mass.blank_end + lp(c));
                } else {
                    LabelSeq ext = prefix;
                    ext.push_back(c);
                    auto &ne = next[ext];
                    ne.label_end = log_add(ne.label_end, total + lp(c));
                }
            }
        }
        if (next.size() > width) {
            std::vector<std::pair<double, const LabelSeq *>> scored;
            scored.reserve(next.size());
            for (const auto &[prefix, mass] : next) scored.emplace_back(mass.total(), &prefix);
            std::stable_sort(scored.begin(), scored.end(),
                             [](const auto &a, const auto &b) { return a.first > b.first; });
            std::map<LabelSeq, Mass> pruned;
            for (size_t i = 0; i < width; ++i) pruned[*scored[i].second] = next[*scored[i].second];
            next = std::move(pruned);
        }
        beam = std::move(next);
    }

    const LabelSeq *best = nullptr;
    double best_score = kLogZero;
    for (const auto &[prefix, mass] : beam) {
        const double s = mass.total();
        if (best == nullptr || s > best_score) {
            best = &prefix;
            best_score = s;
        }
    }
    return best ? *best : LabelSeq{};
}

} // namespace translit
