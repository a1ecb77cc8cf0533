#pragma once

#include <cstddef>
#include <vector>

#include "translit/tensor.hpp"

namespace translit {

// k epsilons before each symbol plus k trailing: "ab", k=1 -> "_a_b_".
template <typename Seq>
Seq insert_epsilons(const Seq &source, size_t k, typename Seq::value_type epsilon) {
    Seq out;
    out.reserve(k * (source.size() + 1) + source.size());
    for (const auto &sym : source) {
        out.insert(out.end(), k, epsilon);
        out.push_back(sym);
    }
    out.insert(out.end(), k, epsilon);
    return out;
}

// Standard CTC collapse: merge adjacent identical non-epsilon labels, then
// drop epsilons.
template <typename Seq>
Seq collapse(const Seq &path, typename Seq::value_type epsilon) {
    Seq out;
    bool have_prev = false;
    typename Seq::value_type prev{};
    for (const auto &sym : path) {
        if (!have_prev || sym != prev) {
            if (sym != epsilon) out.push_back(sym);
            prev = sym;
            have_prev = true;
        }
    }
    return out;
}

using LabelSeq = std::vector<size_t>;

constexpr size_t kBlankId = 0;

// Log-space sentinel for impossible states; smaller than any finite
// log-probability the lattice can produce.
constexpr double kLogZero = -1e300;

double log_add(double a, double b);

struct CtcLattice {
    size_t frames = 0;
    LabelSeq extended; // targets interleaved with blanks, length 2L+1
    Tensor2D alpha;    // T x (2L+1), log space
    Tensor2D beta;
    double log_prob = kLogZero;
};

// Forward-backward tables for target under the T x V frame log-distribution.
// Throws InfeasibleTargetError when T is too short to emit target.
CtcLattice ctc_lattice(const Tensor2D &frame_logprobs, const LabelSeq &target,
                       size_t blank = kBlankId);

struct CtcLossResult {
    double nll = 0.0;
    Tensor2D grad; // d nll / d frame_logprobs
};

CtcLossResult ctc_loss(const Tensor2D &frame_logprobs, const LabelSeq &target,
                       size_t blank = kBlankId);

// Per-frame argmax (ties to the lowest label id), then collapse.
LabelSeq ctc_greedy_decode(const Tensor2D &frame_logprobs, size_t blank = kBlankId);

// Prefix beam search over collapsed strings, summing path probabilities.
// Deterministic: ties break toward the lexicographically smaller prefix.
LabelSeq ctc_beam_decode(const Tensor2D &frame_logprobs, size_t width, size_t blank = kBlankId);

} // namespace translit
