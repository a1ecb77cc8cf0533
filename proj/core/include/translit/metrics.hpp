#pragma once

#include <functional>
#include <string>
#include <vector>

#include "translit/dataset.hpp"

namespace translit {

// Minimum insertions + deletions + substitutions (unit costs).
size_t edit_distance(const std::u32string &a, const std::u32string &b);

enum class CerMode { Pooled, MacroAverage };

// Percent. Pooled: 100 * sum(edits) / sum(|ref|). MacroAverage: mean of
// per-pair 100 * edits / |ref|.
double cer(const std::vector<std::u32string> &refs, const std::vector<std::u32string> &hyps,
           CerMode mode = CerMode::Pooled);

// Percent of entries where hyp != ref exactly (each entry is one token).
double wer(const std::vector<std::u32string> &refs, const std::vector<std::u32string> &hyps);

struct ErrorExample {
    std::u32string input;
    std::u32string reference;
    std::u32string hypothesis;
    size_t distance = 0;
};

struct EvalReport {
    double cer_percent = 0.0;
    double wer_percent = 0.0;
    size_t pairs = 0;
    size_t decode_failures = 0; // e.g. out-of-vocabulary inputs
    std::vector<ErrorExample> worst; // descending distance, input order within ties

    std::string to_text() const;
    std::string to_tsv() const; // input, reference, hypothesis, distance
};

// Decodes every test pair through `decode` and aggregates CER/WER plus the
// top_n worst examples. Per-pair vocabulary failures are counted (the pair
// scores as a full miss), not fatal.
EvalReport error_report(const std::function<std::u32string(const std::u32string &)> &decode,
                        const PairList &test_pairs, size_t top_n, CerMode mode = CerMode::Pooled);

} // namespace translit
