#include "translit/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "translit/error.hpp"

namespace translit {

size_t edit_distance(const std::u32string &a, const std::u32string &b) {
    const size_t n = a.size(), m = b.size();
    std::vector<size_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

static void check_lengths(const std::vector<std::u32string> &refs,
                          const std::vector<std::u32string> &hyps) {
    if (refs.size() != hyps.size())
        throw ArgumentError("metric: " + std::to_string(refs.size()) + " references vs " +
                            std::to_string(hyps.size()) + " hypotheses");
    if (refs.empty()) throw ArgumentError("metric: empty reference list");
}

double cer(const std::vector<std::u32string> &refs, const std::vector<std::u32string> &hyps,
           CerMode mode) {
    check_lengths(refs, hyps);
    if (mode == CerMode::Pooled) {
        size_t edits = 0, ref_len = 0;
        for (size_t i = 0; i < refs.size(); ++i) {
            if (refs[i].empty()) throw ArgumentError("cer: empty reference at index " + std::to_string(i));
            edits += edit_distance(refs[i], hyps[i]);
            ref_len += refs[i].size();
        }
        return 100.0 * static_cast<double>(edits) / static_cast<double>(ref_len);
    }
    double acc = 0.0;
    for (size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].empty()) throw ArgumentError("cer: empty reference at index " + std::to_string(i));
        acc += 100.0 * static_cast<double>(edit_distance(refs[i], hyps[i])) /
               static_cast<double>(refs[i].size());
    }
    return acc / static_cast<double>(refs.size());
}

double wer(const std::vector<std::u32string> &refs, const std::vector<std::u32string> &hyps) {
    check_lengths(refs, hyps);
    size_t wrong = 0;
    for (size_t i = 0; i < refs.size(); ++i)
        if (refs[i] != hyps[i]) ++wrong;
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(refs.size());
}

EvalReport error_report(const std::function<std::u32string(const std::u32string &)> &decode,
                        const PairList &test_pairs, size_t top_n, CerMode mode) {
    if (test_pairs.empty()) throw ArgumentError("error_report: empty test set");
    EvalReport report;
    report.pairs = test_pairs.size();
    std::vector<std::u32string> refs, hyps;
    std::vector<ErrorExample> all;
    refs.reserve(test_pairs.size());
    hyps.reserve(test_pairs.size());
    for (const auto &pair : test_pairs) {
        std::u32string hyp;
        try {
            hyp = decode(pair.source);
        } catch (const VocabularyError &) {
            ++report.decode_failures; // scored as a full miss
        }
        refs.push_back(pair.target);
        hyps.push_back(hyp);
        all.push_back({pair.source, pair.target, hyp, edit_distance(pair.target, hyp)});
    }
    report.cer_percent = cer(refs, hyps, mode);
    report.wer_percent = wer(refs, hyps);
    std::stable_sort(all.begin(), all.end(),
                     [](const ErrorExample &a, const ErrorExample &b) { return a.distance > b.distance; });
    for (const auto &ex : all) {
        if (report.worst.size() >= top_n || ex.distance == 0) break;
        report.worst.push_back(ex);
    }
    return report;
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    char line[128];
    snprintf(line, sizeof line, "CER %.2f WER %.2f\n", cer_percent, wer_percent);
    out << line;
    out << "pairs\t" << pairs << "\n";
    if (decode_failures) out << "decode_failures\t" << decode_failures << "\n";
    if (!worst.empty()) {
        out << "input\treference\thypothesis\tdistance\n";
        for (const auto &ex : worst)
            out << encode_utf8(ex.input) << "\t" << encode_utf8(ex.reference) << "\t"
                << encode_utf8(ex.hypothesis) << "\t" << ex.distance << "\n";
    }
    return out.str();
}

std::string EvalReport::to_tsv() const {
    std::ostringstream out;
    for (const auto &ex : worst)
        out << encode_utf8(ex.input) << "\t" << encode_utf8(ex.reference) << "\t"
            << encode_utf8(ex.hypothesis) << "\t" << ex.distance << "\n";
    return out.str();
}

} // namespace translit
