#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "translit/utf8.hpp"

namespace translit {

struct TransliterationPair {
    std::u32string source;
    std::u32string target;

    bool operator==(const TransliterationPair &) const = default;
};

using PairList = std::vector<TransliterationPair>;

// Bijective codepoint <-> id table. Ids 0..3 are reserved for
// epsilon/blank, pad, go and eos; content codepoints start at id 4 in
// first-appearance order.
class CodepointVocabulary {
  public:
    static constexpr size_t kEpsilonId = 0;
    static constexpr size_t kPadId = 1;
    static constexpr size_t kGoId = 2;
    static constexpr size_t kEosId = 3;
    static constexpr size_t kNumReserved = 4;

    CodepointVocabulary() = default;
    explicit CodepointVocabulary(std::vector<char32_t> symbols);

    size_t total_size() const { return kNumReserved + symbols_.size(); }
    size_t content_size() const { return symbols_.size(); }
    const std::vector<char32_t> &symbols() const { return symbols_; }

    bool contains(char32_t cp) const { return to_id_.count(cp) > 0; }
    size_t id_of(char32_t cp) const;          // throws VocabularyError
    char32_t codepoint_of(size_t id) const;   // content ids only

    std::vector<size_t> encode(const std::u32string &s) const;
    std::u32string decode(const std::vector<size_t> &ids) const;

    bool operator==(const CodepointVocabulary &o) const { return symbols_ == o.symbols_; }

  private:
    std::vector<char32_t> symbols_;
    std::unordered_map<char32_t, size_t> to_id_;
};

struct DatasetStats {
    size_t pairs = 0;
    double avg_input_length = 0.0;
    double avg_output_length = 0.0;
    size_t source_vocab_size = 0; // content symbols only
    size_t target_vocab_size = 0;
};

// UTF-8 TSV, one "source<TAB>target" pair per line, file order preserved.
PairList load_pairs(const std::string &path);
PairList parse_pairs(const std::string &text);

// Lowercase + canonical decomposition with combining marks removed;
// codepoints lacking a decomposition (ß, ø, ł, ...) are preserved.
std::u32string normalize_english(const std::u32string &token);

enum class NormalizeSide { None, Source, Target };
NormalizeSide normalize_side_from_name(const std::string &name);
PairList normalize_pairs(PairList pairs, NormalizeSide side);

template <typename SeqRange> CodepointVocabulary build_vocab(const SeqRange &sequences) {
    std::vector<char32_t> symbols;
    std::unordered_map<char32_t, bool> seen;
    for (const auto &seq : sequences)
        for (char32_t cp : seq)
            if (!seen[cp]) {
                seen[cp] = true;
                symbols.push_back(cp);
            }
    return CodepointVocabulary(std::move(symbols));
}

struct CorpusSplits {
    PairList train;
    PairList eval;
    PairList test;
};

// Seeded shuffle, then test = first 10% (floor), eval = 10% of the
// remainder (floor), train = rest.
CorpusSplits split(const PairList &pairs, uint64_t seed);

DatasetStats stats(const PairList &pairs);

} // namespace translit
