#include "translit/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "translit/error.hpp"
#include "translit/rng.hpp"

namespace translit {

CodepointVocabulary::CodepointVocabulary(std::vector<char32_t> symbols)
    : symbols_(std::move(symbols)) {
    for (size_t i = 0; i < symbols_.size(); ++i) {
        auto [it, inserted] = to_id_.emplace(symbols_[i], kNumReserved + i);
        if (!inserted) throw ArgumentError("vocabulary: duplicate codepoint");
    }
}

size_t CodepointVocabulary::id_of(char32_t cp) const {
    auto it = to_id_.find(cp);
    if (it == to_id_.end())
        throw VocabularyError("codepoint U+" +
                              [cp] {
                                  char buf[16];
                                  snprintf(buf, sizeof buf, "%04X", static_cast<unsigned>(cp));
                                  return std::string(buf);
                              }() +
                              " (" + encode_utf8(cp) + ") not in vocabulary");
    return it->second;
}

char32_t CodepointVocabulary::codepoint_of(size_t id) const {
    if (id < kNumReserved || id >= total_size())
        throw VocabularyError("id " + std::to_string(id) + " is reserved or out of range");
    return symbols_[id - kNumReserved];
}

std::vector<size_t> CodepointVocabulary::encode(const std::u32string &s) const {
    std::vector<size_t> ids;
    ids.reserve(s.size());
    for (char32_t cp : s) ids.push_back(id_of(cp));
    return ids;
}

std::u32string CodepointVocabulary::decode(const std::vector<size_t> &ids) const {
    std::u32string out;
    out.reserve(ids.size());
    for (size_t id : ids) out.push_back(codepoint_of(id));
    return out;
}

PairList parse_pairs(const std::string &text) {
    PairList pairs;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(line_no, "no tab separator");
        if (line.find('\t', tab + 1) != std::string::npos)
            throw ParseError(line_no, "more than one tab separator");
        const std::string src = line.substr(0, tab), tgt = line.substr(tab + 1);
        if (src.empty() || tgt.empty()) throw ParseError(line_no, "empty source or target field");
        try {
            pairs.push_back({decode_utf8(src), decode_utf8(tgt)});
        } catch (const EncodingError &e) {
            throw EncodingError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return pairs;
}

PairList load_pairs(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("no such file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_pairs(ss.str());
}

std::u32string normalize_english(const std::u32string &token) {
#include "normalize_table.inl"
    std::u32string out;
    out.reserve(token.size());
    for (char32_t cp : token) {
        auto it = kNormalizeTable.find(cp);
        if (it == kNormalizeTable.end())
            out.push_back(cp);
        else
            out += it->second;
    }
    return out;
}

NormalizeSide normalize_side_from_name(const std::string &name) {
    if (name == "none") return NormalizeSide::None;
    if (name == "source") return NormalizeSide::Source;
    if (name == "target") return NormalizeSide::Target;
    throw ArgumentError("unknown normalize side: " + name);
}

PairList normalize_pairs(PairList pairs, NormalizeSide side) {
    if (side == NormalizeSide::None) return pairs;
    for (auto &p : pairs) {
        if (side == NormalizeSide::Source)
            p.source = normalize_english(p.source);
        else
            p.target = normalize_english(p.target);
    }
    return pairs;
}

CorpusSplits split(const PairList &pairs, uint64_t seed) {
    if (pairs.size() < 10) throw ArgumentError("split: need at least 10 pairs");
    std::vector<size_t> order(pairs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (size_t i = order.size(); i-- > 1;)
        std::swap(order[i], order[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i)))]);

    const size_t n = pairs.size();
    const size_t n_test = n / 10;
    const size_t n_eval = (n - n_test) / 10;
    CorpusSplits out;
    for (size_t i = 0; i < n; ++i) {
        const TransliterationPair &p = pairs[order[i]];
        if (i < n_test)
            out.test.push_back(p);
        else if (i < n_test + n_eval)
            out.eval.push_back(p);
        else
            out.train.push_back(p);
    }
    return out;
}

DatasetStats stats(const PairList &pairs) {
    if (pairs.empty()) throw ArgumentError("stats: empty corpus");
    DatasetStats st;
    st.pairs = pairs.size();
    double in_len = 0.0, out_len = 0.0;
    std::vector<std::u32string> sources, targets;
    sources.reserve(pairs.size());
    targets.reserve(pairs.size());
    for (const auto &p : pairs) {
        in_len += static_cast<double>(p.source.size());
        out_len += static_cast<double>(p.target.size());
        sources.push_back(p.source);
        targets.push_back(p.target);
    }
    st.avg_input_length = in_len / static_cast<double>(pairs.size());
    st.avg_output_length = out_len / static_cast<double>(pairs.size());
    st.source_vocab_size = build_vocab(sources).content_size();
    st.target_vocab_size = build_vocab(targets).content_size();
    return st;
}

} // namespace translit
