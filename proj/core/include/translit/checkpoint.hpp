#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "translit/dataset.hpp"
#include "translit/ei.hpp"
#include "translit/seq2seq.hpp"

namespace translit {

constexpr uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'T', 'L', 'I', 'T', 'C', 'K', 'P', 'T'};

struct Hyperparameters {
    double learning_rate = 0.01;
    double momentum = 0.9;
    size_t batch_size = 1;
    double clip_norm = 9.0;
    size_t hidden = 100;
    size_t layers = 1;
    CellKind cell = CellKind::Lstm;
    bool bidirectional = false;
    size_t epsilons = 3; // EI only
    uint64_t seed = 0;

    void validate() const; // throws ArgumentError
};

struct TrainingMetadata {
    uint64_t steps = 0;
    double eval_cer = -1.0;
    double eval_wer = -1.0;
    uint64_t seed = 0;
};

using ModelVariant = std::variant<EiModel, Seq2SeqModel>;

// Serialized layout: 8-byte magic "TLITCKPT", little-endian u32 version,
// little-endian u64 header length, UTF-8 JSON header (config, vocabularies,
// hyperparameters, blob directory, metadata), then the weight blobs as raw
// little-endian IEEE-754 doubles in directory order.
struct ModelCheckpoint {
    ModelVariant model;
    Hyperparameters hparams;
    CodepointVocabulary src_vocab;
    CodepointVocabulary tgt_vocab;
    TrainingMetadata metadata;

    const char *family() const {
        return std::holds_alternative<EiModel>(model) ? "ei" : "seq2seq";
    }
    bool is_ei() const { return std::holds_alternative<EiModel>(model); }

    std::string serialize() const;
    static ModelCheckpoint deserialize(const std::string &bytes);

    void save(const std::string &path) const;
    static ModelCheckpoint load(const std::string &path);

    // Decode one source token (greedy by default).
    std::u32string transliterate(const std::u32string &source, size_t beam_width = 1) const;
};

} // namespace translit
