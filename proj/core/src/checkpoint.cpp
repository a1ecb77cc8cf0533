#include "translit/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "translit/error.hpp"

namespace translit {

using nlohmann::json;

void Hyperparameters::validate() const {
    if (learning_rate <= 0.0) throw ArgumentError("learning rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ArgumentError("momentum must be in [0, 1)");
    if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
    if (clip_norm <= 0.0) throw ArgumentError("clip norm must be > 0");
    if (hidden < 1) throw ArgumentError("hidden units must be >= 1");
    if (layers < 1) throw ArgumentError("layer count must be >= 1");
}

namespace {

json vocab_to_json(const CodepointVocabulary &v) {
    json arr = json::array();
    for (char32_t cp : v.symbols()) arr.push_back(static_cast<uint32_t>(cp));
    return arr;
}

CodepointVocabulary vocab_from_json(const json &arr) {
    std::vector<char32_t> symbols;
    for (const auto &v : arr) symbols.push_back(static_cast<char32_t>(v.get<uint32_t>()));
    return CodepointVocabulary(std::move(symbols));
}

json hparams_to_json(const Hyperparameters &h) {
    return json{{"learning_rate", h.learning_rate},
                {"momentum", h.momentum},
                {"batch_size", h.batch_size},
                {"clip_norm", h.clip_norm},
                {"hidden", h.hidden},
                {"layers", h.layers},
                {"cell", cell_kind_name(h.cell)},
                {"bidirectional", h.bidirectional},
                {"epsilons", h.epsilons},
                {"seed", h.seed}};
}

Hyperparameters hparams_from_json(const json &j) {
    Hyperparameters h;
    h.learning_rate = j.at("learning_rate").get<double>();
    h.momentum = j.at("momentum").get<double>();
    h.batch_size = j.at("batch_size").get<size_t>();
    h.clip_norm = j.at("clip_norm").get<double>();
    h.hidden = j.at("hidden").get<size_t>();
    h.layers = j.at("layers").get<size_t>();
    h.cell = cell_kind_from_name(j.at("cell").get<std::string>());
    h.bidirectional = j.at("bidirectional").get<bool>();
    h.epsilons = j.at("epsilons").get<size_t>();
    h.seed = j.at("seed").get<uint64_t>();
    return h;
}

json config_to_json(const EiConfig &c) {
    return json{{"cell", cell_kind_name(c.cell)},   {"layers", c.layers},
                {"hidden", c.hidden},               {"bidirectional", c.bidirectional},
                {"epsilons", c.epsilons},           {"embed_dim", c.embed_dim},
                {"output_width", c.hidden * (c.bidirectional ? 2 : 1)}};
}

json config_to_json(const Seq2SeqConfig &c) {
    return json{{"cell", cell_kind_name(c.cell)},
                {"layers", c.layers},
                {"hidden", c.hidden},
                {"bidirectional_encoder", c.bidirectional_encoder},
                {"reverse_source", c.reverse_source},
                {"embed_dim", c.embed_dim},
                {"attention_dim", c.attention_dim},
                {"encoder_output_width", c.encoder_width()}};
}

EiConfig ei_config_from_json(const json &j) {
    EiConfig c;
    c.cell = cell_kind_from_name(j.at("cell").get<std::string>());
    c.layers = j.at("layers").get<size_t>();
    c.hidden = j.at("hidden").get<size_t>();
    c.bidirectional = j.at("bidirectional").get<bool>();
    c.epsilons = j.at("epsilons").get<size_t>();
    c.embed_dim = j.at("embed_dim").get<size_t>();
    return c;
}

Seq2SeqConfig seq2seq_config_from_json(const json &j) {
    Seq2SeqConfig c;
    c.cell = cell_kind_from_name(j.at("cell").get<std::string>());
    c.layers = j.at("layers").get<size_t>();
    c.hidden = j.at("hidden").get<size_t>();
    c.bidirectional_encoder = j.at("bidirectional_encoder").get<bool>();
    c.reverse_source = j.at("reverse_source").get<bool>();
    c.embed_dim = j.at("embed_dim").get<size_t>();
    c.attention_dim = j.at("attention_dim").get<size_t>();
    return c;
}

void append_u32le(std::string &out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void append_u64le(std::string &out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
uint32_t read_u32le(const std::string &s, size_t off) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}
uint64_t read_u64le(const std::string &s, size_t off) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}

} // namespace

std::string ModelCheckpoint::serialize() const {
    json header;
    header["family"] = family();
    header["hparams"] = hparams_to_json(hparams);
    header["src_vocab"] = vocab_to_json(src_vocab);
    header["tgt_vocab"] = vocab_to_json(tgt_vocab);
    header["metadata"] = json{{"steps", metadata.steps},
                              {"eval_cer", metadata.eval_cer},
                              {"eval_wer", metadata.eval_wer},
                              {"seed", metadata.seed}};

    json directory = json::array();
    std::string blob_bytes;
    auto collect = [&](const std::string &name, Tensor2D &t) {
        directory.push_back(json{{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
        const size_t off = blob_bytes.size();
        blob_bytes.resize(off + t.values.size() * sizeof(double));
        // host is little-endian; doubles are stored verbatim
        std::memcpy(blob_bytes.data() + off, t.values.data(), t.values.size() * sizeof(double));
    };
    std::visit(
        [&](auto &m) {
            header["config"] = config_to_json(m.config);
            const_cast<std::decay_t<decltype(m)> &>(m).visit(collect);
        },
        const_cast<ModelVariant &>(model));
    header["blobs"] = directory;

    const std::string header_text = header.dump();
    std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
    append_u32le(out, kCheckpointVersion);
    append_u64le(out, header_text.size());
    out += header_text;
    out += blob_bytes;
    return out;
}

ModelCheckpoint ModelCheckpoint::deserialize(const std::string &bytes) {
    if (bytes.size() < sizeof(kCheckpointMagic) + 12 ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
        throw FormatError("not a checkpoint file (bad magic)");
    const uint32_t version = read_u32le(bytes, 8);
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
    const uint64_t header_len = read_u64le(bytes, 12);
    if (bytes.size() < 20 + header_len) throw FormatError("truncated checkpoint header");
    json header;
    try {
        header = json::parse(bytes.substr(20, header_len));
    } catch (const json::exception &e) {
        throw FormatError(std::string("bad checkpoint header: ") + e.what());
    }

    ModelCheckpoint ck;
    ck.hparams = hparams_from_json(header.at("hparams"));
    ck.src_vocab = vocab_from_json(header.at("src_vocab"));
    ck.tgt_vocab = vocab_from_json(header.at("tgt_vocab"));
    const json &md = header.at("metadata");
    ck.metadata.steps = md.at("steps").get<uint64_t>();
    ck.metadata.eval_cer = md.at("eval_cer").get<double>();
    ck.metadata.eval_wer = md.at("eval_wer").get<double>();
    ck.metadata.seed = md.at("seed").get<uint64_t>();

    const std::string family = header.at("family").get<std::string>();
    Rng dummy(0);
    if (family == "ei") {
        EiConfig cfg = ei_config_from_json(header.at("config"));
        EiModel m = EiModel::create(cfg, ck.src_vocab.total_size(), ck.tgt_vocab.total_size(), dummy);
        ck.model = EiModel::zeros_like(m);
    } else if (family == "seq2seq") {
        Seq2SeqConfig cfg = seq2seq_config_from_json(header.at("config"));
        Seq2SeqModel m =
            Seq2SeqModel::create(cfg, ck.src_vocab.total_size(), ck.tgt_vocab.total_size(), dummy);
        ck.model = Seq2SeqModel::zeros_like(m);
    } else {
        throw FormatError("unknown model family: " + family);
    }

    // fill blobs in directory order
    size_t off = 20 + header_len;
    std::unordered_map<std::string, Tensor2D *> by_name;
    std::visit([&](auto &m) { m.visit([&](const std::string &n, Tensor2D &t) { by_name[n] = &t; }); },
               ck.model);
    for (const auto &entry : header.at("blobs")) {
        const std::string name = entry.at("name").get<std::string>();
        const size_t rows = entry.at("rows").get<size_t>();
        const size_t cols = entry.at("cols").get<size_t>();
        auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("unknown blob: " + name);
        Tensor2D &t = *it->second;
        if (t.rows != rows || t.cols != cols)
            throw FormatError("blob " + name + " shape mismatch");
        const size_t nbytes = rows * cols * sizeof(double);
        if (off + nbytes > bytes.size()) throw FormatError("truncated blob data");
        std::memcpy(t.values.data(), bytes.data() + off, nbytes);
        off += nbytes;
    }
    if (off != bytes.size()) throw FormatError("trailing bytes after blob data");
    return ck;
}

void ModelCheckpoint::save(const std::string &path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    const std::string bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

ModelCheckpoint ModelCheckpoint::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("no such file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

std::u32string ModelCheckpoint::transliterate(const std::u32string &source,
                                              size_t beam_width) const {
    const std::vector<size_t> ids = src_vocab.encode(source);
    if (const auto *ei = std::get_if<EiModel>(&model))
        return tgt_vocab.decode(ei_decode(*ei, ids, beam_width));
    const auto &s2s = std::get<Seq2SeqModel>(model);
    DecodeLimits limits = DecodeLimits::for_source(ids.size(), beam_width);
    const std::vector<size_t> out =
        beam_width <= 1 ? greedy_decode(s2s, ids, limits) : beam_decode(s2s, ids, limits);
    return tgt_vocab.decode(out);
}

} // namespace translit
