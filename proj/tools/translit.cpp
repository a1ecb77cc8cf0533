// translit: train, search, evaluate and run character-level transliteration
// models over TSV corpora of "source<TAB>target" pairs.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "translit/error.hpp"
#include "translit/training.hpp"

using namespace translit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

struct HparamFlags {
    std::string family = "seq2seq";
    std::string cell = "lstm";
    size_t layers = 1;
    size_t hidden = 100;
    bool bidi = false;
    size_t epsilons = 3;
    double lr = 0.01;
    double momentum = 0.9;
    size_t batch = 1;
    double clip = 9.0;
    uint64_t seed = 0;

    void add_model_flags(CLI::App *cmd) {
        cmd->add_option("--family", family, "Model family: ei or seq2seq")
            ->check(CLI::IsMember({"ei", "seq2seq"}));
        cmd->add_option("--cell", cell, "Recurrent cell")->check(CLI::IsMember({"lstm", "gru"}));
        cmd->add_option("--layers", layers, "Recurrent layer count");
        cmd->add_option("--hidden", hidden, "Hidden units per direction");
        cmd->add_flag("--bidi", bidi, "Bidirectional encoder (seq2seq) or stack (ei)");
        cmd->add_option("--epsilons", epsilons, "Epsilons inserted per input symbol (ei)");
    }
    void add_optim_flags(CLI::App *cmd) {
        cmd->add_option("--lr", lr, "Learning rate");
        cmd->add_option("--momentum", momentum, "Classical momentum coefficient");
        cmd->add_option("--batch", batch, "Mini-batch size");
        cmd->add_option("--clip", clip, "Global gradient-norm clip threshold");
        cmd->add_option("--seed", seed, "Random seed for all stochastic steps");
    }

    Hyperparameters to_hparams() const {
        Hyperparameters h;
        h.learning_rate = lr;
        h.momentum = momentum;
        h.batch_size = batch;
        h.clip_norm = clip;
        h.hidden = hidden;
        h.layers = layers;
        h.cell = cell == "gru" ? CellKind::Gru : CellKind::Lstm;
        h.bidirectional = bidi;
        h.epsilons = epsilons;
        h.seed = seed;
        return h;
    }
};

PairList load_normalized(const std::string &path, const std::string &normalize_side) {
    return normalize_pairs(load_pairs(path), normalize_side_from_name(normalize_side));
}

void build_vocabs(const PairList &pairs, CodepointVocabulary &src, CodepointVocabulary &tgt) {
    std::vector<std::u32string> sources, targets;
    for (const auto &p : pairs) {
        sources.push_back(p.source);
        targets.push_back(p.target);
    }
    src = build_vocab(sources);
    tgt = build_vocab(targets);
}

void write_text(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string pairs_to_tsv(const PairList &pairs) {
    std::string out;
    for (const auto &p : pairs)
        out += encode_utf8(p.source) + "\t" + encode_utf8(p.target) + "\n";
    return out;
}

void print_stats(const DatasetStats &st) {
    printf("pairs %zu\n", st.pairs);
    printf("avg-input-length %.2f\n", st.avg_input_length);
    printf("avg-output-length %.2f\n", st.avg_output_length);
    printf("source-vocab %zu\n", st.source_vocab_size);
    printf("target-vocab %zu\n", st.target_vocab_size);
}

int run(int argc, char **argv) {
    CLI::App app{"Character-level neural transliteration"};
    app.require_subcommand(1);

    std::string dataset, normalize_side = "none", checkpoint_path, out_dir = ".";
    std::string trial_table_path;
    HparamFlags hp;
    size_t trials = 1, workers = 1, beam = 1, top_n = 10;
    size_t max_steps = 200000, max_epochs = 50;
    bool verbose = false, tsv_report = false;

    CLI::App *stats_cmd = app.add_subcommand("dataset-stats", "Summarize a TSV corpus");
    stats_cmd->add_option("dataset", dataset, "TSV corpus path")->required();
    stats_cmd->add_option("--normalize-side", normalize_side, "none, source or target");

    CLI::App *split_cmd =
        app.add_subcommand("split", "Shuffle and write train/eval/test TSV files");
    split_cmd->add_option("dataset", dataset, "TSV corpus path")->required();
    split_cmd->add_option("--out-dir", out_dir, "Output directory");
    split_cmd->add_option("--seed", hp.seed, "Shuffle seed");
    split_cmd->add_option("--normalize-side", normalize_side, "none, source or target");

    CLI::App *train_cmd = app.add_subcommand("train", "Train one model configuration");
    train_cmd->add_option("dataset", dataset, "TSV corpus path")->required();
    hp.add_model_flags(train_cmd);
    hp.add_optim_flags(train_cmd);
    train_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint output path")->required();
    train_cmd->add_option("--normalize-side", normalize_side, "none, source or target");
    train_cmd->add_option("--max-steps", max_steps, "Stop after this many optimizer steps");
    train_cmd->add_option("--max-epochs", max_epochs, "Stop after this many passes");
    train_cmd->add_flag("--verbose", verbose, "Log evaluation scores to stderr");

    CLI::App *search_cmd = app.add_subcommand("search", "Random hyperparameter search");
    search_cmd->add_option("dataset", dataset, "TSV corpus path")->required();
    hp.add_model_flags(search_cmd);
    search_cmd->add_option("--seed", hp.seed, "Search seed");
    search_cmd->add_option("--trials", trials, "Number of sampled configurations");
    search_cmd->add_option("--workers", workers, "Concurrent training workers");
    search_cmd->add_option("--checkpoint", checkpoint_path, "Winner checkpoint path")->required();
    search_cmd->add_option("--trial-table", trial_table_path, "Write the trial summary TSV here");
    search_cmd->add_option("--normalize-side", normalize_side, "none, source or target");
    search_cmd->add_option("--max-steps", max_steps, "Per-trial step budget");
    search_cmd->add_option("--max-epochs", max_epochs, "Per-trial epoch budget");

    CLI::App *eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a TSV corpus");
    eval_cmd->add_option("dataset", dataset, "TSV corpus path")->required();
    eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint path")->required();
    eval_cmd->add_option("--beam", beam, "Beam width (1 = greedy)");
    eval_cmd->add_option("--top", top_n, "Worst examples to list");
    eval_cmd->add_flag("--tsv", tsv_report, "Emit the worst examples as TSV instead of text");
    eval_cmd->add_option("--normalize-side", normalize_side, "none, source or target");

    CLI::App *xlit_cmd =
        app.add_subcommand("transliterate", "Read tokens from stdin, one per line");
    xlit_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint path")->required();
    xlit_cmd->add_option("--beam", beam, "Beam width (1 = greedy)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (stats_cmd->parsed()) {
        print_stats(stats(load_normalized(dataset, normalize_side)));
        return kExitOk;
    }

    if (split_cmd->parsed()) {
        const CorpusSplits s = split(load_normalized(dataset, normalize_side), hp.seed);
        write_text(out_dir + "/train.tsv", pairs_to_tsv(s.train));
        write_text(out_dir + "/eval.tsv", pairs_to_tsv(s.eval));
        write_text(out_dir + "/test.tsv", pairs_to_tsv(s.test));
        printf("train %zu\neval %zu\ntest %zu\n", s.train.size(), s.eval.size(), s.test.size());
        return kExitOk;
    }

    if (train_cmd->parsed() || search_cmd->parsed()) {
        const PairList pairs = load_normalized(dataset, normalize_side);
        // vocabularies cover the whole corpus so eval/test never hit OOV
        CodepointVocabulary sv, tv;
        build_vocabs(pairs, sv, tv);
        const CorpusSplits s = split(pairs, hp.seed);
        const ModelFamily family = family_from_name(hp.family);
        TrainOptions opt;
        opt.max_steps = max_steps;
        opt.max_epochs = max_epochs;
        opt.verbose = verbose;

        ModelCheckpoint best;
        if (train_cmd->parsed()) {
            TrainResult r = train(family, s, sv, tv, hp.to_hparams(), opt);
            best = std::move(r.checkpoint);
            if (r.skipped_infeasible > 0)
                fprintf(stderr, "skipped %zu infeasible pairs\n", r.skipped_infeasible);
        } else {
            SearchSpace space =
                family == ModelFamily::Ei ? SearchSpace::ei_defaults() : SearchSpace::seq2seq_defaults();
            space.epsilons = hp.epsilons;
            SearchResult r = random_search(family, space, trials, hp.seed, s, sv, tv,
                                           hp.to_hparams(), opt, workers);
            if (!trial_table_path.empty()) write_text(trial_table_path, trial_table_tsv(r));
            best = std::move(r.best);
        }
        best.save(checkpoint_path);
        const EvalReport rep = evaluate_checkpoint(best, s.test, 0);
        printf("CER %.2f WER %.2f\n", rep.cer_percent, rep.wer_percent);
        return kExitOk;
    }

    if (eval_cmd->parsed()) {
        const ModelCheckpoint ck = ModelCheckpoint::load(checkpoint_path);
        const PairList pairs = load_normalized(dataset, normalize_side);
        const EvalReport rep = evaluate_checkpoint(ck, pairs, top_n, beam);
        fputs((tsv_report ? rep.to_tsv() : rep.to_text()).c_str(), stdout);
        return kExitOk;
    }

    // transliterate
    const ModelCheckpoint ck = ModelCheckpoint::load(checkpoint_path);
    size_t oov = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::u32string source = decode_utf8(line);
        std::string hyp;
        try {
            hyp = encode_utf8(ck.transliterate(source, beam));
        } catch (const VocabularyError &) {
            ++oov;
            char32_t culprit = 0;
            for (char32_t cp : source)
                if (!ck.src_vocab.contains(cp)) {
                    culprit = cp;
                    break;
                }
            char buf[16];
            snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(culprit));
            hyp = std::string("<ERROR:oov:") + buf + ">";
        }
        printf("%s\t%s\n", line.c_str(), hyp.c_str());
    }
    if (oov > 0) fprintf(stderr, "%zu tokens contained out-of-vocabulary codepoints\n", oov);
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    try {
        return run(argc, argv);
    } catch (const ParseError &e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const EncodingError &e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const FormatError &e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const VocabularyError &e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const IoError &e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const NumericError &e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitTraining;
    } catch (const ArgumentError &e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception &e) {
        fprintf(stderr, "error: %s\n", e.what());
        return kExitTraining;
    }
}
