#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "translit/tensor.hpp"

namespace translit {

enum class CellKind { Lstm, Gru };

const char *cell_kind_name(CellKind kind);
CellKind cell_kind_from_name(const std::string &name);

// Gate rows in wx/wh/b are ordered i, f, g, o (input, forget, candidate,
// output); this layout is what checkpoints serialize.
struct LstmParams {
    size_t input_size = 0;
    size_t hidden_size = 0;
    Tensor2D wx; // 4H x D
    Tensor2D wh; // 4H x H
    Tensor2D b;  // 4H x 1

    static LstmParams zeros(size_t input_size, size_t hidden_size);
    static LstmParams random(size_t input_size, size_t hidden_size, Rng &rng);

    template <class F> void visit(F &&f) {
        f("wx", wx);
        f("wh", wh);
        f("b", b);
    }
};

// Gate rows ordered z, r, candidate.
struct GruParams {
    size_t input_size = 0;
    size_t hidden_size = 0;
    Tensor2D wx; // 3H x D
    Tensor2D wh; // 3H x H  (candidate rows multiply r (*) h)
    Tensor2D b;  // 3H x 1

    static GruParams zeros(size_t input_size, size_t hidden_size);
    static GruParams random(size_t input_size, size_t hidden_size, Rng &rng);

    template <class F> void visit(F &&f) {
        f("wx", wx);
        f("wh", wh);
        f("b", b);
    }
};

struct EmbeddingTable {
    size_t vocab_size = 0;
    size_t dim = 0;
    Tensor2D table; // V x E

    static EmbeddingTable zeros(size_t vocab_size, size_t dim);
    static EmbeddingTable random(size_t vocab_size, size_t dim, Rng &rng);

    Vec lookup(size_t id) const;
    void accumulate(size_t id, const Vec &grad);

    template <class F> void visit(F &&f) { f("table", table); }
};

// --- single-step forward/backward -----------------------------------------

std::pair<Vec, Vec> lstm_step(const LstmParams &p, const Vec &x, const Vec &h, const Vec &c);
Vec gru_step(const GruParams &p, const Vec &x, const Vec &h);

struct LstmCache {
    Vec x, h_prev, c_prev;
    Vec gate_i, gate_f, gate_g, gate_o;
    Vec c_new, tanh_c_new, h_new;
};

struct GruCache {
    Vec x, h_prev;
    Vec gate_z, gate_r, candidate;
    Vec h_new;
};

LstmCache lstm_step_cached(const LstmParams &p, const Vec &x, const Vec &h, const Vec &c);
GruCache gru_step_cached(const GruParams &p, const Vec &x, const Vec &h);

// Accumulates parameter gradients into grad and state gradients into
// dx/dh_prev/dc_prev (all sized on entry).
void lstm_step_backward(const LstmParams &p, const LstmCache &cache, const Vec &dh_new,
                        const Vec &dc_new, LstmParams &grad, Vec &dx, Vec &dh_prev, Vec &dc_prev);
void gru_step_backward(const GruParams &p, const GruCache &cache, const Vec &dh_new,
                       GruParams &grad, Vec &dx, Vec &dh_prev);

// --- stacked / bidirectional sequence runner ------------------------------

using CellParams = std::variant<LstmParams, GruParams>;

size_t cell_input_size(const CellParams &p);
size_t cell_hidden_size(const CellParams &p);
CellKind cell_kind(const CellParams &p);
CellParams cell_zeros_like(const CellParams &p);

struct Layer {
    CellParams forward;
    std::optional<CellParams> backward; // present iff bidirectional

    bool bidirectional() const { return backward.has_value(); }
    size_t input_size() const { return cell_input_size(forward); }
    size_t output_size() const {
        return cell_hidden_size(forward) * (bidirectional() ? 2 : 1);
    }

    static Layer make(CellKind kind, size_t input_size, size_t hidden_size, bool bidirectional,
                      Rng &rng);
    static Layer zeros_like(const Layer &l);
};

struct LayerStack {
    std::vector<Layer> layers;

    size_t input_size() const { return layers.front().input_size(); }
    size_t output_size() const { return layers.back().output_size(); }

    // Uniform stack: every layer the same cell kind and hidden size.
    static LayerStack make(CellKind kind, size_t input_size, size_t hidden_size, size_t num_layers,
                           bool bidirectional, Rng &rng);
    static LayerStack zeros_like(const LayerStack &s);

    // f(name, tensor) over every parameter, names like "l0.fwd.wx".
    template <class F> void visit(F &&f) {
        for (size_t i = 0; i < layers.size(); ++i) {
            const std::string prefix = "l" + std::to_string(i) + ".";
            auto visit_cell = [&](CellParams &cp, const std::string &dir) {
                std::visit(
                    [&](auto &p) {
                        p.visit([&](const char *n, Tensor2D &t) { f(prefix + dir + "." + n, t); });
                    },
                    cp);
            };
            visit_cell(layers[i].forward, "fwd");
            if (layers[i].backward) visit_cell(*layers[i].backward, "bwd");
        }
    }
};

using CellCache = std::variant<LstmCache, GruCache>;

struct DirectionTrace {
    std::vector<CellCache> steps; // in consumption order
};

struct LayerTrace {
    std::vector<Vec> inputs;
    DirectionTrace forward;
    DirectionTrace backward; // empty unless bidirectional
    std::vector<Vec> outputs;
};

struct StackTrace {
    std::vector<LayerTrace> layers;
    const std::vector<Vec> &outputs() const { return layers.back().outputs; }
};

// Runs the whole stack over the sequence from zero initial states.
// Bidirectional layers concatenate [forward ; backward] per time step.
std::vector<std::vector<Vec>> run_sequence(const LayerStack &stack, const std::vector<Vec> &inputs);

StackTrace run_sequence_cached(const LayerStack &stack, const std::vector<Vec> &inputs);

struct SequenceGrads {
    LayerStack params; // gradient-valued copy of the stack
    std::vector<Vec> inputs;
};

// upstream[t] is dLoss/d(top-layer output at t).
SequenceGrads backprop_sequence(const LayerStack &stack, const StackTrace &trace,
                                const std::vector<Vec> &upstream);

// --- step-wise interface for unidirectional stacks (decoder use) ----------

struct StackState {
    std::vector<Vec> h; // per layer
    std::vector<Vec> c; // per layer; unused entries stay empty for GRU

    static StackState zeros(const LayerStack &stack);
};

// One time step through a unidirectional stack; returns the top-layer output
// and appends one cache per layer to step_caches when non-null.
Vec stack_step(const LayerStack &stack, const Vec &x, StackState &state,
               std::vector<CellCache> *step_caches);

// Reverse of stack_step. d_top is dLoss/d(top output of this step); d_state
// carries dLoss/d(state after this step) in and dLoss/d(state before) out.
// Returns dLoss/dx.
Vec stack_step_backward(const LayerStack &stack, const std::vector<CellCache> &step_caches,
                        const Vec &d_top, StackState &d_state, LayerStack &grads);

} // namespace translit
