#include "translit/cells.hpp"

#include <cmath>

#include "translit/error.hpp"

namespace translit {

const char *cell_kind_name(CellKind kind) { return kind == CellKind::Lstm ? "lstm" : "gru"; }

CellKind cell_kind_from_name(const std::string &name) {
    if (name == "lstm") return CellKind::Lstm;
    if (name == "gru") return CellKind::Gru;
    throw ArgumentError("unknown cell kind: " + name);
}

static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LstmParams LstmParams::zeros(size_t input_size, size_t hidden_size) {
    LstmParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    p.wx = Tensor2D(4 * hidden_size, input_size);
    p.wh = Tensor2D(4 * hidden_size, hidden_size);
    p.b = Tensor2D(4 * hidden_size, 1);
    return p;
}

LstmParams LstmParams::random(size_t input_size, size_t hidden_size, Rng &rng) {
    LstmParams p = zeros(input_size, hidden_size);
    p.wx = Tensor2D::random_uniform(4 * hidden_size, input_size, rng);
    p.wh = Tensor2D::random_uniform(4 * hidden_size, hidden_size, rng);
    return p;
}

GruParams GruParams::zeros(size_t input_size, size_t hidden_size) {
    GruParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    p.wx = Tensor2D(3 * hidden_size, input_size);
    p.wh = Tensor2D(3 * hidden_size, hidden_size);
    p.b = Tensor2D(3 * hidden_size, 1);
    return p;
}

GruParams GruParams::random(size_t input_size, size_t hidden_size, Rng &rng) {
    GruParams p = zeros(input_size, hidden_size);
    p.wx = Tensor2D::random_uniform(3 * hidden_size, input_size, rng);
    p.wh = Tensor2D::random_uniform(3 * hidden_size, hidden_size, rng);
    return p;
}

EmbeddingTable EmbeddingTable::zeros(size_t vocab_size, size_t dim) {
    EmbeddingTable e;
    e.vocab_size = vocab_size;
    e.dim = dim;
    e.table = Tensor2D(vocab_size, dim);
    return e;
}

EmbeddingTable EmbeddingTable::random(size_t vocab_size, size_t dim, Rng &rng) {
    EmbeddingTable e = zeros(vocab_size, dim);
    e.table = Tensor2D::random_uniform(vocab_size, dim, rng);
    return e;
}

Vec EmbeddingTable::lookup(size_t id) const {
    if (id >= vocab_size) throw VocabularyError("embedding lookup: id " + std::to_string(id) +
                                                " out of range (vocab " + std::to_string(vocab_size) + ")");
    const double *row = &table.values[id * dim];
    return Vec(row, row + dim);
}

void EmbeddingTable::accumulate(size_t id, const Vec &grad) {
    if (id >= vocab_size || grad.size() != dim) throw ShapeError("embedding accumulate: bad id or grad size");
    double *row = &table.values[id * dim];
    for (size_t i = 0; i < dim; ++i) row[i] += grad[i];
}

// preact = wx x + wh h + b, as one vector of G*H entries.
static Vec preactivations(const Tensor2D &wx, const Tensor2D &wh, const Tensor2D &b, const Vec &x,
                          const Vec &h) {
    Vec a = matvec(wx, x);
    const Vec rec = matvec(wh, h);
    for (size_t i = 0; i < a.size(); ++i) a[i] += rec[i] + b.values[i];
    return a;
}

LstmCache lstm_step_cached(const LstmParams &p, const Vec &x, const Vec &h, const Vec &c) {
    const size_t H = p.hidden_size;
    if (x.size() != p.input_size || h.size() != H || c.size() != H)
        throw ShapeError("lstm_step: state/input sizes do not match parameters");
    const Vec a = preactivations(p.wx, p.wh, p.b, x, h);
    LstmCache cc;
    cc.x = x;
    cc.h_prev = h;
    cc.c_prev = c;
    cc.gate_i.resize(H);
    cc.gate_f.resize(H);
    cc.gate_g.resize(H);
    cc.gate_o.resize(H);
    cc.c_new.resize(H);
    cc.tanh_c_new.resize(H);
    cc.h_new.resize(H);
    for (size_t j = 0; j < H; ++j) {
        const double i = sigmoid(a[j]);
        const double f = sigmoid(a[H + j]);
        const double g = std::tanh(a[2 * H + j]);
        const double o = sigmoid(a[3 * H + j]);
        const double cn = f * c[j] + i * g;
        const double tc = std::tanh(cn);
        cc.gate_i[j] = i;
        cc.gate_f[j] = f;
        cc.gate_g[j] = g;
        cc.gate_o[j] = o;
        cc.c_new[j] = cn;
        cc.tanh_c_new[j] = tc;
        cc.h_new[j] = o * tc;
    }
    return cc;
}

std::pair<Vec, Vec> lstm_step(const LstmParams &p, const Vec &x, const Vec &h, const Vec &c) {
    LstmCache cc = lstm_step_cached(p, x, h, c);
    return {std::move(cc.h_new), std::move(cc.c_new)};
}

void lstm_step_backward(const LstmParams &p, const LstmCache &cc, const Vec &dh_new,
                        const Vec &dc_new, LstmParams &grad, Vec &dx, Vec &dh_prev, Vec &dc_prev) {
    const size_t H = p.hidden_size;
    Vec da(4 * H);
    for (size_t j = 0; j < H; ++j) {
        const double i = cc.gate_i[j], f = cc.gate_f[j], g = cc.gate_g[j], o = cc.gate_o[j];
        const double tc = cc.tanh_c_new[j];
        const double dc_total = dc_new[j] + dh_new[j] * o * (1.0 - tc * tc);
        da[j] = dc_total * g * i * (1.0 - i);
        da[H + j] = dc_total * cc.c_prev[j] * f * (1.0 - f);
        da[2 * H + j] = dc_total * i * (1.0 - g * g);
        da[3 * H + j] = dh_new[j] * tc * o * (1.0 - o);
        dc_prev[j] += dc_total * f;
    }
    add_outer(grad.wx, da, cc.x);
    add_outer(grad.wh, da, cc.h_prev);
    for (size_t i = 0; i < da.size(); ++i) grad.b.values[i] += da[i];
    axpy(1.0, matvec_transpose(p.wx, da), dx);
    axpy(1.0, matvec_transpose(p.wh, da), dh_prev);
}

GruCache gru_step_cached(const GruParams &p, const Vec &x, const Vec &h) {
    const size_t H = p.hidden_size;
    if (x.size() != p.input_size || h.size() != H)
        throw ShapeError("gru_step: state/input sizes do not match parameters");
    GruCache cc;
    cc.x = x;
    cc.h_prev = h;
    cc.gate_z.resize(H);
    cc.gate_r.resize(H);
    cc.candidate.resize(H);
    cc.h_new.resize(H);
    // z and r pre-activations use h directly.
    Vec a = matvec(p.wx, x);
    for (size_t i = 0; i < 3 * H; ++i) a[i] += p.b.values[i];
    for (size_t row = 0; row < 2 * H; ++row) {
        const double *wrow = &p.wh.values[row * H];
        double acc = 0.0;
        for (size_t j = 0; j < H; ++j) acc += wrow[j] * h[j];
        a[row] += acc;
    }
    for (size_t j = 0; j < H; ++j) {
        cc.gate_z[j] = sigmoid(a[j]);
        cc.gate_r[j] = sigmoid(a[H + j]);
    }
    // candidate rows multiply r (*) h.
    Vec rh(H);
    for (size_t j = 0; j < H; ++j) rh[j] = cc.gate_r[j] * h[j];
    for (size_t row = 0; row < H; ++row) {
        const double *wrow = &p.wh.values[(2 * H + row) * H];
        double acc = 0.0;
        for (size_t j = 0; j < H; ++j) acc += wrow[j] * rh[j];
        cc.candidate[row] = std::tanh(a[2 * H + row] + acc);
    }
    for (size_t j = 0; j < H; ++j)
        cc.h_new[j] = (1.0 - cc.gate_z[j]) * h[j] + cc.gate_z[j] * cc.candidate[j];
    return cc;
}

Vec gru_step(const GruParams &p, const Vec &x, const Vec &h) {
    return gru_step_cached(p, x, h).h_new;
}

void gru_step_backward(const GruParams &p, const GruCache &cc, const Vec &dh_new, GruParams &grad,
                       Vec &dx, Vec &dh_prev) {
    const size_t H = p.hidden_size;
    Vec da(3 * H);
    Vec d_rh(H, 0.0);
    for (size_t j = 0; j < H; ++j) {
        const double z = cc.gate_z[j], n = cc.candidate[j], h = cc.h_prev[j];
        da[j] = dh_new[j] * (n - h) * z * (1.0 - z);         // z gate
        const double dn = dh_new[j] * z * (1.0 - n * n);     // candidate pre-act
        da[2 * H + j] = dn;
        dh_prev[j] += dh_new[j] * (1.0 - z);
    }
    // d(r (*) h) = wh_candidate^T * da_candidate
    for (size_t row = 0; row < H; ++row) {
        const double dn = da[2 * H + row];
        if (dn == 0.0) continue;
        const double *wrow = &p.wh.values[(2 * H + row) * H];
        for (size_t j = 0; j < H; ++j) d_rh[j] += dn * wrow[j];
    }
    for (size_t j = 0; j < H; ++j) {
        const double r = cc.gate_r[j];
        da[H + j] = d_rh[j] * cc.h_prev[j] * r * (1.0 - r); // r gate
        dh_prev[j] += d_rh[j] * r;
    }
    // Recurrent weight grads: z/r rows against h_prev, candidate rows against r(*)h.
    Vec rh(H);
    for (size_t j = 0; j < H; ++j) rh[j] = cc.gate_r[j] * cc.h_prev[j];
    for (size_t row = 0; row < 3 * H; ++row) {
        const double d = da[row];
        if (d == 0.0) continue;
        const Vec &against = row < 2 * H ? cc.h_prev : rh;
        double *grow = &grad.wh.values[row * H];
        for (size_t j = 0; j < H; ++j) grow[j] += d * against[j];
        // and the h_prev contribution through z/r pre-activations
        if (row < 2 * H) {
            const double *wrow = &p.wh.values[row * H];
            for (size_t j = 0; j < H; ++j) dh_prev[j] += d * wrow[j];
        }
    }
    add_outer(grad.wx, da, cc.x);
    for (size_t i = 0; i < da.size(); ++i) grad.b.values[i] += da[i];
    axpy(1.0, matvec_transpose(p.wx, da), dx);
}

// --- stacked runner -------------------------------------------------------

size_t cell_input_size(const CellParams &p) {
    return std::visit([](const auto &c) { return c.input_size; }, p);
}
size_t cell_hidden_size(const CellParams &p) {
    return std::visit([](const auto &c) { return c.hidden_size; }, p);
}
CellKind cell_kind(const CellParams &p) {
    return std::holds_alternative<LstmParams>(p) ? CellKind::Lstm : CellKind::Gru;
}
CellParams cell_zeros_like(const CellParams &p) {
    return std::visit(
        [](const auto &c) -> CellParams {
            using T = std::decay_t<decltype(c)>;
            return T::zeros(c.input_size, c.hidden_size);
        },
        p);
}

static CellParams cell_make(CellKind kind, size_t input_size, size_t hidden_size, Rng &rng) {
    if (kind == CellKind::Lstm) return LstmParams::random(input_size, hidden_size, rng);
    return GruParams::random(input_size, hidden_size, rng);
}

Layer Layer::make(CellKind kind, size_t input_size, size_t hidden_size, bool bidirectional,
                  Rng &rng) {
    Layer l;
    l.forward = cell_make(kind, input_size, hidden_size, rng);
    if (bidirectional) l.backward = cell_make(kind, input_size, hidden_size, rng);
    return l;
}

Layer Layer::zeros_like(const Layer &src) {
    Layer l;
    l.forward = cell_zeros_like(src.forward);
    if (src.backward) l.backward = cell_zeros_like(*src.backward);
    return l;
}

LayerStack LayerStack::make(CellKind kind, size_t input_size, size_t hidden_size,
                            size_t num_layers, bool bidirectional, Rng &rng) {
    if (num_layers == 0) throw ArgumentError("LayerStack: need at least one layer");
    LayerStack s;
    size_t in = input_size;
    for (size_t i = 0; i < num_layers; ++i) {
        s.layers.push_back(Layer::make(kind, in, hidden_size, bidirectional, rng));
        in = s.layers.back().output_size();
    }
    return s;
}

LayerStack LayerStack::zeros_like(const LayerStack &src) {
    LayerStack s;
    s.layers.reserve(src.layers.size());
    for (const auto &l : src.layers) s.layers.push_back(Layer::zeros_like(l));
    return s;
}

static CellCache cell_step_cached(const CellParams &p, const Vec &x, Vec &h, Vec &c) {
    if (const auto *lp = std::get_if<LstmParams>(&p)) {
        LstmCache cc = lstm_step_cached(*lp, x, h, c);
        h = cc.h_new;
        c = cc.c_new;
        return cc;
    }
    const auto &gp = std::get<GruParams>(p);
    GruCache cc = gru_step_cached(gp, x, h);
    h = cc.h_new;
    return cc;
}

static const Vec &cache_output(const CellCache &c) {
    return std::visit([](const auto &cc) -> const Vec & { return cc.h_new; }, c);
}

// Runs one direction over inputs given in consumption order.
static DirectionTrace run_direction(const CellParams &p, const std::vector<const Vec *> &inputs) {
    const size_t H = cell_hidden_size(p);
    Vec h(H, 0.0), c(H, 0.0);
    DirectionTrace trace;
    trace.steps.reserve(inputs.size());
    for (const Vec *x : inputs) trace.steps.push_back(cell_step_cached(p, *x, h, c));
    return trace;
}

// upstream[s] is d/d(h_new at consumption step s); returns d/d(input at step s).
static std::vector<Vec> direction_backward(const CellParams &p, const DirectionTrace &trace,
                                           const std::vector<Vec> &upstream, CellParams &grads) {
    const size_t T = trace.steps.size();
    const size_t H = cell_hidden_size(p);
    const size_t D = cell_input_size(p);
    std::vector<Vec> dx(T, Vec(D, 0.0));
    Vec dh(H, 0.0), dc(H, 0.0);
    for (size_t s = T; s-- > 0;) {
        Vec dh_total = upstream[s];
        axpy(1.0, dh, dh_total);
        Vec dh_prev(H, 0.0), dc_prev(H, 0.0);
        if (const auto *lp = std::get_if<LstmParams>(&p)) {
            lstm_step_backward(*lp, std::get<LstmCache>(trace.steps[s]), dh_total, dc,
                               std::get<LstmParams>(grads), dx[s], dh_prev, dc_prev);
        } else {
            gru_step_backward(std::get<GruParams>(p), std::get<GruCache>(trace.steps[s]), dh_total,
                              std::get<GruParams>(grads), dx[s], dh_prev);
        }
        dh = std::move(dh_prev);
        dc = std::move(dc_prev);
    }
    return dx;
}

StackTrace run_sequence_cached(const LayerStack &stack, const std::vector<Vec> &inputs) {
    if (inputs.empty()) throw ArgumentError("run_sequence: empty input sequence");
    StackTrace trace;
    std::vector<Vec> current = inputs;
    for (const Layer &layer : stack.layers) {
        LayerTrace lt;
        lt.inputs = current;
        const size_t T = current.size();
        std::vector<const Vec *> fwd_in(T), bwd_in(T);
        for (size_t t = 0; t < T; ++t) {
            fwd_in[t] = &lt.inputs[t];
            bwd_in[t] = &lt.inputs[T - 1 - t];
        }
        lt.forward = run_direction(layer.forward, fwd_in);
        if (layer.backward) lt.backward = run_direction(*layer.backward, bwd_in);
        lt.outputs.resize(T);
        for (size_t t = 0; t < T; ++t) {
            Vec out = cache_output(lt.forward.steps[t]);
            if (layer.backward) {
                const Vec &b = cache_output(lt.backward.steps[T - 1 - t]);
                out.insert(out.end(), b.begin(), b.end());
            }
            lt.outputs[t] = std::move(out);
        }
        current = lt.outputs;
        trace.layers.push_back(std::move(lt));
    }
    return trace;
}

std::vector<std::vector<Vec>> run_sequence(const LayerStack &stack,
                                           const std::vector<Vec> &inputs) {
    StackTrace trace = run_sequence_cached(stack, inputs);
    std::vector<std::vector<Vec>> out;
    out.reserve(trace.layers.size());
    for (auto &lt : trace.layers) out.push_back(std::move(lt.outputs));
    return out;
}

SequenceGrads backprop_sequence(const LayerStack &stack, const StackTrace &trace,
                                const std::vector<Vec> &upstream) {
    const size_t T = trace.layers.front().inputs.size();
    if (upstream.size() != T) throw ShapeError("backprop_sequence: upstream length mismatch");
    SequenceGrads grads;
    grads.params = LayerStack::zeros_like(stack);
    std::vector<Vec> d_out = upstream;
    for (size_t li = stack.layers.size(); li-- > 0;) {
        const Layer &layer = stack.layers[li];
        const LayerTrace &lt = trace.layers[li];
        Layer &lg = grads.params.layers[li];
        const size_t H = cell_hidden_size(layer.forward);
        // split upstream into per-direction, consumption order
        std::vector<Vec> up_fwd(T), up_bwd;
        for (size_t t = 0; t < T; ++t) {
            if (d_out[t].size() != layer.output_size())
                throw ShapeError("backprop_sequence: upstream width mismatch");
            up_fwd[t] = Vec(d_out[t].begin(), d_out[t].begin() + H);
        }
        if (layer.backward) {
            up_bwd.resize(T);
            for (size_t s = 0; s < T; ++s) {
                const Vec &u = d_out[T - 1 - s];
                up_bwd[s] = Vec(u.begin() + H, u.end());
            }
        }
        std::vector<Vec> dx = direction_backward(layer.forward, lt.forward, up_fwd, lg.forward);
        if (layer.backward) {
            std::vector<Vec> dxb =
                direction_backward(*layer.backward, lt.backward, up_bwd, *lg.backward);
            for (size_t s = 0; s < T; ++s) axpy(1.0, dxb[s], dx[T - 1 - s]);
        }
        d_out = std::move(dx);
    }
    grads.inputs = std::move(d_out);
    return grads;
}

StackState StackState::zeros(const LayerStack &stack) {
    StackState st;
    for (const Layer &l : stack.layers) {
        const size_t H = cell_hidden_size(l.forward);
        st.h.push_back(Vec(H, 0.0));
        st.c.push_back(cell_kind(l.forward) == CellKind::Lstm ? Vec(H, 0.0) : Vec());
    }
    return st;
}

Vec stack_step(const LayerStack &stack, const Vec &x, StackState &state,
               std::vector<CellCache> *step_caches) {
    Vec cur = x;
    for (size_t l = 0; l < stack.layers.size(); ++l) {
        const Layer &layer = stack.layers[l];
        if (layer.backward) throw ArgumentError("stack_step: stack must be unidirectional");
        CellCache cc = cell_step_cached(layer.forward, cur, state.h[l], state.c[l]);
        cur = cache_output(cc);
        if (step_caches) step_caches->push_back(std::move(cc));
    }
    return cur;
}

Vec stack_step_backward(const LayerStack &stack, const std::vector<CellCache> &step_caches,
                        const Vec &d_top, StackState &d_state, LayerStack &grads) {
    Vec d_from_above = d_top;
    for (size_t l = stack.layers.size(); l-- > 0;) {
        const Layer &layer = stack.layers[l];
        const size_t H = cell_hidden_size(layer.forward);
        const size_t D = cell_input_size(layer.forward);
        Vec dh_new = d_state.h[l];
        axpy(1.0, d_from_above, dh_new);
        Vec dx(D, 0.0), dh_prev(H, 0.0);
        if (cell_kind(layer.forward) == CellKind::Lstm) {
            Vec dc_prev(H, 0.0);
            lstm_step_backward(std::get<LstmParams>(layer.forward),
                               std::get<LstmCache>(step_caches[l]), dh_new, d_state.c[l],
                               std::get<LstmParams>(grads.layers[l].forward), dx, dh_prev, dc_prev);
            d_state.c[l] = std::move(dc_prev);
        } else {
            gru_step_backward(std::get<GruParams>(layer.forward),
                              std::get<GruCache>(step_caches[l]), dh_new,
                              std::get<GruParams>(grads.layers[l].forward), dx, dh_prev);
        }
        d_state.h[l] = std::move(dh_prev);
        d_from_above = std::move(dx);
    }
    return d_from_above;
}

} // namespace translit
