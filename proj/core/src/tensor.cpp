#include "translit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "translit/error.hpp"

namespace translit {

Tensor2D::Tensor2D(size_t r, size_t c, std::vector<double> v) : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != rows * cols)
        throw ShapeError("Tensor2D: " + std::to_string(values.size()) + " values for shape " +
                         std::to_string(rows) + "x" + std::to_string(cols));
}

Tensor2D::Tensor2D(std::initializer_list<std::initializer_list<double>> init) {
    rows = init.size();
    cols = rows ? init.begin()->size() : 0;
    values.reserve(rows * cols);
    for (const auto &row : init) {
        if (row.size() != cols) throw ShapeError("Tensor2D: ragged initializer");
        values.insert(values.end(), row.begin(), row.end());
    }
}

Tensor2D Tensor2D::random_uniform(size_t r, size_t c, Rng &rng) {
    Tensor2D t(r, c);
    const double s = 1.0 / std::sqrt(static_cast<double>(c > 0 ? c : 1));
    for (auto &v : t.values) v = rng.uniform(-s, s);
    return t;
}

bool Tensor2D::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

static std::string shape_str(const Tensor2D &t) {
    return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

Tensor2D matmul(const Tensor2D &a, const Tensor2D &b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: incompatible shapes " + shape_str(a) + " and " + shape_str(b));
    Tensor2D out(a.rows, b.cols);
    // ikj order keeps the inner loop contiguous in b and out.
    for (size_t i = 0; i < a.rows; ++i) {
        double *orow = &out.values[i * out.cols];
        for (size_t k = 0; k < a.cols; ++k) {
            const double aik = a.values[i * a.cols + k];
            if (aik == 0.0) continue;
            const double *brow = &b.values[k * b.cols];
            for (size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Vec matvec(const Tensor2D &w, const Vec &x) {
    if (x.size() != w.cols)
        throw ShapeError("matvec: " + shape_str(w) + " with vector of length " +
                         std::to_string(x.size()));
    Vec y(w.rows, 0.0);
    for (size_t i = 0; i < w.rows; ++i) {
        const double *row = &w.values[i * w.cols];
        double acc = 0.0;
        for (size_t j = 0; j < w.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

Vec matvec_transpose(const Tensor2D &w, const Vec &x) {
    if (x.size() != w.rows)
        throw ShapeError("matvec_transpose: " + shape_str(w) + " with vector of length " +
                         std::to_string(x.size()));
    Vec y(w.cols, 0.0);
    for (size_t i = 0; i < w.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double *row = &w.values[i * w.cols];
        for (size_t j = 0; j < w.cols; ++j) y[j] += xi * row[j];
    }
    return y;
}

void add_outer(Tensor2D &acc, const Vec &x, const Vec &y) {
    if (acc.rows != x.size() || acc.cols != y.size())
        throw ShapeError("add_outer: " + shape_str(acc) + " with vectors " +
                         std::to_string(x.size()) + ", " + std::to_string(y.size()));
    for (size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        double *row = &acc.values[i * acc.cols];
        for (size_t j = 0; j < y.size(); ++j) row[j] += xi * y[j];
    }
}

void axpy(double a, const Vec &x, Vec &y) {
    if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec log_softmax(const Vec &logits) {
    if (logits.empty()) throw ArgumentError("log_softmax: empty input");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    Vec out(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

Vec softmax(const Vec &logits) {
    Vec out = log_softmax(logits);
    for (double &v : out) v = std::exp(v);
    return out;
}

double grad_check(const std::function<double(const Vec &)> &f, Vec x, const Vec &analytic_grad,
                  double h) {
    if (x.size() != analytic_grad.size()) throw ShapeError("grad_check: length mismatch");
    double worst = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("grad_check: non-finite function evaluation at coordinate " +
                               std::to_string(i));
        const double numeric = (fp - fm) / (2.0 * h);
        const double analytic = analytic_grad[i];
        const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
    return worst;
}

} // namespace translit
