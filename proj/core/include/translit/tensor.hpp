#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "translit/rng.hpp"

namespace translit {

using Vec = std::vector<double>;

// Row-major dense matrix of doubles. The workhorse for every weight matrix,
// activation table and gradient in the project.
struct Tensor2D {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> values;

    Tensor2D() = default;
    Tensor2D(size_t r, size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    Tensor2D(size_t r, size_t c, std::vector<double> v);
    Tensor2D(std::initializer_list<std::initializer_list<double>> init);

    static Tensor2D zeros(size_t r, size_t c) { return Tensor2D(r, c); }
    static Tensor2D zeros_like(const Tensor2D &t) { return Tensor2D(t.rows, t.cols); }
    // uniform(-s, s) with s = 1/sqrt(fan_in); fan_in defaults to cols.
    static Tensor2D random_uniform(size_t r, size_t c, Rng &rng);

    double &operator()(size_t r, size_t c) { return values[r * cols + c]; }
    double operator()(size_t r, size_t c) const { return values[r * cols + c]; }
    size_t size() const { return values.size(); }
    bool same_shape(const Tensor2D &o) const { return rows == o.rows && cols == o.cols; }

    void fill(double v) { values.assign(values.size(), v); }
    bool all_finite() const;
};

Tensor2D matmul(const Tensor2D &a, const Tensor2D &b);

// y = W x  (x.size() == W.cols)
Vec matvec(const Tensor2D &w, const Vec &x);
// y = W^T x  (x.size() == W.rows)
Vec matvec_transpose(const Tensor2D &w, const Vec &x);
// acc += x y^T  (rank-1 gradient accumulation)
void add_outer(Tensor2D &acc, const Vec &x, const Vec &y);

void axpy(double a, const Vec &x, Vec &y);

Vec softmax(const Vec &logits);
Vec log_softmax(const Vec &logits);

// Max over coordinates of |analytic - central difference| /
// max(1, |analytic|, |numeric|). f is re-evaluated at x +- h per coordinate.
double grad_check(const std::function<double(const Vec &)> &f, Vec x, const Vec &analytic_grad,
                  double h = 1e-5);

} // namespace translit
