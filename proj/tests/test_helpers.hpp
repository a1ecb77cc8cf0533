#pragma once

#include <string>
#include <vector>

#include "translit/tensor.hpp"

namespace translit::testing {

// Flattens every parameter of a visitable model into one vector.
template <class Model> Vec flatten(Model &model) {
    Vec out;
    model.visit([&](const std::string &, Tensor2D &t) {
        out.insert(out.end(), t.values.begin(), t.values.end());
    });
    return out;
}

template <class Model> void unflatten(Model &model, const Vec &x) {
    size_t off = 0;
    model.visit([&](const std::string &, Tensor2D &t) {
        std::copy(x.begin() + off, x.begin() + off + t.values.size(), t.values.begin());
        off += t.values.size();
    });
}

// Finite-difference check of d(loss)/d(params) against an analytic
// gradient shaped like the model.
template <class Model, class LossFn>
double model_grad_check(const Model &model, LossFn &&loss, Model &analytic, double h = 1e-5) {
    Model scratch = model;
    Vec x = flatten(scratch);
    const Vec g = flatten(analytic);
    auto f = [&](const Vec &params) {
        unflatten(scratch, params);
        return loss(scratch);
    };
    return grad_check(f, x, g, h);
}

} // namespace translit::testing
