#include <doctest.h>

#include <cmath>

#include "translit/error.hpp"
#include "translit/rng.hpp"
#include "translit/tensor.hpp"

using namespace translit;

namespace {

// independent triple-loop oracle
Tensor2D naive_matmul(const Tensor2D &a, const Tensor2D &b) {
    Tensor2D out(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i)
        for (size_t j = 0; j < b.cols; ++j)
            for (size_t k = 0; k < a.cols; ++k) out(i, j) += a(i, k) * b(k, j);
    return out;
}

Tensor2D random_tensor(size_t r, size_t c, Rng &rng) {
    Tensor2D t(r, c);
    for (auto &v : t.values) v = rng.uniform(-2.0, 2.0);
    return t;
}

} // namespace

TEST_CASE("matmul identity") {
    Tensor2D eye{{1, 0}, {0, 1}};
    Tensor2D a{{3, -1, 2}, {0.5, 4, 7}};
    Tensor2D r = matmul(eye, a);
    for (size_t i = 0; i < a.size(); ++i) CHECK(r.values[i] == a.values[i]);
}

TEST_CASE("matmul scalar") {
    Tensor2D r = matmul(Tensor2D{{2}}, Tensor2D{{3}});
    CHECK(r.rows == 1);
    CHECK(r(0, 0) == 6);
}

TEST_CASE("matmul against triple-loop oracle") {
    Rng rng(11);
    Tensor2D a = random_tensor(5, 4, rng), b = random_tensor(4, 3, rng);
    Tensor2D fast = matmul(a, b), slow = naive_matmul(a, b);
    for (size_t i = 0; i < fast.size(); ++i)
        CHECK(std::abs(fast.values[i] - slow.values[i]) < 1e-12);
}

TEST_CASE("matmul shape error names both shapes") {
    CHECK_THROWS_WITH_AS(matmul(Tensor2D(2, 3), Tensor2D(4, 2)),
                         doctest::Contains("2x3"), ShapeError);
}

TEST_CASE("matmul associativity on random triples") {
    Rng rng(7);
    for (int it = 0; it < 20; ++it) {
        Tensor2D a = random_tensor(3, 4, rng), b = random_tensor(4, 2, rng),
                 c = random_tensor(2, 5, rng);
        Tensor2D left = matmul(matmul(a, b), c), right = matmul(a, matmul(b, c));
        for (size_t i = 0; i < left.size(); ++i)
            CHECK(std::abs(left.values[i] - right.values[i]) < 1e-9);
    }
}

TEST_CASE("softmax uniform") {
    Vec p = softmax({0, 0, 0});
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("softmax ln2") {
    Vec p = softmax({std::log(2.0), 0.0});
    CHECK(p[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("softmax shift invariance and normalization") {
    Rng rng(3);
    for (int it = 0; it < 50; ++it) {
        Vec x(5);
        for (auto &v : x) v = rng.uniform(-30, 30);
        Vec p = softmax(x);
        double sum = 0;
        for (double v : p) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        Vec shifted = x;
        const double c = rng.uniform(-100, 100);
        for (auto &v : shifted) v += c;
        Vec q = softmax(shifted);
        for (size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-9));
    }
}

TEST_CASE("softmax rejects empty input") {
    CHECK_THROWS_AS(softmax({}), ArgumentError);
}

TEST_CASE("grad_check quadratic") {
    auto f = [](const Vec &x) { return x[0] * x[0]; };
    CHECK(grad_check(f, {3.0}, {6.0}) < 1e-8);
}

TEST_CASE("grad_check constant") {
    auto f = [](const Vec &) { return 4.2; };
    CHECK(grad_check(f, {1.0, -2.0}, {0.0, 0.0}) < 1e-10);
}

TEST_CASE("grad_check flags non-finite evaluations") {
    auto f = [](const Vec &x) { return std::log(x[0]); };
    CHECK_THROWS_AS(grad_check(f, {0.0}, {0.0}), NumericError);
}

TEST_CASE("rng determinism across instances") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(43);
    CHECK(Rng(42).next_u64() != c.next_u64());
}

TEST_CASE("uniform_int stays in range") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        int64_t v = rng.uniform_int(3, 9);
        CHECK(v >= 3);
        CHECK(v <= 9);
    }
}
