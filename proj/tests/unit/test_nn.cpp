#include <doctest.h>

#include <cmath>
#include <functional>

#include "synthcxr/nn/adam.hpp"
#include "synthcxr/nn/layers.hpp"
#include "test_support.hpp"

using namespace synthcxr;
using nn::Tensor;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = rng.normal(0.0, scale);
    return t;
}

/// Scalar objective: fixed random projection of the layer output.
struct Probe {
    std::vector<double> coeffs;

    explicit Probe(std::size_t n, Rng& rng) {
        coeffs.resize(n);
        for (auto& c : coeffs) c = rng.normal();
    }
    double loss(const Tensor& out) const {
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += coeffs[i] * out.data[i];
        return s;
    }
    Tensor grad(const Tensor& out) const {
        Tensor g(out.shape);
        for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = coeffs[i];
        return g;
    }
};

/// Central-difference check of analytic gradients for one layer. Verifies
/// both parameter gradients and the input gradient.
void check_layer_gradients(nn::Layer& layer, Tensor input, bool train, Rng& rng,
                           double step = 1e-5, double tol = 1e-6) {
    Tensor out = layer.forward(input, train);
    Probe probe(out.size(), rng);

    std::vector<nn::Param*> params;
    layer.collect_params(params);
    for (nn::Param* p : params) p->grad.zero();
    const Tensor grad_in = layer.backward(probe.grad(out));

    auto numeric = [&](double* slot) {
        const double keep = *slot;
        *slot = keep + step;
        const double up = probe.loss(layer.forward(input, train));
        *slot = keep - step;
        const double down = probe.loss(layer.forward(input, train));
        *slot = keep;
        layer.forward(input, train);  // restore cached state
        return (up - down) / (2.0 * step);
    };

    for (nn::Param* p : params) {
        for (std::size_t i = 0; i < p->value.size(); i += std::max<std::size_t>(1, p->value.size() / 25)) {
            const double expected = numeric(&p->value.data[i]);
            CHECK(p->grad.data[i] ==
                  doctest::Approx(expected).epsilon(1e-4).scale(std::max(1.0, std::abs(expected))));
        }
    }
    for (std::size_t i = 0; i < input.size(); i += std::max<std::size_t>(1, input.size() / 25)) {
        const double keep = input.data[i];
        input.data[i] = keep + step;
        const double up = probe.loss(layer.forward(input, train));
        input.data[i] = keep - step;
        const double down = probe.loss(layer.forward(input, train));
        input.data[i] = keep;
        layer.forward(input, train);
        const double expected = (up - down) / (2.0 * step);
        CHECK(grad_in.data[i] ==
              doctest::Approx(expected).epsilon(1e-4).scale(std::max(1.0, std::abs(expected))));
    }
    (void)tol;
}

}  // namespace

TEST_CASE("conv2d gradients match central differences") {
    Rng rng(101);
    nn::Conv2d conv("t.conv", 2, 3, 3, 2, 1);
    conv.init_he(rng);
    check_layer_gradients(conv, random_tensor({2, 2, 7, 6}, rng), true, rng);
}

TEST_CASE("conv2d without bias") {
    Rng rng(102);
    nn::Conv2d conv("t.conv", 3, 2, 1, 1, 0, false);
    conv.init_he(rng);
    check_layer_gradients(conv, random_tensor({1, 3, 4, 4}, rng), true, rng);
}

TEST_CASE("batchnorm gradients in train mode") {
    Rng rng(103);
    nn::BatchNorm2d bn("t.bn", 3);
    // Non-trivial gamma/beta.
    for (auto& v : bn.gamma.value.data) v = 0.5 + rng.uniform();
    for (auto& v : bn.beta.value.data) v = rng.normal();
    check_layer_gradients(bn, random_tensor({3, 3, 4, 5}, rng), true, rng);
}

TEST_CASE("batchnorm eval mode uses running statistics") {
    Rng rng(104);
    nn::BatchNorm2d bn("t.bn", 2);
    // Drive a few train steps so running stats are informative.
    for (int i = 0; i < 5; ++i) bn.forward(random_tensor({4, 2, 3, 3}, rng, 2.0), true);
    check_layer_gradients(bn, random_tensor({2, 2, 3, 3}, rng), false, rng);

    // Eval forward is deterministic (no stat updates).
    const Tensor x = random_tensor({1, 2, 3, 3}, rng);
    const Tensor y1 = bn.forward(x, false);
    const Tensor y2 = bn.forward(x, false);
    CHECK(y1.data == y2.data);
}

TEST_CASE("maxpool gradients route to argmax positions") {
    Rng rng(105);
    nn::MaxPool2d pool(3, 2, 1);
    check_layer_gradients(pool, random_tensor({2, 2, 7, 7}, rng), true, rng);
}

TEST_CASE("linear and global average pool gradients") {
    Rng rng(106);
    nn::Linear lin("t.fc", 6, 4);
    lin.init_he(rng);
    check_layer_gradients(lin, random_tensor({3, 6}, rng), true, rng);

    nn::GlobalAvgPool gap;
    check_layer_gradients(gap, random_tensor({2, 3, 4, 4}, rng), true, rng);
}

TEST_CASE("relu masks gradients") {
    Rng rng(107);
    nn::ReLU relu;
    Tensor x = random_tensor({2, 8}, rng);
    const Tensor y = relu.forward(x, true);
    Tensor g(y.shape);
    for (auto& v : g.data) v = 1.0;
    const Tensor gx = relu.backward(g);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(y.data[i] == (x.data[i] > 0 ? x.data[i] : 0.0));
        CHECK(gx.data[i] == (x.data[i] > 0 ? 1.0 : 0.0));
    }
}

TEST_CASE("softmax cross entropy value and gradient") {
    Tensor logits({1, 2});
    logits.data = {0.0, 0.0};
    Tensor grad;
    const double loss = nn::softmax_cross_entropy(logits, {0}, &grad);
    CHECK(loss == doctest::Approx(std::log(2.0)));
    CHECK(grad.data[0] == doctest::Approx(-0.5));
    CHECK(grad.data[1] == doctest::Approx(0.5));

    // Numeric check on a random batch.
    Rng rng(108);
    Tensor batch = random_tensor({4, 2}, rng);
    const std::vector<int> labels{0, 1, 1, 0};
    Tensor analytic;
    nn::softmax_cross_entropy(batch, labels, &analytic);
    const double step = 1e-6;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double keep = batch.data[i];
        batch.data[i] = keep + step;
        const double up = nn::softmax_cross_entropy(batch, labels, nullptr);
        batch.data[i] = keep - step;
        const double down = nn::softmax_cross_entropy(batch, labels, nullptr);
        batch.data[i] = keep;
        CHECK(analytic.data[i] == doctest::Approx((up - down) / (2 * step)).epsilon(1e-5));
    }

    // Softmax rows sum to 1.
    const Tensor probs = nn::softmax(batch);
    for (int i = 0; i < 4; ++i) {
        CHECK(probs.data[2 * i] + probs.data[2 * i + 1] == doctest::Approx(1.0));
    }
}

TEST_CASE("adam first step moves by ~lr against the gradient sign") {
    nn::Param p("w", {2});
    p.value.data = {1.0, -1.0};
    p.grad.data = {0.5, -0.25};
    nn::Adam adam({&p}, 0.01);
    adam.step();
    CHECK(p.value.data[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(p.value.data[1] == doctest::Approx(-1.0 + 0.01).epsilon(1e-6));

    adam.zero_grad();
    CHECK(p.grad.data[0] == 0.0);
}

TEST_CASE("seeded initialization is reproducible") {
    Rng a(55), b(55);
    nn::Conv2d ca("x", 3, 4, 3, 1, 1), cb("x", 3, 4, 3, 1, 1);
    ca.init_he(a);
    cb.init_he(b);
    CHECK(ca.weight.value.data == cb.weight.value.data);
}

TEST_CASE("residual-style composition backprops through both branches") {
    // y = relu(conv2(relu(conv1(x))) + x); checks the additive-skip pattern
    // used by the deep backbone.
    Rng rng(109);
    nn::Conv2d conv1("r.c1", 2, 2, 3, 1, 1);
    nn::Conv2d conv2("r.c2", 2, 2, 3, 1, 1);
    conv1.init_he(rng);
    conv2.init_he(rng);
    nn::ReLU relu1, relu2;

    Tensor x = random_tensor({1, 2, 5, 5}, rng);

    auto forward = [&](const Tensor& input) {
        Tensor h = relu1.forward(conv1.forward(input, true), true);
        Tensor branch = conv2.forward(h, true);
        for (std::size_t i = 0; i < branch.size(); ++i) branch.data[i] += input.data[i];
        return relu2.forward(branch, true);
    };

    Tensor out = forward(x);
    Probe probe(out.size(), rng);

    conv1.weight.grad.zero();
    conv1.bias.grad.zero();
    conv2.weight.grad.zero();
    conv2.bias.grad.zero();
    Tensor g = relu2.backward(probe.grad(out));
    Tensor g_branch = conv1.backward(relu1.backward(conv2.backward(g)));
    for (std::size_t i = 0; i < g_branch.size(); ++i) g_branch.data[i] += g.data[i];

    const double step = 1e-5;
    for (std::size_t i = 0; i < x.size(); i += 3) {
        const double keep = x.data[i];
        x.data[i] = keep + step;
        const double up = probe.loss(forward(x));
        x.data[i] = keep - step;
        const double down = probe.loss(forward(x));
        x.data[i] = keep;
        CHECK(g_branch.data[i] == doctest::Approx((up - down) / (2 * step)).epsilon(1e-4));
    }
    for (std::size_t i = 0; i < conv2.weight.value.size(); i += 7) {
        const double keep = conv2.weight.value.data[i];
        conv2.weight.value.data[i] = keep + step;
        const double up = probe.loss(forward(x));
        conv2.weight.value.data[i] = keep - step;
        const double down = probe.loss(forward(x));
        conv2.weight.value.data[i] = keep;
        CHECK(conv2.weight.grad.data[i] ==
              doctest::Approx((up - down) / (2 * step)).epsilon(1e-4));
    }
}
