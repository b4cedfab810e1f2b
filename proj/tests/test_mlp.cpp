#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "satsched/mlp.hpp"

using namespace satsched;
using namespace satsched::learn;

TEST_CASE("orthogonal initialization: orthonormal columns, scaled by gain") {
    RngStream rng({1, 2, 3});
    const MatrixXd sq = orthogonal_matrix(64, 64, 1.0, rng);
    CHECK((sq.transpose() * sq - MatrixXd::Identity(64, 64)).norm() < 1e-10);

    // Tall: columns orthonormal. Wide: rows orthonormal.
    const MatrixXd tall = orthogonal_matrix(64, 32, 1.0, rng);
    CHECK((tall.transpose() * tall - MatrixXd::Identity(32, 32)).norm() < 1e-10);
    const MatrixXd wide = orthogonal_matrix(32, 64, 1.0, rng);
    CHECK((wide * wide.transpose() - MatrixXd::Identity(32, 32)).norm() < 1e-10);

    const double g = 1.4142135623730951;
    const MatrixXd gained = orthogonal_matrix(16, 16, g, rng);
    CHECK((gained.transpose() * gained - 2.0 * MatrixXd::Identity(16, 16)).norm() < 1e-10);

    RngStream a({7, 7}), b({7, 7}), c({7, 8});
    CHECK(orthogonal_matrix(8, 8, 1.0, a) == orthogonal_matrix(8, 8, 1.0, b));
    CHECK(orthogonal_matrix(8, 8, 1.0, a) != orthogonal_matrix(8, 8, 1.0, c));

    CHECK_THROWS_AS(orthogonal_matrix(0, 4, 1.0, rng), std::invalid_argument);
}

TEST_CASE("network construction: shapes, zero biases, parameter count") {
    RngStream rng({11});
    const BlockMlp net(5, 5, 32, 64, 0.01, rng);
    CHECK(net.entries() == 5);
    CHECK(net.outputs() == 5);
    for (int i = 0; i < 4; ++i) {
        CHECK(net.w1[i].rows() == 32);
        CHECK(net.w1[i].cols() == 5);
        CHECK(net.b1[i].isZero());
    }
    CHECK(net.w2.rows() == 64);
    CHECK(net.w2.cols() == 128);
    CHECK(net.w3.rows() == 5);
    CHECK(net.w3.cols() == 64);
    CHECK(net.b2.isZero());
    CHECK(net.b3.isZero());
    CHECK(net.parameter_count() == 4 * (32 * 5 + 32) + (64 * 128 + 64) + (5 * 64 + 5));

    // Head gain shows up as the scale of the head weight.
    CHECK((net.w3 * net.w3.transpose() -
           0.01 * 0.01 * MatrixXd::Identity(5, 5)).norm() < 1e-10);

    const BlockMlp z = BlockMlp::zeros_like(net);
    CHECK(z.parameter_count() == net.parameter_count());
    CHECK(z.w2.isZero());
    CHECK_THROWS_AS(BlockMlp(0, 5, 32, 64, 0.01, rng), std::invalid_argument);
}

TEST_CASE("forward pass matches a by-hand recomputation") {
    RngStream rng({21});
    const BlockMlp net(2, 3, 4, 6, 1.0, rng);
    MatrixXd x(4, 2);
    x << 0.5, -1.0, 2.0, 0.0, -0.3, 0.7, 1.5, 1.5;

    const VectorXd out = net.forward(x);

    VectorXd z(16);
    for (int i = 0; i < 4; ++i) {
        const VectorXd h = (net.w1[i] * x.row(i).transpose() + net.b1[i]).cwiseMax(0.0);
        z.segment(i * 4, 4) = h;
    }
    const VectorXd h2 = (net.w2 * z + net.b2).cwiseMax(0.0);
    const VectorXd expect = net.w3 * h2 + net.b3;
    CHECK((out - expect).norm() < 1e-12);

    CHECK_THROWS_AS(net.forward(MatrixXd::Zero(3, 2)), std::invalid_argument);
    CHECK_THROWS_AS(net.forward(MatrixXd::Zero(4, 3)), std::invalid_argument);
}

TEST_CASE("masked softmax: exact values, masking, invariances") {
    VectorXd logits(3);
    logits << std::log(1.0), std::log(2.0), std::log(3.0);
    const VectorXd p = masked_softmax(logits, {true, true, true});
    CHECK(p[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(3.0 / 6.0).epsilon(1e-12));

    const VectorXd q = masked_softmax(logits, {true, false, true});
    CHECK(q[1] == 0.0);
    CHECK(q[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(q[2] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-12));

    // Shift invariance (the max subtraction makes huge logits safe).
    const VectorXd shifted = masked_softmax(logits.array() + 500.0, {true, false, true});
    CHECK((q - shifted).norm() < 1e-12);

    CHECK_THROWS_AS(masked_softmax(logits, {false, false, false}), std::logic_error);
    CHECK_THROWS_AS(masked_softmax(logits, {true, true}), std::invalid_argument);
}

TEST_CASE("sampling follows the distribution; argmax breaks ties low") {
    VectorXd probs(3);
    probs << 0.25, 0.5, 0.25;
    RngStream rng({31});
    std::vector<int> hits(3, 0);
    for (int i = 0; i < 20000; ++i) ++hits[sample_index(probs, rng)];
    CHECK(hits[0] / 20000.0 == doctest::Approx(0.25).epsilon(0.08));
    CHECK(hits[1] / 20000.0 == doctest::Approx(0.50).epsilon(0.08));

    VectorXd sure(3);
    sure << 0.0, 1.0, 0.0;
    for (int i = 0; i < 10; ++i) CHECK(sample_index(sure, rng) == 1);

    RngStream r1({5}), r2({5});
    for (int i = 0; i < 100; ++i) CHECK(sample_index(probs, r1) == sample_index(probs, r2));

    VectorXd tied(3);
    tied << 0.4, 0.4, 0.2;
    CHECK(argmax_index(tied, {true, true, true}) == 0);
    CHECK(argmax_index(tied, {false, true, true}) == 1);
    VectorXd peak(3);
    peak << 0.9, 0.05, 0.05;
    CHECK(argmax_index(peak, {false, true, true}) == 1);
    CHECK_THROWS_AS(argmax_index(peak, {false, false, false}), std::logic_error);
}

TEST_CASE("scalar loss pieces") {
    CHECK(td_target(1.0, 0.99, 2.0) == doctest::Approx(2.98));
    CHECK(critic_loss_term(1.5, 2.5) == doctest::Approx(0.5));
    VectorXd p(2);
    p << 0.25, 0.75;
    CHECK(actor_loss_term(p, 0, 2.0) == doctest::Approx(-std::log(0.25) * 2.0));
    // The probability floor keeps the loss finite on zeroed actions.
    p << 0.0, 1.0;
    CHECK(actor_loss_term(p, 0, 1.0) == doctest::Approx(-std::log(1e-12)));
}

namespace {

/// Central-difference gradient of `loss` with respect to every parameter.
template <typename LossFn>
std::vector<double> fd_gradient(BlockMlp& net, LossFn&& loss, double h) {
    std::vector<double> theta = net.flatten();
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double keep = theta[i];
        theta[i] = keep + h;
        net.unflatten(theta);
        const double up = loss();
        theta[i] = keep - h;
        net.unflatten(theta);
        const double down = loss();
        theta[i] = keep;
        grad[i] = (up - down) / (2.0 * h);
    }
    net.unflatten(theta);
    return grad;
}

void check_close(const std::vector<double>& fd, const std::vector<double>& an) {
    REQUIRE(fd.size() == an.size());
    for (std::size_t i = 0; i < fd.size(); ++i) {
        const double tol = 1e-6 + 1e-4 * std::max(std::abs(fd[i]), std::abs(an[i]));
        CHECK(std::abs(fd[i] - an[i]) <= tol);
    }
}

} // namespace

TEST_CASE("actor gradient agrees with central differences") {
    RngStream rng({41});
    BlockMlp net(5, 5, 8, 12, 0.5, rng);
    MatrixXd x(4, 5);
    RngStream xs({42});
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 5; ++c) x(r, c) = xs.gaussian();
    const std::vector<bool> feasible{true, false, true, true, false};
    const int action = 2;
    const double advantage = 0.7;

    auto loss = [&]() {
        const VectorXd probs = masked_softmax(net.forward(x), feasible);
        return actor_loss_term(probs, action, advantage);
    };
    const std::vector<double> fd = fd_gradient(net, loss, 1e-5);

    ForwardCache cache;
    const VectorXd out = net.forward(x, cache);
    const VectorXd probs = masked_softmax(out, feasible);
    const VectorXd d_out = actor_logit_grad(probs, action, advantage, 1);
    BlockMlp grads = BlockMlp::zeros_like(net);
    net.backward(cache, d_out, grads);
    check_close(fd, grads.flatten());
}

TEST_CASE("critic gradient agrees with central differences") {
    RngStream rng({51});
    BlockMlp net(5, 1, 8, 12, 1.0, rng);
    MatrixXd x(4, 5);
    RngStream xs({52});
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 5; ++c) x(r, c) = xs.gaussian();
    const double target = 1.3;

    auto loss = [&]() { return critic_loss_term(net.forward(x)[0], target); };
    const std::vector<double> fd = fd_gradient(net, loss, 1e-5);

    ForwardCache cache;
    const VectorXd out = net.forward(x, cache);
    VectorXd d_out(1);
    d_out[0] = out[0] - target;
    BlockMlp grads = BlockMlp::zeros_like(net);
    net.backward(cache, d_out, grads);
    check_close(fd, grads.flatten());
}

TEST_CASE("RMSprop step reproduces the update rule") {
    RngStream rng({61});
    BlockMlp net(1, 1, 1, 1, 1.0, rng);
    std::vector<double> theta(net.parameter_count(), 2.0);
    net.unflatten(theta);

    BlockMlp grads = BlockMlp::zeros_like(net);
    std::vector<double> g(net.parameter_count(), 0.0);
    g[0] = 3.0; // the single w1[0] weight
    grads.unflatten(g);
    BlockMlp cache = BlockMlp::zeros_like(net);

    const double lr = 0.1, decay = 0.99, eps = 1e-8;
    BlockMlp::rmsprop_step(net, grads, cache, lr, decay, eps);
    double c = (1.0 - decay) * 9.0;
    double expect = 2.0 - lr * 3.0 / (std::sqrt(c) + eps);
    CHECK(net.w1[0](0, 0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(net.w1[1](0, 0) == doctest::Approx(2.0)); // zero grad: untouched
    CHECK(net.b3[0] == doctest::Approx(2.0));

    BlockMlp::rmsprop_step(net, grads, cache, lr, decay, eps);
    c = decay * c + (1.0 - decay) * 9.0;
    expect -= lr * 3.0 / (std::sqrt(c) + eps);
    CHECK(net.w1[0](0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("flatten and unflatten round-trip") {
    RngStream rng({71});
    BlockMlp net(3, 4, 5, 6, 0.01, rng);
    const std::vector<double> theta = net.flatten();
    CHECK(theta.size() == net.parameter_count());

    BlockMlp copy = BlockMlp::zeros_like(net);
    copy.unflatten(theta);
    CHECK(copy.flatten() == theta);
    MatrixXd x = MatrixXd::Constant(4, 3, 0.37);
    CHECK((copy.forward(x) - net.forward(x)).norm() == 0.0);

    CHECK_THROWS_AS(copy.unflatten(std::vector<double>(theta.size() - 1)),
                    std::invalid_argument);
}
