#include "satsched/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace satsched::learn {

namespace {
constexpr double MASKED_LOGIT = -1.0e30;
constexpr double PROB_FLOOR = 1.0e-12;
constexpr double HIDDEN_GAIN = 1.4142135623730951; // sqrt(2), ReLU-preserving

VectorXd relu(const VectorXd& v) { return v.cwiseMax(0.0); }

VectorXd relu_mask(const VectorXd& post, const VectorXd& grad) {
    VectorXd out = grad;
    for (int i = 0; i < out.size(); ++i)
        if (post[i] <= 0.0) out[i] = 0.0;
    return out;
}
} // namespace

MatrixXd orthogonal_matrix(int rows, int cols, double gain, RngStream& rng) {
    if (rows <= 0 || cols <= 0)
        throw std::invalid_argument("orthogonal_matrix: non-positive shape");
    const int big = std::max(rows, cols);
    const int small = std::min(rows, cols);
    MatrixXd g(big, small);
    for (int r = 0; r < big; ++r)
        for (int c = 0; c < small; ++c) g(r, c) = rng.gaussian();
    Eigen::HouseholderQR<MatrixXd> qr(g);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(big, small);
    const MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
    for (int j = 0; j < small; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    if (rows < cols) q.transposeInPlace();
    return gain * q;
}

BlockMlp::BlockMlp(int entries, int outputs, int hidden_block, int hidden_merge,
                   double head_gain, RngStream& rng)
    : entries_(entries), outputs_(outputs) {
    if (entries <= 0 || outputs <= 0 || hidden_block <= 0 || hidden_merge <= 0)
        throw std::invalid_argument("BlockMlp: non-positive shape");
    for (int i = 0; i < 4; ++i) {
        w1[i] = orthogonal_matrix(hidden_block, entries, HIDDEN_GAIN, rng);
        b1[i] = VectorXd::Zero(hidden_block);
    }
    w2 = orthogonal_matrix(hidden_merge, 4 * hidden_block, HIDDEN_GAIN, rng);
    b2 = VectorXd::Zero(hidden_merge);
    w3 = orthogonal_matrix(outputs, hidden_merge, head_gain, rng);
    b3 = VectorXd::Zero(outputs);
}

BlockMlp BlockMlp::zeros_like(const BlockMlp& other) {
    BlockMlp z;
    z.entries_ = other.entries_;
    z.outputs_ = other.outputs_;
    for (int i = 0; i < 4; ++i) {
        z.w1[i] = MatrixXd::Zero(other.w1[i].rows(), other.w1[i].cols());
        z.b1[i] = VectorXd::Zero(other.b1[i].size());
    }
    z.w2 = MatrixXd::Zero(other.w2.rows(), other.w2.cols());
    z.b2 = VectorXd::Zero(other.b2.size());
    z.w3 = MatrixXd::Zero(other.w3.rows(), other.w3.cols());
    z.b3 = VectorXd::Zero(other.b3.size());
    return z;
}

VectorXd BlockMlp::forward(const MatrixXd& x) const {
    ForwardCache cache;
    return forward(x, cache);
}

VectorXd BlockMlp::forward(const MatrixXd& x, ForwardCache& cache) const {
    if (x.rows() != 4 || x.cols() != entries_)
        throw std::invalid_argument("BlockMlp::forward: observation shape mismatch");
    cache.x = x;
    VectorXd z(4 * b1[0].size());
    for (int i = 0; i < 4; ++i) {
        cache.h1[i] = relu(w1[i] * x.row(i).transpose() + b1[i]);
        z.segment(i * cache.h1[i].size(), cache.h1[i].size()) = cache.h1[i];
    }
    cache.h2 = relu(w2 * z + b2);
    cache.out = w3 * cache.h2 + b3;
    return cache.out;
}

void BlockMlp::backward(const ForwardCache& cache, const VectorXd& d_out,
                        BlockMlp& grads) const {
    grads.w3 += d_out * cache.h2.transpose();
    grads.b3 += d_out;
    const VectorXd d_h2 = relu_mask(cache.h2, w3.transpose() * d_out);
    const long block = cache.h1[0].size();
    VectorXd z(4 * block);
    for (int i = 0; i < 4; ++i) z.segment(i * block, block) = cache.h1[i];
    grads.w2 += d_h2 * z.transpose();
    grads.b2 += d_h2;
    const VectorXd d_z = w2.transpose() * d_h2;
    for (int i = 0; i < 4; ++i) {
        const VectorXd d_h1 = relu_mask(cache.h1[i], d_z.segment(i * block, block));
        grads.w1[i] += d_h1 * cache.x.row(i);
        grads.b1[i] += d_h1;
    }
}

void BlockMlp::set_zero() {
    for (int i = 0; i < 4; ++i) {
        w1[i].setZero();
        b1[i].setZero();
    }
    w2.setZero();
    b2.setZero();
    w3.setZero();
    b3.setZero();
}

void BlockMlp::rmsprop_step(BlockMlp& params, const BlockMlp& grads, BlockMlp& cache,
                            double lr, double decay, double eps) {
    zip(params, grads, cache, [&](auto& p, const auto& g, auto& c) {
        c.array() = decay * c.array() + (1.0 - decay) * g.array().square();
        p.array() -= lr * g.array() / (c.array().sqrt() + eps);
    });
}

std::size_t BlockMlp::parameter_count() const {
    std::size_t n = 0;
    for (int i = 0; i < 4; ++i) n += w1[i].size() + b1[i].size();
    n += w2.size() + b2.size() + w3.size() + b3.size();
    return n;
}

std::vector<double> BlockMlp::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    auto push_mat = [&](const MatrixXd& m) {
        for (long r = 0; r < m.rows(); ++r)
            for (long c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    };
    auto push_vec = [&](const VectorXd& v) {
        for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
    };
    for (int i = 0; i < 4; ++i) {
        push_mat(w1[i]);
        push_vec(b1[i]);
    }
    push_mat(w2);
    push_vec(b2);
    push_mat(w3);
    push_vec(b3);
    return out;
}

void BlockMlp::unflatten(const std::vector<double>& values) {
    if (values.size() != parameter_count())
        throw std::invalid_argument("BlockMlp::unflatten: size mismatch");
    std::size_t at = 0;
    auto pull_mat = [&](MatrixXd& m) {
        for (long r = 0; r < m.rows(); ++r)
            for (long c = 0; c < m.cols(); ++c) m(r, c) = values[at++];
    };
    auto pull_vec = [&](VectorXd& v) {
        for (long i = 0; i < v.size(); ++i) v[i] = values[at++];
    };
    for (int i = 0; i < 4; ++i) {
        pull_mat(w1[i]);
        pull_vec(b1[i]);
    }
    pull_mat(w2);
    pull_vec(b2);
    pull_mat(w3);
    pull_vec(b3);
}

VectorXd masked_softmax(const VectorXd& logits, const std::vector<bool>& feasible) {
    if (static_cast<std::size_t>(logits.size()) != feasible.size())
        throw std::invalid_argument("masked_softmax: mask width mismatch");
    double best = MASKED_LOGIT;
    bool any = false;
    for (int i = 0; i < logits.size(); ++i)
        if (feasible[i]) {
            any = true;
            best = std::max(best, logits[i]);
        }
    if (!any) throw std::logic_error("masked_softmax: no feasible action");
    VectorXd probs = VectorXd::Zero(logits.size());
    double total = 0.0;
    for (int i = 0; i < logits.size(); ++i)
        if (feasible[i]) {
            probs[i] = std::exp(logits[i] - best);
            total += probs[i];
        }
    probs /= total;
    return probs;
}

int sample_index(const VectorXd& probs, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    int last_positive = -1;
    for (int i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = i;
        acc += probs[i];
        if (u < acc) return i;
    }
    if (last_positive < 0) throw std::logic_error("sample_index: empty distribution");
    return last_positive; // u landed in the rounding tail
}

int argmax_index(const VectorXd& probs, const std::vector<bool>& feasible) {
    int best = -1;
    for (int i = 0; i < probs.size(); ++i) {
        if (!feasible[i]) continue;
        if (best < 0 || probs[i] > probs[best]) best = i;
    }
    if (best < 0) throw std::logic_error("argmax_index: no feasible action");
    return best;
}

double actor_loss_term(const VectorXd& probs, int action, double advantage) {
    return -std::log(std::max(probs[action], PROB_FLOOR)) * advantage;
}

VectorXd actor_logit_grad(const VectorXd& probs, int action, double advantage,
                          int batch_size) {
    VectorXd grad = probs * (advantage / batch_size);
    grad[action] -= advantage / batch_size;
    return grad;
}

double critic_loss_term(double value, double target) {
    const double d = target - value;
    return 0.5 * d * d;
}

} // namespace satsched::learn
