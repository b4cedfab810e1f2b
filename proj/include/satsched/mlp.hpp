#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <vector>

#include "satsched/rng.hpp"

namespace satsched::learn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Orthogonal (semi-orthogonal when rectangular) matrix scaled by `gain`.
/// Built from a Gaussian draw via Householder QR with the sign of diag(R)
/// fixed, so the result is deterministic for a given stream.
MatrixXd orthogonal_matrix(int rows, int cols, double gain, RngStream& rng);

/// Intermediate activations of one forward pass, kept for backprop.
struct ForwardCache {
    MatrixXd x;                       // 4 x entries input
    std::array<VectorXd, 4> h1;       // per-component block outputs (post-ReLU)
    VectorXd h2;                      // merge layer output (post-ReLU)
    VectorXd out;                     // raw head output (logits or value)
};

/**
 * @brief Component-structured MLP shared by actors and critics.
 *
 * The observation is a 4 x E matrix: one row per state component (storage,
 * energy, rate, survival) across the E joint-state entries. Each row feeds
 * its own fully connected block; the four block outputs are concatenated,
 * merged by one hidden layer, and mapped to the head output. Hidden layers
 * are ReLU, the head is linear. Weights start orthogonal (gain sqrt(2) for
 * hidden layers, `head_gain` for the head), biases start at zero.
 */
class BlockMlp {
  public:
    BlockMlp() = default;
    BlockMlp(int entries, int outputs, int hidden_block, int hidden_merge,
             double head_gain, RngStream& rng);

    /// Same shapes as `other`, every parameter zero (gradient/cache holder).
    static BlockMlp zeros_like(const BlockMlp& other);

    int entries() const { return entries_; }
    int outputs() const { return outputs_; }

    VectorXd forward(const MatrixXd& x) const;
    VectorXd forward(const MatrixXd& x, ForwardCache& cache) const;

    /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(out).
    void backward(const ForwardCache& cache, const VectorXd& d_out,
                  BlockMlp& grads) const;

    void set_zero();

    /// RMSprop: cache = decay*cache + (1-decay)*g^2;
    /// param -= lr * g / (sqrt(cache) + eps).
    static void rmsprop_step(BlockMlp& params, const BlockMlp& grads, BlockMlp& cache,
                             double lr, double decay, double eps);

    std::size_t parameter_count() const;
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& values);

    // Parameters are open for inspection (initialization and gradient tests).
    std::array<MatrixXd, 4> w1;
    std::array<VectorXd, 4> b1;
    MatrixXd w2;
    VectorXd b2;
    MatrixXd w3;
    VectorXd b3;

  private:
    template <typename F>
    static void zip(BlockMlp& a, const BlockMlp& b, BlockMlp& c, F&& f) {
        for (int i = 0; i < 4; ++i) {
            f(a.w1[i], b.w1[i], c.w1[i]);
            f(a.b1[i], b.b1[i], c.b1[i]);
        }
        f(a.w2, b.w2, c.w2);
        f(a.b2, b.b2, c.b2);
        f(a.w3, b.w3, c.w3);
        f(a.b3, b.b3, c.b3);
    }

    int entries_ = 0;
    int outputs_ = 0;
};

/// Softmax over the feasible entries only; infeasible probabilities are
/// exactly zero. Throws std::logic_error when nothing is feasible.
VectorXd masked_softmax(const VectorXd& logits, const std::vector<bool>& feasible);

/// Draws an index from a probability vector (CDF walk on one uniform).
int sample_index(const VectorXd& probs, RngStream& rng);

/// Highest-probability feasible index, ties to the lowest index.
int argmax_index(const VectorXd& probs, const std::vector<bool>& feasible);

/// One-step bootstrapped return r + gamma * v_next.
inline double td_target(double reward, double gamma, double v_next) {
    return reward + gamma * v_next;
}

/// Policy-gradient loss term for one sample: -log(max(pi_a, floor)) * w.
double actor_loss_term(const VectorXd& probs, int action, double advantage);

/// d(actor loss)/d(logits) for one sample: coeff * (probs - onehot(action)),
/// with coeff = advantage / batch_size. Zero on masked entries by construction.
VectorXd actor_logit_grad(const VectorXd& probs, int action, double advantage,
                          int batch_size);

/// Half squared error 0.5 * (target - v)^2.
double critic_loss_term(double value, double target);

} // namespace satsched::learn
