#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satsched/mlp.hpp"
#include "satsched/netenv.hpp"

namespace satsched::learn {

/// Scheduling policies runnable by the harness.
enum class PolicyKind {
    hicms, // two-layer learned: cross-domain stage over intra stage
    idms,  // learned intra stage only, domains never exchange traffic
    ncms,  // rule: transmit to ground when visible, otherwise hold
    icms,  // learned single layer over the union of intra and cross actions
    bts    // uniform random over the feasible single-layer actions
};

PolicyKind parse_policy_kind(const std::string& name);
const char* to_string(PolicyKind kind);

/// Which decision stage an agent drives.
enum class Layer { bms, tms, flat };

/// Stacks a joint state into the 4 x E observation consumed by BlockMlp:
/// rows are storage, energy, rate, survival across the E entries.
MatrixXd observation_matrix(const net::JointState& jsi);

/// One completed transition of a single agent.
struct Experience {
    MatrixXd obs;
    int action = 0;
    double reward = 0.0;
    MatrixXd next_obs;
    std::vector<bool> mask; // feasible set in force when the action was taken
};

/// Decision taken this slot, waiting for its reward and next observation.
struct Pending {
    int flat = -1;
    MatrixXd obs;
    int action = 0;
    std::vector<bool> mask;
    double reward = 0.0;
    bool has_reward = false;
};

/**
 * @brief One learning agent: actor, critic, frozen critic, optimizer state.
 *
 * An agent normally drives a single satellite; with weight sharing enabled
 * it drives every listed member, and their transitions train the one network.
 * The frozen critic is re-snapshotted at the start of every update and
 * supplies both the bootstrap value and the advantage baseline.
 */
struct Agent {
    Layer layer = Layer::bms;
    std::vector<int> flats; // member satellites (flat ids)
    BlockMlp actor;
    BlockMlp critic;
    BlockMlp critic_target;
    BlockMlp actor_cache;
    BlockMlp critic_cache;
    std::vector<Experience> batch;
    std::vector<Pending> pending;
};

/**
 * @brief Action selection and training for one policy over one constellation.
 *
 * All randomness (initialization, exploration, the random baseline) comes
 * from streams keyed on (run seed, purpose, episode, slot, satellite, layer),
 * so results are independent of iteration order and identical across replays.
 *
 * Training cadence: a per-layer slot counter Q is reset each episode and
 * incremented once per committed slot; when Q reaches the layer's minibatch
 * size every agent of that layer updates on whatever transitions it gathered
 * and the counter restarts. An episode of T slots therefore produces exactly
 * floor(T / minibatch) update events per layer.
 */
class Scheduler {
  public:
    Scheduler(const ScenarioConfig& cfg, const net::Topology& topo, PolicyKind kind,
              std::uint64_t run_seed);

    PolicyKind kind() const { return kind_; }
    bool learned() const {
        return kind_ == PolicyKind::hicms || kind_ == PolicyKind::idms ||
               kind_ == PolicyKind::icms;
    }

    void begin_episode(int episode);

    /// Chooses one action trace per satellite. `explore` samples from the
    /// masked policy (training); otherwise the argmax is taken (evaluation).
    /// `remember` stores pending transitions for the learners.
    std::vector<net::ActionTrace> act(const net::SlotContext& ctx, bool explore,
                                      bool remember);

    /// Routes the committed slot's rewards into the pending transitions and
    /// advances the cadence counters.
    void attach_rewards(const net::SlotOutcome& outcome);

    /// Finishes pending transitions with the next slot's observation, then
    /// runs any update events that came due.
    void complete(const net::SlotContext& next_ctx);

    std::vector<Agent>& agents() { return agents_; }
    const std::vector<Agent>& agents() const { return agents_; }
    int update_events(Layer layer) const {
        return layer == Layer::tms ? updates_tms_ : updates_bms_;
    }

  private:
    MatrixXd layer_observation(const net::SlotContext& ctx, int flat, Layer layer) const;
    int decide(Agent& agent, int flat, const MatrixXd& obs,
               const std::vector<bool>& mask, int slot, bool explore, bool remember);
    void update_agent(Agent& agent);

    const ScenarioConfig& cfg_;
    const net::Topology& topo_;
    PolicyKind kind_;
    std::uint64_t run_seed_;
    int episode_ = 0;
    int q_bms_ = 0;
    int q_tms_ = 0;
    int updates_bms_ = 0;
    int updates_tms_ = 0;

    std::vector<Agent> agents_;
    std::vector<int> bms_agent_;  // per flat id; -1 when absent
    std::vector<int> tms_agent_;
    std::vector<int> flat_agent_;
};

/// Runs one full episode: reset, slot loop, horizon bootstrap. With `train`
/// the policy explores, records transitions, and updates on cadence;
/// without it the policy acts greedily and nothing is stored.
net::EpisodeMetrics run_episode(net::NetworkEnv& env, Scheduler& sched, int episode,
                                bool train);

} // namespace satsched::learn
