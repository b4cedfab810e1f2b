#include "satsched/agents.hpp"

#include <map>
#include <stdexcept>

namespace satsched::learn {

namespace {

constexpr std::uint64_t INIT_TAG = 0x696e6974ULL;   // network initialization
constexpr std::uint64_t ACT_TAG = 0x616374ULL;      // exploration sampling
constexpr std::uint64_t BTS_TAG = 0x627473ULL;      // random-baseline draws
constexpr double ACTOR_HEAD_GAIN = 0.01;
constexpr double CRITIC_HEAD_GAIN = 1.0;

std::uint64_t layer_tag(Layer layer) {
    switch (layer) {
        case Layer::bms: return 1;
        case Layer::tms: return 2;
        default: return 3;
    }
}

bool any_feasible(const std::vector<bool>& mask) {
    for (bool b : mask)
        if (b) return true;
    return false;
}

net::ResolvedAction resolve_flat(const net::Topology& topo, int flat, int choice) {
    net::ResolvedAction a;
    if (choice == 0) {
        a.kind = net::ResolvedAction::Kind::ground;
    } else if (choice <= 4) {
        a.kind = net::ResolvedAction::Kind::intra;
        a.relay_slot = choice - 1;
    } else {
        a.kind = net::ResolvedAction::Kind::inter;
        a.domain = topo.nodes[flat].aux_domains[choice - 5];
    }
    return a;
}

} // namespace

PolicyKind parse_policy_kind(const std::string& name) {
    if (name == "hicms") return PolicyKind::hicms;
    if (name == "idms") return PolicyKind::idms;
    if (name == "ncms") return PolicyKind::ncms;
    if (name == "icms") return PolicyKind::icms;
    if (name == "bts") return PolicyKind::bts;
    throw std::invalid_argument("unknown policy '" + name +
                                "' (expected hicms, idms, ncms, icms, or bts)");
}

const char* to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::hicms: return "hicms";
        case PolicyKind::idms: return "idms";
        case PolicyKind::ncms: return "ncms";
        case PolicyKind::icms: return "icms";
        default: return "bts";
    }
}

MatrixXd observation_matrix(const net::JointState& jsi) {
    MatrixXd m(4, static_cast<long>(jsi.size()));
    for (std::size_t e = 0; e < jsi.size(); ++e) {
        m(0, static_cast<long>(e)) = jsi[e].storage;
        m(1, static_cast<long>(e)) = jsi[e].energy;
        m(2, static_cast<long>(e)) = jsi[e].rate;
        m(3, static_cast<long>(e)) = jsi[e].survival;
    }
    return m;
}

Scheduler::Scheduler(const ScenarioConfig& cfg, const net::Topology& topo,
                     PolicyKind kind, std::uint64_t run_seed)
    : cfg_(cfg), topo_(topo), kind_(kind), run_seed_(run_seed) {
    const int n = topo.size();
    bms_agent_.assign(n, -1);
    tms_agent_.assign(n, -1);
    flat_agent_.assign(n, -1);
    if (!learned()) return;

    const TrainConfig& tc = cfg.train;
    auto make_agent = [&](Layer layer, int width, std::uint64_t key) {
        RngStream rng({run_seed_, INIT_TAG, layer_tag(layer), key});
        Agent ag;
        ag.layer = layer;
        ag.actor = BlockMlp(width, width, tc.hidden_block, tc.hidden_merge,
                            ACTOR_HEAD_GAIN, rng);
        ag.critic = BlockMlp(width, 1, tc.hidden_block, tc.hidden_merge,
                             CRITIC_HEAD_GAIN, rng);
        ag.critic_target = ag.critic;
        ag.actor_cache = BlockMlp::zeros_like(ag.actor);
        ag.critic_cache = BlockMlp::zeros_like(ag.critic);
        return ag;
    };

    // One agent per satellite by default; with weight sharing one agent per
    // (layer, observation width) group drives every member satellite.
    auto place = [&](Layer layer, int flat, int width, std::vector<int>& index,
                     std::map<int, int>& groups) {
        int slot;
        if (tc.shared_weights) {
            auto it = groups.find(width);
            if (it == groups.end()) {
                slot = static_cast<int>(agents_.size());
                agents_.push_back(make_agent(layer, width, static_cast<std::uint64_t>(width)));
                groups.emplace(width, slot);
            } else {
                slot = it->second;
            }
        } else {
            slot = static_cast<int>(agents_.size());
            agents_.push_back(make_agent(layer, width, static_cast<std::uint64_t>(flat)));
        }
        agents_[slot].flats.push_back(flat);
        index[flat] = slot;
    };

    std::map<int, int> bms_groups, tms_groups, flat_groups;
    for (int f = 0; f < n; ++f) {
        const int aux = static_cast<int>(topo.nodes[f].aux_domains.size());
        if (kind_ == PolicyKind::icms) {
            place(Layer::flat, f, 5 + aux, flat_agent_, flat_groups);
            continue;
        }
        place(Layer::bms, f, 5, bms_agent_, bms_groups);
        if (kind_ == PolicyKind::hicms && aux > 0)
            place(Layer::tms, f, 1 + aux, tms_agent_, tms_groups);
    }
}

void Scheduler::begin_episode(int episode) {
    episode_ = episode;
    q_bms_ = 0;
    q_tms_ = 0;
    updates_bms_ = 0;
    updates_tms_ = 0;
    for (Agent& ag : agents_) {
        ag.batch.clear();
        ag.pending.clear();
    }
}

MatrixXd Scheduler::layer_observation(const net::SlotContext& ctx, int flat,
                                      Layer layer) const {
    switch (layer) {
        case Layer::bms: return observation_matrix(ctx.bms_jsi[flat]);
        case Layer::tms: return observation_matrix(ctx.tms_jsi[flat]);
        default: return observation_matrix(ctx.flat_jsi[flat]);
    }
}

int Scheduler::decide(Agent& agent, int flat, const MatrixXd& obs,
                      const std::vector<bool>& mask, int slot, bool explore,
                      bool remember) {
    const VectorXd logits = agent.actor.forward(obs);
    const VectorXd probs = masked_softmax(logits, mask);
    int choice;
    if (explore) {
        RngStream rng({run_seed_, ACT_TAG, static_cast<std::uint64_t>(episode_),
                       static_cast<std::uint64_t>(slot), static_cast<std::uint64_t>(flat),
                       layer_tag(agent.layer)});
        choice = sample_index(probs, rng);
    } else {
        choice = argmax_index(probs, mask);
    }
    if (remember) agent.pending.push_back({flat, obs, choice, mask, 0.0, false});
    return choice;
}

std::vector<net::ActionTrace> Scheduler::act(const net::SlotContext& ctx, bool explore,
                                             bool remember) {
    const int n = topo_.size();
    std::vector<net::ActionTrace> traces(n);
    for (int f = 0; f < n; ++f) {
        net::ActionTrace& tr = traces[f];
        if (ctx.state[f].survival_avg <= 0.0) continue; // empty buffer, hold

        if (kind_ == PolicyKind::ncms) {
            if (ctx.bms_feasible[f][0]) tr.resolved.kind = net::ResolvedAction::Kind::ground;
            continue;
        }

        if (kind_ == PolicyKind::bts) {
            std::vector<int> feasible;
            for (std::size_t i = 0; i < ctx.flat_feasible[f].size(); ++i)
                if (ctx.flat_feasible[f][i]) feasible.push_back(static_cast<int>(i));
            if (feasible.empty()) continue;
            RngStream rng({run_seed_, BTS_TAG, static_cast<std::uint64_t>(episode_),
                           static_cast<std::uint64_t>(ctx.slot),
                           static_cast<std::uint64_t>(f)});
            tr.resolved = resolve_flat(
                topo_, f, feasible[static_cast<int>(rng.below(feasible.size()))]);
            continue;
        }

        if (kind_ == PolicyKind::icms) {
            const std::vector<bool>& mask = ctx.flat_feasible[f];
            if (!any_feasible(mask)) continue;
            Agent& ag = agents_[flat_agent_[f]];
            const MatrixXd obs = layer_observation(ctx, f, Layer::flat);
            const int choice = decide(ag, f, obs, mask, ctx.slot, explore, remember);
            tr.flat_acted = true;
            tr.flat_choice = choice;
            tr.resolved = resolve_flat(topo_, f, choice);
            continue;
        }

        // Two-layer policies: the cross-domain stage (when present) either
        // forces a partner domain or hands control to the intra stage.
        bool run_intra = true;
        if (kind_ == PolicyKind::hicms && tms_agent_[f] >= 0) {
            const std::vector<bool>& tmask = ctx.tms_feasible[f];
            if (!any_feasible(tmask)) continue; // nothing reachable at all
            Agent& ag = agents_[tms_agent_[f]];
            const MatrixXd obs = layer_observation(ctx, f, Layer::tms);
            const int choice = decide(ag, f, obs, tmask, ctx.slot, explore, remember);
            tr.tms_acted = true;
            tr.tms_choice = choice;
            if (choice > 0) {
                tr.resolved.kind = net::ResolvedAction::Kind::inter;
                tr.resolved.domain = topo_.nodes[f].aux_domains[choice - 1];
                run_intra = false;
            }
        }
        if (!run_intra) continue;

        std::vector<bool> mask(ctx.bms_feasible[f].begin(), ctx.bms_feasible[f].end());
        if (!any_feasible(mask)) continue;
        Agent& ag = agents_[bms_agent_[f]];
        const MatrixXd obs = layer_observation(ctx, f, Layer::bms);
        const int choice = decide(ag, f, obs, mask, ctx.slot, explore, remember);
        tr.bms_acted = true;
        tr.bms_choice = choice;
        if (choice == 0) {
            tr.resolved.kind = net::ResolvedAction::Kind::ground;
        } else {
            tr.resolved.kind = net::ResolvedAction::Kind::intra;
            tr.resolved.relay_slot = choice - 1;
        }
    }
    return traces;
}

void Scheduler::attach_rewards(const net::SlotOutcome& outcome) {
    for (Agent& ag : agents_)
        for (Pending& p : ag.pending) {
            if (p.has_reward) continue;
            const net::RewardRecord& rec =
                ag.layer == Layer::tms ? outcome.tms[p.flat] : outcome.bms[p.flat];
            p.reward = rec.reward;
            p.has_reward = true;
        }
    q_bms_ += 1;
    q_tms_ += 1;
}

void Scheduler::complete(const net::SlotContext& next_ctx) {
    for (Agent& ag : agents_) {
        for (Pending& p : ag.pending) {
            if (!p.has_reward)
                throw std::logic_error("scheduler: pending transition without a reward");
            ag.batch.push_back({std::move(p.obs), p.action, p.reward,
                                layer_observation(next_ctx, p.flat, ag.layer),
                                std::move(p.mask)});
        }
        ag.pending.clear();
    }
    if (q_bms_ >= cfg_.train.minibatch_bms) {
        for (Agent& ag : agents_)
            if (ag.layer != Layer::tms) update_agent(ag);
        q_bms_ = 0;
        updates_bms_ += 1;
    }
    if (q_tms_ >= cfg_.train.minibatch_tms) {
        for (Agent& ag : agents_)
            if (ag.layer == Layer::tms) update_agent(ag);
        q_tms_ = 0;
        updates_tms_ += 1;
    }
}

void Scheduler::update_agent(Agent& agent) {
    if (agent.batch.empty()) return;
    const TrainConfig& tc = cfg_.train;
    const int n = static_cast<int>(agent.batch.size());
    agent.critic_target = agent.critic; // freeze for targets and baseline

    BlockMlp actor_grads = BlockMlp::zeros_like(agent.actor);
    BlockMlp critic_grads = BlockMlp::zeros_like(agent.critic);
    for (const Experience& e : agent.batch) {
        const double v_next = agent.critic_target.forward(e.next_obs)[0];
        const double target = td_target(e.reward, tc.gamma, v_next);
        const double baseline = agent.critic_target.forward(e.obs)[0];
        const double advantage = target - baseline;

        ForwardCache ac;
        const VectorXd logits = agent.actor.forward(e.obs, ac);
        const VectorXd probs = masked_softmax(logits, e.mask);
        agent.actor.backward(ac, actor_logit_grad(probs, e.action, advantage, n),
                             actor_grads);

        ForwardCache cc;
        const double v = agent.critic.forward(e.obs, cc)[0];
        VectorXd d_v(1);
        d_v[0] = (v - target) / n;
        agent.critic.backward(cc, d_v, critic_grads);
    }
    BlockMlp::rmsprop_step(agent.actor, actor_grads, agent.actor_cache, tc.lr_actor,
                           tc.rmsprop_decay, tc.rmsprop_eps);
    BlockMlp::rmsprop_step(agent.critic, critic_grads, agent.critic_cache, tc.lr_critic,
                           tc.rmsprop_decay, tc.rmsprop_eps);
    agent.batch.clear();
}

net::EpisodeMetrics run_episode(net::NetworkEnv& env, Scheduler& sched, int episode,
                                bool train) {
    env.reset(episode);
    sched.begin_episode(episode);
    const bool learn = train && sched.learned();
    for (int t = 1; t <= env.horizon(); ++t) {
        const net::SlotContext& ctx = env.begin_slot();
        if (learn) sched.complete(ctx);
        const std::vector<net::ActionTrace> traces = sched.act(ctx, train, learn);
        const net::SlotOutcome outcome = env.commit_slot(traces);
        if (learn) sched.attach_rewards(outcome);
    }
    if (learn) sched.complete(env.begin_slot()); // horizon bootstrap
    return env.metrics();
}

} // namespace satsched::learn
