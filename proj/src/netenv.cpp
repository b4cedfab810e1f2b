#include "satsched/netenv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "satsched/rng.hpp"

namespace satsched::net {

namespace {

constexpr double EPS_J = 1.0e-6;    // tolerance for energy comparisons
constexpr double EPS_BITS = 1.0e-3; // tolerance for storage comparisons

double clamp02(double x) { return std::clamp(x, 0.0, 2.0); }

std::uint64_t sat_code(int flat_id) { return static_cast<std::uint64_t>(flat_id) + 1; }
std::uint64_t station_code(int id) {
    return 0x8000000000000000ULL | static_cast<std::uint64_t>(id);
}

} // namespace

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

std::vector<int> equal_stride_indices(int total, int count) {
    if (count < 1 || count > total)
        throw std::invalid_argument("equal_stride_indices: count outside [1, total]");
    std::vector<int> out(count);
    for (int q = 0; q < count; ++q)
        out[q] = static_cast<int>(static_cast<long long>(q) * total / count);
    return out;
}

std::vector<std::pair<int, int>> greedy_closest_matching(const std::vector<Vec3>& a,
                                                         const std::vector<Vec3>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("greedy_closest_matching: size mismatch");
    struct Cand {
        double d2;
        int ia;
        int ib;
    };
    std::vector<Cand> cands;
    cands.reserve(a.size() * b.size());
    for (int ia = 0; ia < static_cast<int>(a.size()); ++ia)
        for (int ib = 0; ib < static_cast<int>(b.size()); ++ib) {
            const Vec3 d = a[ia] - b[ib];
            cands.push_back({d.dot(d), ia, ib});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.d2 != y.d2) return x.d2 < y.d2;
        if (x.ia != y.ia) return x.ia < y.ia;
        return x.ib < y.ib;
    });
    std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
    std::vector<std::pair<int, int>> out;
    for (const Cand& c : cands) {
        if (used_a[c.ia] || used_b[c.ib]) continue;
        used_a[c.ia] = true;
        used_b[c.ib] = true;
        out.emplace_back(c.ia, c.ib);
        if (out.size() == a.size()) break;
    }
    return out;
}

int Topology::flat(const SatelliteId& id) const {
    const int k = id.domain - 1;
    if (k < 0 || k + 1 >= static_cast<int>(domain_offset.size()))
        throw std::out_of_range("topology: unknown domain");
    const int base = domain_offset[k];
    const int domain_size = domain_offset[k + 1] - base;
    // Orbit-major flattening; the last node carries the orbit count.
    const int per_orbit = domain_size / nodes[base + domain_size - 1].id.orbit;
    const int idx = base + (id.orbit - 1) * per_orbit + (id.index - 1);
    if (idx < base || idx >= base + domain_size || nodes[idx].id != id)
        throw std::out_of_range("topology: unknown satellite " + id.str());
    return idx;
}

Topology build_topology(const ScenarioConfig& cfg) {
    Topology topo;
    const int K = cfg.domain_count();
    topo.domain_offset.assign(K + 1, 0);

    // Flatten all domains and wire the four-chain intra relays.
    for (int k = 1; k <= K; ++k) {
        const orbit::Sofm& sofm = cfg.domain(k).sofm;
        const int orbits = sofm.orbit_count();
        const int per_orbit = sofm.sats_per_orbit();
        topo.domain_offset[k - 1] = static_cast<int>(topo.nodes.size());
        for (int i = 1; i <= orbits; ++i) {
            for (int j = 1; j <= per_orbit; ++j) {
                NodeStatic node;
                node.id = {k, i, j};
                const int j_prev = j == 1 ? per_orbit : j - 1;
                const int j_next = j == per_orbit ? 1 : j + 1;
                const int i_prev = i == 1 ? orbits : i - 1;
                const int i_next = i == orbits ? 1 : i + 1;
                node.intra_relays = {SatelliteId{k, i, j_prev}, SatelliteId{k, i, j_next},
                                     SatelliteId{k, i_prev, j}, SatelliteId{k, i_next, j}};
                for (int r = 0; r < 4; ++r)
                    node.intra_valid[r] = node.intra_relays[r] != node.id;
                topo.nodes.push_back(std::move(node));
            }
        }
    }
    topo.domain_offset[K] = static_cast<int>(topo.nodes.size());

    // Cross-domain satellites: equal-stride pick, count = smallest domain.
    int cs_count = topo.domain_offset[1] - topo.domain_offset[0];
    for (int k = 1; k <= K; ++k)
        cs_count = std::min(cs_count, topo.domain_offset[k] - topo.domain_offset[k - 1]);
    topo.cs_flat.assign(K, {});
    for (int k = 1; k <= K; ++k) {
        const int base = topo.domain_offset[k - 1];
        const int size = topo.domain_offset[k] - base;
        for (int local : equal_stride_indices(size, cs_count)) {
            topo.nodes[base + local].cls = SatClass::cs;
            topo.cs_flat[k - 1].push_back(base + local);
        }
    }

    if (K < 2) return topo; // single domain: no cross-domain wiring

    // Epoch positions for proximity decisions.
    std::vector<Vec3> pos(topo.nodes.size());
    for (int k = 1; k <= K; ++k) {
        const orbit::Sofm& sofm = cfg.domain(k).sofm;
        for (int f = topo.domain_offset[k - 1]; f < topo.domain_offset[k]; ++f)
            pos[f] = orbit::propagate(sofm, topo.nodes[f].id, 1, cfg.tau_s).r_km;
    }

    // Auxiliary domains: everybody with K <= 3, otherwise the two closest by
    // mean inter-constellation distance at the epoch.
    std::vector<std::vector<int>> aux(K);
    for (int k = 1; k <= K; ++k) {
        std::vector<std::pair<double, int>> ranked;
        for (int k2 = 1; k2 <= K; ++k2) {
            if (k2 == k) continue;
            double sum = 0.0;
            long long n = 0;
            for (int f = topo.domain_offset[k - 1]; f < topo.domain_offset[k]; ++f)
                for (int g = topo.domain_offset[k2 - 1]; g < topo.domain_offset[k2]; ++g) {
                    sum += (pos[f] - pos[g]).norm();
                    ++n;
                }
            ranked.emplace_back(sum / static_cast<double>(n), k2);
        }
        std::sort(ranked.begin(), ranked.end());
        const int keep = K <= 3 ? K - 1 : 2;
        for (int i = 0; i < keep; ++i) aux[k - 1].push_back(ranked[i].second);
        std::sort(aux[k - 1].begin(), aux[k - 1].end());
    }

    // IDL partners: one greedy matching per unordered domain pair, shared by
    // whichever directions use it.
    for (int k = 1; k <= K; ++k)
        for (int k2 = k + 1; k2 <= K; ++k2) {
            const bool fwd = std::count(aux[k - 1].begin(), aux[k - 1].end(), k2) > 0;
            const bool rev = std::count(aux[k2 - 1].begin(), aux[k2 - 1].end(), k) > 0;
            if (!fwd && !rev) continue;
            std::vector<Vec3> pa, pb;
            for (int f : topo.cs_flat[k - 1]) pa.push_back(pos[f]);
            for (int f : topo.cs_flat[k2 - 1]) pb.push_back(pos[f]);
            for (auto [ia, ib] : greedy_closest_matching(pa, pb)) {
                NodeStatic& na = topo.nodes[topo.cs_flat[k - 1][ia]];
                NodeStatic& nb = topo.nodes[topo.cs_flat[k2 - 1][ib]];
                if (fwd) {
                    na.aux_domains.push_back(k2);
                    na.inter_relays.push_back(nb.id);
                }
                if (rev) {
                    nb.aux_domains.push_back(k);
                    nb.inter_relays.push_back(na.id);
                }
            }
        }

    // Keep aux lists in ascending domain order so observation layouts are
    // stable regardless of matching order.
    for (NodeStatic& node : topo.nodes) {
        if (node.aux_domains.empty()) continue;
        std::vector<int> order(node.aux_domains.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            return node.aux_domains[x] < node.aux_domains[y];
        });
        std::vector<int> doms;
        std::vector<SatelliteId> rels;
        for (int o : order) {
            doms.push_back(node.aux_domains[o]);
            rels.push_back(node.inter_relays[o]);
        }
        node.aux_domains = std::move(doms);
        node.inter_relays = std::move(rels);
    }
    return topo;
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

JsiEntry normalize_state(const SatState4& s, double reference_sgl_bps) {
    JsiEntry e;
    e.storage = clamp02(2.0 * (1.0 - 1.0 / std::max(s.storage_rel, 1.0)));
    e.energy = clamp02(s.energy_rel);
    e.rate = clamp02(s.sgl_rate_avg_bps / reference_sgl_bps);
    e.survival = 0.0; // owner-specific ratio, filled by the joint-state builders
    return e;
}

JointState build_bms_jsi(const SatState4& self, const std::array<SatState4, 4>& relays,
                         const std::array<bool, 4>& relay_valid, double reference_sgl_bps) {
    JointState jsi(5);
    jsi[0] = normalize_state(self, reference_sgl_bps);
    jsi[0].survival = self.survival_avg > 0.0 ? 1.0 : 0.0;
    for (int r = 0; r < 4; ++r) {
        if (!relay_valid[r]) continue; // zero entry
        jsi[r + 1] = normalize_state(relays[r], reference_sgl_bps);
        // Relay survival is expressed relative to the owner: a zero-survival
        // relay degrades to the owner's raw mean.
        jsi[r + 1].survival = relays[r].survival_avg > 0.0
                                  ? clamp02(self.survival_avg / relays[r].survival_avg)
                                  : clamp02(self.survival_avg);
    }
    return jsi;
}

JointState build_tms_jsi(const SatState4& self, const JointState& bms,
                         const std::vector<SatState4>& inter_states,
                         double reference_sgl_bps) {
    JointState jsi(1 + inter_states.size());
    for (const JsiEntry& e : bms) {
        jsi[0].storage += e.storage / 5.0;
        jsi[0].energy += e.energy / 5.0;
        jsi[0].rate += e.rate / 5.0;
        jsi[0].survival += e.survival / 5.0;
    }
    for (std::size_t a = 0; a < inter_states.size(); ++a) {
        jsi[a + 1] = normalize_state(inter_states[a], reference_sgl_bps);
        jsi[a + 1].survival = inter_states[a].survival_avg > 0.0
                                  ? clamp02(self.survival_avg / inter_states[a].survival_avg)
                                  : clamp02(self.survival_avg);
    }
    return jsi;
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

TransferPlan plan_transmission(const std::vector<mission::Mission>& buffer,
                               double battery_j, const energy::PowerParams& power,
                               double tau_s, double rate_bps, LinkKind kind) {
    TransferPlan plan;
    plan.active = true;
    plan.kind = kind;
    plan.rate_bps = rate_bps;
    if (rate_bps <= 0.0) return plan;

    std::vector<int> order(buffer.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        const mission::Mission& a = buffer[x];
        const mission::Mission& b = buffer[y];
        if (a.priority != b.priority) return a.priority > b.priority;
        if (a.survival_slots != b.survival_slots) return a.survival_slots < b.survival_slots;
        return a.uid < b.uid;
    });

    const double cap_bits = tau_s * rate_bps;
    const double tx_power = kind == LinkKind::sgl ? power.p_set_w : power.p_sst_w;
    const double e_floor = power.e_min_j();
    const double e_o = power.p_o_w * tau_s;
    for (int idx : order) {
        const mission::Mission& m = buffer[idx];
        const double bits_next = plan.bits + m.volume_bits;
        if (bits_next > cap_bits + EPS_BITS) break;
        const double e_tr_next = bits_next / rate_bps * tx_power;
        if (battery_j - (e_o + e_tr_next) < e_floor - EPS_J) break;
        plan.bits = bits_next;
        plan.e_tr_j = e_tr_next;
        plan.uids.push_back(m.uid);
    }
    return plan;
}

std::string ResolvedAction::str() const {
    switch (kind) {
        case Kind::idle: return "idle";
        case Kind::ground: return "ground";
        case Kind::intra: return "intra:" + std::to_string(relay_slot);
        default: return "inter:" + std::to_string(domain);
    }
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

NetworkEnv::NetworkEnv(const ScenarioConfig& cfg, std::uint64_t run_seed)
    : cfg_(cfg), run_seed_(run_seed), topo_(build_topology(cfg)),
      generator_(run_seed, cfg.slots) {
    for (int k = 1; k <= cfg_.domain_count(); ++k) {
        const DomainConfig& d = cfg_.domain(k);
        generator_.add_domain({d.missions, d.common_priority, d.sofm.orbit_count(),
                               d.sofm.sats_per_orbit()});
    }
    generator_.set_burst_priority(cfg_.burst_priority);
    buffer_.resize(topo_.size());
    buffered_bits_.assign(topo_.size(), 0.0);
    battery_.assign(topo_.size(), 0.0);
    reset(0);
}

const NodeClassConfig& NetworkEnv::node_class(int flat_id) const {
    return topo_.nodes[flat_id].cls == SatClass::cs ? cfg_.cs : cfg_.ncs;
}

long long NetworkEnv::buffered_missions() const {
    long long n = 0;
    for (const auto& b : buffer_) n += static_cast<long long>(b.size());
    return n;
}

void NetworkEnv::test_push_mission(int flat_id, const mission::Mission& m) {
    buffer_[flat_id].push_back(m);
    buffered_bits_[flat_id] += m.volume_bits;
    ledger_.generated += 1; // keep the conservation identity intact
}

void NetworkEnv::reset(int episode) {
    episode_ = episode;
    slot_ = 1;
    for (auto& b : buffer_) b.clear();
    std::fill(buffered_bits_.begin(), buffered_bits_.end(), 0.0);
    for (int f = 0; f < topo_.size(); ++f) battery_[f] = node_class(f).power.e_max_j;
    ledger_ = RunLedger{};
    ledger_.delivered_by_domain.assign(cfg_.domain_count(), 0);
    ctx_.reset();
    inject_missions(1);
}

void NetworkEnv::inject_missions(int slot) {
    for (int k = 1; k <= cfg_.domain_count(); ++k) {
        for (const mission::Mission& m : generator_.generate(k, slot, episode_)) {
            ledger_.generated += 1;
            const int f = topo_.flat(m.origin);
            if (buffered_bits_[f] + m.volume_bits <= node_class(f).b_max_bits + EPS_BITS) {
                buffer_[f].push_back(m);
                buffered_bits_[f] += m.volume_bits;
            } else {
                ledger_.dropped += 1; // no storage room at birth
            }
        }
    }
}

const SlotContext& NetworkEnv::begin_slot() {
    if (!ctx_ || ctx_->slot != slot_) ctx_ = compute_context(slot_);
    return *ctx_;
}

SlotContext NetworkEnv::compute_context(int slot) {
    SlotContext ctx;
    ctx.slot = slot;
    const int n = topo_.size();
    SlotSnapshot& snap = ctx.snap;
    snap.slot = slot;
    snap.pos_km.resize(n);
    snap.sunlit_s.resize(n);
    snap.intra.resize(n);
    snap.inter.resize(n);
    snap.sgl.resize(n);

    for (int k = 1; k <= cfg_.domain_count(); ++k) {
        const orbit::Sofm& sofm = cfg_.domain(k).sofm;
        for (int f = topo_.domain_offset[k - 1]; f < topo_.domain_offset[k]; ++f) {
            const orbit::EciPosition p =
                orbit::propagate(sofm, topo_.nodes[f].id, slot, cfg_.tau_s);
            snap.pos_km[f] = p.r_km;
            snap.sunlit_s[f] = orbit::sunlit_seconds(p, cfg_.tau_s, cfg_.sun, cfg_.earth);
        }
    }

    auto rate_of = [&](LinkKind kind, double distance_km, std::uint64_t a,
                       std::uint64_t b) {
        return linkbudget::slot_rate_bps(cfg_.rate_model, cfg_.rf, kind, distance_km,
                                         run_seed_, a, b, slot);
    };

    for (int f = 0; f < n; ++f) {
        const NodeStatic& node = topo_.nodes[f];
        for (int r = 0; r < 4; ++r) {
            LinkState& link = snap.intra[f][r];
            if (!node.intra_valid[r]) continue;
            const int g = topo_.flat(node.intra_relays[r]);
            link.distance_km = (snap.pos_km[f] - snap.pos_km[g]).norm();
            link.visible = orbit::pair_visible(snap.pos_km[f], snap.pos_km[g], cfg_.earth);
            link.rate_bps = rate_of(LinkKind::isl, link.distance_km, sat_code(f), sat_code(g));
        }
        snap.inter[f].resize(node.aux_domains.size());
        for (std::size_t a = 0; a < node.aux_domains.size(); ++a) {
            LinkState& link = snap.inter[f][a];
            const int g = topo_.flat(node.inter_relays[a]);
            link.distance_km = (snap.pos_km[f] - snap.pos_km[g]).norm();
            link.visible = orbit::pair_visible(snap.pos_km[f], snap.pos_km[g], cfg_.earth);
            link.rate_bps = rate_of(LinkKind::idl, link.distance_km, sat_code(f), sat_code(g));
        }
        snap.sgl[f].resize(cfg_.stations.size());
        for (std::size_t s = 0; s < cfg_.stations.size(); ++s) {
            LinkState& link = snap.sgl[f][s];
            const orbit::GroundStation& gs = cfg_.stations[s];
            const Vec3 site = orbit::station_eci(gs, slot, cfg_.tau_s, cfg_.earth);
            link.distance_km = (snap.pos_km[f] - site).norm();
            link.visible =
                orbit::sgl_visible({snap.pos_km[f], slot}, gs, cfg_.tau_s, cfg_.earth);
            link.rate_bps =
                rate_of(LinkKind::sgl, link.distance_km, sat_code(f), station_code(gs.id));
        }
    }

    // Raw states.
    ctx.state.resize(n);
    for (int f = 0; f < n; ++f) {
        const NodeClassConfig& cls = node_class(f);
        SatState4& st = ctx.state[f];
        st.storage_rel = buffered_bits_[f] > 0.0 ? cls.b_max_bits / buffered_bits_[f]
                                                 : cls.b_max_bits;
        st.energy_rel =
            battery_[f] / (cls.power.e_min_j() + cls.power.p_o_w * cfg_.tau_s);
        double rate_sum = 0.0;
        int rate_n = 0;
        for (const LinkState& link : snap.sgl[f])
            if (link.visible) {
                rate_sum += link.rate_bps;
                ++rate_n;
            }
        st.sgl_rate_avg_bps = rate_n > 0 ? rate_sum / rate_n : 0.0;
        double surv_sum = 0.0;
        for (const mission::Mission& m : buffer_[f]) surv_sum += m.survival_slots;
        st.survival_avg = buffer_[f].empty()
                              ? 0.0
                              : surv_sum / static_cast<double>(buffer_[f].size());
    }

    // Joint states and feasible sets.
    const double ref = cfg_.rate_model.reference_sgl_bps;
    ctx.bms_jsi.resize(n);
    ctx.tms_jsi.resize(n);
    ctx.flat_jsi.resize(n);
    ctx.bms_feasible.resize(n);
    ctx.tms_feasible.resize(n);
    ctx.flat_feasible.resize(n);
    for (int f = 0; f < n; ++f) {
        const NodeStatic& node = topo_.nodes[f];
        std::array<SatState4, 4> relay_states{};
        for (int r = 0; r < 4; ++r)
            if (node.intra_valid[r]) relay_states[r] = ctx.state[topo_.flat(node.intra_relays[r])];
        ctx.bms_jsi[f] = build_bms_jsi(ctx.state[f], relay_states, node.intra_valid, ref);

        ctx.bms_feasible[f][0] = false;
        for (const LinkState& link : snap.sgl[f])
            if (link.visible) ctx.bms_feasible[f][0] = true;
        for (int r = 0; r < 4; ++r)
            ctx.bms_feasible[f][r + 1] = node.intra_valid[r] && snap.intra[f][r].visible;

        std::vector<SatState4> inter_states;
        for (const SatelliteId& partner : node.inter_relays)
            inter_states.push_back(ctx.state[topo_.flat(partner)]);

        ctx.flat_jsi[f] = ctx.bms_jsi[f];
        ctx.flat_feasible[f].assign(5 + node.aux_domains.size(), false);
        for (int r = 0; r < 5; ++r) ctx.flat_feasible[f][r] = ctx.bms_feasible[f][r];

        if (node.cls == SatClass::cs && !node.aux_domains.empty()) {
            ctx.tms_jsi[f] = build_tms_jsi(ctx.state[f], ctx.bms_jsi[f], inter_states, ref);
            ctx.tms_feasible[f].assign(1 + node.aux_domains.size(), false);
            ctx.tms_feasible[f][0] = ctx.bms_any(f);
            for (std::size_t a = 0; a < node.aux_domains.size(); ++a) {
                ctx.tms_feasible[f][a + 1] = snap.inter[f][a].visible;
                ctx.flat_feasible[f][5 + a] = snap.inter[f][a].visible;
                ctx.flat_jsi[f].push_back(ctx.tms_jsi[f][a + 1]);
            }
        }
    }
    return ctx;
}

SlotOutcome NetworkEnv::commit_slot(const std::vector<ActionTrace>& traces) {
    const int n = topo_.size();
    if (static_cast<int>(traces.size()) != n)
        throw std::invalid_argument("commit_slot: one action trace per satellite required");
    const SlotContext& ctx = begin_slot();

    SlotOutcome out;
    out.slot = slot_;
    out.bms.resize(n);
    out.tms.resize(n);
    out.delivered_count.assign(n, 0);
    out.expired_count.assign(n, 0);
    out.rejected_count.assign(n, 0);

    // Phase 1: freeze every plan against slot-start buffers and batteries.
    std::vector<TransferPlan> plans(n);
    for (int f = 0; f < n; ++f) {
        const ResolvedAction& act = traces[f].resolved;
        if (act.kind == ResolvedAction::Kind::idle) continue;
        const NodeStatic& node = topo_.nodes[f];
        LinkKind kind = LinkKind::isl;
        double rate = 0.0;
        int target = -1;
        int station = 0;
        if (act.kind == ResolvedAction::Kind::ground) {
            for (std::size_t s = 0; s < ctx.snap.sgl[f].size(); ++s) {
                const LinkState& link = ctx.snap.sgl[f][s];
                if (link.visible && link.rate_bps > rate) {
                    rate = link.rate_bps;
                    station = cfg_.stations[s].id;
                }
            }
            if (station == 0)
                throw std::logic_error("commit_slot: ground action with no visible station");
            kind = LinkKind::sgl;
        } else if (act.kind == ResolvedAction::Kind::intra) {
            if (act.relay_slot < 0 || act.relay_slot > 3 ||
                !node.intra_valid[act.relay_slot] ||
                !ctx.snap.intra[f][act.relay_slot].visible)
                throw std::logic_error("commit_slot: infeasible intra relay action");
            target = topo_.flat(node.intra_relays[act.relay_slot]);
            rate = ctx.snap.intra[f][act.relay_slot].rate_bps;
        } else {
            const auto it =
                std::find(node.aux_domains.begin(), node.aux_domains.end(), act.domain);
            if (it == node.aux_domains.end())
                throw std::logic_error("commit_slot: not an auxiliary domain of this node");
            const std::size_t a = it - node.aux_domains.begin();
            if (!ctx.snap.inter[f][a].visible)
                throw std::logic_error("commit_slot: infeasible inter-domain action");
            target = topo_.flat(node.inter_relays[a]);
            rate = ctx.snap.inter[f][a].rate_bps;
            kind = LinkKind::idl;
        }
        plans[f] = plan_transmission(buffer_[f], battery_[f], node_class(f).power,
                                     cfg_.tau_s, rate, kind);
        plans[f].target_flat = target;
        plans[f].station_id = station;
    }

    // Phase 2: execute transfers in flat order. Receivers admit whole
    // missions against their live buffer and an energy floor that reserves
    // their own planned transmit plus nominal cost.
    const std::vector<double> e_start = battery_;
    std::vector<double> e_tr(n, 0.0), e_r(n, 0.0);
    std::vector<bool> moved(n, false);

    auto take_mission = [&](int f, std::uint64_t uid) -> mission::Mission {
        auto& buf = buffer_[f];
        for (std::size_t i = 0; i < buf.size(); ++i) {
            if (buf[i].uid == uid) {
                mission::Mission m = buf[i];
                buf.erase(buf.begin() + static_cast<long>(i));
                buffered_bits_[f] -= m.volume_bits;
                return m;
            }
        }
        throw std::logic_error("commit_slot: plan references a mission not in the buffer");
    };

    auto credit_origin = [&](const mission::Mission& m, int deliverer_flat) {
        if (m.origin == topo_.nodes[deliverer_flat].id) return;
        const int o = topo_.flat(m.origin);
        const ActionTrace& tr = traces[o];
        const bool no_own_sgl = ctx.state[o].sgl_rate_avg_bps == 0.0;
        const auto kind = tr.resolved.kind;
        const bool relayed_intra = tr.bms_acted && kind == ResolvedAction::Kind::intra;
        const bool relayed_flat =
            tr.flat_acted && (kind == ResolvedAction::Kind::intra ||
                              kind == ResolvedAction::Kind::inter);
        if (no_own_sgl && (relayed_intra || relayed_flat))
            out.bms[o].profit_bits += m.volume_bits;
        const bool cross_domain =
            topo_.nodes[deliverer_flat].id.domain != m.origin.domain;
        if (no_own_sgl && cross_domain && tr.tms_acted &&
            kind == ResolvedAction::Kind::inter)
            out.tms[o].profit_bits += m.volume_bits;
    };

    for (int f = 0; f < n; ++f) {
        TransferPlan& plan = plans[f];
        if (!plan.active) continue;
        e_tr[f] = plan.e_tr_j;
        if (plan.bits > 0.0) moved[f] = true;

        RewardRecord& sender_rec =
            traces[f].tms_acted && plan.kind == LinkKind::idl ? out.tms[f] : out.bms[f];

        if (plan.target_flat < 0) {
            // Ground delivery: stations are sinks, everything planned lands.
            for (std::uint64_t uid : plan.uids) {
                const mission::Mission m = take_mission(f, uid);
                ledger_.delivered += 1;
                ledger_.delivered_bits += m.volume_bits;
                ledger_.delivered_by_domain[topo_.nodes[f].id.domain - 1] += 1;
                if (m.kind == mission::MissionKind::common)
                    ledger_.delivered_common += 1;
                else
                    ledger_.delivered_burst += 1;
                out.delivered_count[f] += 1;
                out.bms[f].profit_bits += m.volume_bits;
                credit_origin(m, f);
            }
            continue;
        }

        const int r = plan.target_flat;
        const NodeClassConfig& rcls = node_class(r);
        const double r_floor = rcls.power.e_min_j();
        const double r_eo = rcls.power.p_o_w * cfg_.tau_s;
        double admitted_bits = 0.0;
        bool blocked = false;
        for (std::uint64_t uid : plan.uids) {
            if (!blocked) {
                // Locate without removing: admission may fail.
                const auto& buf = buffer_[f];
                const auto it = std::find_if(buf.begin(), buf.end(),
                                             [&](const auto& m) { return m.uid == uid; });
                if (it == buf.end())
                    throw std::logic_error(
                        "commit_slot: plan references a mission not in the buffer");
                const double vol = it->volume_bits;
                const double e_recv = vol / plan.rate_bps * rcls.power.p_sr_w;
                const bool fits_storage =
                    buffered_bits_[r] + vol <= rcls.b_max_bits + EPS_BITS;
                const bool fits_energy =
                    e_start[r] - (r_eo + plans[r].e_tr_j + e_r[r] + e_recv) >=
                    r_floor - EPS_J;
                if (fits_storage && fits_energy) {
                    const mission::Mission m = take_mission(f, uid);
                    buffer_[r].push_back(m);
                    buffered_bits_[r] += m.volume_bits;
                    e_r[r] += e_recv;
                    if (e_recv > 0.0) moved[r] = true;
                    admitted_bits += vol;
                    continue;
                }
                blocked = true; // prefix semantics: first refusal ends admission
            }
            out.rejected_count[f] += 1;
        }
        sender_rec.penalty_bits += plan.bits - admitted_bits;
    }

    // Phase 3: a cross-domain node that chose its own domain reports the
    // intra-stage outcome on both layers.
    for (int f = 0; f < n; ++f)
        if (traces[f].tms_acted && traces[f].tms_choice == 0) {
            out.tms[f].profit_bits = out.bms[f].profit_bits;
            out.tms[f].penalty_bits = out.bms[f].penalty_bits;
        }

    // Phase 4: aging. A mission alive at slot start could still be delivered
    // above; survivors lose one slot now.
    for (int f = 0; f < n; ++f) {
        const auto expired = mission::age_missions(buffer_[f]);
        for (const mission::Mission& m : expired) buffered_bits_[f] -= m.volume_bits;
        out.expired_count[f] = static_cast<int>(expired.size());
        ledger_.expired += static_cast<long long>(expired.size());
    }

    // Phase 5: inject the next slot's missions (drop-and-count on overflow).
    const long long generated_before = ledger_.generated;
    inject_missions(slot_ + 1);
    out.generated_now = ledger_.generated - generated_before;

    // Phase 6: energy ledger. Reserve-floor compliance is checked on
    // slot-start batteries (before harvest), then the battery integrates
    // consumption and cap-truncated harvest.
    std::vector<double> consumed(n, 0.0);
    for (int f = 0; f < n; ++f) {
        const energy::PowerParams& power = node_class(f).power;
        consumed[f] = energy::e_total(e_tr[f], e_r[f], power.p_o_w * cfg_.tau_s);
        const double harvest =
            energy::e_harvest(power, ctx.snap.sunlit_s[f], cfg_.tau_s);
        const energy::EnergyDelta delta =
            energy::apply_energy(battery_[f], consumed[f], harvest, power);
        if (record_energy_)
            ledger_.energy_rows.push_back({slot_, f, e_start[f], e_tr[f], e_r[f],
                                           power.p_o_w * cfg_.tau_s,
                                           delta.harvest_available_j,
                                           delta.harvest_stored_j, delta.e_after_j});
        battery_[f] = delta.e_after_j;
    }

    // Phase 7: normalized rewards.
    for (int f = 0; f < n; ++f) {
        out.bms[f].present = traces[f].bms_acted || traces[f].flat_acted;
        out.tms[f].present = traces[f].tms_acted;
        for (RewardRecord* rec : {&out.bms[f], &out.tms[f]}) {
            if (!rec->present) continue;
            rec->reward = std::clamp(
                (rec->profit_bits - rec->penalty_bits) / cfg_.reward_scale_bits, -2.0, 2.0);
        }
        ledger_.bms_reward_sum += out.bms[f].reward;
        ledger_.tms_reward_sum += out.tms[f].reward;
        if (record_slots_) {
            ledger_.slot_rows.push_back({slot_, f, 'b', traces[f].resolved.str(),
                                         out.bms[f].profit_bits, out.bms[f].penalty_bits,
                                         out.delivered_count[f], out.expired_count[f],
                                         out.rejected_count[f]});
            if (traces[f].tms_acted)
                ledger_.slot_rows.push_back({slot_, f, 't', traces[f].resolved.str(),
                                             out.tms[f].profit_bits,
                                             out.tms[f].penalty_bits, 0, 0, 0});
        }
    }

    check_invariants(e_start, consumed, moved);
    slot_ += 1;
    ctx_.reset();
    return out;
}

void NetworkEnv::check_invariants(const std::vector<double>& e_start,
                                  const std::vector<double>& consumed,
                                  const std::vector<bool>& moved_bits) {
    for (int f = 0; f < topo_.size(); ++f) {
        const NodeClassConfig& cls = node_class(f);
        if (battery_[f] > cls.power.e_max_j + EPS_J || battery_[f] < -EPS_J)
            ledger_.violations.push_back("slot " + std::to_string(slot_) + ": battery of " +
                                         topo_.nodes[f].id.str() + " outside [0, e_max]");
        if (moved_bits[f] &&
            e_start[f] - consumed[f] < cls.power.e_min_j() - EPS_J)
            ledger_.violations.push_back("slot " + std::to_string(slot_) +
                                         ": reserve floor crossed by " +
                                         topo_.nodes[f].id.str());
        if (buffered_bits_[f] > cls.b_max_bits + EPS_BITS)
            ledger_.violations.push_back("slot " + std::to_string(slot_) +
                                         ": storage overrun on " + topo_.nodes[f].id.str());
        double bits = 0.0;
        for (const mission::Mission& m : buffer_[f]) bits += m.volume_bits;
        if (std::abs(bits - buffered_bits_[f]) > EPS_BITS)
            ledger_.violations.push_back("slot " + std::to_string(slot_) +
                                         ": buffer accounting drift on " +
                                         topo_.nodes[f].id.str());
    }
    const long long reachable =
        ledger_.delivered + ledger_.expired + ledger_.dropped + buffered_missions();
    if (reachable != ledger_.generated)
        ledger_.violations.push_back("slot " + std::to_string(slot_) +
                                     ": mission conservation broken (generated " +
                                     std::to_string(ledger_.generated) + ", accounted " +
                                     std::to_string(reachable) + ")");
}

EpisodeMetrics NetworkEnv::metrics() const {
    EpisodeMetrics m;
    m.generated = ledger_.generated;
    m.delivered = ledger_.delivered;
    m.expired = ledger_.expired;
    m.dropped = ledger_.dropped;
    m.buffered = buffered_missions();
    m.mcr = m.generated > 0
                ? static_cast<double>(m.delivered) / static_cast<double>(m.generated)
                : 0.0;
    m.delivered_by_domain = ledger_.delivered_by_domain;
    m.delivered_common = ledger_.delivered_common;
    m.delivered_burst = ledger_.delivered_burst;
    m.bms_reward_sum = ledger_.bms_reward_sum;
    m.tms_reward_sum = ledger_.tms_reward_sum;
    return m;
}

} // namespace satsched::net
