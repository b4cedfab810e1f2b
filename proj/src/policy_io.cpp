#include "satsched/policy_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace satsched::io {

namespace {

constexpr char MAGIC[8] = {'S', 'S', 'P', 'O', 'L', '1', '\0', '\0'};

void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_doubles(std::ostream& os, const std::vector<double>& v) {
    put_u64(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
std::vector<double> get_doubles(std::istream& is) {
    const std::uint64_t n = get_u64(is);
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    return v;
}

std::uint32_t layer_code(learn::Layer layer) {
    switch (layer) {
        case learn::Layer::bms: return 'b';
        case learn::Layer::tms: return 't';
        default: return 'f';
    }
}

} // namespace

void save_policy(const std::string& path, const learn::Scheduler& sched,
                 std::uint64_t config_hash) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os.write(MAGIC, sizeof MAGIC);
    put_u64(os, config_hash);
    put_u32(os, static_cast<std::uint32_t>(sched.kind()));
    put_u32(os, static_cast<std::uint32_t>(sched.agents().size()));
    for (const learn::Agent& ag : sched.agents()) {
        put_u32(os, layer_code(ag.layer));
        put_u32(os, static_cast<std::uint32_t>(ag.flats.size()));
        for (int f : ag.flats) put_u32(os, static_cast<std::uint32_t>(f));
        put_u32(os, static_cast<std::uint32_t>(ag.actor.entries()));
        put_u32(os, static_cast<std::uint32_t>(ag.actor.outputs()));
        put_doubles(os, ag.actor.flatten());
        put_doubles(os, ag.critic.flatten());
    }
    if (!os) throw std::runtime_error("failed while writing '" + path + "'");
}

void load_policy(const std::string& path, learn::Scheduler& sched,
                 std::uint64_t config_hash) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open policy file '" + path + "'");
    char magic[8] = {};
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, MAGIC, sizeof MAGIC) != 0)
        throw std::runtime_error("'" + path + "' is not a policy checkpoint");
    const std::uint64_t stored_hash = get_u64(is);
    if (stored_hash != config_hash)
        throw std::runtime_error("policy '" + path +
                                 "' was trained under a different scenario "
                                 "configuration (hash mismatch)");
    const auto kind = static_cast<learn::PolicyKind>(get_u32(is));
    if (kind != sched.kind())
        throw std::runtime_error("policy kind mismatch: file holds '" +
                                 std::string(learn::to_string(kind)) + "', scheduler is '" +
                                 learn::to_string(sched.kind()) + "'");
    const std::uint32_t count = get_u32(is);
    if (count != sched.agents().size())
        throw std::runtime_error("policy '" + path + "' holds " + std::to_string(count) +
                                 " agents, scheduler has " +
                                 std::to_string(sched.agents().size()));
    for (learn::Agent& ag : sched.agents()) {
        if (get_u32(is) != layer_code(ag.layer))
            throw std::runtime_error("policy '" + path + "': agent layer mismatch");
        const std::uint32_t members = get_u32(is);
        if (members != ag.flats.size())
            throw std::runtime_error("policy '" + path + "': agent membership mismatch");
        for (int f : ag.flats)
            if (get_u32(is) != static_cast<std::uint32_t>(f))
                throw std::runtime_error("policy '" + path +
                                         "': agent satellite assignment mismatch");
        const std::uint32_t entries = get_u32(is);
        const std::uint32_t outputs = get_u32(is);
        if (entries != static_cast<std::uint32_t>(ag.actor.entries()) ||
            outputs != static_cast<std::uint32_t>(ag.actor.outputs()))
            throw std::runtime_error("policy '" + path + "': network shape mismatch");
        const std::vector<double> actor = get_doubles(is);
        const std::vector<double> critic = get_doubles(is);
        if (actor.size() != ag.actor.parameter_count() ||
            critic.size() != ag.critic.parameter_count())
            throw std::runtime_error("policy '" + path + "': parameter count mismatch");
        ag.actor.unflatten(actor);
        ag.critic.unflatten(critic);
        ag.critic_target = ag.critic;
        ag.actor_cache = learn::BlockMlp::zeros_like(ag.actor);
        ag.critic_cache = learn::BlockMlp::zeros_like(ag.critic);
    }
    if (!is) throw std::runtime_error("policy '" + path + "' is truncated");
}

} // namespace satsched::io
