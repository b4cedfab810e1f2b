#include "satsched/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace satsched {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument("scenario: " + path + ": " + what);
}

/// Tracks which keys of a JSON object were consumed so typos surface as
/// "unknown field" instead of silently taking a default.
class Reader {
  public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail(path_, "expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    template <typename T>
    T req(const std::string& key) {
        if (!node_.contains(key)) fail(path_, "missing field '" + key + "'");
        return take<T>(key);
    }

    template <typename T>
    T opt(const std::string& key, T fallback) {
        if (!node_.contains(key)) return fallback;
        return take<T>(key);
    }

    const json& raw(const std::string& key) {
        if (!node_.contains(key)) fail(path_, "missing field '" + key + "'");
        seen_.insert(key);
        return node_.at(key);
    }

    void finish() {
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!seen_.count(it.key())) fail(path_, "unknown field '" + it.key() + "'");
    }

    std::string sub_path(const std::string& key) const { return path_ + "." + key; }

  private:
    template <typename T>
    T take(const std::string& key) {
        seen_.insert(key);
        try {
            return node_.at(key).get<T>();
        } catch (const json::exception&) {
            fail(path_, "field '" + key + "' has the wrong type");
        }
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

mission::Attribute parse_attribute(const std::string& s, const std::string& path) {
    if (s == "volume") return mission::Attribute::volume;
    if (s == "arrival") return mission::Attribute::arrival;
    if (s == "delay") return mission::Attribute::delay;
    fail(path, "unknown attribute '" + s + "' (volume|arrival|delay)");
}

orbit::Sofm expand_walker(Reader& w) {
    const int orbits = w.req<int>("orbits");
    const int per_orbit = w.req<int>("sats_per_orbit");
    const double altitude = w.req<double>("altitude_km");
    const double inclination = w.req<double>("inclination_deg");
    const double ecc = w.opt<double>("eccentricity", 0.0);
    const double argp = w.opt<double>("arg_perigee_deg", 0.0);
    const double raan0 = w.opt<double>("raan0_deg", 0.0);
    const double raan_spread = w.opt<double>("raan_spread_deg", 360.0);
    const double phase_factor = w.opt<double>("phase_factor", 1.0);
    w.finish();
    if (orbits <= 0 || per_orbit <= 0) fail("walker", "empty constellation");

    orbit::Sofm sofm;
    for (int i = 0; i < orbits; ++i) {
        orbit::OrbitRow row;
        row.altitude_km = altitude;
        row.eccentricity = ecc;
        row.inclination_deg = inclination;
        row.arg_perigee_deg = argp;
        row.raan_deg = raan0 + raan_spread * i / orbits;
        const double phase = phase_factor * 360.0 * i / (orbits * per_orbit);
        for (int j = 0; j < per_orbit; ++j)
            row.mean_anomaly_deg.push_back(360.0 * j / per_orbit + phase);
        sofm.rows.push_back(std::move(row));
    }
    return sofm;
}

orbit::Sofm parse_orbit_rows(const json& arr, const std::string& path) {
    if (!arr.is_array() || arr.empty()) fail(path, "expected a non-empty array of orbits");
    orbit::Sofm sofm;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader r(arr[i], path + "[" + std::to_string(i) + "]");
        orbit::OrbitRow row;
        row.altitude_km = r.req<double>("altitude_km");
        row.eccentricity = r.opt<double>("eccentricity", 0.0);
        row.inclination_deg = r.req<double>("inclination_deg");
        row.arg_perigee_deg = r.opt<double>("arg_perigee_deg", 0.0);
        row.raan_deg = r.req<double>("raan_deg");
        row.mean_anomaly_deg = r.req<std::vector<double>>("mean_anomaly_deg");
        r.finish();
        sofm.rows.push_back(std::move(row));
    }
    return sofm;
}

NodeClassConfig parse_class(const json& node, const std::string& path) {
    Reader r(node, path);
    NodeClassConfig c;
    c.power.p_sst_w = r.opt<double>("p_sst_w", c.power.p_sst_w);
    c.power.p_set_w = r.opt<double>("p_set_w", c.power.p_set_w);
    c.power.p_sr_w = r.opt<double>("p_sr_w", c.power.p_sr_w);
    c.power.p_o_w = r.opt<double>("p_o_w", c.power.p_o_w);
    c.power.p_h_w = r.opt<double>("p_h_w", c.power.p_h_w);
    c.power.eta = r.opt<double>("eta", c.power.eta);
    c.power.e_max_j = r.req<double>("e_max_j");
    c.b_max_bits = r.req<double>("b_max_bits");
    r.finish();
    return c;
}

DomainConfig parse_domain(const json& node, const std::string& path) {
    Reader r(node, path);
    DomainConfig d;
    d.name = r.req<std::string>("name");
    d.mission_kind = r.opt<std::string>("mission_kind", "generic");

    if (r.has("walker") == r.has("orbits"))
        fail(path, "exactly one of 'walker' or 'orbits' is required");
    if (r.has("walker")) {
        Reader w(r.raw("walker"), r.sub_path("walker"));
        d.sofm = expand_walker(w);
    } else {
        d.sofm = parse_orbit_rows(r.raw("orbits"), r.sub_path("orbits"));
    }

    {
        Reader m(r.raw("missions"), r.sub_path("missions"));
        d.missions.common_total = m.opt<int>("common_total", 0);
        d.missions.common_volume_bits = m.opt<double>("common_volume_bits", 0.0);
        d.missions.common_survival_slots = m.opt<int>("common_survival_slots", 1);
        d.missions.burst_rate = m.opt<double>("burst_rate", 0.0);
        d.missions.burst_volume_bits = m.opt<double>("burst_volume_bits", 0.0);
        d.missions.burst_survival_slots = m.opt<int>("burst_survival_slots", 3);
        m.finish();
    }
    {
        Reader a(r.raw("attributes"), r.sub_path("attributes"));
        const auto ranking = a.req<std::vector<std::string>>("ranking");
        if (ranking.size() != 3) fail(r.sub_path("attributes"), "ranking needs 3 entries");
        for (int i = 0; i < 3; ++i)
            d.attributes.ranking[i] = parse_attribute(ranking[i], r.sub_path("attributes"));
        Reader v(a.raw("values"), r.sub_path("attributes.values"));
        d.attributes.value[static_cast<int>(mission::Attribute::volume)] =
            v.req<double>("volume");
        d.attributes.value[static_cast<int>(mission::Attribute::arrival)] =
            v.req<double>("arrival");
        d.attributes.value[static_cast<int>(mission::Attribute::delay)] =
            v.req<double>("delay");
        v.finish();
        a.finish();
    }
    r.finish();
    return d;
}

const char* attribute_name(mission::Attribute a) {
    switch (a) {
        case mission::Attribute::volume: return "volume";
        case mission::Attribute::arrival: return "arrival";
        default: return "delay";
    }
}

} // namespace

void ScenarioConfig::finalize() {
    if (tau_s <= 0.0) fail("tau_s", "slot length must be positive");
    if (slots < 1) fail("slots", "horizon must be at least one slot");
    if (stations.empty()) fail("stations", "at least one ground station required");
    for (std::size_t i = 0; i < stations.size(); ++i) {
        auto& gs = stations[i];
        gs.id = static_cast<int>(i + 1);
        const std::string p = "stations[" + std::to_string(i) + "]";
        if (std::abs(gs.lat_deg) > 90.0) fail(p, "latitude outside [-90, 90]");
        if (gs.min_elevation_deg < 0.0 || gs.min_elevation_deg > 90.0)
            fail(p, "min_elevation outside [0, 90]");
    }

    if (rf.f_hz <= 0.0 || rf.t_n_k <= 0.0 || rf.ebn0_req <= 0.0 || rf.margin <= 0.0 ||
        rf.bandwidth_hz <= 0.0 || rf.l_p <= 0.0 || rf.p_sst_w <= 0.0 || rf.p_set_w <= 0.0)
        fail("rf", "chain constants must be positive");
    if (rf.gain_product <= 0.0) rf.gain_product = linkbudget::calibrated_gain_product(rf);
    rate_model.validate();

    ncs.power.validate();
    cs.power.validate();
    if (ncs.b_max_bits <= 0.0 || cs.b_max_bits <= 0.0)
        fail("classes", "storage must be positive");

    if (domains.empty()) fail("domains", "at least one domain required");
    std::vector<double> commons;
    reward_scale_bits = 0.0;
    for (std::size_t i = 0; i < domains.size(); ++i) {
        auto& d = domains[i];
        const std::string p = "domains[" + std::to_string(i) + "]";
        try {
            d.sofm.validate_and_normalize();
        } catch (const std::invalid_argument& e) {
            fail(p, e.what());
        }
        if (d.missions.common_total < 0) fail(p, "negative common_total");
        if (d.missions.common_total > 0) {
            if (d.missions.common_volume_bits <= 0.0)
                fail(p, "common missions need a positive volume");
            if (d.missions.common_survival_slots < 1)
                fail(p, "common missions need survival >= 1");
            reward_scale_bits = std::max(reward_scale_bits, d.missions.common_volume_bits);
        }
        if (d.missions.burst_rate < 0.0) fail(p, "negative burst_rate");
        if (d.missions.burst_rate > 0.0) {
            if (d.missions.burst_volume_bits <= 0.0)
                fail(p, "burst missions need a positive volume");
            if (d.missions.burst_survival_slots < 1)
                fail(p, "burst missions need survival >= 1");
            reward_scale_bits = std::max(reward_scale_bits, d.missions.burst_volume_bits);
        }
        try {
            d.common_priority = mission::mission_priority(d.attributes);
        } catch (const std::invalid_argument& e) {
            fail(p + ".attributes", e.what());
        }
        commons.push_back(d.common_priority);
    }
    burst_priority = mission::burst_priority(commons);
    if (reward_scale_bits <= 0.0) reward_scale_bits = 1.0;

    if (train.gamma < 0.0 || train.gamma > 1.0) fail("train", "gamma outside [0, 1]");
    if (train.lr_actor < 0.0 || train.lr_critic < 0.0) fail("train", "negative learning rate");
    if (train.minibatch_bms < 1 || train.minibatch_tms < 1)
        fail("train", "minibatch must be at least 1");
    if (train.episodes < 0) fail("train", "negative episode count");
    if (train.hidden_block < 1 || train.hidden_merge < 1)
        fail("train", "hidden widths must be at least 1");
    if (train.rmsprop_decay < 0.0 || train.rmsprop_decay >= 1.0)
        fail("train", "rmsprop decay outside [0, 1)");
    if (train.rmsprop_eps <= 0.0) fail("train", "rmsprop epsilon must be positive");
}

ScenarioConfig parse_scenario(const nlohmann::json& doc) {
    Reader r(doc, "scenario");
    ScenarioConfig cfg;
    cfg.name = r.opt<std::string>("name", "unnamed");
    cfg.seed = r.opt<std::uint64_t>("seed", 0); // default seed 0, echoed in reports
    cfg.tau_s = r.req<double>("tau_s");
    cfg.slots = r.req<int>("slots");

    if (r.has("earth")) {
        Reader e(r.raw("earth"), "earth");
        cfg.earth.radius_km = e.opt<double>("radius_km", cfg.earth.radius_km);
        cfg.earth.grazing_margin_km =
            e.opt<double>("grazing_margin_km", cfg.earth.grazing_margin_km);
        cfg.earth.rotation_rad_s = e.opt<double>("rotation_rad_s", cfg.earth.rotation_rad_s);
        cfg.earth.gmst0_deg = e.opt<double>("gmst0_deg", cfg.earth.gmst0_deg);
        e.finish();
    }
    if (r.has("sun")) {
        Reader s(r.raw("sun"), "sun");
        cfg.sun.longitude0_deg = s.opt<double>("longitude0_deg", cfg.sun.longitude0_deg);
        cfg.sun.advance_deg_per_day =
            s.opt<double>("advance_deg_per_day", cfg.sun.advance_deg_per_day);
        s.finish();
    }

    const json& stations = r.raw("stations");
    if (!stations.is_array()) fail("stations", "expected an array");
    for (std::size_t i = 0; i < stations.size(); ++i) {
        Reader s(stations[i], "stations[" + std::to_string(i) + "]");
        orbit::GroundStation gs;
        gs.name = s.opt<std::string>("name", "gs" + std::to_string(i + 1));
        gs.lat_deg = s.req<double>("lat_deg");
        gs.lon_deg = s.req<double>("lon_deg");
        gs.min_elevation_deg = s.opt<double>("min_elevation_deg", 10.0);
        s.finish();
        cfg.stations.push_back(std::move(gs));
    }

    if (r.has("rf")) {
        Reader f(r.raw("rf"), "rf");
        cfg.rf.p_sst_w = f.opt<double>("p_sst_w", cfg.rf.p_sst_w);
        cfg.rf.p_set_w = f.opt<double>("p_set_w", cfg.rf.p_set_w);
        cfg.rf.f_hz = f.opt<double>("f_hz", cfg.rf.f_hz);
        cfg.rf.t_n_k = f.opt<double>("t_n_k", cfg.rf.t_n_k);
        cfg.rf.ebn0_req = f.opt<double>("ebn0_req_linear", cfg.rf.ebn0_req);
        cfg.rf.margin = f.opt<double>("margin_linear", cfg.rf.margin);
        cfg.rf.bandwidth_hz = f.opt<double>("bandwidth_hz", cfg.rf.bandwidth_hz);
        cfg.rf.l_p = f.opt<double>("l_p", cfg.rf.l_p);
        cfg.rf.gain_product = f.opt<double>("gain_product_linear", 0.0);
        cfg.rf.noise_w = f.opt<double>("noise_w", 0.0);
        f.finish();
    }
    if (r.has("rate_model")) {
        Reader m(r.raw("rate_model"), "rate_model");
        const std::string mode = m.opt<std::string>("mode", "table");
        if (mode == "table")
            cfg.rate_model.mode = linkbudget::RateModel::Mode::table;
        else if (mode == "analytic")
            cfg.rate_model.mode = linkbudget::RateModel::Mode::analytic;
        else
            fail("rate_model", "mode must be 'table' or 'analytic'");
        cfg.rate_model.table_sgl_bps = m.opt<double>("sgl_bps", cfg.rate_model.table_sgl_bps);
        if (m.has("isl_band_bps")) {
            const auto band = m.req<std::vector<double>>("isl_band_bps");
            if (band.size() != 2) fail("rate_model", "isl_band_bps needs [lo, hi]");
            cfg.rate_model.isl_band_lo_bps = band[0];
            cfg.rate_model.isl_band_hi_bps = band[1];
        }
        cfg.rate_model.reference_sgl_bps =
            m.opt<double>("reference_sgl_bps", cfg.rate_model.table_sgl_bps);
        m.finish();
    } else {
        cfg.rate_model.reference_sgl_bps = cfg.rate_model.table_sgl_bps;
    }

    {
        Reader c(r.raw("classes"), "classes");
        cfg.ncs = parse_class(c.raw("ncs"), "classes.ncs");
        cfg.cs = parse_class(c.raw("cs"), "classes.cs");
        c.finish();
    }

    const json& doms = r.raw("domains");
    if (!doms.is_array()) fail("domains", "expected an array");
    for (std::size_t i = 0; i < doms.size(); ++i)
        cfg.domains.push_back(parse_domain(doms[i], "domains[" + std::to_string(i) + "]"));

    if (r.has("train")) {
        Reader t(r.raw("train"), "train");
        cfg.train.gamma = t.opt<double>("gamma", cfg.train.gamma);
        cfg.train.lr_actor = t.opt<double>("lr_actor", cfg.train.lr_actor);
        cfg.train.lr_critic = t.opt<double>("lr_critic", cfg.train.lr_critic);
        cfg.train.minibatch_bms = t.opt<int>("minibatch_bms", cfg.train.minibatch_bms);
        cfg.train.minibatch_tms = t.opt<int>("minibatch_tms", cfg.train.minibatch_tms);
        cfg.train.episodes = t.opt<int>("episodes", cfg.train.episodes);
        cfg.train.rmsprop_decay = t.opt<double>("rmsprop_decay", cfg.train.rmsprop_decay);
        cfg.train.rmsprop_eps = t.opt<double>("rmsprop_eps", cfg.train.rmsprop_eps);
        cfg.train.hidden_block = t.opt<int>("hidden_block", cfg.train.hidden_block);
        cfg.train.hidden_merge = t.opt<int>("hidden_merge", cfg.train.hidden_merge);
        cfg.train.shared_weights = t.opt<bool>("shared_weights", cfg.train.shared_weights);
        t.finish();
    }
    r.finish();

    cfg.finalize();
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("scenario: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("scenario: parse error in '" + path + "': " + e.what());
    }
    return parse_scenario(doc);
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
    json doc;
    doc["name"] = cfg.name;
    doc["seed"] = cfg.seed;
    doc["tau_s"] = cfg.tau_s;
    doc["slots"] = cfg.slots;
    doc["earth"] = {{"radius_km", cfg.earth.radius_km},
                    {"grazing_margin_km", cfg.earth.grazing_margin_km},
                    {"rotation_rad_s", cfg.earth.rotation_rad_s},
                    {"gmst0_deg", cfg.earth.gmst0_deg}};
    doc["sun"] = {{"longitude0_deg", cfg.sun.longitude0_deg},
                  {"advance_deg_per_day", cfg.sun.advance_deg_per_day}};
    for (const auto& gs : cfg.stations)
        doc["stations"].push_back({{"name", gs.name},
                                   {"lat_deg", gs.lat_deg},
                                   {"lon_deg", gs.lon_deg},
                                   {"min_elevation_deg", gs.min_elevation_deg}});
    doc["rf"] = {{"p_sst_w", cfg.rf.p_sst_w},
                 {"p_set_w", cfg.rf.p_set_w},
                 {"f_hz", cfg.rf.f_hz},
                 {"t_n_k", cfg.rf.t_n_k},
                 {"ebn0_req_linear", cfg.rf.ebn0_req},
                 {"margin_linear", cfg.rf.margin},
                 {"bandwidth_hz", cfg.rf.bandwidth_hz},
                 {"l_p", cfg.rf.l_p},
                 {"gain_product_linear", cfg.rf.gain_product},
                 {"noise_w", cfg.rf.noise_w}};
    doc["rate_model"] = {
        {"mode", cfg.rate_model.mode == linkbudget::RateModel::Mode::table ? "table"
                                                                           : "analytic"},
        {"sgl_bps", cfg.rate_model.table_sgl_bps},
        {"isl_band_bps", {cfg.rate_model.isl_band_lo_bps, cfg.rate_model.isl_band_hi_bps}},
        {"reference_sgl_bps", cfg.rate_model.reference_sgl_bps}};
    auto class_json = [](const NodeClassConfig& c) {
        return json{{"p_sst_w", c.power.p_sst_w}, {"p_set_w", c.power.p_set_w},
                    {"p_sr_w", c.power.p_sr_w},   {"p_o_w", c.power.p_o_w},
                    {"p_h_w", c.power.p_h_w},     {"eta", c.power.eta},
                    {"e_max_j", c.power.e_max_j}, {"b_max_bits", c.b_max_bits}};
    };
    doc["classes"] = {{"ncs", class_json(cfg.ncs)}, {"cs", class_json(cfg.cs)}};
    for (const auto& d : cfg.domains) {
        json dj;
        dj["name"] = d.name;
        dj["mission_kind"] = d.mission_kind;
        for (const auto& row : d.sofm.rows)
            dj["orbits"].push_back({{"altitude_km", row.altitude_km},
                                    {"eccentricity", row.eccentricity},
                                    {"inclination_deg", row.inclination_deg},
                                    {"arg_perigee_deg", row.arg_perigee_deg},
                                    {"raan_deg", row.raan_deg},
                                    {"mean_anomaly_deg", row.mean_anomaly_deg}});
        dj["missions"] = {{"common_total", d.missions.common_total},
                          {"common_volume_bits", d.missions.common_volume_bits},
                          {"common_survival_slots", d.missions.common_survival_slots},
                          {"burst_rate", d.missions.burst_rate},
                          {"burst_volume_bits", d.missions.burst_volume_bits},
                          {"burst_survival_slots", d.missions.burst_survival_slots}};
        dj["attributes"] = {
            {"ranking",
             {attribute_name(d.attributes.ranking[0]), attribute_name(d.attributes.ranking[1]),
              attribute_name(d.attributes.ranking[2])}},
            {"values",
             {{"volume", d.attributes.value[static_cast<int>(mission::Attribute::volume)]},
              {"arrival", d.attributes.value[static_cast<int>(mission::Attribute::arrival)]},
              {"delay", d.attributes.value[static_cast<int>(mission::Attribute::delay)]}}}};
        doc["domains"].push_back(std::move(dj));
    }
    doc["train"] = {{"gamma", cfg.train.gamma},
                    {"lr_actor", cfg.train.lr_actor},
                    {"lr_critic", cfg.train.lr_critic},
                    {"minibatch_bms", cfg.train.minibatch_bms},
                    {"minibatch_tms", cfg.train.minibatch_tms},
                    {"episodes", cfg.train.episodes},
                    {"rmsprop_decay", cfg.train.rmsprop_decay},
                    {"rmsprop_eps", cfg.train.rmsprop_eps},
                    {"hidden_block", cfg.train.hidden_block},
                    {"hidden_merge", cfg.train.hidden_merge},
                    {"shared_weights", cfg.train.shared_weights}};
    return doc;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
    return fnv1a64(scenario_to_json(cfg).dump());
}

} // namespace satsched
