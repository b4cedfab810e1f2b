#include <doctest.h>

#include <stdexcept>

#include <array>
#include <vector>

#include "satsched/energy.hpp"
#include "satsched/rng.hpp"

using namespace satsched;
using namespace satsched::energy;

TEST_CASE("power params: reserve floor and validation") {
    PowerParams p;
    CHECK(p.e_min_j() == doctest::Approx(0.25e5).epsilon(1e-15));
    p.validate();

    PowerParams bad_eta = p;
    bad_eta.eta = 1.5;
    CHECK_THROWS_AS(bad_eta.validate(), std::invalid_argument);
    PowerParams bad_cap = p;
    bad_cap.e_max_j = 0.0;
    CHECK_THROWS_AS(bad_cap.validate(), std::invalid_argument);
}

TEST_CASE("transmit energy selects the power by link kind") {
    PowerParams p;
    p.p_sst_w = 20.0;
    p.p_set_w = 8.0;

    // 1e9 bits at 1e8 bps is 10 s on the link: 200 J via p_sst.
    const std::array<LinkLoad, 1> isl{{{1.0e9, 1.0e8, LinkKind::isl}}};
    CHECK(e_transmit(isl, p) == doctest::Approx(200.0).epsilon(1e-15));

    const std::array<LinkLoad, 1> sgl{{{1.0e9, 1.0e8, LinkKind::sgl}}};
    CHECK(e_transmit(sgl, p) == doctest::Approx(80.0).epsilon(1e-15));

    // Inter-domain legs run on the satellite-satellite amplifier too.
    const std::array<LinkLoad, 2> both{{{1.0e9, 1.0e8, LinkKind::idl},
                                        {0.5e9, 1.0e8, LinkKind::sgl}}};
    CHECK(e_transmit(both, p) == doctest::Approx(200.0 + 40.0).epsilon(1e-15));

    const std::array<LinkLoad, 1> idle{{{0.0, 0.0, LinkKind::isl}}};
    CHECK(e_transmit(idle, p) == doctest::Approx(0.0));

    const std::array<LinkLoad, 1> stuck{{{1.0, 0.0, LinkKind::isl}}};
    CHECK_THROWS_AS(e_transmit(stuck, p), std::domain_error);
    const std::array<LinkLoad, 1> negative{{{-1.0, 1.0e8, LinkKind::isl}}};
    CHECK_THROWS_AS(e_transmit(negative, p), std::domain_error);
}

TEST_CASE("receive energy uses the receive power for every kind") {
    PowerParams p;
    p.p_sr_w = 10.0;
    const std::array<LinkLoad, 2> loads{{{1.0e9, 1.0e8, LinkKind::isl},
                                         {2.0e9, 1.0e8, LinkKind::idl}}};
    CHECK(e_receive(loads, p) == doctest::Approx(100.0 + 200.0).epsilon(1e-15));
}

TEST_CASE("nominal and harvest terms") {
    PowerParams p;
    CHECK(e_nominal(p, 100.0) == doctest::Approx(500.0));
    CHECK(e_total(200.0, 50.0, 500.0) == doctest::Approx(750.0));

    // Harvest is clipped to the slot even if the sunlit figure overshoots.
    CHECK(e_harvest(p, 100.0, 100.0) == doctest::Approx(2000.0));
    CHECK(e_harvest(p, 0.0, 100.0) == doctest::Approx(0.0));
    CHECK(e_harvest(p, 250.0, 100.0) == doctest::Approx(2000.0));
}

TEST_CASE("battery update truncates harvest at the cap") {
    PowerParams p; // e_max 1e5
    const EnergyDelta d = apply_energy(0.999e5, 500.0, 2000.0, p);
    CHECK(d.consumed_j == doctest::Approx(500.0));
    CHECK(d.harvest_available_j == doctest::Approx(2000.0));
    // Headroom after consumption is 100 + 500 = 600 J.
    CHECK(d.harvest_stored_j == doctest::Approx(600.0));
    CHECK(d.e_after_j == doctest::Approx(1.0e5));
}

TEST_CASE("battery update ledger identity holds over random walks") {
    PowerParams p;
    RngStream rng({99, 0x656e65726779ULL});
    double e = p.e_max_j;
    for (int step = 0; step < 2000; ++step) {
        const double consumed = rng.uniform(0.0, e); // never overdraw
        const double harvest = rng.uniform(0.0, 3000.0);
        const EnergyDelta d = apply_energy(e, consumed, harvest, p);
        CHECK(d.e_after_j == doctest::Approx(e - consumed + d.harvest_stored_j).epsilon(1e-12));
        CHECK(d.e_after_j <= p.e_max_j);
        CHECK(d.e_after_j >= 0.0);
        CHECK(d.harvest_stored_j <= d.harvest_available_j + 1e-12);
        CHECK(d.harvest_stored_j >= 0.0);
        e = d.e_after_j;
    }
}

TEST_CASE("battery update rejects plans the scheduler must never admit") {
    PowerParams p;
    CHECK_THROWS_AS(apply_energy(100.0, 200.0, 0.0, p), std::logic_error);
    CHECK_THROWS_AS(apply_energy(100.0, -1.0, 0.0, p), std::logic_error);
}
