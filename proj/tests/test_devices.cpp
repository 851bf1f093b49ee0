#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mgrid/devices.hpp"
#include "mgrid/rng.hpp"

using namespace mgrid;

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("pv_power matches the irradiance-proportional model") {
    PvParams pv;
    pv.rated_kw = 100.0;
    pv.stc_irradiance = 1.0;

    pv.derating = 0.9;
    CHECK(pv_power(pv, 0.0) == 0.0);
    CHECK_THAT(pv_power(pv, 0.75), WithinRel(67.5, 1e-12));  // 100 * 0.75 * 0.9

    pv.derating = 1.0;
    CHECK_THAT(pv_power(pv, 1.0), WithinRel(100.0, 1e-12));

    CHECK_THROWS_AS(pv_power(pv, -0.1), std::invalid_argument);
}

TEST_CASE("pv_power is linear in irradiance") {
    Rng rng(101);
    for (int i = 0; i < 200; ++i) {
        PvParams pv;
        pv.rated_kw = rng.uniform(1.0, 500.0);
        pv.derating = rng.uniform(0.1, 1.0);
        pv.stc_irradiance = rng.uniform(0.5, 1.5);
        pv.validate();
        const double g = rng.uniform(0.0, 0.6);
        CHECK_THAT(pv_power(pv, 2.0 * g), WithinAbs(2.0 * pv_power(pv, g), 1e-9));
    }
}

TEST_CASE("wind_power follows the cubic curve between cut-in and cut-out") {
    WindParams w;
    w.air_density = 1.225;
    w.swept_area = 200.0;
    w.power_coeff = 0.35;
    w.rated_kw = 50.0;
    w.cut_in_ms = 3.0;
    w.cut_out_ms = 25.0;

    CHECK(wind_power(w, 0.0) == 0.0);
    CHECK(wind_power(w, 2.999) == 0.0);
    // 0.5 * 1.225 * 200 * 0.35 * 8^3 / 1000
    CHECK_THAT(wind_power(w, 8.0), WithinRel(21.952, 1e-12));
    CHECK(wind_power(w, 30.0) == 0.0);
    CHECK(wind_power(w, 25.0) == 0.0);  // shutdown at exactly cut-out
    CHECK(wind_power(w, 20.0) == 50.0); // rated cap binds
    CHECK_THROWS_AS(wind_power(w, -1.0), std::invalid_argument);
}

TEST_CASE("wind_power is monotone on [cut_in, cut_out) and cubic below the cap") {
    Rng rng(102);
    for (int i = 0; i < 200; ++i) {
        WindParams w;
        w.air_density = rng.uniform(1.0, 1.4);
        w.swept_area = rng.uniform(10.0, 500.0);
        w.power_coeff = rng.uniform(0.1, 0.593);
        w.rated_kw = rng.uniform(5.0, 200.0);
        w.cut_in_ms = rng.uniform(2.0, 4.0);
        w.cut_out_ms = rng.uniform(20.0, 30.0);
        w.validate();

        const double v1 = rng.uniform(w.cut_in_ms, w.cut_out_ms - 0.01);
        const double v2 = rng.uniform(v1, w.cut_out_ms - 0.005);
        CHECK(wind_power(w, v1) <= wind_power(w, v2) + 1e-12);

        // exactly cubic wherever the rated cap is slack
        const double p1 = wind_power(w, v1);
        if (p1 < w.rated_kw) {
            const double expected = 0.5 * w.air_density * w.swept_area * w.power_coeff * v1 * v1 * v1 / 1000.0;
            CHECK_THAT(p1, WithinRel(expected, 1e-12));
        }
    }
}

TEST_CASE("diesel fuel model") {
    DieselParams d;
    d.rated_kw = 50.0;
    d.slope_l_per_kwh = 0.246;
    d.intercept_l_per_h_kw = 0.08415;
    d.fuel_price = 1.60;
    d.max_kw = 50.0;

    SECTION("idle generator burns nothing") {
        const auto r = diesel_fuel_and_cost(d, 0.0, 1.0);
        CHECK(r.fuel_l == 0.0);
        CHECK(r.cost == 0.0);
    }
    SECTION("affine fuel curve while running") {
        const auto r = diesel_fuel_and_cost(d, 30.0, 1.0);
        CHECK_THAT(r.fuel_l, WithinRel(11.5875, 1e-12));  // 0.246*30 + 0.08415*50
        CHECK_THAT(r.cost, WithinRel(18.54, 1e-12));
    }
    SECTION("capacity ceiling is enforced") {
        CHECK_THROWS_AS(diesel_fuel_and_cost(d, 50.1, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(diesel_fuel_and_cost(d, -1.0, 1.0), std::invalid_argument);
    }
    SECTION("fuel rate differences are slope times output differences") {
        Rng rng(103);
        for (int i = 0; i < 100; ++i) {
            const double a = rng.uniform(0.1, 50.0);
            const double b = rng.uniform(0.1, 50.0);
            const double ra = diesel_fuel_and_cost(d, a, 1.0).fuel_l;
            const double rb = diesel_fuel_and_cost(d, b, 1.0).fuel_l;
            CHECK_THAT(ra - rb, WithinAbs(d.slope_l_per_kwh * (a - b), 1e-9));
        }
    }
}

TEST_CASE("battery_apply respects limits and the efficiency-split SOC law") {
    BatteryParams b;
    b.capacity_kwh = 200.0;
    b.soc_min = 0.1;
    b.soc_max = 0.9;
    b.p_max_kw = 50.0;
    b.eta_ch = 0.95;
    b.eta_dis = 0.95;
    b.deg_cost_per_kwh = 0.1;

    SECTION("charging") {
        const auto tr = battery_apply(b, 0.5, -20.0, 1.0);
        CHECK_THAT(tr.soc_after, WithinRel(0.595, 1e-12));  // 0.5 + 0.95*20/200
        CHECK_THAT(tr.throughput_kwh, WithinRel(20.0, 1e-12));
        CHECK(tr.p_dis_kw == 0.0);
        CHECK_THAT(tr.deg_cost, WithinRel(2.0, 1e-12));
    }
    SECTION("discharging") {
        const auto tr = battery_apply(b, 0.5, 10.0, 1.0);
        CHECK_THAT(tr.soc_after, WithinRel(0.5 - 10.0 / 0.95 / 200.0, 1e-12));
        CHECK(tr.p_ch_kw == 0.0);
    }
    SECTION("full battery cannot charge") {
        const auto tr = battery_apply(b, 0.9, -20.0, 1.0);
        CHECK(tr.p_ch_kw == 0.0);
        CHECK(tr.soc_after == 0.9);
    }
    SECTION("empty battery cannot discharge") {
        const auto tr = battery_apply(b, 0.1, 20.0, 1.0);
        CHECK(tr.p_dis_kw == 0.0);
        CHECK(tr.soc_after == 0.1);
    }
    SECTION("power limit clips the request") {
        const auto tr = battery_apply(b, 0.5, 500.0, 1.0);
        CHECK(tr.p_dis_kw == 50.0);
    }
    SECTION("corrupt SOC is rejected") {
        CHECK_THROWS_AS(battery_apply(b, 0.95, 0.0, 1.0), std::logic_error);
        CHECK_THROWS_AS(battery_apply(b, 0.05, 0.0, 1.0), std::logic_error);
    }
}

TEST_CASE("battery_apply invariants over random requests") {
    Rng rng(104);
    BatteryParams b;
    b.capacity_kwh = 120.0;
    b.soc_min = 0.15;
    b.soc_max = 0.85;
    b.p_max_kw = 40.0;
    b.eta_ch = 0.93;
    b.eta_dis = 0.97;

    double soc = 0.5;
    for (int i = 0; i < 20000; ++i) {
        const auto tr = battery_apply(b, soc, rng.uniform(-200.0, 200.0), 1.0);
        REQUIRE(tr.soc_after >= b.soc_min);
        REQUIRE(tr.soc_after <= b.soc_max);
        REQUIRE(tr.p_ch_kw >= 0.0);
        REQUIRE(tr.p_dis_kw >= 0.0);
        REQUIRE(tr.p_ch_kw <= b.p_max_kw + 1e-12);
        REQUIRE(tr.p_dis_kw <= b.p_max_kw + 1e-12);
        REQUIRE(tr.p_ch_kw * tr.p_dis_kw == 0.0);
        soc = tr.soc_after;
    }
}

TEST_CASE("full charge-discharge cycle realizes eta_ch * eta_dis") {
    BatteryParams b;
    b.capacity_kwh = 200.0;
    b.soc_min = 0.1;
    b.soc_max = 0.9;
    b.p_max_kw = 50.0;
    b.eta_ch = 0.95;
    b.eta_dis = 0.92;

    double soc = b.soc_min;
    double e_in = 0.0;
    while (soc < b.soc_max - 1e-12) {
        const auto tr = battery_apply(b, soc, -b.p_max_kw, 1.0);
        e_in += tr.p_ch_kw * 1.0;
        soc = tr.soc_after;
    }
    double e_out = 0.0;
    while (soc > b.soc_min + 1e-12) {
        const auto tr = battery_apply(b, soc, b.p_max_kw, 1.0);
        e_out += tr.p_dis_kw * 1.0;
        soc = tr.soc_after;
    }
    CHECK_THAT(e_out / e_in, WithinAbs(b.eta_ch * b.eta_dis, 1e-9));
}

TEST_CASE("stored_energy is DoD times capacity") {
    BatteryParams b;
    b.capacity_kwh = 200.0;
    b.dod = 0.8;
    CHECK_THAT(stored_energy(b), WithinRel(160.0, 1e-12));
    b.dod = 1.0;
    CHECK_THAT(stored_energy(b), WithinRel(200.0, 1e-12));
    b.capacity_kwh = 100.0;
    b.dod = 0.5;
    CHECK_THAT(stored_energy(b), WithinRel(50.0, 1e-12));
}

TEST_CASE("converter_limit scales by efficiency and caps at rating") {
    ConverterParams c;
    c.efficiency = 0.95;
    c.rated_kw = 100.0;
    CHECK_THAT(converter_limit(c, 40.0), WithinRel(38.0, 1e-12));
    CHECK(converter_limit(c, 0.0) == 0.0);
    c.rated_kw = 30.0;
    CHECK_THAT(converter_limit(c, 40.0), WithinRel(30.0, 1e-12));
    CHECK_THROWS_AS(converter_limit(c, -1.0), std::invalid_argument);
}

TEST_CASE("parameter validation rejects out-of-range values") {
    PvParams pv;
    pv.derating = 1.5;
    CHECK_THROWS_AS(pv.validate(), std::invalid_argument);

    WindParams w;
    w.power_coeff = 0.7;  // beyond the Betz limit
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);

    BatteryParams b;
    b.soc_min = 0.0;
    b.soc_max = 0.9;
    b.dod = 0.5;  // window 0.9 exceeds dod
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);

    DieselParams d;
    d.max_kw = d.rated_kw + 1.0;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);

    GridParams g;
    g.outage_prob = 1.5;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);

    DeviceFleet fleet;
    CHECK_NOTHROW(fleet.validate());
}
