#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <complex>

using namespace gridse;
using Catch::Approx;

TEST_CASE("bundled ieee14 parses from matpower text") {
    const auto model = test::load_ieee14();
    REQUIRE(model.bus_count() == 14);
    REQUIRE(model.branch_count() == 20);
    REQUIRE(model.buses[static_cast<size_t>(model.slack_index)].id == 1);
    REQUIRE(model.base_mva == Approx(100.0));
    CHECK(validate_network(model).empty());

    // net demand folds scheduled generation: bus 2 carries 21.7 MW load, 40 MW gen
    const auto& bus2 = model.buses[model.id_to_index.at(2)];
    CHECK(bus2.load_p == Approx(-0.183));
    CHECK(bus2.kind == BusKind::pv);
    // bus 9 shunt capacitor
    CHECK(model.buses[model.id_to_index.at(9)].shunt_b == Approx(0.19));
}

TEST_CASE("native csv form matches the matpower form") {
    const auto a = test::load_ieee14();
    const auto b = test::load_ieee14_csv();
    REQUIRE(a.bus_count() == b.bus_count());
    REQUIRE(a.branch_count() == b.branch_count());
    for (int i = 0; i < a.branch_count(); ++i) {
        CHECK(a.params[static_cast<size_t>(i)].series_g ==
              Approx(b.params[static_cast<size_t>(i)].series_g).margin(1e-12));
        CHECK(a.params[static_cast<size_t>(i)].series_b ==
              Approx(b.params[static_cast<size_t>(i)].series_b).margin(1e-12));
    }
    for (int i = 0; i < a.bus_count(); ++i) {
        CHECK(a.buses[static_cast<size_t>(i)].load_p ==
              Approx(b.buses[static_cast<size_t>(i)].load_p).margin(1e-12));
        CHECK(a.buses[static_cast<size_t>(i)].base_vm ==
              Approx(b.buses[static_cast<size_t>(i)].base_vm).margin(1e-12));
    }
}

TEST_CASE("degenerate case text raises MalformedCase") {
    CHECK_THROWS_AS(parse_case("", CaseFormat::matpower), MalformedCase);
    CHECK_THROWS_AS(parse_case("   \n", CaseFormat::native_csv), MalformedCase);
    CHECK_THROWS_AS(parse_case("mpc.baseMVA = 100;\n", CaseFormat::matpower),
                    MalformedCase);
    CHECK_THROWS_AS(parse_case("id,kind,vm,va,pd,qd,gs,bs\n1,duke,1,0,0,0,0,0\n"
                               "from,to,r,x,b\n",
                               CaseFormat::native_csv),
                    MalformedCase);
}

TEST_CASE("hand written two bus case derives the series admittance") {
    const std::string text =
        "id,kind,vm,va,pd,qd,gs,bs\n"
        "1,slack,1,0,0,0,0,0\n"
        "2,pq,1,0,0.5,0.1,0,0\n"
        "from,to,r,x,b\n"
        "1,2,0,0.1,0\n";
    const auto model = parse_case(text, CaseFormat::native_csv);
    REQUIRE(model.branch_count() == 1);
    CHECK(model.params[0].series_g == Approx(0.0).margin(1e-15));
    CHECK(model.params[0].series_b == Approx(-10.0));
}

TEST_CASE("branch admittance decomposition") {
    BranchRecord br;
    br.from_bus = 1;
    br.to_bus = 2;

    SECTION("pure reactance") {
        br.r = 0.0;
        br.x = 0.1;
        const auto p = branch_admittance(br);
        CHECK(p.series_g == Approx(0.0).margin(1e-15));
        CHECK(p.series_b == Approx(-10.0));
        CHECK(p.from_b0 == Approx(0.0).margin(1e-15));
        CHECK(p.to_b0 == Approx(0.0).margin(1e-15));
    }
    SECTION("pure resistance") {
        br.r = 0.01;
        br.x = 0.0;
        const auto p = branch_admittance(br);
        CHECK(p.series_g == Approx(100.0));
        CHECK(p.series_b == Approx(0.0).margin(1e-15));
    }
    SECTION("charging splits between the ends") {
        br.r = 0.01;
        br.x = 0.1;
        br.charging_b = 0.06;
        const auto p = branch_admittance(br);
        CHECK(p.from_b0 == Approx(0.03));
        CHECK(p.to_b0 == Approx(0.03));
        CHECK(p.from_g0 == Approx(0.0).margin(1e-15));
    }
    SECTION("zero impedance throws") {
        br.r = 0.0;
        br.x = 0.0;
        CHECK_THROWS_AS(branch_admittance(br), ZeroImpedance);
    }
}

TEST_CASE("admittance inversion identity holds on the ieee14 branches") {
    const auto model = test::load_ieee14();
    for (int k = 0; k < model.branch_count(); ++k) {
        const auto& br = model.branches[static_cast<size_t>(k)];
        const auto& p = model.params[static_cast<size_t>(k)];
        CHECK(p.series_g * p.series_g + p.series_b * p.series_b > 0.0);
        // series admittance times tap equals 1/(r+jx)
        const std::complex<double> prod =
            std::complex<double>(p.series_g, p.series_b) * br.tap *
            std::complex<double>(br.r, br.x);
        CHECK(std::abs(prod - 1.0) < 1e-12);
    }
}

TEST_CASE("validate_network reports structural defects") {
    auto model = test::two_bus_model(0.0, 0.1);

    SECTION("clean model has no diagnostics") {
        CHECK(validate_network(model).empty());
    }
    SECTION("two slack buses") {
        model.buses[1].kind = BusKind::slack;
        const auto diags = validate_network(model);
        REQUIRE(diags.size() == 1);
        CHECK(diags[0].code == DiagnosticCode::MultipleSlack);
    }
    SECTION("isolated bus") {
        BusRecord extra;
        extra.id = 3;
        extra.kind = BusKind::pq;
        model.buses.push_back(extra);
        bool found = false;
        for (const auto& d : validate_network(model))
            found |= d.code == DiagnosticCode::Disconnected;
        CHECK(found);
    }
    SECTION("dangling branch endpoint") {
        model.branches[0].to_bus = 99;
        bool found = false;
        for (const auto& d : validate_network(model))
            found |= d.code == DiagnosticCode::DanglingBranch;
        CHECK(found);
        CHECK_THROWS_AS(parse_case(to_native_csv(model), CaseFormat::native_csv),
                        InconsistentTopology);
    }
    SECTION("missing slack") {
        model.buses[0].kind = BusKind::pq;
        bool found = false;
        for (const auto& d : validate_network(model))
            found |= d.code == DiagnosticCode::NoSlack;
        CHECK(found);
        CHECK_THROWS_AS(parse_case(to_native_csv(model), CaseFormat::native_csv),
                        NoSlackBus);
    }
    SECTION("duplicate ids throw at parse") {
        const std::string text =
            "id,kind,vm,va,pd,qd,gs,bs\n"
            "1,slack,1,0,0,0,0,0\n"
            "1,pq,1,0,0,0,0,0\n"
            "from,to,r,x,b\n"
            "1,1,0,0.1,0\n";
        CHECK_THROWS_AS(parse_case(text, CaseFormat::native_csv), DuplicateBusId);
    }
}

TEST_CASE("serialize and reparse is structurally exact") {
    const auto model = test::load_ieee14();
    const auto again = parse_case(to_native_csv(model), CaseFormat::native_csv);
    REQUIRE(again.bus_count() == model.bus_count());
    REQUIRE(again.branch_count() == model.branch_count());
    for (int i = 0; i < model.bus_count(); ++i) {
        const auto& a = model.buses[static_cast<size_t>(i)];
        const auto& b = again.buses[static_cast<size_t>(i)];
        CHECK(a.id == b.id);
        CHECK(a.kind == b.kind);
        CHECK(a.base_vm == b.base_vm);
        CHECK(a.base_va == b.base_va);
        CHECK(a.load_p == b.load_p);
        CHECK(a.load_q == b.load_q);
        CHECK(a.shunt_g == b.shunt_g);
        CHECK(a.shunt_b == b.shunt_b);
    }
    for (int i = 0; i < model.branch_count(); ++i) {
        const auto& a = model.branches[static_cast<size_t>(i)];
        const auto& b = again.branches[static_cast<size_t>(i)];
        CHECK(a.from_bus == b.from_bus);
        CHECK(a.to_bus == b.to_bus);
        CHECK(a.r == b.r);
        CHECK(a.x == b.x);
        CHECK(a.charging_b == b.charging_b);
        CHECK(a.tap == b.tap);
    }
    // and the serialized text itself is stable
    CHECK(to_native_csv(again) == to_native_csv(model));
}
