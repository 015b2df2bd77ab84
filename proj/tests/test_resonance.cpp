// Resonance-matching tests: splitting evaluation, bracketed root refinement,
// the full field scan, projection-change classification, and peak clustering.
// Reference numbers were frozen from an independent dense-grid bisection
// implementation (NumPy eigensolver, |f| <= 1e-9 MHz), and closed forms are
// used wherever the electron-only model admits them.
#include "catch_amalgamated.hpp"

#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "nvp1/resonance.hpp"

using namespace nvp1;
using Catch::Approx;

namespace {

// Analytic crossing of the electron-only models: D - ge*B = ge*B.
constexpr double bare_crossing_mt = 51.204281891168606;

MatchOptions electron_only_options() {
    MatchOptions opt;
    opt.nv_electron_only = true;
    opt.p1_electron_only = true;
    return opt;
}

SpinSystemParams stripped(SpinSystemParams p) {
    p.A_par = 0.0;
    p.A_perp = 0.0;
    p.Q = 0.0;
    p.zero_nuclear_zeeman = true;
    return p;
}

std::tuple<int, double, double, double> identity(const ResonanceMatch& m) {
    return {m.orientation.axis_index, m.nv_line.to_label.m_i, m.p1_line.from_label.m_i,
            m.p1_line.to_label.m_i};
}

}  // namespace

TEST_CASE("splitting reproduces electron-only closed forms") {
    const Orientation on = Orientation::on_axis();
    // NV 0 -> -1 at 40 mT: D - ge*B = 2870 - 1121.
    CHECK(splitting(System::NV, StateLabel{0.0, 0.0}, StateLabel{-1.0, 0.0}, 40.0, on, true) ==
          Approx(1749.0).margin(1e-9));
    // P1 -1/2 -> +1/2 at 40 mT: ge*B.
    CHECK(splitting(System::P1, StateLabel{-0.5, 0.0}, StateLabel{0.5, 0.0}, 40.0, on, true) ==
          Approx(1121.0).margin(1e-9));
    // At the analytic crossing both halves equal D/2.
    const double f_nv =
        splitting(System::NV, StateLabel{0.0, 0.0}, StateLabel{-1.0, 0.0}, bare_crossing_mt, on, true);
    const double f_p1 =
        splitting(System::P1, StateLabel{-0.5, 0.0}, StateLabel{0.5, 0.0}, bare_crossing_mt, on, true);
    CHECK(f_nv == Approx(1435.0).margin(1e-9));
    CHECK(f_nv - f_p1 == Approx(0.0).margin(1e-9));
}

TEST_CASE("splitting of the full NV model at zero field") {
    const double f = splitting(System::NV, StateLabel{0.0, 0.0}, StateLabel{-1.0, 0.0}, 0.0,
                               Orientation::on_axis());
    CHECK(f == Approx(2870.00762081212).margin(1e-6));
    CHECK(std::abs(f - 2870.0) < 6.0);
}

TEST_CASE("splitting rejects absent labels and bad fields") {
    const Orientation on = Orientation::on_axis();
    CHECK_THROWS_AS(splitting(System::NV, StateLabel{0.0, 2.0}, StateLabel{-1.0, 0.0}, 51.2, on),
                    std::invalid_argument);
    CHECK_THROWS_AS(splitting(System::P1, StateLabel{-0.5, 0.0}, StateLabel{1.5, 0.0}, 51.2, on),
                    std::invalid_argument);
    CHECK_THROWS_AS(splitting(System::NV, StateLabel{0.0, 0.0}, StateLabel{-1.0, 0.0}, -1.0, on),
                    std::invalid_argument);
}

TEST_CASE("splitting agrees with the transition tables line by line") {
    for (const Orientation& o : {Orientation::on_axis(), Orientation::off_axis()}) {
        for (const auto& l : transition_table(System::NV, 51.2, o, true))
            CHECK(splitting(System::NV, l.from_label, l.to_label, 51.2, o) ==
                  Approx(l.frequency_mhz).margin(1e-9));
        for (const auto& l : transition_table(System::P1, 51.2, o))
            CHECK(splitting(System::P1, l.from_label, l.to_label, 51.2, o) ==
                  Approx(l.frequency_mhz).margin(1e-9));
    }
}

TEST_CASE("match_resonance finds the electron-only crossing at the analytic field") {
    const auto m = match_resonance({StateLabel{0.0, 0.0}, StateLabel{-1.0, 0.0}},
                                   {StateLabel{-0.5, 0.0}, StateLabel{0.5, 0.0}}, 40.0, 60.0,
                                   Orientation::on_axis(), electron_only_options());
    REQUIRE(m.has_value());
    CHECK(m->b_star_mt == Approx(bare_crossing_mt).margin(5e-5));
    CHECK(m->b_star_mt >= 40.0);
    CHECK(m->b_star_mt <= 60.0);
    CHECK(std::abs(m->nv_line.frequency_mhz - m->p1_line.frequency_mhz) <= 1e-3);
    CHECK(m->nv_line.frequency_mhz ==
          Approx(constants::nv_zero_field_splitting_mhz - constants::gamma_e_mhz_per_mt * m->b_star_mt).margin(1e-9));
    CHECK(m->delta_m == 0);
    CHECK(m->flagged);
}

TEST_CASE("match_resonance returns nothing for a bracket without a crossing") {
    const auto m = match_resonance({StateLabel{0.0, 0.0}, StateLabel{-1.0, 0.0}},
                                   {StateLabel{-0.5, 0.0}, StateLabel{0.5, 0.0}}, 10.0, 20.0,
                                   Orientation::on_axis(), electron_only_options());
    CHECK_FALSE(m.has_value());
    CHECK_THROWS_AS(match_resonance({StateLabel{0.0, 0.0}, StateLabel{-1.0, 0.0}},
                                    {StateLabel{-0.5, 0.0}, StateLabel{0.5, 0.0}}, 20.0, 10.0,
                                    Orientation::on_axis(), electron_only_options()),
                    std::invalid_argument);
}

TEST_CASE("match_resonance refines full-model pairs to the frozen roots") {
    // Widest pair of the default scan: NV (0,+1)->(-1,-1) against the P1
    // (+1 -> +1) and (-1 -> -1) electron flips.
    const Orientation on = Orientation::on_axis();
    const auto lo = match_resonance({StateLabel{0.0, 1.0}, StateLabel{-1.0, -1.0}},
                                    {StateLabel{-0.5, 1.0}, StateLabel{0.5, 1.0}}, 45.0, 57.0, on);
    REQUIRE(lo.has_value());
    CHECK(lo->b_star_mt == Approx(49.096976512684).margin(5e-5));
    CHECK(lo->delta_m == 2);
    CHECK(lo->flagged);

    const auto hi = match_resonance({StateLabel{0.0, 1.0}, StateLabel{-1.0, 0.0}},
                                    {StateLabel{-0.5, -1.0}, StateLabel{0.5, -1.0}}, 45.0, 57.0, on);
    REQUIRE(hi.has_value());
    CHECK(hi->b_star_mt == Approx(53.288233329618).margin(5e-5));
    CHECK(hi->delta_m == 1);
    CHECK(hi->flagged);
}

TEST_CASE("nv_nv_matches finds the single oriented-ensemble crossing") {
    const auto matches = nv_nv_matches(55.0, 65.0);
    REQUIRE(matches.size() == 1);
    const auto& m = matches.front();
    CHECK(m.b_star_mt == Approx(59.125611867055).margin(1e-4));
    CHECK(m.nv_line.frequency_mhz ==
          Approx(constants::nv_zero_field_splitting_mhz - constants::gamma_e_mhz_per_mt * m.b_star_mt).margin(1e-9));
    CHECK(std::abs(m.nv_line.frequency_mhz - m.p1_line.frequency_mhz) <= 1e-3);
    CHECK(m.p1_line.system == System::NV);
    CHECK(m.p1_line.orientation.is_off_axis());
    CHECK_FALSE(m.nv_line.orientation.is_off_axis());

    CHECK(nv_nv_matches(10.0, 20.0).empty());
    CHECK_THROWS_AS(nv_nv_matches(20.0, 10.0), std::invalid_argument);
}

TEST_CASE("resonance_table default scan reproduces the frozen match set") {
    const auto matches = resonance_table();
    REQUIRE(matches.size() == 54);

    std::size_t n_on = 0, n_off = 0, n_flagged = 0;
    for (const auto& m : matches) {
        if (m.orientation.is_off_axis())
            ++n_off;
        else
            ++n_on;
        if (m.flagged) ++n_flagged;
        CHECK(m.b_star_mt >= 45.0);
        CHECK(m.b_star_mt <= 57.0);
        // Root residual straight from the definition.
        const double r =
            splitting(System::NV, m.nv_line.from_label, m.nv_line.to_label, m.b_star_mt,
                      Orientation::on_axis()) -
            splitting(System::P1, m.p1_line.from_label, m.p1_line.to_label, m.b_star_mt, m.orientation);
        CHECK(std::abs(r) <= 1e-3);
        // Classification is symmetric under swapping the partners.
        ResonanceMatch swapped = m;
        swapped.nv_line = m.p1_line;
        swapped.p1_line = m.nv_line;
        CHECK(classify_delta_m(swapped) == m.delta_m);
        CHECK(m.flagged == (m.delta_m <= 2));
    }
    CHECK(n_on == 27);
    CHECK(n_off == 27);
    CHECK(n_flagged == 46);

    for (std::size_t i = 1; i < matches.size(); ++i)
        CHECK(matches[i - 1].b_star_mt <= matches[i].b_star_mt);

    CHECK(matches.front().b_star_mt == Approx(49.096976512684).margin(5e-5));
    CHECK(matches.back().b_star_mt == Approx(53.288233329618).margin(5e-5));
    CHECK(identity(matches.front()) == std::tuple<int, double, double, double>{0, -1.0, 1.0, 1.0});
    CHECK(identity(matches.back()) == std::tuple<int, double, double, double>{0, 0.0, -1.0, -1.0});

    const auto& med = matches[27];
    CHECK(med.b_star_mt == Approx(51.174373790627).margin(5e-5));
    CHECK(med.orientation.is_off_axis());
    CHECK(med.nv_line.to_label == StateLabel{-1.0, 0.0});
    CHECK(med.p1_line.from_label.m_i == -1.0);
    CHECK(med.p1_line.to_label.m_i == 1.0);
    CHECK(med.delta_m == 1);
}

TEST_CASE("resonance_table roots are stable under a halved grid step") {
    auto key_map = [](const std::vector<ResonanceMatch>& ms) {
        std::map<std::tuple<int, double, double, double>, double> out;
        for (const auto& m : ms) out[identity(m)] = m.b_star_mt;
        return out;
    };
    const auto coarse = key_map(resonance_table());
    ResonanceTableConfig fine_cfg;
    fine_cfg.grid_step_mt = 0.0025;
    const auto fine = key_map(resonance_table(fine_cfg));
    REQUIRE(coarse.size() == fine.size());
    for (const auto& [key, b] : coarse) {
        REQUIRE(fine.count(key) == 1);
        CHECK(std::abs(fine.at(key) - b) <= 1e-3);
    }
}

TEST_CASE("resonance_table with stripped couplings collapses onto the bare crossing") {
    ResonanceTableConfig cfg;
    cfg.nv_params = stripped(SpinSystemParams::nv_defaults());
    cfg.p1_params = stripped(SpinSystemParams::p1_defaults());
    const auto matches = resonance_table(cfg);
    REQUIRE(matches.size() == 54);
    for (const auto& m : matches) CHECK(m.b_star_mt == Approx(bare_crossing_mt).margin(1e-4));
    const auto cs = cluster_peaks(matches);
    CHECK(cs.clusters.size() == 1);
}

TEST_CASE("resonance_table validates its configuration") {
    ResonanceTableConfig cfg;
    cfg.grid_step_mt = 0.0;
    CHECK_THROWS_AS(resonance_table(cfg), std::invalid_argument);
    cfg = ResonanceTableConfig{};
    cfg.b_max_mt = cfg.b_min_mt;
    CHECK_THROWS_AS(resonance_table(cfg), std::invalid_argument);
    cfg = ResonanceTableConfig{};
    cfg.nv_initial = StateLabel{-1.0, 0.0};
    CHECK_THROWS_AS(resonance_table(cfg), std::invalid_argument);
}

TEST_CASE("cluster_peaks groups the default matches into the frozen families") {
    const auto cs = cluster_peaks(resonance_table());
    REQUIRE(cs.clusters.size() == 7);
    CHECK_FALSE(cs.lettered);
    CHECK(cs.warning.find('9') != std::string::npos);

    const double mean[7] = {49.162071038, 49.647567745, 50.270980405, 51.170063641,
                            52.053188707, 52.705985701, 53.229155135};
    const std::size_t members[7] = {3, 3, 12, 18, 12, 3, 3};
    const int mult[7] = {3, 9, 24, 36, 24, 9, 3};
    const std::size_t flagged[7] = {3, 3, 10, 14, 10, 3, 3};
    for (std::size_t c = 0; c < 7; ++c) {
        const auto& cl = cs.clusters[c];
        CHECK(cl.mean_b_mt == Approx(mean[c]).margin(2e-4));
        CHECK(cl.members.size() == members[c]);
        CHECK(cl.multiplicity == mult[c]);
        char expect_id[16];
        std::snprintf(expect_id, sizeof expect_id, "peak-%02zu", c + 1);
        CHECK(cl.peak_id == expect_id);
        std::size_t fl = 0;
        for (const auto& m : cl.members) {
            CHECK(m.peak_id == cl.peak_id);
            if (m.flagged) ++fl;
            CHECK(std::abs(m.b_star_mt - cl.mean_b_mt) <= 0.31);  // widest family half-span
        }
        CHECK(fl == flagged[c]);
    }

    // The central family is the strongest and mixes both orientations.
    const auto& central = cs.clusters[3];
    for (std::size_t c = 0; c < 7; ++c)
        if (c != 3) CHECK(cs.clusters[c].multiplicity < central.multiplicity);
    bool has_on = false, has_off = false;
    for (const auto& m : central.members) (m.orientation.is_off_axis() ? has_off : has_on) = true;
    CHECK(has_on);
    CHECK(has_off);

    // Side families pair symmetrically about the central mean.
    const double dev[3] = {0.051099, 0.013426, 0.015958};
    for (std::size_t k = 0; k < 3; ++k) {
        const double d =
            std::abs(cs.clusters[k].mean_b_mt + cs.clusters[6 - k].mean_b_mt - 2.0 * central.mean_b_mt);
        CHECK(d == Approx(dev[k]).margin(1e-3));
        CHECK(d <= 0.1);
    }
}

TEST_CASE("cluster_peaks limit behaviour") {
    const auto matches = resonance_table();
    const auto tight = cluster_peaks(matches, 0.0);
    CHECK(tight.clusters.size() == matches.size());
    for (const auto& cl : tight.clusters) CHECK(cl.members.size() == 1);

    const auto loose = cluster_peaks(matches, 1e9);
    REQUIRE(loose.clusters.size() == 1);
    CHECK(loose.clusters.front().multiplicity == 27 + 3 * 27);

    CHECK_THROWS_AS(cluster_peaks(matches, -0.1), std::invalid_argument);
    const auto none = cluster_peaks(std::vector<ResonanceMatch>{});
    CHECK(none.clusters.empty());
    CHECK_FALSE(none.warning.empty());
}
