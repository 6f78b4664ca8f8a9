#include <cmath>
#include <sstream>

#include "apex/heat.hpp"
#include "apex/sorted_index.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace apex;

namespace {

KnowledgeGraph path_abc() {
    return KnowledgeGraph::from_parts({"A", "B", "C"}, {"r"}, {{0, 0, 1}, {1, 0, 2}});
}

DiffusionParams params(double alpha, int d, double gamma, double eps = 0.0) {
    DiffusionParams p;
    p.alpha = alpha;
    p.d = d;
    p.gamma = gamma;
    p.eps_ths = eps;
    return p;
}

}  // namespace

TEST_CASE("diffusion on a path: frozen two-hop values") {
    KnowledgeGraph kg = path_abc();
    SparseHeat q{{0, 1.0}};
    SparseHeat e = diffuse(kg, q, 0.5, 2);
    REQUIRE(e.size() == 3);
    CHECK(e.at(0) == 1.25);
    CHECK(e.at(1) == 0.5);
    CHECK(e.at(2) == 0.25);
}

TEST_CASE("diffusion depth zero returns the input") {
    KnowledgeGraph kg = path_abc();
    SparseHeat q{{1, 2.5}};
    SparseHeat e = diffuse(kg, q, 0.9, 0);
    CHECK(e.size() == 1);
    CHECK(e.at(1) == 2.5);
}

TEST_CASE("diffusion support stays within d hops") {
    KnowledgeGraph kg = path_abc();
    SparseHeat e = diffuse(kg, SparseHeat{{0, 1.0}}, 0.5, 1);
    CHECK(e.size() == 2);
    CHECK(e.count(2) == 0);
}

TEST_CASE("diffusion matches the dense oracle on random graphs") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        KnowledgeGraph kg = oracle::rand_kg(10 + 5 * seed, 3, 20 + 10 * seed, seed);
        apex::Rng rng(seed * 31);
        SparseHeat q;
        for (int i = 0; i < 4; ++i) {
            q[static_cast<EntityId>(rng.below(kg.n_entities()))] += 0.25 + rng.unit();
        }
        for (double alpha : {0.0, 0.2, 0.45}) {
            for (int d : {0, 1, 2, 3}) {
                SparseHeat got = diffuse(kg, q, alpha, d);
                Eigen::VectorXd want = oracle::diffuse_dense(kg, q, alpha, d);
                for (Eigen::Index i = 0; i < want.size(); ++i) {
                    const double g = got.count(static_cast<EntityId>(i))
                                         ? got.at(static_cast<EntityId>(i))
                                         : 0.0;
                    CHECK(oracle::rel_close(g, want[i], 1e-12));
                }
            }
        }
    }
}

TEST_CASE("diffusion rejects bad arguments") {
    KnowledgeGraph kg = path_abc();
    CHECK_THROWS_AS(diffuse(kg, SparseHeat{{7, 1.0}}, 0.3, 1), std::out_of_range);
    CHECK_THROWS_AS(diffuse(kg, SparseHeat{{0, 1.0}}, -0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(diffuse(kg, SparseHeat{{0, 1.0}}, 0.3, -1), std::invalid_argument);
}

TEST_CASE("series limit matches a dense solve when contracting") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        KnowledgeGraph kg = oracle::rand_kg(25, 2, 60, seed);
        std::int32_t max_deg = 0;
        for (std::size_t e = 0; e < kg.n_entities(); ++e) {
            max_deg = std::max(max_deg, kg.degree(static_cast<EntityId>(e)));
        }
        const double alpha = 0.7 / static_cast<double>(std::max(1, max_deg));
        SparseHeat q{{0, 1.0}, {3, 0.5}};
        SparseHeat got = diffuse_closed_form(kg, q, alpha);
        Eigen::VectorXd want = oracle::closed_form_dense(kg, q, alpha);
        for (Eigen::Index i = 0; i < want.size(); ++i) {
            const double g =
                got.count(static_cast<EntityId>(i)) ? got.at(static_cast<EntityId>(i)) : 0.0;
            CHECK(oracle::rel_close(g, want[i], 1e-8));
        }
    }
}

TEST_CASE("series limit reports divergence") {
    // Complete-ish graph; alpha far above 1/spectral radius.
    KnowledgeGraph kg = oracle::rand_kg(12, 2, 120, 3);
    CHECK_THROWS_WITH_AS(diffuse_closed_form(kg, SparseHeat{{0, 1.0}}, 0.9),
                         "series divergent: diffusion does not contract", std::runtime_error);
}

TEST_CASE("advance: first step reproduces the two-query access vector exactly") {
    auto kg = KnowledgeGraph::from_parts(
        {"e0", "e1", "e2", "e3", "e4"}, {"r"},
        {{0, 0, 1}, {0, 0, 3}, {2, 0, 0}, {2, 0, 3}, {4, 0, 0}});
    HeatState state;
    std::vector<Query> batch{{0, 0, {1, 3}, 0}, {2, 0, {0, 3}, 0}};
    advance(state, kg, batch, params(0.3, 1, 0.5));

    CHECK(state.t == 0);
    REQUIRE(state.q_total.size() == 4);
    CHECK(state.q_total.at(0) == 1.5);
    CHECK(state.q_total.at(1) == 0.5);
    CHECK(state.q_total.at(2) == 1.0);
    CHECK(state.q_total.at(3) == 1.0);
    CHECK(state.q_total.count(4) == 0);
    CHECK(state.r.at(0) == 2.0);
}

TEST_CASE("advance validates timestamps") {
    KnowledgeGraph kg = path_abc();
    HeatState state;
    CHECK_THROWS_AS(advance(state, kg, {{0, 0, {1}, 5}}, params(0.3, 1, 0.5)),
                    std::runtime_error);
    advance(state, kg, {{0, 0, {1}, 0}}, params(0.3, 1, 0.5));
    CHECK_THROWS_AS(advance(state, kg, {{0, 0, {1}, 0}}, params(0.3, 1, 0.5)),
                    std::runtime_error);
    CHECK_NOTHROW(advance(state, kg, {{0, 0, {1}, 1}}, params(0.3, 1, 0.5)));
    CHECK(state.t == 1);
}

TEST_CASE("advance on empty batches decays everything uniformly") {
    KnowledgeGraph kg = path_abc();
    DiffusionParams p = params(0.5, 1, 0.5);
    HeatState state;
    advance(state, kg, {{0, 0, {1}, 0}}, p);
    const HeatState snapshot = state;

    ChangeSet cs = advance(state, kg, {}, p);
    CHECK(cs.empty());
    CHECK(state.t == 1);
    for (const auto& [k, v] : snapshot.q_total) CHECK(state.q_total.at(k) == v * 0.5);
    for (const auto& [k, v] : snapshot.e) CHECK(state.e.at(k) == v * 0.5);
    for (const auto& [k, v] : snapshot.r) CHECK(state.r.at(k) == v * 0.5);
    for (const auto& [k, v] : snapshot.h) CHECK(state.h.at(k) == v * 0.125);
}

TEST_CASE("triple heat of an untouched component decays by gamma cubed") {
    // Two components: query component 2 once, then keep querying component 1.
    auto kg = KnowledgeGraph::from_parts(
        {"a", "b", "x", "y"}, {"r", "s"},
        {{0, 0, 1}, {2, 1, 3}});
    DiffusionParams p = params(0.3, 1, 0.5);
    HeatState state;
    advance(state, kg, {{2, 1, {3}, 0}}, p);
    const double h0 = triple_heat(state, kg, 2, 1, 3);
    CHECK(h0 > 0.0);

    advance(state, kg, {{0, 0, {1}, 1}}, p);
    CHECK(triple_heat(state, kg, 2, 1, 3) == h0 * 0.125);
    advance(state, kg, {{0, 0, {1}, 2}}, p);
    CHECK(triple_heat(state, kg, 2, 1, 3) == h0 * 0.125 * 0.125);

    CHECK_THROWS_AS(triple_heat(state, kg, 0, 1, 1), std::invalid_argument);
    CHECK(triple_heat(state, kg, 0, 0, 1) > 0.0);
}

TEST_CASE("change sets are sorted, consistent, and free of no-ops") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        KnowledgeGraph kg = oracle::rand_kg(40, 4, 140, seed);
        QueryLog log = oracle::rand_log(kg, 25, seed * 7 + 1, true);
        DiffusionParams p = params(0.3, 1, 0.5, seed % 2 == 0 ? 0.0 : 1e-6);

        HeatState state;
        for (Timestamp t = 0; t < 25; ++t) {
            std::vector<Query> batch;
            for (const Query& q : log) {
                if (q.timestamp == t) batch.push_back(q);
            }
            auto before = state.h;
            const double g3 = p.gamma_cubed();
            ChangeSet cs = advance(state, kg, batch, p);

            for (std::size_t i = 1; i < cs.size(); ++i) CHECK(cs[i - 1].key < cs[i].key);
            for (const auto& c : cs) {
                auto it = before.find(c.key);
                if (c.old_value) {
                    REQUIRE(it != before.end());
                    CHECK(*c.old_value == it->second * g3);
                } else {
                    CHECK(it == before.end());
                }
                auto now = state.h.find(c.key);
                if (c.new_value) {
                    REQUIRE(now != state.h.end());
                    CHECK(*c.new_value == now->second);
                } else {
                    CHECK(now == state.h.end());
                }
                CHECK((c.old_value.has_value() || c.new_value.has_value()));
                if (c.old_value && c.new_value) CHECK(*c.old_value != *c.new_value);
            }
        }
    }
}

TEST_CASE("incremental state equals the scratch rebuild over random runs") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        KnowledgeGraph kg = oracle::rand_kg(30 + seed * 5, 3 + seed % 3, 100 + seed * 20, seed);
        QueryLog log = oracle::rand_log(kg, 40, seed * 13 + 5, true);
        const double gamma = (seed % 3 == 0) ? 1.0 : (seed % 3 == 1 ? 0.5 : 0.85);
        const double alpha = (seed % 2 == 0) ? 0.3 : 0.0;
        const int d = static_cast<int>(seed % 3);
        DiffusionParams p = params(alpha, d, gamma, 0.0);

        HeatState inc;
        for (Timestamp t = 0; t < 40; ++t) {
            std::vector<Query> batch;
            for (const Query& q : log) {
                if (q.timestamp == t) batch.push_back(q);
            }
            advance(inc, kg, batch, p);
        }
        HeatState scratch = recompute_scratch(kg, log, 39, p);

        std::string why;
        CHECK_MESSAGE(oracle::heat_close(inc.q_total, scratch.q_total, 1e-9, &why), "q: ", why);
        CHECK_MESSAGE(oracle::heat_close(inc.e, scratch.e, 1e-9, &why), "e: ", why);
        CHECK_MESSAGE(oracle::heat_close(inc.r, scratch.r, 1e-9, &why), "r: ", why);
        CHECK_MESSAGE(oracle::heat_close_map(inc.h, scratch.h, 1e-9, &why), "h: ", why);
        CHECK(inc.t == scratch.t);
    }
}

TEST_CASE("threshold elimination keeps every store clean") {
    KnowledgeGraph kg = oracle::rand_kg(40, 3, 120, 4);
    QueryLog log = oracle::rand_log(kg, 60, 17, false);
    DiffusionParams p = params(0.3, 1, 0.5, 1e-3);

    HeatState state;
    for (Timestamp t = 0; t < 60; ++t) {
        std::vector<Query> batch;
        for (const Query& q : log) {
            if (q.timestamp == t) batch.push_back(q);
        }
        advance(state, kg, batch, p);
        for (const auto& [k, v] : state.q_total) CHECK(v > p.eps_ths);
        for (const auto& [k, v] : state.e) CHECK(v > p.eps_ths);
        for (const auto& [k, v] : state.r) CHECK(v > p.eps_ths);
        for (const auto& [k, v] : state.h) CHECK(v > p.eps_ths);
    }
    // With heavy decay and a strong threshold the state must stay small.
    CHECK(state.h.size() < kg.n_triples());
}

TEST_CASE("entity-level advance equals its scratch rebuild") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        KnowledgeGraph kg = oracle::rand_kg(30 + seed * 4, 3, 90 + seed * 15, seed + 50);
        QueryLog log = oracle::rand_log(kg, 35, seed * 3 + 2, true);
        const double gamma = seed % 2 == 0 ? 0.6 : 1.0;
        DiffusionParams p = params(0.25, 1 + static_cast<int>(seed % 2), gamma, 0.0);

        EntityHeatState inc;
        for (Timestamp t = 0; t < 35; ++t) {
            std::vector<Query> batch;
            for (const Query& q : log) {
                if (q.timestamp == t) batch.push_back(q);
            }
            advance_entity(inc, kg, batch, p);
        }
        EntityHeatState scratch = recompute_scratch_entity(kg, log, 34, p);
        std::string why;
        CHECK_MESSAGE(oracle::heat_close(inc.q_total, scratch.q_total, 1e-9, &why), "q: ", why);
        CHECK_MESSAGE(oracle::heat_close(inc.e, scratch.e, 1e-9, &why), "e: ", why);
    }
}

TEST_CASE("index values track stored heat bit for bit under decay") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        KnowledgeGraph kg = oracle::rand_kg(35, 3, 110, seed + 9);
        QueryLog log = oracle::rand_log(kg, 30, seed + 70, true);
        DiffusionParams p = params(0.3, 1, 0.5, seed % 2 == 0 ? 0.0 : 1e-8);

        HeatState state;
        SortedHeatIndex<TripleId> hidx;
        EntityHeatState estate;
        SortedHeatIndex<EntityId> eidx;
        for (Timestamp t = 0; t < 30; ++t) {
            std::vector<Query> batch;
            for (const Query& q : log) {
                if (q.timestamp == t) batch.push_back(q);
            }
            hidx.scale_values(p.gamma_cubed());
            hidx.apply_changes(advance(state, kg, batch, p));
            eidx.scale_values(p.gamma);
            eidx.apply_changes(advance_entity(estate, kg, batch, p));

            REQUIRE(hidx.size() == state.h.size());
            for (const auto& entry : hidx.entries()) {
                CHECK(state.h.at(entry.key) == entry.value);
            }
            REQUIRE(eidx.size() == estate.e.size());
            for (const auto& entry : eidx.entries()) {
                CHECK(estate.e.at(entry.key) == entry.value);
            }
        }
    }
}

TEST_CASE("snapshots round-trip exactly") {
    KnowledgeGraph kg = oracle::rand_kg(30, 3, 90, 21);
    QueryLog log = oracle::rand_log(kg, 12, 33, false);
    DiffusionParams p = params(0.3, 1, 0.7, 1e-9);
    HeatState state;
    for (Timestamp t = 0; t < 12; ++t) {
        std::vector<Query> batch;
        for (const Query& q : log) {
            if (q.timestamp == t) batch.push_back(q);
        }
        advance(state, kg, batch, p);
    }

    std::ostringstream out;
    write_snapshot(out, state);
    std::istringstream in(out.str());
    HeatState back = read_snapshot(in);

    CHECK(back.t == state.t);
    CHECK(back.q_total == state.q_total);
    CHECK(back.e == state.e);
    CHECK(back.r == state.r);
    CHECK(back.h == state.h);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(params(1.0, 1, 0.5).validate(), std::invalid_argument);
    CHECK_THROWS_AS(params(-0.1, 1, 0.5).validate(), std::invalid_argument);
    CHECK_THROWS_AS(params(0.3, -1, 0.5).validate(), std::invalid_argument);
    CHECK_THROWS_AS(params(0.3, 1, 0.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(params(0.3, 1, 1.5).validate(), std::invalid_argument);
    CHECK_THROWS_AS(params(0.3, 1, 0.5, -1.0).validate(), std::invalid_argument);
    CHECK_NOTHROW(params(0.0, 0, 1.0).validate());
    CHECK(params(0.5, 1, 0.5).gamma_cubed() == 0.125);
}
