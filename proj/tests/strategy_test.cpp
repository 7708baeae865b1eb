#include <gtest/gtest.h>

#include <array>

#include "support/oracles.hpp"
#include "surfsim/strategy.hpp"

using namespace surfsim;

namespace {

std::vector<ChannelObservation> observe(std::initializer_list<std::pair<double, std::size_t>> chans) {
    std::vector<ChannelObservation> out;
    for (const auto& [o, n] : chans) out.push_back({out.size(), o, n, 0.0});
    return out;
}

// Feeds fixed weights through the pluggable weight interface.
WeightFunction fixed(std::vector<double> w) {
    return [w = std::move(w)](const ChannelObservation& o, const SurfParams&) { return w.at(o.channel); };
}

} // namespace

TEST(SurfWeight, Examples) {
    SurfParams p;
    p.n_ref = 10;
    EXPECT_DOUBLE_EQ(surf_weight({0, 1.0, 5, 0.0}, p), 0.0);
    EXPECT_DOUBLE_EQ(surf_weight({0, 0.0, 0, 0.0}, p), 0.0);
    EXPECT_DOUBLE_EQ(surf_weight({0, 0.2, 5, 0.0}, p), 0.8 * 5 * 0.5);
    EXPECT_DOUBLE_EQ(surf_weight({0, 0.2, 10, 0.0}, p), 0.0);
    EXPECT_DOUBLE_EQ(surf_weight({0, 0.2, 14, 0.0}, p), 0.0);
}

TEST(SurfWeight, NonIncreasingInOccupancy) {
    SurfParams p;
    p.n_ref = 12;
    for (std::size_t n = 0; n < 15; ++n) {
        double prev = 1e9;
        for (int i = 0; i <= 20; ++i) {
            const double w = surf_weight({0, i / 20.0, n, 0.0}, p);
            EXPECT_GE(w, 0.0);
            EXPECT_LE(w, prev);
            prev = w;
        }
    }
}

TEST(ContentionUtility, PeaksAtHalfReference) {
    for (std::size_t n_ref : {4u, 10u, 36u}) {
        std::size_t arg = 0;
        for (std::size_t n = 0; n <= n_ref; ++n) {
            if (contention_utility(static_cast<double>(n), n_ref) > contention_utility(static_cast<double>(arg), n_ref)) arg = n;
        }
        EXPECT_EQ(arg, n_ref / 2);
        // Increasing up to the peak, decreasing after it.
        for (std::size_t n = 1; n <= n_ref; ++n) {
            const double a = contention_utility(static_cast<double>(n - 1), n_ref);
            const double b = contention_utility(static_cast<double>(n), n_ref);
            if (2 * n <= n_ref) {
                EXPECT_GT(b, a);
            } else if (2 * (n - 1) >= n_ref) {
                EXPECT_LT(b, a);
            }
        }
    }
}

TEST(DefaultNRef, ExpectedNeighbourhood) {
    EXPECT_EQ(default_n_ref(70, 0.25), 14u); // 70 * pi / 16 = 13.74
    EXPECT_EQ(default_n_ref(3, 0.1), 2u);
}

TEST(SelectChannelSurf, UniqueArgmax) {
    auto obs = observe({{0.0, 1}, {0.0, 1}, {0.0, 1}});
    auto rng = make_stream(1, streams::decision);
    EXPECT_EQ(select_channel_surf(obs, {}, rng, fixed({0.1, 2.0, 0.5})), 1u);
    EXPECT_DOUBLE_EQ(obs[1].weight, 2.0);
}

TEST(SelectChannelSurf, FallsBackToLeastOccupied) {
    auto obs = observe({{0.9, 0}, {0.3, 0}, {0.7, 0}});
    auto rng = make_stream(1, streams::decision);
    EXPECT_EQ(select_channel_surf(obs, {}, rng), 1u);
}

TEST(SelectChannelSurf, FullyOccupiedNeverAttractive) {
    auto obs = observe({{1.0, 3}, {0.5, 0}});
    auto rng = make_stream(1, streams::decision);
    EXPECT_EQ(select_channel_surf(obs, {}, rng, fixed({5.0, 0.0})), 1u);
    EXPECT_DOUBLE_EQ(obs[0].weight, 0.0);
}

TEST(SelectChannelSurf, ExactTieSplitsEvenly) {
    auto rng = make_stream(21, streams::decision);
    std::array<int, 3> hits{};
    const auto w = fixed({2.0, 2.0, 0.1});
    for (int i = 0; i < 10'000; ++i) {
        auto obs = observe({{0.0, 1}, {0.0, 1}, {0.0, 1}});
        ++hits[select_channel_surf(obs, {}, rng, w)];
    }
    EXPECT_EQ(hits[2], 0);
    EXPECT_NEAR(hits[0] / 10'000.0, 0.5, 0.02);
    EXPECT_NEAR(hits[1] / 10'000.0, 0.5, 0.02);
}

TEST(SelectChannelSurf, ScaleInvariant) {
    auto r1 = make_stream(4, streams::decision);
    auto r2 = make_stream(4, streams::decision);
    auto pick = make_stream(5, streams::decision);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> w(6);
        // Coarse values so exact ties occur often.
        for (auto& x : w) x = static_cast<double>(uniform_index(pick, 4)) * 0.7;
        const double k = 1e-3 + static_cast<double>(uniform_index(pick, 1000));
        std::vector<double> scaled(w);
        for (auto& x : scaled) x *= k;
        auto obs = observe({{0.1, 1}, {0.2, 1}, {0.3, 1}, {0.4, 1}, {0.5, 1}, {0.6, 1}});
        auto obs2 = obs;
        ASSERT_EQ(select_channel_surf(obs, {}, r1, fixed(w)), select_channel_surf(obs2, {}, r2, fixed(scaled)));
    }
}

TEST(SelectChannelSurf, EmptyObservations) {
    std::vector<ChannelObservation> none;
    auto rng = make_stream(1, streams::decision);
    EXPECT_THROW(select_channel_surf(none, {}, rng), ConfigError);
}

TEST(SurfParams, Validation) {
    SurfParams p;
    p.n_ref = 0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(SelectChannelRd, SingleChannel) {
    auto rng = make_stream(1, streams::decision);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(select_channel_rd(1, rng), 0u);
    EXPECT_THROW(select_channel_rd(0, rng), ConfigError);
}

TEST(SelectChannelRd, Uniform) {
    auto rng = make_stream(2, streams::decision);
    std::array<int, 5> hits{};
    for (int i = 0; i < 100'000; ++i) ++hits[select_channel_rd(5, rng)];
    for (int h : hits) EXPECT_NEAR(h / 100'000.0, 0.2, 0.01);
}

TEST(SelectChannelRd, Deterministic) {
    auto a = make_stream(3, streams::decision);
    auto b = make_stream(3, streams::decision);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(select_channel_rd(7, a), select_channel_rd(7, b));
}

TEST(ComputeEcsSb, Examples) {
    EXPECT_EQ(compute_ecs_sb({{0, {1, 2}}, {1, {2, 3}}, {2, {3}}}), (std::vector<ChannelId>{2, 3}));
    EXPECT_EQ(compute_ecs_sb({{0, {4}}}), std::vector<ChannelId>{4});
    EXPECT_EQ(compute_ecs_sb({{0, {0, 1}}, {1, {0}}, {2, {0, 2}}}), std::vector<ChannelId>{0});
    EXPECT_TRUE(compute_ecs_sb({}).empty());
    EXPECT_EQ(oracle::min_cover_size({{0, {1, 2}}, {1, {2, 3}}, {2, {3}}}, 4), 2u);
}

TEST(ComputeEcsSb, Uncoverable) {
    EXPECT_THROW(compute_ecs_sb({{0, {1}}, {1, {}}}), UncoverableNeighborError);
}

TEST(ComputeEcsSb, GreedyBoundAgainstBruteForce) {
    auto rng = make_stream(17, streams::decision);
    for (int trial = 0; trial < 3000; ++trial) {
        const std::size_t channels = 1 + uniform_index(rng, 6);
        const std::size_t neighbours = 1 + uniform_index(rng, 4);
        NeighborAvailability avail;
        for (NodeId n = 0; n < neighbours; ++n) {
            std::set<ChannelId> s;
            for (ChannelId c = 0; c < channels; ++c) {
                if (bernoulli(rng, 0.4)) s.insert(c);
            }
            if (s.empty()) s.insert(uniform_index(rng, channels));
            avail[n * 3] = s;
        }
        const auto ecs = compute_ecs_sb(avail);
        const std::set<ChannelId> chosen(ecs.begin(), ecs.end());
        ASSERT_EQ(chosen.size(), ecs.size());
        for (const auto& [n, s] : avail) {
            bool covered = false;
            for (ChannelId c : s) covered = covered || chosen.count(c);
            ASSERT_TRUE(covered);
        }
        ASSERT_LE(ecs.size(), std::min(neighbours, channels));
        const auto best = oracle::min_cover_size(avail, channels);
        ASSERT_LE(static_cast<double>(ecs.size()), static_cast<double>(best) * oracle::harmonic(4) + 1e-12);
        ASSERT_GE(ecs.size(), best);
    }
}

TEST(AssignCa, FullSetSize) {
    auto rng = make_stream(1, streams::assignment);
    const auto a = assign_ca(10, 4, 4, rng);
    for (NodeId n = 0; n < 10; ++n) EXPECT_EQ(a.of(n), (std::vector<ChannelId>{0, 1, 2, 3}));
}

TEST(AssignCa, SingleChannelUniform) {
    auto rng = make_stream(2, streams::assignment);
    const auto a = assign_ca(100'000, 5, 1, rng);
    std::array<int, 5> hits{};
    for (const auto& s : a.sets) ++hits[s.at(0)];
    for (int h : hits) EXPECT_NEAR(h / 100'000.0, 0.2, 0.01);
}

TEST(AssignCa, SetsAreDistinctSortedSubsets) {
    auto rng = make_stream(3, streams::assignment);
    const auto a = assign_ca(500, 15, 4, rng);
    for (const auto& s : a.sets) {
        ASSERT_EQ(s.size(), 4u);
        for (std::size_t i = 1; i < s.size(); ++i) ASSERT_LT(s[i - 1], s[i]);
        ASSERT_LT(s.back(), 15u);
    }
}

TEST(AssignCa, RangeErrors) {
    auto rng = make_stream(1, streams::assignment);
    EXPECT_THROW(assign_ca(3, 5, 0, rng), ConfigError);
    EXPECT_THROW(assign_ca(3, 5, 6, rng), ConfigError);
}

TEST(SbAvailability, IdleChannelsOrLeastOccupied) {
    ChannelState s(4, true);
    s.set(2, false);
    auto obs = observe({{0.4, 0}, {0.2, 0}, {0.9, 0}, {0.3, 0}});
    EXPECT_EQ(sb_availability(s, obs), std::set<ChannelId>{2});
    EXPECT_EQ(sb_availability(ChannelState(4, true), obs), std::set<ChannelId>{1});
}

TEST(ParseStrategy, Names) {
    for (auto k : {StrategyKind::surf, StrategyKind::rd, StrategyKind::sb, StrategyKind::ca}) {
        EXPECT_EQ(parse_strategy(to_string(k)), k);
    }
    EXPECT_THROW(parse_strategy("greedy"), ConfigError);
}
