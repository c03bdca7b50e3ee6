#include "wsnet/sampling.hpp"
#include "wsnet/verify.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace wsnet;

namespace {

CondensedFilter ramp_filter(const SamplingSpec& spec) {
    CondensedFilter phi;
    phi.spec = spec;
    phi.values = Matrix(spec.condensed_len, spec.condensed_channels);
    for (size_t i = 0; i < phi.values.size(); ++i)
        phi.values.data[i] = static_cast<double>(i);
    return phi;
}

} // namespace

TEST_CASE("sampling spec geometry") {
    SamplingSpec s = make_sampling_spec({.filter_len = 3, .num_filters = 4,
                                         .sampling_stride = 1, .channel_tile = 1,
                                         .in_channels = 1});
    CHECK(s.condensed_len == 6);
    CHECK(s.condensed_channels == 1);

    SamplingSpec big = make_sampling_spec({.filter_len = 8, .num_filters = 1401,
                                           .sampling_stride = 1, .channel_tile = 1,
                                           .in_channels = 1024, .conv_stride = 2});
    CHECK(big.condensed_len == 1408);
    CHECK(big.condensed_channels == 1024);
    const double spatial_ratio =
        static_cast<double>(big.filter_len) * big.num_filters / big.condensed_len;
    CHECK(spatial_ratio == Catch::Approx(11208.0 / 1408.0));
    CHECK(spatial_ratio == Catch::Approx(8.0).margin(0.05));
}

TEST_CASE("sampling spec rejects bad geometry") {
    CHECK_THROWS_AS(make_sampling_spec({.filter_len = 4, .num_filters = 8,
                                        .sampling_stride = 8}),
                    validation_error);
    CHECK_THROWS_AS(make_sampling_spec({.filter_len = 4, .num_filters = 8,
                                        .sampling_stride = 2, .channel_tile = 3,
                                        .in_channels = 8}),
                    validation_error);
    CHECK_THROWS_AS(make_sampling_spec({.filter_len = 8, .num_filters = 4,
                                        .sampling_stride = 4, .channel_tile = 1,
                                        .in_channels = 1, .conv_stride = 1,
                                        .denser_factor = 3}),
                    validation_error);
}

TEST_CASE("filter sampling slides a window over the condensed filter") {
    SamplingSpec s = make_sampling_spec({.filter_len = 3, .num_filters = 4,
                                         .sampling_stride = 1});
    FilterBank bank = sample_filters(ramp_filter(s));
    const double expect[4][3] = {{0, 1, 2}, {1, 2, 3}, {2, 3, 4}, {3, 4, 5}};
    for (int n = 0; n < 4; ++n)
        for (int l = 0; l < 3; ++l) CHECK(bank.values.at(l, 0, n) == expect[n][l]);
}

TEST_CASE("stride equal to filter length recovers disjoint filters") {
    SamplingSpec s = make_sampling_spec({.filter_len = 3, .num_filters = 2,
                                         .sampling_stride = 3});
    FilterBank bank = sample_filters(ramp_filter(s));
    const double expect[2][3] = {{0, 1, 2}, {3, 4, 5}};
    for (int n = 0; n < 2; ++n)
        for (int l = 0; l < 3; ++l) CHECK(bank.values.at(l, 0, n) == expect[n][l]);
}

TEST_CASE("channel sampling tiles the condensed block") {
    SamplingSpec s = make_sampling_spec({.filter_len = 2, .num_filters = 2,
                                         .sampling_stride = 1, .channel_tile = 2,
                                         .in_channels = 4});
    REQUIRE(s.condensed_channels == 2);
    CondensedFilter phi = ramp_filter(s);
    FilterBank bank = sample_filters(phi);
    for (int l = 0; l < 2; ++l)
        for (int n = 0; n < 2; ++n) {
            CHECK(bank.values.at(l, 0, n) == bank.values.at(l, 2, n));
            CHECK(bank.values.at(l, 1, n) == bank.values.at(l, 3, n));
            CHECK(bank.values.at(l, 0, n) == phi.values.at(n + l, 0));
            CHECK(bank.values.at(l, 1, n) == phi.values.at(n + l, 1));
        }
}

TEST_CASE("materialization identity on random specs") {
    Rng rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        SamplingSpec s = make_sampling_spec(random_layer_params(rng));
        CondensedFilter phi{random_matrix(s.condensed_len, s.condensed_channels, rng), s};
        FilterBank bank = sample_filters(phi);
        for (int l = 0; l < s.filter_len; ++l)
            for (int m = 0; m < s.in_channels; ++m)
                for (int n = 0; n < s.sampled_filters(); ++n)
                    REQUIRE(bank.values.at(l, m, n) ==
                            phi.values.at(n * s.effective_stride() + l,
                                          m % s.condensed_channels));
    }
}

TEST_CASE("position map ties overlapping windows") {
    SamplingSpec s = make_sampling_spec({.filter_len = 2, .num_filters = 2,
                                         .sampling_stride = 1});
    PositionMap pm = position_map(s);
    const auto& shared = pm.cell(1, 0);
    REQUIRE(shared.size() == 2);
    CHECK(shared[0].pos == 1);
    CHECK(shared[0].filter == 0);
    CHECK(shared[1].pos == 0);
    CHECK(shared[1].filter == 1);
}

TEST_CASE("disjoint windows give singleton position-map cells") {
    SamplingSpec s = make_sampling_spec({.filter_len = 2, .num_filters = 2,
                                         .sampling_stride = 2});
    PositionMap pm = position_map(s);
    for (const auto& cell : pm.cells) CHECK(cell.size() == 1);
}

TEST_CASE("position map covers every kernel entry exactly once") {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        SamplingSpec s = make_sampling_spec(random_layer_params(rng));
        PositionMap pm = position_map(s);
        size_t total = 0;
        for (const auto& cell : pm.cells) total += cell.size();
        REQUIRE(total == static_cast<size_t>(s.filter_len) * s.in_channels *
                             s.sampled_filters());
        // duality: rebuilding the bank through the map matches direct sampling
        CondensedFilter phi{random_matrix(s.condensed_len, s.condensed_channels, rng), s};
        FilterBank direct = sample_filters(phi);
        Tensor3 via_map(s.filter_len, s.in_channels, s.sampled_filters());
        for (int i = 0; i < pm.condensed_len; ++i)
            for (int j = 0; j < pm.condensed_channels; ++j)
                for (const KernelIndex& k : pm.cell(i, j))
                    via_map.at(k.pos, k.ch, k.filter) = phi.values.at(i, j);
        for (size_t i = 0; i < direct.values.size(); ++i)
            REQUIRE(via_map.data[i] == direct.values.data[i]);
    }
}

TEST_CASE("conventional layers have compactness one") {
    SamplingSpec s = make_sampling_spec({.filter_len = 5, .num_filters = 7,
                                         .sampling_stride = 5, .channel_tile = 1,
                                         .in_channels = 3});
    CHECK(compactness(s) == Catch::Approx(1.0));
    PositionMap pm = position_map(s);
    for (const auto& cell : pm.cells) CHECK(cell.size() == 1);
}

TEST_CASE("compactness evaluates the parameter ratio") {
    SamplingSpec s = make_sampling_spec({.filter_len = 4, .num_filters = 97,
                                         .sampling_stride = 1});
    CHECK(s.condensed_len == 100);
    CHECK(compactness(s) == Catch::Approx(3.88));
}

TEST_CASE("compactness is bounded by filter length times channel tile") {
    Rng rng(37);
    for (int trial = 0; trial < 100; ++trial) {
        SamplingSpec s = make_sampling_spec(random_layer_params(rng));
        CHECK(compactness(s) <=
              static_cast<double>(s.filter_len) * s.channel_tile + 1e-12);
    }
    // S = 1, C = 1: ratio approaches the filter length as N grows
    double prev = 0.0;
    for (int n : {4, 16, 64, 256, 1024}) {
        SamplingSpec s = make_sampling_spec({.filter_len = 8, .num_filters = n,
                                             .sampling_stride = 1});
        const double c = compactness(s);
        CHECK(c < 8.0);
        CHECK(c > prev);
        prev = c;
    }
    CHECK(prev == Catch::Approx(8.0).margin(0.1));
}

TEST_CASE("denser sampling doubles the windows and halves the step") {
    SamplingSpec base = make_sampling_spec({.filter_len = 8, .num_filters = 16,
                                            .sampling_stride = 4});
    SamplingSpec dense = denser_spec(base, 2);
    CHECK(dense.effective_stride() == 2);
    CHECK(dense.sampled_filters() == 32);
    CHECK(dense.num_filters == 16); // the 1x1 reduction maps 32 -> 16
    SamplingSpec same = denser_spec(base, 1);
    CHECK(same.sampled_filters() == base.sampled_filters());
    CHECK(same.condensed_len == base.condensed_len);
    CHECK_THROWS_AS(denser_spec(base, 3), validation_error);
}

TEST_CASE("fc sampling windows a flat weight vector") {
    Matrix conventional = sample_fc({1, 2, 3, 4}, 2, 2, 2);
    CHECK(conventional.at(0, 0) == 1);
    CHECK(conventional.at(1, 0) == 2);
    CHECK(conventional.at(0, 1) == 3);
    CHECK(conventional.at(1, 1) == 4);

    Matrix shared = sample_fc({1, 2, 3}, 2, 2, 1);
    CHECK(shared.at(0, 0) == 1);
    CHECK(shared.at(1, 0) == 2);
    CHECK(shared.at(0, 1) == 2);
    CHECK(shared.at(1, 1) == 3);

    CHECK_THROWS_AS(sample_fc({1, 2, 3}, 2, 2, 2), validation_error);

    const size_t len = fc_condensed_len(1536, 256, 6);
    CHECK(len == 3066);
    CHECK(1536.0 * 256.0 / len == Catch::Approx(128.0).margin(0.5));
}

TEST_CASE("2d sampling cuts patches on a square grid") {
    SamplingSpec2D s = make_sampling_spec_2d(3, 3, 4, 1, 1, 1, 1);
    CHECK(s.grid == 2);
    CHECK(s.condensed_w == 4);
    CHECK(s.condensed_h == 4);

    CondensedFilter2D phi;
    phi.spec = s;
    phi.values = Tensor3(4, 4, 1);
    for (size_t i = 0; i < phi.values.size(); ++i)
        phi.values.data[i] = static_cast<double>(i);
    FilterBank2D bank = sample_filters_2d(phi);
    // filter n at grid cell (n / 2, n % 2), offsets (col, row) with stride 1
    const int offs[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}}; // (x, y)
    for (int n = 0; n < 4; ++n)
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y)
                REQUIRE(bank.at(x, y, 0, n) ==
                        phi.values.at(offs[n][0] + x, offs[n][1] + y, 0));
}

TEST_CASE("2d sampling degenerate and partial grids") {
    SamplingSpec2D single = make_sampling_spec_2d(3, 3, 1, 1, 1, 1, 1);
    CHECK(single.grid == 1);
    CHECK(single.condensed_w == 3);
    CHECK(single.condensed_h == 3);

    SamplingSpec2D partial = make_sampling_spec_2d(3, 3, 5, 2, 2, 1, 1);
    CHECK(partial.grid == 3);
    CHECK(partial.condensed_w == 3 + 2 * 2);
    CondensedFilter2D phi;
    phi.spec = partial;
    phi.values = Tensor3(partial.condensed_w, partial.condensed_h, 1);
    for (size_t i = 0; i < phi.values.size(); ++i)
        phi.values.data[i] = static_cast<double>(i) * 0.25;
    FilterBank2D bank = sample_filters_2d(phi);
    REQUIRE(bank.count == 5);
    // fifth filter is grid cell (1, 1): offsets (2, 2)
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y)
            REQUIRE(bank.at(x, y, 0, 4) == phi.values.at(2 + x, 2 + y, 0));
}
