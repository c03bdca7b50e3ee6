#include "wsnet/conv.hpp"
#include "wsnet/verify.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace wsnet;

namespace {

FeatureMap column(std::initializer_list<double> vals) {
    FeatureMap f(static_cast<int>(vals.size()), 1);
    int t = 0;
    for (double v : vals) f.at(t++, 0) = v;
    return f;
}

FilterBank single_filter(std::initializer_list<double> taps) {
    FilterBank bank;
    bank.values = Tensor3(static_cast<int>(taps.size()), 1, 1);
    int l = 0;
    for (double v : taps) bank.values.at(l++, 0, 0) = v;
    return bank;
}

} // namespace

TEST_CASE("naive convolution with same padding") {
    FeatureMap f = column({1, 2, 3});

    Matrix ident = conv_naive(f, single_filter({1, 0}), 1, Padding::same);
    CHECK(ident.at(0, 0) == 1);
    CHECK(ident.at(1, 0) == 2);
    CHECK(ident.at(2, 0) == 3);

    Matrix sum2 = conv_naive(f, single_filter({1, 1}), 1, Padding::same);
    CHECK(sum2.at(0, 0) == 3);
    CHECK(sum2.at(1, 0) == 5);
    CHECK(sum2.at(2, 0) == 3);

    Matrix zero = conv_naive(f, single_filter({0, 0, 0}), 1, Padding::same);
    for (double v : zero.data) CHECK(v == 0.0);
}

TEST_CASE("naive convolution rejects mismatched channels") {
    FeatureMap f(4, 2);
    CHECK_THROWS_AS(conv_naive(f, single_filter({1, 0}), 1, Padding::same),
                    validation_error);
}

TEST_CASE("channel wrap folds channel groups") {
    FeatureMap f(1, 4);
    f.at(0, 0) = 1;
    f.at(0, 1) = 2;
    f.at(0, 2) = 3;
    f.at(0, 3) = 4;
    Matrix wrapped = channel_wrap(f, 2);
    CHECK(wrapped.at(0, 0) == 4);
    CHECK(wrapped.at(0, 1) == 6);

    Matrix same = channel_wrap(f, 4);
    for (int m = 0; m < 4; ++m) CHECK(same.at(0, m) == f.at(0, m));

    CHECK_THROWS_AS(channel_wrap(f, 3), validation_error);

    Rng rng(5);
    Matrix rand = random_matrix(9, 6, rng);
    Matrix w = channel_wrap(rand, 3);
    for (int t = 0; t < 9; ++t)
        for (int j = 0; j < 3; ++j)
            REQUIRE(w.at(t, j) == Catch::Approx(rand.at(t, j) + rand.at(t, j + 3)));
}

TEST_CASE("inner product map pairs input rows with condensed positions") {
    Rng rng(6);
    // single channel: a plain outer product
    Matrix f = random_matrix(5, 1, rng);
    Matrix phi = random_matrix(7, 1, rng);
    Matrix p = inner_product_map(f, phi);
    for (int u = 0; u < 5; ++u)
        for (int v = 0; v < 7; ++v)
            REQUIRE(p.at(u, v) == Catch::Approx(f.at(u, 0) * phi.at(v, 0)));

    Matrix zero_phi(7, 1, 0.0);
    Matrix pz = inner_product_map(f, zero_phi);
    for (double v : pz.data) CHECK(v == 0.0);

    // multi-channel random case against a double loop
    Matrix f2 = random_matrix(6, 4, rng);
    Matrix phi2 = random_matrix(9, 4, rng);
    Matrix p2 = inner_product_map(f2, phi2);
    for (int u = 0; u < 6; ++u)
        for (int v = 0; v < 9; ++v) {
            double s = 0.0;
            for (int j = 0; j < 4; ++j) s += f2.at(u, j) * phi2.at(v, j);
            REQUIRE(p2.at(u, v) == Catch::Approx(s));
        }
}

TEST_CASE("integral image accumulates along diagonals") {
    Matrix zeros(4, 4, 0.0);
    Matrix iz = integral_image(zeros);
    for (double v : iz.data) CHECK(v == 0.0);

    Matrix ones(3, 3, 1.0);
    Matrix ii = integral_image(ones);
    const double expect[3][3] = {{1, 1, 1}, {1, 2, 2}, {1, 2, 3}};
    for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 3; ++v) CHECK(ii.at(u, v) == expect[u][v]);

    Matrix spike(4, 4, 0.0);
    spike.at(1, 1) = 5.0;
    Matrix is = integral_image(spike);
    CHECK(is.at(1, 1) == 5.0);
    CHECK(is.at(2, 2) == 5.0);
    CHECK(is.at(3, 3) == 5.0);
    CHECK(is.at(2, 1) == 0.0);
    CHECK(is.at(1, 2) == 0.0);
}

TEST_CASE("fast path reproduces the worked example") {
    SamplingSpec s = make_sampling_spec({.filter_len = 2, .num_filters = 2,
                                         .sampling_stride = 1});
    CondensedFilter phi;
    phi.spec = s;
    phi.values = Matrix(3, 1);
    phi.values.at(0, 0) = 1;
    phi.values.at(1, 0) = 2;
    phi.values.at(2, 0) = 3;
    FeatureMap f = column({1, 1, 1});
    Matrix out = conv_fast(f, phi);
    const double expect[3][2] = {{3, 5}, {3, 5}, {1, 2}};
    for (int t = 0; t < 3; ++t)
        for (int n = 0; n < 2; ++n) REQUIRE(out.at(t, n) == Catch::Approx(expect[t][n]));
}

TEST_CASE("fast path equals the staged pipeline exactly") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        SamplingParams p = random_layer_params(rng);
        p.conv_stride = 1 + static_cast<int>(rng() % 2);
        SamplingSpec s = make_sampling_spec(p);
        const int t_len = std::max(s.filter_len, 5 + static_cast<int>(rng() % 40));
        CondensedFilter phi{random_matrix(s.condensed_len, s.condensed_channels, rng), s};
        Matrix f = random_matrix(t_len, s.in_channels, rng);

        const ConvGeometry g =
            conv_geometry(t_len, s.filter_len, s.conv_stride, s.padding);
        Matrix padded = pad_rows(f, g.pad_left, g.pad_right);
        Matrix wrapped = channel_wrap(padded, s.condensed_channels);
        Matrix pmap = inner_product_map(wrapped, phi.values);
        Matrix ii = integral_image(pmap);
        Matrix staged(g.out_len, s.sampled_filters());
        for (int t = 0; t < g.out_len; ++t)
            for (int n = 0; n < s.sampled_filters(); ++n) {
                const int start = t * s.conv_stride;
                const int c1 = n * s.effective_stride() + s.filter_len - 1;
                const double hi = ii.at(start + s.filter_len - 1, c1);
                const double lo = (start >= 1 && n >= 1)
                                      ? ii.at(start - 1, n * s.effective_stride() - 1)
                                      : 0.0;
                staged.at(t, n) = hi - lo;
            }

        Matrix fast = conv_fast(f, phi);
        REQUIRE(fast.same_shape(staged));
        for (size_t i = 0; i < fast.size(); ++i)
            REQUIRE(fast.data[i] == staged.data[i]); // bit-identical summation order
    }
}

TEST_CASE("diagonal retrieval identity on small instances") {
    Rng rng(8);
    SamplingSpec s = make_sampling_spec({.filter_len = 3, .num_filters = 4,
                                         .sampling_stride = 2, .channel_tile = 1,
                                         .in_channels = 2});
    CondensedFilter phi{random_matrix(s.condensed_len, s.condensed_channels, rng), s};
    Matrix f = random_matrix(10, 2, rng);
    Matrix wrapped = channel_wrap(f, s.condensed_channels);
    Matrix p = inner_product_map(wrapped, phi.values);
    Matrix ii = integral_image(p);
    for (int t = 0; t + s.filter_len <= 10; ++t)
        for (int n = 0; n < 4; ++n) {
            double direct = 0.0;
            for (int l = 0; l < s.filter_len; ++l)
                direct += p.at(t + l, n * s.sampling_stride + l);
            const double hi = ii.at(t + s.filter_len - 1,
                                    n * s.sampling_stride + s.filter_len - 1);
            const double lo = (t >= 1 && n >= 1)
                                  ? ii.at(t - 1, n * s.sampling_stride - 1)
                                  : 0.0;
            REQUIRE(direct == Catch::Approx(hi - lo).margin(1e-12));
        }
}

TEST_CASE("explicit zero padding rows subsume the boundary rule") {
    // trailing lookups touch only padding rows; they must equal a naive conv
    // on the explicitly padded input
    Rng rng(9);
    SamplingSpec s = make_sampling_spec({.filter_len = 5, .num_filters = 3,
                                         .sampling_stride = 2});
    CondensedFilter phi{random_matrix(s.condensed_len, 1, rng), s};
    Matrix f = random_matrix(12, 1, rng);
    Matrix fast = conv_fast(f, phi);
    Matrix naive = conv_naive(f, sample_filters(phi), 1, Padding::same);
    REQUIRE(fast.same_shape(naive));
    for (size_t i = 0; i < fast.size(); ++i)
        REQUIRE(fast.data[i] == Catch::Approx(naive.data[i]).margin(1e-12));
}

TEST_CASE("fast path matches naive on conventional layouts") {
    Rng rng(10);
    SamplingSpec s = make_sampling_spec({.filter_len = 4, .num_filters = 6,
                                         .sampling_stride = 4, .channel_tile = 1,
                                         .in_channels = 3, .conv_stride = 2});
    CondensedFilter phi{random_matrix(s.condensed_len, s.condensed_channels, rng), s};
    Matrix f = random_matrix(21, 3, rng);
    Matrix fast = conv_fast(f, phi);
    Matrix naive = conv_naive(f, sample_filters(phi), 2, Padding::same);
    REQUIRE(fast.same_shape(naive));
    for (size_t i = 0; i < fast.size(); ++i)
        REQUIRE(fast.data[i] == Catch::Approx(naive.data[i]).margin(1e-12));
}

TEST_CASE("fast/naive equivalence over random configurations") {
    EquivalenceResult res = run_equivalence_suite(200, 1234, 1e-10);
    INFO("worst deviation " << res.worst << " at trial " << res.worst_trial);
    CHECK(res.pass);
}

TEST_CASE("fast/naive equivalence holds at ten-thousand-row inputs") {
    Rng rng(16);
    SamplingSpec s = make_sampling_spec({.filter_len = 8, .num_filters = 24,
                                         .sampling_stride = 1, .channel_tile = 2,
                                         .in_channels = 4, .conv_stride = 2});
    CondensedFilter phi{random_matrix(s.condensed_len, s.condensed_channels, rng), s};
    Matrix f = random_matrix(10000, 4, rng);
    Matrix fast = conv_fast(f, phi);
    Matrix naive = conv_naive(f, sample_filters(phi), 2, Padding::same);
    double scale = 1.0, dev = 0.0;
    for (double v : naive.data) scale = std::max(scale, std::abs(v));
    for (size_t i = 0; i < naive.size(); ++i)
        dev = std::max(dev, std::abs(naive.data[i] - fast.data[i]));
    CHECK(dev / scale <= 1e-10);
}

TEST_CASE("convolution rejects empty and undersized inputs") {
    CHECK_THROWS_AS(conv_geometry(0, 3, 1, Padding::same), validation_error);
    CHECK_THROWS_AS(conv_geometry(2, 3, 1, Padding::valid), validation_error);
}

TEST_CASE("channel wrap identity inside the convolution") {
    Rng rng(12);
    SamplingParams p;
    p.filter_len = 3;
    p.num_filters = 5;
    p.sampling_stride = 1;
    p.channel_tile = 4;
    p.in_channels = 8;
    SamplingSpec s = make_sampling_spec(p);
    CondensedFilter phi{random_matrix(s.condensed_len, s.condensed_channels, rng), s};
    Matrix f = random_matrix(16, 8, rng);
    Matrix fast = conv_fast(f, phi);
    Matrix naive = conv_naive(f, sample_filters(phi), 1, Padding::same);
    for (size_t i = 0; i < fast.size(); ++i)
        REQUIRE(fast.data[i] == Catch::Approx(naive.data[i]).margin(1e-11));
}

TEST_CASE("pointwise convolution") {
    Rng rng(13);
    Matrix f = random_matrix(6, 3, rng);

    Matrix ident(3, 3, 0.0);
    for (int i = 0; i < 3; ++i) ident.at(i, i) = 1.0;
    Matrix same = pointwise_conv(f, ident);
    for (size_t i = 0; i < f.size(); ++i) CHECK(same.data[i] == f.data[i]);

    Matrix zeros(3, 2, 0.0);
    Matrix z = pointwise_conv(f, zeros);
    for (double v : z.data) CHECK(v == 0.0);

    // equals a naive conv with filter length one
    Matrix w = random_matrix(3, 4, rng);
    FilterBank bank;
    bank.values = Tensor3(1, 3, 4);
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 4; ++n) bank.values.at(0, m, n) = w.at(m, n);
    Matrix via_conv = conv_naive(f, bank, 1, Padding::same);
    Matrix via_pw = pointwise_conv(f, w);
    for (size_t i = 0; i < via_pw.size(); ++i)
        REQUIRE(via_pw.data[i] == Catch::Approx(via_conv.data[i]));

    CHECK_THROWS_AS(pointwise_conv(f, Matrix(4, 2)), validation_error);
}

TEST_CASE("operation counters match the executed work") {
    Rng rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        SamplingParams p = random_layer_params(rng);
        SamplingSpec s = make_sampling_spec(p);
        const int t_min = s.padding == Padding::valid ? s.filter_len : 4;
        const int t_len = t_min + static_cast<int>(rng() % 32);
        CondensedFilter phi{random_matrix(s.condensed_len, s.condensed_channels, rng), s};
        Matrix f = random_matrix(t_len, s.in_channels, rng);
        const ConvGeometry g =
            conv_geometry(t_len, s.filter_len, s.conv_stride, s.padding);

        OpCounter fast_ops;
        conv_fast(f, phi, &fast_ops);
        const std::int64_t t_pad = g.padded_len;
        REQUIRE(fast_ops.wrap_adds ==
                t_pad * s.condensed_channels * (s.channel_tile - 1));
        REQUIRE(fast_ops.inner_product_multadds ==
                t_pad * s.condensed_len * s.condensed_channels);
        REQUIRE(fast_ops.integral_updates == t_pad * s.condensed_len);
        REQUIRE(fast_ops.retrieval_ops ==
                static_cast<std::int64_t>(g.out_len) * s.sampled_filters());

        OpCounter naive_ops;
        conv_naive(f, sample_filters(phi), s.conv_stride, s.padding, &naive_ops);
        REQUIRE(naive_ops.naive_multadds ==
                static_cast<std::int64_t>(g.out_len) * s.filter_len * s.in_channels *
                    s.sampled_filters());
    }
}

TEST_CASE("2d bank convolution matches a per-filter oracle") {
    Rng rng(15);
    SamplingSpec2D s = make_sampling_spec_2d(3, 3, 4, 1, 2, 2, 4);
    CondensedFilter2D phi;
    phi.spec = s;
    phi.values = Tensor3(s.condensed_w, s.condensed_h, s.condensed_channels);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : phi.values.data) v = u(rng);

    Tensor3 input(8, 8, 4);
    for (double& v : input.data) v = u(rng);

    FilterBank2D bank = sample_filters_2d(phi);
    Tensor3 out = conv2d_naive(input, bank, Padding::same);

    // direct per-filter evaluation straight from the condensed block
    for (int n = 0; n < s.num_filters; ++n) {
        const int ox = (n % s.grid) * s.stride_w;
        const int oy = (n / s.grid) * s.stride_h;
        for (int x = 0; x < 8; ++x)
            for (int y = 0; y < 8; ++y) {
                double acc = 0.0;
                for (int dx = 0; dx < 3; ++dx)
                    for (int dy = 0; dy < 3; ++dy) {
                        const int ix = x + dx - 1;
                        const int iy = y + dy - 1;
                        if (ix < 0 || iy < 0 || ix >= 8 || iy >= 8) continue;
                        for (int m = 0; m < 4; ++m)
                            acc += input.at(ix, iy, m) *
                                   phi.values.at(ox + dx, oy + dy, m % 2);
                    }
                REQUIRE(out.at(x, y, n) == Catch::Approx(acc).margin(1e-12));
            }
    }
}
