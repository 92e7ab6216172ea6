#include <catch2/catch_amalgamated.hpp>

#include "varno/kspace.hpp"
#include "varno/rng.hpp"

using namespace varno;

namespace {

CTensor random_complex(std::vector<int64_t> shape, Rng& rng) {
    CTensor t(std::move(shape));
    for (auto& v : t.data) v = cd(rng.next_gaussian(), rng.next_gaussian());
    return t;
}

RTensor random_binary_mask(int64_t H, int64_t W, double keep, Rng& rng) {
    RTensor m({H, W});
    for (auto& v : m.data) v = rng.next_double() < keep ? 1.0 : 0.0;
    return m;
}

double residual_norm(const CTensor& x, const CTensor& k, const CTensor& S, const RTensor& mask) {
    CTensor r = forward_A(x, S, mask);
    for (size_t i = 0; i < r.data.size(); ++i) r.data[i] -= k.data[i];
    return l2_norm(r);
}

}  // namespace

TEST_CASE("forward and adjoint operators satisfy the inner-product identity") {
    Rng rng(2024, "kspace-adjoint");
    for (int trial = 0; trial < 100; ++trial) {
        const int64_t H = 8 + (trial % 3) * 4, W = 8 + (trial % 2) * 6, C = 1 + trial % 4;
        CTensor x = random_complex({H, W}, rng);
        CTensor y = random_complex({C, H, W}, rng);
        CTensor S = normalize_maps(random_complex({C, H, W}, rng));
        RTensor mask;
        if (trial % 10 == 0)
            mask = RTensor({H, W});  // empty
        else if (trial % 10 == 1)
            mask = RTensor::full({H, W}, 1.0);  // full
        else
            mask = random_binary_mask(H, W, 0.4, rng);

        const cd lhs = cdot(forward_A(x, S, mask), y);
        const cd rhs = cdot(x, adjoint_A(y, S, mask));
        const double denom = std::max({std::abs(lhs), std::abs(rhs), 1e-30});
        REQUIRE(std::abs(lhs - rhs) / denom < 1e-12);
    }
}

TEST_CASE("degenerate single-coil identities") {
    Rng rng(7, "kspace-degenerate");
    const int64_t H = 16, W = 12;
    CTensor x = random_complex({H, W}, rng);
    CTensor ones({1, H, W});
    for (auto& v : ones.data) v = cd(1, 0);
    RTensor full = RTensor::full({H, W}, 1.0);

    // single coil, S = 1, full mask: A = fft2c, A* = ifft2c, A*A = identity
    CTensor ax = forward_A(x, ones, full);
    CTensor fx = fft2c(x);
    REQUIRE(rel_l2_diff(CTensor({H, W}, std::vector<cd>(ax.data)), fx) < 1e-13);
    CTensor back = adjoint_A(ax, ones, full);
    REQUIRE(rel_l2_diff(back, x) < 1e-12);

    // zero inputs stay zero
    CTensor zx({H, W});
    REQUIRE(l2_norm(forward_A(zx, ones, full)) == 0.0);
    REQUIRE(l2_norm(adjoint_A(CTensor({1, H, W}), ones, full)) == 0.0);
}

TEST_CASE("rss_combine matches the direct formula") {
    Rng rng(9, "kspace-rss");
    CTensor coils = random_complex({3, 6, 5}, rng);
    RTensor r = rss_combine(coils);
    for (int64_t y = 0; y < 6; ++y)
        for (int64_t x = 0; x < 5; ++x) {
            double s = 0;
            for (int64_t c = 0; c < 3; ++c) s += std::norm(coils(c, y, x));
            REQUIRE(r(y, x) == std::sqrt(s));
        }

    // one coil: |c|; two equal coils of magnitude m: m*sqrt(2)
    CTensor one({1, 2, 2});
    one(0, 0, 0) = cd(3, 4);
    REQUIRE(rss_combine(one)(0, 0) == Catch::Approx(5.0).epsilon(1e-15));
    CTensor two({2, 1, 1});
    two(0, 0, 0) = cd(0, 2);
    two(1, 0, 0) = cd(2, 0);
    REQUIRE(rss_combine(two)(0, 0) == Catch::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("normalize_maps yields unit RSS away from zero pixels") {
    Rng rng(11, "kspace-norm");
    CTensor maps = random_complex({4, 8, 8}, rng);
    CTensor n = normalize_maps(maps);
    RTensor r = rss_combine(n);
    for (double v : r.data) REQUIRE(std::abs(v - 1.0) < 1e-10);

    // an all-zero pixel stays zero instead of producing NaN
    CTensor z({2, 1, 1});
    CTensor nz = normalize_maps(z);
    REQUIRE(nz(0, 0, 0) == cd(0, 0));
    REQUIRE(nz(1, 0, 0) == cd(0, 0));
}

TEST_CASE("dc_step behaves as the data-consistency gradient step") {
    Rng rng(13, "kspace-dc");
    const int64_t H = 16, W = 16, C = 3;
    CTensor x = random_complex({H, W}, rng);
    CTensor S = normalize_maps(random_complex({C, H, W}, rng));
    RTensor mask = random_binary_mask(H, W, 0.35, rng);
    CTensor k = forward_A(random_complex({H, W}, rng), S, mask);

    // eta = 0: unchanged
    REQUIRE(rel_l2_diff(dc_step(x, k, S, mask, 0.0), x) == 0.0);

    // fixed point: if A x = k the step is a no-op for any eta
    CTensor k_exact = forward_A(x, S, mask);
    REQUIRE(rel_l2_diff(dc_step(x, k_exact, S, mask, 1.7), x) < 1e-12);

    // single coil, S = 1, full mask, eta = 1: returns ifft2c(k) regardless of x
    CTensor ones({1, H, W});
    for (auto& v : ones.data) v = cd(1, 0);
    RTensor full = RTensor::full({H, W}, 1.0);
    CTensor k1 = random_complex({1, H, W}, rng);
    CTensor got = dc_step(x, k1, ones, full, 1.0);
    CTensor want = ifft2c(k1);
    REQUIRE(rel_l2_diff(got, CTensor({H, W}, std::vector<cd>(want.data))) < 1e-12);

    // contraction of the data residual for 0 < eta < 2 (||A|| <= 1)
    for (double eta : {0.25, 1.0, 1.9}) {
        CTensor stepped = dc_step(x, k, S, mask, eta);
        REQUIRE(residual_norm(stepped, k, S, mask) <= residual_norm(x, k, S, mask) + 1e-12);
    }

    // affine in x: step(a) - step(b) is linear
    CTensor a = random_complex({H, W}, rng), b = random_complex({H, W}, rng);
    CTensor sa = dc_step(a, k, S, mask, 0.7), sb = dc_step(b, k, S, mask, 0.7);
    CTensor diff_in(a.shape), zero_k({C, H, W});
    for (size_t i = 0; i < a.data.size(); ++i) diff_in.data[i] = a.data[i] - b.data[i];
    CTensor lin = dc_step(diff_in, zero_k, S, mask, 0.7);
    CTensor diff_out(a.shape);
    for (size_t i = 0; i < a.data.size(); ++i) diff_out.data[i] = sa.data[i] - sb.data[i];
    REQUIRE(rel_l2_diff(diff_out, lin) < 1e-12);
}

TEST_CASE("shape mismatches are rejected") {
    CTensor x({4, 4}), S({2, 4, 4}), k({2, 4, 4});
    RTensor mask({4, 4});
    REQUIRE_THROWS_AS(forward_A(x, CTensor({2, 5, 4}), mask), InvalidArgument);
    REQUIRE_THROWS_AS(forward_A(x, S, RTensor({5, 4})), InvalidArgument);
    REQUIRE_THROWS_AS(adjoint_A(k, CTensor({3, 4, 4}), mask), InvalidArgument);
    REQUIRE_THROWS_AS(dc_step(x, CTensor({1, 4, 4}), S, mask, 1.0), InvalidArgument);
    REQUIRE_THROWS_AS(dc_step(x, k, S, mask, std::nan("")), InvalidArgument);
    REQUIRE_THROWS_AS(apply_mask(k, RTensor({4, 5})), InvalidArgument);
}

TEST_CASE("apply_mask zeros exactly the off-mask samples") {
    Rng rng(21, "kspace-mask");
    CTensor k = random_complex({2, 6, 6}, rng);
    RTensor mask = random_binary_mask(6, 6, 0.5, rng);
    CTensor masked = apply_mask(k, mask);
    for (int64_t c = 0; c < 2; ++c)
        for (int64_t y = 0; y < 6; ++y)
            for (int64_t x = 0; x < 6; ++x) {
                if (mask(y, x) != 0.0)
                    REQUIRE(masked(c, y, x) == k(c, y, x));
                else
                    REQUIRE(masked(c, y, x) == cd(0, 0));
            }
}
