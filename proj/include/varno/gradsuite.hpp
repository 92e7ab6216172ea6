#pragma once
// Named finite-difference gradient checks covering every differentiable tape
// operation plus a two-layer end-to-end graph.  The CLI `gradcheck` subcommand
// and the acceptance gate both run this suite; all cases must pass at
// relative error < 1e-4.

#include <functional>
#include <string>
#include <vector>

#include "varno/autodiff.hpp"
#include "varno/rng.hpp"

namespace varno {

struct GradSuiteCase {
    std::string name;
    GradcheckReport report;
};

namespace detail {

inline RTensor gradsuite_randn(const std::vector<int64_t>& shape, uint64_t seed,
                               const char* stream, double scale = 1.0, double offset = 0.0) {
    RTensor t(shape);
    Rng rng(seed, stream);
    for (auto& v : t.data) v = offset + scale * rng.next_gaussian();
    return t;
}

}  // namespace detail

inline std::vector<GradSuiteCase> run_gradient_suite(uint64_t seed = 0) {
    using detail::gradsuite_randn;
    struct Case {
        std::string name;
        std::vector<GradcheckLeaf> leaves;
        std::function<Tape::Id(Tape&, const std::vector<Tape::Id>&)> build;
    };
    std::vector<Case> cases;

    cases.push_back({"elementwise-arithmetic",
                     {{"a", gradsuite_randn({5, 6}, seed + 1, "gs/a")},
                      {"b", gradsuite_randn({5, 6}, seed + 2, "gs/b")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         return t.mean_all(t.mul(t.add(v[0], v[1]), t.sub(v[0], t.neg(v[1]))));
                     }});

    cases.push_back({"scalar-scaling",
                     {{"x", gradsuite_randn({4, 4}, seed + 3, "gs/x")},
                      {"s", gradsuite_randn({1}, seed + 4, "gs/s", 0.5, 1.0)}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         return t.sum_all(
                             t.smul(t.scale_const(t.mul(v[0], v[0]), 0.7), v[1]));
                     }});

    cases.push_back({"division-and-sqrt",
                     {{"a", gradsuite_randn({5, 5}, seed + 5, "gs/da")},
                      {"b", gradsuite_randn({5, 5}, seed + 6, "gs/db")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         Tape::Id num = t.sqrtr(t.add_const(t.mul(v[0], v[0]), 0.5));
                         return t.mean_all(t.divr(num, t.add_const(t.mul(v[1], v[1]), 2.0)));
                     }});

    cases.push_back({"complex-arithmetic",
                     {{"a", gradsuite_randn({4, 6, 6}, seed + 7, "gs/ca")},
                      {"b", gradsuite_randn({4, 6, 6}, seed + 8, "gs/cb")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         Tape::Id A = t.ch2c(v[0]), B = t.ch2c(v[1]);
                         return t.mean_all(t.abs2(t.sub(t.mul(A, B), t.conj(A))));
                     }});

    cases.push_back({"coil-broadcast",
                     {{"s", gradsuite_randn({4, 6, 6}, seed + 9, "gs/sm")},
                      {"x", gradsuite_randn({2, 6, 6}, seed + 10, "gs/im")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         Tape::Id S = t.ch2c(v[0]);
                         Tape::Id x = t.sq0(t.ch2c(v[1]));
                         Tape::Id k = t.mul_b0(S, x);
                         return t.mean_all(t.abs2(t.sum0(t.mul(t.conj(S), k))));
                     }});

    cases.push_back({"fourier-roundtrip",
                     {{"a", gradsuite_randn({2, 8, 8}, seed + 11, "gs/fft")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         Tape::Id Z = t.ch2c(v[0]);
                         return t.mean_all(
                             t.abs2(t.sub(t.ifft2(t.fft2(Z)), t.scale_const(Z, 0.5))));
                     }});

    {
        RTensor field({8, 8});
        Rng rng(seed + 12, "gs/mask");
        for (auto& v : field.data) v = rng.next_double() < 0.4 ? 1.0 : 0.0;
        cases.push_back({"masked-scaled-spectrum",
                         {{"a", gradsuite_randn({2, 8, 8}, seed + 13, "gs/mk")},
                          {"eta", gradsuite_randn({1}, seed + 14, "gs/eta", 0.25, 1.0)}},
                         [field](Tape& t, const std::vector<Tape::Id>& v) {
                             Tape::Id Z = t.ch2c(v[0]);
                             Tape::Id masked = t.rmul_const(t.fft2(Z), field);
                             return t.mean_all(t.abs2(t.cscale(masked, v[1])));
                         }});
    }

    cases.push_back({"real-embedding",
                     {{"a", gradsuite_randn({8, 8}, seed + 15, "gs/r2c")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         return t.mean_all(t.abs2(t.fft2(t.r2c(v[0]))));
                     }});

    cases.push_back({"coil-normalization",
                     {{"m", gradsuite_randn({4, 5, 5}, seed + 16, "gs/bd")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         Tape::Id m = t.ch2c(v[0]);
                         Tape::Id rss = t.sqrtr(t.sum0(t.abs2(m)), 1e-3);
                         return t.mean_all(t.abs2(t.bdiv(m, rss)));
                     }});

    cases.push_back({"rectified-normalization",
                     {{"x", gradsuite_randn({2, 6, 6}, seed + 17, "gs/ln")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         Tape::Id y = t.leaky(t.instance_norm(v[0]), 0.2);
                         return t.mean_all(t.mul(y, y));
                     }});

    cases.push_back({"pool-upsample-concat",
                     {{"x", gradsuite_randn({2, 4, 4}, seed + 18, "gs/pu")},
                      {"y", gradsuite_randn({1, 4, 4}, seed + 19, "gs/pv")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         Tape::Id u = t.upsample_bilinear(t.cat0(v[0], v[1]), 2);
                         Tape::Id p = t.avgpool2(u);
                         Tape::Id first = t.slice0(p, 0);
                         return t.add(t.mean_all(t.mul(p, p)), t.sum_all(first));
                     }});

    cases.push_back({"window-mean",
                     {{"x", gradsuite_randn({9, 10}, seed + 20, "gs/bx")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         Tape::Id b = t.box7(v[0]);
                         return t.mean_all(t.mul(b, b));
                     }});

    cases.push_back({"fixed-tap-convolution",
                     {{"taps", gradsuite_randn({2, 3, 3, 3}, seed + 21, "gs/ct")},
                      {"x", gradsuite_randn({3, 6, 6}, seed + 22, "gs/cx")}},
                     [](Tape& t, const std::vector<Tape::Id>& v) {
                         Tape::Id y = t.conv2(v[0], v[1]);
                         return t.mean_all(t.mul(y, y));
                     }});

    {
        BasisSpec basis;
        basis.radius = 0.3;
        basis.n_rings = 1;
        basis.n_per_ring = 4;
        BasisTable table = tabulate_basis(basis, GridSpec({-1, -1}, {1, 1}, {12, 12}));
        cases.push_back(
            {"synthesized-convolution",
             {{"theta", gradsuite_randn({2, 1, basis.count()}, seed + 23, "gs/th")},
              {"x", gradsuite_randn({1, 12, 12}, seed + 24, "gs/sx")}},
             [table](Tape& t, const std::vector<Tape::Id>& v) {
                 Tape::Id y = t.conv2(t.synth(v[0], table), v[1]);
                 return t.mean_all(t.mul(y, y));
             }});
    }

    {
        // Two stacked conv-norm-rectify layers ending in the training loss.
        BasisSpec basis;
        basis.radius = 0.35;
        basis.n_rings = 1;
        basis.n_per_ring = 3;
        BasisTable table = tabulate_basis(basis, GridSpec({-1, -1}, {1, 1}, {12, 12}));
        RTensor ref = gradsuite_randn({12, 12}, seed + 25, "gs/ref", 0.2, 1.0);
        cases.push_back(
            {"two-layer-end-to-end",
             {{"theta1", gradsuite_randn({2, 1, basis.count()}, seed + 26, "gs/t1")},
              {"theta2", gradsuite_randn({1, 2, basis.count()}, seed + 27, "gs/t2")},
              {"x", gradsuite_randn({1, 12, 12}, seed + 28, "gs/e2e")}},
             [table, ref](Tape& t, const std::vector<Tape::Id>& v) {
                 Tape::Id h = t.leaky(t.instance_norm(t.conv2(t.synth(v[0], table), v[2])), 0.2);
                 Tape::Id y = t.conv2(t.synth(v[1], table), h);
                 Tape::Id z = t.add_const(t.sq0(y), 1.0);
                 return ssim_loss(t, z, t.leaf(ref, false), 2.0);
             }});
    }

    std::vector<GradSuiteCase> out;
    out.reserve(cases.size());
    for (const auto& c : cases) out.push_back({c.name, gradcheck(c.build, c.leaves)});
    return out;
}

}  // namespace varno
