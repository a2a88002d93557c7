// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glint/quadrature.h"
#include "glint/sg.h"
#include "testutil.h"

using namespace glint;
using testutil::rel_error;

namespace {

SgLobe random_lobe(RngStream& rng, double lambda_lo, double lambda_hi) {
    SgLobe l;
    l.axis = testutil::random_direction(rng);
    l.sharpness = lambda_lo + (lambda_hi - lambda_lo) * rng.next_uniform();
    l.amplitude = Rgb(0.2 + rng.next_uniform(), 0.2 + rng.next_uniform(),
                      0.2 + rng.next_uniform());
    return l;
}

// Central finite difference of a scalar function of one lobe parameter.
template <typename F>
double lobe_fd(const SgLobe& lobe, int param, F&& f, double eps = 1e-5) {
    auto perturbed = [&](double sign) {
        SgLobe p = lobe;
        if (param < 2) {
            Vec3 t, b;
            tangent_basis(lobe.axis, t, b);
            p.axis = normalize(lobe.axis + sign * eps * (param == 0 ? t : b));
        } else if (param == 2) {
            p.sharpness += sign * eps;
        } else {
            p.amplitude[param - 3] += sign * eps;
        }
        return f(p);
    };
    return (perturbed(1.0) - perturbed(-1.0)) / (2.0 * eps);
}

}  // namespace

TEST_CASE("sg_eval matches the kernel definition") {
    const SgLobe lobe{make_direction(0.2, 0.9, 0.1), 3.0, Rgb(0.5, 1.0, 2.0)};
    const Rgb at_axis = sg_eval(lobe, lobe.axis);
    CHECK(rel_error(at_axis, lobe.amplitude) < 1e-12);

    const SgLobe unitl{Direction(0.0, 1.0, 0.0), 1.0, Rgb(1.0)};
    const Rgb opposite = sg_eval(unitl, Direction(0.0, -1.0, 0.0));
    CHECK(opposite.r == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

    const SgLobe flat{make_direction(1.0, 2.0, 3.0), 0.0, Rgb(0.7)};
    RngStream rng(1, 1);
    for (int i = 0; i < 10; ++i)
        CHECK(sg_eval(flat, testutil::random_direction(rng)).g == doctest::Approx(0.7));
}

TEST_CASE("sg_integral closed form against stated values and quadrature") {
    CHECK(sg_integral({Direction(0, 1, 0), 0.0, Rgb(1.0)}).r ==
          doctest::Approx(kFourPi).epsilon(1e-12));

    const SgLobe l1{make_direction(0.4, -0.3, 0.85), 1.0, Rgb(1.0)};
    CHECK(sg_integral(l1).r == doctest::Approx(kTwoPi * (1.0 - std::exp(-2.0))).epsilon(1e-12));
    const Rgb oracle = sphere_quadrature([&](const Direction& w) { return sg_eval(l1, w); }, 128);
    CHECK(rel_error(oracle.r, sg_integral(l1).r) < 1e-4);

    const SgLobe l100{make_direction(-0.6, 0.7, 0.38), 100.0, Rgb(1.0)};
    CHECK(std::abs(sg_integral(l100).r - kTwoPi / 100.0) < 1e-6);
    const Rgb oracle100 =
        sphere_quadrature([&](const Direction& w) { return sg_eval(l100, w); }, 64);
    CHECK(rel_error(oracle100.r, sg_integral(l100).r) < 1e-4);
}

TEST_CASE("sg_product is an exact pointwise product") {
    RngStream rng(11, 0);

    // Same axis: sharpnesses add, amplitudes multiply.
    const Direction axis = testutil::random_direction(rng);
    const SgLobe a{axis, 2.0, Rgb(0.5)};
    const SgLobe b{axis, 3.0, Rgb(4.0)};
    const SgLobe ab = sg_product(a, b);
    CHECK(ab.sharpness == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(ab.amplitude.r == doctest::Approx(2.0).epsilon(1e-12));

    // Antipodal axes with equal sharpness: constant product.
    const SgLobe c{axis, 3.0, Rgb(1.0)};
    const SgLobe d{-1.0 * axis, 3.0, Rgb(1.0)};
    const SgLobe cd = sg_product(c, d);
    CHECK(cd.sharpness == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cd.amplitude.r == doctest::Approx(std::exp(-6.0)).epsilon(1e-10));

    // Orthogonal axes with sharpness 2 each.
    Vec3 t, bt;
    tangent_basis(axis, t, bt);
    const SgLobe e{axis, 2.0, Rgb(1.0)};
    const SgLobe f{t, 2.0, Rgb(1.0)};
    CHECK(sg_product(e, f).sharpness == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));

    // Pointwise equality at random directions for random lobe pairs.
    for (int trial = 0; trial < 20; ++trial) {
        const SgLobe l1 = random_lobe(rng, 0.0, 20.0);
        const SgLobe l2 = random_lobe(rng, 0.0, 20.0);
        const SgLobe prod = sg_product(l1, l2);
        for (int i = 0; i < 100; ++i) {
            const Direction w = testutil::random_direction(rng);
            const Rgb direct = sg_eval(l1, w) * sg_eval(l2, w);
            const Rgb via = sg_eval(prod, w);
            CHECK(rel_error(direct, via) < 1e-10);
        }
    }
}

TEST_CASE("sg_inner agrees with the quadrature oracle") {
    RngStream rng(13, 0);

    const SgLobe flat1{testutil::random_direction(rng), 0.0, Rgb(2.0)};
    const SgLobe flat2{testutil::random_direction(rng), 0.0, Rgb(3.0)};
    CHECK(sg_inner(flat1, flat2).r == doctest::Approx(kFourPi * 6.0).epsilon(1e-12));

    for (int trial = 0; trial < 8; ++trial) {
        const SgLobe l1 = random_lobe(rng, 0.5, 50.0);
        const SgLobe l2 = random_lobe(rng, 0.5, 50.0);
        const Rgb oracle = sphere_quadrature(
            [&](const Direction& w) { return sg_eval(l1, w) * sg_eval(l2, w); }, 48);
        CHECK(rel_error(oracle, sg_inner(l1, l2)) < 1e-3);
    }

    // Against the cosine lobe specifically.
    const Direction n = make_direction(0.3, 0.9, -0.2);
    const SgLobe l1 = random_lobe(rng, 0.5, 10.0);
    const SgLobe cl = cosine_sg(n);
    const Rgb oracle = sphere_quadrature(
        [&](const Direction& w) { return sg_eval(l1, w) * sg_eval(cl, w); }, 48);
    CHECK(rel_error(oracle, sg_inner(l1, cl)) < 1e-3);
}

TEST_CASE("cosine_sg uses the fixed constants and approximates the cosine") {
    const Direction n = make_direction(0.1, 0.7, 0.7);
    const SgLobe lobe = cosine_sg(n);
    CHECK(lobe.sharpness == 2.133);
    CHECK(lobe.amplitude.r == 1.17);
    CHECK(sg_eval(lobe, n).r == doctest::Approx(1.17).epsilon(1e-12));

    Vec3 t, b;
    tangent_basis(n, t, b);
    CHECK(sg_eval(lobe, t).r == doctest::Approx(1.17 * std::exp(-2.133)).epsilon(1e-12));
    CHECK(1.17 * std::exp(-2.133) == doctest::Approx(0.1385).epsilon(1e-3));

    // Hemispherical integral of the lobe vs the true cosine integral (pi).
    const Rgb hemi = sphere_quadrature(
        [&](const Direction& w) {
            return dot(w, n) > 0.0 ? sg_eval(lobe, w) : Rgb{};
        },
        48);
    CHECK(std::abs(hemi.r - kPi) / kPi < 0.15);
}

TEST_CASE("sg_env_eval is the lobe sum") {
    RngStream rng(17, 0);
    SgEnvLight light = testutil::make_test_sg_light(32);
    for (int i = 0; i < 100; ++i) {
        const Direction w = testutil::random_direction(rng);
        Rgb manual;
        for (const SgLobe& lobe : light.lobes) manual += sg_eval(lobe, w);
        CHECK(rel_error(manual, sg_env_eval(light, w)) < 1e-12);
    }

    SgEnvLight single;
    single.lobes = {random_lobe(rng, 0.0, 10.0)};
    const Direction w = testutil::random_direction(rng);
    CHECK(rel_error(sg_env_eval(single, w), sg_eval(single.lobes[0], w)) < 1e-15);

    SgEnvLight twice;
    twice.lobes = {single.lobes[0], single.lobes[0]};
    CHECK(rel_error(sg_env_eval(twice, w), 2.0 * sg_eval(single.lobes[0], w)) < 1e-15);
}

TEST_CASE("sg adjoints match finite differences") {
    RngStream rng(23, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const SgLobe l1 = random_lobe(rng, 0.3, 30.0);
        const SgLobe l2 = random_lobe(rng, 0.3, 30.0);
        const Direction w = testutil::random_direction(rng);
        const Rgb pick(rng.next_uniform(), rng.next_uniform(), rng.next_uniform());

        SUBCASE("") {}

        // sg_eval
        {
            SgLobeAdj adj;
            sg_eval_backward(l1, w, pick, adj);
            for (int param = 0; param < 6; ++param) {
                const double fd = lobe_fd(l1, param, [&](const SgLobe& p) {
                    return dot(pick, sg_eval(p, w));
                });
                double analytic;
                if (param < 2) {
                    Vec3 t, b;
                    tangent_basis(l1.axis, t, b);
                    analytic = dot(adj.axis, param == 0 ? t : b);
                } else if (param == 2) {
                    analytic = adj.sharpness;
                } else {
                    analytic = adj.amplitude[param - 3];
                }
                if (std::abs(fd) > 1e-7 || std::abs(analytic) > 1e-7)
                    CHECK(testutil::rel_error(fd, analytic) < 1e-4);
            }
        }

        // sg_inner (covers sg_product and sg_integral backward)
        {
            SgLobeAdj adj1, adj2;
            sg_inner_backward(l1, l2, pick, adj1, adj2);
            for (int param = 0; param < 6; ++param) {
                const double fd = lobe_fd(l1, param, [&](const SgLobe& p) {
                    return dot(pick, sg_inner(p, l2));
                });
                double analytic;
                if (param < 2) {
                    Vec3 t, b;
                    tangent_basis(l1.axis, t, b);
                    analytic = dot(adj1.axis, param == 0 ? t : b);
                } else if (param == 2) {
                    analytic = adj1.sharpness;
                } else {
                    analytic = adj1.amplitude[param - 3];
                }
                if (std::abs(fd) > 1e-7 || std::abs(analytic) > 1e-7)
                    CHECK(testutil::rel_error(fd, analytic) < 1e-4);
            }
        }
    }
}
