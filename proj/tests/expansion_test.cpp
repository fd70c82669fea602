#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "latwalk/error.hpp"
#include "latwalk/expansion.hpp"
#include "latwalk/groups.hpp"

using namespace latwalk;

namespace {

Mat diag2(double a, double b) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

ChainSpec sl3_chain() {
    const auto g = sl3_paper_example();
    return ChainSpec::iid({g[0], g[1], g[2]}, {1.0, 1.0, 1.0});
}

Vec unit(int n, int i) { return Vec::Unit(n, i); }

}  // namespace

TEST_CASE("Representation parsing and sizes") {
    CHECK(Representation::parse("standard").dim(3) == 3);
    CHECK(Representation::parse("adjoint").dim(3) == 8);
    CHECK(Representation::parse("wedge:2").dim(4) == 6);
    CHECK(Representation::parse("wedge:2").name() == "wedge:2");
    CHECK_THROWS_AS(Representation::parse("tensor"), Error);
}

TEST_CASE("lyapunov_spectrum of a deterministic diagonal") {
    const auto c = ChainSpec::iid({diag2(2, 0.5)}, {1.0});
    const auto r = lyapunov_spectrum(c, Representation::standard(), 1000, 2, 1);
    CHECK(r.exponent_estimates[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(r.exponent_estimates[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(r.std_errors[0] == doctest::Approx(0.0));
}

TEST_CASE("sl3 example: exact adjoint coordinate rates") {
    const auto c = sl3_chain();
    const auto rep = Representation::adjoint();
    const auto v18 = vector_growth_rate(c, rep, unit(8, adjoint_offdiag_index(3, 0, 2)), 1000, 4, 1);
    const auto v12 = vector_growth_rate(c, rep, unit(8, adjoint_offdiag_index(3, 1, 2)), 1000, 4, 1);
    CHECK(std::abs(v18.rate - std::log(18.0)) <= 1e-9);
    CHECK(std::abs(v12.rate - std::log(12.0)) <= 1e-9);
    CHECK(v18.std_error <= 1e-12);
    CHECK(v12.std_error <= 1e-12);
}

TEST_CASE("sl3 example: standard top exponent is log 3") {
    const auto r = lyapunov_spectrum(sl3_chain(), Representation::standard(), 5000, 4, 2);
    CHECK(std::abs(r.exponent_estimates[0] - std::log(3.0)) <= 3 * r.std_errors[0] + 1e-9);
    double sum = 0.0, se2 = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        sum += r.exponent_estimates[i];
        se2 += r.std_errors[i] * r.std_errors[i];
    }
    CHECK(std::abs(sum) <= 3 * std::sqrt(se2) + 1e-9);
}

TEST_CASE("identity process does not grow any vector") {
    const auto c = ChainSpec::iid({Mat::Identity(3, 3)}, {1.0});
    const auto g = vector_growth_rate(c, Representation::standard(), Vec::Ones(3), 1000, 2, 1);
    CHECK(g.rate == doctest::Approx(0.0));
    CHECK_THROWS_AS(vector_growth_rate(c, Representation::standard(), Vec::Zero(3), 10, 1, 1), Error);
}

TEST_CASE("representation size cap") {
    const auto c = ChainSpec::iid({Mat::Identity(14, 14)}, {1.0});
    try {
        lyapunov_spectrum(c, Representation::wedge(7), 1000, 1, 1);
        FAIL("expected Size");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Size);
    }
}

TEST_CASE("random SL_3 chain: sum rule, wedge and direct consistency") {
    Rng rng(33);
    const auto c = ChainSpec::iid({random_sl(3, rng), random_sl(3, rng), random_sl(3, rng)}, {1.0, 2.0, 1.0});
    const auto std_rep = lyapunov_spectrum(c, Representation::standard(), 4000, 6, 5, true);
    const auto& e = std_rep.exponent_estimates;
    CHECK(e[0] >= e[1] - 1e-9);
    CHECK(e[1] >= e[2] - 1e-9);
    // direct_partial_sums[k] is the grade-k sum
    CHECK(std::isnan(std_rep.direct_partial_sums[0]));
    for (std::size_t k = 1; k < 3; ++k) {
        double qr = 0.0, se2 = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            qr += e[i];
            se2 += std_rep.std_errors[i] * std_rep.std_errors[i];
        }
        const double se = std::sqrt(se2 + std::pow(std_rep.direct_partial_sums_se[k], 2));
        CHECK(std::abs(std_rep.direct_partial_sums[k] - qr) <= 3 * se + 1e-3);
    }
    const auto w2 = lyapunov_spectrum(c, Representation::wedge(2), 4000, 6, 5);
    const double se = std::sqrt(std::pow(w2.std_errors[0], 2) + std::pow(std_rep.std_errors[0], 2) +
                                std::pow(std_rep.std_errors[1], 2));
    CHECK(std::abs(w2.exponent_estimates[0] - (e[0] + e[1])) <= 3 * se + 1e-3);
    const auto g = vector_growth_rate(c, Representation::standard(), Vec::Ones(3), 4000, 6, 5);
    CHECK(g.rate <= e[0] + 3 * (g.std_error + std_rep.std_errors[0]) + 1e-3);
    CHECK(g.rate >= e[2] - 3 * (g.std_error + std_rep.std_errors[2]) - 1e-3);
}

TEST_CASE("expansion falsifier: identity and symmetric mixture fail") {
    ExpansionOptions opt;
    opt.n_steps = 2000;
    opt.n_samples = 30;
    opt.mc_samples = 400;
    const auto id = grassmannian_expansion_check(ChainSpec::iid({Mat::Identity(2, 2)}, {1.0}),
                                                 Representation::standard(), 1, opt, 1);
    CHECK(id.counterexample);
    CHECK(id.min_sampled_rate == doctest::Approx(0.0));
    const auto mix = grassmannian_expansion_check(ChainSpec::iid({diag2(2, 0.5), diag2(0.5, 2)}, {1.0, 1.0}),
                                                  Representation::standard(), 1, opt, 1);
    CHECK(mix.counterexample);
    CHECK(std::abs(mix.min_sampled_rate) < 0.1);
}

TEST_CASE("expansion falsifier: sl3 adjoint expands at extreme grades") {
    ExpansionOptions opt;
    opt.n_steps = 2000;
    opt.n_samples = 40;
    opt.mc_samples = 400;
    for (int k : {1, 7}) {
        const auto v = grassmannian_expansion_check(sl3_chain(), Representation::adjoint(), k, opt, 3);
        CHECK_FALSE(v.counterexample);
        CHECK(v.min_sampled_rate > 0.5);
        CHECK(v.witness.cols() == k);
    }
    CHECK_THROWS_AS(grassmannian_expansion_check(sl3_chain(), Representation::adjoint(), 8, opt, 3), Error);
}
