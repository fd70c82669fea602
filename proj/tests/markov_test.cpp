#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "latwalk/error.hpp"
#include "latwalk/markov.hpp"

using namespace latwalk;

namespace {

Mat diag2(double a, double b) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

// rows[i][j] = P(i -> j)
ChainSpec chain(const std::vector<std::vector<double>>& rows, std::vector<Mat> coding) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    ChainSpec c;
    c.trans = Mat(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) c.trans(j, i) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) c.labels.push_back(std::string(1, static_cast<char>('a' + i)));
    c.coding = std::move(coding);
    c.start = Vec::Constant(n, 1.0 / static_cast<double>(n));
    return c;
}

ChainSpec flip() { return chain({{0, 1}, {1, 0}}, {diag2(2, 0.5), diag2(0.5, 2)}); }
ChainSpec ab_chain(double ta = 1.0, double tb = -0.2) {
    return chain({{0, 1}, {0.5, 0.5}}, {diag2(std::exp(ta), std::exp(-ta)), diag2(std::exp(tb), std::exp(-tb))});
}
ChainSpec single(double t = std::log(2.0)) { return chain({{1}}, {diag2(std::exp(t), std::exp(-t))}); }

}  // namespace

TEST_CASE("validate_chain examples") {
    const auto r1 = validate_chain(flip());
    CHECK(r1.irreducible);
    CHECK(r1.exponentially_recurrent);
    CHECK(r1.universally_accessible.empty());
    const auto r2 = validate_chain(ab_chain());
    CHECK(r2.irreducible);
    CHECK(r2.universally_accessible == std::vector<int>{1});
    const auto r3 = validate_chain(single());
    CHECK(r3.irreducible);
    CHECK(r3.universally_accessible == std::vector<int>{0});
}

TEST_CASE("validate_chain names the offending state") {
    auto c = chain({{0.5, 0.49}, {0.5, 0.5}}, {Mat::Identity(2, 2), Mat::Identity(2, 2)});
    try {
        validate_chain(c);
        FAIL("expected Validation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        CHECK(std::string(e.what()).find("'a'") != std::string::npos);
    }
    auto neg = chain({{1.2, -0.2}, {0.5, 0.5}}, {Mat::Identity(2, 2), Mat::Identity(2, 2)});
    CHECK_THROWS_AS(validate_chain(neg), Error);
}

TEST_CASE("stationary_distribution examples") {
    const Vec p1 = stationary_distribution(flip());
    CHECK(p1(0) == doctest::Approx(0.5));
    CHECK(p1(1) == doctest::Approx(0.5));
    const auto c = ab_chain();
    const Vec p2 = stationary_distribution(c);
    CHECK(p2(0) == doctest::Approx(1.0 / 3.0));
    CHECK(p2(1) == doctest::Approx(2.0 / 3.0));
    CHECK((c.trans * p2 - p2).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(stationary_distribution(single())(0) == doctest::Approx(1.0));
    const auto reducible = chain({{1, 0}, {0.5, 0.5}}, {Mat::Identity(2, 2), Mat::Identity(2, 2)});
    CHECK_THROWS_AS(stationary_distribution(reducible), Error);
}

TEST_CASE("sample_excursion examples") {
    Rng rng(1);
    const auto s = sample_excursion(single(), 0, rng);
    CHECK(s.word == std::vector<int>{0});
    CHECK(s.weight == doctest::Approx(1.0));
    CHECK((s.element - diag2(2, 0.5)).cwiseAbs().maxCoeff() < 1e-12);

    const auto c = ab_chain();
    const ChainSampler sampler(c);
    std::map<std::vector<int>, int> counts;
    double sum = 0.0, sum_sq = 0.0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) {
        const auto e = sample_excursion(c, sampler, 0, rng);
        ++counts[e.word];
        const double len = static_cast<double>(e.word.size());
        sum += len;
        sum_sq += len * len;
    }
    const double ba = counts[{0, 1}] / double(n), bba = counts[{0, 1, 1}] / double(n);
    CHECK(std::abs(ba - 0.5) < 3 * std::sqrt(0.25 / n) + 1e-12);
    CHECK(std::abs(bba - 0.25) < 3 * std::sqrt(0.1875 / n) + 1e-12);
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    CHECK(std::abs(mean - 3.0) <= 3 * se);
}

TEST_CASE("renewal_words weights") {
    const auto words = renewal_words(ab_chain(), 0, 0.999);
    REQUIRE(words.size() >= 2);
    CHECK(words[0].word == std::vector<int>{0, 1});
    CHECK(words[0].weight == doctest::Approx(0.5));
    CHECK(words[1].word == std::vector<int>{0, 1, 1});
    CHECK(words[1].weight == doctest::Approx(0.25));
    double mass = 0.0;
    for (const auto& w : words) mass += w.weight;
    CHECK(mass >= 0.999);
}

TEST_CASE("excursion_stats examples") {
    Rng rng(2);
    const auto s = excursion_stats(single(), 0, 1000, rng);
    CHECK(s.mean_tau == doctest::Approx(1.0));
    CHECK(s.log_moment == doctest::Approx(std::log(2.0)));

    const auto t = excursion_stats(ab_chain(), 0, 100'000, rng);
    CHECK(std::abs(t.pi_estimate(0) - 1.0 / 3.0) <= 3 * t.pi_se(0));
    CHECK(std::abs(t.pi_estimate(1) - 2.0 / 3.0) <= 3 * t.pi_se(1));
    for (std::size_t i = 1; i < t.delta_moments.size(); ++i) CHECK(t.delta_moments[i] >= t.delta_moments[i - 1]);
    CHECK(t.tail_rate < 1.0);
    CHECK(std::abs(t.lag1_autocorrelation) <= 3.0 / std::sqrt(100'000.0));
}

TEST_CASE("renewal_t_identity examples") {
    Rng rng(3);
    const auto s = renewal_t_identity(single(), 0, 1000, rng, 1, 1);
    CHECK(s.lhs == doctest::Approx(std::log(2.0)));
    CHECK(s.rhs == doctest::Approx(std::log(2.0)));

    const auto r = renewal_t_identity(ab_chain(), 0, 100'000, rng, 1, 1);
    CHECK(r.rhs == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(std::abs(r.lhs - 0.6) <= 3 * r.lhs_se);
    CHECK(std::abs(r.z_score) <= 3.0);

    const auto neg = renewal_t_identity(ab_chain(-1.0, 0.2), 0, 1000, rng, 1, 1);
    CHECK((neg.rhs > 0) == (neg.drift > 0));
    CHECK(neg.rhs < 0);

    auto bad = ab_chain();
    bad.coding[0] = Mat::Identity(2, 2);
    bad.coding[0](1, 0) = 0.3;
    try {
        renewal_t_identity(bad, 0, 10, rng, 1, 1);
        FAIL("expected NotInP");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotInP);
    }
}

TEST_CASE("excursion word test passes for the two-state chain") {
    Rng rng(4);
    const auto t = excursion_word_test(ab_chain(), 0, 100'000, rng);
    CHECK(t.p_value >= 0.001);
}

TEST_CASE("iid chains have every column equal to the law") {
    const auto c = ChainSpec::iid({diag2(2, 0.5), diag2(0.5, 2)}, {1.0, 3.0});
    CHECK(c.trans(0, 0) == doctest::Approx(0.25));
    CHECK(c.trans(0, 1) == doctest::Approx(0.25));
    CHECK(c.trans(1, 0) == doctest::Approx(0.75));
    CHECK(validate_chain(c).irreducible);
}

TEST_CASE("sampler is deterministic per (seed, replica)") {
    const auto c = ab_chain();
    const ChainSampler sampler(c);
    Rng a(9, 3), b(9, 3), other(9, 4);
    std::vector<int> xa, xb, xo;
    int sa = sampler.draw_start(a), sb = sampler.draw_start(b), so = sampler.draw_start(other);
    for (int i = 0; i < 200; ++i) {
        xa.push_back(sa = sampler.step(sa, a));
        xb.push_back(sb = sampler.step(sb, b));
        xo.push_back(so = sampler.step(so, other));
    }
    CHECK(xa == xb);
    CHECK(xa != xo);
}
