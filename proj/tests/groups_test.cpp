#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "latwalk/error.hpp"
#include "latwalk/groups.hpp"
#include "latwalk/rng.hpp"

using namespace latwalk;

namespace {

Mat scalar(double x) { return Mat::Constant(1, 1, x); }

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("aku_decompose examples") {
    const auto id = aku_decompose(Mat::Identity(2, 2), 1, 1);
    CHECK(id.t == doctest::Approx(0.0));
    CHECK(id.o1(0, 0) == 1.0);
    CHECK(id.o2(0, 0) == 1.0);
    CHECK(id.alpha(0, 0) == doctest::Approx(0.0));

    Mat g(2, 2);
    g << 2, -1, 0, 0.5;
    const auto p = aku_decompose(g, 1, 1);
    CHECK(p.t == doctest::Approx(std::log(2.0)));
    CHECK(p.o1(0, 0) == 1.0);
    CHECK(p.o2(0, 0) == 1.0);
    CHECK(p.alpha(0, 0) == doctest::Approx(0.5));

    Vec y(1);
    y << 0.7;
    const Mat b = make_block_element(2.0, Mat::Identity(1, 1), y);
    const auto q = aku_decompose(b, 1, 1);
    CHECK(q.t == doctest::Approx(std::log(2.0)));
    CHECK(q.alpha(0, 0) == doctest::Approx(-0.5 * 0.7));
    CHECK(max_abs(aku_compose(q) - b) <= 1e-12);
}

TEST_CASE("aku_decompose rejects elements outside P") {
    Mat lower(2, 2);
    lower << 1, 0, 0.1, 1;
    CHECK_THROWS_AS(aku_decompose(lower, 1, 1), Error);
    Mat skew = Mat::Identity(3, 3);
    skew(0, 1) = 0.5;  // top-left 2x2 block not a scaled orthogonal matrix
    try {
        aku_decompose(skew, 2, 1);
        FAIL("expected NotInP");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotInP);
    }
    Mat singular = Mat::Zero(2, 2);
    singular(0, 1) = 1;
    CHECK_THROWS_AS(aku_decompose(singular, 1, 1), Error);
}

TEST_CASE("aku_compose examples") {
    CHECK(max_abs(aku_compose(PElement::identity(1, 1)) - Mat::Identity(2, 2)) == 0.0);
    PElement p = PElement::identity(1, 1);
    p.t = std::log(2.0);
    p.alpha = scalar(0.5);
    Mat want(2, 2);
    want << 2, -1, 0, 0.5;
    CHECK(max_abs(aku_compose(p) - want) < 1e-15);
}

TEST_CASE("P is closed under products") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        PElement p = PElement::identity(2, 1), q = PElement::identity(2, 1);
        for (auto* x : {&p, &q}) {
            x->t = rng.normal();
            x->o1 = random_special_orthogonal(2, rng);
            x->alpha = Mat::Random(2, 1);
        }
        const Mat gh = aku_compose(p) * aku_compose(q);
        CHECK(max_abs(gh.bottomLeftCorner(1, 2)) <= 1e-9);
        CHECK_NOTHROW(aku_decompose(gh, 2, 1));
    }
}

TEST_CASE("similarity_action examples") {
    PElement a = PElement::identity(1, 1);
    a.t = std::log(2.0);
    CHECK(similarity_action(a, scalar(3))(0, 0) == doctest::Approx(12.0));
    PElement u = PElement::identity(1, 1);
    u.alpha = scalar(0.5);
    CHECK(similarity_action(u, scalar(3))(0, 0) == doctest::Approx(2.5));
    PElement k = PElement::identity(1, 1);
    k.o1 = scalar(-1);
    k.o2 = scalar(-1);
    CHECK(similarity_action(k, scalar(3))(0, 0) == doctest::Approx(3.0));
    CHECK_THROWS(similarity_action(a, Mat::Zero(2, 1)));
}

TEST_CASE("similarity_to_group examples") {
    const auto id = similarity_to_group(Similarity::scalar(1.0, 0.0));
    CHECK(max_abs(aku_compose(id) - Mat::Identity(2, 2)) < 1e-15);

    Rng rng(8);
    for (double b : {0.0, 2.0 / 3.0}) {
        const auto phi = Similarity::scalar(1.0 / 3.0, b);
        const auto p = similarity_to_group(phi);
        CHECK(p.t == doctest::Approx(std::log(1.0 / 3.0) / 2.0));
        if (b == 0.0) CHECK(p.alpha(0, 0) == doctest::Approx(0.0));
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Mat beta = scalar(4.0 * rng.uniform() - 2.0);
            worst = std::max(worst, max_abs(similarity_action(p, beta) - phi.apply(beta)));
        }
        CHECK(worst <= 1e-12);
        const auto inv = similarity_to_group(phi.inverse());
        CHECK(inv.t == doctest::Approx(std::log(3.0) / 2.0));
        CHECK(inv.t > 0.0);
    }
    CHECK_THROWS_AS(similarity_to_group(Similarity::scalar(0.0, 0.0)), Error);
    CHECK_THROWS_AS(similarity_to_group(Similarity::scalar(-1.0, 0.0)), Error);
}

TEST_CASE("group_to_similarity inverts similarity_to_group") {
    const auto phi = Similarity::scalar(0.25, 0.3);
    const auto back = group_to_similarity(similarity_to_group(phi));
    CHECK(back.ratio == doctest::Approx(0.25));
    CHECK(back.translation(0, 0) == doctest::Approx(0.3));
}

TEST_CASE("make_block_element examples") {
    const Mat g = make_block_element(2.0, Mat::Identity(1, 1), Vec::Zero(1));
    Mat want(2, 2);
    want << 2, 0, 0, 0.5;
    CHECK(max_abs(g - want) < 1e-15);
    CHECK(flow_time(g, 1) == doctest::Approx(std::log(2.0)));

    Vec y(2);
    y << 1, 0;
    const Mat h = make_block_element(2.0, Mat::Identity(2, 2), y);
    CHECK(max_abs(h.topLeftCorner(2, 2) - 2.0 * Mat::Identity(2, 2)) < 1e-15);
    CHECK(h(0, 2) == 1.0);
    CHECK(h(1, 2) == 0.0);
    CHECK(h(2, 2) == doctest::Approx(0.25));
    CHECK(h.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(flow_time(h, 2) == doctest::Approx(2.0 * std::log(2.0)));

    try {
        make_block_element(1.0, Mat::Identity(1, 1), Vec::Zero(1));
        FAIL("expected Domain");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Domain);
    }
}

TEST_CASE("sl3_paper_example") {
    const auto g = sl3_paper_example();
    Vec d(3);
    d << 3, 2, 1.0 / 6;
    CHECK(max_abs(g[0] - Mat(d.asDiagonal())) == 0.0);
    CHECK(g[1](0, 2) == 1.0);
    CHECK(g[2](1, 2) == 1.0);
    for (const auto& m : g) CHECK(m.determinant() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("multiply and inverse agree with matrices") {
    Rng rng(12);
    PElement p = PElement::identity(2, 2), q = PElement::identity(2, 2);
    for (auto* x : {&p, &q}) {
        x->t = rng.normal();
        x->o1 = random_orthogonal(2, rng);
        x->o2 = random_orthogonal(2, rng);
        x->alpha = Mat::Random(2, 2);
    }
    CHECK(max_abs(aku_compose(multiply(p, q)) - aku_compose(p) * aku_compose(q)) < 1e-10);
    CHECK(max_abs(aku_compose(inverse(p)) * aku_compose(p) - Mat::Identity(4, 4)) < 1e-10);
}

TEST_CASE("normalize_signs moves scalar signs") {
    Similarity s = Similarity::scalar(0.5, 0.1);
    s.o1 = scalar(-1);
    s.o2 = scalar(-1);
    const auto n = normalize_signs(s);
    CHECK(n.o1(0, 0) == 1.0);
    CHECK(n.o2(0, 0) == 1.0);
    CHECK(n.apply(scalar(0.7))(0, 0) == doctest::Approx(s.apply(scalar(0.7))(0, 0)));
}
