#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "latwalk/error.hpp"
#include "latwalk/fractal.hpp"
#include "latwalk/lattice.hpp"

using namespace latwalk;
using json = nlohmann::json;

namespace {

GDIFS cantor() {
    return gdifs_from_json(json::parse(R"({"vertices": ["v"], "edges": [
        {"id": "0", "from": "v", "to": "v", "ratio": 0.3333333333333333, "translation": [[0]]},
        {"id": "1", "from": "v", "to": "v", "ratio": 0.3333333333333333, "translation": [[0.6666666666666666]]}],
        "boxes": [{"lower": [[0]], "upper": [[1]]}]})"));
}

GDIFS two_vertex() {
    return gdifs_from_json(json::parse(R"({"vertices": ["u", "v"], "edges": [
        {"id": "uv", "from": "u", "to": "v", "ratio": 0.5, "translation": [[0]]},
        {"id": "vu", "from": "v", "to": "u", "ratio": 0.5, "translation": [[0.5]]},
        {"id": "vv", "from": "v", "to": "v", "ratio": 0.5, "translation": [[0]]}]})"));
}

GDIFS single_loop(double r, double b = 0.0) {
    return gdifs_from_json(json{{"vertices", {"v"}},
                                {"edges", {{{"id", "0"}, {"from", "v"}, {"to", "v"}, {"ratio", r}, {"translation", json::array({json::array({b})})}}}}});
}

MatR real1(const Real& x) {
    MatR m(1, 1);
    m(0, 0) = x;
    return m;
}

std::string error_text(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("gdifs loading aggregates errors") {
    const auto msg = error_text([] {
        gdifs_from_json(json::parse(R"({"vertices": ["u", "v"], "edges": [
            {"from": "u", "to": "w", "ratio": 0.5},
            {"from": "v", "to": "u", "ratio": -1},
            {"from": "v", "to": "v", "ratio": 0.5, "o1": [[2, 0]]}]})"));
    });
    CHECK(msg.find("edges[0].to") != std::string::npos);
    CHECK(msg.find("edges[1].ratio") != std::string::npos);
    CHECK(msg.find("edges[2].o1") != std::string::npos);
    const auto disconnected = error_text([] {
        gdifs_from_json(json::parse(R"({"vertices": ["u", "v"], "edges": [
            {"from": "u", "to": "v", "ratio": 0.5}, {"from": "v", "to": "v", "ratio": 0.5}]})"));
    });
    CHECK(disconnected.find("not connected") != std::string::npos);
}

TEST_CASE("gdifs JSON roundtrip") {
    const auto g = two_vertex();
    const auto back = gdifs_from_json(gdifs_to_json(g));
    CHECK(gdifs_to_json(back) == gdifs_to_json(g));
    CHECK(is_connected(g));
    CHECK(g.strictly_contracting());
}

TEST_CASE("hausdorff_dimension examples") {
    CHECK(hausdorff_dimension(single_loop(0.4)) == doctest::Approx(0.0));
    CHECK(std::abs(hausdorff_dimension(cantor()) - std::log(2.0) / std::log(3.0)) <= 1e-9);
    CHECK(std::abs(hausdorff_dimension(two_vertex()) - std::log2((1.0 + std::sqrt(5.0)) / 2.0)) <= 1e-9);
    const double s = hausdorff_dimension(two_vertex());
    CHECK(perron(dimension_matrix(two_vertex(), s)).root == doctest::Approx(1.0).epsilon(1e-10));
    try {
        hausdorff_dimension(single_loop(1.5));
        FAIL("expected Domain");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Domain);
    }
}

TEST_CASE("dimension is monotone under adding edges") {
    auto j = gdifs_to_json(cantor());
    const double s0 = hausdorff_dimension(cantor());
    j["edges"].push_back({{"id", "2"}, {"from", "v"}, {"to", "v"}, {"ratio", 0.1}, {"translation", json::array({json::array({0.45})})}});
    j.erase("boxes");
    CHECK(hausdorff_dimension(gdifs_from_json(j)) >= s0);
}

TEST_CASE("wang_measure examples") {
    const auto c = wang_measure(cantor());
    CHECK((c.trans.array() - 0.5).abs().maxCoeff() < 1e-12);
    CHECK((c.start.array() - 0.5).abs().maxCoeff() < 1e-12);

    const auto loop = wang_measure(single_loop(0.5));
    CHECK(loop.trans(0, 0) == doctest::Approx(1.0));

    const auto g = two_vertex();
    const auto w = wang_measure(g);
    for (Eigen::Index col = 0; col < w.trans.cols(); ++col) CHECK(w.trans.col(col).sum() == doctest::Approx(1.0).epsilon(1e-10));
    // adapted: p(e -> e') > 0 iff t(e) = i(e')
    for (std::size_t e = 0; e < g.edges.size(); ++e)
        for (std::size_t f = 0; f < g.edges.size(); ++f)
            CHECK((w.trans(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(e)) > 0) == (g.edges[e].to == g.edges[f].from));
    const Vec pi = stationary_distribution(w);
    Rng rng(1);
    const auto path = sample_path(w, 200'000, rng);
    for (int e = 0; e < 3; ++e) {
        const double freq = static_cast<double>(std::count(path.begin(), path.end(), e)) / 200'000.0;
        // serial correlation inflates the binomial s.e.; allow a generous factor
        CHECK(std::abs(freq - pi(e)) <= 3 * 4 * std::sqrt(pi(e) * (1 - pi(e)) / 200'000.0));
    }
}

TEST_CASE("Wang measure cylinder masses follow r^s h") {
    const auto g = two_vertex();
    const double s = hausdorff_dimension(g);
    const Vec h = perron(dimension_matrix(g, s)).vector;
    const auto w = wang_measure(g);
    Rng rng(2);
    // from vertex v the next edge is vu or vv with masses r^s h_u / h_v and r^s h_v / h_v
    int from_v = 0, to_u = 0;
    for (int i = 0; i < 10'000; ++i) {
        const auto p = sample_path(w, 2, rng);
        if (g.edges[static_cast<std::size_t>(p[0])].to != 1) continue;
        ++from_v;
        to_u += p[1] == 1;
    }
    const double want = std::pow(0.5, s) * h(0) / h(1);
    const double se = std::sqrt(want * (1 - want) / from_v);
    CHECK(std::abs(static_cast<double>(to_u) / from_v - want) <= 3 * se);

    // Cantor: projected points split evenly between the two first-level pieces
    const auto c = cantor();
    const auto cw = wang_measure(c);
    int left = 0;
    for (int i = 0; i < 10'000; ++i) {
        const auto p = natural_project(c, eventually_periodic(sample_path(cw, 40, rng), {}), 1e-12);
        left += p.point(0, 0) < 0.5;
    }
    CHECK(std::abs(left / 10'000.0 - 0.5) <= 3 * std::sqrt(0.25 / 10'000.0));
}

TEST_CASE("natural_project examples") {
    const auto g = cantor();
    const auto zero = natural_project(g, eventually_periodic({}, {0}), 1e-12);
    CHECK(std::abs(zero.point(0, 0)) <= 1e-12);
    CHECK(zero.error_bound <= 1e-12);
    const auto one = natural_project(g, eventually_periodic({}, {1}), 1e-12);
    CHECK(std::abs(one.point(0, 0) - 1.0) <= 1e-12);
    const auto quarter = natural_project(g, eventually_periodic({}, {0, 1}), 1e-12);
    CHECK(std::abs(quarter.point(0, 0) - 0.25) <= 1e-12);

    const auto far = natural_project(g, eventually_periodic({}, {0, 1}), 1e-12, Mat::Constant(1, 1, 50.0));
    CHECK(std::abs(far.point(0, 0) - quarter.point(0, 0)) <= far.error_bound + quarter.error_bound);

    const auto tv = two_vertex();
    try {
        natural_project(tv, eventually_periodic({}, {0, 0}), 1e-12);  // u->v then u->v: not a path
        FAIL("expected Path");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Path);
    }
    try {
        natural_project(single_loop(1.0, 0.5), eventually_periodic({}, {0}), 1e-12, Mat(), -0.1);
        FAIL("expected Divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Divergence);
    }
}

TEST_CASE("extended-precision projection") {
    const auto p = natural_project_mp(cantor(), eventually_periodic({}, {0, 1}), Real("1e-200"));
    // fixed point of phi_0 phi_1 with the stored binary coefficients
    const Real r(0.3333333333333333), b(0.6666666666666666);
    CHECK(boost::multiprecision::abs(p.point(0, 0) - r * b / (1 - r * r)) < Real("1e-190"));
    CHECK(boost::multiprecision::abs(p.point(0, 0) - Real(1) / 4) < Real("1e-15"));
}

TEST_CASE("trajectory_report examples") {
    TrajectoryOptions opt;
    opt.horizon = 30;
    opt.dt = 0.05;
    const auto golden = trajectory_report(real1(golden_ratio_conjugate()), opt);
    CHECK(golden.trajectory_min_shortest >= 0.3);
    CHECK(golden.badly_approx_evidence);
    CHECK(golden.samples == 601);
    const auto half = trajectory_report(real1(Real(1) / 2), opt);
    CHECK(half.trajectory_min_shortest < 1e-6);
    CHECK_FALSE(half.badly_approx_evidence);
    CHECK(half.dirichlet_improvable_evidence);

    opt.horizon = 250;
    CHECK_THROWS_AS(trajectory_report(real1(Real(1) / 2), opt), Error);
    opt.horizon = 10;
    opt.dt = 0.2;
    CHECK_THROWS_AS(trajectory_report(real1(Real(1) / 2), opt), Error);
}

TEST_CASE("Cantor Wang points have generic Siegel averages (T = 150)") {
    // single points are heavy-tailed in d = 2, so the test averages over points
    const auto g = cantor();
    const auto w = wang_measure(g);
    TrajectoryOptions opt;
    opt.horizon = 150;
    opt.dt = 0.05;
    opt.radii = {1.5};
    RunningStats avg;
    for (int i = 0; i < 24; ++i) {
        Rng rng(77, static_cast<std::uint64_t>(i));
        const auto p = natural_project_mp(g, eventually_periodic(sample_path(w, 700, rng), {}), Real("1e-200"));
        avg.push(trajectory_report(p.point, opt).siegel_time_average[0]);
    }
    const double target = M_PI * 1.5 * 1.5;
    CHECK(std::abs(avg.mean() - target) <= 0.1 * target);
}

TEST_CASE("direct_dioph_search examples") {
    const auto half = direct_dioph_search(real1(Real(1) / 2), 1000);
    for (std::size_t i = 0; i < half.q_max.size(); ++i)
        if (half.q_max[i] >= 2) CHECK(half.cumulative[i] == 0.0);
    const auto golden = direct_dioph_search(real1(golden_ratio_conjugate()), 1000);
    REQUIRE(golden.q_max.back() == 1000);
    CHECK(std::abs(golden.shell.back() - 0.4472) <= 1e-3);
    for (std::size_t i = 1; i < golden.cumulative.size(); ++i) CHECK(golden.cumulative[i] <= golden.cumulative[i - 1]);
    CHECK_THROWS_AS(direct_dioph_search(real1(golden_ratio_conjugate()), 100'000'000'000'000L), Error);
}

TEST_CASE("Dani consistency on random alphas") {
    // with T = 10: cum(e^T) <= traj_min^2 and traj_min <= max(sqrt(cum(e^T / 10)) e^{dt/2}, 0.1 e^dt)
    Rng rng(5);
    TrajectoryOptions opt;
    opt.horizon = 10;
    opt.dt = 0.02;
    const long q_full = static_cast<long>(std::floor(std::exp(10.0)));
    for (int i = 0; i < 20; ++i) {
        const auto alpha = real1(Real(rng.uniform()));
        const auto rep = trajectory_report(alpha, opt);
        const auto full = direct_dioph_search(alpha, q_full);
        const auto tenth = direct_dioph_search(alpha, q_full / 10);
        const double m = rep.trajectory_min_shortest;
        CHECK(full.cumulative.back() <= m * m * (1 + 1e-9));
        CHECK(m <= std::max(std::sqrt(tenth.cumulative.back()) * std::exp(opt.dt / 2), 0.1 * std::exp(opt.dt)) + 1e-12);
    }
}

TEST_CASE("cf_digits examples") {
    const auto g = cf_digits(golden_ratio_conjugate() - Real("1e-250"), golden_ratio_conjugate() + Real("1e-250"), 300);
    CHECK(g.digits.size() >= 300);
    CHECK(std::all_of(g.digits.begin(), g.digits.end(), [](int d) { return d == 1; }));
    const auto half = cf_digits(0.5, 10);
    CHECK(half.digits == std::vector<int>{2});
    CHECK(half.terminated);
    const auto two_sevenths = cf_digits(2.0 / 7.0, 10);
    CHECK(two_sevenths.digits == std::vector<int>{3, 2});
    CHECK(two_sevenths.terminated);
    const auto short_double = cf_digits((std::sqrt(5.0) - 1) / 2, 100);
    CHECK(short_double.precision_exhausted);
    CHECK(short_double.digits.size() < 100);
}

TEST_CASE("cf_digits reconstruction error is below 1/q_n^2") {
    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
        const double x = rng.uniform();
        const auto cf = cf_digits(x, 12);
        long double p0 = 0, q0 = 1, p1 = 1, q1 = static_cast<long double>(cf.digits[0]);
        for (std::size_t k = 1; k < cf.digits.size(); ++k) {
            const long double a = cf.digits[k];
            const long double p2 = a * p1 + p0, q2 = a * q1 + q0;
            p0 = p1;
            q0 = q1;
            p1 = p2;
            q1 = q2;
        }
        CHECK(std::abs(static_cast<long double>(x) - p1 / q1) <= 1.0L / (q1 * q1));
    }
}

TEST_CASE("gauss_statistics examples") {
    CHECK(gauss_probability(1) == doctest::Approx(0.415037).epsilon(1e-6));
    double total = 0.0;
    for (int k = 1; k < 10'000; ++k) total += gauss_probability(k);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
    const std::vector<std::vector<int>> golden(100, std::vector<int>(50, 1));
    const auto gs = gauss_statistics(golden);
    CHECK(gs.digit1_frequency == 1.0);
    CHECK(gs.non_generic);
    try {
        gauss_statistics(std::vector<std::vector<int>>(99, std::vector<int>(5, 1)));
        FAIL("expected InsufficientData");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientData);
    }
}

TEST_CASE("magic formula examples") {
    const auto g = cantor();
    const auto w = wang_measure(g);
    Rng rng(3);
    const auto omega = sample_path(w, 120, rng);
    CHECK(magic_formula_check(g, omega, 0).residual == doctest::Approx(0.0));
    CHECK(magic_formula_check(g, omega, 20).residual <= 1e-6);
    CHECK(magic_formula_check(g, omega, 50).residual <= 1e-6);
    CHECK_THROWS_AS(magic_formula_check(g, std::vector<int>(omega.begin(), omega.begin() + 25), 20), Error);
}

TEST_CASE("flow times have bounded gaps") {
    const auto g = two_vertex();
    const auto w = wang_measure(g);
    Rng rng(4);
    const auto omega = sample_path(w, 500, rng);
    const auto t = flow_times(g, omega);
    double max_t = 0.0;
    for (const auto& e : g.edges) max_t = std::max(max_t, std::abs(flow_time(coded_element(e.map), g.m_dim)));
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(std::abs(t[i] - t[i - 1]) <= max_t + 1e-12);
    CHECK(t.back() > 0.0);
}

TEST_CASE("irreducibility falsifier and open-set spot check") {
    CHECK_FALSE(find_invariant_subspaces(cantor()).has_value());
    // both maps fix 0: the point {0} is an invariant proper subspace
    const auto degenerate = gdifs_from_json(json::parse(R"({"vertices": ["v"], "edges": [
        {"from": "v", "to": "v", "ratio": 0.5}, {"from": "v", "to": "v", "ratio": 0.25}]})"));
    CHECK(find_invariant_subspaces(degenerate).has_value());

    Rng rng(6);
    CHECK(open_set_spot_check(cantor(), 500, rng));
    auto overlapping = gdifs_to_json(cantor());
    overlapping["edges"][1]["translation"] = json::array({json::array({0.2})});
    CHECK_FALSE(open_set_spot_check(gdifs_from_json(overlapping), 500, rng));
}
