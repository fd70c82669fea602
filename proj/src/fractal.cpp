#include "latwalk/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "latwalk/error.hpp"
#include "latwalk/lattice.hpp"
#include "latwalk/lll.hpp"

namespace latwalk {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// structure

int GDIFS::vertex_index(const std::string& name) const {
    const auto it = std::find(vertices.begin(), vertices.end(), name);
    if (it == vertices.end()) throw Error(ErrorKind::Validation, "unknown vertex '" + name + "'");
    return static_cast<int>(it - vertices.begin());
}

double GDIFS::max_ratio() const {
    double r = 0.0;
    for (const auto& e : edges) r = std::max(r, e.map.ratio);
    return r;
}

namespace {

Mat read_matrix(const json& j, int rows, int cols, const std::string& path, std::vector<std::string>& errors) {
    if (j.is_number()) {
        if (rows == 1 && cols == 1) return Mat::Constant(1, 1, j.get<double>());
        errors.push_back(path + ": expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
        return Mat::Zero(rows, cols);
    }
    if (!j.is_array() || static_cast<int>(j.size()) != rows) {
        errors.push_back(path + ": expected " + std::to_string(rows) + " rows");
        return Mat::Zero(rows, cols);
    }
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            errors.push_back(path + "[" + std::to_string(r) + "]: expected " + std::to_string(cols) + " entries");
            return Mat::Zero(rows, cols);
        }
        for (int c = 0; c < cols; ++c) {
            if (!row[static_cast<std::size_t>(c)].is_number()) {
                errors.push_back(path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]: not a number");
                return Mat::Zero(rows, cols);
            }
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

json write_matrix(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
    return out;
}

}  // namespace

GDIFS gdifs_from_json(const json& j) {
    std::vector<std::string> errors;
    GDIFS g;
    g.m_dim = j.value("m_dim", 1);
    g.n_dim = j.value("n_dim", 1);
    if (g.m_dim < 1 || g.n_dim < 1) throw Error(ErrorKind::Validation, "gdifs: m_dim and n_dim must be positive");
    if (!j.contains("vertices") || !j["vertices"].is_array() || j["vertices"].empty())
        throw Error(ErrorKind::Validation, "gdifs.vertices: expected a nonempty list of names");
    for (const auto& v : j["vertices"]) g.vertices.push_back(v.get<std::string>());
    if (!j.contains("edges") || !j["edges"].is_array() || j["edges"].empty())
        throw Error(ErrorKind::Validation, "gdifs.edges: expected a nonempty list");
    std::size_t k = 0;
    for (const auto& e : j["edges"]) {
        const std::string path = "gdifs.edges[" + std::to_string(k++) + "]";
        GdifsEdge edge;
        edge.id = e.value("id", std::to_string(k - 1));
        auto vertex = [&](const char* key) {
            if (!e.contains(key) || !e[key].is_string()) {
                errors.push_back(path + "." + key + ": missing vertex name");
                return 0;
            }
            const auto name = e[key].get<std::string>();
            const auto it = std::find(g.vertices.begin(), g.vertices.end(), name);
            if (it == g.vertices.end()) {
                errors.push_back(path + "." + key + ": unknown vertex '" + name + "'");
                return 0;
            }
            return static_cast<int>(it - g.vertices.begin());
        };
        edge.from = vertex("from");
        edge.to = vertex("to");
        edge.map.m_dim = g.m_dim;
        edge.map.n_dim = g.n_dim;
        if (!e.contains("ratio") || !e["ratio"].is_number())
            errors.push_back(path + ".ratio: missing number");
        else
            edge.map.ratio = e["ratio"].get<double>();
        edge.map.o1 = e.contains("o1") ? read_matrix(e["o1"], g.m_dim, g.m_dim, path + ".o1", errors)
                                       : Mat::Identity(g.m_dim, g.m_dim);
        edge.map.o2 = e.contains("o2") ? read_matrix(e["o2"], g.n_dim, g.n_dim, path + ".o2", errors)
                                       : Mat::Identity(g.n_dim, g.n_dim);
        edge.map.translation = e.contains("translation")
                                   ? read_matrix(e["translation"], g.m_dim, g.n_dim, path + ".translation", errors)
                                   : Mat::Zero(g.m_dim, g.n_dim);
        g.edges.push_back(edge);
    }
    if (j.contains("boxes")) {
        const auto& boxes = j["boxes"];
        if (!boxes.is_array() || boxes.size() != g.vertices.size()) {
            errors.push_back("gdifs.boxes: expected one entry per vertex");
        } else {
            for (std::size_t v = 0; v < boxes.size(); ++v) {
                if (boxes[v].is_null()) {
                    g.boxes.emplace_back();
                    continue;
                }
                const std::string path = "gdifs.boxes[" + std::to_string(v) + "]";
                VertexBox b{read_matrix(boxes[v].value("lower", json()), g.m_dim, g.n_dim, path + ".lower", errors),
                            read_matrix(boxes[v].value("upper", json()), g.m_dim, g.n_dim, path + ".upper", errors)};
                g.boxes.emplace_back(b);
            }
        }
    }
    for (const auto& msg : validate_gdifs(g)) errors.push_back(msg);
    if (!errors.empty()) throw Error(ErrorKind::Validation, join(errors));
    return g;
}

json gdifs_to_json(const GDIFS& g) {
    json edges = json::array();
    for (const auto& e : g.edges)
        edges.push_back({{"id", e.id},
                         {"from", g.vertices[static_cast<std::size_t>(e.from)]},
                         {"to", g.vertices[static_cast<std::size_t>(e.to)]},
                         {"ratio", e.map.ratio},
                         {"o1", write_matrix(e.map.o1)},
                         {"o2", write_matrix(e.map.o2)},
                         {"translation", write_matrix(e.map.translation)}});
    json out{{"m_dim", g.m_dim}, {"n_dim", g.n_dim}, {"vertices", g.vertices}, {"edges", edges}};
    if (!g.boxes.empty()) {
        json boxes = json::array();
        for (const auto& b : g.boxes)
            boxes.push_back(b ? json{{"lower", write_matrix(b->lower)}, {"upper", write_matrix(b->upper)}} : json());
        out["boxes"] = boxes;
    }
    return out;
}

bool is_connected(const GDIFS& g) {
    const int n = static_cast<int>(g.vertices.size());
    auto reach = [&](bool forward) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (const auto& e : g.edges) {
                const int a = forward ? e.from : e.to;
                const int b = forward ? e.to : e.from;
                if (a == v && !seen[static_cast<std::size_t>(b)]) {
                    seen[static_cast<std::size_t>(b)] = 1;
                    stack.push_back(b);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return n > 0 && reach(true) && reach(false);
}

std::vector<std::string> validate_gdifs(const GDIFS& g) {
    std::vector<std::string> errors;
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        const auto& e = g.edges[k];
        const std::string path = "gdifs.edges[" + std::to_string(k) + "]";
        const auto nv = static_cast<int>(g.vertices.size());
        if (e.from < 0 || e.from >= nv || e.to < 0 || e.to >= nv) errors.push_back(path + ": vertex out of range");
        if (!(e.map.ratio > 0.0) || !std::isfinite(e.map.ratio)) errors.push_back(path + ".ratio: must be positive");
        if (e.map.o1.rows() != g.m_dim || e.map.o1.cols() != g.m_dim || orthogonality_residual(e.map.o1) > kOrthoTol)
            errors.push_back(path + ".o1: not an orthogonal " + std::to_string(g.m_dim) + "x" +
                             std::to_string(g.m_dim) + " matrix");
        if (e.map.o2.rows() != g.n_dim || e.map.o2.cols() != g.n_dim || orthogonality_residual(e.map.o2) > kOrthoTol)
            errors.push_back(path + ".o2: not an orthogonal " + std::to_string(g.n_dim) + "x" +
                             std::to_string(g.n_dim) + " matrix");
        if (e.map.translation.rows() != g.m_dim || e.map.translation.cols() != g.n_dim ||
            !is_finite(e.map.translation))
            errors.push_back(path + ".translation: bad shape or non-finite entry");
    }
    if (!g.edges.empty() && errors.empty() && !is_connected(g))
        errors.push_back("gdifs: graph is not connected (some ordered vertex pair has no path)");
    return errors;
}

// ---------------------------------------------------------------------------
// irreducibility falsifier and open-set spot check

namespace {

Vec flatten(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

Mat unflatten(const Vec& v, int rows, int cols) { return Eigen::Map<const Mat>(v.data(), rows, cols); }

// Fixed point of x -> r o1 x o2 + b, if the map is a strict contraction.
std::optional<Vec> fixed_point(const Similarity& s) {
    if (!(s.ratio < 1.0)) return std::nullopt;
    const Mat lin = Mat::Identity(s.m_dim * s.n_dim, s.m_dim * s.n_dim) -
                    s.ratio * Eigen::kroneckerProduct(s.o2.transpose(), s.o1).eval();
    return Vec(lin.partialPivLu().solve(flatten(s.translation)));
}

struct AffineHull {
    Vec origin;
    Mat basis;  // orthonormal columns
};

AffineHull affine_hull(const std::vector<Vec>& points) {
    AffineHull h{points.front(), Mat()};
    if (points.size() == 1) {
        h.basis = Mat(points.front().size(), 0);
        return h;
    }
    Mat diffs(points.front().size(), static_cast<Eigen::Index>(points.size() - 1));
    for (std::size_t i = 1; i < points.size(); ++i) diffs.col(static_cast<Eigen::Index>(i - 1)) = points[i] - points[0];
    Eigen::JacobiSVD<Mat> svd(diffs, Eigen::ComputeThinU);
    const double top = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-9 * std::max(1.0, top);
    h.basis = svd.matrixU().leftCols(rank);
    return h;
}

double distance_to_hull(const AffineHull& h, const Vec& p) {
    const Vec d = p - h.origin;
    return (d - h.basis * (h.basis.transpose() * d)).norm();
}

}  // namespace

std::optional<std::string> find_invariant_subspaces(const GDIFS& g) {
    const int nv = static_cast<int>(g.vertices.size());
    const int dim = g.m_dim * g.n_dim;
    constexpr std::size_t kMaxPaths = 20'000;
    std::vector<std::vector<Vec>> points(static_cast<std::size_t>(nv));
    // closed paths of length <= 4 starting at each vertex
    std::size_t visited = 0;
    std::vector<int> word;
    auto extend = [&](auto&& self, int start, int at, const Similarity& comp) -> void {
        if (visited >= kMaxPaths) return;
        for (std::size_t k = 0; k < g.edges.size(); ++k) {
            const auto& e = g.edges[k];
            if (e.from != at) continue;
            const Similarity next = comp.compose(e.map);
            ++visited;
            if (e.to == start)
                if (auto fp = fixed_point(next)) points[static_cast<std::size_t>(start)].push_back(*fp);
            word.push_back(static_cast<int>(k));
            if (word.size() < 4) self(self, start, e.to, next);
            word.pop_back();
        }
    };
    for (int v = 0; v < nv; ++v) {
        Similarity id{g.m_dim, g.n_dim, 1.0, Mat::Identity(g.m_dim, g.m_dim), Mat::Identity(g.n_dim, g.n_dim),
                      Mat::Zero(g.m_dim, g.n_dim)};
        extend(extend, v, v, id);
    }
    std::vector<AffineHull> hulls;
    for (int v = 0; v < nv; ++v) {
        if (points[static_cast<std::size_t>(v)].empty()) return std::nullopt;
        hulls.push_back(affine_hull(points[static_cast<std::size_t>(v)]));
        if (hulls.back().basis.cols() >= dim) return std::nullopt;  // full hull: no proper subspace here
    }
    for (const auto& e : g.edges) {
        const auto& src = hulls[static_cast<std::size_t>(e.to)];
        const auto& dst = hulls[static_cast<std::size_t>(e.from)];
        std::vector<Vec> probe{src.origin};
        for (Eigen::Index c = 0; c < src.basis.cols(); ++c) probe.push_back(src.origin + src.basis.col(c));
        for (const auto& p : probe) {
            const Vec img = flatten(e.map.apply(unflatten(p, g.m_dim, g.n_dim)));
            if (distance_to_hull(dst, img) > 1e-8 * std::max(1.0, img.norm())) return std::nullopt;
        }
    }
    std::ostringstream out;
    out << "invariant affine subspaces of dimensions";
    for (const auto& h : hulls) out << ' ' << h.basis.cols();
    return out.str();
}

bool open_set_spot_check(const GDIFS& g, std::size_t samples, Rng& rng) {
    if (g.boxes.size() != g.vertices.size()) return true;
    auto inside = [](const VertexBox& b, const Mat& x, double slack) {
        return ((x - b.lower).array() >= -slack).all() && ((b.upper - x).array() >= -slack).all();
    };
    auto sample = [&](const VertexBox& b) {
        Mat x(b.lower.rows(), b.lower.cols());
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = b.lower.data()[i] + rng.uniform() * (b.upper.data()[i] - b.lower.data()[i]);
        return x;
    };
    for (std::size_t u = 0; u < g.vertices.size(); ++u) {
        if (!g.boxes[u]) continue;
        const VertexBox& box = *g.boxes[u];
        std::vector<const GdifsEdge*> out;
        for (const auto& e : g.edges)
            if (e.from == static_cast<int>(u) && g.boxes[static_cast<std::size_t>(e.to)]) out.push_back(&e);
        // images stay inside the box
        for (const auto* e : out)
            for (std::size_t s = 0; s < samples; ++s)
                if (!inside(box, e->map.apply(sample(*g.boxes[static_cast<std::size_t>(e->to)])), 1e-12)) return false;
        // images have disjoint interiors
        for (std::size_t s = 0; s < samples; ++s) {
            const Mat y = sample(box);
            int hits = 0;
            for (const auto* e : out) {
                const Mat pre = e->map.inverse().apply(y);
                hits += inside(*g.boxes[static_cast<std::size_t>(e->to)], pre, -1e-12);
            }
            if (hits > 1) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// dimension and Wang measure

Mat dimension_matrix(const GDIFS& g, double s) {
    const auto n = static_cast<Eigen::Index>(g.vertices.size());
    Mat a = Mat::Zero(n, n);
    for (const auto& e : g.edges) a(e.from, e.to) += std::pow(e.map.ratio, s);
    return a;
}

Perron perron(const Mat& a) {
    const auto n = a.rows();
    if ((a.array() < 0.0).any()) throw Error(ErrorKind::Domain, "perron: matrix has negative entries");
    const Mat b = a + Mat::Identity(n, n);
    Vec h = Vec::Ones(n);
    double lo = 0.0, hi = 0.0;
    for (int it = 0; it < 1'000'000; ++it) {
        const Vec y = b * h;
        lo = std::numeric_limits<double>::infinity();
        hi = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = y(i) / h(i);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        h = y / y.maxCoeff();
        if (hi - lo <= 1e-15 * hi) break;
    }
    return {0.5 * (lo + hi) - 1.0, h};
}

namespace {

void require_contracting(const GDIFS& g, const char* where) {
    if (!g.strictly_contracting())
        throw Error(ErrorKind::Domain, std::string(where) + ": every edge ratio must be < 1");
    if (!is_connected(g)) throw Error(ErrorKind::Validation, std::string(where) + ": graph is not connected");
}

}  // namespace

double hausdorff_dimension(const GDIFS& g) {
    require_contracting(g, "hausdorff_dimension");
    auto excess = [&](double s) { return perron(dimension_matrix(g, s)).root - 1.0; };
    if (excess(0.0) <= 0.0) return 0.0;
    double lo = 0.0;
    double hi = 2.0 * g.m_dim * g.n_dim;
    while (excess(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw Error(ErrorKind::Divergence, "hausdorff_dimension: no root found");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Mat coded_element(const Similarity& phi) { return aku_compose(similarity_to_group(phi.inverse())); }

ChainSpec wang_measure(const GDIFS& g) {
    const double s = hausdorff_dimension(g);
    const Vec h = perron(dimension_matrix(g, s)).vector;
    const auto n = static_cast<Eigen::Index>(g.edges.size());
    ChainSpec chain;
    chain.trans = Mat::Zero(n, n);
    for (Eigen::Index from = 0; from < n; ++from) {
        const auto& e = g.edges[static_cast<std::size_t>(from)];
        for (Eigen::Index to = 0; to < n; ++to) {
            const auto& f = g.edges[static_cast<std::size_t>(to)];
            if (f.from != e.to) continue;
            chain.trans(to, from) = std::pow(f.map.ratio, s) * h(f.to) / h(f.from);
        }
        chain.trans.col(from) /= chain.trans.col(from).sum();
    }
    for (const auto& e : g.edges) {
        chain.labels.push_back(e.id);
        chain.coding.push_back(coded_element(e.map));
    }
    chain.start = Vec::Constant(n, 1.0 / static_cast<double>(n));
    chain.start = stationary_distribution(chain);
    return chain;
}

// ---------------------------------------------------------------------------
// natural projection

EdgePath eventually_periodic(std::vector<int> prefix, std::vector<int> cycle) {
    return [prefix = std::move(prefix), cycle = std::move(cycle)](std::size_t j) {
        if (j < prefix.size()) return prefix[j];
        if (cycle.empty()) throw Error(ErrorKind::Path, "edge path exhausted");
        return cycle[(j - prefix.size()) % cycle.size()];
    };
}

namespace {

int checked_edge(const GDIFS& g, const EdgePath& omega, std::size_t j, int previous) {
    const int e = omega(j);
    if (e < 0 || e >= static_cast<int>(g.edges.size()))
        throw Error(ErrorKind::Path, "edge index " + std::to_string(e) + " out of range at position " + std::to_string(j));
    if (previous >= 0 && g.edges[static_cast<std::size_t>(previous)].to != g.edges[static_cast<std::size_t>(e)].from)
        throw Error(ErrorKind::Path, "not a path at position " + std::to_string(j));
    return e;
}

double max_translation(const GDIFS& g) {
    double b = 0.0;
    for (const auto& e : g.edges) b = std::max(b, e.map.translation.norm());
    return b;
}

}  // namespace

Projection natural_project(const GDIFS& g, const EdgePath& omega, double tol, const Mat& seed_in,
                           std::optional<double> mean_log_ratio) {
    if (!(tol > 0.0)) throw Error(ErrorKind::Domain, "natural_project: tol must be positive");
    const Mat seed = seed_in.size() ? seed_in : Mat::Zero(g.m_dim, g.n_dim);
    const double rmax = g.max_ratio();
    double radius = 0.0;
    if (rmax < 1.0) {
        radius = max_translation(g) / (1.0 - rmax);
    } else {
        if (!mean_log_ratio || !(*mean_log_ratio < 0.0))
            throw Error(ErrorKind::Domain, "natural_project: not contracting and no negative mean log ratio given");
        radius = max_translation(g) / (1.0 - std::exp(*mean_log_ratio));
    }
    const double scale = seed.norm() + radius;
    Similarity comp{g.m_dim, g.n_dim, 1.0, Mat::Identity(g.m_dim, g.m_dim), Mat::Identity(g.n_dim, g.n_dim),
                    Mat::Zero(g.m_dim, g.n_dim)};
    std::size_t n = 0;
    int previous = -1;
    while (comp.ratio * scale > tol) {
        if (n >= kProjectionTermCap)
            throw Error(ErrorKind::Divergence, "natural_project: ratio product did not contract within 1e6 terms");
        previous = checked_edge(g, omega, n, previous);
        comp = comp.compose(g.edges[static_cast<std::size_t>(previous)].map);
        ++n;
    }
    return {comp.apply(seed), comp.ratio * scale, n};
}

namespace {

struct SimilarityR {
    Real ratio;
    MatR o1;
    MatR o2;
    MatR translation;

    MatR apply(const MatR& x) const { return MatR(ratio * (o1 * x * o2) + translation); }
};

SimilarityR to_real(const Similarity& s) {
    return {Real(s.ratio), latwalk::to_real(s.o1), latwalk::to_real(s.o2), latwalk::to_real(s.translation)};
}

}  // namespace

ProjectionR natural_project_mp(const GDIFS& g, const EdgePath& omega, const Real& tol) {
    require_contracting(g, "natural_project_mp");
    std::vector<SimilarityR> maps;
    for (const auto& e : g.edges) maps.push_back(to_real(e.map));
    const Real radius = Real(max_translation(g)) / (1 - Real(g.max_ratio()));
    Real ratio = 1;
    MatR o1 = MatR::Identity(g.m_dim, g.m_dim);
    MatR o2 = MatR::Identity(g.n_dim, g.n_dim);
    MatR translation = MatR::Zero(g.m_dim, g.n_dim);
    std::size_t n = 0;
    int previous = -1;
    while (ratio * radius > tol) {
        if (n >= kProjectionTermCap) throw Error(ErrorKind::Divergence, "natural_project_mp: too many terms");
        previous = checked_edge(g, omega, n, previous);
        const auto& f = maps[static_cast<std::size_t>(previous)];
        translation = MatR(ratio * (o1 * f.translation * o2) + translation);
        o1 = MatR(o1 * f.o1);
        o2 = MatR(f.o2 * o2);
        ratio *= f.ratio;
        ++n;
    }
    return {translation, ratio * radius, n};
}

std::vector<int> sample_path(const ChainSpec& chain, std::size_t length, Rng& rng) {
    std::vector<int> path;
    path.reserve(length);
    if (length == 0) return path;
    const ChainSampler sampler(chain);
    int state = sampler.draw_start(rng);
    path.push_back(state);
    while (path.size() < length) {
        state = sampler.step(state, rng);
        path.push_back(state);
    }
    return path;
}

// ---------------------------------------------------------------------------
// Dani battery

namespace {

std::vector<long> doubling_schedule(long q_max) {
    std::vector<long> qs;
    long q = q_max;
    while (true) {
        if (qs.empty() || qs.back() != q) qs.push_back(q);
        if (q <= 1) break;
        q = (q + 1) / 2;
    }
    std::reverse(qs.begin(), qs.end());
    return qs;
}

}  // namespace

DiophCurve direct_dioph_search(const MatR& alpha, long q_max) {
    const int m = static_cast<int>(alpha.rows());
    const int n = static_cast<int>(alpha.cols());
    if (q_max < 1) throw Error(ErrorKind::Domain, "direct_dioph_search: Q_max must be >= 1");
    if (n * std::log(static_cast<double>(q_max)) > 30.0)
        throw Error(ErrorKind::Domain, "direct_dioph_search: enumeration infeasible (N log Q > 30)");
    DiophCurve curve;
    curve.q_max = doubling_schedule(q_max);
    const auto shells = curve.q_max.size();
    curve.shell.assign(shells, std::numeric_limits<double>::infinity());
    const double exponent = static_cast<double>(n) / m;

    std::vector<long> q(static_cast<std::size_t>(n), -q_max);
    auto advance = [&] {
        for (int i = n - 1; i >= 0; --i) {
            if (++q[static_cast<std::size_t>(i)] <= q_max) return true;
            q[static_cast<std::size_t>(i)] = -q_max;
        }
        return false;
    };
    do {
        // one representative of each +-q pair: first nonzero coordinate positive
        long first = 0;
        long norm = 0;
        for (long c : q) {
            if (first == 0) first = c;
            norm = std::max(norm, std::labs(c));
        }
        if (first <= 0) continue;
        double dist = 0.0;
        for (int i = 0; i < m; ++i) {
            Real v = 0;
            for (int j = 0; j < n; ++j) v += alpha(i, j) * q[static_cast<std::size_t>(j)];
            const Real frac = v - boost::multiprecision::round(v);
            dist = std::max(dist, std::abs(static_cast<double>(frac)));
        }
        const double value = std::pow(static_cast<double>(norm), exponent) * dist;
        const auto shell = static_cast<std::size_t>(
            std::lower_bound(curve.q_max.begin(), curve.q_max.end(), norm) - curve.q_max.begin());
        curve.shell[shell] = std::min(curve.shell[shell], value);
    } while (advance());
    double running = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < shells; ++j) {
        running = std::min(running, curve.shell[j]);
        curve.cumulative.push_back(running);
    }
    return curve;
}

DiophCurve direct_dioph_search(const Mat& alpha, long q_max) { return direct_dioph_search(to_real(alpha), q_max); }

DiophReport trajectory_report(const MatR& alpha, const TrajectoryOptions& opt) {
    const int m = static_cast<int>(alpha.rows());
    const int n = static_cast<int>(alpha.cols());
    const int d = m + n;
    if (d > kMaxEnumerationDim) throw Error(ErrorKind::Dimension, "trajectory_report: M + N must not exceed 6");
    if (!(opt.horizon >= 0.0) || opt.horizon > 200.0)
        throw Error(ErrorKind::Domain, "trajectory_report: horizon must lie in [0, 200]");
    if (!(opt.dt > 0.0) || opt.dt > 0.1) throw Error(ErrorKind::Domain, "trajectory_report: dt must lie in (0, 0.1]");

    DiophReport rep;
    rep.alpha = to_double(alpha);
    rep.horizon = opt.horizon;
    rep.dt = opt.dt;
    rep.radii = opt.radii;
    std::vector<double> lambdas = opt.eps_list;
    if (std::find(lambdas.begin(), lambdas.end(), opt.thresholds.dirichlet_lambda) == lambdas.end())
        lambdas.push_back(opt.thresholds.dirichlet_lambda);
    for (double l : lambdas) rep.escape.push_back({l, false, -1.0});
    std::vector<double> siegel_sums(opt.radii.size(), 0.0);

    BasisT<Real> basis(d);
    for (int i = 0; i < d; ++i) basis(i, i) = 1;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) basis(i, m + j) = -alpha(i, j);
    const Real up = boost::multiprecision::exp(Real(opt.dt) / m);
    const Real down = boost::multiprecision::exp(-Real(opt.dt) / n);

    const auto steps = static_cast<std::size_t>(std::floor(opt.horizon / opt.dt + 1e-9));
    rep.trajectory_min_shortest = std::numeric_limits<double>::infinity();
    rep.trajectory_min_shortest_euclidean = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= steps; ++j) {
        const double t = static_cast<double>(j) * opt.dt;
        if (j > 0)
            for (int c = 0; c < d; ++c)
                for (int r = 0; r < d; ++r) basis(r, c) *= r < m ? up : down;
        lll_reduce(basis, kLllDelta);
        Mat b(d, d);
        for (int c = 0; c < d; ++c)
            for (int r = 0; r < d; ++r) b(r, c) = static_cast<double>(basis(r, c));
        const LatticePoint x(b, true);
        const double sup = shortest_vector(x, Norm::Sup).length;
        const double euc = shortest_vector(x, Norm::Euclidean).length;
        rep.trajectory_min_shortest = std::min(rep.trajectory_min_shortest, sup);
        rep.trajectory_min_shortest_euclidean = std::min(rep.trajectory_min_shortest_euclidean, euc);
        for (auto& k : rep.escape) {
            if (sup >= k.lambda) k.last_exit_time = t;
            k.outside_at_end = sup < k.lambda;
        }
        for (std::size_t i = 0; i < opt.radii.size(); ++i)
            siegel_sums[i] += static_cast<double>(siegel_transform(x, opt.radii[i]));
        rep.trace.emplace_back(t, sup);
        ++rep.samples;
    }
    bool generic = true;
    for (std::size_t i = 0; i < opt.radii.size(); ++i) {
        const double avg = siegel_sums[i] / static_cast<double>(rep.samples);
        const double target = ball_volume(d, opt.radii[i]);
        rep.siegel_time_average.push_back(avg);
        rep.siegel_targets.push_back(target);
        generic = generic && std::abs(avg - target) <= opt.thresholds.generic_rel_tol * target;
    }
    rep.badly_approx_evidence = rep.trajectory_min_shortest >= opt.thresholds.badly_approx_min;
    for (const auto& k : rep.escape)
        if (k.lambda == opt.thresholds.dirichlet_lambda)
            rep.dirichlet_improvable_evidence = k.outside_at_end && k.last_exit_time < 0.5 * opt.horizon;
    rep.generic_type_evidence = generic;
    if (opt.direct_q_max > 0) rep.direct_search_curve = direct_dioph_search(alpha, opt.direct_q_max);
    return rep;
}

DiophReport trajectory_report(const Mat& alpha, const TrajectoryOptions& options) {
    return trajectory_report(to_real(alpha), options);
}

// ---------------------------------------------------------------------------
// continued fractions

CfExpansion cf_digits(const Real& lo_in, const Real& hi_in, std::size_t n) {
    if (!(lo_in > 0) || !(hi_in < 1) || hi_in < lo_in)
        throw Error(ErrorKind::Domain, "cf_digits: interval must lie inside (0, 1)");
    CfExpansion out;
    Real lo = lo_in;
    Real hi = hi_in;
    while (out.digits.size() < n) {
        if (!(lo > 0)) {
            out.precision_exhausted = true;
            break;
        }
        const Real a = 1 / hi;
        const Real b = 1 / lo;
        const Real fa = boost::multiprecision::floor(a);
        const Real fb = boost::multiprecision::floor(b);
        if (fa == fb) {
            if (fa > Real(std::numeric_limits<int>::max())) {
                out.precision_exhausted = true;
                break;
            }
            out.digits.push_back(static_cast<int>(fa));
            lo = a - fa;
            hi = b - fa;
            continue;
        }
        // the interval of 1/x straddles an integer: either the number is
        // rational within precision, or the precision is used up
        if (fb == fa + 1 && b - a <= Real(1e-6)) {
            out.digits.push_back(static_cast<int>(fb));
            out.terminated = true;
        } else {
            out.precision_exhausted = true;
        }
        break;
    }
    return out;
}

CfExpansion cf_digits(double x, std::size_t n) {
    if (!(x > 0.0) || !(x < 1.0)) throw Error(ErrorKind::Domain, "cf_digits: x must lie in (0, 1)");
    const double ulp = std::nextafter(x, 2.0) - x;
    const Real lo = Real(x) - 2 * Real(ulp);
    const Real hi = std::min(Real(x) + 2 * Real(ulp), Real(std::nextafter(1.0, 0.0)));
    return cf_digits(lo > 0 ? lo : Real(x) / 2, hi, n);
}

double gauss_probability(int k) {
    if (k < 1) return 0.0;
    const double kk = static_cast<double>(k);
    return std::log2(1.0 + 1.0 / (kk * (kk + 2.0)));
}

GaussStats gauss_statistics(const std::vector<std::vector<int>>& expansions, int max_digit_bin) {
    if (expansions.size() < 100)
        throw Error(ErrorKind::InsufficientData, "gauss_statistics: need at least 100 points");
    if (max_digit_bin < 2) throw Error(ErrorKind::Domain, "gauss_statistics: need at least two bins");
    GaussStats st;
    st.points = expansions.size();
    st.max_digit_bin = max_digit_bin;
    std::vector<double> counts(static_cast<std::size_t>(max_digit_bin), 0.0);
    std::set<int> distinct;
    for (const auto& ex : expansions)
        for (int a : ex) {
            counts[static_cast<std::size_t>(std::min(a, max_digit_bin) - 1)] += 1.0;
            distinct.insert(a);
            ++st.digits;
        }
    if (st.digits == 0) throw Error(ErrorKind::InsufficientData, "gauss_statistics: no digits");
    const double total = static_cast<double>(st.digits);
    std::vector<double> expected;
    for (int k = 1; k <= max_digit_bin; ++k) {
        const double p = k < max_digit_bin ? gauss_probability(k) : std::log2((k + 1.0) / k);
        st.predicted.push_back(p);
        st.frequencies.push_back(counts[static_cast<std::size_t>(k - 1)] / total);
        st.deviations.push_back(st.frequencies.back() - p);
        expected.push_back(p * total);
    }
    st.chi_square = chi_square_gof(counts, expected);
    st.digit1_frequency = st.frequencies.front();
    st.non_generic = distinct.size() == 1;
    return st;
}

GaussStats gauss_statistics(const std::vector<double>& points, std::size_t digits_per_point, int max_digit_bin) {
    std::vector<std::vector<int>> expansions;
    for (double x : points) expansions.push_back(cf_digits(x, digits_per_point).digits);
    return gauss_statistics(expansions, max_digit_bin);
}

// ---------------------------------------------------------------------------
// magic formula

namespace {

struct CodedR {
    MatR g;
    Real t;
};

// g_e = phi_e^{-1} in P, built so that its action on M x N matrices is exactly
// the inverse similarity in extended precision.
CodedR coded_real(const Similarity& phi) {
    const int m = phi.m_dim;
    const int n = phi.n_dim;
    const Real r(phi.ratio);
    const Real t = -boost::multiprecision::log(r) / (Real(1) / m + Real(1) / n);
    const Real up = boost::multiprecision::exp(t / m);
    const Real down = boost::multiprecision::exp(-t / n);
    const MatR o1_inv = latwalk::to_real(phi.o1).inverse();
    const MatR o2 = latwalk::to_real(phi.o2);
    MatR g = MatR::Zero(m + n, m + n);
    g.topLeftCorner(m, m) = up * o1_inv;
    g.topRightCorner(m, n) = -up * o1_inv * latwalk::to_real(phi.translation);
    g.bottomRightCorner(n, n) = down * o2;
    return {g, t};
}

MatR unipotent(const MatR& beta) {
    const auto m = beta.rows();
    const auto n = beta.cols();
    MatR u = MatR::Identity(m + n, m + n);
    u.topRightCorner(m, n) = -beta;
    return u;
}

}  // namespace

MagicFormulaResult magic_formula_check(const GDIFS& g, const std::vector<int>& omega, std::size_t n, double tol) {
    require_contracting(g, "magic_formula_check");
    if (omega.size() <= n) throw Error(ErrorKind::Domain, "magic_formula_check: path shorter than n");
    int previous = -1;
    for (std::size_t j = 0; j < omega.size(); ++j) previous = checked_edge(g, eventually_periodic(omega, {}), j, previous);
    const int m = g.m_dim;
    const int nn = g.n_dim;

    // Pi at w and T^n w from the same truncation and seed 0, by backward Horner
    std::vector<SimilarityR> maps;
    for (const auto& e : g.edges) maps.push_back(to_real(e.map));
    const double radius = max_translation(g) / (1.0 - g.max_ratio());
    double tail_ratio = 1.0;
    MatR x = MatR::Zero(m, nn);
    MatR shifted;
    for (std::size_t j = omega.size(); j-- > 0;) {
        x = maps[static_cast<std::size_t>(omega[j])].apply(x);
        if (j >= n) tail_ratio *= g.edges[static_cast<std::size_t>(omega[j])].map.ratio;
        if (j == n) shifted = x;
    }
    if (tail_ratio * radius > tol)
        throw Error(ErrorKind::Domain, "magic_formula_check: path too short to project T^n w within tol");

    MatR prod = MatR::Identity(m + nn, m + nn);
    for (std::size_t j = 0; j < n; ++j) prod = MatR(coded_real(g.edges[static_cast<std::size_t>(omega[j])].map).g * prod);
    const MatR a_block = prod.topLeftCorner(m, m);
    const MatR d_block = prod.bottomRightCorner(nn, nn);
    const Real t_n = boost::multiprecision::log(boost::multiprecision::abs(a_block.determinant()));
    MatR k_inv = MatR::Zero(m + nn, m + nn);
    k_inv.topLeftCorner(m, m) = MatR(boost::multiprecision::exp(-t_n / m) * a_block).inverse();
    k_inv.bottomRightCorner(nn, nn) = MatR(boost::multiprecision::exp(t_n / nn) * d_block).inverse();

    const MatR lhs = k_inv * unipotent(shifted) * prod;
    MatR a_t = MatR::Zero(m + nn, m + nn);
    for (int i = 0; i < m; ++i) a_t(i, i) = boost::multiprecision::exp(t_n / m);
    for (int i = 0; i < nn; ++i) a_t(m + i, m + i) = boost::multiprecision::exp(-t_n / nn);
    const MatR rhs = a_t * unipotent(x);

    const MatR u = rhs.partialPivLu().solve(lhs);
    MatR rounded = u;
    for (Eigen::Index i = 0; i < u.size(); ++i) rounded.data()[i] = boost::multiprecision::round(u.data()[i]);
    MagicFormulaResult res;
    res.flow_time = static_cast<double>(t_n);
    res.terms = omega.size();
    if (boost::multiprecision::abs(boost::multiprecision::abs(rounded.determinant()) - 1) > Real(0.5)) {
        res.residual = std::numeric_limits<double>::infinity();
        return res;
    }
    Real worst = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        worst = std::max(worst, Real(boost::multiprecision::abs(u.data()[i] - rounded.data()[i])));
    res.residual = static_cast<double>(worst);
    return res;
}

std::vector<double> flow_times(const GDIFS& g, const std::vector<int>& omega) {
    std::vector<double> t{0.0};
    for (int e : omega) t.push_back(t.back() + flow_time(coded_element(g.edges.at(static_cast<std::size_t>(e)).map), g.m_dim));
    return t;
}

}  // namespace latwalk
