#include "ctbpnet/static_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ctbpnet {

SimpleGraph::SimpleGraph(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) : adj_(n) {
    for (auto [u, v] : edges) {
        if (u >= n || v >= n) throw std::out_of_range("SimpleGraph: endpoint out of range");
        if (u == v) continue;
        adj_[u].push_back(v);
        adj_[v].push_back(u);
    }
    for (auto& nb : adj_) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        num_edges_ += nb.size();
    }
    num_edges_ /= 2;
}

bool SimpleGraph::has_edge(std::uint32_t u, std::uint32_t v) const {
    const auto& nb = adj_[u];
    return std::binary_search(nb.begin(), nb.end(), v);
}

SimpleGraph simplify(const GrowthRecord& record) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    pairs.reserve(record.edges.size());
    for (const auto& e : record.edges) pairs.emplace_back(e.source, e.target);
    return SimpleGraph(record.num_vertices(), pairs);
}

std::vector<double> simple_in_degrees(const GrowthRecord& record) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> arcs;  // (target, source)
    arcs.reserve(record.edges.size());
    for (const auto& e : record.edges)
        if (!e.self()) arcs.emplace_back(e.target, e.source);
    std::sort(arcs.begin(), arcs.end());
    arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
    std::vector<double> deg(record.num_vertices(), 0.0);
    for (const auto& a : arcs) deg[a.first] += 1.0;
    return deg;
}

Assortativity assortativity(const SimpleGraph& g) {
    if (g.num_edges() == 0) return {0.0, true};
    // Both orientations of every edge: x and y share the same marginal.
    double sum_xy = 0.0, sum_x = 0.0, sum_x2 = 0.0;
    for (std::size_t u = 0; u < g.num_vertices(); ++u) {
        const double du = static_cast<double>(g.degree(u));
        for (auto v : g.neighbors(u)) {
            const double dv = static_cast<double>(g.degree(v));
            sum_xy += du * dv;
            sum_x += du;
            sum_x2 += du * du;
        }
    }
    const double m2 = 2.0 * static_cast<double>(g.num_edges());
    const double mean = sum_x / m2;
    const double var = sum_x2 / m2 - mean * mean;
    const double cov = sum_xy / m2 - mean * mean;
    if (!(var > 1e-12 * std::max(1.0, mean * mean))) return {0.0, true};
    return {std::clamp(cov / var, -1.0, 1.0), false};
}

std::vector<std::uint64_t> triangles_per_vertex(const SimpleGraph& g) {
    const std::size_t n = g.num_vertices();
    // Orient each edge towards the endpoint of higher (degree, id) rank.
    auto higher = [&](std::uint32_t a, std::uint32_t b) {
        const auto da = g.degree(a), db = g.degree(b);
        return da != db ? da > db : a > b;
    };
    std::vector<std::vector<std::uint32_t>> out(n);
    for (std::uint32_t u = 0; u < n; ++u)
        for (auto v : g.neighbors(u))
            if (higher(v, u)) out[u].push_back(v);

    std::vector<std::uint64_t> tri(n, 0);
    std::vector<char> mark(n, 0);
    for (std::uint32_t u = 0; u < n; ++u) {
        for (auto v : out[u]) mark[v] = 1;
        for (auto v : out[u])
            for (auto w : out[v])
                if (mark[w]) {
                    ++tri[u];
                    ++tri[v];
                    ++tri[w];
                }
        for (auto v : out[u]) mark[v] = 0;
    }
    return tri;
}

double transitivity(const SimpleGraph& g) {
    const auto tri = triangles_per_vertex(g);
    double closed = 0.0, triples = 0.0;
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        const double d = static_cast<double>(g.degree(v));
        closed += static_cast<double>(tri[v]);
        triples += d * (d - 1.0) / 2.0;
    }
    return triples > 0.0 ? closed / triples : 0.0;
}

std::vector<std::uint32_t> coreness(const SimpleGraph& g) {
    // Batagelj-Zaversnik bucket peeling, O(n + m).
    const std::size_t n = g.num_vertices();
    std::vector<std::uint32_t> deg(n), pos(n), order(n);
    std::size_t max_deg = 0;
    for (std::size_t v = 0; v < n; ++v) {
        deg[v] = static_cast<std::uint32_t>(g.degree(v));
        max_deg = std::max<std::size_t>(max_deg, deg[v]);
    }
    std::vector<std::uint32_t> bin(max_deg + 1, 0);
    for (auto d : deg) ++bin[d];
    std::uint32_t start = 0;
    for (auto& b : bin) {
        const auto count = b;
        b = start;
        start += count;
    }
    for (std::uint32_t v = 0; v < n; ++v) {
        pos[v] = bin[deg[v]]++;
        order[pos[v]] = v;
    }
    for (std::size_t d = max_deg; d > 0; --d) bin[d] = bin[d - 1];
    if (!bin.empty()) bin[0] = 0;

    for (std::size_t i = 0; i < n; ++i) {
        const auto v = order[i];
        for (auto u : g.neighbors(v)) {
            if (deg[u] > deg[v]) {
                const auto du = deg[u];
                const auto pu = pos[u];
                const auto pw = bin[du];
                const auto w = order[pw];
                if (u != w) {
                    pos[u] = pw;
                    order[pu] = w;
                    pos[w] = pu;
                    order[pw] = u;
                }
                ++bin[du];
                --deg[u];
            }
        }
    }
    return deg;
}

std::vector<double> local_clustering(const SimpleGraph& g) {
    const auto tri = triangles_per_vertex(g);
    std::vector<double> c(g.num_vertices(), 0.0);
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        const double d = static_cast<double>(g.degree(v));
        if (d >= 2.0) c[v] = static_cast<double>(tri[v]) / (d * (d - 1.0) / 2.0);
    }
    return c;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("quantile: q must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

const std::array<std::string_view, kNumStaticFeatures>& static_feature_names() {
    static const std::array<std::string_view, kNumStaticFeatures> names{
        "assortativity", "transitivity",
        "deg_min", "deg_max", "deg_mean", "deg_std", "deg_q0.125", "deg_q0.25", "deg_q0.5", "deg_q0.75", "deg_q0.875",
        "core_min", "core_max", "core_mean", "core_std", "core_q0.25", "core_q0.5", "core_q0.75",
        "tri_min", "tri_max", "tri_mean", "tri_std", "tri_q0.8", "tri_q0.9", "tri_q0.95", "tri_q0.97", "tri_q0.99",
        "clust_min", "clust_max", "clust_mean", "clust_std", "clust_q0.5", "clust_q0.6", "clust_q0.7", "clust_q0.8",
        "clust_q0.9"};
    return names;
}

namespace {

template <std::size_t N>
void summarize(std::vector<double> values, const std::array<double, N>& qs, double*& out) {
    if (values.empty()) {
        std::fill(out, out + 4 + N, 0.0);
        out += 4 + N;
        return;
    }
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : values) ss += (x - mean) * (x - mean);
    *out++ = values.front();
    *out++ = values.back();
    *out++ = mean;
    *out++ = std::sqrt(ss / n);
    for (double q : qs) *out++ = quantile(values, q);
}

}  // namespace

StaticFeatureVector static_vector(const SimpleGraph& g, const std::vector<double>& in_degrees) {
    if (in_degrees.size() != g.num_vertices()) throw std::invalid_argument("static_vector: degree vector size mismatch");
    StaticFeatureVector fv;
    double* out = fv.values.data();
    const auto assort = assortativity(g);
    fv.assortativity_degenerate = assort.degenerate;
    *out++ = assort.value;

    const auto tri = triangles_per_vertex(g);
    double closed = 0.0, triples = 0.0;
    std::vector<double> tri_d(tri.size()), clust(tri.size(), 0.0);
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        const double d = static_cast<double>(g.degree(v));
        tri_d[v] = static_cast<double>(tri[v]);
        closed += tri_d[v];
        triples += d * (d - 1.0) / 2.0;
        if (d >= 2.0) clust[v] = tri_d[v] / (d * (d - 1.0) / 2.0);
    }
    *out++ = triples > 0.0 ? closed / triples : 0.0;

    summarize(in_degrees, std::array{0.125, 0.25, 0.5, 0.75, 0.875}, out);
    const auto core = coreness(g);
    summarize(std::vector<double>(core.begin(), core.end()), std::array{0.25, 0.5, 0.75}, out);
    summarize(std::move(tri_d), std::array{0.80, 0.90, 0.95, 0.97, 0.99}, out);
    summarize(std::move(clust), std::array{0.5, 0.6, 0.7, 0.8, 0.9}, out);
    return fv;
}

StaticFeatureVector static_vector(const GrowthRecord& record) {
    return static_vector(simplify(record), simple_in_degrees(record));
}

StaticFeatureVector static_vector(const SimpleGraph& g) {
    std::vector<double> deg(g.num_vertices());
    for (std::size_t v = 0; v < deg.size(); ++v) deg[v] = static_cast<double>(g.degree(v));
    return static_vector(g, deg);
}

}  // namespace ctbpnet
