#include "ctbpnet/dynamic_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ctbpnet/textio.hpp"

namespace ctbpnet {

std::string_view cohort_mode_name(CohortMode m) noexcept { return m == CohortMode::time ? "time" : "size"; }

std::string CohortSpec::label() const {
    std::string out(cohort_mode_name(mode));
    out += ":" + std::to_string(s) + "x" + std::to_string(r);
    if (grouping == GroupingDegree::total) out += ":total";
    return out;
}

CohortSpec CohortSpec::parse(std::string_view text) {
    CohortSpec spec;
    auto colon = text.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("cohort spec needs mode:SxR, got '" + std::string(text) + "'");
    auto mode = text.substr(0, colon);
    if (mode == "time")
        spec.mode = CohortMode::time;
    else if (mode == "size")
        spec.mode = CohortMode::size;
    else
        throw std::invalid_argument("unknown cohort mode '" + std::string(mode) + "'");
    auto rest = text.substr(colon + 1);
    auto colon2 = rest.find(':');
    auto dims = rest.substr(0, colon2);
    if (colon2 != std::string_view::npos) {
        auto g = rest.substr(colon2 + 1);
        if (g == "total")
            spec.grouping = GroupingDegree::total;
        else if (g != "in")
            throw std::invalid_argument("unknown grouping degree '" + std::string(g) + "'");
    }
    auto x = dims.find('x');
    if (x == std::string_view::npos) throw std::invalid_argument("cohort dims need SxR, got '" + std::string(dims) + "'");
    spec.s = static_cast<int>(textio::parse_int(dims.substr(0, x)));
    spec.r = static_cast<int>(textio::parse_int(dims.substr(x + 1)));
    if (spec.s < 1 || spec.r < 1) throw std::invalid_argument("cohort dims must be positive");
    return spec;
}

double Matrix::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

std::vector<int> degree_groups(const GrowthRecord& record, int r, GroupingDegree grouping) {
    const std::size_t n = record.num_vertices();
    if (n == 0) throw std::invalid_argument("degree_groups: empty record");
    if (r < 1 || static_cast<std::size_t>(r) > n)
        throw std::invalid_argument("degree_groups: r must lie in [1, |V|]");
    auto deg = record.in_degrees();
    if (grouping == GroupingDegree::total) {
        auto out = record.out_degrees();
        for (std::size_t v = 0; v < n; ++v) deg[v] += out[v];
    }
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return deg[a] > deg[b]; });
    // Rank k goes to group floor(k * r / n): contiguous, sizes differ by at most one.
    std::vector<int> group(n);
    for (std::size_t k = 0; k < n; ++k)
        group[order[k]] = static_cast<int>((k * static_cast<std::size_t>(r)) / n);
    return group;
}

std::vector<double> cohort_boundaries(const GrowthRecord& record, int s, CohortMode mode) {
    if (s < 1) throw std::invalid_argument("cohort_boundaries: s must be >= 1");
    const double T = record.final_time;
    std::vector<double> tau(static_cast<std::size_t>(s) + 1, 0.0);
    const std::size_t n = record.num_vertices();
    for (int i = 1; i < s; ++i) {
        if (mode == CohortMode::time) {
            tau[i] = T * i / s;
        } else {
            const std::size_t k = (n * static_cast<std::size_t>(i)) / static_cast<std::size_t>(s);  // 1-indexed
            tau[i] = k == 0 ? 0.0 : record.vertices[k - 1].birth_time;
        }
    }
    tau[s] = T;
    return tau;
}

int cohort_of(const std::vector<double>& tau, double t) {
    const int s = static_cast<int>(tau.size()) - 1;
    // First boundary >= t closes the interval containing t.
    auto it = std::lower_bound(tau.begin() + 1, tau.end(), t);
    if (it == tau.end()) return s - 1;
    return static_cast<int>(it - tau.begin()) - 1;
}

DynamicFeatureMatrix compute_dfm(const GrowthRecord& record, const CohortSpec& spec) {
    if (static_cast<std::size_t>(spec.r) > record.num_vertices())
        throw std::invalid_argument("compute_dfm: record has fewer vertices than degree groups");
    const auto group = degree_groups(record, spec.r, spec.grouping);
    const auto tau = cohort_boundaries(record, spec.s, spec.mode);

    std::vector<std::size_t> group_size(static_cast<std::size_t>(spec.r), 0);
    for (int g : group) ++group_size[static_cast<std::size_t>(g)];

    Matrix counts(spec.s, spec.r);
    for (const auto& e : record.edges) counts(cohort_of(tau, e.time), group[e.target]) += 1.0;

    DynamicFeatureMatrix dfm{Matrix(spec.s, spec.r), spec, std::nullopt};
    double total = 0.0;
    for (int i = 0; i < spec.s; ++i)
        for (int j = 0; j < spec.r; ++j) {
            const double delta = counts(i, j) / static_cast<double>(group_size[static_cast<std::size_t>(j)]);
            dfm.values(i, j) = delta;
            total += delta;
        }
    if (total > 0.0) {
        const double c = 1.0 / total;
        for (auto& x : dfm.values.values) x *= c;
        dfm.normalization = c;
    }
    return dfm;
}

std::vector<Matrix> delta_matrices(const std::vector<Matrix>& class_means) {
    if (class_means.empty()) throw std::invalid_argument("delta_matrices: no class means");
    const int rows = class_means.front().rows, cols = class_means.front().cols;
    for (const auto& m : class_means)
        if (m.rows != rows || m.cols != cols) throw std::invalid_argument("delta_matrices: shape mismatch");
    Matrix grand(rows, cols);
    for (const auto& m : class_means)
        for (std::size_t k = 0; k < m.values.size(); ++k) grand.values[k] += m.values[k];
    for (auto& x : grand.values) x /= static_cast<double>(class_means.size());

    std::vector<Matrix> out;
    out.reserve(class_means.size());
    for (const auto& m : class_means) {
        Matrix d(rows, cols);
        for (std::size_t k = 0; k < m.values.size(); ++k)
            d.values[k] = grand.values[k] == 0.0 ? 0.0 : (m.values[k] - grand.values[k]) / grand.values[k];
        out.push_back(std::move(d));
    }
    return out;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: need two equal series of length >= 2");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = x[k] - mx, dy = y[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CornerCorrelations corner_correlations(const std::vector<Matrix>& dataset) {
    if (dataset.size() < 3) throw std::invalid_argument("corner_correlations: need at least 3 matrices");
    const int rows = dataset.front().rows, cols = dataset.front().cols;
    for (const auto& m : dataset)
        if (m.rows != rows || m.cols != cols) throw std::invalid_argument("corner_correlations: shape mismatch");

    auto series = [&](int i, int j) {
        std::vector<double> s;
        s.reserve(dataset.size());
        for (const auto& m : dataset) s.push_back(m(i, j));
        return s;
    };

    CornerCorrelations out;
    out.corners = {std::pair{0, 0}, std::pair{0, cols - 1}, std::pair{rows - 1, 0}, std::pair{rows - 1, cols - 1}};
    for (std::size_t c = 0; c < 4; ++c) {
        const auto corner = series(out.corners[c].first, out.corners[c].second);
        out.correlation[c] = Matrix(rows, cols);
        out.zero_variance[c].assign(static_cast<std::size_t>(rows) * cols, 0);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                auto r = pearson(corner, series(i, j));
                out.correlation[c](i, j) = r.value_or(0.0);
                if (!r) out.zero_variance[c][static_cast<std::size_t>(i) * cols + j] = 1;
            }
    }
    return out;
}

}  // namespace ctbpnet
