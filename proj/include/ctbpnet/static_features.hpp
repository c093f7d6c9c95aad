#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctbpnet/growth.hpp"

namespace ctbpnet {

/// Undirected simple graph with strictly sorted neighbor lists.
class SimpleGraph {
public:
    SimpleGraph() = default;

    /// Builds from arbitrary edge pairs; self-loops and duplicates are dropped.
    SimpleGraph(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

    std::size_t num_vertices() const noexcept { return adj_.size(); }
    std::size_t num_edges() const noexcept { return num_edges_; }
    const std::vector<std::uint32_t>& neighbors(std::size_t v) const { return adj_[v]; }
    std::size_t degree(std::size_t v) const { return adj_[v].size(); }
    bool has_edge(std::uint32_t u, std::uint32_t v) const;

private:
    std::vector<std::vector<std::uint32_t>> adj_;
    std::size_t num_edges_ = 0;
};

/// Undirected simplification of a record: self-edges dropped, parallel edges merged.
SimpleGraph simplify(const GrowthRecord& record);

/// In-degree of each vertex in the directed simple graph (distinct citing
/// vertices, self-edges excluded).
std::vector<double> simple_in_degrees(const GrowthRecord& record);

struct Assortativity {
    double value = 0.0;
    bool degenerate = false;  // no edges or zero degree variance
};

Assortativity assortativity(const SimpleGraph& g);

/// 3 * triangles / connected triples; 0 without triples.
double transitivity(const SimpleGraph& g);

/// k-core index of every vertex (bucket peeling).
std::vector<std::uint32_t> coreness(const SimpleGraph& g);

std::vector<std::uint64_t> triangles_per_vertex(const SimpleGraph& g);

/// 0 for vertices of degree < 2.
std::vector<double> local_clustering(const SimpleGraph& g);

/// Linear interpolation between order statistics at h = (n-1) q.
/// Returns 0 for an empty sample.
double quantile(std::vector<double> values, double q);

inline constexpr std::size_t kNumStaticFeatures = 36;

/// Column names, fixed order.
const std::array<std::string_view, kNumStaticFeatures>& static_feature_names();

/// Version tag of the static column layout.
inline constexpr std::string_view kStaticFeatureSchema = "static-36/v1";

struct StaticFeatureVector {
    std::array<double, kNumStaticFeatures> values{};
    bool assortativity_degenerate = false;
};

/// Degree family from `in_degrees`, every other family from the undirected graph.
StaticFeatureVector static_vector(const SimpleGraph& g, const std::vector<double>& in_degrees);
StaticFeatureVector static_vector(const GrowthRecord& record);
/// Degree family taken from the undirected degrees.
StaticFeatureVector static_vector(const SimpleGraph& g);

}  // namespace ctbpnet
