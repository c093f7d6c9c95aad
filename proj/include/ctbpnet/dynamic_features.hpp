#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctbpnet/growth.hpp"

namespace ctbpnet {

enum class CohortMode { time, size };

std::string_view cohort_mode_name(CohortMode m) noexcept;

/// Quantity used to rank vertices into degree groups.
enum class GroupingDegree { in, total };

struct CohortSpec {
    CohortMode mode = CohortMode::time;
    int s = 10;  // rows: arrival cohorts
    int r = 10;  // columns: final-degree groups
    GroupingDegree grouping = GroupingDegree::in;

    /// "time:10x10" / "size:5x8"
    std::string label() const;
    static CohortSpec parse(std::string_view text);

    bool operator==(const CohortSpec&) const = default;
};

/// Row-major s x r matrix.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int i, int j) { return values[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }
    double sum() const;
};

struct DynamicFeatureMatrix {
    Matrix values;
    CohortSpec spec;
    /// 1 / sum of the raw increments; empty for a record without edges.
    std::optional<double> normalization;

    bool degenerate() const noexcept { return !normalization.has_value(); }
};

/// Group index (0-based, 0 = highest degree) for every vertex. Vertices are
/// ranked by final degree descending with ties broken by birth order, then cut
/// into r contiguous groups whose sizes differ by at most one.
std::vector<int> degree_groups(const GrowthRecord& record, int r, GroupingDegree grouping = GroupingDegree::in);

/// tau_0 = 0 <= tau_1 <= ... <= tau_s = T.
std::vector<double> cohort_boundaries(const GrowthRecord& record, int s, CohortMode mode);

/// Row index (0-based) of the half-open interval (tau_{i-1}, tau_i] holding t.
/// Times at or below tau_0 fall into the first row.
int cohort_of(const std::vector<double>& boundaries, double t);

DynamicFeatureMatrix compute_dfm(const GrowthRecord& record, const CohortSpec& spec);

/// Relative deviation of each class mean from the grand mean of all supplied
/// class means, cell by cell. Cells where the grand mean is zero are 0.
std::vector<Matrix> delta_matrices(const std::vector<Matrix>& class_means);

struct CornerCorrelations {
    /// (row, col) of the corner cell, 0-based.
    std::array<std::pair<int, int>, 4> corners;
    /// One s x r Pearson correlation grid per corner.
    std::array<Matrix, 4> correlation;
    /// Per cell: 1 where either series had zero variance (correlation set to 0).
    std::array<std::vector<char>, 4> zero_variance;
};

/// Requires at least 3 matrices of identical shape.
CornerCorrelations corner_correlations(const std::vector<Matrix>& dataset);

/// Pearson correlation; nullopt when either series has zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ctbpnet
