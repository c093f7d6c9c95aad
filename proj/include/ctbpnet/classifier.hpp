#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctbpnet/rng.hpp"
#include "json.hpp"

namespace ctbpnet {

// ---------------------------------------------------------------------------
// Feature tables
// ---------------------------------------------------------------------------

inline constexpr int kUnlabeled = -1;

struct FeatureRow {
    std::string network_id;
    int label = kUnlabeled;
    std::vector<double> values;
};

struct FeatureTable {
    std::vector<std::string> columns;
    std::vector<FeatureRow> rows;

    std::size_t width() const noexcept { return columns.size(); }
    /// Throws on ragged rows or non-finite values.
    void validate() const;
    FeatureTable subset(std::span<const std::size_t> indices) const;
    /// Row indices per label (index = label), labels in [0, n_classes).
    std::vector<std::vector<std::size_t>> indices_by_label(int n_classes) const;

    /// CSV with leading `network_id,class_code`. Columns `mode,s,r` (as written
    /// for dynamic feature files) are consumed and the D_i_j columns are
    /// renamed `<mode>:<s>x<r>.D_i_j`.
    static FeatureTable load_csv(const std::filesystem::path& path);
    void save_csv(const std::filesystem::path& path) const;
};

/// Inner join on network_id, keeping the row order of `left`. Labels must agree.
FeatureTable join_tables(const FeatureTable& left, const FeatureTable& right);

// ---------------------------------------------------------------------------
// Gradient-boosted trees
// ---------------------------------------------------------------------------

struct TrainConfig {
    int n_trees = 300;
    double learning_rate = 0.1;
    int max_depth = 8;
    int max_bins = 255;
    int min_samples_leaf = 20;
    double l2_regularization = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

/// n_trees {100,300} x max_depth {4,8} x learning_rate {0.05,0.1}.
std::vector<TrainConfig> default_grid();

struct TreeNode {
    int feature_index = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x <= threshold goes left
    int left = -1;
    int right = -1;
    double leaf_value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
    bool uses_feature(int f) const;
};

class GbdtModel {
public:
    static constexpr std::string_view kFormat = "ctbpnet-gbdt/1";

    int n_classes = 0;
    std::vector<std::string> feature_names;
    /// Initial margins: log class priors.
    std::vector<double> baseline;
    /// Histogram thresholds per feature computed on the training set.
    std::vector<std::vector<double>> bin_edges;
    /// stages[round][class]
    std::vector<std::vector<Tree>> stages;
    TrainConfig config;

    std::size_t n_features() const noexcept { return feature_names.size(); }

    std::vector<double> predict_margin(std::span<const double> x, std::size_t n_stages) const;
    /// Throws std::invalid_argument on a width mismatch.
    std::vector<double> predict_proba(std::span<const double> x) const;
    int predict(std::span<const double> x) const;

    /// Copy keeping only the first n boosting rounds.
    GbdtModel truncated(std::size_t n) const;

    nlohmann::json to_json() const;
    static GbdtModel from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static GbdtModel load(const std::filesystem::path& path);
};

/// Softmax of margins, stable against overflow.
std::vector<double> softmax(std::span<const double> margins);

/// Mean softmax cross-entropy of labels under margins (row-major, n x K).
double softmax_loss(std::span<const double> margins, std::span<const int> labels, int n_classes);

/// Gradient of the per-sample softmax cross-entropy with respect to margins.
std::vector<double> softmax_gradient(std::span<const double> margins, int label);

/// Mean training loss after each boosting round, index 0 being the baseline.
using LossTrace = std::vector<double>;

GbdtModel train_gbdt(const FeatureTable& train, const TrainConfig& config, int n_classes,
                     LossTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-class test counts are round(count * test_fraction), so within one of
/// the exact share. Both index lists are ascending.
Split stratified_split(const FeatureTable& table, double test_fraction, Rng& rng, int n_classes);

/// Fold id per row, stratified by label.
std::vector<int> stratified_folds(const FeatureTable& table, int k, Rng& rng, int n_classes);

struct CvResult {
    TrainConfig best;
    std::vector<double> best_fold_accuracies;
    /// Mean fold accuracy for every grid entry, in grid order.
    std::vector<double> mean_accuracy;
};

CvResult cross_validate(const FeatureTable& table, int k, const std::vector<TrainConfig>& grid, Rng& rng,
                        int n_classes);

struct EvalReport {
    double accuracy = 0.0;
    std::vector<std::vector<long>> confusion;  // [true][predicted]
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<std::string> feature_names;
    std::vector<double> permutation_importance;  // empty unless computed

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
};

EvalReport evaluate(const GbdtModel& model, const FeatureTable& test);

double accuracy(const GbdtModel& model, const FeatureTable& table);

/// Mean accuracy drop per feature when its column is permuted, over n_repeats.
std::vector<double> permutation_importance(const GbdtModel& model, const FeatureTable& table, int n_repeats,
                                           Rng& rng);

}  // namespace ctbpnet
