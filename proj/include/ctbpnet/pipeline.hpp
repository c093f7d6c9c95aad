#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctbpnet/classifier.hpp"
#include "ctbpnet/dynamic_features.hpp"
#include "ctbpnet/growth.hpp"
#include "ctbpnet/model_space.hpp"
#include "json.hpp"

namespace ctbpnet {

inline constexpr std::string_view kToolkitVersion = "0.1.0";
inline constexpr std::string_view kManifestFormat = "ctbpnet-manifest/1";

/// Receives one human-readable line per notable event (drops, skipped rows).
using Logger = std::function<void(std::string_view)>;

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

struct RunSpec {
    std::vector<ModelClass> classes{kAllClasses.begin(), kAllClasses.end()};
    int networks_per_class = 120;
    std::size_t target_size = 5000;
    std::uint64_t master_seed = 1;
    int max_attempts = 1000;
    std::optional<std::filesystem::path> outdeg_pmf;  // default PMF when empty
    std::vector<CohortSpec> cohorts{CohortSpec{}};
    std::filesystem::path out_dir;
    int workers = 1;
    RateScaling rate_scaling = RateScaling::node;
    bool gzip = false;

    void validate() const;
    nlohmann::json to_json() const;
};

struct ManifestEntry {
    std::string network_id;  // e.g. "AP-00007"
    int class_code = 0;
    nlohmann::json config;
    std::uint64_t seed = 0;
    int attempts_used = 0;
    std::string path;  // record directory, relative to the dataset root
};

struct DroppedConfig {
    std::string network_id;
    int class_code = 0;
    nlohmann::json config;
    int attempts = 0;
};

struct DatasetManifest {
    std::string toolkit_version{kToolkitVersion};
    std::string created;  // wall-clock stamp, the only nondeterministic field
    nlohmann::json run_spec;
    std::vector<ManifestEntry> networks;  // sorted by class code, then index
    std::vector<DroppedConfig> dropped;

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
    static DatasetManifest load(const std::filesystem::path& dataset_dir);
    /// Writes <dir>/manifest.json atomically.
    void save(const std::filesystem::path& dataset_dir) const;
};

/// Network id for a class and per-class index.
std::string network_id(ModelClass c, std::size_t index);

/// Seed of the Rng that draws the parameters of one network slot.
std::uint64_t config_seed(std::uint64_t master_seed, int class_code, std::uint64_t index);

/// Simulates every (class, index) slot and persists the records under
/// <out_dir>/networks/<id>/. Configurations that go extinct max_attempts
/// times are logged and skipped. The manifest is written last; if writing a
/// record fails, a manifest.partial.json with the finished entries is left
/// behind and the error is rethrown.
DatasetManifest generate_dataset(const RunSpec& spec, const Logger& log = {});

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

struct FeatureOptions {
    bool static_features = true;
    std::vector<CohortSpec> cohorts{CohortSpec{}};

    /// "static", "time:10x10", "static+time:10x10", ...
    std::string label() const;
    bool operator==(const FeatureOptions&) const = default;
};

/// Column names of a feature row under `options`: the static block first,
/// then one `<cohort label>.D_i_j` block per cohort spec (row-major, 1-based).
std::vector<std::string> feature_columns(const FeatureOptions& options);

/// Recovers the options that produce exactly `columns`; throws when a column
/// belongs to no known family.
FeatureOptions infer_feature_options(const std::vector<std::string>& columns);

/// Feature values of one record in feature_columns(options) order.
std::vector<double> feature_values(const GrowthRecord& record, const FeatureOptions& options);

/// File name of a dynamic feature family: dfm_time_10x10.csv, ...
std::string dfm_file_name(const CohortSpec& spec);
inline constexpr std::string_view kStaticFileName = "static.csv";
inline constexpr std::string_view kJoinedFileName = "features_joined.csv";

struct FeatureFiles {
    std::optional<std::filesystem::path> static_table;
    std::vector<std::filesystem::path> dynamic_tables;
    std::filesystem::path joined;
    std::size_t rows = 0;
    std::size_t skipped = 0;
};

/// One CSV per family plus the joined table, rows ordered by network_id.
/// Unreadable records are logged and skipped.
FeatureFiles extract_features(const DatasetManifest& manifest, const std::filesystem::path& dataset_dir,
                              const FeatureOptions& options, const std::filesystem::path& out_dir, int workers = 1,
                              const Logger& log = {});

/// Loads the family files written by extract_features and joins them in
/// feature_columns(options) order.
FeatureTable load_feature_table(const std::filesystem::path& features_dir, const FeatureOptions& options);

// ---------------------------------------------------------------------------
// Training and evaluation
// ---------------------------------------------------------------------------

struct TrainRequest {
    std::uint64_t seed = 1;
    int folds = 5;
    double test_fraction = 0.2;
    std::vector<TrainConfig> grid = default_grid();
    /// Train the final model on every row instead of the training split.
    bool full_data = false;
};

struct TrainOutcome {
    GbdtModel model;
    CvResult cv;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;

    nlohmann::json summary() const;  // cv scores and split ids, no trees
};

TrainOutcome train_classifier(const FeatureTable& table, const TrainRequest& request);

/// Rows of `table` whose ids appear in `ids`, in table order.
FeatureTable select_rows(const FeatureTable& table, const std::vector<std::string>& ids);

/// evaluate() plus permutation importance (n_repeats) on the same rows.
EvalReport evaluate_classifier(const GbdtModel& model, const FeatureTable& test, std::uint64_t seed,
                               int n_repeats = 10);

// ---------------------------------------------------------------------------
// Real networks
// ---------------------------------------------------------------------------

struct RejectedRow {
    std::size_t line = 0;  // 1-based line in the edge file
    std::string reason;
};

struct IngestResult {
    GrowthRecord record;
    std::vector<std::string> vertex_labels;  // original id per dense id
    std::vector<RejectedRow> rejected;
};

/// Reads `time,source,target` edges and optional `vertex_id,birth_time`
/// vertices. Births default to the first appearance time; times are shifted so
/// the minimum is 0; ids are renumbered densely in birth order. Edges whose
/// source is unborn at the edge time, or whose (distinct) target is not born
/// strictly earlier, are rejected and logged.
IngestResult ingest_real_network(const std::filesystem::path& edges_path,
                                 const std::optional<std::filesystem::path>& vertices_path = std::nullopt,
                                 const Logger& log = {});

/// Writes a record in the real-network CSV format read by ingest_real_network.
void export_network_csv(const GrowthRecord& record, const std::filesystem::path& edges_path,
                        const std::filesystem::path& vertices_path);

class SchemaMismatch : public std::invalid_argument {
public:
    SchemaMismatch(std::vector<std::string> missing, std::vector<std::string> unexpected);
    std::vector<std::string> missing;     // expected by the model, not provided
    std::vector<std::string> unexpected;  // provided, unknown to the model
};

struct ClassificationReport {
    std::string source;
    std::string feature_family;
    std::vector<double> probabilities;  // indexed by class code
    int predicted = 0;

    nlohmann::json to_json() const;
};

/// Classifies with the features the model was trained on. When `options` is
/// given it must produce exactly the model's columns, else SchemaMismatch.
ClassificationReport classify_network(const GbdtModel& model, const GrowthRecord& record,
                                      const std::optional<FeatureOptions>& options = std::nullopt,
                                      std::string source = {});

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Labeled square grid: header `true\pred,U,P,...`, one row per class.
void write_confusion_csv(const EvalReport& report, const std::filesystem::path& path);
std::vector<std::vector<long>> read_confusion_csv(const std::filesystem::path& path);

/// Numeric grid with a `i\j,1,2,...` header and a 1-based row index column.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Mean DFM per label over the rows of a table holding one cohort family.
/// Entry k is empty (0x0) when no row has label k.
std::vector<Matrix> class_mean_dfms(const FeatureTable& dfm_table, const CohortSpec& spec);

/// DFM of every row of a single-family table.
std::vector<Matrix> table_dfms(const FeatureTable& dfm_table, const CohortSpec& spec);

struct ReportArtifacts {
    std::optional<EvalReport> eval;
    /// DFM tables keyed by their cohort spec.
    std::vector<std::pair<CohortSpec, FeatureTable>> dfm_tables;
};

/// Writes confusion.csv, eval.json, importance.csv, and per cohort family
/// <label>/mean_<class>.csv, <label>/delta_<class>.csv and
/// <label>/corner_<i>_<j>.csv. Returns the paths written.
std::vector<std::filesystem::path> emit_report(const ReportArtifacts& artifacts, const std::filesystem::path& out_dir);

}  // namespace ctbpnet
