#include <cstdlib>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "ctbpnet/classifier.hpp"
#include "ctbpnet/model_space.hpp"
#include "ctbpnet/pipeline.hpp"
#include "ctbpnet/record_io.hpp"
#include "ctbpnet/textio.hpp"

namespace fs = std::filesystem;
using namespace ctbpnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitExtinct = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void log_line(std::string_view s) { std::cerr << s << "\n"; }

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto& f : textio::split_fields(s))
        if (!f.empty()) out.push_back(f);
    return out;
}

std::vector<ModelClass> parse_classes(const std::string& s) {
    if (s.empty() || s == "all") return {kAllClasses.begin(), kAllClasses.end()};
    std::vector<ModelClass> out;
    for (const auto& f : split_list(s)) {
        if (auto c = class_from_name(f)) {
            out.push_back(*c);
            continue;
        }
        try {
            out.push_back(class_from_code(static_cast<int>(textio::parse_int(f))));
        } catch (const std::invalid_argument&) {
            throw UsageError("unknown class '" + f + "'");
        }
    }
    return out;
}

std::vector<CohortSpec> parse_cohorts(const std::string& s) {
    std::vector<CohortSpec> out;
    try {
        for (const auto& f : split_list(s)) out.push_back(CohortSpec::parse(f));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return out;
}

FeatureOptions parse_features(const std::string& families, const std::string& cohorts) {
    FeatureOptions opt;
    opt.static_features = false;
    opt.cohorts.clear();
    for (const auto& f : split_list(families)) {
        if (f == "static")
            opt.static_features = true;
        else if (f == "dynamic")
            opt.cohorts = parse_cohorts(cohorts);
        else
            throw UsageError("unknown feature family '" + f + "' (expected static, dynamic)");
    }
    if (!opt.static_features && opt.cohorts.empty()) throw UsageError("no feature family selected");
    return opt;
}

void write_or_print(const nlohmann::json& j, const std::string& out) {
    if (out.empty())
        std::cout << j.dump(2) << "\n";
    else
        textio::write_file_atomic(out, j.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate, featurize and classify dynamic networks grown by branching-process models"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Simulate a labeled dataset of networks");
    std::string g_classes = "all", g_pmf, g_out, g_cohorts = "time:10x10", g_scaling = "node";
    int g_per_class = 120, g_attempts = 1000, g_workers = 1;
    std::size_t g_size = 5000;
    std::uint64_t g_seed = 1;
    bool g_gzip = false;
    gen->add_option("--classes", g_classes, "Comma list of class acronyms or codes, or 'all'");
    gen->add_option("--per-class", g_per_class, "Networks per class")->check(CLI::PositiveNumber);
    gen->add_option("--size", g_size, "Target number of vertices")->check(CLI::PositiveNumber);
    gen->add_option("--seed", g_seed, "Master seed");
    gen->add_option("--max-attempts", g_attempts, "Extinction retries per configuration")->check(CLI::PositiveNumber);
    gen->add_option("--pmf", g_pmf, "Out-degree PMF CSV (m,p); default is the shipped one");
    gen->add_option("--out", g_out, "Dataset directory")->required();
    gen->add_option("--workers", g_workers, "Parallel workers")->check(CLI::PositiveNumber);
    gen->add_option("--cohorts", g_cohorts, "Cohort specs the dataset is meant for (checked against --size)");
    gen->add_option("--rate-scaling", g_scaling, "node (default) or batch");
    gen->add_flag("--gzip", g_gzip, "Compress record files");

    // features
    auto* feat = app.add_subcommand("features", "Extract feature tables from a dataset");
    std::string f_dataset, f_out, f_features = "static,dynamic", f_cohorts = "time:10x10";
    int f_workers = 1;
    feat->add_option("--dataset", f_dataset, "Dataset directory")->required();
    feat->add_option("--out", f_out, "Output directory (default <dataset>/features)");
    feat->add_option("--features", f_features, "Comma list: static, dynamic");
    feat->add_option("--cohorts", f_cohorts, "Comma list of cohort specs, e.g. time:10x10,size:10x10");
    feat->add_option("--workers", f_workers, "Parallel workers")->check(CLI::PositiveNumber);

    // train
    auto* train = app.add_subcommand("train", "Cross-validate and train a classifier");
    std::string t_dir, t_out, t_features = "dynamic", t_cohorts = "time:10x10";
    std::uint64_t t_seed = 1;
    int t_folds = 5;
    double t_test = 0.2;
    bool t_full = false, t_no_cv = false;
    train->add_option("--features-dir", t_dir, "Directory written by 'features'")->required();
    train->add_option("--features", t_features, "Comma list: static, dynamic");
    train->add_option("--cohorts", t_cohorts, "Cohort specs for the dynamic family");
    train->add_option("--seed", t_seed, "Seed for split and folds");
    train->add_option("--folds", t_folds, "Cross-validation folds")->check(CLI::Range(2, 100));
    train->add_option("--test-fraction", t_test, "Held-out share")->check(CLI::Range(0.01, 0.99));
    train->add_option("--out", t_out, "Model JSON path")->required();
    train->add_flag("--full-data", t_full, "Fit the final model on every row");
    train->add_flag("--no-cv", t_no_cv, "Skip the grid and use the default configuration");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Evaluate a model on the held-out rows");
    std::string e_model, e_dir, e_split, e_out;
    std::uint64_t e_seed = 1;
    int e_repeats = 10;
    eval->add_option("--model", e_model, "Model JSON")->required();
    eval->add_option("--features-dir", e_dir, "Directory written by 'features'")->required();
    eval->add_option("--split", e_split, "Training summary holding test_ids (default: <model>.train.json)");
    eval->add_option("--seed", e_seed, "Seed for permutation importance");
    eval->add_option("--repeats", e_repeats, "Permutation repeats")->check(CLI::PositiveNumber);
    eval->add_option("--out", e_out, "Report directory")->required();

    // classify
    auto* cls = app.add_subcommand("classify", "Classify one network");
    std::string c_model, c_record, c_edges, c_vertices, c_out, c_features, c_cohorts = "time:10x10";
    cls->add_option("--model", c_model, "Model JSON")->required();
    cls->add_option("--record", c_record, "Record directory (as written by generate or ingest)");
    cls->add_option("--edges", c_edges, "Real-network edge CSV time,source,target");
    cls->add_option("--vertices", c_vertices, "Optional vertex CSV vertex_id,birth_time");
    cls->add_option("--features", c_features, "Expected feature families; checked against the model");
    cls->add_option("--cohorts", c_cohorts, "Cohort specs for the dynamic family");
    cls->add_option("--out", c_out, "Report JSON path (default stdout)");

    // check-supercritical
    auto* sup = app.add_subcommand("check-supercritical", "Evaluate the supercriticality condition of a configuration");
    std::string s_class, s_params = "{}", s_config, s_pmf, s_out;
    sup->add_option("--class", s_class, "Class acronym or code");
    sup->add_option("--params", s_params, "Parameters as a JSON object");
    sup->add_option("--config", s_config, "Configuration JSON file (as stored in a manifest)");
    sup->add_option("--pmf", s_pmf, "Out-degree PMF CSV");
    sup->add_option("--out", s_out, "Report JSON path (default stdout)");

    // ingest
    auto* ing = app.add_subcommand("ingest", "Convert a real timestamped network into a record");
    std::string i_edges, i_vertices, i_out;
    bool i_gzip = false;
    ing->add_option("--edges", i_edges, "Edge CSV time,source,target")->required();
    ing->add_option("--vertices", i_vertices, "Optional vertex CSV vertex_id,birth_time");
    ing->add_option("--out", i_out, "Record directory")->required();
    ing->add_flag("--gzip", i_gzip, "Compress record files");

    // report
    auto* rep = app.add_subcommand("report", "Write class-mean, delta and correlation grids");
    std::string r_dir, r_cohorts = "time:10x10", r_eval, r_out;
    rep->add_option("--features-dir", r_dir, "Directory written by 'features'")->required();
    rep->add_option("--cohorts", r_cohorts, "Cohort specs to summarize");
    rep->add_option("--eval", r_eval, "eval.json from 'evaluate' to include");
    rep->add_option("--out", r_out, "Report directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen) {
            RunSpec spec;
            spec.classes = parse_classes(g_classes);
            spec.networks_per_class = g_per_class;
            spec.target_size = g_size;
            spec.master_seed = g_seed;
            spec.max_attempts = g_attempts;
            if (!g_pmf.empty()) spec.outdeg_pmf = g_pmf;
            spec.cohorts = parse_cohorts(g_cohorts);
            spec.out_dir = g_out;
            spec.workers = g_workers;
            spec.gzip = g_gzip;
            auto rs = rate_scaling_from_name(g_scaling);
            if (!rs) throw UsageError("unknown rate scaling '" + g_scaling + "'");
            spec.rate_scaling = *rs;
            try {
                spec.validate();
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            const auto m = generate_dataset(spec, log_line);
            std::cerr << "generated " << m.networks.size() << " networks, dropped " << m.dropped.size() << "\n";
            std::set<int> produced;
            for (const auto& e : m.networks) produced.insert(e.class_code);
            for (auto c : spec.classes)
                if (!produced.count(class_code(c))) {
                    std::cerr << "every configuration of class " << class_name(c) << " went extinct\n";
                    return kExitExtinct;
                }
        } else if (*feat) {
            const auto opt = parse_features(f_features, f_cohorts);
            const auto manifest = DatasetManifest::load(f_dataset);
            const fs::path out = f_out.empty() ? fs::path(f_dataset) / "features" : fs::path(f_out);
            const auto files = extract_features(manifest, f_dataset, opt, out, f_workers, log_line);
            std::cerr << "wrote " << files.rows << " rows to " << files.joined.string() << " (" << files.skipped
                      << " skipped)\n";
        } else if (*train) {
            const auto opt = parse_features(t_features, t_cohorts);
            const auto table = load_feature_table(t_dir, opt);
            TrainRequest req;
            req.seed = t_seed;
            req.folds = t_folds;
            req.test_fraction = t_test;
            req.full_data = t_full;
            if (t_no_cv) req.grid = {TrainConfig{}};
            const auto outcome = train_classifier(table, req);
            outcome.model.save(t_out);
            auto summary = outcome.summary();
            summary["features"] = opt.label();
            textio::write_file_atomic(t_out + ".train.json", summary.dump(2) + "\n");
            std::cerr << "best config " << outcome.cv.best.to_json().dump() << "\n";
        } else if (*eval) {
            const auto model = GbdtModel::load(e_model);
            const auto opt = infer_feature_options(model.feature_names);
            const auto table = load_feature_table(e_dir, opt);
            const auto split_path = e_split.empty() ? e_model + ".train.json" : e_split;
            FeatureTable test = table;
            if (fs::exists(split_path)) {
                const auto j = nlohmann::json::parse(textio::read_file(split_path));
                test = select_rows(table, j.at("test_ids").get<std::vector<std::string>>());
            } else {
                std::cerr << "no split file at " << split_path << "; evaluating on every row\n";
            }
            ReportArtifacts art;
            art.eval = evaluate_classifier(model, test, e_seed, e_repeats);
            emit_report(art, e_out);
            std::cout << "accuracy " << textio::format_double(art.eval->accuracy) << "\n";
        } else if (*cls) {
            const auto model = GbdtModel::load(c_model);
            GrowthRecord record;
            std::string source;
            if (!c_record.empty() == !c_edges.empty()) throw UsageError("give exactly one of --record or --edges");
            if (!c_record.empty()) {
                record = load_record(c_record);
                source = c_record;
            } else {
                std::optional<fs::path> vp;
                if (!c_vertices.empty()) vp = c_vertices;
                record = ingest_real_network(c_edges, vp, log_line).record;
                source = c_edges;
            }
            std::optional<FeatureOptions> opt;
            if (!c_features.empty()) opt = parse_features(c_features, c_cohorts);
            write_or_print(classify_network(model, record, opt, source).to_json(), c_out);
        } else if (*sup) {
            auto pmf = s_pmf.empty() ? OutDegreePmf::default_pmf()
                                     : std::make_shared<const OutDegreePmf>(OutDegreePmf::load_csv(s_pmf));
            ModelConfig config;
            if (!s_config.empty()) {
                config = config_from_json(nlohmann::json::parse(textio::read_file(s_config)));
            } else {
                if (s_class.empty()) throw UsageError("give --class with --params, or --config");
                auto c = parse_classes(s_class);
                if (c.size() != 1) throw UsageError("give a single class");
                try {
                    config = make_config(c.front(), nlohmann::json::parse(s_params), pmf);
                } catch (const std::exception& e) {
                    throw UsageError(std::string("bad --params: ") + e.what());
                }
            }
            const auto r = check_supercritical(config);
            nlohmann::json j{{"config", config_to_json(config)},
                             {"condition_value", textio::format_double(r.condition_value)},
                             {"is_supercritical", r.is_supercritical},
                             {"collapsed_conservative_value", textio::format_double(r.collapsed_conservative_value)},
                             {"formula_id", r.formula_id}};
            write_or_print(j, s_out);
        } else if (*ing) {
            std::optional<fs::path> vp;
            if (!i_vertices.empty()) vp = i_vertices;
            const auto res = ingest_real_network(i_edges, vp, log_line);
            save_record(res.record, i_out, i_gzip);
            std::string labels = "dense_id,original_id\n";
            for (std::size_t k = 0; k < res.vertex_labels.size(); ++k)
                labels += std::to_string(k) + "," + res.vertex_labels[k] + "\n";
            textio::write_file_atomic(fs::path(i_out) / "vertex_labels.csv", labels);
            std::cerr << "ingested " << res.record.num_vertices() << " vertices, " << res.record.edges.size()
                      << " edges, rejected " << res.rejected.size() << " rows\n";
        } else if (*rep) {
            ReportArtifacts art;
            for (const auto& c : parse_cohorts(r_cohorts))
                art.dfm_tables.emplace_back(c, FeatureTable::load_csv(fs::path(r_dir) / dfm_file_name(c)));
            if (!r_eval.empty()) art.eval = EvalReport::from_json(nlohmann::json::parse(textio::read_file(r_eval)));
            const auto files = emit_report(art, r_out);
            std::cerr << "wrote " << files.size() << " files to " << r_out << "\n";
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
