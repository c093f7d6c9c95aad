#include "ctbpnet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <map>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "ctbpnet/record_io.hpp"
#include "ctbpnet/static_features.hpp"
#include "ctbpnet/textio.hpp"

namespace fs = std::filesystem;

namespace ctbpnet {

namespace {

void emit(const Logger& log, const std::string& line) {
    if (log) log(line);
}

/// Runs f(i) for i in [0, n) on up to `workers` threads. Every task runs even
/// if another throws; the first exception (lowest index) is returned.
template <class F>
std::vector<std::exception_ptr> parallel_for(std::size_t n, int workers, F&& f) {
    std::vector<std::exception_ptr> errors(n);
    auto run = [&](std::size_t i) {
        try {
            f(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const auto w = static_cast<std::size_t>(std::clamp<long>(workers, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) run(i);
        return errors;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) run(i);
        });
    for (auto& th : pool) th.join();
    return errors;
}

std::exception_ptr first_error(const std::vector<std::exception_ptr>& errors) {
    for (const auto& e : errors)
        if (e) return e;
    return nullptr;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::shared_ptr<const OutDegreePmf> resolve_pmf(const std::optional<fs::path>& path) {
    if (!path) return OutDegreePmf::default_pmf();
    return std::make_shared<const OutDegreePmf>(OutDegreePmf::load_csv(*path));
}

std::string mode_field(const CohortSpec& spec) {
    std::string m(cohort_mode_name(spec.mode));
    if (spec.grouping == GroupingDegree::total) m += "+total";
    return m;
}

SchemaMismatch schema_diff(const std::vector<std::string>& expected, const std::vector<std::string>& provided) {
    std::set<std::string> want(expected.begin(), expected.end()), have(provided.begin(), provided.end());
    std::vector<std::string> missing, extra;
    std::set_difference(want.begin(), want.end(), have.begin(), have.end(), std::back_inserter(missing));
    std::set_difference(have.begin(), have.end(), want.begin(), want.end(), std::back_inserter(extra));
    if (missing.empty() && extra.empty()) extra.push_back("(same columns, different order)");
    return SchemaMismatch(std::move(missing), std::move(extra));
}

std::string cell_name(int i, int j) { return "D_" + std::to_string(i + 1) + "_" + std::to_string(j + 1); }

}  // namespace

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

void RunSpec::validate() const {
    if (classes.empty()) throw std::invalid_argument("run spec: no classes selected");
    if (networks_per_class < 1) throw std::invalid_argument("run spec: networks per class must be >= 1");
    if (target_size < 1) throw std::invalid_argument("run spec: target size must be >= 1");
    if (max_attempts < 1) throw std::invalid_argument("run spec: max attempts must be >= 1");
    if (workers < 1) throw std::invalid_argument("run spec: workers must be >= 1");
    for (const auto& c : cohorts)
        if (static_cast<std::size_t>(c.r) > target_size)
            throw std::invalid_argument("run spec: target size is smaller than r of cohort " + c.label());
    std::set<ModelClass> seen;
    for (auto c : classes)
        if (!seen.insert(c).second) throw std::invalid_argument("run spec: duplicate class " + std::string(class_name(c)));
}

nlohmann::json RunSpec::to_json() const {
    // Output location and worker count are left out: they do not affect content.
    nlohmann::json cls = nlohmann::json::array();
    for (auto c : classes) cls.push_back(std::string(class_name(c)));
    nlohmann::json coh = nlohmann::json::array();
    for (const auto& c : cohorts) coh.push_back(c.label());
    return {{"classes", cls},
            {"networks_per_class", networks_per_class},
            {"target_size", target_size},
            {"master_seed", master_seed},
            {"max_attempts", max_attempts},
            {"outdeg_pmf", outdeg_pmf ? outdeg_pmf->string() : std::string("default")},
            {"cohorts", coh},
            {"rate_scaling", std::string(rate_scaling_name(rate_scaling))},
            {"gzip", gzip}};
}

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json nets = nlohmann::json::array();
    for (const auto& e : networks)
        nets.push_back({{"network_id", e.network_id},
                        {"class_code", e.class_code},
                        {"config", e.config},
                        {"seed", e.seed},
                        {"attempts_used", e.attempts_used},
                        {"path", e.path}});
    nlohmann::json drop = nlohmann::json::array();
    for (const auto& d : dropped)
        drop.push_back({{"network_id", d.network_id}, {"class_code", d.class_code}, {"config", d.config}, {"attempts", d.attempts}});
    return {{"format", std::string(kManifestFormat)},
            {"toolkit_version", toolkit_version},
            {"created", created},
            {"run_spec", run_spec},
            {"networks", nets},
            {"dropped", drop}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
    if (j.value("format", std::string()) != kManifestFormat) throw std::invalid_argument("not a dataset manifest");
    DatasetManifest m;
    m.toolkit_version = j.value("toolkit_version", std::string());
    m.created = j.value("created", std::string());
    m.run_spec = j.value("run_spec", nlohmann::json::object());
    std::set<std::string> ids;
    for (const auto& e : j.at("networks")) {
        ManifestEntry x;
        x.network_id = e.at("network_id").get<std::string>();
        x.class_code = e.at("class_code").get<int>();
        x.config = e.at("config");
        x.seed = e.at("seed").get<std::uint64_t>();
        x.attempts_used = e.at("attempts_used").get<int>();
        x.path = e.at("path").get<std::string>();
        if (!ids.insert(x.network_id).second) throw std::invalid_argument("manifest: duplicate id " + x.network_id);
        m.networks.push_back(std::move(x));
    }
    for (const auto& d : j.value("dropped", nlohmann::json::array()))
        m.dropped.push_back(DroppedConfig{d.at("network_id").get<std::string>(), d.at("class_code").get<int>(),
                                          d.at("config"), d.at("attempts").get<int>()});
    return m;
}

DatasetManifest DatasetManifest::load(const fs::path& dataset_dir) {
    return from_json(nlohmann::json::parse(textio::read_file(dataset_dir / "manifest.json")));
}

void DatasetManifest::save(const fs::path& dataset_dir) const {
    textio::write_file_atomic(dataset_dir / "manifest.json", to_json().dump(2) + "\n");
}

std::string network_id(ModelClass c, std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%05zu", index);
    return std::string(class_name(c)) + "-" + buf;
}

std::uint64_t config_seed(std::uint64_t master_seed, int class_code, std::uint64_t index) {
    // The trailing tag keeps this stream apart from the attempt seeds.
    return derive_seed({master_seed, static_cast<std::uint64_t>(class_code), index, 0xc0f19ULL << 32});
}

DatasetManifest generate_dataset(const RunSpec& spec, const Logger& log) {
    spec.validate();
    const auto pmf = resolve_pmf(spec.outdeg_pmf);
    fs::create_directories(spec.out_dir / "networks");

    struct Slot {
        ModelClass cls;
        std::size_t index;
        std::optional<ManifestEntry> entry;
        std::optional<DroppedConfig> dropped;
    };
    std::vector<Slot> slots;
    for (auto c : spec.classes)
        for (int i = 0; i < spec.networks_per_class; ++i) slots.push_back(Slot{c, static_cast<std::size_t>(i), {}, {}});

    SimOptions options;
    options.rate_scaling = spec.rate_scaling;

    const auto errors = parallel_for(slots.size(), spec.workers, [&](std::size_t k) {
        auto& slot = slots[k];
        const int code = class_code(slot.cls);
        Rng rng(config_seed(spec.master_seed, code, slot.index));
        auto config = sample_config(slot.cls, rng, pmf);
        if (spec.outdeg_pmf) config.outdeg_source = spec.outdeg_pmf->string();
        const auto id = network_id(slot.cls, slot.index);
        auto result = simulate_with_retries(config, spec.target_size, spec.max_attempts,
                                            SeedPath{spec.master_seed, code, slot.index}, options);
        if (result.all_extinct()) {
            slot.dropped = DroppedConfig{id, code, config_to_json(config), result.attempts_used};
            return;
        }
        const auto rel = fs::path("networks") / id;
        save_record(*result.record, spec.out_dir / rel, spec.gzip);
        slot.entry = ManifestEntry{id, code, config_to_json(config), result.seed_used, result.attempts_used, rel.generic_string()};
    });

    DatasetManifest manifest;
    manifest.run_spec = spec.to_json();
    for (const auto& s : slots) {
        if (s.entry) manifest.networks.push_back(*s.entry);
        if (s.dropped) {
            emit(log, "dropped " + s.dropped->network_id + ": extinct in all " + std::to_string(s.dropped->attempts) +
                          " attempts, config " + s.dropped->config.at("params").dump());
            manifest.dropped.push_back(*s.dropped);
        }
    }
    manifest.created = utc_timestamp();
    if (auto err = first_error(errors)) {
        textio::write_file_atomic(spec.out_dir / "manifest.partial.json", manifest.to_json().dump(2) + "\n");
        emit(log, "generation failed; finished entries saved to manifest.partial.json");
        std::rethrow_exception(err);
    }
    manifest.save(spec.out_dir);
    return manifest;
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

std::string FeatureOptions::label() const {
    std::string out;
    if (static_features) out = "static";
    for (const auto& c : cohorts) {
        if (!out.empty()) out += "+";
        out += c.label();
    }
    return out;
}

std::vector<std::string> feature_columns(const FeatureOptions& options) {
    std::vector<std::string> cols;
    if (options.static_features)
        for (auto n : static_feature_names()) cols.emplace_back(n);
    for (const auto& c : options.cohorts)
        for (int i = 0; i < c.s; ++i)
            for (int j = 0; j < c.r; ++j) cols.push_back(c.label() + "." + cell_name(i, j));
    return cols;
}

FeatureOptions infer_feature_options(const std::vector<std::string>& columns) {
    FeatureOptions opt;
    opt.static_features = false;
    opt.cohorts.clear();
    std::set<std::string> static_names;
    for (auto n : static_feature_names()) static_names.emplace(n);
    std::vector<std::string> unknown;
    for (const auto& c : columns) {
        if (static_names.count(c)) {
            opt.static_features = true;
            continue;
        }
        const auto dot = c.rfind(".D_");
        if (dot == std::string::npos) {
            unknown.push_back(c);
            continue;
        }
        CohortSpec spec;
        try {
            spec = CohortSpec::parse(std::string_view(c).substr(0, dot));
        } catch (const std::invalid_argument&) {
            unknown.push_back(c);
            continue;
        }
        if (std::find(opt.cohorts.begin(), opt.cohorts.end(), spec) == opt.cohorts.end()) opt.cohorts.push_back(spec);
    }
    const auto expected = feature_columns(opt);
    if (!unknown.empty() || expected != columns) throw schema_diff(expected, columns);
    return opt;
}

std::vector<double> feature_values(const GrowthRecord& record, const FeatureOptions& options) {
    std::vector<double> out;
    if (options.static_features) {
        const auto sv = static_vector(record);
        out.insert(out.end(), sv.values.begin(), sv.values.end());
    }
    for (const auto& c : options.cohorts) {
        const auto dfm = compute_dfm(record, c);
        out.insert(out.end(), dfm.values.values.begin(), dfm.values.values.end());
    }
    return out;
}

std::string dfm_file_name(const CohortSpec& spec) {
    std::string name = "dfm_" + std::string(cohort_mode_name(spec.mode)) + "_" + std::to_string(spec.s) + "x" +
                       std::to_string(spec.r);
    if (spec.grouping == GroupingDegree::total) name += "_total";
    return name + ".csv";
}

FeatureFiles extract_features(const DatasetManifest& manifest, const fs::path& dataset_dir, const FeatureOptions& options,
                              const fs::path& out_dir, int workers, const Logger& log) {
    if (!options.static_features && options.cohorts.empty())
        throw std::invalid_argument("extract_features: no feature family requested");
    std::vector<const ManifestEntry*> entries;
    for (const auto& e : manifest.networks) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(), [](auto a, auto b) { return a->network_id < b->network_id; });

    std::vector<std::optional<std::vector<double>>> values(entries.size());
    std::vector<std::string> failures(entries.size());
    parallel_for(entries.size(), workers, [&](std::size_t k) {
        try {
            const auto rec = load_record(dataset_dir / entries[k]->path);
            values[k] = feature_values(rec, options);
        } catch (const std::exception& ex) {
            failures[k] = ex.what();
        }
    });

    FeatureFiles files;
    fs::create_directories(out_dir);
    std::vector<std::size_t> ok;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (values[k])
            ok.push_back(k);
        else
            emit(log, "skipped " + entries[k]->network_id + ": " + failures[k]);
    }
    files.rows = ok.size();
    files.skipped = entries.size() - ok.size();

    std::size_t offset = 0;
    if (options.static_features) {
        FeatureTable t;
        for (auto n : static_feature_names()) t.columns.emplace_back(n);
        for (auto k : ok)
            t.rows.push_back(FeatureRow{entries[k]->network_id, entries[k]->class_code,
                                        std::vector<double>(values[k]->begin(), values[k]->begin() + kNumStaticFeatures)});
        files.static_table = out_dir / kStaticFileName;
        t.save_csv(*files.static_table);
        offset = kNumStaticFeatures;
    }
    for (const auto& c : options.cohorts) {
        const std::size_t width = static_cast<std::size_t>(c.s) * static_cast<std::size_t>(c.r);
        std::string text = "network_id,class_code,mode,s,r";
        for (int i = 0; i < c.s; ++i)
            for (int j = 0; j < c.r; ++j) text += "," + cell_name(i, j);
        text += "\n";
        const std::string meta = "," + mode_field(c) + "," + std::to_string(c.s) + "," + std::to_string(c.r);
        for (auto k : ok) {
            text += entries[k]->network_id + "," + std::to_string(entries[k]->class_code) + meta;
            for (std::size_t q = 0; q < width; ++q) text += "," + textio::format_double((*values[k])[offset + q]);
            text += "\n";
        }
        files.dynamic_tables.push_back(out_dir / dfm_file_name(c));
        textio::write_file_atomic(files.dynamic_tables.back(), text);
        offset += width;
    }

    FeatureTable joined;
    joined.columns = feature_columns(options);
    for (auto k : ok) joined.rows.push_back(FeatureRow{entries[k]->network_id, entries[k]->class_code, *values[k]});
    files.joined = out_dir / kJoinedFileName;
    joined.save_csv(files.joined);
    return files;
}

FeatureTable load_feature_table(const fs::path& features_dir, const FeatureOptions& options) {
    std::optional<FeatureTable> out;
    auto add = [&](FeatureTable t) { out = out ? join_tables(*out, t) : std::move(t); };
    if (options.static_features) add(FeatureTable::load_csv(features_dir / kStaticFileName));
    for (const auto& c : options.cohorts) add(FeatureTable::load_csv(features_dir / dfm_file_name(c)));
    if (!out) throw std::invalid_argument("load_feature_table: no feature family requested");
    if (out->columns != feature_columns(options))
        throw std::invalid_argument("load_feature_table: files in " + features_dir.string() +
                                    " do not hold the expected columns for " + options.label());
    return *out;
}

// ---------------------------------------------------------------------------
// Training and evaluation
// ---------------------------------------------------------------------------

nlohmann::json TrainOutcome::summary() const {
    return {{"best_config", cv.best.to_json()},
            {"best_fold_accuracies", cv.best_fold_accuracies},
            {"grid_mean_accuracy", cv.mean_accuracy},
            {"train_ids", train_ids},
            {"test_ids", test_ids}};
}

TrainOutcome train_classifier(const FeatureTable& table, const TrainRequest& request) {
    table.validate();
    Rng split_rng(derive_seed({request.seed, 0x5b117ULL}));
    Rng cv_rng(derive_seed({request.seed, 0xcf01dULL}));
    const auto split = stratified_split(table, request.test_fraction, split_rng, kNumClasses);
    const auto train = table.subset(split.train);

    TrainOutcome out;
    for (auto i : split.train) out.train_ids.push_back(table.rows[i].network_id);
    for (auto i : split.test) out.test_ids.push_back(table.rows[i].network_id);
    out.cv = cross_validate(train, request.folds, request.grid, cv_rng, kNumClasses);
    auto cfg = out.cv.best;
    cfg.seed = request.seed;
    out.model = train_gbdt(request.full_data ? table : train, cfg, kNumClasses);
    return out;
}

FeatureTable select_rows(const FeatureTable& table, const std::vector<std::string>& ids) {
    std::set<std::string> want(ids.begin(), ids.end());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        if (want.count(table.rows[i].network_id)) idx.push_back(i);
    if (idx.size() != want.size()) throw std::invalid_argument("select_rows: some requested ids are absent from the table");
    return table.subset(idx);
}

EvalReport evaluate_classifier(const GbdtModel& model, const FeatureTable& test, std::uint64_t seed, int n_repeats) {
    if (test.columns != model.feature_names) throw schema_diff(model.feature_names, test.columns);
    auto report = evaluate(model, test);
    Rng rng(derive_seed({seed, 0x1b9047ULL}));
    report.permutation_importance = permutation_importance(model, test, n_repeats, rng);
    return report;
}

// ---------------------------------------------------------------------------
// Real networks
// ---------------------------------------------------------------------------

IngestResult ingest_real_network(const fs::path& edges_path, const std::optional<fs::path>& vertices_path,
                                 const Logger& log) {
    IngestResult res;
    std::unordered_map<std::string, double> supplied;
    std::unordered_map<std::string, std::size_t> first_seen;
    std::vector<std::string> labels;
    auto see = [&](const std::string& v) {
        if (first_seen.emplace(v, labels.size()).second) labels.push_back(v);
    };

    if (vertices_path) {
        const auto vl = textio::lines(textio::read_file(*vertices_path));
        if (vl.empty() || textio::split_fields(vl.front()) != std::vector<std::string>{"vertex_id", "birth_time"})
            throw std::invalid_argument(vertices_path->string() + ": header must be vertex_id,birth_time");
        for (std::size_t i = 1; i < vl.size(); ++i) {
            const auto f = textio::split_fields(vl[i]);
            if (f.size() != 2 || f[0].empty())
                throw std::invalid_argument(vertices_path->string() + ": bad row " + std::to_string(i + 1));
            const double t = textio::parse_double(f[1]);
            if (!std::isfinite(t)) throw std::invalid_argument(vertices_path->string() + ": non-finite birth time");
            if (!supplied.emplace(f[0], t).second)
                throw std::invalid_argument(vertices_path->string() + ": duplicate vertex " + f[0]);
            see(f[0]);
        }
    }

    struct Row {
        std::size_t line;
        double time;
        std::string source, target;
    };
    std::vector<Row> rows;
    const auto el = textio::lines(textio::read_file(edges_path));
    if (el.empty() || textio::split_fields(el.front()) != std::vector<std::string>{"time", "source", "target"})
        throw std::invalid_argument(edges_path.string() + ": header must be time,source,target");
    auto reject = [&](std::size_t line, std::string why) {
        emit(log, edges_path.filename().string() + ":" + std::to_string(line) + ": rejected, " + why);
        res.rejected.push_back(RejectedRow{line, std::move(why)});
    };
    for (std::size_t i = 1; i < el.size(); ++i) {
        const auto f = textio::split_fields(el[i]);
        double t = 0.0;
        try {
            if (f.size() != 3 || f[1].empty() || f[2].empty()) throw std::invalid_argument("wrong field count");
            t = textio::parse_double(f[0]);
            if (!std::isfinite(t)) throw std::invalid_argument("non-finite time");
        } catch (const std::invalid_argument& ex) {
            reject(i + 1, std::string("unparsable row (") + ex.what() + ")");
            continue;
        }
        rows.push_back(Row{i + 1, t, f[1], f[2]});
        see(f[1]);
        see(f[2]);
    }

    // Unsupplied births fall back to the earliest appearance.
    std::unordered_map<std::string, double> birth = supplied;
    for (const auto& r : rows)
        for (const auto* v : {&r.source, &r.target}) {
            if (supplied.count(*v)) continue;
            auto [it, fresh] = birth.emplace(*v, r.time);
            if (!fresh) it->second = std::min(it->second, r.time);
        }

    std::vector<const Row*> accepted;
    for (const auto& r : rows) {
        if (birth.at(r.source) > r.time) {
            reject(r.line, "source " + r.source + " is born after the edge");
            continue;
        }
        if (r.source != r.target && !(birth.at(r.target) < r.time)) {
            reject(r.line, "target " + r.target + " is not born before the edge");
            continue;
        }
        accepted.push_back(&r);
    }

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return birth.at(labels[a]) < birth.at(labels[b]); });
    std::unordered_map<std::string, std::uint32_t> dense;
    double shift = 0.0;
    if (!order.empty()) shift = birth.at(labels[order.front()]);
    auto& rec = res.record;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& lab = labels[order[k]];
        dense.emplace(lab, static_cast<std::uint32_t>(k));
        res.vertex_labels.push_back(lab);
        CollapsedVertex v;
        v.birth_time = birth.at(lab) - shift;
        v.fitness = 1.0;
        v.out_target = 0;
        rec.vertices.push_back(v);
    }
    std::stable_sort(accepted.begin(), accepted.end(), [](auto a, auto b) { return a->time < b->time; });
    double last = rec.vertices.empty() ? 0.0 : rec.vertices.back().birth_time;
    for (const auto* r : accepted) {
        EdgeEvent e{r->time - shift, dense.at(r->source), dense.at(r->target)};
        ++rec.vertices[e.source].out_target;
        last = std::max(last, e.time);
        rec.edges.push_back(e);
    }
    for (auto& v : rec.vertices) v.members_born = v.out_target;
    rec.final_time = last;
    rec.provenance = IngestedProvenance{edges_path.string()};
    rec.validate();
    return res;
}

void export_network_csv(const GrowthRecord& record, const fs::path& edges_path, const fs::path& vertices_path) {
    std::string v = "vertex_id,birth_time\n";
    for (std::size_t i = 0; i < record.vertices.size(); ++i)
        v += std::to_string(i) + "," + textio::format_double(record.vertices[i].birth_time) + "\n";
    std::string e = "time,source,target\n";
    for (const auto& x : record.edges)
        e += textio::format_double(x.time) + "," + std::to_string(x.source) + "," + std::to_string(x.target) + "\n";
    textio::write_file_atomic(vertices_path, v);
    textio::write_file_atomic(edges_path, e);
}

namespace {

std::string join_preview(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size() && i < 8; ++i) out += (i ? ", " : "") + v[i];
    if (v.size() > 8) out += ", ... (" + std::to_string(v.size()) + " total)";
    return out;
}

}  // namespace

SchemaMismatch::SchemaMismatch(std::vector<std::string> m, std::vector<std::string> u)
    : std::invalid_argument("feature schema mismatch; missing: [" + join_preview(m) + "]; unexpected: [" +
                            join_preview(u) + "]"),
      missing(std::move(m)),
      unexpected(std::move(u)) {}

nlohmann::json ClassificationReport::to_json() const {
    nlohmann::json probs = nlohmann::json::object();
    for (std::size_t k = 0; k < probabilities.size(); ++k)
        probs[std::string(class_name(class_from_code(static_cast<int>(k))))] = probabilities[k];
    return {{"source", source},
            {"feature_family", feature_family},
            {"probabilities", probs},
            {"probability_vector", probabilities},
            {"predicted_class", std::string(class_name(class_from_code(predicted)))},
            {"predicted_code", predicted}};
}

ClassificationReport classify_network(const GbdtModel& model, const GrowthRecord& record,
                                      const std::optional<FeatureOptions>& options, std::string source) {
    const auto needed = infer_feature_options(model.feature_names);
    if (options && *options != needed) throw schema_diff(model.feature_names, feature_columns(*options));
    ClassificationReport rep;
    rep.source = std::move(source);
    rep.feature_family = needed.label();
    rep.probabilities = model.predict_proba(feature_values(record, needed));
    rep.predicted = static_cast<int>(std::max_element(rep.probabilities.begin(), rep.probabilities.end()) -
                                     rep.probabilities.begin());
    return rep;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

void write_confusion_csv(const EvalReport& report, const fs::path& path) {
    const auto K = report.confusion.size();
    std::string out = "true\\pred";
    for (std::size_t k = 0; k < K; ++k) out += "," + std::string(class_name(class_from_code(static_cast<int>(k))));
    out += "\n";
    for (std::size_t i = 0; i < K; ++i) {
        out += class_name(class_from_code(static_cast<int>(i)));
        for (auto c : report.confusion[i]) out += "," + std::to_string(c);
        out += "\n";
    }
    textio::write_file_atomic(path, out);
}

std::vector<std::vector<long>> read_confusion_csv(const fs::path& path) {
    const auto ls = textio::lines(textio::read_file(path));
    if (ls.empty()) throw std::invalid_argument(path.string() + ": empty confusion file");
    const auto K = textio::split_fields(ls.front()).size() - 1;
    std::vector<std::vector<long>> out;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto f = textio::split_fields(ls[i]);
        if (f.size() != K + 1 || f[0] != class_name(class_from_code(static_cast<int>(i - 1))))
            throw std::invalid_argument(path.string() + ": bad row " + std::to_string(i + 1));
        std::vector<long> row;
        for (std::size_t j = 1; j <= K; ++j) row.push_back(static_cast<long>(textio::parse_int(f[j])));
        out.push_back(std::move(row));
    }
    if (out.size() != K) throw std::invalid_argument(path.string() + ": confusion grid is not square");
    return out;
}

void write_matrix_csv(const Matrix& m, const fs::path& path) {
    std::string out = "i\\j";
    for (int j = 0; j < m.cols; ++j) out += "," + std::to_string(j + 1);
    out += "\n";
    for (int i = 0; i < m.rows; ++i) {
        out += std::to_string(i + 1);
        for (int j = 0; j < m.cols; ++j) out += "," + textio::format_double(m(i, j));
        out += "\n";
    }
    textio::write_file_atomic(path, out);
}

Matrix read_matrix_csv(const fs::path& path) {
    const auto ls = textio::lines(textio::read_file(path));
    if (ls.empty()) throw std::invalid_argument(path.string() + ": empty matrix file");
    const auto header = textio::split_fields(ls.front());
    if (header.empty() || header.front() != "i\\j") throw std::invalid_argument(path.string() + ": bad matrix header");
    const int cols = static_cast<int>(header.size()) - 1;
    Matrix m(static_cast<int>(ls.size()) - 1, cols);
    for (int i = 0; i < m.rows; ++i) {
        const auto f = textio::split_fields(ls[static_cast<std::size_t>(i) + 1]);
        if (static_cast<int>(f.size()) != cols + 1) throw std::invalid_argument(path.string() + ": ragged matrix");
        for (int j = 0; j < cols; ++j) m(i, j) = textio::parse_double(f[static_cast<std::size_t>(j) + 1]);
    }
    return m;
}

std::vector<Matrix> table_dfms(const FeatureTable& dfm_table, const CohortSpec& spec) {
    if (dfm_table.width() != static_cast<std::size_t>(spec.s) * static_cast<std::size_t>(spec.r))
        throw std::invalid_argument("table width does not match cohort spec " + spec.label());
    std::vector<Matrix> out;
    for (const auto& r : dfm_table.rows) {
        Matrix m(spec.s, spec.r);
        m.values = r.values;
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<Matrix> class_mean_dfms(const FeatureTable& dfm_table, const CohortSpec& spec) {
    const auto all = table_dfms(dfm_table, spec);
    std::vector<Matrix> mean(kNumClasses);
    std::vector<std::size_t> count(kNumClasses, 0);
    for (std::size_t i = 0; i < all.size(); ++i) {
        const int y = dfm_table.rows[i].label;
        if (y < 0 || y >= kNumClasses) continue;
        auto& m = mean[static_cast<std::size_t>(y)];
        if (count[static_cast<std::size_t>(y)]++ == 0) m = Matrix(spec.s, spec.r);
        for (std::size_t q = 0; q < m.values.size(); ++q) m.values[q] += all[i].values[q];
    }
    for (std::size_t k = 0; k < mean.size(); ++k)
        for (auto& x : mean[k].values) x /= static_cast<double>(count[k]);
    return mean;
}

std::vector<fs::path> emit_report(const ReportArtifacts& artifacts, const fs::path& out_dir) {
    std::vector<fs::path> written;
    fs::create_directories(out_dir);
    if (artifacts.eval) {
        const auto& ev = *artifacts.eval;
        written.push_back(out_dir / "confusion.csv");
        write_confusion_csv(ev, written.back());
        written.push_back(out_dir / "eval.json");
        textio::write_file_atomic(written.back(), ev.to_json().dump(2) + "\n");
        if (!ev.permutation_importance.empty()) {
            std::string text = "feature,importance\n";
            for (std::size_t f = 0; f < ev.permutation_importance.size(); ++f)
                text += ev.feature_names.at(f) + "," + textio::format_double(ev.permutation_importance[f]) + "\n";
            written.push_back(out_dir / "importance.csv");
            textio::write_file_atomic(written.back(), text);
        }
    }
    for (const auto& [spec, table] : artifacts.dfm_tables) {
        auto stem = dfm_file_name(spec);
        stem = stem.substr(0, stem.size() - 4);
        const auto dir = out_dir / stem;
        fs::create_directories(dir);
        const auto means = class_mean_dfms(table, spec);
        std::vector<Matrix> present;
        std::vector<int> codes;
        for (int k = 0; k < kNumClasses; ++k)
            if (means[static_cast<std::size_t>(k)].rows > 0) {
                present.push_back(means[static_cast<std::size_t>(k)]);
                codes.push_back(k);
            }
        if (present.empty()) continue;
        const auto deltas = delta_matrices(present);
        for (std::size_t q = 0; q < present.size(); ++q) {
            const std::string name(class_name(class_from_code(codes[q])));
            written.push_back(dir / ("mean_" + name + ".csv"));
            write_matrix_csv(present[q], written.back());
            written.push_back(dir / ("delta_" + name + ".csv"));
            write_matrix_csv(deltas[q], written.back());
        }
        const auto all = table_dfms(table, spec);
        if (all.size() >= 3) {
            const auto cc = corner_correlations(all);
            for (std::size_t c = 0; c < 4; ++c) {
                const auto [i, j] = cc.corners[c];
                written.push_back(dir / ("corner_" + std::to_string(i + 1) + "_" + std::to_string(j + 1) + ".csv"));
                write_matrix_csv(cc.correlation[c], written.back());
            }
        }
    }
    return written;
}

}  // namespace ctbpnet
