// Thin bridge: structured values cross the boundary as JSON text and are
// decoded on the Python side.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ctbpnet/dynamic_features.hpp"
#include "ctbpnet/growth.hpp"
#include "ctbpnet/model_space.hpp"
#include "ctbpnet/pipeline.hpp"
#include "ctbpnet/record_io.hpp"
#include "ctbpnet/static_features.hpp"
#include "ctbpnet/textio.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace ctbpnet;
using nlohmann::json;

namespace {

ModelClass parse_class(const std::string& name) {
    if (auto c = class_from_name(name)) return *c;
    throw std::invalid_argument("unknown class '" + name + "'");
}

// Non-finite numbers are not valid JSON; send them as strings.
json number(double x) { return std::isfinite(x) ? json(x) : json(textio::format_double(x)); }

json record_json(const GrowthRecord& r) {
    json v = json::array(), e = json::array();
    for (const auto& x : r.vertices) v.push_back({x.birth_time, x.fitness, x.out_target, x.members_born});
    for (const auto& x : r.edges) e.push_back({x.time, x.source, x.target});
    return {{"vertices", v}, {"edges", e}, {"final_time", r.final_time}, {"provenance", provenance_to_json(r)}};
}

std::string check(const std::string& cls, const std::string& params) {
    const auto cfg = make_config(parse_class(cls), json::parse(params));
    const auto r = check_supercritical(cfg);
    return json{{"condition_value", number(r.condition_value)},
                {"is_supercritical", r.is_supercritical},
                {"collapsed_conservative_value", number(r.collapsed_conservative_value)},
                {"formula_id", r.formula_id}}
        .dump();
}

std::string simulate_json(const std::string& cls, const std::string& params, std::size_t size, std::uint64_t seed,
                          int max_attempts) {
    const auto cfg = make_config(parse_class(cls), json::parse(params));
    RetryResult r;
    {
        py::gil_scoped_release release;
        r = simulate_with_retries(cfg, size, max_attempts, SeedPath{seed, class_code(cfg.model_class), 0});
    }
    if (r.all_extinct()) return "null";
    return record_json(*r.record).dump();
}

std::string load_json(const std::string& dir) { return record_json(load_record(dir)).dump(); }

std::vector<std::vector<double>> dfm(const std::string& dir, const std::string& spec) {
    const auto m = compute_dfm(load_record(dir), CohortSpec::parse(spec));
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m.values.rows));
    for (int i = 0; i < m.values.rows; ++i)
        for (int j = 0; j < m.values.cols; ++j) out[static_cast<std::size_t>(i)].push_back(m.values(i, j));
    return out;
}

std::vector<std::pair<std::string, double>> statics(const std::string& dir) {
    const auto v = static_vector(load_record(dir));
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t k = 0; k < kNumStaticFeatures; ++k)
        out.emplace_back(std::string(static_feature_names()[k]), v.values[k]);
    return out;
}

std::string generate(const std::string& out_dir, const std::vector<std::string>& classes, int per_class,
                     std::size_t size, std::uint64_t seed, int max_attempts, int workers) {
    RunSpec spec;
    if (!classes.empty()) {
        spec.classes.clear();
        for (const auto& c : classes) spec.classes.push_back(parse_class(c));
    }
    spec.networks_per_class = per_class;
    spec.target_size = size;
    spec.master_seed = seed;
    spec.max_attempts = max_attempts;
    spec.workers = workers;
    spec.out_dir = out_dir;
    DatasetManifest m;
    {
        py::gil_scoped_release release;
        m = generate_dataset(spec);
    }
    return m.to_json().dump();
}

std::string classify(const std::string& model_path, const std::string& record_dir) {
    const auto model = GbdtModel::load(model_path);
    return classify_network(model, load_record(record_dir), std::nullopt, record_dir).to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_ctbpnet, m) {
    m.doc() = "Collapsed branching-process network toolkit";
    m.attr("__version__") = std::string(kToolkitVersion);
    m.attr("class_names") = [] {
        std::vector<std::string> v;
        for (auto c : kAllClasses) v.emplace_back(class_name(c));
        return v;
    }();
    m.def("_check_supercritical", &check);
    m.def("_simulate", &simulate_json);
    m.def("_load_record", &load_json);
    m.def("_generate", &generate);
    m.def("_classify", &classify);
    m.def("dfm", &dfm, py::arg("record_dir"), py::arg("spec") = "time:10x10",
          "Dynamic feature matrix of a stored record as a list of rows.");
    m.def("static_features", &statics, py::arg("record_dir"), "The 36 static features as (name, value) pairs.");
}
