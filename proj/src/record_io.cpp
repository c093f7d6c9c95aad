#include "ctbpnet/record_io.hpp"

#include <stdexcept>
#include <string>

#include "ctbpnet/textio.hpp"

namespace ctbpnet {

namespace fs = std::filesystem;

RecordFiles record_files(const fs::path& dir, bool gzip) {
    const std::string ext = gzip ? ".csv.gz" : ".csv";
    return {dir / ("vertices" + ext), dir / ("edges" + ext), dir / "meta.json"};
}

nlohmann::json provenance_to_json(const GrowthRecord& rec) {
    nlohmann::json j;
    if (const auto* s = std::get_if<SyntheticProvenance>(&rec.provenance)) {
        j["kind"] = "synthetic";
        j["config"] = config_to_json(s->config);
        j["rate_scaling"] = std::string(rate_scaling_name(s->rate_scaling));
        j["seed"] = s->seed;
        j["attempts"] = s->attempts;
    } else if (const auto* g = std::get_if<IngestedProvenance>(&rec.provenance)) {
        j["kind"] = "ingested";
        j["source"] = g->source_path;
    } else {
        j["kind"] = "unknown";
    }
    j["final_time"] = rec.final_time;
    j["num_vertices"] = rec.vertices.size();
    j["num_edges"] = rec.edges.size();
    return j;
}

RecordFiles save_record(const GrowthRecord& rec, const fs::path& dir, bool gzip) {
    const auto files = record_files(dir, gzip);
    std::string v = "id,birth_time,fitness,out_target\n";
    v.reserve(rec.vertices.size() * 48);
    for (std::size_t i = 0; i < rec.vertices.size(); ++i) {
        const auto& x = rec.vertices[i];
        v += std::to_string(i);
        v += ',';
        v += textio::format_double(x.birth_time);
        v += ',';
        v += textio::format_double(x.fitness);
        v += ',';
        v += std::to_string(x.out_target);
        v += '\n';
    }
    std::string e = "time,source,target,self_flag\n";
    e.reserve(rec.edges.size() * 40);
    for (const auto& x : rec.edges) {
        e += textio::format_double(x.time);
        e += ',';
        e += std::to_string(x.source);
        e += ',';
        e += std::to_string(x.target);
        e += x.self() ? ",1\n" : ",0\n";
    }
    textio::write_file_atomic(files.vertices, v);
    textio::write_file_atomic(files.edges, e);
    textio::write_file_atomic(files.sidecar, provenance_to_json(rec).dump(2) + "\n");
    return files;
}

GrowthRecord load_record(const fs::path& dir) {
    const bool gzip = fs::exists(dir / "vertices.csv.gz");
    const auto files = record_files(dir, gzip);
    GrowthRecord rec;

    auto meta = nlohmann::json::parse(textio::read_file(files.sidecar));
    rec.final_time = meta.at("final_time").get<double>();

    auto vlines = textio::lines(textio::read_file(files.vertices));
    if (vlines.empty() || vlines.front() != "id,birth_time,fitness,out_target")
        throw std::runtime_error(files.vertices.string() + ": bad header");
    rec.vertices.reserve(vlines.size() - 1);
    for (std::size_t i = 1; i < vlines.size(); ++i) {
        auto f = textio::split_fields(vlines[i]);
        if (f.size() != 4) throw std::runtime_error(files.vertices.string() + ": bad row " + std::to_string(i + 1));
        if (textio::parse_int(f[0]) != static_cast<long long>(i - 1))
            throw std::runtime_error(files.vertices.string() + ": ids must be dense and ordered");
        CollapsedVertex v;
        v.birth_time = textio::parse_double(f[1]);
        v.fitness = textio::parse_double(f[2]);
        v.out_target = static_cast<int>(textio::parse_int(f[3]));
        v.members_born = v.out_target;
        rec.vertices.push_back(v);
    }

    auto elines = textio::lines(textio::read_file(files.edges));
    if (elines.empty() || elines.front() != "time,source,target,self_flag")
        throw std::runtime_error(files.edges.string() + ": bad header");
    rec.edges.reserve(elines.size() - 1);
    for (std::size_t i = 1; i < elines.size(); ++i) {
        auto f = textio::split_fields(elines[i]);
        if (f.size() != 4) throw std::runtime_error(files.edges.string() + ": bad row " + std::to_string(i + 1));
        rec.edges.push_back(EdgeEvent{textio::parse_double(f[0]), static_cast<std::uint32_t>(textio::parse_int(f[1])),
                                      static_cast<std::uint32_t>(textio::parse_int(f[2]))});
    }

    const auto kind = meta.value("kind", std::string("unknown"));
    if (kind == "synthetic") {
        SyntheticProvenance p{config_from_json(meta.at("config")), RateScaling::node, meta.at("seed").get<std::uint64_t>(),
                              meta.at("attempts").get<int>()};
        if (auto rs = rate_scaling_from_name(meta.value("rate_scaling", std::string("node")))) p.rate_scaling = *rs;
        rec.provenance = std::move(p);
        if (!rec.vertices.empty()) {
            long long before_last = 0;
            for (std::size_t i = 0; i + 1 < rec.vertices.size(); ++i) before_last += rec.vertices[i].out_target;
            rec.vertices.back().members_born =
                static_cast<int>(static_cast<long long>(rec.edges.size()) + 1 - before_last);
        }
    } else if (kind == "ingested") {
        rec.provenance = IngestedProvenance{meta.value("source", std::string())};
    }
    rec.validate();
    return rec;
}

}  // namespace ctbpnet
