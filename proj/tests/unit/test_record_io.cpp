#include <filesystem>
#include <fstream>

#include "ctbpnet/record_io.hpp"
#include "doctest.h"

using namespace ctbpnet;
namespace fs = std::filesystem;

namespace {

void same_record(const GrowthRecord& a, const GrowthRecord& b) {
    REQUIRE(a.num_vertices() == b.num_vertices());
    REQUIRE(a.edges.size() == b.edges.size());
    CHECK(a.final_time == b.final_time);
    for (std::size_t i = 0; i < a.num_vertices(); ++i) {
        CHECK(a.vertices[i].birth_time == b.vertices[i].birth_time);
        CHECK(a.vertices[i].fitness == b.vertices[i].fitness);
        CHECK(a.vertices[i].out_target == b.vertices[i].out_target);
        CHECK(a.vertices[i].members_born == b.vertices[i].members_born);
    }
    for (std::size_t k = 0; k < a.edges.size(); ++k) {
        CHECK(a.edges[k].time == b.edges[k].time);
        CHECK(a.edges[k].source == b.edges[k].source);
        CHECK(a.edges[k].target == b.edges[k].target);
    }
}

}  // namespace

TEST_CASE("synthetic records round-trip, plain and gzip") {
    Rng pick(1);
    const auto cfg = sample_config(ModelClass::AP, pick);
    const auto r = simulate_with_retries(cfg, 500, 100, SeedPath{3, 7, 0});
    REQUIRE_FALSE(r.all_extinct());
    for (bool gz : {false, true}) {
        const auto dir = fs::path(CTBPNET_TEST_TMP) / (gz ? "rec_gz" : "rec_plain");
        fs::remove_all(dir);
        const auto files = save_record(*r.record, dir, gz);
        CHECK(fs::exists(files.vertices));
        CHECK(fs::exists(files.edges));
        CHECK(fs::exists(files.sidecar));
        const auto back = load_record(dir);
        same_record(*r.record, back);
        const auto& p = std::get<SyntheticProvenance>(back.provenance);
        CHECK(p.seed == r.seed_used);
        CHECK(p.attempts == r.attempts_used);
        CHECK(config_params(p.config) == config_params(cfg));
    }
}

TEST_CASE("sidecar carries the provenance") {
    GrowthRecord rec;
    rec.vertices = {CollapsedVertex{0.0, 1.0, 1, 1}};
    rec.provenance = IngestedProvenance{"some/edges.csv"};
    const auto j = provenance_to_json(rec);
    CHECK(j.at("kind") == "ingested");
    const auto dir = fs::path(CTBPNET_TEST_TMP) / "rec_ingested";
    fs::remove_all(dir);
    save_record(rec, dir);
    const auto back = load_record(dir);
    CHECK(std::holds_alternative<IngestedProvenance>(back.provenance));
}

TEST_CASE("corrupt files are rejected") {
    const auto dir = fs::path(CTBPNET_TEST_TMP) / "rec_bad";
    fs::remove_all(dir);
    GrowthRecord rec;
    rec.vertices = {CollapsedVertex{0.0, 1.0, 1, 1}, CollapsedVertex{1.0, 1.0, 1, 1}};
    rec.edges = {EdgeEvent{1.0, 1, 0}};
    rec.final_time = 1.0;
    rec.provenance = IngestedProvenance{"x"};
    const auto files = save_record(rec, dir);
    std::ofstream(files.edges) << "time,source,target,self_flag\n0.5,1,0,0\n";
    CHECK_THROWS(load_record(dir));
}
