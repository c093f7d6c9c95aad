#pragma once

#include <filesystem>

#include "ctbpnet/growth.hpp"
#include "json.hpp"

namespace ctbpnet {

struct RecordFiles {
    std::filesystem::path vertices;  // id,birth_time,fitness,out_target
    std::filesystem::path edges;     // time,source,target,self_flag
    std::filesystem::path sidecar;   // provenance JSON
};

/// File names used for a record stored in `dir`.
RecordFiles record_files(const std::filesystem::path& dir, bool gzip);

/// Writes the three files of a record. Returns the paths written.
RecordFiles save_record(const GrowthRecord& record, const std::filesystem::path& dir, bool gzip = false);

/// Reads a record written by save_record (plain or gzip, detected from the
/// files present). Batch membership counts of synthetic records are rebuilt
/// from the edge count: every batch but the last is full.
GrowthRecord load_record(const std::filesystem::path& dir);

nlohmann::json provenance_to_json(const GrowthRecord& record);

}  // namespace ctbpnet
