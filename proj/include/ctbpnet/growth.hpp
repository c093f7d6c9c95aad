#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctbpnet/model_space.hpp"
#include "ctbpnet/rng.hpp"

namespace ctbpnet {

/// One graph vertex: a batch of CTBP nodes sharing birth time and fitness.
struct CollapsedVertex {
    double birth_time = 0.0;
    double fitness = 1.0;
    int out_target = 1;
    int members_born = 0;
};

/// Edge from the new (citing) vertex to the parent (cited) vertex.
/// source == target marks an offspring that landed in its parent's own batch.
struct EdgeEvent {
    double time = 0.0;
    std::uint32_t source = 0;
    std::uint32_t target = 0;

    bool self() const noexcept { return source == target; }
};

/// How a batch's offspring intensity is shared among its CTBP nodes.
///  - node:  every node fires at eta_v * h(t - t_v) * f(indegree_u)
///  - batch: the same intensity divided by the batch size M_v
enum class RateScaling { node, batch };

std::string_view rate_scaling_name(RateScaling s) noexcept;
std::optional<RateScaling> rate_scaling_from_name(std::string_view name);

struct SyntheticProvenance {
    ModelConfig config;
    RateScaling rate_scaling = RateScaling::node;
    std::uint64_t seed = 0;
    int attempts = 1;
};

struct IngestedProvenance {
    std::string source_path;
};

using Provenance = std::variant<std::monostate, SyntheticProvenance, IngestedProvenance>;

/// Timestamped birth and edge stream of one network.
struct GrowthRecord {
    std::vector<CollapsedVertex> vertices;  // birth order
    std::vector<EdgeEvent> edges;           // time order
    double final_time = 0.0;
    Provenance provenance;

    std::size_t num_vertices() const noexcept { return vertices.size(); }

    /// Received edges per vertex at the final time, counting multi- and self-edges.
    std::vector<std::uint64_t> in_degrees() const;
    std::vector<std::uint64_t> out_degrees() const;

    /// Throws std::logic_error describing the first violated record invariant.
    void validate() const;
};

/// Pending clock of one CTBP node, as seen by next_offspring_time.
struct ClockInput {
    double rate_scale;   // eta_v * f(indegree), divided by M_v under RateScaling::batch
    double birth_time;   // t_v of the node's batch
    double now;
    double exp1_draw;
};

/// Next event time of an inhomogeneous Poisson clock with intensity
/// rate_scale * h(t - birth_time), found by inverting the integrated intensity
/// at a unit-exponential draw. Returns +inf when the remaining mass
/// rate_scale * (1 - H(now - birth_time)) cannot reach the draw.
double next_offspring_time(const AgingFunction& aging, const ClockInput& in);

/// Emitted each time a clock is (re)sampled during a simulation.
struct ClockSample {
    std::uint32_t node;
    std::uint32_t batch;
    std::uint64_t indegree;
    ClockInput input;
    double next_time;
};

struct SimOptions {
    RateScaling rate_scaling = RateScaling::node;
    /// Simulation stops (flagged) once an event would fire after this time.
    /// Unset means +inf with aging and 1e7 without.
    std::optional<double> time_cap;
    std::function<void(const ClockSample&)> on_clock;
};

struct Extinct {
    double time_of_death = 0.0;
    std::size_t vertices_reached = 0;
    bool time_cap_hit = false;
};

struct SimOutcome {
    std::variant<GrowthRecord, Extinct> result;

    bool survived() const noexcept { return std::holds_alternative<GrowthRecord>(result); }
    const GrowthRecord& record() const { return std::get<GrowthRecord>(result); }
    GrowthRecord& record() { return std::get<GrowthRecord>(result); }
    const Extinct& extinct() const { return std::get<Extinct>(result); }
};

/// Event-driven simulation of the collapsed process until `target_size`
/// vertices have been opened or every clock is exhausted.
SimOutcome simulate(const ModelConfig& config, std::size_t target_size, Rng& rng, const SimOptions& options = {});

/// Identifies one network slot for seed derivation.
struct SeedPath {
    std::uint64_t master_seed = 0;
    int class_code = 0;
    std::uint64_t config_index = 0;
};

std::uint64_t attempt_seed(const SeedPath& path, std::uint64_t attempt);

struct RetryResult {
    std::optional<GrowthRecord> record;  // empty when every attempt went extinct
    int attempts_used = 0;
    std::uint64_t seed_used = 0;

    bool all_extinct() const noexcept { return !record.has_value(); }
};

/// Repeats simulate() with per-attempt seeds until one run survives, at most
/// `max_attempts` times.
RetryResult simulate_with_retries(const ModelConfig& config, std::size_t target_size, int max_attempts,
                                  const SeedPath& seeds, const SimOptions& options = {});

}  // namespace ctbpnet
