#include "ctbpnet/growth.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace ctbpnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDefaultTimeCapNoAging = 1e7;

struct CtbpNode {
    std::uint32_t batch;
    std::uint64_t indegree = 0;
    std::uint32_t version = 0;
};

struct HeapEntry {
    double time;
    std::uint32_t node;
    std::uint32_t version;

    // Min-heap on (time, node); node id breaks exact ties deterministically.
    bool operator>(const HeapEntry& o) const noexcept {
        return time != o.time ? time > o.time : node > o.node;
    }
};

}  // namespace

std::string_view rate_scaling_name(RateScaling s) noexcept { return s == RateScaling::node ? "node" : "batch"; }

std::optional<RateScaling> rate_scaling_from_name(std::string_view name) {
    if (name == "node") return RateScaling::node;
    if (name == "batch") return RateScaling::batch;
    return std::nullopt;
}

std::vector<std::uint64_t> GrowthRecord::in_degrees() const {
    std::vector<std::uint64_t> deg(vertices.size(), 0);
    for (const auto& e : edges) ++deg[e.target];
    return deg;
}

std::vector<std::uint64_t> GrowthRecord::out_degrees() const {
    std::vector<std::uint64_t> deg(vertices.size(), 0);
    for (const auto& e : edges) ++deg[e.source];
    return deg;
}

void GrowthRecord::validate() const {
    auto fail = [](const std::string& msg) { throw std::logic_error("invalid growth record: " + msg); };
    for (std::size_t i = 1; i < vertices.size(); ++i)
        if (vertices[i].birth_time < vertices[i - 1].birth_time)
            fail("vertex birth times decrease at id " + std::to_string(i));
    double prev = -kInf;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        if (e.time < prev) fail("edge times decrease at edge " + std::to_string(k));
        prev = e.time;
        if (e.source >= vertices.size() || e.target >= vertices.size())
            fail("edge " + std::to_string(k) + " has an endpoint out of range");
        if (vertices[e.source].birth_time > e.time) fail("edge " + std::to_string(k) + " precedes its source");
        if (!e.self() && !(vertices[e.target].birth_time < e.time))
            fail("edge " + std::to_string(k) + " does not follow its target's birth");
    }
    if (!vertices.empty() && final_time < vertices.back().birth_time) fail("final time precedes last birth");
    if (!edges.empty() && final_time < edges.back().time) fail("final time precedes last edge");
    if (std::holds_alternative<SyntheticProvenance>(provenance)) {
        std::uint64_t members = 0;
        for (const auto& v : vertices) {
            if (v.members_born < 1 || v.members_born > v.out_target) fail("batch membership out of range");
            members += static_cast<std::uint64_t>(v.members_born);
        }
        if (members != edges.size() + 1) fail("edge count does not equal CTBP node count minus one");
    }
}

double next_offspring_time(const AgingFunction& aging, const ClockInput& in) {
    if (!(in.rate_scale > 0.0)) return kInf;
    double t;
    if (!aging.bounded()) {
        t = in.now + in.exp1_draw / in.rate_scale;
    } else {
        const double target = aging.cumulative(in.now - in.birth_time) + in.exp1_draw / in.rate_scale;
        if (target >= 1.0) return kInf;
        t = in.birth_time + aging.inverse_cumulative(target);
        if (std::isinf(t)) return kInf;
    }
    // Rounding can land on or before `now` for tiny draws; events are strictly ordered.
    if (!(t > in.now)) t = std::nextafter(in.now, kInf);
    return t;
}

SimOutcome simulate(const ModelConfig& config, std::size_t target_size, Rng& rng, const SimOptions& options) {
    if (target_size < 1) throw std::invalid_argument("simulate: target_size must be >= 1");
    if (!config.outdeg) throw std::invalid_argument("simulate: config has no out-degree pmf");

    const AgingFunction aging(config.aging);
    const double time_cap = options.time_cap.value_or(aging.bounded() ? kInf : kDefaultTimeCapNoAging);
    const auto& pmf = *config.outdeg;

    GrowthRecord rec;
    std::vector<CtbpNode> nodes;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;

    auto open_batch = [&](double t) {
        CollapsedVertex v;
        v.birth_time = t;
        v.fitness = fitness_quantile(config.fitness, rng.uniform_open());
        v.out_target = pmf.sample(rng.uniform_open());
        v.members_born = 0;
        rec.vertices.push_back(v);
    };

    auto sample_clock = [&](std::uint32_t id, double now) {
        auto& node = nodes[id];
        const auto& batch = rec.vertices[node.batch];
        double scale = batch.fitness * pa_value(config.pa, node.indegree);
        if (options.rate_scaling == RateScaling::batch) scale /= batch.out_target;
        ClockInput in{scale, batch.birth_time, now, rng.exp1()};
        const double t = next_offspring_time(aging, in);
        ++node.version;
        if (options.on_clock) options.on_clock(ClockSample{id, node.batch, node.indegree, in, t});
        if (std::isfinite(t)) heap.push(HeapEntry{t, id, node.version});
    };

    auto add_member = [&] {
        const auto batch = static_cast<std::uint32_t>(rec.vertices.size() - 1);
        ++rec.vertices.back().members_born;
        nodes.push_back(CtbpNode{batch});
        return static_cast<std::uint32_t>(nodes.size() - 1);
    };

    open_batch(0.0);
    const auto root = add_member();
    if (target_size == 1) {
        rec.final_time = 0.0;
        rec.provenance = SyntheticProvenance{config, options.rate_scaling, 0, 1};
        return SimOutcome{std::move(rec)};
    }
    sample_clock(root, 0.0);

    double last_time = 0.0;
    while (!heap.empty()) {
        const HeapEntry top = heap.top();
        heap.pop();
        if (top.version != nodes[top.node].version) continue;
        if (top.time > time_cap) return SimOutcome{Extinct{last_time, rec.vertices.size(), true}};

        const double t = top.time;
        last_time = t;
        const std::uint32_t parent = top.node;

        if (rec.vertices.back().members_born >= rec.vertices.back().out_target) open_batch(t);
        const auto child = add_member();
        rec.edges.push_back(EdgeEvent{t, nodes[child].batch, nodes[parent].batch});

        if (rec.vertices.size() >= target_size) {
            ++nodes[parent].indegree;
            rec.final_time = t;
            rec.provenance = SyntheticProvenance{config, options.rate_scaling, 0, 1};
            return SimOutcome{std::move(rec)};
        }

        ++nodes[parent].indegree;
        sample_clock(parent, t);
        sample_clock(child, t);
    }
    return SimOutcome{Extinct{last_time, rec.vertices.size(), false}};
}

std::uint64_t attempt_seed(const SeedPath& path, std::uint64_t attempt) {
    return derive_seed({path.master_seed, static_cast<std::uint64_t>(path.class_code), path.config_index, attempt});
}

RetryResult simulate_with_retries(const ModelConfig& config, std::size_t target_size, int max_attempts,
                                  const SeedPath& seeds, const SimOptions& options) {
    if (max_attempts < 1) throw std::invalid_argument("simulate_with_retries: max_attempts must be >= 1");
    RetryResult out;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const auto seed = attempt_seed(seeds, static_cast<std::uint64_t>(attempt));
        Rng rng(seed);
        auto outcome = simulate(config, target_size, rng, options);
        out.attempts_used = attempt + 1;
        if (outcome.survived()) {
            auto& rec = outcome.record();
            rec.provenance = SyntheticProvenance{config, options.rate_scaling, seed, attempt + 1};
            out.record = std::move(rec);
            out.seed_used = seed;
            return out;
        }
    }
    return out;
}

}  // namespace ctbpnet
