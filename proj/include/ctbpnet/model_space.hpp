#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ctbpnet/rng.hpp"
#include "json.hpp"

namespace ctbpnet {

// ---------------------------------------------------------------------------
// Model classes
// ---------------------------------------------------------------------------

enum class ModelClass : int {
    U = 0,
    P = 1,
    FPl = 2,
    FExp = 3,
    FPlA = 4,
    FExpA = 5,
    FUnifP = 6,
    AP = 7,
    FExpAP = 8,
};

inline constexpr int kNumClasses = 9;

inline constexpr std::array<ModelClass, kNumClasses> kAllClasses{
    ModelClass::U,    ModelClass::P,     ModelClass::FPl,
    ModelClass::FExp, ModelClass::FPlA,  ModelClass::FExpA,
    ModelClass::FUnifP, ModelClass::AP,  ModelClass::FExpAP};

constexpr int class_code(ModelClass c) noexcept { return static_cast<int>(c); }

/// Short acronym: U, P, F_pl, F_exp, F_plA, F_expA, F_unifP, AP, F_expAP.
std::string_view class_name(ModelClass c) noexcept;

/// Throws std::invalid_argument for codes outside 0..8.
ModelClass class_from_code(int code);

std::optional<ModelClass> class_from_name(std::string_view name);

// ---------------------------------------------------------------------------
// Mechanisms
// ---------------------------------------------------------------------------

struct ConstantFitness {};
/// Pure Pareto with density (tau-1) x_min^(tau-1) x^(-tau), x > x_min.
struct ParetoFitness {
    double x_min;
    double tau;
};
struct ExponentialFitness {
    double rate;
};
struct UniformFitness {
    double lo;
    double hi;
};
using FitnessSpec = std::variant<ConstantFitness, ParetoFitness, ExponentialFitness, UniformFitness>;

/// Inverse CDF of the fitness law. Throws std::domain_error unless 0 < u < 1.
double fitness_quantile(const FitnessSpec& spec, double u);

double fitness_mean(const FitnessSpec& spec);

struct NoAging {};
struct LognormalAging {
    double mu;
    double sigma;
};
using AgingSpec = std::variant<NoAging, LognormalAging>;

/// Aging density h, its integral H and the inverse of H.
///
/// Without aging h = 1 and H(t) = t. With lognormal aging H is the lognormal
/// CDF, so H(inf) = 1 and inverse_cumulative(1) = +inf marks an exhausted
/// clock (no further offspring can ever be produced).
class AgingFunction {
public:
    explicit AgingFunction(AgingSpec spec);

    double density(double t) const;
    double cumulative(double t) const;
    double inverse_cumulative(double p) const;

    /// Total mass H(inf): 1 for lognormal, +inf without aging.
    double total_mass() const;
    bool bounded() const noexcept { return std::holds_alternative<LognormalAging>(spec_); }
    const AgingSpec& spec() const noexcept { return spec_; }

private:
    AgingSpec spec_;
};

struct NoPrefAttach {};
/// f(k) = a k + b.
struct AffinePrefAttach {
    double a;
    double b;
};
using PrefAttachSpec = std::variant<NoPrefAttach, AffinePrefAttach>;

double pa_value(const PrefAttachSpec& spec, std::uint64_t k);

// ---------------------------------------------------------------------------
// Out-degree distribution
// ---------------------------------------------------------------------------

class OutDegreePmf {
public:
    struct Entry {
        int m;
        double p;
    };

    /// Entries must have m >= 1 strictly increasing and p >= 0. Probabilities
    /// summing to 1 within 1e-6 are renormalized; anything else is rejected.
    explicit OutDegreePmf(std::vector<Entry> entries);

    /// p(m) proportional to exp(-(ln m - mu)^2 / (2 sigma^2)) / m on 1..m_max.
    static OutDegreePmf discrete_lognormal(double mu, double sigma, int m_max);

    /// Solves for (mu, sigma) so that discrete_lognormal matches the given mean
    /// and variance (Newton iteration with a finite-difference Jacobian).
    static std::pair<double, double> calibrate_discrete_lognormal(double mean, double variance,
                                                                  int m_max);

    /// Shipped default: mean 10.29, variance 181.189 on support 1..800.
    static std::shared_ptr<const OutDegreePmf> default_pmf();

    /// Two-column CSV `m,p` with header.
    static OutDegreePmf load_csv(const std::filesystem::path& path);
    void save_csv(const std::filesystem::path& path) const;

    /// Inverse-CDF lookup; deterministic in u.
    int sample(double u) const;

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return variance_; }

private:
    std::vector<Entry> entries_;
    std::vector<double> cumulative_;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

struct ModelConfig {
    ModelClass model_class = ModelClass::U;
    FitnessSpec fitness = ConstantFitness{};
    AgingSpec aging = NoAging{};
    PrefAttachSpec pa = NoPrefAttach{};
    std::shared_ptr<const OutDegreePmf> outdeg;
    /// Where the out-degree PMF came from; "default" for the shipped one.
    std::string outdeg_source = "default";
};

/// Builds a config from explicit parameters. Recognized keys per class:
/// a, b, x_min, tau, lambda, c, d, mu, sigma. Missing or extra keys throw.
ModelConfig make_config(ModelClass c, const nlohmann::json& params,
                        std::shared_ptr<const OutDegreePmf> outdeg = OutDegreePmf::default_pmf());

/// Draws each parameter uniformly from its range for the class. Sigma is
/// fixed to 1 in aging models; for F_expAP lambda is drawn from
/// (0.1, a + b / E[M]) with E[M] taken from `outdeg`.
ModelConfig sample_config(ModelClass c, Rng& rng,
                          std::shared_ptr<const OutDegreePmf> outdeg = OutDegreePmf::default_pmf());

/// True when the parameters lie in the sampling ranges for the class.
bool in_sampling_range(const ModelConfig& config);

/// Parameters as a flat JSON object, keys as accepted by make_config.
nlohmann::json config_params(const ModelConfig& config);

/// {class, class_code, params{...}, outdeg_pmf}
nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

struct SupercriticalityReport {
    double condition_value;  // E[xi(inf)], may be +inf
    bool is_supercritical;
    double collapsed_conservative_value;  // condition_value / E[M]
    std::string formula_id;
};

/// Expected total offspring of one uncollapsed vertex, evaluated in closed form
/// for the class. Throws std::domain_error for degenerate parameters
/// (for example tau <= 2).
SupercriticalityReport check_supercritical(const ModelConfig& config);

}  // namespace ctbpnet
