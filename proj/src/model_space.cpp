#include "ctbpnet/model_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ctbpnet/normal.hpp"
#include "ctbpnet/textio.hpp"

namespace ctbpnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<std::string_view, kNumClasses> kNames{
    "U", "P", "F_pl", "F_exp", "F_plA", "F_expA", "F_unifP", "AP", "F_expAP"};

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Parameter intervals used when sampling configurations.
struct Range {
    double lo, hi;
    bool contains(double x) const { return x > lo && x < hi; }
};
constexpr Range kPaA{1.0, 4.0};
constexpr Range kPaB{1.0, 4.0};
constexpr Range kApA{3.3, 7.0};
constexpr Range kXmin{0.5, 1.0};
constexpr Range kTauF{2.0, 4.0};
constexpr Range kTauFA{2.0, 2.7};
constexpr Range kLambdaF{0.1, 3.0};
constexpr Range kLambdaFA{0.1, 1.0};
constexpr Range kUnifC{0.1, 1.0};
constexpr Range kUnifD{1.0, 5.0};
constexpr Range kMu{0.1, 3.0};
constexpr double kLambdaFloor = 0.1;
constexpr double kSigma = 1.0;

double require(const nlohmann::json& p, const char* key) {
    if (!p.contains(key) || !p.at(key).is_number())
        throw std::invalid_argument(std::string("missing numeric parameter '") + key + "'");
    return p.at(key).get<double>();
}

}  // namespace

std::string_view class_name(ModelClass c) noexcept { return kNames[static_cast<std::size_t>(c)]; }

ModelClass class_from_code(int code) {
    if (code < 0 || code >= kNumClasses)
        throw std::invalid_argument("model class code out of range: " + std::to_string(code));
    return static_cast<ModelClass>(code);
}

std::optional<ModelClass> class_from_name(std::string_view name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (kNames[static_cast<std::size_t>(i)] == name) return static_cast<ModelClass>(i);
    return std::nullopt;
}

// ---------------------------------------------------------------------------

double fitness_quantile(const FitnessSpec& spec, double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("fitness_quantile: u must lie in (0,1)");
    return std::visit(overloaded{
                          [](ConstantFitness) { return 1.0; },
                          [u](const ParetoFitness& f) { return f.x_min * std::pow(1.0 - u, -1.0 / (f.tau - 1.0)); },
                          [u](const ExponentialFitness& f) { return -std::log1p(-u) / f.rate; },
                          [u](const UniformFitness& f) { return f.lo + u * (f.hi - f.lo); },
                      },
                      spec);
}

double fitness_mean(const FitnessSpec& spec) {
    return std::visit(overloaded{
                          [](ConstantFitness) { return 1.0; },
                          [](const ParetoFitness& f) {
                              return f.tau > 2.0 ? (f.tau - 1.0) * f.x_min / (f.tau - 2.0) : kInf;
                          },
                          [](const ExponentialFitness& f) { return 1.0 / f.rate; },
                          [](const UniformFitness& f) { return 0.5 * (f.lo + f.hi); },
                      },
                      spec);
}

AgingFunction::AgingFunction(AgingSpec spec) : spec_(spec) {
    if (auto* ln = std::get_if<LognormalAging>(&spec_); ln && !(ln->sigma > 0.0))
        throw std::invalid_argument("lognormal aging needs sigma > 0");
}

double AgingFunction::density(double t) const {
    if (const auto* ln = std::get_if<LognormalAging>(&spec_)) {
        if (t <= 0.0) return 0.0;
        const double z = (std::log(t) - ln->mu) / ln->sigma;
        return std::exp(-0.5 * z * z) / (t * ln->sigma * std::sqrt(2.0 * M_PI));
    }
    return 1.0;
}

double AgingFunction::cumulative(double t) const {
    if (const auto* ln = std::get_if<LognormalAging>(&spec_)) {
        if (t <= 0.0) return 0.0;
        if (std::isinf(t)) return 1.0;
        return normal::cdf((std::log(t) - ln->mu) / ln->sigma);
    }
    return std::max(t, 0.0);
}

double AgingFunction::inverse_cumulative(double p) const {
    if (const auto* ln = std::get_if<LognormalAging>(&spec_)) {
        if (!(p >= 0.0)) throw std::domain_error("inverse_cumulative: p must be >= 0");
        if (p >= 1.0) return kInf;
        if (p == 0.0) return 0.0;
        return std::exp(ln->mu + ln->sigma * normal::quantile(p));
    }
    if (!(p >= 0.0)) throw std::domain_error("inverse_cumulative: p must be >= 0");
    return p;
}

double AgingFunction::total_mass() const { return bounded() ? 1.0 : kInf; }

double pa_value(const PrefAttachSpec& spec, std::uint64_t k) {
    if (const auto* f = std::get_if<AffinePrefAttach>(&spec)) return f->a * static_cast<double>(k) + f->b;
    return 1.0;
}

// ---------------------------------------------------------------------------

OutDegreePmf::OutDegreePmf(std::vector<Entry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("out-degree pmf is empty");
    double total = 0.0;
    int prev = 0;
    for (const auto& e : entries_) {
        if (e.m < 1) throw std::invalid_argument("out-degree support must be >= 1");
        if (e.m <= prev) throw std::invalid_argument("out-degree support must be strictly increasing");
        if (!(e.p >= 0.0) || !std::isfinite(e.p)) throw std::invalid_argument("negative or non-finite probability");
        prev = e.m;
        total += e.p;
    }
    if (std::fabs(total - 1.0) > 1e-6)
        throw std::invalid_argument("out-degree probabilities sum to " + textio::format_double(total));
    cumulative_.reserve(entries_.size());
    double acc = 0.0;
    for (auto& e : entries_) {
        e.p /= total;
        acc += e.p;
        cumulative_.push_back(acc);
        mean_ += e.m * e.p;
    }
    cumulative_.back() = 1.0;
    for (const auto& e : entries_) variance_ += (e.m - mean_) * (e.m - mean_) * e.p;
}

OutDegreePmf OutDegreePmf::discrete_lognormal(double mu, double sigma, int m_max) {
    if (m_max < 1 || !(sigma > 0.0)) throw std::invalid_argument("discrete_lognormal: bad parameters");
    std::vector<Entry> e;
    e.reserve(static_cast<std::size_t>(m_max));
    double total = 0.0;
    for (int m = 1; m <= m_max; ++m) {
        const double z = (std::log(static_cast<double>(m)) - mu) / sigma;
        const double w = std::exp(-0.5 * z * z) / m;
        e.push_back({m, w});
        total += w;
    }
    for (auto& x : e) x.p /= total;
    return OutDegreePmf(std::move(e));
}

std::pair<double, double> OutDegreePmf::calibrate_discrete_lognormal(double mean, double variance,
                                                                     int m_max) {
    auto residual = [&](double mu, double sigma) {
        auto pmf = discrete_lognormal(mu, sigma, m_max);
        return std::pair{pmf.mean() - mean, (pmf.variance() - variance) / (2.0 * mean)};
    };
    // Start from the continuous lognormal moment match.
    double sigma = std::sqrt(std::log1p(variance / (mean * mean)));
    double mu = std::log(mean) - 0.5 * sigma * sigma;
    for (int it = 0; it < 100; ++it) {
        auto [r1, r2] = residual(mu, sigma);
        if (std::fabs(r1) < 1e-13 * mean && std::fabs(r2) < 1e-13 * mean) break;
        const double h = 1e-7;
        auto [a1, a2] = residual(mu + h, sigma);
        auto [b1, b2] = residual(mu, sigma + h);
        const double j11 = (a1 - r1) / h, j21 = (a2 - r2) / h;
        const double j12 = (b1 - r1) / h, j22 = (b2 - r2) / h;
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0) throw std::runtime_error("calibrate_discrete_lognormal: singular Jacobian");
        double dmu = (j22 * r1 - j12 * r2) / det;
        double dsigma = (-j21 * r1 + j11 * r2) / det;
        // Damp steps that would push sigma non-positive.
        double step = 1.0;
        while (sigma - step * dsigma <= 0.0) step *= 0.5;
        mu -= step * dmu;
        sigma -= step * dsigma;
    }
    return {mu, sigma};
}

std::shared_ptr<const OutDegreePmf> OutDegreePmf::default_pmf() {
    static const std::shared_ptr<const OutDegreePmf> pmf = [] {
        auto [mu, sigma] = calibrate_discrete_lognormal(10.29, 181.189, 800);
        return std::make_shared<const OutDegreePmf>(discrete_lognormal(mu, sigma, 800));
    }();
    return pmf;
}

OutDegreePmf OutDegreePmf::load_csv(const std::filesystem::path& path) {
    auto rows = textio::lines(textio::read_file(path));
    if (rows.empty()) throw std::invalid_argument(path.string() + ": empty pmf file");
    auto header = textio::split_fields(rows.front());
    if (header.size() != 2 || header[0] != "m" || header[1] != "p")
        throw std::invalid_argument(path.string() + ": expected header 'm,p'");
    std::vector<Entry> e;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        auto f = textio::split_fields(rows[i]);
        if (f.size() != 2) throw std::invalid_argument(path.string() + ": line " + std::to_string(i + 1) + " needs 2 fields");
        e.push_back({static_cast<int>(textio::parse_int(f[0])), textio::parse_double(f[1])});
    }
    return OutDegreePmf(std::move(e));
}

void OutDegreePmf::save_csv(const std::filesystem::path& path) const {
    std::string out = "m,p\n";
    for (const auto& e : entries_) out += std::to_string(e.m) + "," + textio::format_double(e.p) + "\n";
    textio::write_file_atomic(path, out);
}

int OutDegreePmf::sample(double u) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return entries_[static_cast<std::size_t>(it - cumulative_.begin())].m;
}

// ---------------------------------------------------------------------------

namespace {

void check_keys(const nlohmann::json& params, std::initializer_list<const char*> allowed) {
    if (!params.is_object()) throw std::invalid_argument("params must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = params.begin(); it != params.end(); ++it)
        if (!ok.count(it.key())) throw std::invalid_argument("unexpected parameter '" + it.key() + "'");
}

void validate(const ModelConfig& cfg) {
    std::visit(overloaded{
                   [](ConstantFitness) {},
                   [](const ParetoFitness& f) {
                       if (!(f.x_min > 0.0)) throw std::invalid_argument("pareto x_min must be positive");
                       if (!(f.tau > 2.0)) throw std::invalid_argument("pareto tau must exceed 2");
                   },
                   [](const ExponentialFitness& f) {
                       if (!(f.rate > 0.0)) throw std::invalid_argument("exponential rate must be positive");
                   },
                   [](const UniformFitness& f) {
                       if (!(f.lo > 0.0 && f.hi > f.lo)) throw std::invalid_argument("uniform fitness needs 0 < c < d");
                   },
               },
               cfg.fitness);
    if (const auto* pa = std::get_if<AffinePrefAttach>(&cfg.pa); pa && !(pa->a > 0.0 && pa->b > 0.0))
        throw std::invalid_argument("affine attachment needs a > 0 and b > 0");
    if (const auto* ln = std::get_if<LognormalAging>(&cfg.aging); ln && !(ln->sigma > 0.0))
        throw std::invalid_argument("lognormal aging needs sigma > 0");
    if (!cfg.outdeg) throw std::invalid_argument("config has no out-degree pmf");
}

}  // namespace

ModelConfig make_config(ModelClass c, const nlohmann::json& params, std::shared_ptr<const OutDegreePmf> outdeg) {
    ModelConfig cfg;
    cfg.model_class = c;
    cfg.outdeg = std::move(outdeg);
    auto lognormal = [&] { return LognormalAging{require(params, "mu"), require(params, "sigma")}; };
    auto affine = [&] { return AffinePrefAttach{require(params, "a"), require(params, "b")}; };
    auto pareto = [&] { return ParetoFitness{require(params, "x_min"), require(params, "tau")}; };
    switch (c) {
        case ModelClass::U:
            check_keys(params, {});
            break;
        case ModelClass::P:
            check_keys(params, {"a", "b"});
            cfg.pa = affine();
            break;
        case ModelClass::FPl:
            check_keys(params, {"x_min", "tau"});
            cfg.fitness = pareto();
            break;
        case ModelClass::FExp:
            check_keys(params, {"lambda"});
            cfg.fitness = ExponentialFitness{require(params, "lambda")};
            break;
        case ModelClass::FPlA:
            check_keys(params, {"x_min", "tau", "mu", "sigma"});
            cfg.fitness = pareto();
            cfg.aging = lognormal();
            break;
        case ModelClass::FExpA:
            check_keys(params, {"lambda", "mu", "sigma"});
            cfg.fitness = ExponentialFitness{require(params, "lambda")};
            cfg.aging = lognormal();
            break;
        case ModelClass::FUnifP:
            check_keys(params, {"a", "b", "c", "d"});
            cfg.pa = affine();
            cfg.fitness = UniformFitness{require(params, "c"), require(params, "d")};
            break;
        case ModelClass::AP:
            check_keys(params, {"a", "b", "mu", "sigma"});
            cfg.pa = affine();
            cfg.aging = lognormal();
            break;
        case ModelClass::FExpAP:
            check_keys(params, {"a", "b", "lambda", "mu", "sigma"});
            cfg.pa = affine();
            cfg.fitness = ExponentialFitness{require(params, "lambda")};
            cfg.aging = lognormal();
            break;
    }
    validate(cfg);
    return cfg;
}

ModelConfig sample_config(ModelClass c, Rng& rng, std::shared_ptr<const OutDegreePmf> outdeg) {
    if (!outdeg) throw std::invalid_argument("sample_config: no out-degree pmf");
    const double mean_m = outdeg->mean();
    auto draw = [&](Range r) { return rng.uniform(r.lo, r.hi); };
    nlohmann::json p = nlohmann::json::object();
    // Draw order is part of the reproducibility contract: a, b, fitness, mu.
    switch (c) {
        case ModelClass::U:
            break;
        case ModelClass::P:
            p["a"] = draw(kPaA);
            p["b"] = draw(kPaB);
            break;
        case ModelClass::FPl:
            p["x_min"] = draw(kXmin);
            p["tau"] = draw(kTauF);
            break;
        case ModelClass::FExp:
            p["lambda"] = draw(kLambdaF);
            break;
        case ModelClass::FPlA:
            p["x_min"] = draw(kXmin);
            p["tau"] = draw(kTauFA);
            p["mu"] = draw(kMu);
            p["sigma"] = kSigma;
            break;
        case ModelClass::FExpA:
            p["lambda"] = draw(kLambdaFA);
            p["mu"] = draw(kMu);
            p["sigma"] = kSigma;
            break;
        case ModelClass::FUnifP:
            p["a"] = draw(kPaA);
            p["b"] = draw(kPaB);
            p["c"] = draw(kUnifC);
            p["d"] = draw(kUnifD);
            break;
        case ModelClass::AP:
            p["a"] = draw(kApA);
            p["b"] = draw(kPaB);
            p["mu"] = draw(kMu);
            p["sigma"] = kSigma;
            break;
        case ModelClass::FExpAP: {
            const double a = draw(kPaA);
            const double b = draw(kPaB);
            p["a"] = a;
            p["b"] = b;
            p["lambda"] = draw(Range{kLambdaFloor, a + b / mean_m});
            p["mu"] = draw(kMu);
            p["sigma"] = kSigma;
            break;
        }
    }
    return make_config(c, p, std::move(outdeg));
}

nlohmann::json config_params(const ModelConfig& cfg) {
    nlohmann::json p = nlohmann::json::object();
    if (const auto* pa = std::get_if<AffinePrefAttach>(&cfg.pa)) {
        p["a"] = pa->a;
        p["b"] = pa->b;
    }
    std::visit(overloaded{
                   [](ConstantFitness) {},
                   [&](const ParetoFitness& f) {
                       p["x_min"] = f.x_min;
                       p["tau"] = f.tau;
                   },
                   [&](const ExponentialFitness& f) { p["lambda"] = f.rate; },
                   [&](const UniformFitness& f) {
                       p["c"] = f.lo;
                       p["d"] = f.hi;
                   },
               },
               cfg.fitness);
    if (const auto* ln = std::get_if<LognormalAging>(&cfg.aging)) {
        p["mu"] = ln->mu;
        p["sigma"] = ln->sigma;
    }
    return p;
}

bool in_sampling_range(const ModelConfig& cfg) {
    const auto p = config_params(cfg);
    auto in = [&](const char* k, Range r) { return r.contains(p.at(k).get<double>()); };
    auto aging_ok = [&] { return in("mu", kMu) && p.at("sigma").get<double>() == kSigma; };
    switch (cfg.model_class) {
        case ModelClass::U:
            return true;
        case ModelClass::P:
            return in("a", kPaA) && in("b", kPaB);
        case ModelClass::FPl:
            return in("x_min", kXmin) && in("tau", kTauF);
        case ModelClass::FExp:
            return in("lambda", kLambdaF);
        case ModelClass::FPlA:
            return in("x_min", kXmin) && in("tau", kTauFA) && aging_ok();
        case ModelClass::FExpA:
            return in("lambda", kLambdaFA) && aging_ok();
        case ModelClass::FUnifP:
            return in("a", kPaA) && in("b", kPaB) && in("c", kUnifC) && in("d", kUnifD);
        case ModelClass::AP:
            return in("a", kApA) && in("b", kPaB) && aging_ok();
        case ModelClass::FExpAP: {
            const double a = p.at("a").get<double>(), b = p.at("b").get<double>();
            return in("a", kPaA) && in("b", kPaB) && in("lambda", Range{kLambdaFloor, a + b / cfg.outdeg->mean()}) &&
                   aging_ok();
        }
    }
    return false;
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
    return nlohmann::json{{"class", std::string(class_name(cfg.model_class))},
                          {"class_code", class_code(cfg.model_class)},
                          {"params", config_params(cfg)},
                          {"outdeg_pmf", cfg.outdeg_source}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    auto name = j.at("class").get<std::string>();
    auto cls = class_from_name(name);
    if (!cls) throw std::invalid_argument("unknown model class '" + name + "'");
    std::shared_ptr<const OutDegreePmf> pmf;
    std::string source = j.value("outdeg_pmf", std::string("default"));
    if (source == "default")
        pmf = OutDegreePmf::default_pmf();
    else
        pmf = std::make_shared<const OutDegreePmf>(OutDegreePmf::load_csv(source));
    auto cfg = make_config(*cls, j.value("params", nlohmann::json::object()), std::move(pmf));
    cfg.outdeg_source = source;
    return cfg;
}

// ---------------------------------------------------------------------------

SupercriticalityReport check_supercritical(const ModelConfig& cfg) {
    double value = 0.0;
    std::string formula;
    const auto params = config_params(cfg);
    auto get = [&](const char* k) { return params.at(k).get<double>(); };
    switch (cfg.model_class) {
        case ModelClass::U:
            value = kInf;
            formula = "U:unit-rate";
            break;
        case ModelClass::P:
            value = get("b") > 0.0 ? kInf : 0.0;
            formula = "P:b>0";
            break;
        case ModelClass::FPl:
        case ModelClass::FExp:
            value = kInf;
            formula = "F:constant-fitness-rate";
            break;
        case ModelClass::FPlA: {
            const double tau = get("tau");
            if (!(tau > 2.0)) throw std::domain_error("F_plA: tau must exceed 2 (mean fitness diverges)");
            value = (tau - 1.0) * get("x_min") / (tau - 2.0);
            formula = "FA:E[eta]=(tau-1)x_min/(tau-2)";
            break;
        }
        case ModelClass::FExpA:
            value = 1.0 / get("lambda");
            formula = "FA:E[eta]=1/lambda";
            break;
        case ModelClass::FUnifP:
            value = (get("b") > 0.0 && get("d") > 0.0) ? kInf : 0.0;
            formula = "FP:b>0,P(eta>0)>0";
            break;
        case ModelClass::AP: {
            const double a = get("a"), b = get("b");
            value = b / a * std::expm1(a);
            formula = "AP:(b/a)(e^a-1)";
            break;
        }
        case ModelClass::FExpAP: {
            const double a = get("a"), b = get("b"), lambda = get("lambda");
            value = lambda <= a ? kInf : b / (lambda - a);
            formula = "FAP:lambda<=a?inf:b/(lambda-a)";
            break;
        }
    }
    return SupercriticalityReport{value, value > 1.0, value / cfg.outdeg->mean(), formula};
}

}  // namespace ctbpnet
