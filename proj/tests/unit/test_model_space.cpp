#include <cmath>
#include <filesystem>
#include <limits>
#include <map>

#include "ctbpnet/model_space.hpp"
#include "ctbpnet/normal.hpp"
#include "doctest.h"

using namespace ctbpnet;
using nlohmann::json;

namespace {

// Composite Simpson on a log-spaced grid; the lognormal density is smooth in ln t.
double lognormal_mass(const AgingFunction& h, double lo, double hi, int n = 20000) {
    const double a = std::log(lo), b = std::log(hi), dx = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = a + i * dx, t = std::exp(x);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * h.density(t) * t;
    }
    return s * dx / 3.0;
}

}  // namespace

TEST_CASE("class codes and names form a bijection") {
    const char* names[] = {"U", "P", "F_pl", "F_exp", "F_plA", "F_expA", "F_unifP", "AP", "F_expAP"};
    for (int k = 0; k < kNumClasses; ++k) {
        const auto c = class_from_code(k);
        CHECK(class_code(c) == k);
        CHECK(class_name(c) == names[k]);
        CHECK(class_from_name(names[k]) == c);
    }
    CHECK_THROWS_AS(class_from_code(9), std::invalid_argument);
    CHECK_FALSE(class_from_name("X").has_value());
}

TEST_CASE("fitness quantiles") {
    CHECK(fitness_quantile(ParetoFitness{1.0, 3.0}, 0.75) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(fitness_quantile(ExponentialFitness{2.0}, 1.0 - std::exp(-1.0)) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(fitness_quantile(UniformFitness{0.0, 1.0}, 0.3) == doctest::Approx(0.3));
    CHECK(fitness_quantile(ConstantFitness{}, 0.3) == 1.0);
    CHECK_THROWS_AS(fitness_quantile(ConstantFitness{}, 0.0), std::domain_error);
    CHECK_THROWS_AS(fitness_quantile(ExponentialFitness{1.0}, 1.0), std::domain_error);

    const FitnessSpec specs[] = {ConstantFitness{}, ParetoFitness{0.7, 2.4}, ExponentialFitness{0.3}, UniformFitness{0.5, 3.0}};
    for (const auto& s : specs) {
        double prev = -1.0;
        for (double u = 0.001; u < 1.0; u += 0.001) {
            const double q = fitness_quantile(s, u);
            CHECK(q >= prev);
            prev = q;
        }
    }
    CHECK(fitness_mean(ParetoFitness{0.8, 2.5}) == doctest::Approx(2.4));
    CHECK(fitness_mean(ExponentialFitness{4.0}) == doctest::Approx(0.25));
}

TEST_CASE("aging functions") {
    const AgingFunction ln05(LognormalAging{0.5, 1.0});
    CHECK(ln05.cumulative(std::exp(0.5)) == doctest::Approx(0.5).epsilon(1e-14));

    const AgingFunction ln0(LognormalAging{0.0, 1.0});
    CHECK(lognormal_mass(ln0, 1e-12, 1e12) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ln0.total_mass() == 1.0);
    CHECK(std::isinf(ln0.inverse_cumulative(1.0)));

    // H_inv(H(2)) with H(2) taken from quadrature rather than the closed form.
    const AgingFunction ln1(LognormalAging{1.0, 1.0});
    const double mass = lognormal_mass(ln1, 1e-12, 2.0, 200000);
    CHECK(std::abs(ln1.inverse_cumulative(mass) - 2.0) < 1e-10);

    for (double t = 0.01; t <= 100.0; t *= 1.1) CHECK(std::abs(ln1.inverse_cumulative(ln1.cumulative(t)) - t) < 1e-9 * t);

    const AgingFunction none(NoAging{});
    CHECK(none.density(3.0) == 1.0);
    CHECK(none.cumulative(3.0) == 3.0);
    CHECK(none.inverse_cumulative(0.7) == 0.7);
    CHECK(std::isinf(none.total_mass()));
}

TEST_CASE("preferential attachment values") {
    CHECK(pa_value(AffinePrefAttach{2.0, 1.0}, 0) == 1.0);
    CHECK(pa_value(AffinePrefAttach{2.0, 1.0}, 3) == 7.0);
    CHECK(pa_value(NoPrefAttach{}, 100) == 1.0);
    const AffinePrefAttach f{1.37, 0.21};
    for (std::uint64_t k = 0; k < 1000; ++k) CHECK(pa_value(f, k + 1) - pa_value(f, k) == doctest::Approx(f.a).epsilon(1e-12));
}

TEST_CASE("out-degree pmf sampling") {
    const OutDegreePmf two({{1, 0.5}, {2, 0.5}});
    CHECK(two.sample(0.25) == 1);
    CHECK(two.sample(0.75) == 2);
    CHECK(two.mean() == 1.5);
    CHECK_THROWS_AS(OutDegreePmf({{1, 0.5}, {1, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(OutDegreePmf({{0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(OutDegreePmf({{1, 0.5}, {2, 0.4}}), std::invalid_argument);

    // Fine u-grid reproduces the pmf within grid resolution.
    const OutDegreePmf three({{1, 0.2}, {4, 0.3}, {9, 0.5}});
    const int n = 100000;
    std::map<int, int> hits;
    for (int i = 0; i < n; ++i) ++hits[three.sample((i + 0.5) / n)];
    CHECK(std::abs(hits[1] / double(n) - 0.2) <= 1.0 / n);
    CHECK(std::abs(hits[4] / double(n) - 0.3) <= 1.0 / n);
    CHECK(std::abs(hits[9] / double(n) - 0.5) <= 1.0 / n);
}

TEST_CASE("default pmf matches the target moments") {
    const auto pmf = OutDegreePmf::default_pmf();
    CHECK(pmf->mean() == doctest::Approx(10.29).epsilon(1e-6));
    CHECK(pmf->variance() == doctest::Approx(181.189).epsilon(1e-6));
    CHECK(pmf->entries().front().m == 1);
    CHECK(pmf->entries().back().m == 800);
    double total = 0.0;
    for (auto e : pmf->entries()) total += e.p;
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(pmf->sample(0.5) == 6);  // median

    Rng rng(11);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += pmf->sample(rng.uniform_open());
    CHECK(std::abs(sum / n - pmf->mean()) < 0.01 * pmf->mean());
}

TEST_CASE("shipped pmf file equals the built-in default") {
    const auto shipped = OutDegreePmf::load_csv(std::filesystem::path(CTBPNET_DATA_DIR) / "outdeg_default.csv");
    const auto& a = shipped.entries();
    const auto& b = OutDegreePmf::default_pmf()->entries();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].m == b[i].m);
        CHECK(a[i].p == b[i].p);
    }
}

TEST_CASE("pmf csv round-trip") {
    const auto dir = std::filesystem::path(CTBPNET_TEST_TMP) / "pmf";
    std::filesystem::create_directories(dir);
    const OutDegreePmf p({{1, 0.25}, {3, 0.25}, {7, 0.5}});
    p.save_csv(dir / "p.csv");
    const auto q = OutDegreePmf::load_csv(dir / "p.csv");
    REQUIRE(q.entries().size() == 3);
    CHECK(q.entries()[2].m == 7);
    CHECK(q.mean() == p.mean());
}

TEST_CASE("sample_config respects ranges and determinism") {
    Rng r1(5), r2(5);
    const auto a = sample_config(ModelClass::P, r1), b = sample_config(ModelClass::P, r2);
    CHECK(config_params(a) == config_params(b));

    Rng r(6);
    CHECK(config_params(sample_config(ModelClass::U, r)).empty());

    for (int i = 0; i < 200; ++i) {
        const auto c = sample_config(ModelClass::FExpAP, r);
        const auto p = config_params(c);
        const double bound = p["a"].get<double>() + p["b"].get<double>() / c.outdeg->mean();
        CHECK(p["lambda"].get<double>() > 0.1);
        CHECK(p["lambda"].get<double>() < bound);
        CHECK(p["sigma"].get<double>() == 1.0);
    }
}

TEST_CASE("every sampled configuration is supercritical") {
    Rng rng(7);
    for (auto c : kAllClasses)
        for (int i = 0; i < 10000; ++i) {
            const auto cfg = sample_config(c, rng);
            REQUIRE(in_sampling_range(cfg));
            REQUIRE(check_supercritical(cfg).is_supercritical);
        }
}

TEST_CASE("supercriticality formulas") {
    auto pmf = OutDegreePmf::default_pmf();
    auto r = check_supercritical(make_config(ModelClass::FPlA, json{{"x_min", 0.8}, {"tau", 2.5}, {"mu", 1.0}, {"sigma", 1.0}}));
    CHECK(r.condition_value == doctest::Approx(2.4));
    CHECK(r.is_supercritical);
    CHECK(r.collapsed_conservative_value == doctest::Approx(2.4 / pmf->mean()));

    r = check_supercritical(make_config(ModelClass::AP, json{{"a", 3.3}, {"b", 1.0}, {"mu", 1.0}, {"sigma", 1.0}}));
    CHECK(r.condition_value == doctest::Approx((std::exp(3.3) - 1.0) / 3.3).epsilon(1e-12));
    CHECK(r.condition_value == doctest::Approx(7.913).epsilon(1e-3));

    r = check_supercritical(make_config(ModelClass::FExpA, json{{"lambda", 2.0}, {"mu", 1.0}, {"sigma", 1.0}}));
    CHECK(r.condition_value == 0.5);
    CHECK_FALSE(r.is_supercritical);

    r = check_supercritical(make_config(ModelClass::FExpAP, json{{"a", 2.0}, {"b", 1.0}, {"lambda", 2.0}, {"mu", 1.0}, {"sigma", 1.0}}));
    CHECK(std::isinf(r.condition_value));
    r = check_supercritical(make_config(ModelClass::FExpAP, json{{"a", 2.0}, {"b", 1.0}, {"lambda", 4.0}, {"mu", 1.0}, {"sigma", 1.0}}));
    CHECK(r.condition_value == 0.5);

    CHECK(std::isinf(check_supercritical(make_config(ModelClass::U, json::object())).condition_value));
    CHECK_THROWS(make_config(ModelClass::FPlA, json{{"x_min", 0.8}, {"tau", 2.0}, {"mu", 1.0}, {"sigma", 1.0}}));
    CHECK_THROWS_AS(make_config(ModelClass::P, json{{"a", 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_config(ModelClass::P, json{{"a", 1.0}, {"b", 1.0}, {"c", 1.0}}), std::invalid_argument);
}

TEST_CASE("config json round-trip") {
    Rng rng(8);
    for (auto c : kAllClasses) {
        const auto cfg = sample_config(c, rng);
        const auto back = config_from_json(config_to_json(cfg));
        CHECK(back.model_class == c);
        CHECK(config_params(back) == config_params(cfg));
    }
}
