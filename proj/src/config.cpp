#include "fraclab/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "fraclab/error.hpp"

namespace fraclab {

namespace {

using nlohmann::json;

template <typename T>
void pull(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    pull(j, "generator", cfg.generator);
    pull(j, "l1", cfg.l1);
    pull(j, "l2", cfg.l2);
    pull(j, "env_rule", cfg.env_rule);
    pull(j, "env_constant", cfg.env_constant);
    pull(j, "env_pattern", cfg.env_pattern);
    pull(j, "env_p", cfg.env_p);
    pull(j, "env_c0", cfg.env_c0);
    pull(j, "env_length", cfg.env_length);
    pull(j, "outward", cfg.outward);
    if (j.contains("square_tags")) {
        const auto tags = j.at("square_tags").get<std::vector<std::string>>();
        if (tags.size() != 4)
            throw ConfigError("square_tags needs 4 entries (bottom,right,top,left)");
        std::copy(tags.begin(), tags.end(), cfg.square_tags.begin());
    }
    pull(j, "c", cfg.c);
    pull(j, "nu", cfg.nu);
    pull(j, "alpha", cfg.alpha);
    pull(j, "robin_a", cfg.robin_a);
    pull(j, "sigma_scaled", cfg.sigma_scaled);
    pull(j, "h", cfg.h);
    pull(j, "dt", cfg.dt);
    pull(j, "T", cfg.T);
    pull(j, "background_n", cfg.background_n);
    pull(j, "study", cfg.study);
    pull(j, "level", cfg.level);
    pull(j, "level_min", cfg.level_min);
    pull(j, "level_max", cfg.level_max);
    pull(j, "g", cfg.g);
    pull(j, "amplitude", cfg.amplitude);
    pull(j, "eigen_count", cfg.eigen_count);
    pull(j, "trials", cfg.trials);
    pull(j, "picard_tol", cfg.picard_tol);
    pull(j, "picard_max_iters", cfg.picard_max_iters);
    pull(j, "seed", cfg.seed);
    pull(j, "out_dir", cfg.out_dir);
    pull(j, "threads", cfg.threads);
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json_text(ss.str());
}

std::string RunConfig::to_json_text() const {
    json j;
    j["generator"] = generator;
    j["l1"] = l1;
    j["l2"] = l2;
    j["env_rule"] = env_rule;
    j["env_constant"] = env_constant;
    j["env_pattern"] = env_pattern;
    j["env_p"] = env_p;
    j["env_c0"] = env_c0;
    j["env_length"] = env_length;
    j["outward"] = outward;
    j["square_tags"] = std::vector<std::string>(square_tags.begin(), square_tags.end());
    j["c"] = c;
    j["nu"] = nu;
    j["alpha"] = alpha;
    j["robin_a"] = robin_a;
    j["sigma_scaled"] = sigma_scaled;
    j["h"] = h;
    j["dt"] = dt;
    j["T"] = T;
    j["background_n"] = background_n;
    j["study"] = study;
    j["level"] = level;
    j["level_min"] = level_min;
    j["level_max"] = level_max;
    j["g"] = g;
    j["amplitude"] = amplitude;
    j["eigen_count"] = eigen_count;
    j["trials"] = trials;
    j["picard_tol"] = picard_tol;
    j["picard_max_iters"] = picard_max_iters;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["threads"] = threads;
    return j.dump(2) + "\n";
}

void RunConfig::validate() const {
    auto positive = [](double v, const char* key) {
        if (!(v > 0.0)) throw ConfigError(std::string("config key '") + key +
                                          "' must be positive, got " + std::to_string(v));
    };
    if (generator != "koch" && generator != "minkowski" && generator != "koch-l" &&
        generator != "koch-mixture")
        throw ConfigError("config key 'generator' must be koch | minkowski | koch-l | "
                          "koch-mixture, got '" + generator + "'");
    if (env_rule != "constant" && env_rule != "periodic" && env_rule != "frequency")
        throw ConfigError("config key 'env_rule' must be constant | periodic | frequency");
    positive(c, "c");
    positive(nu, "nu");
    if (alpha < 0.0) throw ConfigError("config key 'alpha' must be >= 0");
    if (robin_a < 0.0) throw ConfigError("config key 'robin_a' must be >= 0");
    positive(h, "h");
    positive(dt, "dt");
    positive(T, "T");
    if (std::abs(T / dt - std::llround(T / dt)) > 1e-9)
        throw ConfigError("config key 'T' must be an integer multiple of 'dt'");
    if (background_n < 2) throw ConfigError("config key 'background_n' must be >= 2");
    if (level < 0) throw ConfigError("config key 'level' must be >= 0");
    if (level_min < 0 || level_max < level_min)
        throw ConfigError("config keys 'level_min'/'level_max' must satisfy 0 <= min <= max");
    if (eigen_count < 1) throw ConfigError("config key 'eigen_count' must be >= 1");
    if (trials < 1) throw ConfigError("config key 'trials' must be >= 1");
    positive(picard_tol, "picard_tol");
    if (picard_max_iters < 1) throw ConfigError("config key 'picard_max_iters' must be >= 1");
    if (threads < 1) throw ConfigError("config key 'threads' must be >= 1");
    if (study != "trace" && study != "uniform-trace" && study != "solution" &&
        study != "poincare" && study != "density" && study != "poisson")
        throw ConfigError("config key 'study' must be trace | uniform-trace | solution | "
                          "poincare | density | poisson, got '" + study + "'");
    bool has_dirichlet = false;
    for (const auto& t : square_tags) has_dirichlet |= (boundary_tag_from_string(t) ==
                                                        BoundaryTag::Dirichlet);
    if (!has_dirichlet)
        throw ConfigError("config key 'square_tags' must include a dirichlet edge");
}

IfsSystem RunConfig::make_ifs() const {
    if (generator == "koch") return IfsSystem::koch();
    if (generator == "minkowski") return IfsSystem::minkowski();
    if (generator == "koch-l") return IfsSystem::koch_generator(l1);
    EnvironmentSpec env;
    if (env_rule == "constant") {
        env.rule = EnvironmentRule::Constant;
        env.constant_label = env_constant;
    } else if (env_rule == "periodic") {
        env.rule = EnvironmentRule::Periodic;
        env.pattern = env_pattern;
    } else {
        env.rule = EnvironmentRule::FrequencyTarget;
        env.target_p = env_p;
        env.c0 = env_c0;
    }
    return IfsSystem::koch_mixture(l1, l2, env, env_length);
}

BoundarySpec RunConfig::make_boundary_spec() const {
    BoundarySpec spec;
    for (int i = 0; i < 4; ++i) {
        const BoundaryTag tag = boundary_tag_from_string(square_tags[i]);
        spec.pieces.push_back({tag, i == 0 && tag == BoundaryTag::Robin, outward});
    }
    return spec;
}

TestField RunConfig::make_test_field() const {
    constexpr double kPi = std::numbers::pi;
    if (g == "one")
        return {"one", [](double, double) { return 1.0; },
                [](double, double) { return 0.0; }, [](double, double) { return 0.0; }};
    if (g == "x")
        return {"x", [](double x, double) { return x; },
                [](double, double) { return 1.0; }, [](double, double) { return 0.0; }};
    if (g == "y")
        return {"y", [](double, double y) { return y; },
                [](double, double) { return 0.0; }, [](double, double) { return 1.0; }};
    if (g == "x2")
        return {"x2", [](double x, double) { return x * x; },
                [](double x, double) { return 2 * x; }, [](double, double) { return 0.0; }};
    if (g == "xy")
        return {"xy", [](double x, double y) { return x * y; },
                [](double, double y) { return y; }, [](double x, double) { return x; }};
    if (g == "sin")
        return {"sin", [=](double x, double y) { return std::sin(kPi * x) * (y + 0.5); },
                [=](double x, double y) { return kPi * std::cos(kPi * x) * (y + 0.5); },
                [=](double x, double) { return std::sin(kPi * x); }};
    throw ConfigError("config key 'g' names an unknown test field '" + g +
                      "' (one | x | y | x2 | xy | sin)");
}

WesterveltParams RunConfig::make_physics() const {
    return WesterveltParams{{c, nu, T, dt}, alpha};
}

StudyConfig RunConfig::make_study() const {
    StudyConfig s;
    s.ifs = make_ifs();
    s.level_min = level_min;
    s.level_max = level_max;
    s.h = h;
    s.physics = make_physics();
    s.robin_a = robin_a;
    s.outward = outward;
    s.sigma_scaled = sigma_scaled;
    s.background_n = background_n;
    s.data_amplitude = amplitude;
    s.seed = seed;
    s.picard_tol = picard_tol;
    s.picard_max_iters = picard_max_iters;
    return s;
}

}  // namespace fraclab
