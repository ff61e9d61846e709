#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "reflkit/operators.hpp"
#include "reflkit/procedural.hpp"
#include "reflkit/raster_io.hpp"
#include "reflkit/render.hpp"

namespace reflkit {

namespace detail {

inline void check_keys(const nlohmann::json &j, std::initializer_list<const char *> allowed,
                       const std::string &where) {
    require(j.is_object(), where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char *k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        require(known, where + ": unknown key '" + it.key() + "'");
    }
}

inline double num_field(const nlohmann::json &j, const char *key, const std::string &where) {
    require(j.contains(key), where + ": missing '" + std::string(key) + "'");
    require(j[key].is_number(), where + ": '" + std::string(key) + "' must be a number");
    return j[key].get<double>();
}

inline double num_or(const nlohmann::json &j, const char *key, double dflt,
                     const std::string &where) {
    if (!j.contains(key))
        return dflt;
    require(j[key].is_number(), where + ": '" + std::string(key) + "' must be a number");
    return j[key].get<double>();
}

inline int int_or(const nlohmann::json &j, const char *key, int dflt, const std::string &where) {
    if (!j.contains(key))
        return dflt;
    require(j[key].is_number_integer(), where + ": '" + std::string(key) + "' must be an integer");
    return j[key].get<int>();
}

inline bool bool_or(const nlohmann::json &j, const char *key, bool dflt,
                    const std::string &where) {
    if (!j.contains(key))
        return dflt;
    require(j[key].is_boolean(), where + ": '" + std::string(key) + "' must be a boolean");
    return j[key].get<bool>();
}

inline std::string str_field(const nlohmann::json &j, const char *key, const std::string &where) {
    require(j.contains(key), where + ": missing '" + std::string(key) + "'");
    require(j[key].is_string(), where + ": '" + std::string(key) + "' must be a string");
    return j[key].get<std::string>();
}

inline std::string str_or(const nlohmann::json &j, const char *key, const std::string &dflt,
                          const std::string &where) {
    if (!j.contains(key))
        return dflt;
    require(j[key].is_string(), where + ": '" + std::string(key) + "' must be a string");
    return j[key].get<std::string>();
}

inline Vec3f vec3_field(const nlohmann::json &j, const std::string &where) {
    require(j.is_array() && j.size() == 3, where + ": expected [x, y, z]");
    for (const auto &v : j)
        require(v.is_number(), where + ": expected numeric components");
    return Vec3f(j[0].get<float>(), j[1].get<float>(), j[2].get<float>());
}

inline std::string resolve_path(const std::string &base_dir, const std::string &path) {
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty())
        return path;
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

} // namespace detail

// Builds a lighting rig from its JSON description. The environment comes from
// a raster file or one of the procedural generators; file paths resolve
// against base_dir.
inline LightingRig load_rig(const nlohmann::json &j, const std::string &base_dir,
                            const std::string &where = "rig") {
    using namespace detail;
    check_keys(j, {"env_path", "env_scale", "env_uniform", "env_gradient", "lights",
                   "jitter_sigma", "seed"},
               where);
    LightingRig rig;
    int env_sources = int(j.contains("env_path")) + int(j.contains("env_uniform")) +
                      int(j.contains("env_gradient"));
    require(env_sources <= 1, where + ": give at most one environment source");
    if (j.contains("env_path")) {
        std::string path = resolve_path(base_dir, str_field(j, "env_path", where));
        rig.environment = load_raster(path, MapKind::Texture);
        if (rig.environment.colorspace == Colorspace::Srgb)
            rig.environment = to_linear(rig.environment);
    } else if (j.contains("env_uniform")) {
        rig.environment = make_uniform_env(float(num_field(j, "env_uniform", where)));
    } else if (j.contains("env_gradient")) {
        require(j["env_gradient"].is_number_integer(),
                where + ": 'env_gradient' must be an integer variant");
        rig.environment = make_gradient_env(64, 32, 1.0f,
                                            uint64_t(j["env_gradient"].get<int64_t>()));
    }
    rig.env_scale = float(num_or(j, "env_scale", 1.0, where));
    rig.jitter_sigma = float(num_or(j, "jitter_sigma", 0.0, where));
    rig.seed = uint64_t(int_or(j, "seed", 0, where));
    if (j.contains("lights")) {
        require(j["lights"].is_array(), where + ": 'lights' must be an array");
        for (size_t i = 0; i < j["lights"].size(); ++i) {
            const auto &lj = j["lights"][i];
            std::string lw = where + ".lights[" + std::to_string(i) + "]";
            check_keys(lj, {"position", "intensity"}, lw);
            PointLight light;
            light.position = vec3_field(lj["position"], lw + ".position");
            light.intensity = vec3_field(lj["intensity"], lw + ".intensity");
            require(light.intensity.x >= 0.0f && light.intensity.y >= 0.0f &&
                        light.intensity.z >= 0.0f,
                    lw + ": intensity must be non-negative");
            rig.lights.push_back(light);
        }
    }
    return rig;
}

inline Camera load_camera(const nlohmann::json &j, const std::string &where = "camera") {
    using namespace detail;
    check_keys(j, {"position", "look_at", "up", "vfov_deg", "width", "height"}, where);
    Camera cam;
    if (j.contains("position"))
        cam.position = vec3_field(j["position"], where + ".position");
    if (j.contains("look_at"))
        cam.look_at = vec3_field(j["look_at"], where + ".look_at");
    if (j.contains("up"))
        cam.up = vec3_field(j["up"], where + ".up");
    cam.vfov_deg = float(num_or(j, "vfov_deg", cam.vfov_deg, where));
    cam.width = int_or(j, "width", cam.width, where);
    cam.height = int_or(j, "height", cam.height, where);
    require(cam.width > 0 && cam.height > 0, where + ": image size must be positive");
    return cam;
}

struct OperatorBackend {
    std::string backend = "reference";
    std::string command;
    int timeout_ms = 60000;
    bool tiled = true; // zeta only: false sends the whole image in one request
};

struct PipelineConfig {
    std::string mesh_path;
    std::string texture_path;
    std::string output_dir;
    uint64_t seed = 0;
    std::string profile = "desk";
    bool any_size = false;
    int texture_width = 144, texture_height = 96;
    int patch = 384, stride = 192, blend_margin = -1;
    float emboss_scale = 0.01f;
    int subdivision = 1;
    float delight_epsilon = 0.02f;
    float nz_min = 0.1f;
    float ggx_alpha = 0.35f;
    int env_samples = 64;
    LightingRig rig;
    std::vector<LightingRig> render_rigs;
    Camera camera;
    std::map<std::string, OperatorBackend> backends;
    PsiSettings psi;
    RhoSettings rho;
    SigmaSettings sigma;
    std::string truth_albedo;
};

inline void apply_profile(PipelineConfig &cfg, const std::string &profile) {
    if (profile == "desk") {
        cfg.texture_width = 144;
        cfg.texture_height = 96;
        cfg.patch = 384;
        cfg.stride = 192;
    } else if (profile == "full") {
        cfg.texture_width = 576;
        cfg.texture_height = 384;
        cfg.patch = 1536;
        cfg.stride = 768;
    } else {
        fail("config: unknown profile '" + profile + "'");
    }
    cfg.profile = profile;
}

inline PipelineConfig parse_pipeline_config(const nlohmann::json &j, const std::string &base_dir,
                                            const std::string &profile_override = "") {
    using namespace detail;
    const std::string where = "config";
    check_keys(j, {"seed", "mesh", "texture", "output_dir", "profile", "any_size", "patch",
                   "stride", "blend_margin", "emboss_scale", "subdivision", "delight_epsilon",
                   "nz_min", "ggx_alpha", "env_samples", "rig", "render_rigs", "camera",
                   "operators", "constants", "truth_albedo"},
               where);
    PipelineConfig cfg;
    require(j.contains("seed"), "config: 'seed' is mandatory");
    require(j["seed"].is_number_integer(), "config: 'seed' must be an integer");
    cfg.seed = j["seed"].get<uint64_t>();

    apply_profile(cfg, profile_override.empty() ? str_or(j, "profile", "desk", where)
                                                : profile_override);

    cfg.mesh_path = resolve_path(base_dir, str_field(j, "mesh", where));
    cfg.texture_path = resolve_path(base_dir, str_field(j, "texture", where));
    cfg.output_dir = resolve_path(base_dir, str_field(j, "output_dir", where));
    require(std::filesystem::exists(cfg.mesh_path), "config: mesh not found: " + cfg.mesh_path);
    require(std::filesystem::exists(cfg.texture_path),
            "config: texture not found: " + cfg.texture_path);

    cfg.any_size = bool_or(j, "any_size", false, where);
    cfg.patch = int_or(j, "patch", cfg.patch, where);
    cfg.stride = int_or(j, "stride", cfg.stride, where);
    cfg.blend_margin = int_or(j, "blend_margin", -1, where);
    cfg.emboss_scale = float(num_or(j, "emboss_scale", cfg.emboss_scale, where));
    cfg.subdivision = int_or(j, "subdivision", cfg.subdivision, where);
    cfg.delight_epsilon = float(num_or(j, "delight_epsilon", cfg.delight_epsilon, where));
    cfg.nz_min = float(num_or(j, "nz_min", cfg.nz_min, where));
    cfg.ggx_alpha = float(num_or(j, "ggx_alpha", cfg.ggx_alpha, where));
    cfg.env_samples = int_or(j, "env_samples", cfg.env_samples, where);
    require(cfg.patch >= 1 && cfg.stride >= 1, "config: patch and stride must be positive");
    require(cfg.subdivision >= 0 && cfg.subdivision <= 4,
            "config: subdivision must be in [0, 4]");

    require(j.contains("rig"), "config: 'rig' is mandatory");
    cfg.rig = load_rig(j["rig"], base_dir, "config.rig");
    if (j.contains("render_rigs")) {
        require(j["render_rigs"].is_array(), "config: 'render_rigs' must be an array");
        for (size_t i = 0; i < j["render_rigs"].size(); ++i)
            cfg.render_rigs.push_back(load_rig(j["render_rigs"][i], base_dir,
                                               "config.render_rigs[" + std::to_string(i) + "]"));
    }
    if (cfg.render_rigs.empty())
        cfg.render_rigs.push_back(cfg.rig);

    cfg.camera.position = Vec3f(0.0f, 0.0f, 1.0f);
    cfg.camera.width = 256;
    cfg.camera.height = 192;
    if (j.contains("camera"))
        cfg.camera = load_camera(j["camera"], "config.camera");

    for (const char *name : {"zeta", "delta", "psi", "rho", "sigma"})
        cfg.backends[name] = OperatorBackend{};
    if (j.contains("operators")) {
        check_keys(j["operators"], {"zeta", "delta", "psi", "rho", "sigma"}, "config.operators");
        for (auto it = j["operators"].begin(); it != j["operators"].end(); ++it) {
            std::string ow = "config.operators." + it.key();
            check_keys(it.value(), {"backend", "command", "timeout_ms", "tiled"}, ow);
            OperatorBackend b;
            b.backend = str_or(it.value(), "backend", "reference", ow);
            require(b.backend == "reference" || b.backend == "external",
                    ow + ": backend must be 'reference' or 'external'");
            b.command = str_or(it.value(), "command", "", ow);
            b.timeout_ms = int_or(it.value(), "timeout_ms", 60000, ow);
            b.tiled = bool_or(it.value(), "tiled", true, ow);
            if (b.backend == "external")
                require(!b.command.empty(), ow + ": external backend needs 'command'");
            cfg.backends[it.key()] = b;
        }
    }

    if (j.contains("constants")) {
        const auto &c = j["constants"];
        check_keys(c, {"psi", "rho", "sigma"}, "config.constants");
        if (c.contains("psi")) {
            check_keys(c["psi"], {"s0", "kappa", "sigma_b", "h_norm"}, "config.constants.psi");
            cfg.psi.s0 = float(num_or(c["psi"], "s0", cfg.psi.s0, where));
            cfg.psi.kappa = float(num_or(c["psi"], "kappa", cfg.psi.kappa, where));
            cfg.psi.sigma_b = float(num_or(c["psi"], "sigma_b", cfg.psi.sigma_b, where));
            cfg.psi.h_norm = float(num_or(c["psi"], "h_norm", cfg.psi.h_norm, where));
        }
        if (c.contains("rho")) {
            check_keys(c["rho"], {"beta", "sigma_fine", "sigma_coarse"}, "config.constants.rho");
            cfg.rho.beta = float(num_or(c["rho"], "beta", cfg.rho.beta, where));
            cfg.rho.sigma_fine = float(num_or(c["rho"], "sigma_fine", cfg.rho.sigma_fine, where));
            cfg.rho.sigma_coarse =
                float(num_or(c["rho"], "sigma_coarse", cfg.rho.sigma_coarse, where));
        }
        if (c.contains("sigma")) {
            check_keys(c["sigma"], {"gamma", "sigma_d"}, "config.constants.sigma");
            cfg.sigma.gamma = float(num_or(c["sigma"], "gamma", cfg.sigma.gamma, where));
            cfg.sigma.sigma_d = float(num_or(c["sigma"], "sigma_d", cfg.sigma.sigma_d, where));
        }
    }

    if (j.contains("truth_albedo"))
        cfg.truth_albedo = resolve_path(base_dir, str_field(j, "truth_albedo", where));
    return cfg;
}

inline nlohmann::json load_json_file(const std::string &path) {
    std::ifstream in(path);
    require(bool(in), "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception &e) {
        fail(path + ": " + e.what());
    }
    return j;
}

inline PipelineConfig load_pipeline_config(const std::string &path,
                                           const std::string &profile_override = "") {
    nlohmann::json j = load_json_file(path);
    std::string base_dir = std::filesystem::path(path).parent_path().string();
    return parse_pipeline_config(j, base_dir, profile_override);
}

} // namespace reflkit
