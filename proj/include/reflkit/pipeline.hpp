#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "reflkit/external_op.hpp"
#include "reflkit/hash.hpp"
#include "reflkit/metrics.hpp"
#include "reflkit/operators.hpp"
#include "reflkit/pipeline_config.hpp"
#include "reflkit/poisson.hpp"
#include "reflkit/render.hpp"

namespace reflkit {

struct PipelineResult {
    std::string output_dir;
    nlohmann::json manifest;
    nlohmann::json timings;
    nlohmann::json metrics;
    RasterMap texture_sr;
    RasterMap albedo_diffuse;
    RasterMap albedo_specular;
    RasterMap normals_diffuse;
    RasterMap normals_specular;
    RasterMap displacement;
    Mesh embossed;
    std::vector<RenderResult> renders;
};

namespace detail {

inline std::unique_ptr<PatchOperator> build_operator(const std::string &stage,
                                                     const OperatorBackend &cfg,
                                                     const PipelineConfig &p) {
    if (cfg.backend == "reference") {
        if (stage == "zeta")
            return std::make_unique<LambdaOperator>(make_zeta_operator(8));
        if (stage == "psi")
            return std::make_unique<LambdaOperator>(make_psi_operator(p.psi));
        if (stage == "rho")
            return std::make_unique<LambdaOperator>(make_rho_operator(p.rho));
        if (stage == "sigma")
            return std::make_unique<LambdaOperator>(make_sigma_operator(p.sigma));
        fail("operator " + stage + ": no reference backend");
    }
    require(cfg.backend == "external", "operator " + stage + ": unknown backend " + cfg.backend);
    require(!cfg.command.empty(), "operator " + stage + ": external backend needs a command");
    if (stage == "zeta")
        return std::make_unique<ExternalOperator>(
            "zeta", cfg.command, std::vector<std::string>{"R", "G", "B"},
            std::vector<WireLayer>{{MapKind::BakedTexture, Colorspace::Srgb}}, 8,
            cfg.timeout_ms);
    if (stage == "delta")
        return std::make_unique<ExternalOperator>(
            "delta", cfg.command, std::vector<std::string>{"R", "G", "B", "D"},
            std::vector<WireLayer>{{MapKind::DiffuseAlbedo, Colorspace::Srgb}}, 1,
            cfg.timeout_ms);
    if (stage == "psi")
        return std::make_unique<ExternalOperator>(
            "psi", cfg.command, std::vector<std::string>{"R", "G", "B"},
            std::vector<WireLayer>{{MapKind::SpecularAlbedo, Colorspace::Linear}}, 1,
            cfg.timeout_ms);
    if (stage == "rho")
        return std::make_unique<ExternalOperator>(
            "rho", cfg.command, std::vector<std::string>{"G", "X", "Y", "Z"},
            std::vector<WireLayer>{{MapKind::NormalsSpecular, Colorspace::SignedUnit}}, 1,
            cfg.timeout_ms);
    if (stage == "sigma")
        return std::make_unique<ExternalOperator>(
            "sigma", cfg.command, std::vector<std::string>{"G", "X", "Y", "Z"},
            std::vector<WireLayer>{{MapKind::NormalsDiffuse, Colorspace::SignedUnit}}, 1,
            cfg.timeout_ms);
    fail("operator " + stage + ": not a pipeline stage");
}

} // namespace detail

// Runs the full data path: texture super-resolution, geometry rasterization,
// de-lighting, the three map extractors (patch-tiled), displacement
// integration, embossing, and one render per rig. Every artifact lands in
// output_dir and is listed in manifest.json with its content hash; reruns
// with the same config and seed are byte-identical at any thread count.
inline PipelineResult run_pipeline(const PipelineConfig &cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);

    PipelineResult res;
    res.output_dir = cfg.output_dir;
    res.manifest = nlohmann::json::object();
    res.timings = nlohmann::json::object();
    res.metrics = nlohmann::json::object();

    std::string last_good = "(none)";
    std::string current_stage;
    auto artifact_path = [&](const std::string &name) {
        return (fs::path(cfg.output_dir) / name).string();
    };
    auto record = [&](const std::string &name, const std::string &path) {
        res.manifest[name] = {{"path", path}, {"hash", hash_file(path)}};
        last_good = path;
    };
    auto save_map_artifact = [&](const std::string &name, const RasterMap &m) {
        std::string path = artifact_path(name + ".rmap");
        save_rmap(path, m);
        record(name, path);
    };

    using Clock = std::chrono::steady_clock;
    auto stage = [&](const std::string &name, auto &&fn) {
        current_stage = name;
        auto t0 = Clock::now();
        try {
            fn();
        } catch (const std::exception &e) {
            fail("stage " + name + " failed: " + e.what() +
                 "; last good output: " + last_good);
        }
        double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        res.timings[name] = secs;
    };

    static const OperatorBackend kReference;
    auto backend = [&](const char *name) -> const OperatorBackend & {
        auto it = cfg.backends.find(name);
        return it == cfg.backends.end() ? kReference : it->second;
    };

    ShadeSettings shade;
    shade.ggx_alpha = cfg.ggx_alpha;
    shade.env_samples = cfg.env_samples;
    shade.seed = cfg.seed;

    RasterMap texture;
    Mesh mesh;

    stage("texture", [&] {
        texture = load_raster(cfg.texture_path, MapKind::Texture);
        require(texture.colorspace == Colorspace::Srgb, "input texture must be srgb");
        if (!cfg.any_size)
            require(texture.width == cfg.texture_width && texture.height == cfg.texture_height,
                    "texture is " + std::to_string(texture.width) + "x" +
                        std::to_string(texture.height) + ", profile " + cfg.profile +
                        " expects " + std::to_string(cfg.texture_width) + "x" +
                        std::to_string(cfg.texture_height));
        save_map_artifact("texture", texture);
    });

    stage("mesh", [&] {
        mesh = load_obj(cfg.mesh_path);
        res.manifest["mesh"] = {{"path", cfg.mesh_path}, {"hash", hash_file(cfg.mesh_path)}};
    });

    const int scale = 8;
    stage("zeta", [&] {
        const OperatorBackend &b = backend("zeta");
        if (b.backend == "reference") {
            res.texture_sr = sr_zeta(texture, scale, true);
        } else {
            auto op = detail::build_operator("zeta", b, cfg);
            MapStack in = single_layer_stack(texture);
            int margin = cfg.blend_margin < 0 ? -1 : cfg.blend_margin / scale;
            MapStack out = b.tiled ? apply_tiled(*op, in, cfg.patch / scale,
                                                 cfg.stride / scale, margin)
                                   : op->apply(in);
            res.texture_sr = out.layers[0];
        }
        res.texture_sr.kind = MapKind::BakedTexture;
        save_map_artifact("texture_sr", res.texture_sr);
    });

    int tw = texture.width * scale, th = texture.height * scale;
    GeometryMaps geom;
    RasterMap normals_object, normals_tangent, depth;
    std::optional<Bvh> bvh;

    stage("geometry", [&] {
        geom = rasterize_geometry(mesh, tw, th);
        bvh.emplace(mesh);
        normals_object = geom.normal_map();
        normals_tangent = object_to_tangent(normals_object, geom);
        depth = geom.depth_map();
        save_map_artifact("normals_object", normals_object);
        save_map_artifact("normals_tangent", normals_tangent);
        save_map_artifact("depth", depth);
    });

    RasterMap delight_filled;
    stage("delta", [&] {
        const OperatorBackend &b = backend("delta");
        if (b.backend == "reference") {
            IrradianceMaps irr = irradiance_components(geom, *bvh, cfg.rig, shade);
            DelightResult d = delight_delta(res.texture_sr, irr, cfg.delight_epsilon);
            res.albedo_diffuse = std::move(d.albedo);
            delight_filled = std::move(d.filled);
        } else {
            auto op = detail::build_operator("delta", b, cfg);
            MapStack in = stack_maps({res.texture_sr, depth});
            MapStack out = apply_tiled(*op, in, cfg.patch, cfg.stride, cfg.blend_margin);
            res.albedo_diffuse = out.layers[0];
            for (auto &v : res.albedo_diffuse.data)
                v = clamp01(v);
            delight_filled = make_map(tw, th, MapKind::Gray, Colorspace::Raw);
        }
        res.albedo_diffuse.mask = geom.mask;
        save_map_artifact("albedo_diffuse", res.albedo_diffuse);
        save_map_artifact("delight_filled", delight_filled);
    });

    RasterMap gray;
    stage("gray", [&] {
        gray = luma_gray(res.albedo_diffuse);
        save_map_artifact("gray", gray);
    });

    stage("psi", [&] {
        auto op = detail::build_operator("psi", backend("psi"), cfg);
        MapStack in = single_layer_stack(res.albedo_diffuse);
        MapStack out = apply_tiled(*op, in, cfg.patch, cfg.stride, cfg.blend_margin);
        res.albedo_specular = out.layers[0];
        for (auto &v : res.albedo_specular.data)
            v = clamp01(v);
        res.albedo_specular.mask = geom.mask;
        save_map_artifact("albedo_specular", res.albedo_specular);
    });

    auto renormalize = [](RasterMap &m) {
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x) {
                Vec3f n(m.at(x, y, 0), m.at(x, y, 1), m.at(x, y, 2));
                float len = length(n);
                n = len > 0.0f ? n * (1.0f / len) : Vec3f(0.0f, 0.0f, 1.0f);
                m.at(x, y, 0) = n.x;
                m.at(x, y, 1) = n.y;
                m.at(x, y, 2) = n.z;
            }
    };

    stage("rho", [&] {
        auto op = detail::build_operator("rho", backend("rho"), cfg);
        MapStack in = stack_maps({gray, normals_tangent});
        MapStack out = apply_tiled(*op, in, cfg.patch, cfg.stride, cfg.blend_margin);
        res.normals_specular = out.layers[0];
        renormalize(res.normals_specular);
        res.normals_specular.mask = geom.mask;
        save_map_artifact("normals_specular", res.normals_specular);
    });

    stage("sigma", [&] {
        auto op = detail::build_operator("sigma", backend("sigma"), cfg);
        MapStack in = stack_maps({gray, normals_object});
        MapStack out = apply_tiled(*op, in, cfg.patch, cfg.stride, cfg.blend_margin);
        RasterMap nd_object = out.layers[0];
        renormalize(nd_object);
        nd_object.mask = geom.mask;
        res.normals_diffuse = object_to_tangent(nd_object, geom);
        res.normals_diffuse.kind = MapKind::NormalsDiffuse;
        save_map_artifact("normals_diffuse", res.normals_diffuse);
    });

    stage("displacement", [&] {
        SlopeField slopes = normals_to_slopes(res.normals_specular, cfg.nz_min);
        IntegrateSettings is;
        IntegrateResult r = integrate(slopes, is);
        res.displacement = std::move(r.displacement);
        res.metrics["displacement"] = {{"rel_residual", r.rel_residual},
                                       {"iterations", r.iterations}};
        save_map_artifact("displacement", res.displacement);
    });

    stage("emboss", [&] {
        res.embossed = mesh;
        for (int i = 0; i < cfg.subdivision; ++i)
            res.embossed = subdivide_midpoint(res.embossed);
        res.embossed = emboss(res.embossed, res.displacement, cfg.emboss_scale);
        std::string path = artifact_path("mesh_embossed.obj");
        save_obj(path, res.embossed);
        record("mesh_embossed", path);
    });

    ReflectanceSet refl;
    refl.diffuse_albedo = res.albedo_diffuse;
    refl.specular_albedo = res.albedo_specular;
    refl.normals_diffuse = res.normals_diffuse;
    refl.normals_specular = res.normals_specular;

    for (size_t i = 0; i < cfg.render_rigs.size(); ++i) {
        stage("render_" + std::to_string(i), [&] {
            RenderResult r = render_view(res.embossed, refl, cfg.camera,
                                         cfg.render_rigs[i], shade);
            std::string name = "render_" + std::to_string(i);
            save_map_artifact(name, r.image);
            RasterMap srgb = to_srgb(r.image);
            for (auto &v : srgb.data)
                v = clamp01(v);
            std::string png = artifact_path(name + ".png");
            save_png(png, srgb, 16);
            record(name + "_png", png);
            res.renders.push_back(std::move(r));
        });
    }

    stage("metrics", [&] {
        if (!cfg.truth_albedo.empty()) {
            RasterMap truth = load_raster(cfg.truth_albedo, MapKind::DiffuseAlbedo);
            PsnrResult p = psnr(res.albedo_diffuse, truth);
            res.metrics["albedo_diffuse_vs_truth"] = {
                {"psnr_db", p.exact ? nlohmann::json() : nlohmann::json(p.db)},
                {"texels", p.texels},
                {"exact", p.exact}};
        }
        std::string path = artifact_path("metrics.json");
        std::ofstream out(path, std::ios::trunc);
        out << res.metrics.dump(2) << "\n";
        require(bool(out), "cannot write " + path);
        out.close();
        record("metrics", path);
    });

    std::string manifest_path = artifact_path("manifest.json");
    {
        std::ofstream out(manifest_path, std::ios::trunc);
        out << res.manifest.dump(2) << "\n";
        require(bool(out), "cannot write " + manifest_path);
    }
    std::string timings_path = artifact_path("timings.json");
    {
        std::ofstream out(timings_path, std::ios::trunc);
        out << res.timings.dump(2) << "\n";
        require(bool(out), "cannot write " + timings_path);
    }
    return res;
}

// --- dataset simulation ------------------------------------------------------

struct SimAsset {
    std::string name;
    std::string mesh_path;
    std::string albedo_path;
};

struct SimConfig {
    std::vector<SimAsset> assets;
    LightingRig rig;
    int n_variations = 1;
    uint64_t seed = 0;
    int width = 144, height = 96;
    std::string output_dir;
};

// Bakes n_variations lit textures per asset with per-variation light jitter
// and stores the ground-truth albedo next to them. dataset.json indexes the
// bundle.
inline nlohmann::json simulate_dataset(const SimConfig &cfg) {
    namespace fs = std::filesystem;
    require(!cfg.assets.empty(), "simulate: no assets");
    require(cfg.n_variations >= 1, "simulate: n_variations must be positive");
    fs::create_directories(cfg.output_dir);

    nlohmann::json index;
    index["seed"] = cfg.seed;
    index["n_variations"] = cfg.n_variations;
    index["assets"] = nlohmann::json::array();

    std::vector<std::array<int, 3>> reference_tris;
    for (const auto &asset : cfg.assets) {
        Mesh mesh = load_obj(asset.mesh_path);
        if (reference_tris.empty())
            reference_tris = mesh.triangles;
        else
            require(mesh.triangles == reference_tris,
                    "simulate: asset " + asset.name + " does not share the template topology");

        RasterMap albedo = load_raster(asset.albedo_path, MapKind::DiffuseAlbedo);
        require(albedo.width == cfg.width && albedo.height == cfg.height,
                "simulate: asset " + asset.name + " albedo resolution mismatch");

        fs::path dir = fs::path(cfg.output_dir) / asset.name;
        fs::create_directories(dir);
        GeometryMaps geom = rasterize_geometry(mesh, cfg.width, cfg.height);
        Bvh bvh(mesh);

        nlohmann::json entry;
        entry["name"] = asset.name;
        entry["mesh"] = asset.mesh_path;
        std::string truth_path = (dir / "albedo.rmap").string();
        save_rmap(truth_path, albedo);
        entry["albedo"] = truth_path;
        entry["albedo_hash"] = hash_file(truth_path);
        entry["bakes"] = nlohmann::json::array();

        for (int v = 0; v < cfg.n_variations; ++v) {
            LightingRig rig = cfg.rig;
            rig.seed = hash_combine(cfg.seed, uint64_t(v));
            ShadeSettings shade;
            shade.seed = hash_combine(cfg.seed, uint64_t(v));
            IrradianceMaps irr = irradiance_components(geom, bvh, rig, shade);
            RasterMap baked = bake_texture(albedo, irr);
            std::string path = (dir / ("bake_" + std::to_string(v) + ".rmap")).string();
            save_rmap(path, baked);
            nlohmann::json b;
            b["path"] = path;
            b["hash"] = hash_file(path);
            b["rig_seed"] = rig.seed;
            entry["bakes"].push_back(b);
        }
        index["assets"].push_back(entry);
    }

    std::string index_path = (fs::path(cfg.output_dir) / "dataset.json").string();
    std::ofstream out(index_path, std::ios::trunc);
    out << index.dump(2) << "\n";
    require(bool(out), "cannot write " + index_path);
    return index;
}

inline SimConfig load_sim_config(const std::string &path) {
    using namespace detail;
    nlohmann::json j = load_json_file(path);
    std::string base_dir = std::filesystem::path(path).parent_path().string();
    const std::string where = "sim";
    check_keys(j, {"seed", "output_dir", "width", "height", "n_variations", "rig", "assets"},
               where);
    SimConfig cfg;
    require(j.contains("seed"), "sim: 'seed' is mandatory");
    require(j["seed"].is_number_integer(), "sim: 'seed' must be an integer");
    cfg.seed = j["seed"].get<uint64_t>();
    cfg.output_dir = resolve_path(base_dir, str_field(j, "output_dir", where));
    cfg.width = int_or(j, "width", cfg.width, where);
    cfg.height = int_or(j, "height", cfg.height, where);
    cfg.n_variations = int_or(j, "n_variations", 1, where);
    require(j.contains("rig"), "sim: 'rig' is mandatory");
    cfg.rig = load_rig(j["rig"], base_dir, "sim.rig");
    require(j.contains("assets") && j["assets"].is_array() && !j["assets"].empty(),
            "sim: 'assets' must be a non-empty array");
    for (size_t i = 0; i < j["assets"].size(); ++i) {
        const auto &aj = j["assets"][i];
        std::string aw = "sim.assets[" + std::to_string(i) + "]";
        check_keys(aj, {"name", "mesh", "albedo"}, aw);
        SimAsset a;
        a.name = str_field(aj, "name", aw);
        a.mesh_path = resolve_path(base_dir, str_field(aj, "mesh", aw));
        a.albedo_path = resolve_path(base_dir, str_field(aj, "albedo", aw));
        cfg.assets.push_back(a);
    }
    return cfg;
}

} // namespace reflkit
