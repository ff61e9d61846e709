#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "reflkit/reflkit.hpp"

namespace {

namespace fs = std::filesystem;
using namespace reflkit;

const std::map<std::string, MapKind> kKindByName = {
    {"texture", MapKind::Texture},
    {"diffuse_albedo", MapKind::DiffuseAlbedo},
    {"baked_texture", MapKind::BakedTexture},
    {"specular_albedo", MapKind::SpecularAlbedo},
    {"normals_object", MapKind::NormalsObject},
    {"normals_tangent", MapKind::NormalsTangent},
    {"normals_diffuse", MapKind::NormalsDiffuse},
    {"normals_specular", MapKind::NormalsSpecular},
    {"depth", MapKind::Depth},
    {"displacement", MapKind::Displacement},
    {"gray", MapKind::Gray},
};

int cmd_run(const std::string &config_path, const std::string &profile) {
    PipelineConfig cfg = load_pipeline_config(config_path, profile);
    PipelineResult res = run_pipeline(cfg);
    std::cout << "wrote " << res.output_dir << "/manifest.json ("
              << res.manifest.size() << " artifacts)\n";
    return 0;
}

int cmd_simulate(const std::string &config_path) {
    SimConfig cfg = load_sim_config(config_path);
    nlohmann::json index = simulate_dataset(cfg);
    std::cout << "wrote " << cfg.output_dir << "/dataset.json ("
              << index["assets"].size() << " assets x " << cfg.n_variations
              << " variations)\n";
    return 0;
}

int cmd_bake(const std::string &mesh_path, const std::string &albedo_path,
             const std::string &rig_path, const std::string &out_path, int width, int height,
             uint64_t seed) {
    Mesh mesh = load_obj(mesh_path);
    RasterMap albedo = load_raster(albedo_path, MapKind::DiffuseAlbedo);
    if (width <= 0)
        width = albedo.width;
    if (height <= 0)
        height = albedo.height;
    if (albedo.width != width || albedo.height != height)
        albedo = resize_lanczos(albedo, width, height);
    nlohmann::json rj = load_json_file(rig_path);
    LightingRig rig = load_rig(rj, fs::path(rig_path).parent_path().string());
    ShadeSettings shade;
    shade.seed = seed;
    IrradianceMaps irr = irradiance_components(mesh, width, height, rig, shade);
    RasterMap baked = bake_texture(albedo, irr);
    save_raster(out_path, baked);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_render(const std::string &mesh_path, const std::string &maps_dir,
               const std::string &rig_path, const std::string &out_path, int width, int height,
               uint64_t seed) {
    Mesh mesh = load_obj(mesh_path);
    ReflectanceSet refl;
    auto load_map = [&](const char *stem, MapKind kind) {
        fs::path p = fs::path(maps_dir) / (std::string(stem) + ".rmap");
        return load_raster(p.string(), kind);
    };
    refl.diffuse_albedo = load_map("albedo_diffuse", MapKind::DiffuseAlbedo);
    refl.specular_albedo = load_map("albedo_specular", MapKind::SpecularAlbedo);
    refl.normals_diffuse = load_map("normals_diffuse", MapKind::NormalsDiffuse);
    refl.normals_specular = load_map("normals_specular", MapKind::NormalsSpecular);
    nlohmann::json rj = load_json_file(rig_path);
    LightingRig rig = load_rig(rj, fs::path(rig_path).parent_path().string());
    Camera cam;
    cam.position = Vec3f(0.0f, 0.0f, 1.0f);
    cam.width = width;
    cam.height = height;
    ShadeSettings shade;
    shade.seed = seed;
    RenderResult r = render_view(mesh, refl, cam, rig, shade);
    RasterMap srgb = to_srgb(r.image);
    for (auto &v : srgb.data)
        v = clamp01(v);
    save_raster(out_path, srgb);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_eval(const std::string &a_path, const std::string &b_path, const std::string &kind_name,
             const std::string &out_path) {
    MapKind kind = kKindByName.at(kind_name);
    RasterMap a = load_raster(a_path, kind);
    RasterMap b = load_raster(b_path, kind);
    MetricReport rep;
    rep.entries.push_back({kind_name, psnr(a, b)});
    nlohmann::json j = rep.to_json();
    std::cout << j.dump(2) << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        out << j.dump(2) << "\n";
        require(bool(out), "cannot write " + out_path);
    }
    return 0;
}

// Writes a procedural asset plus ready-to-run rig/simulation/pipeline configs.
int cmd_asset(const std::string &out_dir, const std::string &shape, const std::string &albedo_kind,
              int width, int height, uint64_t seed) {
    fs::create_directories(out_dir);
    Mesh mesh;
    if (shape == "sphere-face")
        mesh = make_sphere_face();
    else if (shape == "icosphere")
        mesh = make_icosphere();
    else if (shape == "plane")
        mesh = make_plane(32, 32);
    else if (shape == "block")
        mesh = make_two_plane_block();
    else
        fail("asset: unknown shape " + shape);
    std::string mesh_path = (fs::path(out_dir) / "mesh.obj").string();
    save_obj(mesh_path, mesh);

    RasterMap albedo = albedo_kind == "checker" ? make_checker_albedo(width, height)
                                                : make_skin_albedo(width, height, seed);
    std::string albedo_path = (fs::path(out_dir) / "albedo.rmap").string();
    save_rmap(albedo_path, albedo);

    nlohmann::json rig = {
        {"env_uniform", 1.0},
        {"env_scale", 0.6},
        {"jitter_sigma", 0.0},
        {"seed", 1},
        {"lights",
         {{{"position", {0.3, 0.4, 1.2}}, {"intensity", {0.12, 0.12, 0.12}}},
          {{"position", {-0.4, 0.1, 1.1}}, {"intensity", {0.1, 0.1, 0.1}}},
          {{"position", {0.0, -0.3, 1.3}}, {"intensity", {0.08, 0.08, 0.08}}}}}};
    {
        std::ofstream out(fs::path(out_dir) / "rig.json", std::ios::trunc);
        out << rig.dump(2) << "\n";
    }
    nlohmann::json sim = {{"seed", seed},
                          {"output_dir", "dataset"},
                          {"width", width},
                          {"height", height},
                          {"n_variations", 1},
                          {"rig", rig},
                          {"assets", {{{"name", "asset"},
                                       {"mesh", "mesh.obj"},
                                       {"albedo", "albedo.rmap"}}}}};
    {
        std::ofstream out(fs::path(out_dir) / "sim.json", std::ios::trunc);
        out << sim.dump(2) << "\n";
    }
    nlohmann::json cfg = {{"seed", seed},
                          {"mesh", "mesh.obj"},
                          {"texture", "dataset/asset/bake_0.rmap"},
                          {"output_dir", "out"},
                          {"profile", "desk"},
                          {"any_size", true},
                          {"rig", rig},
                          {"truth_albedo", "dataset/asset/albedo_sr.rmap"}};
    if (width * 8 < 384) {
        cfg["patch"] = width * 2;
        cfg["stride"] = width;
    }
    {
        std::ofstream out(fs::path(out_dir) / "config.json", std::ios::trunc);
        out << cfg.dump(2) << "\n";
    }

    RasterMap truth_sr = sr_zeta(to_srgb(albedo), 8, true);
    truth_sr.kind = MapKind::DiffuseAlbedo;
    for (auto &v : truth_sr.data)
        v = clamp01(v);
    fs::create_directories(fs::path(out_dir) / "dataset" / "asset");
    save_rmap((fs::path(out_dir) / "dataset" / "asset" / "albedo_sr.rmap").string(), truth_sr);

    std::cout << "wrote " << out_dir << " (mesh.obj, albedo.rmap, rig.json, sim.json, "
              << "config.json)\n";
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"facial reflectance map pipeline"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker thread count")->capture_default_str();

    std::string config_path, profile;
    auto *run = app.add_subcommand("run", "run the full pipeline from a config");
    run->add_option("--config", config_path, "pipeline config JSON")->required();
    run->add_option("--profile", profile, "resolution profile")
        ->check(CLI::IsMember({"desk", "full"}));

    std::string sim_path;
    auto *simulate = app.add_subcommand("simulate", "bake a simulated dataset");
    simulate->add_option("--config", sim_path, "simulation config JSON")->required();

    std::string bake_mesh, bake_albedo, bake_rig, bake_out;
    int bake_w = 0, bake_h = 0;
    uint64_t bake_seed = 0;
    auto *bake = app.add_subcommand("bake", "bake illumination into an albedo");
    bake->add_option("--mesh", bake_mesh)->required();
    bake->add_option("--albedo", bake_albedo)->required();
    bake->add_option("--rig", bake_rig, "rig JSON")->required();
    bake->add_option("--out", bake_out)->required();
    bake->add_option("--width", bake_w);
    bake->add_option("--height", bake_h);
    bake->add_option("--seed", bake_seed);

    std::string render_mesh, render_maps, render_rig, render_out;
    int render_w = 256, render_h = 192;
    uint64_t render_seed = 0;
    auto *render = app.add_subcommand("render", "render a mesh with reflectance maps");
    render->add_option("--mesh", render_mesh)->required();
    render->add_option("--maps", render_maps, "directory with pipeline output maps")->required();
    render->add_option("--rig", render_rig, "rig JSON")->required();
    render->add_option("--out", render_out)->required();
    render->add_option("--width", render_w)->capture_default_str();
    render->add_option("--height", render_h)->capture_default_str();
    render->add_option("--seed", render_seed);

    std::string eval_a, eval_b, eval_kind = "diffuse_albedo", eval_out;
    auto *eval = app.add_subcommand("eval", "compare two maps (PSNR)");
    eval->add_option("--a", eval_a)->required();
    eval->add_option("--b", eval_b)->required();
    eval->add_option("--kind", eval_kind, "map kind for loading")
        ->check(CLI::IsMember([] {
            std::vector<std::string> names;
            for (const auto &kv : kKindByName)
                names.push_back(kv.first);
            return names;
        }()))
        ->capture_default_str();
    eval->add_option("--out", eval_out, "also write the report here");

    std::string asset_out, asset_shape = "sphere-face", asset_albedo = "skin";
    int asset_w = 144, asset_h = 96;
    uint64_t asset_seed = 7;
    auto *asset = app.add_subcommand("asset", "generate a procedural test asset");
    asset->add_option("--out", asset_out)->required();
    asset->add_option("--shape", asset_shape)
        ->check(CLI::IsMember({"sphere-face", "icosphere", "plane", "block"}))
        ->capture_default_str();
    asset->add_option("--albedo", asset_albedo)
        ->check(CLI::IsMember({"checker", "skin"}))
        ->capture_default_str();
    asset->add_option("--width", asset_w)->capture_default_str();
    asset->add_option("--height", asset_h)->capture_default_str();
    asset->add_option("--seed", asset_seed)->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    set_thread_count(threads);

    try {
        if (run->parsed())
            return cmd_run(config_path, profile);
        if (simulate->parsed())
            return cmd_simulate(sim_path);
        if (bake->parsed())
            return cmd_bake(bake_mesh, bake_albedo, bake_rig, bake_out, bake_w, bake_h,
                            bake_seed);
        if (render->parsed())
            return cmd_render(render_mesh, render_maps, render_rig, render_out, render_w,
                              render_h, render_seed);
        if (eval->parsed())
            return cmd_eval(eval_a, eval_b, eval_kind, eval_out);
        if (asset->parsed())
            return cmd_asset(asset_out, asset_shape, asset_albedo, asset_w, asset_h, asset_seed);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
