#include <cmath>

#include <gtest/gtest.h>

#include "reflkit/metrics.hpp"
#include "reflkit/operators.hpp"
#include "reflkit/procedural.hpp"
#include "reflkit/uv_raster.hpp"

namespace {

using namespace reflkit;

double angle_rad(const Vec3f &a, const Vec3f &b) {
    double ax = a.x, ay = a.y, az = a.z, bx = b.x, by = b.y, bz = b.z;
    double cx = ay * bz - az * by;
    double cy = az * bx - ax * bz;
    double cz = ax * by - ay * bx;
    double cl = std::sqrt(cx * cx + cy * cy + cz * cz);
    return std::atan2(cl, ax * bx + ay * by + az * bz);
}

RasterMap smooth_texture(int w, int h) {
    RasterMap m = make_map(w, h, MapKind::Texture, Colorspace::Linear);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float u = 2.0f * float(M_PI) * float(x) / float(w);
            float v = 2.0f * float(M_PI) * float(y) / float(h);
            m.at(x, y, 0) = 0.4f + 0.3f * std::sin(u) * std::cos(v);
            m.at(x, y, 1) = 0.45f + 0.25f * std::cos(u);
            m.at(x, y, 2) = 0.5f + 0.2f * std::sin(v);
        }
    return m;
}

RasterMap constant_srgb_albedo(int w, int h, float r, float g, float b) {
    RasterMap m = make_map(w, h, MapKind::DiffuseAlbedo, Colorspace::Srgb);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            m.at(x, y, 0) = r;
            m.at(x, y, 1) = g;
            m.at(x, y, 2) = b;
        }
    return m;
}

RasterMap flat_tangent_normals(int w, int h) {
    RasterMap m = make_map(w, h, MapKind::NormalsTangent, Colorspace::SignedUnit);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m.at(x, y, 2) = 1.0f;
    return m;
}

Vec3f texel_normal(const RasterMap &m, int x, int y) {
    return Vec3f(m.at(x, y, 0), m.at(x, y, 1), m.at(x, y, 2));
}

} // namespace

// --- zeta --------------------------------------------------------------------

TEST(Zeta, ConstantTextureIsPreservedAtEightX) {
    RasterMap t = make_map(64, 48, MapKind::Texture, Colorspace::Linear, 0.5f);
    RasterMap up = sr_zeta(t, 8, true);
    EXPECT_EQ(up.width, 512);
    EXPECT_EQ(up.height, 384);
    for (int y = 0; y < up.height; ++y)
        for (int x = 0; x < up.width; ++x)
            for (int c = 0; c < 3; ++c)
                EXPECT_NEAR(up.at(x, y, c), 0.5f, 1e-6f);
}

TEST(Zeta, CanonicalInputSizeIsEnforced) {
    RasterMap small = make_map(64, 48, MapKind::Texture, Colorspace::Linear, 0.1f);
    try {
        sr_zeta(small);
        FAIL() << "expected a size contract error";
    } catch (const Error &e) {
        EXPECT_NE(std::string(e.what()).find("576x384"), std::string::npos);
    }
    RasterMap canonical = make_map(576, 384, MapKind::Texture, Colorspace::Linear, 0.25f);
    RasterMap up = sr_zeta(canonical, 2);
    EXPECT_EQ(up.width, 1152);
    EXPECT_EQ(up.height, 768);
}

TEST(Zeta, BoxDownsampleRoundTripIsHighFidelity) {
    RasterMap t = smooth_texture(64, 48);
    RasterMap up = sr_zeta(t, 8, true);
    RasterMap down = downsample_box(up, 8);
    auto r = psnr(down, t);
    EXPECT_GE(r.db, 40.0);
}

// --- luma gray -----------------------------------------------------------------

TEST(LumaGray, PinnedRec709Values) {
    RasterMap m = constant_srgb_albedo(2, 2, 1.0f, 1.0f, 1.0f);
    EXPECT_NEAR(luma_gray(m).at(0, 0), 1.0f, 1e-6f);

    m = constant_srgb_albedo(2, 2, 1.0f, 0.0f, 0.0f);
    EXPECT_NEAR(luma_gray(m).at(0, 0), 0.2126f, 1e-7f);

    m = constant_srgb_albedo(2, 2, 0.2f, 0.5f, 0.8f);
    EXPECT_NEAR(luma_gray(m).at(0, 0), 0.45788f, 1e-6f);
}

TEST(LumaGray, ComputedOnEncodedValuesNotLinearLight) {
    // scaling the encoded values scales the output: true of luma, false of
    // luminance through the srgb curve
    RasterMap m = constant_srgb_albedo(2, 2, 0.4f, 0.6f, 0.2f);
    RasterMap half = m;
    for (auto &v : half.data)
        v *= 0.5f;
    EXPECT_NEAR(luma_gray(half).at(0, 0), 0.5f * luma_gray(m).at(0, 0), 1e-7f);
}

TEST(LumaGray, MonotoneInEveryChannel) {
    RasterMap m = constant_srgb_albedo(2, 2, 0.3f, 0.4f, 0.5f);
    float base = luma_gray(m).at(0, 0);
    for (int c = 0; c < 3; ++c) {
        RasterMap bumped = m;
        bumped.at(0, 0, c) += 0.2f;
        EXPECT_GT(luma_gray(bumped).at(0, 0), base);
    }
}

TEST(LumaGray, ContractChecks) {
    RasterMap linear = make_map(4, 4, MapKind::Texture, Colorspace::Linear, 0.5f);
    EXPECT_THROW(luma_gray(linear), Error);
    RasterMap gray = make_map(4, 4, MapKind::Gray, Colorspace::Srgb, 0.5f);
    EXPECT_THROW(luma_gray(gray), Error);

    RasterMap ok = constant_srgb_albedo(4, 4, 0.5f, 0.5f, 0.5f);
    ok.set_valid(1, 1, false);
    RasterMap g = luma_gray(ok);
    EXPECT_EQ(g.kind, MapKind::Gray);
    EXPECT_EQ(g.colorspace, Colorspace::Srgb);
    EXPECT_EQ(g.channels, 1);
    EXPECT_FALSE(g.valid(1, 1));
    EXPECT_TRUE(g.valid(0, 0));
}

// --- delta ---------------------------------------------------------------------

TEST(Delta, FurnaceBakeDelightsBackToTheAlbedo) {
    Mesh mesh = make_sphere_face(12);
    LightingRig rig;
    rig.environment = make_uniform_env(1.0f);
    ShadeSettings settings;
    settings.bake_specular_albedo = 0.0f;
    IrradianceMaps irr = irradiance_components(mesh, 64, 64, rig, settings);
    RasterMap albedo = make_checker_albedo(64, 64);
    RasterMap baked = bake_texture(albedo, irr);
    DelightResult r = delight_delta(baked, irr);
    EXPECT_EQ(r.albedo.kind, MapKind::DiffuseAlbedo);
    EXPECT_EQ(r.albedo.colorspace, Colorspace::Srgb);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (!r.albedo.valid(x, y))
                continue;
            EXPECT_EQ(r.filled.at(x, y), 0.0f);
            for (int c = 0; c < 3; ++c)
                EXPECT_NEAR(r.albedo.at(x, y, c), albedo.at(x, y, c), 1e-5f);
        }
}

TEST(Delta, RoundTripThroughRealRigStaysAbove40Db) {
    Mesh mesh = make_sphere_face(24);
    GeometryMaps geom = rasterize_geometry(mesh, 96, 96);
    Bvh bvh(mesh);
    LightingRig rig;
    rig.lights.push_back({{0.5f, 0.5f, 2.0f}, {1.2f, 1.1f, 1.0f}});
    rig.lights.push_back({{-0.6f, 0.2f, 2.2f}, {0.9f, 1.0f, 1.1f}});
    rig.lights.push_back({{0.0f, -0.5f, 1.8f}, {1.0f, 1.0f, 1.0f}});
    rig.environment = make_gradient_env(32, 16, 0.4f);
    ShadeSettings settings;
    settings.seed = 11;
    IrradianceMaps irr = irradiance_components(geom, bvh, rig, settings);

    RasterMap albedo = make_skin_albedo(96, 96);
    RasterMap baked = bake_texture(albedo, irr);
    DelightResult r = delight_delta(baked, irr);

    // compare only on well-lit, unshadowed, unfilled texels
    RasterMap truth = albedo;
    truth.mask.assign(truth.texel_count(), 0);
    long eligible = 0;
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) {
            if (irr.coverage.at(x, y) < 0.5f || irr.shadow_mask.at(x, y) < 0.5f)
                continue;
            if (r.filled.at(x, y) != 0.0f)
                continue;
            float emin = std::min(irr.e.at(x, y, 0),
                                  std::min(irr.e.at(x, y, 1), irr.e.at(x, y, 2)));
            if (emin < 0.05f)
                continue;
            truth.set_valid(x, y, true);
            ++eligible;
        }
    ASSERT_GT(eligible, 1000);
    auto score = psnr(r.albedo, truth);
    EXPECT_GE(score.db, 40.0);
}

TEST(Delta, ZeroIlluminationFlagsEveryCoveredTexel) {
    Mesh mesh = make_sphere_face(8);
    LightingRig rig; // no lights, no environment
    ShadeSettings settings;
    IrradianceMaps irr = irradiance_components(mesh, 32, 32, rig, settings);
    RasterMap albedo = make_checker_albedo(32, 32);
    RasterMap baked = bake_texture(albedo, irr);
    DelightResult r = delight_delta(baked, irr);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            bool covered = irr.coverage.at(x, y) > 0.5f;
            EXPECT_EQ(r.filled.at(x, y), covered ? 1.0f : 0.0f);
            EXPECT_EQ(r.albedo.valid(x, y), covered);
        }
}

TEST(Delta, LowIrradianceTexelsFillFromNearestValid) {
    int w = 32, h = 32;
    IrradianceMaps irr;
    irr.e = make_map(w, h, MapKind::Irradiance, Colorspace::Raw, 1.0f);
    irr.s = make_map(w, h, MapKind::Irradiance, Colorspace::Raw, 0.0f);
    irr.shadow_mask = make_map(w, h, MapKind::Gray, Colorspace::Raw, 1.0f);
    irr.coverage = make_map(w, h, MapKind::Gray, Colorspace::Raw, 1.0f);
    for (int y = 12; y < 20; ++y)
        for (int x = 12; x < 20; ++x)
            for (int c = 0; c < 3; ++c)
                irr.e.at(x, y, c) = 0.001f;

    float encoded = srgb_encode(0.6f);
    RasterMap baked = make_map(w, h, MapKind::BakedTexture, Colorspace::Srgb, encoded);
    DelightResult r = delight_delta(baked, irr);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool dark = x >= 12 && x < 20 && y >= 12 && y < 20;
            EXPECT_EQ(r.filled.at(x, y), dark ? 1.0f : 0.0f);
            EXPECT_TRUE(r.albedo.valid(x, y));
            EXPECT_NEAR(r.albedo.at(x, y, 0), encoded, 1e-5f);
        }
}

TEST(Delta, ContractChecks) {
    IrradianceMaps irr;
    irr.e = make_map(8, 8, MapKind::Irradiance, Colorspace::Raw, 1.0f);
    irr.s = make_map(8, 8, MapKind::Irradiance, Colorspace::Raw, 0.0f);
    irr.shadow_mask = make_map(8, 8, MapKind::Gray, Colorspace::Raw, 1.0f);
    irr.coverage = make_map(8, 8, MapKind::Gray, Colorspace::Raw, 1.0f);
    RasterMap wrong_size = make_map(4, 4, MapKind::BakedTexture, Colorspace::Srgb, 0.5f);
    EXPECT_THROW(delight_delta(wrong_size, irr), Error);
    RasterMap not_srgb = make_map(8, 8, MapKind::Texture, Colorspace::Linear, 0.5f);
    EXPECT_THROW(delight_delta(not_srgb, irr), Error);
}

// --- psi ------------------------------------------------------------------------

TEST(Psi, ConstantAlbedoGivesBaseSpecular) {
    RasterMap albedo = constant_srgb_albedo(48, 48, 0.5f, 0.4f, 0.35f);
    RasterMap s = spec_albedo_psi(albedo);
    EXPECT_EQ(s.kind, MapKind::SpecularAlbedo);
    EXPECT_EQ(s.channels, 1);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x)
            EXPECT_NEAR(s.at(x, y), 0.3f, 1e-6f);
}

TEST(Psi, OutputStaysWithinZeroToS0) {
    RasterMap albedo = make_skin_albedo(64, 64);
    PsiSettings cfg;
    RasterMap s = spec_albedo_psi(albedo, cfg);
    for (float v : s.data) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, cfg.s0 + 1e-7f);
    }
}

TEST(Psi, DarkPoreLowersSpecularAlbedo) {
    RasterMap albedo = constant_srgb_albedo(48, 48, 0.7f, 0.6f, 0.55f);
    for (int c = 0; c < 3; ++c)
        albedo.at(24, 24, c) = 0.1f;
    RasterMap s = spec_albedo_psi(albedo);
    EXPECT_LT(s.at(24, 24), 0.3f - 0.05f);
    EXPECT_NEAR(s.at(4, 4), 0.3f, 1e-4f);
    EXPECT_LT(s.at(24, 24), s.at(4, 4));
}

// --- rho ------------------------------------------------------------------------

TEST(Rho, ConstantGrayKeepsInputNormals) {
    RasterMap gray = make_map(48, 48, MapKind::Gray, Colorspace::Srgb, 0.4f);
    RasterMap nt = flat_tangent_normals(48, 48);
    RasterMap ns = spec_normals_rho(gray, nt);
    EXPECT_EQ(ns.kind, MapKind::NormalsSpecular);
    EXPECT_EQ(ns.colorspace, Colorspace::SignedUnit);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            EXPECT_NEAR(ns.at(x, y, 0), 0.0f, 1e-7f);
            EXPECT_NEAR(ns.at(x, y, 1), 0.0f, 1e-7f);
            EXPECT_NEAR(ns.at(x, y, 2), 1.0f, 1e-7f);
        }
}

TEST(Rho, GrayRampTiltsNormalsAgainstTheGradient) {
    int w = 48, h = 48;
    RasterMap gray = make_map(w, h, MapKind::Gray, Colorspace::Srgb);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            gray.at(x, y) = 0.1f + 0.005f * float(x);
    RhoSettings cfg;
    RasterMap ns = spec_normals_rho(gray, flat_tangent_normals(w, h), cfg);
    float slope = cfg.beta * 0.005f;
    float want_x = -slope / std::sqrt(1.0f + slope * slope);
    for (int y = 8; y < h - 8; ++y)
        for (int x = 8; x < w - 8; ++x) {
            EXPECT_NEAR(ns.at(x, y, 0), want_x, 1e-5f);
            EXPECT_NEAR(ns.at(x, y, 1), 0.0f, 1e-5f);
            EXPECT_GT(ns.at(x, y, 2), 0.0f);
            Vec3f n = texel_normal(ns, x, y);
            EXPECT_NEAR(length(n), 1.0f, 1e-3f);
        }
}

TEST(Rho, OutputIsUnitLength) {
    RasterMap gray = luma_gray(make_skin_albedo(64, 64));
    RasterMap ns = spec_normals_rho(gray, flat_tangent_normals(64, 64));
    float worst = 0.0f;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            worst = std::fmax(worst, std::fabs(length(texel_normal(ns, x, y)) - 1.0f));
    EXPECT_LE(worst, 1e-3f);
}

// --- sigma ------------------------------------------------------------------------

TEST(Sigma, ConstantInputsReturnTheNormals) {
    RasterMap gray = make_map(40, 40, MapKind::Gray, Colorspace::Srgb, 0.5f);
    RasterMap no = make_map(40, 40, MapKind::NormalsObject, Colorspace::SignedUnit);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
            no.at(x, y, 2) = 1.0f;
    RasterMap nd = diff_normals_sigma(gray, no);
    EXPECT_EQ(nd.kind, MapKind::NormalsDiffuse);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) {
            EXPECT_NEAR(nd.at(x, y, 0), 0.0f, 1e-6f);
            EXPECT_NEAR(nd.at(x, y, 2), 1.0f, 1e-6f);
        }
}

TEST(Sigma, DiffuseNormalsAreSmootherThanSpecular) {
    Mesh mesh = make_sphere_face(16);
    GeometryMaps geom = rasterize_geometry(mesh, 96, 96);
    RasterMap no = geom.normal_map();
    RasterMap gray = luma_gray(make_skin_albedo(96, 96));

    SigmaSettings scfg;
    RasterMap nd = diff_normals_sigma(gray, no, scfg);
    RasterMap nt = flat_tangent_normals(96, 96);
    nt.mask = no.mask;
    RasterMap ns = spec_normals_rho(gray, nt);

    RasterMap smooth_no = gaussian_blur(no, scfg.sigma_d);
    double sum_d = 0.0, sum_s = 0.0;
    long n = 0;
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) {
            if (!no.valid(x, y))
                continue;
            sum_d += angle_rad(texel_normal(nd, x, y), texel_normal(smooth_no, x, y));
            sum_s += angle_rad(texel_normal(ns, x, y), texel_normal(nt, x, y));
            ++n;
        }
    ASSERT_GT(n, 1000);
    EXPECT_LE(sum_d / double(n), sum_s / double(n));
}

TEST(Sigma, OutputIsUnitLength) {
    Mesh mesh = make_sphere_face(12);
    GeometryMaps geom = rasterize_geometry(mesh, 64, 64);
    RasterMap no = geom.normal_map();
    RasterMap gray = luma_gray(make_skin_albedo(64, 64));
    RasterMap nd = diff_normals_sigma(gray, no);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (!nd.valid(x, y))
                continue;
            EXPECT_NEAR(length(texel_normal(nd, x, y)), 1.0f, 1e-3f);
        }
}

// --- translation equivariance ----------------------------------------------------

TEST(Operators, PsiRhoSigmaAreTranslationEquivariant) {
    const int w = 128, h = 128, dx = 7, dy = 5;
    auto field = [](int x, int y) {
        return 0.5f + 0.2f * std::sin(0.37f * float(x)) * std::cos(0.23f * float(y)) +
               0.1f * std::sin(0.91f * float(x) + 0.53f * float(y));
    };
    RasterMap albedo = make_map(w, h, MapKind::DiffuseAlbedo, Colorspace::Srgb);
    RasterMap albedo_shift = albedo;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                albedo.at(x, y, c) = field(x + 13 * c, y + 5 * c);
                albedo_shift.at(x, y, c) = field(x - dx + 13 * c, y - dy + 5 * c);
            }
    RasterMap gray = luma_gray(albedo);
    RasterMap gray_shift = luma_gray(albedo_shift);

    RasterMap normals = make_map(w, h, MapKind::NormalsObject, Colorspace::SignedUnit);
    RasterMap normals_shift = normals;
    auto set_normal = [&](RasterMap &m, int x, int y, float u, float v) {
        Vec3f n = normalize(Vec3f(0.3f * std::sin(0.21f * u), 0.3f * std::cos(0.17f * v), 1.0f));
        m.at(x, y, 0) = n.x;
        m.at(x, y, 1) = n.y;
        m.at(x, y, 2) = n.z;
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            set_normal(normals, x, y, float(x), float(y));
            set_normal(normals_shift, x, y, float(x - dx), float(y - dy));
        }

    RasterMap psi_a = spec_albedo_psi(albedo);
    RasterMap psi_b = spec_albedo_psi(albedo_shift);
    RasterMap rho_a = spec_normals_rho(gray, normals);
    RasterMap rho_b = spec_normals_rho(gray_shift, normals_shift);
    RasterMap sig_a = diff_normals_sigma(gray, normals);
    RasterMap sig_b = diff_normals_sigma(gray_shift, normals_shift);

    const int margin = 20; // blur radius (3 sigma) plus the gradient stencil
    for (int y = margin; y < h - margin - dy; ++y)
        for (int x = margin; x < w - margin - dx; ++x) {
            EXPECT_EQ(psi_a.at(x, y), psi_b.at(x + dx, y + dy));
            for (int c = 0; c < 3; ++c) {
                EXPECT_EQ(rho_a.at(x, y, c), rho_b.at(x + dx, y + dy, c));
                EXPECT_EQ(sig_a.at(x, y, c), sig_b.at(x + dx, y + dy, c));
            }
        }
}

// --- operator plumbing -------------------------------------------------------------

TEST(Operators, FactoriesDeclareTheirLayouts) {
    auto zeta = make_zeta_operator(8);
    EXPECT_EQ(zeta.name(), "zeta");
    EXPECT_EQ(zeta.scale(), 8);
    EXPECT_EQ(zeta.input_layout(), (std::vector<std::string>{"R", "G", "B"}));
    EXPECT_EQ(zeta.output_layout(), (std::vector<std::string>{"R", "G", "B"}));

    auto psi_op = make_psi_operator();
    EXPECT_EQ(psi_op.output_layout(), (std::vector<std::string>{"S"}));
    auto rho_op = make_rho_operator();
    EXPECT_EQ(rho_op.input_layout(), (std::vector<std::string>{"G", "X", "Y", "Z"}));
    auto sigma_op = make_sigma_operator();
    EXPECT_EQ(sigma_op.name(), "sigma");
    EXPECT_EQ(sigma_op.scale(), 1);
}

TEST(Operators, TiledZetaUpscalesAndPreservesConstants) {
    RasterMap t = make_map(96, 64, MapKind::Texture, Colorspace::Linear, 0.5f);
    auto op = make_zeta_operator(2);
    MapStack out = apply_tiled(op, single_layer_stack(t), 32, 16);
    EXPECT_EQ(out.width, 192);
    EXPECT_EQ(out.height, 128);
    for (float v : out.layers[0].data)
        EXPECT_NEAR(v, 0.5f, 1e-6f);
}

TEST(Operators, TiledApplicationRejectsLayoutMismatch) {
    RasterMap gray = make_map(64, 64, MapKind::Gray, Colorspace::Raw, 0.5f);
    auto op = make_zeta_operator(2);
    try {
        apply_tiled(op, single_layer_stack(gray), 32, 16);
        FAIL() << "expected a layout mismatch error";
    } catch (const Error &e) {
        EXPECT_NE(std::string(e.what()).find("layout mismatch"), std::string::npos);
    }
}
