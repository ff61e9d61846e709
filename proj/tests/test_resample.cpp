#include <gtest/gtest.h>

#include <cmath>

#include "reflkit/resample.hpp"
#include "reflkit/rng.hpp"

using namespace reflkit;

namespace {

RasterMap random_gray(int w, int h, uint64_t seed) {
    RasterMap m = make_map(w, h, MapKind::Gray, Colorspace::Linear);
    CounterRng rng(seed);
    for (size_t i = 0; i < m.data.size(); ++i)
        m.data[i] = float(rng.uniform(i));
    return m;
}

} // namespace

TEST(Bilinear, ExactAtTexelCenters) {
    auto m = random_gray(5, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x)
            EXPECT_FLOAT_EQ(sample_bilinear(m, float(x) + 0.5f, float(y) + 0.5f), m.at(x, y));
}

TEST(Bilinear, MidpointAveragesNeighbors) {
    RasterMap m = make_map(2, 1, MapKind::Gray, Colorspace::Linear);
    m.at(0, 0) = 0.2f;
    m.at(1, 0) = 0.6f;
    EXPECT_NEAR(sample_bilinear(m, 1.0f, 0.5f), 0.4f, 1e-7f);
}

TEST(Bilinear, ClampsAtEdges) {
    RasterMap m = make_map(2, 2, MapKind::Gray, Colorspace::Linear);
    m.at(0, 0) = 1.0f;
    EXPECT_FLOAT_EQ(sample_bilinear(m, -3.0f, -3.0f), 1.0f);
}

TEST(Bilinear, UvConventionTexelCentersVUp) {
    RasterMap m = make_map(2, 2, MapKind::Gray, Colorspace::Linear);
    m.at(0, 0) = 0.1f; // top-left
    m.at(1, 0) = 0.2f;
    m.at(0, 1) = 0.3f; // bottom-left
    m.at(1, 1) = 0.4f;
    // u = 0.25, v = 0.75 is the center of the top-left texel (v points up)
    EXPECT_FLOAT_EQ(sample_bilinear_uv(m, 0.25f, 0.75f), 0.1f);
    EXPECT_FLOAT_EQ(sample_bilinear_uv(m, 0.75f, 0.25f), 0.4f);
}

TEST(Bilinear, MaskedRenormalizesWeights) {
    RasterMap m = make_map(2, 1, MapKind::Gray, Colorspace::Linear);
    m.at(0, 0) = 0.2f;
    m.at(1, 0) = 0.8f;
    m.set_valid(1, 0, false);
    float v = 0.0f;
    ASSERT_TRUE(sample_bilinear_masked(m, 1.0f, 0.5f, 0, v));
    EXPECT_FLOAT_EQ(v, 0.2f);

    m.set_valid(0, 0, false);
    EXPECT_FALSE(sample_bilinear_masked(m, 1.0f, 0.5f, 0, v));
}

TEST(Lanczos, ConstantStaysConstant) {
    RasterMap m = make_map(12, 9, MapKind::DiffuseAlbedo, Colorspace::Linear, 0.7f);
    auto up = resize_lanczos(m, 96, 72);
    EXPECT_EQ(up.width, 96);
    EXPECT_EQ(up.height, 72);
    EXPECT_EQ(up.kind, MapKind::DiffuseAlbedo);
    for (float v : up.data)
        EXPECT_NEAR(v, 0.7f, 1e-6f);
}

TEST(Lanczos, UpsampleIsCenterAligned) {
    // a single bright texel must upsample to a peak symmetric about the
    // texel's center, which for x8 lands between output texels 8k+3 and 8k+4
    RasterMap m = make_map(16, 1, MapKind::Gray, Colorspace::Raw);
    m.at(7, 0) = 1.0f;
    auto up = resize_lanczos(m, 128, 1);
    EXPECT_NEAR(up.at(7 * 8 + 3, 0), up.at(7 * 8 + 4, 0), 1e-6f);
    for (int x = 0; x < 128; ++x)
        EXPECT_LE(up.at(x, 0), up.at(59, 0) + 1e-6f);
}

TEST(Lanczos, MirrorSymmetryPreserved) {
    auto m = random_gray(10, 1, 7);
    RasterMap flipped = m;
    for (int x = 0; x < 10; ++x)
        flipped.at(x, 0) = m.at(9 - x, 0);
    auto up = resize_lanczos(m, 80, 1);
    auto upf = resize_lanczos(flipped, 80, 1);
    for (int x = 0; x < 80; ++x)
        EXPECT_NEAR(up.at(x, 0), upf.at(79 - x, 0), 1e-6f);
}

TEST(Lanczos, MinifyAveragesWithScaledSupport) {
    auto m = random_gray(64, 1, 8);
    auto down = resize_lanczos(m, 8, 1);
    // crude sanity: values stay in range and near the local mean
    for (int x = 0; x < 8; ++x) {
        double mean = 0.0;
        for (int t = 0; t < 8; ++t)
            mean += m.at(x * 8 + t, 0);
        mean /= 8.0;
        EXPECT_NEAR(down.at(x, 0), mean, 0.25);
    }
}

TEST(DownsampleBox, ExactBlockMean) {
    auto m = random_gray(6, 4, 9);
    auto d = downsample_box(m, 2);
    ASSERT_EQ(d.width, 3);
    ASSERT_EQ(d.height, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x) {
            double mean = (m.at(2 * x, 2 * y) + m.at(2 * x + 1, 2 * y) +
                           m.at(2 * x, 2 * y + 1) + m.at(2 * x + 1, 2 * y + 1)) / 4.0;
            EXPECT_NEAR(d.at(x, y), mean, 1e-7);
        }
    EXPECT_THROW(downsample_box(m, 4), Error);
}

TEST(Gaussian, PreservesConstant) {
    RasterMap m = make_map(20, 20, MapKind::Gray, Colorspace::Linear, 0.3f);
    auto b = gaussian_blur(m, 2.5f);
    for (float v : b.data)
        EXPECT_NEAR(v, 0.3f, 1e-6f);
}

TEST(Gaussian, ZeroSigmaIsIdentity) {
    auto m = random_gray(7, 7, 10);
    auto b = gaussian_blur(m, 0.0f);
    for (size_t i = 0; i < m.data.size(); ++i)
        EXPECT_FLOAT_EQ(b.data[i], m.data[i]);
}

TEST(Gaussian, ImpulseResponseSymmetricUnitSum) {
    RasterMap m = make_map(41, 41, MapKind::Gray, Colorspace::Raw);
    m.at(20, 20) = 1.0f;
    auto b = gaussian_blur(m, 3.0f);
    double sum = 0.0;
    for (float v : b.data)
        sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-5);
    for (int t = 1; t < 9; ++t) {
        EXPECT_NEAR(b.at(20 + t, 20), b.at(20 - t, 20), 1e-7f);
        EXPECT_NEAR(b.at(20, 20 + t), b.at(20, 20 - t), 1e-7f);
        EXPECT_NEAR(b.at(20 + t, 20), b.at(20, 20 + t), 1e-7f);
    }
}

TEST(Gaussian, MaskedIgnoresInvalidTexels) {
    RasterMap m = make_map(15, 15, MapKind::Gray, Colorspace::Linear, 0.5f);
    m.set_valid(7, 7, false);
    m.at(7, 7) = 1000.0f; // must not leak into neighbors
    auto b = gaussian_blur(m, 1.5f);
    for (int y = 0; y < 15; ++y)
        for (int x = 0; x < 15; ++x)
            if (x != 7 || y != 7)
                EXPECT_NEAR(b.at(x, y), 0.5f, 1e-5f);
    EXPECT_FALSE(b.valid(7, 7));
}

TEST(Gradient, RampGivesExactSlope) {
    RasterMap m = make_map(9, 6, MapKind::Gray, Colorspace::Raw);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 9; ++x)
            m.at(x, y) = 0.1f * float(x) - 0.05f * float(y);
    auto gx = gradient_x(m);
    auto gy = gradient_y(m);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 9; ++x) {
            EXPECT_NEAR(gx.at(x, y), 0.1f, 1e-6f);
            EXPECT_NEAR(gy.at(x, y), -0.05f, 1e-6f);
        }
}

TEST(FillNearest, CopiesFromNearestValidTexel) {
    RasterMap m = make_map(5, 1, MapKind::Gray, Colorspace::Linear);
    for (int x = 0; x < 5; ++x)
        m.at(x, 0) = float(x);
    m.set_valid(2, 0, false);
    m.set_valid(3, 0, false);
    m.at(2, 0) = -1.0f;
    m.at(3, 0) = -1.0f;
    auto f = fill_nearest_valid(m);
    EXPECT_FLOAT_EQ(f.at(2, 0), 1.0f); // nearest valid is x=1
    EXPECT_FLOAT_EQ(f.at(3, 0), 4.0f); // nearest valid is x=4
    EXPECT_FALSE(f.valid(2, 0));       // mask unchanged
    EXPECT_FLOAT_EQ(f.at(1, 0), 1.0f); // valid texels untouched
}

TEST(FillNearest, EquidistantTieIsDeterministic) {
    RasterMap m = make_map(3, 1, MapKind::Gray, Colorspace::Linear);
    m.at(0, 0) = 10.0f;
    m.at(2, 0) = 20.0f;
    m.set_valid(1, 0, false);
    auto a = fill_nearest_valid(m);
    auto b = fill_nearest_valid(m);
    EXPECT_FLOAT_EQ(a.at(1, 0), b.at(1, 0));
    // seeding is scanline order, so the left source wins the tie
    EXPECT_FLOAT_EQ(a.at(1, 0), 10.0f);
}
