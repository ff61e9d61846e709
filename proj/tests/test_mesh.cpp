#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "reflkit/mesh.hpp"
#include "reflkit/procedural.hpp"

namespace {

using namespace reflkit;

double angle_deg(const Vec3f &a, const Vec3f &b) {
    double d = double(dot(normalize(a), normalize(b)));
    d = std::fmin(1.0, std::fmax(-1.0, d));
    return std::acos(d) * 180.0 / 3.14159265358979323846;
}

std::string temp_path(const std::string &name) { return testing::TempDir() + name; }

} // namespace

TEST(Obj, SaveLoadRoundTripIsExact) {
    Mesh m = make_sphere_face(9);
    std::string path = temp_path("round_trip.obj");
    save_obj(path, m);
    Mesh r = load_obj(path);
    ASSERT_EQ(r.vertex_count(), m.vertex_count());
    ASSERT_EQ(r.triangle_count(), m.triangle_count());
    for (int i = 0; i < m.vertex_count(); ++i) {
        // %.9g prints enough digits to reproduce every float exactly
        EXPECT_EQ(r.positions[size_t(i)].x, m.positions[size_t(i)].x);
        EXPECT_EQ(r.positions[size_t(i)].y, m.positions[size_t(i)].y);
        EXPECT_EQ(r.positions[size_t(i)].z, m.positions[size_t(i)].z);
        EXPECT_EQ(r.uvs[size_t(i)].x, m.uvs[size_t(i)].x);
        EXPECT_EQ(r.uvs[size_t(i)].y, m.uvs[size_t(i)].y);
    }
    for (int i = 0; i < m.triangle_count(); ++i)
        EXPECT_EQ(r.triangles[size_t(i)], m.triangles[size_t(i)]);
}

TEST(Obj, QuadFacesTriangulateAsFan) {
    std::string path = temp_path("quad.obj");
    {
        std::ofstream out(path, std::ios::trunc);
        out << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n";
        out << "vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n";
        out << "f 1/1 2/2 3/3 4/4\n";
    }
    Mesh m = load_obj(path);
    EXPECT_EQ(m.vertex_count(), 4);
    ASSERT_EQ(m.triangle_count(), 2);
    EXPECT_EQ(m.triangles[0], (std::array<int, 3>{0, 1, 2}));
    EXPECT_EQ(m.triangles[1], (std::array<int, 3>{0, 2, 3}));
}

TEST(Obj, NegativeIndicesResolveFromEnd) {
    std::string path = temp_path("negative.obj");
    {
        std::ofstream out(path, std::ios::trunc);
        out << "v 0 0 0\nv 1 0 0\nv 0 1 0\n";
        out << "vt 0 0\nvt 1 0\nvt 0 1\n";
        out << "f -3/-3 -2/-2 -1/-1\n";
    }
    Mesh m = load_obj(path);
    ASSERT_EQ(m.triangle_count(), 1);
    EXPECT_EQ(m.triangles[0], (std::array<int, 3>{0, 1, 2}));
    EXPECT_EQ(m.positions[1].x, 1.0f);
}

TEST(Obj, BadInputThrows) {
    EXPECT_THROW(load_obj(temp_path("does_not_exist.obj")), Error);
    std::string path = temp_path("malformed.obj");
    {
        std::ofstream out(path, std::ios::trunc);
        out << "v 0 0\n";
    }
    EXPECT_THROW(load_obj(path), Error);
    {
        std::ofstream out(path, std::ios::trunc);
        out << "v 0 0 0\nvt 0 0\nf 1/1 2/1 3/1\n";
    }
    EXPECT_THROW(load_obj(path), Error);
}

TEST(ValidateMesh, RejectsBrokenTopology) {
    Mesh m;
    EXPECT_THROW(validate_mesh(m), Error);

    m = make_plane(2, 2);
    Mesh bad = m;
    bad.uvs.pop_back();
    EXPECT_THROW(validate_mesh(bad), Error);

    bad = m;
    bad.triangles[0][1] = 99;
    EXPECT_THROW(validate_mesh(bad), Error);

    bad = m;
    bad.triangles[0][1] = bad.triangles[0][0];
    EXPECT_THROW(validate_mesh(bad), Error);

    bad = m;
    bad.uvs[0].x = 1.5f;
    EXPECT_THROW(validate_mesh(bad), Error);

    EXPECT_NO_THROW(validate_mesh(m));
}

TEST(ShapeNormals, PlanePointsStraightUp) {
    Mesh m = make_plane(4, 3);
    auto n = shape_normals(m);
    for (const auto &v : n) {
        EXPECT_NEAR(v.x, 0.0f, 1e-6f);
        EXPECT_NEAR(v.y, 0.0f, 1e-6f);
        EXPECT_NEAR(v.z, 1.0f, 1e-6f);
    }
}

TEST(ShapeNormals, IcosphereNormalsNearRadial) {
    Mesh m = make_icosphere(3);
    auto n = shape_normals(m);
    double worst = 0.0;
    for (size_t i = 0; i < m.positions.size(); ++i)
        worst = std::fmax(worst, angle_deg(n[i], m.positions[i]));
    EXPECT_LE(worst, 2.0);
}

TEST(ShapeNormals, SeamDuplicatesShareWeldedNormal) {
    Mesh m = make_icosphere(1);
    auto n = shape_normals(m);
    // Island borders duplicate positions bit-exactly; welding must give each
    // duplicate the full one-ring normal, so equal positions imply equal normals.
    int matched = 0;
    for (size_t i = 0; i < m.positions.size(); ++i)
        for (size_t j = i + 1; j < m.positions.size(); ++j)
            if (m.positions[i].x == m.positions[j].x && m.positions[i].y == m.positions[j].y &&
                m.positions[i].z == m.positions[j].z) {
                ++matched;
                EXPECT_EQ(n[i].x, n[j].x);
                EXPECT_EQ(n[i].y, n[j].y);
                EXPECT_EQ(n[i].z, n[j].z);
            }
    EXPECT_GT(matched, 0);
}

TEST(Subdivide, QuadruplesTrianglesAndKeepsOriginals) {
    Mesh m = make_plane(2, 2);
    Mesh s = m;
    for (int level = 1; level <= 2; ++level) {
        s = subdivide_midpoint(s);
        EXPECT_EQ(s.triangle_count(), m.triangle_count() * int(std::pow(4, level)));
    }
    for (int i = 0; i < m.vertex_count(); ++i) {
        EXPECT_EQ(s.positions[size_t(i)].x, m.positions[size_t(i)].x);
        EXPECT_EQ(s.positions[size_t(i)].y, m.positions[size_t(i)].y);
        EXPECT_EQ(s.uvs[size_t(i)].x, m.uvs[size_t(i)].x);
    }
    EXPECT_NO_THROW(validate_mesh(s));
    // midpoints of a unit plane keep the linear uv-to-position relation
    for (int i = 0; i < s.vertex_count(); ++i) {
        EXPECT_NEAR(s.positions[size_t(i)].x + 0.5f, s.uvs[size_t(i)].x, 1e-6f);
        EXPECT_NEAR(s.positions[size_t(i)].z, 0.0f, 1e-6f);
    }
}

TEST(Emboss, ZeroScaleAndZeroMapAreIdentity) {
    Mesh m = make_icosphere(1);
    RasterMap zero = make_map(8, 8, MapKind::Displacement, Colorspace::Raw, 0.0f);
    Mesh a = emboss(m, zero, 1.0f);
    RasterMap one = make_map(8, 8, MapKind::Displacement, Colorspace::Raw, 1.0f);
    Mesh b = emboss(m, one, 0.0f);
    for (int i = 0; i < m.vertex_count(); ++i) {
        EXPECT_EQ(a.positions[size_t(i)].x, m.positions[size_t(i)].x);
        EXPECT_EQ(b.positions[size_t(i)].x, m.positions[size_t(i)].x);
        EXPECT_EQ(a.positions[size_t(i)].z, m.positions[size_t(i)].z);
        EXPECT_EQ(b.positions[size_t(i)].z, m.positions[size_t(i)].z);
    }
}

TEST(Emboss, ConstantDisplacementInflatesSphere) {
    Mesh m = make_icosphere(3);
    RasterMap d = make_map(16, 16, MapKind::Displacement, Colorspace::Raw, 1.0f);
    Mesh e = emboss(m, d, 0.01f);
    for (const auto &p : e.positions) {
        double r = std::sqrt(double(p.x) * p.x + double(p.y) * p.y + double(p.z) * p.z);
        EXPECT_NEAR(r, 1.01, 1e-6);
    }
}

TEST(Emboss, InvalidTexelsDisplaceByZero) {
    Mesh m = make_plane(2, 2);
    RasterMap d = make_map(8, 8, MapKind::Displacement, Colorspace::Raw, 5.0f);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            d.set_valid(x, y, false);
    Mesh e = emboss(m, d, 1.0f);
    for (int i = 0; i < m.vertex_count(); ++i)
        EXPECT_EQ(e.positions[size_t(i)].z, 0.0f);
}

TEST(Emboss, RequiresDisplacementKind) {
    Mesh m = make_plane(1, 1);
    RasterMap g = make_map(4, 4, MapKind::Gray, Colorspace::Raw);
    EXPECT_THROW(emboss(m, g, 1.0f), Error);
}

TEST(TangentFrames, OrthonormalRightHanded) {
    for (const Mesh &m : {make_sphere_face(12), make_icosphere(2)}) {
        auto frames = tangent_frames(m);
        for (const auto &f : frames) {
            EXPECT_NEAR(length(f.t), 1.0f, 1e-4f);
            EXPECT_NEAR(length(f.b), 1.0f, 1e-4f);
            EXPECT_NEAR(length(f.n), 1.0f, 1e-4f);
            EXPECT_NEAR(dot(f.t, f.n), 0.0f, 1e-4f);
            EXPECT_NEAR(dot(f.b, f.n), 0.0f, 1e-4f);
            EXPECT_NEAR(dot(f.t, f.b), 0.0f, 1e-4f);
            EXPECT_NEAR(dot(cross(f.n, f.t), f.b), 1.0f, 1e-4f);
        }
    }
}

TEST(TangentFrames, PlaneTangentFollowsU) {
    Mesh m = make_plane(3, 3);
    auto frames = tangent_frames(m);
    for (const auto &f : frames) {
        EXPECT_NEAR(f.t.x, 1.0f, 1e-5f);
        EXPECT_NEAR(f.b.y, 1.0f, 1e-5f);
        EXPECT_NEAR(f.n.z, 1.0f, 1e-5f);
    }
}

TEST(UvLayout, DetectsOverlapsAndPassesCleanTemplates) {
    EXPECT_FALSE(uv_layout_overlaps(make_plane(4, 4)));
    EXPECT_FALSE(uv_layout_overlaps(make_icosphere(2)));
    EXPECT_FALSE(uv_layout_overlaps(make_two_plane_block()));

    Mesh bad;
    bad.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
    bad.uvs = {{0.1f, 0.1f}, {0.9f, 0.1f}, {0.1f, 0.9f},
               {0.2f, 0.2f}, {0.8f, 0.2f}, {0.2f, 0.8f}};
    bad.triangles = {{0, 1, 2}, {3, 4, 5}};
    EXPECT_TRUE(uv_layout_overlaps(bad));
}
