#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "reflkit/external_op.hpp"

namespace {

using namespace reflkit;

std::string stub(const std::string &mode) {
    return std::string(OP_STUB_PATH) + " " + mode;
}

MapStack smooth_stack(int w, int h) {
    RasterMap m = make_map(w, h, MapKind::Texture, Colorspace::Linear);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                m.at(x, y, c) = 0.5f + 0.4f * std::sin(0.21f * float(x + 7 * c)) *
                                           std::cos(0.13f * float(y));
    return single_layer_stack(std::move(m));
}

ExternalOperator echo_like(const std::string &command, int timeout_ms = 60000) {
    return ExternalOperator("echo", command, {"R", "G", "B"},
                            {{MapKind::Texture, Colorspace::Linear}}, 1, timeout_ms);
}

} // namespace

TEST(ExternalOp, StubEchoReturnsTheRequestBitExactly) {
    ExternalOperator op = echo_like(stub("echo"));
    MapStack in = smooth_stack(24, 18);
    MapStack out = op.apply(in);
    ASSERT_EQ(out.width, 24);
    ASSERT_EQ(out.height, 18);
    ASSERT_EQ(out.layout, in.layout);
    EXPECT_EQ(out.layers[0].data, in.layers[0].data);
    EXPECT_EQ(out.layers[0].kind, MapKind::Texture);
    EXPECT_EQ(out.layers[0].colorspace, Colorspace::Linear);
}

TEST(ExternalOp, PlainCatSpeaksTheProtocolToo) {
    ExternalOperator op = echo_like("cat");
    MapStack in = smooth_stack(16, 16);
    MapStack out = op.apply(in);
    EXPECT_EQ(out.layers[0].data, in.layers[0].data);
}

TEST(ExternalOp, SessionHandlesManyPatchesThroughTiling) {
    ExternalOperator op = echo_like(stub("echo"));
    MapStack in = smooth_stack(64, 48);
    MapStack out = apply_tiled(op, in, 16, 12);
    ASSERT_EQ(out.width, 64);
    ASSERT_EQ(out.height, 48);
    for (size_t i = 0; i < in.layers[0].data.size(); ++i)
        EXPECT_NEAR(out.layers[0].data[i], in.layers[0].data[i], 1e-6f);
}

TEST(ExternalOp, GainModeHalvesEverySample) {
    ExternalOperator op = echo_like(stub("gain"));
    MapStack in = smooth_stack(32, 32);
    MapStack out = apply_tiled(op, in, 16, 16);
    for (size_t i = 0; i < in.layers[0].data.size(); ++i)
        EXPECT_NEAR(out.layers[0].data[i], 0.5f * in.layers[0].data[i], 1e-6f);
}

TEST(ExternalOp, WrongOutputDimsNameExpectedAndGot) {
    ExternalOperator op = echo_like(stub("wrongdims"));
    MapStack in = smooth_stack(32, 32);
    try {
        apply_tiled(op, in, 16, 16);
        FAIL() << "expected a dimension error";
    } catch (const Error &e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("expected a 16x16 output, got 8x8"), std::string::npos) << msg;
        EXPECT_NE(msg.find("(patch at (0, 0))"), std::string::npos) << msg;
    }
}

TEST(ExternalOp, CorruptMagicIsRejected) {
    ExternalOperator op = echo_like(stub("badmagic"));
    MapStack in = smooth_stack(16, 16);
    try {
        apply_tiled(op, in, 16, 16);
        FAIL() << "expected a framing error";
    } catch (const Error &e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("bad magic"), std::string::npos) << msg;
        EXPECT_NE(msg.find("(patch at "), std::string::npos) << msg;
    }
}

TEST(ExternalOp, CrashingChildReportsExitAndPatch) {
    ExternalOperator op = echo_like(stub("crash"));
    MapStack in = smooth_stack(16, 16);
    try {
        apply_tiled(op, in, 16, 16);
        FAIL() << "expected a child failure";
    } catch (const Error &e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("child closed its output stream"), std::string::npos) << msg;
        EXPECT_NE(msg.find("(patch at (0, 0))"), std::string::npos) << msg;
    }
}

TEST(ExternalOp, HangingChildHitsTheTimeout) {
    ExternalOperator op = echo_like(stub("hang"), 300);
    MapStack in = smooth_stack(16, 16);
    try {
        op.apply(in);
        FAIL() << "expected a timeout";
    } catch (const Error &e) {
        EXPECT_NE(std::string(e.what()).find("timed out"), std::string::npos) << e.what();
    }
}

TEST(ExternalOp, DeclaredLayoutsComeFromTheWireSpec) {
    ExternalOperator op("normals", stub("echo"), {"G", "X", "Y", "Z"},
                        {{MapKind::NormalsSpecular, Colorspace::SignedUnit}}, 1);
    EXPECT_EQ(op.name(), "normals");
    EXPECT_EQ(op.input_layout(), (std::vector<std::string>{"G", "X", "Y", "Z"}));
    EXPECT_EQ(op.output_layout(), (std::vector<std::string>{"X", "Y", "Z"}));
    EXPECT_EQ(op.scale(), 1);
}
