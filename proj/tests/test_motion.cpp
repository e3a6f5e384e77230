#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "helpers.hpp"
#include "medit/motion.hpp"
#include "medit/motion_io.hpp"

using namespace medit;
using medit::testing::TempDir;

TEST_CASE("feature layout offsets and sizes") {
    const FeatureLayout layout{3, 6, 126, 72};
    CHECK(layout.total() == 207);
    CHECK(layout.offset(Block::kVelocity) == 0);
    CHECK(layout.offset(Block::kOrientation) == 3);
    CHECK(layout.offset(Block::kRotation) == 9);
    CHECK(layout.offset(Block::kPosition) == 135);
    CHECK(layout.size(Block::kRotation) == 126);
}

TEST_CASE("slice_block returns the contiguous block columns") {
    const FeatureLayout layout{3, 6, 126, 72};
    Rng rng(1);
    MotionSequence seq = testing::random_motion(rng, 5, layout);

    const Eigen::MatrixXd rot = slice_block(seq, Block::kRotation);
    CHECK(rot.cols() == 126);
    CHECK(rot == seq.frames.middleCols(9, 126));  // columns 9..134

    const Eigen::MatrixXd vel = slice_block(seq, Block::kVelocity);
    CHECK(vel == seq.frames.middleCols(0, 3));  // columns 0..2
}

TEST_CASE("slice_block on an empty block is a configuration error") {
    FeatureLayout layout{3, 6, 126, 0};
    Rng rng(2);
    MotionSequence seq = testing::random_motion(rng, 4, layout);
    CHECK_THROWS_AS(slice_block(seq, Block::kPosition), ConfigError);
}

TEST_CASE("layout closure: concatenated slices reconstruct the frames") {
    const FeatureLayout layout{2, 3, 4, 5};
    Rng rng(3);
    MotionSequence seq = testing::random_motion(rng, 7, layout);
    Eigen::MatrixXd rebuilt(seq.frames.rows(), seq.frames.cols());
    rebuilt << slice_block(seq, Block::kVelocity), slice_block(seq, Block::kOrientation),
        slice_block(seq, Block::kRotation), slice_block(seq, Block::kPosition);
    CHECK(rebuilt == seq.frames);
}

TEST_CASE("triplet save/load round trip") {
    TempDir dir("motion_roundtrip");
    const FeatureLayout layout{3, 6, 126, 72};
    Rng rng(4);
    EditTriplet t = testing::random_triplet(rng, 30, 30, layout);

    const std::string path = dir.file("t.json");
    save_triplet(t, path);
    const EditTriplet back = load_triplet(path, layout);

    CHECK(back.source.frames.rows() == 30);
    CHECK(back.source.frames.cols() == 207);
    CHECK(back.source.frames == t.source.frames);
    CHECK(back.target.frames == t.target.frames);
    CHECK(back.id == t.id);
    CHECK(back.instruction == t.instruction);
    CHECK_FALSE(back.edit_mask.has_value());
}

TEST_CASE("edit mask survives the round trip") {
    TempDir dir("motion_mask");
    Rng rng(5);
    EditTriplet t = testing::random_triplet(rng, 6, 9, FeatureLayout::compact(), true);
    save_triplet(t, dir.file("t.json"));
    const EditTriplet back = load_triplet(dir.file("t.json"));
    REQUIRE(back.edit_mask.has_value());
    CHECK(*back.edit_mask == *t.edit_mask);
}

TEST_CASE("row width mismatch against the layout is a layout error") {
    TempDir dir("motion_badrow");
    const std::string path = dir.file("bad.json");
    {
        std::ofstream out(path);
        out << R"({"id":"x","instruction":"do","frame_rate":30.0,)"
            << R"("layout":{"v":1,"o":0,"r":1,"p":1},)"
            << R"("source":[[0.0,0.0]],"target":[[0.0,0.0,0.0]]})";
    }
    CHECK_THROWS_AS(load_triplet(path), LayoutError);
}

TEST_CASE("missing instruction field is a format error") {
    TempDir dir("motion_noinstr");
    const std::string path = dir.file("bad.json");
    {
        std::ofstream out(path);
        out << R"({"id":"x","frame_rate":30.0,"layout":{"v":1,"o":0,"r":1,"p":1},)"
            << R"("source":[[0.0,0.0,0.0]],"target":[[0.0,0.0,0.0]]})";
    }
    CHECK_THROWS_AS(load_triplet(path), FormatError);
}

TEST_CASE("non-finite values are rejected before writing") {
    TempDir dir("motion_nonfinite");
    Rng rng(6);
    EditTriplet t = testing::random_triplet(rng, 4, 4, FeatureLayout::compact());
    t.target.frames(2, 3) = std::numeric_limits<double>::quiet_NaN();
    const std::string path = dir.file("t.json");
    CHECK_THROWS_AS(save_triplet(t, path), InputError);
    CHECK_FALSE(std::filesystem::exists(path));
}

TEST_CASE("layout mismatch on load with expected layout") {
    TempDir dir("motion_layoutmismatch");
    Rng rng(7);
    EditTriplet t = testing::random_triplet(rng, 4, 4, FeatureLayout::compact());
    save_triplet(t, dir.file("t.json"));
    CHECK_THROWS_AS(load_triplet(dir.file("t.json"), FeatureLayout{3, 6, 126, 72}), LayoutError);
}

TEST_CASE("unwritable path raises an io error") {
    Rng rng(8);
    EditTriplet t = testing::random_triplet(rng, 4, 4, FeatureLayout::compact());
    CHECK_THROWS_AS(save_triplet(t, "/nonexistent_dir_medit/t.json"), IoError);
}

TEST_CASE("round-trip property: 100 randomized triplets, byte-identical resave") {
    TempDir dir("motion_property");
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        const int fs = 1 + rng.uniform_int(12);
        const int ft = 1 + rng.uniform_int(12);
        FeatureLayout layout{1 + rng.uniform_int(3), rng.uniform_int(3), 1 + rng.uniform_int(4),
                             1 + rng.uniform_int(4)};
        EditTriplet t = testing::random_triplet(rng, fs, ft, layout, rng.uniform() < 0.5);
        const std::string p1 = dir.file("a.json");
        const std::string p2 = dir.file("b.json");
        save_triplet(t, p1);
        save_triplet(load_triplet(p1), p2);
        REQUIRE(testing::read_file(p1) == testing::read_file(p2));
    }
}

TEST_CASE("manifest round trip with infinite snr and threshold consistency") {
    TempDir dir("manifest_rt");
    DatasetManifest m;
    m.split = "train";
    m.snr_threshold = 2.0;
    m.config_hash = "cafe";
    m.entries = {ManifestEntry{"a", "a.json", std::numeric_limits<double>::infinity(), true},
                 ManifestEntry{"b", "b.json", 1.5, false},
                 ManifestEntry{"c", "c.json", std::nullopt, true}};
    save_manifest(m, dir.file("m.jsonl"));
    const DatasetManifest back = load_manifest(dir.file("m.jsonl"));
    REQUIRE(back.entries.size() == 3);
    CHECK(std::isinf(*back.entries[0].snr));
    CHECK(*back.entries[1].snr == 1.5);
    CHECK_FALSE(back.entries[1].included);
    CHECK_FALSE(back.entries[2].snr.has_value());
    CHECK(back.config_hash == "cafe");

    // inconsistent inclusion flag rejected
    m.entries[1].included = true;
    CHECK_THROWS_AS(save_manifest(m, dir.file("bad.jsonl")), ConsistencyError);

    // duplicate ids rejected
    m.entries[1].included = false;
    m.entries[2].id = "a";
    CHECK_THROWS_AS(save_manifest(m, dir.file("bad.jsonl")), ConsistencyError);
}

TEST_CASE("bare motion files round trip") {
    TempDir dir("motion_bare");
    Rng rng(10);
    MotionSequence m = testing::random_motion(rng, 8, FeatureLayout::compact());
    save_motion(m, dir.file("m.json"), "beef");
    const MotionSequence back = load_motion(dir.file("m.json"));
    CHECK(back.frames == m.frames);
    CHECK_FALSE(is_triplet_file(dir.file("m.json")));
}
