#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "medit/similarity.hpp"

using namespace medit;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Eigen::MatrixXd col(std::initializer_list<double> v) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index i = 0;
    for (double x : v) out(i++, 0) = x;
    return out;
}

}  // namespace

TEST_CASE("raw similarity: identical motions give zeros") {
    Rng rng(11);
    const Eigen::MatrixXd m = testing::random_matrix(rng, 9, 4);
    for (int w : {0, 1, 3}) {
        const Eigen::VectorXd s = raw_similarity(m, m, w);
        CHECK(s == Eigen::VectorXd::Zero(9));
    }
}

TEST_CASE("raw similarity: window zero compares frames pairwise") {
    const Eigen::VectorXd s = raw_similarity(col({0, 0, 0}), col({0, 1, 0}), 0);
    CHECK(s == vec({0, -1, 0}));
}

TEST_CASE("raw similarity: window one finds shifted matches") {
    const Eigen::VectorXd s = raw_similarity(col({0, 1, 2, 3}), col({1, 2, 3, 4}), 1);
    CHECK(s == vec({-1, 0, 0, 0}));
}

TEST_CASE("raw similarity rejects bad input") {
    CHECK_THROWS_AS(raw_similarity(col({0}), Eigen::MatrixXd(0, 1), 1), InputError);
    CHECK_THROWS_AS(raw_similarity(col({0}), testing::random_matrix(*(new Rng(0)), 2, 2), 1),
                    InputError);
    CHECK_THROWS_AS(raw_similarity(col({0}), col({0}), 0, "chebyshev"), InputError);
}

TEST_CASE("oracle equivalence on 200 random instances") {
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        const int f_src = 1 + rng.uniform_int(12);
        const int f_tgt = 1 + rng.uniform_int(12);
        const int d = 1 + rng.uniform_int(4);
        const int w = rng.uniform_int(4);
        const Eigen::MatrixXd src = testing::random_matrix(rng, f_src, d);
        const Eigen::MatrixXd tgt = testing::random_matrix(rng, f_tgt, d);
        REQUIRE(raw_similarity(src, tgt, w) == testing::brute_force_raw_similarity(src, tgt, w));
    }
}

TEST_CASE("window monotonicity: larger windows never decrease similarity") {
    Rng rng(13);
    for (int i = 0; i < 50; ++i) {
        const Eigen::MatrixXd src = testing::random_matrix(rng, 10, 3);
        const Eigen::MatrixXd tgt = testing::random_matrix(rng, 8, 3);
        Eigen::VectorXd prev = raw_similarity(src, tgt, 0);
        for (int w = 1; w <= 4; ++w) {
            const Eigen::VectorXd cur = raw_similarity(src, tgt, w);
            REQUIRE((cur.array() >= prev.array()).all());
            prev = cur;
        }
    }
}

TEST_CASE("combine weights the two raw curves") {
    CHECK(combine(vec({-1, 0}), vec({0, -2}), 0.5, 0.5) == vec({-0.5, -1.0}));
    const Eigen::VectorXd rot = vec({-1, -2, -3});
    CHECK(combine(rot, vec({-9, -9, -9}), 1.0, 0.0) == rot);
    CHECK_THROWS_AS(combine(rot, vec({-1, -1}), 0.5, 0.5), InputError);
    CHECK_THROWS_AS(combine(rot, rot, 0.0, 0.0), InputError);
}

TEST_CASE("min-max normalization matches direct evaluation") {
    CHECK(min_max_normalize(vec({-2, -1, 0})) == vec({0, 0.5, 1}));
    CHECK(min_max_normalize(vec({0, -4, -1})) == vec({1, 0, 0.75}));
    CHECK(min_max_normalize(vec({-3, -3, -3})) == vec({1, 1, 1}));  // degenerate: all ones
    Eigen::VectorXd bad = vec({0, 1});
    bad[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(min_max_normalize(bad), InputError);

    Rng rng(14);
    for (int i = 0; i < 100; ++i) {
        const Eigen::VectorXd v = -testing::random_matrix(rng, 1 + rng.uniform_int(20), 1)
                                       .cwiseAbs()
                                       .col(0);
        const Eigen::VectorXd got = min_max_normalize(v);
        const Eigen::VectorXd want = testing::brute_force_normalize(v);
        REQUIRE((got - want).cwiseAbs().maxCoeff() <= 1e-12);
        REQUIRE(got.minCoeff() >= 0.0);
        REQUIRE(got.maxCoeff() <= 1.0);
    }
}

TEST_CASE("normalization invariances: positive scaling and shifts") {
    Rng rng(15);
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd v = testing::random_matrix(rng, 2 + rng.uniform_int(12), 1).col(0);
        const double c = 0.1 + 5.0 * rng.uniform();
        const double shift = 3.0 * (rng.uniform() - 0.5);
        const Eigen::VectorXd base = min_max_normalize(v);
        const Eigen::VectorXd scaled = min_max_normalize(c * v);
        const Eigen::VectorXd shifted = min_max_normalize(v.array() + shift);
        REQUIRE((base - scaled).cwiseAbs().maxCoeff() <= 1e-12);
        REQUIRE((base - shifted).cwiseAbs().maxCoeff() <= 1e-9);
        REQUIRE(quantize(base, 3) == quantize(scaled, 3));
    }
}

TEST_CASE("motion snr: ideal pair is infinite") {
    // d = [0,0,0,5,5,0,0,0] stored as negated similarities
    const double snr = motion_snr(vec({0, 0, 0, -5, -5, 0, 0, 0}), 2);
    CHECK(std::isinf(snr));
}

TEST_CASE("motion snr: uniform dissimilarity is exactly one") {
    CHECK(motion_snr(vec({-3, -3, -3, -3, -3, -3}), 2) == 1.0);
    CHECK(motion_snr(vec({0, 0, 0, 0}), 2) == 1.0);  // both sums zero
}

TEST_CASE("motion snr: direct evaluation") {
    CHECK(motion_snr(vec({-1, -2, -3, -4, -5, -6}), 2) == doctest::Approx(11.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("motion snr: kappa clamps to keep the sets disjoint") {
    // F = 4 with kappa 5 -> clamped to 2: (4+3)/(1+2)
    CHECK(motion_snr(vec({-1, -2, -3, -4}), 5) == doctest::Approx(7.0 / 3.0).epsilon(1e-12));
    CHECK(motion_snr(vec({-2}), 5) == 1.0);  // single frame: top == bottom
    CHECK_THROWS_AS(motion_snr(vec({-1}), 0), InputError);
}

TEST_CASE("motion snr monotonicity in the largest dissimilarity") {
    Rng rng(16);
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd d = testing::random_matrix(rng, 12, 1).cwiseAbs().col(0);
        d.array() += 0.01;  // strictly positive
        Eigen::Index arg = 0;
        d.maxCoeff(&arg);
        const double before = motion_snr(-d, 3);
        d[arg] += 1.0 + rng.uniform();
        const double after = motion_snr(-d, 3);
        REQUIRE(after >= before);
    }
}

TEST_CASE("quantize: boundaries and direct evaluation") {
    CHECK(quantize(vec({0.0, 0.5, 1.0}), 3) == std::vector<int>{0, 1, 2});
    CHECK(quantize(vec({1.0 / 3.0}), 3) == std::vector<int>{1});  // lower-closed intervals
    CHECK(quantize(vec({0.05, 0.25, 0.45, 0.65, 0.99}), 5) == std::vector<int>{0, 1, 2, 3, 4});
    CHECK_THROWS_AS(quantize(vec({1.2}), 3), InputError);
    CHECK_THROWS_AS(quantize(vec({0.5}), 1), InputError);

    Rng rng(17);
    for (int i = 0; i < 100; ++i) {
        const int k = 2 + rng.uniform_int(8);
        Eigen::VectorXd v(10);
        for (int j = 0; j < 10; ++j) v[j] = rng.uniform();
        REQUIRE(quantize(v, k) == testing::brute_force_quantize(v, k));
    }
}

TEST_CASE("quantize of normalize is idempotent on labels") {
    Rng rng(18);
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd v = testing::random_matrix(rng, 3 + rng.uniform_int(10), 1).col(0);
        const Eigen::VectorXd n1 = min_max_normalize(v);
        const Eigen::VectorXd n2 = min_max_normalize(n1);
        REQUIRE(quantize(n1, 3) == quantize(n2, 3));
    }
}

TEST_CASE("filter_dataset: threshold comparisons and errors") {
    DatasetManifest m;
    m.split = "train";
    m.entries = {ManifestEntry{"a", "a.json", std::nullopt, true},
                 ManifestEntry{"b", "b.json", std::nullopt, true},
                 ManifestEntry{"c", "c.json", std::nullopt, true}};
    std::map<std::string, SimilarityCurve> curves;
    curves["a"].snr = std::numeric_limits<double>::infinity();
    curves["b"].snr = 1.0;
    curves["c"].snr = 3.0;

    const DatasetManifest filtered = filter_dataset(m, curves, 2.0);
    CHECK(filtered.entries[0].included);
    CHECK_FALSE(filtered.entries[1].included);
    CHECK(filtered.entries[2].included);
    CHECK(filtered.snr_threshold == 2.0);
    CHECK(filtered.entries[0].id == "a");  // ordering preserved

    const DatasetManifest vacuous = filter_dataset(m, curves, 0.0);
    for (const auto& e : vacuous.entries) CHECK(e.included);

    curves.erase("b");
    CHECK_THROWS_AS(filter_dataset(m, curves, 2.0), ConsistencyError);
}

TEST_CASE("build_curve: identity edit is maximally similar everywhere") {
    Rng rng(19);
    EditTriplet t = testing::random_triplet(rng, 10, 10, FeatureLayout::compact());
    t.target = t.source;
    SimilarityConfig cfg;
    const SimilarityCurve c = build_curve(t, cfg);
    CHECK(c.normalized == Eigen::VectorXd::Ones(10));
    CHECK(c.labels == std::vector<int>(10, cfg.classes - 1));
    CHECK(c.snr == 1.0);
}

TEST_CASE("build_curve: perturbed sub-window gets the lowest labels") {
    Rng rng(20);
    EditTriplet t = testing::random_triplet(rng, 24, 24, FeatureLayout::compact());
    t.target = t.source;
    // strong perturbation on frames 8..13
    for (int i = 8; i < 14; ++i) t.target.frames.row(i).array() += 25.0;
    SimilarityConfig cfg;
    const SimilarityCurve c = build_curve(t, cfg);
    for (int i = 0; i < 24; ++i) {
        const bool near_window = i >= 8 - cfg.window && i < 14 + cfg.window;
        if (!near_window) REQUIRE(c.labels[static_cast<std::size_t>(i)] == cfg.classes - 1);
    }
    for (int i = 8 + cfg.window; i < 14 - cfg.window; ++i)
        REQUIRE(c.labels[static_cast<std::size_t>(i)] == 0);
    CHECK(std::isinf(c.snr));
}

TEST_CASE("build_curve: mismatched lengths clamp to valid target frames") {
    Rng rng(21);
    const int f = 12;
    EditTriplet t = testing::random_triplet(rng, f, f - 3, FeatureLayout::compact());
    SimilarityConfig cfg;
    const SimilarityCurve c = build_curve(t, cfg);
    REQUIRE(c.combined.size() == f);

    const Eigen::VectorXd rot = testing::brute_force_raw_similarity(
        slice_block(t.source, Block::kRotation), slice_block(t.target, Block::kRotation),
        cfg.window);
    const Eigen::VectorXd loc = testing::brute_force_raw_similarity(
        slice_block(t.source, Block::kPosition), slice_block(t.target, Block::kPosition),
        cfg.window);
    const Eigen::VectorXd combined = cfg.w_rotation * rot + cfg.w_location * loc;
    CHECK(c.raw_rotation == rot);
    CHECK(c.raw_location == loc);
    CHECK((c.combined - combined).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(c.labels == testing::brute_force_quantize(testing::brute_force_normalize(combined),
                                                    cfg.classes));
}

TEST_CASE("build_curve: missing rotation or position block is a configuration error") {
    Rng rng(22);
    EditTriplet t = testing::random_triplet(rng, 8, 8, FeatureLayout{3, 0, 6, 0});
    CHECK_THROWS_AS(build_curve(t, SimilarityConfig{}), ConfigError);
}

TEST_CASE("curve invariants hold on random triplets") {
    Rng rng(23);
    SimilarityConfig cfg;
    for (int i = 0; i < 25; ++i) {
        EditTriplet t = testing::random_triplet(rng, 4 + rng.uniform_int(10),
                                                4 + rng.uniform_int(10), FeatureLayout::compact());
        const SimilarityCurve c = build_curve(t, cfg);
        REQUIRE((c.raw_rotation.array() <= 0.0).all());
        REQUIRE((c.raw_location.array() <= 0.0).all());
        REQUIRE(c.normalized.minCoeff() >= 0.0);
        REQUIRE(c.normalized.maxCoeff() <= 1.0);
        REQUIRE(c.snr >= 0.0);
        REQUIRE(c.labels == quantize(c.normalized, cfg.classes));
        if ((c.combined.array() != c.combined[0]).any()) {
            REQUIRE(c.normalized.minCoeff() == 0.0);
            REQUIRE(c.normalized.maxCoeff() == 1.0);
        }
    }
}
