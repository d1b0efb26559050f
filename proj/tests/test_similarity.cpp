#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tvos/similarity.hpp"

using namespace tvos;

namespace {

FeatureGrid single_cell(std::initializer_list<float> values) {
    FeatureGrid g(1, 1, static_cast<int>(values.size()), 8);
    std::copy(values.begin(), values.end(), g.data.begin());
    return g;
}

double row_sum(const std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
}

}  // namespace

TEST_CASE("similarity: pair_affinity hand cases") {
    const float a[2] = {1.f, 0.f};
    const float b[2] = {0.f, 1.f};
    SUBCASE("identical feature, same location") {
        CHECK(pair_affinity(a, a, 2, {0, 0}, {0, 0}, 8.0, 1.0) ==
              doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    }
    SUBCASE("orthogonal features, same location") {
        CHECK(pair_affinity(a, b, 2, {3, 4}, {3, 4}, 8.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("spatial term cancels appearance at one sigma") {
        // ||dloc|| = sigma: exp(1) * exp(-1) = 1.
        CHECK(pair_affinity(a, a, 2, {0, 0}, {5, 0}, 5.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("similarity: single reference cell takes all the weight") {
    const FeatureGrid target = single_cell({1.f, 0.f});
    const FeatureGrid ref = single_cell({0.f, 1.f});
    std::vector<ReferenceFrameView> refs = {{&ref, SigmaClass::local}};
    std::vector<double> w;
    row_weights(target, 0, 0, refs, SpatialParams{}, w);
    REQUIRE(w.size() == 1);
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("similarity: two equal references split evenly") {
    const FeatureGrid target = single_cell({1.f, 0.f});
    const FeatureGrid ref = single_cell({1.f, 0.f});
    std::vector<ReferenceFrameView> refs = {{&ref, SigmaClass::local}, {&ref, SigmaClass::local}};
    std::vector<double> w;
    row_weights(target, 0, 0, refs, SpatialParams{}, w);
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("similarity: ln 2 logit gap gives a 2:1 split") {
    // Two single-cell reference frames at the target's own location, so the
    // spatial terms cancel; appearance logits differ by ln 2 after the
    // temperature divisor.
    const double gap = std::log(2.0);
    const FeatureGrid target = single_cell({1.f, 0.f});
    const FeatureGrid near = single_cell({static_cast<float>(gap), static_cast<float>(std::sqrt(1.0 - gap * gap))});
    const FeatureGrid far = single_cell({0.f, 1.f});
    std::vector<ReferenceFrameView> refs = {{&near, SigmaClass::local}, {&far, SigmaClass::local}};
    SpatialParams p;
    p.temperature = 1.0;
    std::vector<double> w;
    row_weights(target, 0, 0, refs, p, w);
    CHECK(w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("similarity: rows are simplex-valid and shift-invariant") {
    std::mt19937 rng(5);
    const FeatureGrid target = oracles::random_unit_grid(4, 5, 8, 8, rng);
    const FeatureGrid ref_a = oracles::random_unit_grid(4, 5, 8, 8, rng);
    const FeatureGrid ref_b = oracles::random_unit_grid(4, 5, 8, 8, rng);
    std::vector<ReferenceFrameView> refs = {{&ref_a, SigmaClass::local}, {&ref_b, SigmaClass::distant}};
    SpatialParams p;

    const RowWeights rows = similarity_rows(target, refs, p);
    for (int ty = 0; ty < 4; ++ty) {
        for (int tx = 0; tx < 5; ++tx) {
            const double* row = rows.row(ty, tx);
            double sum = 0.0;
            for (size_t j = 0; j < rows.reference_cells; ++j) {
                CHECK(row[j] >= 0.0);
                sum += row[j];
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }

    // Shift invariance: adding a common constant to every logit of a row must
    // not move the weights. Recompute the row by hand with a large shift and
    // compare against the engine's max-subtracted path.
    std::vector<double> engine;
    row_weights(target, 2, 2, refs, p, engine);
    std::vector<long double> logits;
    for (const auto& r : refs) {
        const FeatureGrid& g = *r.features;
        const double sigma = p.sigma_for(r.sigma_class, target.stride);
        for (int y = 0; y < g.h; ++y) {
            for (int x = 0; x < g.w; ++x) {
                long double dot = 0.0L;
                for (int k = 0; k < g.c; ++k)
                    dot += static_cast<long double>(target.cell(2, 2)[k]) * g.cell(y, x)[k];
                const long double d2 = (2.0L - x) * (2.0L - x) + (2.0L - y) * (2.0L - y);
                logits.push_back(dot / p.temperature - d2 / (sigma * sigma) + 500.0L);
            }
        }
    }
    const long double mx = *std::max_element(logits.begin(), logits.end());
    long double denom = 0.0L;
    for (long double& v : logits) {
        v = std::exp(v - mx);
        denom += v;
    }
    for (size_t j = 0; j < logits.size(); ++j)
        CHECK(engine[j] == doctest::Approx(static_cast<double>(logits[j] / denom)).epsilon(1e-9));

    // And repeat evaluation is bit-identical (fixed summation order).
    std::vector<double> again;
    row_weights(target, 2, 2, refs, p, again);
    CHECK(engine == again);
}

TEST_CASE("similarity: no overflow for extreme temperature") {
    std::mt19937 rng(6);
    const FeatureGrid target = oracles::random_unit_grid(3, 3, 4, 8, rng);
    const FeatureGrid ref = oracles::random_unit_grid(3, 3, 4, 8, rng);
    std::vector<ReferenceFrameView> refs = {{&ref, SigmaClass::local}};
    SpatialParams p;
    p.temperature = 1e-4;  // raw exp would overflow any float width
    std::vector<double> w;
    row_weights(target, 1, 1, refs, p, w);
    CHECK(row_sum(w) == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : w) CHECK(std::isfinite(v));
}

TEST_CASE("similarity: moving a reference cell farther strictly lowers its weight") {
    // Equal appearance everywhere, so weights are a pure function of distance.
    FeatureGrid target(1, 5, 2, 8);
    FeatureGrid ref(1, 5, 2, 8);
    for (int x = 0; x < 5; ++x) {
        target.cell(0, x)[0] = 1.f;
        ref.cell(0, x)[0] = 1.f;
    }
    std::vector<ReferenceFrameView> refs = {{&ref, SigmaClass::local}};
    SpatialParams p;
    p.sigma_local = 2.0;
    std::vector<double> w;
    row_weights(target, 0, 0, refs, p, w);
    for (int x = 1; x < 5; ++x) CHECK(w[x] < w[x - 1]);
}

TEST_CASE("similarity: distant sigma weighs an off-center reference higher") {
    // One reference frame, two relevant cells: co-located and one cell away.
    FeatureGrid target(1, 2, 2, 8);
    target.cell(0, 0)[0] = 1.f;
    target.cell(0, 1)[0] = 1.f;
    FeatureGrid ref = target;
    std::vector<ReferenceFrameView> local = {{&ref, SigmaClass::local}};
    std::vector<ReferenceFrameView> distant = {{&ref, SigmaClass::distant}};
    std::vector<double> w_local, w_distant;
    row_weights(target, 0, 0, local, SpatialParams{}, w_local);
    row_weights(target, 0, 0, distant, SpatialParams{}, w_distant);
    CHECK(w_distant[1] >= w_local[1]);
}

TEST_CASE("similarity: window truncation") {
    std::mt19937 rng(15);
    const FeatureGrid target = oracles::random_unit_grid(12, 12, 6, 8, rng);
    const FeatureGrid ref_a = oracles::random_unit_grid(12, 12, 6, 8, rng);
    const FeatureGrid ref_b = oracles::random_unit_grid(12, 12, 6, 8, rng);
    std::vector<ReferenceFrameView> refs = {{&ref_a, SigmaClass::local}, {&ref_b, SigmaClass::local}};

    SUBCASE("radius covering the grid diameter changes nothing") {
        SpatialParams p;
        p.sigma_local = 2.0;
        p.window_radius = 64;
        CHECK(truncated_equivalence_check(target, refs, p) == doctest::Approx(0.0));
    }

    SUBCASE("radius of 4 sigma keeps the discrepancy tiny") {
        SpatialParams p;
        p.sigma_local = 2.0;
        p.temperature = 1.0;
        p.window_radius = 8;
        CHECK(truncated_equivalence_check(target, refs, p) < 1e-3);
    }

    SUBCASE("radius 0 on a crafted two-frame input is visibly lossy") {
        SpatialParams p;
        p.sigma_local = 4.0;
        p.window_radius = 0;
        CHECK(truncated_equivalence_check(target, refs, p) > 0.0);
    }
}

TEST_CASE("similarity: empty reference set is an error") {
    const FeatureGrid target = single_cell({1.f, 0.f});
    std::vector<double> w;
    std::vector<ReferenceFrameView> refs;
    CHECK_THROWS_AS(row_weights(target, 0, 0, refs, SpatialParams{}, w), std::invalid_argument);
}

TEST_CASE("similarity: channel mismatch is an error") {
    const FeatureGrid target = single_cell({1.f, 0.f});
    const FeatureGrid ref = single_cell({1.f, 0.f, 0.f});
    std::vector<ReferenceFrameView> refs = {{&ref, SigmaClass::local}};
    std::vector<double> w;
    CHECK_THROWS_AS(row_weights(target, 0, 0, refs, SpatialParams{}, w), std::invalid_argument);
}
