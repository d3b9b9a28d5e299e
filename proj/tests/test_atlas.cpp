#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "common/oracles.hpp"
#include "vx/atlas.hpp"
#include "vx/rng.hpp"

using namespace vx;

namespace {

std::string thrown_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::runtime_error& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

Tensor label_tensor(std::vector<size_t> shape, const std::vector<int32_t>& labels) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < labels.size(); ++i) t[i] = labels[i];
    return t;
}

AttributionMap map_of(Tensor values, Method method = Method::Sensitivity) {
    AttributionMap m;
    m.values = std::move(values);
    m.method = method;
    return m;
}

// Two-region atlas over a 2x2x2 volume: label 1 on the first half of the
// voxels, label 2 on the rest.
Atlas half_and_half(const std::string& first = "A", const std::string& second = "B") {
    std::vector<int32_t> labels(8, 1);
    for (size_t i = 4; i < 8; ++i) labels[i] = 2;
    return make_atlas(label_tensor({2, 2, 2}, labels), {{1, first}, {2, second}});
}

const RegionEntry& entry_named(const RegionReport& report, const std::string& name) {
    for (const auto& e : report.entries)
        if (e.name == name) return e;
    REQUIRE(false);
    return report.entries.front();
}

}  // namespace

TEST_CASE("region masks partition the non-background voxels") {
    // Labels cycle 0,1,2,3 so every region and the background interleave.
    std::vector<int32_t> labels(3 * 4 * 5);
    for (size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int32_t>(i % 4);
    Atlas atlas = make_atlas(label_tensor({3, 4, 5}, labels),
                             {{1, "One"}, {2, "Two"}, {3, "Three"}});
    auto masks = region_masks(atlas);
    REQUIRE(masks.size() == 3);

    // Per-voxel scan oracle.
    for (const auto& [label, voxels] : masks) {
        std::vector<size_t> expect;
        for (size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) expect.push_back(i);
        CHECK(voxels == expect);
        CHECK(std::is_sorted(voxels.begin(), voxels.end()));
    }

    // Disjoint union equals all non-background indices.
    std::vector<size_t> all;
    for (const auto& [label, voxels] : masks) all.insert(all.end(), voxels.begin(), voxels.end());
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    CHECK(all.size() == labels.size() - labels.size() / 4);
}

TEST_CASE("make_atlas rejects malformed label volumes") {
    CHECK(contains(thrown_message([] { make_atlas(Tensor::zeros({2, 2}), {}); }),
                   "rank 2, expected 3"));

    Tensor frac = Tensor::zeros({1, 1, 2});
    frac[0] = 1.0;
    frac[1] = 0.5;
    CHECK(contains(thrown_message([&] { make_atlas(frac, {{1, "A"}}); }),
                   "voxel 1 has non-integer or negative label"));

    Tensor neg = Tensor::zeros({1, 1, 2});
    neg[0] = -1.0;
    CHECK(contains(thrown_message([&] { make_atlas(neg, {{1, "A"}}); }),
                   "voxel 0 has non-integer or negative label"));

    CHECK(contains(thrown_message([] { make_atlas(Tensor::zeros({2, 2, 2}), {{1, "A"}}); }),
                   "no non-background voxels"));

    Tensor two = Tensor::full({1, 1, 2}, 2.0);
    CHECK(contains(thrown_message([&] { make_atlas(two, {{1, "A"}}); }), "label 2 has no name"));
    CHECK(contains(thrown_message([&] { make_atlas(two, {{2, "A"}, {0, "Bg"}}); }),
                   "reserved label 0"));
    CHECK(contains(thrown_message([&] { make_atlas(two, {{2, ""}}); }), "empty region name"));
    Tensor one_two = label_tensor({1, 1, 2}, {1, 2});
    CHECK(contains(thrown_message([&] { make_atlas(one_two, {{1, "A"}, {2, "A"}}); }),
                   "duplicate region name 'A'"));
}

TEST_CASE("two equal regions split the mass 50/50") {
    Atlas atlas = half_and_half();
    RegionReport report = aggregate_relevance(map_of(Tensor::full({2, 2, 2}, 1.0)), atlas,
                                              AggregationMode::Abs);
    REQUIRE(report.entries.size() == 2);
    CHECK(report.total == doctest::Approx(8.0));
    CHECK(!report.degenerate);
    // Equal percentages tie; names break the tie ascending.
    CHECK(report.entries[0].name == "A");
    CHECK(report.entries[1].name == "B");
    for (const auto& e : report.entries) {
        CHECK(e.sum == doctest::Approx(4.0));
        CHECK(e.percent == doctest::Approx(50.0));
    }
    CHECK(format_report(report) == "A (50.00%)\nB (50.00%)\n");
}

TEST_CASE("mass confined to one region yields 100 percent") {
    Atlas atlas = half_and_half();
    Tensor values = Tensor::zeros({2, 2, 2});
    values[1] = 2.5;
    values[2] = 0.5;
    RegionReport report = aggregate_relevance(map_of(values), atlas, AggregationMode::Abs);
    CHECK(entry_named(report, "A").percent == doctest::Approx(100.0));
    CHECK(entry_named(report, "B").percent == doctest::Approx(0.0));
    CHECK(report.entries[0].name == "A");
    CHECK(format_report(top_k(report, 1)) == "A (100.00%)\n");
}

TEST_CASE("aggregation modes transform voxel values as documented") {
    Atlas atlas = half_and_half();
    Tensor values = Tensor::zeros({2, 2, 2});
    // Region A holds -3 and +1, region B holds +2.
    values[0] = -3.0;
    values[1] = 1.0;
    values[5] = 2.0;

    RegionReport abs_report = aggregate_relevance(map_of(values), atlas, AggregationMode::Abs);
    CHECK(entry_named(abs_report, "A").sum == doctest::Approx(4.0));
    CHECK(entry_named(abs_report, "B").sum == doctest::Approx(2.0));

    RegionReport pos_report =
        aggregate_relevance(map_of(values), atlas, AggregationMode::Positive);
    CHECK(entry_named(pos_report, "A").sum == doctest::Approx(1.0));
    CHECK(entry_named(pos_report, "B").sum == doctest::Approx(2.0));
    CHECK(pos_report.entries[0].name == "B");

    RegionReport signed_report =
        aggregate_relevance(map_of(values), atlas, AggregationMode::Signed);
    CHECK(entry_named(signed_report, "A").sum == doctest::Approx(-2.0));
    CHECK(entry_named(signed_report, "B").sum == doctest::Approx(2.0));
    CHECK(signed_report.total == doctest::Approx(0.0));
    // A zero signed total is degenerate by definition.
    CHECK(signed_report.degenerate);
}

TEST_CASE("percentages follow exact region ratios") {
    // Sums 1411 and 8589 out of 10000 give 14.11% on the nose.
    std::vector<int32_t> labels(10000, 1);
    for (size_t i = 1411; i < labels.size(); ++i) labels[i] = 2;
    Atlas atlas = make_atlas(label_tensor({10, 25, 40}, labels),
                             {{1, "Precuneus"}, {2, "Everything else"}});
    RegionReport report = aggregate_relevance(
        map_of(Tensor::full({10, 25, 40}, 1.0)), atlas, AggregationMode::Positive);
    CHECK(entry_named(report, "Precuneus").percent == doctest::Approx(14.11));
    CHECK(format_report(report) == "Everything else (85.89%)\nPrecuneus (14.11%)\n");
}

TEST_CASE("format_percent rounds half up at the second decimal") {
    CHECK(format_percent(3.125) == "3.13");
    CHECK(format_percent(96.875) == "96.88");
    CHECK(format_percent(0.125) == "0.13");
    CHECK(format_percent(0.0) == "0.00");
    CHECK(format_percent(100.0) == "100.00");
    CHECK(format_percent(50.0) == "50.00");
    CHECK(format_percent(-3.125) == "-3.13");
    CHECK(format_percent(-0.001) == "0.00");
    CHECK(format_percent(12.3) == "12.30");

    // The same rounding reached through a report: sums 1 and 31 give
    // 3.125% and 96.875%.
    Atlas atlas = half_and_half("Small", "Large");
    Tensor values = Tensor::zeros({2, 2, 2});
    values[0] = 1.0;
    values[4] = 31.0;
    RegionReport report = aggregate_relevance(map_of(values), atlas, AggregationMode::Positive);
    CHECK(format_report(report) == "Large (96.88%)\nSmall (3.13%)\n");
}

TEST_CASE("top_k truncates the sorted report") {
    Atlas atlas = half_and_half();
    Tensor values = Tensor::zeros({2, 2, 2});
    values[0] = 6.0;
    values[4] = 4.0;
    RegionReport full = aggregate_relevance(map_of(values), atlas, AggregationMode::Positive);
    REQUIRE(full.entries.size() == 2);
    CHECK(full.k == 2);

    RegionReport one = top_k(full, 1);
    REQUIRE(one.entries.size() == 1);
    CHECK(one.k == 1);
    CHECK(one.entries[0].name == "A");
    CHECK(one.entries[0].percent == doctest::Approx(60.0));
    CHECK(one.total == full.total);

    RegionReport plenty = top_k(full, 5);
    CHECK(plenty.entries.size() == 2);
    CHECK(plenty.k == 2);
    CHECK(plenty.entries[0].name == full.entries[0].name);
    CHECK(plenty.entries[1].name == full.entries[1].name);

    CHECK(contains(thrown_message([&] { top_k(full, 0); }), "k must be positive"));
}

TEST_CASE("percentages sum to 100 for every labeling") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor values({4, 4, 4});
        for (size_t i = 0; i < values.numel(); ++i) values[i] = rng.normal(0.0, 1.0);
        std::vector<int32_t> labels(64);
        // Half the trials keep some background voxels.
        const int32_t low = trial % 2;
        for (auto& l : labels) l = static_cast<int32_t>(rng.below(4 - low)) + low;
        bool any = false;
        for (auto& l : labels) any |= l != 0;
        if (!any) labels[0] = 1;
        std::map<int32_t, std::string> names{{1, "One"}, {2, "Two"}, {3, "Three"}};
        Atlas atlas = make_atlas(label_tensor({4, 4, 4}, labels), names);

        for (AggregationMode mode : {AggregationMode::Abs, AggregationMode::Positive}) {
            RegionReport report = aggregate_relevance(map_of(values), atlas, mode);
            if (report.degenerate) continue;
            double pct = 0.0, mass = 0.0;
            for (const auto& e : report.entries) {
                pct += e.percent;
                mass += e.sum;
                CHECK(e.percent >= 0.0);
                CHECK(e.percent <= 100.0 + 1e-9);
            }
            CHECK(pct == doctest::Approx(100.0).epsilon(1e-9));
            CHECK(mass == doctest::Approx(report.total).epsilon(1e-12));
            CHECK(std::is_sorted(report.entries.begin(), report.entries.end(),
                                 [](const RegionEntry& a, const RegionEntry& b) {
                                     return a.percent > b.percent;
                                 }));
        }
    }
}

TEST_CASE("positive rescaling changes no percentage or rank") {
    Rng rng(77);
    Tensor values({4, 4, 4});
    for (size_t i = 0; i < values.numel(); ++i) values[i] = rng.normal(0.0, 1.0);
    std::vector<int32_t> labels(64);
    for (auto& l : labels) l = static_cast<int32_t>(rng.below(4));
    labels[0] = 1;
    Atlas atlas = make_atlas(label_tensor({4, 4, 4}, labels),
                             {{1, "One"}, {2, "Two"}, {3, "Three"}});

    Tensor scaled = values;
    for (size_t i = 0; i < scaled.numel(); ++i) scaled[i] *= 3.7;

    for (AggregationMode mode :
         {AggregationMode::Abs, AggregationMode::Positive, AggregationMode::Signed}) {
        RegionReport base = aggregate_relevance(map_of(values), atlas, mode);
        RegionReport big = aggregate_relevance(map_of(scaled), atlas, mode);
        REQUIRE(base.entries.size() == big.entries.size());
        for (size_t i = 0; i < base.entries.size(); ++i) {
            CHECK(big.entries[i].name == base.entries[i].name);
            CHECK(big.entries[i].percent ==
                  doctest::Approx(base.entries[i].percent).epsilon(1e-12));
        }
        CHECK(format_report(big) == format_report(base));
    }
}

TEST_CASE("nearest-neighbor upsampling preserves percentages") {
    Rng rng(31);
    Tensor values({3, 3, 3});
    for (size_t i = 0; i < values.numel(); ++i) values[i] = rng.uniform(-1.0, 1.0);
    std::vector<int32_t> labels(27);
    for (auto& l : labels) l = static_cast<int32_t>(rng.below(3));
    labels[3] = 1;
    labels[7] = 2;
    Atlas atlas =
        make_atlas(label_tensor({3, 3, 3}, labels), {{1, "One"}, {2, "Two"}});

    // Every voxel becomes a 2x2x2 block in both the map and the atlas.
    Tensor values_up({6, 6, 6});
    Tensor labels_up({6, 6, 6});
    for (size_t z = 0; z < 6; ++z)
        for (size_t y = 0; y < 6; ++y)
            for (size_t x = 0; x < 6; ++x) {
                const size_t src = (z / 2 * 3 + y / 2) * 3 + x / 2;
                const size_t dst = (z * 6 + y) * 6 + x;
                values_up[dst] = values[src];
                labels_up[dst] = labels[src];
            }
    Atlas atlas_up = make_atlas(labels_up, {{1, "One"}, {2, "Two"}});

    for (AggregationMode mode : {AggregationMode::Abs, AggregationMode::Positive}) {
        RegionReport base = aggregate_relevance(map_of(values), atlas, mode);
        RegionReport up = aggregate_relevance(map_of(values_up), atlas_up, mode);
        REQUIRE(base.entries.size() == up.entries.size());
        for (size_t i = 0; i < base.entries.size(); ++i) {
            CHECK(up.entries[i].name == base.entries[i].name);
            CHECK(up.entries[i].sum == doctest::Approx(base.entries[i].sum * 8.0));
            CHECK(up.entries[i].percent ==
                  doctest::Approx(base.entries[i].percent).epsilon(1e-12));
        }
    }
}

TEST_CASE("degenerate totals report all zeros") {
    Atlas atlas = half_and_half();
    RegionReport zero = aggregate_relevance(map_of(Tensor::zeros({2, 2, 2})), atlas,
                                            AggregationMode::Abs);
    CHECK(zero.degenerate);
    for (const auto& e : zero.entries) CHECK(e.percent == 0.0);
    CHECK(format_report(zero) == "A (0.00%)\nB (0.00%)\n");

    // Negative-only mass vanishes under the positive mode.
    RegionReport neg = aggregate_relevance(map_of(Tensor::full({2, 2, 2}, -1.0)), atlas,
                                           AggregationMode::Positive);
    CHECK(neg.degenerate);
    CHECK(neg.total == 0.0);
}

TEST_CASE("every named region appears even with zero mass") {
    std::vector<int32_t> labels(8, 1);
    labels[7] = 2;
    Atlas atlas = make_atlas(label_tensor({2, 2, 2}, labels), {{1, "Big"}, {2, "Tiny"}});
    Tensor values = Tensor::zeros({2, 2, 2});
    values[0] = 5.0;
    RegionReport report = aggregate_relevance(map_of(values), atlas, AggregationMode::Positive);
    REQUIRE(report.entries.size() == 2);
    CHECK(entry_named(report, "Tiny").sum == 0.0);
    CHECK(entry_named(report, "Tiny").percent == 0.0);
}

TEST_CASE("aggregation rejects mismatched shapes and non-finite maps") {
    Atlas atlas = half_and_half();
    CHECK(contains(thrown_message([&] {
                       aggregate_relevance(map_of(Tensor::zeros({2, 2, 3})), atlas,
                                           AggregationMode::Abs);
                   }),
                   "does not match atlas shape"));

    Tensor bad = Tensor::zeros({2, 2, 2});
    bad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK(contains(thrown_message([&] {
                       aggregate_relevance(map_of(bad), atlas, AggregationMode::Abs);
                   }),
                   "non-finite"));
}

TEST_CASE("method and mode names round-trip") {
    for (Method m : {Method::Sensitivity, Method::GuidedBackprop, Method::Occlusion,
                     Method::RegionOcclusion, Method::Lrp})
        CHECK(parse_method(method_name(m)) == m);
    for (AggregationMode m :
         {AggregationMode::Abs, AggregationMode::Positive, AggregationMode::Signed})
        CHECK(parse_aggregation_mode(aggregation_mode_name(m)) == m);

    CHECK(default_mode_for(Method::Sensitivity) == AggregationMode::Abs);
    CHECK(default_mode_for(Method::GuidedBackprop) == AggregationMode::Abs);
    CHECK(default_mode_for(Method::Occlusion) == AggregationMode::Positive);
    CHECK(default_mode_for(Method::RegionOcclusion) == AggregationMode::Positive);
    CHECK(default_mode_for(Method::Lrp) == AggregationMode::Positive);

    CHECK(contains(thrown_message([] { parse_method("saliency"); }), "unknown method"));
    CHECK(contains(thrown_message([] { parse_aggregation_mode("mean"); }), "unknown mode"));
}
