#include "vx/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace vx {

const char* method_name(Method m) {
    switch (m) {
        case Method::Sensitivity: return "sensitivity";
        case Method::GuidedBackprop: return "guided";
        case Method::Occlusion: return "occlusion";
        case Method::RegionOcclusion: return "region-occlusion";
        case Method::Lrp: return "lrp";
    }
    fail("method: bad enum value");
}

Method parse_method(std::string_view name) {
    if (name == "sensitivity") return Method::Sensitivity;
    if (name == "guided") return Method::GuidedBackprop;
    if (name == "occlusion") return Method::Occlusion;
    if (name == "region-occlusion") return Method::RegionOcclusion;
    if (name == "lrp") return Method::Lrp;
    fail("method: unknown method '" + std::string(name) +
         "' (expected sensitivity, guided, occlusion, region-occlusion, or lrp)");
}

Atlas make_atlas(const Tensor& labels, std::map<int32_t, std::string> names) {
    if (labels.rank() != 3)
        fail("atlas: labels have rank " + std::to_string(labels.rank()) + ", expected 3");
    Atlas atlas;
    atlas.shape = {labels.extent(0), labels.extent(1), labels.extent(2)};
    atlas.labels.resize(labels.numel());
    std::set<int32_t> present;
    for (size_t i = 0; i < labels.numel(); ++i) {
        const double v = labels[i];
        if (!(v >= 0.0) || v != std::floor(v) || v > 2147483647.0)
            fail("atlas: voxel " + std::to_string(i) + " has non-integer or negative label");
        atlas.labels[i] = static_cast<int32_t>(v);
        if (atlas.labels[i] != 0) present.insert(atlas.labels[i]);
    }
    if (present.empty()) fail("atlas: no non-background voxels");
    for (int32_t label : present)
        if (names.find(label) == names.end())
            fail("atlas: label " + std::to_string(label) + " has no name");
    std::set<std::string> seen;
    for (const auto& [label, name] : names) {
        if (label <= 0) fail("atlas: name table entry for reserved label " + std::to_string(label));
        if (name.empty()) fail("atlas: empty region name for label " + std::to_string(label));
        if (!seen.insert(name).second) fail("atlas: duplicate region name '" + name + "'");
    }
    atlas.names = std::move(names);
    return atlas;
}

std::map<int32_t, std::vector<size_t>> region_masks(const Atlas& atlas) {
    std::map<int32_t, std::vector<size_t>> masks;
    for (size_t i = 0; i < atlas.labels.size(); ++i)
        if (atlas.labels[i] != 0) masks[atlas.labels[i]].push_back(i);
    return masks;
}

const char* aggregation_mode_name(AggregationMode m) {
    switch (m) {
        case AggregationMode::Abs: return "abs";
        case AggregationMode::Positive: return "positive";
        case AggregationMode::Signed: return "signed";
    }
    fail("aggregation: bad enum value");
}

AggregationMode parse_aggregation_mode(std::string_view name) {
    if (name == "abs") return AggregationMode::Abs;
    if (name == "positive") return AggregationMode::Positive;
    if (name == "signed") return AggregationMode::Signed;
    fail("aggregation: unknown mode '" + std::string(name) +
         "' (expected abs, positive, or signed)");
}

AggregationMode default_mode_for(Method m) {
    switch (m) {
        case Method::Sensitivity:
        case Method::GuidedBackprop: return AggregationMode::Abs;
        case Method::Occlusion:
        case Method::RegionOcclusion:
        case Method::Lrp: return AggregationMode::Positive;
    }
    fail("aggregation: bad method enum value");
}

RegionReport aggregate_relevance(const AttributionMap& map, const Atlas& atlas,
                                 AggregationMode mode) {
    const std::vector<size_t> want{atlas.shape[0], atlas.shape[1], atlas.shape[2]};
    if (map.values.shape() != want)
        fail("aggregation: map shape " + shape_str(map.values.shape()) +
             " does not match atlas shape " + shape_str(want));
    check_finite(map.values, "aggregation map");

    auto transform = [mode](double v) {
        switch (mode) {
            case AggregationMode::Abs: return std::fabs(v);
            case AggregationMode::Positive: return v > 0.0 ? v : 0.0;
            case AggregationMode::Signed: return v;
        }
        return 0.0;
    };

    std::map<int32_t, double> sums;
    for (const auto& [label, name] : atlas.names) sums[label] = 0.0;
    double total = 0.0;
    for (size_t i = 0; i < atlas.labels.size(); ++i) {
        if (atlas.labels[i] == 0) continue;
        const double v = transform(map.values[i]);
        sums[atlas.labels[i]] += v;
        total += v;
    }

    RegionReport report;
    report.total = total;
    report.method = map.method;
    report.mode = mode;
    report.degenerate = total == 0.0;
    for (const auto& [label, sum] : sums) {
        RegionEntry e;
        e.name = atlas.names.at(label);
        e.sum = sum;
        e.percent = report.degenerate ? 0.0 : sum / total * 100.0;
        report.entries.push_back(std::move(e));
    }
    std::sort(report.entries.begin(), report.entries.end(),
              [](const RegionEntry& a, const RegionEntry& b) {
                  if (a.percent != b.percent) return a.percent > b.percent;
                  return a.name < b.name;
              });
    report.k = report.entries.size();
    return report;
}

RegionReport top_k(const RegionReport& report, size_t k) {
    if (k == 0) fail("aggregation: k must be positive");
    RegionReport out = report;
    if (k < out.entries.size()) out.entries.resize(k);
    out.k = out.entries.size();
    return out;
}

std::string format_percent(double percent) {
    // Half-up at the second decimal, done in integer hundredths so that
    // values like 3.125 round to 3.13 and never re-round through a printf.
    const bool negative = percent < 0.0;
    const double magnitude = negative ? -percent : percent;
    const long long hundredths = static_cast<long long>(std::floor(magnitude * 100.0 + 0.5));
    std::ostringstream out;
    if (negative && hundredths != 0) out << '-';
    out << hundredths / 100 << '.';
    const long long frac = hundredths % 100;
    out << static_cast<char>('0' + frac / 10) << static_cast<char>('0' + frac % 10);
    return out.str();
}

std::string format_report(const RegionReport& report) {
    std::ostringstream out;
    for (const auto& e : report.entries) out << e.name << " (" << format_percent(e.percent) << "%)\n";
    return out.str();
}

}  // namespace vx
