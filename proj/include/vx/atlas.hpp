#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vx/attribution_map.hpp"
#include "vx/tensor.hpp"

namespace vx {

// Integer-labeled partition of a volume into named regions. Label 0 is
// background and never named; every other label appearing in `labels` must
// have a name.
struct Atlas {
    std::array<size_t, 3> shape{};  // (d, h, w)
    std::vector<int32_t> labels;
    std::map<int32_t, std::string> names;

    size_t numel() const { return shape[0] * shape[1] * shape[2]; }
};

// Validates and converts a (d, h, w) tensor whose values must be non-negative
// integers. Throws on fractional or negative labels, unnamed labels,
// duplicate names, or an all-background volume.
Atlas make_atlas(const Tensor& labels, std::map<int32_t, std::string> names);

// label -> ascending voxel indices; background excluded. The masks partition
// the non-background voxels.
std::map<int32_t, std::vector<size_t>> region_masks(const Atlas& atlas);

// How voxel values enter a region sum.
enum class AggregationMode { Abs, Positive, Signed };

const char* aggregation_mode_name(AggregationMode m);
AggregationMode parse_aggregation_mode(std::string_view name);

// Gradient signs carry no class evidence, so gradient methods aggregate
// absolute values; occlusion deltas and LRP relevance argue for the class
// only when positive.
AggregationMode default_mode_for(Method m);

struct RegionEntry {
    std::string name;
    double sum = 0.0;
    double percent = 0.0;
};

struct RegionReport {
    // Descending by percentage, ties by name ascending.
    std::vector<RegionEntry> entries;
    double total = 0.0;
    Method method = Method::Sensitivity;
    AggregationMode mode = AggregationMode::Abs;
    size_t k = 0;  // entries retained
    // True when the transformed total is zero; all percentages are then 0.
    bool degenerate = false;
};

// Per-region sum of transformed voxel values over the non-background voxels;
// percentage = region sum / total over all regions * 100.
RegionReport aggregate_relevance(const AttributionMap& map, const Atlas& atlas,
                                 AggregationMode mode);

// First k entries under the report ordering; k beyond the region count
// returns everything.
RegionReport top_k(const RegionReport& report, size_t k);

// "Name (NN.NN%)", half-up two-decimal rounding, one region per line.
std::string format_percent(double percent);
std::string format_report(const RegionReport& report);

}  // namespace vx
