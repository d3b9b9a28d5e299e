#pragma once

#include <map>
#include <string>
#include <string_view>

#include "vx/tensor.hpp"

namespace vx {

enum class Method { Sensitivity, GuidedBackprop, Occlusion, RegionOcclusion, Lrp };

// The flag-surface names: "sensitivity", "guided", "occlusion",
// "region-occlusion", "lrp".
const char* method_name(Method m);
Method parse_method(std::string_view name);

// Per-voxel relevance for one method and one target class. Values are kept
// signed; consumers pick an absolute or positive view.
struct AttributionMap {
    Tensor values;  // (d, h, w)
    Method method = Method::Sensitivity;
    size_t target_class = 0;
    // Every parameter that affected the values, as printable strings.
    std::map<std::string, std::string> metadata;
};

}  // namespace vx
