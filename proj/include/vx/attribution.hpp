#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "vx/atlas.hpp"
#include "vx/attribution_map.hpp"
#include "vx/network.hpp"

namespace vx {

// Gradient of the target-class logit with respect to each input voxel,
// summed over input channels, stored signed.
AttributionMap sensitivity_map(const Network& net, const Tensor& volume, size_t target_class);

// Same backward pass with the guided ReLU rule: gradients are additionally
// zeroed wherever they are negative. `gated = false` reproduces
// sensitivity_map bitwise; `relu_grad_sink` receives the post-gating tensors
// at every ReLU in backward order.
AttributionMap guided_backprop_map(const Network& net, const Tensor& volume, size_t target_class,
                                   bool gated = true,
                                   std::vector<Tensor>* relu_grad_sink = nullptr);

// Slide a cubic patch over a stride grid whose union covers the whole volume
// (the last position on each axis is clamped to the boundary), fill it with
// baseline_value, and record the drop of the target logit. Voxels covered by
// several patches average their deltas.
AttributionMap occlusion_map(const Network& net, const Tensor& volume, size_t target_class,
                             size_t patch_extent, size_t stride, double baseline_value);

// One forward pass per atlas region with that whole region set to
// baseline_value; every voxel of the region receives the region's logit drop,
// background voxels 0.
AttributionMap region_occlusion_map(const Network& net, const Tensor& volume,
                                    size_t target_class, const Atlas& atlas,
                                    double baseline_value);

enum class LrpRule { Epsilon, ZPlus };
const char* lrp_rule_name(LrpRule rule);
LrpRule parse_lrp_rule(std::string_view name);

// Layer-wise relevance propagation from the target logit down to the input
// voxels. Conv/dense layers redistribute by the chosen rule (bias relevance
// is absorbed, not redistributed); ReLU passes relevance through; max-pool
// routes winner-takes-all; flatten reshapes.
AttributionMap lrp_map(const Network& net, const Tensor& volume, size_t target_class,
                       LrpRule rule = LrpRule::Epsilon, double epsilon = 1e-6);

// Elementwise arithmetic mean of homogeneous maps (same shape, method,
// target class); metadata records the count.
AttributionMap average_maps(const std::vector<AttributionMap>& maps);

}  // namespace vx
