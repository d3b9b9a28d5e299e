#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vx/atlas.hpp"
#include "vx/tensor.hpp"
#include "vx/train.hpp"

namespace vx {

// One scan: "subject_id,path,label" with an optional fourth "split" field
// (train, val, or test) once assigned.
struct ManifestRecord {
    std::string subject_id;
    std::string path;
    std::string label;
    std::string split;
    bool operator==(const ManifestRecord&) const = default;
};

std::vector<ManifestRecord> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestRecord>& records, const std::string& path);

struct SplitFractions {
    double train = 0.8;         // subjects on the training side (includes val)
    double val_of_train = 0.1;  // share of the training side held out as val
};

// Assigns every record a split, keeping all scans of a subject together.
// Subject counts per split follow the fractions with largest-remainder
// rounding; the subject order is a seeded shuffle of the sorted distinct ids,
// so the result is a pure function of (records, fractions, seed).
std::vector<ManifestRecord> split_manifest(const std::vector<ManifestRecord>& records,
                                           const SplitFractions& fractions, uint64_t rng_seed);

std::vector<ManifestRecord> filter_split(const std::vector<ManifestRecord>& records,
                                         const std::string& split);

// Loads every record's volume as a (1, d, h, w) sample with its label index.
// Relative paths resolve against base_dir.
Dataset load_dataset(const std::vector<ManifestRecord>& records,
                     const std::vector<std::string>& class_names, const std::string& base_dir,
                     bool apply_normalize);

// "label<TAB>name" per line.
std::map<int32_t, std::string> read_atlas_names(const std::string& path);
void write_atlas_names(const std::map<int32_t, std::string>& names, const std::string& path);

// Label volume (any supported format, integer-valued) plus names sidecar.
Atlas load_atlas(const std::string& volume_path, const std::string& names_path);

struct SynthesisConfig {
    size_t extent = 16;
    size_t region_count = 8;
    int32_t planted_region_label = 1;
    double class_effect_magnitude = 0.6;  // 0 gives the null dataset
    double noise_sigma = 0.2;
    size_t samples_per_class = 40;
    uint64_t rng_seed = 0;
    std::vector<std::string> class_names{"CN", "AD"};
};

struct SyntheticDataset {
    Atlas atlas;
    std::vector<ManifestRecord> records;
};

// Writes one VVOL volume per sample plus atlas.vvol, atlas_names.tsv, and
// manifest.csv into out_dir. Volumes are a smooth random background with
// noise; every class after the first additionally adds
// class_effect_magnitude inside the planted region. Bit-deterministic per
// seed.
SyntheticDataset generate_synthetic(const SynthesisConfig& config, const std::string& out_dir);

// The synthetic atlas on its own: the cube split into region_count
// axis-aligned boxes labeled 1..region_count.
Atlas make_box_atlas(size_t extent, size_t region_count);

}  // namespace vx
