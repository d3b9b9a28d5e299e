#include "vx/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "vx/rng.hpp"
#include "vx/volume_io.hpp"

namespace vx {

namespace {

std::vector<std::string> read_lines(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) fail(std::string(what) + ": cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_text(const std::string& path, const std::string& text, const char* what) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(std::string(what) + ": cannot open '" + path + "' for writing");
    out << text;
    if (!out) fail(std::string(what) + ": write failed for '" + path + "'");
}

void check_field(const std::string& value, const char* what) {
    if (value.find_first_of(",\t\n") != std::string::npos)
        fail("manifest: " + std::string(what) + " '" + value + "' contains a separator");
}

// Two-way largest-remainder split of n items with fraction f in the first
// bucket.
std::pair<size_t, size_t> largest_remainder(size_t n, double f) {
    const double ideal_a = static_cast<double>(n) * f;
    const double ideal_b = static_cast<double>(n) * (1.0 - f);
    size_t a = static_cast<size_t>(std::floor(ideal_a));
    size_t b = static_cast<size_t>(std::floor(ideal_b));
    if (a + b < n) {
        if (ideal_a - static_cast<double>(a) >= ideal_b - static_cast<double>(b))
            ++a;
        else
            ++b;
    }
    return {a, b};
}

const std::set<std::string>& valid_splits() {
    static const std::set<std::string> s{"train", "val", "test"};
    return s;
}

}  // namespace

std::vector<ManifestRecord> read_manifest(const std::string& path) {
    const auto lines = read_lines(path, "manifest");
    std::vector<ManifestRecord> records;
    for (size_t li = 0; li < lines.size(); ++li) {
        const std::string& line = lines[li];
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.push_back("");
        if (fields.size() < 3 || fields.size() > 4)
            fail("manifest line " + std::to_string(li + 1) + ": expected 3 or 4 fields, got " +
                 std::to_string(fields.size()));
        ManifestRecord r{fields[0], fields[1], fields[2], fields.size() == 4 ? fields[3] : ""};
        if (r.subject_id.empty() || r.path.empty() || r.label.empty())
            fail("manifest line " + std::to_string(li + 1) + ": empty field");
        if (!r.split.empty() && !valid_splits().count(r.split))
            fail("manifest line " + std::to_string(li + 1) + ": unknown split '" + r.split +
                 "'");
        records.push_back(std::move(r));
    }
    return records;
}

void write_manifest(const std::vector<ManifestRecord>& records, const std::string& path) {
    std::ostringstream out;
    for (const auto& r : records) {
        check_field(r.subject_id, "subject_id");
        check_field(r.path, "path");
        check_field(r.label, "label");
        if (!r.split.empty() && !valid_splits().count(r.split))
            fail("manifest: unknown split '" + r.split + "'");
        out << r.subject_id << ',' << r.path << ',' << r.label;
        if (!r.split.empty()) out << ',' << r.split;
        out << '\n';
    }
    write_text(path, out.str(), "manifest");
}

std::vector<ManifestRecord> split_manifest(const std::vector<ManifestRecord>& records,
                                           const SplitFractions& fractions, uint64_t rng_seed) {
    if (!(fractions.train > 0.0 && fractions.train < 1.0))
        fail("split: train fraction must lie in (0, 1)");
    if (!(fractions.val_of_train >= 0.0 && fractions.val_of_train < 1.0))
        fail("split: val fraction must lie in [0, 1)");

    std::set<std::string> distinct;
    for (const auto& r : records) distinct.insert(r.subject_id);
    if (distinct.size() < 3)
        fail("split: need at least 3 distinct subjects, got " +
             std::to_string(distinct.size()));

    std::vector<std::string> subjects(distinct.begin(), distinct.end());
    Rng rng(rng_seed);
    rng.shuffle(subjects);

    const auto [train_side, n_test] = largest_remainder(subjects.size(), fractions.train);
    const auto [n_train, n_val] = largest_remainder(train_side, 1.0 - fractions.val_of_train);
    (void)n_test;

    std::map<std::string, std::string> assignment;
    for (size_t i = 0; i < subjects.size(); ++i) {
        const char* split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
        assignment[subjects[i]] = split;
    }

    std::vector<ManifestRecord> out = records;
    for (auto& r : out) r.split = assignment.at(r.subject_id);
    return out;
}

std::vector<ManifestRecord> filter_split(const std::vector<ManifestRecord>& records,
                                         const std::string& split) {
    std::vector<ManifestRecord> out;
    for (const auto& r : records)
        if (r.split == split) out.push_back(r);
    return out;
}

Dataset load_dataset(const std::vector<ManifestRecord>& records,
                     const std::vector<std::string>& class_names, const std::string& base_dir,
                     bool apply_normalize) {
    std::map<std::string, size_t> class_index;
    for (size_t i = 0; i < class_names.size(); ++i) class_index.emplace(class_names[i], i);

    Dataset data;
    for (const auto& r : records) {
        const auto it = class_index.find(r.label);
        if (it == class_index.end())
            fail("dataset: label '" + r.label + "' for subject " + r.subject_id +
                 " is not a class name");
        std::filesystem::path p(r.path);
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        Tensor volume = read_volume(p.string());
        if (apply_normalize) volume = normalize(volume);
        const size_t d = volume.extent(0), h = volume.extent(1), w = volume.extent(2);
        Sample s{volume.reshaped({1, d, h, w}), it->second};
        if (!data.empty() && !s.volume.same_shape(data.front().volume))
            fail("dataset: volume shape " + shape_str(s.volume.shape()) + " for subject " +
                 r.subject_id + " does not match " + shape_str(data.front().volume.shape()));
        data.push_back(std::move(s));
    }
    return data;
}

std::map<int32_t, std::string> read_atlas_names(const std::string& path) {
    const auto lines = read_lines(path, "atlas names");
    std::map<int32_t, std::string> names;
    for (size_t li = 0; li < lines.size(); ++li) {
        const std::string& line = lines[li];
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos)
            fail("atlas names line " + std::to_string(li + 1) + ": missing tab separator");
        const std::string label_text = line.substr(0, tab);
        const std::string name = line.substr(tab + 1);
        size_t used = 0;
        long label = 0;
        try {
            label = std::stol(label_text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != label_text.size() || label_text.empty() || label < 1 || label > 2147483647)
            fail("atlas names line " + std::to_string(li + 1) + ": bad label '" + label_text +
                 "'");
        if (name.empty())
            fail("atlas names line " + std::to_string(li + 1) + ": empty region name");
        if (!names.emplace(static_cast<int32_t>(label), name).second)
            fail("atlas names line " + std::to_string(li + 1) + ": duplicate label " +
                 label_text);
    }
    return names;
}

void write_atlas_names(const std::map<int32_t, std::string>& names, const std::string& path) {
    std::ostringstream out;
    for (const auto& [label, name] : names) {
        if (name.find_first_of("\t\n") != std::string::npos)
            fail("atlas names: name '" + name + "' contains a separator");
        out << label << '\t' << name << '\n';
    }
    write_text(path, out.str(), "atlas names");
}

Atlas load_atlas(const std::string& volume_path, const std::string& names_path) {
    return make_atlas(read_volume(volume_path), read_atlas_names(names_path));
}

Atlas make_box_atlas(size_t extent, size_t region_count) {
    if (extent == 0) fail("atlas: extent must be positive");
    if (region_count == 0) fail("atlas: region count must be positive");
    if (region_count > 32767) fail("atlas: region count exceeds int16 labels");

    // Near-cubic factorization: the largest divisor at or below the cube
    // root, then the same again for the remaining plane.
    auto best_divisor = [](size_t r, double root) {
        for (size_t d = static_cast<size_t>(std::floor(root)); d > 1; --d)
            if (r % d == 0) return d;
        return size_t{1};
    };
    const size_t bd = best_divisor(region_count, std::cbrt(static_cast<double>(region_count)));
    const size_t rest = region_count / bd;
    const size_t bh = best_divisor(rest, std::sqrt(static_cast<double>(rest)));
    const size_t bw = rest / bh;
    for (size_t boxes : {bd, bh, bw})
        if (boxes > extent)
            fail("atlas: cannot split extent " + std::to_string(extent) + " into " +
                 std::to_string(boxes) + " slabs along one axis");

    // Axis chunk index per coordinate; chunk k spans [k*e/c, (k+1)*e/c).
    auto chunk_of = [extent](size_t coord, size_t chunks) {
        size_t k = coord * chunks / extent;
        while ((k + 1) * extent / chunks <= coord) ++k;
        return k;
    };

    Tensor labels({extent, extent, extent});
    size_t i = 0;
    for (size_t z = 0; z < extent; ++z)
        for (size_t y = 0; y < extent; ++y)
            for (size_t x = 0; x < extent; ++x, ++i) {
                const size_t box =
                    (chunk_of(z, bd) * bh + chunk_of(y, bh)) * bw + chunk_of(x, bw);
                labels[i] = static_cast<double>(box + 1);
            }
    std::map<int32_t, std::string> names;
    for (size_t r = 1; r <= region_count; ++r)
        names[static_cast<int32_t>(r)] = "Region " + std::to_string(r);
    return make_atlas(labels, names);
}

namespace {

// Trilinear upsample of a g-per-axis coarse grid to e-per-axis, corners
// aligned.
Tensor upsample_field(const Tensor& coarse, size_t extent) {
    const size_t g = coarse.extent(0);
    Tensor out({extent, extent, extent});
    auto coord = [&](size_t u) {
        if (extent == 1 || g == 1) return std::pair<size_t, double>{0, 0.0};
        const double t = static_cast<double>(u) * static_cast<double>(g - 1) /
                         static_cast<double>(extent - 1);
        size_t i0 = static_cast<size_t>(t);
        if (i0 >= g - 1) i0 = g - 2;
        return std::pair<size_t, double>{i0, t - static_cast<double>(i0)};
    };
    auto at = [&](size_t z, size_t y, size_t x) { return coarse[(z * g + y) * g + x]; };
    size_t i = 0;
    for (size_t z = 0; z < extent; ++z)
        for (size_t y = 0; y < extent; ++y)
            for (size_t x = 0; x < extent; ++x, ++i) {
                const auto [z0, fz] = coord(z);
                const auto [y0, fy] = coord(y);
                const auto [x0, fx] = coord(x);
                const size_t z1 = g == 1 ? 0 : z0 + 1;
                const size_t y1 = g == 1 ? 0 : y0 + 1;
                const size_t x1 = g == 1 ? 0 : x0 + 1;
                const double c00 = at(z0, y0, x0) * (1 - fx) + at(z0, y0, x1) * fx;
                const double c01 = at(z0, y1, x0) * (1 - fx) + at(z0, y1, x1) * fx;
                const double c10 = at(z1, y0, x0) * (1 - fx) + at(z1, y0, x1) * fx;
                const double c11 = at(z1, y1, x0) * (1 - fx) + at(z1, y1, x1) * fx;
                const double c0 = c00 * (1 - fy) + c01 * fy;
                const double c1 = c10 * (1 - fy) + c11 * fy;
                out[i] = c0 * (1 - fz) + c1 * fz;
            }
    return out;
}

}  // namespace

SyntheticDataset generate_synthetic(const SynthesisConfig& config, const std::string& out_dir) {
    if (config.extent < 2) fail("synth: extent must be at least 2");
    if (config.samples_per_class == 0) fail("synth: samples_per_class must be positive");
    if (config.class_names.size() != 2) fail("synth: exactly 2 class names required");
    if (config.class_names[0] == config.class_names[1]) fail("synth: class names must differ");
    if (!(config.class_effect_magnitude >= 0.0) ||
        !std::isfinite(config.class_effect_magnitude))
        fail("synth: class effect magnitude must be finite and non-negative");
    if (!(config.noise_sigma >= 0.0) || !std::isfinite(config.noise_sigma))
        fail("synth: noise sigma must be finite and non-negative");

    Atlas atlas = make_box_atlas(config.extent, config.region_count);
    if (config.planted_region_label < 1 ||
        static_cast<size_t>(config.planted_region_label) > config.region_count)
        fail("synth: planted region label " + std::to_string(config.planted_region_label) +
             " outside 1.." + std::to_string(config.region_count));

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    Tensor atlas_volume({config.extent, config.extent, config.extent});
    for (size_t i = 0; i < atlas.labels.size(); ++i)
        atlas_volume[i] = static_cast<double>(atlas.labels[i]);
    write_volume(atlas_volume, (dir / "atlas.vvol").string(), VolumeFormat::Vvol,
                 VoxelType::Int16);
    write_atlas_names(atlas.names, (dir / "atlas_names.tsv").string());

    const size_t e = config.extent;
    const size_t coarse = std::min<size_t>(4, e);
    Rng rng(config.rng_seed);
    std::vector<ManifestRecord> records;
    for (size_t cls = 0; cls < 2; ++cls) {
        for (size_t s = 0; s < config.samples_per_class; ++s) {
            Tensor grid({coarse, coarse, coarse});
            for (size_t i = 0; i < grid.numel(); ++i) grid[i] = rng.uniform(-1.0, 1.0);
            Tensor field = upsample_field(grid, e);
            Tensor volume({e, e, e});
            for (size_t i = 0; i < volume.numel(); ++i)
                volume[i] = 1.0 + 0.4 * field[i] + rng.normal(0.0, config.noise_sigma);
            if (cls == 1)
                for (size_t i = 0; i < volume.numel(); ++i)
                    if (atlas.labels[i] == config.planted_region_label)
                        volume[i] += config.class_effect_magnitude;

            const size_t idx = cls * config.samples_per_class + s;
            char id[16];
            std::snprintf(id, sizeof id, "s%04zu", idx);
            const std::string file = std::string(id) + ".vvol";
            write_volume(volume, (dir / file).string(), VolumeFormat::Vvol,
                         VoxelType::Float64);
            records.push_back(ManifestRecord{id, file, config.class_names[cls], ""});
        }
    }
    write_manifest(records, (dir / "manifest.csv").string());
    return SyntheticDataset{std::move(atlas), std::move(records)};
}

}  // namespace vx
