#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <sstream>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vx/atlas.hpp"
#include "vx/attribution.hpp"
#include "vx/dataset.hpp"
#include "vx/kernels.hpp"
#include "vx/network.hpp"
#include "vx/render.hpp"
#include "vx/train.hpp"
#include "vx/volume_io.hpp"

namespace {

using nlohmann::json;
using namespace vx;

std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

void echo_config(const std::string& command, const ConfigEcho& entries) {
    std::cerr << "config: command=" << command << "\n";
    for (const auto& [key, value] : entries) std::cerr << "config: " << key << "=" << value << "\n";
}

std::string comma_join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += ",";
        out += p;
    }
    return out;
}

std::vector<std::string> comma_split(const std::string& text) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream ss(text);
    while (std::getline(ss, part, ',')) parts.push_back(part);
    return parts;
}

std::string sidecar_path(const std::string& map_path) { return map_path + ".meta.json"; }

void save_map(const AttributionMap& map, const std::string& path) {
    write_volume(map.values, path, VolumeFormat::Vvol, VoxelType::Float64);
    json meta;
    meta["method"] = method_name(map.method);
    meta["target_class"] = map.target_class;
    meta["params"] = json::object();
    for (const auto& [key, value] : map.metadata) meta["params"][key] = value;
    std::ofstream out(sidecar_path(path), std::ios::trunc);
    if (!out) fail("map: cannot open '" + sidecar_path(path) + "' for writing");
    out << meta.dump(2) << "\n";
    if (!out) fail("map: write failed for '" + sidecar_path(path) + "'");
}

AttributionMap load_map(const std::string& path) {
    AttributionMap map;
    map.values = read_volume(path);
    const std::string meta_path = sidecar_path(path);
    std::ifstream in(meta_path);
    if (!in) fail("map: missing metadata sidecar '" + meta_path + "'");
    json meta;
    try {
        in >> meta;
        map.method = parse_method(meta.at("method").get<std::string>());
        map.target_class = meta.at("target_class").get<size_t>();
        for (const auto& [key, value] : meta.at("params").items())
            map.metadata[key] = value.get<std::string>();
    } catch (const json::exception& e) {
        fail("map: bad metadata sidecar '" + meta_path + "': " + e.what());
    }
    return map;
}

Tensor load_input_volume(const std::string& path, bool apply_normalize) {
    Tensor volume = read_volume(path);
    if (apply_normalize) volume = normalize(volume);
    return volume.reshaped({1, volume.extent(0), volume.extent(1), volume.extent(2)});
}

size_t resolve_target(const Network& net, const Tensor& volume, const std::string& target) {
    const auto& names = net.spec.class_names;
    if (target == "predicted") return predict(net, volume).class_index;
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == target) return i;
    size_t index = 0;
    const auto res = std::from_chars(target.data(), target.data() + target.size(), index);
    if (res.ec != std::errc{} || res.ptr != target.data() + target.size())
        fail("target: '" + target + "' is neither a class name nor an index");
    if (index >= names.size())
        fail("target: class index " + std::to_string(index) + " out of range (" +
             std::to_string(names.size()) + " classes)");
    return index;
}

// synth ----------------------------------------------------------------

struct SynthArgs {
    std::string out;
    SynthesisConfig config;
    std::string classes = "CN,AD";
};

int run_synth(const SynthArgs& args) {
    SynthesisConfig config = args.config;
    config.class_names = comma_split(args.classes);
    echo_config("synth", {
                             {"out", args.out},
                             {"extent", std::to_string(config.extent)},
                             {"regions", std::to_string(config.region_count)},
                             {"planted-region", std::to_string(config.planted_region_label)},
                             {"magnitude", fmt_double(config.class_effect_magnitude)},
                             {"sigma", fmt_double(config.noise_sigma)},
                             {"samples-per-class", std::to_string(config.samples_per_class)},
                             {"seed", std::to_string(config.rng_seed)},
                             {"classes", comma_join(config.class_names)},
                         });
    const SyntheticDataset made = generate_synthetic(config, args.out);
    const auto dir = std::filesystem::path(args.out);
    std::cout << "wrote " << (dir / "manifest.csv").string() << " (" << made.records.size()
              << " records, " << config.class_names.size() << " classes)\n";
    std::cout << "wrote " << (dir / "atlas.vvol").string() << " (" << made.atlas.names.size()
              << " regions)\n";
    return 0;
}

// train ----------------------------------------------------------------

struct TrainArgs {
    std::string manifest;
    std::string data_dir;
    std::string out;
    std::string metrics;
    std::string spec_file;
    std::string classes;
    TrainConfig config;
    double train_frac = 0.8;
    double val_frac = 0.1;
    uint64_t split_seed = 0;
    bool no_normalize = false;
    std::string kernels = "auto";
};

std::string read_text_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) fail(std::string(what) + ": cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_train(const TrainArgs& args) {
    TrainArgs a = args;
    if (a.data_dir.empty())
        a.data_dir = std::filesystem::path(a.manifest).parent_path().string();
    if (a.metrics.empty()) a.metrics = a.out + ".metrics.csv";

    std::vector<ManifestRecord> records = read_manifest(a.manifest);
    if (records.empty()) fail("train: manifest has no records");

    std::vector<std::string> class_names;
    if (!a.classes.empty()) {
        class_names = comma_split(a.classes);
    } else if (!a.spec_file.empty()) {
        class_names = parse_network_spec(read_text_file(a.spec_file, "spec")).class_names;
    } else {
        std::set<std::string> labels;
        for (const auto& r : records) labels.insert(r.label);
        class_names.assign(labels.begin(), labels.end());
    }

    size_t with_split = 0;
    for (const auto& r : records)
        if (!r.split.empty()) ++with_split;
    const bool presplit = with_split == records.size();
    if (with_split != 0 && !presplit)
        fail("train: manifest mixes split and unsplit records");

    echo_config("train",
                {
                    {"manifest", a.manifest},
                    {"data-dir", a.data_dir},
                    {"out", a.out},
                    {"metrics", a.metrics},
                    {"spec", a.spec_file.empty() ? "default" : a.spec_file},
                    {"classes", comma_join(class_names)},
                    {"normalize", a.no_normalize ? "false" : "true"},
                    {"split", presplit ? "from-manifest" : "computed"},
                    {"train-frac", fmt_double(a.train_frac)},
                    {"val-frac", fmt_double(a.val_frac)},
                    {"split-seed", std::to_string(a.split_seed)},
                    {"lr", fmt_double(a.config.learning_rate)},
                    {"decay-factor", fmt_double(a.config.lr_decay_factor)},
                    {"decay-period", std::to_string(a.config.decay_period_epochs)},
                    {"batch", std::to_string(a.config.batch_size)},
                    {"epochs", std::to_string(a.config.epochs)},
                    {"l2", fmt_double(a.config.weight_decay_l2)},
                    {"seed", std::to_string(a.config.rng_seed)},
                    {"kernels", a.kernels},
                });
    kernels::select_kernels(a.kernels);

    if (!presplit)
        records = split_manifest(records, {a.train_frac, a.val_frac}, a.split_seed);
    const Dataset train_data =
        load_dataset(filter_split(records, "train"), class_names, a.data_dir, !a.no_normalize);
    if (train_data.empty()) fail("train: no records in the train split");
    const Dataset val_data =
        load_dataset(filter_split(records, "val"), class_names, a.data_dir, !a.no_normalize);
    const Dataset test_data =
        load_dataset(filter_split(records, "test"), class_names, a.data_dir, !a.no_normalize);

    NetworkSpec spec;
    if (!a.spec_file.empty()) {
        spec = parse_network_spec(read_text_file(a.spec_file, "spec"));
        if (spec.class_names != class_names)
            fail("train: --classes disagrees with the spec file's class list");
    } else {
        spec = desk_default_spec(class_names);
        const auto& v = train_data.front().volume;
        spec.input_shape = {v.extent(0), v.extent(1), v.extent(2), v.extent(3)};
    }
    validate_spec(spec);

    const Network net = init_network(spec, a.config.rng_seed);
    const TrainResult result = train(net, train_data, a.config);
    save_weights(result.net, a.out);

    std::ostringstream csv;
    csv << "epoch,learning_rate,loss,accuracy\n";
    for (const auto& m : result.metrics)
        csv << m.epoch << ',' << fmt_double(m.learning_rate) << ',' << fmt_double(m.loss)
            << ',' << fmt_double(m.accuracy) << '\n';
    std::ofstream metrics_out(a.metrics, std::ios::trunc);
    if (!metrics_out) fail("train: cannot open '" + a.metrics + "' for writing");
    metrics_out << csv.str();

    std::cout << "trained " << result.metrics.size() << " epochs on " << train_data.size()
              << " volumes\n";
    if (!result.metrics.empty()) {
        const auto& last = result.metrics.back();
        std::cout << "final train loss: " << fmt_double(last.loss) << "\n";
        std::cout << "final train accuracy: " << fmt_double(last.accuracy) << "\n";
    }
    for (const auto& [name, data] : {std::pair<const char*, const Dataset*>{"val", &val_data},
                                     {"test", &test_data}}) {
        if (data->empty()) continue;
        const Evaluation eval = evaluate(result.net, *data);
        std::cout << name << " accuracy: " << fmt_double(eval.accuracy) << " (n="
                  << data->size() << ")\n";
    }
    std::cout << "wrote " << a.out << "\n";
    std::cout << "wrote " << a.metrics << "\n";
    return 0;
}

// classify -------------------------------------------------------------

struct ClassifyArgs {
    std::string weights;
    std::string volume;
    bool no_normalize = false;
    std::string kernels = "auto";
};

int run_classify(const ClassifyArgs& args) {
    echo_config("classify", {
                                {"weights", args.weights},
                                {"volume", args.volume},
                                {"normalize", args.no_normalize ? "false" : "true"},
                                {"kernels", args.kernels},
                            });
    kernels::select_kernels(args.kernels);
    const Network net = load_network(args.weights);
    const Tensor volume = load_input_volume(args.volume, !args.no_normalize);
    const PredictResult result = predict(net, volume);
    std::cout << "class: " << result.class_name << "\n";
    std::cout << "probabilities:";
    for (size_t i = 0; i < result.probabilities.size(); ++i)
        std::cout << ' ' << net.spec.class_names[i] << '=' << fmt_double(result.probabilities[i]);
    std::cout << "\n";
    return 0;
}

// attribute ------------------------------------------------------------

struct AttributeArgs {
    std::string weights;
    std::string volume;
    std::string method;
    std::string out;
    std::string target = "predicted";
    size_t patch = 4;
    size_t stride = 2;
    double baseline = 0.0;
    std::string rule = "epsilon";
    double epsilon = 1e-6;
    std::string atlas;
    bool no_normalize = false;
    std::string kernels = "auto";
};

int run_attribute(const AttributeArgs& args) {
    const Method method = parse_method(args.method);
    echo_config("attribute", {
                                 {"weights", args.weights},
                                 {"volume", args.volume},
                                 {"method", method_name(method)},
                                 {"out", args.out},
                                 {"target", args.target},
                                 {"patch", std::to_string(args.patch)},
                                 {"stride", std::to_string(args.stride)},
                                 {"baseline", fmt_double(args.baseline)},
                                 {"rule", args.rule},
                                 {"epsilon", fmt_double(args.epsilon)},
                                 {"atlas", args.atlas.empty() ? "(none)" : args.atlas},
                                 {"normalize", args.no_normalize ? "false" : "true"},
                                 {"kernels", args.kernels},
                             });
    kernels::select_kernels(args.kernels);
    const Network net = load_network(args.weights);
    const Tensor volume = load_input_volume(args.volume, !args.no_normalize);
    const size_t target = resolve_target(net, volume, args.target);

    AttributionMap map;
    switch (method) {
        case Method::Sensitivity:
            map = sensitivity_map(net, volume, target);
            break;
        case Method::GuidedBackprop:
            map = guided_backprop_map(net, volume, target);
            break;
        case Method::Occlusion:
            map = occlusion_map(net, volume, target, args.patch, args.stride, args.baseline);
            break;
        case Method::RegionOcclusion: {
            if (args.atlas.empty()) fail("attribute: region-occlusion requires --atlas");
            const Tensor labels = read_volume(args.atlas);
            std::map<int32_t, std::string> names;
            for (size_t i = 0; i < labels.numel(); ++i) {
                const auto v = static_cast<int32_t>(labels[i]);
                if (v > 0) names.emplace(v, "Region " + std::to_string(v));
            }
            map = region_occlusion_map(net, volume, target, make_atlas(labels, names),
                                       args.baseline);
            break;
        }
        case Method::Lrp:
            map = lrp_map(net, volume, target, parse_lrp_rule(args.rule), args.epsilon);
            break;
    }
    save_map(map, args.out);
    std::cout << "method: " << method_name(method) << "\n";
    std::cout << "target: " << net.spec.class_names[target] << " (class " << target << ")\n";
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

// average --------------------------------------------------------------

struct AverageArgs {
    std::vector<std::string> inputs;
    std::string out;
};

int run_average(const AverageArgs& args) {
    ConfigEcho echo{{"out", args.out}};
    for (const auto& path : args.inputs) echo.emplace_back("input", path);
    echo_config("average", echo);
    std::vector<AttributionMap> maps;
    for (const auto& path : args.inputs) maps.push_back(load_map(path));
    const AttributionMap averaged = average_maps(maps);
    save_map(averaged, args.out);
    std::cout << "averaged " << maps.size() << " maps\n";
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

// aggregate ------------------------------------------------------------

struct AggregateArgs {
    std::string map;
    std::string atlas;
    std::string names;
    size_t k = 5;
    std::string mode = "auto";
};

int run_aggregate(const AggregateArgs& args) {
    echo_config("aggregate", {
                                 {"map", args.map},
                                 {"atlas", args.atlas},
                                 {"names", args.names},
                                 {"k", std::to_string(args.k)},
                                 {"mode", args.mode},
                             });
    const AttributionMap map = load_map(args.map);
    const Atlas atlas = load_atlas(args.atlas, args.names);
    const AggregationMode mode = args.mode == "auto" ? default_mode_for(map.method)
                                                     : parse_aggregation_mode(args.mode);
    const RegionReport report = top_k(aggregate_relevance(map, atlas, mode), args.k);
    std::cout << format_report(report);
    return 0;
}

// render ---------------------------------------------------------------

struct RenderArgs {
    std::string in;
    std::string out;
    size_t axis = 0;
    std::string index = "middle";
    std::string scale = "minmax";
};

int run_render(const RenderArgs& args) {
    const RenderScale scale = parse_render_scale(args.scale);
    echo_config("render", {
                              {"in", args.in},
                              {"out", args.out},
                              {"axis", std::to_string(args.axis)},
                              {"index", args.index},
                              {"scale", args.scale},
                          });
    const Tensor volume = read_volume(args.in);
    if (volume.rank() != 3)
        fail("render: expected a (d, h, w) volume, got rank " + std::to_string(volume.rank()));
    if (args.axis > 2) fail("render: axis " + std::to_string(args.axis) + " out of range (3 axes)");
    size_t index = 0;
    if (args.index == "middle") {
        index = volume.extent(args.axis) / 2;
    } else {
        const auto res = std::from_chars(args.index.data(),
                                         args.index.data() + args.index.size(), index);
        if (res.ec != std::errc{} || res.ptr != args.index.data() + args.index.size())
            fail("render: index '" + args.index + "' is neither a number nor \"middle\"");
    }
    const SliceImage image = render_slice(volume, args.axis, index, scale);
    write_pgm(image, args.out);
    std::cout << "wrote " << args.out << " (" << image.cols << "x" << image.rows << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D CNN relevance attribution pipeline"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();
    synth_cmd->add_option("--extent", synth.config.extent, "Cubic volume extent");
    synth_cmd->add_option("--regions", synth.config.region_count, "Atlas region count");
    synth_cmd->add_option("--planted-region", synth.config.planted_region_label,
                          "Label of the region carrying the class effect");
    synth_cmd->add_option("--magnitude", synth.config.class_effect_magnitude,
                          "Class effect added inside the planted region");
    synth_cmd->add_option("--sigma", synth.config.noise_sigma, "Per-voxel noise sigma");
    synth_cmd->add_option("--samples-per-class", synth.config.samples_per_class,
                          "Volumes per class");
    synth_cmd->add_option("--seed", synth.config.rng_seed, "RNG seed");
    synth_cmd->add_option("--classes", synth.classes, "Two class names, comma-separated");

    TrainArgs train;
    train.config.epochs = 30;
    auto* train_cmd = app.add_subcommand("train", "Train a classifier from a manifest");
    train_cmd->add_option("--manifest", train.manifest, "Dataset manifest CSV")->required();
    train_cmd->add_option("--data-dir", train.data_dir,
                          "Base directory for relative volume paths (default: manifest dir)");
    train_cmd->add_option("--out", train.out, "Weights output file")->required();
    train_cmd->add_option("--metrics", train.metrics,
                          "Per-epoch metrics CSV (default: <out>.metrics.csv)");
    train_cmd->add_option("--spec", train.spec_file, "Network spec file (default: built-in)");
    train_cmd->add_option("--classes", train.classes,
                          "Class name order, comma-separated (default: sorted labels)");
    train_cmd->add_option("--lr", train.config.learning_rate, "Base learning rate");
    train_cmd->add_option("--decay-factor", train.config.lr_decay_factor,
                          "Learning-rate decay factor");
    train_cmd->add_option("--decay-period", train.config.decay_period_epochs,
                          "Epochs between learning-rate decays");
    train_cmd->add_option("--batch", train.config.batch_size, "Batch size");
    train_cmd->add_option("--epochs", train.config.epochs, "Training epochs");
    train_cmd->add_option("--l2", train.config.weight_decay_l2, "L2 penalty coefficient");
    train_cmd->add_option("--seed", train.config.rng_seed, "Init/shuffle RNG seed");
    train_cmd->add_option("--train-frac", train.train_frac,
                          "Subject fraction on the training side");
    train_cmd->add_option("--val-frac", train.val_frac,
                          "Fraction of the training side held out as val");
    train_cmd->add_option("--split-seed", train.split_seed, "Subject split RNG seed");
    train_cmd->add_flag("--no-normalize", train.no_normalize, "Skip intensity normalization");
    train_cmd->add_option("--kernels", train.kernels, "Kernel set: auto|scalar|avx2|neon");

    ClassifyArgs classify;
    auto* classify_cmd = app.add_subcommand("classify", "Classify one volume");
    classify_cmd->add_option("--weights", classify.weights, "Weights file")->required();
    classify_cmd->add_option("--volume", classify.volume, "Input volume")->required();
    classify_cmd->add_flag("--no-normalize", classify.no_normalize,
                           "Skip intensity normalization");
    classify_cmd->add_option("--kernels", classify.kernels, "Kernel set: auto|scalar|avx2|neon");

    AttributeArgs attribute;
    auto* attribute_cmd = app.add_subcommand("attribute", "Write a relevance map for one volume");
    attribute_cmd->add_option("--weights", attribute.weights, "Weights file")->required();
    attribute_cmd->add_option("--volume", attribute.volume, "Input volume")->required();
    attribute_cmd
        ->add_option("--method", attribute.method,
                     "sensitivity|guided|occlusion|region-occlusion|lrp")
        ->required();
    attribute_cmd->add_option("--out", attribute.out, "Map output file (VVOL float64)")
        ->required();
    attribute_cmd->add_option("--target", attribute.target,
                              "Target class name, index, or \"predicted\"");
    attribute_cmd->add_option("--patch", attribute.patch, "Occlusion patch extent");
    attribute_cmd->add_option("--stride", attribute.stride, "Occlusion stride");
    attribute_cmd->add_option("--baseline", attribute.baseline, "Occlusion fill value");
    attribute_cmd->add_option("--rule", attribute.rule, "LRP rule: epsilon|zplus");
    attribute_cmd->add_option("--epsilon", attribute.epsilon, "LRP epsilon stabilizer");
    attribute_cmd->add_option("--atlas", attribute.atlas,
                              "Atlas volume (required for region-occlusion)");
    attribute_cmd->add_flag("--no-normalize", attribute.no_normalize,
                            "Skip intensity normalization");
    attribute_cmd->add_option("--kernels", attribute.kernels,
                              "Kernel set: auto|scalar|avx2|neon");

    AverageArgs average;
    auto* average_cmd = app.add_subcommand("average", "Average relevance maps voxelwise");
    average_cmd->add_option("inputs", average.inputs, "Map files to average")
        ->required()
        ->expected(-1);
    average_cmd->add_option("--out", average.out, "Averaged map output file")->required();

    AggregateArgs aggregate;
    auto* aggregate_cmd =
        app.add_subcommand("aggregate", "Rank atlas regions by aggregated relevance");
    aggregate_cmd->add_option("--map", aggregate.map, "Relevance map file")->required();
    aggregate_cmd->add_option("--atlas", aggregate.atlas, "Atlas label volume")->required();
    aggregate_cmd->add_option("--names", aggregate.names, "Atlas names TSV")->required();
    aggregate_cmd->add_option("--k", aggregate.k, "Regions to list");
    aggregate_cmd->add_option("--mode", aggregate.mode, "auto|abs|positive|signed");

    RenderArgs render;
    auto* render_cmd = app.add_subcommand("render", "Render one slice to a PGM image");
    render_cmd->add_option("--in", render.in, "Volume or map file")->required();
    render_cmd->add_option("--out", render.out, "PGM output file")->required();
    render_cmd->add_option("--axis", render.axis, "Slice axis: 0 (d), 1 (h), or 2 (w)");
    render_cmd->add_option("--index", render.index, "Slice index or \"middle\"");
    render_cmd->add_option("--scale", render.scale, "Pixel scaling: minmax|signed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*synth_cmd) return run_synth(synth);
        if (*train_cmd) return run_train(train);
        if (*classify_cmd) return run_classify(classify);
        if (*attribute_cmd) return run_attribute(attribute);
        if (*average_cmd) return run_average(average);
        if (*aggregate_cmd) return run_aggregate(aggregate);
        if (*render_cmd) return run_render(render);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
