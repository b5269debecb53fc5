#include "schn/scenes/dataset.hpp"

#include "schn/binary.hpp"
#include "schn/error.hpp"
#include "schn/io.hpp"
#include "schn/random.hpp"

#include <cstdio>
#include <sstream>

namespace schn::scenes {

namespace {

constexpr std::uint64_t kPoseStream = 0x706f7365;

const char* const kManifestKeys[] = {"index", "seed", "pose", "alpha", "beta", "gamma", "signal", "labels"};

std::string sample_stem(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%05zu", index);
    return buf;
}

std::string read_text(const std::filesystem::path& path)
{
    const auto bytes = binary::read_file(path);
    return {bytes.begin(), bytes.end()};
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    binary::write_file(path, std::span<const char>(text.data(), text.size()));
}

} // namespace

std::string format_manifest(const std::vector<ManifestEntry>& entries)
{
    std::string out;
    for (const auto& e : entries) {
        out += "index=" + std::to_string(e.index) + " seed=" + std::to_string(e.seed) +
               " pose=" + train::to_string(e.pose) + " alpha=" + format_double(e.rotation.alpha) +
               " beta=" + format_double(e.rotation.beta) + " gamma=" + format_double(e.rotation.gamma) +
               " signal=" + e.signal + " labels=" + e.labels + "\n";
    }
    return out;
}

std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& context)
{
    std::vector<ManifestEntry> out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) {
            continue;
        }
        const std::string where = context + ":" + std::to_string(number);
        std::istringstream fields(line);
        std::string token;
        std::vector<std::string> values;
        for (const char* key : kManifestKeys) {
            if (!(fields >> token)) {
                throw FormatError(FormatFault::bad_value, where + ": missing field " + key);
            }
            const std::string prefix = std::string(key) + "=";
            if (token.rfind(prefix, 0) != 0) {
                throw FormatError(FormatFault::bad_value, where + ": expected " + prefix + "..., got '" + token + "'");
            }
            values.push_back(token.substr(prefix.size()));
        }
        if (fields >> token) {
            throw FormatError(FormatFault::bad_value, where + ": unexpected trailing field '" + token + "'");
        }
        try {
            ManifestEntry e;
            e.index = static_cast<std::size_t>(parse_u64("index", values[0]));
            e.seed = parse_u64("seed", values[1]);
            e.pose = train::parse_orientation("pose", values[2]);
            e.rotation = {parse_double("alpha", values[3]), parse_double("beta", values[4]),
                          parse_double("gamma", values[5])};
            e.rotation.validate();
            e.signal = values[6];
            e.labels = values[7];
            if (e.signal.empty() || e.labels.empty()) {
                throw ConfigError("empty path");
            }
            out.push_back(std::move(e));
        } catch (const ConfigError& err) {
            throw FormatError(FormatFault::bad_value, where + ": " + err.what());
        }
    }
    return out;
}

ConfigText dataset_config_text(const DatasetConfig& cfg)
{
    ConfigText text;
    write_config(cfg.scene, text);
    text.set("dataset.num", std::to_string(cfg.num));
    text.set("dataset.seed", std::to_string(cfg.seed));
    text.set("dataset.pose", train::to_string(cfg.pose));
    return text;
}

DatasetConfig parse_dataset_config(const ConfigText& text)
{
    DatasetConfig cfg;
    for (const auto& [key, value] : text.entries()) {
        if (apply_config_key(cfg.scene, key, value)) {
            continue;
        }
        if (key == "dataset.num") {
            cfg.num = static_cast<std::size_t>(parse_u64(key, value));
        } else if (key == "dataset.seed") {
            cfg.seed = parse_u64(key, value);
        } else if (key == "dataset.pose") {
            cfg.pose = train::parse_orientation(key, value);
        } else {
            throw ConfigError("unknown dataset key " + key);
        }
    }
    cfg.scene.validate();
    return cfg;
}

std::uint64_t sample_seed(std::uint64_t dataset_seed, std::size_t index)
{
    return mix_seed(dataset_seed, index);
}

RotationZYZ sample_pose(std::uint64_t seed, train::Orientation pose)
{
    if (pose == train::Orientation::canonical) {
        return RotationZYZ::identity();
    }
    Rng rng(mix_seed(seed, kPoseStream));
    return sample_haar(rng);
}

std::vector<ManifestEntry> build_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir)
{
    cfg.scene.validate();
    if (cfg.num == 0) {
        throw ConfigError("dataset.num must be positive");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError(out_dir.string() + ": cannot create directory: " + ec.message());
    }
    std::vector<ManifestEntry> entries(cfg.num);
    for (std::size_t i = 0; i < cfg.num; ++i) {
        ManifestEntry& e = entries[i];
        e.index = i;
        e.seed = sample_seed(cfg.seed, i);
        e.pose = cfg.pose;
        e.rotation = sample_pose(e.seed, cfg.pose);
        e.signal = sample_stem(i) + ".sphs";
        e.labels = sample_stem(i) + ".sphl";
    }
    // Rendering and writing are independent per sample; errors surface after the loop.
    std::vector<std::string> errors(cfg.num);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < cfg.num; ++i) {
        try {
            const ManifestEntry& e = entries[i];
            const RenderedScene s = rotate_scene(sample_spec(e.seed, cfg.scene), e.rotation);
            write_signal(s.input, out_dir / e.signal);
            write_labels(s.labels, out_dir / e.labels);
        } catch (const std::exception& err) {
            errors[i] = err.what();
        }
    }
    for (const auto& err : errors) {
        if (!err.empty()) {
            throw IoError(err);
        }
    }
    write_text(out_dir / "manifest.txt", format_manifest(entries));
    write_text(out_dir / "dataset.cfg", dataset_config_text(cfg).format());
    return entries;
}

SceneDataset::SceneDataset(const std::filesystem::path& dir)
{
    cfg_ = parse_dataset_config(ConfigText::parse(read_text(dir / "dataset.cfg")));
    entries_ = parse_manifest(read_text(dir / "manifest.txt"), (dir / "manifest.txt").string());
    if (entries_.empty()) {
        throw FormatError(FormatFault::bad_value, (dir / "manifest.txt").string() + ": no samples");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.index != i) {
            throw FormatError(FormatFault::bad_value, (dir / "manifest.txt").string() + ": entry " +
                                                          std::to_string(i) + " has index " + std::to_string(e.index));
        }
        FeatureMap input = read_signal(dir / e.signal);
        LabelMap labels = read_labels(dir / e.labels);
        if (input.B() != bandlimit() || input.channels != 3 || labels.B() != bandlimit() ||
            labels.num_classes != num_classes()) {
            throw FormatError(FormatFault::shape_mismatch,
                              (dir / e.signal).string() + ": sample shape does not match dataset.cfg");
        }
        stored_.push_back({std::move(input), std::move(labels)});
    }
}

SceneSpec SceneDataset::spec(std::size_t i) const
{
    const auto& e = entries_.at(i);
    return rotate_spec(sample_spec(e.seed, cfg_.scene), e.rotation);
}

train::Sample SceneDataset::get(std::size_t i, const RotationZYZ& r) const
{
    if (r.is_identity()) {
        return stored_.at(i);
    }
    RenderedScene s = rotate_scene(spec(i), r);
    return {std::move(s.input), std::move(s.labels)};
}

GeneratedDataset::GeneratedDataset(const DatasetConfig& cfg) : cfg_(cfg)
{
    cfg_.scene.validate();
    if (cfg_.num == 0) {
        throw ConfigError("dataset.num must be positive");
    }
    for (std::size_t i = 0; i < cfg_.num; ++i) {
        const std::uint64_t seed = sample_seed(cfg_.seed, i);
        specs_.push_back(rotate_spec(sample_spec(seed, cfg_.scene), sample_pose(seed, cfg_.pose)));
        stored_.push_back({render_input(specs_.back()), render_labels(specs_.back())});
    }
}

train::Sample GeneratedDataset::get(std::size_t i, const RotationZYZ& r) const
{
    if (r.is_identity()) {
        return stored_.at(i);
    }
    RenderedScene s = rotate_scene(specs_.at(i), r);
    return {std::move(s.input), std::move(s.labels)};
}

} // namespace schn::scenes
