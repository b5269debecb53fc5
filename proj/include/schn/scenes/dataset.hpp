#pragma once

#include "schn/scenes/scene.hpp"
#include "schn/train/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace schn::scenes {

struct ManifestEntry {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    train::Orientation pose = train::Orientation::canonical;
    RotationZYZ rotation;
    std::string signal; // relative to the dataset directory
    std::string labels;
};

/// One line per entry:
/// `index=<n> seed=<u64> pose=<c|3d> alpha=<f> beta=<f> gamma=<f> signal=<path> labels=<path>`
std::string format_manifest(const std::vector<ManifestEntry>& entries);
/// Throws FormatError(bad_value) naming the line on malformed input.
std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& context = "manifest");

/// Generator settings plus the dataset-level draw parameters, saved as
/// "dataset.cfg" next to the manifest.
struct DatasetConfig {
    SceneParams scene;
    std::size_t num = 0;
    std::uint64_t seed = 0;
    train::Orientation pose = train::Orientation::canonical;
};

ConfigText dataset_config_text(const DatasetConfig& cfg);
DatasetConfig parse_dataset_config(const ConfigText& text);

/// Seed and pose of sample `index` of a dataset.
std::uint64_t sample_seed(std::uint64_t dataset_seed, std::size_t index);
RotationZYZ sample_pose(std::uint64_t sample_seed, train::Orientation pose);

/// Writes sample_<index>.sphs / .sphl pairs, manifest.txt and dataset.cfg
/// into out_dir (created if needed). Throws IoError naming the path.
std::vector<ManifestEntry> build_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

/// A generated dataset on disk. Samples in their stored pose come from the
/// files; rotated samples are re-rendered from the scene geometry.
class SceneDataset : public train::Dataset {
public:
    explicit SceneDataset(const std::filesystem::path& dir);

    std::size_t size() const override { return entries_.size(); }
    int bandlimit() const override { return cfg_.scene.bandlimit; }
    int channels() const override { return 3; }
    int num_classes() const override { return cfg_.scene.num_classes; }
    train::Sample get(std::size_t i, const RotationZYZ& r) const override;

    const DatasetConfig& config() const noexcept { return cfg_; }
    const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
    /// Scene of sample i in its stored pose.
    SceneSpec spec(std::size_t i) const;

private:
    DatasetConfig cfg_;
    std::vector<ManifestEntry> entries_;
    std::vector<train::Sample> stored_;
};

/// The same samples as build_dataset(cfg) without touching the disk.
class GeneratedDataset : public train::Dataset {
public:
    explicit GeneratedDataset(const DatasetConfig& cfg);

    std::size_t size() const override { return specs_.size(); }
    int bandlimit() const override { return cfg_.scene.bandlimit; }
    int channels() const override { return 3; }
    int num_classes() const override { return cfg_.scene.num_classes; }
    train::Sample get(std::size_t i, const RotationZYZ& r) const override;

    /// Scene of sample i in its stored pose.
    const SceneSpec& spec(std::size_t i) const { return specs_.at(i); }

private:
    DatasetConfig cfg_;
    std::vector<SceneSpec> specs_;
    std::vector<train::Sample> stored_;
};

} // namespace schn::scenes
