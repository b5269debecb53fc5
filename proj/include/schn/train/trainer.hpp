#pragma once

#include "schn/nn/model.hpp"
#include "schn/train/checkpoint.hpp"
#include "schn/train/metrics.hpp"
#include "schn/train/optim.hpp"
#include "schn/wigner.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace schn::train {

enum class Orientation { canonical, random_rotation };

std::string to_string(Orientation o);
/// Accepts "c"/"canonical" and "3d"/"random_rotation".
Orientation parse_orientation(const std::string& key, const std::string& value);

struct TrainConfig {
    int epochs = 20;
    int batch_size = 8;
    AdamConfig adam;
    std::uint64_t seed = 1;
    Orientation train_orientation = Orientation::canonical;
    Orientation eval_orientation = Orientation::canonical;

    void validate() const;
};

void write_config(const TrainConfig& cfg, ConfigText& out);
bool apply_config_key(TrainConfig& cfg, const std::string& key, const std::string& value);

struct Sample {
    FeatureMap input;
    LabelMap labels;
};

/// Indexed collection of labeled spherical samples.
class Dataset {
public:
    virtual ~Dataset() = default;
    virtual std::size_t size() const = 0;
    virtual int bandlimit() const = 0;
    virtual int channels() const = 0;
    virtual int num_classes() const = 0;
    /// Sample i in its stored pose, then rotated by r.
    virtual Sample get(std::size_t i, const RotationZYZ& r) const = 0;
};

/// In-memory samples. Rotation is spectral for inputs and nearest-node for labels.
class MemoryDataset : public Dataset {
public:
    explicit MemoryDataset(std::vector<Sample> samples);

    std::size_t size() const override { return samples_.size(); }
    int bandlimit() const override;
    int channels() const override;
    int num_classes() const override;
    Sample get(std::size_t i, const RotationZYZ& r) const override;

private:
    std::vector<Sample> samples_;
};

/// Rotation used for sample `index` when evaluating in random_rotation mode.
RotationZYZ evaluation_rotation(std::uint64_t seed, std::size_t index);
/// Rotation used for sample `index` during `epoch` when training in random_rotation mode.
RotationZYZ training_rotation(std::uint64_t seed, int epoch, std::size_t index);

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double miou_w = 0.0;
    double miou_u = 0.0;
    double seconds = 0.0;
    /// Loss of the first and last batch of the epoch.
    double first_batch_loss = 0.0;
    double last_batch_loss = 0.0;

    /// `epoch=<n> loss=<f> miou_w=<f> miou_u=<f> seconds=<f>`
    std::string format() const;
};

/// Everything needed to resume or evaluate: model, optimizer and progress.
struct TrainingState {
    nn::HourglassConfig model_config;
    TrainConfig train_config;
    std::unique_ptr<nn::Hourglass> model;
    std::unique_ptr<Adam> optimizer;
    int epochs_done = 0;

    TrainingState(nn::HourglassConfig mc, TrainConfig tc);
};

Checkpoint make_checkpoint(const TrainingState& s);
/// Rebuilds the state from a checkpoint. Throws FormatError(shape_mismatch)
/// naming the offending tensor when shapes disagree with the stored config.
TrainingState restore_checkpoint(const Checkpoint& c);
/// Loads parameters into an existing model; same errors as above.
void load_parameters(const Checkpoint& c, nn::Hourglass& model);

/// Runs the remaining epochs of s over the dataset. Deterministic given the
/// configs and the data. Throws DivergenceError on a non-finite loss.
void train(TrainingState& s, const Dataset& data, const std::function<void(const EpochLog&)>& on_epoch = {});

/// Canonical or Haar-rotated evaluation with per-index rotation seeds.
EvalReport evaluate(nn::Hourglass& model, const Dataset& data, Orientation mode, std::uint64_t seed = 1,
                    int batch_size = 8);

/// Forward pass in inference mode on one feature map; returns the argmax labels.
LabelMap predict(nn::Hourglass& model, const FeatureMap& input);

} // namespace schn::train
