#include "schn/train/trainer.hpp"

#include "schn/error.hpp"
#include "schn/random.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace schn::train {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kShuffleStream = 0x73687566;
constexpr std::uint64_t kTrainRotationStream = 0x74726f74;
constexpr std::uint64_t kEvalRotationStream = 0x65726f74;

std::vector<std::uint64_t> to_dims(const std::vector<std::size_t>& shape)
{
    return {shape.begin(), shape.end()};
}

NamedTensor make_tensor(const std::string& name, const std::vector<std::size_t>& shape, const std::vector<double>& v)
{
    NamedTensor t;
    t.name = name;
    t.type = TensorType::f64;
    t.dims = to_dims(shape);
    t.values = v;
    return t;
}

NamedTensor make_counter(const std::string& name, std::uint64_t v)
{
    NamedTensor t;
    t.name = name;
    t.type = TensorType::u64;
    t.dims = {1};
    t.words = {v};
    return t;
}

const NamedTensor& require_tensor(const Checkpoint& c, const std::string& name, const std::vector<std::size_t>& shape)
{
    const NamedTensor* t = c.find(name);
    if (!t) {
        throw FormatError(FormatFault::shape_mismatch, "checkpoint has no tensor " + name);
    }
    if (t->dims != to_dims(shape) || t->type == TensorType::u64) {
        throw FormatError(FormatFault::shape_mismatch, "checkpoint tensor " + name + " has a shape or type that does not match the model");
    }
    return *t;
}

std::uint64_t require_counter(const Checkpoint& c, const std::string& name)
{
    const NamedTensor* t = c.find(name);
    if (!t || t->type != TensorType::u64 || t->words.size() != 1) {
        throw FormatError(FormatFault::shape_mismatch, "checkpoint counter " + name + " missing or malformed");
    }
    return t->words[0];
}

} // namespace

std::string to_string(Orientation o)
{
    return o == Orientation::canonical ? "c" : "3d";
}

Orientation parse_orientation(const std::string& key, const std::string& value)
{
    if (value == "c" || value == "canonical") {
        return Orientation::canonical;
    }
    if (value == "3d" || value == "random_rotation") {
        return Orientation::random_rotation;
    }
    throw ConfigError(key + ": expected c or 3d, got '" + value + "'");
}

void TrainConfig::validate() const
{
    if (epochs < 1) {
        throw ConfigError("train.epochs must be at least 1");
    }
    if (batch_size < 1) {
        throw ConfigError("train.batch_size must be at least 1");
    }
    if (!(adam.learning_rate > 0.0)) {
        throw ConfigError("train.learning_rate must be positive");
    }
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
    }
    if (!(adam.epsilon > 0.0)) {
        throw ConfigError("train.epsilon must be positive");
    }
}

void write_config(const TrainConfig& cfg, ConfigText& out)
{
    out.set("train.epochs", std::to_string(cfg.epochs));
    out.set("train.batch_size", std::to_string(cfg.batch_size));
    out.set("train.learning_rate", format_double(cfg.adam.learning_rate));
    out.set("train.beta1", format_double(cfg.adam.beta1));
    out.set("train.beta2", format_double(cfg.adam.beta2));
    out.set("train.epsilon", format_double(cfg.adam.epsilon));
    out.set("train.seed", std::to_string(cfg.seed));
    out.set("train.train_orientation", to_string(cfg.train_orientation));
    out.set("train.eval_orientation", to_string(cfg.eval_orientation));
}

bool apply_config_key(TrainConfig& cfg, const std::string& key, const std::string& value)
{
    auto small_int = [&] {
        const long long v = parse_int(key, value);
        if (v < 0 || v > 1000000) {
            throw ConfigError(key + ": value out of range");
        }
        return static_cast<int>(v);
    };
    if (key == "train.epochs") {
        cfg.epochs = small_int();
    } else if (key == "train.batch_size") {
        cfg.batch_size = small_int();
    } else if (key == "train.learning_rate") {
        cfg.adam.learning_rate = parse_double(key, value);
    } else if (key == "train.beta1") {
        cfg.adam.beta1 = parse_double(key, value);
    } else if (key == "train.beta2") {
        cfg.adam.beta2 = parse_double(key, value);
    } else if (key == "train.epsilon") {
        cfg.adam.epsilon = parse_double(key, value);
    } else if (key == "train.seed") {
        cfg.seed = parse_u64(key, value);
    } else if (key == "train.train_orientation") {
        cfg.train_orientation = parse_orientation(key, value);
    } else if (key == "train.eval_orientation") {
        cfg.eval_orientation = parse_orientation(key, value);
    } else {
        return false;
    }
    return true;
}

MemoryDataset::MemoryDataset(std::vector<Sample> samples) : samples_(std::move(samples))
{
    if (samples_.empty()) {
        throw ConfigError("dataset is empty");
    }
    for (const auto& s : samples_) {
        if (s.input.B() != bandlimit() || s.labels.B() != bandlimit() || s.input.channels != channels() ||
            s.labels.num_classes != num_classes()) {
            throw ShapeError("dataset samples do not share one shape");
        }
    }
}

int MemoryDataset::bandlimit() const
{
    return samples_.front().input.B();
}

int MemoryDataset::channels() const
{
    return samples_.front().input.channels;
}

int MemoryDataset::num_classes() const
{
    return samples_.front().labels.num_classes;
}

Sample MemoryDataset::get(std::size_t i, const RotationZYZ& r) const
{
    const Sample& s = samples_.at(i);
    if (r.is_identity()) {
        return s;
    }
    return {rotate_feature_map(s.input, r), rotate_labels(s.labels, r)};
}

RotationZYZ evaluation_rotation(std::uint64_t seed, std::size_t index)
{
    Rng rng(mix_seed(mix_seed(seed, kEvalRotationStream), index));
    return sample_haar(rng);
}

RotationZYZ training_rotation(std::uint64_t seed, int epoch, std::size_t index)
{
    Rng rng(mix_seed(mix_seed(mix_seed(seed, kTrainRotationStream), static_cast<std::uint64_t>(epoch)), index));
    return sample_haar(rng);
}

std::string EpochLog::format() const
{
    return "epoch=" + std::to_string(epoch) + " loss=" + format_double(loss) + " miou_w=" + format_double(miou_w) +
           " miou_u=" + format_double(miou_u) + " seconds=" + format_double(seconds);
}

TrainingState::TrainingState(nn::HourglassConfig mc, TrainConfig tc)
    : model_config(std::move(mc)), train_config(tc)
{
    train_config.validate();
    model = std::make_unique<nn::Hourglass>(model_config);
    model->initialize(mix_seed(train_config.seed, kInitStream));
    optimizer = std::make_unique<Adam>(model->parameters(), train_config.adam);
}

Checkpoint make_checkpoint(const TrainingState& s)
{
    Checkpoint c;
    nn::write_config(s.model_config, c.config);
    write_config(s.train_config, c.config);
    for (const nn::Parameter* p : s.model->parameters().all()) {
        c.tensors.push_back(make_tensor("param/" + p->name, p->shape, p->value));
    }
    auto& opt = *s.optimizer;
    for (std::size_t k = 0; k < opt.parameters().size(); ++k) {
        const nn::Parameter* p = opt.parameters()[k];
        c.tensors.push_back(make_tensor("adam.m/" + p->name, p->shape, opt.first_moments()[k]));
        c.tensors.push_back(make_tensor("adam.v/" + p->name, p->shape, opt.second_moments()[k]));
    }
    c.tensors.push_back(make_counter("adam.step", opt.steps()));
    c.tensors.push_back(make_counter("train.epochs_done", static_cast<std::uint64_t>(s.epochs_done)));
    return c;
}

void load_parameters(const Checkpoint& c, nn::Hourglass& model)
{
    for (nn::Parameter* p : model.parameters().all()) {
        p->value = require_tensor(c, "param/" + p->name, p->shape).values;
    }
}

TrainingState restore_checkpoint(const Checkpoint& c)
{
    nn::HourglassConfig mc;
    TrainConfig tc;
    for (const auto& [k, v] : c.config.entries()) {
        try {
            if (!nn::apply_config_key(mc, k, v) && !apply_config_key(tc, k, v)) {
                throw ConfigError("unknown key " + k);
            }
        } catch (const ConfigError& e) {
            throw FormatError(FormatFault::bad_value, std::string("checkpoint config: ") + e.what());
        }
    }
    TrainingState s(mc, tc);
    load_parameters(c, *s.model);
    auto& opt = *s.optimizer;
    for (std::size_t k = 0; k < opt.parameters().size(); ++k) {
        const nn::Parameter* p = opt.parameters()[k];
        opt.first_moments()[k] = require_tensor(c, "adam.m/" + p->name, p->shape).values;
        opt.second_moments()[k] = require_tensor(c, "adam.v/" + p->name, p->shape).values;
    }
    opt.set_steps(require_counter(c, "adam.step"));
    s.epochs_done = static_cast<int>(require_counter(c, "train.epochs_done"));
    return s;
}

void train(TrainingState& s, const Dataset& data, const std::function<void(const EpochLog&)>& on_epoch)
{
    const auto& mc = s.model_config;
    if (data.bandlimit() != mc.bandlimit || data.channels() != mc.input_channels ||
        data.num_classes() != mc.num_classes) {
        throw ShapeError("dataset (B=" + std::to_string(data.bandlimit()) + ", " + std::to_string(data.channels()) +
                         " channels, " + std::to_string(data.num_classes()) + " classes) does not match the model");
    }
    const auto& tc = s.train_config;
    nn::Hourglass& model = *s.model;
    const std::size_t n = data.size();
    for (int epoch = s.epochs_done; epoch < tc.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(mix_seed(mix_seed(tc.seed, kShuffleStream), static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[shuffle.below(i)]);
        }

        EvalReport report(mc.num_classes);
        EpochLog log;
        log.epoch = epoch + 1;
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t b0 = 0; b0 < n; b0 += static_cast<std::size_t>(tc.batch_size)) {
            const std::size_t b1 = std::min(n, b0 + static_cast<std::size_t>(tc.batch_size));
            std::vector<FeatureMap> inputs;
            std::vector<LabelMap> labels;
            for (std::size_t k = b0; k < b1; ++k) {
                const std::size_t idx = order[k];
                const RotationZYZ r = tc.train_orientation == Orientation::random_rotation
                                          ? training_rotation(tc.seed, epoch, idx)
                                          : RotationZYZ::identity();
                Sample smp = data.get(idx, r);
                inputs.push_back(std::move(smp.input));
                labels.push_back(std::move(smp.labels));
            }
            model.parameters().zero_grad();
            nn::Tape tape;
            const nn::VarId out = model.forward(tape, tape.input(nn::stack(inputs)), nn::Mode::train);
            nn::Tensor grad;
            const double loss = weighted_cross_entropy(tape.value(out), labels, &grad);
            if (!std::isfinite(loss)) {
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                      std::to_string(batches + 1));
            }
            for (int k = 0; k < static_cast<int>(labels.size()); ++k) {
                report.accumulate(argmax_labels(tape.value(out), k), labels[static_cast<std::size_t>(k)]);
            }
            tape.backward(out, grad);
            s.optimizer->step();
            if (batches == 0) {
                log.first_batch_loss = loss;
            }
            log.last_batch_loss = loss;
            loss_sum += loss;
            ++batches;
        }
        s.epochs_done = epoch + 1;
        log.loss = loss_sum / static_cast<double>(batches);
        log.miou_w = report.mean_iou(true);
        log.miou_u = report.mean_iou(false);
        log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_epoch) {
            on_epoch(log);
        }
    }
}

EvalReport evaluate(nn::Hourglass& model, const Dataset& data, Orientation mode, std::uint64_t seed, int batch_size)
{
    const auto& mc = model.config();
    if (data.bandlimit() != mc.bandlimit || data.channels() != mc.input_channels ||
        data.num_classes() != mc.num_classes) {
        throw ShapeError("dataset does not match the model");
    }
    if (batch_size < 1) {
        throw ConfigError("evaluation batch size must be positive");
    }
    EvalReport report(mc.num_classes);
    const std::size_t n = data.size();
    for (std::size_t b0 = 0; b0 < n; b0 += static_cast<std::size_t>(batch_size)) {
        const std::size_t b1 = std::min(n, b0 + static_cast<std::size_t>(batch_size));
        std::vector<FeatureMap> inputs;
        std::vector<LabelMap> labels;
        for (std::size_t i = b0; i < b1; ++i) {
            const RotationZYZ r =
                mode == Orientation::random_rotation ? evaluation_rotation(seed, i) : RotationZYZ::identity();
            Sample smp = data.get(i, r);
            inputs.push_back(std::move(smp.input));
            labels.push_back(std::move(smp.labels));
        }
        nn::Tape tape(false);
        const nn::VarId out = model.forward(tape, tape.input(nn::stack(inputs)), nn::Mode::eval);
        for (int k = 0; k < static_cast<int>(labels.size()); ++k) {
            report.accumulate(argmax_labels(tape.value(out), k), labels[static_cast<std::size_t>(k)]);
        }
    }
    return report;
}

LabelMap predict(nn::Hourglass& model, const FeatureMap& input)
{
    nn::Tape tape(false);
    const nn::VarId out = model.forward(tape, tape.input(nn::stack({input})), nn::Mode::eval);
    return argmax_labels(tape.value(out), 0);
}

} // namespace schn::train
