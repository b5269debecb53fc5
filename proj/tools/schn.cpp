#include "schn/binary.hpp"
#include "schn/config.hpp"
#include "schn/error.hpp"
#include "schn/image.hpp"
#include "schn/io.hpp"
#include "schn/nn/layers.hpp"
#include "schn/random.hpp"
#include "schn/scenes/cubemap.hpp"
#include "schn/scenes/dataset.hpp"
#include "schn/sht.hpp"
#include "schn/train/trainer.hpp"
#include "schn/verify.hpp"
#include "schn/wigner.hpp"

#include <CLI11.hpp>
#include <malloc.h>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace schn;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDivergence = 4;

const char* kEffectiveConfig = "config.txt";
const char* kCheckpointFile = "checkpoint.schn";
const char* kEpochLog = "epochs.log";

// Config file (optional) followed by --set overrides, in order.
ConfigText load_config(const std::string& path, const std::vector<std::string>& overrides)
{
    ConfigText cfg;
    if (!path.empty()) {
        const auto bytes = binary::read_file(path);
        try {
            cfg = ConfigText::parse(std::string_view(bytes.data(), bytes.size()));
        } catch (const ConfigError& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("--set expects key=value, got '" + o + "'");
        }
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
            return s;
        };
        cfg.set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
    }
    return cfg;
}

void write_text(const fs::path& path, const std::string& text)
{
    binary::write_file(path, std::span<const char>(text.data(), text.size()));
}

void make_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError(dir.string() + ": cannot create directory: " + ec.message());
    }
}

double ms_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

// ---- gen-data --------------------------------------------------------------

struct GenDataArgs {
    std::string out, config, pose = "c";
    std::vector<std::string> set;
    std::optional<std::size_t> num;
    std::optional<int> bandlimit, classes;
    std::optional<std::uint64_t> seed;
};

int cmd_gen_data(const GenDataArgs& a)
{
    scenes::DatasetConfig cfg;
    const ConfigText file = load_config(a.config, a.set);
    for (const auto& [k, v] : file.entries()) {
        if (!scenes::apply_config_key(cfg.scene, k, v)) {
            throw ConfigError("unknown config key '" + k + "' (gen-data accepts scenes.*)");
        }
    }
    if (a.num) {
        cfg.num = *a.num;
    }
    if (a.bandlimit) {
        cfg.scene.bandlimit = *a.bandlimit;
    }
    if (a.classes) {
        cfg.scene.num_classes = *a.classes;
    }
    if (a.seed) {
        cfg.seed = *a.seed;
    }
    if (cfg.num == 0) {
        throw ConfigError("--num must be positive");
    }
    cfg.pose = train::parse_orientation("--pose", a.pose);
    cfg.scene.validate();
    const auto entries = scenes::build_dataset(cfg, a.out);
    std::printf("samples=%zu out=%s\n", entries.size(), a.out.c_str());
    return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    std::string config, data, out;
    std::vector<std::string> set;
    bool resume = false;
};

int cmd_train(const TrainArgs& a)
{
    const ConfigText file = load_config(a.config, a.set);
    scenes::SceneDataset data(a.data);

    nn::HourglassConfig mc = nn::HourglassConfig::desk();
    mc.bandlimit = data.bandlimit();
    mc.num_classes = data.num_classes();
    mc.input_channels = data.channels();
    train::TrainConfig tc;
    for (const auto& [k, v] : file.entries()) {
        if (!nn::apply_config_key(mc, k, v) && !train::apply_config_key(tc, k, v)) {
            throw ConfigError("unknown config key '" + k + "' (train accepts model.* and train.*)");
        }
    }
    if (mc.bandlimit != data.bandlimit() || mc.num_classes != data.num_classes() ||
        mc.input_channels != data.channels()) {
        throw ConfigError("model.bandlimit/num_classes/input_channels disagree with the dataset in " + a.data);
    }
    mc.validate();
    tc.validate();

    const fs::path out(a.out);
    make_dir(out);
    std::optional<train::TrainingState> state;
    if (a.resume && fs::exists(out / kCheckpointFile)) {
        state.emplace(train::restore_checkpoint(train::load_checkpoint(out / kCheckpointFile)));
        state->train_config.epochs = tc.epochs;
    } else {
        state.emplace(mc, tc);
    }
    ConfigText effective;
    nn::write_config(state->model_config, effective);
    train::write_config(state->train_config, effective);
    write_text(out / kEffectiveConfig, effective.format());

    std::ofstream log(out / kEpochLog, state->epochs_done > 0 ? std::ios::app : std::ios::trunc);
    if (!log) {
        throw IoError((out / kEpochLog).string() + ": cannot open for writing");
    }
    train::train(*state, data, [&](const train::EpochLog& e) {
        const std::string line = e.format();
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
        log << line << '\n' << std::flush;
        train::save_checkpoint(out / kCheckpointFile, train::make_checkpoint(*state));
    });
    train::save_checkpoint(out / kCheckpointFile, train::make_checkpoint(*state));
    return 0;
}

// ---- eval / predict ----------------------------------------------------------

struct EvalArgs {
    std::string ckpt, data, orientation = "c";
    std::uint64_t seed = 1;
    int batch = 8;
};

int cmd_eval(const EvalArgs& a)
{
    const auto mode = train::parse_orientation("--orientation", a.orientation);
    if (a.batch < 1) {
        throw ConfigError("--batch must be positive");
    }
    auto state = train::restore_checkpoint(train::load_checkpoint(a.ckpt));
    scenes::SceneDataset data(a.data);
    const auto report = train::evaluate(*state.model, data, mode, a.seed, a.batch);
    std::printf("orientation=%s\n%s", train::to_string(mode).c_str(), report.format().c_str());
    return 0;
}

RgbImage render_mask(const LabelMap& labels)
{
    // Equirectangular: longitude across 2 * 2B columns, colatitude down 2B rows.
    const int side = labels.grid->resolution();
    RgbImage img(2 * side, side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < 2 * side; ++x) {
            const auto c = scenes::class_color(labels.labels[std::size_t(y) * side + x / 2]);
            for (int k = 0; k < 3; ++k) {
                img.at(x, y)[k] = static_cast<std::uint8_t>(std::clamp(c[std::size_t(k)], 0.0, 1.0) * 255.0 + 0.5);
            }
        }
    }
    return img;
}

struct PredictArgs {
    std::string ckpt, in, out, png;
};

int cmd_predict(const PredictArgs& a)
{
    auto state = train::restore_checkpoint(train::load_checkpoint(a.ckpt));
    const FeatureMap input = read_signal(a.in);
    const auto& mc = state.model->config();
    if (input.B() != mc.bandlimit || input.channels != mc.input_channels) {
        throw ConfigError(a.in + ": expected " + std::to_string(mc.input_channels) + " channels at bandlimit " +
                          std::to_string(mc.bandlimit));
    }
    const LabelMap labels = train::predict(*state.model, input);
    write_labels(labels, a.out);
    if (!a.png.empty()) {
        write_png(render_mask(labels), a.png);
    }
    return 0;
}

// ---- check -----------------------------------------------------------------

int cmd_check(const std::string& suite, std::uint64_t seed)
{
    std::vector<verify::CheckResult> results;
    auto run = [&](const std::string& name, auto&& fn) {
        if (suite == name || suite == "all") {
            auto r = fn();
            results.insert(results.end(), r.begin(), r.end());
        }
    };
    run("sht", [&] { return verify::sht_suite({4, 8, 16, 32, 64}, seed); });
    run("rotation", [&] { return verify::rotation_suite(seed); });
    run("equivariance", [&] { return verify::equivariance_suite(100, seed); });
    run("gradients", [&] { return verify::gradient_suite(seed); });
    bool ok = true;
    for (const auto& r : results) {
        std::printf("%s\n", r.format().c_str());
        ok = ok && r.passed();
    }
    std::printf("checks=%zu result=%s\n", results.size(), ok ? "PASS" : "FAIL");
    return ok ? 0 : kExitFailure;
}

// ---- project / rotate ------------------------------------------------------------

int cmd_project(const std::string& faces, int B, const std::string& out)
{
    if (B < 1 || B > 1024) {
        throw ConfigError("--bandlimit must lie in [1, 1024]");
    }
    write_signal(scenes::cubemap_to_sphere(scenes::read_cube_faces(faces), B), out);
    return 0;
}

int cmd_rotate(const std::string& in, const RotationZYZ& r, const std::string& out)
{
    r.validate();
    SampleType type = SampleType::f64;
    const FeatureMap m = read_signal(in, &type);
    write_signal(rotate_feature_map(m, r), out, type);
    return 0;
}

// ---- bench -----------------------------------------------------------------

void bench_sht(int B, int threads, int repeats)
{
    const ShtPlan& plan = sht_plan(B);
    Rng rng(7);
    std::vector<complex> half(plan.half_size());
    for (std::size_t i = 0; i < half.size(); ++i) {
        half[i] = complex(rng.normal(), plan.half_orders()[i] == 0 ? 0.0 : rng.normal());
    }
    std::vector<double> signal(plan.grid().node_count());
    const bool parallel = threads > 1;
    omp_set_num_threads(threads);
    plan.synthesize(half, signal, parallel);
    plan.analyze(signal, half, parallel);
    std::vector<double> fwd, inv;
    for (int r = 0; r < repeats; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        plan.analyze(signal, half, parallel);
        fwd.push_back(ms_since(t0));
        t0 = std::chrono::steady_clock::now();
        plan.synthesize(half, signal, parallel);
        inv.push_back(ms_since(t0));
    }
    const double f = median(fwd), i = median(inv);
    std::printf("suite=sht bandlimit=%d threads=%d sht_forward_ms=%.3f sht_inverse_ms=%.3f sht_roundtrip_ms=%.3f\n", B,
                threads, f, i, f + i);
}

void bench_layers(int B, int threads, int repeats)
{
    omp_set_num_threads(threads);
    const int C = 16;
    Rng rng(7);
    nn::ParameterSet ps;
    auto& anchors = ps.add("a", {std::size_t(C), std::size_t(C), std::size_t(std::min(B, 16))});
    auto& bias = ps.add("b", {std::size_t(C)});
    auto& weight = ps.add("w", {std::size_t(C), std::size_t(C)});
    for (auto* p : ps.trainable()) {
        for (auto& v : p->value) {
            v = rng.normal(0.0, 0.1);
        }
    }
    nn::Tensor x(1, C, B);
    for (auto& v : x.data) {
        v = rng.normal();
    }
    const auto time_layer = [&](const char* name, auto&& layer) {
        std::vector<double> fwd, bwd;
        for (int r = 0; r <= repeats; ++r) {
            nn::Tape tape;
            const nn::VarId in = tape.input(x, true);
            auto t0 = std::chrono::steady_clock::now();
            const nn::VarId out = layer(tape, in);
            const double f = ms_since(t0);
            t0 = std::chrono::steady_clock::now();
            tape.backward(out, tape.value(out));
            const double b = ms_since(t0);
            if (r > 0) { // first pass warms plan caches
                fwd.push_back(f);
                bwd.push_back(b);
            }
        }
        std::printf("suite=layers layer=%s bandlimit=%d channels=%d threads=%d forward_ms=%.3f backward_ms=%.3f\n",
                    name, B, C, threads, median(fwd), median(bwd));
    };
    time_layer("sph_conv", [&](nn::Tape& t, nn::VarId v) { return nn::sph_conv(t, v, anchors, bias); });
    time_layer("pointwise_conv", [&](nn::Tape& t, nn::VarId v) { return nn::pointwise_conv(t, v, weight, bias); });
}

int cmd_bench(const std::string& suite, const std::vector<int>& bandlimits, int threads, int repeats)
{
    if (repeats < 1) {
        throw ConfigError("--repeats must be positive");
    }
    for (int B : bandlimits) {
        if (B < 2 || B > 1024) {
            throw ConfigError("--bandlimit values must lie in [2, 1024]");
        }
    }
    std::vector<int> thread_counts{1};
    if (threads > 1) {
        thread_counts.push_back(threads);
    }
    for (int B : bandlimits) {
        for (int t : thread_counts) {
            if (suite == "sht" || suite == "all") {
                bench_sht(B, t, repeats);
            }
            if (suite == "layers" || suite == "all") {
                bench_layers(B, t, std::max(1, repeats / 4));
            }
        }
    }
    return 0;
}

int resolve_threads(int flag)
{
    if (flag > 0) {
        return flag;
    }
    if (const char* env = std::getenv("SCHN_THREADS"); env && *env) {
        const long long v = parse_int("SCHN_THREADS", env);
        if (v < 1 || v > 4096) {
            throw ConfigError("SCHN_THREADS must lie in [1, 4096]");
        }
        return static_cast<int>(v);
    }
    return omp_get_num_procs();
}

} // namespace

int main(int argc, char** argv)
{
    // Layer temporaries are large and short-lived; keep them off mmap.
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);

    CLI::App app{"Spherical convolutional hourglass networks: data, training, evaluation and checks"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: SCHN_THREADS, else all cores)")
        ->check(CLI::Range(1, 4096));

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic labeled dataset");
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();
    gen_cmd->add_option("--num", gen.num, "Number of samples")->required();
    gen_cmd->add_option("--bandlimit", gen.bandlimit, "Grid bandlimit B");
    gen_cmd->add_option("--classes", gen.classes, "Number of classes (>= 4)");
    gen_cmd->add_option("--seed", gen.seed, "Dataset seed");
    gen_cmd->add_option("--pose", gen.pose, "c (canonical) or 3d (random rotation)");
    gen_cmd->add_option("--config", gen.config, "Config file with scenes.* keys");
    gen_cmd->add_option("--set", gen.set, "key=value override, repeatable");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a model on a generated dataset");
    train_cmd->add_option("--config", tr.config, "Config file with model.* and train.* keys");
    train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
    train_cmd->add_option("--out", tr.out, "Output directory")->required();
    train_cmd->add_option("--set", tr.set, "key=value override, repeatable");
    train_cmd->add_flag("--resume", tr.resume, "Continue from <out>/checkpoint.schn if present");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
    eval_cmd->add_option("--orientation", ev.orientation, "c (as stored) or 3d (random rotations)");
    eval_cmd->add_option("--seed", ev.seed, "Rotation seed for 3d evaluation");
    eval_cmd->add_option("--batch", ev.batch, "Evaluation batch size");

    PredictArgs pr;
    auto* predict_cmd = app.add_subcommand("predict", "Predict a label mask for one signal");
    predict_cmd->add_option("--ckpt", pr.ckpt, "Checkpoint file")->required();
    predict_cmd->add_option("--in", pr.in, "Input .sphs signal")->required();
    predict_cmd->add_option("--out", pr.out, "Output .sphl mask")->required();
    predict_cmd->add_option("--png", pr.png, "Also write an equirectangular color PNG");

    std::string suite = "all";
    std::uint64_t check_seed = 1;
    auto* check_cmd = app.add_subcommand("check", "Run verification suites");
    check_cmd->add_option("--suite", suite, "sht, rotation, equivariance, gradients or all")
        ->check(CLI::IsMember({"sht", "rotation", "equivariance", "gradients", "all"}));
    check_cmd->add_option("--seed", check_seed, "Seed for the random test inputs");

    std::string faces, proj_out;
    int proj_B = 32;
    auto* project_cmd = app.add_subcommand("project", "Map six cube faces onto the sphere");
    project_cmd->add_option("--faces", faces, "Directory with front/back/left/right/up/down.png")->required();
    project_cmd->add_option("--bandlimit", proj_B, "Grid bandlimit B");
    project_cmd->add_option("--out", proj_out, "Output .sphs")->required();

    std::string rot_in, rot_out;
    RotationZYZ rot;
    auto* rotate_cmd = app.add_subcommand("rotate", "Rotate a signal by Z-Y-Z Euler angles (radians)");
    rotate_cmd->add_option("--in", rot_in, "Input .sphs")->required();
    rotate_cmd->add_option("--alpha", rot.alpha, "First z rotation");
    rotate_cmd->add_option("--beta", rot.beta, "y rotation in [0, pi]");
    rotate_cmd->add_option("--gamma", rot.gamma, "Second z rotation");
    rotate_cmd->add_option("--out", rot_out, "Output .sphs")->required();

    std::string bench_suite = "sht";
    std::vector<int> bench_B{32, 64, 128};
    int repeats = 10;
    auto* bench_cmd = app.add_subcommand("bench", "Time transforms and layers");
    bench_cmd->add_option("--suite", bench_suite, "sht, layers or all")
        ->check(CLI::IsMember({"sht", "layers", "all"}));
    bench_cmd->add_option("--bandlimit", bench_B, "Bandlimits to time");
    bench_cmd->add_option("--repeats", repeats, "Timed repetitions (median reported)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const int n = resolve_threads(threads);
        omp_set_num_threads(n);
        if (*gen_cmd) {
            return cmd_gen_data(gen);
        }
        if (*train_cmd) {
            return cmd_train(tr);
        }
        if (*eval_cmd) {
            return cmd_eval(ev);
        }
        if (*predict_cmd) {
            return cmd_predict(pr);
        }
        if (*check_cmd) {
            return cmd_check(suite, check_seed);
        }
        if (*project_cmd) {
            return cmd_project(faces, proj_B, proj_out);
        }
        if (*rotate_cmd) {
            return cmd_rotate(rot_in, rot, rot_out);
        }
        if (*bench_cmd) {
            return cmd_bench(bench_suite, bench_B, n, repeats);
        }
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDivergence;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitFailure;
}
