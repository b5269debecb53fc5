#include "schn/binary.hpp"
#include "schn/image.hpp"
#include "schn/io.hpp"
#include "schn/random.hpp"
#include "schn/sht.hpp"
#include "schn/wigner.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace schn;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Workspace {
public:
    Workspace()
        : dir_(fs::temp_directory_path() / ("schn_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++)))
    {
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Workspace() { fs::remove_all(dir_); }

    fs::path operator/(const std::string& s) const { return dir_ / s; }

    Run run(const std::string& args, const std::string& env = "") const
    {
        const auto out = dir_ / "stdout.txt";
        const auto err = dir_ / "stderr.txt";
        const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" SCHN_CLI_PATH "' " + args + " >'" +
                                out.string() + "' 2>'" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

private:
    static inline int counter_ = 0;
    fs::path dir_;
};

const char* kTinyModel = "--set model.levels=2 --set model.channels=4,4,4 --set model.anchors=4 "
                         "--set train.batch_size=2";

} // namespace

TEST_CASE("gen-data writes pairs, manifest and config, reproducibly")
{
    Workspace ws;
    const std::string args = "gen-data --out d --num 4 --bandlimit 8 --classes 6 --seed 1 --pose c";
    REQUIRE(ws.run(args).code == 0);
    for (int i = 0; i < 4; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "sample_%05d", i);
        CHECK(fs::exists(ws / ("d/" + std::string(name) + ".sphs")));
        CHECK(fs::exists(ws / ("d/" + std::string(name) + ".sphl")));
    }
    CHECK(fs::exists(ws / "d/manifest.txt"));
    CHECK(slurp(ws / "d/dataset.cfg").find("scenes.bandlimit = 8") != std::string::npos);

    REQUIRE(ws.run("gen-data --out e --num 4 --bandlimit 8 --classes 6 --seed 1 --pose c").code == 0);
    for (const auto& f : {"manifest.txt", "dataset.cfg", "sample_00000.sphs", "sample_00003.sphl"}) {
        CHECK(slurp(ws / (std::string("d/") + f)) == slurp(ws / (std::string("e/") + f)));
    }
}

TEST_CASE("config errors exit with 2 and name the offending flag or key")
{
    Workspace ws;
    auto r = ws.run("gen-data --out d --num 4 --bandlimit 8 --pose sideways");
    CHECK(r.code == 2);
    CHECK(r.err.find("--pose") != std::string::npos);

    r = ws.run("gen-data --out d --num 2 --bandlimit 8 --set scenes.bogus=1");
    CHECK(r.code == 2);
    CHECK(r.err.find("scenes.bogus") != std::string::npos);

    r = ws.run("gen-data --out d --num 2 --bandlimit 8 --classes 3");
    CHECK(r.code == 2);

    CHECK(ws.run("gen-data --num 2").code == 2); // --out missing
    CHECK(ws.run("nonsense").code == 2);
    CHECK(ws.run("--threads 0 check --suite sht").code == 2);
    CHECK(ws.run("check --suite sht", "SCHN_THREADS=many").code == 2);
    CHECK(ws.run("check --suite bogus").code == 2);
}

TEST_CASE("io errors exit with 3")
{
    Workspace ws;
    auto r = ws.run("eval --ckpt missing.schn --data nowhere");
    CHECK(r.code == 3);
    CHECK(r.err.find("missing.schn") != std::string::npos);

    std::ofstream(ws / "junk.sphs") << "not a signal";
    CHECK(ws.run("rotate --in junk.sphs --out r.sphs").code == 3);
    CHECK(ws.run("project --faces nofaces --out p.sphs").code == 3);
}

TEST_CASE("train, eval and predict")
{
    Workspace ws;
    REQUIRE(ws.run("gen-data --out d --num 4 --bandlimit 8 --seed 3").code == 0);
    auto r = ws.run(std::string("train --data d --out t --set train.epochs=2 ") + kTinyModel);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("epoch=2 loss=") != std::string::npos);
    CHECK(fs::exists(ws / "t/checkpoint.schn"));
    const std::string log = slurp(ws / "t/epochs.log");
    CHECK(log.starts_with("epoch=1 loss="));
    CHECK(log.find("miou_w=") != std::string::npos);
    const std::string cfg = slurp(ws / "t/config.txt");
    CHECK(cfg.find("train.epochs = 2") != std::string::npos);
    CHECK(cfg.find("model.levels = 2") != std::string::npos);

    for (const char* o : {"c", "3d"}) {
        r = ws.run(std::string("eval --ckpt t/checkpoint.schn --data d --orientation ") + o);
        REQUIRE(r.code == 0);
        CHECK(r.out.find(std::string("orientation=") + o) != std::string::npos);
        const auto pos = r.out.find("miou_w=");
        REQUIRE(pos != std::string::npos);
        const double miou = std::stod(r.out.substr(pos + 7));
        CHECK(miou >= 0.0);
        CHECK(miou <= 1.0);
    }
    CHECK(ws.run("eval --ckpt t/checkpoint.schn --data d --orientation up").code == 2);

    r = ws.run("predict --ckpt t/checkpoint.schn --in d/sample_00001.sphs --out p.sphl --png p.png");
    REQUIRE(r.code == 0);
    const LabelMap pred = read_labels(ws / "p.sphl");
    const FeatureMap in = read_signal(ws / "d/sample_00001.sphs");
    CHECK(pred.B() == in.B());
    CHECK(pred.num_classes == 6);
    const RgbImage png = read_png(ws / "p.png");
    CHECK(png.width == 2 * png.height);
    CHECK(png.height == 16);

    // Resuming to a later epoch continues the log.
    r = ws.run(std::string("train --data d --out t --resume --set train.epochs=3 ") + kTinyModel);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("epoch=3") != std::string::npos);
    CHECK(slurp(ws / "t/epochs.log").find("epoch=3") != std::string::npos);

    CHECK(ws.run("train --data d --out u --set model.bandlimit=16").code == 2);
}

TEST_CASE("divergence exits with 4")
{
    Workspace ws;
    REQUIRE(ws.run("gen-data --out d --num 4 --bandlimit 8 --seed 3").code == 0);
    const auto r =
        ws.run(std::string("train --data d --out t --set train.epochs=5 --set train.learning_rate=1e300 ") + kTinyModel);
    CHECK(r.code == 4);
}

TEST_CASE("check runs suites and reports per property")
{
    Workspace ws;
    auto r = ws.run("check --suite sht");
    CHECK(r.code == 0);
    CHECK(r.out.find("round_trip_B=64") != std::string::npos);
    CHECK(r.out.find("parseval_B=64") != std::string::npos);
    CHECK(r.out.find("result=PASS") != std::string::npos);
    r = ws.run("check --suite equivariance");
    CHECK(r.code == 0);
    for (const char* layer : {"spectral_conv", "pointwise_conv", "truncate", "zeropad", "weighted_norm"}) {
        CHECK(r.out.find(layer) != std::string::npos);
    }
}

TEST_CASE("project constant faces gives a constant signal")
{
    Workspace ws;
    fs::create_directories(ws / "faces");
    RgbImage gray(6, 6);
    std::fill(gray.pixels.begin(), gray.pixels.end(), 128);
    for (const char* f : {"front", "back", "left", "right", "up", "down"}) {
        write_png(gray, ws / (std::string("faces/") + f + ".png"));
    }
    REQUIRE(ws.run("project --faces faces --bandlimit 8 --out p.sphs").code == 0);
    const FeatureMap m = read_signal(ws / "p.sphs");
    CHECK(m.channels == 3);
    CHECK(m.B() == 8);
    for (double v : m.values) {
        REQUIRE(std::abs(v - 128.0 / 255.0) < 1e-12);
    }
}

TEST_CASE("rotate: identity and inverse round trip")
{
    Workspace ws;
    Rng rng(9);
    const int B = 8;
    FeatureMap m(shared_grid(B), 2);
    for (int c = 0; c < 2; ++c) {
        SpectralCoeffs k{Bandlimit(B)};
        for (int l = 0; l < B; ++l) {
            k.at(l, 0) = rng.normal();
            for (int mm = 1; mm <= l; ++mm) {
                const complex v(rng.normal(), rng.normal());
                k.at(l, mm) = v;
                k.at(l, -mm) = (mm % 2 ? -1.0 : 1.0) * std::conj(v);
            }
        }
        const auto s = sht_inverse(k, shared_grid(B));
        std::copy(s.values.begin(), s.values.end(), m.channel(c).begin());
    }
    write_signal(m, ws / "in.sphs");

    REQUIRE(ws.run("rotate --in in.sphs --out id.sphs").code == 0);
    const FeatureMap id = read_signal(ws / "id.sphs");
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        REQUIRE(std::abs(id.values[i] - m.values[i]) < 1e-10);
    }

    const RotationZYZ r{0.3, 1.1, 2.0};
    const RotationZYZ inv = r.inverse();
    char args[256];
    std::snprintf(args, sizeof args, "rotate --in in.sphs --out r.sphs --alpha %.17g --beta %.17g --gamma %.17g",
                  r.alpha, r.beta, r.gamma);
    REQUIRE(ws.run(args).code == 0);
    std::snprintf(args, sizeof args, "rotate --in r.sphs --out back.sphs --alpha %.17g --beta %.17g --gamma %.17g",
                  inv.alpha, inv.beta, inv.gamma);
    REQUIRE(ws.run(args).code == 0);
    const FeatureMap back = read_signal(ws / "back.sphs");
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        REQUIRE(std::abs(back.values[i] - m.values[i]) < 1e-8);
    }
    CHECK(ws.run("rotate --in in.sphs --out x.sphs --beta 4").code == 2);
}

TEST_CASE("bench reports transform timings including B=128")
{
    Workspace ws;
    const auto r = ws.run("--threads 2 bench --suite sht --bandlimit 16 --bandlimit 128 --repeats 3");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("sht_forward_ms=") != std::string::npos);
    CHECK(r.out.find("bandlimit=128 threads=1") != std::string::npos);
    CHECK(r.out.find("bandlimit=128 threads=2") != std::string::npos);
    const auto layers = ws.run("bench --suite layers --bandlimit 8 --repeats 2");
    CHECK(layers.code == 0);
    CHECK(layers.out.find("layer=sph_conv") != std::string::npos);
}
