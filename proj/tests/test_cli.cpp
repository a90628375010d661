#include <doctest.h>

#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>

#include "mlcurv/util.hpp"

#ifndef MLCURV_CLI_PATH
#define MLCURV_CLI_PATH "mlcurv"
#endif

using namespace mlcurv;
namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
    std::string cmd = std::string(MLCURV_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("mlcurv_cli_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& s) const { return (path / s).string(); }
};

}  // namespace

TEST_CASE("cli: generation is reproducible and replayable byte-for-byte") {
    TempDir tmp;
    std::string a = tmp / "a", b = tmp / "b", c = tmp / "c";
    REQUIRE(cli("--out " + a + " --seed 7 gen-spheres --eta 6 --nsph 10 --nsam 2 --nu 2") == 0);
    REQUIRE(cli("--out " + b + " --seed 7 gen-spheres --eta 6 --nsph 10 --nsam 2 --nu 2") == 0);
    std::string ha = sha256_file(a + "/spheres_ns.c3ds");
    CHECK(ha == sha256_file(b + "/spheres_ns.c3ds"));

    CHECK(cli("--out " + c + " replay --manifest " + a + "/gen-spheres.manifest.json") == 0);
    CHECK(ha == sha256_file(c + "/spheres_ns.c3ds"));

    // a different seed changes the artifact
    std::string d = tmp / "d";
    REQUIRE(cli("--out " + d + " --seed 8 gen-spheres --eta 6 --nsph 10 --nsam 2 --nu 2") == 0);
    CHECK(ha != sha256_file(d + "/spheres_ns.c3ds"));
}

TEST_CASE("cli: config-file values are overridden by flags") {
    TempDir tmp;
    std::string cfgpath = tmp / "run.toml";
    write_text_file(cfgpath, "seed=21\nout=\"" + (tmp / "cfgout") + "\"\n");
    REQUIRE(cli("--config " + cfgpath + " gen-spheres --eta 6 --nsph 6 --nsam 1 --nu 1") == 0);
    REQUIRE(fs::exists(tmp / "cfgout/spheres_ns.c3ds"));
    // flag overrides the file: artifact equals a plain --seed 9 run
    std::string e = tmp / "e", f = tmp / "f";
    REQUIRE(cli("--config " + cfgpath + " --out " + e + " --seed 9 gen-spheres --eta 6 --nsph 6 --nsam 1 --nu 1") ==
            0);
    REQUIRE(cli("--out " + f + " --seed 9 gen-spheres --eta 6 --nsph 6 --nsam 1 --nu 1") == 0);
    CHECK(sha256_file(e + "/spheres_ns.c3ds") == sha256_file(f + "/spheres_ns.c3ds"));
}

TEST_CASE("cli: exit codes distinguish config, artifact, and usage errors") {
    TempDir tmp;
    CHECK(cli("definitely-not-a-subcommand") == 2);
    CHECK(cli("merge --inputs nope.c3ds --fractions 1.0 --class ns") != 0);

    // artifact mismatch: merging an ns dataset as sd
    std::string g = tmp / "g";
    REQUIRE(cli("--out " + g + " --seed 3 gen-spheres --eta 6 --nsph 6 --nsam 1 --nu 1") == 0);
    CHECK(cli("--out " + g + " merge --inputs " + g + "/spheres_ns.c3ds --fractions 1.0 --class sd") == 3);

    // corrupt magic
    write_text_file(g + "/broken.c3ds", "XXXX not a dataset");
    CHECK(cli("--out " + g + " split --input " + g + "/broken.c3ds") == 3);
}

TEST_CASE("cli: training is seed-reproducible through the whole pipeline") {
    TempDir tmp;
    std::string p = tmp / "p";
    REQUIRE(cli("--out " + p + " --seed 3 gen-spheres --eta 6 --nsph 40 --nsam 4 --nu 2") == 0);
    REQUIRE(cli("--out " + p + " --seed 5 split --input " + p + "/spheres_ns.c3ds --out-prefix d") == 0);
    REQUIRE(cli("--out " + p + " --seed 6 fit-preprocess --train " + p + "/d.train.c3ds --m-iota 16 --out-name s.json") ==
            0);
    std::string train_args = " --seed 8 train --train " + p + "/d.train.c3ds --val " + p + "/d.validation.c3ds" +
                             " --stats " + p + "/s.json --class ns --n-h 16 --max-epochs 6";
    REQUIRE(cli("--out " + p + train_args + " --out-name m1.json") == 0);
    REQUIRE(cli("--out " + p + train_args + " --out-name m2.json") == 0);
    CHECK(sha256_file(p + "/m1.json") == sha256_file(p + "/m2.json"));

    // the eval report carries the improvement-factor column
    REQUIRE(cli("--out " + p + " --seed 9 eval-geometry --shape ellipsoid --eta 5") == 0);
    std::string csv = read_text_file(p + "/ellipsoid_summary.csv");
    CHECK(csv.find("improvement_mae") != std::string::npos);
}
