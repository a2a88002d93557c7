// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "glint/image_io.h"
#include "glint/mesh.h"
#include "testutil.h"

using namespace glint;

namespace {

std::string cli_path() {
    const char* env = std::getenv("GLINT_CLI");
    REQUIRE_MESSAGE(env != nullptr, "GLINT_CLI must point at the built binary");
    return env;
}

int run(const std::string& args, const std::string& log) {
    const std::string cmd = cli_path() + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string setup_scene_dir() {
    const std::string dir = testutil::make_temp_dir("cli");
    save_obj(make_icosphere(2), dir + "sphere.obj");
    write_pfm(testutil::make_test_env(16, 8).pixels, dir + "env.pfm");
    {
        std::ofstream scene(dir + "sg.scene");
        scene << "[mesh]\npath = sphere.obj\n"
              << "[camera]\neye = 0 0 2.8\nwidth = 32\nheight = 32\n"
              << "[brdf]\nalbedo = 0.6 0.45 0.3\nspecular = 0.6\nroughness = 0.3\n"
              << "[sg_light]\ncount = 4\ninit = fibonacci\n";
    }
    {
        std::ofstream scene(dir + "mc.scene");
        scene << "[mesh]\npath = sphere.obj\n"
              << "[camera]\neye = 0 0 2.8\nwidth = 32\nheight = 32\n"
              << "[envmap]\npath = env.pfm\n"
              << "[render]\nbackend = mc\nsamples = 8\n";
    }
    return dir;
}

}  // namespace

TEST_CASE("render writes outputs and honors flags") {
    const std::string dir = setup_scene_dir();
    CHECK(run("render " + dir + "sg.scene --out " + dir + "r", dir + "r.log") == 0);
    CHECK(!slurp(dir + "r.png").empty());
    CHECK(!slurp(dir + "r.pfm").empty());
    const std::string log = slurp(dir + "r.log");
    CHECK(log.find("backend=sg") != std::string::npos);
    CHECK(log.find("render time") != std::string::npos);

    CHECK(run("render " + dir + "mc.scene --backend mc --samples 4 --seed 3 --out " + dir + "m",
              dir + "m.log") == 0);
    CHECK(slurp(dir + "m.log").find("samples=4") != std::string::npos);
}

TEST_CASE("render fails cleanly on a missing scene") {
    const std::string dir = setup_scene_dir();
    CHECK(run("render " + dir + "missing.scene", dir + "fail.log") == 1);
    const std::string log = slurp(dir + "fail.log");
    CHECK(log.find("missing.scene") != std::string::npos);
}

TEST_CASE("unknown flags are rejected") {
    const std::string dir = setup_scene_dir();
    CHECK(run("render " + dir + "sg.scene --frobnicate", dir + "uf.log") != 0);
    CHECK(run("--help", dir + "help.log") == 0);
    const std::string help = slurp(dir + "help.log");
    CHECK(help.find("render") != std::string::npos);
    CHECK(help.find("fit-env") != std::string::npos);
    CHECK(help.find("optimize") != std::string::npos);
    CHECK(help.find("compare") != std::string::npos);
    CHECK(help.find("gbuffer") != std::string::npos);
    CHECK(help.find("check-grad") != std::string::npos);
}

TEST_CASE("compare on identical images reports zero metrics") {
    const std::string dir = setup_scene_dir();
    ImageRgb img(8, 8);
    RngStream rng(9, 9);
    for (Rgb& p : img.data)
        p = Rgb(0.1 + rng.next_uniform(), 0.1 + rng.next_uniform(), 0.1 + rng.next_uniform());
    write_pfm(img, dir + "a.pfm");
    write_pfm(img, dir + "b.pfm");
    CHECK(run("compare " + dir + "a.pfm " + dir + "b.pfm --csv " + dir + "c.csv",
              dir + "c.log") == 0);
    const std::string csv = slurp(dir + "c.csv");
    CHECK(csv.find("l1,0\n") != std::string::npos);
    CHECK(csv.find("ncc,") != std::string::npos);
}

TEST_CASE("gbuffer dumps the per-pixel channels") {
    const std::string dir = setup_scene_dir();
    CHECK(run("gbuffer " + dir + "sg.scene --out " + dir + "gb", dir + "gb.log") == 0);
    for (const char* channel :
         {"position", "normal", "view", "bary", "uv", "mask", "softmask", "triangle", "depth"}) {
        CHECK_MESSAGE(!slurp(dir + "gb_" + channel + ".pfm").empty(), channel);
    }
}

TEST_CASE("check-grad exit codes distinguish pass from tolerance failure") {
    const std::string dir = setup_scene_dir();
    CHECK(run("check-grad " + dir + "sg.scene --selector roughness --eps 1e-4 --tol 1e-3",
              dir + "cg.log") == 0);
    const std::string log = slurp(dir + "cg.log");
    CHECK(log.find("pass") != std::string::npos);
    // An absurd tolerance cannot be met: exit code 2.
    CHECK(run("check-grad " + dir + "sg.scene --selector roughness --eps 1e-2 --tol 1e-16",
              dir + "cg2.log") == 2);
}

TEST_CASE("fit-env writes a light fragment usable in a scene") {
    const std::string dir = setup_scene_dir();
    CHECK(run("fit-env " + dir + "env.pfm --k 4 --iters 40 --lr 0.1 --out " + dir + "fit",
              dir + "fit.log") == 0);
    const std::string frag = slurp(dir + "fit.sglight");
    CHECK(frag.find("[sg_light]") == 0);
    CHECK(frag.find("count = 4") != std::string::npos);
    CHECK(!slurp(dir + "fit_preview.pfm").empty());
    const std::string log = slurp(dir + "fit.log");
    CHECK(log.find("initial loss") != std::string::npos);
    CHECK(log.find("final loss") != std::string::npos);
    CHECK(log.find("parameters: 28") != std::string::npos);  // 4 lobes x 7

    // The fragment parses as scene lighting.
    {
        std::ofstream scene(dir + "fitted.scene");
        scene << "[mesh]\npath = sphere.obj\n[camera]\neye = 0 0 2.8\nwidth = 8\nheight = 8\n"
              << frag;
    }
    CHECK(run("render " + dir + "fitted.scene --out " + dir + "fr", dir + "fr.log") == 0);
}

TEST_CASE("optimize runs a task file end to end") {
    const std::string dir = setup_scene_dir();
    // Target: the sg scene rendered at its own camera.
    CHECK(run("render " + dir + "sg.scene --out " + dir + "target", dir + "t.log") == 0);
    {
        std::ofstream task(dir + "opt.task");
        task << "[scene]\npath = sg.scene\n"
             << "[targets]\nimage = target.pfm\n"
             << "[free]\nparam = roughness\n"
             << "[opt]\nsteps = 3\n";
    }
    CHECK(run("optimize " + dir + "opt.task --out " + dir + "opt", dir + "o.log") == 0);
    const std::string trace = slurp(dir + "opt_trace.csv");
    CHECK(trace.find("step,loss,l_im,l_msk,l_lap") == 0);
    CHECK(!slurp(dir + "opt.scene").empty());
    CHECK(!slurp(dir + "opt_before.png").empty());
    CHECK(!slurp(dir + "opt_after.png").empty());

    // Empty free set: validation error, exit 1.
    {
        std::ofstream task(dir + "bad.task");
        task << "[scene]\npath = sg.scene\n[targets]\nimage = target.pfm\n"
             << "[opt]\nsteps = 1\n";
    }
    CHECK(run("optimize " + dir + "bad.task --out " + dir + "bad", dir + "b.log") == 1);
    CHECK(slurp(dir + "b.log").find("free-parameter") != std::string::npos);
}

TEST_CASE("identical invocations are byte-identical across thread counts") {
    const std::string dir = setup_scene_dir();
    CHECK(run("render " + dir + "mc.scene --seed 7 --threads 1 --out " + dir + "d1",
              dir + "d1.log") == 0);
    CHECK(run("render " + dir + "mc.scene --seed 7 --threads 8 --out " + dir + "d8",
              dir + "d8.log") == 0);
    CHECK(run("render " + dir + "mc.scene --seed 7 --threads 8 --out " + dir + "d8b",
              dir + "d8b.log") == 0);
    CHECK(slurp(dir + "d1.pfm") == slurp(dir + "d8.pfm"));
    CHECK(slurp(dir + "d1.png") == slurp(dir + "d8.png"));
    CHECK(slurp(dir + "d8.pfm") == slurp(dir + "d8b.pfm"));
}
