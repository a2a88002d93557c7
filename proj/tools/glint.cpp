// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>

#include "glint/grad.h"
#include "glint/image_io.h"
#include "glint/optimize.h"
#include "glint/parallel.h"
#include "glint/scene.h"
#include "glint/sg_fit.h"
#include "glint/shade.h"

namespace {

using namespace glint;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    return worker_count();  // honors GLINT_THREADS, else hardware parallelism
}

struct RenderArgs {
    std::string scene_path;
    std::string out = "render_out";
    std::string backend;
    int samples = -1;
    int64_t seed = -1;
    int threads = 0;
};

int cmd_render(const RenderArgs& args) {
    set_worker_count(resolve_threads(args.threads));
    Scene scene = parse_scene(args.scene_path);
    if (!args.backend.empty()) scene.render.backend = backend_from_name(args.backend);
    if (args.samples > 0) scene.render.samples = args.samples;
    if (args.seed >= 0) scene.render.seed = static_cast<uint64_t>(args.seed);

    std::printf("render: scene=%s backend=%s samples=%d seed=%llu size=%dx%d threads=%d\n",
                args.scene_path.c_str(), backend_name(scene.render.backend),
                scene.render.samples, static_cast<unsigned long long>(scene.render.seed),
                scene.camera.width, scene.camera.height, worker_count());

    const double t0 = now_seconds();
    const RenderOutput out = render(scene, scene.render.backend);
    const double elapsed = now_seconds() - t0;

    write_image(out.image, args.out + ".png", ImageFormat::Png);
    write_image(out.image, args.out + ".pfm", ImageFormat::Pfm);

    int64_t fg = 0, total_samples = 0;
    int32_t max_samples = 0;
    for (int64_t p = 0; p < out.samples.count(); ++p) {
        if (out.mask[p] > 0.5) ++fg;
        total_samples += out.samples[p];
        max_samples = std::max(max_samples, out.samples[p]);
    }
    std::printf("render time: %.3f s\n", elapsed);
    std::printf("foreground pixels: %lld of %lld\n", static_cast<long long>(fg),
                static_cast<long long>(out.samples.count()));
    std::printf("samples: total=%lld max_per_pixel=%d\n",
                static_cast<long long>(total_samples), max_samples);
    std::printf("wrote %s.png %s.pfm\n", args.out.c_str(), args.out.c_str());
    return 0;
}

struct FitEnvArgs {
    std::string hdr_path;
    std::string out = "fit_out";
    int k = 32;
    int iters = 1500;
    double lr = 0.05;
    int threads = 0;
};

int cmd_fit_env(const FitEnvArgs& args) {
    set_worker_count(resolve_threads(args.threads));
    if (args.k < 1) throw CLI::ValidationError("--k must be >= 1");
    if (args.iters < 0) throw CLI::ValidationError("--iters must be >= 0");

    std::printf("fit-env: input=%s k=%d iters=%d lr=%g threads=%d\n", args.hdr_path.c_str(),
                args.k, args.iters, args.lr, worker_count());

    const EquirectImage env = load_hdr(args.hdr_path);
    const SgFitResult fit = fit_env_sg(env, args.k, args.iters, args.lr);

    const std::string frag_path = args.out + ".sglight";
    std::ofstream frag(frag_path);
    if (!frag) throw std::runtime_error(frag_path + ": cannot open for writing");
    frag << sg_light_fragment(fit.light);
    frag.close();

    const EquirectImage preview = sg_env_to_equirect(fit.light, env.width(), env.height());
    write_pfm(preview.pixels, args.out + "_preview.pfm");

    std::printf("parameters: %d (vs %lld map values)\n", fit.light.parameter_count(),
                static_cast<long long>(3ll * env.width() * env.height()));
    std::printf("initial loss: %.9g\n", fit.initial_loss);
    std::printf("final loss: %.9g\n", fit.final_loss);
    std::printf("wrote %s %s_preview.pfm\n", frag_path.c_str(), args.out.c_str());
    return 0;
}

struct OptimizeArgs {
    std::string task_path;
    std::string out = "opt_out";
    int threads = 0;
};

int cmd_optimize(const OptimizeArgs& args) {
    set_worker_count(resolve_threads(args.threads));
    ParsedTask parsed = parse_task(args.task_path);

    std::string free_list;
    for (const std::string& s : parsed.task.free_params)
        free_list += (free_list.empty() ? "" : ",") + s;
    std::printf("optimize: task=%s backend=%s steps=%d views=%zu free=[%s] subsample=%g seed=%llu threads=%d\n",
                args.task_path.c_str(), backend_name(parsed.task.backend), parsed.task.steps,
                parsed.task.targets.size(), free_list.c_str(), parsed.task.subsample,
                static_cast<unsigned long long>(parsed.task.seed), worker_count());
    std::printf("weights: alpha_im=%g alpha_msk=%g alpha_per=%g alpha_lap=%g\n",
                parsed.task.weights.image, parsed.task.weights.mask,
                parsed.task.weights.perceptual, parsed.task.weights.laplacian);

    const OptimizeResult result = optimize(parsed.scene, parsed.task);

    write_scene(result.scene, args.out + ".scene");
    const std::string trace_path = args.out + "_trace.csv";
    std::ofstream trace(trace_path);
    if (!trace) throw std::runtime_error(trace_path + ": cannot open for writing");
    trace << "step,loss,l_im,l_msk,l_lap\n";
    char buf[256];
    for (size_t i = 0; i < result.trace.size(); ++i) {
        const LossBreakdown& t = result.trace[i];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i, t.total, t.image,
                      t.mask, t.laplacian);
        trace << buf;
    }
    trace.close();

    write_image(result.before, args.out + "_before.png", ImageFormat::Png);
    write_image(result.after, args.out + "_after.png", ImageFormat::Png);

    std::printf("initial loss: %.9g\n", result.initial.total);
    std::printf("best loss: %.9g\n", result.best.total);
    std::printf("wrote %s.scene %s_trace.csv %s_before.png %s_after.png\n", args.out.c_str(),
                args.out.c_str(), args.out.c_str(), args.out.c_str());
    return 0;
}

struct CompareArgs {
    std::string path_a, path_b;
    bool masks = false;
    std::string csv;
    int threads = 0;
};

ImageRgb load_any_image(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pfm") == 0)
        return load_pfm(path);
    return load_hdr(path).pixels;
}

int cmd_compare(const CompareArgs& args) {
    set_worker_count(resolve_threads(args.threads));
    std::printf("compare: a=%s b=%s masks=%d\n", args.path_a.c_str(), args.path_b.c_str(),
                args.masks ? 1 : 0);
    const ImageRgb a = load_any_image(args.path_a);
    const ImageRgb b = load_any_image(args.path_b);
    if (a.count() != b.count())
        throw std::runtime_error("compare: images have different dimensions");

    const double l1 = loss_image_l1(a, b);
    const double ncc = metric_ncc(a, b);
    double iou = 0.0;
    if (args.masks) {
        GridF ga(a.width, a.height), gb(b.width, b.height);
        for (int64_t p = 0; p < a.count(); ++p) {
            ga[p] = luminance(a[p]);
            gb[p] = luminance(b[p]);
        }
        iou = loss_iou(ga, gb);
    }

    std::printf("%-8s %16s\n", "metric", "value");
    std::printf("%-8s %16.9g\n", "l1", l1);
    std::printf("%-8s %16.9g\n", "ncc", ncc);
    if (args.masks) std::printf("%-8s %16.9g\n", "iou", iou);

    std::string csv_text = "metric,value\n";
    char buf[128];
    std::snprintf(buf, sizeof buf, "l1,%.17g\n", l1);
    csv_text += buf;
    std::snprintf(buf, sizeof buf, "ncc,%.17g\n", ncc);
    csv_text += buf;
    if (args.masks) {
        std::snprintf(buf, sizeof buf, "iou,%.17g\n", iou);
        csv_text += buf;
    }
    std::fputs(csv_text.c_str(), stdout);
    if (!args.csv.empty()) {
        std::ofstream out(args.csv);
        if (!out) throw std::runtime_error(args.csv + ": cannot open for writing");
        out << csv_text;
    }
    return 0;
}

struct GbufferArgs {
    std::string scene_path;
    std::string out = "gbuffer_out";
    int threads = 0;
};

int cmd_gbuffer(const GbufferArgs& args) {
    set_worker_count(resolve_threads(args.threads));
    const Scene scene = parse_scene(args.scene_path);
    std::printf("gbuffer: scene=%s size=%dx%d threads=%d\n", args.scene_path.c_str(),
                scene.camera.width, scene.camera.height, worker_count());

    const GBuffer gb = rasterize(scene.mesh, scene.camera);
    const int w = gb.width, h = gb.height;

    auto dump3 = [&](const std::vector<Vec3>& src, const std::string& name) {
        ImageRgb img(w, h);
        for (int64_t p = 0; p < gb.pixel_count(); ++p)
            img[p] = Rgb(src[p].x, src[p].y, src[p].z);
        write_pfm(img, args.out + "_" + name + ".pfm");
    };
    dump3(gb.position, "position");
    dump3(gb.normal, "normal");
    dump3(gb.view, "view");
    dump3(gb.barycentric, "bary");

    ImageRgb uv(w, h);
    for (int64_t p = 0; p < gb.pixel_count(); ++p) uv[p] = Rgb(gb.uv[p].x, gb.uv[p].y, 0.0);
    write_pfm(uv, args.out + "_uv.pfm");

    GridF mask(w, h), soft(w, h), tri(w, h), depth(w, h);
    for (int64_t p = 0; p < gb.pixel_count(); ++p) {
        mask[p] = gb.visibility[p];
        soft[p] = gb.soft_mask[p];
        tri[p] = gb.triangle[p];
        depth[p] = gb.visibility[p] ? gb.depth[p] : 0.0;
    }
    write_pfm(mask, args.out + "_mask.pfm");
    write_pfm(soft, args.out + "_softmask.pfm");
    write_pfm(tri, args.out + "_triangle.pfm");
    write_pfm(depth, args.out + "_depth.pfm");

    std::printf("wrote 9 channels to %s_*.pfm\n", args.out.c_str());
    return 0;
}

struct CheckGradArgs {
    std::string scene_path;
    std::string selector;
    std::string backend;
    std::string loss = "image";
    double eps = 1e-4;
    double tol = 1e-3;
    int max_params = 16;
    int threads = 0;
};

int cmd_check_grad(const CheckGradArgs& args) {
    set_worker_count(resolve_threads(args.threads));
    Scene scene = parse_scene(args.scene_path);
    const Backend backend =
        args.backend.empty() ? scene.render.backend : backend_from_name(args.backend);

    CheckLoss loss;
    if (args.loss == "image") loss = CheckLoss::ImageMean;
    else if (args.loss == "mask") loss = CheckLoss::MaskMean;
    else if (args.loss == "background") loss = CheckLoss::BackgroundMean;
    else throw CLI::ValidationError("--loss must be image, mask or background");

    std::printf("check-grad: scene=%s backend=%s selector=%s eps=%g tol=%g loss=%s threads=%d\n",
                args.scene_path.c_str(), backend_name(backend), args.selector.c_str(),
                args.eps, args.tol, args.loss.c_str(), worker_count());

    const ParamLayout layout = param_layout(scene);
    const std::vector<int64_t> indices =
        match_params(layout, args.selector, args.max_params);
    if (indices.empty()) throw std::runtime_error("selector matched no parameters");

    std::printf("%-24s %16s %16s %12s %6s\n", "parameter", "analytic", "numeric",
                "rel_error", "ok");
    bool all_pass = true;
    for (int64_t idx : indices) {
        const std::string name = param_name(layout, idx);
        const FdReport report = finite_diff_check(scene, backend, name, args.eps, args.tol, loss);
        all_pass = all_pass && report.pass;
        std::printf("%-24s %16.9g %16.9g %12.4g %6s\n", name.c_str(), report.analytic,
                    report.numeric, report.rel_error, report.pass ? "pass" : "FAIL");
    }
    return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"glint: differentiable deferred renderer (Monte Carlo and "
                 "spherical-Gaussian shading backends)"};
    app.require_subcommand(1);

    RenderArgs render_args;
    CLI::App* render_cmd = app.add_subcommand("render", "Render a scene to PNG + PFM");
    render_cmd->add_option("scene", render_args.scene_path, "Scene file")->required();
    render_cmd->add_option("--out", render_args.out, "Output path stem");
    render_cmd->add_option("--backend", render_args.backend, "Shading backend: mc | sg");
    render_cmd->add_option("--samples", render_args.samples, "MC samples per pixel");
    render_cmd->add_option("--seed", render_args.seed, "Random seed");
    render_cmd->add_option("--threads", render_args.threads, "Worker threads (default: hardware)");

    FitEnvArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit-env", "Fit a K-lobe SG mixture to an HDR map");
    fit_cmd->add_option("hdr", fit_args.hdr_path, "Input .hdr or .pfm map")->required();
    fit_cmd->add_option("--k", fit_args.k, "Number of SG lobes")->required();
    fit_cmd->add_option("--iters", fit_args.iters, "Adam iterations");
    fit_cmd->add_option("--lr", fit_args.lr, "Adam learning rate");
    fit_cmd->add_option("--out", fit_args.out, "Output path stem");
    fit_cmd->add_option("--threads", fit_args.threads, "Worker threads");

    OptimizeArgs opt_args;
    CLI::App* opt_cmd = app.add_subcommand("optimize", "Inverse-rendering optimization from a task file");
    opt_cmd->add_option("task", opt_args.task_path, "Task file")->required();
    opt_cmd->add_option("--out", opt_args.out, "Output path stem");
    opt_cmd->add_option("--threads", opt_args.threads, "Worker threads");

    CompareArgs cmp_args;
    CLI::App* cmp_cmd = app.add_subcommand("compare", "Compare two images / env maps");
    cmp_cmd->add_option("a", cmp_args.path_a, "First image")->required();
    cmp_cmd->add_option("b", cmp_args.path_b, "Second image")->required();
    cmp_cmd->add_flag("--masks", cmp_args.masks, "Also report the IoU loss, treating inputs as masks");
    cmp_cmd->add_option("--csv", cmp_args.csv, "Write metrics to a CSV file");
    cmp_cmd->add_option("--threads", cmp_args.threads, "Worker threads");

    GbufferArgs gb_args;
    CLI::App* gb_cmd = app.add_subcommand("gbuffer", "Dump G-buffer channels as PFM layers");
    gb_cmd->add_option("scene", gb_args.scene_path, "Scene file")->required();
    gb_cmd->add_option("--out", gb_args.out, "Output path stem");
    gb_cmd->add_option("--threads", gb_args.threads, "Worker threads");

    CheckGradArgs cg_args;
    CLI::App* cg_cmd = app.add_subcommand("check-grad", "Finite-difference gradient check");
    cg_cmd->add_option("scene", cg_args.scene_path, "Scene file")->required();
    cg_cmd->add_option("--selector", cg_args.selector, "Parameter selector pattern")->required();
    cg_cmd->add_option("--backend", cg_args.backend, "Shading backend: mc | sg");
    cg_cmd->add_option("--eps", cg_args.eps, "Central-difference step");
    cg_cmd->add_option("--tol", cg_args.tol, "Relative-error tolerance");
    cg_cmd->add_option("--loss", cg_args.loss, "Loss functional: image | mask | background");
    cg_cmd->add_option("--max", cg_args.max_params, "Max parameters expanded from the pattern");
    cg_cmd->add_option("--threads", cg_args.threads, "Worker threads");

    try {
        app.parse(argc, argv);
        if (render_cmd->parsed()) return cmd_render(render_args);
        if (fit_cmd->parsed()) return cmd_fit_env(fit_args);
        if (opt_cmd->parsed()) return cmd_optimize(opt_args);
        if (cmp_cmd->parsed()) return cmd_compare(cmp_args);
        if (gb_cmd->parsed()) return cmd_gbuffer(gb_args);
        if (cg_cmd->parsed()) return cmd_check_grad(cg_args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
