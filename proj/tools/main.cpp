// zrudc command-line tool: enhance / train / baseline / degrade / eval / ablate.
//
// Exit codes: 0 success, 1 usage error (bad flags, missing inputs),
// 2 runtime error (decode failures, aborted training, ...).
// Every failure prints a single "error: ..." line to stderr.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "zrudc/checkpoint.hpp"
#include "zrudc/classical.hpp"
#include "zrudc/metrics.hpp"
#include "zrudc/ops.hpp"
#include "zrudc/slicing.hpp"
#include "zrudc/trainer.hpp"

namespace fs = std::filesystem;
using namespace zrudc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::optional<int> parse_pool_kernel(const std::string& s) {
    if (s == "none") return std::nullopt;
    try {
        size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size() || v < 1) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("invalid --pool-kernel '" + s + "' (expected none or a positive integer)");
    }
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

std::string pool_kernel_str(const std::optional<int>& k) {
    return k ? std::to_string(*k) : std::string("none");
}

void write_history(const std::string& path, const std::vector<LossReport>& history) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write loss history: " + path);
    char line[256];
    for (size_t e = 0; e < history.size(); ++e) {
        const LossReport& r = history[e];
        std::snprintf(line, sizeof(line), "%zu %.9g %.9g %.9g %.9g %.9g %.9g %.9g\n", e, r.dcp,
                      r.spa, r.exp, r.cc, r.tv, r.dbc, r.total);
        out << line;
    }
}

// ---- enhance ---------------------------------------------------------------

struct EnhanceArgs {
    std::string input, output, checkpoint;
    std::string pool_kernel = "3";
};

int run_enhance(const EnhanceArgs& a) {
    require_file(a.input, "input");
    require_file(a.checkpoint, "checkpoint");
    const auto kernel = parse_pool_kernel(a.pool_kernel);
    const GridNetParams params = load_checkpoint(a.checkpoint);
    const ImageRGB img = load_image(a.input);

    const auto t0 = std::chrono::steady_clock::now();
    const ImageRGB out = enhance(img, params, kernel);
    const auto t1 = std::chrono::steady_clock::now();

    save_image(out, a.output);
    std::printf("time_ms=%.3f\n", std::chrono::duration<double, std::milli>(t1 - t0).count());
    return kExitOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    std::string data_dir, out, history;
    TrainConfig cfg;
    std::string pool_kernel = "3";
};

int run_train(TrainArgs& a) {
    if (!fs::is_directory(a.data_dir)) throw UsageError("data dir not found: " + a.data_dir);
    if (list_image_files(a.data_dir).empty())
        throw UsageError("data dir has no PNG/PPM images: " + a.data_dir);
    a.cfg.pool_kernel = parse_pool_kernel(a.pool_kernel);
    if (a.history.empty()) a.history = a.out + ".loss.txt";

    const TrainResult result = train(a.data_dir, a.cfg);
    save_checkpoint(result.params, a.out);
    write_history(a.history, result.history);
    for (size_t e = 0; e < result.history.size(); ++e) {
        const LossReport& r = result.history[e];
        std::printf("epoch=%zu total=%.9g dcp=%.9g spa=%.9g exp=%.9g cc=%.9g tv=%.9g dbc=%.9g\n", e,
                    r.total, r.dcp, r.spa, r.exp, r.cc, r.tv, r.dbc);
    }
    return kExitOk;
}

// ---- baseline ---------------------------------------------------------------

struct BaselineArgs {
    std::string input, output;
    DehazeConfig cfg;
};

int run_baseline(const BaselineArgs& a) {
    require_file(a.input, "input");
    a.cfg.validate();
    const ImageRGB img = load_image(a.input);
    save_image(dcp_gamma_baseline(img, a.cfg), a.output);
    return kExitOk;
}

// ---- degrade ----------------------------------------------------------------

struct DegradeArgs {
    std::string input_dir, output_dir;
    DegradeConfig cfg;
    std::vector<float> airlight{0.9f, 0.9f, 0.9f};
};

int run_degrade(DegradeArgs& a) {
    if (!fs::is_directory(a.input_dir)) throw UsageError("input dir not found: " + a.input_dir);
    const auto files = list_image_files(a.input_dir);
    if (files.empty()) throw UsageError("input dir has no PNG/PPM images: " + a.input_dir);
    if (a.airlight.size() != 3) throw UsageError("--airlight needs exactly 3 values");
    for (int c = 0; c < 3; ++c) a.cfg.airlight[static_cast<size_t>(c)] = a.airlight[static_cast<size_t>(c)];
    a.cfg.validate();
    fs::create_directories(a.output_dir);

    std::ofstream manifest(fs::path(a.output_dir) / "manifest.txt", std::ios::trunc);
    if (!manifest) throw Error("cannot write manifest in " + a.output_dir);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "haze_strength=%.9g\nairlight=%.9g,%.9g,%.9g\nvignette_strength=%.9g\n"
                  "blur_sigma=%.9g\nseed=%llu\n",
                  a.cfg.haze_strength, a.cfg.airlight[0], a.cfg.airlight[1], a.cfg.airlight[2],
                  a.cfg.vignette_strength, a.cfg.blur_sigma,
                  static_cast<unsigned long long>(a.cfg.seed));
    manifest << buf;

    uint64_t index = 0;
    for (const auto& f : files) {
        DegradeConfig per = a.cfg;
        per.seed = a.cfg.seed + index;
        const ImageRGB img = load_image(f);
        const std::string name = fs::path(f).stem().string() + ".png";
        save_image(degrade(img, per), (fs::path(a.output_dir) / name).string());
        manifest << name << " seed=" << per.seed << "\n";
        ++index;
    }
    return kExitOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string a, b;
};

int run_eval(const EvalArgs& args) {
    const bool dir_a = fs::is_directory(args.a), dir_b = fs::is_directory(args.b);
    if (dir_a != dir_b) throw UsageError("--a and --b must both be files or both be directories");
    if (!dir_a) {
        require_file(args.a, "input");
        require_file(args.b, "input");
        const ImageRGB ia = load_image(args.a), ib = load_image(args.b);
        std::printf("psnr=%.6f ssim=%.6f\n", psnr(ia, ib), ssim(ia, ib));
        return kExitOk;
    }
    const auto fa = list_image_files(args.a);
    if (fa.empty()) throw UsageError("no images in " + args.a);
    for (const auto& f : fa) {
        const std::string name = fs::path(f).filename().string();
        const fs::path other = fs::path(args.b) / name;
        if (!fs::is_regular_file(other)) throw UsageError("missing pair for " + name + " in " + args.b);
        const ImageRGB ia = load_image(f), ib = load_image(other.string());
        std::printf("%s psnr=%.6f ssim=%.6f\n", name.c_str(), psnr(ia, ib), ssim(ia, ib));
    }
    return kExitOk;
}

// ---- ablate -----------------------------------------------------------------

struct AblateArgs {
    std::string data_dir, ref_dir, out_dir;
    TrainConfig cfg;
};

int run_ablate(AblateArgs& a) {
    if (!fs::is_directory(a.data_dir)) throw UsageError("data dir not found: " + a.data_dir);
    if (!fs::is_directory(a.ref_dir)) throw UsageError("ref dir not found: " + a.ref_dir);
    const auto files = list_image_files(a.data_dir);
    if (files.empty()) throw UsageError("data dir has no PNG/PPM images: " + a.data_dir);
    fs::create_directories(a.out_dir);

    std::vector<ImageRGB> inputs, refs;
    for (const auto& f : files) {
        const std::string name = fs::path(f).filename().string();
        const fs::path ref = fs::path(a.ref_dir) / name;
        if (!fs::is_regular_file(ref)) throw UsageError("missing reference for " + name + " in " + a.ref_dir);
        inputs.push_back(load_image(f));
        refs.push_back(load_image(ref.string()));
    }

    const std::optional<int> kernels[] = {std::nullopt, 3, 8, 16};
    std::printf("# K grid psnr ssim\n");
    for (const auto& k : kernels) {
        TrainConfig cfg = a.cfg;
        cfg.pool_kernel = k;
        const TrainResult result = train_on_images(inputs, cfg);
        save_checkpoint(result.params,
                        (fs::path(a.out_dir) / ("ablate_k" + pool_kernel_str(k) + ".ckpt")).string());

        const int grid = k ? ops::pool_out_dim(kProxySize, *k, *k) : kProxySize;
        double psnr_acc = 0.0, ssim_acc = 0.0;
        for (size_t i = 0; i < inputs.size(); ++i) {
            const ImageRGB out = enhance(inputs[i], result.params, k);
            psnr_acc += psnr(out, refs[i]);
            ssim_acc += ssim(out, refs[i]);
        }
        const double n = static_cast<double>(inputs.size());
        std::printf("K=%s grid=%dx%d psnr=%.4f ssim=%.4f\n", pool_kernel_str(k).c_str(), grid, grid,
                    psnr_acc / n, ssim_acc / n);
        std::fflush(stdout);
    }
    return kExitOk;
}

void add_loss_flags(CLI::App* cmd, TrainConfig& cfg) {
    cmd->add_option("--w-dcp", cfg.loss.w_dcp, "Dark channel prior loss weight")->capture_default_str();
    cmd->add_option("--w-lle", cfg.loss.w_lle, "Local enhancement group weight")->capture_default_str();
    cmd->add_option("--w-dbc", cfg.loss.w_dbc, "Dark+bright channel loss weight")->capture_default_str();
    cmd->add_option("--w-spa", cfg.loss.w_spa, "Spatial consistency sub-weight")->capture_default_str();
    cmd->add_option("--w-exp", cfg.loss.w_exp, "Exposure control sub-weight")->capture_default_str();
    cmd->add_option("--w-cc", cfg.loss.w_cc, "Color constancy sub-weight")->capture_default_str();
    cmd->add_option("--w-tv", cfg.loss.w_tv, "Grid smoothness sub-weight")->capture_default_str();
    cmd->add_option("--exposure", cfg.loss.exposure_target, "Exposure target E in (0,1)")
        ->capture_default_str();
    cmd->add_option("--spa-region", cfg.loss.spa_region, "Spatial consistency region size")
        ->capture_default_str();
    cmd->add_option("--exp-region", cfg.loss.exp_region, "Exposure region size")->capture_default_str();
    cmd->add_option("--dcp-patch", cfg.loss.dcp_patch, "Dark channel patch (odd)")->capture_default_str();
    cmd->add_option("--dbc-patch", cfg.loss.dbc_patch, "Dark/bright channel patch (odd)")
        ->capture_default_str();
}

void add_train_flags(CLI::App* cmd, TrainConfig& cfg, std::string& pool_kernel) {
    cmd->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--batch", cfg.batch_size, "Batch size")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "Deterministic seed")->capture_default_str();
    cmd->add_option("--pool-kernel", pool_kernel, "Low-rank pool kernel (none|3|8|16|int)")
        ->capture_default_str();
    cmd->add_option("--crop", cfg.crop_size, "Training crop edge")->capture_default_str();
    cmd->add_option("--max-steps", cfg.max_steps, "Stop after this many steps (0 = all epochs)")
        ->capture_default_str();
    cmd->add_option("--base-channels", cfg.net.base_channels, "Network width")->capture_default_str();
    add_loss_flags(cmd, cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "zrudc: zero-reference image enhancement via a low-rank affine grid.\n"
        "Set ZRUDC_THREADS to cap intra-op parallelism (default: all cores)."};
    app.require_subcommand(1);

    EnhanceArgs enhance_args;
    auto* cmd_enhance = app.add_subcommand("enhance", "Enhance one image with a trained checkpoint");
    cmd_enhance->add_option("--input", enhance_args.input, "Input image (PNG or PPM)")->required();
    cmd_enhance->add_option("--output", enhance_args.output, "Output PNG path")->required();
    cmd_enhance->add_option("--checkpoint", enhance_args.checkpoint, "Checkpoint path")->required();
    cmd_enhance->add_option("--pool-kernel", enhance_args.pool_kernel,
                            "Low-rank pool kernel (none|3|8|16|int)")
        ->capture_default_str();

    TrainArgs train_args;
    auto* cmd_train = app.add_subcommand("train", "Train on a directory of images (zero-reference)");
    cmd_train->add_option("--data-dir", train_args.data_dir, "Directory of training images")->required();
    cmd_train->add_option("--out", train_args.out, "Checkpoint output path")->required();
    cmd_train->add_option("--history", train_args.history, "Loss history path (default <out>.loss.txt)");
    add_train_flags(cmd_train, train_args.cfg, train_args.pool_kernel);

    BaselineArgs baseline_args;
    auto* cmd_baseline = app.add_subcommand("baseline", "Classical dehaze + gamma pipeline");
    cmd_baseline->add_option("--input", baseline_args.input, "Input image")->required();
    cmd_baseline->add_option("--output", baseline_args.output, "Output PNG path")->required();
    cmd_baseline->add_option("--window", baseline_args.cfg.window, "Dark channel window (odd)")
        ->capture_default_str();
    cmd_baseline->add_option("--gamma", baseline_args.cfg.gamma, "Gamma exponent")->capture_default_str();
    cmd_baseline->add_option("--omega", baseline_args.cfg.omega, "Haze retention factor")
        ->capture_default_str();
    cmd_baseline->add_option("--t-floor", baseline_args.cfg.t_floor, "Minimum transmission")
        ->capture_default_str();
    cmd_baseline->add_option("--airlight-quantile", baseline_args.cfg.airlight_quantile,
                             "Airlight pixel fraction")
        ->capture_default_str();

    DegradeArgs degrade_args;
    auto* cmd_degrade = app.add_subcommand("degrade", "Write a synthetic degraded corpus + manifest");
    cmd_degrade->add_option("--input-dir", degrade_args.input_dir, "Clean source images")->required();
    cmd_degrade->add_option("--output-dir", degrade_args.output_dir, "Degraded corpus destination")
        ->required();
    cmd_degrade->add_option("--haze", degrade_args.cfg.haze_strength, "Haze strength in [0,1]")
        ->capture_default_str();
    cmd_degrade->add_option("--vignette", degrade_args.cfg.vignette_strength, "Vignette strength in [0,1]")
        ->capture_default_str();
    cmd_degrade->add_option("--blur-sigma", degrade_args.cfg.blur_sigma, "Gaussian blur sigma (pixels)")
        ->capture_default_str();
    cmd_degrade->add_option("--airlight", degrade_args.airlight, "Airlight color r,g,b")
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    cmd_degrade->add_option("--seed", degrade_args.cfg.seed, "Deterministic seed")->capture_default_str();

    EvalArgs eval_args;
    auto* cmd_eval = app.add_subcommand("eval", "PSNR/SSIM of an image pair or matched directories");
    cmd_eval->add_option("--a", eval_args.a, "First image or directory")->required();
    cmd_eval->add_option("--b", eval_args.b, "Second image or directory")->required();

    AblateArgs ablate_args;
    ablate_args.cfg.epochs = 2;
    auto* cmd_ablate = app.add_subcommand(
        "ablate", "Train/evaluate across pool kernels K in {none,3,8,16}; one row per K");
    cmd_ablate->add_option("--data-dir", ablate_args.data_dir, "Degraded training images")->required();
    cmd_ablate->add_option("--ref-dir", ablate_args.ref_dir, "Clean reference images (matched names)")
        ->required();
    cmd_ablate->add_option("--out-dir", ablate_args.out_dir, "Checkpoint destination")->required();
    cmd_ablate->add_option("--epochs", ablate_args.cfg.epochs, "Epochs per kernel")->capture_default_str();
    cmd_ablate->add_option("--lr", ablate_args.cfg.lr, "Adam learning rate")->capture_default_str();
    cmd_ablate->add_option("--batch", ablate_args.cfg.batch_size, "Batch size")->capture_default_str();
    cmd_ablate->add_option("--seed", ablate_args.cfg.seed, "Deterministic seed")->capture_default_str();
    cmd_ablate->add_option("--crop", ablate_args.cfg.crop_size, "Training crop edge")
        ->capture_default_str();
    cmd_ablate->add_option("--max-steps", ablate_args.cfg.max_steps,
                           "Stop after this many steps per kernel (0 = all epochs)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (cmd_enhance->parsed()) return run_enhance(enhance_args);
        if (cmd_train->parsed()) return run_train(train_args);
        if (cmd_baseline->parsed()) return run_baseline(baseline_args);
        if (cmd_degrade->parsed()) return run_degrade(degrade_args);
        if (cmd_eval->parsed()) return run_eval(eval_args);
        if (cmd_ablate->parsed()) return run_ablate(ablate_args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const TrainAbort& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
