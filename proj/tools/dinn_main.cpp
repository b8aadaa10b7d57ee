// Command-line front end: synthetic dataset generation, two-stage training,
// held-out evaluation, and offline re-aggregation of distance tables.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dinn/checkpoint.hpp"
#include "dinn/common.hpp"
#include "dinn/dataset.hpp"
#include "dinn/eval.hpp"
#include "dinn/image.hpp"
#include "dinn/pcs.hpp"
#include "dinn/synth.hpp"
#include "dinn/train.hpp"

namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void resolve_threads(int threads_opt) {
    if (threads_opt > 0)
        dinn::set_threads(threads_opt);
    else
        dinn::init_threads_from_env();
}

struct TrainCli {
    std::string dataset = "dataset.dset";
    std::string out = ".";
    std::string precision = "fast32";
    int threads = 0;  // 0 = DINN_THREADS env or 1
    dinn::TrainConfig cfg;
};

void echo_config(const std::string& path, const char* command,
                 const std::vector<std::pair<std::string, std::string>>& kv) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw dinn::IoError("cannot open " + path + " for writing");
    std::fprintf(f, "# command = %s\n[%s]\n", command, command);
    for (const auto& [k, v] : kv) std::fprintf(f, "%s=%s\n", k.c_str(), v.c_str());
    if (std::fclose(f) != 0) throw dinn::IoError("failed to flush " + path);
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

template <typename T>
int run_train(const TrainCli& tc) {
    dinn::Dataset ds = dinn::load_dataset(tc.dataset);
    ds.split = dinn::load_split(dinn::split_path_for(tc.dataset), ds.samples.size());
    dinn::TrainConfig cfg = tc.cfg;
    cfg.model.domains = ds.source_domains();
    cfg.validate();

    fs::create_directories(tc.out);
    echo_config(join(tc.out, "config_echo.txt"), "train",
                {{"dataset", tc.dataset},
                 {"out", tc.out},
                 {"seed", std::to_string(cfg.seed)},
                 {"lambda", fmt_g(cfg.lambda)},
                 {"batch", std::to_string(cfg.batch)},
                 {"pretrain-epochs", std::to_string(cfg.epochs_pretrain)},
                 {"adversarial-epochs", std::to_string(cfg.epochs_adversarial)},
                 {"lr1", fmt_g(cfg.lr1)},
                 {"lr2", fmt_g(cfg.lr2)},
                 {"ablation", cfg.ablation ? "true" : "false"},
                 {"precision", tc.precision},
                 {"threads", std::to_string(dinn::threads())}});

    const int total = cfg.total_epochs();
    auto result = dinn::train<T>(ds, cfg, [total](const dinn::LossRecord& r) {
        std::printf("epoch %d/%d %-11s loss_g %.6f loss_d %.6f disc_acc %.4f\n", r.epoch + 1,
                    total, dinn::stage_name(r.stage), r.loss_g, r.loss_d, r.disc_acc);
        std::fflush(stdout);
    });

    const std::string ckpt = join(tc.out, "checkpoint.dinn");
    const std::string ckpt_pre = join(tc.out, "checkpoint_pretrain.dinn");
    const std::string metrics = join(tc.out, "metrics.csv");
    dinn::save_checkpoint(ckpt, result.params);
    dinn::save_checkpoint(ckpt_pre, result.pretrain_params);
    dinn::write_metrics_csv(metrics, result.history);
    std::printf("wrote %s, %s, %s\n", ckpt.c_str(), ckpt_pre.c_str(), metrics.c_str());
    return 0;
}

template <typename T>
int run_eval(const std::string& dataset, const std::string& checkpoint, const std::string& out,
             double tau, int dump_images) {
    dinn::Dataset ds = dinn::load_dataset(dataset);
    ds.split = dinn::load_split(dinn::split_path_for(dataset), ds.samples.size());
    dinn::ModelParamsT<T> params = dinn::load_checkpoint<T>(checkpoint);
    if (params.cfg.domains != ds.source_domains())
        throw dinn::ConfigError("checkpoint expects " + std::to_string(params.cfg.domains) +
                                " source domains but the dataset provides " +
                                std::to_string(ds.source_domains()));

    fs::create_directories(out);
    dinn::DumpHook<T> hook;
    if (dump_images > 0) {
        hook = [&](std::size_t pos, const dinn::Sample& s, const dinn::TensorT<T>& pred) {
            if (pos >= static_cast<std::size_t>(dump_images)) return;
            char name[64];
            std::snprintf(name, sizeof name, "pred_%03zu.pgm", pos);
            dinn::write_pgm(join(out, name), pred);
            dinn::TensorT<T> gt({dinn::kImgH, dinn::kImgW, 1});
            for (std::size_t i = 0; i < gt.data.size(); ++i)
                gt.data[i] = s.skeleton[i] ? T(1) : T(0);
            std::snprintf(name, sizeof name, "gt_%03zu.pgm", pos);
            dinn::write_pgm(join(out, name), gt);
        };
    }

    dinn::EvalResult res = dinn::evaluate<T>(params, ds, dinn::eval_indices(ds), tau, hook);
    const std::string text = dinn::pcs::render_report(res.report);
    std::fputs(text.c_str(), stdout);

    const std::string report_txt = join(out, "report.txt");
    const std::string report_csv = join(out, "report.csv");
    const std::string dist_csv = join(out, "distances.csv");
    std::FILE* f = std::fopen(report_txt.c_str(), "wb");
    if (!f) throw dinn::IoError("cannot open " + report_txt + " for writing");
    std::fputs(text.c_str(), f);
    if (std::fclose(f) != 0) throw dinn::IoError("failed to flush " + report_txt);
    dinn::pcs::write_report_csv(report_csv, res.report);
    dinn::write_distances_csv(dist_csv, tau, res.subjects, res.distances);
    std::printf("wrote %s, %s, %s\n", report_txt.c_str(), report_csv.c_str(), dist_csv.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radio-frame to pose-image construction toolkit"};
    app.require_subcommand(1);
    // config lives on the root app (subcommand-level configs are inert in
    // CLI11); keys sit under a [train] / [eval] section and the subcommands
    // fall through so "--config" may follow the subcommand name
    app.set_config("--config", "", "read options from a key=value file");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic labelled dataset");
    std::uint64_t gen_seed = 0;
    int subjects = 5, frames = 600;
    std::string gen_out = "dataset.dset";
    gen->add_option("--seed", gen_seed, "world seed")->capture_default_str();
    gen->add_option("--subjects", subjects, "total subjects incl. the unlabelled target")
        ->check(CLI::Range(2, 64))
        ->capture_default_str();
    gen->add_option("--frames", frames, "motion frames per subject")
        ->check(CLI::Range(40, 1000000))
        ->capture_default_str();
    gen->add_option("--out", gen_out, "dataset file to write")->capture_default_str();

    // train
    auto* tr = app.add_subcommand("train", "two-stage training on a dataset");
    TrainCli tc;
    tr->add_option("--dataset", tc.dataset, "dataset file")->capture_default_str();
    tr->add_option("--out", tc.out, "output directory")->capture_default_str();
    tr->add_option("--seed", tc.cfg.seed, "init/shuffle seed")->capture_default_str();
    tr->add_option("--lambda", tc.cfg.lambda, "adversarial weight")->capture_default_str();
    tr->add_option("--batch", tc.cfg.batch, "batch size")->capture_default_str();
    tr->add_option("--pretrain-epochs", tc.cfg.epochs_pretrain, "reconstruction-only epochs")
        ->capture_default_str();
    tr->add_option("--adversarial-epochs", tc.cfg.epochs_adversarial, "adversarial epochs")
        ->capture_default_str();
    tr->add_option("--lr1", tc.cfg.lr1, "extractor+generator learning rate")
        ->capture_default_str();
    tr->add_option("--lr2", tc.cfg.lr2, "discriminator learning rate")->capture_default_str();
    tr->add_flag("--ablation", tc.cfg.ablation, "drop the adversarial term for the whole run");
    tr->add_option("--precision", tc.precision, "fast32 or verify64")
        ->check(CLI::IsMember({"fast32", "verify64"}))
        ->capture_default_str();
    tr->add_option("--threads", tc.threads, "worker count (default: DINN_THREADS or 1)");
    tr->fallthrough();

    // eval
    auto* ev = app.add_subcommand("eval", "score a checkpoint on the held-out splits");
    std::string ev_dataset = "dataset.dset", ev_ckpt = "checkpoint.dinn", ev_out = ".";
    std::string ev_precision = "fast32";
    double tau = 0.5;
    int dump_images = 0, ev_threads = 0;
    ev->add_option("--dataset", ev_dataset, "dataset file")->capture_default_str();
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->capture_default_str();
    ev->add_option("--out", ev_out, "output directory")->capture_default_str();
    ev->add_option("--tau", tau, "prediction binarization threshold")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    ev->add_option("--dump-images", dump_images, "dump first N prediction/target image pairs")
        ->check(CLI::Range(0, 100000))
        ->capture_default_str();
    ev->add_option("--precision", ev_precision, "fast32 or verify64")
        ->check(CLI::IsMember({"fast32", "verify64"}))
        ->capture_default_str();
    ev->add_option("--threads", ev_threads, "worker count (default: DINN_THREADS or 1)");
    ev->fallthrough();

    // report
    auto* rp = app.add_subcommand("report", "re-aggregate a distances.csv table");
    std::string rp_dist = "distances.csv", rp_csv;
    rp->add_option("--distances", rp_dist, "distance table from eval")->capture_default_str();
    rp->add_option("--out", rp_csv, "also write the aggregated table as CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            dinn::Dataset ds = dinn::synth::build_dataset(gen_seed, subjects, frames);
            dinn::save_dataset(gen_out, ds);
            dinn::save_split(dinn::split_path_for(gen_out), ds.split);
            std::printf("wrote %s + %s: %zu samples over %d subjects "
                        "(train %zu, test-source %zu, test-target %zu)\n",
                        gen_out.c_str(), dinn::split_path_for(gen_out).c_str(),
                        ds.samples.size(), subjects, ds.split.train.size(),
                        ds.split.test_source.size(), ds.split.test_target.size());
        } else if (tr->parsed()) {
            resolve_threads(tc.threads);
            return tc.precision == "verify64" ? run_train<double>(tc) : run_train<float>(tc);
        } else if (ev->parsed()) {
            resolve_threads(ev_threads);
            return ev_precision == "verify64"
                       ? run_eval<double>(ev_dataset, ev_ckpt, ev_out, tau, dump_images)
                       : run_eval<float>(ev_dataset, ev_ckpt, ev_out, tau, dump_images);
        } else if (rp->parsed()) {
            double dist_tau = 0.5;
            std::vector<int> subs;
            std::vector<double> dists;
            dinn::read_distances_csv(rp_dist, dist_tau, subs, dists);
            int k_total = 0;
            for (int s : subs) k_total = std::max(k_total, s + 1);
            auto report = dinn::pcs::make_report_from_distances(dists, subs, k_total, dist_tau);
            std::fputs(dinn::pcs::render_report(report).c_str(), stdout);
            if (!rp_csv.empty()) {
                dinn::pcs::write_report_csv(rp_csv, report);
                std::printf("wrote %s\n", rp_csv.c_str());
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "dinn: %s\n", e.what());
        return 1;
    }
    return 0;
}
