// Command-line harness: synthetic data generation, encoder pretraining,
// clustering, evaluation and parameter sweeps.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "jecl/dataset.hpp"
#include "jecl/experiment.hpp"
#include "jecl/metrics.hpp"
#include "jecl/rng.hpp"
#include "jecl/sdae.hpp"
#include "jecl/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SdaeOptions {
    std::vector<std::size_t> hidden{500, 500, 2000};
    std::size_t embedding_dim = 10;
    double corruption = 0.2;
    std::size_t layerwise_epochs = 50;
    std::size_t finetune_epochs = 100;
    std::size_t batch_size = 256;
};

struct OptimOptions {
    std::string kind = "adam";
    double learning_rate = 1e-3;
    double momentum = 0.9;
};

void add_sdae_options(CLI::App* cmd, SdaeOptions& opts) {
    cmd->add_option("--hidden", opts.hidden, "Hidden layer widths for both encoders")
        ->delimiter(',');
    cmd->add_option("--embedding-dim", opts.embedding_dim, "Embedding dimension E");
    cmd->add_option("--corruption", opts.corruption, "Masking-noise rate for denoising");
    cmd->add_option("--layerwise-epochs", opts.layerwise_epochs, "Greedy epochs per layer");
    cmd->add_option("--finetune-epochs", opts.finetune_epochs, "End-to-end fine-tune epochs");
    cmd->add_option("--pretrain-batch-size", opts.batch_size, "Pretraining mini-batch size");
}

void add_optim_options(CLI::App* cmd, OptimOptions& opts) {
    cmd->add_option("--optimizer", opts.kind, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
    cmd->add_option("--learning-rate", opts.learning_rate, "Optimizer learning rate");
    cmd->add_option("--momentum", opts.momentum, "SGD momentum");
}

jecl::Optimizer::Config make_optimizer(const OptimOptions& opts) {
    jecl::Optimizer::Config cfg;
    cfg.kind = opts.kind == "sgd" ? jecl::Optimizer::Kind::SgdMomentum : jecl::Optimizer::Kind::Adam;
    cfg.learning_rate = opts.learning_rate;
    cfg.momentum = opts.momentum;
    return cfg;
}

jecl::SdaeConfig make_sdae(const SdaeOptions& opts, const OptimOptions& optim) {
    jecl::SdaeConfig cfg;
    cfg.layer_dims = {0};
    cfg.layer_dims.insert(cfg.layer_dims.end(), opts.hidden.begin(), opts.hidden.end());
    cfg.layer_dims.push_back(opts.embedding_dim);
    cfg.corruption_rate = opts.corruption;
    cfg.layerwise_epochs = opts.layerwise_epochs;
    cfg.finetune_epochs = opts.finetune_epochs;
    cfg.batch_size = opts.batch_size;
    cfg.optimizer = make_optimizer(optim);
    return cfg;
}

json loss_json(const jecl::LossBreakdown& loss) {
    return json{{"cluster", loss.cluster},
                {"align", loss.align},
                {"reg_img", loss.reg_img},
                {"reg_txt", loss.reg_txt},
                {"total", loss.total}};
}

int cmd_synth(const jecl::SyntheticRecipe& recipe, const fs::path& out_dir) {
    const jecl::PairedDataset ds = jecl::generate_synthetic(recipe);
    fs::create_directories(out_dir);
    json cfg{{"command", "synth"},
             {"k", recipe.k},
             {"per_cluster_n", recipe.per_cluster_n},
             {"cluster_sizes", recipe.cluster_sizes},
             {"image_dim", recipe.image_dim},
             {"text_dim", recipe.text_dim},
             {"separation", recipe.separation},
             {"view_noise", recipe.view_noise},
             {"missing_rate", recipe.missing_rate},
             {"merged_image_center_pairs", recipe.merged_image_center_pairs},
             {"seed", recipe.seed}};
    const std::vector<std::string> header{"config: " + cfg.dump()};
    jecl::save_feature_matrix_text(out_dir / "images.txt", ds.image_features, header);
    jecl::save_feature_matrix_text(out_dir / "texts.txt", ds.text_features, header);
    jecl::save_labels(out_dir / "labels.txt", *ds.labels, header);
    jecl::save_mask(out_dir / "mask.txt", ds.text_present, header);
    std::cout << "wrote " << ds.size() << " samples to " << out_dir.string() << "\n";
    return 0;
}

int cmd_pretrain(const fs::path& images, const fs::path& texts, const std::optional<fs::path>& mask,
                 const SdaeOptions& sdae_opts, const OptimOptions& optim, std::uint64_t seed,
                 const fs::path& out_dir) {
    const jecl::PairedDataset ds = jecl::load_dataset(images, texts, {}, mask);
    fs::create_directories(out_dir);

    jecl::SdaeConfig img_cfg =
        jecl::resolve_sdae(make_sdae(sdae_opts, optim), ds.image_features.cols());
    img_cfg.seed = jecl::derive_seed(seed, 1);
    jecl::SdaeConfig txt_cfg =
        jecl::resolve_sdae(make_sdae(sdae_opts, optim), ds.text_features.cols());
    txt_cfg.seed = jecl::derive_seed(seed, 2);

    std::vector<std::size_t> present;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.text_present[i]) present.push_back(i);
    if (present.empty()) throw std::runtime_error("pretrain: every text row is missing");

    json meta{{"command", "pretrain"}, {"seed", seed}};
    const auto img = jecl::pretrain_view(ds.image_features, img_cfg);
    meta["view"] = "image";
    meta["final_mse"] = img.final_mse;
    jecl::save_encoder(out_dir / "encoder_image.bin", img.encoder, meta.dump());

    const auto txt = jecl::pretrain_view(jecl::select_rows(ds.text_features, present), txt_cfg);
    meta["view"] = "text";
    meta["final_mse"] = txt.final_mse;
    jecl::save_encoder(out_dir / "encoder_text.bin", txt.encoder, meta.dump());

    std::cout << "image reconstruction mse " << img.final_mse << " (from " << img.initial_mse
              << ")\n";
    std::cout << "text reconstruction mse " << txt.final_mse << " (from " << txt.initial_mse
              << ")\n";
    return 0;
}

int cmd_cluster(const fs::path& images, const fs::path& texts, const std::optional<fs::path>& labels,
                const std::optional<fs::path>& mask, const std::optional<fs::path>& checkpoint_dir,
                const std::string& single_view, jecl::PipelineConfig cfg, const fs::path& out_dir,
                bool timings) {
    const jecl::PairedDataset ds = jecl::load_dataset(images, texts, labels, mask);
    fs::create_directories(out_dir);

    std::optional<jecl::Mlp> pre_img, pre_txt;
    if (checkpoint_dir) {
        if (single_view != "text") pre_img = jecl::load_encoder(*checkpoint_dir / "encoder_image.bin");
        if (single_view != "image") pre_txt = jecl::load_encoder(*checkpoint_dir / "encoder_text.bin");
    } else {
        std::cerr << "note: no encoder checkpoints supplied; pretraining now\n";
    }

    std::ofstream progress(out_dir / "progress.jsonl");
    jecl::ProgressSink sink = [&progress](const jecl::ProgressRecord& rec) {
        json j{{"epoch", rec.epoch},
               {"refresh", rec.refresh_index},
               {"loss", loss_json(rec.loss)},
               {"label_change", rec.label_change},
               {"empty_clusters", rec.empty_clusters},
               {"alignment_drift", rec.alignment_drift}};
        if (rec.metrics) {
            j["acc"] = rec.metrics->acc;
            j["nmi"] = rec.metrics->nmi;
            j["ari"] = rec.metrics->ari;
        }
        progress << j.dump() << "\n";
    };

    const auto started = std::chrono::steady_clock::now();
    jecl::PipelineResult result;
    if (single_view == "image")
        result = jecl::run_single_view(ds, jecl::ViewSelector::Image, cfg, sink,
                                       pre_img ? &*pre_img : nullptr);
    else if (single_view == "text")
        result = jecl::run_single_view(ds, jecl::ViewSelector::Text, cfg, sink,
                                       pre_txt ? &*pre_txt : nullptr);
    else
        result = jecl::run_jecl(ds, cfg, sink, pre_img ? &*pre_img : nullptr,
                                pre_txt ? &*pre_txt : nullptr);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    json config = json::parse(jecl::pipeline_config_to_json(cfg));
    config["command"] = "cluster";
    config["single_view"] = single_view.empty() ? "none" : single_view;
    const std::vector<std::string> header{"config: " + config.dump()};

    jecl::save_labels(out_dir / "assignments.txt", result.state.hard_labels, header);
    if (!result.embeddings_image.empty())
        jecl::save_feature_matrix_text(out_dir / "embeddings_image.txt", result.embeddings_image,
                                       header);
    if (!result.embeddings_text.empty())
        jecl::save_feature_matrix_text(out_dir / "embeddings_text.txt", result.embeddings_text,
                                       header);
    if (single_view.empty()) {
        jecl::save_encoder(out_dir / "encoder_image.bin", result.image.encoder, config.dump());
        jecl::save_encoder(out_dir / "encoder_text.bin", result.text.encoder, config.dump());
    }

    json report{{"config", config},
                {"n_samples", ds.size()},
                {"k", cfg.train.k},
                {"converged", result.state.converged},
                {"epochs", result.state.epochs_run},
                {"empty_clusters", result.report.empty_clusters},
                {"alignment_drift_events", result.state.alignment_drift_events},
                {"wall_seconds", timings ? wall : 0.0}};
    json trace = json::array();
    for (const auto& entry : result.state.loss_trace) trace.push_back(loss_json(entry));
    report["loss_trace"] = trace;
    if (result.report.has_metrics)
        report["metrics"] = json{{"acc", result.report.acc},
                                 {"nmi", result.report.nmi},
                                 {"ari", result.report.ari}};
    std::ofstream out(out_dir / "report.json");
    out << report.dump(2) << "\n";

    if (result.report.has_metrics)
        std::printf("ACC %.4f  NMI %.4f  ARI %.4f  empty %zu\n", result.report.acc,
                    result.report.nmi, result.report.ari, result.report.empty_clusters);
    else
        std::printf("clustered %zu samples into %zu clusters (%zu empty)\n", ds.size(),
                    cfg.train.k, result.report.empty_clusters);
    return 0;
}

int cmd_eval(const fs::path& pred_path, const fs::path& truth_path) {
    const auto pred = jecl::load_labels(pred_path);
    const auto truth = jecl::load_labels(truth_path);
    if (pred.size() != truth.size())
        throw std::runtime_error("eval: " + pred_path.string() + " has " +
                                 std::to_string(pred.size()) + " labels but " +
                                 truth_path.string() + " has " + std::to_string(truth.size()));
    std::printf("ACC %.6f\n", jecl::accuracy(truth, pred));
    std::printf("NMI %.6f\n", jecl::nmi(truth, pred));
    std::printf("ARI %.6f\n", jecl::ari(truth, pred));
    return 0;
}

int cmd_sweep(const fs::path& config_path, std::optional<fs::path> out_dir,
              std::optional<bool> timings) {
    jecl::ExperimentSpec spec = jecl::parse_experiment_spec(config_path);
    if (timings) spec.timings = *timings;
    const jecl::ExperimentReport report = jecl::run_experiment(spec);
    const fs::path dir = out_dir.value_or(fs::path("sweep_out"));
    jecl::write_experiment_report(report, dir);
    std::cout << "wrote " << (dir / "report.json").string() << "\n";
    for (const auto& point : report.points)
        std::printf("%s=%.4g  ACC %.4f  NMI %.4f  ARI %.4f  (%zu/%zu trials)\n",
                    jecl::to_string(spec.axis).c_str(), point.value, point.mean_acc, point.mean_nmi,
                    point.mean_ari, point.ok_count, point.trials.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint embedding and cluster learning for paired two-view feature data"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic paired-view dataset");
    jecl::SyntheticRecipe recipe;
    fs::path synth_out = "data";
    std::vector<std::size_t> cluster_sizes;
    synth->add_option("--k", recipe.k, "Number of clusters")->required();
    synth->add_option("--per-cluster", recipe.per_cluster_n, "Samples per cluster");
    synth->add_option("--cluster-sizes", cluster_sizes, "Per-cluster sample counts")->delimiter(',');
    synth->add_option("--image-dim", recipe.image_dim, "Image feature dimension");
    synth->add_option("--text-dim", recipe.text_dim, "Text feature dimension");
    synth->add_option("--separation", recipe.separation, "Cluster center scale");
    synth->add_option("--noise", recipe.view_noise, "Within-cluster standard deviation");
    synth->add_option("--missing-rate", recipe.missing_rate, "Fraction of missing text");
    synth->add_option("--merged-pairs", recipe.merged_image_center_pairs,
                      "Class pairs sharing an image center");
    synth->add_option("--seed", recipe.seed, "Random seed");
    synth->add_option("--output-dir", synth_out, "Output directory");

    auto* pretrain = app.add_subcommand("pretrain", "Pretrain both view encoders");
    fs::path pre_images, pre_texts, pre_out = "checkpoints";
    std::string pre_mask;
    SdaeOptions pre_sdae;
    OptimOptions pre_optim;
    std::uint64_t pre_seed = 0;
    pretrain->add_option("--images", pre_images, "Image feature file")->required();
    pretrain->add_option("--texts", pre_texts, "Text feature file")->required();
    pretrain->add_option("--mask", pre_mask, "Text-present mask file");
    add_sdae_options(pretrain, pre_sdae);
    add_optim_options(pretrain, pre_optim);
    pretrain->add_option("--seed", pre_seed, "Random seed");
    pretrain->add_option("--output-dir", pre_out, "Checkpoint directory");

    auto* cluster = app.add_subcommand("cluster", "Run the clustering pipeline");
    fs::path cl_images, cl_texts, cl_out = "run";
    std::string cl_labels, cl_mask, cl_checkpoints, cl_single;
    SdaeOptions cl_sdae;
    OptimOptions cl_optim;
    jecl::PipelineConfig pipeline;
    bool cl_timings = false;
    cluster->add_option("--images", cl_images, "Image feature file")->required();
    cluster->add_option("--texts", cl_texts, "Text feature file")->required();
    cluster->add_option("--labels", cl_labels, "Ground-truth labels (for metrics)");
    cluster->add_option("--mask", cl_mask, "Text-present mask file");
    cluster->add_option("--checkpoint-dir", cl_checkpoints, "Load pretrained encoders");
    cluster->add_option("--single-view", cl_single, "Run the one-view baseline")
        ->check(CLI::IsMember({"image", "text"}));
    cluster->add_option("--k", pipeline.train.k, "Number of clusters")->required();
    cluster->add_option("--lambda", pipeline.train.loss.lambda, "Image weight in the target");
    cluster->add_option("--beta", pipeline.train.loss.beta, "Balance regularizer weight");
    cluster->add_option("--gamma", pipeline.train.loss.gamma, "Alignment loss weight");
    cluster->add_option("--alpha", pipeline.train.loss.alpha, "Student-t degrees of freedom");
    cluster->add_option("--batch-size", pipeline.train.batch_size, "Mini-batch size");
    cluster->add_option("--update-interval", pipeline.train.update_interval,
                        "Batches between target refreshes (0 = once per epoch)");
    cluster->add_option("--max-epochs", pipeline.train.max_epochs, "Epoch budget");
    cluster->add_option("--tolerance", pipeline.train.label_change_tolerance,
                        "Label-change convergence threshold");
    cluster->add_option("--kmeans-restarts", pipeline.kmeans_restarts, "k-means restarts");
    add_sdae_options(cluster, cl_sdae);
    add_optim_options(cluster, cl_optim);
    cluster->add_option("--seed", pipeline.seed, "Random seed");
    cluster->add_option("--output-dir", cl_out, "Output directory");
    cluster->add_flag("--timings", cl_timings, "Record wall-clock time in the report");

    auto* eval = app.add_subcommand("eval", "Score predicted labels against ground truth");
    fs::path ev_pred, ev_truth;
    eval->add_option("--pred", ev_pred, "Predicted label file")->required();
    eval->add_option("--truth", ev_truth, "Ground-truth label file")->required();

    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep from a JSON spec");
    fs::path sw_config;
    std::string sw_out;
    bool sw_timings = false;
    sweep->add_option("--config", sw_config, "Experiment spec (JSON)")->required();
    sweep->add_option("--output-dir", sw_out, "Report directory");
    sweep->add_flag("--timings", sw_timings, "Record wall-clock time per trial");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            recipe.cluster_sizes = cluster_sizes;
            return cmd_synth(recipe, synth_out);
        }
        if (*pretrain) {
            std::optional<fs::path> mask;
            if (!pre_mask.empty()) mask = pre_mask;
            return cmd_pretrain(pre_images, pre_texts, mask, pre_sdae, pre_optim, pre_seed, pre_out);
        }
        if (*cluster) {
            std::optional<fs::path> labels, mask, checkpoints;
            if (!cl_labels.empty()) labels = cl_labels;
            if (!cl_mask.empty()) mask = cl_mask;
            if (!cl_checkpoints.empty()) checkpoints = cl_checkpoints;
            pipeline.sdae_image = make_sdae(cl_sdae, cl_optim);
            pipeline.sdae_text = make_sdae(cl_sdae, cl_optim);
            pipeline.train.optimizer = make_optimizer(cl_optim);
            return cmd_cluster(cl_images, cl_texts, labels, mask, checkpoints, cl_single, pipeline,
                               cl_out, cl_timings);
        }
        if (*eval) return cmd_eval(ev_pred, ev_truth);
        if (*sweep) {
            std::optional<fs::path> out;
            if (!sw_out.empty()) out = sw_out;
            return cmd_sweep(sw_config, out, sw_timings ? std::optional<bool>(true) : std::nullopt);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
