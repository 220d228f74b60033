#include "jecl/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "jecl/hungarian.hpp"
#include "jecl/kmeans.hpp"
#include "jecl/objective.hpp"
#include "jecl/rng.hpp"

namespace jecl {

using nlohmann::json;

SdaeConfig resolve_sdae(SdaeConfig cfg, std::size_t input_dim) {
    if (cfg.layer_dims.empty()) cfg.layer_dims = {0, 500, 500, 2000, 10};
    if (cfg.layer_dims.front() == 0) cfg.layer_dims.front() = input_dim;
    if (cfg.layer_dims.front() != input_dim)
        throw std::invalid_argument("sdae: layer_dims expect " +
                                    std::to_string(cfg.layer_dims.front()) +
                                    " input features, data has " + std::to_string(input_dim));
    cfg.validate();
    return cfg;
}

namespace {

std::vector<std::size_t> present_rows_of(const PairedDataset& ds) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.text_present[i]) rows.push_back(i);
    return rows;
}

ViewModel init_view(const DenseMatrix& features, SdaeConfig sdae, std::size_t k,
                    std::size_t restarts, std::size_t max_iter, std::uint64_t kmeans_seed,
                    const Mlp* pretrained) {
    ViewModel view;
    if (pretrained) {
        view.encoder = *pretrained;
        if (view.encoder.input_dim() != features.cols())
            throw std::invalid_argument("pipeline: checkpoint encoder expects " +
                                        std::to_string(view.encoder.input_dim()) +
                                        " features, data has " + std::to_string(features.cols()));
    } else {
        view.encoder = pretrain_view(features, sdae).encoder;
    }
    const DenseMatrix embeddings = embed(view.encoder, features);
    KMeansConfig km{.k = k, .restarts = restarts, .max_iter = max_iter, .seed = kmeans_seed};
    view.centroids = kmeans(embeddings, km).centroids;
    return view;
}

}  // namespace

PipelineResult run_jecl(const PairedDataset& dataset, const PipelineConfig& cfg,
                        const ProgressSink& sink, const Mlp* pretrained_image,
                        const Mlp* pretrained_text) {
    dataset.validate();
    const std::size_t k = cfg.train.k;
    if (k == 0) throw std::invalid_argument("pipeline: k must be set");
    const auto present = present_rows_of(dataset);
    if (present.empty())
        throw std::invalid_argument(
            "pipeline: no text present in any sample; run the single-view image baseline instead");

    SdaeConfig sdae_img = resolve_sdae(cfg.sdae_image, dataset.image_features.cols());
    SdaeConfig sdae_txt = resolve_sdae(cfg.sdae_text, dataset.text_features.cols());
    sdae_img.seed = derive_seed(cfg.seed, 1);
    sdae_txt.seed = derive_seed(cfg.seed, 2);

    ViewModel image = init_view(dataset.image_features, sdae_img, k, cfg.kmeans_restarts,
                                cfg.kmeans_max_iter, derive_seed(cfg.seed, 3), pretrained_image);

    // Text pretraining and centroid initialization use text-present rows
    // only; the all-zero placeholder rows carry no information.
    const DenseMatrix text_present_rows = select_rows(dataset.text_features, present);
    ViewModel text = init_view(text_present_rows, sdae_txt, k, cfg.kmeans_restarts,
                               cfg.kmeans_max_iter, derive_seed(cfg.seed, 4), pretrained_text);

    // Align text cluster indices with image cluster indices once, before
    // the clustering phase.
    {
        const DenseMatrix z_img = embed(image.encoder, select_rows(dataset.image_features, present));
        const DenseMatrix z_txt = embed(text.encoder, text_present_rows);
        const auto q0 = soft_assign(z_img, image.centroids, cfg.train.loss.alpha);
        const auto r0 = soft_assign(z_txt, text.centroids, cfg.train.loss.alpha);
        const auto corr = align_views(q0, r0);
        text.centroids = apply_correspondence_to_rows(text.centroids, corr);
    }

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = derive_seed(cfg.seed, 5);
    TrainResult trained = train(dataset, std::move(image), std::move(text), train_cfg, sink);

    PipelineResult result;
    result.image = std::move(trained.image);
    result.text = std::move(trained.text);
    result.target = std::move(trained.target);
    result.state = std::move(trained.state);
    result.embeddings_image = embed(result.image.encoder, dataset.image_features);
    result.embeddings_text = embed(result.text.encoder, dataset.text_features);
    result.report = make_report(result.state.hard_labels, k,
                                dataset.labels ? std::span<const std::size_t>(*dataset.labels)
                                               : std::span<const std::size_t>());
    return result;
}

PipelineResult run_single_view(const PairedDataset& dataset, ViewSelector selector,
                               const PipelineConfig& cfg, const ProgressSink& sink,
                               const Mlp* pretrained) {
    dataset.validate();
    const std::size_t k = cfg.train.k;
    if (k == 0) throw std::invalid_argument("pipeline: k must be set");
    if (selector == ViewSelector::Text && dataset.present_count() == 0)
        throw std::invalid_argument("pipeline: text view selected but every text row is missing");

    const DenseMatrix& features =
        selector == ViewSelector::Image ? dataset.image_features : dataset.text_features;
    SdaeConfig sdae = resolve_sdae(
        selector == ViewSelector::Image ? cfg.sdae_image : cfg.sdae_text, features.cols());
    sdae.seed = derive_seed(cfg.seed, selector == ViewSelector::Image ? 1 : 2);

    ViewModel view = init_view(features, sdae, k, cfg.kmeans_restarts, cfg.kmeans_max_iter,
                               derive_seed(cfg.seed, selector == ViewSelector::Image ? 3 : 4),
                               pretrained);

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = derive_seed(cfg.seed, 5);
    train_cfg.loss.lambda = selector == ViewSelector::Image ? 1.0 : 0.0;
    train_cfg.loss.gamma = 0.0;
    SingleViewResult trained = train_single_view(
        features, std::move(view), train_cfg, sink,
        dataset.labels ? &dataset.labels.value() : nullptr);

    PipelineResult result;
    if (selector == ViewSelector::Image) {
        result.image = std::move(trained.view);
        result.embeddings_image = embed(result.image.encoder, features);
    } else {
        result.text = std::move(trained.view);
        result.embeddings_text = embed(result.text.encoder, features);
    }
    result.target = std::move(trained.target);
    result.state = std::move(trained.state);
    result.report = make_report(result.state.hard_labels, k,
                                dataset.labels ? std::span<const std::size_t>(*dataset.labels)
                                               : std::span<const std::size_t>());
    return result;
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Lambda: return "lambda";
        case SweepAxis::Beta: return "beta";
        case SweepAxis::Gamma: return "gamma";
        case SweepAxis::MissingRate: return "missing_rate";
        case SweepAxis::SizeRatio: return "size_ratio";
    }
    return "?";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
    if (name == "lambda") return SweepAxis::Lambda;
    if (name == "beta") return SweepAxis::Beta;
    if (name == "gamma") return SweepAxis::Gamma;
    if (name == "missing_rate") return SweepAxis::MissingRate;
    if (name == "size_ratio") return SweepAxis::SizeRatio;
    throw std::invalid_argument("unknown sweep axis '" + name + "'");
}

void ExperimentSpec::validate() const {
    if (!synthetic && !files)
        throw std::invalid_argument("experiment: a dataset source is required");
    if (synthetic && files)
        throw std::invalid_argument("experiment: choose one dataset source, not both");
    if (synthetic) synthetic->validate();
    if (values.empty()) throw std::invalid_argument("experiment: sweep values are empty");
    if (trials == 0) throw std::invalid_argument("experiment: trials must be >= 1");
    for (double v : values) {
        switch (axis) {
            case SweepAxis::Lambda:
                if (v < 0.0 || v > 1.0)
                    throw std::invalid_argument("experiment: lambda values must be in [0,1]");
                break;
            case SweepAxis::Beta:
            case SweepAxis::Gamma:
                if (v < 0.0) throw std::invalid_argument("experiment: weight values must be >= 0");
                break;
            case SweepAxis::MissingRate:
                if (v < 0.0 || v >= 1.0)
                    throw std::invalid_argument("experiment: missing rates must be in [0,1)");
                break;
            case SweepAxis::SizeRatio:
                if (!(v > 0.0) || v > 1.0)
                    throw std::invalid_argument("experiment: size ratios must be in (0,1]");
                break;
        }
    }
}

namespace {

json sdae_to_json(const SdaeConfig& cfg) {
    return json{{"layer_dims", cfg.layer_dims},
                {"corruption_rate", cfg.corruption_rate},
                {"layerwise_epochs", cfg.layerwise_epochs},
                {"finetune_epochs", cfg.finetune_epochs},
                {"batch_size", cfg.batch_size}};
}

json optimizer_to_json(const Optimizer::Config& cfg) {
    return json{{"kind", cfg.kind == Optimizer::Kind::Adam ? "adam" : "sgd"},
                {"learning_rate", cfg.learning_rate},
                {"momentum", cfg.momentum},
                {"beta1", cfg.beta1},
                {"beta2", cfg.beta2}};
}

json pipeline_to_json(const PipelineConfig& cfg) {
    return json{{"k", cfg.train.k},
                {"lambda", cfg.train.loss.lambda},
                {"beta", cfg.train.loss.beta},
                {"gamma", cfg.train.loss.gamma},
                {"alpha", cfg.train.loss.alpha},
                {"batch_size", cfg.train.batch_size},
                {"update_interval", cfg.train.update_interval},
                {"tolerance", cfg.train.label_change_tolerance},
                {"max_epochs", cfg.train.max_epochs},
                {"optimizer", optimizer_to_json(cfg.train.optimizer)},
                {"sdae_image", sdae_to_json(cfg.sdae_image)},
                {"sdae_text", sdae_to_json(cfg.sdae_text)},
                {"kmeans_restarts", cfg.kmeans_restarts},
                {"kmeans_max_iter", cfg.kmeans_max_iter},
                {"seed", cfg.seed}};
}

json synthetic_to_json(const SyntheticRecipe& r) {
    return json{{"k", r.k},
                {"per_cluster_n", r.per_cluster_n},
                {"cluster_sizes", r.cluster_sizes},
                {"image_dim", r.image_dim},
                {"text_dim", r.text_dim},
                {"separation", r.separation},
                {"view_noise", r.view_noise},
                {"missing_rate", r.missing_rate},
                {"merged_image_center_pairs", r.merged_image_center_pairs}};
}

json spec_to_json(const ExperimentSpec& spec) {
    json j{{"pipeline", pipeline_to_json(spec.pipeline)},
           {"sweep", json{{"axis", to_string(spec.axis)}, {"values", spec.values}}},
           {"trials", spec.trials},
           {"timings", spec.timings}};
    if (spec.synthetic) j["dataset"] = json{{"synthetic", synthetic_to_json(*spec.synthetic)}};
    if (spec.files) {
        json f{{"images", spec.files->images.string()}, {"texts", spec.files->texts.string()}};
        if (spec.files->labels) f["labels"] = spec.files->labels->string();
        if (spec.files->mask) f["mask"] = spec.files->mask->string();
        j["dataset"] = json{{"files", f}};
    }
    return j;
}

void sdae_from_json(const json& j, SdaeConfig& cfg) {
    if (j.contains("layer_dims")) cfg.layer_dims = j["layer_dims"].get<std::vector<std::size_t>>();
    if (j.contains("corruption_rate")) cfg.corruption_rate = j["corruption_rate"].get<double>();
    if (j.contains("layerwise_epochs")) cfg.layerwise_epochs = j["layerwise_epochs"].get<std::size_t>();
    if (j.contains("finetune_epochs")) cfg.finetune_epochs = j["finetune_epochs"].get<std::size_t>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<std::size_t>();
}

void apply_axis(PipelineConfig& cfg, SyntheticRecipe* recipe, SweepAxis axis, double value) {
    switch (axis) {
        case SweepAxis::Lambda: cfg.train.loss.lambda = value; break;
        case SweepAxis::Beta: cfg.train.loss.beta = value; break;
        case SweepAxis::Gamma: cfg.train.loss.gamma = value; break;
        case SweepAxis::MissingRate:
            if (recipe) recipe->missing_rate = value;
            break;
        case SweepAxis::SizeRatio: break;  // applied by subsampling
    }
}

std::vector<std::uint8_t> random_mask(std::size_t n, double rate, std::uint64_t seed) {
    std::vector<std::uint8_t> mask(n, 1);
    Rng rng(derive_seed(seed, 4));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : mask)
        if (u(rng) < rate) v = 0;
    return mask;
}

}  // namespace

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
    return pipeline_to_json(cfg).dump();
}

std::string experiment_spec_to_json(const ExperimentSpec& spec) {
    return spec_to_json(spec).dump(2);
}

ExperimentSpec parse_experiment_spec(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error(json_path.string() + ": cannot open");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(json_path.string() + ": invalid JSON: " + e.what());
    }

    ExperimentSpec spec;
    if (!j.contains("dataset")) throw std::runtime_error(json_path.string() + ": missing 'dataset'");
    const json& ds = j["dataset"];
    if (ds.contains("synthetic")) {
        const json& s = ds["synthetic"];
        SyntheticRecipe r;
        if (s.contains("k")) r.k = s["k"].get<std::size_t>();
        if (s.contains("per_cluster_n")) r.per_cluster_n = s["per_cluster_n"].get<std::size_t>();
        if (s.contains("cluster_sizes"))
            r.cluster_sizes = s["cluster_sizes"].get<std::vector<std::size_t>>();
        if (s.contains("image_dim")) r.image_dim = s["image_dim"].get<std::size_t>();
        if (s.contains("text_dim")) r.text_dim = s["text_dim"].get<std::size_t>();
        if (s.contains("separation")) r.separation = s["separation"].get<double>();
        if (s.contains("view_noise")) r.view_noise = s["view_noise"].get<double>();
        if (s.contains("missing_rate")) r.missing_rate = s["missing_rate"].get<double>();
        if (s.contains("merged_image_center_pairs"))
            r.merged_image_center_pairs = s["merged_image_center_pairs"].get<std::size_t>();
        spec.synthetic = r;
    } else if (ds.contains("files")) {
        const json& f = ds["files"];
        DataFiles files;
        files.images = f.at("images").get<std::string>();
        files.texts = f.at("texts").get<std::string>();
        if (f.contains("labels")) files.labels = f["labels"].get<std::string>();
        if (f.contains("mask")) files.mask = f["mask"].get<std::string>();
        spec.files = files;
    } else {
        throw std::runtime_error(json_path.string() + ": dataset must be 'synthetic' or 'files'");
    }

    if (j.contains("pipeline")) {
        const json& p = j["pipeline"];
        PipelineConfig& cfg = spec.pipeline;
        if (p.contains("k")) cfg.train.k = p["k"].get<std::size_t>();
        if (p.contains("lambda")) cfg.train.loss.lambda = p["lambda"].get<double>();
        if (p.contains("beta")) cfg.train.loss.beta = p["beta"].get<double>();
        if (p.contains("gamma")) cfg.train.loss.gamma = p["gamma"].get<double>();
        if (p.contains("alpha")) cfg.train.loss.alpha = p["alpha"].get<double>();
        if (p.contains("batch_size")) cfg.train.batch_size = p["batch_size"].get<std::size_t>();
        if (p.contains("update_interval"))
            cfg.train.update_interval = p["update_interval"].get<std::size_t>();
        if (p.contains("tolerance"))
            cfg.train.label_change_tolerance = p["tolerance"].get<double>();
        if (p.contains("max_epochs")) cfg.train.max_epochs = p["max_epochs"].get<std::size_t>();
        if (p.contains("optimizer")) {
            const std::string kind = p["optimizer"].get<std::string>();
            if (kind == "adam") cfg.train.optimizer.kind = Optimizer::Kind::Adam;
            else if (kind == "sgd") cfg.train.optimizer.kind = Optimizer::Kind::SgdMomentum;
            else throw std::runtime_error("pipeline.optimizer must be 'adam' or 'sgd'");
        }
        if (p.contains("learning_rate"))
            cfg.train.optimizer.learning_rate = p["learning_rate"].get<double>();
        if (p.contains("momentum")) cfg.train.optimizer.momentum = p["momentum"].get<double>();
        if (p.contains("seed")) cfg.seed = p["seed"].get<std::uint64_t>();
        if (p.contains("kmeans_restarts"))
            cfg.kmeans_restarts = p["kmeans_restarts"].get<std::size_t>();
        if (p.contains("kmeans_max_iter"))
            cfg.kmeans_max_iter = p["kmeans_max_iter"].get<std::size_t>();

        SdaeConfig shared;
        shared.optimizer = cfg.train.optimizer;
        if (p.contains("hidden_dims") || p.contains("embedding_dim")) {
            std::vector<std::size_t> hidden{500, 500, 2000};
            std::size_t emb = 10;
            if (p.contains("hidden_dims")) hidden = p["hidden_dims"].get<std::vector<std::size_t>>();
            if (p.contains("embedding_dim")) emb = p["embedding_dim"].get<std::size_t>();
            shared.layer_dims = {0};
            shared.layer_dims.insert(shared.layer_dims.end(), hidden.begin(), hidden.end());
            shared.layer_dims.push_back(emb);
        }
        if (p.contains("corruption_rate")) shared.corruption_rate = p["corruption_rate"].get<double>();
        if (p.contains("layerwise_epochs"))
            shared.layerwise_epochs = p["layerwise_epochs"].get<std::size_t>();
        if (p.contains("finetune_epochs"))
            shared.finetune_epochs = p["finetune_epochs"].get<std::size_t>();
        cfg.sdae_image = shared;
        cfg.sdae_text = shared;
        if (p.contains("sdae_image")) sdae_from_json(p["sdae_image"], cfg.sdae_image);
        if (p.contains("sdae_text")) sdae_from_json(p["sdae_text"], cfg.sdae_text);
        cfg.sdae_image.optimizer = cfg.train.optimizer;
        cfg.sdae_text.optimizer = cfg.train.optimizer;
    }

    if (j.contains("sweep")) {
        spec.axis = sweep_axis_from_string(j["sweep"].at("axis").get<std::string>());
        spec.values = j["sweep"].at("values").get<std::vector<double>>();
    }
    if (j.contains("trials")) spec.trials = j["trials"].get<std::size_t>();
    if (j.contains("timings")) spec.timings = j["timings"].get<bool>();
    spec.validate();
    return spec;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentReport report;
    report.config_json = experiment_spec_to_json(spec);

    std::optional<PairedDataset> file_data;
    if (spec.files)
        file_data = load_dataset(spec.files->images, spec.files->texts, spec.files->labels,
                                 spec.files->mask);

    for (double value : spec.values) {
        SweepPoint point;
        point.value = value;
        for (std::size_t trial = 0; trial < spec.trials; ++trial) {
            const std::uint64_t trial_seed = derive_seed(spec.pipeline.seed, 1000 + trial);
            TrialResult result;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                PipelineConfig cfg = spec.pipeline;
                cfg.seed = trial_seed;
                SyntheticRecipe recipe;
                PairedDataset data;
                if (spec.synthetic) {
                    recipe = *spec.synthetic;
                    recipe.seed = trial_seed;
                    apply_axis(cfg, &recipe, spec.axis, value);
                    data = generate_synthetic(recipe);
                } else {
                    data = *file_data;
                    apply_axis(cfg, nullptr, spec.axis, value);
                    if (spec.axis == SweepAxis::MissingRate) {
                        data.text_present = random_mask(data.size(), value, trial_seed);
                        for (std::size_t i = 0; i < data.size(); ++i)
                            if (!data.text_present[i])
                                for (double& v : data.text_features.row(i)) v = 0.0;
                    }
                }
                if (spec.axis == SweepAxis::SizeRatio) data = subsample(data, value, trial_seed);

                const PipelineResult run = run_jecl(data, cfg);
                result.ok = true;
                result.has_metrics = run.report.has_metrics;
                result.acc = run.report.acc;
                result.nmi = run.report.nmi;
                result.ari = run.report.ari;
                result.empty_clusters = run.report.empty_clusters;
                result.epochs = run.state.epochs_run;
                result.converged = run.state.converged;
            } catch (const std::exception& e) {
                result.ok = false;
                result.error = e.what();
            }
            if (spec.timings) {
                const auto t1 = std::chrono::steady_clock::now();
                result.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
            }
            point.trials.push_back(std::move(result));
        }
        for (const auto& t : point.trials) {
            if (!t.ok) continue;
            ++point.ok_count;
            point.mean_acc += t.acc;
            point.mean_nmi += t.nmi;
            point.mean_ari += t.ari;
            point.mean_empty += static_cast<double>(t.empty_clusters);
            point.mean_epochs += static_cast<double>(t.epochs);
            point.mean_wall += t.wall_seconds;
        }
        if (point.ok_count > 0) {
            const double d = static_cast<double>(point.ok_count);
            point.mean_acc /= d;
            point.mean_nmi /= d;
            point.mean_ari /= d;
            point.mean_empty /= d;
            point.mean_epochs /= d;
            point.mean_wall /= d;
        }
        report.points.push_back(std::move(point));
    }
    return report;
}

void write_experiment_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    json j;
    j["config"] = json::parse(report.config_json);
    json points = json::array();
    for (const auto& point : report.points) {
        json trials = json::array();
        for (const auto& t : point.trials) {
            json jt{{"ok", t.ok},
                    {"empty_clusters", t.empty_clusters},
                    {"epochs", t.epochs},
                    {"converged", t.converged},
                    {"wall_seconds", t.wall_seconds}};
            if (t.has_metrics) {
                jt["acc"] = t.acc;
                jt["nmi"] = t.nmi;
                jt["ari"] = t.ari;
            }
            if (!t.ok) jt["error"] = t.error;
            trials.push_back(jt);
        }
        points.push_back(json{{"value", point.value},
                              {"per_trial", trials},
                              {"means", json{{"acc", point.mean_acc},
                                             {"nmi", point.mean_nmi},
                                             {"ari", point.mean_ari},
                                             {"empty_clusters", point.mean_empty},
                                             {"epochs", point.mean_epochs},
                                             {"wall_seconds", point.mean_wall},
                                             {"ok_trials", point.ok_count}}}});
    }
    j["sweep"] = points;

    std::ofstream json_out(dir / "report.json");
    if (!json_out) throw std::runtime_error((dir / "report.json").string() + ": cannot open");
    json_out << j.dump(2) << "\n";

    std::ofstream txt(dir / "report.txt");
    if (!txt) throw std::runtime_error((dir / "report.txt").string() + ": cannot open");
    char line[160];
    txt << "#    value      ACC      NMI      ARI    empty   epochs  ok\n";
    for (const auto& point : report.points) {
        std::snprintf(line, sizeof(line), "%10.4f %8.4f %8.4f %8.4f %8.2f %8.1f  %zu/%zu\n",
                      point.value, point.mean_acc, point.mean_nmi, point.mean_ari,
                      point.mean_empty, point.mean_epochs, point.ok_count, point.trials.size());
        txt << line;
    }
}

}  // namespace jecl
