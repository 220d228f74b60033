#include "jecl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "jecl/hungarian.hpp"
#include "jecl/rng.hpp"

namespace jecl {

namespace {

std::vector<ParamRef> encoder_params(Mlp& net, const StackGradients& grads) {
    std::vector<ParamRef> refs;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        refs.push_back({net.layers()[l].weight.flat(), grads.weight[l].flat()});
        refs.push_back({std::span<double>(net.layers()[l].bias),
                        std::span<const double>(grads.bias[l])});
    }
    return refs;
}

double label_change_fraction(const std::vector<std::size_t>& now,
                             const std::vector<std::size_t>& before) {
    std::size_t changed = 0;
    for (std::size_t i = 0; i < now.size(); ++i) changed += now[i] != before[i] ? 1 : 0;
    return static_cast<double>(changed) / static_cast<double>(now.size());
}

std::string batch_summary(const std::vector<std::size_t>& batch) {
    std::string s = "rows [";
    for (std::size_t i = 0; i < batch.size() && i < 8; ++i) {
        if (i) s += ", ";
        s += std::to_string(batch[i]);
    }
    if (batch.size() > 8) s += ", ...";
    s += "] (" + std::to_string(batch.size()) + " samples)";
    return s;
}

void check_view(const ViewModel& view, std::size_t feature_dim, std::size_t k, const char* name) {
    if (view.encoder.input_dim() != feature_dim)
        throw std::invalid_argument(std::string("train: ") + name + " encoder expects " +
                                    std::to_string(view.encoder.input_dim()) +
                                    " features, dataset has " + std::to_string(feature_dim));
    if (view.encoder.output_dim() != view.centroids.cols())
        throw std::invalid_argument(std::string("train: ") + name +
                                    " centroid dim does not match encoder embedding dim");
    if (view.centroids.rows() != k)
        throw std::invalid_argument(std::string("train: ") + name + " has " +
                                    std::to_string(view.centroids.rows()) + " centroids, expected " +
                                    std::to_string(k));
}

}  // namespace

void TrainConfig::validate() const {
    loss.validate();
    optimizer.validate();
    if (batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
    if (!(label_change_tolerance > 0.0) || label_change_tolerance >= 1.0)
        throw std::invalid_argument("train: label_change_tolerance must be in (0,1)");
}

std::vector<std::size_t> final_assignment(const DenseMatrix& p) { return argmax_labels(p); }

TrainResult train(const PairedDataset& dataset, ViewModel image, ViewModel text,
                  const TrainConfig& cfg, const ProgressSink& sink) {
    cfg.validate();
    dataset.validate();
    const std::size_t n = dataset.size();
    if (n == 0) throw std::invalid_argument("train: empty dataset");
    const std::size_t k = image.centroids.rows();
    if (cfg.k != 0 && cfg.k != k)
        throw std::invalid_argument("train: cfg.k=" + std::to_string(cfg.k) + " but centroids have " +
                                    std::to_string(k) + " rows");
    check_view(image, dataset.image_features.cols(), k, "image");
    check_view(text, dataset.text_features.cols(), k, "text");

    const TextMask mask(dataset.text_present);
    TrainState state;
    DenseMatrix target;
    DenseMatrix q_full, r_full;

    auto evaluate_full = [&]() {
        q_full = soft_assign(image.encoder.apply(dataset.image_features), image.centroids,
                             cfg.loss.alpha);
        r_full = soft_assign(text.encoder.apply(dataset.text_features), text.centroids,
                             cfg.loss.alpha);
    };

    if (cfg.max_epochs == 0) {
        evaluate_full();
        target = target_distribution(q_full, r_full, cfg.loss.lambda, mask);
        state.hard_labels = final_assignment(target);
        return {std::move(image), std::move(text), std::move(target), std::move(state)};
    }

    Optimizer opt(cfg.optimizer);
    Rng shuffle_rng(derive_seed(cfg.seed, 11));
    const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t interval = cfg.update_interval ? cfg.update_interval : batches_per_epoch;

    std::vector<std::size_t> last_labels;
    std::size_t refresh_index = 0;
    std::size_t batch_counter = 0;
    bool done = false;

    auto refresh = [&](std::size_t epoch) -> bool {
        evaluate_full();
        std::optional<LossBreakdown> with_prev_target;
        if (refresh_index > 0)
            with_prev_target = total_loss(q_full, r_full, target, cfg.loss, mask);
        target = target_distribution(q_full, r_full, cfg.loss.lambda, mask);
        const auto labels = final_assignment(target);
        const double change =
            last_labels.empty() ? 1.0 : label_change_fraction(labels, last_labels);
        const LossBreakdown breakdown = total_loss(q_full, r_full, target, cfg.loss, mask);
        if (!std::isfinite(breakdown.total))
            throw std::runtime_error("train: non-finite loss at refresh " +
                                     std::to_string(refresh_index) + " (epoch " +
                                     std::to_string(epoch) + ")");
        state.loss_trace.push_back(breakdown);

        ProgressRecord rec;
        rec.epoch = epoch;
        rec.refresh_index = refresh_index;
        rec.loss = breakdown;
        rec.loss_prev_target = with_prev_target;
        rec.label_change = change;
        rec.empty_clusters = empty_cluster_count(labels, k);
        if (k > 1 && dataset.present_count() > 0) {
            std::vector<std::size_t> present_rows;
            for (std::size_t i = 0; i < n; ++i)
                if (dataset.text_present[i]) present_rows.push_back(i);
            const auto corr = align_views(select_rows(q_full, present_rows),
                                          select_rows(r_full, present_rows));
            rec.alignment_drift = !corr.is_identity();
            if (rec.alignment_drift) ++state.alignment_drift_events;
        }
        if (dataset.labels) rec.metrics = make_report(labels, k, *dataset.labels);
        if (sink) sink(rec);

        const bool converged = !last_labels.empty() && change < cfg.label_change_tolerance;
        last_labels = labels;
        ++refresh_index;
        return converged;
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 0; epoch < cfg.max_epochs && !done; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t b = 0; b < batches_per_epoch && !done; ++b) {
            if (batch_counter % interval == 0 && refresh(epoch)) {
                state.converged = true;
                done = true;
                break;
            }
            const std::size_t start = b * cfg.batch_size;
            const std::size_t end = std::min(n, start + cfg.batch_size);
            const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(end));

            const DenseMatrix x_img = select_rows(dataset.image_features, batch);
            const DenseMatrix x_txt = select_rows(dataset.text_features, batch);
            const DenseMatrix p_batch = select_rows(target, batch);
            std::vector<std::uint8_t> mask_batch(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i)
                mask_batch[i] = dataset.text_present[batch[i]];

            const DenseMatrix& z_img = image.encoder.forward(x_img);
            const DenseMatrix& z_txt = text.encoder.forward(x_txt);
            try {
                const ObjectiveGradients obj =
                    loss_gradients(z_img, z_txt, image.centroids, text.centroids, p_batch,
                                   cfg.loss, mask_batch);
                const StackGradients g_img = image.encoder.backward(obj.z_img);
                const StackGradients g_txt = text.encoder.backward(obj.z_txt);

                std::vector<ParamRef> params = encoder_params(image.encoder, g_img);
                const auto txt_params = encoder_params(text.encoder, g_txt);
                params.insert(params.end(), txt_params.begin(), txt_params.end());
                params.push_back({image.centroids.flat(), obj.centroids_img.flat()});
                params.push_back({text.centroids.flat(), obj.centroids_txt.flat()});
                opt.step(params);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error(std::string(e.what()) + "; offending batch at epoch " +
                                         std::to_string(epoch) + ", " + batch_summary(batch));
            }
            ++batch_counter;
        }
        if (!done) state.epochs_run = epoch + 1;
    }

    evaluate_full();
    target = target_distribution(q_full, r_full, cfg.loss.lambda, mask);
    state.hard_labels = final_assignment(target);
    return {std::move(image), std::move(text), std::move(target), std::move(state)};
}

SingleViewResult train_single_view(const DenseMatrix& features, ViewModel view,
                                   const TrainConfig& cfg, const ProgressSink& sink,
                                   const std::vector<std::size_t>* true_labels) {
    cfg.validate();
    const std::size_t n = features.rows();
    if (n == 0) throw std::invalid_argument("train_single_view: empty data");
    const std::size_t k = view.centroids.rows();
    if (cfg.k != 0 && cfg.k != k)
        throw std::invalid_argument("train_single_view: cfg.k does not match centroids");
    check_view(view, features.cols(), k, "selected");

    TrainState state;
    DenseMatrix target;
    DenseMatrix q_full;

    auto evaluate_full = [&]() {
        q_full = soft_assign(view.encoder.apply(features), view.centroids, cfg.loss.alpha);
    };

    if (cfg.max_epochs == 0) {
        evaluate_full();
        target = single_view_target(q_full);
        state.hard_labels = final_assignment(target);
        return {std::move(view), std::move(target), std::move(state)};
    }

    Optimizer opt(cfg.optimizer);
    Rng shuffle_rng(derive_seed(cfg.seed, 11));
    const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t interval = cfg.update_interval ? cfg.update_interval : batches_per_epoch;

    std::vector<std::size_t> last_labels;
    std::size_t refresh_index = 0;
    std::size_t batch_counter = 0;
    bool done = false;

    auto refresh = [&](std::size_t epoch) -> bool {
        evaluate_full();
        std::optional<LossBreakdown> with_prev_target;
        if (refresh_index > 0) with_prev_target = single_view_loss(q_full, target, cfg.loss);
        target = single_view_target(q_full);
        const auto labels = final_assignment(target);
        const double change =
            last_labels.empty() ? 1.0 : label_change_fraction(labels, last_labels);
        const LossBreakdown breakdown = single_view_loss(q_full, target, cfg.loss);
        if (!std::isfinite(breakdown.total))
            throw std::runtime_error("train_single_view: non-finite loss at refresh " +
                                     std::to_string(refresh_index));
        state.loss_trace.push_back(breakdown);

        ProgressRecord rec;
        rec.epoch = epoch;
        rec.refresh_index = refresh_index;
        rec.loss = breakdown;
        rec.loss_prev_target = with_prev_target;
        rec.label_change = change;
        rec.empty_clusters = empty_cluster_count(labels, k);
        if (true_labels) rec.metrics = make_report(labels, k, *true_labels);
        if (sink) sink(rec);

        const bool converged = !last_labels.empty() && change < cfg.label_change_tolerance;
        last_labels = labels;
        ++refresh_index;
        return converged;
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 0; epoch < cfg.max_epochs && !done; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t b = 0; b < batches_per_epoch && !done; ++b) {
            if (batch_counter % interval == 0 && refresh(epoch)) {
                state.converged = true;
                done = true;
                break;
            }
            const std::size_t start = b * cfg.batch_size;
            const std::size_t end = std::min(n, start + cfg.batch_size);
            const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(end));

            const DenseMatrix x = select_rows(features, batch);
            const DenseMatrix p_batch = select_rows(target, batch);
            const DenseMatrix& z = view.encoder.forward(x);
            try {
                const SingleViewGradients obj =
                    single_view_gradients(z, view.centroids, p_batch, cfg.loss);
                const StackGradients g = view.encoder.backward(obj.z);
                std::vector<ParamRef> params = encoder_params(view.encoder, g);
                params.push_back({view.centroids.flat(), obj.centroids.flat()});
                opt.step(params);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error(std::string(e.what()) + "; offending batch at epoch " +
                                         std::to_string(epoch) + ", " + batch_summary(batch));
            }
            ++batch_counter;
        }
        if (!done) state.epochs_run = epoch + 1;
    }

    evaluate_full();
    target = single_view_target(q_full);
    state.hard_labels = final_assignment(target);
    return {std::move(view), std::move(target), std::move(state)};
}

}  // namespace jecl
