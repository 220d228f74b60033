#include <doctest.h>

#include <cmath>
#include <numeric>

#include "jecl/experiment.hpp"
#include "jecl/hungarian.hpp"
#include "jecl/kmeans.hpp"
#include "jecl/rng.hpp"
#include "jecl/trainer.hpp"
#include "oracles.hpp"

using jecl::DenseMatrix;
using jecl::PairedDataset;
using jecl::PipelineConfig;
using jecl::TrainConfig;
using jecl::ViewModel;

namespace {

// Small pipeline configuration for fast, separable problems.
PipelineConfig quick_config(std::size_t k, std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.sdae_image.layer_dims = {0, 24, 6};
    cfg.sdae_image.layerwise_epochs = 6;
    cfg.sdae_image.finetune_epochs = 12;
    cfg.sdae_text = cfg.sdae_image;
    cfg.train.k = k;
    cfg.train.max_epochs = 40;
    cfg.kmeans_restarts = 8;
    cfg.seed = seed;
    return cfg;
}

ViewModel make_view(std::size_t in_dim, std::size_t emb, std::size_t k, jecl::Rng& rng) {
    ViewModel view;
    view.encoder = jecl::Mlp({jecl::make_layer(in_dim, emb, jecl::Activation::Identity, rng)});
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    view.centroids = DenseMatrix(k, emb);
    for (double& v : view.centroids.flat()) v = dist(rng);
    return view;
}

}  // namespace

TEST_CASE("final assignment takes the argmax with low-index ties") {
    DenseMatrix p(2, 3);
    p(0, 0) = 0.1; p(0, 1) = 0.7; p(0, 2) = 0.2;
    p(1, 0) = 0.5; p(1, 1) = 0.5; p(1, 2) = 0.0;
    const auto labels = jecl::final_assignment(p);
    CHECK(labels[0] == 1);
    CHECK(labels[1] == 0);

    DenseMatrix scaled = p;
    for (double& v : scaled.flat()) v *= 7.5;
    CHECK(jecl::final_assignment(scaled) == labels);
}

TEST_CASE("max_epochs zero returns the inputs unchanged and unconverged") {
    jecl::Rng rng(3);
    const PairedDataset ds = jecl::generate_synthetic(2, 10, 4, 4, 10.0, 0.5, 0.0, 5);
    ViewModel image = make_view(4, 3, 2, rng);
    ViewModel text = make_view(4, 3, 2, rng);
    const DenseMatrix w_before = image.encoder.layers()[0].weight;
    const DenseMatrix c_before = text.centroids;

    TrainConfig cfg;
    cfg.k = 2;
    cfg.max_epochs = 0;
    const auto result = jecl::train(ds, std::move(image), std::move(text), cfg);
    CHECK_FALSE(result.state.converged);
    CHECK(result.state.epochs_run == 0);
    CHECK(result.image.encoder.layers()[0].weight == w_before);
    CHECK(result.text.centroids == c_before);
    CHECK(result.target.rows() == ds.size());
}

TEST_CASE("two runs with the same seed produce bit-identical labels") {
    const PairedDataset ds = jecl::generate_synthetic(3, 40, 8, 8, 6.0, 1.5, 0.1, 7);
    const PipelineConfig cfg = quick_config(3, 11);
    const auto a = jecl::run_jecl(ds, cfg);
    const auto b = jecl::run_jecl(ds, cfg);
    CHECK(a.state.hard_labels == b.state.hard_labels);
    CHECK(a.target == b.target);
}

TEST_CASE("well-separated views converge to perfect accuracy within 30 epochs") {
    const PairedDataset ds = jecl::generate_synthetic(4, 60, 12, 12, 40.0, 1.0, 0.0, 13);
    PipelineConfig cfg = quick_config(4, 17);
    cfg.train.max_epochs = 30;
    const auto result = jecl::run_jecl(ds, cfg);
    CHECK(result.state.converged);
    CHECK(result.report.acc == doctest::Approx(1.0));
}

TEST_CASE("the target stays fixed between refreshes") {
    // Replicate one epoch by hand with the stored target and check the
    // trainer lands on exactly the same parameters; a trainer that
    // recomputed the target mid-epoch would diverge from this replica.
    const PairedDataset ds = jecl::generate_synthetic(2, 12, 4, 4, 8.0, 1.0, 0.0, 19);
    const std::size_t n = ds.size();

    jecl::Rng rng(23);
    ViewModel image = make_view(4, 3, 2, rng);
    ViewModel text = make_view(4, 3, 2, rng);
    ViewModel image_copy = image;
    ViewModel text_copy = text;

    TrainConfig cfg;
    cfg.k = 2;
    cfg.batch_size = n / 2;  // two batches per epoch
    cfg.max_epochs = 1;
    cfg.seed = 29;
    cfg.optimizer.kind = jecl::Optimizer::Kind::SgdMomentum;
    cfg.optimizer.learning_rate = 0.05;
    const auto result = jecl::train(ds, std::move(image), std::move(text), cfg);

    jecl::Rng shuffle_rng(jecl::derive_seed(cfg.seed, 11));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    const DenseMatrix q = jecl::soft_assign(image_copy.encoder.apply(ds.image_features),
                                            image_copy.centroids, cfg.loss.alpha);
    const DenseMatrix r = jecl::soft_assign(text_copy.encoder.apply(ds.text_features),
                                            text_copy.centroids, cfg.loss.alpha);
    const DenseMatrix p = jecl::target_distribution(q, r, cfg.loss.lambda, ds.text_present);

    jecl::Optimizer opt(cfg.optimizer);
    for (std::size_t b = 0; b < 2; ++b) {
        const std::vector<std::size_t> batch(
            order.begin() + static_cast<std::ptrdiff_t>(b * cfg.batch_size),
            order.begin() + static_cast<std::ptrdiff_t>((b + 1) * cfg.batch_size));
        const DenseMatrix xb = jecl::select_rows(ds.image_features, batch);
        const DenseMatrix tb = jecl::select_rows(ds.text_features, batch);
        const DenseMatrix pb = jecl::select_rows(p, batch);
        const std::vector<std::uint8_t> mb(batch.size(), 1);
        const DenseMatrix& zi = image_copy.encoder.forward(xb);
        const DenseMatrix& zt = text_copy.encoder.forward(tb);
        const auto obj = jecl::loss_gradients(zi, zt, image_copy.centroids, text_copy.centroids,
                                              pb, cfg.loss, mb);
        const auto gi = image_copy.encoder.backward(obj.z_img);
        const auto gt = text_copy.encoder.backward(obj.z_txt);
        std::vector<jecl::ParamRef> params;
        for (std::size_t l = 0; l < image_copy.encoder.layer_count(); ++l) {
            params.push_back({image_copy.encoder.layers()[l].weight.flat(), gi.weight[l].flat()});
            params.push_back({std::span<double>(image_copy.encoder.layers()[l].bias),
                              std::span<const double>(gi.bias[l])});
        }
        for (std::size_t l = 0; l < text_copy.encoder.layer_count(); ++l) {
            params.push_back({text_copy.encoder.layers()[l].weight.flat(), gt.weight[l].flat()});
            params.push_back({std::span<double>(text_copy.encoder.layers()[l].bias),
                              std::span<const double>(gt.bias[l])});
        }
        params.push_back({image_copy.centroids.flat(), obj.centroids_img.flat()});
        params.push_back({text_copy.centroids.flat(), obj.centroids_txt.flat()});
        opt.step(params);
    }

    CHECK(result.image.encoder.layers()[0].weight == image_copy.encoder.layers()[0].weight);
    CHECK(result.image.centroids == image_copy.centroids);
    CHECK(result.text.centroids == text_copy.centroids);
}

TEST_CASE("full-dataset loss is non-increasing across most optimization intervals") {
    // Overlapping clusters keep boundary labels flipping, so the run does
    // not converge before a useful number of intervals has elapsed.
    const PairedDataset ds = jecl::generate_synthetic(3, 50, 10, 10, 1.2, 2.0, 0.0, 31);
    PipelineConfig cfg = quick_config(3, 37);
    cfg.train.max_epochs = 25;
    cfg.train.label_change_tolerance = 1e-6;
    cfg.train.batch_size = 16;
    cfg.train.optimizer.learning_rate = 8e-3;

    std::size_t intervals = 0, descents = 0;
    double interval_start = 0.0;
    bool have_start = false;
    jecl::ProgressSink sink = [&](const jecl::ProgressRecord& rec) {
        if (rec.loss_prev_target && have_start) {
            ++intervals;
            if (rec.loss_prev_target->total <= interval_start + 1e-12) ++descents;
        }
        interval_start = rec.loss.total;
        have_start = true;
    };
    (void)jecl::run_jecl(ds, cfg, sink);
    REQUIRE(intervals >= 8);
    CHECK(static_cast<double>(descents) >= 0.9 * static_cast<double>(intervals));
}

TEST_CASE("converged flag implies the final label-change fraction was below tolerance") {
    const PairedDataset ds = jecl::generate_synthetic(3, 40, 8, 8, 30.0, 1.0, 0.0, 41);
    PipelineConfig cfg = quick_config(3, 43);
    double last_change = 1.0;
    jecl::ProgressSink sink = [&](const jecl::ProgressRecord& rec) { last_change = rec.label_change; };
    const auto result = jecl::run_jecl(ds, cfg, sink);
    REQUIRE(result.state.converged);
    CHECK(last_change < cfg.train.label_change_tolerance);
}

TEST_CASE("single-view trace equals a directly coded one-view baseline") {
    // The single-view degeneration must match a hand-written one-view
    // loop (own target, loss and gradient formulas) run from the same
    // initial state with the same optimizer and full-dataset batches.
    const PairedDataset ds = jecl::generate_synthetic(3, 20, 6, 6, 10.0, 1.0, 0.0, 47);
    const std::size_t n = ds.size(), k = 3, e = 3;

    jecl::Rng rng(53);
    ViewModel view = make_view(6, e, k, rng);
    ViewModel replica = view;

    TrainConfig cfg;
    cfg.k = k;
    cfg.batch_size = n;  // full-batch
    cfg.max_epochs = 12;
    cfg.label_change_tolerance = 1e-9;
    cfg.loss.lambda = 1.0;
    cfg.loss.gamma = 0.0;
    cfg.loss.beta = 0.0;
    cfg.seed = 59;
    cfg.optimizer.kind = jecl::Optimizer::Kind::SgdMomentum;
    cfg.optimizer.learning_rate = 0.02;

    const auto result = jecl::train_single_view(ds.image_features, std::move(view), cfg);

    jecl::Optimizer opt(cfg.optimizer);
    std::vector<double> trace;
    std::vector<std::size_t> labels_prev;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const DenseMatrix z = replica.encoder.apply(ds.image_features);
        const DenseMatrix q = oracle::soft_assign(z, replica.centroids, 1.0);
        // Squared, frequency-corrected, renormalized target.
        std::vector<double> f(k, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) f[j] += q(i, j);
        DenseMatrix p(n, k);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                p(i, j) = q(i, j) * q(i, j) / f[j];
                sum += p(i, j);
            }
            for (std::size_t j = 0; j < k; ++j) p(i, j) /= sum;
        }
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j)
                if (p(i, j) > 0.0) loss += p(i, j) * std::log(p(i, j) / q(i, j));
        trace.push_back(loss / static_cast<double>(n));

        // Mirror the convergence rule: stop once the argmax labels of the
        // fresh target change less than the tolerance.
        std::vector<std::size_t> labels(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 1; j < k; ++j)
                if (p(i, j) > p(i, labels[i])) labels[i] = j;
        if (!labels_prev.empty()) {
            std::size_t changed = 0;
            for (std::size_t i = 0; i < n; ++i) changed += labels[i] != labels_prev[i] ? 1 : 0;
            if (static_cast<double>(changed) / static_cast<double>(n) <
                cfg.label_change_tolerance)
                break;
        }
        labels_prev = labels;

        // Closed-form gradient of the KL term through the Student-t kernel.
        DenseMatrix gz(n, e), gmu(k, e);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                double d = 0.0;
                for (std::size_t c = 0; c < e; ++c) {
                    const double diff = z(i, c) - replica.centroids(j, c);
                    d += diff * diff;
                }
                const double w = 2.0 * (p(i, j) - q(i, j)) / (1.0 + d) / static_cast<double>(n);
                for (std::size_t c = 0; c < e; ++c) {
                    const double diff = z(i, c) - replica.centroids(j, c);
                    gz(i, c) += w * diff;
                    gmu(j, c) -= w * diff;
                }
            }
        replica.encoder.forward(ds.image_features);
        const auto g = replica.encoder.backward(gz);
        std::vector<jecl::ParamRef> params;
        for (std::size_t l = 0; l < replica.encoder.layer_count(); ++l) {
            params.push_back({replica.encoder.layers()[l].weight.flat(), g.weight[l].flat()});
            params.push_back({std::span<double>(replica.encoder.layers()[l].bias),
                              std::span<const double>(g.bias[l])});
        }
        params.push_back({replica.centroids.flat(), gmu.flat()});
        opt.step(params);
    }

    REQUIRE(result.state.loss_trace.size() == trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i)
        CHECK(result.state.loss_trace[i].total == doctest::Approx(trace[i]).epsilon(1e-9));
}

TEST_CASE("a divergent run aborts with a diagnostic instead of emitting garbage") {
    const PairedDataset ds = jecl::generate_synthetic(3, 30, 6, 6, 8.0, 1.0, 0.0, 87);
    jecl::Rng rng(89);
    ViewModel image = make_view(6, 3, 3, rng);
    ViewModel text = make_view(6, 3, 3, rng);
    TrainConfig cfg;
    cfg.k = 3;
    cfg.max_epochs = 200;
    cfg.optimizer.kind = jecl::Optimizer::Kind::SgdMomentum;
    cfg.optimizer.learning_rate = 1e200;  // guaranteed overflow
    CHECK_THROWS_AS(jecl::train(ds, std::move(image), std::move(text), cfg), std::runtime_error);
}

TEST_CASE("single-view text on an all-missing dataset is a configuration error") {
    PairedDataset ds = jecl::generate_synthetic(2, 10, 4, 4, 10.0, 1.0, 0.0, 61);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ds.text_present[i] = 0;
        for (double& v : ds.text_features.row(i)) v = 0.0;
    }
    const PipelineConfig cfg = quick_config(2, 67);
    CHECK_THROWS_AS(jecl::run_single_view(ds, jecl::ViewSelector::Text, cfg),
                    std::invalid_argument);
}

TEST_CASE("single-view baseline is deterministic") {
    const PairedDataset ds = jecl::generate_synthetic(3, 30, 6, 6, 10.0, 1.0, 0.0, 71);
    const PipelineConfig cfg = quick_config(3, 73);
    const auto a = jecl::run_single_view(ds, jecl::ViewSelector::Image, cfg);
    const auto b = jecl::run_single_view(ds, jecl::ViewSelector::Image, cfg);
    CHECK(a.state.hard_labels == b.state.hard_labels);
}

TEST_CASE("missing text weakens the image-embedding gradients of those samples") {
    const PairedDataset ds = jecl::generate_synthetic(3, 40, 8, 8, 6.0, 1.2, 0.3, 79);
    PipelineConfig cfg = quick_config(3, 83);
    const std::size_t k = 3;

    jecl::SdaeConfig sdae = jecl::resolve_sdae(cfg.sdae_image, 8);
    sdae.seed = 1;
    auto enc_img = jecl::pretrain_view(ds.image_features, sdae).encoder;
    auto enc_txt = jecl::pretrain_view(ds.text_features, sdae).encoder;
    const DenseMatrix zi = enc_img.apply(ds.image_features);
    const DenseMatrix zt = enc_txt.apply(ds.text_features);
    const auto km_i = jecl::kmeans(zi, {.k = k, .restarts = 5, .max_iter = 100, .seed = 2});
    const auto km_t = jecl::kmeans(zt, {.k = k, .restarts = 5, .max_iter = 100, .seed = 3});

    const DenseMatrix q = jecl::soft_assign(zi, km_i.centroids, 1.0);
    const DenseMatrix r = jecl::soft_assign(zt, km_t.centroids, 1.0);
    const DenseMatrix p = jecl::target_distribution(q, r, 0.5, ds.text_present);
    const auto grads =
        jecl::loss_gradients(zi, zt, km_i.centroids, km_t.centroids, p, {}, ds.text_present);

    double missing_norm = 0.0, present_norm = 0.0;
    std::size_t missing_count = 0, present_count = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double norm = 0.0;
        for (double v : grads.z_img.row(i)) norm += v * v;
        norm = std::sqrt(norm);
        if (ds.text_present[i]) {
            present_norm += norm;
            ++present_count;
        } else {
            missing_norm += norm;
            ++missing_count;
        }
    }
    REQUIRE(missing_count > 0);
    REQUIRE(present_count > 0);
    CHECK(missing_norm / static_cast<double>(missing_count) <
          present_norm / static_cast<double>(present_count));
}
