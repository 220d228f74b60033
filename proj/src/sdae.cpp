#include "jecl/sdae.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace jecl {

namespace {

constexpr char kMagic[8] = {'J', 'E', 'C', 'L', 'E', 'N', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

double mse(const DenseMatrix& pred, const DenseMatrix& target) {
    double s = 0.0;
    const double* a = pred.data();
    const double* b = target.data();
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return pred.size() ? s / static_cast<double>(pred.size()) : 0.0;
}

std::vector<ParamRef> collect_params(Mlp& net, const StackGradients& grads) {
    std::vector<ParamRef> refs;
    refs.reserve(net.layer_count() * 2);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        refs.push_back({net.layers()[l].weight.flat(), grads.weight[l].flat()});
        refs.push_back({std::span<double>(net.layers()[l].bias),
                        std::span<const double>(grads.bias[l])});
    }
    return refs;
}

// One epoch of denoising reconstruction training on `net` (an
// encoder+decoder stack); returns the epoch-averaged batch MSE.
double train_epoch(Mlp& net, const DenseMatrix& data, double corruption_rate,
                   std::size_t batch_size, Optimizer& opt, Rng& rng) {
    double loss_sum = 0.0;
    const auto batches = make_batches(data.rows(), batch_size, rng);
    for (const auto& batch : batches) {
        DenseMatrix target = select_rows(data, batch);
        DenseMatrix noisy = corrupt(target, corruption_rate, rng);
        const DenseMatrix& recon = net.forward(noisy);
        loss_sum += mse(recon, target);
        // d(mean squared error)/d(recon)
        DenseMatrix upstream(recon.rows(), recon.cols());
        const double scale = 2.0 / static_cast<double>(recon.size());
        for (std::size_t i = 0; i < recon.size(); ++i)
            upstream.flat()[i] = scale * (recon.flat()[i] - target.flat()[i]);
        StackGradients grads = net.backward(upstream);
        opt.step(collect_params(net, grads));
    }
    return loss_sum / static_cast<double>(batches.size());
}

void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw std::runtime_error("encoder checkpoint: truncated file");
    return v;
}

}  // namespace

void SdaeConfig::validate() const {
    if (layer_dims.size() < 2) throw std::invalid_argument("sdae: layer_dims needs >= 2 entries");
    for (std::size_t d : layer_dims)
        if (d == 0) throw std::invalid_argument("sdae: zero layer dimension");
    if (corruption_rate < 0.0 || corruption_rate >= 1.0)
        throw std::invalid_argument("sdae: corruption_rate must be in [0,1)");
    if (batch_size == 0) throw std::invalid_argument("sdae: batch_size must be >= 1");
    optimizer.validate();
}

DenseMatrix corrupt(const DenseMatrix& input, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("corrupt: rate must be in [0,1)");
    DenseMatrix out = input;
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (double& v : out.flat())
        if (dist(rng) < rate) v = 0.0;
    return out;
}

PretrainResult pretrain_view(const DenseMatrix& X, const SdaeConfig& cfg) {
    cfg.validate();
    if (X.cols() != cfg.layer_dims.front())
        throw std::invalid_argument("pretrain_view: data has " + std::to_string(X.cols()) +
                                    " cols, config expects " +
                                    std::to_string(cfg.layer_dims.front()));
    if (X.rows() == 0) throw std::invalid_argument("pretrain_view: empty data");

    Rng init_rng(derive_seed(cfg.seed, 0));
    const std::size_t depth = cfg.layer_dims.size() - 1;

    std::vector<LinearLayer> enc_layers, dec_layers;
    for (std::size_t l = 0; l < depth; ++l) {
        const Activation enc_act = (l + 1 == depth) ? Activation::Identity : Activation::ReLU;
        const Activation dec_act = (l == 0) ? Activation::Identity : Activation::ReLU;
        enc_layers.push_back(make_layer(cfg.layer_dims[l], cfg.layer_dims[l + 1], enc_act, init_rng));
        dec_layers.push_back(make_layer(cfg.layer_dims[l + 1], cfg.layer_dims[l], dec_act, init_rng));
    }

    PretrainResult result;
    {
        std::vector<LinearLayer> full = enc_layers;
        for (std::size_t l = depth; l-- > 0;) full.push_back(dec_layers[l]);
        result.initial_mse = mse(Mlp(full).apply(X), X);
    }

    // Greedy stage: train each (encoder, decoder) pair on the activations
    // of the already-trained prefix.
    DenseMatrix hidden = X;
    for (std::size_t l = 0; l < depth; ++l) {
        Mlp pair({enc_layers[l], dec_layers[l]});
        Optimizer opt(cfg.optimizer);
        Rng rng(derive_seed(cfg.seed, 1 + l));
        for (std::size_t epoch = 0; epoch < cfg.layerwise_epochs; ++epoch)
            train_epoch(pair, hidden, cfg.corruption_rate, cfg.batch_size, opt, rng);
        enc_layers[l] = pair.layers()[0];
        dec_layers[l] = pair.layers()[1];
        hidden = Mlp({enc_layers[l]}).apply(hidden);
    }

    // Fine-tune the full autoencoder end to end, then drop the decoder.
    std::vector<LinearLayer> full = enc_layers;
    for (std::size_t l = depth; l-- > 0;) full.push_back(dec_layers[l]);
    Mlp autoencoder(full);
    {
        Optimizer opt(cfg.optimizer);
        Rng rng(derive_seed(cfg.seed, 1 + depth));
        for (std::size_t epoch = 0; epoch < cfg.finetune_epochs; ++epoch)
            result.finetune_trace.push_back(train_epoch(autoencoder, X, cfg.corruption_rate,
                                                        cfg.batch_size, opt, rng));
    }

    std::vector<LinearLayer> trained(autoencoder.layers().begin(),
                                     autoencoder.layers().begin() + static_cast<std::ptrdiff_t>(depth));
    result.encoder = Mlp(std::move(trained));
    result.final_mse = mse(autoencoder.apply(X), X);
    if (!std::isfinite(result.final_mse))
        throw std::runtime_error("pretrain_view: reconstruction loss diverged");
    return result;
}

DenseMatrix embed(const Mlp& encoder, const DenseMatrix& X) { return encoder.apply(X); }

void save_encoder(const std::filesystem::path& path, const Mlp& encoder, const std::string& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_encoder: cannot open " + path.string());
    out.write(kMagic, sizeof(kMagic));
    std::uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    write_u64(out, meta.size());
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    write_u64(out, encoder.layer_count());
    for (const auto& layer : encoder.layers()) {
        write_u64(out, layer.out_dim());
        write_u64(out, layer.in_dim());
        write_u64(out, layer.activation == Activation::ReLU ? 1 : 0);
        out.write(reinterpret_cast<const char*>(layer.weight.data()),
                  static_cast<std::streamsize>(layer.weight.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(layer.bias.data()),
                  static_cast<std::streamsize>(layer.bias.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("save_encoder: write failed for " + path.string());
}

Mlp load_encoder(const std::filesystem::path& path, std::string* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_encoder: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_encoder: " + path.string() + " is not an encoder checkpoint");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kVersion)
        throw std::runtime_error("load_encoder: unsupported checkpoint version " +
                                 std::to_string(version) + " in " + path.string());
    const std::uint64_t meta_len = read_u64(in);
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    if (meta) *meta = meta_str;
    const std::uint64_t layer_count = read_u64(in);
    std::vector<LinearLayer> layers;
    for (std::uint64_t l = 0; l < layer_count; ++l) {
        const std::uint64_t out_dim = read_u64(in);
        const std::uint64_t in_dim = read_u64(in);
        const std::uint64_t act = read_u64(in);
        LinearLayer layer;
        layer.weight = DenseMatrix(out_dim, in_dim);
        layer.bias.assign(out_dim, 0.0);
        layer.activation = act ? Activation::ReLU : Activation::Identity;
        in.read(reinterpret_cast<char*>(layer.weight.data()),
                static_cast<std::streamsize>(layer.weight.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(layer.bias.data()),
                static_cast<std::streamsize>(layer.bias.size() * sizeof(double)));
        if (!in) throw std::runtime_error("load_encoder: truncated checkpoint " + path.string());
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

}  // namespace jecl
