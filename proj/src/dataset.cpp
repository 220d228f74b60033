#include "jecl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "jecl/rng.hpp"

namespace jecl {

namespace {

constexpr char kMatrixMagic[8] = {'J', 'E', 'C', 'L', 'M', 'T', '0', '1'};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Reads the next non-comment line; returns false at EOF.
bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos) continue;
        if (line[pos] == '#') continue;
        return true;
    }
    return false;
}

DenseMatrix load_feature_matrix_text(const std::filesystem::path& path, std::ifstream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!next_content_line(in, line, line_no))
        throw std::runtime_error(path.string() + ": missing 'N D' header line");
    std::istringstream header(line);
    long long rows = -1, cols = -1;
    if (!(header >> rows >> cols) || rows < 0 || cols <= 0)
        throw std::runtime_error(path.string() + ": malformed header '" + line + "'");

    DenseMatrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (!next_content_line(in, line, line_no))
            throw std::runtime_error(path.string() + ": expected " + std::to_string(rows) +
                                     " rows, file ends after " + std::to_string(i));
        std::istringstream row(line);
        auto dst = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (!(row >> dst[j]))
                throw std::runtime_error(path.string() + ": row " + std::to_string(i) +
                                         " has fewer than " + std::to_string(cols) + " values");
            if (!std::isfinite(dst[j]))
                throw std::runtime_error(path.string() + ": non-finite value at row " +
                                         std::to_string(i) + ", column " + std::to_string(j));
        }
        double extra;
        if (row >> extra)
            throw std::runtime_error(path.string() + ": row " + std::to_string(i) +
                                     " has more than " + std::to_string(cols) + " values");
    }
    return m;
}

std::uint64_t read_u64(std::ifstream& in, const std::filesystem::path& path) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw std::runtime_error(path.string() + ": truncated binary matrix");
    return v;
}

}  // namespace

std::size_t PairedDataset::present_count() const {
    std::size_t c = 0;
    for (auto v : text_present) c += v ? 1 : 0;
    return c;
}

void PairedDataset::validate() const {
    const std::size_t n = image_features.rows();
    if (text_features.rows() != n)
        throw std::runtime_error("dataset: image rows (" + std::to_string(n) +
                                 ") and text rows (" + std::to_string(text_features.rows()) +
                                 ") disagree");
    if (text_present.size() != n)
        throw std::runtime_error("dataset: mask length " + std::to_string(text_present.size()) +
                                 " does not match " + std::to_string(n) + " samples");
    if (labels && labels->size() != n)
        throw std::runtime_error("dataset: label count " + std::to_string(labels->size()) +
                                 " does not match " + std::to_string(n) + " samples");
    if (!image_features.all_finite() || !text_features.all_finite())
        throw std::runtime_error("dataset: non-finite feature value");
    for (std::size_t i = 0; i < n; ++i) {
        if (text_present[i]) continue;
        for (double v : text_features.row(i))
            if (v != 0.0)
                throw std::runtime_error("dataset: text row " + std::to_string(i) +
                                         " is flagged missing but not all-zero");
    }
}

DenseMatrix load_feature_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (in && std::memcmp(magic, kMatrixMagic, sizeof(kMatrixMagic)) == 0) {
        const std::uint64_t meta_len = read_u64(in, path);
        in.seekg(static_cast<std::streamoff>(meta_len), std::ios::cur);
        const std::uint64_t rows = read_u64(in, path);
        const std::uint64_t cols = read_u64(in, path);
        DenseMatrix m(rows, cols);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!in) throw std::runtime_error(path.string() + ": truncated binary matrix");
        if (!m.all_finite()) throw std::runtime_error(path.string() + ": non-finite value");
        return m;
    }
    in.clear();
    in.seekg(0);
    return load_feature_matrix_text(path, in);
}

void save_feature_matrix_text(const std::filesystem::path& path, const DenseMatrix& m,
                              const std::vector<std::string>& header_comments) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    for (const auto& c : header_comments) out << "# " << c << "\n";
    out << m.rows() << " " << m.cols() << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << " ";
            out << fmt(row[j]);
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

void save_feature_matrix_binary(const std::filesystem::path& path, const DenseMatrix& m,
                                const std::string& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out.write(kMatrixMagic, sizeof(kMatrixMagic));
    const std::uint64_t meta_len = meta.size();
    out.write(reinterpret_cast<const char*>(&meta_len), sizeof(meta_len));
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    const std::uint64_t rows = m.rows(), cols = m.cols();
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<std::size_t> load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    std::vector<std::size_t> labels;
    std::string line;
    std::size_t line_no = 0;
    while (next_content_line(in, line, line_no)) {
        std::istringstream row(line);
        long long v = 0;
        if (!(row >> v) || v < 0)
            throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) +
                                     " is not a non-negative integer");
        labels.push_back(static_cast<std::size_t>(v));
    }
    if (labels.empty()) throw std::runtime_error(path.string() + ": no labels found");
    return labels;
}

void save_labels(const std::filesystem::path& path, const std::vector<std::size_t>& labels,
                 const std::vector<std::string>& header_comments) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    for (const auto& c : header_comments) out << "# " << c << "\n";
    for (std::size_t v : labels) out << v << "\n";
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<std::uint8_t> load_mask(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    std::vector<std::uint8_t> mask;
    std::string line;
    std::size_t line_no = 0;
    while (next_content_line(in, line, line_no)) {
        std::istringstream row(line);
        int v = -1;
        if (!(row >> v) || (v != 0 && v != 1))
            throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) +
                                     " must be 0 or 1");
        mask.push_back(static_cast<std::uint8_t>(v));
    }
    if (mask.empty()) throw std::runtime_error(path.string() + ": no mask entries found");
    return mask;
}

void save_mask(const std::filesystem::path& path, const std::vector<std::uint8_t>& mask,
               const std::vector<std::string>& header_comments) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    for (const auto& c : header_comments) out << "# " << c << "\n";
    for (auto v : mask) out << (v ? 1 : 0) << "\n";
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

PairedDataset load_dataset(const std::filesystem::path& image_path,
                           const std::filesystem::path& text_path,
                           const std::optional<std::filesystem::path>& label_path,
                           const std::optional<std::filesystem::path>& mask_path) {
    PairedDataset ds;
    ds.image_features = load_feature_matrix(image_path);
    ds.text_features = load_feature_matrix(text_path);
    if (ds.image_features.rows() != ds.text_features.rows())
        throw std::runtime_error("load_dataset: " + image_path.string() + " has " +
                                 std::to_string(ds.image_features.rows()) + " rows but " +
                                 text_path.string() + " has " +
                                 std::to_string(ds.text_features.rows()));
    ds.text_present.assign(ds.size(), 1);
    if (mask_path) {
        ds.text_present = load_mask(*mask_path);
        if (ds.text_present.size() != ds.size())
            throw std::runtime_error("load_dataset: mask " + mask_path->string() + " has " +
                                     std::to_string(ds.text_present.size()) + " entries for " +
                                     std::to_string(ds.size()) + " samples");
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (!ds.text_present[i])
                for (double& v : ds.text_features.row(i)) v = 0.0;
    }
    if (label_path) {
        ds.labels = load_labels(*label_path);
        if (ds.labels->size() != ds.size())
            throw std::runtime_error("load_dataset: labels " + label_path->string() + " has " +
                                     std::to_string(ds.labels->size()) + " entries for " +
                                     std::to_string(ds.size()) + " samples");
    }
    ds.validate();
    return ds;
}

void SyntheticRecipe::validate() const {
    if (k == 0) throw std::invalid_argument("synthetic: k must be >= 1");
    if (!(separation > 0.0)) throw std::invalid_argument("synthetic: separation must be > 0");
    if (view_noise < 0.0) throw std::invalid_argument("synthetic: view_noise must be >= 0");
    if (missing_rate < 0.0 || missing_rate >= 1.0)
        throw std::invalid_argument("synthetic: missing_rate must be in [0,1)");
    if (image_dim == 0 || text_dim == 0) throw std::invalid_argument("synthetic: zero view dim");
    if (!cluster_sizes.empty() && cluster_sizes.size() != k)
        throw std::invalid_argument("synthetic: cluster_sizes must have k entries");
    if (cluster_sizes.empty() && per_cluster_n == 0)
        throw std::invalid_argument("synthetic: per_cluster_n must be >= 1");
    if (2 * merged_image_center_pairs > k)
        throw std::invalid_argument("synthetic: too many merged pairs for k clusters");
}

std::vector<std::size_t> SyntheticRecipe::resolved_sizes() const {
    if (!cluster_sizes.empty()) return cluster_sizes;
    return std::vector<std::size_t>(k, per_cluster_n);
}

namespace {

// Centers are resampled if they land within 6 * noise of an existing one,
// so requested separability cannot be destroyed by a chance collision.
DenseMatrix draw_centers(std::size_t k, std::size_t dim, double separation, double noise,
                         Rng& rng) {
    std::normal_distribution<double> gauss(0.0, separation);
    DenseMatrix centers(k, dim);
    const double min_dist_sq = 36.0 * noise * noise;
    for (std::size_t c = 0; c < k; ++c) {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            for (double& v : centers.row(c)) v = gauss(rng);
            bool ok = true;
            for (std::size_t prev = 0; prev < c && ok; ++prev)
                ok = squared_distance(centers.row(c), centers.row(prev)) >= min_dist_sq;
            if (ok) break;
        }
    }
    return centers;
}

}  // namespace

PairedDataset generate_synthetic(const SyntheticRecipe& recipe) {
    recipe.validate();
    const auto sizes = recipe.resolved_sizes();
    const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});

    Rng center_img_rng(derive_seed(recipe.seed, 1));
    Rng center_txt_rng(derive_seed(recipe.seed, 2));
    Rng sample_rng(derive_seed(recipe.seed, 3));
    Rng mask_rng(derive_seed(recipe.seed, 4));

    DenseMatrix centers_img =
        draw_centers(recipe.k, recipe.image_dim, recipe.separation, recipe.view_noise, center_img_rng);
    DenseMatrix centers_txt =
        draw_centers(recipe.k, recipe.text_dim, recipe.separation, recipe.view_noise, center_txt_rng);
    for (std::size_t t = 0; t < recipe.merged_image_center_pairs; ++t) {
        auto src = centers_img.row(2 * t);
        auto dst = centers_img.row(2 * t + 1);
        for (std::size_t d = 0; d < recipe.image_dim; ++d) dst[d] = src[d];
    }

    PairedDataset ds;
    ds.image_features = DenseMatrix(n, recipe.image_dim);
    ds.text_features = DenseMatrix(n, recipe.text_dim);
    ds.text_present.assign(n, 1);
    ds.labels = std::vector<std::size_t>();
    ds.labels->reserve(n);

    std::normal_distribution<double> noise(0.0, recipe.view_noise);
    std::size_t row = 0;
    for (std::size_t c = 0; c < recipe.k; ++c) {
        for (std::size_t s = 0; s < sizes[c]; ++s, ++row) {
            auto img = ds.image_features.row(row);
            auto cimg = centers_img.row(c);
            for (std::size_t d = 0; d < recipe.image_dim; ++d) img[d] = cimg[d] + noise(sample_rng);
            auto txt = ds.text_features.row(row);
            auto ctxt = centers_txt.row(c);
            for (std::size_t d = 0; d < recipe.text_dim; ++d) txt[d] = ctxt[d] + noise(sample_rng);
            ds.labels->push_back(c);
        }
    }

    if (recipe.missing_rate > 0.0) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (u(mask_rng) < recipe.missing_rate) {
                ds.text_present[i] = 0;
                for (double& v : ds.text_features.row(i)) v = 0.0;
            }
        }
    }
    ds.validate();
    return ds;
}

PairedDataset generate_synthetic(std::size_t k, std::size_t per_cluster_n, std::size_t image_dim,
                                 std::size_t text_dim, double separation, double view_noise,
                                 double missing_rate, std::uint64_t seed) {
    SyntheticRecipe recipe;
    recipe.k = k;
    recipe.per_cluster_n = per_cluster_n;
    recipe.image_dim = image_dim;
    recipe.text_dim = text_dim;
    recipe.separation = separation;
    recipe.view_noise = view_noise;
    recipe.missing_rate = missing_rate;
    recipe.seed = seed;
    return generate_synthetic(recipe);
}

PairedDataset subsample(const PairedDataset& dataset, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0) || ratio > 1.0)
        throw std::invalid_argument("subsample: ratio must be in (0,1]");
    const std::size_t n = dataset.size();
    Rng rng(derive_seed(seed, 5));

    std::vector<std::size_t> keep;
    if (dataset.labels) {
        std::size_t k = 0;
        for (std::size_t v : *dataset.labels) k = std::max(k, v + 1);
        std::vector<std::vector<std::size_t>> by_class(k);
        for (std::size_t i = 0; i < n; ++i) by_class[(*dataset.labels)[i]].push_back(i);
        for (auto& members : by_class) {
            if (members.empty()) continue;
            std::shuffle(members.begin(), members.end(), rng);
            const std::size_t take = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(members.size()))));
            keep.insert(keep.end(), members.begin(),
                        members.begin() + static_cast<std::ptrdiff_t>(std::min(take, members.size())));
        }
    } else {
        keep.resize(n);
        std::iota(keep.begin(), keep.end(), std::size_t{0});
        std::shuffle(keep.begin(), keep.end(), rng);
        const std::size_t take = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))));
        keep.resize(std::min(take, n));
    }
    std::sort(keep.begin(), keep.end());

    PairedDataset out;
    out.image_features = select_rows(dataset.image_features, keep);
    out.text_features = select_rows(dataset.text_features, keep);
    out.text_present.reserve(keep.size());
    for (std::size_t i : keep) out.text_present.push_back(dataset.text_present[i]);
    if (dataset.labels) {
        out.labels = std::vector<std::size_t>();
        out.labels->reserve(keep.size());
        for (std::size_t i : keep) out.labels->push_back((*dataset.labels)[i]);
    }
    out.validate();
    return out;
}

}  // namespace jecl
