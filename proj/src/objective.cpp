#include "jecl/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace jecl {

namespace {

constexpr double kLogFloor = 1e-12;

double safe_log_ratio(double num, double den) {
    return std::log(std::max(num, kLogFloor) / std::max(den, kLogFloor));
}

std::vector<char> resolve_mask(TextMask mask, std::size_t n, const char* what) {
    std::vector<char> present(n, 1);
    if (!mask.empty()) {
        if (mask.size() != n)
            throw std::invalid_argument(std::string(what) + ": mask length " +
                                        std::to_string(mask.size()) + " != sample count " +
                                        std::to_string(n));
        for (std::size_t i = 0; i < n; ++i) present[i] = mask[i] ? 1 : 0;
    }
    return present;
}

std::size_t count_present(const std::vector<char>& present) {
    std::size_t p = 0;
    for (char c : present) p += c ? 1 : 0;
    return p;
}

// Squared probabilities divided by per-cluster soft frequency, rows
// renormalized. Frequencies are accumulated over the selected rows only.
DenseMatrix sharpen(const DenseMatrix& probs, const std::vector<char>& freq_rows) {
    const std::size_t n = probs.rows(), k = probs.cols();
    std::vector<double> freq(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!freq_rows[i]) continue;
        auto row = probs.row(i);
        for (std::size_t j = 0; j < k; ++j) freq[j] += row[j];
    }
    for (std::size_t j = 0; j < k; ++j)
        if (!(freq[j] > 0.0))
            throw std::logic_error("target_distribution: cluster " + std::to_string(j) +
                                   " has zero soft frequency");
    DenseMatrix out(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        auto src = probs.row(i);
        auto dst = out.row(i);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            dst[j] = src[j] * src[j] / freq[j];
            sum += dst[j];
        }
        for (std::size_t j = 0; j < k; ++j) dst[j] /= sum;
    }
    return out;
}

void check_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

// Chain rule from dL/d(probs) through the row-normalized Student-t kernel
// to the embeddings and centroids of one view.
void kernel_chain(const DenseMatrix& grad_probs, const SoftAssignResult& sa, const DenseMatrix& Z,
                  const DenseMatrix& centroids, double alpha, DenseMatrix& grad_z,
                  DenseMatrix& grad_centroids) {
    const std::size_t n = Z.rows(), k = centroids.rows(), dim = Z.cols();
    grad_z = DenseMatrix(n, dim);
    grad_centroids = DenseMatrix(k, dim);
    for (std::size_t i = 0; i < n; ++i) {
        auto g = grad_probs.row(i);
        auto q = sa.probs.row(i);
        auto d = sa.dist_sq.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += g[j] * q[j];
        auto z = Z.row(i);
        auto gz = grad_z.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            const double coef = -(alpha + 1.0) / (alpha + d[j]) * q[j] * (g[j] - dot);
            if (coef == 0.0) continue;
            auto mu = centroids.row(j);
            auto gmu = grad_centroids.row(j);
            for (std::size_t e = 0; e < dim; ++e) {
                const double diff = z[e] - mu[e];
                gz[e] += coef * diff;
                gmu[e] -= coef * diff;
            }
        }
    }
}

}  // namespace

void LossConfig::validate() const {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("loss: lambda must be in [0,1]");
    if (gamma < 0.0) throw std::invalid_argument("loss: gamma must be >= 0");
    if (beta < 0.0) throw std::invalid_argument("loss: beta must be >= 0");
    if (!(alpha > 0.0)) throw std::invalid_argument("loss: alpha must be > 0");
}

SoftAssignResult soft_assign_with_distances(const DenseMatrix& Z, const DenseMatrix& centroids,
                                            double alpha) {
    if (Z.cols() != centroids.cols())
        throw std::invalid_argument("soft_assign: embedding dims disagree (" +
                                    std::to_string(Z.cols()) + " vs " +
                                    std::to_string(centroids.cols()) + ")");
    if (centroids.rows() == 0) throw std::invalid_argument("soft_assign: no centroids");
    if (!Z.all_finite() || !centroids.all_finite())
        throw std::runtime_error(
            "soft_assign: non-finite embeddings or centroids (training diverged?)");
    const std::size_t n = Z.rows(), k = centroids.rows();
    SoftAssignResult result{DenseMatrix(n, k), DenseMatrix(n, k)};
    const double exponent = -(alpha + 1.0) / 2.0;
    std::vector<double> logw(k);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            const double d = squared_distance(Z.row(i), centroids.row(j));
            if (!std::isfinite(d))
                throw std::runtime_error(
                    "soft_assign: squared distance overflow (training diverged?)");
            result.dist_sq(i, j) = d;
            logw[j] = exponent * std::log1p(d / alpha);
            mx = std::max(mx, logw[j]);
        }
        double sum = 0.0;
        auto row = result.probs.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            row[j] = std::exp(logw[j] - mx);
            sum += row[j];
        }
        for (std::size_t j = 0; j < k; ++j) row[j] /= sum;
    }
    return result;
}

DenseMatrix soft_assign(const DenseMatrix& Z, const DenseMatrix& centroids, double alpha) {
    return soft_assign_with_distances(Z, centroids, alpha).probs;
}

DenseMatrix target_distribution(const DenseMatrix& q, const DenseMatrix& r, double lambda,
                                TextMask text_present) {
    check_same_shape(q, r, "target_distribution");
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("target_distribution: lambda must be in [0,1]");
    const std::size_t n = q.rows(), k = q.cols();
    const auto present = resolve_mask(text_present, n, "target_distribution");
    const std::size_t n_present = count_present(present);

    DenseMatrix p(n, k);
    if (lambda > 0.0) {
        const std::vector<char> all(n, 1);
        DenseMatrix sharp_q = sharpen(q, all);
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = p.row(i);
            auto src = sharp_q.row(i);
            for (std::size_t j = 0; j < k; ++j) dst[j] = lambda * src[j];
        }
    }
    if (lambda < 1.0 && n_present > 0) {
        DenseMatrix sharp_r = sharpen(r, present);
        for (std::size_t i = 0; i < n; ++i) {
            if (!present[i]) continue;  // missing text: second term vanishes
            auto dst = p.row(i);
            auto src = sharp_r.row(i);
            for (std::size_t j = 0; j < k; ++j) dst[j] += (1.0 - lambda) * src[j];
        }
    }
    return p;
}

double cluster_loss(const DenseMatrix& p, const DenseMatrix& q, const DenseMatrix& r,
                    TextMask text_present) {
    check_same_shape(p, q, "cluster_loss");
    check_same_shape(p, r, "cluster_loss");
    const std::size_t n = p.rows(), k = p.cols();
    const auto present = resolve_mask(text_present, n, "cluster_loss");

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto pi = p.row(i);
        double mass = 0.0;
        for (std::size_t j = 0; j < k; ++j) mass += pi[j];
        if (!(mass > 0.0)) continue;
        auto qi = q.row(i);
        auto ri = r.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            if (pi[j] <= 0.0) continue;  // 0·log(0/x) = 0
            total += pi[j] * safe_log_ratio(pi[j] / mass, qi[j]);
            if (present[i]) total += pi[j] * safe_log_ratio(pi[j] / mass, ri[j]);
        }
    }
    return std::max(0.0, total / static_cast<double>(n));
}

double align_loss(const DenseMatrix& q, const DenseMatrix& r, TextMask text_present) {
    check_same_shape(q, r, "align_loss");
    const std::size_t n = q.rows(), k = q.cols();
    const auto present = resolve_mask(text_present, n, "align_loss");
    const std::size_t n_present = count_present(present);
    if (n_present == 0) return 0.0;

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!present[i]) continue;
        auto qi = q.row(i);
        auto ri = r.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            const double s = 0.5 * (qi[j] + ri[j]);
            if (qi[j] > 0.0) total += 0.5 * qi[j] * safe_log_ratio(qi[j], s);
            if (ri[j] > 0.0) total += 0.5 * ri[j] * safe_log_ratio(ri[j], s);
        }
    }
    return std::max(0.0, total / static_cast<double>(n_present));
}

std::pair<double, double> balance_reg(const DenseMatrix& q, const DenseMatrix& r,
                                      TextMask text_present) {
    check_same_shape(q, r, "balance_reg");
    const std::size_t n = q.rows(), k = q.cols();
    const auto present = resolve_mask(text_present, n, "balance_reg");
    const std::size_t n_present = count_present(present);
    const double kd = static_cast<double>(k);

    double reg_img = 0.0;
    const auto m = column_means(q);
    for (double f : m)
        if (f > 0.0) reg_img += f * std::log(kd * f);

    double reg_txt = 0.0;
    if (n_present > 0) {
        std::vector<double> freq(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!present[i]) continue;
            auto row = r.row(i);
            for (std::size_t j = 0; j < k; ++j) freq[j] += row[j];
        }
        for (double& f : freq) f /= static_cast<double>(n_present);
        for (double f : freq)
            if (f > 0.0) reg_txt += f * std::log(kd * f);
    }
    return {std::max(0.0, reg_img), std::max(0.0, reg_txt)};
}

LossBreakdown total_loss(const DenseMatrix& q, const DenseMatrix& r, const DenseMatrix& p,
                         const LossConfig& cfg, TextMask text_present) {
    cfg.validate();
    LossBreakdown out;
    out.cluster = cluster_loss(p, q, r, text_present);
    out.align = align_loss(q, r, text_present);
    const auto regs = balance_reg(q, r, text_present);
    out.reg_img = regs.first;
    out.reg_txt = regs.second;
    out.total = out.cluster + cfg.gamma * out.align + cfg.beta * (out.reg_img + out.reg_txt);
    return out;
}

ObjectiveGradients loss_gradients(const DenseMatrix& Z_img, const DenseMatrix& Z_txt,
                                  const DenseMatrix& centroids_img,
                                  const DenseMatrix& centroids_txt, const DenseMatrix& p,
                                  const LossConfig& cfg, TextMask text_present) {
    cfg.validate();
    const std::size_t n = p.rows(), k = p.cols();
    if (Z_img.rows() != n || Z_txt.rows() != n)
        throw std::invalid_argument("loss_gradients: sample counts disagree with target");
    if (centroids_img.rows() != k || centroids_txt.rows() != k)
        throw std::invalid_argument("loss_gradients: centroid counts disagree with target");
    const auto present = resolve_mask(text_present, n, "loss_gradients");
    const std::size_t n_present = count_present(present);
    const double nd = static_cast<double>(n);

    const SoftAssignResult img = soft_assign_with_distances(Z_img, centroids_img, cfg.alpha);
    const SoftAssignResult txt = soft_assign_with_distances(Z_txt, centroids_txt, cfg.alpha);

    DenseMatrix grad_q(n, k), grad_r(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        auto pi = p.row(i);
        auto qi = img.probs.row(i);
        auto gq = grad_q.row(i);
        for (std::size_t j = 0; j < k; ++j) gq[j] = -pi[j] / std::max(qi[j], kLogFloor) / nd;
        if (!present[i]) continue;
        auto ri = txt.probs.row(i);
        auto gr = grad_r.row(i);
        for (std::size_t j = 0; j < k; ++j) gr[j] = -pi[j] / std::max(ri[j], kLogFloor) / nd;
    }

    if (cfg.gamma > 0.0 && n_present > 0) {
        const double w = cfg.gamma / (2.0 * static_cast<double>(n_present));
        for (std::size_t i = 0; i < n; ++i) {
            if (!present[i]) continue;
            auto qi = img.probs.row(i);
            auto ri = txt.probs.row(i);
            auto gq = grad_q.row(i);
            auto gr = grad_r.row(i);
            for (std::size_t j = 0; j < k; ++j) {
                const double s = 0.5 * (qi[j] + ri[j]);
                gq[j] += w * safe_log_ratio(qi[j], s);
                gr[j] += w * safe_log_ratio(ri[j], s);
            }
        }
    }

    if (cfg.beta > 0.0) {
        const double kd = static_cast<double>(k);
        const auto m = column_means(img.probs);
        for (std::size_t i = 0; i < n; ++i) {
            auto gq = grad_q.row(i);
            for (std::size_t j = 0; j < k; ++j)
                gq[j] += cfg.beta / nd * (std::log(std::max(kd * m[j], kLogFloor)) + 1.0);
        }
        if (n_present > 0) {
            std::vector<double> freq(k, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (!present[i]) continue;
                auto row = txt.probs.row(i);
                for (std::size_t j = 0; j < k; ++j) freq[j] += row[j];
            }
            for (double& f : freq) f /= static_cast<double>(n_present);
            for (std::size_t i = 0; i < n; ++i) {
                if (!present[i]) continue;
                auto gr = grad_r.row(i);
                for (std::size_t j = 0; j < k; ++j)
                    gr[j] += cfg.beta / static_cast<double>(n_present) *
                             (std::log(std::max(kd * freq[j], kLogFloor)) + 1.0);
            }
        }
    }

    ObjectiveGradients grads;
    kernel_chain(grad_q, img, Z_img, centroids_img, cfg.alpha, grads.z_img, grads.centroids_img);
    kernel_chain(grad_r, txt, Z_txt, centroids_txt, cfg.alpha, grads.z_txt, grads.centroids_txt);
    return grads;
}

DenseMatrix single_view_target(const DenseMatrix& q) {
    const std::vector<char> all(q.rows(), 1);
    return sharpen(q, all);
}

LossBreakdown single_view_loss(const DenseMatrix& q, const DenseMatrix& p, const LossConfig& cfg) {
    check_same_shape(p, q, "single_view_loss");
    const std::size_t n = p.rows(), k = p.cols();
    LossBreakdown out;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto pi = p.row(i);
        auto qi = q.row(i);
        for (std::size_t j = 0; j < k; ++j)
            if (pi[j] > 0.0) total += pi[j] * safe_log_ratio(pi[j], qi[j]);
    }
    out.cluster = std::max(0.0, total / static_cast<double>(n));
    const auto m = column_means(q);
    const double kd = static_cast<double>(k);
    for (double f : m)
        if (f > 0.0) out.reg_img += f * std::log(kd * f);
    out.reg_img = std::max(0.0, out.reg_img);
    out.total = out.cluster + cfg.beta * out.reg_img;
    return out;
}

SingleViewGradients single_view_gradients(const DenseMatrix& Z, const DenseMatrix& centroids,
                                          const DenseMatrix& p, const LossConfig& cfg) {
    const std::size_t n = p.rows(), k = p.cols();
    if (Z.rows() != n) throw std::invalid_argument("single_view_gradients: sample count mismatch");
    if (centroids.rows() != k)
        throw std::invalid_argument("single_view_gradients: centroid count mismatch");
    const double nd = static_cast<double>(n);
    const SoftAssignResult sa = soft_assign_with_distances(Z, centroids, cfg.alpha);

    DenseMatrix grad_q(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        auto pi = p.row(i);
        auto qi = sa.probs.row(i);
        auto gq = grad_q.row(i);
        for (std::size_t j = 0; j < k; ++j) gq[j] = -pi[j] / std::max(qi[j], kLogFloor) / nd;
    }
    if (cfg.beta > 0.0) {
        const double kd = static_cast<double>(k);
        const auto m = column_means(sa.probs);
        for (std::size_t i = 0; i < n; ++i) {
            auto gq = grad_q.row(i);
            for (std::size_t j = 0; j < k; ++j)
                gq[j] += cfg.beta / nd * (std::log(std::max(kd * m[j], kLogFloor)) + 1.0);
        }
    }
    SingleViewGradients grads;
    kernel_chain(grad_q, sa, Z, centroids, cfg.alpha, grads.z, grads.centroids);
    return grads;
}

}  // namespace jecl
