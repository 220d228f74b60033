// Soft assignments, the joint target distribution, the loss terms and
// their analytic gradients with respect to embeddings and centroids.
#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "jecl/matrix.hpp"

namespace jecl {

// 1 = text present for this sample. An empty span means "all present".
using TextMask = std::span<const std::uint8_t>;

struct LossConfig {
    double lambda = 0.5;  // image weight in the joint target
    double gamma = 0.1;   // alignment loss weight
    double beta = 0.1;    // balance regularizer weight
    double alpha = 1.0;   // Student-t degrees of freedom
    void validate() const;
};

struct LossBreakdown {
    double cluster = 0.0;
    double align = 0.0;
    double reg_img = 0.0;
    double reg_txt = 0.0;
    double total = 0.0;
};

// Student-t kernel assignment: q_ij ∝ (1 + ||z_i - mu_j||^2/alpha)^(-(alpha+1)/2),
// rows normalized. Computed in log space, so rows stay normalized for any
// distance scale.
DenseMatrix soft_assign(const DenseMatrix& Z, const DenseMatrix& centroids, double alpha);

struct SoftAssignResult {
    DenseMatrix probs;
    DenseMatrix dist_sq;  // squared distances, same shape
};
SoftAssignResult soft_assign_with_distances(const DenseMatrix& Z, const DenseMatrix& centroids,
                                            double alpha);

// Joint target: per row, lambda * sharpened(q) + (1-lambda) * sharpened(r),
// where sharpening squares the probabilities, divides by the per-cluster
// soft frequency, and renormalizes the row. The text term vanishes for
// text-missing samples, whose rows therefore sum to lambda.
DenseMatrix target_distribution(const DenseMatrix& q, const DenseMatrix& r, double lambda,
                                TextMask text_present = {});

// Mean over samples of p·log(p/q) plus, for text-present samples,
// p·log(p/r); rows with partial mass (missing text) compare against their
// row-renormalized target so every contribution is a scaled KL >= 0.
double cluster_loss(const DenseMatrix& p, const DenseMatrix& q, const DenseMatrix& r,
                    TextMask text_present = {});

// Mean row-wise Jensen-Shannon divergence between q and r over
// text-present samples; bounded by log 2.
double align_loss(const DenseMatrix& q, const DenseMatrix& r, TextMask text_present = {});

// KL(frequencies || uniform) per view; image frequencies average q over
// all samples, text frequencies average r over text-present samples.
std::pair<double, double> balance_reg(const DenseMatrix& q, const DenseMatrix& r,
                                      TextMask text_present = {});

LossBreakdown total_loss(const DenseMatrix& q, const DenseMatrix& r, const DenseMatrix& p,
                         const LossConfig& cfg, TextMask text_present = {});

struct ObjectiveGradients {
    DenseMatrix z_img;          // N x E
    DenseMatrix z_txt;          // N x E'   (zero rows for text-missing samples)
    DenseMatrix centroids_img;  // k x E
    DenseMatrix centroids_txt;  // k x E'
};

// Gradients of the total loss with p held constant (the target is fixed
// within an optimization interval).
ObjectiveGradients loss_gradients(const DenseMatrix& Z_img, const DenseMatrix& Z_txt,
                                  const DenseMatrix& centroids_img,
                                  const DenseMatrix& centroids_txt, const DenseMatrix& p,
                                  const LossConfig& cfg, TextMask text_present = {});

// Single-view degeneration: target, loss and gradients for one view only
// (the image term of the joint target with lambda = 1).
DenseMatrix single_view_target(const DenseMatrix& q);
LossBreakdown single_view_loss(const DenseMatrix& q, const DenseMatrix& p, const LossConfig& cfg);
struct SingleViewGradients {
    DenseMatrix z;
    DenseMatrix centroids;
};
SingleViewGradients single_view_gradients(const DenseMatrix& Z, const DenseMatrix& centroids,
                                          const DenseMatrix& p, const LossConfig& cfg);

}  // namespace jecl
