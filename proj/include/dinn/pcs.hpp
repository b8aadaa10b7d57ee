#pragma once

#include <string>
#include <vector>

#include "dinn/tensor.hpp"

namespace dinn::pcs {

// Pose construction scoring: binarize both frames, take the Euclidean
// distance between the binary images, and count the fraction of samples
// within a pixel-distance threshold theta.

enum class BinarizeMode {
    ground_truth,  // any nonzero value is on
    prediction,    // strictly greater than tau is on
};

Tensor binarize(const Tensor& img, BinarizeMode mode, double tau = 0.5);

// sqrt of the number of differing cells for binary inputs; general L2 for
// anything shape-compatible
double euclidean_distance(const Tensor& a, const Tensor& b);

// fraction of pairs with distance <= theta; inputs must already be binary
double match_fraction(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts,
                      double theta);
double match_fraction_from_distances(const std::vector<double>& dists, double theta);

inline const std::vector<int>& default_thetas() {
    static const std::vector<int> t{25, 30, 40, 50};
    return t;
}
inline constexpr int kStrictTheta = 30;
inline constexpr int kLooseTheta = 50;

struct SubjectRow {
    int subject = -1;  // -1 = all subjects pooled
    bool is_target = false;
    std::size_t count = 0;
    double mean_distance = 0.0;
    std::vector<double> pcs_percent;  // aligned with Report::thetas
};

struct Report {
    double tau = 0.5;
    std::vector<int> thetas;
    std::vector<SubjectRow> rows;  // target subject first, then sources ascending
    SubjectRow overall;
};

// Binarizes predictions with tau (ground truths with the nonzero rule),
// scores them, and groups per subject. Subjects must lie in [0, k_total);
// the target subject is k_total-1 and leads the table.
Report make_report(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts,
                   const std::vector<int>& subjects, int k_total, double tau = 0.5);

// Same, from precomputed distances (used by the offline aggregation tool).
Report make_report_from_distances(const std::vector<double>& dists,
                                  const std::vector<int>& subjects, int k_total,
                                  double tau = 0.5);

std::string render_report(const Report& r);
void write_report_csv(const std::string& path, const Report& r);

}  // namespace dinn::pcs
