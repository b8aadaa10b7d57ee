#include "dinn/pcs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dinn/common.hpp"

namespace dinn::pcs {

Tensor binarize(const Tensor& img, BinarizeMode mode, double tau) {
    if (!std::isfinite(tau)) throw InvalidArgument("binarize: tau must be finite");
    Tensor out(img.shape);
    for (std::size_t i = 0; i < img.numel(); ++i) {
        const double v = img.data[i];
        if (!std::isfinite(v)) throw InvalidArgument("binarize: non-finite pixel value");
        out.data[i] = (mode == BinarizeMode::ground_truth ? v != 0.0 : v > tau) ? 1.0 : 0.0;
    }
    return out;
}

double euclidean_distance(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError("euclidean_distance: shape " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

namespace {

void require_binary(const Tensor& t, const char* what) {
    for (double v : t.data)
        if (v != 0.0 && v != 1.0)
            throw InvalidArgument(std::string(what) + ": expected a binary image (run binarize first)");
}

}  // namespace

double match_fraction(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts,
                      double theta) {
    if (preds.empty() || preds.size() != gts.size())
        throw InvalidArgument("match_fraction: need equal non-empty prediction/truth lists");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        require_binary(preds[i], "match_fraction");
        require_binary(gts[i], "match_fraction");
        if (euclidean_distance(preds[i], gts[i]) <= theta) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

double match_fraction_from_distances(const std::vector<double>& dists, double theta) {
    if (dists.empty()) throw InvalidArgument("match_fraction: empty distance list");
    std::size_t hit = 0;
    for (double d : dists)
        if (d <= theta) ++hit;
    return static_cast<double>(hit) / static_cast<double>(dists.size());
}

namespace {

SubjectRow summarize(int subject, bool is_target, const std::vector<double>& dists,
                     const std::vector<int>& thetas) {
    SubjectRow row;
    row.subject = subject;
    row.is_target = is_target;
    row.count = dists.size();
    double acc = 0.0;
    for (double d : dists) acc += d;
    row.mean_distance = dists.empty() ? 0.0 : acc / static_cast<double>(dists.size());
    for (int th : thetas)
        row.pcs_percent.push_back(100.0 * match_fraction_from_distances(dists, th));
    return row;
}

}  // namespace

Report make_report_from_distances(const std::vector<double>& dists,
                                  const std::vector<int>& subjects, int k_total, double tau) {
    if (dists.empty() || dists.size() != subjects.size())
        throw InvalidArgument("report: need equal non-empty distance/subject lists");
    if (k_total < 2) throw InvalidArgument("report: subject roster must have at least 2 entries");
    std::vector<std::vector<double>> per(static_cast<std::size_t>(k_total));
    for (std::size_t i = 0; i < dists.size(); ++i) {
        const int s = subjects[i];
        if (s < 0 || s >= k_total)
            throw InvalidArgument("report: unknown subject id " + std::to_string(s) +
                                  " (roster is 0.." + std::to_string(k_total - 1) + ")");
        per[static_cast<std::size_t>(s)].push_back(dists[i]);
    }
    Report r;
    r.tau = tau;
    r.thetas = default_thetas();
    const int target = k_total - 1;
    if (!per[static_cast<std::size_t>(target)].empty())
        r.rows.push_back(summarize(target, true, per[static_cast<std::size_t>(target)], r.thetas));
    for (int s = 0; s < target; ++s)
        if (!per[static_cast<std::size_t>(s)].empty())
            r.rows.push_back(summarize(s, false, per[static_cast<std::size_t>(s)], r.thetas));
    r.overall = summarize(-1, false, dists, r.thetas);
    return r;
}

Report make_report(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts,
                   const std::vector<int>& subjects, int k_total, double tau) {
    if (preds.empty() || preds.size() != gts.size() || preds.size() != subjects.size())
        throw InvalidArgument("report: prediction/truth/subject lists must match and be non-empty");
    std::vector<double> dists;
    dists.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        dists.push_back(euclidean_distance(binarize(preds[i], BinarizeMode::prediction, tau),
                                           binarize(gts[i], BinarizeMode::ground_truth)));
    return make_report_from_distances(dists, subjects, k_total, tau);
}

namespace {

std::string row_label(const SubjectRow& row) {
    if (row.subject < 0) return "all";
    return (row.is_target ? "target " : "source ") + std::to_string(row.subject);
}

}  // namespace

std::string render_report(const Report& r) {
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", r.tau);
    os << "pose construction score (binarization tau = " << buf << ")\n";
    os << "subject      samples  mean_dist";
    for (int th : r.thetas) {
        os << "  pcs@" << th;
        if (th == kStrictTheta) os << "(strict)";
        if (th == kLooseTheta) os << "(loose)";
    }
    os << '\n';
    auto emit = [&](const SubjectRow& row) {
        std::snprintf(buf, sizeof buf, "%-12s %7zu %10.2f", row_label(row).c_str(), row.count,
                      row.mean_distance);
        os << buf;
        for (std::size_t i = 0; i < row.pcs_percent.size(); ++i) {
            const int th = r.thetas[i];
            int width = 6 + (th >= 10 ? 2 : 1);
            if (th == kStrictTheta) width += 8;
            if (th == kLooseTheta) width += 7;
            std::snprintf(buf, sizeof buf, "  %*.2f", width - 2, row.pcs_percent[i]);
            os << buf;
        }
        os << '\n';
    };
    for (const SubjectRow& row : r.rows) emit(row);
    emit(r.overall);
    return os.str();
}

void write_report_csv(const std::string& path, const Report& r) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "subject,theta,pcs_percent,mean_distance,sample_count\n";
    char buf[128];
    auto emit = [&](const SubjectRow& row) {
        const std::string id = row.subject < 0 ? "all" : std::to_string(row.subject);
        for (std::size_t i = 0; i < row.pcs_percent.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f,%zu\n", id.c_str(), r.thetas[i],
                          row.pcs_percent[i], row.mean_distance, row.count);
            os << buf;
        }
    };
    for (const SubjectRow& row : r.rows) emit(row);
    emit(r.overall);
    if (!os) throw IoError("failed while writing " + path);
}

}  // namespace dinn::pcs
