#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <Eigen/Dense>

#include "collabgeo/analytics.hpp"
#include "collabgeo/error.hpp"

namespace collabgeo {

namespace {

struct Bin {
    std::uint64_t lo;  // inclusive
    std::uint64_t hi;  // exclusive
    std::uint64_t affiliations = 0;
};

// Unit bins up to linear_max, then bins whose edges grow geometrically.
std::vector<Bin> make_bins(std::uint64_t max_count, const PowerLawOptions& opt) {
    std::vector<Bin> bins;
    for (std::uint64_t n = 1; n <= std::min(opt.linear_max, max_count); ++n) bins.push_back({n, n + 1});
    const double ratio = std::pow(10.0, 1.0 / opt.bins_per_decade);
    std::uint64_t edge = opt.linear_max + 1;
    while (edge <= max_count) {
        const auto next = std::max(edge + 1, static_cast<std::uint64_t>(std::ceil(static_cast<double>(edge) * ratio)));
        bins.push_back({edge, next});
        edge = next;
    }
    return bins;
}

// Riemann zeta for a > 1: direct sum plus an Euler-Maclaurin tail.
double zeta(double a) {
    constexpr int kTerms = 64;
    double sum = 0.0;
    for (int k = 1; k < kTerms; ++k) sum += std::pow(k, -a);
    const double n = kTerms;
    sum += std::pow(n, 1.0 - a) / (a - 1.0) + 0.5 * std::pow(n, -a) + a * std::pow(n, -a - 1.0) / 12.0 -
           a * (a + 1.0) * (a + 2.0) * std::pow(n, -a - 3.0) / 720.0;
    return sum;
}

// Maximum-likelihood exponent of a zeta distribution (n_min = 1), found by
// golden-section search on the log-likelihood per observation.
double zeta_mle(double mean_log) {
    const auto loglik = [&](double a) { return -a * mean_log - std::log(zeta(a)); };
    double lo = 1.0001, hi = 8.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = loglik(x1), f2 = loglik(x2);
    while (hi - lo > 1e-10) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = loglik(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = loglik(x1);
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

PowerLawFit fit_power_law_counts(std::span<const std::uint64_t> counts, const PowerLawOptions& opt) {
    if (opt.bins_per_decade < 1 || opt.linear_max < 1) throw InvalidArgument("bad power-law binning options");
    std::vector<std::uint64_t> positive;
    positive.reserve(counts.size());
    for (const auto c : counts) {
        if (c > 0) positive.push_back(c);
    }
    if (positive.size() < opt.min_affiliations) {
        throw InsufficientData("power-law fit needs at least " + std::to_string(opt.min_affiliations) +
                               " affiliations, got " + std::to_string(positive.size()));
    }
    std::sort(positive.begin(), positive.end());

    auto bins = make_bins(positive.back(), opt);
    {
        std::size_t b = 0;
        for (const auto c : positive) {
            while (c >= bins[b].hi) ++b;
            ++bins[b].affiliations;
        }
    }

    std::vector<double> xs, ys;
    std::uint64_t fit_min = 0, fit_max = 0;
    for (const auto& bin : bins) {
        if (bin.affiliations < std::max<std::uint64_t>(1, opt.min_bin_count)) continue;
        const double width = static_cast<double>(bin.hi - bin.lo);
        const double center = std::sqrt(static_cast<double>(bin.lo) * static_cast<double>(bin.hi - 1));
        xs.push_back(std::log10(center));
        ys.push_back(std::log10(static_cast<double>(bin.affiliations) / width));
        if (fit_min == 0) fit_min = bin.lo;
        fit_max = bin.hi - 1;
    }
    if (xs.size() < 2) {
        throw InsufficientData("power-law fit needs at least two populated bins, got " +
                               std::to_string(xs.size()));
    }

    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = xs[static_cast<std::size_t>(i)];
        design(i, 1) = 1.0;
        y(i) = ys[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd residual = y - design * beta;
    const double ss_res = residual.squaredNorm();
    const double ss_tot = (y.array() - y.mean()).square().sum();

    PowerLawFit fit;
    fit.exponent = -beta(0);
    fit.intercept = beta(1);
    fit.r_squared = ss_tot > 0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : (ss_res == 0 ? 1.0 : 0.0);
    fit.fit_min = fit_min;
    fit.fit_max = fit_max;
    fit.points = xs.size();
    fit.affiliations = positive.size();

    double log_sum = 0.0;
    for (const auto c : positive) log_sum += std::log(static_cast<double>(c));
    fit.mle_exponent = zeta_mle(log_sum / static_cast<double>(positive.size()));
    if (!std::isfinite(fit.exponent)) throw InsufficientData("degenerate power-law fit");
    return fit;
}

PowerLawFit fit_power_law(std::span<const PublicationTeam> teams, const PowerLawOptions& options) {
    std::unordered_map<std::string_view, std::uint64_t> per_affiliation;
    for (const auto& t : teams) {
        for (const auto& a : t.affiliations) ++per_affiliation[a.id];
    }
    std::vector<std::uint64_t> counts;
    counts.reserve(per_affiliation.size());
    for (const auto& [id, c] : per_affiliation) counts.push_back(c);
    std::sort(counts.begin(), counts.end());
    return fit_power_law_counts(counts, options);
}

}  // namespace collabgeo
