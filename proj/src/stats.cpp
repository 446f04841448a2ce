#include "confidant/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "confidant/error.hpp"

namespace confidant::stats {

namespace {

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double m) {
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// cc[0] + cc[1] x + ... + cc[n-1] x^(n-1)
double poly(const double* cc, int n, double x) {
    double ret = cc[0];
    if (n > 1) {
        double p = x * cc[n - 1];
        for (int j = n - 2; j > 0; --j) p = (p + cc[j]) * x;
        ret += p;
    }
    return ret;
}

double clamp_p(double p) {
    return std::clamp(p, 0.0, 1.0);
}

void require_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "samples must be finite");
    }
}

}  // namespace

void to_json(nlohmann::json& j, const TestResult& r) {
    j = {{"statistic", r.statistic}, {"p_value", r.p_value}};
    for (const auto& [k, v] : r.extra) j[k] = v;
}

TestResult shapiro_wilk(std::vector<double> xs) {
    const std::size_t n = xs.size();
    if (n < 3) throw Error(ErrorCode::TooFewSamples, "Shapiro-Wilk needs at least 3 samples");
    if (n > 5000) throw Error(ErrorCode::InvalidArgument, "Shapiro-Wilk approximation is valid up to n = 5000");
    require_finite(xs);

    // Centering on the median first only improves rounding.
    const double med = median(xs);
    for (double& x : xs) x -= med;
    std::sort(xs.begin(), xs.end());
    const double range = xs.back() - xs.front();
    if (range < 1e-19) throw Error(ErrorCode::ZeroVariance, "all samples are equal");

    static const double g[2] = {-2.273, .459};
    static const double c1[6] = {0., .221157, -.147981, -2.07119, 4.434685, -2.706056};
    static const double c2[6] = {0., .042981, -.293762, -1.752461, 5.682633, -3.582633};
    static const double c3[4] = {.544, -.39978, .025054, -6.714e-4};
    static const double c4[4] = {1.3822, -.77857, .062767, -.0020322};
    static const double c5[4] = {-1.5861, -.31082, -.083751, .0038915};
    static const double c6[3] = {-.4803, -.082676, .0030302};

    const std::size_t n2 = n / 2;
    const double an = static_cast<double>(n);
    std::vector<double> a(n2 + 1, 0.0);  // 1-based
    if (n == 3) {
        a[1] = std::sqrt(0.5);
    } else {
        const boost::math::normal std_normal;
        std::vector<double> m(n2 + 1, 0.0);
        double summ2 = 0.0;
        for (std::size_t i = 1; i <= n2; ++i) {
            m[i] = boost::math::quantile(std_normal, (static_cast<double>(i) - .375) / (an + .25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly(c1, 6, rsn) - m[1] / ssumm2;
        std::size_t i1;
        double fac;
        if (n > 5) {
            i1 = 3;
            const double a2 = -m[2] / ssumm2 + poly(c2, 6, rsn);
            fac = std::sqrt((summ2 - 2.0 * (m[1] * m[1]) - 2.0 * (m[2] * m[2])) /
                            (1.0 - 2.0 * (a1 * a1) - 2.0 * (a2 * a2)));
            a[2] = a2;
        } else {
            i1 = 2;
            fac = std::sqrt((summ2 - 2.0 * (m[1] * m[1])) / (1.0 - 2.0 * (a1 * a1)));
        }
        a[1] = a1;
        for (std::size_t i = i1; i <= n2; ++i) a[i] = -m[i] / fac;
    }

    // Antisymmetric coefficient for sorted position i (0-based).
    auto coef = [&](std::size_t i) {
        const std::size_t lo = i + 1, hi = n - i;
        if (lo < hi) return -a[lo];
        if (lo > hi) return a[hi];
        return 0.0;
    };
    double sa = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sa += coef(i);
        sx += xs[i] / range;
    }
    sa /= an;
    sx /= an;
    double ssa = 0.0, ssx = 0.0, sax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double asa = coef(i) - sa;
        const double xsx = xs[i] / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    // w1 = 1 - W, computed this way to keep precision when W is close to 1
    const double ssassx = std::sqrt(ssa * ssx);
    const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    TestResult r;
    r.statistic = 1.0 - w1;

    if (n == 3) {
        const double pi6 = 1.90985931710274, stqr = 1.04719755119660;
        r.p_value = clamp_p(pi6 * (std::asin(std::sqrt(r.statistic)) - stqr));
        return r;
    }
    double y = std::log(w1);
    const double xx = std::log(an);
    double mu, sigma;
    if (n <= 11) {
        const double gamma = poly(g, 2, an);
        if (y >= gamma) {
            r.p_value = 1e-99;
            return r;
        }
        y = -std::log(gamma - y);
        mu = poly(c3, 4, an);
        sigma = std::exp(poly(c4, 4, an));
    } else {
        mu = poly(c5, 4, xx);
        sigma = std::exp(poly(c6, 3, xx));
    }
    r.p_value = clamp_p(boost::math::cdf(boost::math::complement(boost::math::normal(mu, sigma), y)));
    return r;
}

TestResult levene(const std::vector<double>& xs, const std::vector<double>& ys, LeveneCenter center) {
    if (xs.size() < 2 || ys.size() < 2) throw Error(ErrorCode::TooFewSamples, "Levene needs >= 2 samples per group");
    require_finite(xs);
    require_finite(ys);
    auto deviations = [&](const std::vector<double>& v) {
        const double c = center == LeveneCenter::Mean ? mean(v) : median(v);
        std::vector<double> z;
        z.reserve(v.size());
        for (double x : v) z.push_back(std::abs(x - c));
        return z;
    };
    const auto zx = deviations(xs);
    const auto zy = deviations(ys);
    const double nx = static_cast<double>(zx.size()), ny = static_cast<double>(zy.size());
    const double n = nx + ny;
    const double mx = mean(zx), my = mean(zy);
    const double grand = (nx * mx + ny * my) / n;
    const double between = nx * (mx - grand) * (mx - grand) + ny * (my - grand) * (my - grand);
    double within = 0.0;
    for (double z : zx) within += (z - mx) * (z - mx);
    for (double z : zy) within += (z - my) * (z - my);

    TestResult r;
    r.extra["df1"] = 1.0;
    r.extra["df2"] = n - 2.0;
    if (within == 0.0) {
        if (between == 0.0) throw Error(ErrorCode::ZeroVariance, "absolute deviations are all identical");
        r.statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    r.statistic = (n - 2.0) * between / within;
    const boost::math::fisher_f f(1.0, n - 2.0);
    r.p_value = clamp_p(boost::math::cdf(boost::math::complement(f, r.statistic)));
    return r;
}

TestResult welch_t(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() < 2 || ys.size() < 2) throw Error(ErrorCode::TooFewSamples, "Welch's t needs >= 2 samples per group");
    require_finite(xs);
    require_finite(ys);
    const double nx = static_cast<double>(xs.size()), ny = static_cast<double>(ys.size());
    const double mx = mean(xs), my = mean(ys);
    const double vx = sample_variance(xs, mx) / nx;
    const double vy = sample_variance(ys, my) / ny;
    if (vx == 0.0 && vy == 0.0) throw Error(ErrorCode::BothZeroVariance, "both samples have zero variance");
    const double se2 = vx + vy;
    TestResult r;
    r.statistic = (mx - my) / std::sqrt(se2);
    const double df = se2 * se2 / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
    r.extra["df"] = df;
    const boost::math::students_t t(df);
    r.p_value = clamp_p(2.0 * boost::math::cdf(boost::math::complement(t, std::abs(r.statistic))));
    return r;
}

std::vector<double> mann_whitney_counts(std::size_t n1, std::size_t n2) {
    // f[i][j][u]: arrangements of i x-values and j y-values with U1 = u.
    // Rolling over i keeps memory at O(n2 * n1 * n2).
    const std::size_t umax = n1 * n2;
    std::vector<std::vector<double>> prev(n2 + 1), cur(n2 + 1);
    for (std::size_t j = 0; j <= n2; ++j) prev[j] = {1.0};  // i = 0: U1 = 0
    for (std::size_t i = 1; i <= n1; ++i) {
        cur[0] = {1.0};
        for (std::size_t j = 1; j <= n2; ++j) {
            // The largest value is either an x (adds j to U1) or a y.
            std::vector<double> f(i * j + 1, 0.0);
            for (std::size_t u = 0; u < prev[j].size(); ++u) f[u + j] += prev[j][u];
            for (std::size_t u = 0; u < cur[j - 1].size(); ++u) f[u] += cur[j - 1][u];
            cur[j] = std::move(f);
        }
        std::swap(prev, cur);
    }
    auto out = prev[n2];
    out.resize(umax + 1, 0.0);
    return out;
}

TestResult mann_whitney_u(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.empty() || ys.empty()) throw Error(ErrorCode::TooFewSamples, "Mann-Whitney needs non-empty samples");
    require_finite(xs);
    require_finite(ys);
    const std::size_t n1 = xs.size(), n2 = ys.size(), n = n1 + n2;

    std::vector<std::pair<double, int>> all;
    all.reserve(n);
    for (double x : xs) all.emplace_back(x, 0);
    for (double y : ys) all.emplace_back(y, 1);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    double r1 = 0.0, tie_term = 0.0;
    bool ties = false;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && all[j].first == all[i].first) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        const double t = static_cast<double>(j - i);
        if (t > 1) {
            ties = true;
            tie_term += t * t * t - t;
        }
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].second == 0) r1 += midrank;
        }
        i = j;
    }
    const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2), dn = static_cast<double>(n);
    const double u1 = r1 - d1 * (d1 + 1.0) / 2.0;
    const double u2 = d1 * d2 - u1;

    TestResult r;
    r.statistic = std::min(u1, u2);
    if (n <= kMannWhitneyExactLimit && !ties) {
        const auto counts = mann_whitney_counts(n1, n2);
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        double below = 0.0;
        for (std::size_t u = 0; u <= static_cast<std::size_t>(r.statistic); ++u) below += counts[u];
        r.p_value = clamp_p(2.0 * below / total);
        r.extra["exact"] = 1.0;
        return r;
    }
    r.extra["exact"] = 0.0;
    const double mu = d1 * d2 / 2.0;
    const double var = d1 * d2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) {
        r.p_value = 1.0;
        return r;
    }
    const double z = (std::max(u1, u2) - mu - 0.5) / std::sqrt(var);
    r.extra["z"] = z;
    r.p_value = clamp_p(2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), z)));
    return r;
}

}  // namespace confidant::stats
