#include "phirl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "phirl/distributions.hpp"
#include "phirl/error.hpp"
#include "phirl/numeric.hpp"

namespace phirl {

namespace {

bool is_constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double pearson_raw(std::span<const double> x, std::span<const double> y) {
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Number of arrangements of n1 "a" and n2 "b" labels with U_a = u, for all u.
std::vector<double> mw_counts(std::size_t n1, std::size_t n2) {
    // f[i][j] is the count vector for i a's and j b's.
    std::vector<std::vector<std::vector<double>>> f(n1 + 1, std::vector<std::vector<double>>(n2 + 1));
    for (std::size_t i = 0; i <= n1; ++i) {
        for (std::size_t j = 0; j <= n2; ++j) {
            auto& cur = f[i][j];
            cur.assign(i * j + 1, 0.0);
            if (i == 0 || j == 0) {
                cur[0] = 1.0;
                continue;
            }
            // largest element is an "a": it beats all j b's
            for (std::size_t u = 0; u < f[i - 1][j].size(); ++u) cur[u + j] += f[i - 1][j][u];
            // largest element is a "b"
            for (std::size_t u = 0; u < f[i][j - 1].size(); ++u) cur[u] += f[i][j - 1][u];
        }
    }
    return f[n1][n2];
}

}  // namespace

TestResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("spearman: sequences differ in length");
    if (x.size() < 3) throw Error("spearman: need at least 3 observations");
    if (is_constant(x)) throw Error("spearman: first sequence is constant");
    if (is_constant(y)) throw Error("spearman: second sequence is constant");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double rho = pearson_raw(rx, ry);
    const double df = static_cast<double>(x.size()) - 2.0;
    double p = 0.0;
    if (std::abs(rho) < 1.0) {
        const double t = rho * std::sqrt(df / ((1.0 - rho) * (1.0 + rho)));
        p = std::min(1.0, 2.0 * student_t_sf(std::abs(t), df));
    }
    return {rho, p, {x.size()}};
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("kendall: sequences differ in length");
    if (x.size() < 2) throw Error("kendall: need at least 2 observations");
    const std::size_t n = x.size();
    long long concordant_minus_discordant = 0;
    long long tied_x = 0, tied_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[j] - x[i];
            const double dy = y[j] - y[i];
            if (dx == 0.0) ++tied_x;
            if (dy == 0.0) ++tied_y;
            if (dx != 0.0 && dy != 0.0) concordant_minus_discordant += ((dx > 0) == (dy > 0)) ? 1 : -1;
        }
    }
    const long long pairs = static_cast<long long>(n * (n - 1) / 2);
    const long long nx = pairs - tied_x;
    const long long ny = pairs - tied_y;
    if (nx == 0 && ny == 0) throw Error("kendall: both sequences are fully tied");
    if (nx == 0 || ny == 0) return 0.0;
    const double tau = static_cast<double>(concordant_minus_discordant) /
                       std::sqrt(static_cast<double>(nx) * static_cast<double>(ny));
    return std::clamp(tau, -1.0, 1.0);
}

TestResult mannwhitney(std::span<const double> a, std::span<const double> b, Alternative alternative) {
    if (a.empty() || b.empty()) throw Error("mannwhitney: both samples must be non-empty");
    const std::size_t n1 = a.size(), n2 = b.size(), N = n1 + n2;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = average_ranks(pooled);
    double r1 = 0.0;
    for (std::size_t i = 0; i < n1; ++i) r1 += ranks[i];
    const double u1 = r1 - static_cast<double>(n1 * (n1 + 1)) / 2.0;

    std::map<double, std::size_t> multiplicity;
    for (double v : pooled) ++multiplicity[v];
    double tie_term = 0.0;
    for (const auto& [v, t] : multiplicity) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const bool has_ties = multiplicity.size() < N;

    TestResult res{u1, 1.0, {n1, n2}};
    if (N <= 20 && !has_ties) {
        const auto counts = mw_counts(n1, n2);
        double total = 0.0;
        for (double c : counts) total += c;
        const auto u = static_cast<std::size_t>(std::llround(u1));
        double le = 0.0, ge = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (k <= u) le += counts[k];
            if (k >= u) ge += counts[k];
        }
        le /= total;
        ge /= total;
        switch (alternative) {
            case Alternative::less: res.p_value = le; break;
            case Alternative::greater: res.p_value = ge; break;
            case Alternative::two_sided: res.p_value = std::min(1.0, 2.0 * std::min(le, ge)); break;
        }
        return res;
    }

    const double mu = static_cast<double>(n1 * n2) / 2.0;
    const double Nd = static_cast<double>(N);
    const double var = static_cast<double>(n1 * n2) / 12.0 * ((Nd + 1.0) - tie_term / (Nd * (Nd - 1.0)));
    if (!(var > 0.0)) return res;  // every value tied: no evidence either way
    const double sd = std::sqrt(var);
    switch (alternative) {
        case Alternative::greater: res.p_value = normal_sf((u1 - mu - 0.5) / sd); break;
        case Alternative::less: res.p_value = normal_cdf((u1 - mu + 0.5) / sd); break;
        case Alternative::two_sided: {
            const double z = (std::abs(u1 - mu) - 0.5) / sd;
            res.p_value = std::min(1.0, 2.0 * normal_sf(z));
            break;
        }
    }
    res.p_value = std::clamp(res.p_value, 0.0, 1.0);
    return res;
}

TestResult dagostino_k2(std::span<const double> x) {
    const std::size_t count = x.size();
    if (count < 20) throw Error("dagostino_k2: need at least 20 observations, got " + std::to_string(count));
    const double n = static_cast<double>(count);
    const double mu = mean(x);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mu;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) throw Error("dagostino_k2: sample is constant");

    // transformed skewness
    const double b1 = m3 / std::pow(m2, 1.5);
    double y = b1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
    const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                         ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
    const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
    const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
    const double alpha = std::sqrt(2.0 / (w2 - 1.0));
    if (y == 0.0) y = 1.0;  // matches the reference implementation's guard
    const double z1 = delta * std::asinh(y / alpha);

    // transformed kurtosis
    const double b2 = m4 / (m2 * m2);
    const double e = 3.0 * (n - 1.0) / (n + 1.0);
    const double varb2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
    const double xk = (b2 - e) / std::sqrt(varb2);
    const double sqrtbeta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                             std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
    const double a = 6.0 + 8.0 / sqrtbeta1 * (2.0 / sqrtbeta1 + std::sqrt(1.0 + 4.0 / (sqrtbeta1 * sqrtbeta1)));
    const double term1 = 1.0 - 2.0 / (9.0 * a);
    const double denom = 1.0 + xk * std::sqrt(2.0 / (a - 4.0));
    const double term2 = std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
    const double z2 = (term1 - term2) / std::sqrt(2.0 / (9.0 * a));

    const double k2 = z1 * z1 + z2 * z2;
    return {k2, std::exp(-0.5 * k2), {count}};
}

}  // namespace phirl
