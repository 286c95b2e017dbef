#include "carleman/potential.hpp"

#include "carleman/csv.hpp"
#include "carleman/errors.hpp"

#include <algorithm>
#include <cmath>

namespace carleman {

std::string_view to_string(PotentialKind kind) {
    switch (kind) {
        case PotentialKind::zero: return "zero";
        case PotentialKind::envelope: return "envelope";
        case PotentialKind::bump_well: return "bump_well";
        case PotentialKind::custom_table: return "custom_table";
    }
    return "unknown";
}

PotentialKind potential_kind_from_string(std::string_view name) {
    if (name == "zero") return PotentialKind::zero;
    if (name == "envelope") return PotentialKind::envelope;
    if (name == "bump_well") return PotentialKind::bump_well;
    if (name == "custom_table") return PotentialKind::custom_table;
    throw InvalidInput("unknown potential kind '" + std::string(name) + "'");
}

PotentialModel PotentialModel::zero(double delta0) {
    PotentialModel p;
    p.kind_ = PotentialKind::zero;
    p.delta0_ = delta0;
    return p;
}

PotentialModel PotentialModel::envelope(double delta0) {
    PotentialModel p;
    p.kind_ = PotentialKind::envelope;
    p.delta0_ = delta0;
    return p;
}

PotentialModel PotentialModel::bump_well(const BumpWellParams& params, double delta0) {
    if (!(params.width > 0.0)) throw InvalidInput("bump_well width must be positive");
    PotentialModel p;
    p.kind_ = PotentialKind::bump_well;
    p.delta0_ = delta0;
    p.bump_ = params;
    return p;
}

PotentialModel PotentialModel::custom_table(std::vector<double> radii, std::vector<double> values,
                                            double delta0) {
    if (radii.size() < 2 || radii.size() != values.size())
        throw InvalidInput("custom_table needs at least two (r, V) rows of equal length");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw InvalidInput("custom_table radii must increase strictly");
    PotentialModel p;
    p.kind_ = PotentialKind::custom_table;
    p.delta0_ = delta0;
    p.table_r_ = std::move(radii);
    p.table_v_ = std::move(values);
    return p;
}

PotentialModel PotentialModel::custom_table_from_csv(const std::string& path, double delta0) {
    const CsvTable table = read_csv(path);
    const auto r_col = table.column_index("r");
    const auto v_col = table.column_index("V");
    std::vector<double> r, v;
    r.reserve(table.rows.size());
    v.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        r.push_back(std::stod(row[r_col]));
        v.push_back(std::stod(row[v_col]));
    }
    return custom_table(std::move(r), std::move(v), delta0);
}

double PotentialModel::value(double r) const {
    switch (kind_) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::envelope: return std::pow(1.0 + r, -delta0_);
        case PotentialKind::bump_well: {
            const double s2 = bump_.width * bump_.width;
            const double dw = r - bump_.well_center;
            const double db = r - bump_.barrier_center;
            return -bump_.well_depth * std::exp(-dw * dw / s2) +
                   bump_.barrier_height * std::exp(-db * db / s2);
        }
        case PotentialKind::custom_table: {
            if (r <= table_r_.front()) return table_v_.front();
            if (r >= table_r_.back()) return table_v_.back();
            const auto it = std::upper_bound(table_r_.begin(), table_r_.end(), r);
            const auto i = static_cast<std::size_t>(it - table_r_.begin());
            const double t = (r - table_r_[i - 1]) / (table_r_[i] - table_r_[i - 1]);
            return table_v_[i - 1] + t * (table_v_[i] - table_v_[i - 1]);
        }
    }
    return 0.0;
}

double PotentialModel::derivative(double r) const {
    switch (kind_) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::envelope: return -delta0_ * std::pow(1.0 + r, -1.0 - delta0_);
        case PotentialKind::bump_well: {
            const double s2 = bump_.width * bump_.width;
            const double dw = r - bump_.well_center;
            const double db = r - bump_.barrier_center;
            return bump_.well_depth * 2.0 * dw / s2 * std::exp(-dw * dw / s2) -
                   bump_.barrier_height * 2.0 * db / s2 * std::exp(-db * db / s2);
        }
        case PotentialKind::custom_table: {
            constexpr double step = 1e-3;
            return (value(r + step) - value(r - step)) / (2.0 * step);
        }
    }
    return 0.0;
}

double PotentialModel::min_value(double r_max) const {
    switch (kind_) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::envelope: return std::pow(1.0 + r_max, -delta0_);
        case PotentialKind::custom_table: return *std::min_element(table_v_.begin(), table_v_.end());
        case PotentialKind::bump_well: break;
    }
    const double step = std::min(1e-2, bump_.width / 50.0);
    double lo = value(0.0);
    for (double r = 0.0; r <= r_max; r += step) lo = std::min(lo, value(r));
    return lo;
}

double PotentialModel::sup_abs(double r_max) const {
    switch (kind_) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::envelope: return 1.0;
        case PotentialKind::custom_table: {
            double m = 0.0;
            for (double v : table_v_) m = std::max(m, std::abs(v));
            return m;
        }
        case PotentialKind::bump_well: break;
    }
    const double step = std::min(1e-2, bump_.width / 50.0);
    double m = 0.0;
    for (double r = 0.0; r <= r_max; r += step) m = std::max(m, std::abs(value(r)));
    return m;
}

std::optional<double> Certificate::first_violation() const {
    if (violations.empty()) return std::nullopt;
    double first = violations.front().radius;
    for (const auto& v : violations) first = std::min(first, v.radius);
    return first;
}

Certificate certify_potential(const PotentialModel& potential, double delta0,
                              std::span<const double> grid, double tol) {
    Certificate cert;
    constexpr double fd_step = 1e-3;
    for (double r : grid) {
        const double v = potential.value(r);
        const double v_bound = std::pow(1.0 + r, -delta0);
        if (v > v_bound + tol * std::max(1.0, std::abs(v_bound)))
            cert.violations.push_back({r, Violation::Bound::value, v, v_bound});

        const double dv = potential.has_analytic_derivative()
                              ? potential.derivative(r)
                              : (potential.value(r + fd_step) - potential.value(std::max(0.0, r - fd_step))) /
                                    (r + fd_step - std::max(0.0, r - fd_step));
        const double dv_bound = std::pow(1.0 + r, -1.0 - delta0);
        if (dv > dv_bound + tol * std::max(1.0, std::abs(dv_bound)))
            cert.violations.push_back({r, Violation::Bound::derivative, dv, dv_bound});
    }
    cert.certified = cert.violations.empty();
    return cert;
}

std::vector<double> audit_grid(double r_max, double step) {
    if (!(r_max > 0.0) || !(step > 0.0)) throw InvalidInput("audit_grid needs r_max > 0 and step > 0");
    const auto n = static_cast<std::size_t>(std::ceil(r_max / step));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = r_max * static_cast<double>(i) / static_cast<double>(n);
    return grid;
}

PotentialModel cap_barrier(const BumpWellParams& params, double delta0, double r_audit) {
    const auto grid = audit_grid(r_audit, std::min(1e-2, params.width / 100.0));
    auto certified_with = [&](double b) {
        BumpWellParams p = params;
        p.barrier_height = b;
        return certify_potential(PotentialModel::bump_well(p, delta0), delta0, grid).certified;
    };
    if (!certified_with(0.0))
        throw InvalidInput("bump_well: the well alone violates the decay bound for this delta0");
    if (certified_with(params.barrier_height)) return PotentialModel::bump_well(params, delta0);

    double lo = 0.0, hi = params.barrier_height;
    for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (certified_with(mid) ? lo : hi) = mid;
    }
    BumpWellParams capped = params;
    capped.barrier_height = lo;
    return PotentialModel::bump_well(capped, delta0);
}

}  // namespace carleman
