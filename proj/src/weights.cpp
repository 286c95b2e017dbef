#include "carleman/weights.hpp"

#include "carleman/csv.hpp"
#include "carleman/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace carleman {

namespace {

constexpr double kLogRadiusCap = 700.0;  // exp(700) is still a finite double
constexpr int kSmoothingPanels = 4;

// 30-point Gauss-Legendre rule mapped to [0,1].
struct UnitRule {
    std::array<double, 30> x{};
    std::array<double, 30> w{};
    UnitRule() {
        using Rule = boost::math::quadrature::gauss<double, 30>;
        const auto& a = Rule::abscissa();
        const auto& wt = Rule::weights();
        std::size_t k = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            x[k] = 0.5 * (1.0 - a[i]);
            w[k++] = 0.5 * wt[i];
            x[k] = 0.5 * (1.0 + a[i]);
            w[k++] = 0.5 * wt[i];
        }
    }
};

const UnitRule& unit_rule() {
    static const UnitRule rule;
    return rule;
}

template <class F>
double gauss10(F&& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
}

void require_valid_exponents(double delta0, double E, double delta) {
    if (!(delta0 > 0.0 && delta0 < 1.0)) throw InvalidInput("delta0 must lie in (0,1)");
    if (!(E > 0.0)) throw InvalidInput("E must be positive");
    if (!(delta > 0.0 && delta < delta0)) throw InvalidInput("delta must lie in (0, delta0)");
}

double log_radius(double r) { return std::log1p(r); }

// The R0 smoothing layer can only be sampled in absolute radii when the
// spacing of doubles near R0 is well below the layer resolution eta/64.
bool r0_layer_resolvable(double R0, double eta) {
    if (!std::isfinite(R0)) return false;
    const double ulp = std::nextafter(R0, std::numeric_limits<double>::infinity()) - R0;
    return ulp * 8.0 < eta / 64.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// closed forms

double eval_w(double r, double delta) { return -std::expm1(-delta * log_radius(r)); }

double eval_wprime(double r, double delta) { return delta * std::exp(-(1.0 + delta) * log_radius(r)); }

double eval_m(double r, double delta) {
    const double q = (1.0 + delta) / 4.0;
    if (r < 1e150) return std::pow(1.0 + r * r, q);
    return std::exp(2.0 * q * std::log(r));
}

double eval_G_log(double rho, double delta, double delta0) {
    return std::exp(-delta0 * rho) - std::expm1(-delta * rho) * std::exp((delta - delta0) * rho) / delta;
}

double eval_G(double r, double delta, double delta0) { return eval_G_log(log_radius(r), delta, delta0); }

double eval_Gprime(double r, double delta, double delta0) {
    const double rho = log_radius(r);
    return (1.0 / delta - 1.0) * delta0 * std::exp((-1.0 - delta0) * rho) -
           (delta0 - delta) / delta * std::exp((-1.0 - delta0 + delta) * rho);
}

bool level_feasible(double w_at_R, double delta0, double E) {
    return w_at_R < 1.0 / (1.0 + 4.0 / (delta0 * E));
}

RadiiAndLevel compute_radii_and_level(double delta0, double E, double delta) {
    require_valid_exponents(delta0, E, delta);
    const double target = delta * E / 4.0;
    if (!(target < 1.0)) throw InfeasibleDelta("delta*E/4 >= 1 leaves no admissible R > 0");

    RadiiAndLevel out;
    out.log1p_R = -std::log(target) / (delta0 - delta);
    out.R = std::expm1(out.log1p_R);
    const double w_R = -std::expm1(-delta * out.log1p_R);
    if (!level_feasible(w_R, delta0, E)) {
        std::ostringstream msg;
        msg << "w(R) = " << w_R << " is not below 1/(1 + 4/(delta0 E)) = " << 1.0 / (1.0 + 4.0 / (delta0 * E))
            << " for delta = " << delta;
        throw InfeasibleDelta(msg.str());
    }
    out.B = (1.0 / delta0 + E / 4.0) * w_R;
    const double w_R0 = 4.0 * out.B / E;
    out.log1p_R0 = -std::log1p(-w_R0) / delta;
    out.R0 = out.log1p_R0 > 709.0 ? std::numeric_limits<double>::infinity() : std::expm1(out.log1p_R0);
    out.log1p_r_max = std::log((1.0 - delta) / (1.0 - delta / delta0)) / delta;
    out.r_max = std::expm1(out.log1p_r_max);
    if (!(out.log1p_R > out.log1p_r_max)) {
        std::ostringstream msg;
        msg << "R = " << out.R << " does not exceed the maximiser r_max = " << out.r_max << " of G";
        throw InfeasibleDelta(msg.str());
    }
    return out;
}

WeightParameters make_weight_parameters(double delta0, double E, double delta) {
    WeightParameters p;
    p.delta0 = delta0;
    p.E = E;
    p.delta = delta;
    p.s = 0.5 * (1.0 + delta);
    p.radii = compute_radii_and_level(delta0, E, delta);
    return p;
}

// ---------------------------------------------------------------------------
// psi

double Psi::middle_branch(double rho, double log_gap) const {
    const double w = -std::expm1(-p_.delta * rho);
    const double w0 = 4.0 * p_.radii.B / p_.E;
    // w0 - w = (1+r)^-delta - (1+R0)^-delta = (1 - w0) (exp(delta gap) - 1)
    const double dw = (1.0 - w0) * std::expm1(p_.delta * log_gap);
    return std::max(0.0, p_.radii.B * dw / (w * w0));
}

double Psi::operator()(double r) const {
    if (r <= p_.radii.R) return 1.0 / p_.delta0;
    if (r >= p_.radii.R0) return 0.0;
    const double rho = log_radius(r);
    const double gap = std::isfinite(p_.radii.R0) ? std::log1p((p_.radii.R0 - r) / (1.0 + r))
                                                  : p_.radii.log1p_R0 - rho;
    return middle_branch(rho, gap);
}

double Psi::near_R0(double x) const {
    if (x >= 0.0 || !std::isfinite(p_.radii.R0)) return 0.0;
    const double gap = -std::log1p(x / (1.0 + p_.radii.R0));
    return middle_branch(p_.radii.log1p_R0 - gap, gap);
}

Psi build_psi(const WeightParameters& params) { return Psi(params); }

// ---------------------------------------------------------------------------
// mollifier

namespace {
double bump_exponent(double t) { return -1.0 / (t * (1.0 - t)); }
}  // namespace

Mollifier::Mollifier() {
    const auto& rule = unit_rule();
    constexpr int panels = 16;
    double total = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double a = static_cast<double>(k) / panels;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            const double t = a + rule.x[i] / panels;
            total += rule.w[i] / panels * std::exp(bump_exponent(t));
        }
    }
    norm_ = total;
}

const Mollifier& Mollifier::standard() {
    static const Mollifier m;
    return m;
}

double Mollifier::value(double t) const {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::exp(bump_exponent(t)) / norm_;
}

double Mollifier::d1(double t) const {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double q = t * (1.0 - t);
    return value(t) * (1.0 - 2.0 * t) / (q * q);
}

double Mollifier::d2(double t) const {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double q = t * (1.0 - t);
    const double g1 = (1.0 - 2.0 * t) / (q * q);
    const double g2 = (-2.0 * q - 2.0 * (1.0 - 2.0 * t) * (1.0 - 2.0 * t)) / (q * q * q);
    return value(t) * (g1 * g1 + g2);
}

// ---------------------------------------------------------------------------
// smoothing

namespace {

struct Moments {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;  // int rho f, int rho' f, int rho'' f over (0,1)
};

// f(mu) is sqrt(psi) at r + eta*mu. `kink` is where the constant branch ends,
// `end` is where psi reaches zero (sqrt-type endpoint); both in mu units.
template <class F>
Moments smoothing_moments(F&& f, double kink, double end) {
    const auto& rho = Mollifier::standard();
    const auto& rule = unit_rule();
    Moments m;
    auto accumulate = [&](double mu, double weight) {
        const double fv = f(mu);
        if (fv == 0.0 || mu <= 0.0 || mu >= 1.0) return;
        // rho, rho' and rho'' share one exponential
        const double q = mu * (1.0 - mu);
        const double g1 = (1.0 - 2.0 * mu) / (q * q);
        const double g2 = (-2.0 * q - 2.0 * (1.0 - 2.0 * mu) * (1.0 - 2.0 * mu)) / (q * q * q);
        const double v = rho.value(mu) * weight * fv;
        m.m0 += v;
        m.m1 += v * g1;
        m.m2 += v * (g1 * g1 + g2);
    };
    auto regular_piece = [&](double a, double b) {
        const double len = (b - a) / kSmoothingPanels;
        for (int k = 0; k < kSmoothingPanels; ++k)
            for (std::size_t i = 0; i < rule.x.size(); ++i)
                accumulate(a + len * (k + rule.x[i]), rule.w[i] * len);
    };
    // mu = b - (b-a) tau^2 removes the square-root behaviour at mu = b
    auto endpoint_piece = [&](double a, double b) {
        const double span = b - a;
        const double len = 1.0 / kSmoothingPanels;
        for (int k = 0; k < kSmoothingPanels; ++k)
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double tau = len * (k + rule.x[i]);
                accumulate(b - span * tau * tau, rule.w[i] * len * 2.0 * span * tau);
            }
    };

    const double top = std::min(1.0, end);
    if (top <= 0.0) return m;
    double lo = 0.0;
    if (kink > 0.0 && kink < top) {
        regular_piece(0.0, kink);
        lo = kink;
    }
    if (end < 1.0)
        endpoint_piece(lo, top);
    else
        regular_piece(lo, top);
    return m;
}

WeightDerivatives from_moments(const Moments& m, double eta) {
    return {m.m0, -m.m1 / eta, m.m2 / (eta * eta)};
}

}  // namespace

WeightDerivatives CarlemanWeight::derivatives_at(double r) const {
    const auto& p = params();
    const double eta = p.eta;
    if (r + eta <= p.radii.R) return {1.0 / std::sqrt(p.delta0), 0.0, 0.0};
    if (r >= p.radii.R0) return {};
    const double kink = (p.radii.R - r) / eta;
    const double end = std::isfinite(p.radii.R0) ? (p.radii.R0 - r) / eta : 2.0;
    const auto f = [&](double mu) { return std::sqrt(psi_(r + eta * mu)); };
    return from_moments(smoothing_moments(f, kink, end), eta);
}

WeightDerivatives CarlemanWeight::derivatives_near_R0(double x) const {
    const auto& p = params();
    const double eta = p.eta;
    if (x >= 0.0) return {};
    const auto f = [&](double mu) { return std::sqrt(psi_.near_R0(x + eta * mu)); };
    return from_moments(smoothing_moments(f, -1.0, -x / eta), eta);
}

double CarlemanWeight::integrate_psi_tilde(double a, double b) const {
    const auto& p = params();
    if (b <= a) return 0.0;
    const double flat_end = p.radii.R - p.eta;
    if (b <= flat_end) return (b - a) / std::sqrt(p.delta0);
    if (a >= p.radii.R0) return 0.0;

    // split at the layer boundaries so that each piece is smooth
    std::vector<double> cuts{a};
    for (double c : {flat_end, p.radii.R, p.radii.R0 - p.eta, p.radii.R0})
        if (std::isfinite(c) && c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1];
        if (hi <= flat_end) {
            total += (hi - lo) / std::sqrt(p.delta0);
        } else if (lo >= p.radii.R0) {
            break;
        } else if (hi <= 2.0 * (1.0 + lo)) {
            total += gauss10([&](double r) { return derivatives_at(r).d1; }, lo, hi);
        } else {
            total += gauss10(
                [&](double rho) {
                    const double r = std::expm1(rho);
                    return derivatives_at(r).d1 * std::exp(rho);
                },
                std::log1p(lo), std::log1p(hi));
        }
    }
    return total;
}

double CarlemanWeight::phi_at(double r) const {
    const auto& p = params();
    if (r <= p.radii.R - p.eta) return r / std::sqrt(p.delta0);
    if (grid_.empty()) return integrate_psi_tilde(0.0, r);
    auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
    const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - grid_.begin()) - 1));
    return phi_[idx] + integrate_psi_tilde(grid_[idx], r);
}

CarlemanWeight mollify_and_integrate(const Psi& psi, double eta, std::span<const double> grid) {
    WeightParameters p = psi.params();
    const double R = p.radii.R, R0 = p.radii.R0;
    const double eta_cap = std::min(R, R0 - R) / 4.0;
    if (!(eta > 0.0 && eta < eta_cap)) {
        std::ostringstream msg;
        msg << "mollifier width " << eta << " must lie in (0, " << eta_cap << ")";
        throw InvalidInput(msg.str());
    }
    if (grid.empty() || grid.front() != 0.0) throw InvalidInput("weight grid must start at r = 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw InvalidInput("weight grid must be strictly increasing");
    const double last_needed = std::isfinite(R0) ? R0 : std::expm1(kLogRadiusCap);
    if (grid.back() < last_needed) throw InvalidInput("weight grid must cover [0, R0]");

    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double a = grid[i - 1], b = grid[i];
        const bool in_layer = (b > R - eta && a < R) || (r0_layer_resolvable(R0, eta) && b > R0 - eta && a < R0);
        if (in_layer && b - a > eta / 8.0) {
            std::ostringstream msg;
            msg << "grid cell [" << a << ", " << b << "] inside a smoothing layer exceeds eta/8 = " << eta / 8.0;
            throw GridTooCoarse(msg.str());
        }
    }

    p.eta = eta;
    CarlemanWeight weight{Psi(p)};
    weight.grid_.assign(grid.begin(), grid.end());
    const std::size_t n = grid.size();
    weight.phi_.resize(n);
    weight.dphi_.resize(n);
    weight.ddphi_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto d = weight.derivatives_at(grid[i]);
        weight.dphi_[i] = d.d1;
        weight.ddphi_[i] = d.d2;
        weight.phi_[i] = i == 0 ? 0.0 : weight.phi_[i - 1] + weight.integrate_psi_tilde(grid[i - 1], grid[i]);
    }
    if (std::isfinite(R0)) {
        auto it = std::lower_bound(weight.grid_.begin(), weight.grid_.end(), R0);
        const auto idx = static_cast<std::size_t>(it - weight.grid_.begin());
        weight.max_phi_ = idx < n ? weight.phi_[idx] : weight.phi_.back();
    } else {
        weight.max_phi_ = std::numeric_limits<double>::infinity();
    }
    for (std::size_t i = 0; i < n; ++i)
        if (grid[i] >= R0 && weight.dphi_[i] != 0.0) throw Error("phi' does not vanish past R0");
    return weight;
}

// ---------------------------------------------------------------------------
// grids

namespace {

std::vector<double> plain_nodes(const WeightParameters& p, bool with_R0_layer) {
    const double R = p.radii.R, R0 = p.radii.R0, eta = p.eta;
    std::vector<double> nodes;

    const double near_step = std::min(eta / 8.0, 0.01);
    const double near_end = std::min(100.0, std::isfinite(R0) ? 2.0 * R0 : 100.0);
    const auto n_near = static_cast<std::size_t>(std::ceil(near_end / near_step));
    for (std::size_t i = 0; i <= n_near; ++i) nodes.push_back(near_end * static_cast<double>(i) / n_near);

    const double layer_step = eta / 64.0;
    for (int i = -96; i <= 32; ++i) nodes.push_back(std::max(0.0, R + i * layer_step));

    const double rho_end = std::min(kLogRadiusCap, std::isfinite(R0) ? std::log1p(2.0 * R0) : kLogRadiusCap);
    constexpr int n_log = 20000;
    for (int i = 0; i <= n_log; ++i) nodes.push_back(std::expm1(rho_end * i / n_log));
    if (std::isfinite(R0)) nodes.push_back(R0);

    if (with_R0_layer && r0_layer_resolvable(R0, eta))
        for (int i = -96; i <= 32; ++i) nodes.push_back(R0 + i * layer_step);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
}

}  // namespace

std::vector<double> default_weight_grid(const WeightParameters& params) { return plain_nodes(params, true); }

std::vector<WeightGridPoint> verification_grid(const WeightParameters& params) {
    std::vector<WeightGridPoint> grid;
    for (double r : plain_nodes(params, false)) grid.push_back({r, 0.0, false});
    if (std::isfinite(params.radii.R0)) {
        const double step = params.eta / 64.0;
        for (int i = -96; i <= 32; ++i) {
            const double x = i * step;
            grid.push_back({params.radii.R0 + x, x, true});
        }
    }
    return grid;
}

// ---------------------------------------------------------------------------
// margin

MarginComponents margin_components(const CarlemanWeight& weight, const PotentialModel& potential,
                                   std::vector<WeightGridPoint> grid) {
    const auto& p = weight.params();
    MarginComponents c;
    c.points = std::move(grid);
    const std::size_t n = c.points.size();
    c.base.resize(n);
    c.slope.resize(n);
    c.scale.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pt = c.points[i];
        const double r = pt.r;
        const double w = eval_w(r, p.delta);
        const double wp = eval_wprime(r, p.delta);
        const double v = potential.value(r);
        const double dv = potential.derivative(r);
        const auto d = pt.anchored ? weight.derivatives_near_R0(pt.offset) : weight.derivatives_at(r);
        c.scale[i] = p.E * wp / 4.0;
        c.base[i] = wp * (p.E - v + d.d1 * d.d1) + w * (-dv + 2.0 * d.d1 * d.d2) - c.scale[i];
        c.slope[i] = wp * d.d2 + w * d.d3;
    }
    return c;
}

MarginReport evaluate_margin(const MarginComponents& c, double h, double E, double tol_margin) {
    MarginReport rep;
    rep.h = h;
    rep.tolerance = tol_margin < 0.0 ? 1e-8 * E : tol_margin;
    rep.min_margin = std::numeric_limits<double>::infinity();
    rep.min_relative_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        const double m = c.base[i] - h * c.slope[i];
        if (m < rep.min_margin) {
            rep.min_margin = m;
            rep.argmin_r = c.points[i].r;
        }
        if (c.scale[i] > 0.0) {
            const double rel = m / c.scale[i];
            if (rel < rep.min_relative_margin) {
                rep.min_relative_margin = rel;
                rep.argmin_relative_r = c.points[i].r;
            }
        }
    }
    rep.passed = rep.min_margin >= -rep.tolerance;
    return rep;
}

MarginReport verify_weight_inequality(const CarlemanWeight& weight, const PotentialModel& potential,
                                      double h, const std::vector<WeightGridPoint>& grid,
                                      double tol_margin) {
    return evaluate_margin(margin_components(weight, potential, grid), h, weight.params().E, tol_margin);
}

bool check_far_level(const WeightParameters& params) {
    const double limit = params.E / 4.0;
    if (eval_G_log(params.radii.log1p_R, params.delta, params.delta0) > limit) return false;
    WeightParameters p = params;
    if (!(p.eta > 0.0)) p.eta = std::min(p.radii.R, p.radii.R0 - p.radii.R) / 8.0;
    for (const auto& pt : verification_grid(p)) {
        if (pt.r < p.radii.R) continue;
        if (eval_G_log(std::log1p(pt.r), p.delta, p.delta0) > limit) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// search

namespace {

CarlemanWeight unsampled_weight(const WeightParameters& p) {
    // The smallest grid mollify_and_integrate accepts: the origin plus the
    // two smoothing layers; search only needs pointwise derivatives.
    std::vector<double> grid{0.0};
    const double step = p.eta / 16.0;
    for (int i = -20; i <= 4; ++i) grid.push_back(std::max(1e-300, p.radii.R + i * step));
    const double last = std::isfinite(p.radii.R0) ? p.radii.R0 : std::expm1(kLogRadiusCap);
    if (r0_layer_resolvable(p.radii.R0, p.eta))
        for (int i = -20; i <= 0; ++i) grid.push_back(p.radii.R0 + i * step);
    grid.push_back(last);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return mollify_and_integrate(Psi(p), p.eta, grid);
}

}  // namespace

namespace {

struct SearchOutcome {
    WeightParameters params;
    int eta_halvings = 0;
    int h0_halvings = 0;
    bool passed = false;
    std::vector<MarginReport> reports;
};

SearchOutcome search_eta_h0(double delta0, double E, double delta, const std::vector<PotentialModel>& potentials,
                            const WeightSearchOptions& options) {
    SearchOutcome out;
    WeightParameters& p = out.params;
    p = make_weight_parameters(delta0, E, delta);
    p.eta = std::min(p.radii.R, p.radii.R0 - p.radii.R) / 8.0;
    p.h0 = E / 10.0;
    const double tol = options.tol_margin_factor * E;

    std::vector<MarginComponents> comps;
    bool stale = true;
    while (true) {
        if (stale) {
            const CarlemanWeight w = unsampled_weight(p);
            const auto grid = verification_grid(p);
            comps.clear();
            for (const auto& pot : potentials) comps.push_back(margin_components(w, pot, grid));
            stale = false;
        }
        bool fails_at_zero = false, fails_at_h0 = false;
        for (const auto& c : comps) {
            fails_at_zero = fails_at_zero || !evaluate_margin(c, 0.0, E, tol).passed;
            fails_at_h0 = fails_at_h0 || !evaluate_margin(c, p.h0, E, tol).passed;
        }
        if (!fails_at_zero && !fails_at_h0) {
            out.passed = true;
            break;
        }
        if (out.eta_halvings + out.h0_halvings >= options.max_halvings) break;
        if (fails_at_zero) {
            p.eta /= 2.0;
            ++out.eta_halvings;
            stale = true;
        } else {
            p.h0 /= 2.0;
            ++out.h0_halvings;
        }
    }
    for (const auto& c : comps) {
        out.reports.push_back(evaluate_margin(c, p.h0, E, tol));
        out.reports.push_back(evaluate_margin(c, 0.0, E, tol));
    }
    return out;
}

WeightConstruction finish(SearchOutcome s) {
    const WeightParameters& p = s.params;
    return {mollify_and_integrate(Psi(p), p.eta, default_weight_grid(p)), s.eta_halvings, s.h0_halvings, s.passed,
            std::move(s.reports)};
}

}  // namespace

WeightConstruction construct_weight(double delta0, double E, double delta,
                                    const std::vector<PotentialModel>& potentials,
                                    const WeightSearchOptions& options) {
    return finish(search_eta_h0(delta0, E, delta, potentials, options));
}

namespace {

std::optional<SearchOutcome> search_delta(double delta0, double E, const WeightSearchOptions& options) {
    if (!(delta0 > 0.0 && delta0 < 1.0)) throw InvalidInput("delta0 must lie in (0,1)");
    if (!(E > 0.0)) throw InvalidInput("E must be positive");
    const std::vector<PotentialModel> pots{PotentialModel::zero(delta0), PotentialModel::envelope(delta0)};
    for (int k = 1; k <= 30; ++k) {
        const double delta = delta0 * std::ldexp(1.0, -k);
        WeightParameters p;
        try {
            p = make_weight_parameters(delta0, E, delta);
        } catch (const InfeasibleDelta&) {
            continue;
        }
        if (!check_far_level(p)) continue;
        auto outcome = search_eta_h0(delta0, E, delta, pots, options);
        if (outcome.passed) return outcome;
    }
    return std::nullopt;
}

const char* const kNoDelta = "no delta in delta0 * 2^-k, k = 1..30, yields a verified weight";

}  // namespace

double select_delta(double delta0, double E, const WeightSearchOptions& options) {
    if (auto s = search_delta(delta0, E, options)) return s->params.delta;
    throw NoFeasibleDelta(kNoDelta);
}

WeightConstruction build_carleman_weight(double delta0, double E, const WeightSearchOptions& options) {
    auto s = search_delta(delta0, E, options);
    if (!s) throw NoFeasibleDelta(kNoDelta);
    return finish(std::move(*s));
}

std::string weight_csv(const CarlemanWeight& weight) {
    const auto& p = weight.params();
    const auto grid = weight.grid();
    CsvTable t;
    t.header = {"r", "w", "wprime", "m", "psi", "phi", "dphi", "ddphi"};
    t.rows.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = grid[i];
        t.rows.push_back({format_double(r), format_double(eval_w(r, p.delta)), format_double(eval_wprime(r, p.delta)),
                          format_double(eval_m(r, p.delta)), format_double(weight.psi()(r)),
                          format_double(weight.phi()[i]), format_double(weight.dphi()[i]),
                          format_double(weight.ddphi()[i])});
    }
    return to_csv_string(t);
}

}  // namespace carleman
