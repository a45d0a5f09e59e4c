#include "chainforge/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>

#include "chainforge/format.hpp"
#include "chainforge/rng.hpp"

namespace chainforge {

Distribution Distribution::deterministic(double v) {
    Distribution d;
    d.kind = Kind::Deterministic;
    d.value = v;
    return d;
}

Distribution Distribution::normal(double sigma) {
    Distribution d;
    d.kind = Kind::Normal;
    d.sigma = sigma;
    return d;
}

Distribution Distribution::shock(double p) {
    Distribution d;
    d.kind = Kind::Shock;
    d.shock_prob = p;
    return d;
}

Distribution Distribution::scaled(Distribution inner, double factor) {
    Distribution d;
    d.kind = Kind::Scaled;
    d.scale_factor = factor;
    d.inner = std::make_shared<const Distribution>(std::move(inner));
    return d;
}

bool Distribution::finite_support() const {
    switch (kind) {
        case Kind::Deterministic: return true;
        case Kind::Normal: return sigma == 0.0;
        case Kind::Shock: return true;
        case Kind::Scaled: return inner && inner->finite_support();
    }
    return false;
}

std::vector<std::pair<double, double>> Distribution::atoms() const {
    switch (kind) {
        case Kind::Deterministic: return {{value, 1.0}};
        case Kind::Normal:
            if (sigma == 0.0) return {{1.0, 1.0}};
            throw std::invalid_argument("atoms: normal distribution has continuous support");
        case Kind::Shock: {
            std::vector<std::pair<double, double>> a;
            if (shock_prob > 0.0) a.push_back({0.0, shock_prob});
            if (shock_prob < 1.0) a.push_back({1.0, 1.0 - shock_prob});
            return a;
        }
        case Kind::Scaled: {
            if (!inner) throw std::invalid_argument("atoms: scaled distribution missing inner");
            auto a = inner->atoms();
            for (auto& [v, p] : a) v *= scale_factor;
            return a;
        }
    }
    throw std::logic_error("atoms: unknown distribution kind");
}

bool CorrelationMatrix::identity() const {
    const std::size_t n = ids.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (std::fabs(at(i, j) - (i == j ? 1.0 : 0.0)) > 1e-12) return false;
    return true;
}

SampleStrategy SampleStrategy::monte_carlo(int n) {
    SampleStrategy s;
    s.kind = SampleStrategyKind::MonteCarlo;
    s.n = n;
    return s;
}

SampleStrategy SampleStrategy::stratified(int n_per_axis) {
    SampleStrategy s;
    s.kind = SampleStrategyKind::StratifiedEquiProbable;
    s.n = n_per_axis;
    return s;
}

SampleStrategy SampleStrategy::stratified(int n_supply, int n_demand) {
    SampleStrategy s;
    s.kind = SampleStrategyKind::StratifiedEquiProbable;
    s.n = std::max(n_supply, n_demand);
    s.n_supply = n_supply;
    s.n_demand = n_demand;
    return s;
}

SampleStrategy SampleStrategy::exhaustive() {
    SampleStrategy s;
    s.kind = SampleStrategyKind::Exhaustive;
    return s;
}

namespace {

// One multiplier drawn from its marginal via the probability integral
// transform, so a Gaussian copula can feed correlated uniforms through it.
double from_uniform(const Distribution& d, double u) {
    switch (d.kind) {
        case Distribution::Kind::Deterministic: return d.value;
        case Distribution::Kind::Normal:
            return std::max(0.0, 1.0 + d.sigma * rng::normal_quantile(u));
        case Distribution::Kind::Shock: return u < d.shock_prob ? 0.0 : 1.0;
        case Distribution::Kind::Scaled:
            return d.scale_factor * from_uniform(*d.inner, u);
    }
    throw std::logic_error("from_uniform: unknown distribution kind");
}

// Equal-probability cells represented by their centroids (exact atoms for
// discrete kinds, conditional means for the normal, clamped at zero).
std::vector<std::pair<double, double>> stratified_cells(const Distribution& d, int n) {
    switch (d.kind) {
        case Distribution::Kind::Deterministic: return {{d.value, 1.0}};
        case Distribution::Kind::Normal: {
            if (d.sigma == 0.0) return {{1.0, 1.0}};
            std::vector<std::pair<double, double>> cells;
            cells.reserve(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k) {
                const double zl = rng::normal_quantile(static_cast<double>(k) / n);
                const double zu = rng::normal_quantile(static_cast<double>(k + 1) / n);
                const double pl = std::isinf(zl) ? 0.0 : rng::normal_pdf(zl);
                const double pu = std::isinf(zu) ? 0.0 : rng::normal_pdf(zu);
                const double centroid = 1.0 + d.sigma * n * (pl - pu);
                cells.push_back({std::max(0.0, centroid), 1.0 / n});
            }
            return cells;
        }
        case Distribution::Kind::Shock: return d.atoms();
        case Distribution::Kind::Scaled: {
            auto cells = stratified_cells(*d.inner, n);
            for (auto& [v, p] : cells) v *= d.scale_factor;
            return cells;
        }
    }
    throw std::logic_error("stratified_cells: unknown distribution kind");
}

// Lower Cholesky factor; allows semidefinite input by zeroing null pivots.
std::vector<double> cholesky(const CorrelationMatrix& c) {
    const std::size_t n = c.ids.size();
    std::vector<double> l(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = c.at(i, j);
            for (std::size_t k = 0; k < j; ++k) sum -= l[i * n + k] * l[j * n + k];
            if (i == j) {
                if (sum < -1e-9)
                    throw std::invalid_argument("demand correlation matrix is not PSD");
                l[i * n + i] = std::sqrt(std::max(0.0, sum));
            } else {
                l[i * n + j] = l[j * n + j] > 1e-12 ? sum / l[j * n + j] : 0.0;
            }
        }
    }
    return l;
}

void finalize(ScenarioSet& set) {
    double total = 0.0;
    for (double w : set.weights) total += w;
    if (!(total > 0.0)) throw std::logic_error("sample: degenerate scenario weights");
    for (double& w : set.weights) w /= total;

    const std::size_t ns = set.supplier_ids.size();
    set.supply_groups.clear();
    std::size_t begin = 0;
    for (std::size_t k = 1; k <= set.size(); ++k) {
        const bool boundary =
            k == set.size() ||
            std::memcmp(set.supply_row(k), set.supply_row(begin), ns * sizeof(double)) != 0;
        if (boundary) {
            set.supply_groups.push_back({begin, k});
            begin = k;
        }
    }
}

}  // namespace

ScenarioSet sample(const UncertaintyConfig& config, SampleStrategy strategy, std::uint64_t seed) {
    ScenarioSet set;
    set.seed = seed;
    set.strategy = strategy;
    set.rng_name = rng::kGeneratorName;
    for (const auto& [id, dist] : config.supply) set.supplier_ids.push_back(id);
    for (const auto& [id, dist] : config.demand) set.demand_ids.push_back(id);
    const std::size_t ns = set.supplier_ids.size();
    const std::size_t nd = set.demand_ids.size();

    const bool correlated =
        config.demand_correlation && !config.demand_correlation->identity();

    if (strategy.kind == SampleStrategyKind::MonteCarlo) {
        const int n = strategy.n;
        if (n <= 0) throw std::invalid_argument("sample: MonteCarlo needs n > 0");

        std::vector<double> l;
        std::vector<std::size_t> corr_index(nd, static_cast<std::size_t>(-1));
        if (correlated) {
            const auto& corr = *config.demand_correlation;
            l = cholesky(corr);
            for (std::size_t j = 0; j < nd; ++j) {
                const auto it = std::find(corr.ids.begin(), corr.ids.end(), set.demand_ids[j]);
                if (it != corr.ids.end()) corr_index[j] = it - corr.ids.begin();
            }
        }

        // Independent substream per axis keyed by axis id, so the draws for
        // one axis never depend on how many other axes exist.
        std::vector<std::mt19937_64> sup_gen, dem_gen;
        for (std::size_t i = 0; i < ns; ++i)
            sup_gen.emplace_back(rng::derive_seed(seed, "supply:" + set.supplier_ids[i], 0));
        for (std::size_t j = 0; j < nd; ++j)
            dem_gen.emplace_back(rng::derive_seed(seed, "demand:" + set.demand_ids[j], 0));

        set.supply_values.resize(static_cast<std::size_t>(n) * ns);
        set.demand_values.resize(static_cast<std::size_t>(n) * nd);
        set.weights.assign(static_cast<std::size_t>(n), 1.0 / n);

        const std::size_t nc = correlated ? config.demand_correlation->ids.size() : 0;
        std::vector<double> z(nc), zc(nc);
        for (int k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < ns; ++i) {
                const auto it = config.supply.find(set.supplier_ids[i]);
                set.supply_values[static_cast<std::size_t>(k) * ns + i] =
                    from_uniform(it->second, rng::u01(sup_gen[i]));
            }
            if (correlated) {
                // Draw a standard normal per correlated axis, couple with the
                // Cholesky factor, then push through each marginal.
                for (std::size_t j = 0; j < nd; ++j) {
                    const double u = rng::u01(dem_gen[j]);
                    if (corr_index[j] != static_cast<std::size_t>(-1))
                        z[corr_index[j]] = rng::normal_quantile(u);
                }
                for (std::size_t a = 0; a < nc; ++a) {
                    double s = 0.0;
                    for (std::size_t b = 0; b <= a; ++b) s += l[a * nc + b] * z[b];
                    zc[a] = s;
                }
                for (std::size_t j = 0; j < nd; ++j) {
                    const auto it = config.demand.find(set.demand_ids[j]);
                    double u;
                    if (corr_index[j] != static_cast<std::size_t>(-1))
                        u = rng::normal_cdf(zc[corr_index[j]]);
                    else
                        u = rng::u01(dem_gen[j]);
                    set.demand_values[static_cast<std::size_t>(k) * nd + j] =
                        from_uniform(it->second, u);
                }
            } else {
                for (std::size_t j = 0; j < nd; ++j) {
                    const auto it = config.demand.find(set.demand_ids[j]);
                    set.demand_values[static_cast<std::size_t>(k) * nd + j] =
                        from_uniform(it->second, rng::u01(dem_gen[j]));
                }
            }
        }
        finalize(set);
        return set;
    }

    if (correlated)
        throw std::invalid_argument(
            "sample: correlated demand requires the MonteCarlo strategy");

    // Stratified / exhaustive: per-axis cells, full lexicographic product with
    // supply axes outermost.
    std::vector<std::vector<std::pair<double, double>>> cells;
    for (std::size_t i = 0; i < ns; ++i) {
        const auto& dist = config.supply.at(set.supplier_ids[i]);
        if (strategy.kind == SampleStrategyKind::Exhaustive) {
            if (!dist.finite_support())
                throw std::invalid_argument("sample: Exhaustive on continuous supply axis '" +
                                            set.supplier_ids[i] + "'");
            cells.push_back(dist.atoms());
        } else {
            cells.push_back(
                stratified_cells(dist, strategy.n_supply > 0 ? strategy.n_supply : strategy.n));
        }
    }
    for (std::size_t j = 0; j < nd; ++j) {
        const auto& dist = config.demand.at(set.demand_ids[j]);
        if (strategy.kind == SampleStrategyKind::Exhaustive) {
            if (!dist.finite_support())
                throw std::invalid_argument("sample: Exhaustive on continuous demand axis '" +
                                            set.demand_ids[j] + "'");
            cells.push_back(dist.atoms());
        } else {
            cells.push_back(
                stratified_cells(dist, strategy.n_demand > 0 ? strategy.n_demand : strategy.n));
        }
    }

    std::size_t total = 1;
    for (const auto& c : cells) {
        total *= c.size();
        if (total > 50'000'000)
            throw std::invalid_argument("sample: scenario product space too large");
    }

    set.supply_values.resize(total * ns);
    set.demand_values.resize(total * nd);
    set.weights.resize(total);
    std::vector<std::size_t> idx(cells.size(), 0);
    for (std::size_t k = 0; k < total; ++k) {
        double w = 1.0;
        for (std::size_t a = 0; a < cells.size(); ++a) {
            const auto& [v, p] = cells[a][idx[a]];
            w *= p;
            if (a < ns)
                set.supply_values[k * ns + a] = v;
            else
                set.demand_values[k * nd + (a - ns)] = v;
        }
        set.weights[k] = w;
        for (std::size_t a = cells.size(); a-- > 0;) {
            if (++idx[a] < cells[a].size()) break;
            idx[a] = 0;
        }
    }
    finalize(set);
    return set;
}

std::pair<double, double> moments(const ScenarioSet& set, const std::string& axis_id) {
    if (set.size() == 0) throw std::invalid_argument("moments: empty scenario set");
    const double* base = nullptr;
    std::size_t stride = 0, offset = 0;
    for (std::size_t i = 0; i < set.supplier_ids.size(); ++i) {
        if (set.supplier_ids[i] == axis_id) {
            base = set.supply_values.data();
            stride = set.supplier_ids.size();
            offset = i;
        }
    }
    for (std::size_t j = 0; j < set.demand_ids.size(); ++j) {
        if (set.demand_ids[j] == axis_id) {
            base = set.demand_values.data();
            stride = set.demand_ids.size();
            offset = j;
        }
    }
    if (!base) throw std::invalid_argument("moments: unknown axis id '" + axis_id + "'");

    double mean = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) mean += set.weights[k] * base[k * stride + offset];
    double var = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) {
        const double d = base[k * stride + offset] - mean;
        var += set.weights[k] * d * d;
    }
    return {mean, var};
}

void write_scenarios_csv(const ScenarioSet& set, std::ostream& out) {
    out << "index,weight";
    for (const auto& id : set.supplier_ids) out << ",s:" << id;
    for (const auto& id : set.demand_ids) out << ",d:" << id;
    out << "\n";
    for (std::size_t k = 0; k < set.size(); ++k) {
        out << k << ',' << fmt_double(set.weights[k]);
        for (std::size_t i = 0; i < set.supplier_ids.size(); ++i)
            out << ',' << fmt_double(set.supply_row(k)[i]);
        for (std::size_t j = 0; j < set.demand_ids.size(); ++j)
            out << ',' << fmt_double(set.demand_row(k)[j]);
        out << "\n";
    }
}

}  // namespace chainforge
