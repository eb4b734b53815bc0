#include "eah/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <string>

#include "eah/errors.hpp"
#include "eah/rng.hpp"
#include "eah/theory.hpp"

namespace eah {

namespace {

// Per-pair exponential kernel state: state(i,j) = sum over past node-j events
// of exp(-beta_ij (anchor - t_k)). Keeps intensity evaluation O(M^2) per
// step regardless of history length.
class KernelState {
  public:
    explicit KernelState(const ModelSpec& model)
        : model_(&model), m_(model.dim()), state_(model.dim(), model.dim(), 0.0) {}

    void advance(double dt) {
        if (dt <= 0.0) return;
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = 0; j < m_; ++j)
                state_(i, j) *= std::exp(-model_->kernel.beta(i, j) * dt);
    }

    void add_event(std::size_t node) {
        for (std::size_t i = 0; i < m_; ++i) state_(i, node) += 1.0;
    }

    // lambda_i at the anchor time t (events at the anchor included).
    void intensities(double t, std::vector<double>& out) const {
        out.assign(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            double acc = model_->mu[i];
            for (std::size_t j = 0; j < m_; ++j) {
                const double a = model_->a.a(i, j);
                if (a == 0.0 || state_(i, j) == 0.0) continue;
                acc += multiplier_value(model_->alpha, i, j, t) * a * state_(i, j);
            }
            out[i] = acc;
        }
    }

  private:
    const ModelSpec* model_;
    std::size_t m_;
    Mat state_;
};

void warn_if_unstable(const ModelSpec& model) {
    const double sup = branching_sup(model);
    if (sup >= 1.0)
        std::cerr << "warning: branching ratio sup m = " << sup
                  << " >= 1; simulation may explode (hard cap " << kEventCap << " events)\n";
}

struct Individual {
    double time;
    int node;
    long parent;   // index into the individuals vector, -1 for ancestors
    bool is_seed;
};

ClusterTree build_tree(const std::vector<Individual>& indiv,
                       const std::vector<std::vector<long>>& children, long idx) {
    ClusterTree tree;
    tree.time = indiv[idx].time;
    tree.node = indiv[idx].node;
    tree.children.reserve(children[idx].size());
    for (long c : children[idx]) tree.children.push_back(build_tree(indiv, children, c));
    return tree;
}

}  // namespace

void validate(const SimConfig& cfg) {
    validate(cfg.model);
    if (!(cfg.horizon > 0.0)) throw ConfigError("simulation horizon must be positive");
    validate(cfg.seeds);
    if (cfg.seeds.num_nodes != 0 &&
        static_cast<std::size_t>(cfg.seeds.num_nodes) != cfg.model.dim())
        throw ConfigError("seed stream node count does not match the model");
    for (const Event& e : cfg.seeds.events) {
        if (e.time < 0.0 || e.time >= cfg.horizon)
            throw ConfigError("seed events must lie in [0, horizon)");
        if (e.node < 0 || static_cast<std::size_t>(e.node) >= cfg.model.dim())
            throw ConfigError("seed event node out of range");
    }
}

std::size_t ClusterTree::total_size() const {
    std::size_t n = 1;
    for (const ClusterTree& c : children) n += c.total_size();
    return n;
}

double ClusterTree::last_time() const {
    double t = time;
    for (const ClusterTree& c : children) t = std::max(t, c.last_time());
    return t;
}

EventStream simulate_thinning(const SimConfig& cfg) {
    validate(cfg);
    if (!multiplier_nonincreasing(cfg.model.alpha))
        throw ConfigError(
            "thinning needs a nonincreasing multiplier; supply a constant envelope instead");
    warn_if_unstable(cfg.model);

    const std::size_t m = cfg.model.dim();
    Rng rng(cfg.rng_seed);
    KernelState state(cfg.model);

    EventStream out;
    out.num_nodes = static_cast<int>(m);
    out.horizon = cfg.horizon;

    std::size_t next_seed = 0;
    double t_cur = 0.0;
    std::vector<double> lambda(m);

    while (true) {
        state.intensities(t_cur, lambda);
        const double bound = std::accumulate(lambda.begin(), lambda.end(), 0.0);

        double t_cand = std::numeric_limits<double>::infinity();
        if (bound > 0.0) t_cand = t_cur + rng.exponential(bound);

        // Seeds occur deterministically; fold the next one in if it comes first.
        if (next_seed < cfg.seeds.events.size() &&
            cfg.seeds.events[next_seed].time <= t_cand) {
            const Event seed = cfg.seeds.events[next_seed++];
            state.advance(seed.time - t_cur);
            state.add_event(static_cast<std::size_t>(seed.node));
            out.events.push_back(seed);
            t_cur = seed.time;
            continue;
        }
        if (t_cand >= cfg.horizon) break;

        state.advance(t_cand - t_cur);
        state.intensities(t_cand, lambda);
        const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
        if (rng.uniform() * bound <= total) {
            const std::size_t node = rng.categorical(lambda, total);
            state.add_event(node);
            out.events.push_back({t_cand, static_cast<int>(node)});
            if (out.events.size() > kEventCap)
                throw ExplosionError("thinning exceeded the event cap of " +
                                     std::to_string(kEventCap));
        }
        t_cur = t_cand;
    }

    sort_and_perturb_ties(out);
    return out;
}

BranchingResult simulate_branching(const SimConfig& cfg, bool allow_unstable) {
    validate(cfg);
    const double sup = branching_sup(cfg.model);
    if (sup >= 1.0) {
        if (!allow_unstable)
            throw ConfigError("model is not subcritical (sup m = " + std::to_string(sup) +
                              "); pass allow_unstable to run with the event cap only");
        warn_if_unstable(cfg.model);
    }

    const std::size_t m = cfg.model.dim();
    Rng rng(cfg.rng_seed);

    std::vector<Individual> indiv;
    std::vector<std::vector<long>> children;
    auto add_individual = [&](double t, int node, long parent, bool is_seed) {
        indiv.push_back({t, node, parent, is_seed});
        children.emplace_back();
        if (parent >= 0) children[parent].push_back(static_cast<long>(indiv.size()) - 1);
        if (indiv.size() > kEventCap)
            throw ExplosionError("branching exceeded the event cap of " +
                                 std::to_string(kEventCap));
    };

    // Ancestors: seeds at their given times plus immigrants from the Poisson
    // background, merged in time order for a fixed processing order.
    const double mu_total = std::accumulate(cfg.model.mu.begin(), cfg.model.mu.end(), 0.0);
    std::vector<std::pair<Event, bool>> ancestors;  // (event, is_seed)
    for (const Event& s : cfg.seeds.events) ancestors.push_back({s, true});
    if (mu_total > 0.0) {
        double t = 0.0;
        while (true) {
            t += rng.exponential(mu_total);
            if (t >= cfg.horizon) break;
            const std::size_t node = rng.categorical(cfg.model.mu, mu_total);
            ancestors.push_back({{t, static_cast<int>(node)}, false});
        }
    }
    std::stable_sort(ancestors.begin(), ancestors.end(),
                     [](const auto& x, const auto& y) { return x.first.time < y.first.time; });
    for (const auto& [ev, is_seed] : ancestors) add_individual(ev.time, ev.node, -1, is_seed);

    // FIFO sweep: each individual spawns direct offspring per target node by
    // thinning an exponential-envelope Poisson process clamped at the
    // parent-time multiplier value.
    for (std::size_t idx = 0; idx < indiv.size(); ++idx) {
        const double tau = indiv[idx].time;
        const auto v = static_cast<std::size_t>(indiv[idx].node);
        for (std::size_t i = 0; i < m; ++i) {
            const double a = cfg.model.a.a(i, v);
            if (a == 0.0) continue;
            const double alpha0 = multiplier_value(cfg.model.alpha, i, v, tau);
            if (alpha0 <= 0.0) continue;
            const double beta = cfg.model.kernel.beta(i, v);
            const double rate0 = alpha0 * a;
            const double w_end = std::exp(-beta * (cfg.horizon - tau));
            double w = 1.0;  // envelope survival level exp(-beta (s - tau))
            while (true) {
                const double drop = beta * rng.exponential(1.0) / rate0;
                if (w - drop <= w_end) break;
                w -= drop;
                const double t_child = tau - std::log(w) / beta;
                const double alpha_t = multiplier_value(cfg.model.alpha, i, v, t_child);
                if (rng.uniform() * alpha0 <= alpha_t)
                    add_individual(t_child, static_cast<int>(i), static_cast<long>(idx),
                                   false);
            }
        }
    }

    // Perturb ties on the merged set before building stream and trees so both
    // views carry identical times.
    std::vector<long> order(indiv.size());
    std::iota(order.begin(), order.end(), 0L);
    std::stable_sort(order.begin(), order.end(), [&](long x, long y) {
        return indiv[x].time < indiv[y].time;
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
        Individual& cur = indiv[order[k]];
        const Individual& prev = indiv[order[k - 1]];
        if (cur.time <= prev.time) cur.time = prev.time + 1e-9;
    }

    BranchingResult result;
    result.stream.num_nodes = static_cast<int>(m);
    result.stream.horizon = cfg.horizon;
    for (long k : order) result.stream.events.push_back({indiv[k].time, indiv[k].node});
    if (!result.stream.events.empty())
        result.stream.horizon =
            std::max(result.stream.horizon, result.stream.events.back().time);

    for (std::size_t k = 0; k < indiv.size(); ++k) {
        if (indiv[k].parent != -1) continue;
        if (indiv[k].is_seed) {
            for (long c : children[k])
                result.seed_offspring.push_back(build_tree(indiv, children, c));
        } else {
            result.clusters.push_back(build_tree(indiv, children, static_cast<long>(k)));
        }
    }
    return result;
}

BinnedCounts bin_events(const EventStream& stream, double delta) {
    if (!(delta > 0.0)) throw ArgumentError("bin_events: delta must be > 0");
    BinnedCounts binned;
    binned.delta = delta;
    binned.origin = 0.0;

    long num_bins = static_cast<long>(std::ceil(stream.horizon / delta - 1e-12));
    if (num_bins < 0) num_bins = 0;
    std::vector<long> idx(stream.events.size());
    for (std::size_t k = 0; k < stream.events.size(); ++k) {
        idx[k] = static_cast<long>(std::floor(stream.events[k].time / delta));
        num_bins = std::max(num_bins, idx[k] + 1);
    }

    const std::size_t m = static_cast<std::size_t>(std::max(stream.num_nodes, 0));
    binned.counts.assign(static_cast<std::size_t>(num_bins), std::vector<long>(m, 0));
    for (std::size_t k = 0; k < stream.events.size(); ++k)
        ++binned.counts[static_cast<std::size_t>(idx[k])]
                       [static_cast<std::size_t>(stream.events[k].node)];
    return binned;
}

}  // namespace eah
