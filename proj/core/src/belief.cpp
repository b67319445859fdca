#include "cirl/belief.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cirl {

namespace {

constexpr double kBeliefSumTolerance = 1e-9;
constexpr double kFractionTieTolerance = 1e-12;

}  // namespace

Belief::Belief(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw UsageError("belief must cover at least one objective");
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw UsageError("belief weights must be finite and non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > kBeliefSumTolerance) throw UsageError("belief weights must sum to 1");
}

Belief Belief::uniform(std::size_t n) {
    if (n == 0) throw UsageError("belief must cover at least one objective");
    return Belief(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Belief Belief::point_mass(std::size_t n, std::size_t k) {
    if (k >= n) throw UsageError("point mass index out of range");
    std::vector<double> w(n, 0.0);
    w[k] = 1.0;
    return Belief(std::move(w));
}

Belief Belief::normalized(std::vector<double> weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw UsageError("belief weights must be non-negative");
        sum += w;
    }
    if (!(sum > 0.0)) throw UsageError("belief weights sum to zero");
    for (double& w : weights) w /= sum;
    return Belief(std::move(weights));
}

std::string RationalityModel::label() const {
    if (is_rational()) return "rational";
    std::ostringstream os;
    os << "beta=" << beta;
    return os.str();
}

void RationalityModel::check(std::size_t num_actions) const {
    if (kind == Kind::Boltzmann && !(std::isfinite(beta) && beta > 0.0))
        throw UsageError("Boltzmann rationality needs a finite positive beta");
    if (!(epsilon >= 0.0)) throw UsageError("likelihood floor must be non-negative");
    if (num_actions > 0 && !(epsilon < 1.0 / static_cast<double>(num_actions)))
        throw UsageError("likelihood floor must be below 1/|A_H|");
}

std::size_t tie_broken_argmax(std::span<const double> values) {
    if (values.empty()) throw UsageError("argmax over an empty set");
    double best = values[0];
    for (double v : values) best = std::max(best, v);
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] >= best - kArgmaxTieTolerance) return i;
    return 0;
}

void boltzmann_policy_into(std::span<const double> q_row, const RationalityModel& model, std::span<double> out) {
    const std::size_t n = q_row.size();
    if (n == 0) throw UsageError("boltzmann_policy needs at least one action");
    for (double q : q_row)
        if (std::isnan(q)) throw NumericError("NaN action value in boltzmann_policy");

    if (model.is_rational()) {
        const auto best = tie_broken_argmax(q_row);
        for (std::size_t i = 0; i < n; ++i) out[i] = (i == best) ? 1.0 : 0.0;
    } else {
        double qmax = q_row[0];
        for (double q : q_row) qmax = std::max(qmax, q);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += out[i] = std::exp(model.beta * (q_row[i] - qmax));
        for (std::size_t i = 0; i < n; ++i) out[i] /= total;
    }
    if (model.epsilon > 0.0) {
        const double z = 1.0 + static_cast<double>(n) * model.epsilon;
        for (std::size_t i = 0; i < n; ++i) out[i] = (out[i] + model.epsilon) / z;
    }
}

std::vector<double> boltzmann_policy(std::span<const double> q_row, const RationalityModel& model) {
    std::vector<double> out(q_row.size());
    boltzmann_policy_into(q_row, model, out);
    return out;
}

bool bayes_update_into(std::span<const double> prior, std::span<const double> likelihood, std::span<double> out) {
    double z = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i) z += likelihood[i] * prior[i];
    if (!(z > 0.0)) return false;
    for (std::size_t i = 0; i < prior.size(); ++i) out[i] = likelihood[i] * prior[i] / z;
    return true;
}

Belief bayes_update(const Belief& b, std::span<const double> likelihood) {
    if (likelihood.size() != b.size()) throw UsageError("likelihood and belief sizes differ");
    for (double l : likelihood)
        if (!(l >= 0.0)) throw UsageError("likelihood must be non-negative");
    std::vector<double> post(b.size());
    if (!bayes_update_into(b.weights(), likelihood, post))
        throw InconsistentObservation("observation has zero likelihood under every supported objective");
    return Belief(std::move(post));
}

Belief belief_transition(const Belief& b, std::size_t action, const HumanValueSlice& q, const RationalityModel& model) {
    if (q.values.size() != b.size() * q.num_actions) throw UsageError("value slice does not match belief size");
    if (action >= q.num_actions) throw UsageError("observed action outside the slice");
    std::vector<double> likelihood(b.size()), policy(q.num_actions);
    for (std::size_t th = 0; th < b.size(); ++th) {
        boltzmann_policy_into(q.row(th), model, policy);
        likelihood[th] = policy[action];
    }
    return bayes_update(b, likelihood);
}

// ---------------------------------------------------------------------------

BeliefGrid::BeliefGrid(std::size_t num_objectives, std::size_t resolution)
    : dims_(num_objectives), m_(resolution), size_(0) {
    if (dims_ == 0) throw UsageError("belief grid needs at least one objective");
    if (m_ == 0) throw UsageError("belief grid resolution must be positive");

    comp_.assign((dims_ + 1) * (m_ + 1), 0);
    for (std::size_t t = 0; t <= m_; ++t) comp_[t] = (t == 0) ? 1 : 0;
    for (std::size_t p = 1; p <= dims_; ++p)
        for (std::size_t t = 0; t <= m_; ++t) {
            std::size_t c = 0;
            for (std::size_t first = 0; first <= t; ++first) c += comp_[(p - 1) * (m_ + 1) + (t - first)];
            comp_[p * (m_ + 1) + t] = c;
        }
    size_ = compositions(dims_, m_);

    counts_.reserve(size_ * dims_);
    std::vector<std::uint32_t> cur(dims_, 0);
    // Lexicographic enumeration: the last coordinate absorbs the remainder.
    auto emit = [&](auto&& self, std::size_t i, std::size_t remaining) -> void {
        if (i + 1 == dims_) {
            cur[i] = static_cast<std::uint32_t>(remaining);
            counts_.insert(counts_.end(), cur.begin(), cur.end());
            return;
        }
        for (std::size_t v = 0; v <= remaining; ++v) {
            cur[i] = static_cast<std::uint32_t>(v);
            self(self, i + 1, remaining - v);
        }
    };
    emit(emit, 0, m_);

    probs_.resize(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i)
        probs_[i] = static_cast<double>(counts_[i]) / static_cast<double>(m_);
}

std::size_t BeliefGrid::compositions(std::size_t parts, std::size_t total) const {
    return comp_[parts * (m_ + 1) + total];
}

std::size_t BeliefGrid::default_resolution(std::size_t num_objectives) { return num_objectives <= 2 ? 20 : 10; }

Belief BeliefGrid::belief(std::size_t index) const {
    if (index >= size_) throw UsageError("grid index out of range");
    auto p = point(index);
    return Belief(std::vector<double>(p.begin(), p.end()));
}

std::size_t BeliefGrid::index_of(std::span<const std::uint32_t> counts) const {
    if (counts.size() != dims_) throw UsageError("count vector has wrong dimension");
    std::size_t rank = 0, remaining = m_;
    for (std::size_t i = 0; i + 1 < dims_; ++i) {
        if (counts[i] > remaining) throw UsageError("count vector does not sum to the grid resolution");
        for (std::size_t v = 0; v < counts[i]; ++v) rank += compositions(dims_ - i - 1, remaining - v);
        remaining -= counts[i];
    }
    if (counts[dims_ - 1] != remaining) throw UsageError("count vector does not sum to the grid resolution");
    return rank;
}

std::size_t BeliefGrid::project(std::span<const double> b) const {
    if (b.size() != dims_) throw UsageError("belief has wrong dimension for grid");
    double sum = 0.0;
    for (double x : b) sum += x;
    if (!(sum > 0.0)) throw UsageError("cannot project a zero belief");

    // Largest-remainder rounding minimises L1 distance on the lattice.
    // Among equal remainders the later coordinates are rounded up, which
    // yields the lexicographically smallest (lowest index) optimum.
    constexpr std::size_t kInline = 16;
    std::uint32_t counts_buf[kInline];
    double frac_buf[kInline];
    std::size_t order_buf[kInline];
    std::vector<std::uint32_t> counts_heap;
    std::vector<double> frac_heap;
    std::vector<std::size_t> order_heap;
    std::uint32_t* counts = counts_buf;
    double* frac = frac_buf;
    std::size_t* order = order_buf;
    if (dims_ > kInline) {
        counts_heap.resize(dims_);
        frac_heap.resize(dims_);
        order_heap.resize(dims_);
        counts = counts_heap.data();
        frac = frac_heap.data();
        order = order_heap.data();
    }

    long assigned = 0;
    for (std::size_t i = 0; i < dims_; ++i) {
        const double x = std::max(0.0, b[i] / sum) * static_cast<double>(m_);
        const double f = std::floor(x);
        counts[i] = static_cast<std::uint32_t>(f);
        frac[i] = x - f;
        assigned += static_cast<long>(counts[i]);
        order[i] = i;
    }
    long missing = static_cast<long>(m_) - assigned;

    if (missing > 0) {
        std::sort(order, order + dims_, [&](std::size_t a, std::size_t c) {
            return frac[a] != frac[c] ? frac[a] > frac[c] : a > c;
        });
        const auto k = static_cast<std::size_t>(missing);
        const double cutoff = frac[order[k - 1]];
        std::size_t sure = 0;
        for (std::size_t i = 0; i < dims_; ++i)
            if (frac[i] > cutoff + kFractionTieTolerance) {
                ++counts[i];
                ++sure;
            }
        std::size_t need = k - sure;
        for (std::size_t i = dims_; i-- > 0 && need > 0;)
            if (std::abs(frac[i] - cutoff) <= kFractionTieTolerance) {
                ++counts[i];
                --need;
            }
    } else {
        // Only reachable through round-off when the floors overshoot m.
        while (missing < 0) {
            std::size_t pick = dims_;
            for (std::size_t i = 0; i < dims_; ++i)
                if (counts[i] > 0 && (pick == dims_ || frac[i] < frac[pick])) pick = i;
            --counts[pick];
            ++missing;
        }
    }
    return index_of({counts, dims_});
}

std::size_t project_to_grid(const Belief& b, const BeliefGrid& grid) { return grid.project(b.weights()); }

}  // namespace cirl
