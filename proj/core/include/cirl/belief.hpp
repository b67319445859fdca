#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cirl/game.hpp"

namespace cirl {

/// Observation has zero likelihood under every objective the belief supports.
class InconsistentObservation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Probability vector over the objective set.
class Belief {
public:
    Belief() = default;
    /// Throws UsageError unless weights are non-negative and sum to 1 within 1e-9.
    explicit Belief(std::vector<double> weights);

    static Belief uniform(std::size_t n);
    static Belief point_mass(std::size_t n, std::size_t k);
    /// Normalises non-negative weights; throws UsageError when they sum to zero.
    static Belief normalized(std::vector<double> weights);

    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }
    std::span<const double> weights() const { return weights_; }
    const std::vector<double>& vector() const { return weights_; }

    bool operator==(const Belief&) const = default;

private:
    std::vector<double> weights_;
};

/**
Human action model. `Boltzmann` is p(a) ∝ exp(β q(a)); `Rational` puts all
mass on the first maximiser. Both are mixed with a likelihood floor ε,
p ← (p + ε) / (1 + nε), so an off-model action never zeroes a posterior.
*/
struct RationalityModel {
    enum class Kind { Boltzmann, Rational };

    Kind kind = Kind::Boltzmann;
    double beta = 1.0;
    double epsilon = 0.0;

    static RationalityModel boltzmann(double beta, double epsilon = 0.0) {
        return {Kind::Boltzmann, beta, epsilon};
    }
    static RationalityModel rational(double epsilon = kDefaultRationalEpsilon) { return {Kind::Rational, 0.0, epsilon}; }

    static constexpr double kDefaultRationalEpsilon = 1e-9;

    bool is_rational() const { return kind == Kind::Rational; }
    /// "beta=2.5" or "rational".
    std::string label() const;
    /// Throws UsageError when β is not finite and positive, or ε ≥ 1/num_actions.
    void check(std::size_t num_actions) const;

    bool operator==(const RationalityModel&) const = default;
};

/// Two action values closer than this are treated as tied; ties go to the
/// lower index.
inline constexpr double kArgmaxTieTolerance = 1e-9;

/// First index within kArgmaxTieTolerance of the maximum.
std::size_t tie_broken_argmax(std::span<const double> values);

std::vector<double> boltzmann_policy(std::span<const double> q_row, const RationalityModel& model);
/// Allocation-free form; `out` must have q_row.size() entries. Throws NumericError on NaN.
void boltzmann_policy_into(std::span<const double> q_row, const RationalityModel& model, std::span<double> out);

Belief bayes_update(const Belief& b, std::span<const double> likelihood);
/// Returns false, leaving `out` untouched, when the normaliser is zero.
bool bayes_update_into(std::span<const double> prior, std::span<const double> likelihood, std::span<double> out);

/// Human action values at one (s, b, a_R): row θ holds q(·; θ) over the
/// legal human actions, in a fixed order shared by all rows.
struct HumanValueSlice {
    std::span<const double> values;  // |Θ| × |legal A_H|, row-major
    std::size_t num_actions = 0;

    std::span<const double> row(std::size_t theta) const {
        return values.subspan(theta * num_actions, num_actions);
    }
};

/// Pragmatic belief transition f_b: Bayes update with the Boltzmann
/// likelihood of the observed action (position `action` in the slice rows).
Belief belief_transition(const Belief& b, std::size_t action, const HumanValueSlice& q, const RationalityModel& model);

/**
Regular lattice on the probability simplex: all beliefs whose entries are
multiples of 1/m. Points are indexed in lexicographic order of their count
vectors, so index 0 is (0, ..., 0, m).
*/
class BeliefGrid {
public:
    BeliefGrid(std::size_t num_objectives, std::size_t resolution);

    std::size_t dimension() const { return dims_; }
    std::size_t resolution() const { return m_; }
    std::size_t size() const { return size_; }

    std::span<const double> point(std::size_t index) const { return {probs_.data() + index * dims_, dims_}; }
    std::span<const std::uint32_t> counts(std::size_t index) const { return {counts_.data() + index * dims_, dims_}; }
    Belief belief(std::size_t index) const;

    /// Lexicographic rank of a count vector summing to m.
    std::size_t index_of(std::span<const std::uint32_t> counts) const;

    /// Nearest grid point in L1 distance; ties go to the lowest index.
    std::size_t project(std::span<const double> b) const;

    /// Default resolution: 20 for two objectives, 10 otherwise.
    static std::size_t default_resolution(std::size_t num_objectives);

private:
    std::size_t compositions(std::size_t parts, std::size_t total) const;

    std::size_t dims_;
    std::size_t m_;
    std::size_t size_;
    std::vector<std::size_t> comp_;  // comp_[parts * (m+1) + total]
    std::vector<std::uint32_t> counts_;
    std::vector<double> probs_;
};

std::size_t project_to_grid(const Belief& b, const BeliefGrid& grid);

}  // namespace cirl
