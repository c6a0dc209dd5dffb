#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nashcot/engine.hpp"

namespace nashcot::sim {

// ============================================================================
// Path and template models
// ============================================================================

/// One answer path as a categorical draw over `alphabet` labels. Label 0 is
/// the correct answer; the wrong mass (1 - p_correct) splits uniformly over
/// the other labels.
struct PathModel {
    int alphabet = 2;
    double p_correct = 0.5;

    void validate() const;  // alphabet >= 2, p_correct in [0, 1]
};

/// Guided-path behaviour. Template suitability is drawn once per simulated
/// question; a suited template draws guided answers at p_correct_guided, an
/// unsuited one at p_correct_misled.
struct TemplateModel {
    double p_match = 1.0;
    double p_correct_guided = 0.5;
    double p_correct_misled = 0.25;

    void validate() const;  // all probabilities in [0, 1]
};

struct SimReport {
    std::string strategy;
    int n_outer = 0;  // nash cells only
    int n_mini = 0;   // nash cells only
    int path_budget = 0;
    std::int64_t trials = 0;
    double accuracy = 0.0;
    double ci_half_width = 0.0;  // 1.96 * sqrt(acc * (1 - acc) / trials)
    std::uint64_t seed = 0;

    bool ci_overlaps(const SimReport& other) const;
};

struct BoundExceeded : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ============================================================================
// Operations
// ============================================================================

/// Exact probability that label 0 wins a k-path majority vote under the
/// engine's tie rule, by full multinomial enumeration. Bounds: k <= 12,
/// alphabet <= 6 (BoundExceeded otherwise). A tie among s equally counted
/// labels containing label 0 contributes 1/s: the draws are exchangeable, so
/// each tied label is equally likely to occur first.
double exact_vote_accuracy(const PathModel& model, int k);

/// Monte-Carlo accuracy of k-path self-consistency; replays the production
/// majority_vote on synthetic answers.
SimReport simulate_self_consistency(const PathModel& model, int k, std::int64_t trials,
                                    std::uint64_t seed);

/// Monte-Carlo accuracy of a Nash run with the given loop sizes; replays the
/// production filter_trajectories on synthetic trajectories. The reported
/// path budget includes the selection path.
SimReport simulate_nash(const PathModel& model, const TemplateModel& tmpl, int n_outer,
                        int n_mini, std::int64_t trials, std::uint64_t seed);

// ============================================================================
// Sweeps
// ============================================================================

struct SweepConfig {
    std::vector<int> outer_values{1, 2, 3, 4};
    std::vector<int> mini_values{1, 2, 3, 4};
    std::vector<int> sc_reference_paths{20};
    PathModel path_model;
    TemplateModel template_model;
    std::int64_t trials = 100000;
    std::uint64_t seed = 0;

    void validate() const;  // non-empty grid, trials >= 1
};

/// One SimReport per nash grid cell plus one per self-consistency reference
/// path count. Cells draw independent substreams from the master seed so
/// results do not depend on evaluation order.
std::vector<SimReport> sweep(const SweepConfig& config);

/// Plot-ready delimited table (header + one row per report).
std::string sweep_table_csv(const std::vector<SimReport>& reports, const SweepConfig& config);

}  // namespace nashcot::sim
