#include "nashcot/simulator.hpp"

#include <cmath>
#include <sstream>

namespace nashcot::sim {

namespace {

// splitmix64 stream; every uniform draw consumes one step, so replay is
// byte-stable across platforms (no std::distribution involvement).
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t x = (state += 0x9e3779b97f4a7c15ULL);
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed ^ (0xd1b54a32d192ed03ULL * (index + 1)));
    return rng.next();
}

// Draw a label: 0 with probability p_correct, otherwise uniform over the
// m - 1 wrong labels.
int draw_label(Rng& rng, int alphabet, double p_correct) {
    double u = rng.uniform();
    if (u < p_correct) return 0;
    if (p_correct >= 1.0) return 0;
    double rest = (u - p_correct) / (1.0 - p_correct);
    int wrong = static_cast<int>(rest * (alphabet - 1));
    if (wrong >= alphabet - 1) wrong = alphabet - 2;
    return 1 + wrong;
}

std::vector<CanonicalAnswer> label_answers(int alphabet) {
    std::vector<CanonicalAnswer> answers;
    answers.reserve(alphabet);
    for (int label = 0; label < alphabet; ++label) {
        answers.push_back(CanonicalAnswer{TaskKind::FreeForm, std::to_string(label)});
    }
    return answers;
}

double half_width(double accuracy, std::int64_t trials) {
    return 1.96 * std::sqrt(accuracy * (1.0 - accuracy) / static_cast<double>(trials));
}

}  // namespace

void PathModel::validate() const {
    if (alphabet < 2) throw std::invalid_argument("path model: alphabet must be >= 2");
    if (!(p_correct >= 0.0 && p_correct <= 1.0))
        throw std::invalid_argument("path model: p_correct must be in [0, 1]");
}

void TemplateModel::validate() const {
    for (double p : {p_match, p_correct_guided, p_correct_misled}) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("template model: probabilities must be in [0, 1]");
    }
}

bool SimReport::ci_overlaps(const SimReport& other) const {
    return std::abs(accuracy - other.accuracy) <= ci_half_width + other.ci_half_width;
}

double exact_vote_accuracy(const PathModel& model, int k) {
    model.validate();
    if (k < 1) throw std::invalid_argument("exact_vote_accuracy: k must be >= 1");
    if (k > 12 || model.alphabet > 6)
        throw BoundExceeded("exact_vote_accuracy: enumeration bounded to k <= 12, alphabet <= 6");

    const int m = model.alphabet;
    const double p0 = model.p_correct;
    const double pw = m > 1 ? (1.0 - p0) / (m - 1) : 0.0;

    // log-factorials for multinomial coefficients
    std::vector<double> log_fact(k + 1, 0.0);
    for (int i = 2; i <= k; ++i) log_fact[i] = log_fact[i - 1] + std::log(static_cast<double>(i));

    double total = 0.0;
    std::vector<int> counts(m, 0);
    auto recurse = [&](auto&& self, int label, int remaining) -> void {
        if (label == m - 1) {
            counts[label] = remaining;
            int max_count = 0;
            for (int c : counts) max_count = std::max(max_count, c);
            if (counts[0] == max_count && max_count > 0) {
                double log_prob = log_fact[k];
                for (int i = 0; i < m; ++i) {
                    log_prob -= log_fact[counts[i]];
                    double p = i == 0 ? p0 : pw;
                    if (counts[i] > 0) {
                        if (p <= 0.0) return;
                        log_prob += counts[i] * std::log(p);
                    }
                }
                int tied = 0;
                for (int c : counts) tied += (c == max_count) ? 1 : 0;
                total += std::exp(log_prob) / tied;
            }
            return;
        }
        for (int c = 0; c <= remaining; ++c) {
            counts[label] = c;
            self(self, label + 1, remaining - c);
        }
    };
    recurse(recurse, 0, k);
    return total;
}

SimReport simulate_self_consistency(const PathModel& model, int k, std::int64_t trials,
                                    std::uint64_t seed) {
    model.validate();
    if (k < 1) throw std::invalid_argument("simulate: k must be >= 1");
    if (trials < 1) throw std::invalid_argument("simulate: trials must be >= 1");

    const std::vector<CanonicalAnswer> labels = label_answers(model.alphabet);
    Rng rng(derive(seed, 0x5c));
    std::vector<std::optional<CanonicalAnswer>> answers(k);
    std::int64_t correct = 0;
    for (std::int64_t trial = 0; trial < trials; ++trial) {
        for (int path = 0; path < k; ++path) {
            answers[path] = labels[draw_label(rng, model.alphabet, model.p_correct)];
        }
        auto winner = majority_vote(answers);
        if (winner && canonical_equal(*winner, labels[0])) ++correct;
    }

    SimReport report;
    report.strategy = "self-consistency";
    report.path_budget = k;
    report.trials = trials;
    report.accuracy = static_cast<double>(correct) / static_cast<double>(trials);
    report.ci_half_width = half_width(report.accuracy, trials);
    report.seed = seed;
    return report;
}

SimReport simulate_nash(const PathModel& model, const TemplateModel& tmpl, int n_outer,
                        int n_mini, std::int64_t trials, std::uint64_t seed) {
    model.validate();
    tmpl.validate();
    if (n_outer < 1 || n_mini < 1)
        throw std::invalid_argument("simulate: n_outer and n_mini must be >= 1");
    if (trials < 1) throw std::invalid_argument("simulate: trials must be >= 1");

    const std::vector<CanonicalAnswer> labels = label_answers(model.alphabet);
    Rng rng(derive(seed, 0x4e));

    std::vector<Trajectory> trajectories(n_outer);
    for (auto& t : trajectories) t.batch.resize(n_mini);

    std::int64_t correct = 0;
    for (std::int64_t trial = 0; trial < trials; ++trial) {
        // suitability resolves once per question, before any path runs
        bool suited = rng.uniform() < tmpl.p_match;
        double p_guided = suited ? tmpl.p_correct_guided : tmpl.p_correct_misled;
        for (int outer = 0; outer < n_outer; ++outer) {
            Trajectory& t = trajectories[outer];
            for (int mini = 0; mini < n_mini; ++mini) {
                PathRecord& record = t.batch[mini];
                record.answer = labels[draw_label(rng, model.alphabet, model.p_correct)];
                record.status = ExtractStatus::Ok;
            }
            t.guided.answer = labels[draw_label(rng, model.alphabet, p_guided)];
            t.guided.status = ExtractStatus::Ok;
        }
        auto winner = filter(trajectories);
        if (winner && canonical_equal(*winner, labels[0])) ++correct;
    }

    SimReport report;
    report.strategy = "nash-cot";
    report.n_outer = n_outer;
    report.n_mini = n_mini;
    report.path_budget = n_outer * (n_mini + 1) + 1;
    report.trials = trials;
    report.accuracy = static_cast<double>(correct) / static_cast<double>(trials);
    report.ci_half_width = half_width(report.accuracy, trials);
    report.seed = seed;
    return report;
}

void SweepConfig::validate() const {
    path_model.validate();
    template_model.validate();
    if (outer_values.empty() && mini_values.empty() && sc_reference_paths.empty())
        throw std::invalid_argument("sweep: empty grid");
    if ((outer_values.empty()) != (mini_values.empty()))
        throw std::invalid_argument("sweep: outer and mini ranges must both be set or both empty");
    if (trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");
    for (int v : outer_values)
        if (v < 1) throw std::invalid_argument("sweep: n_outer values must be >= 1");
    for (int v : mini_values)
        if (v < 1) throw std::invalid_argument("sweep: n_mini values must be >= 1");
    for (int v : sc_reference_paths)
        if (v < 1) throw std::invalid_argument("sweep: sc path counts must be >= 1");
}

std::vector<SimReport> sweep(const SweepConfig& config) {
    config.validate();
    std::vector<SimReport> reports;
    std::uint64_t cell = 0;
    for (int outer : config.outer_values) {
        for (int mini : config.mini_values) {
            reports.push_back(simulate_nash(config.path_model, config.template_model, outer, mini,
                                            config.trials, derive(config.seed, ++cell)));
        }
    }
    for (int k : config.sc_reference_paths) {
        reports.push_back(simulate_self_consistency(config.path_model, k, config.trials,
                                                    derive(config.seed, ++cell)));
    }
    return reports;
}

std::string sweep_table_csv(const std::vector<SimReport>& reports, const SweepConfig& config) {
    std::ostringstream out;
    out << "strategy,n_outer,n_mini,path_budget,trials,accuracy,ci_half_width,seed,"
           "alphabet,p_correct,p_guided,p_match,p_misled\n";
    for (const auto& r : reports) {
        out << r.strategy << ',' << r.n_outer << ',' << r.n_mini << ',' << r.path_budget << ','
            << r.trials << ',' << r.accuracy << ',' << r.ci_half_width << ',' << r.seed << ','
            << config.path_model.alphabet << ',' << config.path_model.p_correct << ','
            << config.template_model.p_correct_guided << ',' << config.template_model.p_match
            << ',' << config.template_model.p_correct_misled << '\n';
    }
    return out.str();
}

}  // namespace nashcot::sim
