#include "ce2/model.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace ce2 {

void OracleModel::fit(const ReplayBuffer& buffer) {
    if (buffer.empty(Partition::All)) throw std::runtime_error("fit: empty buffer");
}

Vec OracleModel::predict(const Vec& state, int action, Rng& /*rng*/) const {
    return transition(spec_, state, action_vector(spec_, action));
}

EnsembleTabularModel::EnsembleTabularModel(EnvSpec spec, int ensemble_size,
                                           double bootstrap_fraction, std::uint64_t seed)
    : spec_(std::move(spec)),
      ensemble_size_(ensemble_size),
      bootstrap_fraction_(bootstrap_fraction),
      seed_(seed) {
    if (ensemble_size_ < 1) throw std::invalid_argument("EnsembleTabularModel: ensemble_size >= 1");
    if (bootstrap_fraction_ <= 0.0) {
        throw std::invalid_argument("EnsembleTabularModel: bootstrap_fraction must be > 0");
    }
}

void EnsembleTabularModel::fit(const ReplayBuffer& buffer) {
    if (buffer.empty(Partition::All)) throw std::runtime_error("fit: empty buffer");

    struct Transition {
        int cell;
        int action;
        int next_cell;
    };
    std::vector<Transition> transitions;
    for (std::size_t i = 0; i < buffer.size(Partition::All); ++i) {
        const Trajectory& t = buffer.trajectory(Partition::All, i);
        for (int s = 0; s < t.length(); ++s) {
            transitions.push_back({discretize(t.states[static_cast<std::size_t>(s)], spec_),
                                   action_index(spec_, t.actions[static_cast<std::size_t>(s)]),
                                   discretize(t.states[static_cast<std::size_t>(s) + 1], spec_)});
        }
    }

    const std::size_t n_entries =
        static_cast<std::size_t>(spec_.walls.cell_count()) * spec_.action_count;
    members_.assign(static_cast<std::size_t>(ensemble_size_), Member{});
    const std::size_t draws = transitions.empty()
                                  ? 0
                                  : std::max<std::size_t>(
                                        1, static_cast<std::size_t>(bootstrap_fraction_ *
                                                                    transitions.size()));
    for (int b = 0; b < ensemble_size_; ++b) {
        Member& m = members_[static_cast<std::size_t>(b)];
        m.table.assign(n_entries, Entry{});
        if (transitions.empty()) continue;
        Rng rng = make_rng(derive_seed(seed_, 1000 + static_cast<std::uint64_t>(b)));
        std::vector<std::map<int, int>> counts(n_entries);
        for (std::size_t d = 0; d < draws; ++d) {
            const Transition& tr =
                transitions[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(transitions.size())))];
            counts[static_cast<std::size_t>(tr.cell) * spec_.action_count + tr.action][tr.next_cell]++;
        }
        for (std::size_t e = 0; e < n_entries; ++e) {
            Entry& entry = m.table[e];
            for (const auto& [next, c] : counts[e]) {
                entry.next_cells.push_back(next);
                entry.counts.push_back(c);
                entry.total += c;
            }
        }
    }
    fitted_ = true;
}

Vec EnsembleTabularModel::predict(const Vec& state, int action, Rng& rng) const {
    const int cell = discretize(state, spec_);
    if (action < 0 || action >= spec_.action_count) {
        throw std::invalid_argument("predict: action index out of range");
    }
    if (!fitted_) return cell_center(spec_, cell);
    const Member& m =
        members_[static_cast<std::size_t>(uniform_index(rng, ensemble_size_))];
    const Entry& entry = m.table[static_cast<std::size_t>(cell) * spec_.action_count + action];
    if (entry.total == 0) return cell_center(spec_, cell);  // identity fallback
    int pick = uniform_index(rng, entry.total);
    for (std::size_t i = 0; i < entry.next_cells.size(); ++i) {
        pick -= entry.counts[i];
        if (pick < 0) return cell_center(spec_, entry.next_cells[i]);
    }
    return cell_center(spec_, entry.next_cells.back());
}

Vec EnsembleTabularModel::member_mean(const Member& m, int cell, int action) const {
    const Entry& entry = m.table[static_cast<std::size_t>(cell) * spec_.action_count + action];
    if (entry.total == 0) return cell_center(spec_, cell);
    Vec mean(static_cast<std::size_t>(spec_.state_dim), 0.0);
    for (std::size_t i = 0; i < entry.next_cells.size(); ++i) {
        const Vec c = cell_center(spec_, entry.next_cells[i]);
        const double p = static_cast<double>(entry.counts[i]) / entry.total;
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += p * c[d];
    }
    return mean;
}

double EnsembleTabularModel::disagreement(const Vec& state, int action) const {
    const int cell = discretize(state, spec_);
    if (action < 0 || action >= spec_.action_count) {
        throw std::invalid_argument("disagreement: action index out of range");
    }
    if (!fitted_ || members_.size() == 1) return 0.0;
    std::vector<Vec> means;
    means.reserve(members_.size());
    for (const auto& m : members_) means.push_back(member_mean(m, cell, action));
    double total = 0.0;
    for (int d = 0; d < spec_.state_dim; ++d) {
        double mu = 0.0;
        for (const auto& m : means) mu += m[static_cast<std::size_t>(d)];
        mu /= static_cast<double>(means.size());
        double var = 0.0;
        for (const auto& m : means) {
            const double diff = m[static_cast<std::size_t>(d)] - mu;
            var += diff * diff;
        }
        total += var / static_cast<double>(means.size());
    }
    return total;
}

std::vector<std::pair<int, double>> EnsembleTabularModel::member_distribution(int member,
                                                                              int cell,
                                                                              int action) const {
    const Entry& entry = members_.at(static_cast<std::size_t>(member))
                             .table.at(static_cast<std::size_t>(cell) * spec_.action_count + action);
    std::vector<std::pair<int, double>> out;
    for (std::size_t i = 0; i < entry.next_cells.size(); ++i) {
        out.emplace_back(entry.next_cells[i],
                         static_cast<double>(entry.counts[i]) / entry.total);
    }
    return out;
}

Trajectory imagine_rollout(const DynamicsModel& model, const Actor& actor, const Vec& start,
                           const std::optional<Vec>& goal, int steps, Phase phase, Rng& rng) {
    if (steps < 1) throw std::invalid_argument("imagine_rollout: steps must be >= 1");
    Trajectory t;
    t.goal_command = goal;
    t.states.reserve(static_cast<std::size_t>(steps) + 1);
    t.states.push_back(start);
    for (int i = 0; i < steps; ++i) {
        const Vec& s = t.states.back();
        const int a = actor(s, rng);
        t.states.push_back(model.predict(s, a, rng));
        t.actions.push_back(action_vector(model.spec(), a));
        t.phases.push_back(phase);
    }
    return t;
}

}  // namespace ce2
