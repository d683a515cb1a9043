#include "ce2/replay.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace ce2 {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Go: return "go";
        case Phase::Explore: return "explore";
        case Phase::GoalRollout: return "goal_rollout";
    }
    return "?";
}

Phase phase_from_name(const std::string& name) {
    if (name == "go") return Phase::Go;
    if (name == "explore") return Phase::Explore;
    if (name == "goal_rollout") return Phase::GoalRollout;
    throw std::invalid_argument("unknown phase: " + name);
}

void Trajectory::validate() const {
    if (states.size() != actions.size() + 1) {
        throw std::invalid_argument("Trajectory: states must be actions+1");
    }
    if (phases.size() != actions.size()) {
        throw std::invalid_argument("Trajectory: phases must align with actions");
    }
    bool seen_explore = false;
    for (Phase p : phases) {
        if (p == Phase::Explore) seen_explore = true;
        if (p == Phase::Go && seen_explore) {
            throw std::invalid_argument("Trajectory: Go step after Explore step");
        }
    }
    for (const auto& s : states) {
        if (!all_finite(s)) throw std::invalid_argument("Trajectory: non-finite state");
    }
}

Partition partition_from_string(const std::string& name) {
    if (name == "all" || name == "D") return Partition::All;
    if (name == "exp" || name == "D_exp") return Partition::Exp;
    if (name == "egc" || name == "D_egc") return Partition::Egc;
    throw std::invalid_argument("unknown partition: " + name);
}

const char* partition_name(Partition p) {
    switch (p) {
        case Partition::All: return "all";
        case Partition::Exp: return "exp";
        case Partition::Egc: return "egc";
    }
    return "?";
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
}

const std::deque<ReplayBuffer::TrajPtr>& ReplayBuffer::view(Partition p) const {
    switch (p) {
        case Partition::All: return all_;
        case Partition::Exp: return exp_;
        case Partition::Egc: return egc_;
    }
    throw std::invalid_argument("unknown partition");
}

void ReplayBuffer::append(Trajectory trajectory, Partition partition) {
    trajectory.validate();
    auto ptr = std::make_shared<const Trajectory>(std::move(trajectory));
    all_.push_back(ptr);
    if (partition == Partition::Exp) exp_.push_back(ptr);
    if (partition == Partition::Egc) egc_.push_back(ptr);
    if (all_.size() > capacity_) {
        const TrajPtr& victim = all_.front();
        if (!exp_.empty() && exp_.front() == victim) exp_.pop_front();
        if (!egc_.empty() && egc_.front() == victim) egc_.pop_front();
        all_.pop_front();
    }
}

std::size_t ReplayBuffer::size(Partition p) const { return view(p).size(); }

std::size_t ReplayBuffer::total_states(Partition p) const {
    std::size_t n = 0;
    for (const auto& t : view(p)) n += t->states.size();
    return n;
}

const Trajectory& ReplayBuffer::trajectory(Partition p, std::size_t i) const {
    return *view(p).at(i);
}

std::vector<Vec> ReplayBuffer::sample_state_batch(Partition p, int n, Rng& rng) const {
    const auto& v = view(p);
    if (v.empty()) throw std::runtime_error("sample_state_batch: empty partition");
    std::vector<std::size_t> prefix(v.size() + 1, 0);
    for (std::size_t i = 0; i < v.size(); ++i) prefix[i + 1] = prefix[i] + v[i]->states.size();
    const std::size_t total = prefix.back();
    std::vector<Vec> batch;
    batch.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(
            std::uniform_int_distribution<std::size_t>(0, total - 1)(rng));
        const auto it = std::upper_bound(prefix.begin(), prefix.end(), idx);
        const std::size_t traj = static_cast<std::size_t>(it - prefix.begin()) - 1;
        batch.push_back(v[traj]->states[idx - prefix[traj]]);
    }
    return batch;
}

std::vector<const Trajectory*> ReplayBuffer::sample_recent_batch(Partition p, int n) const {
    const auto& v = view(p);
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(n, 0)), v.size());
    std::vector<const Trajectory*> out;
    out.reserve(take);
    for (std::size_t i = v.size() - take; i < v.size(); ++i) out.push_back(v[i].get());
    return out;
}

std::vector<StatePair> ReplayBuffer::sample_pair_batch(Partition p, int n, int k_max,
                                                       Rng& rng) const {
    const auto& v = view(p);
    if (v.empty()) throw std::runtime_error("sample_pair_batch: empty partition");
    if (k_max < 0) throw std::invalid_argument("sample_pair_batch: k_max must be >= 0");
    std::vector<StatePair> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& traj = *v[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(v.size())))];
        const int last = static_cast<int>(traj.states.size()) - 1;
        const int t = uniform_index(rng, last + 1);
        const int k = uniform_index(rng, std::min(k_max, last - t) + 1);
        out.push_back({traj.states[static_cast<std::size_t>(t)],
                       traj.states[static_cast<std::size_t>(t + k)], k});
    }
    return out;
}

void ReplayBuffer::dump_jsonl(std::ostream& out) const {
    for (const auto& t : all_) {
        nlohmann::json j;
        j["states"] = t->states;
        nlohmann::json acts = nlohmann::json::array();
        for (const auto& a : t->actions) acts.push_back(a.values);
        j["actions"] = std::move(acts);
        nlohmann::json phases = nlohmann::json::array();
        for (Phase p : t->phases) phases.push_back(phase_name(p));
        j["phases"] = std::move(phases);
        if (t->goal_command) {
            j["goal"] = *t->goal_command;
        } else {
            j["goal"] = nullptr;
        }
        bool in_exp = std::find(exp_.begin(), exp_.end(), t) != exp_.end();
        bool in_egc = std::find(egc_.begin(), egc_.end(), t) != egc_.end();
        j["partition"] = in_exp ? "exp" : (in_egc ? "egc" : "all");
        out << j.dump() << '\n';
    }
}

ReplayBuffer ReplayBuffer::restore_jsonl(std::istream& in, std::size_t capacity) {
    ReplayBuffer buf(capacity);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        Trajectory t;
        t.states = j.at("states").get<std::vector<Vec>>();
        for (const auto& a : j.at("actions")) t.actions.push_back({a.get<Vec>()});
        for (const auto& p : j.at("phases")) t.phases.push_back(phase_from_name(p.get<std::string>()));
        if (!j.at("goal").is_null()) t.goal_command = j.at("goal").get<Vec>();
        buf.append(std::move(t), partition_from_string(j.at("partition").get<std::string>()));
    }
    return buf;
}

}  // namespace ce2
