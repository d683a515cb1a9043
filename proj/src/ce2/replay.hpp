#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ce2/env.hpp"
#include "ce2/rng.hpp"
#include "ce2/vec.hpp"

namespace ce2 {

enum class Phase : std::uint8_t { Go, Explore, GoalRollout };

const char* phase_name(Phase p);
Phase phase_from_name(const std::string& name);

struct Trajectory {
    std::vector<Vec> states;
    std::vector<ActionVec> actions;
    std::vector<Phase> phases;  // one tag per action step
    std::optional<Vec> goal_command;

    int length() const { return static_cast<int>(actions.size()); }
    // len(states) == len(actions)+1, phases aligned with actions, and all Go
    // steps precede all Explore steps.
    void validate() const;
};

enum class Partition { All, Exp, Egc };

Partition partition_from_string(const std::string& name);  // throws on unknown
const char* partition_name(Partition p);

struct StatePair {
    Vec first;
    Vec second;
    int k = 0;
};

// FIFO trajectory store with the named views D, D_exp, D_egc
// (D is a superset of both).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 10000);

    void append(Trajectory trajectory, Partition partition);

    std::size_t size(Partition p) const;
    std::size_t total_states(Partition p) const;
    bool empty(Partition p) const { return size(p) == 0; }
    const Trajectory& trajectory(Partition p, std::size_t i) const;
    std::size_t capacity() const { return capacity_; }

    // n states drawn uniformly (with replacement) over all stored states
    std::vector<Vec> sample_state_batch(Partition p, int n, Rng& rng) const;
    // most recent min(n, size) trajectories, oldest first
    std::vector<const Trajectory*> sample_recent_batch(Partition p, int n) const;
    // (s_t, s_{t+k}) pairs from a single trajectory, k uniform in
    // [0, min(k_max, steps remaining after t)]
    std::vector<StatePair> sample_pair_batch(Partition p, int n, int k_max, Rng& rng) const;

    void dump_jsonl(std::ostream& out) const;
    static ReplayBuffer restore_jsonl(std::istream& in, std::size_t capacity = 10000);

private:
    using TrajPtr = std::shared_ptr<const Trajectory>;
    const std::deque<TrajPtr>& view(Partition p) const;

    std::size_t capacity_;
    std::deque<TrajPtr> all_;
    std::deque<TrajPtr> exp_;
    std::deque<TrajPtr> egc_;
};

}  // namespace ce2
