#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ce2/env.hpp"
#include "ce2/replay.hpp"
#include "ce2/rng.hpp"
#include "ce2/vec.hpp"

namespace ce2 {

// Distribution over next states given (state, discrete action). Drives
// imagined rollouts and the ensemble-disagreement exploration reward.
class DynamicsModel {
public:
    virtual ~DynamicsModel() = default;
    virtual void fit(const ReplayBuffer& buffer) = 0;
    virtual Vec predict(const Vec& state, int action, Rng& rng) const = 0;
    // variance across ensemble members of the predicted next-state mean,
    // summed over dimensions; r^E(s, a)
    virtual double disagreement(const Vec& state, int action) const = 0;
    virtual const EnvSpec& spec() const = 0;
};

// True environment dynamics behind the model contract; fit is a no-op and
// disagreement is identically zero. Verification substitute for a learned
// model.
class OracleModel : public DynamicsModel {
public:
    explicit OracleModel(EnvSpec spec) : spec_(std::move(spec)) {}
    void fit(const ReplayBuffer& buffer) override;
    Vec predict(const Vec& state, int action, Rng& rng) const override;
    double disagreement(const Vec& state, int action) const override { return 0.0; }
    const EnvSpec& spec() const override { return spec_; }

private:
    EnvSpec spec_;
};

// Ensemble of per-(cell, action) empirical transition tables, each member
// fitted on a bootstrap resample of the buffer. Unobserved entries fall
// back to the identity transition; predicted states are cell centers.
class EnsembleTabularModel : public DynamicsModel {
public:
    EnsembleTabularModel(EnvSpec spec, int ensemble_size = 5, double bootstrap_fraction = 1.0,
                         std::uint64_t seed = 0);

    void fit(const ReplayBuffer& buffer) override;
    Vec predict(const Vec& state, int action, Rng& rng) const override;
    double disagreement(const Vec& state, int action) const override;
    const EnvSpec& spec() const override { return spec_; }

    int ensemble_size() const { return static_cast<int>(members_.size()); }
    bool fitted() const { return fitted_; }
    // (next_cell, probability) entries; empty when the pair is unobserved
    std::vector<std::pair<int, double>> member_distribution(int member, int cell,
                                                            int action) const;

private:
    struct Entry {
        std::vector<int> next_cells;
        std::vector<int> counts;
        int total = 0;
    };
    struct Member {
        std::vector<Entry> table;  // [cell * action_count + action]
    };

    Vec member_mean(const Member& m, int cell, int action) const;

    EnvSpec spec_;
    int ensemble_size_;
    double bootstrap_fraction_;
    std::uint64_t seed_;
    bool fitted_ = false;
    std::vector<Member> members_;
};

using Actor = std::function<int(const Vec& state, Rng& rng)>;

// T model steps driven by the actor; phases tag what the rollout stands in
// for (GoalRollout for goal-conditioned imagination, Explore otherwise).
Trajectory imagine_rollout(const DynamicsModel& model, const Actor& actor, const Vec& start,
                           const std::optional<Vec>& goal, int steps, Phase phase, Rng& rng);

}  // namespace ce2
