#pragma once

// Complementary companion decision making.
//
// decide() walks the decision flow: predict the player's next (kind, region)
// pair; if it is blocked, look for a seen pair whose rollout unblocks it;
// otherwise maybe help with the player's current action, maybe start the
// predicted action in parallel, or pick the seen pair whose rollout scores
// best without making the predicted action impossible. Unseen kinds are the
// last resort, and a final draw may swap any choice for an unseen kind.
//
// Rollouts always run on copies of the state; the caller's state is never
// touched, so decide() can run off the live loop.

#include "comrade/engine.hpp"
#include "comrade/player_model.hpp"
#include "comrade/regions.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace comrade {

struct CompanionConfig {
    double p_help = 0.3;
    double p_parallel = 0.5;
    double p_experiment = 0.1;
    int horizon_ticks = 600;
    int retrain_every = 5;
    int intro_threshold = 20;
    ClassifierKind classifier = DecisionTreeParams{8, 2};
    FeatureConfig features;
    ScoreWeights score_weights;
    int decision_epoch_ticks = 40;
    unsigned rollout_threads = 1;

    // Throws ConfigError. With a game config, also checks that the horizon
    // covers the longest action.
    void validate(const GameConfig* game = nullptr) const;
};

enum class Branch {
    Inactive,
    EnablePredicted,
    HelpCurrent,
    ParallelPredicted,
    BestState,
    LastResortUnseen,
    DefaultBehavior,
    ExperimentOverride,
};

inline constexpr std::size_t kBranchCount = 8;

std::string_view to_string(Branch b);
std::optional<Branch> parse_branch(std::string_view s);

struct Choice {
    enum class Type { NoOp, Default, Pair, Join };
    Type type = Type::NoOp;
    ActionPair pair;                 // Pair and Join
    std::optional<CellPoint> cell;   // Join: the in-progress action's cell

    static Choice noop() { return {}; }
    static Choice fallback() { return {Type::Default, {}, std::nullopt}; }
    static Choice of(ActionPair p) { return {Type::Pair, p, std::nullopt}; }
    static Choice join(ActionPair p, CellPoint c) { return {Type::Join, p, c}; }

    friend bool operator==(const Choice&, const Choice&) = default;
};

struct DecisionOutcome {
    Choice chosen;
    Branch branch = Branch::Inactive;
    // The branch before the experimentation draw; equals `branch` unless an
    // ExperimentOverride replaced the choice.
    Branch base_branch = Branch::Inactive;
    std::int64_t basis_tick = 0;
    std::optional<ActionPair> predicted;
    std::vector<std::pair<std::string, double>> rng_draws;

    nlohmann::json to_json() const;
    friend bool operator==(const DecisionOutcome&, const DecisionOutcome&) = default;
};

struct ActionScore {
    ActionPair pair;
    std::int64_t score = 0;
    bool enables_predicted = false;
};

// Rollout results for every seen pair possible on the basis state, in `seen`
// order.
using ActionScoreMap = std::vector<ActionScore>;

ActionScoreMap score_actions(const GameState& state, const RegionSet& regions,
                             const std::vector<ActionPair>& seen, const ActionPair& predicted,
                             const CompanionConfig& cfg);

// Single rollout: copy, apply the companion action, step the horizon.
GameState rollout(const GameState& state, const RegionSet& regions, const ActionPair& pair,
                  int horizon_ticks);

bool pair_possible(const GameState& state, const RegionSet& regions, const ActionPair& pair);

std::optional<ActionPair> predict_best_state_action(const GameState& state, const RegionSet& regions,
                                                    const std::vector<ActionPair>& seen,
                                                    const ActionPair& predicted,
                                                    const CompanionConfig& cfg);

std::optional<ActionPair> find_enabling_action(const GameState& state, const RegionSet& regions,
                                               const std::vector<ActionPair>& seen,
                                               const ActionPair& predicted,
                                               const CompanionConfig& cfg);

// Join the player's in-progress action; nullopt when there is none or it
// cannot be joined.
std::optional<Choice> help_current(const GameState& state, const RegionSet& regions,
                                   const std::optional<InProgressAction>& player_current);

std::optional<PredictorModel> maybe_retrain(const Trace& trace, const RegionSet& regions,
                                            const CompanionConfig& cfg,
                                            std::size_t last_trained_count);

DecisionOutcome decide(const GameState& state, const Trace& trace, const RegionSet& regions,
                       const PredictorModel* model, const CompanionConfig& cfg, Rng& rng,
                       const std::optional<InProgressAction>& player_current);

// Applies the outcome for the companion. Returns the kind started (or joined),
// nullopt for NoOp/Default. Throws RejectedAction.
std::optional<ActionKind> execute(GameState& state, const RegionSet& regions,
                                  const DecisionOutcome& outcome);

// True when the outcome can still be executed on `state`. Outcomes whose
// basis is within one decision epoch are trusted as-is.
bool still_valid(const GameState& state, const RegionSet& regions, const DecisionOutcome& outcome,
                 const CompanionConfig& cfg);

// Retrains on cadence and decides. Owns the companion's rng and model.
class CompanionAgent {
public:
    CompanionAgent(CompanionConfig cfg, std::uint64_t seed);

    DecisionOutcome think(const GameState& state, const Trace& trace, const RegionSet& regions);

    const CompanionConfig& config() const { return cfg_; }
    const PredictorModel* model() const { return model_.get(); }
    std::size_t last_trained_count() const { return last_trained_; }
    const Rng& rng() const { return rng_; }
    void set_rng(Rng rng) { rng_ = rng; }

private:
    CompanionConfig cfg_;
    Rng rng_;
    std::shared_ptr<const PredictorModel> model_;
    std::size_t last_trained_ = 0;
};

}  // namespace comrade
