#include "comrade/companion.hpp"

#include "comrade/errors.hpp"

#include <algorithm>
#include <thread>

namespace comrade {

void CompanionConfig::validate(const GameConfig* game) const {
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
    };
    prob(p_help, "p_help");
    prob(p_parallel, "p_parallel");
    prob(p_experiment, "p_experiment");
    if (horizon_ticks < 1) throw ConfigError("horizon_ticks must be positive");
    if (retrain_every < 1) throw ConfigError("retrain_every must be positive");
    if (intro_threshold < 2) throw ConfigError("intro_threshold must be >= 2");
    if (decision_epoch_ticks < 1) throw ConfigError("decision_epoch_ticks must be positive");
    if (rollout_threads < 1) throw ConfigError("rollout_threads must be >= 1");
    comrade::validate(classifier);
    if (game && horizon_ticks < game->longest_duration()) {
        throw ConfigError("horizon_ticks must cover the longest action duration");
    }
}

namespace {

constexpr std::array<std::string_view, kBranchCount> kBranchNames = {
    "Inactive",  "EnablePredicted",  "HelpCurrent",     "ParallelPredicted",
    "BestState", "LastResortUnseen", "DefaultBehavior", "ExperimentOverride",
};

}  // namespace

std::string_view to_string(Branch b) { return kBranchNames[static_cast<std::size_t>(b)]; }

std::optional<Branch> parse_branch(std::string_view s) {
    for (std::size_t i = 0; i < kBranchNames.size(); ++i) {
        if (kBranchNames[i] == s) return static_cast<Branch>(i);
    }
    return std::nullopt;
}

nlohmann::json DecisionOutcome::to_json() const {
    nlohmann::json j;
    j["branch"] = std::string(to_string(branch));
    j["base_branch"] = std::string(to_string(base_branch));
    j["basis_tick"] = basis_tick;
    switch (chosen.type) {
        case Choice::Type::NoOp: j["chosen"] = "NoOp"; break;
        case Choice::Type::Default: j["chosen"] = "Default"; break;
        case Choice::Type::Pair:
        case Choice::Type::Join: {
            nlohmann::json c{{"kind", std::string(to_string(chosen.pair.kind))},
                             {"region", chosen.pair.region}};
            if (chosen.cell) c["join"] = {chosen.cell->x, chosen.cell->y};
            j["chosen"] = c;
            break;
        }
    }
    if (predicted) {
        j["predicted"] = {{"kind", std::string(to_string(predicted->kind))},
                          {"region", predicted->region}};
    }
    auto draws = nlohmann::json::array();
    for (const auto& [label, v] : rng_draws) draws.push_back({label, v});
    j["rng_draws"] = draws;
    return j;
}

// ---------------------------------------------------------------------------
// Rollouts

bool pair_possible(const GameState& state, const RegionSet& regions, const ActionPair& pair) {
    if (pair.region >= regions.size()) return false;
    return is_possible(state, pair.kind, regions.bounds(pair.region));
}

GameState rollout(const GameState& state, const RegionSet& regions, const ActionPair& pair,
                  int horizon_ticks) {
    GameState clone = state;
    set_speed(clone, clone.cfg().max_speed);
    apply_action(clone, Actor::Companion, pair.kind, regions.bounds(pair.region));
    step(clone, horizon_ticks);
    return clone;
}

ActionScoreMap score_actions(const GameState& state, const RegionSet& regions,
                             const std::vector<ActionPair>& seen, const ActionPair& predicted,
                             const CompanionConfig& cfg) {
    std::vector<ActionPair> candidates;
    for (const auto& p : seen) {
        if (pair_possible(state, regions, p)) candidates.push_back(p);
    }
    ActionScoreMap out(candidates.size());
    auto run = [&](std::size_t i) {
        const auto end = rollout(state, regions, candidates[i], cfg.horizon_ticks);
        out[i] = {candidates[i], score(end, cfg.score_weights), pair_possible(end, regions, predicted)};
    };
    const auto threads = std::min<std::size_t>(cfg.rollout_threads, candidates.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < candidates.size(); ++i) run(i);
        return out;
    }
    // Each worker owns a strided slice of `out`; clones share nothing mutable.
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
            for (std::size_t i = t; i < candidates.size(); i += threads) run(i);
        });
    }
    workers.clear();
    return out;
}

namespace {

std::optional<ActionPair> argmax(const ActionScoreMap& scores, bool require_enables) {
    const ActionScore* best = nullptr;
    for (const auto& s : scores) {
        if (require_enables && !s.enables_predicted) continue;
        if (!best || s.score > best->score) best = &s;
    }
    return best ? std::optional(best->pair) : std::nullopt;
}

}  // namespace

std::optional<ActionPair> predict_best_state_action(const GameState& state, const RegionSet& regions,
                                                    const std::vector<ActionPair>& seen,
                                                    const ActionPair& predicted,
                                                    const CompanionConfig& cfg) {
    // Pairs that leave the predicted action impossible are dropped.
    return argmax(score_actions(state, regions, seen, predicted, cfg), true);
}

std::optional<ActionPair> find_enabling_action(const GameState& state, const RegionSet& regions,
                                               const std::vector<ActionPair>& seen,
                                               const ActionPair& predicted,
                                               const CompanionConfig& cfg) {
    return argmax(score_actions(state, regions, seen, predicted, cfg), true);
}

std::optional<Choice> help_current(const GameState& state, const RegionSet& regions,
                                   const std::optional<InProgressAction>& player_current) {
    if (!player_current || player_current->actor != Actor::Player) return std::nullopt;
    if (state.busy(Actor::Companion)) return std::nullopt;
    if (!can_join(state, Actor::Companion, player_current->cell)) return std::nullopt;
    return Choice::join({player_current->kind, regions.lookup(player_current->cell)},
                        player_current->cell);
}

std::optional<PredictorModel> maybe_retrain(const Trace& trace, const RegionSet& regions,
                                            const CompanionConfig& cfg,
                                            std::size_t last_trained_count) {
    if (trace.empty() || trace.size() < last_trained_count + static_cast<std::size_t>(cfg.retrain_every)) {
        return std::nullopt;
    }
    return train(trace, regions, cfg.classifier, cfg.features);
}

// ---------------------------------------------------------------------------
// Decision flow

namespace {

// Uniformly picks a possible unseen kind in a randomly sampled region.
std::optional<ActionPair> random_unseen(const GameState& state, const RegionSet& regions,
                                        const std::vector<ActionKind>& unseen, Rng& rng,
                                        const std::string& label, DecisionOutcome& out) {
    if (unseen.empty()) return std::nullopt;
    const RegionId region = regions.sample(rng);
    out.rng_draws.emplace_back(label + "_region", static_cast<double>(region));
    std::vector<ActionKind> possible;
    for (auto k : unseen) {
        if (is_possible(state, k, regions.bounds(region))) possible.push_back(k);
    }
    if (possible.empty()) return std::nullopt;
    const auto pick = possible.size() == 1 ? 0 : rng.below(possible.size());
    out.rng_draws.emplace_back(label + "_pick", static_cast<double>(pick));
    return ActionPair{possible[pick], region};
}

void best_state_or_fallback(const GameState& state, const Trace& trace, const RegionSet& regions,
                            const ActionPair& predicted, const CompanionConfig& cfg, Rng& rng,
                            DecisionOutcome& out, const ActionScoreMap* scored = nullptr) {
    const auto best = scored ? argmax(*scored, true)
                             : predict_best_state_action(state, regions, seen_pairs(trace, regions),
                                                         predicted, cfg);
    if (best) {
        out.branch = Branch::BestState;
        out.chosen = Choice::of(*best);
        return;
    }
    // Experimentation disabled (p_experiment == 0) also disables unseen kinds
    // as a last resort.
    if (cfg.p_experiment > 0.0) {
        if (const auto p = random_unseen(state, regions, unseen_actions(trace), rng, "last_resort", out)) {
            out.branch = Branch::LastResortUnseen;
            out.chosen = Choice::of(*p);
            return;
        }
    }
    out.branch = Branch::DefaultBehavior;
    out.chosen = Choice::fallback();
}

}  // namespace

DecisionOutcome decide(const GameState& state, const Trace& trace, const RegionSet& regions,
                       const PredictorModel* model, const CompanionConfig& cfg, Rng& rng,
                       const std::optional<InProgressAction>& player_current) {
    DecisionOutcome out;
    out.basis_tick = state.tick;
    if (!model || trace.size() < static_cast<std::size_t>(cfg.intro_threshold)) {
        out.branch = out.base_branch = Branch::Inactive;
        return out;
    }

    const auto predicted = predict_next(*model, feature_vector(state, FeatureConfig{}));
    out.predicted = predicted;

    if (!pair_possible(state, regions, predicted)) {
        // The enabling search and the jeopardy filter keep the same pairs, so
        // one set of rollouts serves both.
        const auto scored = score_actions(state, regions, seen_pairs(trace, regions), predicted, cfg);
        if (const auto e = argmax(scored, true)) {
            out.branch = Branch::EnablePredicted;
            out.chosen = Choice::of(*e);
        } else {
            best_state_or_fallback(state, trace, regions, predicted, cfg, rng, out, &scored);
        }
    } else {
        const double u1 = rng.uniform();
        out.rng_draws.emplace_back("help", u1);
        const auto help = u1 < cfg.p_help ? help_current(state, regions, player_current) : std::nullopt;
        if (help) {
            out.branch = Branch::HelpCurrent;
            out.chosen = *help;
        } else {
            const double u2 = rng.uniform();
            out.rng_draws.emplace_back("parallel", u2);
            if (u2 < cfg.p_parallel) {
                out.branch = Branch::ParallelPredicted;
                out.chosen = Choice::of(predicted);
            } else {
                best_state_or_fallback(state, trace, regions, predicted, cfg, rng, out);
            }
        }
    }
    out.base_branch = out.branch;

    const double u3 = rng.uniform();
    out.rng_draws.emplace_back("experiment", u3);
    if (u3 < cfg.p_experiment) {
        if (const auto p = random_unseen(state, regions, unseen_actions(trace), rng, "experiment", out)) {
            out.branch = Branch::ExperimentOverride;
            out.chosen = Choice::of(*p);
        }
    }
    return out;
}

std::optional<ActionKind> execute(GameState& state, const RegionSet& regions,
                                  const DecisionOutcome& outcome) {
    switch (outcome.chosen.type) {
        case Choice::Type::NoOp:
        case Choice::Type::Default:
            return std::nullopt;
        case Choice::Type::Join:
            join_action(state, Actor::Companion, *outcome.chosen.cell);
            return outcome.chosen.pair.kind;
        case Choice::Type::Pair:
            if (outcome.chosen.pair.region >= regions.size()) throw RejectedAction("unknown region");
            apply_action(state, Actor::Companion, outcome.chosen.pair.kind,
                         regions.bounds(outcome.chosen.pair.region));
            return outcome.chosen.pair.kind;
    }
    return std::nullopt;
}

bool still_valid(const GameState& state, const RegionSet& regions, const DecisionOutcome& outcome,
                 const CompanionConfig& cfg) {
    if (state.tick - outcome.basis_tick <= cfg.decision_epoch_ticks) return true;
    switch (outcome.chosen.type) {
        case Choice::Type::NoOp:
        case Choice::Type::Default:
            return true;
        case Choice::Type::Join:
            return can_join(state, Actor::Companion, *outcome.chosen.cell);
        case Choice::Type::Pair:
            return pair_possible(state, regions, outcome.chosen.pair);
    }
    return false;
}

// ---------------------------------------------------------------------------

CompanionAgent::CompanionAgent(CompanionConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed) {
    cfg_.validate();
}

DecisionOutcome CompanionAgent::think(const GameState& state, const Trace& trace,
                                      const RegionSet& regions) {
    if (auto m = maybe_retrain(trace, regions, cfg_, last_trained_)) {
        model_ = std::make_shared<const PredictorModel>(std::move(*m));
        last_trained_ = trace.size();
    }
    std::optional<InProgressAction> current;
    if (const auto* a = state.current_action(Actor::Player)) current = *a;
    return decide(state, trace, regions, model_.get(), cfg_, rng_, current);
}

}  // namespace comrade
