#pragma once

// Player trace recording and next-action prediction.

#include "comrade/classifier.hpp"
#include "comrade/features.hpp"
#include "comrade/regions.hpp"
#include "comrade/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace comrade {

struct TraceEntry {
    StateVector sv;  // full feature vector at action start
    ActionKind kind = ActionKind::BuildTower;
    CellPoint point;
    std::int64_t tick = 0;

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

// Append-only, strictly tick-ordered record of the player's actions.
class Trace {
public:
    // Throws DomainError on Idle or a tick not after the last one.
    void record(StateVector sv, ActionKind kind, CellPoint point, std::int64_t tick);

    const std::vector<TraceEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const TraceEntry& operator[](std::size_t i) const { return entries_[i]; }

    // First n entries.
    Trace prefix(std::size_t n) const;

    friend bool operator==(const Trace&, const Trace&) = default;

private:
    std::vector<TraceEntry> entries_;
};

// JSON Lines: {"tick":..,"kind":"..","x":..,"y":..,"sv":[..]} per entry.
void write_trace_jsonl(std::ostream& out, const Trace& trace);
// Throws ParseError carrying the 1-based line number.
Trace read_trace_jsonl(std::istream& in);

class PredictorModel {
public:
    PredictorModel(Classifier kind_head, Classifier region_head, std::int64_t trained_at_tick,
                   std::size_t trained_on);

    ActionPair predict(const StateVector& full) const;

    const Classifier& kind_head() const { return kind_head_; }
    const Classifier& region_head() const { return region_head_; }
    const FeatureConfig& features() const { return kind_head_.features(); }
    std::int64_t trained_at_tick() const { return trained_at_tick_; }
    std::size_t trained_on() const { return trained_on_; }

    nlohmann::json to_json() const;

private:
    Classifier kind_head_;
    Classifier region_head_;
    std::int64_t trained_at_tick_;
    std::size_t trained_on_;
};

// Region labels come from looking up each stored point in `regions` as it is
// now. Throws InsufficientData on an empty trace.
PredictorModel train(const Trace& trace, const RegionSet& regions, const ClassifierKind& kind,
                     const FeatureConfig& features);

ActionPair predict_next(const PredictorModel& model, const StateVector& full);

struct Candidate {
    ClassifierKind classifier;
    FeatureConfig features;
};

struct CandidateScore {
    std::size_t candidate = 0;
    std::vector<double> window_accuracy;
    double accuracy = 0.0;
};

struct Evaluation {
    std::size_t best = 0;
    std::vector<CandidateScore> table;  // one row per candidate, in input order
};

// Forward-chained evaluation: train on the first 50/65/80% of the trace,
// test kind prediction on the following 15%, average the three windows.
// Ties go to the earlier candidate. Needs >= 10 entries.
Evaluation evaluate_configs(const Trace& trace, const RegionSet& regions,
                            const std::vector<Candidate>& candidates);

inline constexpr std::size_t kMinEvaluationEntries = 10;

// Deduplicated (kind, current region) pairs in first-occurrence order.
std::vector<ActionPair> seen_pairs(const Trace& trace, const RegionSet& regions);

// Non-Idle kinds absent from the trace, in enum order.
std::vector<ActionKind> unseen_actions(const Trace& trace);

using ActionHistogram = std::array<double, kKindCount>;

// Normalized frequencies indexed by kind_index. Throws on empty input.
ActionHistogram action_distribution(std::span<const ActionKind> actions);
ActionHistogram action_distribution(const Trace& trace);

double l1_distance(const ActionHistogram& a, const ActionHistogram& b);

}  // namespace comrade
