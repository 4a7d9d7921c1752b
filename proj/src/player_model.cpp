#include "comrade/player_model.hpp"

#include "comrade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace comrade {

void Trace::record(StateVector sv, ActionKind kind, CellPoint point, std::int64_t tick) {
    if (kind == ActionKind::Idle) throw DomainError("Idle is never recorded in a trace");
    if (!entries_.empty() && tick <= entries_.back().tick) {
        throw DomainError("trace entries must have strictly increasing ticks");
    }
    entries_.push_back({std::move(sv), kind, point, tick});
}

Trace Trace::prefix(std::size_t n) const {
    Trace t;
    t.entries_.assign(entries_.begin(),
                      entries_.begin() + static_cast<std::ptrdiff_t>(std::min(n, entries_.size())));
    return t;
}

void write_trace_jsonl(std::ostream& out, const Trace& trace) {
    for (const auto& e : trace.entries()) {
        nlohmann::json j;
        j["tick"] = e.tick;
        j["kind"] = std::string(to_string(e.kind));
        j["x"] = e.point.x;
        j["y"] = e.point.y;
        j["sv"] = e.sv;
        out << j.dump() << '\n';
    }
}

Trace read_trace_jsonl(std::istream& in) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto kind = parse_action_kind(j.at("kind").get<std::string>());
            if (!kind) throw ParseError("unknown action kind", line_no);
            trace.record(j.at("sv").get<StateVector>(), *kind,
                         {j.at("x").get<int>(), j.at("y").get<int>()}, j.at("tick").get<std::int64_t>());
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ParseError(ex.what(), line_no);
        }
    }
    return trace;
}

// ---------------------------------------------------------------------------

PredictorModel::PredictorModel(Classifier kind_head, Classifier region_head,
                               std::int64_t trained_at_tick, std::size_t trained_on)
    : kind_head_(std::move(kind_head)),
      region_head_(std::move(region_head)),
      trained_at_tick_(trained_at_tick),
      trained_on_(trained_on) {}

ActionPair PredictorModel::predict(const StateVector& full) const {
    return {static_cast<ActionKind>(kind_head_.predict(full)),
            static_cast<RegionId>(region_head_.predict(full))};
}

nlohmann::json PredictorModel::to_json() const {
    return {{"version", 1},
            {"trained_at_tick", trained_at_tick_},
            {"trained_on", trained_on_},
            {"kind_head", kind_head_.to_json()},
            {"region_head", region_head_.to_json()}};
}

PredictorModel train(const Trace& trace, const RegionSet& regions, const ClassifierKind& kind,
                     const FeatureConfig& features) {
    if (trace.empty()) throw InsufficientData("cannot train on an empty trace");
    std::vector<StateVector> x;
    std::vector<int> kinds;
    std::vector<int> region_labels;
    x.reserve(trace.size());
    for (const auto& e : trace.entries()) {
        x.push_back(e.sv);
        kinds.push_back(static_cast<int>(e.kind));
        region_labels.push_back(static_cast<int>(regions.lookup(e.point)));
    }
    return PredictorModel(Classifier::fit(kind, features, x, kinds),
                          Classifier::fit(kind, features, x, region_labels),
                          trace.entries().back().tick, trace.size());
}

ActionPair predict_next(const PredictorModel& model, const StateVector& full) {
    return model.predict(full);
}

Evaluation evaluate_configs(const Trace& trace, const RegionSet& regions,
                            const std::vector<Candidate>& candidates) {
    if (trace.size() < kMinEvaluationEntries) {
        throw InsufficientData("evaluation needs at least " +
                               std::to_string(kMinEvaluationEntries) + " trace entries");
    }
    if (candidates.empty()) throw ConfigError("no candidates to evaluate");

    const std::size_t n = trace.size();
    const std::size_t test_len = std::max<std::size_t>(1, n * 15 / 100);
    Evaluation ev;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        CandidateScore row;
        row.candidate = c;
        for (std::size_t pct : {50u, 65u, 80u}) {
            const std::size_t train_end = n * pct / 100;
            const std::size_t test_end = std::min(n, train_end + test_len);
            const auto model =
                train(trace.prefix(train_end), regions, candidates[c].classifier, candidates[c].features);
            std::size_t correct = 0;
            for (std::size_t i = train_end; i < test_end; ++i) {
                if (model.predict(trace[i].sv).kind == trace[i].kind) ++correct;
            }
            row.window_accuracy.push_back(static_cast<double>(correct) /
                                          static_cast<double>(test_end - train_end));
        }
        double sum = 0.0;
        for (double a : row.window_accuracy) sum += a;
        row.accuracy = sum / static_cast<double>(row.window_accuracy.size());
        if (c == 0 || row.accuracy > ev.table[ev.best].accuracy) ev.best = c;
        ev.table.push_back(std::move(row));
    }
    return ev;
}

std::vector<ActionPair> seen_pairs(const Trace& trace, const RegionSet& regions) {
    std::vector<ActionPair> out;
    for (const auto& e : trace.entries()) {
        const ActionPair p{e.kind, regions.lookup(e.point)};
        if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    }
    return out;
}

std::vector<ActionKind> unseen_actions(const Trace& trace) {
    std::array<bool, kKindCount> seen{};
    for (const auto& e : trace.entries()) seen[kind_index(e.kind)] = true;
    std::vector<ActionKind> out;
    for (auto k : kActiveKinds) {
        if (!seen[kind_index(k)]) out.push_back(k);
    }
    return out;
}

ActionHistogram action_distribution(std::span<const ActionKind> actions) {
    if (actions.empty()) throw InsufficientData("cannot build a distribution from no actions");
    ActionHistogram h{};
    for (auto k : actions) h[kind_index(k)] += 1.0;
    for (auto& v : h) v /= static_cast<double>(actions.size());
    return h;
}

ActionHistogram action_distribution(const Trace& trace) {
    std::vector<ActionKind> kinds;
    for (const auto& e : trace.entries()) kinds.push_back(e.kind);
    return action_distribution(kinds);
}

double l1_distance(const ActionHistogram& a, const ActionHistogram& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

}  // namespace comrade
