#include "comrade/regions.hpp"

#include "comrade/errors.hpp"

#include <nlohmann/json.hpp>

namespace comrade {

RegionSet::RegionSet(int map_width, int map_height) : width_(map_width), height_(map_height) {
    if (map_width <= 0 || map_height <= 0) {
        throw ConfigError("region set dimensions must be positive");
    }
    rects_.push_back({0, 0, width_, height_});
    grid_.assign(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_), 0);
}

void RegionSet::check_bounds(CellPoint p) const {
    if (!map_rect().contains(p)) {
        throw DomainError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") outside the map");
    }
}

RegionId RegionSet::record_action_point(CellPoint p) {
    check_bounds(p);
    const RegionId id = grid_[cell(p)];
    const Rect r = rects_[id];
    if (r.width() == 1 && r.height() == 1) return id;

    Rect low = r;
    Rect high = r;
    if (r.width() >= r.height()) {
        const int cut = r.x0 + (r.width() + 1) / 2;
        low.x1 = cut;
        high.x0 = cut;
    } else {
        const int cut = r.y0 + (r.height() + 1) / 2;
        low.y1 = cut;
        high.y0 = cut;
    }
    const auto high_id = static_cast<RegionId>(rects_.size());
    rects_[id] = low;
    rects_.push_back(high);
    for (int y = high.y0; y < high.y1; ++y) {
        for (int x = high.x0; x < high.x1; ++x) grid_[cell({x, y})] = high_id;
    }
    return high.contains(p) ? high_id : id;
}

RegionId RegionSet::lookup(CellPoint p) const {
    check_bounds(p);
    return grid_[cell(p)];
}

const Rect& RegionSet::bounds(RegionId id) const {
    if (id >= rects_.size()) throw DomainError("unknown region id " + std::to_string(id));
    return rects_[id];
}

RegionId RegionSet::sample(Rng& rng) const {
    return static_cast<RegionId>(rng.below(rects_.size()));
}

std::string RegionSet::dump_json() const {
    auto arr = nlohmann::json::array();
    for (std::size_t i = 0; i < rects_.size(); ++i) {
        const auto& r = rects_[i];
        arr.push_back({{"id", i}, {"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}});
    }
    return arr.dump();
}

}  // namespace comrade
