#pragma once

// Dynamic map partition driven by the player's action points.
//
// The map starts as one region. Each recorded action point splits the region
// containing it in two by bisecting its longer dimension (square regions are
// cut vertically, odd lengths give the extra cell to the low half). The low
// half keeps the parent's id, the high half gets a fresh one, so ids are
// stable and never reused. A cell -> id grid makes lookups O(1); a split
// rewrites only the cells of the new high half.

#include "comrade/rng.hpp"
#include "comrade/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace comrade {

class RegionSet {
public:
    RegionSet(int map_width, int map_height);

    // Splits the region containing p; returns the id of the post-split region
    // containing p. A 1x1 region is saturated and is returned unchanged.
    RegionId record_action_point(CellPoint p);

    RegionId lookup(CellPoint p) const;
    const Rect& bounds(RegionId id) const;
    RegionId sample(Rng& rng) const;

    std::size_t size() const { return rects_.size(); }
    std::size_t split_count() const { return rects_.size() - 1; }
    int width() const { return width_; }
    int height() const { return height_; }
    Rect map_rect() const { return {0, 0, width_, height_}; }
    const std::vector<Rect>& rects() const { return rects_; }  // indexed by RegionId

    // JSON array of {id, x0, y0, x1, y1}, ordered by id.
    std::string dump_json() const;

    friend bool operator==(const RegionSet&, const RegionSet&) = default;

private:
    std::size_t cell(CellPoint p) const {
        return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(p.x);
    }
    void check_bounds(CellPoint p) const;

    int width_;
    int height_;
    std::vector<Rect> rects_;
    std::vector<RegionId> grid_;
};

}  // namespace comrade
