#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace osnrpert {

/// Half-open baseband frequency interval [lo, hi) in Hz.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const noexcept { return hi - lo; }
    double center() const noexcept { return 0.5 * (lo + hi); }
    bool contains(double f) const noexcept { return f >= lo && f < hi; }

    /// Same center, width scaled by fraction.
    Interval shrunk(double fraction) const noexcept {
        const double half = 0.5 * width() * fraction;
        return {center() - half, center() + half};
    }

    static Interval centered(double center, double width) { return {center - width / 2, center + width / 2}; }

    bool operator==(const Interval&) const = default;
};

using IntervalList = std::vector<Interval>;

inline double total_width(const IntervalList& list) {
    double w = 0.0;
    for (const auto& iv : list) w += iv.width();
    return w;
}

enum class Region { A, B, N, Outside };

/// Perturbation region geometry. F_A is boosted or attenuated by delta_A,
/// F_N is the notch, F_B absorbs the power balance; together they tile F_BOI.
struct RegionSet {
    IntervalList a;
    IntervalList b;
    IntervalList n;
    Interval boi;

    Region classify(double f) const noexcept {
        if (!boi.contains(f)) return Region::Outside;
        for (const auto& iv : a)
            if (iv.contains(f)) return Region::A;
        for (const auto& iv : n)
            if (iv.contains(f)) return Region::N;
        for (const auto& iv : b)
            if (iv.contains(f)) return Region::B;
        return Region::Outside;
    }

    /// F_ref = F_A u F_B
    IntervalList reference() const {
        IntervalList out = a;
        out.insert(out.end(), b.begin(), b.end());
        return out;
    }

    /// Throws std::invalid_argument unless the regions are disjoint and tile F_BOI.
    void validate() const {
        if (!(boi.width() > 0.0)) throw std::invalid_argument("RegionSet: F_BOI must have positive width");
        IntervalList all;
        for (const IntervalList* list : {&a, &b, &n})
            for (const auto& iv : *list) {
                if (!(iv.width() > 0.0))
                    throw std::invalid_argument("RegionSet: empty or inverted interval");
                all.push_back(iv);
            }
        if (all.empty()) throw std::invalid_argument("RegionSet: no regions");
        std::sort(all.begin(), all.end(), [](const Interval& l, const Interval& r) { return l.lo < r.lo; });
        const double tol = 1e-9 * boi.width();
        double cursor = boi.lo;
        for (const auto& iv : all) {
            if (iv.lo < cursor - tol)
                throw std::invalid_argument("RegionSet: overlapping intervals or region outside F_BOI");
            if (iv.lo > cursor + tol)
                throw std::invalid_argument("RegionSet: gap in F_BOI coverage at " + std::to_string(cursor) + " Hz");
            cursor = iv.hi;
        }
        if (std::abs(cursor - boi.hi) > tol)
            throw std::invalid_argument("RegionSet: regions do not end at the F_BOI upper edge");
    }
};

/// Complement of `taken` inside `boi`, as a sorted interval list.
inline IntervalList complement_in(const Interval& boi, IntervalList taken) {
    std::sort(taken.begin(), taken.end(), [](const Interval& l, const Interval& r) { return l.lo < r.lo; });
    IntervalList out;
    double cursor = boi.lo;
    for (const auto& iv : taken) {
        if (iv.lo > cursor) out.push_back({cursor, iv.lo});
        cursor = std::max(cursor, iv.hi);
    }
    if (cursor < boi.hi) out.push_back({cursor, boi.hi});
    return out;
}

/// Builds a RegionSet with F_B as the remainder of F_BOI.
inline RegionSet make_regions(const Interval& boi, IntervalList a, IntervalList n) {
    IntervalList taken = a;
    taken.insert(taken.end(), n.begin(), n.end());
    RegionSet rs{std::move(a), complement_in(boi, taken), std::move(n), boi};
    rs.validate();
    return rs;
}

/// Occupied bandwidth of a raised-cosine shaped channel.
inline Interval channel_band(double baud_rate, double rolloff) {
    return Interval::centered(0.0, baud_rate * (1.0 + rolloff));
}

/// Two 1 GHz boost bands at +11.5 and +14.5 GHz around a 2 GHz notch at +13 GHz.
inline RegionSet default_regions(double baud_rate = 56.8e9, double rolloff = 0.07) {
    return make_regions(channel_band(baud_rate, rolloff),
                        {Interval::centered(11.5e9, 1e9), Interval::centered(14.5e9, 1e9)},
                        {Interval::centered(13e9, 2e9)});
}

}  // namespace osnrpert
