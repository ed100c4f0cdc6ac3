#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace cud {

// The universal output of every confidence-set method: a closed interval in
// [0, 1] for the generalization error, plus bookkeeping.
struct ConfidenceInterval {
    double center = 0.0;
    double half_width = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    std::string method;
    double level = 0.95;  // nominal 1 - delta
    std::vector<std::string> flags;

    bool contains(double v) const { return v >= lower && v <= upper; }
    double diameter() const { return upper - lower; }

    static ConfidenceInterval from_center_half_width(double center, double half_width,
                                                     std::string method, double level,
                                                     std::vector<std::string> flags = {}) {
        ConfidenceInterval ci;
        ci.half_width = half_width;
        ci.lower = std::clamp(center - half_width, 0.0, 1.0);
        ci.upper = std::clamp(center + half_width, 0.0, 1.0);
        ci.center = std::clamp(center, ci.lower, ci.upper);
        ci.method = std::move(method);
        ci.level = level;
        ci.flags = std::move(flags);
        return ci;
    }

    static ConfidenceInterval from_bounds(double lower, double upper, double center,
                                          std::string method, double level,
                                          std::vector<std::string> flags = {}) {
        ConfidenceInterval ci;
        ci.lower = std::clamp(lower, 0.0, 1.0);
        ci.upper = std::clamp(std::max(upper, lower), 0.0, 1.0);
        ci.center = std::clamp(center, ci.lower, ci.upper);
        ci.half_width = 0.5 * (ci.upper - ci.lower);
        ci.method = std::move(method);
        ci.level = level;
        ci.flags = std::move(flags);
        return ci;
    }
};

}  // namespace cud
