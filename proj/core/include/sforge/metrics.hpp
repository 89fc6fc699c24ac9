#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sforge {

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

inline double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty()) throw std::invalid_argument("rmse: empty vectors");
    double d = l2_distance(a, b);
    return d / std::sqrt(static_cast<double>(a.size()));
}

inline double linf_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

} // namespace sforge
