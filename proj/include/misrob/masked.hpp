#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "misrob/errors.hpp"

namespace misrob {

// A d-dimensional observation whose entries may be missing. Missingness is a
// per-coordinate tag, never a sentinel double, so it cannot leak into
// arithmetic. The all-or-nothing factories cover the single-pattern setting;
// arbitrary masks appear only in the multi-pattern extension.
class MaskedSample {
public:
    static MaskedSample observed(Eigen::VectorXd x) {
        if (x.size() < 1) throw ConfigError("MaskedSample: dimension must be >= 1");
        MaskedSample s;
        s.values_ = std::move(x);
        s.mask_.assign(static_cast<std::size_t>(s.values_.size()), 1);
        return s;
    }

    static MaskedSample missing(int d) {
        if (d < 1) throw ConfigError("MaskedSample: dimension must be >= 1");
        MaskedSample s;
        s.values_ = Eigen::VectorXd::Zero(d);
        s.mask_.assign(static_cast<std::size_t>(d), 0);
        return s;
    }

    static MaskedSample with_pattern(Eigen::VectorXd x, std::vector<std::uint8_t> mask) {
        if (x.size() < 1 || static_cast<std::size_t>(x.size()) != mask.size())
            throw ConfigError("MaskedSample: mask/value size mismatch");
        MaskedSample s;
        s.values_ = std::move(x);
        s.mask_ = std::move(mask);
        return s;
    }

    int dim() const { return static_cast<int>(values_.size()); }
    bool is_observed(int j) const { return mask_[static_cast<std::size_t>(j)] != 0; }

    bool fully_observed() const {
        for (const auto m : mask_)
            if (!m) return false;
        return true;
    }
    bool fully_missing() const {
        for (const auto m : mask_)
            if (m) return false;
        return true;
    }

    // Value access is only legal on observed coordinates.
    double value(int j) const { return values_[j]; }
    const Eigen::VectorXd& values() const { return values_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }

    // Projection onto a direction; all-or-nothing semantics (any missing
    // coordinate makes the projection missing).
    std::optional<double> project(const Eigen::VectorXd& v) const {
        if (!fully_observed()) return std::nullopt;
        return values_.dot(v);
    }

private:
    MaskedSample() = default;
    Eigen::VectorXd values_;
    std::vector<std::uint8_t> mask_;
};

// Univariate sample set: the observed values plus the count of missing atoms.
struct Masked1D {
    std::vector<double> observed;
    std::int64_t n_missing = 0;

    std::int64_t n_total() const { return static_cast<std::int64_t>(observed.size()) + n_missing; }
};

inline Masked1D project_all(const std::vector<MaskedSample>& samples, const Eigen::VectorXd& v) {
    Masked1D out;
    out.observed.reserve(samples.size());
    for (const auto& s : samples) {
        if (auto p = s.project(v))
            out.observed.push_back(*p);
        else
            ++out.n_missing;
    }
    return out;
}

inline Masked1D extract_coordinate(const std::vector<MaskedSample>& samples, int j) {
    Masked1D out;
    for (const auto& s : samples) {
        if (s.fully_observed())
            out.observed.push_back(s.value(j));
        else
            ++out.n_missing;
    }
    return out;
}

inline std::vector<Eigen::VectorXd> observed_rows(const std::vector<MaskedSample>& samples) {
    std::vector<Eigen::VectorXd> out;
    for (const auto& s : samples)
        if (s.fully_observed()) out.push_back(s.values());
    return out;
}

}  // namespace misrob
