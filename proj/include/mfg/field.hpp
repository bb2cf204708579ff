#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mfg/error.hpp"

namespace mfg {

/// Values on the (time node) × (space node) lattice, stored time-major.
template <class Tag>
class Field {
public:
    Field() = default;
    Field(std::size_t n_time, std::size_t n_space, double fill = 0.0)
        : n_time_(n_time), n_space_(n_space), data_(n_time * n_space, fill) {}

    std::size_t n_time() const noexcept { return n_time_; }
    std::size_t n_space() const noexcept { return n_space_; }

    double& operator()(std::size_t k, std::size_t i) { return data_[k * n_space_ + i]; }
    double operator()(std::size_t k, std::size_t i) const { return data_[k * n_space_ + i]; }

    std::span<double> slice(std::size_t k) { return {data_.data() + k * n_space_, n_space_}; }
    std::span<const double> slice(std::size_t k) const { return {data_.data() + k * n_space_, n_space_}; }

    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const Field&, const Field&) = default;

private:
    std::size_t n_time_ = 0;
    std::size_t n_space_ = 0;
    std::vector<double> data_;
};

struct ValueTag;
struct PolicyTag;
struct MassTag;

using ValueField = Field<ValueTag>;
using PolicyField = Field<PolicyTag>;
using DistributionPath = Field<MassTag>;

/// Aggregate path m_t, one value per time node (levels, also under the geometric aggregator).
struct MeanPath {
    std::vector<double> values;

    MeanPath() = default;
    explicit MeanPath(std::vector<double> v) : values(std::move(v)) {}
    static MeanPath constant(std::size_t n, double value) { return MeanPath(std::vector<double>(n, value)); }

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t k) const { return values[k]; }
    double& operator[](std::size_t k) { return values[k]; }

    friend bool operator==(const MeanPath&, const MeanPath&) = default;
};

inline double sup_distance(const MeanPath& a, const MeanPath& b) {
    detail::require(a.size() == b.size(), "sup_distance: length mismatch");
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

}  // namespace mfg
