#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace rgseq {

/// Requested shape of the likelihood-ratio grid. The span is relative to the
/// decision threshold lambda0/lambda1.
struct GridSpec {
    double span_lo = 1e-6;
    double span_hi = 1e6;
    std::size_t points = 2048;
    /// A z value that is guaranteed to be a grid node.
    double anchor = 1.0;
    /// Shrink the log step so that it divides the lattice step of lattice models.
    bool align_to_lattice = true;
};

/// Log-uniform grid z_i = anchor * exp((j_min + i) * step), i = 0..size-1.
/// Nodes with i < 0 or i >= size are "virtual": they exist for interpolation
/// purposes but carry extension values rather than stored ones.
class LogGrid {
public:
    LogGrid(double anchor, double step, long j_min, std::size_t size);

    std::size_t size() const { return nodes_.size(); }
    double step() const { return step_; }
    double anchor() const { return anchor_; }
    long j_min() const { return j_min_; }
    const std::vector<double>& nodes() const { return nodes_; }
    double front() const { return nodes_.front(); }
    double back() const { return nodes_.back(); }

    /// Node value for any (possibly virtual) index.
    double node(long i) const;

    /// Index of the cell containing z: node(i) <= z < node(i + 1). z must be finite and > 0.
    long cell(double z) const;

private:
    double anchor_;
    double step_;
    long j_min_;
    std::vector<double> nodes_;
};

LogGrid make_grid(const GridSpec& spec, double center, std::optional<double> lattice);

}  // namespace rgseq
