#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tntopo {

/// Dense real-valued tensor with named modes.
///
/// Data is stored row-major: the last mode varies fastest. A tensor with no
/// modes is a scalar and holds exactly one entry. Mode labels are opaque
/// strings, distinct within the tensor; extents are positive. Constructors
/// reject non-finite data.
class DenseTensor {
public:
    /// Scalar zero.
    DenseTensor();

    /// Zero-filled tensor of the given shape.
    DenseTensor(std::vector<std::string> labels, std::vector<std::int64_t> shape);

    /// Takes ownership of `data`; its length must equal the shape product.
    DenseTensor(std::vector<std::string> labels, std::vector<std::int64_t> shape,
                std::vector<double> data);

    static DenseTensor scalar(double value);

    std::size_t order() const { return shape_.size(); }
    std::int64_t size() const;
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<std::int64_t>& shape() const { return shape_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool has_label(const std::string& label) const;
    std::size_t label_index(const std::string& label) const; // throws ArgumentError
    std::int64_t extent(const std::string& label) const;

    double at(std::span<const std::int64_t> index) const;
    double& at(std::span<const std::int64_t> index);

    /// Flat offset of a multi-index (row-major).
    std::int64_t offset_of(std::span<const std::int64_t> index) const;

private:
    void check_invariants() const;

    std::vector<std::string> labels_;
    std::vector<std::int64_t> shape_;
    std::vector<double> data_;
};

/// Reorders modes into `new_label_order` (a permutation of t's labels).
/// Pure data movement, bit-exact.
DenseTensor transpose(const DenseTensor& t, const std::vector<std::string>& new_label_order);

/// Flattens t into a 2-mode tensor: rows run over `row_labels` (in the given
/// order, row-major), columns over `col_labels`. The two lists must partition
/// t's labels. Either side may be empty (extent-1 mode labelled accordingly).
DenseTensor matricize(const DenseTensor& t, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels);

/// Inverse reshape of matricize: splits the two modes of `m` back into the
/// labelled extents. Bit-exact round trip.
DenseTensor unmatricize(const DenseTensor& m, const std::vector<std::string>& row_labels,
                        const std::vector<std::int64_t>& row_extents,
                        const std::vector<std::string>& col_labels,
                        const std::vector<std::int64_t>& col_extents);

/// Contracts (sums) over `shared_labels`, which must appear in both tensors
/// with equal extents. Result modes: non-shared labels of a, then of b, in
/// their original order. Non-shared labels common to a and b are an error.
/// An empty shared list yields the outer product.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const std::vector<std::string>& shared_labels);

double frobenius_norm(const DenseTensor& t);

} // namespace tntopo
