#include "tntopo/dense_tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "tntopo/errors.hpp"

namespace tntopo {

namespace {

std::int64_t shape_product(const std::vector<std::int64_t>& shape) {
    std::int64_t p = 1;
    for (std::int64_t e : shape) p *= e;
    return p;
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

} // namespace

DenseTensor::DenseTensor() : data_(1, 0.0) {}

DenseTensor::DenseTensor(std::vector<std::string> labels, std::vector<std::int64_t> shape)
    : labels_(std::move(labels)), shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(shape_product(shape_)), 0.0);
    check_invariants();
}

DenseTensor::DenseTensor(std::vector<std::string> labels, std::vector<std::int64_t> shape,
                         std::vector<double> data)
    : labels_(std::move(labels)), shape_(std::move(shape)), data_(std::move(data)) {
    check_invariants();
}

DenseTensor DenseTensor::scalar(double value) {
    DenseTensor t;
    t.data_[0] = value;
    t.check_invariants();
    return t;
}

void DenseTensor::check_invariants() const {
    if (labels_.size() != shape_.size())
        throw ArgumentError("tensor: label count does not match mode count");
    for (std::int64_t e : shape_)
        if (e <= 0) throw ArgumentError("tensor: mode extents must be positive");
    std::set<std::string> seen(labels_.begin(), labels_.end());
    if (seen.size() != labels_.size())
        throw ArgumentError("tensor: duplicate mode label");
    if (static_cast<std::int64_t>(data_.size()) != shape_product(shape_))
        throw ArgumentError("tensor: data length does not match shape product");
    for (double v : data_)
        if (!std::isfinite(v)) throw ArgumentError("tensor: non-finite entry");
}

std::int64_t DenseTensor::size() const { return shape_product(shape_); }

bool DenseTensor::has_label(const std::string& label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t DenseTensor::label_index(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw ArgumentError("tensor: no mode labelled '" + label + "'");
    return static_cast<std::size_t>(it - labels_.begin());
}

std::int64_t DenseTensor::extent(const std::string& label) const {
    return shape_[label_index(label)];
}

std::int64_t DenseTensor::offset_of(std::span<const std::int64_t> index) const {
    if (index.size() != shape_.size())
        throw ArgumentError("tensor: index arity does not match mode count");
    std::int64_t off = 0;
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (index[i] < 0 || index[i] >= shape_[i])
            throw ArgumentError("tensor: index out of range");
        off = off * shape_[i] + index[i];
    }
    return off;
}

double DenseTensor::at(std::span<const std::int64_t> index) const {
    return data_[static_cast<std::size_t>(offset_of(index))];
}

double& DenseTensor::at(std::span<const std::int64_t> index) {
    return data_[static_cast<std::size_t>(offset_of(index))];
}

DenseTensor transpose(const DenseTensor& t, const std::vector<std::string>& new_label_order) {
    if (new_label_order.size() != t.order())
        throw ArgumentError("transpose: order list has wrong length");
    std::vector<std::size_t> perm(new_label_order.size()); // perm[k] = source mode of output mode k
    for (std::size_t k = 0; k < new_label_order.size(); ++k)
        perm[k] = t.label_index(new_label_order[k]);
    std::vector<bool> used(t.order(), false);
    for (std::size_t p : perm) {
        if (used[p]) throw ArgumentError("transpose: order list is not a permutation");
        used[p] = true;
    }

    std::vector<std::int64_t> out_shape(t.order());
    for (std::size_t k = 0; k < perm.size(); ++k) out_shape[k] = t.shape()[perm[k]];

    // Strides of the source tensor, then walk the output in row-major order
    // with a mixed-radix counter.
    std::vector<std::int64_t> src_stride(t.order(), 1);
    for (std::size_t i = t.order(); i-- > 1;)
        src_stride[i - 1] = src_stride[i] * t.shape()[i];

    std::vector<double> out(static_cast<std::size_t>(t.size()));
    std::vector<std::int64_t> idx(t.order(), 0);
    std::int64_t src_off = 0;
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        out[flat] = t.data()[static_cast<std::size_t>(src_off)];
        for (std::size_t k = t.order(); k-- > 0;) {
            ++idx[k];
            src_off += src_stride[perm[k]];
            if (idx[k] < out_shape[k]) break;
            src_off -= idx[k] * src_stride[perm[k]];
            idx[k] = 0;
        }
    }
    return DenseTensor(new_label_order, std::move(out_shape), std::move(out));
}

DenseTensor matricize(const DenseTensor& t, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels) {
    if (row_labels.size() + col_labels.size() != t.order())
        throw ArgumentError("matricize: label lists do not partition the tensor modes");
    std::vector<std::string> order;
    order.reserve(t.order());
    order.insert(order.end(), row_labels.begin(), row_labels.end());
    order.insert(order.end(), col_labels.begin(), col_labels.end());
    DenseTensor p = transpose(t, order); // validates the partition

    std::int64_t rows = 1, cols = 1;
    for (std::size_t i = 0; i < row_labels.size(); ++i) rows *= p.shape()[i];
    for (std::size_t i = row_labels.size(); i < p.order(); ++i) cols *= p.shape()[i];

    std::vector<double> data = p.data();
    return DenseTensor({"rows", "cols"}, {rows, cols}, std::move(data));
}

DenseTensor unmatricize(const DenseTensor& m, const std::vector<std::string>& row_labels,
                        const std::vector<std::int64_t>& row_extents,
                        const std::vector<std::string>& col_labels,
                        const std::vector<std::int64_t>& col_extents) {
    if (m.order() != 2) throw ArgumentError("unmatricize: input must have exactly 2 modes");
    if (row_labels.size() != row_extents.size() || col_labels.size() != col_extents.size())
        throw ArgumentError("unmatricize: label/extent lists disagree");
    if (shape_product(row_extents) != m.shape()[0] || shape_product(col_extents) != m.shape()[1])
        throw ArgumentError("unmatricize: extents do not factor the matrix dimensions");
    std::vector<std::string> labels;
    labels.insert(labels.end(), row_labels.begin(), row_labels.end());
    labels.insert(labels.end(), col_labels.begin(), col_labels.end());
    std::vector<std::int64_t> shape;
    shape.insert(shape.end(), row_extents.begin(), row_extents.end());
    shape.insert(shape.end(), col_extents.begin(), col_extents.end());
    std::vector<double> data = m.data();
    return DenseTensor(std::move(labels), std::move(shape), std::move(data));
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const std::vector<std::string>& shared_labels) {
    std::vector<std::string> a_free, b_free;
    for (const auto& l : a.labels())
        if (std::find(shared_labels.begin(), shared_labels.end(), l) == shared_labels.end())
            a_free.push_back(l);
    for (const auto& l : b.labels())
        if (std::find(shared_labels.begin(), shared_labels.end(), l) == shared_labels.end())
            b_free.push_back(l);

    for (const auto& l : shared_labels) {
        if (!a.has_label(l) || !b.has_label(l))
            throw ArgumentError("contract: shared label '" + l + "' missing from an operand");
        if (a.extent(l) != b.extent(l)) {
            std::ostringstream msg;
            msg << "contract: extent mismatch on '" << l << "' (" << a.extent(l) << " vs "
                << b.extent(l) << ")";
            throw ArgumentError(msg.str());
        }
    }
    for (const auto& l : a_free)
        if (std::find(b_free.begin(), b_free.end(), l) != b_free.end())
            throw ArgumentError("contract: label '" + l + "' appears free in both operands");

    DenseTensor ma = matricize(a, a_free, shared_labels);
    DenseTensor mb = matricize(b, shared_labels, b_free);

    std::vector<std::int64_t> out_shape;
    std::vector<std::string> out_labels;
    for (const auto& l : a_free) {
        out_labels.push_back(l);
        out_shape.push_back(a.extent(l));
    }
    for (const auto& l : b_free) {
        out_labels.push_back(l);
        out_shape.push_back(b.extent(l));
    }

    std::vector<double> out(static_cast<std::size_t>(shape_product(out_shape)));
    ConstMap A(ma.data().data(), ma.shape()[0], ma.shape()[1]);
    ConstMap B(mb.data().data(), mb.shape()[0], mb.shape()[1]);
    MutMap C(out.data(), ma.shape()[0], mb.shape()[1]);
    C.noalias() = A * B;

    return DenseTensor(std::move(out_labels), std::move(out_shape), std::move(out));
}

double frobenius_norm(const DenseTensor& t) {
    // Two-pass scaled sum of squares; entries can span a huge dynamic range
    // after long contractions.
    double maxabs = 0.0;
    for (double v : t.data()) maxabs = std::max(maxabs, std::abs(v));
    if (maxabs == 0.0) return 0.0;
    double acc = 0.0;
    for (double v : t.data()) {
        const double s = v / maxabs;
        acc += s * s;
    }
    return maxabs * std::sqrt(acc);
}

} // namespace tntopo
