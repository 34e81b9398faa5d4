#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wdncnn {

using Shape = std::vector<int>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major double tensor. Rank-3 tensors are [channels, height,
// width]; convolution weights are rank-4 [out, in, kh, kw]. No views, no
// broadcasting: every operation owns its output.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<double> data);

    static Tensor full(Shape shape, double value);

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::int64_t numel() const {
        return static_cast<std::int64_t>(data_.size());
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::int64_t i) {
        return data_[static_cast<std::size_t>(i)];
    }
    double operator[](std::int64_t i) const {
        return data_[static_cast<std::size_t>(i)];
    }

    // Rank-3 element access.
    double& at(int c, int y, int x) {
        return data_[static_cast<std::size_t>((c * dim(1) + y) * dim(2) + x)];
    }
    double at(int c, int y, int x) const {
        return data_[static_cast<std::size_t>((c * dim(1) + y) * dim(2) + x)];
    }

    bool same_shape(const Tensor& other) const {
        return shape_ == other.shape_;
    }
    bool all_finite() const;

private:
    Shape shape_;
    std::vector<double> data_;
};

// Elementwise helpers outside the autodiff tape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor clamp01(const Tensor& a);
double sum_squares(const Tensor& a);
double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace wdncnn
