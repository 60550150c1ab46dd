#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace engorgio::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major f64 tensor. Rank 0 is a scalar, rank 1 a vector and
// rank 2 a matrix; nothing in the library needs more.
class Tensor {
public:
    Tensor() : shape_{0} {}
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    // Matrix view helpers; a vector counts as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

    std::span<const double> row(std::size_t r) const;
    std::span<double> row(std::size_t r);

    // Value of a single-element tensor.
    double item() const;

    bool all_finite() const;

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

} // namespace engorgio::ad
