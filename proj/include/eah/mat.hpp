#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace eah {

// Small dense row-major matrix. Model dimensions here are tiny (a handful of
// nodes), so this stays deliberately minimal.
class Mat {
  public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat constant(std::size_t rows, std::size_t cols, double v) {
        return Mat(rows, cols, v);
    }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const Mat& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) {
            double a = v < 0 ? -v : v;
            if (a > m) m = a;
        }
        return m;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Boolean support pattern with the same layout as Mat.
class Mask {
  public:
    Mask() = default;
    Mask(std::size_t rows, std::size_t cols, bool fill = true)
        : rows_(rows), cols_(cols), data_(rows * cols, fill ? 1 : 0) {}

    void set(std::size_t i, std::size_t j, bool v) { data_[i * cols_ + j] = v ? 1 : 0; }
    bool operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j] != 0; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> data_;
};

}  // namespace eah
