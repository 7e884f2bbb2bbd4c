#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ipoperf
{

using Date = std::chrono::sys_days;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Parses a strict YYYY-MM-DD calendar date.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

// Shortest decimal text that parses back to the same double.
std::string format_exact(double value);

// Bad input data. Carries the file and 1-based line when the problem came from a file.
class InputError : public std::runtime_error
{
  public:
    explicit InputError(const std::string &message);
    InputError(const std::string &file, std::size_t line, const std::string &message);

    const std::string &file() const { return file_; }
    std::size_t line() const { return line_; }

  private:
    std::string file_;
    std::size_t line_ = 0;
};

}  // namespace ipoperf
