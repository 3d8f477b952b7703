#pragma once

#include <stdexcept>
#include <string>

namespace sagechain {

// Input file or schema does not match the declared dataset layout.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A categorical or target cell holds a value outside its declared levels.
class EncodingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor or layer operands have incompatible shapes.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when training diverges (non-finite loss). Carries fold/epoch context.
class TrainingAborted : public std::runtime_error {
public:
    TrainingAborted(const std::string& what, int fold, int epoch)
        : std::runtime_error(what), fold_(fold), epoch_(epoch) {}

    int fold() const noexcept { return fold_; }
    int epoch() const noexcept { return epoch_; }

private:
    int fold_;
    int epoch_;
};

}  // namespace sagechain
