#pragma once

#include <stdexcept>
#include <string>

namespace signseq {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public Error { public: using Error::Error; };
class TruncationError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class InvariantError : public Error { public: using Error::Error; };
class EmptyInputError : public Error { public: using Error::Error; };
class LabelError : public Error { public: using Error::Error; };
class RangeError : public Error { public: using Error::Error; };
class CalibrationError : public Error { public: using Error::Error; };
class FpsError : public Error { public: using Error::Error; };
class LengthError : public Error { public: using Error::Error; };
class SchemeError : public Error { public: using Error::Error; };
class DegenerateLabelsError : public Error { public: using Error::Error; };

class AnnotationOrderError : public Error {
public:
    AnnotationOrderError(std::size_t line, const std::string& what)
        : Error("annotation line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ClassCoverageError : public Error {
public:
    explicit ClassCoverageError(std::string word)
        : Error("no trial available for class " + word), word_(std::move(word)) {}
    const std::string& word() const noexcept { return word_; }

private:
    std::string word_;
};

class DivergenceError : public Error {
public:
    DivergenceError(int epoch, const std::string& what)
        : Error("training diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

/// Invalid configuration; `key()` names the offending setting.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace signseq
