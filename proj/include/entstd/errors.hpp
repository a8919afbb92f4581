#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace entstd {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent input data: malformed files, invalid corpora,
// corrupted artifacts. The CLI maps these to exit status 2.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// A corpus violating one of its invariants. `offending` lists the records
// (surfaces or ids) responsible.
class CorpusError : public DataError {
 public:
  CorpusError(const std::string& what, std::vector<std::string> offending)
      : DataError(what), offending_(std::move(offending)) {}

  const std::vector<std::string>& offending() const noexcept { return offending_; }

 private:
  std::vector<std::string> offending_;
};

// Truncated file, bad magic, unsupported version or digest mismatch.
class CorruptFileError : public DataError {
 public:
  using DataError::DataError;
};

class MissingFileError : public DataError {
 public:
  explicit MissingFileError(const std::string& path)
      : DataError("missing file: " + path) {}
};

// Contract violations on in-memory arguments (dimension mismatch, zero
// vector under cosine, empty text, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A batch that cannot form the triplets a mining strategy needs.
class MiningError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, bool retriable)
      : Error(what), retriable_(retriable) {}

  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

}  // namespace entstd
