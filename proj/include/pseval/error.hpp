#ifndef PSEVAL_ERROR_HPP
#define PSEVAL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pseval {

// Base of every error raised by the toolkit. The CLI maps ValidationError
// (and its subclasses) and ParseError to exit code 2, everything else to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Embedding file does not cover every sentence of the corpus.
class CoverageError : public ValidationError {
 public:
  CoverageError(const std::string& what, std::vector<std::string> missing)
      : ValidationError(what), missing_(std::move(missing)) {}

  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

// Input that has no meaningful answer: zero vectors, empty bags, constant series.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Power iteration ran out of iterations. Carries the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last)
      : Error(what), last_iterate_(std::move(last)) {}

  const std::vector<double>& last_iterate() const { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

class BudgetError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int episode)
      : Error(what + " (episode " + std::to_string(episode) + ")"), episode_(episode) {}

  int episode() const { return episode_; }

 private:
  int episode_;
};

class EmptyReportError : public Error {
 public:
  using Error::Error;
};

}  // namespace pseval

#endif  // PSEVAL_ERROR_HPP
