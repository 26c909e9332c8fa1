#pragma once

#include <memory>
#include <string>

#include "cocabo/space.hpp"

namespace cocabo::cli {

/// Request line for one evaluation, e.g. {"h":[2,0],"x":[0.5]}.
std::string encode_request(const MixedPoint& z);
/// Parses {"f": value}; throws EvaluationError on anything else.
double decode_response(const std::string& line);

/// Evaluates points through a child process running `/bin/sh -c command`:
/// one request line on its stdin, one response line back on its stdout.
/// Any failure (spawn, exit, malformed reply, non-finite f, timeout) throws
/// EvaluationError; after a failure the child is killed and later calls
/// fail too.
class ExternalObjective {
 public:
  ExternalObjective(const std::string& command, double timeout_s = 3600.0);
  ~ExternalObjective();
  ExternalObjective(const ExternalObjective&) = delete;
  ExternalObjective& operator=(const ExternalObjective&) = delete;

  double operator()(const MixedPoint& z);
  long requests_sent() const { return requests_; }

 private:
  void shutdown(bool kill_child);
  std::string read_line();

  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  double timeout_s_;
  long requests_ = 0;
  bool broken_ = false;
  std::string buffer_;
};

}  // namespace cocabo::cli
