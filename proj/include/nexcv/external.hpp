#pragma once

#include <sys/types.h>

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>

#include "nexcv/classifier.hpp"

namespace nexcv {

// Classifier backed by a child process speaking newline-delimited JSON on
// its standard streams:
//
//   -> {"op":"fit","examples":[{"text":...,"label":...},...]}   <- {"ok":true}
//   -> {"op":"predict","text":...}            <- {"label":...,"confidence":0.87}
//
// Any response may instead be {"ok":false,"error":...}. The command is run
// with /bin/sh -c. One request is in flight at a time. Failures raise
// AdapterError whose kind separates process exit, malformed responses,
// timeouts and engine-reported errors.
class ExternalClassifier final : public Classifier {
 public:
  explicit ExternalClassifier(std::string command,
                              std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~ExternalClassifier() override;

  ExternalClassifier(const ExternalClassifier&) = delete;
  ExternalClassifier& operator=(const ExternalClassifier&) = delete;

  void fit(std::span<const LabeledExample> train) override;
  Prediction predict(std::string_view text) override;

 private:
  std::string round_trip(const std::string& request);
  void send_line(const std::string& line);
  std::string read_line();
  std::string exit_description();
  void shutdown() noexcept;

  std::string command_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::size_t responses_read_ = 0;
  bool fitted_ = false;
  bool exited_ = false;
  int exit_status_ = 0;
};

ClassifierFactory external_factory(std::string command,
                                   std::chrono::milliseconds timeout = std::chrono::seconds(60));

// Answers line-protocol requests from `in` on `out` until end of input.
// Every fit request trains a fresh classifier from `make`.
void serve_line_protocol(std::istream& in, std::ostream& out, const ClassifierFactory& make);

}  // namespace nexcv
