// Copyright (c) 2026 The facectl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace facectl {

/// Argument outside an operation's domain (bad feature id, shape mismatch).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A component was used before it was trained or loaded.
class NotReadyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Statistics could not be fitted (too few samples, zero variance).
class DegenerateStatisticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Files or settings that do not fit together (checkpoint vs backend, bad config).
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A frozen component changed when it must not have.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Training stopped because the loss became non-finite.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace facectl
