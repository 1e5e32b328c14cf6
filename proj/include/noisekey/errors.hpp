#pragma once

// Error taxonomy for the noisekey library.
//
// Exceptions signal precondition violations and unrecoverable runtime
// failures. Recoverable statistical conditions (zero trials, flagged
// estimates) are reported through result fields instead.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noisekey {

// Base type so callers can catch everything from this library at once.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// A documented precondition was violated by the caller.
class UsageError : public Error {
  public:
    using Error::Error;
};

// The host environment cannot provide a required service (e.g. OS entropy).
class EnvironmentError : public Error {
  public:
    using Error::Error;
};

// The two session endpoints fell out of step (length or geometry mismatch).
class ProtocolError : public Error {
  public:
    ProtocolError(const std::string& what_arg, std::size_t cycle)
        : Error(what_arg), cycle_(cycle) {}
    std::size_t cycle() const { return cycle_; }

  private:
    std::size_t cycle_;
};

// Transport misuse: send after close, receive with nothing pending.
class ChannelError : public Error {
  public:
    using Error::Error;
};

// Malformed frame bytes. `kind` identifies the first defect encountered;
// `expected`/`actual` carry counts for truncation diagnostics.
class FrameError : public Error {
  public:
    enum class Kind {
        BadMagic,
        BadVersion,
        BadEncoding,
        BadGeometry,
        Truncated,
        PositionRange,
    };

    FrameError(Kind kind, const std::string& what_arg, std::size_t expected = 0,
               std::size_t actual = 0)
        : Error(what_arg), kind_(kind), expected_(expected), actual_(actual) {}

    Kind kind() const { return kind_; }
    std::size_t expected() const { return expected_; }
    std::size_t actual() const { return actual_; }

  private:
    Kind kind_;
    std::size_t expected_;
    std::size_t actual_;
};

// A computation cannot meet its accuracy contract with the given controls
// (e.g. phase-grid truncation too small for the requested photon number).
class AccuracyError : public Error {
  public:
    using Error::Error;
};

// Degenerate statistics, e.g. a zero-variance distribution in an SNR.
class SingularityError : public Error {
  public:
    using Error::Error;
};

}  // namespace noisekey
