#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace boltzmap {

enum class Errc {
  Divergent,
  Overflow,
  NotAdmissible,
  Tolerance,
  NotALaw,
  Supercritical,
  Inconsistent,
  NearCritical,
  QuadratureFail,
  TailUnreliable,
  Noninvertible,
  Undefined,
  MassDeficit,
  ZeroMean,
  BadMatch,
  CapExceeded,
  Infeasible,
  RetryCapExceeded,
  NotCritical,
  NotSubcritical,
  HorizonExceeded,
  OddLoop,
  NotLooptree,
  PerimeterMismatch,
  NonSimpleComponent,
  WrongRegime,
  GridTooSmall,
  BadConfig,
  Io,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::Divergent: return "Divergent";
    case Errc::Overflow: return "Overflow";
    case Errc::NotAdmissible: return "NotAdmissible";
    case Errc::Tolerance: return "Tolerance";
    case Errc::NotALaw: return "NotALaw";
    case Errc::Supercritical: return "Supercritical";
    case Errc::Inconsistent: return "Inconsistent";
    case Errc::NearCritical: return "NearCritical";
    case Errc::QuadratureFail: return "QuadratureFail";
    case Errc::TailUnreliable: return "TailUnreliable";
    case Errc::Noninvertible: return "Noninvertible";
    case Errc::Undefined: return "Undefined";
    case Errc::MassDeficit: return "MassDeficit";
    case Errc::ZeroMean: return "ZeroMean";
    case Errc::BadMatch: return "BadMatch";
    case Errc::CapExceeded: return "CapExceeded";
    case Errc::Infeasible: return "Infeasible";
    case Errc::RetryCapExceeded: return "RetryCapExceeded";
    case Errc::NotCritical: return "NotCritical";
    case Errc::NotSubcritical: return "NotSubcritical";
    case Errc::HorizonExceeded: return "HorizonExceeded";
    case Errc::OddLoop: return "OddLoop";
    case Errc::NotLooptree: return "NotLooptree";
    case Errc::PerimeterMismatch: return "PerimeterMismatch";
    case Errc::NonSimpleComponent: return "NonSimpleComponent";
    case Errc::WrongRegime: return "WrongRegime";
    case Errc::GridTooSmall: return "GridTooSmall";
    case Errc::BadConfig: return "BadConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace boltzmap
