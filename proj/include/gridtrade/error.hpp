#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridtrade {

// Every failure the library reports by exception carries one of these codes.
enum class Errc {
  // grid-model
  CycleDetected,
  Disconnected,
  DanglingReference,
  UnknownBus,
  UnknownLine,
  NegativeRate,
  // market-core
  NegativeEnergy,
  MismatchedPartnerLists,
  InvalidParameter,
  EmptyCandidateSet,
  UnknownPartner,
  Infeasible,
  // apol
  UnregisteredRequester,
  BadSignature,
  LeafOutOfRange,
  // ledger
  InvalidCoL,
  UnauthorizedWriter,
  MissingAgreement,
  UnknownReference,
  Expired,
  DuplicateEI,
  NotUnderDelivery,
  UnauthorizedSource,
  NothingPending,
  InsufficientFunds,
  // simnet / cli
  ScenarioInvalid,
  BadFlags,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

} // namespace gridtrade
