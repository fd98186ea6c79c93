#include "gridtrade/error.hpp"

namespace gridtrade {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
  case Errc::CycleDetected: return "CycleDetected";
  case Errc::Disconnected: return "Disconnected";
  case Errc::DanglingReference: return "DanglingReference";
  case Errc::UnknownBus: return "UnknownBus";
  case Errc::UnknownLine: return "UnknownLine";
  case Errc::NegativeRate: return "NegativeRate";
  case Errc::NegativeEnergy: return "NegativeEnergy";
  case Errc::MismatchedPartnerLists: return "MismatchedPartnerLists";
  case Errc::InvalidParameter: return "InvalidParameter";
  case Errc::EmptyCandidateSet: return "EmptyCandidateSet";
  case Errc::UnknownPartner: return "UnknownPartner";
  case Errc::Infeasible: return "Infeasible";
  case Errc::UnregisteredRequester: return "UnregisteredRequester";
  case Errc::BadSignature: return "BadSignature";
  case Errc::LeafOutOfRange: return "LeafOutOfRange";
  case Errc::InvalidCoL: return "InvalidCoL";
  case Errc::UnauthorizedWriter: return "UnauthorizedWriter";
  case Errc::MissingAgreement: return "MissingAgreement";
  case Errc::UnknownReference: return "UnknownReference";
  case Errc::Expired: return "Expired";
  case Errc::DuplicateEI: return "DuplicateEI";
  case Errc::NotUnderDelivery: return "NotUnderDelivery";
  case Errc::UnauthorizedSource: return "UnauthorizedSource";
  case Errc::NothingPending: return "NothingPending";
  case Errc::InsufficientFunds: return "InsufficientFunds";
  case Errc::ScenarioInvalid: return "ScenarioInvalid";
  case Errc::BadFlags: return "BadFlags";
  }
  return "Unknown";
}

} // namespace gridtrade
