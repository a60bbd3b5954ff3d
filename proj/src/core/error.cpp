#include "lpr/core/error.hpp"

namespace lpr {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::FileNotFound: return "FileNotFound";
    case Errc::ParseError: return "ParseError";
    case Errc::EmptyScan: return "EmptyScan";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidCellSize: return "InvalidCellSize";
    case Errc::EmptyIndex: return "EmptyIndex";
    case Errc::NoCrossBeamOverlap: return "NoCrossBeamOverlap";
    case Errc::BeamIdOutOfRange: return "BeamIdOutOfRange";
    case Errc::EmptyCloud: return "EmptyCloud";
    case Errc::InsufficientSupport: return "InsufficientSupport";
    case Errc::DatabaseTooSmall: return "DatabaseTooSmall";
    case Errc::EmptyTrajectory: return "EmptyTrajectory";
    case Errc::IoError: return "IoError";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::InvalidParameter: return "InvalidParameter";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::UnfittedBin: return "UnfittedBin";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NoKeypoints: return "NoKeypoints";
    case Errc::DegenerateConfiguration: return "DegenerateConfiguration";
    case Errc::NoCorrespondences: return "NoCorrespondences";
    case Errc::TooManyLandmarks: return "TooManyLandmarks";
    case Errc::NoReturns: return "NoReturns";
    case Errc::NoGroundTruth: return "NoGroundTruth";
  }
  return "Unknown";
}

}  // namespace lpr
