#include "clearline/error.hpp"

namespace clearline {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingSectionHeader: return "MissingSectionHeader";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidCorpus: return "InvalidCorpus";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::EmptyTopicList: return "EmptyTopicList";
    case ErrorCode::EmptyContext: return "EmptyContext";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::Protocol: return "Protocol";
    case ErrorCode::Upstream: return "Upstream";
    case ErrorCode::UnrecognizedTopic: return "UnrecognizedTopic";
    case ErrorCode::AmbiguousTopic: return "AmbiguousTopic";
    case ErrorCode::MalformedToken: return "MalformedToken";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::PipelineExhausted: return "PipelineExhausted";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingCount: return "MissingCount";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace clearline
