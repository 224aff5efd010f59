#pragma once

#include <string>

#include "ecsp/backend.hpp"

namespace ecsp {

/// Deterministic offline backend. The reply is a pure function of the
/// request's kind and prompt:
///
///   SEGMENT    sentence-splits the input and applies rule_segment.
///   AMBIGUITY  flags EDUs with a third-person pronoun, a deictic
///              (this/these/those) or "the X" (X lowercase, not followed by
///              "of", not mentioned earlier in the sentence).
///   SELECT     per ambiguous EDU, context EDUs sharing a content stem with
///              the sentence; pronoun-bearing EDUs also get the first
///              context EDU that opens with a name, labeled Background.
///              Other labels are Temporal for EDUs with a year, month or
///              temporal connective, Elaboration otherwise.
///   DECONTEXT  replaces each singular, non-reflexive pronoun of each
///              ambiguous EDU with the leading capitalized phrase of its
///              first relevant EDU that has one (possessives become
///              "<phrase>'s"), then appends each Temporal relevant EDU
///              that opens with a lowercase until/after/before/since/
///              during/when and is not already in the sentence.
///   VANILLA    echoes the sentence.
std::string mock_complete(const CompletionRequest& request);

class MockBackend final : public CompletionBackend {
 public:
  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override { return "mock"; }
};

}  // namespace ecsp
