#pragma once

#include <cstdint>
#include <vector>

namespace multipref {

using Token = std::int32_t;

// Prompt asking for a uniform integer in the closed interval [lo, hi].
struct IntervalPrompt {
  std::int64_t id = 0;
  Token lo = 0;
  Token hi = 0;

  Token width() const { return hi - lo + 1; }
  bool contains(Token t) const { return t >= lo && t <= hi; }

  friend bool operator==(const IntervalPrompt&, const IntervalPrompt&) = default;
};

struct Response {
  std::vector<Token> tokens;

  friend bool operator==(const Response&, const Response&) = default;
};

// Responses drawn for the same prompt.
struct SampleGroup {
  std::vector<Response> responses;

  std::size_t size() const { return responses.size(); }
  bool empty() const { return responses.empty(); }

  friend bool operator==(const SampleGroup&, const SampleGroup&) = default;
};

struct PreferenceRecord {
  IntervalPrompt prompt;
  SampleGroup chosen;
  SampleGroup rejected;

  friend bool operator==(const PreferenceRecord&, const PreferenceRecord&) = default;
};

// Supervised example. Weight 1 reproduces the plain mean NLL; fractional
// weights let a dataset encode a target distribution exactly.
struct SftExample {
  IntervalPrompt prompt;
  Response response;
  double weight = 1.0;
};

inline Response single_token(Token t) { return Response{{t}}; }

inline SampleGroup group_of_tokens(const std::vector<Token>& tokens) {
  SampleGroup g;
  g.responses.reserve(tokens.size());
  for (Token t : tokens) g.responses.push_back(single_token(t));
  return g;
}

}  // namespace multipref
