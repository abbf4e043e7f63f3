#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "claimnorm/corpus.h"
#include "json.hpp"

namespace claimnorm::prompts {

/// The five check-worthiness criteria, in reasoning order.
inline constexpr std::array<std::string_view, 5> kCriteria = {
    "Does the claim contain verifiable facts?",
    "Is the claim likely to be false?",
    "Is the claim of general public interest?",
    "Is the claim likely to be harmful?",
    "Is the claim worth fact-checking?",
};
inline constexpr std::string_view kIdentifyStep = "Identify the central claim of the post.";
inline constexpr std::string_view kClaimMarker = "Normalized claim:";
inline constexpr std::string_view kQuestion = "What claim does this post make?";

enum class PromptKind {
  Cacn,
  Direct,
  QGuided,
  ZsCot,
  Uncontrolled,
  TokenLimit,
  Abstractness,
  SingleSentence,
  ClaimCentric,
  EntityCentric,
};
inline constexpr std::array<PromptKind, 10> kPromptKinds = {
    PromptKind::Cacn,         PromptKind::Direct,         PromptKind::QGuided,
    PromptKind::ZsCot,        PromptKind::Uncontrolled,   PromptKind::TokenLimit,
    PromptKind::Abstractness, PromptKind::SingleSentence, PromptKind::ClaimCentric,
    PromptKind::EntityCentric};

std::string_view kind_name(PromptKind kind);  // "cacn", "token_limit", ...
PromptKind parse_kind(std::string_view name);
/// The zero-shot summarization prompts (everything after ZsCot).
bool is_controlled(PromptKind kind);
/// Kinds that take in-context examples (CACN, DIRECT, QGUIDED).
bool uses_examples(PromptKind kind);

struct InContextExample {
  std::string id;
  std::string post;
  /// Six step texts: the central claim, then one verdict per criterion.
  std::optional<std::vector<std::string>> reasoning_trace;
  std::string normalized_claim;

  friend bool operator==(const InContextExample&, const InContextExample&) = default;
};

/// Throws std::invalid_argument for an empty claim or a trace whose length is
/// not 6.
void validate(const InContextExample& example);
InContextExample example_from_json(const nlohmann::json& j);
/// JSONL, one example per line; errors carry the line number.
std::vector<InContextExample> parse_example_set(std::string_view text);
std::vector<InContextExample> load_example_set(const std::filesystem::path& path);
/// The shipped example set (data/example_sets/default.jsonl).
const std::vector<InContextExample>& default_example_set();

/// Plain (post, claim) example from a dataset record; the first reference is
/// the claim.
InContextExample example_from_record(const corpus::ClaimRecord& record);

/// Named template texts: cacn, direct, qguided, zscot, controlled,
/// cacn_instruction, baseline_instruction.
class TemplateSet {
 public:
  static const TemplateSet& builtin();
  /// Starts from the built-in set and replaces every template that has a
  /// `<name>.txt` file in `dir`.
  static TemplateSet load(const std::filesystem::path& dir);

  const std::string& get(std::string_view name) const;
  void set(std::string name, std::string text);

 private:
  std::map<std::string, std::string, std::less<>> texts_;
};

/// Replaces each `{name}` with values[name] in one left-to-right pass, so
/// braces inside substituted text are never expanded. An unknown `{name}`
/// (lowercase letters and '_') throws std::invalid_argument; other braces are
/// copied through.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

struct RenderedPrompt {
  std::string text;
  PromptKind kind = PromptKind::Cacn;
  std::vector<std::string> example_ids;
  std::map<std::string, std::string> control_params;

  /// SHA-256 of text.
  std::string sha() const;
};

struct ControlInput {
  std::optional<int> token_limit;
  std::optional<double> abstractness;
  std::vector<std::string> keywords;
};

/// Shortest round-trip decimal form (0.8 -> "0.8").
std::string format_number(double value);

/// Instruction, example blocks with their six-step traces, the target post,
/// and a closing cue asking for a final "Normalized claim:" line. Throws
/// std::invalid_argument when an example has no trace.
RenderedPrompt render_cacn(std::string_view post, std::span<const InContextExample> examples,
                           const TemplateSet& templates = TemplateSet::builtin());

/// DIRECT, QGUIDED or ZSCOT. ZSCOT takes no examples.
RenderedPrompt render_baseline(PromptKind kind, std::string_view post,
                               std::span<const InContextExample> examples,
                               const TemplateSet& templates = TemplateSet::builtin());

/// The suffix alone, e.g. "summarize within the length of 10 tokens".
std::string controlled_suffix(PromptKind kind, const ControlInput& params);

/// Post followed by the controlled suffix. Missing parameters throw
/// std::invalid_argument naming the parameter.
RenderedPrompt render_controlled(PromptKind kind, std::string_view post, const ControlInput& params,
                                 const TemplateSet& templates = TemplateSet::builtin());

/// Dispatches on kind.
RenderedPrompt render(PromptKind kind, std::string_view post,
                      std::span<const InContextExample> examples, const ControlInput& params,
                      const TemplateSet& templates = TemplateSet::builtin());

/// Top-k pool entries by TF-IDF cosine to `query_post` (index fitted on the
/// candidate posts plus the query), descending, ties broken by id. Entries
/// whose id equals `exclude_id` are never chosen. Throws when k exceeds the
/// candidate count.
std::vector<InContextExample> select_examples(std::span<const InContextExample> pool,
                                              std::string_view query_post, std::size_t k,
                                              std::string_view exclude_id = {});

struct CoTTrace {
  std::vector<std::pair<std::string, std::string>> steps;
  std::string final_claim;
};

/// final_claim is the first sentence after the last "Normalized claim:"
/// marker, or the last non-empty line when there is no usable marker. Steps
/// ("Step N. ...") are collected for CACN and ZSCOT. Throws
/// std::invalid_argument for an empty completion.
CoTTrace parse_response(PromptKind kind, std::string_view completion);

}  // namespace claimnorm::prompts
