#include "claimnorm/prompts.h"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "claimnorm/hashing.h"
#include "claimnorm/metrics.h"
#include "claimnorm/resources.h"

namespace claimnorm::prompts {

namespace {

constexpr std::string_view kStepsCue =
    "Reason through Steps 1 to 6 for this post, then end with a line that begins with "
    "\"Normalized claim:\" followed by exactly one sentence.";

constexpr std::array<std::string_view, 7> kTemplateNames = {
    "cacn", "direct", "qguided", "zscot", "controlled", "cacn_instruction", "baseline_instruction"};

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

bool is_instruction(std::string_view name) { return name.ends_with("_instruction"); }

std::string strip_trailing_newlines(std::string text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

}  // namespace

std::string_view kind_name(PromptKind kind) {
  switch (kind) {
    case PromptKind::Cacn: return "cacn";
    case PromptKind::Direct: return "direct";
    case PromptKind::QGuided: return "qguided";
    case PromptKind::ZsCot: return "zscot";
    case PromptKind::Uncontrolled: return "uncontrolled";
    case PromptKind::TokenLimit: return "token_limit";
    case PromptKind::Abstractness: return "abstractness";
    case PromptKind::SingleSentence: return "single_sentence";
    case PromptKind::ClaimCentric: return "claim_centric";
    case PromptKind::EntityCentric: return "entity_centric";
  }
  return "unknown";
}

PromptKind parse_kind(std::string_view name) {
  std::string lowered(name);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) {
    return c == '-' ? '_' : static_cast<char>(std::tolower(c));
  });
  for (const PromptKind kind : kPromptKinds) {
    if (kind_name(kind) == lowered) return kind;
  }
  throw std::invalid_argument("unknown prompt kind: " + std::string(name));
}

bool is_controlled(PromptKind kind) {
  return kind != PromptKind::Cacn && kind != PromptKind::Direct && kind != PromptKind::QGuided &&
         kind != PromptKind::ZsCot;
}

bool uses_examples(PromptKind kind) {
  return kind == PromptKind::Cacn || kind == PromptKind::Direct || kind == PromptKind::QGuided;
}

void validate(const InContextExample& example) {
  if (trim(example.normalized_claim).empty()) {
    throw std::invalid_argument("example " + example.id + ": empty normalized_claim");
  }
  if (example.reasoning_trace && example.reasoning_trace->size() != kCriteria.size() + 1) {
    throw std::invalid_argument("example " + example.id + ": reasoning_trace needs " +
                                std::to_string(kCriteria.size() + 1) + " steps, got " +
                                std::to_string(example.reasoning_trace->size()));
  }
}

InContextExample example_from_json(const nlohmann::json& j) {
  InContextExample ex;
  try {
    ex.id = j.at("id").get<std::string>();
    ex.post = j.at("post").get<std::string>();
    ex.normalized_claim = j.at("normalized_claim").get<std::string>();
    if (j.contains("reasoning_trace") && !j.at("reasoning_trace").is_null()) {
      ex.reasoning_trace = j.at("reasoning_trace").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad in-context example: ") + e.what());
  }
  validate(ex);
  return ex;
}

std::vector<InContextExample> parse_example_set(std::string_view text) {
  std::vector<InContextExample> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("example set line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<InContextExample> load_example_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read example set " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_example_set(ss.str());
}

const std::vector<InContextExample>& default_example_set() {
  static const std::vector<InContextExample> set = [] {
    const auto text = resources::find("example_sets/default.jsonl");
    if (!text) throw std::logic_error("default example set missing from resources");
    return parse_example_set(*text);
  }();
  return set;
}

InContextExample example_from_record(const corpus::ClaimRecord& record) {
  InContextExample ex;
  ex.id = record.id;
  ex.post = record.post;
  if (!record.references.empty()) ex.normalized_claim = record.references.front();
  return ex;
}

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set = [] {
    TemplateSet s;
    for (const auto name : kTemplateNames) {
      const auto text = resources::find("templates/" + std::string(name) + ".txt");
      if (!text) throw std::logic_error("template missing from resources: " + std::string(name));
      s.set(std::string(name), std::string(*text));
    }
    return s;
  }();
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet s = builtin();
  for (const auto name : kTemplateNames) {
    const auto path = dir / (std::string(name) + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    s.set(std::string(name), ss.str());
  }
  return s;
}

const std::string& TemplateSet::get(std::string_view name) const {
  const auto it = texts_.find(name);
  if (it == texts_.end()) throw std::invalid_argument("unknown template: " + std::string(name));
  return it->second;
}

void TemplateSet::set(std::string name, std::string text) {
  if (is_instruction(name)) text = strip_trailing_newlines(std::move(text));
  texts_[std::move(name)] = std::move(text);
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && (std::islower(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) ++j;
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        const std::string name(tmpl.substr(i + 1, j - i - 1));
        const auto it = values.find(name);
        if (it == values.end()) throw std::invalid_argument("template placeholder without a value: {" + name + "}");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

std::string RenderedPrompt::sha() const { return sha256_hex(text); }

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw std::invalid_argument("cannot format number");
  return std::string(buf.data(), end);
}

RenderedPrompt render_cacn(std::string_view post, std::span<const InContextExample> examples,
                           const TemplateSet& templates) {
  RenderedPrompt prompt;
  prompt.kind = PromptKind::Cacn;
  std::string block;
  for (const auto& ex : examples) {
    validate(ex);
    if (!ex.reasoning_trace) {
      throw std::invalid_argument("CACN example " + ex.id + " has no reasoning_trace");
    }
    const auto& trace = *ex.reasoning_trace;
    block += "Post: " + ex.post + "\n";
    block += "Step 1. " + std::string(kIdentifyStep) + " " + trace[0] + "\n";
    for (std::size_t c = 0; c < kCriteria.size(); ++c) {
      block += "Step " + std::to_string(c + 2) + ". " + std::string(kCriteria[c]) + " " + trace[c + 1] + "\n";
    }
    block += std::string(kClaimMarker) + " " + ex.normalized_claim + "\n\n";
    prompt.example_ids.push_back(ex.id);
  }
  prompt.text = fill_template(templates.get("cacn"), {{"instruction", templates.get("cacn_instruction")},
                                                      {"examples", block},
                                                      {"post", std::string(post)},
                                                      {"steps", std::string(kStepsCue)}});
  return prompt;
}

RenderedPrompt render_baseline(PromptKind kind, std::string_view post,
                               std::span<const InContextExample> examples, const TemplateSet& templates) {
  RenderedPrompt prompt;
  prompt.kind = kind;
  std::string block;
  std::string tmpl_name;
  switch (kind) {
    case PromptKind::Direct:
    case PromptKind::QGuided:
      tmpl_name = kind == PromptKind::Direct ? "direct" : "qguided";
      for (const auto& ex : examples) {
        validate(ex);
        block += "Post: " + ex.post + "\n";
        if (kind == PromptKind::QGuided) block += "Question: " + std::string(kQuestion) + "\n";
        block += std::string(kClaimMarker) + " " + ex.normalized_claim + "\n\n";
        prompt.example_ids.push_back(ex.id);
      }
      break;
    case PromptKind::ZsCot:
      if (!examples.empty()) throw std::invalid_argument("zscot prompts take no in-context examples");
      tmpl_name = "zscot";
      break;
    default:
      throw std::invalid_argument("render_baseline: not a baseline kind: " + std::string(kind_name(kind)));
  }
  prompt.text = fill_template(templates.get(tmpl_name), {{"instruction", templates.get("baseline_instruction")},
                                                         {"examples", block},
                                                         {"post", std::string(post)}});
  return prompt;
}

std::string controlled_suffix(PromptKind kind, const ControlInput& params) {
  switch (kind) {
    case PromptKind::Uncontrolled:
      return "summarize";
    case PromptKind::TokenLimit:
      if (!params.token_limit) throw std::invalid_argument("token_limit prompt needs parameter token_limit");
      if (*params.token_limit < 1) throw std::invalid_argument("parameter token_limit must be >= 1");
      return "summarize within the length of " + std::to_string(*params.token_limit) + " tokens";
    case PromptKind::Abstractness:
      if (!params.abstractness) throw std::invalid_argument("abstractness prompt needs parameter abstractness");
      if (!(*params.abstractness >= 0.0 && *params.abstractness <= 1.0)) {
        throw std::invalid_argument("parameter abstractness must be in [0, 1]");
      }
      return "summarize with abstractness of " + format_number(*params.abstractness);
    case PromptKind::SingleSentence:
      return "summarise in one sentence";
    case PromptKind::ClaimCentric:
      return "summarize the text identifying the central assertion";
    case PromptKind::EntityCentric: {
      if (params.keywords.empty()) throw std::invalid_argument("entity_centric prompt needs parameter keywords");
      std::string list;
      for (const auto& kw : params.keywords) {
        if (!list.empty()) list += ", ";
        list += kw;
      }
      return "summarize the text focusing on the given keywords (" + list + ")";
    }
    default:
      throw std::invalid_argument("not a controlled prompt kind: " + std::string(kind_name(kind)));
  }
}

RenderedPrompt render_controlled(PromptKind kind, std::string_view post, const ControlInput& params,
                                 const TemplateSet& templates) {
  RenderedPrompt prompt;
  prompt.kind = kind;
  const std::string suffix = controlled_suffix(kind, params);
  if (kind == PromptKind::TokenLimit) prompt.control_params["token_limit"] = std::to_string(*params.token_limit);
  if (kind == PromptKind::Abstractness) prompt.control_params["abstractness"] = format_number(*params.abstractness);
  if (kind == PromptKind::EntityCentric) {
    std::string joined;
    for (const auto& kw : params.keywords) joined += (joined.empty() ? "" : ",") + kw;
    prompt.control_params["keywords"] = joined;
  }
  prompt.text = fill_template(templates.get("controlled"), {{"post", std::string(post)}, {"suffix", suffix}});
  return prompt;
}

RenderedPrompt render(PromptKind kind, std::string_view post, std::span<const InContextExample> examples,
                      const ControlInput& params, const TemplateSet& templates) {
  if (kind == PromptKind::Cacn) return render_cacn(post, examples, templates);
  if (!is_controlled(kind)) return render_baseline(kind, post, examples, templates);
  return render_controlled(kind, post, params, templates);
}

std::vector<InContextExample> select_examples(std::span<const InContextExample> pool,
                                              std::string_view query_post, std::size_t k,
                                              std::string_view exclude_id) {
  std::vector<const InContextExample*> candidates;
  for (const auto& ex : pool) {
    if (exclude_id.empty() || ex.id != exclude_id) candidates.push_back(&ex);
  }
  if (k > candidates.size()) {
    throw std::invalid_argument("select_examples: k = " + std::to_string(k) + " but only " +
                                std::to_string(candidates.size()) + " candidate examples");
  }
  if (k == 0) return {};

  std::vector<std::string> documents;
  documents.reserve(candidates.size() + 1);
  for (const auto* ex : candidates) documents.push_back(ex->post);
  documents.emplace_back(query_post);
  const metrics::TfIdfIndex index(documents);
  const auto query = index.vectorize(query_post);

  std::vector<std::pair<double, const InContextExample*>> scored;
  scored.reserve(candidates.size());
  for (const auto* ex : candidates) {
    scored.emplace_back(std::clamp(metrics::dot(query, index.vectorize(ex->post)), 0.0, 1.0), ex);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->id < b.second->id;
  });
  std::vector<InContextExample> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(*scored[i].second);
  return out;
}

namespace {

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    out.push_back(trim(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

bool is_abbreviation(std::string_view text, std::size_t period) {
  std::size_t start = period;
  while (start > 0 && !std::isspace(static_cast<unsigned char>(text[start - 1]))) --start;
  std::string word(text.substr(start, period - start));
  if (word.find('.') != std::string::npos) return true;  // U.S., e.g.
  std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  static constexpr std::array<std::string_view, 9> kShort = {"mr", "mrs", "ms", "dr", "st", "vs", "jr", "sr", "no"};
  return std::find(kShort.begin(), kShort.end(), word) != kShort.end();
}

std::string first_sentence(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
    if (j == text.size()) break;
    if (!std::isspace(static_cast<unsigned char>(text[j]))) continue;
    std::size_t k = j;
    while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
    if (k < text.size() && std::isupper(static_cast<unsigned char>(text[k])) && !(c == '.' && is_abbreviation(text, i))) {
      return trim(text.substr(0, j));
    }
  }
  return trim(text);
}

void collect_steps(const std::vector<std::string>& lines, CoTTrace& trace) {
  for (const auto& line : lines) {
    if (!line.starts_with("Step ")) continue;
    const auto dot = line.find('.');
    if (dot == std::string::npos) continue;
    std::string rest = trim(std::string_view(line).substr(dot + 1));
    std::string criterion(line.substr(0, dot));
    std::vector<std::string_view> known(kCriteria.begin(), kCriteria.end());
    known.push_back(kIdentifyStep);
    for (const auto question : known) {
      if (rest.starts_with(question)) {
        criterion = std::string(question);
        rest = trim(std::string_view(rest).substr(question.size()));
        break;
      }
    }
    trace.steps.emplace_back(std::move(criterion), std::move(rest));
  }
}

}  // namespace

CoTTrace parse_response(PromptKind kind, std::string_view completion) {
  if (trim(completion).empty()) throw std::invalid_argument("parse_response: empty completion");
  const auto lines = lines_of(completion);
  CoTTrace trace;
  if (kind == PromptKind::Cacn || kind == PromptKind::ZsCot) collect_steps(lines, trace);

  const auto marker = completion.rfind(kClaimMarker);
  if (marker != std::string_view::npos) {
    auto after = lines_of(completion.substr(marker + kClaimMarker.size()));
    for (const auto& line : after) {
      if (!line.empty()) {
        trace.final_claim = first_sentence(line);
        break;
      }
    }
  }
  if (trace.final_claim.empty()) {
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
      if (!it->empty() && *it != kClaimMarker) {
        trace.final_claim = *it;
        break;
      }
    }
  }
  if (trace.final_claim.empty()) throw std::invalid_argument("parse_response: no claim in completion");
  return trace;
}

}  // namespace claimnorm::prompts
