#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "claimnorm/metrics.h"

namespace claimnorm::io {

/// JSONL readers. Blank lines are skipped; any other malformed line throws
/// corpus::JsonlError carrying its 1-based line number.

/// {"instance_id": ..., "input_kind": "post" | "normalized_claim",
///  "votes": [[0|1, 0|1, 0|1], ...]} with rank 1 first.
std::vector<metrics::RelevanceJudgment> read_judgments(std::istream& in);
std::vector<metrics::RelevanceJudgment> read_judgments(const std::filesystem::path& path);

/// {"instance_id": ..., "ratings": {"fluency": [5 ints], ...}}
std::vector<metrics::HumanRatings> read_ratings(std::istream& in);
std::vector<metrics::HumanRatings> read_ratings(const std::filesystem::path& path);

/// {"id": ..., "prediction": ...}; duplicate ids are an error.
std::map<std::string, std::string> read_predictions(std::istream& in);
std::map<std::string, std::string> read_predictions(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace claimnorm::io
