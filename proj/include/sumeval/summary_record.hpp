#pragma once

#include <string>

namespace sumeval::runstore {

enum class Provenance { Generated, Ingested };

/// One model's candidate summary for one document. (document_id, model_name,
/// round) is unique within a run; round 0 is the unrefined summary.
struct SummaryRecord {
  std::string document_id;
  std::string model_name;
  std::string text;
  std::string created_at;  // UTC ISO-8601
  Provenance provenance = Provenance::Ingested;
  int round = 0;

  bool operator==(const SummaryRecord&) const = default;
};

}  // namespace sumeval::runstore
