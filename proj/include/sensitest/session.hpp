#pragma once

#include "sensitest/design.hpp"
#include "sensitest/inference.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace sensitest {

/// A failed session request, already mapped to an HTTP status.
struct SessionError : std::runtime_error {
  SessionError(int status_code, std::string error_code, const std::string& message, std::string field_name = {})
      : std::runtime_error(message), status(status_code), code(std::move(error_code)), field(std::move(field_name)) {}
  int status;
  std::string code;
  std::string field;
};

enum class SessionStatus { active, closed };
std::string_view to_string(SessionStatus status);

struct Session {
  std::string id;
  DesignRule rule;
  Link link = Link::logit;
  std::string created_at;
  SessionStatus status = SessionStatus::active;
  std::vector<Trial> trials;
  std::vector<double> noise;  // Langlie draws, one per recorded trial
  double next_level = 0.0;    // level of the pending trial
  std::uint64_t noise_seed = 0;

  std::size_t pending_index() const { return trials.size() + 1; }
  ExperimentPath path() const;
};

struct RecordedOutcome {
  std::size_t recorded_index = 0;
  std::size_t trial_index = 0;  // index expected by the next submission
  double next_level = 0.0;
};

struct SessionEstimate {
  bool estimable = false;
  std::string reason;  // too_few | separated | singular_information | not_converged
  EstimateResult estimate;
  double q = 0.5;
  double level = 0.95;
  double gamma_q = 0.0;
  Interval wald;
  FiellerSet fieller;
};

/// Live sessions backed by one append-only JSON-lines log per session in
/// `data_dir`. Every event is flushed and fsync'ed before the call returns;
/// the constructor rebuilds the in-memory index from the logs.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path data_dir);

  Session create(const DesignRule& rule, Link link);
  /// `trial_index`, when given, must equal the pending trial index (else 409).
  RecordedOutcome record_outcome(const std::string& id, int y, std::optional<std::size_t> trial_index = std::nullopt);
  Session get(const std::string& id) const;
  SessionEstimate estimate(const std::string& id, double q, double level) const;
  ExperimentPath export_path(const std::string& id) const;
  Session close(const std::string& id);
  std::size_t size() const;

 private:
  struct Entry {
    mutable std::mutex mutex;
    Session session;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  void append(const std::string& id, const std::string& line) const;
  void load(const std::filesystem::path& file);

  std::filesystem::path dir_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// Fits the trials the way the session service does.
SessionEstimate estimate_trials(std::span<const Trial> trials, Link link, double q, double level);

}  // namespace sensitest
