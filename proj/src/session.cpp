#include "sensitest/session.hpp"

#include "sensitest/serialize.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <random>

namespace sensitest {

std::string_view to_string(SessionStatus status) { return status == SessionStatus::active ? "active" : "closed"; }

ExperimentPath Session::path() const {
  ExperimentPath p{rule, trials, {noise_seed, 0}, {}, {}};
  if (uses_noise(rule)) p.noise = noise;
  return p;
}

namespace {

std::string random_id() {
  std::random_device rd;
  static constexpr char hex[] = "0123456789abcdef";
  std::string id;
  for (int i = 0; i < 4; ++i) {
    std::uint32_t word = rd();
    for (int k = 0; k < 8; ++k, word >>= 4) id.push_back(hex[word & 0xf]);
  }
  return id;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (const char c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

double draw_noise(std::uint64_t seed, std::size_t index) { return Rng({seed, index}).uniform(); }

}  // namespace

SessionEstimate estimate_trials(std::span<const Trial> trials, Link link, double q, double level) {
  if (!(q > 0.0 && q < 1.0)) throw SessionError(422, "validation_error", "q must lie in (0, 1)", "q");
  if (!(level > 0.0 && level < 1.0)) throw SessionError(422, "validation_error", "level must lie in (0, 1)", "level");
  SessionEstimate out;
  out.q = q;
  out.level = level;
  if (trials.size() < 2) {
    out.reason = "too_few";
    return out;
  }
  out.estimate = fit_mle(trials, link);
  switch (out.estimate.status) {
    case FitStatus::converged: break;
    case FitStatus::separated: out.reason = "separated"; return out;
    case FitStatus::singular_information: out.reason = "singular_information"; return out;
    case FitStatus::max_iter: out.reason = "not_converged"; return out;
  }
  try {
    out.gamma_q = quantile_point(out.estimate.theta_hat, link, q);
    out.wald = ci_wald(out.estimate, link, q, level);
    out.fieller = ci_fieller(out.estimate, link, q, level);
  } catch (const SingularError&) {
    out.reason = "singular_information";
    return out;
  }
  out.estimable = true;
  return out;
}

SessionStore::SessionStore(std::filesystem::path data_dir) : dir_(std::move(data_dir)) {
  std::filesystem::create_directories(dir_);
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") load(entry.path());
  }
}

void SessionStore::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::string line;
  auto entry = std::make_shared<Entry>();
  Session& s = entry->session;
  bool created = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json ev;
    try {
      ev = json::parse(line);
    } catch (const json::exception&) {
      break;  // a torn final write; everything before it is intact
    }
    const auto kind = ev.value("event", std::string());
    if (kind == "create") {
      s.id = ev.at("id").get<std::string>();
      s.rule = rule_from_json(ev.at("rule"));
      s.link = parse_link(ev.at("link").get<std::string>());
      s.created_at = ev.value("created_at", std::string());
      s.noise_seed = ev.value("noise_seed", std::uint64_t{0});
      s.next_level = first_level(s.rule);
      created = true;
    } else if (kind == "outcome" && created) {
      Trial t{ev.at("trial_index").get<std::size_t>(), ev.at("x").get<double>(), ev.at("y").get<int>()};
      s.trials.push_back(t);
      std::optional<double> u;
      if (uses_noise(s.rule)) {
        u = ev.at("noise").get<double>();
        s.noise.push_back(*u);
      }
      s.next_level = next_level(s.rule, s.trials, u);
    } else if (kind == "close" && created) {
      s.status = SessionStatus::closed;
    }
  }
  if (created && valid_id(s.id)) sessions_[s.id] = std::move(entry);
}

void SessionStore::append(const std::string& id, const std::string& line) const {
  const auto file = dir_ / (id + ".jsonl");
  const int fd = ::open(file.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw SessionError(500, "storage_error", "cannot open session log");
  const std::string record = line + "\n";
  std::size_t written = 0;
  while (written < record.size()) {
    const ssize_t n = ::write(fd, record.data() + written, record.size() - written);
    if (n <= 0) {
      ::close(fd);
      throw SessionError(500, "storage_error", "cannot write session log");
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
  std::shared_lock lock(map_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionError(404, "not_found", "unknown session '" + id + "'");
  return it->second;
}

Session SessionStore::create(const DesignRule& rule, Link link) {
  try {
    validate(rule);
  } catch (const ValidationError& e) {
    throw SessionError(422, "validation_error", e.what(), e.field);
  }
  auto entry = std::make_shared<Entry>();
  Session& s = entry->session;
  s.rule = rule;
  s.link = link;
  s.created_at = utc_now();
  s.next_level = first_level(rule);
  s.noise_seed = (std::uint64_t{std::random_device{}()} << 32) | std::random_device{}();

  std::unique_lock lock(map_mutex_);
  do {
    s.id = random_id();
  } while (sessions_.count(s.id));
  append(s.id, json{{"event", "create"},
                    {"id", s.id},
                    {"rule", to_json(rule)},
                    {"link", std::string(to_string(link))},
                    {"created_at", s.created_at},
                    {"noise_seed", s.noise_seed}}
                   .dump());
  sessions_[s.id] = entry;
  return s;
}

RecordedOutcome SessionStore::record_outcome(const std::string& id, int y, std::optional<std::size_t> trial_index) {
  if (y != 0 && y != 1) throw SessionError(422, "validation_error", "y must be 0 or 1", "y");
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  Session& s = entry->session;
  if (s.status == SessionStatus::closed) throw SessionError(409, "session_closed", "session is closed");
  if (trial_index && *trial_index != s.pending_index()) {
    throw SessionError(409, "stale_trial_index",
                       "trial_index " + std::to_string(*trial_index) + " does not match pending trial " +
                           std::to_string(s.pending_index()),
                       "trial_index");
  }
  const Trial trial{s.pending_index(), s.next_level, y};
  std::vector<Trial> history = s.trials;
  history.push_back(trial);
  std::optional<double> u;
  if (uses_noise(s.rule)) u = draw_noise(s.noise_seed, trial.index);
  const double next = next_level(s.rule, history, u);

  append(id, json{{"event", "outcome"},
                  {"trial_index", trial.index},
                  {"x", trial.x},
                  {"y", y},
                  {"noise", u ? json(*u) : json(nullptr)},
                  {"next_level", next}}
                 .dump());
  s.trials = std::move(history);
  if (u) s.noise.push_back(*u);
  s.next_level = next;
  return {trial.index, s.pending_index(), next};
}

Session SessionStore::get(const std::string& id) const {
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  return entry->session;
}

SessionEstimate SessionStore::estimate(const std::string& id, double q, double level) const {
  const Session s = get(id);
  return estimate_trials(s.trials, s.link, q, level);
}

ExperimentPath SessionStore::export_path(const std::string& id) const { return get(id).path(); }

Session SessionStore::close(const std::string& id) {
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  Session& s = entry->session;
  if (s.status == SessionStatus::active) {
    append(id, json{{"event", "close"}}.dump());
    s.status = SessionStatus::closed;
  }
  return s;
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(map_mutex_);
  return sessions_.size();
}

}  // namespace sensitest
