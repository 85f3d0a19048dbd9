#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "dosefind/config.hpp"
#include "dosefind/design.hpp"
#include "dosefind/simkit.hpp"

namespace dosefind::trialsvc {

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class IntegrityError : public std::runtime_error {
public:
    IntegrityError(std::uint64_t seq, const std::string& message)
        : std::runtime_error("event " + std::to_string(seq) + ": " + message), seq_(seq) {}
    std::uint64_t sequence() const { return seq_; }

private:
    std::uint64_t seq_;
};

enum class EventKind { Created, CohortRecorded, Finalized };

const char* event_kind_name(EventKind k);

/// One immutable line of a session's log.
///   created:         {"design": {...}, "schedule": {...}}
///   cohort-recorded: {"cohort": i, "dose": d, "size": c, "dlt": k}
///   finalized:       {"selected_mtd": d | null}
struct SessionEvent {
    std::string session_id;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Created;
    json payload;
    std::string timestamp;

    json to_json() const;
    static SessionEvent from_json(const json& j);
    bool operator==(const SessionEvent&) const = default;
};

enum class SessionStatus { AwaitingCohort, Complete };

struct Recommendation {
    int dose = 1;
    int cohort_size = 0;
    int cohort_index = 1;
};

struct Session {
    std::string id;
    DesignSpec design;
    ScheduleSpec schedule_spec;
    CohortSchedule schedule;
    TrialState state;
    SessionStatus status = SessionStatus::AwaitingCohort;
    std::vector<CohortRecord> history;
    std::optional<int> selected_mtd;
    bool stopped_early = false;
    std::uint64_t last_seq = 0;
    std::string created_at;
    std::string updated_at;

    /// Next instruction; empty once the trial is complete.
    std::optional<Recommendation> recommendation() const;
    int current_cohort_size() const;
};

/// What record_cohort would do with a given DLT count.
struct Preview {
    int dlt = 0;
    std::string move;  // "escalate", "stay", "de-escalate", or "stop"
    std::optional<Recommendation> next;
    bool completes_trial = false;
    std::optional<int> selected_mtd;
    std::optional<int> eliminated_from;
};

/// Folds a dense event log into a session. Throws IntegrityError naming the
/// first bad sequence number.
Session replay(const std::vector<SessionEvent>& events);

json session_to_json(const Session& s);
json preview_to_json(const Preview& p);

/// Append-only per-session event storage.
class EventStore {
public:
    virtual ~EventStore() = default;

    /// Appends iff event.seq == current length + 1; otherwise ConflictError.
    virtual void append(const SessionEvent& event) = 0;
    virtual std::vector<SessionEvent> load(const std::string& session_id) const = 0;
    virtual bool contains(const std::string& session_id) const = 0;
    /// Hash of everything stored, for side-effect checks.
    virtual std::string digest() const = 0;
};

class MemoryEventStore final : public EventStore {
public:
    void append(const SessionEvent& event) override;
    std::vector<SessionEvent> load(const std::string& session_id) const override;
    bool contains(const std::string& session_id) const override;
    std::string digest() const override;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<std::string>> lines_;
};

/// One `<session id>.jsonl` file per session under `directory`.
class FileEventStore final : public EventStore {
public:
    explicit FileEventStore(std::string directory);

    void append(const SessionEvent& event) override;
    std::vector<SessionEvent> load(const std::string& session_id) const override;
    bool contains(const std::string& session_id) const override;
    std::string digest() const override;

private:
    std::string path_for(const std::string& session_id) const;

    std::string dir_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::uint64_t> lengths_;
};

std::string new_session_id();
std::string utc_timestamp();

/// Live trial sessions. Writes to one session are serialized by comparing
/// the expected sequence number at append time; reads work on immutable
/// snapshots.
class TrialService {
public:
    explicit TrialService(std::shared_ptr<EventStore> store);

    /// body: {"design": {...}, "schedule": {...}}
    std::shared_ptr<const Session> create_session(const json& body);
    std::shared_ptr<const Session> get(const std::string& id) const;

    /// Records the DLT count of the current cohort. When `expected_cohort` is
    /// given and is not the cohort awaiting data, throws ConflictError.
    std::shared_ptr<const Session> record_cohort(const std::string& id, int dlt,
                                                 std::optional<int> expected_cohort = std::nullopt);

    Preview whatif(const std::string& id, int dlt) const;

    /// Selected MTD of a complete session; ConflictError while cohorts remain.
    std::optional<int> finalize(const std::string& id) const;

    std::vector<SessionEvent> events(const std::string& id) const;
    const EventStore& store() const { return *store_; }

private:
    struct Entry {
        std::shared_ptr<const Design> design;
        std::mutex write_mutex;     // serializes record_cohort
        std::mutex snapshot_mutex;  // guards the pointer swap only
        std::shared_ptr<const Session> session;

        std::shared_ptr<const Session> snapshot() {
            std::lock_guard lock(snapshot_mutex);
            return session;
        }
        void publish(std::shared_ptr<const Session> s) {
            std::lock_guard lock(snapshot_mutex);
            session = std::move(s);
        }
    };

    std::shared_ptr<Entry> entry(const std::string& id) const;

    std::shared_ptr<EventStore> store_;
    mutable std::shared_mutex map_mutex_;
    mutable std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// Pure transition used by both record_cohort and replay.
Preview advance(Session& session, const Design& design, int dlt);

}  // namespace dosefind::trialsvc
