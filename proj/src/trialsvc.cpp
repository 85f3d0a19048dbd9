#include "dosefind/trialsvc.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace dosefind::trialsvc {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    h ^= 0xff;
    h *= kFnvPrime;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

bool is_session_id(const std::string& id) {
    return id.size() == 32 && std::all_of(id.begin(), id.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
           });
}

const char* status_name(SessionStatus s) {
    return s == SessionStatus::Complete ? "complete" : "awaiting-cohort";
}

json optional_int(const std::optional<int>& v) {
    return v ? json(*v) : json(nullptr);
}

json recommendation_json(const std::optional<Recommendation>& r) {
    if (!r) return nullptr;
    return {{"dose", r->dose}, {"cohort_size", r->cohort_size}, {"cohort_index", r->cohort_index}};
}

std::string move_name(int from, int to) {
    if (to > from) return "escalate";
    if (to < from) return "de-escalate";
    return "stay";
}

}  // namespace

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::Created: return "created";
        case EventKind::CohortRecorded: return "cohort-recorded";
        case EventKind::Finalized: return "finalized";
    }
    return "?";
}

json SessionEvent::to_json() const {
    return {{"session", session_id},
            {"seq", seq},
            {"kind", event_kind_name(kind)},
            {"payload", payload},
            {"ts", timestamp}};
}

SessionEvent SessionEvent::from_json(const json& j) {
    SessionEvent e;
    e.session_id = j.at("session").get<std::string>();
    e.seq = j.at("seq").get<std::uint64_t>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "created") {
        e.kind = EventKind::Created;
    } else if (kind == "cohort-recorded") {
        e.kind = EventKind::CohortRecorded;
    } else if (kind == "finalized") {
        e.kind = EventKind::Finalized;
    } else {
        throw std::invalid_argument("unknown event kind '" + kind + "'");
    }
    e.payload = j.at("payload");
    e.timestamp = j.at("ts").get<std::string>();
    return e;
}

int Session::current_cohort_size() const {
    const auto i = static_cast<std::size_t>(state.cohort_index);
    return i >= 1 && i <= schedule.sizes.size() ? schedule.sizes[i - 1] : 0;
}

std::optional<Recommendation> Session::recommendation() const {
    if (status == SessionStatus::Complete) {
        return std::nullopt;
    }
    return Recommendation{state.current_dose, current_cohort_size(), state.cohort_index};
}

Preview advance(Session& s, const Design& design, int dlt) {
    if (s.status == SessionStatus::Complete) {
        throw ConflictError("session is complete");
    }
    const int size = s.current_cohort_size();
    if (dlt < 0 || dlt > size) {
        throw ValidationError("dlt must lie in [0, " + std::to_string(size) + "], got " +
                              std::to_string(dlt));
    }
    const int dose = s.state.current_dose;
    s.state.record(dose, size, dlt);
    s.history.push_back({size, dose, dlt});
    s.state.cohort_index += 1;

    Preview p;
    p.dlt = dlt;
    if (static_cast<std::size_t>(s.state.cohort_index) > s.schedule.sizes.size()) {
        s.status = SessionStatus::Complete;
        s.selected_mtd = design.select_mtd(s.state);
        p.move = "stay";
        p.completes_trial = true;
        p.selected_mtd = s.selected_mtd;
        p.eliminated_from = s.state.eliminated_from;
        return p;
    }
    const NextStep step = design.next_step(s.state);
    apply_step(s.state, step);
    p.eliminated_from = s.state.eliminated_from;
    if (step.stop) {
        s.status = SessionStatus::Complete;
        s.stopped_early = true;
        s.selected_mtd = std::nullopt;
        p.move = "stop";
        p.completes_trial = true;
        return p;
    }
    p.move = move_name(dose, step.dose);
    p.next = s.recommendation();
    return p;
}

Session replay(const std::vector<SessionEvent>& events) {
    if (events.empty()) {
        throw IntegrityError(1, "log is empty");
    }
    Session s;
    std::unique_ptr<Design> design;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const SessionEvent& e = events[i];
        const std::uint64_t expected = i + 1;
        if (e.seq != expected) {
            throw IntegrityError(expected, "found sequence number " + std::to_string(e.seq));
        }
        if (i > 0 && e.session_id != s.id) {
            throw IntegrityError(e.seq, "belongs to another session");
        }
        try {
            switch (e.kind) {
                case EventKind::Created: {
                    if (i != 0) throw IntegrityError(e.seq, "duplicate created event");
                    s.id = e.session_id;
                    s.design = DesignSpec::from_json(e.payload.at("design"));
                    s.schedule_spec = ScheduleSpec::from_json(e.payload.at("schedule"));
                    s.schedule = s.schedule_spec.build();
                    s.state = TrialState::empty(s.design.num_doses());
                    s.created_at = e.timestamp;
                    design = s.design.make_design();
                    break;
                }
                case EventKind::CohortRecorded: {
                    if (i == 0) throw IntegrityError(e.seq, "log does not start with created");
                    if (s.status == SessionStatus::Complete) {
                        throw IntegrityError(e.seq, "cohort recorded after completion");
                    }
                    const json& p = e.payload;
                    if (p.at("cohort").get<int>() != s.state.cohort_index ||
                        p.at("dose").get<int>() != s.state.current_dose ||
                        p.at("size").get<int>() != s.current_cohort_size()) {
                        throw IntegrityError(e.seq, "cohort does not match the replayed trial");
                    }
                    advance(s, *design, p.at("dlt").get<int>());
                    break;
                }
                case EventKind::Finalized: {
                    if (i == 0) throw IntegrityError(e.seq, "log does not start with created");
                    if (s.status != SessionStatus::Complete) {
                        throw IntegrityError(e.seq, "finalized before the last cohort");
                    }
                    const json& mtd = e.payload.at("selected_mtd");
                    s.selected_mtd = mtd.is_null() ? std::nullopt : std::optional<int>(mtd.get<int>());
                    break;
                }
            }
        } catch (const IntegrityError&) {
            throw;
        } catch (const std::exception& ex) {
            throw IntegrityError(e.seq, ex.what());
        }
        s.last_seq = e.seq;
        s.updated_at = e.timestamp;
    }
    return s;
}

json session_to_json(const Session& s) {
    json doses = json::array();
    for (std::size_t j = 0; j < s.state.num_doses(); ++j) {
        doses.push_back({{"dose", j + 1}, {"n", s.state.n[j]}, {"y", s.state.y[j]}});
    }
    json history = json::array();
    for (std::size_t i = 0; i < s.history.size(); ++i) {
        const CohortRecord& c = s.history[i];
        history.push_back({{"cohort", i + 1}, {"dose", c.dose}, {"size", c.size}, {"dlt", c.dlts}});
    }
    json sched = s.schedule_spec.to_json();
    sched["sizes"] = s.schedule.sizes;
    return {{"id", s.id},
            {"status", status_name(s.status)},
            {"design", s.design.to_json()},
            {"schedule", sched},
            {"doses", doses},
            {"current_dose", s.state.current_dose},
            {"cohort_index", s.state.cohort_index},
            {"cohorts_total", s.schedule.sizes.size()},
            {"recommendation", recommendation_json(s.recommendation())},
            {"selected_mtd", optional_int(s.selected_mtd)},
            {"stopped_early", s.stopped_early},
            {"eliminated_from", optional_int(s.state.eliminated_from)},
            {"history", history},
            {"last_seq", s.last_seq},
            {"created_at", s.created_at},
            {"updated_at", s.updated_at}};
}

json preview_to_json(const Preview& p) {
    return {{"dlt", p.dlt},
            {"move", p.move},
            {"next", recommendation_json(p.next)},
            {"completes_trial", p.completes_trial},
            {"selected_mtd", optional_int(p.selected_mtd)},
            {"eliminated_from", optional_int(p.eliminated_from)}};
}

void MemoryEventStore::append(const SessionEvent& event) {
    std::lock_guard lock(mutex_);
    auto& log = lines_[event.session_id];
    if (event.seq != log.size() + 1) {
        throw ConflictError("expected sequence " + std::to_string(log.size() + 1) + ", got " +
                            std::to_string(event.seq));
    }
    log.push_back(event.to_json().dump());
}

std::vector<SessionEvent> MemoryEventStore::load(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = lines_.find(session_id);
    if (it == lines_.end()) {
        throw NotFoundError("no session " + session_id);
    }
    std::vector<SessionEvent> out;
    for (const std::string& line : it->second) {
        out.push_back(SessionEvent::from_json(json::parse(line)));
    }
    return out;
}

bool MemoryEventStore::contains(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    return lines_.count(session_id) != 0;
}

std::string MemoryEventStore::digest() const {
    std::lock_guard lock(mutex_);
    std::uint64_t h = kFnvOffset;
    for (const auto& [id, lines] : lines_) {
        fnv_mix(h, id);
        for (const std::string& l : lines) fnv_mix(h, l);
    }
    return hex64(h);
}

FileEventStore::FileEventStore(std::string directory) : dir_(std::move(directory)) {
    fs::create_directories(dir_);
}

std::string FileEventStore::path_for(const std::string& session_id) const {
    if (!is_session_id(session_id)) {
        throw NotFoundError("malformed session id");
    }
    return (fs::path(dir_) / (session_id + ".jsonl")).string();
}

void FileEventStore::append(const SessionEvent& event) {
    std::lock_guard lock(mutex_);
    const std::string path = path_for(event.session_id);
    auto it = lengths_.find(event.session_id);
    if (it == lengths_.end()) {
        std::uint64_t count = 0;
        std::ifstream in(path);
        for (std::string line; std::getline(in, line);) {
            if (!line.empty()) ++count;
        }
        it = lengths_.emplace(event.session_id, count).first;
    }
    if (event.seq != it->second + 1) {
        throw ConflictError("expected sequence " + std::to_string(it->second + 1) + ", got " +
                            std::to_string(event.seq));
    }
    std::ofstream out(path, std::ios::app);
    out << event.to_json().dump() << '\n';
    out.flush();
    if (!out) {
        throw std::runtime_error("failed to write " + path);
    }
    it->second += 1;
}

std::vector<SessionEvent> FileEventStore::load(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    const std::string path = path_for(session_id);
    std::ifstream in(path);
    if (!in) {
        throw NotFoundError("no session " + session_id);
    }
    std::vector<SessionEvent> out;
    std::uint64_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(SessionEvent::from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw IntegrityError(line_no, std::string("corrupt event: ") + e.what());
        }
    }
    return out;
}

bool FileEventStore::contains(const std::string& session_id) const {
    if (!is_session_id(session_id)) return false;
    std::lock_guard lock(mutex_);
    return fs::exists(path_for(session_id));
}

std::string FileEventStore::digest() const {
    std::lock_guard lock(mutex_);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = kFnvOffset;
    for (const fs::path& p : files) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        fnv_mix(h, p.filename().string());
        fnv_mix(h, buf.str());
    }
    return hex64(h);
}

std::string new_session_id() {
    static thread_local std::random_device rd;
    auto draw = [] {
        return (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
    };
    return hex64(draw()) + hex64(draw());
}

std::string utc_timestamp() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const std::time_t t = system_clock::to_time_t(now);
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

TrialService::TrialService(std::shared_ptr<EventStore> store) : store_(std::move(store)) {}

std::shared_ptr<TrialService::Entry> TrialService::entry(const std::string& id) const {
    {
        std::shared_lock lock(map_mutex_);
        auto it = sessions_.find(id);
        if (it != sessions_.end()) return it->second;
    }
    if (!store_->contains(id)) {
        throw NotFoundError("no session " + id);
    }
    auto e = std::make_shared<Entry>();
    auto session = std::make_shared<Session>(replay(store_->load(id)));
    e->design = session->design.make_design(session->schedule.total);
    e->session = std::move(session);

    std::unique_lock lock(map_mutex_);
    auto [it, inserted] = sessions_.emplace(id, e);
    return it->second;
}

std::shared_ptr<const Session> TrialService::create_session(const json& body) {
    if (!body.is_object()) {
        throw ValidationError("request body must be a JSON object");
    }
    for (const auto& [key, value] : body.items()) {
        if (key != "design" && key != "schedule") {
            throw ValidationError(key + ": unknown field");
        }
    }
    if (!body.contains("design")) throw ValidationError("design: missing required field");
    if (!body.contains("schedule")) throw ValidationError("schedule: missing required field");

    auto s = std::make_shared<Session>();
    try {
        s->design = DesignSpec::from_json(body["design"]);
        s->schedule_spec = ScheduleSpec::from_json(body["schedule"]);
    } catch (const ConfigError& e) {
        throw ValidationError(e.what());
    }
    s->id = new_session_id();
    s->schedule = s->schedule_spec.build();
    s->state = TrialState::empty(s->design.num_doses());
    s->created_at = s->updated_at = utc_timestamp();
    s->last_seq = 1;

    SessionEvent created{s->id, 1, EventKind::Created,
                         {{"design", s->design.to_json()}, {"schedule", s->schedule_spec.to_json()}},
                         s->created_at};
    store_->append(created);

    auto e = std::make_shared<Entry>();
    e->design = s->design.make_design(s->schedule.total);
    e->session = s;
    std::unique_lock lock(map_mutex_);
    sessions_[s->id] = e;
    return s;
}

std::shared_ptr<const Session> TrialService::get(const std::string& id) const {
    return entry(id)->snapshot();
}

std::shared_ptr<const Session> TrialService::record_cohort(const std::string& id, int dlt,
                                                           std::optional<int> expected_cohort) {
    auto e = entry(id);
    std::lock_guard lock(e->write_mutex);
    const Session& current = *e->session;
    if (current.status == SessionStatus::Complete) {
        throw ConflictError("session is complete");
    }
    if (expected_cohort && *expected_cohort != current.state.cohort_index) {
        throw ConflictError("cohort " + std::to_string(*expected_cohort) +
                            " is not awaiting data (next is " +
                            std::to_string(current.state.cohort_index) + ")");
    }

    auto next = std::make_shared<Session>(current);
    const int cohort = current.state.cohort_index;
    const int dose = current.state.current_dose;
    const int size = current.current_cohort_size();
    const Preview p = advance(*next, *e->design, dlt);

    const std::string ts = utc_timestamp();
    std::vector<SessionEvent> batch;
    batch.push_back({id, current.last_seq + 1, EventKind::CohortRecorded,
                     {{"cohort", cohort}, {"dose", dose}, {"size", size}, {"dlt", dlt}}, ts});
    if (p.completes_trial) {
        batch.push_back({id, current.last_seq + 2, EventKind::Finalized,
                         {{"selected_mtd", optional_int(next->selected_mtd)}}, ts});
    }
    for (const SessionEvent& ev : batch) {
        store_->append(ev);
    }
    next->last_seq = batch.back().seq;
    next->updated_at = ts;
    e->publish(next);
    return next;
}

Preview TrialService::whatif(const std::string& id, int dlt) const {
    auto e = entry(id);
    Session scratch = *e->snapshot();
    return advance(scratch, *e->design, dlt);
}

std::optional<int> TrialService::finalize(const std::string& id) const {
    const auto s = get(id);
    if (s->status != SessionStatus::Complete) {
        throw ConflictError(std::to_string(s->schedule.sizes.size() - s->history.size()) +
                            " cohort(s) still awaiting data");
    }
    return s->selected_mtd;
}

std::vector<SessionEvent> TrialService::events(const std::string& id) const {
    entry(id);
    return store_->load(id);
}

}  // namespace dosefind::trialsvc
