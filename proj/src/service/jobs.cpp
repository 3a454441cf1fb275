#include "synthelite/service/jobs.hpp"

#include <algorithm>
#include <random>

#include "synthelite/error.hpp"
#include "synthelite/util/io.hpp"
#include "synthelite/util/log.hpp"

namespace synthelite::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<JobStatus, const char*>> kStatusNames{
    {JobStatus::Queued, "queued"},
    {JobStatus::Running, "running"},
    {JobStatus::AwaitingFeedback, "awaiting_feedback"},
    {JobStatus::Done, "done"},
    {JobStatus::Failed, "failed"},
};

std::string new_job_id() {
    static std::mutex m;
    static std::random_device rd;
    std::lock_guard lock(m);
    std::uniform_int_distribution<std::uint32_t> dist;
    std::string out;
    const char* hex = "0123456789abcdef";
    for (int i = 0; i < 4; ++i) {
        auto v = dist(rd);
        for (int b = 0; b < 8; ++b, v >>= 4) out += hex[v & 0xf];
    }
    return out;
}

} // namespace

std::string to_string(JobStatus status) {
    for (const auto& [s, name] : kStatusNames) {
        if (s == status) return name;
    }
    return "unknown";
}

JobStatus job_status_from_string(const std::string& text) {
    for (const auto& [s, name] : kStatusNames) {
        if (text == name) return s;
    }
    throw SchemaError("unknown job status: " + text);
}

bool transition_allowed(JobStatus from, JobStatus to) {
    switch (from) {
    case JobStatus::Queued: return to == JobStatus::Queued || to == JobStatus::Running || to == JobStatus::Failed;
    case JobStatus::Running: return to != JobStatus::Queued;
    case JobStatus::AwaitingFeedback: return to == JobStatus::AwaitingFeedback || to == JobStatus::Running;
    case JobStatus::Done:
    case JobStatus::Failed: return from == to;
    }
    return false;
}

json to_json(const Job& job) {
    return {{"id", job.id},
            {"target_smiles", job.target_smiles},
            {"prompt", job.prompt},
            {"config", pipeline::to_json(job.config)},
            {"interactive", job.interactive},
            {"dedup_key", job.dedup_key.empty() ? json(nullptr) : json(job.dedup_key)},
            {"status", to_string(job.status)},
            {"attempts_done", job.attempts_done},
            {"attempts_total", job.config.planner.attempts},
            {"error", job.error.empty() ? json(nullptr) : json(job.error)},
            {"created_at", job.created_at},
            {"updated_at", job.updated_at}};
}

Job job_from_json(const json& j) {
    Job job;
    try {
        job.id = j.at("id").get<std::string>();
        job.target_smiles = j.at("target_smiles").get<std::string>();
        job.prompt = j.at("prompt").get<std::string>();
        job.config = pipeline::run_config_from_json(j.at("config"));
        job.interactive = j.value("interactive", false);
        if (j.contains("dedup_key") && j["dedup_key"].is_string()) job.dedup_key = j["dedup_key"].get<std::string>();
        job.status = job_status_from_string(j.at("status").get<std::string>());
        job.attempts_done = j.value("attempts_done", 0);
        if (j.contains("error") && j["error"].is_string()) job.error = j["error"].get<std::string>();
        job.created_at = j.value("created_at", std::string{});
        job.updated_at = j.value("updated_at", std::string{});
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad job record: ") + e.what());
    } catch (const ValidationError& e) {
        throw SchemaError(std::string("bad job config: ") + e.what());
    }
    return job;
}

// ---- store -------------------------------------------------------------------

JobStore::JobStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_ / "jobs"); }

fs::path JobStore::job_dir(const std::string& id) const { return root_ / "jobs" / id; }

std::mutex& JobStore::lock_for(const std::string& id) {
    std::lock_guard lock(locks_mutex_);
    auto& m = locks_[id];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
}

void JobStore::save(const Job& job) {
    std::lock_guard lock(lock_for(job.id));
    fs::create_directories(job_dir(job.id));
    util::atomic_write(job_dir(job.id) / "job.json", to_json(job).dump(2) + "\n");
}

Job JobStore::load(const std::string& id) const {
    const auto path = job_dir(id) / "job.json";
    if (id.empty() || id.find_first_of("/\\.") != std::string::npos || !fs::exists(path)) {
        throw NotFoundError("no such job: " + id);
    }
    try {
        return job_from_json(json::parse(util::read_file(path)));
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

std::vector<Job> JobStore::load_all() const {
    std::vector<Job> out;
    for (const auto& entry : fs::directory_iterator(root_ / "jobs")) {
        if (!entry.is_directory()) continue;
        try {
            out.push_back(load(entry.path().filename().string()));
        } catch (const Error& e) {
            util::log_warn("skipping job directory " + entry.path().string() + ": " + e.what());
        }
    }
    std::sort(out.begin(), out.end(), [](const Job& a, const Job& b) {
        return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
    });
    return out;
}

void JobStore::write_attempt(const std::string& id, const planner::AttemptResult& attempt) {
    std::lock_guard lock(lock_for(id));
    pipeline::write_attempt(job_dir(id), attempt);
}

std::vector<planner::AttemptResult> JobStore::read_attempts(const std::string& id) const {
    return pipeline::read_attempts(job_dir(id));
}

void JobStore::write_routes(const std::string& id, const std::vector<search::RouteCandidate>& routes) {
    std::lock_guard lock(lock_for(id));
    pipeline::write_routes(job_dir(id), routes);
}

std::vector<search::RouteCandidate> JobStore::read_routes(const std::string& id) const {
    return pipeline::read_routes(job_dir(id));
}

// ---- manager -----------------------------------------------------------------

SubmitRequest submit_request_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    SubmitRequest r;
    try {
        r.target_smiles = j.at("target_smiles").get<std::string>();
        r.prompt = j.value("prompt", std::string{});
        if (j.contains("config")) r.config = j.at("config");
        r.interactive = j.value("interactive", false);
        if (j.contains("dedup_key") && !j["dedup_key"].is_null()) r.dedup_key = j["dedup_key"].get<std::string>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad job request: ") + e.what());
    }
    return r;
}

JobManager::JobManager(JobStore& store, const index::TemplateIndex& index, const chem::Stock& stock,
                       std::shared_ptr<llm::LlmBackend> backend, llm::RetryPolicy policy, ManagerOptions options)
    : store_(store), index_(index), stock_(stock), backend_(std::move(backend)), policy_(policy),
      limiter_(std::make_shared<llm::RateLimiter>()), options_(options) {
    if (options_.workers < 1) throw ValidationError("workers must be >= 1");
    for (auto& job : store_.load_all()) {
        if (!job.dedup_key.empty()) dedup_[job.dedup_key] = job.id;
        const auto id = job.id;
        const bool pending = job.status == JobStatus::Queued || job.status == JobStatus::Running;
        jobs_.emplace(id, std::move(job));
        if (pending) {
            util::log_info("resuming job " + id);
            queue_.push_back(id);
        }
    }
    for (int i = 0; i < options_.workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

JobManager::~JobManager() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    work_cv_.notify_all();
    for (auto& t : threads_) t.join();
}

std::string JobManager::submit(const SubmitRequest& request) {
    Job job;
    try {
        job.target_smiles = chem::canonicalize(util::trim(request.target_smiles)).smiles;
    } catch (const ParseError& e) {
        throw ValidationError(std::string("invalid target SMILES: ") + e.what());
    }
    if (job.target_smiles.empty()) throw ValidationError("target SMILES is empty");
    job.config = pipeline::run_config_from_json(request.config);
    job.config.planner.validate();
    job.config.search.validate();
    job.prompt = util::trim(request.prompt);
    if (job.prompt.empty()) job.prompt = pipeline::neutral_prompt();
    job.interactive = request.interactive;
    job.dedup_key = request.dedup_key;

    std::lock_guard lock(mutex_);
    if (!job.dedup_key.empty()) {
        if (auto it = dedup_.find(job.dedup_key); it != dedup_.end()) return it->second;
    }
    if (queue_.size() >= options_.max_queue) throw CapacityError("job queue is full");
    do {
        job.id = new_job_id();
    } while (jobs_.count(job.id));
    job.created_at = job.updated_at = util::utc_timestamp();
    store_.save(job);
    if (!job.dedup_key.empty()) dedup_[job.dedup_key] = job.id;
    const auto id = job.id;
    jobs_.emplace(id, std::move(job));
    enqueue_locked(id);
    return id;
}

Job JobManager::status(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw NotFoundError("no such job: " + id);
    return it->second;
}

std::vector<search::RouteCandidate> JobManager::routes(const std::string& id) const {
    if (status(id).status != JobStatus::Done) return {};
    return store_.read_routes(id);
}

std::vector<planner::AttemptResult> JobManager::attempts(const std::string& id) const {
    status(id);
    return store_.read_attempts(id);
}

void JobManager::add_feedback(const std::string& id, const std::string& text) {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw NotFoundError("no such job: " + id);
    Job& job = it->second;
    if (job.status != JobStatus::AwaitingFeedback) {
        throw WrongStateError("job " + id + " is " + to_string(job.status) + ", not awaiting_feedback");
    }
    const auto note = util::trim(text);
    if (!note.empty()) {
        auto history = store_.read_attempts(id);
        if (history.empty()) throw WrongStateError("job " + id + " has no attempt to annotate");
        auto& last = history.back();
        if (!last.feedback) last.feedback = llm::Feedback{};
        auto& overall = last.feedback->overall_feedback;
        if (!overall.empty()) overall += "\n";
        overall += "USER: " + note;
        store_.write_attempt(id, last);
    }
    job.status = JobStatus::Running;
    job.updated_at = util::utc_timestamp();
    store_.save(job);
    enqueue_locked(id);
}

void JobManager::wait_idle() {
    std::unique_lock lock(mutex_);
    idle_cv_.wait(lock, [this] { return queue_.empty() && active_ == 0; });
}

std::map<std::string, std::size_t> JobManager::counts() const {
    std::lock_guard lock(mutex_);
    std::map<std::string, std::size_t> out;
    for (const auto& [s, name] : kStatusNames) out[name] = 0;
    for (const auto& [_, job] : jobs_) ++out[to_string(job.status)];
    return out;
}

void JobManager::enqueue_locked(const std::string& id) {
    queue_.push_back(id);
    work_cv_.notify_one();
}

void JobManager::update(const std::string& id, const std::function<void(Job&)>& change) {
    std::lock_guard lock(mutex_);
    Job& job = jobs_.at(id);
    const auto before = job.status;
    change(job);
    if (!transition_allowed(before, job.status)) {
        throw WrongStateError("illegal job transition " + to_string(before) + " -> " + to_string(job.status));
    }
    job.updated_at = util::utc_timestamp();
    store_.save(job);
}

void JobManager::worker_loop() {
    for (;;) {
        std::string id;
        {
            std::unique_lock lock(mutex_);
            work_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
            ++active_;
        }
        run_job(id);
        {
            std::lock_guard lock(mutex_);
            --active_;
        }
        idle_cv_.notify_all();
    }
}

void JobManager::run_job(const std::string& id) {
    const Job job = status(id);
    try {
        const int total = job.config.planner.attempts;
        auto history = store_.read_attempts(id);
        if (static_cast<int>(history.size()) > total) history.resize(total);
        const int stored = static_cast<int>(history.size());
        // An attempt written after the last status save still owes its pause.
        const bool owes_pause = job.interactive && stored > job.attempts_done && stored < total;
        update(id, [&](Job& j) {
            j.attempts_done = stored;
            j.status = owes_pause ? JobStatus::AwaitingFeedback : JobStatus::Running;
        });
        if (owes_pause) return;

        const chem::Molecule target{job.target_smiles};
        llm::LlmClient client(backend_, policy_,
                              std::make_shared<llm::CallLedger>(store_.job_dir(id) / "llm_calls.jsonl"), limiter_);
        const planner::PlannerContext ctx{job.prompt, &index_, &stock_, &client, job.config.planner};
        while (static_cast<int>(history.size()) < total) {
            const int k = static_cast<int>(history.size()) + 1;
            auto attempt = planner::run_evaluated_attempt(target, history, k, ctx);
            store_.write_attempt(id, attempt);
            history.push_back(std::move(attempt));
            const bool pause = job.interactive && k < total;
            update(id, [&](Job& j) {
                j.attempts_done = k;
                if (pause) j.status = JobStatus::AwaitingFeedback;
            });
            util::log_info("job " + id + ": attempt " + std::to_string(k) + " stored");
            if (pause) return;
        }
        auto ranked = search::refine_attempts(history, target, stock_, index_, job.config.search, total);
        store_.write_routes(id, ranked);
        update(id, [](Job& j) { j.status = JobStatus::Done; });
    } catch (const std::exception& e) {
        util::log_error("job " + id + " failed: " + e.what());
        try {
            update(id, [&](Job& j) {
                j.status = JobStatus::Failed;
                j.error = e.what();
            });
        } catch (const std::exception& inner) {
            util::log_error("job " + id + ": cannot record failure: " + inner.what());
        }
    }
}

} // namespace synthelite::service
