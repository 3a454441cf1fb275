#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "synthelite/pipeline/pipeline.hpp"

namespace synthelite::service {

enum class JobStatus { Queued, Running, AwaitingFeedback, Done, Failed };

std::string to_string(JobStatus status);
/// Throws SchemaError.
JobStatus job_status_from_string(const std::string& text);
/// The allowed moves of the job state machine. Running -> Running covers a restart.
bool transition_allowed(JobStatus from, JobStatus to);

struct Job {
    std::string id;
    std::string target_smiles; ///< canonical
    std::string prompt;
    pipeline::RunConfig config;
    bool interactive = false;
    std::string dedup_key;
    JobStatus status = JobStatus::Queued;
    int attempts_done = 0;
    std::string error;
    std::string created_at;
    std::string updated_at;
};

nlohmann::json to_json(const Job& job);
/// Throws SchemaError.
Job job_from_json(const nlohmann::json& j);

/// Plain-file job records under <root>/jobs/<id>/. Writes are atomic and
/// serialized per job.
class JobStore {
public:
    explicit JobStore(std::filesystem::path root);

    std::filesystem::path job_dir(const std::string& id) const;

    void save(const Job& job);
    /// Throws NotFoundError.
    Job load(const std::string& id) const;
    std::vector<Job> load_all() const;

    void write_attempt(const std::string& id, const planner::AttemptResult& attempt);
    std::vector<planner::AttemptResult> read_attempts(const std::string& id) const;
    void write_routes(const std::string& id, const std::vector<search::RouteCandidate>& routes);
    std::vector<search::RouteCandidate> read_routes(const std::string& id) const;

private:
    std::mutex& lock_for(const std::string& id);

    std::filesystem::path root_;
    std::mutex locks_mutex_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

struct SubmitRequest {
    std::string target_smiles;
    std::string prompt;                  ///< empty selects the neutral prompt
    nlohmann::json config = nullptr;     ///< RunConfig sections
    bool interactive = false;
    std::string dedup_key;
};

/// Throws ValidationError.
SubmitRequest submit_request_from_json(const nlohmann::json& j);

struct ManagerOptions {
    int workers = 2;
    std::size_t max_queue = 256;
};

/// Worker pool running jobs through both phases. Interactive jobs stop in
/// awaiting_feedback between attempts. Jobs left queued or running by an
/// earlier process are picked up again from their last stored attempt.
class JobManager {
public:
    JobManager(JobStore& store, const index::TemplateIndex& index, const chem::Stock& stock,
               std::shared_ptr<llm::LlmBackend> backend, llm::RetryPolicy policy = {},
               ManagerOptions options = {});
    ~JobManager();

    JobManager(const JobManager&) = delete;
    JobManager& operator=(const JobManager&) = delete;

    /// Throws ValidationError before any LLM call; CapacityError on a full queue.
    std::string submit(const SubmitRequest& request);
    /// Throws NotFoundError.
    Job status(const std::string& id) const;
    /// Ranked routes, empty until the job is done. Throws NotFoundError.
    std::vector<search::RouteCandidate> routes(const std::string& id) const;
    std::vector<planner::AttemptResult> attempts(const std::string& id) const;
    /// Appends "USER: text" to the latest attempt's feedback and resumes the
    /// job. Throws NotFoundError, WrongStateError.
    void add_feedback(const std::string& id, const std::string& text);

    /// Blocks until no job is queued or running.
    void wait_idle();

    std::map<std::string, std::size_t> counts() const;

private:
    void worker_loop();
    void run_job(const std::string& id);
    void update(const std::string& id, const std::function<void(Job&)>& change);
    void enqueue_locked(const std::string& id);

    JobStore& store_;
    const index::TemplateIndex& index_;
    const chem::Stock& stock_;
    std::shared_ptr<llm::LlmBackend> backend_;
    llm::RetryPolicy policy_;
    std::shared_ptr<llm::RateLimiter> limiter_;
    ManagerOptions options_;

    mutable std::mutex mutex_;
    std::condition_variable work_cv_;
    std::condition_variable idle_cv_;
    std::map<std::string, Job> jobs_;
    std::map<std::string, std::string> dedup_;
    std::deque<std::string> queue_;
    std::size_t active_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> threads_;
};

} // namespace synthelite::service
