#include <gtest/gtest.h>

#include <filesystem>
#include <future>
#include <thread>

#include <httplib.h>

#include "fixtures.hpp"
#include "synthelite/error.hpp"
#include "synthelite/pipeline/pipeline.hpp"
#include "synthelite/service/jobs.hpp"
#include "synthelite/service/server.hpp"

using namespace synthelite;
using service::JobStatus;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_store(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("synthelite_store_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    return dir;
}

// Scripted toy planner that records every prompt and can be held shut.
class SpyBackend : public llm::LlmBackend {
public:
    SpyBackend()
        : inner_(llm::ScriptedBackend::load(fixtures::toy_dir() / "plan_script.jsonl")) {}

    std::string name() const override { return "spy"; }
    llm::LlmResponse complete(const llm::LlmRequest& request) override {
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [this] { return open_; });
            prompts_.push_back(request.messages.back().content);
        }
        return inner_.complete(request);
    }

    void hold() {
        std::lock_guard lock(mutex_);
        open_ = false;
    }
    void release() {
        {
            std::lock_guard lock(mutex_);
            open_ = true;
        }
        cv_.notify_all();
    }
    std::vector<std::string> prompts() const {
        std::lock_guard lock(mutex_);
        return prompts_;
    }

private:
    llm::ScriptedBackend inner_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    bool open_ = true;
    std::vector<std::string> prompts_;
};

struct Service {
    explicit Service(const std::string& name, service::ManagerOptions options = {})
        : root(fresh_store(name)), store(root), spy(std::make_shared<SpyBackend>()),
          manager(std::make_unique<service::JobManager>(store, fixtures::toy_index(), fixtures::toy_stock(), spy,
                                                        llm::RetryPolicy{0, std::chrono::milliseconds(0)}, options)) {}

    fs::path root;
    service::JobStore store;
    std::shared_ptr<SpyBackend> spy;
    std::unique_ptr<service::JobManager> manager;
};

service::SubmitRequest toy_request(bool interactive = false) {
    service::SubmitRequest r;
    r.target_smiles = fixtures::kToyTarget;
    r.interactive = interactive;
    return r;
}

std::string expected_routes() {
    auto client = llm::LlmClient(std::make_shared<llm::ScriptedBackend>(
                                     llm::ScriptedBackend::load(fixtures::toy_dir() / "plan_script.jsonl")),
                                 llm::RetryPolicy{0, std::chrono::milliseconds(0)});
    auto result = pipeline::run_pipeline(chem::canonicalize(fixtures::kToyTarget), pipeline::neutral_prompt(),
                                         fixtures::toy_index(), fixtures::toy_stock(), client, {});
    return search::format_routes_jsonl(result.routes);
}

} // namespace

TEST(JobStatus, NamesAndTransitions) {
    for (auto s : {JobStatus::Queued, JobStatus::Running, JobStatus::AwaitingFeedback, JobStatus::Done,
                   JobStatus::Failed}) {
        EXPECT_EQ(service::job_status_from_string(service::to_string(s)), s);
    }
    EXPECT_THROW(service::job_status_from_string("paused"), SchemaError);
    EXPECT_TRUE(service::transition_allowed(JobStatus::Queued, JobStatus::Running));
    EXPECT_TRUE(service::transition_allowed(JobStatus::Running, JobStatus::AwaitingFeedback));
    EXPECT_TRUE(service::transition_allowed(JobStatus::AwaitingFeedback, JobStatus::Running));
    EXPECT_TRUE(service::transition_allowed(JobStatus::Running, JobStatus::Done));
    EXPECT_TRUE(service::transition_allowed(JobStatus::Running, JobStatus::Failed));
    EXPECT_FALSE(service::transition_allowed(JobStatus::Running, JobStatus::Queued));
    EXPECT_FALSE(service::transition_allowed(JobStatus::AwaitingFeedback, JobStatus::Done));
    EXPECT_FALSE(service::transition_allowed(JobStatus::Done, JobStatus::Running));
    EXPECT_FALSE(service::transition_allowed(JobStatus::Failed, JobStatus::Queued));
}

TEST(JobStore, RecordRoundTrip) {
    service::JobStore store(fresh_store("record"));
    service::Job job;
    job.id = "abc";
    job.target_smiles = "CCO";
    job.prompt = "p";
    job.config.planner.attempts = 2;
    job.dedup_key = "k";
    job.status = JobStatus::AwaitingFeedback;
    job.attempts_done = 1;
    store.save(job);
    auto back = store.load("abc");
    EXPECT_EQ(service::to_json(back), service::to_json(job));
    EXPECT_EQ(store.load_all().size(), 1u);
    EXPECT_THROW(store.load("nope"), NotFoundError);
    EXPECT_THROW(store.load("../abc"), NotFoundError);
}

TEST(JobManager, SubmissionIsQueuedWithNoRoutes) {
    Service s("queued", {1, 16});
    s.spy->hold();
    auto first = s.manager->submit(toy_request());
    auto second = s.manager->submit(toy_request());
    auto job = s.manager->status(second);
    EXPECT_EQ(job.status, JobStatus::Queued);
    EXPECT_EQ(job.attempts_done, 0);
    EXPECT_TRUE(s.manager->routes(second).empty());
    EXPECT_TRUE(fs::exists(s.store.job_dir(second) / "job.json"));
    EXPECT_EQ(s.manager->status(first).status, JobStatus::Running);
    s.spy->release();
    s.manager->wait_idle();
    EXPECT_EQ(s.manager->status(first).status, JobStatus::Done);
    EXPECT_EQ(s.manager->status(second).status, JobStatus::Done);
}

TEST(JobManager, InvalidSmilesRejectedBeforeAnyCall) {
    Service s("invalid");
    auto r = toy_request();
    r.target_smiles = "C1CC(";
    EXPECT_THROW(s.manager->submit(r), ValidationError);
    r.target_smiles = "";
    EXPECT_THROW(s.manager->submit(r), ValidationError);
    r = toy_request();
    r.config = json{{"planner", {{"max_steps", -1}}}};
    EXPECT_THROW(s.manager->submit(r), ValidationError);
    EXPECT_TRUE(s.spy->prompts().empty());
    EXPECT_TRUE(s.store.load_all().empty());
}

TEST(JobManager, OmittedPromptBecomesNeutral) {
    Service s("neutral");
    auto id = s.manager->submit(toy_request());
    EXPECT_EQ(s.manager->status(id).prompt, pipeline::neutral_prompt());
    EXPECT_EQ(s.manager->status(id).target_smiles, chem::canonicalize(fixtures::kToyTarget).smiles);
    s.manager->wait_idle();
}

TEST(JobManager, CompletedJobMatchesDiskAndDirectRun) {
    Service s("complete");
    auto id = s.manager->submit(toy_request());
    s.manager->wait_idle();
    auto job = s.manager->status(id);
    ASSERT_EQ(job.status, JobStatus::Done) << job.error;
    EXPECT_EQ(job.attempts_done, 3);
    auto routes = s.manager->routes(id);
    ASSERT_FALSE(routes.empty());
    const auto on_disk = util::read_file(s.store.job_dir(id) / "routes.jsonl");
    EXPECT_EQ(search::format_routes_jsonl(routes), on_disk);
    EXPECT_EQ(on_disk, expected_routes());
    EXPECT_FALSE(util::read_lines(s.store.job_dir(id) / "llm_calls.jsonl").empty());
}

TEST(JobManager, UnknownIdIsNotFound) {
    Service s("unknown");
    EXPECT_THROW(s.manager->status("missing"), NotFoundError);
    EXPECT_THROW(s.manager->routes("missing"), NotFoundError);
    EXPECT_THROW(s.manager->add_feedback("missing", "x"), NotFoundError);
}

TEST(JobManager, DedupKeyReturnsSameId) {
    Service s("dedup");
    auto r = toy_request();
    r.dedup_key = "batch-7";
    auto a = s.manager->submit(r);
    auto b = s.manager->submit(r);
    EXPECT_EQ(a, b);
    auto c = s.manager->submit(toy_request());
    EXPECT_NE(a, c);
    s.manager->wait_idle();
    // The key survives a restart.
    s.manager.reset();
    s.manager = std::make_unique<service::JobManager>(s.store, fixtures::toy_index(), fixtures::toy_stock(), s.spy,
                                                      llm::RetryPolicy{0, std::chrono::milliseconds(0)});
    EXPECT_EQ(s.manager->submit(r), a);
}

TEST(JobManager, InteractiveFeedbackReachesNextAttempt) {
    Service s("interactive");
    auto id = s.manager->submit(toy_request(true));
    s.manager->wait_idle();
    auto job = s.manager->status(id);
    ASSERT_EQ(job.status, JobStatus::AwaitingFeedback) << job.error;
    EXPECT_EQ(job.attempts_done, 1);
    EXPECT_TRUE(s.manager->routes(id).empty());

    const std::string note = "Please avoid ethanol as a reagent; use a methyl ester instead.";
    s.manager->add_feedback(id, note);
    s.manager->wait_idle();
    job = s.manager->status(id);
    ASSERT_EQ(job.status, JobStatus::AwaitingFeedback);
    EXPECT_EQ(job.attempts_done, 2);

    auto attempts = s.manager->attempts(id);
    ASSERT_TRUE(attempts[0].feedback.has_value());
    const auto& overall = attempts[0].feedback->overall_feedback;
    EXPECT_NE(overall.find("USER: " + note), std::string::npos);
    // Self-evaluation is kept; the user's note is added after it.
    EXPECT_NE(overall.find("USER: "), 0u);

    bool seen = false;
    for (const auto& p : s.spy->prompts()) {
        if (p.find("<previous_attempts>") != std::string::npos && p.find(note) != std::string::npos) seen = true;
    }
    EXPECT_TRUE(seen);

    // Empty feedback resumes on self-feedback alone.
    const auto before = s.manager->attempts(id)[1].feedback;
    s.manager->add_feedback(id, "  ");
    s.manager->wait_idle();
    job = s.manager->status(id);
    EXPECT_EQ(job.status, JobStatus::Done);
    EXPECT_EQ(job.attempts_done, 3);
    EXPECT_EQ(s.manager->attempts(id)[1].feedback, before);
    EXPECT_FALSE(s.manager->routes(id).empty());

    EXPECT_THROW(s.manager->add_feedback(id, "late"), WrongStateError);
}

TEST(JobManager, FeedbackOnRunningJobIsWrongState) {
    Service s("wrongstate");
    s.spy->hold();
    auto id = s.manager->submit(toy_request(true));
    EXPECT_THROW(s.manager->add_feedback(id, "x"), WrongStateError);
    s.spy->release();
    s.manager->wait_idle();
}

TEST(JobManager, ResumesFromLastStoredAttempt) {
    // An uninterrupted job provides the attempt files a crashed run would have left.
    Service ref("resume_ref");
    auto ref_id = ref.manager->submit(toy_request());
    ref.manager->wait_idle();
    const auto ref_attempts = ref.store.read_attempts(ref_id);
    const auto ref_routes = util::read_file(ref.store.job_dir(ref_id) / "routes.jsonl");

    const auto root = fresh_store("resume");
    {
        service::JobStore store(root);
        auto job = ref.store.load(ref_id);
        job.status = JobStatus::Running;
        job.attempts_done = 1;
        store.save(job);
        store.write_attempt(job.id, ref_attempts[0]);
    }
    service::JobStore store(root);
    auto spy = std::make_shared<SpyBackend>();
    service::JobManager manager(store, fixtures::toy_index(), fixtures::toy_stock(), spy,
                                llm::RetryPolicy{0, std::chrono::milliseconds(0)});
    manager.wait_idle();
    auto job = manager.status(ref_id);
    ASSERT_EQ(job.status, JobStatus::Done) << job.error;
    EXPECT_EQ(util::read_file(store.job_dir(ref_id) / "routes.jsonl"), ref_routes);
    // Attempt 1 was not re-planned.
    for (const auto& p : spy->prompts()) {
        if (p.find("<current_molecule>") != std::string::npos) {
            EXPECT_NE(p.find("<previous_attempts>"), std::string::npos);
        }
    }
}

TEST(JobManager, InteractiveCrashAfterAttemptStillPauses) {
    Service ref("pause_ref");
    auto ref_id = ref.manager->submit(toy_request(true));
    ref.manager->wait_idle();
    const auto attempt = ref.store.read_attempts(ref_id).at(0);

    const auto root = fresh_store("pause");
    {
        service::JobStore store(root);
        auto job = ref.store.load(ref_id);
        job.status = JobStatus::Running;
        job.attempts_done = 0;
        store.save(job);
        store.write_attempt(job.id, attempt);
    }
    service::JobStore store(root);
    service::JobManager manager(store, fixtures::toy_index(), fixtures::toy_stock(), std::make_shared<SpyBackend>(),
                                llm::RetryPolicy{0, std::chrono::milliseconds(0)});
    manager.wait_idle();
    EXPECT_EQ(manager.status(ref_id).status, JobStatus::AwaitingFeedback);
    EXPECT_EQ(manager.status(ref_id).attempts_done, 1);
}

TEST(JobManager, ObservedStatusesFollowStateMachine) {
    Service s("monotone");
    auto id = s.manager->submit(toy_request(true));
    std::vector<JobStatus> seen{s.manager->status(id).status};
    auto observe = [&] {
        for (int i = 0; i < 2000; ++i) {
            auto st = s.manager->status(id).status;
            if (st != seen.back()) seen.push_back(st);
            if (st == JobStatus::AwaitingFeedback || st == JobStatus::Done) break;
            std::this_thread::sleep_for(std::chrono::microseconds(200));
        }
    };
    observe();
    while (s.manager->status(id).status == JobStatus::AwaitingFeedback) {
        s.manager->add_feedback(id, "");
        seen.push_back(JobStatus::Running);
        observe();
    }
    s.manager->wait_idle();
    if (s.manager->status(id).status != seen.back()) seen.push_back(s.manager->status(id).status);
    EXPECT_EQ(seen.back(), JobStatus::Done);
    for (std::size_t i = 1; i < seen.size(); ++i) {
        EXPECT_TRUE(service::transition_allowed(seen[i - 1], seen[i]))
            << service::to_string(seen[i - 1]) << " -> " << service::to_string(seen[i]);
    }
}

TEST(JobManager, BackendFailureStillFinishes) {
    // Attempts end on backend failure; the job completes with unsolved routes.
    auto root = fresh_store("failing");
    service::JobStore store(root);
    service::JobManager manager(store, fixtures::toy_index(), fixtures::toy_stock(),
                                std::make_shared<llm::ScriptedBackend>(std::vector<llm::ScriptRule>{}),
                                llm::RetryPolicy{0, std::chrono::milliseconds(0)});
    auto id = manager.submit(toy_request());
    manager.wait_idle();
    auto job = manager.status(id);
    EXPECT_EQ(job.status, JobStatus::Done);
    for (const auto& a : manager.attempts(id)) EXPECT_EQ(a.stop_reason, planner::StopReason::BackendFailure);
}

// ---- HTTP --------------------------------------------------------------------

namespace {

struct Api {
    explicit Api(const std::string& name) : svc(name) {
        service::register_api(server, *svc.manager);
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~Api() {
        server.stop();
        thread.join();
    }

    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }

    Service svc;
    httplib::Server server;
    int port = 0;
    std::thread thread;
};

json body_of(const httplib::Result& r) { return json::parse(r->body); }

} // namespace

TEST(HttpApi, Health) {
    Api api("http_health");
    auto r = api.client().Get("/api/health");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(body_of(r)["status"], "ok");
    EXPECT_EQ(body_of(r)["jobs"]["queued"], 0);
}

TEST(HttpApi, SubmitPollAndRoutes) {
    Api api("http_run");
    auto cli = api.client();
    auto r = cli.Post("/api/jobs", json{{"target_smiles", fixtures::kToyTarget}}.dump(), "application/json");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 201) << r->body;
    const auto id = body_of(r)["id"].get<std::string>();

    api.svc.manager->wait_idle();
    r = cli.Get("/api/jobs/" + id);
    ASSERT_EQ(r->status, 200);
    auto job = body_of(r);
    EXPECT_EQ(job["status"], "done");
    EXPECT_EQ(job["attempts_done"], 3);
    EXPECT_EQ(job["attempts"].size(), 3u);
    EXPECT_EQ(job["prompt"], pipeline::neutral_prompt());

    r = cli.Get("/api/jobs/" + id + "/routes");
    ASSERT_EQ(r->status, 200);
    auto all = body_of(r)["routes"];
    ASSERT_FALSE(all.empty());
    EXPECT_EQ(job["routes_count"], all.size());
    for (const auto& route : all) {
        EXPECT_TRUE(route.contains("alignment"));
        EXPECT_TRUE(route.contains("solved"));
        EXPECT_TRUE(route.contains("attempt_index"));
    }
    r = cli.Get("/api/jobs/" + id + "/routes?k=1");
    EXPECT_EQ(body_of(r)["routes"].size(), 1u);
    EXPECT_EQ(body_of(r)["routes"][0], all[0]);
    r = cli.Get("/api/jobs/" + id + "/routes?k=0");
    EXPECT_EQ(r->status, 400);
    r = cli.Get("/api/jobs/" + id + "/routes?k=abc");
    EXPECT_EQ(r->status, 400);

    r = cli.Post("/api/jobs/" + id + "/feedback", json{{"text", "x"}}.dump(), "application/json");
    EXPECT_EQ(r->status, 409);
    EXPECT_EQ(body_of(r)["code"], "wrong_state");
    EXPECT_TRUE(body_of(r)["message"].is_string());
}

TEST(HttpApi, InteractiveFeedbackEndpoint) {
    Api api("http_feedback");
    auto cli = api.client();
    auto r = cli.Post("/api/jobs",
                      json{{"target_smiles", fixtures::kToyTarget}, {"interactive", true},
                           {"config", {{"planner", {{"attempts", 2}}}}}}
                          .dump(),
                      "application/json");
    ASSERT_EQ(r->status, 201) << r->body;
    const auto id = body_of(r)["id"].get<std::string>();
    api.svc.manager->wait_idle();
    EXPECT_EQ(body_of(cli.Get("/api/jobs/" + id))["status"], "awaiting_feedback");
    EXPECT_TRUE(body_of(cli.Get("/api/jobs/" + id + "/routes"))["routes"].empty());

    r = cli.Post("/api/jobs/" + id + "/feedback", json{{"text", "keep the ester"}}.dump(), "application/json");
    ASSERT_EQ(r->status, 200) << r->body;
    api.svc.manager->wait_idle();
    auto job = body_of(cli.Get("/api/jobs/" + id));
    EXPECT_EQ(job["status"], "done");
    EXPECT_NE(job["attempts"][0]["feedback"]["overall_feedback"].get<std::string>().find("USER: keep the ester"),
              std::string::npos);
}

TEST(HttpApi, Errors) {
    Api api("http_errors");
    auto cli = api.client();
    auto r = cli.Post("/api/jobs", json{{"target_smiles", "C1CC("}}.dump(), "application/json");
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(body_of(r)["code"], "validation_error");
    r = cli.Post("/api/jobs", json{{"prompt", "x"}}.dump(), "application/json");
    EXPECT_EQ(r->status, 400);
    r = cli.Post("/api/jobs", "{not json", "application/json");
    EXPECT_EQ(r->status, 400);
    EXPECT_EQ(body_of(r)["code"], "bad_request");
    r = cli.Post("/api/jobs", json{{"target_smiles", "CCO"}, {"config", {{"bogus", {}}}}}.dump(), "application/json");
    EXPECT_EQ(r->status, 400);
    r = cli.Get("/api/jobs/doesnotexist");
    EXPECT_EQ(r->status, 404);
    EXPECT_EQ(body_of(r)["code"], "not_found");
    r = cli.Get("/api/jobs/doesnotexist/routes");
    EXPECT_EQ(r->status, 404);
    r = cli.Post("/api/jobs/doesnotexist/feedback", json{{"text", "x"}}.dump(), "application/json");
    EXPECT_EQ(r->status, 404);
    EXPECT_TRUE(api.svc.spy->prompts().empty());
}
