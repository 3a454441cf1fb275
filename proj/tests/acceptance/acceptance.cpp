// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "../unit/fixtures.hpp"
#include "../unit/search_oracle.hpp"
#include "synthelite/error.hpp"
#include "synthelite/pipeline/pipeline.hpp"
#include "synthelite/routes/metrics.hpp"
#include "synthelite/util/log.hpp"
#include "synthelite/search/mcts.hpp"

extern char** environ;

using namespace synthelite;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Collects failed expectations of one criterion.
struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok && failures.size() < 5) failures.push_back(what);
        if (!ok) ++failed;
    }
    Outcome done(const std::string& summary) const {
        if (failed == 0) return {true, summary};
        std::string d = std::to_string(failed) + " failed: ";
        for (std::size_t i = 0; i < failures.size(); ++i) d += (i ? "; " : "") + failures[i];
        return {false, d};
    }
    int failed = 0;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("synthelite_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

llm::LlmClient plan_client(const fs::path& script = fixtures::toy_dir() / "plan_script.jsonl") {
    return llm::LlmClient(std::make_shared<llm::ScriptedBackend>(llm::ScriptedBackend::load(script)),
                          llm::RetryPolicy{0, std::chrono::milliseconds(0)});
}

// ---- P1 -----------------------------------------------------------------------

Outcome p1() {
    Check c;
    search::ScoringParams half;
    c.expect(std::abs(search::action_logit(1.0, 100, half) - 0.75) <= 1e-12, "logit(1, 100) != 0.75");
    c.expect(std::abs(search::action_logit(0.0, 0, half)) <= 1e-12, "logit(0, 0) != 0");
    search::ScoringParams one;
    one.alpha = 1.0;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> sim(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double s = sim(rng);
        const auto n = static_cast<std::int64_t>(rng() % 100000);
        c.expect(std::abs(search::action_logit(s, n, one) - s) <= 1e-12, "alpha=1 does not collapse to sim");
    }
    return c.done("action_logit(1,100)=0.75, (0,0)=0, alpha=1 collapse over 1000 draws");
}

// ---- P2 -----------------------------------------------------------------------

Outcome p2() {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    const auto target = chem::canonicalize(fixtures::kToyTarget);
    std::vector<std::string> files;
    pipeline::RunResult last;
    for (int run = 0; run < 2; ++run) {
        auto client = plan_client();
        last = pipeline::run_pipeline(target, pipeline::neutral_prompt(), fixtures::toy_index(), fixtures::toy_stock(),
                                      client, {});
        const auto dir = work_dir() / ("p2_run" + std::to_string(run));
        pipeline::write_run(dir, last);
        files.push_back(util::read_file(dir / "routes.jsonl"));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.expect(fixtures::toy_index().size() + 2 == 60, "toy library is not 60 templates");
    c.expect(!files[0].empty() && files[0] == files[1], "routes.jsonl differs between runs");
    c.expect(!last.routes.empty() && last.routes[0].solved, "top route not solved");
    c.expect(!last.routes.empty() && routes::reaction_count(last.routes[0].route) == 3, "top route is not 3 steps");
    c.expect(!last.routes.empty() && routes::is_solved(last.routes[0].route, fixtures::toy_stock()),
             "top route has leaves outside stock");
    c.expect(secs < 30.0, "took " + std::to_string(secs) + " s");
    std::ostringstream s;
    s << "two scripted runs, " << last.routes.size() << " routes, byte-identical routes.jsonl in " << secs << " s";
    return c.done(s.str());
}

// ---- P3 -----------------------------------------------------------------------

Outcome p3() {
    Check c;
    const auto& idx = fixtures::toy_index();
    const auto bp = fixtures::toy_blueprint();
    const auto target = chem::canonicalize(fixtures::kToyTarget);
    c.expect(bp.depth() == 3, "blueprint depth " + std::to_string(bp.depth()));
    search::ScoringParams p;
    p.iterations = 300;

    idx.reset_query_count();
    search::SearchStats solvable;
    search::run_search(bp, target, fixtures::toy_stock(), idx, p, 1, &solvable);
    c.expect(idx.query_count() == 3, "toy stock: " + std::to_string(idx.query_count()) + " queries");

    // Without the nitro acid and ethanol in stock the tree is too large to be
    // exhausted, so the whole iteration budget is spent.
    const std::set<std::string> dropped{chem::canonicalize("[O-][N+](=O)c1ccc(C(=O)O)cc1").smiles,
                                        chem::canonicalize("CCO").smiles};
    std::vector<std::string> members;
    for (const auto& m : fixtures::toy_stock().members()) {
        if (!dropped.count(m)) members.push_back(m);
    }
    c.expect(members.size() + 2 == fixtures::toy_stock().members().size(), "reduced stock is wrong");
    const chem::Stock reduced(members);
    idx.reset_query_count();
    search::SearchStats full;
    search::run_search(bp, target, reduced, idx, p, 1, &full);
    c.expect(idx.query_count() == 3, "reduced stock: " + std::to_string(idx.query_count()) + " queries");
    c.expect(full.iterations == 300, "reduced stock ran " + std::to_string(full.iterations) + " iterations");
    std::ostringstream s;
    s << "3 index queries over " << solvable.iterations << " iterations (tree exhausted) and over "
      << full.iterations << " iterations (" << full.nodes << " nodes)";
    return c.done(s.str());
}

// ---- P4 -----------------------------------------------------------------------

Outcome p4() {
    Check c;
    const auto bp = fixtures::toy_blueprint();
    search::ScoringParams p;
    p.alpha = 1.0;
    const auto ranked = search::rank_routes(
        search::run_search(bp, chem::canonicalize(fixtures::kToyTarget), fixtures::toy_stock(), fixtures::toy_index(), p),
        1);
    std::vector<std::string> expected;
    for (const auto& s : bp.steps) expected.push_back(s.reference.retro_smiles());
    std::sort(expected.begin(), expected.end());
    c.expect(!ranked.empty(), "no routes");
    if (!ranked.empty()) {
        c.expect(ranked[0].solved, "top route unsolved");
        c.expect(routes::reaction_multiset(ranked[0].route) == expected, "top route multiset differs from blueprint");
    }
    return c.done("alpha=1 top route equals the 3-reaction blueprint multiset");
}

// ---- P5 -----------------------------------------------------------------------

Outcome p5() {
    Check c;
    std::vector<routes::CaseOutcome> cases;
    for (int i = 0; i < 27; ++i) cases.push_back({"c" + std::to_string(i), {i < 24, i % 2 == 0}});
    c.expect(std::abs(routes::recall_at_k(cases, 1) - 24.0 / 27.0) <= 1e-9, "recall@1 != 24/27");

    auto solve = [](int hits, int total) {
        std::vector<routes::CaseOutcome> v;
        for (int i = 0; i < total; ++i) v.push_back({"s" + std::to_string(i), {false, i < hits}});
        return routes::solve_rate(v);
    };
    c.expect(std::abs(solve(19, 20) - 0.95) <= 1e-12, "solve_rate 19/20 != 0.95");
    c.expect(std::abs(solve(12, 20) - 0.60) <= 1e-12, "solve_rate 12/20 != 0.60");

    std::mt19937 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<routes::CaseOutcome> v(1 + rng() % 30);
        for (auto& co : v) {
            co.passes.resize(rng() % 35);
            for (std::size_t j = 0; j < co.passes.size(); ++j) co.passes[j] = rng() % 4 == 0;
        }
        double prev = 0.0;
        for (std::size_t k = 1; k <= 40; ++k) {
            const double r = routes::recall_at_k(v, k);
            c.expect(r >= prev, "recall@K decreased at trial " + std::to_string(trial));
            prev = r;
        }
    }
    return c.done("recall@1 = 24/27, solve rates 19/20 and 12/20, recall@K monotone over 200 random sets");
}

// ---- P6 -----------------------------------------------------------------------

json load_data(const std::string& name) {
    std::ifstream in(std::string(SYNTHELITE_TEST_DATA) + "/" + name);
    return json::parse(in);
}

Outcome p6() {
    Check c;
    const auto suite = load_data("template_suite.json");
    const auto oracle = load_data("template_oracle.json");
    std::map<std::string, std::string> smarts;
    for (const auto& t : suite["templates"]) smarts[t["id"]] = t["smarts"];
    std::set<std::string> templates, molecules;
    for (const auto& cs : oracle["cases"]) {
        templates.insert(cs["template"].get<std::string>());
        molecules.insert(cs["molecule"].get<std::string>());
        const chem::RetroTemplate tmpl(cs["template"], smarts.at(cs["template"]));
        const auto product = chem::canonicalize(cs["molecule"].get<std::string>());
        std::vector<std::vector<std::string>> ours, theirs;
        for (const auto& r : chem::apply_template(tmpl, product)) {
            std::vector<std::string> set;
            for (const auto& m : r.reactants) set.push_back(m.smiles);
            ours.push_back(std::move(set));
        }
        for (const auto& o : cs["outcomes"]) {
            std::vector<std::string> set;
            for (const auto& s : o) set.push_back(chem::canonicalize(s.get<std::string>()).smiles);
            std::sort(set.begin(), set.end());
            set.erase(std::unique(set.begin(), set.end()), set.end());
            theirs.push_back(std::move(set));
        }
        std::sort(ours.begin(), ours.end());
        std::sort(theirs.begin(), theirs.end());
        c.expect(ours == theirs, tmpl.id() + " on " + product.smiles);
    }
    c.expect(templates.size() == 20 && molecules.size() == 10, "oracle suite is not 20 x 10");

    int in_scope = 0;
    for (const auto& t : fixtures::search_oracle_trials()) {
        if (!t.in_scope) continue;
        ++in_scope;
        c.expect(t.found == t.expected, "search vs enumeration: " + t.label);
    }
    c.expect(in_scope >= 20, "only " + std::to_string(in_scope) + " in-scope search instances");
    std::ostringstream s;
    s << oracle["cases"].size() << " template cases match the toolkit oracle; " << in_scope
      << " search instances match enumeration";
    return c.done(s.str());
}

// ---- P7 -----------------------------------------------------------------------

std::string random_text(std::mt19937_64& rng) {
    static const std::string alphabet = "abcXYZ019 ,.;:()[]{}#/\\\"'=+-@>\n\t";
    std::string s;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
    s = util::trim(s);
    return s.empty() ? "x" : s;
}

std::vector<int> random_ints(std::mt19937_64& rng) {
    std::vector<int> v(rng() % 7);
    for (auto& x : v) x = static_cast<int>(rng() % 500);
    return v;
}

Outcome p7() {
    Check c;
    std::mt19937_64 rng(17);
    for (int i = 0; i < 500; ++i) {
        const auto pre = random_text(rng) + "\n";
        const auto post = "\n" + random_text(rng);

        const bool stop = rng() % 2;
        c.expect(llm::parse_stop(pre + (stop ? llm::format_tag("stop_signal", "TRUE") : "") + post) == stop,
                 "stop signal");

        const auto atoms = random_ints(rng);
        llm::NextStep step{random_text(rng), random_text(rng), static_cast<int>(rng() % 20), atoms};
        c.expect(llm::parse_next_step(pre + llm::format_next_step(step) + post) == step, "atom indices");

        const auto ranks = random_ints(rng);
        c.expect(llm::parse_int_list(pre + llm::format_tag("selected_reaction_indices", llm::format_int_list(ranks)) +
                                         post,
                                     "selected_reaction_indices") == ranks,
                 "selection");

        llm::SynthesisPlan plan;
        plan.target_smiles = random_text(rng);
        plan.expandable_molecules = {random_text(rng)};
        plan.user_constraint = random_text(rng);
        plan.previous_steps = {{1, random_text(rng), random_text(rng)}};
        plan.strategy_overview = random_text(rng);
        plan.step_estimate = random_text(rng);
        plan.next_steps = {{2, "", random_text(rng)}};
        plan.additional_notes = random_text(rng);
        c.expect(llm::parse_plan(pre + llm::format_tag("synthesis_plan", llm::to_json(plan).dump(2)) + post) == plan,
                 "synthesis_plan");

        llm::Feedback fb{random_text(rng), {{1 + static_cast<int>(rng() % 9), random_text(rng)}}};
        c.expect(llm::parse_feedback(pre + llm::format_tag("feedback", llm::to_json(fb).dump(4)) + post) == fb,
                 "feedback");
    }
    c.expect(llm::format_int_list({3, 7}) == "[3, 7]", "atom list format");
    c.expect(llm::format_int_list({0, 2, 3}) == "[0, 2, 3]", "selection format");
    return c.done("500 randomized round trips each for stop, atom indices, selection, plan and feedback tags");
}

// ---- P8 -----------------------------------------------------------------------

llm::LlmClient judge_client(const std::vector<std::pair<std::uint64_t, std::string>>& answers) {
    std::vector<llm::ScriptRule> rules;
    for (const auto& [seed, text] : answers) {
        llm::ScriptRule r;
        r.match = {"<route>"};
        r.seed = seed;
        r.response = text;
        r.times = 1;
        rules.push_back(std::move(r));
    }
    return llm::LlmClient(std::make_shared<llm::ScriptedBackend>(std::move(rules)), llm::RetryPolicy{0, {}});
}

Outcome p8() {
    Check c;
    std::vector<chem::RetroReaction> all;
    const auto bp = fixtures::toy_blueprint();
    routes::RouteBuilder b(chem::canonicalize(fixtures::kToyTarget), fixtures::toy_stock());
    for (const auto& s : bp.steps) {
        for (std::size_t i = 0; i < b.frontier().size(); ++i) {
            if (b.frontier()[i].molecule == s.reference.product) {
                b.expand(i, s.reference);
                break;
            }
        }
    }
    const auto route = b.route();
    c.expect(routes::judge_feasibility(route, judge_client({{1, "<score>5</score>"}, {2, "<score>7</score>"},
                                                            {3, "<score>6</score>"}})) == 7,
             "(5,7,6) did not give 7");
    for (const char* bad : {"0", "11", "-3", "eleven"}) {
        const std::string reply = std::string("<score>") + bad + "</score>";
        bool rejected = false;
        try {
            routes::judge_feasibility(route, judge_client({{1, reply}, {1, reply}}));
        } catch (const ScoreParseError&) {
            rejected = true;
        }
        c.expect(rejected, std::string("score ") + bad + " accepted");
    }
    return c.done("scores (5,7,6) give 7; 0, 11, -3 and 'eleven' rejected");
}

// ---- P9 -----------------------------------------------------------------------

Outcome p9() {
    Check c;
    const auto found = search::run_search(fixtures::toy_blueprint(), chem::canonicalize(fixtures::kToyTarget),
                                          fixtures::toy_stock(), fixtures::toy_index(), {});
    std::vector<routes::Route> pool;
    for (const auto& f : found) {
        if (f.solved) pool.push_back(f.route);
    }
    c.expect(pool.size() >= 4, "too few distinct solved routes");
    std::mt19937 rng(9);
    int trials = 0;
    for (int trial = 0; trial < 500 && pool.size() >= 2; ++trial, ++trials) {
        const int attempts = 2 + static_cast<int>(rng() % 4);
        const double alignment = 1.0 / (1 + rng() % 3);
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::size_t n = 2 + rng() % (pool.size() - 1);
        std::vector<search::RouteCandidate> cands;
        for (std::size_t i = 0; i < n; ++i) cands.push_back({pool[i], alignment, 1 + static_cast<int>(rng() % attempts), true});
        int latest = 0;
        for (const auto& cd : cands) latest = std::max(latest, cd.attempt_index);
        const auto ranked = search::rank_routes(cands, attempts);
        c.expect(ranked.size() == n, "dedup dropped distinct routes");
        c.expect(!ranked.empty() && ranked[0].attempt_index == latest, "latest attempt not first");
        for (std::size_t i = 1; i < ranked.size(); ++i) {
            c.expect(ranked[i - 1].attempt_index >= ranked[i].attempt_index, "ranking not ordered by attempt");
        }
    }
    return c.done(std::to_string(trials) + " randomized candidate sets rank the later attempt first");
}

// ---- P10 ----------------------------------------------------------------------

int free_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

struct Server {
    pid_t pid = -1;
    int port = 0;

    Server(const fs::path& store, const fs::path& index, const fs::path& script) : port(free_port()) {
        std::vector<std::string> args{SYNTHELITE_CLI, "serve", "--port", std::to_string(port), "--store",
                                      store.string(), "--index", index.string(), "--stock",
                                      (fixtures::toy_dir() / "stock.smi").string(), "--llm",
                                      "scripted:" + script.string(), "--retries", "0"};
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        if (posix_spawn(&pid, SYNTHELITE_CLI, nullptr, nullptr, argv.data(), environ) != 0) {
            throw Error("cannot start the service binary");
        }
        httplib::Client cli("127.0.0.1", port);
        for (int i = 0; i < 200; ++i) {
            if (auto r = cli.Get("/api/health"); r && r->status == 200) return;
            std::this_thread::sleep_for(std::chrono::milliseconds(25));
        }
        kill();
        throw Error("service did not come up");
    }
    ~Server() { kill(); }

    void kill(int sig = SIGKILL) {
        if (pid <= 0) return;
        ::kill(pid, sig);
        int status = 0;
        ::waitpid(pid, &status, 0);
        pid = -1;
    }
    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

json get_job(const Server& s, const std::string& id) {
    auto r = s.client().Get("/api/jobs/" + id);
    if (!r || r->status != 200) throw Error("job lookup failed");
    return json::parse(r->body);
}

// Polls until pred(job) holds; returns the last job seen.
json wait_for(const Server& s, const std::string& id, const std::function<bool(const json&)>& pred, int timeout_ms) {
    json job;
    for (int waited = 0; waited < timeout_ms; waited += 5) {
        job = get_job(s, id);
        if (pred(job)) return job;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return job;
}

std::string submit(const Server& s) {
    auto r = s.client().Post("/api/jobs", json{{"target_smiles", fixtures::kToyTarget}}.dump(), "application/json");
    if (!r || r->status != 201) throw Error("submission failed");
    return json::parse(r->body)["id"].get<std::string>();
}

Outcome p10() {
    Check c;
    const auto root = work_dir() / "p10";
    const auto index_dir = root / "index";
    fixtures::toy_index().save(index_dir);

    // Slow every scripted answer so the kill lands between attempt boundaries.
    const auto script = root / "slow_plan.jsonl";
    std::string slow;
    for (const auto& line : util::read_lines(fixtures::toy_dir() / "plan_script.jsonl")) {
        if (util::trim(line).empty()) continue;
        auto j = json::parse(line);
        j["delay_ms"] = 40;
        slow += j.dump() + "\n";
    }
    util::atomic_write(script, slow);

    std::string reference;
    {
        Server s(root / "store_ref", index_dir, script);
        const auto id = submit(s);
        const auto job = wait_for(s, id, [](const json& j) { return j["status"] != "queued" && j["status"] != "running"; }, 60000);
        c.expect(job["status"] == "done", "uninterrupted job ended " + job["status"].dump());
        reference = util::read_file(root / "store_ref" / "jobs" / id / "routes.jsonl");
    }

    const auto store = root / "store";
    std::string id;
    int attempts_at_kill = 0;
    {
        Server s(store, index_dir, script);
        id = submit(s);
        const auto job = wait_for(s, id, [](const json& j) { return j["attempts_done"].get<int>() >= 1; }, 60000);
        s.kill(SIGKILL);
        attempts_at_kill = job["attempts_done"].get<int>();
        const auto record = json::parse(util::read_file(store / "jobs" / id / "job.json"));
        c.expect(record["status"] == "running", "job was " + record["status"].dump() + " when killed");
        c.expect(!fs::exists(store / "jobs" / id / "routes.jsonl"), "job finished before the kill");
    }
    std::string resumed;
    {
        Server s(store, index_dir, script);
        const auto job = wait_for(s, id, [](const json& j) { return j["status"] == "done" || j["status"] == "failed"; }, 60000);
        c.expect(job["status"] == "done", "resumed job ended " + job["status"].dump());
        resumed = util::read_file(store / "jobs" / id / "routes.jsonl");
        auto r = s.client().Get("/api/jobs/" + id + "/routes");
        const auto served = json::parse(r->body).at("routes");
        c.expect(served.size() == search::parse_routes_jsonl(resumed).size(),
                 "served " + std::to_string(served.size()) + " routes, disk has " +
                     std::to_string(search::parse_routes_jsonl(resumed).size()));
    }
    c.expect(!reference.empty() && resumed == reference, "resumed route set differs from the uninterrupted run");
    return c.done("killed after attempt " + std::to_string(attempts_at_kill) +
                  ", restarted, route set identical to the uninterrupted run");
}

} // namespace

int main() {
    util::set_log_level(util::LogLevel::Error);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"P1", p1}, {"P2", p2}, {"P3", p3}, {"P4", p4}, {"P5", p5},
        {"P6", p6}, {"P7", p7}, {"P8", p8}, {"P9", p9}, {"P10", p10},
    };
    int failed = 0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& [name, run] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%-4s %s  %s (%.2fs)\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d/%zu passed in %.1fs\n", static_cast<int>(criteria.size()) - failed, criteria.size(), total);
    fs::remove_all(work_dir());
    return failed == 0 ? 0 : 1;
}
