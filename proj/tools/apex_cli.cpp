// Command line front end: ingest KG files, generate query logs, replay them
// under the auto-regressive protocol and sweep one parameter axis.
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apex/eval.hpp"
#include "apex/kg.hpp"
#include "apex/query.hpp"
#include "apex/summarize.hpp"

namespace fs = std::filesystem;
using namespace apex;

namespace {

struct KgOptions {
    std::string path;
    KgFormat format = KgFormat::Tab3;
};

void add_kg_options(CLI::App& cmd, KgOptions& opts) {
    cmd.add_option("--kg", opts.path, "knowledge graph file")->required()->check(CLI::ExistingFile);
    const std::map<std::string, KgFormat> formats{
        {"tab3", KgFormat::Tab3}, {"nt", KgFormat::NTriples}, {"pipe3", KgFormat::Pipe3}};
    cmd.add_option("--format", opts.format, "input format")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
}

KnowledgeGraph load_kg(const KgOptions& opts, LoadStats* stats = nullptr) {
    std::ifstream in(opts.path);
    if (!in) throw std::runtime_error("cannot open " + opts.path);
    return KnowledgeGraph::load(in, opts.format, stats);
}

// Replace-by-rename so a crash never leaves a half-written file behind.
void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::vector<Method> resolve_methods(const std::vector<std::string>& names) {
    bool wanted[4] = {false, false, false, false};
    for (const std::string& name : names) {
        if (name == "all") {
            for (bool& w : wanted) w = true;
            continue;
        }
        const auto m = method_from_name(name);
        if (!m) throw std::runtime_error("unknown method: " + name);
        wanted[static_cast<int>(*m)] = true;
    }
    std::vector<Method> out;
    for (Method m : {Method::Apex2, Method::Apex2N, Method::Glimpse, Method::Ppr}) {
        if (wanted[static_cast<int>(m)]) out.push_back(m);
    }
    if (out.empty()) throw std::runtime_error("no methods selected");
    return out;
}

std::vector<QueryLog> read_logs(const std::vector<std::string>& paths, const KnowledgeGraph& kg) {
    std::vector<QueryLog> logs;
    for (const std::string& p : paths) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("cannot open " + p);
        std::size_t dropped = 0;
        QueryLog log = read_query_log(in, kg, &dropped);
        if (dropped > 0) {
            std::cerr << "warning: " << dropped << " unusable lines in " << p << "\n";
        }
        if (log.empty()) throw std::runtime_error("no usable queries in " + p);
        logs.push_back(std::move(log));
    }
    return logs;
}

void print_aggregates(const std::vector<MethodAggregate>& aggs) {
    std::printf("%-8s %9s %9s %12s %12s %6s %8s\n", "method", "mean_f1", "std_f1", "mean_s",
                "median_s", "users", "records");
    for (const MethodAggregate& a : aggs) {
        std::printf("%-8s %9.4f %9.4f %12.6f %12.6f %6zu %8zu\n",
                    std::string(method_name(a.method)).c_str(), a.mean_f1, a.std_f1,
                    a.mean_step_seconds, a.median_step_seconds, a.users, a.records);
    }
}

std::string csv_text(const EvalReport& report) {
    std::ostringstream out;
    write_csv(out, report);
    return out.str();
}

// Final summaries over one full log, for eyeballing what each method keeps.
void export_case_study(const fs::path& dir,
                       const KnowledgeGraph& kg,
                       const QueryLog& log,
                       const std::vector<Method>& methods,
                       const RunConfig& cfg) {
    fs::create_directories(dir);
    for (Method m : methods) {
        Pkg pkg;
        switch (m) {
            case Method::Apex2: {
                Apex2Pipeline pipe(kg, cfg.summarizer);
                for (const Query& q : log) pipe.step({q});
                pkg = pipe.pkg();
                break;
            }
            case Method::Apex2N: {
                Apex2NPipeline pipe(kg, cfg.summarizer);
                for (const Query& q : log) pipe.step({q});
                pkg = pipe.pkg();
                break;
            }
            case Method::Glimpse:
                pkg = glimpse_summarize(kg, log, cfg.glimpse, cfg.seed);
                break;
            case Method::Ppr:
                pkg = ppr_summarize(kg, log, cfg.ppr);
                break;
        }
        std::string base(method_name(m));
        for (char& c : base) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

        std::ostringstream dot;
        export_pkg_dot(dot, pkg, kg);
        write_file_atomic(dir / (base + ".dot"), dot.str());

        std::ostringstream tab;
        export_pkg_tab3(tab, pkg, kg);
        write_file_atomic(dir / (base + ".tab3"), tab.str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive personalized knowledge graph summarization"};
    app.require_subcommand(1);

    // ingest
    KgOptions ingest_kg;
    std::string ingest_export;
    CLI::App* ingest = app.add_subcommand("ingest", "load a KG file and print stats");
    add_kg_options(*ingest, ingest_kg);
    ingest->add_option("--export", ingest_export, "re-export as canonical tab3");

    // gen
    KgOptions gen_kg;
    std::string gen_dir;
    std::string gen_questions;
    std::size_t gen_users = 5, gen_topics = 4, gen_per_topic = 25;
    std::uint64_t gen_seed = 0;
    CLI::App* gen = app.add_subcommand("gen", "generate per-user query logs");
    add_kg_options(*gen, gen_kg);
    gen->add_option("--out-dir", gen_dir, "directory for u<k>.tsv logs")->required();
    gen->add_option("--users", gen_users, "number of users");
    gen->add_option("--topics", gen_topics, "topics per user");
    gen->add_option("--per-topic", gen_per_topic, "queries per topic");
    gen->add_option("--seed", gen_seed, "workload seed");
    gen->add_option("--questions", gen_questions,
                    "ground a question file against the KG instead of sampling topics")
        ->check(CLI::ExistingFile);

    // run / sweep share their knobs
    KgOptions run_kg;
    std::vector<std::string> run_queries;
    std::vector<std::string> run_methods{"all"};
    double run_gamma = 0.5, run_alpha = 0.3, run_eps = 1e-9;
    int run_depth = 2, run_r_apex = 1, run_r_interval = 9;
    double run_kappa = 1e-3;
    std::int64_t run_budget = 0;
    double run_glimpse_alpha = 0.3, run_glimpse_eps = 1e-3, run_restart = 0.85;
    std::uint64_t run_seed = 0;
    std::string run_out = "results.csv";
    std::string run_dot_dir;
    std::string sweep_axis_name;
    std::vector<double> sweep_values;
    std::string sweep_prefix = "sweep";

    auto add_run_options = [&](CLI::App& cmd) {
        add_kg_options(cmd, run_kg);
        cmd.add_option("--queries", run_queries, "query log files, one per user")
            ->required()
            ->check(CLI::ExistingFile);
        cmd.add_option("--method", run_methods, "apex2|apex2n|glimpse|ppr|all (repeatable)");
        cmd.add_option("--gamma", run_gamma, "per-step interest decay");
        cmd.add_option("--alpha", run_alpha, "diffusion strength");
        cmd.add_option("--depth", run_depth, "diffusion hop cap");
        cmd.add_option("--eps-ths", run_eps, "heat elimination threshold");
        cmd.add_option("--kappa", run_kappa, "summary budget as a fraction of the triple count");
        cmd.add_option("--budget", run_budget, "absolute summary budget (overrides --kappa)");
        cmd.add_option("--r-apex", run_r_apex, "summary rebuild period for the heat methods");
        cmd.add_option("--r-interval", run_r_interval, "baseline re-summarization period");
        cmd.add_option("--glimpse-alpha", run_glimpse_alpha, "neighbor preference weight");
        cmd.add_option("--glimpse-eps", run_glimpse_eps, "sampling accuracy parameter");
        cmd.add_option("--restart", run_restart, "random walk restart probability");
        cmd.add_option("--seed", run_seed, "evaluation seed");
    };

    CLI::App* run = app.add_subcommand("run", "replay logs and score the summaries");
    add_run_options(*run);
    run->add_option("--out", run_out, "per-record CSV path");
    run->add_option("--dot-dir", run_dot_dir, "export each method's final summary here");

    CLI::App* sw = app.add_subcommand("sweep", "re-run once per value of one axis");
    add_run_options(*sw);
    sw->add_option("--axis", sweep_axis_name, "gamma|kappa|alpha|depth|r-apex")->required();
    sw->add_option("--values", sweep_values, "axis values")->required()->expected(-1);
    sw->add_option("--out-prefix", sweep_prefix, "CSV path prefix, one file per value");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            LoadStats stats;
            KnowledgeGraph kg = load_kg(ingest_kg, &stats);
            std::printf("entities   %zu\n", kg.n_entities());
            std::printf("relations  %zu\n", kg.n_relations());
            std::printf("triples    %zu\n", kg.n_triples());
            std::printf("lines      %zu\n", stats.lines);
            std::printf("parsed     %zu\n", stats.parsed);
            std::printf("malformed  %zu\n", stats.malformed);
            std::printf("duplicates %zu\n", stats.duplicates);
            if (!ingest_export.empty()) {
                std::ostringstream out;
                kg.export_tab3(out);
                write_file_atomic(ingest_export, out.str());
            }
            return 0;
        }

        if (*gen) {
            KnowledgeGraph kg = load_kg(gen_kg);
            std::vector<QueryLog> logs;
            if (gen_questions.empty()) {
                logs = generate_workload(kg, gen_users, gen_topics, gen_per_topic, gen_seed);
            } else {
                std::ifstream qin(gen_questions);
                if (!qin) throw std::runtime_error("cannot open " + gen_questions);
                QueryPool pool = load_metaqa_queries(qin, kg);
                std::printf("questions: %zu topics, %zu dropped\n", pool.topics.size(),
                            pool.dropped);
                logs = sample_workload(pool, gen_users, gen_topics, gen_per_topic, gen_seed);
            }
            fs::create_directories(gen_dir);
            for (std::size_t u = 0; u < logs.size(); ++u) {
                std::ostringstream out;
                write_query_log(out, logs[u], kg);
                write_file_atomic(fs::path(gen_dir) / ("u" + std::to_string(u) + ".tsv"),
                                  out.str());
            }
            std::printf("wrote %zu logs of %zu queries to %s\n", logs.size(),
                        logs.empty() ? 0 : logs[0].size(), gen_dir.c_str());
            return 0;
        }

        // run and sweep
        KnowledgeGraph kg = load_kg(run_kg);
        std::vector<QueryLog> logs = read_logs(run_queries, kg);

        RunConfig cfg;
        cfg.methods = resolve_methods(run_methods);
        cfg.summarizer.diffusion.gamma = run_gamma;
        cfg.summarizer.diffusion.alpha = run_alpha;
        cfg.summarizer.diffusion.d = run_depth;
        cfg.summarizer.diffusion.eps_ths = run_eps;
        cfg.summarizer.r_apex = run_r_apex;
        cfg.r_interval = run_r_interval;
        cfg.glimpse.alpha = run_glimpse_alpha;
        cfg.glimpse.epsilon = run_glimpse_eps;
        cfg.ppr.restart = run_restart;
        cfg.seed = run_seed;
        const std::int64_t budget =
            run_budget > 0 ? run_budget : budget_from_ratio(kg, run_kappa);
        cfg.summarizer.budget = budget;
        cfg.glimpse.budget = budget;
        cfg.ppr.budget = budget;

        if (*run) {
            EvalReport report = autoregressive_run(kg, logs, cfg);
            write_file_atomic(run_out, csv_text(report));
            std::printf("budget %lld, %zu records -> %s\n", static_cast<long long>(budget),
                        report.records.size(), run_out.c_str());
            print_aggregates(report.aggregates);
            if (!run_dot_dir.empty()) {
                export_case_study(run_dot_dir, kg, logs.front(), cfg.methods, cfg);
            }
            return 0;
        }

        const auto axis = sweep_axis_from_name(sweep_axis_name);
        if (!axis) throw std::runtime_error("unknown axis: " + sweep_axis_name);
        auto results = sweep(kg, logs, *axis, sweep_values, cfg);
        for (const auto& [value, report] : results) {
            char suffix[32];
            std::snprintf(suffix, sizeof suffix, "%g", value);
            const std::string path = sweep_prefix + "_" + suffix + ".csv";
            write_file_atomic(path, csv_text(report));
            std::printf("%s = %g -> %s\n", sweep_axis_name.c_str(), value, path.c_str());
            print_aggregates(report.aggregates);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
