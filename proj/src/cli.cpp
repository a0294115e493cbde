// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "nestedtm/analysis.hpp"
#include "nestedtm/corpus.hpp"
#include "nestedtm/evaluation.hpp"
#include "nestedtm/sampler.hpp"
#include "nestedtm/serialize.hpp"
#include "nestedtm/simulate.hpp"

namespace nestedtm {

namespace fs = std::filesystem;

fs::path resolve_data_path(const fs::path& path) {
  if (path.empty() || path.is_absolute()) return path;
  const char* dir = std::getenv("NESTEDTM_DATA_DIR");
  if (dir == nullptr || *dir == '\0') return path;
  return fs::path(dir) / path;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    std::string_view item = text.substr(start, comma - start);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) {
      item.remove_prefix(1);
    }
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) {
      item.remove_suffix(1);
    }
    if (!item.empty()) out.emplace_back(item);
    start = comma + 1;
  }
  return out;
}

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string fnv1a_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

Json file_record(const fs::path& path) {
  return Json{{"path", path.string()},
              {"bytes", fs::file_size(path)},
              {"fnv1a64", fnv1a_hex(path)}};
}

std::vector<std::size_t> parse_size_list(std::string_view text, std::string_view what) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    std::size_t value = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), value);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw CLI::ValidationError(std::string(what), "not a non-negative integer: " + item);
    }
    out.push_back(value);
  }
  return out;
}

/// Options shared by commands that read a corpus.
struct CorpusOptions {
  std::string path;
  std::string format = "auto";
  std::size_t min_page_words = 0;
  std::size_t min_word_pages = 0;

  void add(CLI::App* app, bool required) {
    auto* opt = app->add_option("--corpus", path, "Corpus file");
    if (required) opt->required();
    app->add_option("--format", format, "Corpus format: auto, jsonl or token-index")
        ->check(CLI::IsMember({"auto", "jsonl", "token-index", "tok"}));
    app->add_option("--min-page-words", min_page_words,
                    "Drop pages shorter than this (0 disables filtering)");
    app->add_option("--min-word-pages", min_word_pages,
                    "Drop words found on fewer pages than this (0 disables filtering)");
  }

  fs::path resolved() const { return resolve_data_path(path); }

  NestedCorpus load() const {
    const fs::path p = resolved();
    CorpusFormat f;
    if (format == "auto") {
      const auto ext = p.extension().string();
      f = (ext == ".jsonl" || ext == ".json") ? CorpusFormat::kJsonl
                                             : CorpusFormat::kTokenIndex;
    } else {
      f = parse_corpus_format(format);
    }
    NestedCorpus corpus = load_corpus(p, f);
    if (min_page_words > 0 || min_word_pages > 0) {
      corpus = filter_corpus(corpus, min_page_words, min_word_pages);
    }
    return corpus;
  }
};

struct PriorOptions {
  double a_alpha = 1.0;
  double b_alpha = 1.0;
  double beta = 0.05;
  double gamma = 0.05;
  double base_shape = 1.0;
  double base_rate = 1.0;
  double flat_alpha_mass = 0.0;

  void add(CLI::App* app) {
    app->add_option("--a-alpha", a_alpha, "Gamma shape on c_alpha");
    app->add_option("--b-alpha", b_alpha, "Gamma rate on c_alpha");
    app->add_option("--beta", beta, "Global topic-word Dirichlet parameter");
    app->add_option("--gamma", gamma, "Local topic-word Dirichlet parameter");
    app->add_option("--base-shape", base_shape, "Gamma shape on each c0*alpha0_k");
    app->add_option("--base-rate", base_rate, "Gamma rate on each c0*alpha0_k");
    app->add_option("--flat-alpha-mass", flat_alpha_mass,
                    "Dirichlet mass on the flat alpha (0 means 1/K*)");
  }

  ModelSpec spec(Variant variant, std::size_t k) const {
    ModelSpec s;
    s.variant = variant;
    s.num_topics = k;
    s.a_alpha = a_alpha;
    s.b_alpha = b_alpha;
    s.beta = beta;
    s.gamma = gamma;
    s.base_shape = base_shape;
    s.base_rate = base_rate;
    if (flat_alpha_mass > 0.0) s.flat_alpha_mass = flat_alpha_mass;
    s.validate();
    return s;
  }
};

struct ChainOptions {
  std::size_t iters = 2000;
  std::size_t burnin = 1500;
  std::size_t thin = 1;
  double mh_step = 0.3;

  void add(CLI::App* app) {
    app->add_option("--iters", iters, "Total sweeps");
    app->add_option("--burnin", burnin, "Sweeps discarded before saving");
    app->add_option("--thin", thin, "Save every thin-th sweep after burn-in");
    app->add_option("--mh-step", mh_step, "Log-scale random-walk step for MH updates");
  }

  ChainConfig config(const TraceOptions& traces) const {
    ChainConfig c{iters, burnin, thin, mh_step, traces};
    c.validate();
    return c;
  }
};

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
};

Json option_config(const CLI::App& app) {
  Json config = Json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->get_expected_min() == 0) {
      config[name] = opt->count() > 0 && opt->as<bool>() ? "true" : "false";
    } else {
      config[name] = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
    }
  }
  return config;
}

/// Key = value text that reproduces this run through --config.
std::string reproduce_text(const Json& config) {
  std::ostringstream out;
  for (const auto& [key, value] : config.items()) {
    out << key << " = " << value.dump() << '\n';
  }
  return out.str();
}

void write_manifest(const fs::path& dir, const CLI::App& app, const Manifest& m) {
  const Json config = option_config(app);
  Json body{{"command", m.command},
            {"tool_version", kToolVersion},
            {"seed", m.seed},
            {"config", config},
            {"reproduce", reproduce_text(config)},
            {"build",
             {{"compiler", __VERSION__},
              {"cplusplus", __cplusplus},
              {"cli11", CLI11_VERSION},
              {"nlohmann_json",
               std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
  Json inputs = Json::array();
  for (const auto& p : m.inputs) inputs.push_back(file_record(p));
  Json outputs = Json::array();
  for (const auto& p : m.outputs) outputs.push_back(file_record(p));
  body["inputs"] = std::move(inputs);
  body["outputs"] = std::move(outputs);
  write_json_file(dir / "manifest.json", make_document("manifest", std::move(body)), 2);
}

fs::path prepare_out_dir(const std::string& out) {
  const fs::path dir = resolve_data_path(out);
  fs::create_directories(dir);
  return dir;
}

class Logger {
 public:
  Logger(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}
  void info(const std::string& line) {
    if (!quiet_) err_ << "nestedtm: " << line << '\n';
  }

 private:
  std::ostream& err_;
  bool quiet_;
};

TraceOptions parse_traces(std::string_view text) {
  TraceOptions t{false, false, false};
  for (const auto& item : split_list(text)) {
    if (item == "phi") t.phi = true;
    else if (item == "psi") t.psi = true;
    else if (item == "theta") t.theta = true;
    else if (item == "all") t = {true, true, true};
    else if (item != "none") {
      throw CLI::ValidationError("--trace", "unknown trace '" + item + "'");
    }
  }
  return t;
}

// ---------------------------------------------------------------- fit

struct FitCommand {
  CorpusOptions corpus;
  PriorOptions priors;
  ChainOptions chain;
  std::string out = ".";
  std::string variant = "halt";
  std::size_t k = 10;
  std::uint64_t seed = 1;
  std::string trace = "phi,psi,theta";
  std::size_t checkpoint_every = 0;
  std::size_t log_every = 100;
  std::string resume;

  CLI::App* app = nullptr;

  void add(CLI::App& parent) {
    app = parent.add_subcommand("fit", "Fit one model by collapsed Gibbs sampling");
    corpus.add(app, true);
    app->add_option("--out", out, "Output directory");
    app->add_option("--variant", variant, "lda, lt, ha or halt");
    app->add_option("--k", k, "Number of global topics")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Master seed");
    priors.add(app);
    chain.add(app);
    app->add_option("--trace", trace,
                    "Per-iteration traces to keep: phi, psi, theta, all or none");
    app->add_option("--checkpoint-every", checkpoint_every,
                    "Write checkpoint.json every N sweeps (0 disables)");
    app->add_option("--log-every", log_every, "Log the chain every N sweeps")
        ->check(CLI::PositiveNumber);
    app->add_option("--resume", resume,
                    "Continue from a checkpoint; model and chain settings come from it");
  }

  void run(Logger& log) {
    const fs::path dir = prepare_out_dir(out);
    const NestedCorpus data = corpus.load();
    log.info("corpus: " + std::to_string(data.num_sites()) + " sites, " +
             std::to_string(data.num_pages()) + " pages, " +
             std::to_string(data.num_tokens()) + " tokens, " +
             std::to_string(data.vocab_size()) + " words");
    Manifest manifest{"fit", seed, {corpus.resolved()}, {}};

    std::unique_ptr<Chain> ch;
    if (!resume.empty()) {
      const fs::path path = resolve_data_path(resume);
      ch = std::make_unique<Chain>(data, load_snapshot(path));
      manifest.inputs.push_back(path);
      manifest.seed = ch->snapshot().seed;
      log.info("resuming at sweep " + std::to_string(ch->sweeps_done()));
    } else {
      const ModelSpec spec = priors.spec(parse_variant(variant), k);
      ch = std::make_unique<Chain>(spec, data, chain.config(parse_traces(trace)), seed);
    }

    const fs::path log_path = dir / "fit.log";
    auto log_file = open_output(log_path);
    const fs::path checkpoint_path = dir / "checkpoint.json";
    bool wrote_checkpoint = false;
    ch->run([&](const Chain& c, const SweepStats&) {
      const std::size_t s = c.sweeps_done();
      if (s % log_every == 0 || c.finished()) {
        const std::string line =
            "sweep " + std::to_string(s) + " log_joint " +
            num(log_joint(c.state(), c.spec())) + " c_alpha " + num(c.state().c_alpha) +
            " accept_c_alpha " + num(c.c_alpha_acceptance());
        log_file << line << '\n';
        log.info(line);
      }
      if (checkpoint_every > 0 && s % checkpoint_every == 0 && !c.finished()) {
        save_snapshot(checkpoint_path, c.snapshot());
        wrote_checkpoint = true;
      }
    });
    log_file.close();

    const fs::path summary_path = dir / "summary.json";
    save_summary(summary_path, ch->summary());
    log.info("wrote " + summary_path.string() + " (" +
             std::to_string(ch->summary().saved) + " saved iterations)");
    manifest.outputs = {summary_path, log_path};
    if (wrote_checkpoint) manifest.outputs.push_back(checkpoint_path);
    write_manifest(dir, *app, manifest);
  }
};

// ----------------------------------------------------------------- cv

Json cv_plot(std::span<const CvResult> results) {
  Json rows = Json::array();
  for (const auto& r : results) {
    const double n = static_cast<double>(r.fold_loglik.size());
    const double mean = r.mean();
    double ss = 0.0;
    for (double x : r.fold_loglik) ss += (x - mean) * (x - mean);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    rows.push_back({{"variant", variant_name(r.spec.variant)},
                    {"K", r.spec.num_topics},
                    {"folds", r.fold_loglik.size()},
                    {"mean", mean},
                    {"sd", sd},
                    {"se", n > 0 ? sd / std::sqrt(n) : 0.0}});
  }
  return rows;
}

struct CvCommand {
  CorpusOptions corpus;
  PriorOptions priors;
  ChainOptions chain;
  std::string out = ".";
  std::string variants = "lda,lt,ha,halt";
  std::string ks = "10";
  std::size_t folds = 10;
  double holdout = 0.2;
  std::size_t particles = 0;
  std::size_t jobs = 1;
  std::uint64_t seed = 1;

  CLI::App* app = nullptr;

  void add(CLI::App& parent) {
    app = parent.add_subcommand("cv", "Held-out likelihood over a grid of models");
    corpus.add(app, true);
    app->add_option("--out", out, "Output directory");
    app->add_option("--variants", variants, "Comma-separated variants");
    app->add_option("--k", ks, "Comma-separated numbers of global topics");
    app->add_option("--folds", folds, "Random holdout splits")->check(CLI::PositiveNumber);
    app->add_option("--holdout", holdout, "Fraction of each site's pages held out")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--particles", particles,
                    "Left-to-right particles (0 means round(8000 / N) per page)");
    app->add_option("--jobs", jobs, "Worker threads (0 means all cores)");
    app->add_option("--seed", seed, "Master seed");
    priors.add(app);
    chain.add(app);
  }

  void run(Logger& log) {
    const fs::path dir = prepare_out_dir(out);
    const NestedCorpus data = corpus.load();
    std::vector<ModelSpec> specs;
    for (const auto& v : split_list(variants)) {
      for (std::size_t k : parse_size_list(ks, "--k")) {
        specs.push_back(priors.spec(parse_variant(v), k));
      }
    }
    if (specs.empty()) throw CLI::ValidationError("--variants", "empty model grid");
    CrossValidationConfig config;
    config.folds = folds;
    config.holdout = holdout;
    config.chain = chain.config({false, false, false});
    if (particles > 0) config.particles = particles;
    config.jobs = jobs;
    const auto results = cross_validate(specs, data, config, seed, [&](const CvProgress& p) {
      const auto& s = specs[p.spec_index];
      log.info("fold " + std::to_string(p.fold) + " " +
               std::string(variant_name(s.variant)) + " K=" +
               std::to_string(s.num_topics) + " loglik " + num(p.loglik));
    });

    const fs::path csv_path = dir / "cv.csv";
    {
      auto csv = open_output(csv_path);
      write_cv_csv(csv, results);
    }
    const fs::path json_path = dir / "cv.json";
    write_json_file(json_path,
                    make_document("cv", Json{{"folds", folds},
                                             {"holdout", holdout},
                                             {"seed", seed},
                                             {"results", results},
                                             {"plot", cv_plot(results)}}),
                    1);
    write_manifest(dir, *app, {"cv", seed, {corpus.resolved()}, {csv_path, json_path}});
  }
};

// ------------------------------------------------------------- report

struct ReportCommand {
  std::string cv;
  std::string out = ".";
  CLI::App* app = nullptr;

  void add(CLI::App& parent) {
    app = parent.add_subcommand("report", "Plot data from one or more cv.json files");
    app->add_option("--cv", cv, "Comma-separated cv.json paths")->required();
    app->add_option("--out", out, "Output directory");
  }

  void run(Logger& log) {
    const fs::path dir = prepare_out_dir(out);
    Manifest manifest{"report", 0, {}, {}};
    // Folds from several files pool per (variant, K).
    std::map<std::pair<int, std::size_t>, CvResult> merged;
    for (const auto& item : split_list(cv)) {
      const fs::path path = resolve_data_path(item);
      manifest.inputs.push_back(path);
      const Json doc = read_json_file(path);
      for (const auto& r : document_body(doc, "cv").at("results")) {
        auto result = r.get<CvResult>();
        auto& slot = merged[{static_cast<int>(result.spec.variant), result.spec.num_topics}];
        if (slot.fold_loglik.empty()) slot.spec = result.spec;
        slot.fold_loglik.insert(slot.fold_loglik.end(), result.fold_loglik.begin(),
                                result.fold_loglik.end());
      }
    }
    if (manifest.inputs.empty()) throw CLI::ValidationError("--cv", "no input files");
    std::vector<CvResult> results;
    for (auto& [key, r] : merged) results.push_back(std::move(r));
    const Json rows = cv_plot(results);

    const fs::path csv_path = dir / "report.csv";
    {
      auto csv = open_output(csv_path);
      csv << "variant,K,folds,mean,sd,se\n";
      for (const auto& r : rows) {
        csv << r["variant"].get<std::string>() << ',' << r["K"].get<std::size_t>() << ','
            << r["folds"].get<std::size_t>() << ',' << num(r["mean"].get<double>()) << ','
            << num(r["sd"].get<double>()) << ',' << num(r["se"].get<double>()) << '\n';
      }
    }
    Json series = Json::array();
    for (const auto& r : rows) {
      const std::string v = r["variant"].get<std::string>();
      if (series.empty() || series.back()["variant"] != v) {
        series.push_back({{"variant", v},
                          {"K", Json::array()},
                          {"mean", Json::array()},
                          {"se", Json::array()}});
      }
      auto& s = series.back();
      s["K"].push_back(r["K"]);
      s["mean"].push_back(r["mean"]);
      s["se"].push_back(r["se"]);
    }
    const fs::path plot_path = dir / "report_plot.json";
    write_json_file(plot_path, make_document("cv-plot", Json{{"series", series}}), 1);
    log.info("wrote " + csv_path.string());
    manifest.outputs = {csv_path, plot_path};
    write_manifest(dir, *app, manifest);
  }
};

// ------------------------------------------------------------ analyze

struct AnalyzeCommand {
  std::string summary;
  std::string out = ".";
  std::size_t top_words = 10;
  int atc = -1;
  std::string match_against;
  std::string method = "rank";
  std::size_t top_m = 0;
  double level = 0.95;
  std::string interval_topics;
  CLI::App* app = nullptr;

  void add(CLI::App& parent) {
    app = parent.add_subcommand("analyze", "Top words, prevalence, coverage and matching");
    app->add_option("--summary", summary, "summary.json from fit")->required();
    app->add_option("--out", out, "Output directory");
    app->add_option("--top-words", top_words, "Words listed per topic")
        ->check(CLI::PositiveNumber);
    app->add_option("--atc", atc,
                    "Global topic index (0-based) for adjusted topic coverage (-1 skips)");
    app->add_option("--match-against", match_against,
                    "Summary of a model without local topics to match against");
    app->add_option("--method", method, "Matching method: rank or prob")
        ->check(CLI::IsMember({"rank", "prob"}));
    app->add_option("--top-m", top_m, "Match on the local topic's top M words (0 uses all)");
    app->add_option("--level", level, "Credible interval level")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--interval-topics", interval_topics,
                    "Comma-separated global topics for word intervals (default all)");
  }

  void run(Logger& log) {
    const fs::path dir = prepare_out_dir(out);
    const fs::path summary_path = resolve_data_path(summary);
    const PosteriorSummary fit = load_summary(summary_path);
    Manifest manifest{"analyze", 0, {summary_path}, {}};
    const std::size_t k_global = fit.spec.num_topics;
    const std::size_t n = std::min(top_words, fit.vocabulary.size());
    Json plot = Json::object();

    const fs::path topics_path = dir / "topics.csv";
    {
      auto csv = open_output(topics_path);
      csv << "kind,site,topic,rank,word,probability\n";
      Json words_plot = Json::array();
      auto emit = [&](std::string_view kind, std::string_view site, std::size_t topic,
                      std::span<const double> row) {
        Json words = Json::array();
        const auto idx = top_word_indices(row, n);
        for (std::size_t r = 0; r < idx.size(); ++r) {
          csv << kind << ',' << csv_field(site) << ',' << topic << ',' << r + 1 << ','
              << csv_field(fit.vocabulary[idx[r]]) << ',' << num(row[idx[r]]) << '\n';
          words.push_back(fit.vocabulary[idx[r]]);
        }
        words_plot.push_back({{"kind", kind}, {"site", site}, {"topic", topic},
                              {"words", words}});
      };
      for (std::size_t k = 0; k < k_global; ++k) emit("global", "", k, fit.phi_mean.row(k));
      if (fit.spec.local_topics() > 0) {
        for (std::size_t i = 0; i < fit.num_sites(); ++i) {
          emit("local", fit.site_ids[i], k_global, fit.psi_mean.row(i));
        }
      }
      plot["top_words"] = std::move(words_plot);
    }
    manifest.outputs.push_back(topics_path);

    const fs::path prevalence_path = dir / "prevalence.csv";
    {
      auto csv = open_output(prevalence_path);
      csv << "topic,kind,prevalence\n";
      const auto prevalence = topic_prevalences(fit.theta_mean);
      for (std::size_t k = 0; k < prevalence.size(); ++k) {
        csv << k << ',' << (k < k_global ? "global" : "local") << ','
            << num(prevalence[k]) << '\n';
      }
      plot["prevalence"] = prevalence;
    }
    manifest.outputs.push_back(prevalence_path);

    if (fit.phi_trace.size() >= 2) {
      std::vector<std::size_t> topics;
      if (interval_topics.empty()) {
        for (std::size_t k = 0; k < k_global; ++k) topics.push_back(k);
      } else {
        topics = parse_size_list(interval_topics, "--interval-topics");
      }
      const fs::path intervals_path = dir / "intervals.csv";
      {
        auto csv = open_output(intervals_path);
        csv << "topic,rank,word,mean,lo,median,hi\n";
        for (const auto& w : interval_report(fit, topics, n, level)) {
          csv << w.topic << ',' << w.rank << ',' << csv_field(w.token) << ','
              << num(w.mean) << ',' << num(w.interval.lo) << ','
              << num(w.interval.median) << ',' << num(w.interval.hi) << '\n';
        }
      }
      const fs::path switching_path = dir / "switching.csv";
      {
        auto csv = open_output(switching_path);
        csv << "topic,other,word,other_median\n";
        for (const auto& f : label_switching_flags(fit, topics, n, level)) {
          csv << f.topic << ',' << f.other << ',' << csv_field(fit.vocabulary[f.word])
              << ',' << num(f.other_median) << '\n';
        }
      }
      manifest.outputs.push_back(intervals_path);
      manifest.outputs.push_back(switching_path);
    } else {
      log.info("no phi trace in summary; skipping word intervals");
    }

    if (atc >= 0) {
      const auto topic = static_cast<std::size_t>(atc);
      if (topic >= k_global) {
        throw std::invalid_argument("--atc " + std::to_string(atc) +
                                    " is not a global topic (K = " +
                                    std::to_string(k_global) + ")");
      }
      const fs::path coverage_path = dir / "coverage.csv";
      Json bars = Json::array();
      {
        auto csv = open_output(coverage_path);
        csv << "site,site_id,topic,atc,lo,median,hi,excluded_pages\n";
        for (const auto& row : coverage_report(fit, topic, level)) {
          csv << row.site << ',' << csv_field(fit.site_ids[row.site]) << ',' << row.topic
              << ',' << num(row.point) << ',' << num(row.interval.lo) << ','
              << num(row.interval.median) << ',' << num(row.interval.hi) << ','
              << row.excluded << '\n';
          bars.push_back({{"site", fit.site_ids[row.site]},
                          {"atc", row.point},
                          {"lo", row.interval.lo},
                          {"hi", row.interval.hi}});
        }
      }
      plot["coverage"] = {{"topic", topic}, {"level", level}, {"bars", bars}};
      manifest.outputs.push_back(coverage_path);
    }

    if (!match_against.empty()) {
      const fs::path other_path = resolve_data_path(match_against);
      const PosteriorSummary other = load_summary(other_path);
      manifest.inputs.push_back(other_path);
      std::optional<std::size_t> m;
      if (top_m > 0) m = top_m;
      const auto report = matching_report(fit, other, parse_match_method(method), m);
      const fs::path matching_path = dir / "matching.csv";
      {
        auto csv = open_output(matching_path);
        csv << "site,site_id,matched_topic,duplicate,correct_local,other_local\n";
        for (std::size_t i = 0; i < report.matched.size(); ++i) {
          const bool dup = std::find(report.duplicates.begin(), report.duplicates.end(),
                                     report.matched[i]) != report.duplicates.end();
          csv << i << ',' << csv_field(fit.site_ids[i]) << ',' << report.matched[i] << ','
              << (dup ? 1 : 0) << ',' << num(report.correct_local[i]) << ','
              << num(report.other_local[i]) << '\n';
        }
      }
      plot["matching"] = {{"method", method},
                          {"matched", report.matched},
                          {"duplicates", report.duplicates},
                          {"correct_local", report.correct_local},
                          {"other_local", report.other_local},
                          {"global", report.global}};
      manifest.outputs.push_back(matching_path);
      log.info(std::to_string(report.matched.size()) + " matched local topics, " +
               std::to_string(report.duplicates.size()) + " matched more than once");
    }

    const fs::path plot_path = dir / "analysis_plot.json";
    write_json_file(plot_path, make_document("analysis-plot", std::move(plot)), 1);
    manifest.outputs.push_back(plot_path);
    write_manifest(dir, *app, manifest);
  }
};

// ----------------------------------------------------------- simulate

struct SimulateCommand {
  int scenario = 0;
  std::uint64_t seed = 1;
  std::string scale = "desk";
  std::string out = ".";
  CLI::App* app = nullptr;

  void add(CLI::App& parent) {
    app = parent.add_subcommand("simulate", "Generate a synthetic nested corpus");
    app->add_option("--scenario", scenario, "Scenario 1..5")->required()->check(CLI::Range(1, 5));
    app->add_option("--seed", seed, "Master seed");
    app->add_option("--scale", scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    app->add_option("--out", out, "Output directory");
  }

  void run(Logger& log) {
    const fs::path dir = prepare_out_dir(out);
    const auto [corpus, truth] = generate_scenario(scenario, parse_scale(scale), seed);
    const fs::path corpus_path = dir / "corpus.tok";
    save_corpus(corpus_path, corpus, CorpusFormat::kTokenIndex);
    const fs::path truth_path = dir / "truth.json";
    save_truth(truth_path, truth);
    log.info("scenario " + std::to_string(scenario) + ": " +
             std::to_string(corpus.num_sites()) + " sites, " +
             std::to_string(corpus.num_pages()) + " pages, " +
             std::to_string(corpus.num_tokens()) + " tokens");
    write_manifest(dir, *app, {"simulate", seed, {}, {corpus_path, truth_path}});
  }
};

// -------------------------------------------------------------- score

struct ScoreCommand {
  std::string summary;
  std::string truth;
  CorpusOptions corpus;
  std::string out = ".";
  double threshold = 0.005;
  double tolerance = 0.05;
  double min_extraneous = 0.02;
  std::size_t words = 3;
  CLI::App* app = nullptr;

  void add(CLI::App& parent) {
    app = parent.add_subcommand("score", "Compare a fit with simulation truth");
    app->add_option("--summary", summary, "summary.json from fit")->required();
    app->add_option("--truth", truth, "truth.json from simulate")->required();
    corpus.add(app, false);
    app->add_option("--out", out, "Output directory");
    app->add_option("--threshold", threshold,
                    "Estimates below this count as no local topic");
    app->add_option("--tolerance", tolerance, "Absolute error counted as recovered");
    app->add_option("--min-extraneous", min_extraneous,
                    "Estimate above which a spurious local topic is inspected");
    app->add_option("--words", words, "Top words inspected per spurious local topic");
  }

  void run(Logger& log) {
    const fs::path dir = prepare_out_dir(out);
    const fs::path summary_path = resolve_data_path(summary);
    const fs::path truth_path = resolve_data_path(truth);
    const PosteriorSummary fit = load_summary(summary_path);
    const SyntheticTruth t = load_truth(truth_path);
    Manifest manifest{"score", t.seed, {summary_path, truth_path}, {}};
    const auto report = recovery_score(fit, t);

    const fs::path csv_path = dir / "recovery.csv";
    {
      auto csv = open_output(csv_path);
      csv << "site,site_id,true_locals,estimate,truth,error\n";
      for (const auto& r : report.rows) {
        csv << r.site << ',' << csv_field(fit.site_ids[r.site]) << ',' << r.true_locals
            << ',' << num(r.estimate) << ',' << num(r.truth) << ',' << num(r.error) << '\n';
      }
    }
    auto nan_to_null = [](double x) { return std::isnan(x) ? Json(nullptr) : Json(x); };
    const fs::path json_path = dir / "recovery.json";
    write_json_file(json_path,
                    make_document("recovery",
                                  Json{{"scenario", t.scenario},
                                       {"threshold", threshold},
                                       {"fraction_below", nan_to_null(report.fraction_below(threshold))},
                                       {"tolerance", tolerance},
                                       {"fraction_within", nan_to_null(report.fraction_within(tolerance))},
                                       {"correlation", nan_to_null(report.correlation())}}),
                    1);
    manifest.outputs = {csv_path, json_path};

    if (!corpus.path.empty()) {
      const NestedCorpus data = corpus.load();
      manifest.inputs.push_back(corpus.resolved());
      const fs::path ratio_path = dir / "extraneous.csv";
      auto csv = open_output(ratio_path);
      csv << "site,site_id,estimate,word,ratio\n";
      for (const auto& e : extraneous_local_words(fit, t, data, min_extraneous, words)) {
        csv << e.site << ',' << csv_field(fit.site_ids[e.site]) << ',' << num(e.estimate)
            << ',' << csv_field(fit.vocabulary[e.word]) << ',' << num(e.ratio) << '\n';
      }
      csv.close();
      manifest.outputs.push_back(ratio_path);
    }
    log.info("scored " + std::to_string(report.rows.size()) + " sites");
    write_manifest(dir, *app, manifest);
  }
};

/// Moves `key = value` pairs from a --config file in front of the
/// command-line arguments so later flags override them. Keys outside any
/// section, or in a section named after the subcommand, apply.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.size() < 2 || args[1].starts_with("-")) return args;
  std::optional<std::string> path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
    }
  }
  if (!path) return args;
  const fs::path file = resolve_data_path(*path);
  if (!fs::exists(file)) throw CLI::FileError::Missing(file.string());
  const auto items = CLI::ConfigTOML().from_file(file.string());
  std::vector<std::string> out = {args[0], args[1]};
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--" || item.name == "config") continue;
    const bool applies = item.parents.empty() ||
                         (item.parents.size() == 1 && item.parents[0] == args[1]);
    if (!applies || item.inputs.empty() ||
        (item.inputs.size() == 1 && item.inputs[0].empty())) {
      continue;
    }
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) {
      if (i > 0) value += ',';
      value += item.inputs[i];
    }
    out.push_back("--" + item.name + "=" + value);
  }
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Topic models for nested document collections"};
  app.name("nestedtm");
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  bool quiet = false;
  std::string config_path;

  FitCommand fit;
  CvCommand cv;
  AnalyzeCommand analyze;
  SimulateCommand simulate;
  ScoreCommand score;
  ReportCommand report;
  fit.add(app);
  cv.add(app);
  analyze.add(app);
  simulate.add(app);
  score.add(app);
  report.add(app);
  for (CLI::App* sub : app.get_subcommands({})) {
    sub->add_flag("--quiet", quiet, "Suppress progress messages");
    sub->add_option("--config", config_path,
                    "File of key = value settings; command-line flags win");
  }

  try {
    const auto args = expand_config(raw_args);
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Logger log(err, quiet);
  try {
    if (fit.app->parsed()) fit.run(log);
    else if (cv.app->parsed()) cv.run(log);
    else if (analyze.app->parsed()) analyze.run(log);
    else if (simulate.app->parsed()) simulate.run(log);
    else if (score.app->parsed()) score.run(log);
    else if (report.app->parsed()) report.run(log);
  } catch (const CLI::ValidationError& e) {
    err << "nestedtm: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "nestedtm: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace nestedtm
