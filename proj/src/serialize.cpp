// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/serialize.hpp"

#include <fstream>
#include <string>

namespace nestedtm {

void to_json(Json& j, const ModelSpec& spec) {
  j = Json{{"variant", variant_name(spec.variant)},
           {"num_topics", spec.num_topics},
           {"a_alpha", spec.a_alpha},
           {"b_alpha", spec.b_alpha},
           {"beta", spec.beta},
           {"gamma", spec.gamma},
           {"base_shape", spec.base_shape},
           {"base_rate", spec.base_rate},
           {"flat_alpha_mass", nullptr}};
  if (spec.flat_alpha_mass) j["flat_alpha_mass"] = *spec.flat_alpha_mass;
}

void from_json(const Json& j, ModelSpec& spec) {
  spec.variant = parse_variant(j.at("variant").get<std::string>());
  j.at("num_topics").get_to(spec.num_topics);
  j.at("a_alpha").get_to(spec.a_alpha);
  j.at("b_alpha").get_to(spec.b_alpha);
  j.at("beta").get_to(spec.beta);
  j.at("gamma").get_to(spec.gamma);
  j.at("base_shape").get_to(spec.base_shape);
  j.at("base_rate").get_to(spec.base_rate);
  const auto& mass = j.at("flat_alpha_mass");
  spec.flat_alpha_mass.reset();
  if (!mass.is_null()) spec.flat_alpha_mass = mass.get<double>();
}

void to_json(Json& j, const ChainConfig& config) {
  j = Json{{"iterations", config.iterations},
           {"burnin", config.burnin},
           {"thin", config.thin},
           {"mh_step", config.mh_step},
           {"traces",
            {{"phi", config.traces.phi},
             {"psi", config.traces.psi},
             {"theta", config.traces.theta}}}};
}

void from_json(const Json& j, ChainConfig& config) {
  j.at("iterations").get_to(config.iterations);
  j.at("burnin").get_to(config.burnin);
  j.at("thin").get_to(config.thin);
  j.at("mh_step").get_to(config.mh_step);
  const auto& t = j.at("traces");
  t.at("phi").get_to(config.traces.phi);
  t.at("psi").get_to(config.traces.psi);
  t.at("theta").get_to(config.traces.theta);
}

void to_json(Json& j, const PosteriorSummary& s) {
  j = Json{{"spec", s.spec},
           {"vocabulary", s.vocabulary},
           {"site_ids", s.site_ids},
           {"site_offsets", s.site_offsets},
           {"page_ids", s.page_ids},
           {"iterations", s.iterations},
           {"burnin", s.burnin},
           {"thin", s.thin},
           {"saved", s.saved},
           {"phi_mean", s.phi_mean},
           {"psi_mean", s.psi_mean},
           {"theta_mean", s.theta_mean},
           {"alpha_mean", s.alpha_mean},
           {"base_mean", s.base_mean},
           {"c_alpha_trace", s.c_alpha_trace},
           {"alpha_trace", s.alpha_trace},
           {"base_trace", s.base_trace},
           {"phi_trace", s.phi_trace},
           {"psi_trace", s.psi_trace},
           {"theta_trace", s.theta_trace}};
}

void from_json(const Json& j, PosteriorSummary& s) {
  j.at("spec").get_to(s.spec);
  j.at("vocabulary").get_to(s.vocabulary);
  j.at("site_ids").get_to(s.site_ids);
  j.at("site_offsets").get_to(s.site_offsets);
  j.at("page_ids").get_to(s.page_ids);
  j.at("iterations").get_to(s.iterations);
  j.at("burnin").get_to(s.burnin);
  j.at("thin").get_to(s.thin);
  j.at("saved").get_to(s.saved);
  j.at("phi_mean").get_to(s.phi_mean);
  j.at("psi_mean").get_to(s.psi_mean);
  j.at("theta_mean").get_to(s.theta_mean);
  j.at("alpha_mean").get_to(s.alpha_mean);
  j.at("base_mean").get_to(s.base_mean);
  j.at("c_alpha_trace").get_to(s.c_alpha_trace);
  j.at("alpha_trace").get_to(s.alpha_trace);
  j.at("base_trace").get_to(s.base_trace);
  j.at("phi_trace").get_to(s.phi_trace);
  j.at("psi_trace").get_to(s.psi_trace);
  j.at("theta_trace").get_to(s.theta_trace);
  if (s.site_offsets.size() != s.site_ids.size() + 1 ||
      s.site_offsets.back() != s.page_ids.size()) {
    throw FormatError("summary site offsets do not match its pages");
  }
}

void to_json(Json& j, const ModelState& s) {
  j = Json{{"num_topics", s.num_topics},
           {"local_topics", s.local_topics},
           {"vocab_size", s.vocab_size},
           {"num_sites", s.num_sites},
           {"page_site", s.page_site},
           {"z", s.z},
           {"word_topic", s.counts.word_topic},
           {"topic_totals", s.counts.topic_totals},
           {"site_local", s.counts.site_local},
           {"local_totals", s.counts.local_totals},
           {"page_topic", s.counts.page_topic},
           {"c_alpha", s.c_alpha},
           {"alpha_flat", s.alpha_flat},
           {"alpha_site", s.alpha_site},
           {"base", s.base}};
}

void from_json(const Json& j, ModelState& s) {
  j.at("num_topics").get_to(s.num_topics);
  j.at("local_topics").get_to(s.local_topics);
  j.at("vocab_size").get_to(s.vocab_size);
  j.at("num_sites").get_to(s.num_sites);
  j.at("page_site").get_to(s.page_site);
  j.at("z").get_to(s.z);
  j.at("word_topic").get_to(s.counts.word_topic);
  j.at("topic_totals").get_to(s.counts.topic_totals);
  j.at("site_local").get_to(s.counts.site_local);
  j.at("local_totals").get_to(s.counts.local_totals);
  j.at("page_topic").get_to(s.counts.page_topic);
  j.at("c_alpha").get_to(s.c_alpha);
  j.at("alpha_flat").get_to(s.alpha_flat);
  j.at("alpha_site").get_to(s.alpha_site);
  j.at("base").get_to(s.base);
}

void to_json(Json& j, const ChainSnapshot& s) {
  j = Json{{"spec", s.spec},
           {"config", s.config},
           {"seed", s.seed},
           {"sweeps_done", s.sweeps_done},
           {"c_alpha_accepted", s.c_alpha_accepted},
           {"base_accepted", s.base_accepted},
           {"rng_state", s.rng_state},
           {"state", s.state},
           {"summary", s.summary}};
}

void from_json(const Json& j, ChainSnapshot& s) {
  j.at("spec").get_to(s.spec);
  j.at("config").get_to(s.config);
  j.at("seed").get_to(s.seed);
  j.at("sweeps_done").get_to(s.sweeps_done);
  j.at("c_alpha_accepted").get_to(s.c_alpha_accepted);
  j.at("base_accepted").get_to(s.base_accepted);
  j.at("rng_state").get_to(s.rng_state);
  j.at("state").get_to(s.state);
  j.at("summary").get_to(s.summary);
}

void to_json(Json& j, const SimulationScale& s) {
  j = Json{{"topics", s.topics},
           {"vocab", s.vocab},
           {"sites", s.sites},
           {"pages", s.pages},
           {"words", s.words}};
}

void from_json(const Json& j, SimulationScale& s) {
  j.at("topics").get_to(s.topics);
  j.at("vocab").get_to(s.vocab);
  j.at("sites").get_to(s.sites);
  j.at("pages").get_to(s.pages);
  j.at("words").get_to(s.words);
}

void to_json(Json& j, const SyntheticTruth& t) {
  j = Json{{"scenario", t.scenario},
           {"seed", t.seed},
           {"scale", t.scale},
           {"local_counts", t.local_counts},
           {"phi", t.phi},
           {"psi", t.psi},
           {"mu", t.mu},
           {"theta", t.theta}};
}

void from_json(const Json& j, SyntheticTruth& t) {
  j.at("scenario").get_to(t.scenario);
  j.at("seed").get_to(t.seed);
  j.at("scale").get_to(t.scale);
  j.at("local_counts").get_to(t.local_counts);
  j.at("phi").get_to(t.phi);
  j.at("psi").get_to(t.psi);
  j.at("mu").get_to(t.mu);
  j.at("theta").get_to(t.theta);
  if (t.local_counts.size() != t.scale.sites || t.psi.size() != t.scale.sites ||
      t.theta.rows() != t.scale.sites * t.scale.pages) {
    throw FormatError("truth dimensions do not match its scale");
  }
}

void to_json(Json& j, const CvResult& r) {
  j = Json{{"spec", r.spec}, {"fold_loglik", r.fold_loglik}, {"mean", r.mean()}};
}

void from_json(const Json& j, CvResult& r) {
  j.at("spec").get_to(r.spec);
  j.at("fold_loglik").get_to(r.fold_loglik);
}

Json make_document(std::string_view kind, Json body) {
  return Json{{"format", "nestedtm"},
              {"kind", kind},
              {"version", kFormatVersion},
              {"body", std::move(body)}};
}

const Json& document_body(const Json& doc, std::string_view kind) {
  if (!doc.is_object() || doc.value("format", "") != "nestedtm") {
    throw FormatError("not a nestedtm document");
  }
  const std::string found = doc.value("kind", "");
  if (found != kind) {
    throw FormatError("expected a " + std::string(kind) + " document, found '" +
                      found + "'");
  }
  if (doc.value("version", 0) != kFormatVersion) {
    throw FormatError("unsupported " + std::string(kind) + " format version");
  }
  return doc.at("body");
}

void write_json_file(const std::filesystem::path& path, const Json& j,
                     int indent) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(indent) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

namespace {

template <typename T>
T load_document(const std::filesystem::path& path, std::string_view kind) {
  const Json doc = read_json_file(path);
  try {
    return document_body(doc, kind).get<T>();
  } catch (const Json::exception& e) {
    throw FormatError(path.string() + ": malformed " + std::string(kind) + ": " +
                      e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_summary(const std::filesystem::path& path, const PosteriorSummary& s) {
  write_json_file(path, make_document("summary", s));
}

PosteriorSummary load_summary(const std::filesystem::path& path) {
  return load_document<PosteriorSummary>(path, "summary");
}

void save_snapshot(const std::filesystem::path& path, const ChainSnapshot& s) {
  write_json_file(path, make_document("checkpoint", s));
}

ChainSnapshot load_snapshot(const std::filesystem::path& path) {
  return load_document<ChainSnapshot>(path, "checkpoint");
}

void save_truth(const std::filesystem::path& path, const SyntheticTruth& t) {
  write_json_file(path, make_document("truth", t));
}

SyntheticTruth load_truth(const std::filesystem::path& path) {
  return load_document<SyntheticTruth>(path, "truth");
}

}  // namespace nestedtm
