// aqp: command-line driver for the learned query answering pipeline.
//
//   profile -> generate -> label -> encode -> train -> predict / eval / bench
//
// Every stage reads and writes files under --out-dir. Each artifact header
// records the hash of the artifact it was derived from.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "aqp/artifacts.hpp"
#include "aqp/checkpoint.hpp"
#include "aqp/encoder.hpp"
#include "aqp/error.hpp"
#include "aqp/executor.hpp"
#include "aqp/hash.hpp"
#include "aqp/lstm.hpp"
#include "aqp/metrics.hpp"
#include "aqp/querygen.hpp"
#include "aqp/store.hpp"
#include "aqp/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aqp;

namespace {

// ---------------------------------------------------------------------------
// configuration

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int threads = 0;
};

struct Pipeline {
  json cfg = json::object();
  fs::path base;  // directory relative paths in the config resolve against
  fs::path out;
  std::uint64_t seed = 42;
  bool seed_overridden = false;
  int threads = 0;

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
  }
  fs::path artifact(const std::string& name) const { return out / name; }

  fs::path dataset_path() const {
    if (!cfg.contains("dataset")) throw Error(ErrorCode::InvalidArgument, "config has no 'dataset' path");
    return resolve(cfg.at("dataset").get<std::string>());
  }
  fs::path schema_path() const {
    if (!cfg.contains("schema")) throw Error(ErrorCode::InvalidArgument, "config has no 'schema' path");
    return resolve(cfg.at("schema").get<std::string>());
  }

  CsvOptions csv_options() const {
    CsvOptions o;
    if (auto it = cfg.find("csv"); it != cfg.end()) {
      const auto delim = it->value("delimiter", std::string(","));
      if (delim.size() != 1) throw Error(ErrorCode::InvalidArgument, "csv.delimiter must be one character");
      o.delimiter = delim[0];
      o.header = it->value("header", true);
    }
    return o;
  }

  Dataset load_dataset() const { return load_csv(dataset_path(), load_schema(schema_path()), csv_options()); }

  std::optional<QueryTemplate> maybe_template() const {
    auto it = cfg.find("template");
    if (it == cfg.end()) return std::nullopt;
    json j = it->is_string() ? parse_json_file(resolve(it->get<std::string>())) : *it;
    auto t = template_from_json(j);
    if (seed_overridden) t.seed = seed;
    return t;
  }
  QueryTemplate query_template() const {
    auto t = maybe_template();
    if (!t) throw Error(ErrorCode::InvalidArgument, "config has no 'template'");
    return *t;
  }

  nnet::ModelConfig model_config() const {
    auto c = nnet::ModelConfig::from_json(cfg.value("model", json::object()));
    if (seed_overridden || !cfg.value("model", json::object()).contains("seed")) c.seed = seed;
    return c;
  }

  SplitFractions split_fractions() const {
    SplitFractions f;
    if (auto it = cfg.find("split"); it != cfg.end()) {
      f.train = it->value("train", f.train);
      f.validation = it->value("validation", f.validation);
    }
    return f;
  }

  json metrics_options() const { return cfg.value("metrics", json::object()); }

  static json parse_json_file(const fs::path& p) {
    try {
      return json::parse(read_text(p));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, p.string() + ": " + e.what());
    }
  }
};

Pipeline make_pipeline(const Options& o) {
  Pipeline p;
  if (!o.config_path.empty()) {
    p.cfg = Pipeline::parse_json_file(o.config_path);
    if (!p.cfg.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
    p.base = fs::path(o.config_path).parent_path();
  } else {
    p.base = fs::current_path();
  }
  p.seed = p.cfg.value("seed", std::uint64_t{42});
  if (o.seed) {
    p.seed = *o.seed;
    p.seed_overridden = true;
  }
  if (!o.out_dir.empty())
    p.out = o.out_dir;
  else
    p.out = p.resolve(p.cfg.value("out_dir", std::string("out")));
  p.threads = o.threads ? o.threads : p.cfg.value("threads", 0);
  if (p.threads < 0) throw Error(ErrorCode::InvalidArgument, "--threads must be non-negative");
  if (p.threads > 0) omp_set_num_threads(p.threads);
  fs::create_directories(p.out);
  return p;
}

// ---------------------------------------------------------------------------
// artifact helpers

std::string hash_of(const fs::path& p) { return hex64(file_hash(p)); }

void write_json(const fs::path& p, const json& j) { atomic_write(p, j.dump(2) + "\n"); }

JsonlFile read_artifact(const fs::path& p, std::string_view kind) {
  if (!fs::exists(p)) throw Error(ErrorCode::Io, "missing artifact " + p.string());
  auto f = read_jsonl(p);
  if (f.header.value("kind", std::string()) != kind)
    throw Error(ErrorCode::ArtifactMismatch, p.string() + " is not a '" + std::string(kind) + "' artifact");
  return f;
}

void expect_hash(const json& header, const std::string& field, const fs::path& upstream) {
  const auto recorded = header.value(field, std::string());
  const auto actual = hash_of(upstream);
  if (recorded != actual)
    throw Error(ErrorCode::ArtifactMismatch, upstream.string() + " has hash " + actual + " but the artifact was built from " +
                                                 (recorded.empty() ? "<none>" : recorded));
}

std::vector<LabeledQuery> for_target(const std::vector<LabeledQuery>& qs, const std::string& token) {
  std::vector<LabeledQuery> out;
  for (const auto& q : qs)
    if (q.query.target.token() == token) out.push_back(q);
  return out;
}

nnet::Examples encode_examples(const std::vector<LabeledQuery>& qs, const TokenVocabulary& vocab) {
  std::vector<EncodedQuery> xs;
  std::vector<double> ys;
  xs.reserve(qs.size());
  for (const auto& q : qs) {
    xs.push_back(encode(q.query, vocab));
    ys.push_back(q.label);
  }
  if (xs.empty()) throw Error(ErrorCode::EmptyList, "no queries to encode");
  return nnet::make_examples(xs, ys);
}

std::vector<EncodedQuery> encode_all(std::span<const FlatQuery> qs, const TokenVocabulary& vocab) {
  std::vector<EncodedQuery> xs(qs.size());
  std::vector<std::optional<Error>> errors(qs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(qs.size()); ++i) {
    try {
      xs[std::size_t(i)] = encode(qs[std::size_t(i)], vocab);
    } catch (const Error& e) {
      errors[std::size_t(i)] = e;
    }
  }
  for (auto& e : errors)
    if (e) throw *e;
  return xs;
}

std::vector<fs::path> model_paths(const Pipeline& p, const std::vector<std::string>& explicit_paths) {
  std::vector<fs::path> out;
  for (const auto& m : explicit_paths) out.emplace_back(m);
  if (out.empty() && fs::exists(p.out)) {
    for (const auto& e : fs::directory_iterator(p.out)) {
      const auto name = e.path().filename().string();
      if (name.starts_with("model-") && name.ends_with(".ckpt")) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
  }
  if (out.empty()) throw Error(ErrorCode::Io, "no model checkpoints found in " + p.out.string());
  return out;
}

struct LoadedModel {
  fs::path path;
  nnet::LstmModel model;
  TokenVocabulary vocab;
  std::string target;
};

LoadedModel load_model(const fs::path& path) {
  LoadedModel m{path, nnet::load(path), {}, {}};
  m.vocab = TokenVocabulary::from_json(m.model.vocabulary);
  if (m.vocab.content_hash() != m.model.vocabulary_hash)
    throw Error(ErrorCode::VocabularyMismatch, path.string() + ": embedded vocabulary does not match its hash");
  nnet::check_vocabulary(m.model, m.vocab);
  return m;
}

std::string target_of_checkpoint(const LoadedModel& m, const json& manifest_targets) {
  // The checkpoint file name is model-<slug>.ckpt; map back through the manifest.
  const auto name = m.path.stem().string();
  for (const auto& t : manifest_targets)
    if ("model-" + slug(t.get<std::string>()) == name) return t.get<std::string>();
  return {};
}

double population_std(std::span<const double> v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= double(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / double(v.size()));
}

// ---------------------------------------------------------------------------
// commands

void cmd_synth(const Pipeline& p, std::size_t rows, std::size_t samples, double noise) {
  SyntheticSpec spec;
  spec.rows = rows;
  spec.seed = p.seed;
  spec.noise_sd = noise;
  const auto ds = make_synthetic_sales(spec);
  atomic_write(p.artifact("data.csv"), to_csv(ds));
  atomic_write(p.artifact("schema.json"), schema_to_json(ds.schema()) + "\n");
  write_json(p.artifact("template.json"), to_json(synthetic_sales_template(ds, samples, p.seed)));
  json cfg = {{"dataset", "data.csv"}, {"schema", "schema.json"}, {"template", "template.json"},
              {"out_dir", "."},        {"seed", p.seed}};
  write_json(p.artifact("config.json"), cfg);
  std::cout << "wrote " << rows << " rows to " << p.artifact("data.csv").string() << "\n";
}

void cmd_profile(const Pipeline& p) {
  const auto ds = p.load_dataset();
  const auto t = p.maybe_template();
  json attrs = json::array();
  std::size_t n_nom = 0, n_cont = 0;
  for (const auto& a : ds.schema()) {
    json j = {{"name", a.name}, {"kind", to_string(a.kind)}, {"entropy_bits", metrics::column_entropy(ds, a.name)}};
    if (a.kind == AttributeKind::Nominal) {
      ++n_nom;
      j["cardinality"] = distinct_members(ds, a.name).size();
    } else {
      ++n_cont;
      const auto s = continuous_stats(ds, a.name);
      j["summary"] = {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
      const auto& col = ds.continuous(a.name);
      j["std"] = population_std(col);
    }
    attrs.push_back(std::move(j));
  }
  std::vector<std::string> where;
  if (t) {
    where = t->cont_filter_attrs;
    where.insert(where.end(), t->nom_filter_attrs.begin(), t->nom_filter_attrs.end());
  } else {
    for (const auto& a : ds.schema()) where.push_back(a.name);
  }
  json report = {{"dataset_hash", hash_of(p.dataset_path())},
                 {"rows", ds.row_count()},
                 {"nominal_attributes", n_nom},
                 {"continuous_attributes", n_cont},
                 {"attributes", attrs},
                 {"where_attributes", where},
                 {"mean_entropy_bits", metrics::mean_entropy(ds, where)}};
  if (t) {
    json stds = json::object();
    for (const auto& target : build_select_clause(*t, ds.schema()))
      if (ds.attribute(target.attr).kind == AttributeKind::Continuous)
        stds[target.attr] = population_std(ds.continuous(target.attr));
    report["target_std"] = stds;
  }
  write_json(p.artifact("profile.json"), report);
  std::cout << "rows " << ds.row_count() << ", " << n_nom << " nominal, " << n_cont
            << " continuous attributes, mean entropy " << report["mean_entropy_bits"].get<double>() << " bits\n";
}

void cmd_generate(const Pipeline& p, bool sql) {
  const auto ds = p.load_dataset();
  const auto t = p.query_template();
  const auto w = generate_workload(ds, t);
  json targets = json::array();
  for (const auto& target : w.targets) targets.push_back(target.token());
  json header = {{"kind", "workload"},
                 {"dataset_hash", hash_of(p.dataset_path())},
                 {"schema", json::parse(schema_to_json(ds.schema()))},
                 {"template", to_json(t)},
                 {"targets", targets},
                 {"count", w.queries.size()}};
  write_jsonl(p.artifact("workload.jsonl"), header, to_records(w.queries));
  if (sql) {
    std::string text;
    for (const auto& q : w.queries) text += q.sql() + ";\n";
    atomic_write(p.artifact("workload.sql"), text);
  }
  std::cout << "generated " << w.queries.size() << " queries for " << w.targets.size() << " target(s)\n";
}

void cmd_label(const Pipeline& p) {
  const auto wpath = p.artifact("workload.jsonl");
  const auto wf = read_artifact(wpath, "workload");
  expect_hash(wf.header, "dataset_hash", p.dataset_path());
  const auto ds = p.load_dataset();
  const auto queries = queries_from_records(wf.records);
  const auto outcome = label_queries_grouped(ds, queries, p.threads);
  json excluded = json::object();
  for (const auto& [token, n] : outcome.excluded) excluded[token] = n;
  json header = {{"kind", "labeled"},
                 {"workload_hash", hash_of(wpath)},
                 {"dataset_hash", wf.header.at("dataset_hash")},
                 {"schema", wf.header.at("schema")},
                 {"template", wf.header.at("template")},
                 {"targets", wf.header.at("targets")},
                 {"input_count", queries.size()},
                 {"count", outcome.labeled.size()},
                 {"excluded", excluded}};
  write_jsonl(p.artifact("labeled.jsonl"), header, to_records(outcome.labeled));
  std::cout << "labeled " << outcome.labeled.size() << " of " << queries.size() << " queries, excluded "
            << outcome.excluded_total() << " with empty support\n";
}

void cmd_encode(const Pipeline& p) {
  const auto lpath = p.artifact("labeled.jsonl");
  const auto lf = read_artifact(lpath, "labeled");
  const auto labeled = labeled_from_records(lf.records);
  if (labeled.empty()) throw Error(ErrorCode::EmptyList, "labeled workload is empty");
  const auto schema = parse_schema_json(lf.header.at("schema").dump());
  const auto t = template_from_json(lf.header.at("template"));

  std::vector<FlatQuery> queries;
  for (const auto& q : labeled) queries.push_back(q.query);
  const auto vocab = build_vocabulary(queries, t, schema);
  const auto parts = split(labeled, p.seed, p.split_fractions());

  const auto vpath = p.artifact("vocab.json");
  write_json(vpath, vocab.to_json());
  const auto vhash = hex64(vocab.content_hash());
  auto write_part = [&](const std::string& name, const std::vector<LabeledQuery>& qs) {
    json header = {{"kind", "split"}, {"split", name}, {"labeled_hash", hash_of(lpath)}, {"vocabulary_hash", vhash},
                   {"count", qs.size()}};
    write_jsonl(p.artifact(name + ".jsonl"), header, to_records(qs));
  };
  write_part("train", parts.train);
  write_part("validation", parts.validation);
  write_part("test", parts.test);

  json manifest = {{"labeled_hash", hash_of(lpath)},
                   {"vocabulary_hash", vhash},
                   {"vocabulary_file", "vocab.json"},
                   {"input_shape", {vocab.sequence_length(), vocab.row_width()}},
                   {"bit_width", vocab.bit_width()},
                   {"vocabulary_size", vocab.size()},
                   {"targets", lf.header.at("targets")},
                   {"split_seed", p.seed},
                   {"split", {{"train", parts.train.size()},
                              {"validation", parts.validation.size()},
                              {"test", parts.test.size()}}}};
  write_json(p.artifact("manifest.json"), manifest);
  std::cout << "input shape (" << vocab.sequence_length() << ", " << vocab.row_width() << "), " << vocab.size()
            << " tokens; split " << parts.train.size() << "/" << parts.validation.size() << "/" << parts.test.size()
            << "\n";
}

struct EncodedArtifacts {
  json manifest;
  TokenVocabulary vocab;
};

EncodedArtifacts load_encoded(const Pipeline& p) {
  const auto mpath = p.artifact("manifest.json");
  if (!fs::exists(mpath)) throw Error(ErrorCode::Io, "missing artifact " + mpath.string() + " (run encode first)");
  EncodedArtifacts a{Pipeline::parse_json_file(mpath), {}};
  a.vocab = TokenVocabulary::from_json(Pipeline::parse_json_file(p.artifact("vocab.json")));
  if (hex64(a.vocab.content_hash()) != a.manifest.at("vocabulary_hash").get<std::string>())
    throw Error(ErrorCode::ArtifactMismatch, "vocab.json does not match manifest.json");
  return a;
}

std::vector<LabeledQuery> load_split(const Pipeline& p, const std::string& name, const EncodedArtifacts& a) {
  const auto f = read_artifact(p.artifact(name + ".jsonl"), "split");
  if (f.header.value("vocabulary_hash", std::string()) != a.manifest.at("vocabulary_hash").get<std::string>())
    throw Error(ErrorCode::ArtifactMismatch, name + ".jsonl was encoded against another vocabulary");
  return labeled_from_records(f.records);
}

std::vector<std::string> selected_targets(const json& manifest, const std::string& only) {
  std::vector<std::string> out;
  for (const auto& t : manifest.at("targets")) {
    const auto token = t.get<std::string>();
    if (only.empty() || token == only) out.push_back(token);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidTarget, "no target '" + only + "' in manifest");
  return out;
}

void cmd_train(const Pipeline& p, const std::string& only_target, bool resume, bool quiet) {
  const auto a = load_encoded(p);
  const auto train_all = load_split(p, "train", a);
  const auto val_all = load_split(p, "validation", a);
  const auto vhash = a.vocab.content_hash();

  for (const auto& token : selected_targets(a.manifest, only_target)) {
    const auto s = slug(token);
    const auto train = encode_examples(for_target(train_all, token), a.vocab);
    const auto val = encode_examples(for_target(val_all, token), a.vocab);
    auto config = p.model_config();
    config.seq_len = a.vocab.sequence_length();
    config.input_width = a.vocab.row_width();
    config.validate();

    nnet::EpochCallback log;
    if (!quiet)
      log = [&](const nnet::EpochStats& e) {
        std::clog << token << " epoch " << e.epoch << " train_mse " << e.train_mse << " val_mse " << e.validation_mse
                  << "\n";
      };

    const auto ckpt = p.artifact("model-" + s + ".ckpt");
    nnet::LstmModel model;
    nnet::TrainReport report;
    if (resume) {
      if (!fs::exists(ckpt)) throw Error(ErrorCode::Io, "cannot resume: missing " + ckpt.string());
      model = nnet::load(ckpt);
      report = nnet::resume_training(model, vhash, train, val, config, log);
    } else {
      model = nnet::init(config);
      model.vocabulary_hash = vhash;
      model.vocabulary = a.vocab.to_json();
      report = nnet::fit(model, train, val, log);
    }
    nnet::save(model, ckpt);

    json rj = report.to_json();
    rj["target"] = token;
    rj["resumed"] = resume;
    rj["vocabulary_hash"] = hex64(vhash);
    rj["checkpoint_hash"] = hash_of(ckpt);
    rj["train_examples"] = train.size();
    rj["validation_examples"] = val.size();
    rj["config"] = model.config().to_json();
    write_json(p.artifact("train_report-" + s + ".json"), rj);
    write_json(p.artifact("train_timing-" + s + ".json"),
               {{"target", token}, {"wall_seconds", report.wall_seconds}, {"epochs", report.epochs.size()}});
    std::cout << token << ": " << report.epochs.size() << " epoch(s), best validation mse " << report.best_validation_mse
              << " at epoch " << report.best_epoch << "\n";
  }
}

void cmd_predict(const Pipeline& p, const std::vector<std::string>& models, const std::string& queries_path,
                 const std::string& output) {
  const fs::path qpath = queries_path.empty() ? p.artifact("test.jsonl") : fs::path(queries_path);
  if (!fs::exists(qpath)) throw Error(ErrorCode::Io, "missing queries file " + qpath.string());
  const auto qf = read_jsonl(qpath);
  const auto queries = queries_from_records(qf.records);

  std::map<std::string, LoadedModel> by_target;
  for (const auto& path : model_paths(p, models)) {
    auto m = load_model(path);
    m.target = m.vocab.token(1);
    for (std::uint32_t id = 1; id <= m.vocab.target_count(); ++id) {
      // A checkpoint serves the target it was trained on; its file name says which.
      const auto& tok = m.vocab.token(id);
      if (path.stem().string() == "model-" + slug(tok)) m.target = tok;
    }
    by_target.emplace(m.target, std::move(m));
  }

  std::vector<double> predictions(queries.size());
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < queries.size(); ++i) groups[queries[i].target.token()].push_back(i);
  for (const auto& [token, idx] : groups) {
    auto it = by_target.find(token);
    if (it == by_target.end()) throw Error(ErrorCode::UnknownToken, "no model for target '" + token + "'");
    std::vector<FlatQuery> sub;
    for (auto i : idx) sub.push_back(queries[i]);
    const auto xs = encode_all(sub, it->second.vocab);
    const auto ys = nnet::predict_batch(it->second.model, xs, p.threads);
    for (std::size_t k = 0; k < idx.size(); ++k) predictions[idx[k]] = ys[k];
  }

  std::vector<json> records;
  for (std::size_t i = 0; i < queries.size(); ++i)
    records.push_back({{"index", i}, {"target", queries[i].target.token()}, {"prediction", predictions[i]}});
  json model_hashes = json::object();
  for (const auto& [token, m] : by_target) model_hashes[token] = hash_of(m.path);
  json header = {{"kind", "predictions"}, {"queries_hash", hash_of(qpath)}, {"model_hashes", model_hashes},
                 {"count", queries.size()}};
  const fs::path out = output.empty() ? p.artifact("predictions.jsonl") : fs::path(output);
  write_jsonl(out, header, records);
  std::cout << "wrote " << queries.size() << " predictions to " << out.string() << "\n";
}

void cmd_eval(const Pipeline& p, const std::vector<std::string>& models) {
  const auto a = load_encoded(p);
  const auto test_all = load_split(p, "test", a);
  std::optional<double> entropy;
  if (p.cfg.contains("dataset") && p.cfg.contains("template")) {
    const auto ds = p.load_dataset();
    const auto t = p.query_template();
    std::vector<std::string> where = t.cont_filter_attrs;
    where.insert(where.end(), t.nom_filter_attrs.begin(), t.nom_filter_attrs.end());
    if (!where.empty()) entropy = metrics::mean_entropy(ds, where);
  }
  for (const auto& path : model_paths(p, models)) {
    auto m = load_model(path);
    if (m.model.vocabulary_hash != a.vocab.content_hash())
      throw Error(ErrorCode::VocabularyMismatch, path.string() + " was trained against another vocabulary");
    const auto token = target_of_checkpoint(m, a.manifest.at("targets"));
    if (token.empty()) throw Error(ErrorCode::InvalidTarget, path.string() + " does not name a manifest target");
    const auto test = for_target(test_all, token);
    std::vector<FlatQuery> qs;
    std::vector<double> labels;
    for (const auto& q : test) {
      qs.push_back(q.query);
      labels.push_back(q.label);
    }
    const auto xs = encode_all(qs, a.vocab);
    const auto preds = nnet::predict_batch(m.model, xs, p.threads);
    auto report = metrics::evaluate_accuracy(preds, labels);
    report.mean_entropy = entropy;
    report.input_tensor_variance = metrics::input_tensor_variance(xs);
    report.workers = p.threads ? p.threads : omp_get_max_threads();
    json j = report.to_json();
    j["target"] = token;
    j["checkpoint_hash"] = hash_of(path);
    write_json(p.artifact("eval-" + slug(token) + ".json"), j);
    std::cout << token << "\n" << report.table();
  }
}

void cmd_bench(const Pipeline& p, const std::vector<std::string>& models, std::vector<std::size_t> batch_sizes,
               std::size_t warmup, std::size_t reps) {
  const auto opts = p.metrics_options();
  if (batch_sizes.empty()) batch_sizes = opts.value("batch_sizes", std::vector<std::size_t>{1000, 10000});
  if (warmup == 0) warmup = opts.value("warmup", std::size_t{50});
  if (reps == 0) reps = opts.value("reps", std::size_t{500});
  const auto a = load_encoded(p);
  const auto test_all = load_split(p, "test", a);
  const int workers = p.threads ? p.threads : omp_get_max_threads();

  for (const auto& path : model_paths(p, models)) {
    auto m = load_model(path);
    const auto token = target_of_checkpoint(m, a.manifest.at("targets"));
    std::vector<FlatQuery> qs;
    for (const auto& q : for_target(test_all, token)) qs.push_back(q.query);
    if (qs.empty()) throw Error(ErrorCode::EmptyList, "no test queries for '" + token + "'");
    const auto xs = encode_all(qs, m.vocab);

    const auto& model = m.model;
    const double ql = metrics::measure_ql([&](const EncodedQuery& x) { return nnet::forward(model, x); }, xs, warmup,
                                          reps);
    json rows = json::array();
    std::ostringstream table;
    table << token << " (" << workers << " worker(s))\n";
    table << "  batch      QT (q/s)   QL (ms/q)\n";
    for (auto n : batch_sizes) {
      std::vector<EncodedQuery> batch;
      batch.reserve(n);
      for (std::size_t i = 0; i < n; ++i) batch.push_back(xs[i % xs.size()]);
      const double qt = metrics::measure_qt(
          [&](std::span<const EncodedQuery> b) { return nnet::predict_batch(model, b, p.threads); }, batch);
      rows.push_back({{"batch_size", n}, {"qt_qps", qt}});
      char line[96];
      std::snprintf(line, sizeof line, "  %-8zu %11.0f %11.4f\n", n, qt, ql);
      table << line;
    }
    json j = {{"target", token}, {"workers", workers}, {"ql_ms", ql}, {"warmup", warmup}, {"reps", reps},
              {"batches", rows}, {"checkpoint_hash", hash_of(path)}};
    write_json(p.artifact("bench-" + slug(token) + ".json"), j);
    std::cout << table.str();
  }
}

int report_error(std::string_view code, const std::string& message, int exit_code) {
  json payload = {{"error", {{"code", code}, {"message", message}, {"exit_code", exit_code}}}};
  std::cerr << payload.dump() << "\n";
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned approximate answers to aggregate queries"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  app.add_option("--config", opt.config_path, "pipeline config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "global seed (template, split and model)");
  app.add_option("--out-dir", opt.out_dir, "artifact directory");
  app.add_option("--threads", opt.threads, "worker threads for labeling and prediction (0 = all)")
      ->check(CLI::NonNegativeNumber);

  auto* synth = app.add_subcommand("synth", "write a synthetic sales table, schema, template and config");
  std::size_t synth_rows = 100000, synth_samples = 200;
  double synth_noise = 20.0;
  synth->add_option("--rows", synth_rows, "row count");
  synth->add_option("--samples", synth_samples, "continuous filter samples per template");
  synth->add_option("--noise", synth_noise, "noise standard deviation");

  auto* profile = app.add_subcommand("profile", "dataset characteristics");
  auto* generate = app.add_subcommand("generate", "sample the query workload");
  bool sql = false;
  generate->add_flag("--sql", sql, "also write workload.sql");
  app.add_subcommand("label", "answer every workload query exactly");
  app.add_subcommand("encode", "build the vocabulary and split the labeled workload");

  auto* train = app.add_subcommand("train", "fit one model per target");
  std::string target;
  bool resume = false, quiet = false;
  train->add_option("--target", target, "train only this target, e.g. avg(sales)");
  train->add_flag("--resume", resume, "continue from the existing checkpoint");
  train->add_flag("--quiet", quiet, "no per-epoch log");

  auto* predict = app.add_subcommand("predict", "predict answers for a query file");
  std::vector<std::string> models;
  std::string queries, output;
  predict->add_option("--model", models, "checkpoint(s); default: every model-*.ckpt in --out-dir");
  predict->add_option("--queries", queries, "JSONL query records; default: test.jsonl");
  predict->add_option("--output", output, "default: predictions.jsonl");

  auto* eval = app.add_subcommand("eval", "accuracy on the test split");
  eval->add_option("--model", models, "checkpoint(s)");

  auto* bench = app.add_subcommand("bench", "QL and QT on the test split");
  std::vector<std::size_t> batch_sizes;
  std::size_t warmup = 0, reps = 0;
  bench->add_option("--model", models, "checkpoint(s)");
  bench->add_option("--batch-sizes", batch_sizes, "batch sizes for QT");
  bench->add_option("--warmup", warmup, "untimed calls before QL");
  bench->add_option("--reps", reps, "timed calls for QL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("InvalidArgument", e.what(), 1);
  }
  if (seed_opt->count()) opt.seed = seed;

  try {
    const auto p = make_pipeline(opt);
    const auto* cmd = app.get_subcommands().front();
    const auto name = cmd->get_name();
    if (name == "synth")
      cmd_synth(p, synth_rows, synth_samples, synth_noise);
    else if (name == "profile")
      cmd_profile(p);
    else if (name == "generate")
      cmd_generate(p, sql);
    else if (name == "label")
      cmd_label(p);
    else if (name == "encode")
      cmd_encode(p);
    else if (name == "train")
      cmd_train(p, target, resume, quiet);
    else if (name == "predict")
      cmd_predict(p, models, queries, output);
    else if (name == "eval")
      cmd_eval(p, models);
    else if (name == "bench")
      cmd_bench(p, models, batch_sizes, warmup, reps);
    (void)profile;
    (void)generate;
    return 0;
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what(), is_validation_error(e.code()) ? 1 : 2);
  } catch (const json::exception& e) {
    return report_error("ParseError", e.what(), 1);
  } catch (const fs::filesystem_error& e) {
    return report_error("Io", e.what(), 2);
  } catch (const std::exception& e) {
    return report_error("Internal", e.what(), 2);
  }
}
