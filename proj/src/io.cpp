#include "blrm/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blrm/math.hpp"

namespace blrm {

namespace {

using json = nlohmann::ordered_json;

constexpr double kDefaultLogAlphaSd = 2.0;
constexpr double kDefaultLogBetaSd = 1.0;

double default_log_alpha_mean() { return logit(0.10); }

// Best-effort source line of a dotted field path: walks the path's key names
// through the raw text in order, so repeated key names (mean, sd) resolve
// near their parent block. 0 when the path cannot be located.
int line_for_path(const std::string& text, const std::string& path) {
  std::vector<std::string> keys;
  std::string cur;
  for (char c : path) {
    if (c == '.' || c == '[') {
      if (!cur.empty()) keys.push_back(std::exchange(cur, {}));
      if (c == '[') cur = "\0";  // marker: skip until ]
    } else if (c == ']') {
      cur.clear();
    } else if (cur.empty() || cur[0] != '\0') {
      cur.push_back(c);
    }
  }
  if (!cur.empty() && cur[0] != '\0') keys.push_back(cur);

  std::size_t pos = 0;
  std::size_t found = std::string::npos;
  for (const auto& key : keys) {
    auto hit = text.find("\"" + key + "\"", pos);
    if (hit == std::string::npos) break;
    found = hit;
    pos = hit + 1;
  }
  if (found == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + found, '\n'));
}

struct ParseCtx {
  const std::string* text;
};

[[noreturn]] void fail(const ParseCtx& ctx, const std::string& path,
                       const std::string& msg) {
  std::string out = "config error: " + path + ": " + msg;
  if (int line = line_for_path(*ctx.text, path)) {
    out += " (line " + std::to_string(line) + ")";
  }
  throw ConfigError(out);
}

void require_object(const ParseCtx& ctx, const std::string& path,
                    const json& j) {
  if (!j.is_object()) fail(ctx, path, "expected an object");
}

void reject_unknown_keys(const ParseCtx& ctx, const std::string& path,
                         const json& obj,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) fail(ctx, path.empty() ? key : path + "." + key, "unknown key");
  }
}

double as_number(const ParseCtx& ctx, const std::string& path, const json& j) {
  if (!j.is_number()) fail(ctx, path, "expected a number");
  return j.get<double>();
}

int as_int(const ParseCtx& ctx, const std::string& path, const json& j) {
  if (!j.is_number_integer()) fail(ctx, path, "expected an integer");
  return j.get<int>();
}

std::string as_string(const ParseCtx& ctx, const std::string& path,
                      const json& j) {
  if (!j.is_string()) fail(ctx, path, "expected a string");
  return j.get<std::string>();
}

GaussianPrior parse_prior(const ParseCtx& ctx, const std::string& path,
                          const json& j, double default_mean,
                          std::optional<double> default_sd) {
  require_object(ctx, path, j);
  reject_unknown_keys(ctx, path, j, {"mean", "sd"});
  GaussianPrior p;
  p.mean = j.contains("mean") ? as_number(ctx, path + ".mean", j.at("mean"))
                              : default_mean;
  if (j.contains("sd")) {
    p.sd = as_number(ctx, path + ".sd", j.at("sd"));
  } else if (default_sd.has_value()) {
    p.sd = *default_sd;
  } else {
    fail(ctx, path + ".sd", "required, no default (interaction prior width)");
  }
  if (!(p.sd > 0.0)) fail(ctx, path + ".sd", "must be positive");
  return p;
}

// Accepts one prior object (applied to every slot) or an array with exactly
// one object per slot.
std::vector<GaussianPrior> parse_prior_list(const ParseCtx& ctx,
                                            const std::string& path,
                                            const json& j, std::size_t count,
                                            double default_mean,
                                            std::optional<double> default_sd) {
  std::vector<GaussianPrior> out;
  if (j.is_object()) {
    out.assign(count, parse_prior(ctx, path, j, default_mean, default_sd));
    return out;
  }
  if (!j.is_array()) fail(ctx, path, "expected a prior object or an array");
  if (j.size() != count) {
    fail(ctx, path,
         "expected " + std::to_string(count) + " entries, got " +
             std::to_string(j.size()));
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(parse_prior(ctx, path + "[" + std::to_string(i) + "]", j[i],
                              default_mean, default_sd));
  }
  return out;
}

ModelVariant parse_variant(const ParseCtx& ctx, const std::string& path,
                           const std::string& name) {
  if (name == "no-interaction") return ModelVariant::no_interaction();
  if (name == "thall2003") return ModelVariant::thall2();
  if (name == "linear") return ModelVariant::logit_additive(GammaKind::Linear);
  if (name == "saturating") {
    return ModelVariant::logit_additive(GammaKind::Saturating);
  }
  fail(ctx, path,
       "unknown variant '" + name +
           "' (expected no-interaction, thall2003, linear or saturating)");
}

std::string variant_string(const ModelVariant& v) {
  switch (v.kind) {
    case VariantKind::NoInteraction:
      return "no-interaction";
    case VariantKind::Thall2:
      return "thall2003";
    case VariantKind::LogitAdditive:
      return v.gamma == GammaKind::Linear ? "linear" : "saturating";
  }
  throw std::logic_error("unreachable variant kind");
}

int drug_index_by_name(const std::vector<DrugSpec>& drugs,
                       const std::string& name) {
  for (std::size_t i = 0; i < drugs.size(); ++i) {
    if (drugs[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

ModelSpec parse_model(const ParseCtx& ctx, const json& j) {
  require_object(ctx, "model", j);
  reject_unknown_keys(ctx, "model", j, {"drugs", "variant", "interactions"});
  if (!j.contains("drugs")) fail(ctx, "model.drugs", "required");
  if (!j.contains("variant")) fail(ctx, "model.variant", "required");

  const json& jd = j.at("drugs");
  if (!jd.is_array() || jd.empty()) {
    fail(ctx, "model.drugs", "expected a non-empty array");
  }
  std::vector<DrugSpec> drugs;
  for (std::size_t i = 0; i < jd.size(); ++i) {
    const std::string path = "model.drugs[" + std::to_string(i) + "]";
    require_object(ctx, path, jd[i]);
    reject_unknown_keys(ctx, path, jd[i], {"name", "ref_dose"});
    if (!jd[i].contains("name")) fail(ctx, path + ".name", "required");
    if (!jd[i].contains("ref_dose")) fail(ctx, path + ".ref_dose", "required");
    DrugSpec d;
    d.name = as_string(ctx, path + ".name", jd[i].at("name"));
    d.ref_dose = as_number(ctx, path + ".ref_dose", jd[i].at("ref_dose"));
    if (d.name.empty()) fail(ctx, path + ".name", "must be non-empty");
    if (!(d.ref_dose > 0.0)) fail(ctx, path + ".ref_dose", "must be positive");
    drugs.push_back(std::move(d));
  }

  auto variant =
      parse_variant(ctx, "model.variant",
                    as_string(ctx, "model.variant", j.at("variant")));

  std::vector<InteractionTerm> terms;
  if (j.contains("interactions")) {
    const json& ji = j.at("interactions");
    if (!ji.is_array()) fail(ctx, "model.interactions", "expected an array");
    for (std::size_t t = 0; t < ji.size(); ++t) {
      const std::string path = "model.interactions[" + std::to_string(t) + "]";
      if (!ji[t].is_array()) fail(ctx, path, "expected an array of drug names");
      InteractionTerm term;
      for (std::size_t m = 0; m < ji[t].size(); ++m) {
        auto name = as_string(ctx, path, ji[t][m]);
        int idx = drug_index_by_name(drugs, name);
        if (idx < 0) fail(ctx, path, "unknown drug '" + name + "'");
        term.members.push_back(idx);
      }
      terms.push_back(std::move(term));
    }
  } else if (variant.kind == VariantKind::LogitAdditive) {
    terms = enumerate_interactions(static_cast<int>(drugs.size()));
  }

  try {
    return ModelSpec::make(std::move(drugs), variant, std::move(terms));
  } catch (const std::exception& e) {
    fail(ctx, "model", e.what());
  }
}

PriorSpec parse_priors(const ParseCtx& ctx, const json* j,
                       const ModelSpec& spec) {
  const std::size_t n = spec.drugs.size();
  const std::size_t n_terms = spec.terms.size();
  const bool thall = spec.variant.kind == VariantKind::Thall2;

  json empty = json::object();
  const json& jp = j ? *j : empty;
  require_object(ctx, "priors", jp);
  reject_unknown_keys(
      ctx, "priors", jp,
      {"log_alpha", "log_beta", "eta", "log_alpha3", "log_beta3"});

  PriorSpec priors;
  if (jp.contains("log_alpha")) {
    priors.log_alpha = parse_prior_list(ctx, "priors.log_alpha",
                                        jp.at("log_alpha"), n,
                                        default_log_alpha_mean(),
                                        kDefaultLogAlphaSd);
  } else {
    priors.log_alpha.assign(n, {default_log_alpha_mean(), kDefaultLogAlphaSd});
  }
  if (jp.contains("log_beta")) {
    priors.log_beta = parse_prior_list(ctx, "priors.log_beta",
                                       jp.at("log_beta"), n, 0.0,
                                       kDefaultLogBetaSd);
  } else {
    priors.log_beta.assign(n, {0.0, kDefaultLogBetaSd});
  }

  const bool additive = spec.variant.kind == VariantKind::LogitAdditive;
  if (additive && n_terms > 0) {
    if (!jp.contains("eta")) {
      fail(ctx, "priors.eta",
           "required: the interaction prior width has no default");
    }
    priors.eta = parse_prior_list(ctx, "priors.eta", jp.at("eta"), n_terms,
                                  0.0, std::nullopt);
  } else if (jp.contains("eta")) {
    fail(ctx, "priors.eta", "given, but the model has no eta coefficients");
  }

  if (thall) {
    if (!jp.contains("log_alpha3")) {
      fail(ctx, "priors.log_alpha3",
           "required: the interaction prior width has no default");
    }
    if (!jp.contains("log_beta3")) {
      fail(ctx, "priors.log_beta3",
           "required: the interaction prior width has no default");
    }
    priors.log_alpha3 =
        parse_prior(ctx, "priors.log_alpha3", jp.at("log_alpha3"),
                    2.0 * default_log_alpha_mean(), std::nullopt);
    priors.log_beta3 = parse_prior(ctx, "priors.log_beta3", jp.at("log_beta3"),
                                   0.0, std::nullopt);
  } else {
    if (jp.contains("log_alpha3")) {
      fail(ctx, "priors.log_alpha3", "only meaningful for thall2003");
    }
    if (jp.contains("log_beta3")) {
      fail(ctx, "priors.log_beta3", "only meaningful for thall2003");
    }
  }
  return priors;
}

IntervalSpec parse_intervals(const ParseCtx& ctx, const json* j) {
  IntervalSpec intervals;
  if (!j) return intervals;
  require_object(ctx, "intervals", *j);
  reject_unknown_keys(ctx, "intervals", *j,
                      {"under_max", "over_min", "ewoc_max"});
  if (j->contains("under_max")) {
    intervals.under_max =
        as_number(ctx, "intervals.under_max", j->at("under_max"));
  }
  if (j->contains("over_min")) {
    intervals.over_min =
        as_number(ctx, "intervals.over_min", j->at("over_min"));
  }
  if (j->contains("ewoc_max")) {
    intervals.ewoc_max =
        as_number(ctx, "intervals.ewoc_max", j->at("ewoc_max"));
  }
  try {
    intervals.validate();
  } catch (const std::exception& e) {
    fail(ctx, "intervals", e.what());
  }
  return intervals;
}

SamplerConfig parse_sampler(const ParseCtx& ctx, const json* j) {
  SamplerConfig cfg;
  if (!j) return cfg;
  require_object(ctx, "sampler", *j);
  reject_unknown_keys(ctx, "sampler", *j,
                      {"chains", "warmup_iters", "sampling_iters", "seed",
                       "target_acceptance", "max_leapfrog_depth"});
  if (j->contains("chains")) {
    cfg.chains = as_int(ctx, "sampler.chains", j->at("chains"));
  }
  if (j->contains("warmup_iters")) {
    cfg.warmup_iters = as_int(ctx, "sampler.warmup_iters", j->at("warmup_iters"));
  }
  if (j->contains("sampling_iters")) {
    cfg.sampling_iters =
        as_int(ctx, "sampler.sampling_iters", j->at("sampling_iters"));
  }
  if (j->contains("seed")) {
    const json& js = j->at("seed");
    if (!js.is_number_unsigned()) {
      fail(ctx, "sampler.seed", "expected a non-negative integer");
    }
    cfg.seed = js.get<std::uint64_t>();
  }
  if (j->contains("target_acceptance")) {
    cfg.target_acceptance =
        as_number(ctx, "sampler.target_acceptance", j->at("target_acceptance"));
  }
  if (j->contains("max_leapfrog_depth")) {
    cfg.max_leapfrog_depth =
        as_int(ctx, "sampler.max_leapfrog_depth", j->at("max_leapfrog_depth"));
  }
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    fail(ctx, "sampler", e.what());
  }
  return cfg;
}

std::optional<std::vector<std::vector<double>>> parse_grid(
    const ParseCtx& ctx, const json* j, const ModelSpec& spec) {
  if (!j) return std::nullopt;
  if (j->is_string()) {
    if (j->get<std::string>() != "default") {
      fail(ctx, "grid", "expected \"default\" or {drugname: [doses]}");
    }
    return std::nullopt;
  }
  require_object(ctx, "grid", *j);
  std::vector<std::vector<double>> axes(spec.drugs.size());
  std::vector<bool> seen(spec.drugs.size(), false);
  for (const auto& [key, value] : j->items()) {
    int idx = drug_index_by_name(spec.drugs, key);
    if (idx < 0) fail(ctx, "grid." + key, "unknown drug");
    const std::string path = "grid." + key;
    if (!value.is_array() || value.empty()) {
      fail(ctx, path, "expected a non-empty dose array");
    }
    std::vector<double> ladder;
    for (std::size_t i = 0; i < value.size(); ++i) {
      double d = as_number(ctx, path, value[i]);
      if (!(d >= 0.0) || !std::isfinite(d)) {
        fail(ctx, path, "doses must be finite and non-negative");
      }
      ladder.push_back(d);
    }
    if (!std::is_sorted(ladder.begin(), ladder.end())) {
      fail(ctx, path, "doses must be ascending");
    }
    axes[idx] = std::move(ladder);
    seen[idx] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) fail(ctx, "grid." + spec.drugs[i].name, "required");
  }
  return axes;
}

json prior_to_json(const GaussianPrior& p) {
  return json{{"mean", p.mean}, {"sd", p.sd}};
}

json prior_list_to_json(const std::vector<GaussianPrior>& ps) {
  json arr = json::array();
  for (const auto& p : ps) arr.push_back(prior_to_json(p));
  return arr;
}

// CSV helpers. Fields are trimmed; quoting is not supported, so labels must
// not contain commas.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::exchange(cur, {}));
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    auto b = f.find_first_not_of(" \t\r");
    auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return fields;
}

[[noreturn]] void row_fail(std::size_t row, const std::string& msg) {
  throw ConfigError("data error: row " + std::to_string(row) + ": " + msg);
}

double parse_double_field(std::size_t row, const std::string& column,
                          const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    row_fail(row, "bad number '" + text + "' in column '" + column + "'");
  }
}

int parse_int_field(std::size_t row, const std::string& column,
                    const std::string& text) {
  try {
    std::size_t used = 0;
    int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    row_fail(row, "bad integer '" + text + "' in column '" + column + "'");
  }
}

std::string format_dose(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", d);
  return buf;
}

std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", p);
  return buf;
}

}  // namespace

std::vector<std::vector<double>> RunConfig::grid_axes() const {
  if (grid.has_value()) return *grid;
  return std::vector<std::vector<double>>(model.drugs.size(),
                                          default_dose_ladder());
}

RunConfig parse_config(const std::string& text) {
  ParseCtx ctx{&text};
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    byte = std::min(byte, text.size());
    int line =
        1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
    throw ConfigError("config error: invalid syntax (line " +
                      std::to_string(line) + "): " + e.what());
  }
  require_object(ctx, "(root)", root);
  reject_unknown_keys(ctx, "", root,
                      {"model", "priors", "intervals", "sampler", "grid"});
  if (!root.contains("model")) fail(ctx, "model", "required");

  RunConfig cfg;
  cfg.model = parse_model(ctx, root.at("model"));
  const json* jp = root.contains("priors") ? &root.at("priors") : nullptr;
  cfg.priors = parse_priors(ctx, jp, cfg.model);
  const json* ji = root.contains("intervals") ? &root.at("intervals") : nullptr;
  cfg.intervals = parse_intervals(ctx, ji);
  const json* js = root.contains("sampler") ? &root.at("sampler") : nullptr;
  cfg.sampler = parse_sampler(ctx, js);
  const json* jg = root.contains("grid") ? &root.at("grid") : nullptr;
  cfg.grid = parse_grid(ctx, jg, cfg.model);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& config) {
  json root;
  json drugs = json::array();
  for (const auto& d : config.model.drugs) {
    drugs.push_back({{"name", d.name}, {"ref_dose", d.ref_dose}});
  }
  root["model"]["drugs"] = std::move(drugs);
  root["model"]["variant"] = variant_string(config.model.variant);
  if (config.model.variant.kind == VariantKind::LogitAdditive) {
    json terms = json::array();
    for (const auto& t : config.model.terms) {
      json term = json::array();
      for (int m : t.members) term.push_back(config.model.drugs[m].name);
      terms.push_back(std::move(term));
    }
    root["model"]["interactions"] = std::move(terms);
  }

  root["priors"]["log_alpha"] = prior_list_to_json(config.priors.log_alpha);
  root["priors"]["log_beta"] = prior_list_to_json(config.priors.log_beta);
  if (!config.priors.eta.empty()) {
    root["priors"]["eta"] = prior_list_to_json(config.priors.eta);
  }
  if (config.model.variant.kind == VariantKind::Thall2) {
    root["priors"]["log_alpha3"] = prior_to_json(config.priors.log_alpha3);
    root["priors"]["log_beta3"] = prior_to_json(config.priors.log_beta3);
  }

  root["intervals"] = {{"under_max", config.intervals.under_max},
                       {"over_min", config.intervals.over_min},
                       {"ewoc_max", config.intervals.ewoc_max}};
  root["sampler"] = {
      {"chains", config.sampler.chains},
      {"warmup_iters", config.sampler.warmup_iters},
      {"sampling_iters", config.sampler.sampling_iters},
      {"seed", config.sampler.seed},
      {"target_acceptance", config.sampler.target_acceptance},
      {"max_leapfrog_depth", config.sampler.max_leapfrog_depth}};
  if (config.grid.has_value()) {
    json grid;
    for (std::size_t i = 0; i < config.model.drugs.size(); ++i) {
      grid[config.model.drugs[i].name] = (*config.grid)[i];
    }
    root["grid"] = std::move(grid);
  } else {
    root["grid"] = "default";
  }
  return root.dump(2) + "\n";
}

std::vector<CohortRecord> read_cohorts(std::istream& in,
                                       const ModelSpec& spec) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("data error: empty input, expected a header row");
  }
  auto header = split_csv_line(line);

  const int n = spec.n_drugs();
  std::vector<int> dose_col(n, -1);
  int col_patients = -1, col_dlt = -1, col_label = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.rfind("dose_", 0) == 0) {
      int idx = -1;
      for (int i = 0; i < n; ++i) {
        if (h.substr(5) == spec.drugs[i].name) idx = i;
      }
      if (idx < 0) {
        throw ConfigError("data error: unknown drug column '" + h + "'");
      }
      if (dose_col[idx] >= 0) {
        throw ConfigError("data error: duplicate column '" + h + "'");
      }
      dose_col[idx] = static_cast<int>(c);
    } else if (h == "n_patients") {
      col_patients = static_cast<int>(c);
    } else if (h == "n_dlt") {
      col_dlt = static_cast<int>(c);
    } else if (h == "label") {
      col_label = static_cast<int>(c);
    } else {
      throw ConfigError("data error: unknown column '" + h + "'");
    }
  }
  for (int i = 0; i < n; ++i) {
    if (dose_col[i] < 0) {
      throw ConfigError("data error: missing column 'dose_" +
                        spec.drugs[i].name + "'");
    }
  }
  if (col_patients < 0) {
    throw ConfigError("data error: missing column 'n_patients'");
  }
  if (col_dlt < 0) throw ConfigError("data error: missing column 'n_dlt'");

  std::vector<CohortRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      row_fail(row, "expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    CohortRecord rec;
    rec.doses.resize(n);
    for (int i = 0; i < n; ++i) {
      rec.doses[i] = parse_double_field(row, header[dose_col[i]],
                                        fields[dose_col[i]]);
      if (rec.doses[i] < 0.0) row_fail(row, "doses must be non-negative");
    }
    rec.n_patients = parse_int_field(row, "n_patients", fields[col_patients]);
    rec.n_dlt = parse_int_field(row, "n_dlt", fields[col_dlt]);
    if (col_label >= 0) rec.label = fields[col_label];
    if (rec.n_patients <= 0) row_fail(row, "n_patients must be positive");
    if (rec.n_dlt < 0) row_fail(row, "n_dlt must be non-negative");
    if (rec.n_dlt > rec.n_patients) {
      row_fail(row, "n_dlt (" + std::to_string(rec.n_dlt) +
                        ") exceeds n_patients (" +
                        std::to_string(rec.n_patients) + ")");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<CohortRecord> load_cohorts(const std::string& path,
                                       const ModelSpec& spec) {
  std::ifstream in(path);
  if (!in) throw ConfigError("data error: cannot open '" + path + "'");
  return read_cohorts(in, spec);
}

void write_surface(const std::vector<SurfaceRow>& rows,
                   const std::vector<std::string>& drug_names,
                   std::ostream& out) {
  if (rows.empty()) {
    throw std::invalid_argument("write_surface: empty table");
  }
  for (const auto& row : rows) {
    if (row.doses.size() != drug_names.size()) {
      throw std::invalid_argument(
          "write_surface: dose arity does not match drug names");
    }
  }
  for (const auto& name : drug_names) out << "dose_" << name << ",";
  out << "p_under,p_target,p_over,mean_pi,q025,q50,q975,ewoc_ok\n";
  for (const auto& row : rows) {
    for (double d : row.doses) out << format_dose(d) << ",";
    out << format_prob(row.p_under) << "," << format_prob(row.p_target) << ","
        << format_prob(row.p_over) << "," << format_prob(row.mean_pi) << ","
        << format_prob(row.q025) << "," << format_prob(row.q50) << ","
        << format_prob(row.q975) << ","
        << (row.ewoc_ok ? "true" : "false") << "\n";
  }
  if (!out) throw std::runtime_error("write_surface: write failed");
}

void write_surface_file(const std::vector<SurfaceRow>& rows,
                        const std::vector<std::string>& drug_names,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_surface: cannot open '" + path + "'");
  }
  write_surface(rows, drug_names, out);
  out.flush();
  if (!out) throw std::runtime_error("write_surface: write failed");
}

std::vector<SurfaceRow> read_surface(std::istream& in, int n_drugs) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("data error: empty input, expected a header row");
  }
  auto header = split_csv_line(line);
  const std::size_t expected = static_cast<std::size_t>(n_drugs) + 8;
  if (header.size() != expected) {
    throw ConfigError("data error: expected " + std::to_string(expected) +
                      " columns, got " + std::to_string(header.size()));
  }
  std::vector<SurfaceRow> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    auto fields = split_csv_line(line);
    if (fields.size() != expected) {
      row_fail(row, "expected " + std::to_string(expected) +
                        " fields, got " + std::to_string(fields.size()));
    }
    SurfaceRow r;
    for (int i = 0; i < n_drugs; ++i) {
      r.doses.push_back(parse_double_field(row, header[i], fields[i]));
    }
    const std::size_t o = static_cast<std::size_t>(n_drugs);
    r.p_under = parse_double_field(row, "p_under", fields[o]);
    r.p_target = parse_double_field(row, "p_target", fields[o + 1]);
    r.p_over = parse_double_field(row, "p_over", fields[o + 2]);
    r.mean_pi = parse_double_field(row, "mean_pi", fields[o + 3]);
    r.q025 = parse_double_field(row, "q025", fields[o + 4]);
    r.q50 = parse_double_field(row, "q50", fields[o + 5]);
    r.q975 = parse_double_field(row, "q975", fields[o + 6]);
    const std::string& flag = fields[o + 7];
    if (flag != "true" && flag != "false") {
      row_fail(row, "ewoc_ok must be true or false, got '" + flag + "'");
    }
    r.ewoc_ok = flag == "true";
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_draws_summary(const PosteriorDraws& draws, std::ostream& out) {
  out << "parameter,mean,sd,q025,q50,q975,rhat,ess\n";
  const std::size_t n = draws.n_rows();
  std::vector<double> column(n);
  for (std::size_t p = 0; p < draws.param_names.size(); ++p) {
    for (std::size_t r = 0; r < n; ++r) {
      column[r] = draws.at(r, p);
    }
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    std::sort(column.begin(), column.end());
    out << draws.param_names[p] << "," << format_prob(mean) << ","
        << format_prob(sd) << "," << format_prob(sorted_quantile(column, 0.025))
        << "," << format_prob(sorted_quantile(column, 0.50)) << ","
        << format_prob(sorted_quantile(column, 0.975)) << ","
        << format_prob(draws.rhat[p]) << "," << format_prob(draws.ess[p])
        << "\n";
  }
  if (!out) throw std::runtime_error("write_draws_summary: write failed");
}

void write_diagnostics(const PosteriorDraws& draws, const SamplerConfig& config,
                       std::ostream& out) {
  json root;
  root["converged"] = draws.converged;
  root["divergence_count"] = draws.divergence_count;
  root["chains"] = draws.n_chains;
  root["iterations_per_chain"] = draws.n_iters;
  root["seed"] = config.seed;
  root["warmup_iters"] = config.warmup_iters;
  root["target_acceptance"] = config.target_acceptance;
  root["max_leapfrog_depth"] = config.max_leapfrog_depth;
  json params = json::array();
  for (std::size_t p = 0; p < draws.param_names.size(); ++p) {
    params.push_back({{"name", draws.param_names[p]},
                      {"rhat", draws.rhat[p]},
                      {"ess", draws.ess[p]}});
  }
  root["parameters"] = std::move(params);
  out << root.dump(2) << "\n";
  if (!out) throw std::runtime_error("write_diagnostics: write failed");
}

}  // namespace blrm
