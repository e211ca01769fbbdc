#include "forge/mixture.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "json.hpp"

#include "forge/error.hpp"
#include "forge/manifest.hpp"

namespace forge {

std::int64_t total_tokens(std::int64_t steps, std::int64_t batch, std::int64_t seq_len) {
  if (steps < 1 || batch < 1 || seq_len < 1)
    throw ValidationError("total_tokens: steps, batch and sequence length must be >= 1");
  __int128 t = static_cast<__int128>(steps) * batch * seq_len;
  if (t > std::numeric_limits<std::int64_t>::max())
    throw ValidationError("total_tokens: product overflows 64 bits");
  return static_cast<std::int64_t>(t);
}

MixturePlan plan(const MixtureSpec& spec, const std::vector<SourceStats>& sources) {
  if (spec.text_fraction < 0.0 || spec.text_fraction > 1.0)
    throw ValidationError("plan: text_fraction must be in [0, 1]");
  double weight_sum = 0.0;
  for (const SpeechSourceSpec& s : spec.speech_sources) {
    if (s.weight < 0.0) throw ValidationError("plan: negative weight for source '" + s.name + "'");
    weight_sum += s.weight;
  }
  if (!spec.speech_sources.empty() && std::fabs(weight_sum - 1.0) > 1e-9)
    throw ValidationError("plan: speech source weights must sum to 1 (got " +
                          std::to_string(weight_sum) + ")");

  std::map<std::string, const SourceStats*> by_name;
  for (const SourceStats& s : sources) by_name[s.name] = &s;
  auto lookup = [&](const std::string& name) -> const SourceStats& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("plan: unknown source '" + name + "'");
    if (it->second->tokens_available == 0)
      throw ValidationError("plan: source '" + name + "' has no tokens available");
    return *it->second;
  };

  MixturePlan out;
  out.total_tokens = total_tokens(spec.total_steps, spec.batch_size, spec.sequence_length);
  const long double total = static_cast<long double>(out.total_tokens);
  const long double speech_budget = total * (1.0L - static_cast<long double>(spec.text_fraction));

  std::int64_t speech_sum = 0;
  std::vector<PlanRow> speech_rows;
  for (const SpeechSourceSpec& s : spec.speech_sources) {
    const SourceStats& stats = lookup(s.name);
    PlanRow row;
    row.name = s.name;
    row.tokens_drawn = static_cast<std::int64_t>(
        llroundl(speech_budget * static_cast<long double>(s.weight)));
    row.repeats = static_cast<double>(row.tokens_drawn) /
                  static_cast<double>(stats.tokens_available);
    speech_sum += row.tokens_drawn;
    speech_rows.push_back(std::move(row));
  }

  // The text row takes the exact residual so the rows reconcile to the total.
  const SourceStats& text_stats = lookup(spec.text_source);
  PlanRow text_row;
  text_row.name = spec.text_source;
  text_row.tokens_drawn = out.total_tokens - speech_sum;
  if (text_row.tokens_drawn < 0)
    throw ValidationError("plan: speech rows exceed the total token budget");
  text_row.repeats =
      static_cast<double>(text_row.tokens_drawn) / static_cast<double>(text_stats.tokens_available);

  out.rows.push_back(std::move(text_row));
  for (PlanRow& row : speech_rows) out.rows.push_back(std::move(row));
  for (PlanRow& row : out.rows)
    row.global_fraction = static_cast<double>(row.tokens_drawn) / static_cast<double>(out.total_tokens);
  return out;
}

double estimate_flops(double params, std::int64_t tokens) {
  if (params <= 0) throw ValidationError("estimate_flops: params must be positive");
  if (tokens < 0) throw ValidationError("estimate_flops: tokens must be >= 0");
  return 6.0 * params * static_cast<double>(tokens);
}

bool hours_tokens_consistent(const SourceStats& stats, double rel_tol) {
  if (!stats.hours) return true;
  double implied = *stats.hours * 3600.0 * kSpeechTokensPerSecond;
  return std::fabs(implied - static_cast<double>(stats.tokens_available)) <= rel_tol * implied;
}

namespace {

using json = nlohmann::ordered_json;

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StageError("cannot open " + path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ValidationError(path + ": invalid JSON");
  return j;
}

}  // namespace

MixtureSpec parse_mixture_spec(const std::string& path) {
  json j = load_json_file(path);
  if (!j.is_object()) throw ValidationError(path + ": mixture spec must be a JSON object");
  MixtureSpec spec;
  try {
    spec.text_fraction = j.at("text_fraction").get<double>();
    if (j.contains("text_source")) spec.text_source = j.at("text_source").get<std::string>();
    for (const json& s : j.at("speech_sources")) {
      SpeechSourceSpec src;
      src.name = s.at("name").get<std::string>();
      src.weight = s.at("weight").get<double>();
      spec.speech_sources.push_back(std::move(src));
    }
    spec.total_steps = j.at("total_steps").get<std::int64_t>();
    spec.batch_size = j.at("batch_size").get<std::int64_t>();
    spec.sequence_length = j.at("sequence_length").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return spec;
}

std::vector<SourceStats> read_sources(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    json j = load_json_file(path);
    if (!j.is_array()) throw ValidationError(path + ": sources file must be a JSON array");
    std::vector<SourceStats> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      json line = j[i];
      line["v"] = kManifestVersion;
      out.push_back(manifest::from_line<SourceStats>(line.dump(),
                                                     path + "[" + std::to_string(i) + "]"));
    }
    return out;
  }
  return manifest::read<SourceStats>(path);
}

}  // namespace forge
