#include "forge/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>

#include "json.hpp"

#include "forge/error.hpp"
#include "forge/log.hpp"
#include "forge/manifest.hpp"
#include "forge/parallel.hpp"
#include "forge/prompts.hpp"

namespace forge::evalkit {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

int choose(const std::array<ChoiceScore, 4>& choices) {
  int best = 0;
  double best_score = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (choices[static_cast<std::size_t>(i)].token_len < 1)
      throw ValidationError("choice " + std::to_string(i) + " has token_len < 1");
    double score = choices[static_cast<std::size_t>(i)].logprob_sum /
                   static_cast<double>(choices[static_cast<std::size_t>(i)].token_len);
    if (i == 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

double accuracy(const std::vector<bool>& correct) {
  if (correct.empty()) throw ValidationError("accuracy of an empty grading vector is undefined");
  std::size_t matches = 0;
  for (bool c : correct) matches += c ? 1 : 0;
  return static_cast<double>(matches) / static_cast<double>(correct.size());
}

namespace {

// Shared kernel: KL(p||q) in nats with the floor inside the logs, so
// fkl(p,q) == rkl(q,p) holds bitwise. A zero p entry contributes exactly 0.
double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    sum += p[i] * (std::log(std::max(p[i], kLogFloor)) - std::log(std::max(q[i], kLogFloor)));
  }
  return sum;
}

}  // namespace

Divergences per_token_divergences(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size())
    throw ValidationError("distribution length mismatch: " + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()));
  if (p.empty()) throw ValidationError("empty distributions");
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  Divergences d;
  d.fkl = kl(p, q);
  d.rkl = kl(q, p);
  d.jsd = 0.5 * kl(p, m) + 0.5 * kl(q, m);
  return d;
}

std::optional<ItemDivergence> aggregate(const DistributionPairRecord& record) {
  ItemDivergence item;
  item.item_id = record.item_id;
  for (std::size_t row = 0; row < record.p_aud.size(); ++row) {
    if (record.padded[row]) continue;
    Divergences d = per_token_divergences(record.p_aud[row], record.p_text[row]);
    item.fkl += d.fkl;
    item.rkl += d.rkl;
    item.jsd += d.jsd;
    ++item.positions;
  }
  if (item.positions == 0) return std::nullopt;
  item.fkl /= static_cast<double>(item.positions);
  item.rkl /= static_cast<double>(item.positions);
  item.jsd /= static_cast<double>(item.positions);
  return item;
}

std::vector<std::int64_t> histogram(const std::vector<double>& values, int bins, double lo,
                                    double hi) {
  if (bins < 1) throw ValidationError("histogram needs at least one bin");
  if (!(hi > lo)) throw ValidationError("histogram range must be nonempty");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    double t = (v - lo) / (hi - lo);
    auto bin = static_cast<std::int64_t>(t * bins);
    bin = std::clamp<std::int64_t>(bin, 0, bins - 1);
    ++counts[static_cast<std::size_t>(bin)];
  }
  return counts;
}

DivergenceSummary dataset_means(const std::vector<DistributionPairRecord>& records, int jobs) {
  DivergenceSummary summary;
  std::vector<std::optional<ItemDivergence>> per_item(records.size());
  parallel_for(records.size(), std::max(jobs, 1),
               [&](std::size_t i) { per_item[i] = aggregate(records[i]); });
  std::vector<double> jsd_values;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!per_item[i]) {
      log::warn("skipping all-padded item", {{"item_id", records[i].item_id}});
      ++summary.skipped;
      continue;
    }
    summary.per_item.push_back(*per_item[i]);
    summary.mean_fkl += per_item[i]->fkl;
    summary.mean_rkl += per_item[i]->rkl;
    summary.mean_jsd += per_item[i]->jsd;
    jsd_values.push_back(per_item[i]->jsd);
  }
  summary.items = summary.per_item.size();
  if (summary.items > 0) {
    summary.mean_fkl /= static_cast<double>(summary.items);
    summary.mean_rkl /= static_cast<double>(summary.items);
    summary.mean_jsd /= static_cast<double>(summary.items);
  }
  summary.jsd_histogram = histogram(jsd_values, kHistogramBins, 0.0, std::log(2.0));
  return summary;
}

std::string render_cloze(const std::string& question, const std::string& answer) {
  return prompts::build("cloze", {{"question", question}, {"answer", answer}});
}

namespace {

constexpr char kDumpMagic[4] = {'F', 'D', 'M', 'P'};
constexpr std::uint32_t kDumpVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ValidationError(path + ": truncated dump");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_f32_rows(std::ostream& out, const std::vector<std::vector<double>>& rows) {
  for (const auto& row : rows) {
    for (double v : row) {
      float f = static_cast<float>(v);
      static_assert(sizeof(float) == 4);
      char buf[4];
      std::memcpy(buf, &f, 4);
      out.write(buf, 4);
    }
  }
}

std::vector<std::vector<double>> get_f32_rows(std::istream& in, std::uint32_t o, std::uint32_t v,
                                              const std::string& path) {
  std::vector<std::vector<double>> rows(o, std::vector<double>(v));
  std::vector<char> buf(static_cast<std::size_t>(v) * 4);
  for (std::uint32_t r = 0; r < o; ++r) {
    if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size())))
      throw ValidationError(path + ": truncated dump matrix");
    for (std::uint32_t c = 0; c < v; ++c) {
      float f;
      std::memcpy(&f, buf.data() + static_cast<std::size_t>(c) * 4, 4);
      rows[r][c] = static_cast<double>(f);
    }
  }
  return rows;
}

std::string sidecar_path(const std::string& bin_path) { return bin_path + ".idx.json"; }

// Records written as float32 pick up accumulation error beyond the 1e-6
// JSONL bound, so reads apply a relaxed check that still catches corruption.
void check_rows(const std::vector<std::vector<double>>& rows, const std::string& where) {
  for (const auto& row : rows) {
    double sum = 0.0;
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError(where + ": probabilities must be finite and nonnegative");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-4)
      throw ValidationError(where + ": row does not sum to 1 (got " + std::to_string(sum) + ")");
  }
}

}  // namespace

void write_dump(const std::string& bin_path, const std::vector<DistributionPairRecord>& records) {
  std::ofstream out(bin_path, std::ios::binary | std::ios::trunc);
  if (!out) throw StageError("cannot write " + bin_path);
  out.write(kDumpMagic, 4);
  put_u32(out, kDumpVersion);
  json index;
  index["v"] = kManifestVersion;
  index["records"] = records.size();
  index["items"] = json::array();
  for (const DistributionPairRecord& rec : records) {
    const auto o = static_cast<std::uint32_t>(rec.p_aud.size());
    const auto v = static_cast<std::uint32_t>(o == 0 ? 0 : rec.p_aud[0].size());
    if (rec.p_text.size() != o || rec.padded.size() != o)
      throw ValidationError("dump record " + rec.item_id + ": inconsistent row counts");
    json entry;
    entry["item_id"] = rec.item_id;
    entry["o"] = o;
    entry["V"] = v;
    entry["offset"] = static_cast<std::int64_t>(out.tellp());
    index["items"].push_back(entry);
    put_u32(out, static_cast<std::uint32_t>(rec.item_id.size()));
    out.write(rec.item_id.data(), static_cast<std::streamsize>(rec.item_id.size()));
    put_u32(out, o);
    put_u32(out, v);
    put_f32_rows(out, rec.p_aud);
    put_f32_rows(out, rec.p_text);
    std::vector<unsigned char> bitmap((o + 7) / 8, 0);
    for (std::uint32_t i = 0; i < o; ++i)
      if (rec.padded[i]) bitmap[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
    out.write(reinterpret_cast<const char*>(bitmap.data()),
              static_cast<std::streamsize>(bitmap.size()));
  }
  if (!out) throw StageError("write failed for " + bin_path);
  out.close();
  std::ofstream side(sidecar_path(bin_path), std::ios::binary | std::ios::trunc);
  if (!side) throw StageError("cannot write " + sidecar_path(bin_path));
  side << index.dump() << '\n';
}

std::vector<DistributionPairRecord> read_dump(const std::string& bin_path) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw StageError("cannot open " + bin_path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kDumpMagic, 4) != 0)
    throw ValidationError(bin_path + ": not a distribution dump (bad magic)");
  std::uint32_t version = get_u32(in, bin_path);
  if (version != kDumpVersion)
    throw ValidationError(bin_path + ": unsupported dump version " + std::to_string(version));
  std::vector<DistributionPairRecord> records;
  while (in.peek() != std::char_traits<char>::eof()) {
    DistributionPairRecord rec;
    std::uint32_t id_len = get_u32(in, bin_path);
    rec.item_id.resize(id_len);
    if (!in.read(rec.item_id.data(), id_len)) throw ValidationError(bin_path + ": truncated id");
    std::uint32_t o = get_u32(in, bin_path);
    std::uint32_t v = get_u32(in, bin_path);
    rec.p_aud = get_f32_rows(in, o, v, bin_path);
    rec.p_text = get_f32_rows(in, o, v, bin_path);
    std::vector<unsigned char> bitmap((o + 7) / 8);
    if (!bitmap.empty() &&
        !in.read(reinterpret_cast<char*>(bitmap.data()),
                 static_cast<std::streamsize>(bitmap.size())))
      throw ValidationError(bin_path + ": truncated pad bitmap");
    rec.padded.resize(o);
    for (std::uint32_t i = 0; i < o; ++i) rec.padded[i] = (bitmap[i / 8] >> (i % 8)) & 1u;
    check_rows(rec.p_aud, bin_path + " item " + rec.item_id);
    check_rows(rec.p_text, bin_path + " item " + rec.item_id);
    records.push_back(std::move(rec));
  }
  std::ifstream side(sidecar_path(bin_path), std::ios::binary);
  if (side) {
    json index = json::parse(side, nullptr, /*allow_exceptions=*/false);
    if (index.is_discarded() || !index.contains("records"))
      throw ValidationError(sidecar_path(bin_path) + ": malformed sidecar index");
    if (index["records"].get<std::size_t>() != records.size())
      throw ValidationError(bin_path + ": sidecar record count does not match dump");
  }
  return records;
}

std::vector<DistributionPairRecord> read_dumps(const std::string& path) {
  fs::path p(path);
  if (!fs::exists(p)) throw ValidationError(path + ": no such dump path");
  std::vector<DistributionPairRecord> records;
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(p)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      if (ext == ".bin" || ext == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ValidationError(path + ": no .bin or .jsonl dump files found");
    for (const fs::path& file : files) {
      auto part = file.extension() == ".bin"
                      ? read_dump(file.string())
                      : manifest::read<DistributionPairRecord>(file.string());
      records.insert(records.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    }
    return records;
  }
  if (p.extension() == ".bin") return read_dump(path);
  return manifest::read<DistributionPairRecord>(path);
}

}  // namespace forge::evalkit
