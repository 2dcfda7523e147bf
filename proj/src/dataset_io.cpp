#include "dergcn/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dergcn/errors.hpp"

namespace dergcn {

std::size_t Dataset::total_utterances() const {
  std::size_t n = 0;
  for (const Dialogue& d : dialogues) n += d.utterances.size();
  return n;
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(total_utterances());
  for (const Dialogue& d : dialogues) {
    for (const Utterance& u : d.utterances) out.push_back(u.label);
  }
  return out;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError("dataset: bad float field '" + s + "'");
  }
  return v;
}

long parse_long(const std::string& s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError("dataset: bad integer field '" + s + "'");
  }
  return v;
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open dataset for writing: " + path);
  os << "#dergcn-dataset,v1,dim_t=" << ds.meta.dim_t
     << ",dim_a=" << ds.meta.dim_a << ",dim_v=" << ds.meta.dim_v
     << ",num_classes=" << ds.meta.num_classes
     << ",num_event_types=" << ds.meta.num_event_types << '\n';
  for (const Dialogue& d : ds.dialogues) {
    for (std::size_t i = 0; i < d.utterances.size(); ++i) {
      const Utterance& u = d.utterances[i];
      os << d.id << ',' << i << ',' << u.speaker_id << ',' << u.label << ',';
      for (std::size_t e = 0; e < u.event_ids.size(); ++e) {
        os << (e ? ";" : "") << u.event_ids[e];
      }
      for (const auto* feats : {&u.feat_t, &u.feat_a, &u.feat_v}) {
        for (double v : *feats) os << ',' << shortest(v);
      }
      os << '\n';
    }
  }
  if (!os) throw IoError("dataset write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(is, line)) throw IoError("dataset is empty: " + path);

  Dataset ds;
  {
    auto fields = split(line, ',');
    if (fields.size() < 2 || fields[0] != "#dergcn-dataset" ||
        fields[1] != "v1") {
      throw IoError("dataset: unrecognized header");
    }
    for (std::size_t f = 2; f < fields.size(); ++f) {
      auto kv = split(fields[f], '=');
      if (kv.size() != 2) throw IoError("dataset: bad header field");
      std::size_t v = static_cast<std::size_t>(parse_long(kv[1]));
      if (kv[0] == "dim_t") ds.meta.dim_t = v;
      else if (kv[0] == "dim_a") ds.meta.dim_a = v;
      else if (kv[0] == "dim_v") ds.meta.dim_v = v;
      else if (kv[0] == "num_classes") ds.meta.num_classes = v;
      else if (kv[0] == "num_event_types") ds.meta.num_event_types = v;
      else throw IoError("dataset: unknown header field " + kv[0]);
    }
  }
  if (ds.meta.dim_t == 0 || ds.meta.num_classes == 0) {
    throw IoError("dataset: header missing dims");
  }

  std::size_t expected =
      5 + ds.meta.dim_t + ds.meta.dim_a + ds.meta.dim_v;
  Dialogue* current = nullptr;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != expected) {
      throw IoError("dataset line " + std::to_string(line_no) +
                    ": field count " + std::to_string(fields.size()) +
                    ", expected " + std::to_string(expected));
    }
    if (!current || current->id != fields[0]) {
      ds.dialogues.emplace_back();
      current = &ds.dialogues.back();
      current->id = fields[0];
    }
    std::size_t idx = static_cast<std::size_t>(parse_long(fields[1]));
    if (idx != current->utterances.size()) {
      throw IoError("dataset line " + std::to_string(line_no) +
                    ": utterance indices must be consecutive");
    }
    Utterance u;
    u.speaker_id = static_cast<int>(parse_long(fields[2]));
    u.label = static_cast<int>(parse_long(fields[3]));
    if (u.label < 0 ||
        static_cast<std::size_t>(u.label) >= ds.meta.num_classes) {
      throw IoError("dataset line " + std::to_string(line_no) +
                    ": label out of range");
    }
    if (!fields[4].empty()) {
      for (const std::string& e : split(fields[4], ';')) {
        u.event_ids.push_back(static_cast<int>(parse_long(e)));
      }
    }
    std::size_t f = 5;
    u.feat_t.reserve(ds.meta.dim_t);
    for (std::size_t c = 0; c < ds.meta.dim_t; ++c)
      u.feat_t.push_back(parse_double(fields[f++]));
    u.feat_a.reserve(ds.meta.dim_a);
    for (std::size_t c = 0; c < ds.meta.dim_a; ++c)
      u.feat_a.push_back(parse_double(fields[f++]));
    u.feat_v.reserve(ds.meta.dim_v);
    for (std::size_t c = 0; c < ds.meta.dim_v; ++c)
      u.feat_v.push_back(parse_double(fields[f++]));
    current->utterances.push_back(std::move(u));
  }
  if (ds.dialogues.empty()) throw IoError("dataset has no records: " + path);
  return ds;
}

}  // namespace dergcn
