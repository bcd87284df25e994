#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "pseudolabel/corpus.hpp"
#include "pseudolabel/error.hpp"
#include "pseudolabel/hashing.hpp"
#include "pseudolabel/text.hpp"

namespace pseudolabel {

using json = nlohmann::json;

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return DatasetFormat::Jsonl;
  if (ext == ".csv") return DatasetFormat::Csv;
  if (ext == ".tsv" || ext == ".tab") return DatasetFormat::Tsv;
  throw DataError("cannot infer dataset format from '" + path.string() +
                  "' (expected .jsonl, .csv or .tsv)");
}

std::optional<DatasetFormat> parse_format(std::string_view name) {
  if (name == "jsonl") return DatasetFormat::Jsonl;
  if (name == "csv") return DatasetFormat::Csv;
  if (name == "tsv") return DatasetFormat::Tsv;
  return std::nullopt;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::size_t line_of_offset(std::string_view contents, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < contents.size(); ++i) {
    if (contents[i] == '\n') ++line;
  }
  return line;
}

class RowError {
 public:
  RowError(std::string_view source, std::size_t line) : source_(source), line_(line) {}
  [[noreturn]] void fail(std::string_view field, const std::string& what) const {
    std::string msg = std::string(source_) + ":" + std::to_string(line_) + ": ";
    if (!field.empty()) msg += "field '" + std::string(field) + "': ";
    throw DataError(msg + what);
  }

 private:
  std::string_view source_;
  std::size_t line_;
};

// Applies the kind rules and builds one post.
Post make_post(const RowError& err, DatasetKind kind, std::string id, std::string text,
               const std::optional<std::string>& label,
               std::optional<std::string> subreddit) {
  if (id.empty()) err.fail("id", "missing or empty");
  Post post;
  post.id = std::move(id);
  post.text = std::move(text);
  post.subreddit = std::move(subreddit);
  if (kind == DatasetKind::Labeled) {
    if (!label) err.fail("label", "missing in a labeled dataset");
    auto parsed = parse_label(*label);
    if (!parsed) {
      err.fail("label", "unknown label '" + *label + "' (allowed: " + allowed_labels() + ")");
    }
    post.label = parsed;
  }
  return post;
}

void add_unique(std::vector<Post>& posts, std::unordered_set<std::string>& ids,
                const RowError& err, Post post) {
  if (!ids.insert(post.id).second) err.fail("id", "duplicate id '" + post.id + "'");
  posts.push_back(std::move(post));
}

Dataset parse_jsonl(std::string_view contents, DatasetKind kind, std::string_view source) {
  std::vector<Post> posts;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    ++line_no;
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const RowError err(source, line_no);
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      err.fail("", std::string("malformed JSON: ") + e.what());
    }
    if (!row.is_object()) err.fail("", "expected a JSON object");

    std::string id;
    if (auto it = row.find("id"); it == row.end()) {
      err.fail("id", "missing");
    } else if (it->is_string()) {
      id = it->get<std::string>();
    } else if (it->is_number_integer()) {
      id = it->dump();
    } else {
      err.fail("id", "expected a string");
    }

    std::string text;
    if (auto it = row.find("text"); it == row.end() || !it->is_string()) {
      err.fail("text", it == row.end() ? "missing" : "expected a string");
    } else {
      text = it->get<std::string>();
    }

    std::optional<std::string> label;
    if (auto it = row.find("label"); it != row.end() && !it->is_null()) {
      if (!it->is_string()) err.fail("label", "expected a string");
      label = it->get<std::string>();
    }
    std::optional<std::string> subreddit;
    if (auto it = row.find("subreddit"); it != row.end() && !it->is_null()) {
      if (!it->is_string()) err.fail("subreddit", "expected a string");
      subreddit = it->get<std::string>();
    }
    add_unique(posts, ids, err,
               make_post(err, kind, std::move(id), std::move(text), label, std::move(subreddit)));
  }
  return Dataset(kind, std::move(posts));
}

struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// RFC 4180 reader; quoted fields may span lines.
std::vector<CsvRecord> read_delimited(std::string_view contents, char delim,
                                      std::string_view source) {
  std::vector<CsvRecord> records;
  std::size_t pos = 0;
  std::size_t line = 1;
  while (pos < contents.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool at_field_start = true;
    bool in_quotes = false;
    bool was_quoted = false;
    bool record_done = false;
    while (pos < contents.size() && !record_done) {
      const char c = contents[pos];
      if (in_quotes) {
        if (c == '"') {
          if (pos + 1 < contents.size() && contents[pos + 1] == '"') {
            field.push_back('"');
            pos += 2;
          } else {
            in_quotes = false;
            ++pos;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++pos;
        }
        continue;
      }
      if (c == '"' && at_field_start) {
        in_quotes = true;
        was_quoted = true;
        at_field_start = false;
        ++pos;
      } else if (c == delim) {
        rec.fields.push_back(std::move(field));
        field.clear();
        at_field_start = true;
        was_quoted = false;
        ++pos;
      } else if (c == '\r' || c == '\n') {
        if (c == '\r' && pos + 1 < contents.size() && contents[pos + 1] == '\n') ++pos;
        ++pos;
        ++line;
        record_done = true;
      } else {
        if (was_quoted) {
          RowError(source, line).fail("", "characters after closing quote");
        }
        field.push_back(c);
        at_field_start = false;
        ++pos;
      }
    }
    if (in_quotes) RowError(source, rec.line).fail("", "unterminated quoted field");
    rec.fields.push_back(std::move(field));
    const bool blank = rec.fields.size() == 1 && rec.fields[0].empty() && !was_quoted;
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

Dataset parse_delimited(std::string_view contents, char delim, DatasetKind kind,
                        std::string_view source) {
  auto records = read_delimited(contents, delim, source);
  if (records.empty()) RowError(source, 1).fail("", "missing header row");

  const CsvRecord& header = records.front();
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.fields.size(); ++i) {
    std::string name = header.fields[i];
    if (i == 0 && name.starts_with("\xEF\xBB\xBF")) name.erase(0, 3);
    if (!column.emplace(name, i).second) {
      RowError(source, header.line).fail(name, "duplicate column");
    }
  }
  for (const char* required : {"id", "text"}) {
    if (!column.contains(required)) {
      RowError(source, header.line).fail(required, "required column missing from header");
    }
  }
  const auto col = [&](const char* name) -> std::optional<std::size_t> {
    auto it = column.find(name);
    return it == column.end() ? std::nullopt : std::optional(it->second);
  };
  const std::size_t id_col = *col("id");
  const std::size_t text_col = *col("text");
  const auto label_col = col("label");
  const auto subreddit_col = col("subreddit");

  std::vector<Post> posts;
  std::unordered_set<std::string> ids;
  for (std::size_t r = 1; r < records.size(); ++r) {
    CsvRecord& rec = records[r];
    const RowError err(source, rec.line);
    if (rec.fields.size() != header.fields.size()) {
      err.fail("", "expected " + std::to_string(header.fields.size()) + " fields, found " +
                       std::to_string(rec.fields.size()));
    }
    std::optional<std::string> label;
    if (label_col && !rec.fields[*label_col].empty()) label = rec.fields[*label_col];
    std::optional<std::string> subreddit;
    if (subreddit_col && !rec.fields[*subreddit_col].empty()) {
      subreddit = rec.fields[*subreddit_col];
    }
    add_unique(posts, ids, err,
               make_post(err, kind, std::move(rec.fields[id_col]),
                         std::move(rec.fields[text_col]), label, std::move(subreddit)));
  }
  return Dataset(kind, std::move(posts));
}

void append_delimited_field(std::string& out, std::string_view field, char delim) {
  const bool quote = field.find_first_of(std::string{delim, '"', '\r', '\n'}) !=
                     std::string_view::npos;
  if (!quote) {
    out.append(field);
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

std::string serialize_delimited(const Dataset& ds, char delim) {
  std::string out;
  out += "id";
  out += delim;
  out += "text";
  out += delim;
  out += "label";
  out += delim;
  out += "subreddit\n";
  for (const Post& p : ds) {
    append_delimited_field(out, p.id, delim);
    out.push_back(delim);
    append_delimited_field(out, p.text, delim);
    out.push_back(delim);
    if (p.label) out.append(to_string(*p.label));
    out.push_back(delim);
    if (p.subreddit) append_delimited_field(out, *p.subreddit, delim);
    out.push_back('\n');
  }
  return out;
}

}  // namespace

Dataset parse_dataset(std::string_view contents, DatasetFormat format, DatasetKind kind,
                      std::string_view source_name) {
  if (const std::size_t bad = text::first_invalid_utf8(contents);
      bad != std::string_view::npos) {
    RowError(source_name, line_of_offset(contents, bad))
        .fail("", "invalid UTF-8 at byte offset " + std::to_string(bad));
  }
  switch (format) {
    case DatasetFormat::Jsonl: return parse_jsonl(contents, kind, source_name);
    case DatasetFormat::Csv: return parse_delimited(contents, ',', kind, source_name);
    case DatasetFormat::Tsv: return parse_delimited(contents, '\t', kind, source_name);
  }
  throw DataError("unknown dataset format");
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     DatasetKind kind) {
  return parse_dataset(read_file(path), format, kind, path.string());
}

Dataset load_dataset(const std::filesystem::path& path, DatasetKind kind) {
  return load_dataset(path, format_from_path(path), kind);
}

std::string serialize_dataset(const Dataset& ds, DatasetFormat format) {
  switch (format) {
    case DatasetFormat::Csv: return serialize_delimited(ds, ',');
    case DatasetFormat::Tsv: return serialize_delimited(ds, '\t');
    case DatasetFormat::Jsonl: break;
  }
  std::string out;
  for (const Post& p : ds) {
    nlohmann::ordered_json row;
    row["id"] = p.id;
    row["text"] = p.text;
    if (p.label) row["label"] = to_string(*p.label);
    if (p.subreddit) row["subreddit"] = *p.subreddit;
    try {
      out += row.dump();
    } catch (const nlohmann::json::type_error& e) {
      throw DataError("post '" + p.id + "': " + e.what());
    }
    out.push_back('\n');
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path,
                  DatasetFormat format) {
  write_file(path, serialize_dataset(ds, format));
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  save_dataset(ds, path, format_from_path(path));
}

std::string dataset_digest(const Dataset& ds) {
  const std::string_view kind = ds.kind() == DatasetKind::Labeled ? "labeled\n" : "unlabeled\n";
  return to_hex(fnv1a64(serialize_dataset(ds, DatasetFormat::Jsonl), fnv1a64(kind)));
}

}  // namespace pseudolabel
