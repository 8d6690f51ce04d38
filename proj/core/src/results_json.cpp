#include "safer/results_json.hpp"

#include "safer/error.hpp"
#include "safer/text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace safer {
namespace {

using json = nlohmann::ordered_json;

class LenientParser {
 public:
  explicit LenientParser(std::string_view s) : s_(s) {}

  std::optional<json> parse() {
    skip_ws();
    return value(0);
  }
  [[nodiscard]] std::size_t position() const noexcept { return i_; }

 private:
  static constexpr int kMaxDepth = 256;

  bool eof() const noexcept { return i_ >= s_.size(); }
  char peek() const noexcept { return s_[i_]; }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++i_;
  }

  std::optional<json> value(int depth) {
    if (depth > kMaxDepth) return std::nullopt;
    skip_ws();
    if (eof()) return std::nullopt;
    char c = peek();
    if (c == '{') return object(depth);
    if (c == '[') return array(depth);
    if (c == '"') {
      auto str = string();
      if (!str) return std::nullopt;
      return json(std::move(*str));
    }
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return number();
    if (s_.substr(i_, 4) == "true") { i_ += 4; return json(true); }
    if (s_.substr(i_, 5) == "false") { i_ += 5; return json(false); }
    if (s_.substr(i_, 4) == "null") { i_ += 4; return json(nullptr); }
    return std::nullopt;
  }

  std::optional<json> object(int depth) {
    ++i_;  // '{'
    json obj = json::object();
    json bare = json::array();
    for (;;) {
      skip_separators();
      if (eof()) return std::nullopt;
      char c = peek();
      if (c == '}' || c == ']') {
        ++i_;
        break;
      }
      if (c == '"') {
        auto key = string();
        if (!key) return std::nullopt;
        skip_ws();
        if (!eof() && peek() == ':') {
          ++i_;
          auto v = value(depth + 1);
          if (!v) return std::nullopt;
          obj[*key] = std::move(*v);
        } else {
          bare.push_back(std::move(*key));
        }
        continue;
      }
      auto v = value(depth + 1);
      if (!v) return std::nullopt;
      bare.push_back(std::move(*v));
    }
    if (!bare.empty()) {
      if (!obj.empty()) return std::nullopt;
      return bare;
    }
    return obj;
  }

  std::optional<json> array(int depth) {
    ++i_;  // '['
    json arr = json::array();
    for (;;) {
      skip_separators();
      if (eof()) return std::nullopt;
      char c = peek();
      if (c == ']' || c == '}') {
        ++i_;
        return arr;
      }
      auto v = value(depth + 1);
      if (!v) return std::nullopt;
      arr.push_back(std::move(*v));
    }
  }

  void skip_separators() {
    for (;;) {
      skip_ws();
      if (!eof() && peek() == ',') {
        ++i_;
        continue;
      }
      return;
    }
  }

  static void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::optional<unsigned long> hex4() {
    if (i_ + 4 > s_.size()) return std::nullopt;
    unsigned long v = 0;
    auto r = std::from_chars(s_.data() + i_, s_.data() + i_ + 4, v, 16);
    if (r.ptr != s_.data() + i_ + 4) return std::nullopt;
    i_ += 4;
    return v;
  }

  std::optional<std::string> string() {
    ++i_;  // opening quote
    std::string out;
    while (!eof()) {
      char c = s_[i_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) return std::nullopt;
      char e = s_[i_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case '/': out += '/'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case 't': out += '\t'; break;
        case 'u': {
          auto cp = hex4();
          if (!cp) return std::nullopt;
          if (*cp >= 0xD800 && *cp <= 0xDBFF && s_.substr(i_, 2) == "\\u") {
            i_ += 2;
            auto lo = hex4();
            if (!lo) return std::nullopt;
            *cp = 0x10000 + ((*cp - 0xD800) << 10) + (*lo - 0xDC00);
          }
          append_utf8(out, *cp);
          break;
        }
        default: out += e;
      }
    }
    return std::nullopt;
  }

  std::optional<json> number() {
    std::size_t start = i_;
    if (peek() == '-') ++i_;
    bool is_float = false;
    while (!eof()) {
      char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++i_;
      } else if (c == '.' || c == 'e' || c == 'E' || ((c == '+' || c == '-') && is_float)) {
        is_float = true;
        ++i_;
      } else {
        break;
      }
    }
    std::string token(s_.substr(start, i_ - start));
    if (token == "-") return std::nullopt;
    if (!is_float) {
      long long v = 0;
      auto r = std::from_chars(token.data(), token.data() + token.size(), v);
      if (r.ec == std::errc{}) return json(v);
    }
    char* end = nullptr;
    double d = std::strtod(token.c_str(), &end);
    if (end == token.c_str()) return std::nullopt;
    return json(d);
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

std::string_view fenced_region(std::string_view raw) {
  auto open = raw.find("```");
  if (open == std::string_view::npos) return raw;
  auto body = open + 3;
  // Skip an info string such as "json" up to the first brace or newline.
  while (body < raw.size() && std::isalpha(static_cast<unsigned char>(raw[body]))) ++body;
  auto close = raw.find("```", body);
  if (close == std::string_view::npos) return raw.substr(body);
  return raw.substr(body, close - body);
}

const json* find_key(const json& obj, const std::string& name, const std::vector<std::string>& aliases) {
  if (auto it = obj.find(name); it != obj.end()) return &*it;
  for (const auto& a : aliases) {
    if (auto it = obj.find(a); it != obj.end()) return &*it;
  }
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  auto want = lower(name);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (lower(it.key()) == want) return &*it;
  }
  return nullptr;
}

std::optional<long long> as_integer(const json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::floor(d) == d && std::isfinite(d)) return static_cast<long long>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    auto s = text::trim(v.get_ref<const std::string&>());
    if (!s.empty() && s.back() == '%') s.remove_suffix(1);
    long long out = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    if (r.ec == std::errc{} && r.ptr == s.data() + s.size()) return out;
  }
  return std::nullopt;
}

}  // namespace

std::optional<nlohmann::ordered_json> parse_lenient_json(std::string_view text, std::size_t* consumed) {
  LenientParser p(text);
  auto v = p.parse();
  if (consumed) *consumed = p.position();
  return v;
}

namespace {

// Walks candidate openings in the (fenced) region. Returns the first value for
// which `accept` holds, or the first parseable value when none does.
template <typename Accept>
std::pair<std::optional<json>, bool> scan_region(std::string_view region, Accept accept) {
  std::optional<json> first_value;
  int attempts = 0;
  for (std::size_t pos = 0; pos < region.size() && attempts < 64; ++pos) {
    char c = region[pos];
    if (c != '{' && c != '[') continue;
    ++attempts;
    std::size_t used = 0;
    auto v = parse_lenient_json(region.substr(pos), &used);
    if (!v) continue;
    if (accept(*v)) return {std::move(v), true};
    if (!first_value) first_value = std::move(v);
    pos += used > 0 ? used - 1 : 0;
  }
  return {std::move(first_value), false};
}

// The fenced block first; the whole text when the fence holds nothing usable
// (a lone closing fence after the JSON, for example).
template <typename Accept>
std::pair<std::optional<json>, bool> scan_values(std::string_view raw, Accept accept) {
  auto region = fenced_region(raw);
  auto found = scan_region(region, accept);
  if (found.second || region.size() == raw.size()) return found;
  auto whole = scan_region(raw, accept);
  if (whole.second || !found.first) return whole;
  return found;
}

}  // namespace

nlohmann::ordered_json locate_json_value(std::string_view raw) {
  auto [v, ok] = scan_values(raw, [](const json&) { return true; });
  if (!v) throw Error(ErrorCode::NoJsonFound, "no parseable JSON value in model output");
  return std::move(*v);
}

nlohmann::ordered_json locate_results(std::string_view raw) {
  auto [v, ok] = scan_values(raw, [](const json& j) {
    return j.is_object() && find_key(j, "results", {}) != nullptr;
  });
  if (!v) throw Error(ErrorCode::NoJsonFound, "no parseable JSON value in model output");
  if (!ok) throw Error(ErrorCode::MissingResultsRoot, "JSON found but it has no \"results\" root");
  return *find_key(*v, "results", {});
}

ParsedResults parse_results_json(std::string_view raw, const FieldSchema& schema) {
  json results = locate_results(raw);
  std::vector<json> candidates;
  std::vector<std::string> keys;
  if (results.is_null()) {
    return {};
  } else if (results.is_array()) {
    for (auto& r : results) {
      candidates.push_back(r);
      keys.emplace_back();
    }
  } else if (results.is_object()) {
    for (auto it = results.begin(); it != results.end(); ++it) {
      candidates.push_back(it.value());
      keys.push_back(it.key());
    }
  } else {
    throw Error(ErrorCode::MissingResultsRoot, "\"results\" is neither a list nor a map");
  }

  ParsedResults out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& rec = candidates[i];
    std::vector<std::string> reasons;
    if (!rec.is_object()) {
      out.rejected.push_back({i, rec, {"record is not a JSON object"}});
      continue;
    }
    json normalized = json::object();
    for (const auto& f : schema) {
      const json* v = find_key(rec, f.name, f.aliases);
      if (!v && f.type == FieldType::Id && !keys[i].empty()) {
        normalized[f.name] = keys[i];
        continue;
      }
      if (!v || v->is_null()) {
        if (f.required) reasons.push_back("missing field '" + f.name + "'");
        continue;
      }
      switch (f.type) {
        case FieldType::String:
          if (v->is_string()) {
            normalized[f.name] = *v;
          } else if (v->is_number()) {
            normalized[f.name] = v->dump();
          } else {
            reasons.push_back("field '" + f.name + "' is not a string");
          }
          break;
        case FieldType::Id:
          if (v->is_string() && !text::trim(v->get_ref<const std::string&>()).empty()) {
            normalized[f.name] = std::string(text::trim(v->get_ref<const std::string&>()));
          } else if (v->is_number_integer()) {
            normalized[f.name] = std::to_string(v->get<long long>());
          } else {
            reasons.push_back("field '" + f.name + "' is not an id");
          }
          break;
        case FieldType::Integer: {
          auto n = as_integer(*v);
          if (!n) {
            reasons.push_back("field '" + f.name + "' is not an integer");
          } else if (f.max_value >= f.min_value && (*n < f.min_value || *n > f.max_value)) {
            reasons.push_back("field '" + f.name + "' = " + std::to_string(*n) + " outside [" +
                              std::to_string(f.min_value) + ", " + std::to_string(f.max_value) + "]");
          } else {
            normalized[f.name] = *n;
          }
          break;
        }
      }
    }
    if (!reasons.empty()) {
      out.rejected.push_back({i, rec, std::move(reasons)});
      continue;
    }
    // Keep fields the schema does not name, after the normalized ones.
    for (auto it = rec.begin(); it != rec.end(); ++it) {
      bool named = false;
      for (const auto& f : schema) {
        if (find_key(json::object({{it.key(), nullptr}}), f.name, f.aliases)) named = true;
      }
      if (!named) normalized[it.key()] = it.value();
    }
    out.records.push_back(std::move(normalized));
  }
  return out;
}

std::string render_results_json(const std::vector<Record>& records) {
  json root = json::object();
  root["results"] = json::array();
  for (const auto& r : records) root["results"].push_back(r);
  return root.dump(2);
}

}  // namespace safer
