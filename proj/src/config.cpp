#include "prefaudit/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "prefaudit/error.hpp"

namespace prefaudit {

namespace {

class TomlParser {
 public:
  TomlParser(const std::string& text, const std::string& source)
      : text_(text), source_(source) {}

  TomlDocument parse() {
    TomlDocument doc;
    std::string table;
    while (pos_ < text_.size()) {
      skip_blank();
      if (at_end_of_line()) {
        next_line();
        continue;
      }
      if (peek() == '[') {
        ++pos_;
        table = bare_key_path();
        expect(']');
        finish_line();
        continue;
      }
      std::string key = bare_key_path();
      skip_blank();
      expect('=');
      skip_blank();
      TomlValue value = parse_value();
      const std::string full = table.empty() ? key : table + "." + key;
      if (!doc.emplace(full, std::move(value)).second) fail("duplicate key \"" + full + "\"");
      finish_line();
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error("config", source_ + ":" + std::to_string(line_) + ": " + what);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_blank() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool at_end_of_line() const {
    const char c = peek();
    return c == '\0' || c == '\n' || c == '\r' || c == '#';
  }

  void next_line() {
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    if (pos_ < text_.size()) ++pos_;
    ++line_;
  }

  void finish_line() {
    skip_blank();
    if (!at_end_of_line()) fail("unexpected text after value");
    next_line();
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string bare_key_path() {
    skip_blank();
    std::string key;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') {
        key.push_back(c);
        ++pos_;
      } else {
        break;
      }
    }
    skip_blank();
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::string parse_string() {
    const char quote = peek();
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n') fail("unterminated string");
      const char c = text_[pos_++];
      if (c == quote) break;
      if (c == '\\' && quote == '"') {
        const char esc = peek();
        ++pos_;
        switch (esc) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail("unsupported escape sequence");
        }
        continue;
      }
      out.push_back(c);
    }
    return out;
  }

  TomlScalar parse_scalar() {
    const char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    std::string token;
    while (pos_ < text_.size()) {
      const char d = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(d)) || d == '.' || d == '-' ||
          d == '+' || d == '_') {
        if (d != '_') token.push_back(d);
        ++pos_;
      } else {
        break;
      }
    }
    if (token == "true") return true;
    if (token == "false") return false;
    if (token.empty()) fail("expected a value");
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (*first == '+') ++first;
    if (is_float) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) fail("invalid number \"" + token + "\"");
      return v;
    }
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail("invalid value \"" + token + "\"");
    return v;
  }

  TomlValue parse_value() {
    if (peek() != '[') {
      return std::visit([](auto&& v) -> TomlValue { return v; }, parse_scalar());
    }
    ++pos_;
    std::vector<TomlScalar> items;
    skip_blank();
    while (peek() != ']') {
      items.push_back(parse_scalar());
      skip_blank();
      if (peek() == ',') {
        ++pos_;
        skip_blank();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    ++pos_;
    return items;
  }

  const std::string& text_;
  const std::string& source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

[[noreturn]] void bad_type(const std::string& key, const char* want) {
  throw Error("config", "config key \"" + key + "\" must be " + want);
}

double as_double(const std::string& key, const TomlValue& v) {
  if (auto* d = std::get_if<double>(&v)) return *d;
  if (auto* i = std::get_if<int64_t>(&v)) return static_cast<double>(*i);
  bad_type(key, "a number");
}

double scalar_double(const std::string& key, const TomlScalar& v) {
  if (auto* d = std::get_if<double>(&v)) return *d;
  if (auto* i = std::get_if<int64_t>(&v)) return static_cast<double>(*i);
  bad_type(key, "an array of numbers");
}

std::size_t as_count(const std::string& key, const TomlValue& v) {
  auto* i = std::get_if<int64_t>(&v);
  if (!i || *i < 0) bad_type(key, "a nonnegative integer");
  return static_cast<std::size_t>(*i);
}

std::string as_string(const std::string& key, const TomlValue& v) {
  auto* s = std::get_if<std::string>(&v);
  if (!s) bad_type(key, "a string");
  return *s;
}

bool as_bool(const std::string& key, const TomlValue& v) {
  auto* b = std::get_if<bool>(&v);
  if (!b) bad_type(key, "a boolean");
  return *b;
}

std::vector<double> as_number_list(const std::string& key, const TomlValue& v) {
  auto* items = std::get_if<std::vector<TomlScalar>>(&v);
  if (!items) bad_type(key, "an array of numbers");
  std::vector<double> out;
  for (const auto& item : *items) out.push_back(scalar_double(key, item));
  return out;
}

}  // namespace

TomlDocument parse_toml(const std::string& text, const std::string& source) {
  return TomlParser(text, source).parse();
}

void apply_toml(const TomlDocument& doc, AuditConfig& cfg) {
  for (const auto& [key, value] : doc) {
    if (key == "data") cfg.data = as_string(key, value);
    else if (key == "embeddings") cfg.embeddings = as_string(key, value);
    else if (key == "renormalize") cfg.renormalize = as_bool(key, value);
    else if (key == "out_dir") cfg.out_dir = as_string(key, value);
    else if (key == "seed") cfg.seed = as_count(key, value);
    else if (key == "eval_fraction") cfg.eval_fraction = as_double(key, value);
    else if (key == "max_tokens") cfg.max_tokens = as_count(key, value);
    else if (key == "tie_policy") {
      const std::string policy = as_string(key, value);
      if (policy == "drop") cfg.tie_policy = TiePolicy::kDrop;
      else if (policy == "error") cfg.tie_policy = TiePolicy::kError;
      else bad_type(key, "\"drop\" or \"error\"");
    }
    else if (key == "noise_rates") cfg.noise_rates = as_number_list(key, value);
    else if (key == "fractions") cfg.fractions = as_number_list(key, value);
    else if (key == "bins") cfg.bins = as_count(key, value);
    else if (key == "ece_bins") cfg.ece_bins = as_count(key, value);
    else if (key == "threshold") cfg.threshold = as_double(key, value);
    else if (key == "saturation_target") cfg.saturation_target = as_double(key, value);
    else if (key == "hash_dim") cfg.hash_dim = as_count(key, value);
    else if (key == "ecdf_grid") cfg.ecdf_grid = as_count(key, value);
    else if (key == "threads") cfg.threads = as_count(key, value);
    else if (key == "model") cfg.model = as_string(key, value);
    else if (key == "train.learning_rate") cfg.train.learning_rate = as_double(key, value);
    else if (key == "train.epochs") cfg.train.epochs = as_count(key, value);
    else if (key == "train.l2") cfg.train.l2 = as_double(key, value);
    else if (key == "train.batch_size") {
      if (auto* s = std::get_if<std::string>(&value); s && *s == "full") {
        cfg.train.batch_size.reset();
      } else {
        cfg.train.batch_size = as_count(key, value);
      }
    }
    else if (key == "train.seed") cfg.train.seed = as_count(key, value);
    else if (key == "train.early_stop_patience") {
      cfg.train.early_stop_patience = as_count(key, value);
    }
    else if (key == "info.size") cfg.info_size = as_count(key, value);
    else if (key == "info.seeds") {
      cfg.info_seeds.clear();
      for (double s : as_number_list(key, value)) {
        if (s < 0 || s != std::floor(s)) bad_type(key, "an array of nonnegative integers");
        cfg.info_seeds.push_back(static_cast<uint64_t>(s));
      }
    }
    else throw Error("config", "unknown config key \"" + key + "\"");
  }
}

AuditConfig load_config(const std::filesystem::path& path, AuditConfig base) {
  apply_toml(parse_toml(read_file(path), path.string()), base);
  return base;
}

Json to_json(const AuditConfig& cfg) {
  Json j;
  j["data"] = cfg.data;
  j["embeddings"] = cfg.embeddings ? Json(*cfg.embeddings) : Json(nullptr);
  j["renormalize"] = cfg.renormalize;
  j["seed"] = cfg.seed;
  j["eval_fraction"] = cfg.eval_fraction;
  j["max_tokens"] = cfg.max_tokens;
  j["tie_policy"] = cfg.tie_policy == TiePolicy::kDrop ? "drop" : "error";
  j["noise_rates"] = cfg.noise_rates;
  j["fractions"] = cfg.fractions;
  j["bins"] = cfg.bins;
  j["ece_bins"] = cfg.ece_bins;
  j["threshold"] = cfg.threshold;
  j["saturation_target"] = cfg.saturation_target;
  j["hash_dim"] = cfg.hash_dim;
  j["ecdf_grid"] = cfg.ecdf_grid;
  j["train"] = to_json(cfg.train);
  j["info"] = Json{{"size", cfg.info_size ? Json(*cfg.info_size) : Json(nullptr)},
                   {"seeds", cfg.info_seeds}};
  return j;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(pos, end - pos);
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw Error("usage", "empty entry in list \"" + text + "\"");
    item = item.substr(first, last - first + 1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error("usage", "invalid number \"" + item + "\" in list");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

}  // namespace prefaudit
