#include "photocount/record_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace photocount {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::runtime_error(fmt::format("malformed number '{}'", text));
  }
  return value;
}

std::uint64_t parse_u64(std::string_view text) {
  text = trim(text);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::runtime_error(fmt::format("malformed integer '{}'", text));
  }
  return value;
}

void check_record(const ClickRecord& r) {
  double previous = 0.0;
  for (const double t : r.times) {
    if (!(t > previous)) throw std::runtime_error("record timestamps must be strictly increasing and positive");
    previous = t;
  }
  if (!r.empty() && r.times.back() > r.duration) {
    throw std::runtime_error("record timestamp exceeds the declared duration");
  }
  validate(r.params);
}

}  // namespace

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

void write_record_csv(std::ostream& out, const ClickRecord& r) {
  out << "# photocount-record v1\n";
  out << "# omega=" << format_double(r.params.omega) << '\n';
  out << "# delta=" << format_double(r.params.delta) << '\n';
  out << "# gamma=" << format_double(r.params.gamma) << '\n';
  out << "# eta=" << format_double(r.params.eta) << '\n';
  out << "# seed=" << r.seed << '\n';
  out << "# stream=" << r.stream << '\n';
  if (r.thinning_seed) out << "# thinning_seed=" << *r.thinning_seed << '\n';
  out << "# duration=" << format_double(r.duration) << '\n';
  for (const double t : r.times) out << format_double(t) << '\n';
}

ClickRecord read_record_csv(std::istream& in) {
  ClickRecord r;
  std::map<std::string, std::string, std::less<>> meta;
  std::string line;
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      const auto body = trim(text.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos) {
        meta.emplace(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
      }
      continue;
    }
    if (text == "t") continue;  // optional column header
    r.times.push_back(parse_double(text));
  }
  const auto take = [&meta](std::string_view key) -> const std::string* {
    const auto it = meta.find(key);
    return it == meta.end() ? nullptr : &it->second;
  };
  if (const auto* v = take("omega")) r.params.omega = parse_double(*v);
  if (const auto* v = take("delta")) r.params.delta = parse_double(*v);
  if (const auto* v = take("gamma")) r.params.gamma = parse_double(*v);
  if (const auto* v = take("eta")) r.params.eta = parse_double(*v);
  if (const auto* v = take("seed")) r.seed = parse_u64(*v);
  if (const auto* v = take("stream")) r.stream = parse_u64(*v);
  if (const auto* v = take("thinning_seed")) r.thinning_seed = parse_u64(*v);
  if (const auto* v = take("duration")) {
    r.duration = parse_double(*v);
  } else {
    r.duration = r.empty() ? 0.0 : r.times.back();
  }
  check_record(r);
  return r;
}

nlohmann::json to_json(const AtomParams& p) {
  return {{"omega", p.omega}, {"delta", p.delta}, {"gamma", p.gamma}, {"eta", p.eta}};
}

AtomParams params_from_json(const nlohmann::json& j) {
  AtomParams p;
  p.omega = j.at("omega").get<double>();
  p.delta = j.value("delta", 0.0);
  p.gamma = j.value("gamma", 1.0);
  p.eta = j.value("eta", 1.0);
  return p;
}

nlohmann::json to_json(const ClickRecord& r) {
  nlohmann::json j = {{"params", to_json(r.params)},
                      {"seed", r.seed},
                      {"stream", r.stream},
                      {"duration", r.duration},
                      {"times", r.times}};
  if (r.thinning_seed) j["thinning_seed"] = *r.thinning_seed;
  return j;
}

ClickRecord record_from_json(const nlohmann::json& j) {
  ClickRecord r;
  r.params = params_from_json(j.at("params"));
  r.seed = j.value("seed", std::uint64_t{0});
  r.stream = j.value("stream", std::uint64_t{0});
  if (j.contains("thinning_seed")) r.thinning_seed = j.at("thinning_seed").get<std::uint64_t>();
  r.times = j.at("times").get<std::vector<double>>();
  r.duration = j.at("duration").get<double>();
  check_record(r);
  return r;
}

ClickRecord load_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open record file '{}'", path));
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    return record_from_json(nlohmann::json::parse(in));
  }
  return read_record_csv(in);
}

}  // namespace photocount
