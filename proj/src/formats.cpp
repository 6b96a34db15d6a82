#include "bratteli/formats.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "bratteli/grid.hpp"

namespace bratteli {

using nlohmann::json;

namespace {

std::pair<int, std::int32_t> parse_vertex_ref(const std::string& ref) {
  const auto colon = ref.find(':');
  if (colon == std::string::npos)
    throw ParseError("vertex reference '" + ref + "' is not level:ordinal");
  try {
    return {std::stoi(ref.substr(0, colon)), std::stoi(ref.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ParseError("vertex reference '" + ref + "' is not level:ordinal");
  }
}

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("expected a JSON object");
  return j;
}

// Rethrows library lookup/type errors as parse failures.
template <typename Fn>
auto guarded(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError("trailing characters in number '" + s + "'");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("'" + s + "' is not a number");
  }
}

int parse_int(const std::string& s) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw ParseError("trailing characters in integer '" + s + "'");
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("'" + s + "' is not an integer");
  }
}

// Point-mass source on the Pascal diagram: the left spine (sigma) or the
// right spine (tau).
std::shared_ptr<const Source> pascal_point_source(int levels, bool left_spine) {
  auto d = std::make_shared<const Diagram>(example_pascal_diagram(levels));
  std::vector<Pmf> pmfs;
  for (int n = 0; n <= levels; ++n) {
    std::vector<double> p(static_cast<std::size_t>(d->level_size(n)), 0.0);
    p[left_spine ? 0 : p.size() - 1] = 1.0;
    pmfs.emplace_back(n, std::move(p));
  }
  return std::make_shared<TableSource>(std::move(d), std::move(pmfs), 0.0);
}

}  // namespace

std::string diagram_to_json(const Diagram& d) {
  json j;
  if (const auto beta = d.uniform_beta()) j["beta"] = *beta;
  json levels = json::array();
  for (int n = 0; n <= d.max_level(); ++n) {
    json level = json::array();
    for (std::int32_t k = 0; k < d.level_size(n); ++k) level.push_back(d.label(n, k));
    levels.push_back(std::move(level));
  }
  j["levels"] = std::move(levels);
  json multisets = json::object();
  for (int n = 1; n <= d.max_level(); ++n) {
    for (std::int32_t k = 0; k < d.level_size(n); ++k) {
      json sources = json::array();
      for (const auto& [src, mult] : d.multiset(n, k))
        for (int i = 0; i < mult; ++i)
          sources.push_back(std::to_string(n - 1) + ":" + std::to_string(src));
      multisets[std::to_string(n) + ":" + std::to_string(k)] = std::move(sources);
    }
  }
  j["multisets"] = std::move(multisets);
  return j.dump(2);
}

Diagram diagram_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] {
  if (!j.contains("levels") || !j["levels"].is_array())
    throw ParseError("diagram: missing 'levels' array");
  std::vector<std::vector<std::string>> labels;
  for (const auto& level : j["levels"]) {
    std::vector<std::string> row;
    for (const auto& name : level) row.push_back(name.get<std::string>());
    labels.push_back(std::move(row));
  }
  std::vector<std::vector<Multiset>> multisets;
  for (std::size_t n = 1; n < labels.size(); ++n)
    multisets.emplace_back(labels[n].size());
  if (j.contains("multisets")) {
    for (const auto& [key, sources] : j["multisets"].items()) {
      const auto [level, ordinal] = parse_vertex_ref(key);
      if (level < 1 || level >= static_cast<int>(labels.size()) || ordinal < 0 ||
          ordinal >= static_cast<std::int32_t>(labels[static_cast<std::size_t>(level)].size()))
        throw ParseError("diagram: multiset key '" + key + "' out of range");
      Multiset m;
      for (const auto& ref : sources) {
        const auto [src_level, src] = parse_vertex_ref(ref.template get<std::string>());
        if (src_level != level - 1)
          throw ParseError("diagram: multiset of '" + key + "' references level " +
                           std::to_string(src_level));
        m[src] += 1;
      }
      multisets[static_cast<std::size_t>(level - 1)][static_cast<std::size_t>(ordinal)] =
          std::move(m);
    }
  }
    return Diagram::build(std::move(labels), std::move(multisets));
  });
}

Diagram builtin_diagram(const std::string& name, int levels) {
  if (name == "ex1.1") return example_two_vertex_diagram(levels);
  if (name == "ex1.2-pascal") return example_pascal_diagram(levels);
  if (name.rfind("canonical(", 0) == 0 && name.back() == ')') {
    const auto args = split(name.substr(10, name.size() - 11), ',');
    if (args.size() != 2) throw ParseError("canonical(<symbols>,<beta>) takes two arguments");
    std::vector<std::string> alphabet;
    for (char c : args[0]) alphabet.emplace_back(1, c);
    return canonical_diagram(alphabet, parse_int(args[1]), levels);
  }
  if (name.rfind("kuhn(", 0) == 0 && name.back() == ')') {
    const auto args = split(name.substr(5, name.size() - 6), ',');
    if (args.size() != 2) throw ParseError("kuhn(<beta>,<k>) takes two arguments");
    return KuhnGrid(parse_int(args[0]), parse_int(args[1])).induced_diagram(levels);
  }
  throw ParseError("unknown diagram '" + name + "'");
}

std::shared_ptr<const Source> builtin_source(const std::string& spec, int levels) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string params = colon == std::string::npos ? "" : spec.substr(colon + 1);

  if (name == "iid-bernoulli") return iid_bernoulli(parse_double(params));
  if (name == "iid-uniform") {
    const int m = parse_int(params);
    if (m < 1) throw ParseError("iid-uniform: alphabet size must be positive");
    std::vector<std::string> alphabet;
    std::vector<double> probs;
    for (int i = 0; i < m; ++i) {
      alphabet.emplace_back(1, static_cast<char>('a' + i % 26));
      probs.push_back(1.0 / m);
    }
    return std::make_shared<IidSource>(std::move(alphabet), std::move(probs), 2);
  }
  if (name == "pascal-sigma") return pascal_point_source(levels, true);
  if (name == "pascal-tau") return pascal_point_source(levels, false);
  if (name == "pascal-mix") {
    const double w = params.empty() ? 0.5 : parse_double(params);
    MixtureSpec mixspec;
    mixspec.components.push_back({w, pascal_point_source(levels, true)});
    mixspec.components.push_back({1.0 - w, pascal_point_source(levels, false)});
    return mix(mixspec);
  }
  if (name == "kuhn-theta") {
    const auto args = split(params, ',');
    if (args.size() < 3)
      throw ParseError("kuhn-theta:<beta>,<k>,<coord>[,<coord>...]");
    const int beta = parse_int(args[0]);
    const int k = parse_int(args[1]);
    if (static_cast<int>(args.size()) != 2 + k)
      throw ParseError("kuhn-theta: expected " + std::to_string(k) + " coordinates");
    std::vector<double> theta;
    for (int c = 0; c < k; ++c) theta.push_back(parse_double(args[2 + c]));
    return std::make_shared<TauThetaSource>(std::make_shared<KuhnGrid>(beta, k),
                                            std::move(theta));
  }
  if (name == "table") {
    // Materialize an analytic source as explicit tables up to `levels`.
    const auto inner = builtin_source(params, levels);
    const auto* iid = dynamic_cast<const IidSource*>(inner.get());
    if (iid == nullptr)
      throw ParseError("table: only IID sources can be materialized");
    std::vector<std::string> alphabet = iid->alphabet();
    return std::make_shared<TableSource>(embed_sequential(
        alphabet, iid->beta(), iid_marginals(iid->symbol_probs()), levels, 1e-9,
        iid->known_entropy_rate()));
  }
  if (name == "mix") {
    const auto structure = mixture_structure(spec, levels);
    if (!structure) throw ParseError("mix:<w>*<spec>+<w>*<spec>");
    return mix(*structure);
  }
  throw ParseError("unknown source '" + spec + "'");
}

std::optional<MixtureSpec> mixture_structure(const std::string& spec, int levels) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string params = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (name == "pascal-mix") {
    const double w = params.empty() ? 0.5 : parse_double(params);
    MixtureSpec mixspec;
    mixspec.components.push_back({w, pascal_point_source(levels, true)});
    mixspec.components.push_back({1.0 - w, pascal_point_source(levels, false)});
    return mixspec;
  }
  if (name != "mix") return std::nullopt;
  MixtureSpec mixspec;
  for (const auto& part : split(params, '+')) {
    const auto star = part.find('*');
    if (star == std::string::npos) throw ParseError("mix:<w>*<spec>+<w>*<spec>");
    mixspec.components.push_back(
        {parse_double(part.substr(0, star)), builtin_source(part.substr(star + 1), levels)});
  }
  return mixspec;
}

std::shared_ptr<const Source> source_from_json(const std::string& text, int levels) {
  const json j = parse(text);
  return guarded([&]() -> std::shared_ptr<const Source> {
  const std::string type = j.value("type", "");
  if (type == "table") {
    if (!j.contains("diagram"))
      throw ParseError("table source: embed the diagram under 'diagram'");
    auto d = std::make_shared<const Diagram>(diagram_from_json(j["diagram"].dump()));
    std::vector<Pmf> pmfs;
    int n = 0;
    for (const auto& row : j.at("levels"))
      pmfs.emplace_back(n++, row.get<std::vector<double>>());
    return std::make_shared<TableSource>(std::move(d), std::move(pmfs));
  }
  if (type == "builtin") {
    std::string spec = j.at("name").get<std::string>();
    if (j.contains("params")) spec += ":" + j["params"].get<std::string>();
    else if (j.contains("p")) spec += ":" + std::to_string(j["p"].get<double>());
    return builtin_source(spec, levels);
  }
  if (type == "mixture") {
    MixtureSpec mixspec;
    for (const auto& comp : j.at("components"))
      mixspec.components.push_back({comp.at("weight").get<double>(),
                                    source_from_json(comp.at("source").dump(), levels)});
    return mix(mixspec);
  }
  throw ParseError("source: unknown type '" + type + "'");
  });
}

std::shared_ptr<const Source> load_source(const std::string& spec, int levels) {
  std::string path;
  if (!spec.empty() && spec.front() == '@') path = spec.substr(1);
  else if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") path = spec;
  if (path.empty()) return builtin_source(spec, levels);
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open source file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return source_from_json(buffer.str(), levels);
}

}  // namespace bratteli
