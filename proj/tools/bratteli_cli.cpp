// Command-line frontend: diagram checks and canonicalization, PMF transport,
// entropy and coding-rate traces, Kuhn-grid curves, orbit and SMB simulation,
// and fixed-length lossy traces. CSV goes to --out (or stdout), curves can
// additionally be rendered as an SVG polyline.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bratteli/coding.hpp"
#include "bratteli/formats.hpp"
#include "bratteli/grid.hpp"
#include "bratteli/lossy.hpp"
#include "bratteli/stats.hpp"
#include "bratteli/vershik.hpp"

using namespace bratteli;

namespace {

constexpr std::uint64_t kDefaultSeed = 0x5eed;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("BRATTELI_SEED")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
    throw ParseError("BRATTELI_SEED is not an integer");
  }
  return kDefaultSeed;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ParseError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

Diagram load_diagram(const std::string& builtin, const std::string& file, int levels) {
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open diagram file '" + file + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return diagram_from_json(buf.str());
  }
  if (builtin.empty()) throw ParseError("need --builtin or --diagram");
  return builtin_diagram(builtin, levels);
}

std::vector<double> parse_pmf_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

Bits hex_to_bits(const std::string& dump) {
  const auto colon = dump.find(':');
  if (colon == std::string::npos) throw ParseError("bitstream must be <nbits>:<hex>");
  const auto nbits = static_cast<std::size_t>(std::stoull(dump.substr(0, colon)));
  Bits bits;
  for (std::size_t i = colon + 1; i < dump.size(); ++i) {
    const char c = dump[i];
    int v = 0;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = 10 + c - 'a';
    else if (c >= 'A' && c <= 'F') v = 10 + c - 'A';
    else throw ParseError("invalid hex digit in bitstream");
    for (int b = 3; b >= 0; --b) bits += ((v >> b) & 1) ? '1' : '0';
  }
  if (bits.size() < nbits) throw ParseError("bitstream shorter than its declared length");
  bits.resize(nbits);
  return bits;
}

std::string bits_to_hex(const Bits& bits) {
  std::string hex;
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    int v = 0;
    for (std::size_t b = 0; b < 4; ++b)
      v = (v << 1) | (i + b < bits.size() && bits[i + b] == '1' ? 1 : 0);
    hex += "0123456789abcdef"[v];
  }
  return std::to_string(bits.size()) + ":" + hex;
}

// The indexed decomposition of a table source's diagram, for code lifting.
std::shared_ptr<const DiagramDecomposition> decomposition_of(const TableSource& s) {
  auto d = std::make_shared<const Diagram>(s.diagram());  // copy keeps it simple
  auto beta = d->uniform_beta();
  if (!beta) throw ValidationError("source diagram has no uniform branching");
  auto idx = std::make_shared<const Indexing>(Indexing::build(*d, *beta));
  return std::make_shared<DiagramDecomposition>(std::move(d), std::move(idx));
}

const TableSource& as_table(const Source& s) {
  const auto* table = dynamic_cast<const TableSource*>(&s);
  if (table == nullptr)
    throw ValidationError("this command needs an explicit-table source");
  return *table;
}

void write_svg_polyline(const std::string& path, const std::vector<std::pair<double, double>>& pts,
                        double y_max) {
  std::ofstream svg(path);
  if (!svg) throw ParseError("cannot open SVG file '" + path + "'");
  const int w = 640, h = 400, margin = 40;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  svg << "  <rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  svg << "  <line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin
      << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
  svg << "  <line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << h - margin << "\" stroke=\"black\"/>\n";
  svg << "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"";
  for (const auto& [x, y] : pts) {
    const double px = margin + x * (w - 2 * margin);
    const double py = h - margin - (y_max > 0 ? y / y_max : 0.0) * (h - 2 * margin);
    svg << fmt(px) << "," << fmt(py) << " ";
  }
  svg << "\"/>\n</svg>\n";
}

// ---------------------------------------------------------------------------

int cmd_check(const std::string& builtin, const std::string& file, int beta, int levels) {
  const Diagram d = load_diagram(builtin, file, levels);
  const RegularityReport rep = check_regular(d, beta);
  std::cout << "regular: " << (rep.regular ? "true" : "false") << "\n";
  if (!rep.regular) {
    std::cout << "violation: " << rep.violation << "\n";
    return 1;
  }
  return 0;
}

int cmd_canonicalize(const std::string& builtin, const std::string& file, int beta, int levels,
                     int up_to, const std::string& out_path) {
  const Diagram d = load_diagram(builtin, file, levels);
  const Indexing idx = Indexing::build(d, beta);
  const auto result = canonicalize(d, idx, up_to < 0 ? d.max_level() : up_to);
  Output out(out_path);
  out.stream() << "level,ordinal,label,eta\n";
  for (int n = 0; n < static_cast<int>(result.image.eta.size()); ++n)
    for (std::int32_t k = 0; k < d.level_size(n); ++k)
      out.stream() << n << "," << k << "," << d.label(n, k) << ","
                   << result.image.render(d, n, k) << "\n";
  return 0;
}

int cmd_transport(const std::string& builtin, const std::string& file, int levels,
                  const std::string& pmf_csv, int level) {
  const Diagram d = load_diagram(builtin, file, levels);
  const Pmf moved = transport(d, Pmf(level, parse_pmf_list(pmf_csv)));
  std::cout << "level,ordinal,probability\n";
  for (std::size_t i = 0; i < moved.size(); ++i)
    std::cout << moved.level() << "," << i << "," << fmt(moved[i]) << "\n";
  return 0;
}

int cmd_entropy(const std::string& source_spec, int up_to, std::size_t samples,
                std::uint64_t seed, const std::string& out_path) {
  const auto s = load_source(source_spec, up_to);
  const auto rates = entropy_rate_approximants(*s, up_to, samples, seed);
  Output out(out_path);
  out.stream() << "level,approximant_bits_per_symbol,std_error_bits\n";
  for (int n = 0; n <= up_to; ++n)
    out.stream() << n << "," << fmt(rates[static_cast<std::size_t>(n)].bits) << ","
                 << fmt(rates[static_cast<std::size_t>(n)].std_error) << "\n";
  return 0;
}

int cmd_rates(const std::string& source_spec, int up_to, const std::string& out_path) {
  const auto s = load_source(source_spec, up_to);
  const TableSource& table = as_table(*s);
  EncoderArray arr(decomposition_of(table));
  Output out(out_path);
  out.stream() << "level,rate_bits_per_symbol,entropy_approximant_bits,redundancy_bits\n";
  for (int n = 0; n <= up_to; ++n) {
    const PrefixCode tau_n = arr.tau(n);
    const Pmf& p = table.level_pmf(n);
    const double r = rate(tau_n, p);
    const double approx = std::pow(static_cast<double>(tau_n.beta), -n) * entropy_bits(p);
    out.stream() << n << "," << fmt(r) << "," << fmt(approx) << "," << fmt(redundancy(tau_n, p))
                 << "\n";
  }
  return 0;
}

int cmd_encode(const std::string& source_spec, int level, std::int64_t vertex,
               const std::string& scheme, bool sequential, const std::string& text,
               const std::string& alphabet) {
  if (sequential) {
    std::vector<std::string> symbols;
    for (char c : alphabet) symbols.emplace_back(1, c);
    std::vector<double> probs(symbols.size(), 1.0 / static_cast<double>(symbols.size()));
    const TableSource table = source_spec.empty()
        ? embed_sequential(symbols, 2, iid_marginals(probs), 3)
        : as_table(*load_source(source_spec, 3));
    auto levels = decomposition_of(table);
    auto arr = std::make_shared<EncoderArray>(levels);
    const SequentialScheme seq(static_cast<std::int64_t>(symbols.size()),
                               [arr, &table](int order) -> std::optional<PrefixCode> {
                                 if (order > table.max_level()) return std::nullopt;
                                 return arr->tau(order);
                               });
    std::vector<std::int32_t> word;
    for (char c : text) {
      const auto pos = alphabet.find(c);
      if (pos == std::string::npos) throw ParseError("symbol outside the alphabet");
      word.push_back(static_cast<std::int32_t>(pos));
    }
    std::cout << bits_to_hex(seq.encode(word)) << "\n";
    return 0;
  }
  const auto s = load_source(source_spec, level);
  const TableSource& table = as_table(*s);
  const Pmf& p = table.level_pmf(level);
  PrefixCode code = scheme == "tau" ? EncoderArray(decomposition_of(table)).tau(level)
                                    : huffman(p, table.beta());
  if (vertex < 0 || vertex >= static_cast<std::int64_t>(code.words.size()))
    throw ValidationError("vertex ordinal out of range");
  std::cout << bits_to_hex(code.words[static_cast<std::size_t>(vertex)]) << "\n";
  return 0;
}

int cmd_decode(const std::string& source_spec, int level, const std::string& dump,
               const std::string& scheme, bool sequential, std::int64_t k,
               const std::string& alphabet) {
  if (sequential) {
    std::vector<std::string> symbols;
    for (char c : alphabet) symbols.emplace_back(1, c);
    std::vector<double> probs(symbols.size(), 1.0 / static_cast<double>(symbols.size()));
    const TableSource table = source_spec.empty()
        ? embed_sequential(symbols, 2, iid_marginals(probs), 3)
        : as_table(*load_source(source_spec, 3));
    auto levels = decomposition_of(table);
    auto arr = std::make_shared<EncoderArray>(levels);
    const SequentialScheme seq(static_cast<std::int64_t>(symbols.size()),
                               [arr, &table](int order) -> std::optional<PrefixCode> {
                                 if (order > table.max_level()) return std::nullopt;
                                 return arr->tau(order);
                               });
    std::string text;
    for (std::int32_t sym : seq.decode(hex_to_bits(dump), k))
      text += alphabet[static_cast<std::size_t>(sym)];
    std::cout << text << "\n";
    return 0;
  }
  const auto s = load_source(source_spec, level);
  const TableSource& table = as_table(*s);
  PrefixCode code = scheme == "tau" ? EncoderArray(decomposition_of(table)).tau(level)
                                    : huffman(table.level_pmf(level), table.beta());
  const Decoder dec(code);
  const auto v = dec.decode(hex_to_bits(dump));
  std::cout << v << "," << table.diagram().label(level, v) << "\n";
  return 0;
}

int cmd_kuhn_curve(int beta, int k, int level, int samples, const std::string& out_path,
                   const std::string& svg_path) {
  if (k != 1) throw ValidationError("kuhn-curve plots one-dimensional grids");
  const KuhnGrid grid(beta, k);
  Output out(out_path);
  out.stream() << "theta,entropy_rate_approximant_bits\n";
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < samples; ++i) {
    const double theta = samples == 1 ? 0.0 : static_cast<double>(i) / (samples - 1);
    const double value = grid.entropy_approximant({theta}, level);
    pts.emplace_back(theta, value);
    out.stream() << fmt(theta) << "," << fmt(value) << "\n";
  }
  if (!svg_path.empty()) {
    double y_max = 0.0;
    for (const auto& [x, y] : pts) y_max = std::max(y_max, y);
    write_svg_polyline(svg_path, pts, y_max);
  }
  return 0;
}

int cmd_orbit(const std::string& source_spec, const std::string& builtin,
              const std::string& file, int levels, int level, std::int64_t vertex,
              std::int64_t steps, const std::string& out_path) {
  std::shared_ptr<const Source> s;
  if (!source_spec.empty()) {
    s = load_source(source_spec, std::max(level, levels));
  } else {
    // Orbits are measure-free; wrap the diagram in its uniform-top source.
    auto d = std::make_shared<const Diagram>(load_diagram(builtin, file, std::max(level, levels)));
    const auto top = static_cast<std::size_t>(d->level_size(level));
    s = std::make_shared<TableSource>(extend_down(
        std::move(d), Pmf(level, std::vector<double>(top, 1.0 / static_cast<double>(top)))));
  }
  Output out(out_path);
  out.stream() << "step,index,address_lsb_first,vertex_chain\n";
  Vertex x;
  if (s->has_tables()) x = {static_cast<std::int32_t>(vertex)};
  else {
    Rng rng(default_seed());
    x = s->sample(level, rng);
  }
  FinitePath p = initial_path(*s, level, x);
  for (std::int64_t step = 0; step <= steps; ++step) {
    out.stream() << step << "," << address_to_index(p.address) << ",";
    for (std::size_t j = 0; j < p.address.digits.size(); ++j)
      out.stream() << static_cast<int>(p.address.digits[j]);
    out.stream() << ",";
    for (std::size_t j = 0; j < p.chain.size(); ++j) {
      if (j) out.stream() << '|';
      out.stream() << s->describe(static_cast<int>(j), p.chain[j]);
    }
    out.stream() << "\n";
    if (step == steps) break;
    if (p.address.all_max()) break;  // fiber exhausted
    p = step_path(*s, p);
  }
  return 0;
}

int cmd_smb(const std::string& source_spec, int level, std::size_t samples, std::uint64_t seed,
            const std::string& out_path) {
  const auto s = load_source(source_spec, level);
  Rng rng(seed);
  Output out(out_path);
  out.stream() << "sample,smb_statistic_bits_per_symbol\n";
  RunningStats stats;
  std::vector<double> values;
  values.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    Rng stream = rng.stream(i);
    const FinitePath p = sample_path(*s, level, stream);
    const double stat = smb_statistic(*s, p);
    stats.add(stat);
    values.push_back(stat);
    out.stream() << i << "," << fmt(stat) << "\n";
  }
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const auto idx = static_cast<std::size_t>(q * (values.size() - 1));
    return values[idx];
  };
  std::cout << "samples: " << samples << "\n";
  std::cout << "mean_bits: " << fmt(stats.mean()) << "\n";
  std::cout << "std_error_bits: " << fmt(stats.std_error()) << "\n";
  std::cout << "quantiles_bits: " << fmt(quantile(0.05)) << " " << fmt(quantile(0.25)) << " "
            << fmt(quantile(0.5)) << " " << fmt(quantile(0.75)) << " " << fmt(quantile(0.95))
            << "\n";
  return 0;
}

int cmd_lossy(const std::string& source_spec, double delta, int up_to,
              const std::string& out_path) {
  const auto s = load_source(source_spec, up_to);
  const auto trace = lossy_rate_trace(*s, delta, up_to);
  // Mixture specs expose the rate bracket; single known-rate sources
  // collapse it.
  std::string r_minus_str = "", r_plus_str = "";
  if (const auto structure = mixture_structure(source_spec, up_to)) {
    const StepCdf cdf = f_mu(*structure);
    r_minus_str = fmt(cdf.r_minus(delta));
    r_plus_str = fmt(cdf.r_plus(delta));
  } else if (const auto rate = s->known_entropy_rate()) {
    r_minus_str = fmt(*rate);
    r_plus_str = fmt(*rate);
  }
  Output out(out_path);
  out.stream() << "level,covering_size,rate_bits_per_symbol,r_minus_bits,r_plus_bits\n";
  for (int n = 0; n <= up_to; ++n) {
    const auto m = min_covering_size(s->level_pmf(n), delta);
    out.stream() << n << "," << m << "," << fmt(trace[static_cast<std::size_t>(n)]) << ","
                 << r_minus_str << "," << r_plus_str << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"information sources on regular leveled diagrams"};
  app.require_subcommand(1);

  std::string builtin, file, source_spec, out_path, svg_path, pmf_csv, scheme = "huffman";
  std::string bits_dump, text, alphabet = "ab";
  int beta = 2, levels = 4, level = 0, up_to = 4, k = 1, curve_samples = 257;
  std::int64_t vertex = 0, steps = 10, seq_k = 0;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  double delta = 0.25;
  bool sequential = false;

  auto add_diagram_opts = [&](CLI::App* cmd) {
    cmd->add_option("--builtin", builtin, "built-in diagram name");
    cmd->add_option("--diagram", file, "diagram JSON file");
    cmd->add_option("--levels", levels, "truncation depth for built-ins");
  };

  auto* check = app.add_subcommand("check", "validate and test regularity");
  add_diagram_opts(check);
  check->add_option("--beta", beta, "branching factor to test");

  auto* canon = app.add_subcommand("canonicalize", "emit the string images");
  add_diagram_opts(canon);
  canon->add_option("--beta", beta);
  canon->add_option("--up-to", up_to, "highest level to canonicalize");
  canon->add_option("--out", out_path);

  auto* trans = app.add_subcommand("transport", "push a PMF one level down");
  add_diagram_opts(trans);
  trans->add_option("--level", level, "level the PMF lives on")->required();
  trans->add_option("--pmf", pmf_csv, "comma-separated probabilities")->required();

  auto* entropy_cmd = app.add_subcommand("entropy", "entropy-rate approximants");
  entropy_cmd->add_option("--source", source_spec)->required();
  entropy_cmd->add_option("--up-to", up_to);
  entropy_cmd->add_option("--samples", samples, "Monte Carlo draws for oracle sources");
  entropy_cmd->add_option("--seed", seed);
  entropy_cmd->add_option("--out", out_path);

  auto* rates_cmd = app.add_subcommand("rates", "combined-scheme rate trace");
  rates_cmd->add_option("--source", source_spec)->required();
  rates_cmd->add_option("--up-to", up_to);
  rates_cmd->add_option("--out", out_path);

  auto* enc = app.add_subcommand("encode", "encode a vertex or a word");
  enc->add_option("--source", source_spec);
  enc->add_option("--level", level);
  enc->add_option("--vertex", vertex, "vertex ordinal");
  enc->add_option("--scheme", scheme, "huffman|tau");
  enc->add_flag("--sequential", sequential, "word mode over --alphabet");
  enc->add_option("--text", text, "word to encode in sequential mode");
  enc->add_option("--alphabet", alphabet);

  auto* dec = app.add_subcommand("decode", "decode a hex bitstream");
  dec->add_option("--source", source_spec);
  dec->add_option("--level", level);
  dec->add_option("--bits", bits_dump, "<nbits>:<hex>")->required();
  dec->add_option("--scheme", scheme);
  dec->add_flag("--sequential", sequential);
  dec->add_option("--k", seq_k, "word length in sequential mode");
  dec->add_option("--alphabet", alphabet);

  auto* curve = app.add_subcommand("kuhn-curve", "entropy-rate curve of the grid family");
  curve->add_option("--beta", beta);
  curve->add_option("--k", k);
  curve->add_option("--level", level)->required();
  curve->add_option("--samples", curve_samples);
  curve->add_option("--out", out_path);
  curve->add_option("--svg", svg_path);

  auto* orbit = app.add_subcommand("orbit", "walk a fiber under the successor map");
  add_diagram_opts(orbit);
  orbit->add_option("--source", source_spec);
  orbit->add_option("--level", level)->required();
  orbit->add_option("--vertex", vertex);
  orbit->add_option("--steps", steps);
  orbit->add_option("--out", out_path);

  auto* smb = app.add_subcommand("smb", "sample the normalized log-probability");
  smb->add_option("--source", source_spec)->required();
  smb->add_option("--level", level)->required();
  smb->add_option("--samples", samples);
  smb->add_option("--seed", seed);
  smb->add_option("--out", out_path);

  auto* lossy = app.add_subcommand("lossy", "fixed-length covering trace");
  lossy->add_option("--source", source_spec)->required();
  lossy->add_option("--delta", delta, "tolerated error probability");
  lossy->add_option("--up-to", up_to);
  lossy->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 3;
  }

  try {
    if (seed == 0) seed = default_seed();
    if (check->parsed()) return cmd_check(builtin, file, beta, levels);
    if (canon->parsed()) return cmd_canonicalize(builtin, file, beta, levels, up_to, out_path);
    if (trans->parsed()) return cmd_transport(builtin, file, levels, pmf_csv, level);
    if (entropy_cmd->parsed()) return cmd_entropy(source_spec, up_to, samples, seed, out_path);
    if (rates_cmd->parsed()) return cmd_rates(source_spec, up_to, out_path);
    if (enc->parsed())
      return cmd_encode(source_spec, level, vertex, scheme, sequential, text, alphabet);
    if (dec->parsed())
      return cmd_decode(source_spec, level, bits_dump, scheme, sequential, seq_k, alphabet);
    if (curve->parsed())
      return cmd_kuhn_curve(beta, k, level, curve_samples, out_path, svg_path);
    if (orbit->parsed())
      return cmd_orbit(source_spec, builtin, file, levels, level, vertex, steps, out_path);
    if (smb->parsed()) return cmd_smb(source_spec, level, samples, seed, out_path);
    if (lossy->parsed()) return cmd_lossy(source_spec, delta, up_to, out_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
