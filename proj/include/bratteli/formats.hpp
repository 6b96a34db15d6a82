#pragma once

#include <memory>
#include <string>

#include "bratteli/diagram.hpp"
#include "bratteli/source.hpp"

namespace bratteli {

// Diagram text format:
//   {"beta":2,"levels":[["v0","v1"],...],"multisets":{"1:0":["0:0","0:1"],...}}
// where "n:k" names the vertex with ordinal k at level n and multiset
// entries repeat according to multiplicity.
std::string diagram_to_json(const Diagram& d);
Diagram diagram_from_json(const std::string& text);

// Built-in diagram generators, selectable by name:
//   ex1.1 | ex1.2-pascal | canonical(<symbols>,<beta>) | kuhn(<beta>,<k>)
// `levels` is the truncation depth.
Diagram builtin_diagram(const std::string& name, int levels);

// Source file format: {"type":"table","levels":[[..probs..],...]} paired
// with a diagram, or {"type":"builtin","name":...,...} for the named
// families, or {"type":"mixture","components":[{"weight":w,"source":...}]}.
std::shared_ptr<const Source> source_from_json(const std::string& text, int levels);

// Compact builtin source specs used by the CLI:
//   iid-bernoulli:<p> | iid-uniform:<m> | pascal-sigma | pascal-tau |
//   pascal-mix:<w> | kuhn-theta:<beta>,<k>,<coord>[,<coord>...] |
//   mix:<w>*<spec>+<w>*<spec>
std::shared_ptr<const Source> builtin_source(const std::string& spec, int levels);

// Dispatch: a path ending in .json (or prefixed with @) loads the file,
// anything else is a builtin spec.
std::shared_ptr<const Source> load_source(const std::string& spec, int levels);

// For mixture specs (mix:..., pascal-mix:w), the weighted components; nullopt
// for anything else. Lets callers evaluate the entropy-rate CDF.
std::optional<MixtureSpec> mixture_structure(const std::string& spec, int levels);

}  // namespace bratteli
