#include "compere/knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace compere {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> tokens_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

}  // namespace

std::string to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Syntactic: return "syntactic";
    case NodeKind::SemanticConcept: return "semantic-concept";
    case NodeKind::IntermediateRole: return "intermediate-role";
    case NodeKind::ThematicRole: return "thematic-role";
  }
  return "?";
}

std::optional<NodeKind> node_kind_from_string(const std::string& text) {
  if (text == "syntactic") return NodeKind::Syntactic;
  if (text == "semantic-concept") return NodeKind::SemanticConcept;
  if (text == "intermediate-role") return NodeKind::IntermediateRole;
  if (text == "thematic-role") return NodeKind::ThematicRole;
  return std::nullopt;
}

bool PartLink::has_first() const {
  for (const auto& p : preconditions)
    if (p.kind == PreconditionKind::PositionFirst) return true;
  return false;
}

LoadError::LoadError(int line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

const Node* KnowledgeBase::find_node(const std::string& name) const {
  for (const auto& n : nodes)
    if (n.name == name) return &n;
  return nullptr;
}

std::vector<int> KnowledgeBase::links_of_part(const std::string& category) const {
  const Node* n = find_node(category);
  return n ? n->links : std::vector<int>{};
}

std::vector<LexicalEntry> KnowledgeBase::lookup(const std::string& form) const {
  std::string key = lower(form);
  std::vector<LexicalEntry> out;
  for (const auto& e : lexicon)
    if (e.form == key) out.push_back(e);
  return out;
}

namespace {

// A candidate role chain with its specificity (total satisfied feature
// preconditions along the path) and declaration-order key.
struct RoleChain {
  std::vector<std::string> chain;
  int specificity = 0;
  std::vector<int> decl_key;
};

bool feature_preconditions_hold(const PartLink& link, const FeatureSet& features, int* matched) {
  int m = 0;
  for (const auto& p : link.preconditions) {
    if (p.kind != PreconditionKind::FeatureEquals) continue;
    auto it = features.find(p.a);
    if (it == features.end() || it->second != p.b) return false;
    ++m;
  }
  if (matched) *matched = m;
  return true;
}

}  // namespace

std::vector<std::string> KnowledgeBase::role_path(const std::string& grel, const FeatureSet& features,
                                                  const std::string& concept) const {
  (void)concept;  // chains are event-generic in this representation
  std::string entry = grel;
  FeatureSet effective = features;
  // pp-object(by) -> grel pp-object with prep=by
  auto paren = grel.find('(');
  if (paren != std::string::npos && grel.back() == ')') {
    entry = grel.substr(0, paren);
    effective["prep"] = grel.substr(paren + 1, grel.size() - paren - 2);
  }

  const Node* start = find_node(entry);
  if (!start || start->kind != NodeKind::IntermediateRole) return {};

  std::vector<RoleChain> complete;
  // DFS over role links whose feature preconditions hold.
  struct Frame {
    const Node* node;
    RoleChain acc;
  };
  std::vector<Frame> stack{{start, {}}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.node->kind == NodeKind::ThematicRole) {
      complete.push_back(f.acc);
      continue;
    }
    if (f.acc.chain.size() > nodes.size()) continue;  // cycle guard
    for (int li : f.node->links) {
      const PartLink& link = links[li];
      const Node* whole = find_node(link.whole);
      if (!whole) continue;
      if (whole->kind != NodeKind::IntermediateRole && whole->kind != NodeKind::ThematicRole) continue;
      int matched = 0;
      if (!feature_preconditions_hold(link, effective, &matched)) continue;
      RoleChain next = f.acc;
      next.chain.push_back(link.whole);
      next.specificity += matched;
      next.decl_key.push_back(link.decl_index);
      stack.push_back({whole, next});
    }
  }
  if (complete.empty()) return {};
  auto best = std::min_element(complete.begin(), complete.end(), [](const RoleChain& a, const RoleChain& b) {
    if (a.specificity != b.specificity) return a.specificity > b.specificity;
    return a.decl_key < b.decl_key;
  });
  return best->chain;
}

bool KnowledgeBase::type_subsumes(const std::string& ancestor, const std::string& descendant) const {
  std::string cur = descendant;
  for (size_t guard = 0; guard <= type_parent.size(); ++guard) {
    if (cur == ancestor) return true;
    auto it = type_parent.find(cur);
    if (it == type_parent.end() || it->second.empty()) return false;
    cur = it->second;
  }
  return false;
}

bool KnowledgeBase::types_disjoint(const std::string& a, const std::string& b) const {
  return !type_subsumes(a, b) && !type_subsumes(b, a);
}

bool KnowledgeBase::left_corner_reachable(const std::string& ancestor, const std::string& descendant) const {
  if (ancestor == descendant) return true;
  auto it = left_corner_cache_.find(descendant);
  if (it == left_corner_cache_.end()) {
    // All categories reachable from `descendant` through first-capable links.
    std::vector<std::string> reach;
    std::set<std::string> seen{descendant};
    std::vector<std::string> work{descendant};
    while (!work.empty()) {
      std::string cur = work.back();
      work.pop_back();
      for (int li : links_of_part(cur)) {
        const PartLink& l = links[li];
        if (!l.has_first()) continue;
        if (seen.insert(l.whole).second) {
          reach.push_back(l.whole);
          work.push_back(l.whole);
        }
      }
    }
    it = left_corner_cache_.emplace(descendant, std::move(reach)).first;
  }
  const auto& reach = it->second;
  return std::find(reach.begin(), reach.end(), ancestor) != reach.end();
}

std::vector<std::string> KnowledgeBase::event_concepts() const {
  std::vector<std::string> out;
  for (const auto& e : lexicon) {
    if (e.concept.empty() || e.valence.empty()) continue;
    if (std::find(out.begin(), out.end(), e.concept) == out.end()) out.push_back(e.concept);
  }
  // Verbs without valence still name events.
  for (const auto& e : lexicon) {
    if (e.concept.empty() || e.category != "V") continue;
    if (std::find(out.begin(), out.end(), e.concept) == out.end()) out.push_back(e.concept);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

Precondition parse_condition(const std::string& text, int line) {
  std::string t = trim(text);
  if (t == "first") return {PreconditionKind::PositionFirst, "", ""};
  if (t == "after-head") return {PreconditionKind::AfterHead, "", ""};
  if (t.rfind("fits(", 0) == 0 && t.back() == ')')
    return {PreconditionKind::SelectionalFits, trim(t.substr(5, t.size() - 6)), ""};
  if (t.rfind("lacks(", 0) == 0 && t.back() == ')')
    return {PreconditionKind::WholeLacksPart, trim(t.substr(6, t.size() - 7)), ""};
  auto eq = t.find('=');
  if (eq != std::string::npos && eq > 0)
    return {PreconditionKind::FeatureEquals, trim(t.substr(0, eq)), trim(t.substr(eq + 1))};
  throw LoadError(line, "unrecognized condition '" + t + "'");
}

std::vector<Expectation> parse_expect_list(const std::string& text, int line) {
  std::vector<Expectation> out;
  for (auto& item : split(text, ',')) {
    if (item.empty()) throw LoadError(line, "empty expectation");
    Expectation e;
    if (item.back() == '!') {
      e.obligatory = true;
      e.category = trim(item.substr(0, item.size() - 1));
    } else {
      e.category = item;
    }
    if (e.category.empty()) throw LoadError(line, "empty expectation category");
    out.push_back(e);
  }
  return out;
}

void parse_link_line(KnowledgeBase& kb, const std::string& body, int line, int decl) {
  // <Part> -> <Whole> [head] [grel=..] [pref=..] [{ pre: ..; expect: .. }]
  std::string head_part = body;
  std::string block;
  auto brace = body.find('{');
  if (brace != std::string::npos) {
    if (body.back() != '}') throw LoadError(line, "unterminated '{' block");
    head_part = trim(body.substr(0, brace));
    block = trim(body.substr(brace + 1, body.size() - brace - 2));
  }
  auto toks = tokens_of(head_part);
  if (toks.size() < 3 || toks[1] != "->") throw LoadError(line, "expected '<Part> -> <Whole>'");

  PartLink link;
  link.part = toks[0];
  link.whole = toks[2];
  link.decl_index = decl;
  for (size_t i = 3; i < toks.size(); ++i) {
    const std::string& t = toks[i];
    if (t == "head") {
      link.head = true;
    } else if (t.rfind("grel=", 0) == 0) {
      link.grel = t.substr(5);
    } else if (t.rfind("pref=", 0) == 0) {
      try {
        link.base_preference = std::stoi(t.substr(5));
      } catch (...) {
        throw LoadError(line, "bad pref value '" + t + "'");
      }
      if (link.base_preference < 0) throw LoadError(line, "pref must be >= 0");
    } else {
      throw LoadError(line, "unexpected token '" + t + "' in link");
    }
  }
  if (!block.empty()) {
    for (auto& clause : split(block, ';')) {
      if (clause.empty()) continue;
      if (clause.rfind("pre:", 0) == 0) {
        for (auto& c : split(clause.substr(4), ','))
          if (!c.empty()) link.preconditions.push_back(parse_condition(c, line));
      } else if (clause.rfind("expect:", 0) == 0) {
        for (auto& e : parse_expect_list(clause.substr(7), line)) link.expectations.push_back(e);
      } else {
        throw LoadError(line, "unrecognized clause '" + clause + "'");
      }
    }
  }
  kb.links.push_back(link);
}

void parse_lex_line(KnowledgeBase& kb, const std::string& body, int line, int decl) {
  // <form> cat=<Cat> [feat=val ...] [concept=<C>] [expects=...] [restrict: ...]
  std::string head_part = body;
  std::string restrict_part;
  auto rpos = body.find("restrict:");
  if (rpos != std::string::npos) {
    head_part = trim(body.substr(0, rpos));
    restrict_part = trim(body.substr(rpos + 9));
  }
  auto toks = tokens_of(head_part);
  if (toks.empty()) throw LoadError(line, "lex entry needs a form");

  LexicalEntry e;
  e.form = lower(toks[0]);
  e.decl_index = decl;
  for (size_t i = 1; i < toks.size(); ++i) {
    const std::string& t = toks[i];
    auto eq = t.find('=');
    if (eq == std::string::npos) throw LoadError(line, "expected key=value, got '" + t + "'");
    std::string key = t.substr(0, eq), val = t.substr(eq + 1);
    if (key == "cat") {
      e.category = val;
    } else if (key == "concept") {
      e.concept = val;
    } else if (key == "expects") {
      e.valence = parse_expect_list(val, line);
    } else {
      e.features[key] = val;
    }
  }
  if (e.category.empty()) throw LoadError(line, "lex entry missing cat=");
  if (!restrict_part.empty()) {
    for (auto& item : split(restrict_part, ',')) {
      if (item.empty()) continue;
      auto eq = item.find('=');
      if (eq == std::string::npos) throw LoadError(line, "restrict needs Role=Type, got '" + item + "'");
      e.selectional[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
  }
  kb.lexicon.push_back(e);
}

void parse_text(KnowledgeBase& kb, const std::string& text, bool is_lexicon) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  int decl = static_cast<int>(kb.links.size());
  int lex_decl = static_cast<int>(kb.lexicon.size());
  while (std::getline(in, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    std::string lineText = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (lineText.empty()) continue;
    auto sp = lineText.find_first_of(" \t");
    std::string keyword = sp == std::string::npos ? lineText : lineText.substr(0, sp);
    std::string body = sp == std::string::npos ? "" : trim(lineText.substr(sp + 1));
    if (keyword == "node") {
      auto toks = tokens_of(body);
      if (toks.size() != 2) throw LoadError(line_no, "expected 'node <Name> <kind>'");
      auto kind = node_kind_from_string(toks[1]);
      if (!kind) throw LoadError(line_no, "unknown node kind '" + toks[1] + "'");
      if (kb.find_node(toks[0])) throw LoadError(line_no, "duplicate node name " + toks[0]);
      kb.nodes.push_back({toks[0], *kind, {}});
    } else if (keyword == "link") {
      parse_link_line(kb, body, line_no, decl++);
    } else if (keyword == "type") {
      auto toks = tokens_of(body);
      if (toks.size() == 1) {
        kb.type_parent[toks[0]] = "";
      } else if (toks.size() == 3 && toks[1] == "<") {
        kb.type_parent[toks[0]] = toks[2];
      } else {
        throw LoadError(line_no, "expected 'type <Name> [< <Parent>]'");
      }
    } else if (keyword == "lex") {
      if (!is_lexicon) throw LoadError(line_no, "lex entries belong in the lexicon file");
      parse_lex_line(kb, body, line_no, lex_decl++);
    } else {
      throw LoadError(line_no, "unknown directive '" + keyword + "'");
    }
  }
}

void resolve(KnowledgeBase& kb) {
  // Attach links to their part nodes and check every reference.
  for (size_t i = 0; i < kb.links.size(); ++i) {
    PartLink& l = kb.links[i];
    Node* part = nullptr;
    for (auto& n : kb.nodes)
      if (n.name == l.part) part = &n;
    if (!part) throw LoadError(0, "unresolved reference " + l.part);
    if (!kb.has_node(l.whole)) throw LoadError(0, "unresolved reference " + l.whole);
    part->links.push_back(static_cast<int>(i));
    for (const auto& e : l.expectations)
      if (!kb.has_node(e.category)) throw LoadError(0, "unresolved reference " + e.category + " in expectation");
  }
  for (const auto& e : kb.lexicon) {
    if (!kb.has_node(e.category)) throw LoadError(0, "unresolved reference " + e.category + " for lex " + e.form);
    if (!e.concept.empty() && !kb.has_node(e.concept))
      throw LoadError(0, "unresolved reference " + e.concept + " for lex " + e.form);
    for (const auto& v : e.valence)
      if (!kb.has_node(v.category)) throw LoadError(0, "unresolved reference " + v.category + " for lex " + e.form);
    for (const auto& [role, type] : e.selectional) {
      if (!kb.has_node(role)) throw LoadError(0, "unresolved reference " + role + " for lex " + e.form);
      if (!kb.type_parent.count(type)) throw LoadError(0, "unresolved type " + type + " for lex " + e.form);
    }
  }
  for (const auto& [t, parent] : kb.type_parent)
    if (!parent.empty() && !kb.type_parent.count(parent)) throw LoadError(0, "unresolved type parent " + parent);
}

}  // namespace

KnowledgeBase load_knowledge(const std::string& grammar_text, const std::string& lexicon_text) {
  KnowledgeBase kb;
  parse_text(kb, grammar_text, false);
  parse_text(kb, lexicon_text, true);
  resolve(kb);
  return kb;
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate(const KnowledgeBase& kb) {
  ValidationReport report;

  bool has_role_nodes = false;
  for (const auto& n : kb.nodes)
    if (n.kind == NodeKind::IntermediateRole || n.kind == NodeKind::ThematicRole) has_role_nodes = true;

  // Head uniqueness per whole within first-capable link sets.
  for (const auto& n : kb.nodes) {
    if (n.kind != NodeKind::Syntactic) continue;
    std::map<std::string, int> head_firsts;
    for (int li : n.links) {
      const PartLink& l = kb.links[li];
      if (l.head && l.has_first()) ++head_firsts[l.whole];
    }
  }

  // Syntactic link endpoints must be syntactic.
  for (const auto& l : kb.links) {
    const Node* part = kb.find_node(l.part);
    const Node* whole = kb.find_node(l.whole);
    if (!part || !whole) continue;
    if (part->kind == NodeKind::Syntactic && whole->kind != NodeKind::Syntactic)
      report.errors.push_back({"link " + l.part + " -> " + l.whole, "syntactic part linked to non-syntactic whole"});
  }

  // Every grammatical relation used by a syntactic link must reach a thematic
  // role for every event concept. pp-object is checked per lexical preposition.
  if (has_role_nodes) {
    std::set<std::string> grel_instances;
    bool uses_pp_object = false;
    for (const auto& l : kb.links) {
      const Node* part = kb.find_node(l.part);
      if (!part || part->kind != NodeKind::Syntactic || l.grel.empty()) continue;
      if (l.grel == "pp-object")
        uses_pp_object = true;
      else
        grel_instances.insert(l.grel);
    }
    if (uses_pp_object) {
      std::set<std::string> preps;
      for (const auto& e : kb.lexicon) {
        auto it = e.features.find("prep");
        if (it != e.features.end()) preps.insert(it->second);
      }
      if (preps.empty()) grel_instances.insert("pp-object");
      for (const auto& p : preps) grel_instances.insert("pp-object(" + p + ")");
    }

    auto events = kb.event_concepts();
    for (const auto& grel : grel_instances) {
      for (const auto& event : events) {
        // Existence check: some feature assignment must complete a chain. The
        // feature space is the set of values named by role-link preconditions.
        FeatureSet probe;
        auto direct = kb.role_path(grel, probe, event);
        bool found = !direct.empty();
        if (!found) {
          std::set<std::pair<std::string, std::string>> candidates;
          for (const auto& l : kb.links)
            for (const auto& c : l.preconditions)
              if (c.kind == PreconditionKind::FeatureEquals) candidates.insert({c.a, c.b});
          for (const auto& [k, v] : candidates) {
            FeatureSet f{{k, v}};
            if (!kb.role_path(grel, f, event).empty()) {
              found = true;
              break;
            }
          }
          // Pairwise combinations cover chains guarded by two features.
          if (!found) {
            for (const auto& c1 : candidates) {
              for (const auto& c2 : candidates) {
                FeatureSet f{{c1.first, c1.second}, {c2.first, c2.second}};
                if (!kb.role_path(grel, f, event).empty()) {
                  found = true;
                  break;
                }
              }
              if (found) break;
            }
          }
        }
        if (!found)
          report.errors.push_back({"grel " + grel, "no role path: " + grel + " -> thematic role for " + event});
      }
    }
  }

  // Intermediate-role chains must terminate in exactly one thematic role per
  // feature context; cycles or dead ends show up as unreachable chains above.
  for (const auto& n : kb.nodes) {
    if (n.kind != NodeKind::IntermediateRole) continue;
    if (n.links.empty() && n.name != "subject" && n.name != "object" && n.name != "pp-object" &&
        n.name != "modifier")
      report.warnings.push_back({"node " + n.name, "intermediate role has no outgoing links"});
  }

  return report;
}

// ---------------------------------------------------------------------------
// Serialization (round-trips through load_knowledge)

namespace {

std::string condition_text(const Precondition& p) {
  switch (p.kind) {
    case PreconditionKind::PositionFirst: return "first";
    case PreconditionKind::AfterHead: return "after-head";
    case PreconditionKind::FeatureEquals: return p.a + "=" + p.b;
    case PreconditionKind::SelectionalFits: return "fits(" + p.a + ")";
    case PreconditionKind::WholeLacksPart: return "lacks(" + p.a + ")";
  }
  return "";
}

std::string expect_text(const std::vector<Expectation>& es) {
  std::string out;
  for (size_t i = 0; i < es.size(); ++i) {
    if (i) out += ", ";
    out += es[i].category + (es[i].obligatory ? "!" : "");
  }
  return out;
}

}  // namespace

std::string KnowledgeBase::serialize() const {
  std::ostringstream out;
  for (const auto& n : nodes) out << "node " << n.name << " " << to_string(n.kind) << "\n";
  std::vector<PartLink> ordered = links;
  std::sort(ordered.begin(), ordered.end(),
            [](const PartLink& a, const PartLink& b) { return a.decl_index < b.decl_index; });
  for (const auto& l : ordered) {
    out << "link " << l.part << " -> " << l.whole;
    if (l.head) out << " head";
    if (!l.grel.empty()) out << " grel=" << l.grel;
    out << " pref=" << l.base_preference;
    if (!l.preconditions.empty() || !l.expectations.empty()) {
      out << " { ";
      bool wrote = false;
      if (!l.preconditions.empty()) {
        out << "pre: ";
        for (size_t i = 0; i < l.preconditions.size(); ++i) {
          if (i) out << ", ";
          out << condition_text(l.preconditions[i]);
        }
        wrote = true;
      }
      if (!l.expectations.empty()) {
        if (wrote) out << "; ";
        out << "expect: " << expect_text(l.expectations);
      }
      out << " }";
    }
    out << "\n";
  }
  for (const auto& [t, parent] : type_parent) {
    out << "type " << t;
    if (!parent.empty()) out << " < " << parent;
    out << "\n";
  }
  for (const auto& e : lexicon) {
    out << "lex " << e.form << " cat=" << e.category;
    for (const auto& [k, v] : e.features) out << " " << k << "=" << v;
    if (!e.concept.empty()) out << " concept=" << e.concept;
    if (!e.valence.empty()) {
      out << " expects=";
      for (size_t i = 0; i < e.valence.size(); ++i) {
        if (i) out << ",";
        out << e.valence[i].category << (e.valence[i].obligatory ? "!" : "");
      }
    }
    if (!e.selectional.empty()) {
      out << " restrict: ";
      bool first = true;
      for (const auto& [role, type] : e.selectional) {
        if (!first) out << ", ";
        out << role << "=" << type;
        first = false;
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace compere
