#ifndef COMPERE_KNOWLEDGE_HPP
#define COMPERE_KNOWLEDGE_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace compere {

// Flat feature bundle (no unification variables). Ordered map keeps every
// downstream serialization deterministic.
using FeatureSet = std::map<std::string, std::string>;

enum class NodeKind { Syntactic, SemanticConcept, IntermediateRole, ThematicRole };

std::string to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(const std::string& text);

enum class PreconditionKind { PositionFirst, AfterHead, FeatureEquals, SelectionalFits, WholeLacksPart };

struct Precondition {
  PreconditionKind kind;
  std::string a;  // feature name / role name / category, depending on kind
  std::string b;  // feature value for FeatureEquals

  bool operator==(const Precondition&) const = default;
};

struct Expectation {
  std::string category;
  bool obligatory = false;

  bool operator==(const Expectation&) const = default;
};

// One part-whole link. Links are stored on the part's node; `whole` names the
// category this part can join.
struct PartLink {
  std::string part;
  std::string whole;
  bool head = false;
  std::string grel;  // subject | object | pp-object | modifier | "" (none)
  int base_preference = 1;
  std::vector<Precondition> preconditions;
  std::vector<Expectation> expectations;
  int decl_index = 0;  // position in the grammar file, tie-break order

  bool has_first() const;
  bool operator==(const PartLink&) const = default;
};

struct Node {
  std::string name;
  NodeKind kind = NodeKind::Syntactic;
  std::vector<int> links;  // indices into KnowledgeBase::links, this node as part
};

struct LexicalEntry {
  std::string form;  // stored lowercase
  std::string category;
  FeatureSet features;
  std::string concept;  // may be empty (purely syntactic lexicon)
  std::vector<Expectation> valence;
  std::map<std::string, std::string> selectional;  // thematic role -> type name
  int decl_index = 0;
};

struct ValidationIssue {
  std::string location;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;

  bool ok() const { return errors.empty(); }
};

// Raised on malformed grammar/lexicon text; carries a 1-based line number.
class LoadError : public std::runtime_error {
 public:
  LoadError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

class KnowledgeBase {
 public:
  // ---- structure ----
  std::vector<Node> nodes;
  std::vector<PartLink> links;
  std::vector<LexicalEntry> lexicon;
  std::map<std::string, std::string> type_parent;  // selectional lattice, "" = top

  const Node* find_node(const std::string& name) const;
  bool has_node(const std::string& name) const { return find_node(name) != nullptr; }

  // Links whose part is `category`, in declaration order.
  std::vector<int> links_of_part(const std::string& category) const;

  // ---- queries ----
  std::vector<LexicalEntry> lookup(const std::string& form) const;

  // Ordered chain from the grammatical relation to a thematic role, the
  // grel entry node excluded. Picks the chain with the most satisfied
  // feature preconditions; ties go to declaration order. Empty if no chain's
  // preconditions hold. Accepts parameterized labels like "pp-object(by)",
  // which desugar to the bare grel plus a prep=by feature.
  std::vector<std::string> role_path(const std::string& grel, const FeatureSet& features,
                                     const std::string& concept) const;

  // Type lattice. Unknown names are only equal to themselves.
  bool type_subsumes(const std::string& ancestor, const std::string& descendant) const;
  bool types_disjoint(const std::string& a, const std::string& b) const;

  // True if `descendant` can appear as the leftmost part of an eventual
  // `ancestor` through a chain of first-capable links (reflexive).
  bool left_corner_reachable(const std::string& ancestor, const std::string& descendant) const;

  // Concepts that carry valence in the lexicon; the events validate() quantifies over.
  std::vector<std::string> event_concepts() const;

  std::string serialize() const;

 private:
  mutable std::map<std::string, std::vector<std::string>> left_corner_cache_;
};

KnowledgeBase load_knowledge(const std::string& grammar_text, const std::string& lexicon_text);

ValidationReport validate(const KnowledgeBase& kb);

}  // namespace compere

#endif  // COMPERE_KNOWLEDGE_HPP
