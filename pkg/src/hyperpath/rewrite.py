"""Graph-rewriting rules and breadth-first network expansion.

A rule is a span L <- K -> R over one shared atom set: applying it to a
multiset of host molecules deletes the matched left-side bonds, adds the
right-side bonds, and keeps everything else.  Matches are injective and
label-compatible, map each connected pattern component into one host
molecule, and must touch every molecule of the multiset.  Expansion applies
all rules breadth-first over growing strata of molecules, recording every
successful application as a hyperedge.
"""
from __future__ import annotations

import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from itertools import combinations_with_replacement

from .molgraph import (
    BOND_ORDERS,
    ORDER_VALUE,
    PERIODIC_TABLE,
    MolecularGraph,
    canonical_form,
    connected_components,
    element_counts,
    make_graph,
)
from .netcore import Hypergraph, Vertex

#: hard valence ceilings enforced on every rewritten molecule
VALENCE_CAP = {"C": 4, "N": 3, "O": 2, "H": 1}


class RuleError(ValueError):
    """Raised for malformed rule text; carries a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RuleApplicationError(Exception):
    """A match exists but rewriting it would produce an invalid molecule."""


@dataclass(frozen=True, order=True)
class PatternAtom:
    id: int
    label: str


@dataclass(frozen=True, order=True)
class PatternBond:
    a: int
    b: int
    order: str


@dataclass(frozen=True)
class PatternGraph:
    atoms: tuple[PatternAtom, ...]
    bonds: tuple[PatternBond, ...]

    def __post_init__(self):
        ids = {a.id for a in self.atoms}
        if len(ids) != len(self.atoms):
            raise ValueError("duplicate pattern atom id")
        pairs = set()
        for b in self.bonds:
            if b.order not in BOND_ORDERS:
                raise ValueError(f"bad bond order {b.order!r}")
            if b.a == b.b or b.a not in ids or b.b not in ids:
                raise ValueError(f"bad bond endpoints {b.a}-{b.b}")
            pair = (b.a, b.b) if b.a < b.b else (b.b, b.a)
            if pair in pairs:
                raise ValueError(f"parallel pattern bond {pair[0]}-{pair[1]}")
            pairs.add(pair)

    def adjacency(self) -> dict[int, list[tuple[int, str]]]:
        adj: dict[int, list[tuple[int, str]]] = {a.id: [] for a in self.atoms}
        for b in self.bonds:
            adj[b.a].append((b.b, b.order))
            adj[b.b].append((b.a, b.order))
        return adj

    def component_count(self) -> int:
        adj = self.adjacency()
        unvisited = {a.id for a in self.atoms}
        n = 0
        while unvisited:
            n += 1
            stack = [unvisited.pop()]
            while stack:
                v = stack.pop()
                for u, _ in adj[v]:
                    if u in unvisited:
                        unvisited.discard(u)
                        stack.append(u)
        return n


def _bond_key(b: PatternBond) -> tuple[int, int, str]:
    lo, hi = (b.a, b.b) if b.a < b.b else (b.b, b.a)
    return (lo, hi, b.order)


@dataclass(frozen=True)
class Rule:
    """Span of pattern graphs over one atom set, plus element-class bindings."""

    name: str
    left: PatternGraph
    context: PatternGraph
    right: PatternGraph
    label_classes: dict[str, tuple[str, ...]] = field(default_factory=dict)
    reversible: bool = False

    def __post_init__(self):
        left_ids = {a.id: a.label for a in self.left.atoms}
        for side, pattern in (("context", self.context), ("right", self.right)):
            labels = {a.id: a.label for a in pattern.atoms}
            if labels != left_ids:
                raise ValueError(f"{side} atoms of rule {self.name!r} differ from left")
        left_bonds = {_bond_key(b) for b in self.left.bonds}
        right_bonds = {_bond_key(b) for b in self.right.bonds}
        for b in self.context.bonds:
            if _bond_key(b) not in left_bonds or _bond_key(b) not in right_bonds:
                raise ValueError(
                    f"context bond {b.a}-{b.b} of rule {self.name!r} must appear on both sides"
                )
        for cls, elements in self.label_classes.items():
            if not elements:
                raise ValueError(f"class {cls!r} of rule {self.name!r} is empty")
            for el in elements:
                if el not in PERIODIC_TABLE:
                    raise ValueError(f"class {cls!r} lists unknown element {el!r}")
        for atom in self.left.atoms:
            if atom.label not in self.label_classes and atom.label not in PERIODIC_TABLE:
                raise ValueError(
                    f"label {atom.label!r} in rule {self.name!r} is neither an element nor a class"
                )

    def allowed_elements(self, label: str) -> tuple[str, ...]:
        if label in self.label_classes:
            return self.label_classes[label]
        return (label,)


def reverse_rule(rule: Rule) -> Rule:
    """Swap the two sides; the interface and classes are unchanged."""
    return Rule(
        name=f"{rule.name}-rev",
        left=rule.right,
        context=rule.context,
        right=rule.left,
        label_classes=rule.label_classes,
        reversible=rule.reversible,
    )


# ---------------------------------------------------------------------------
# Rule DSL

_CLASS_RE = re.compile(r"^classes:\s*(\w+)\s*=\s*\{([^}]*)\}$")


def parse_rules(text: str) -> list[Rule]:
    """Parse one or more rules from their text form.

    Grammar per rule: a ``rule <name>`` line, optional ``classes: X = {A, B}``
    lines, a ``left:`` section of atom/bond lines, optional ``context:`` and
    ``right:`` bond sections, and an optional bare ``reversible`` line.
    Atoms are declared once under ``left:`` and shared by all three patterns.
    """
    rules: list[Rule] = []
    name: str | None = None
    classes: dict[str, tuple[str, ...]] = {}
    atoms: list[PatternAtom] = []
    bonds: dict[str, list[PatternBond]] = {"left": [], "context": [], "right": []}
    section: str | None = None
    reversible = False
    start_line = 0

    def flush(ln: int):
        nonlocal name, classes, atoms, bonds, section, reversible
        if name is None:
            return
        if not atoms:
            raise RuleError(f"rule {name!r} declares no atoms", start_line)
        atom_tuple = tuple(sorted(atoms))
        try:
            rule = Rule(
                name=name,
                left=PatternGraph(atom_tuple, tuple(sorted(bonds["left"]))),
                context=PatternGraph(atom_tuple, tuple(sorted(bonds["context"]))),
                right=PatternGraph(atom_tuple, tuple(sorted(bonds["right"]))),
                label_classes=dict(classes),
                reversible=reversible,
            )
        except ValueError as exc:
            raise RuleError(str(exc), start_line) from None
        rules.append(rule)
        name, classes, atoms = None, {}, []
        bonds = {"left": [], "context": [], "right": []}
        section, reversible = None, False

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("rule "):
            flush(ln)
            name = line[5:].strip()
            if not name:
                raise RuleError("rule needs a name", ln)
            start_line = ln
            continue
        if name is None:
            raise RuleError(f"statement outside any rule: {line!r}", ln)
        m = _CLASS_RE.match(line)
        if m:
            cls = m.group(1)
            elements = tuple(e.strip() for e in m.group(2).split(",") if e.strip())
            if cls in classes:
                raise RuleError(f"class {cls!r} declared twice", ln)
            classes[cls] = elements
            continue
        if line in ("left:", "context:", "right:"):
            section = line[:-1]
            continue
        if line == "reversible":
            reversible = True
            continue
        fields = line.split()
        if fields[0] == "atom":
            if section != "left":
                raise RuleError("atoms must be declared in the left: section", ln)
            if len(fields) != 3:
                raise RuleError("atom line needs 'atom <id> <label>'", ln)
            try:
                pid = int(fields[1])
            except ValueError:
                raise RuleError(f"bad atom id {fields[1]!r}", ln) from None
            atoms.append(PatternAtom(pid, fields[2]))
            continue
        if fields[0] == "bond":
            if section is None:
                raise RuleError("bond line outside left:/context:/right:", ln)
            if len(fields) != 4:
                raise RuleError("bond line needs 'bond <id1> <id2> <order>'", ln)
            try:
                a, b = int(fields[1]), int(fields[2])
            except ValueError:
                raise RuleError("bond endpoints must be atom ids", ln) from None
            if fields[3] not in BOND_ORDERS:
                raise RuleError(f"bond order must be one of 1,2,3,a not {fields[3]!r}", ln)
            bonds[section].append(PatternBond(a, b, fields[3]))
            continue
        raise RuleError(f"unrecognized statement {line!r}", ln)
    flush(len(text.splitlines()) + 1)
    if not rules:
        raise RuleError("no rules found")
    return rules


def parse_rule(text: str) -> Rule:
    rules = parse_rules(text)
    if len(rules) != 1:
        raise RuleError(f"expected a single rule, found {len(rules)}")
    return rules[0]


def default_rules_text() -> str:
    return resources.files("hyperpath").joinpath("data/rules_default.dsl").read_text()


def load_default_rules() -> list[Rule]:
    return parse_rules(default_rules_text())


# ---------------------------------------------------------------------------
# Matching

Node = tuple[int, int]  # (copy index, atom id) in a disjoint union of hosts


@dataclass
class Match:
    assignment: dict[int, Node]
    class_binding: dict[str, str]


class _Union:
    """Disjoint union of host molecules with copy-indexed atom handles."""

    def __init__(self, hosts: tuple[MolecularGraph, ...]):
        self.hosts = hosts
        self.elements: dict[Node, str] = {}
        self.charges: dict[Node, int] = {}
        self.adjacency: dict[Node, list[tuple[Node, str]]] = {}
        self.bond_order: dict[tuple[Node, Node], str] = {}
        for copy, host in enumerate(hosts):
            for atom in host.atoms:
                node = (copy, atom.id)
                self.elements[node] = atom.element
                self.charges[node] = atom.charge
                self.adjacency[node] = []
            for bond in host.bonds:
                u, v = (copy, bond.a), (copy, bond.b)
                self.adjacency[u].append((v, bond.order))
                self.adjacency[v].append((u, bond.order))
                self.bond_order[self._pair(u, v)] = bond.order

    @staticmethod
    def _pair(u: Node, v: Node) -> tuple[Node, Node]:
        return (u, v) if u < v else (v, u)

    def order_between(self, u: Node, v: Node) -> str | None:
        return self.bond_order.get(self._pair(u, v))


def _pattern_order(rule: Rule, union: _Union) -> list[int]:
    # rarest label first, then greedily extend along pattern bonds so that
    # each later atom is checked against as many placed neighbors as possible
    candidates = {}
    for atom in rule.left.atoms:
        allowed = set(rule.allowed_elements(atom.label))
        candidates[atom.id] = sum(1 for el in union.elements.values() if el in allowed)
    adj = rule.left.adjacency()
    remaining = {a.id for a in rule.left.atoms}
    order: list[int] = []
    placed: set[int] = set()
    while remaining:
        def rank(pid: int):
            linked = sum(1 for u, _ in adj[pid] if u in placed)
            return (-linked, candidates[pid], pid)

        best = min(remaining, key=rank)
        order.append(best)
        placed.add(best)
        remaining.discard(best)
    return order


def find_matches(rule: Rule, hosts: tuple[MolecularGraph, ...]) -> list[Match]:
    """All injective label-compatible embeddings of the rule's left side.

    Pattern bonds must map onto host bonds with the same order token; extra
    host bonds between matched atoms are allowed.  Atoms sharing a class
    label bind one element consistently, and every host molecule of the
    multiset must receive at least one pattern atom.
    """
    union = _Union(hosts)
    order = _pattern_order(rule, union)
    adj = rule.left.adjacency()
    atom_label = {a.id: a.label for a in rule.left.atoms}
    matches: list[Match] = []
    assignment: dict[int, Node] = {}
    used: set[Node] = set()
    binding: dict[str, str] = {}

    def extend(depth: int):
        if depth == len(order):
            copies_hit = {node[0] for node in assignment.values()}
            if len(copies_hit) == len(hosts):
                matches.append(Match(dict(assignment), dict(binding)))
            return
        pid = order[depth]
        label = atom_label[pid]
        is_class = label in rule.label_classes
        if is_class and label in binding:
            allowed = (binding[label],)
        else:
            allowed = rule.allowed_elements(label)
        placed_neighbors = [(u, o) for u, o in adj[pid] if u in assignment]
        for node in sorted(union.elements):
            if node in used or union.elements[node] not in allowed:
                continue
            ok = True
            for other, want in placed_neighbors:
                if union.order_between(node, assignment[other]) != want:
                    ok = False
                    break
            if not ok:
                continue
            assignment[pid] = node
            used.add(node)
            fresh_binding = is_class and label not in binding
            if fresh_binding:
                binding[label] = union.elements[node]
            extend(depth + 1)
            if fresh_binding:
                del binding[label]
            del assignment[pid]
            used.discard(node)

    extend(0)
    return matches


@dataclass(frozen=True)
class DerivationRecord:
    """Provenance of one reaction edge produced by a rule application."""

    rule: str
    class_binding: tuple[tuple[str, str], ...]
    reactant_keys: tuple[bytes, ...]
    product_keys: tuple[bytes, ...]


def apply_rule(
    rule: Rule, match: Match, hosts: tuple[MolecularGraph, ...]
) -> tuple[list[MolecularGraph], DerivationRecord]:
    """Rewrite the matched bonds, returning the product molecules.

    Raises RuleApplicationError when the rewrite would create a parallel
    bond or push an atom past its valence ceiling.
    """
    union = _Union(hosts)
    nodes = sorted(union.elements)
    index = {node: i for i, node in enumerate(nodes)}
    atoms = [(index[n], union.elements[n], union.charges[n]) for n in nodes]
    bonds: dict[tuple[int, int], str] = {}
    for (u, v), order in union.bond_order.items():
        i, j = index[u], index[v]
        bonds[(min(i, j), max(i, j))] = order

    def edge(p: int, q: int) -> tuple[int, int]:
        i, j = index[match.assignment[p]], index[match.assignment[q]]
        return (min(i, j), max(i, j))

    for b in rule.left.bonds:
        del bonds[edge(b.a, b.b)]
    for b in rule.right.bonds:
        key = edge(b.a, b.b)
        if key in bonds:
            raise RuleApplicationError(
                f"rule {rule.name!r} would create a parallel bond {key[0]}-{key[1]}"
            )
        bonds[key] = b.order

    valence: dict[int, float] = {i: 0.0 for i, _, _ in atoms}
    for (i, j), order in bonds.items():
        valence[i] += ORDER_VALUE[order]
        valence[j] += ORDER_VALUE[order]
    for i, element, _ in atoms:
        cap = VALENCE_CAP.get(element)
        if cap is not None and valence[i] > cap + 1e-9:
            raise RuleApplicationError(
                f"rule {rule.name!r} would exceed the valence of {element} (atom {i})"
            )

    result = make_graph(atoms, [(i, j, order) for (i, j), order in bonds.items()])
    products = connected_components(result)
    record = DerivationRecord(
        rule=rule.name,
        class_binding=tuple(sorted(match.class_binding.items())),
        reactant_keys=tuple(sorted(canonical_form(h).key for h in hosts)),
        product_keys=tuple(sorted(canonical_form(p).key for p in products)),
    )
    return products, record


# ---------------------------------------------------------------------------
# Right-side admissibility predicates


def _min_cycle_length(graph: MolecularGraph) -> int | None:
    adj = graph.adjacency()
    best: int | None = None
    for bond in graph.bonds:
        # shortest alternative path between the endpoints closes the
        # smallest cycle through this bond
        dist = {bond.a: 0}
        frontier = [bond.a]
        while frontier and bond.b not in dist:
            nxt = []
            for v in frontier:
                for u, _ in adj[v]:
                    if v == bond.a and u == bond.b:
                        continue
                    if u not in dist:
                        dist[u] = dist[v] + 1
                        nxt.append(u)
            frontier = nxt
        if bond.b in dist:
            cycle = dist[bond.b] + 1
            if best is None or cycle < best:
                best = cycle
    return best


def right_predicate_no_small_rings(g: MolecularGraph, max_forbidden_ring: int) -> bool:
    """True when ``g`` contains no cycle of length ``max_forbidden_ring`` or less."""
    cycle = _min_cycle_length(g)
    return cycle is None or cycle > max_forbidden_ring


def right_predicate_no_cumulated_doubles(g: MolecularGraph) -> bool:
    """True when no atom of ``g`` carries two or more double/triple bonds."""
    adj = g.adjacency()
    for atom in g.atoms:
        high = sum(1 for _, order in adj[atom.id] if order in ("2", "3"))
        if high >= 2:
            return False
    return True


def right_predicate(name: str):
    """Look up a product filter by name, e.g. 'no-rings-le=3'."""
    if name == "no-cumulated-doubles":
        return right_predicate_no_cumulated_doubles
    if name.startswith("no-rings-le="):
        try:
            limit = int(name.split("=", 1)[1])
        except ValueError:
            raise ValueError(f"bad ring size in filter {name!r}") from None
        return lambda g: right_predicate_no_small_rings(g, limit)
    raise ValueError(f"unknown product filter {name!r}")


# ---------------------------------------------------------------------------
# Network expansion


@dataclass(frozen=True)
class ExpansionConfig:
    """Seeds plus the knobs bounding a breadth-first expansion."""

    seed_molecules: tuple[MolecularGraph, ...] = ()
    max_iterations: int = 4
    max_element_counts: dict[str, int] | None = None
    right_predicates: tuple[str, ...] = ()
    threads: int = 1


@dataclass
class ExpansionResult:
    """Expanded network plus per-edge provenance and per-iteration sizes."""

    network: Hypergraph
    derivations: dict[int, list[DerivationRecord]]
    history: list[tuple[int, int]]
    iterations_run: int
    reached_fixpoint: bool


def _directional_rules(rules: list[Rule]) -> list[Rule]:
    out = []
    for rule in rules:
        out.append(rule)
        if rule.reversible:
            out.append(reverse_rule(rule))
    return out


def _admissible(graph: MolecularGraph, config: ExpansionConfig, predicates) -> bool:
    if config.max_element_counts:
        counts = element_counts(graph)
        for element, cap in config.max_element_counts.items():
            if counts.get(element, 0) > cap:
                return False
    return all(pred(graph) for pred in predicates)


def _derive(rule: Rule, hosts: tuple[MolecularGraph, ...]):
    """All distinct rewrites of one host multiset under one rule."""
    outcomes = []
    seen: set[tuple[bytes, ...]] = set()
    for match in find_matches(rule, hosts):
        try:
            products, record = apply_rule(rule, match, hosts)
        except RuleApplicationError:
            continue
        if record.product_keys in seen:
            continue
        seen.add(record.product_keys)
        outcomes.append((products, record))
    return outcomes


def run_expansion(config: ExpansionConfig, rules: list[Rule]) -> ExpansionResult:
    """Breadth-first closure of the seed molecules under the rules.

    Each iteration applies every rule (both directions for reversible ones)
    to every not-yet-tried multiset of current molecules, sized from one up
    to the rule's left-side component count.  Products join the network only
    if every product of the application passes the element-count ceilings
    and the right-side predicates; newly found molecules become hosts in the
    next iteration.  Stops early once an iteration adds nothing.
    """
    predicates = [right_predicate(s) for s in config.right_predicates]
    net = Hypergraph()
    for seed in config.seed_molecules:
        net.add_molecule(seed)
    directional = _directional_rules(rules)
    derivations: dict[int, list[DerivationRecord]] = {}
    tried: set[tuple[int, tuple[bytes, ...]]] = set()
    history: list[tuple[int, int]] = []
    iterations_run = 0
    reached_fixpoint = False

    for _ in range(config.max_iterations):
        current: list[Vertex] = list(net.vertices)
        tasks: list[tuple[int, tuple[Vertex, ...]]] = []
        for ri, rule in enumerate(directional):
            for size in range(1, rule.left.component_count() + 1):
                for combo in combinations_with_replacement(current, size):
                    key = (ri, tuple(sorted(v.key for v in combo)))
                    if key in tried:
                        continue
                    tried.add(key)
                    tasks.append((ri, combo))

        def run(task):
            ri, combo = task
            return _derive(directional[ri], tuple(v.graph for v in combo))

        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                all_outcomes = list(pool.map(run, tasks))
        else:
            all_outcomes = [run(t) for t in tasks]

        before = (len(net.vertices), len(net.edges))
        for (ri, combo), outcomes in zip(tasks, all_outcomes):
            for products, record in outcomes:
                if not all(_admissible(p, config, predicates) for p in products):
                    continue
                product_ids = Counter(net.add_molecule(p) for p in products)
                reactant_ids = Counter(v.id for v in combo)
                eid = net.add_reaction(dict(reactant_ids), dict(product_ids))
                derivations.setdefault(eid, [])
                if record not in derivations[eid]:
                    derivations[eid].append(record)
        iterations_run += 1
        history.append((len(net.vertices), len(net.edges)))
        if (len(net.vertices), len(net.edges)) == before:
            reached_fixpoint = True
            break

    return ExpansionResult(net, derivations, history, iterations_run, reached_fixpoint)


def expand_network(config: ExpansionConfig, rules: list[Rule]) -> Hypergraph:
    """Expand the configured seeds under the rules, returning the network."""
    return run_expansion(config, rules).network
