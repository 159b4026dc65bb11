"""Directed multi-hypergraph of molecules and reactions.

Vertices are isomorphism classes of molecular graphs (deduplicated by their
canonical key); hyperedges are reactions holding stoichiometric multiplicities
on both sides.  The module also provides exact integer conservation checks
for hyperflows, JSON round-tripping, and DOT export.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .molgraph import MolecularGraph, canonical_form, element_counts, parse_molecule, serialize_molecule

#: a hyperflow maps edge ids to integers plus ("in", v) / ("out", v) half-edges
HalfEdge = tuple[str, int]


@dataclass(frozen=True)
class Vertex:
    id: int
    key: bytes
    graph: MolecularGraph


@dataclass(frozen=True)
class Hyperedge:
    """One reaction: multiplicities of consumed and produced vertices."""

    id: int
    reactants: dict[int, int]
    products: dict[int, int]
    reverse_of: int | None = None

    def bags(self) -> tuple[tuple[tuple[int, int], ...], tuple[tuple[int, int], ...]]:
        return (
            tuple(sorted(self.reactants.items())),
            tuple(sorted(self.products.items())),
        )


def _freeze(side: dict[int, int]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(side.items()))


@dataclass
class Hypergraph:
    vertices: list[Vertex] = field(default_factory=list)
    edges: list[Hyperedge] = field(default_factory=list)

    def __post_init__(self):
        self._by_key: dict[bytes, int] = {v.key: v.id for v in self.vertices}
        self._by_bags: dict[tuple, int] = {e.bags(): e.id for e in self.edges}

    # -- construction -------------------------------------------------------

    def add_molecule(self, graph: MolecularGraph) -> int:
        """Insert a molecule, returning the existing vertex id when isomorphic."""
        key = canonical_form(graph).key
        if key in self._by_key:
            return self._by_key[key]
        vertex = Vertex(len(self.vertices), key, graph)
        self.vertices.append(vertex)
        self._by_key[key] = vertex.id
        return vertex.id

    def find_vertex(self, graph: MolecularGraph) -> Vertex | None:
        vid = self._by_key.get(canonical_form(graph).key)
        return self.vertices[vid] if vid is not None else None

    def add_reaction(self, reactants: dict[int, int], products: dict[int, int]) -> int:
        """Insert a reaction edge, deduplicating by its two multiplicity bags.

        Returns the edge id.  When the opposite reaction is already present
        the two edges are linked through ``reverse_of`` in both directions.
        """
        reactants = {int(v): int(m) for v, m in reactants.items() if m}
        products = {int(v): int(m) for v, m in products.items() if m}
        if not reactants and not products:
            raise ValueError("a reaction needs at least one reactant or product")
        for vid, mult in list(reactants.items()) + list(products.items()):
            if not (0 <= vid < len(self.vertices)):
                raise ValueError(f"unknown vertex id {vid}")
            if mult <= 0:
                raise ValueError(f"multiplicity for vertex {vid} must be positive")
        bags = (_freeze(reactants), _freeze(products))
        if bags in self._by_bags:
            return self._by_bags[bags]
        edge = Hyperedge(len(self.edges), dict(reactants), dict(products))
        self.edges.append(edge)
        self._by_bags[bags] = edge.id
        swapped = (bags[1], bags[0])
        partner_id = self._by_bags.get(swapped)
        if partner_id is not None:
            partner = self.edges[partner_id]
            if partner.reverse_of is None or partner_id == edge.id:
                self.edges[edge.id] = Hyperedge(edge.id, edge.reactants, edge.products, partner_id)
                if partner_id != edge.id:
                    self.edges[partner_id] = Hyperedge(
                        partner.id, partner.reactants, partner.products, edge.id
                    )
        return edge.id

    # -- hyperflow checks ----------------------------------------------------

    def conservation_violations(self, flow: dict) -> dict[int, int]:
        """Net imbalance per vertex id; empty means the flow is conserved.

        ``flow`` maps edge ids to integer flow values and may also carry
        ``("in", v)`` / ``("out", v)`` half-edge entries for exchange with the
        environment.  All arithmetic is exact integer arithmetic.
        """
        net: Counter[int] = Counter()
        for key in flow:
            if isinstance(key, int) and not (0 <= key < len(self.edges)):
                raise ValueError(f"flow references unknown edge {key}")
        for edge in self.edges:
            f = int(flow.get(edge.id, 0))
            if f < 0:
                raise ValueError(f"negative flow {f} on edge {edge.id}")
            if f == 0:
                continue
            for vid, mult in edge.products.items():
                net[vid] += mult * f
            for vid, mult in edge.reactants.items():
                net[vid] -= mult * f
        for key, value in flow.items():
            if isinstance(key, tuple):
                kind, vid = key
                if not (0 <= vid < len(self.vertices)):
                    raise ValueError(f"flow references unknown vertex {vid}")
                amount = int(value)
                if amount < 0:
                    raise ValueError(f"negative half-edge value on {key}")
                if kind == "in":
                    net[vid] += amount
                elif kind == "out":
                    net[vid] -= amount
                else:
                    raise ValueError(f"bad half-edge kind {kind!r}")
        return {vid: imbalance for vid, imbalance in sorted(net.items()) if imbalance != 0}

    def check_conservation(self, flow: dict) -> bool:
        return not self.conservation_violations(flow)

    @staticmethod
    def support(flow: dict) -> list[int]:
        """Edge ids carrying strictly positive flow, ascending."""
        return sorted(k for k, v in flow.items() if isinstance(k, int) and v > 0)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "vertices": [
                {"id": v.id, "key": v.key.hex(), "mgf": serialize_molecule(v.graph)}
                for v in self.vertices
            ],
            "edges": [
                {
                    "id": e.id,
                    "reactants": {str(v): m for v, m in sorted(e.reactants.items())},
                    "products": {str(v): m for v, m in sorted(e.products.items())},
                    "reverse_of": e.reverse_of,
                }
                for e in self.edges
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Hypergraph":
        vertices = []
        for row in data["vertices"]:
            graph = parse_molecule(row["mgf"])
            key = canonical_form(graph).key
            if key.hex() != row["key"]:
                raise ValueError(f"vertex {row['id']} key does not match its molecule")
            if row["id"] != len(vertices):
                raise ValueError("vertex ids must be contiguous from 0")
            vertices.append(Vertex(row["id"], key, graph))
        edges = []
        for row in data["edges"]:
            if row["id"] != len(edges):
                raise ValueError("edge ids must be contiguous from 0")
            edges.append(
                Hyperedge(
                    row["id"],
                    {int(v): int(m) for v, m in row["reactants"].items()},
                    {int(v): int(m) for v, m in row["products"].items()},
                    row.get("reverse_of"),
                )
            )
        graph = cls(vertices, edges)
        for edge in edges:
            for vid in list(edge.reactants) + list(edge.products):
                if not (0 <= vid < len(vertices)):
                    raise ValueError(f"edge {edge.id} references unknown vertex {vid}")
        return graph

    # -- visualization -------------------------------------------------------

    def to_dot(self, flow: dict | None = None, name: str = "network") -> str:
        """Bipartite DOT drawing: round molecule nodes, square reaction nodes.

        Each unit of stoichiometric multiplicity gets its own arrow.  When a
        flow is given, its support is drawn bold and positive half-edge values
        appear as arrows from/to small environment nodes.
        """
        flow = flow or {}
        support = set(self.support(flow))
        out = [f"digraph {name} {{", "  rankdir=LR;"]
        for v in self.vertices:
            label = f"v{v.id}\\n{_formula(v.graph)}"
            out.append(f'  v{v.id} [shape=circle, label="{label}"];')
        for e in self.edges:
            style = ", penwidth=3" if e.id in support else ""
            out.append(f'  e{e.id} [shape=square, label="e{e.id}"{style}];')
            extra = ", penwidth=3" if e.id in support else ""
            for vid, mult in sorted(e.reactants.items()):
                for _ in range(mult):
                    out.append(f"  v{vid} -> e{e.id} [arrowsize=0.7{extra}];")
            for vid, mult in sorted(e.products.items()):
                for _ in range(mult):
                    out.append(f"  e{e.id} -> v{vid} [arrowsize=0.7{extra}];")
        for key, value in sorted((k, v) for k, v in flow.items() if isinstance(k, tuple)):
            kind, vid = key
            if value <= 0:
                continue
            if kind == "in":
                out.append(f'  env_in_{vid} [shape=point, label=""];')
                out.append(f'  env_in_{vid} -> v{vid} [label="{value}", penwidth=3];')
            else:
                out.append(f'  env_out_{vid} [shape=point, label=""];')
                out.append(f'  v{vid} -> env_out_{vid} [label="{value}", penwidth=3];')
        out.append("}")
        return "\n".join(out) + "\n"


def _formula(graph: MolecularGraph) -> str:
    counts = element_counts(graph)
    parts = []
    for el in ("C", "H"):
        if el in counts:
            n = counts.pop(el)
            parts.append(el + (str(n) if n > 1 else ""))
    for el in sorted(counts):
        n = counts[el]
        parts.append(el + (str(n) if n > 1 else ""))
    return "".join(parts)
