import json
import logging
from typing import Any, Dict, List, Optional, Set

import networkx as nx

logger = logging.getLogger(__name__)


class ForwardingGraph:
    """Directed graph of who forwards to whom, built from a scenario document."""

    def __init__(self):
        self.graph = nx.DiGraph()

    def add_entity(self, node_id: str, kind: str, **properties: Any) -> str:
        """Add a node. Re-adding an id merges its properties."""
        if self.graph.has_node(node_id):
            self.graph.nodes[node_id].update(properties)
            return node_id
        self.graph.add_node(node_id, kind=kind, **properties)
        return node_id

    def add_relationship(self, source_id: str, target_id: str, relation: str = "forwards") -> bool:
        """Add a directed edge; False when either end is unknown."""
        if not self.graph.has_node(source_id) or not self.graph.has_node(target_id):
            logger.debug(f"Cannot add {relation} edge {source_id} -> {target_id}: node not found")
            return False
        self.graph.add_edge(source_id, target_id, relation=relation)
        return True

    def has(self, node_id: str) -> bool:
        return self.graph.has_node(node_id)

    def kind(self, node_id: str) -> Optional[str]:
        return self.graph.nodes[node_id].get("kind") if self.has(node_id) else None

    def cycles(self, limit: int = 10) -> List[List[str]]:
        if nx.is_directed_acyclic_graph(self.graph):
            return []
        found = []
        for cycle in nx.simple_cycles(self.graph):
            found.append(cycle)
            if len(found) >= limit:
                break
        return found

    def upstream(self, node_id: str) -> Set[str]:
        return nx.ancestors(self.graph, node_id) if self.has(node_id) else set()

    def count_by_kind(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for _, data in self.graph.nodes(data=True):
            counts[data.get("kind", "?")] = counts.get(data.get("kind", "?"), 0) + 1
        return dict(sorted(counts.items()))

    def export_graphml(self, path: str):
        """Export the graph to GraphML format."""
        try:
            # GraphML attributes must be scalars
            g_export = self.graph.copy()
            for _, data in g_export.nodes(data=True):
                for k, v in data.items():
                    if isinstance(v, (dict, list, tuple)):
                        data[k] = json.dumps(v)
            nx.write_graphml(g_export, path)
            logger.info(f"Topology exported to {path}")
        except Exception as e:
            logger.error(f"Failed to export GraphML: {e}")
            raise

    def to_json(self) -> Dict[str, Any]:
        """Return graph as JSON node-link data."""
        return nx.node_link_data(self.graph)

    @classmethod
    def from_spec(cls, spec) -> "ForwardingGraph":
        fg = cls()
        for dc in spec.datacenters:
            fg.add_entity(dc.id, "datacenter")
        for node_id, decl in spec.iot_nodes():
            kind = type(decl).__name__.replace("Model", "").lower()
            fg.add_entity(node_id, kind, location=list(decl.location))
        for node_id, target in forwarding_edges(spec):
            fg.add_relationship(node_id, target)
        return fg


def forwarding_edges(spec) -> List[tuple]:
    """(source, target) for every declared forwarding reference."""
    edges = []
    for node_id, decl in spec.iot_nodes():
        for attr in ("target", "next_hop", "cloud", "iot"):
            target = getattr(decl, attr, None)
            if target:
                edges.append((node_id, target))
    return edges
