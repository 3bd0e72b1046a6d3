from src.network.packets import DataPacket
from src.nodes.links import LinkNode


class FogNode(LinkNode):
    """Intermediate compute/forwarding device; routes along the configured next hop."""

    kind = "fog"

    def __init__(self, node_id, connection, mips: float, next_hop: str, **common):
        super().__init__(node_id, connection, forward_target=next_hop, **common)
        self.mips = mips

    @property
    def next_hop(self) -> str:
        return self.forward_target

    def receive(self, packet: DataPacket) -> None:
        self.fog_route(packet, self.sim.now)

    def fog_route(self, packet: DataPacket, now: int) -> None:
        self.forward(packet, self.next_hop)
