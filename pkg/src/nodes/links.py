from src.network.packets import DataPacket
from src.nodes.base import Node


class LinkNode(Node):
    """Relay that forwards every packet it hears to its forward target."""

    kind = "link"

    def receive(self, packet: DataPacket) -> None:
        self.on_receive(packet, self.sim.now)

    def on_receive(self, packet: DataPacket, now: int) -> None:
        self.forward(packet)
