"""Fixed-point emulation of the detector core and its cost model."""

from .cost import CostReport, cost_report
from .fixed import Fixed32
from .machine import (
    PREDICT_PACKET,
    TRAIN_PACKET,
    CoreState,
    core_step,
    ff_packet,
    input_packets,
    model_packets,
    run,
)
from .packet import Mode, Packet, decode_packet, encode_packet, read_trace, write_trace

__all__ = [
    "CoreState", "CostReport", "Fixed32", "Mode", "Packet", "PREDICT_PACKET", "TRAIN_PACKET",
    "core_step", "cost_report", "decode_packet", "encode_packet", "ff_packet", "input_packets",
    "model_packets", "read_trace", "run", "write_trace",
]
