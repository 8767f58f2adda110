"""Binary datagram framing for the haptic and visual streams.

Layout (big-endian), deliberately timestamp-free:

    magic "HV" (2) | version u8 (=1) | stream_id u8 | seq u32 | payload_len u16 | payload

Haptic payload: fx, fy, fz as 3 x float32 (12 bytes).
Visual payload: frame_index u32 | box_count u8 | per box:
label u8, x, y, w, h as 4 x float32 (17 bytes each).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Mapping, Sequence

from .vision import BoundingBox, VideoFrame

MAGIC = b"HV"
VERSION = 1
STREAM_HAPTIC = 0
STREAM_VISUAL = 1
MAX_PAYLOAD = 65500
HEADER = struct.Struct(">2sBBIH")
HAPTIC_PAYLOAD = struct.Struct(">fff")
VISUAL_HEAD = struct.Struct(">IB")
VISUAL_BOX = struct.Struct(">Bffff")

DEFAULT_LABEL_CODES: Mapping[str, int] = {"ball": 0, "box": 1}


class PacketError(ValueError):
    """Base class for framing problems."""


class BadMagicError(PacketError):
    pass


class TruncatedPacketError(PacketError):
    pass


class UnknownStreamError(PacketError):
    pass


@dataclass(frozen=True)
class Packet:
    stream_id: int
    seq: int
    payload: bytes

    def __post_init__(self):
        if self.stream_id not in (STREAM_HAPTIC, STREAM_VISUAL):
            raise ValueError(f"stream_id must be 0 or 1, got {self.stream_id}")
        if not 0 <= self.seq <= 0xFFFFFFFF:
            raise ValueError("seq must fit in u32")
        if len(self.payload) > MAX_PAYLOAD:
            raise ValueError(f"payload exceeds {MAX_PAYLOAD} bytes")


def encode_packet(p: Packet) -> bytes:
    return HEADER.pack(MAGIC, VERSION, p.stream_id, p.seq, len(p.payload)) + p.payload


def decode_packet(data: bytes) -> Packet:
    if len(data) < HEADER.size:
        raise TruncatedPacketError(f"datagram shorter than header ({len(data)} bytes)")
    magic, version, stream_id, seq, payload_len = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise PacketError(f"unsupported version {version}")
    if stream_id not in (STREAM_HAPTIC, STREAM_VISUAL):
        raise UnknownStreamError(f"unknown stream_id {stream_id}")
    payload = data[HEADER.size:]
    if len(payload) != payload_len:
        raise TruncatedPacketError(
            f"payload length {len(payload)} does not match header ({payload_len})"
        )
    return Packet(stream_id, seq, payload)


def haptic_packet(seq: int, fx: float, fy: float, fz: float) -> Packet:
    return Packet(STREAM_HAPTIC, seq, HAPTIC_PAYLOAD.pack(fx, fy, fz))


def decode_haptic_payload(payload: bytes) -> tuple[float, float, float]:
    if len(payload) != HAPTIC_PAYLOAD.size:
        raise TruncatedPacketError(
            f"haptic payload must be {HAPTIC_PAYLOAD.size} bytes, got {len(payload)}"
        )
    return HAPTIC_PAYLOAD.unpack(payload)


def visual_packet(
    seq: int,
    frame_index: int,
    boxes: Sequence[BoundingBox],
    label_codes: Mapping[str, int] = DEFAULT_LABEL_CODES,
) -> Packet:
    if len(boxes) > 255:
        raise ValueError("at most 255 boxes per frame")
    parts = [VISUAL_HEAD.pack(frame_index, len(boxes))]
    for box in boxes:
        try:
            code = label_codes[box.label]
        except KeyError:
            raise ValueError(f"no wire code for label {box.label!r}") from None
        parts.append(VISUAL_BOX.pack(code, box.x, box.y, box.w, box.h))
    return Packet(STREAM_VISUAL, seq, b"".join(parts))


def decode_visual_payload(
    payload: bytes,
    label_codes: Mapping[str, int] = DEFAULT_LABEL_CODES,
) -> tuple[int, list[BoundingBox]]:
    if len(payload) < VISUAL_HEAD.size:
        raise TruncatedPacketError("visual payload shorter than its header")
    frame_index, count = VISUAL_HEAD.unpack_from(payload)
    expected = VISUAL_HEAD.size + count * VISUAL_BOX.size
    if len(payload) != expected:
        raise TruncatedPacketError(
            f"visual payload must be {expected} bytes for {count} boxes, got {len(payload)}"
        )
    code_to_label = {v: k for k, v in label_codes.items()}
    boxes = []
    for i in range(count):
        code, x, y, w, h = VISUAL_BOX.unpack_from(payload, VISUAL_HEAD.size + i * VISUAL_BOX.size)
        if code not in code_to_label:
            raise PacketError(f"unknown label code {code}")
        boxes.append(BoundingBox(x, y, w, h, code_to_label[code]))
    return frame_index, boxes


def packets_for_trace(t_forces, start_seq: int = 0) -> list[Packet]:
    """One haptic packet per sample, sequence-numbered in playback order."""
    return [
        haptic_packet(start_seq + i, float(fx), float(fy), float(fz))
        for i, (fx, fy, fz) in enumerate(t_forces)
    ]


def packets_for_frames(
    frames: Sequence[VideoFrame],
    label_codes: Mapping[str, int] = DEFAULT_LABEL_CODES,
    start_seq: int = 0,
) -> list[Packet]:
    return [
        visual_packet(start_seq + i, frame.index, frame.objects, label_codes)
        for i, frame in enumerate(frames)
    ]
