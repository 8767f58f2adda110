"""Datagram delivery: a deterministic in-process channel and a UDP loopback.

Both carry opaque datagrams in order. The UDP path exists to exercise the
codec against a real socket; if sockets are unavailable the caller gets the
in-process channel back with a warning.
"""

from __future__ import annotations

import socket
import warnings
from collections import deque
from typing import Iterable


class InProcessChannel:
    """Ordered, lossless, single-threaded datagram queue."""

    name = "channel"

    def __init__(self):
        self._queue: deque[bytes] = deque()

    def send(self, datagram: bytes) -> None:
        self._queue.append(bytes(datagram))

    def receive(self) -> bytes | None:
        return self._queue.popleft() if self._queue else None

    def close(self) -> None:
        self._queue.clear()


class UdpLoopbackChannel:
    """Datagrams over a loopback UDP socket pair."""

    name = "udp"

    def __init__(self, timeout_s: float = 1.0):
        self._rx = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._rx.bind(("127.0.0.1", 0))
        self._rx.settimeout(timeout_s)
        self._tx = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._addr = self._rx.getsockname()

    def send(self, datagram: bytes) -> None:
        self._tx.sendto(datagram, self._addr)

    def receive(self) -> bytes | None:
        try:
            data, _ = self._rx.recvfrom(65535)
        except socket.timeout:
            return None
        return data

    def close(self) -> None:
        self._tx.close()
        self._rx.close()


def open_channel(kind: str = "channel"):
    """Build the requested transport, falling back to in-process on failure."""
    if kind == "channel":
        return InProcessChannel()
    if kind == "udp":
        try:
            return UdpLoopbackChannel()
        except OSError as exc:
            warnings.warn(f"UDP loopback unavailable ({exc}); using in-process channel")
            return InProcessChannel()
    raise ValueError(f"unknown transport kind {kind!r}")


def roundtrip(channel, datagrams: Iterable[bytes], batch: int = 256) -> list[bytes]:
    """Push datagrams through a channel and collect them on the other side.

    Sends in batches so the UDP socket buffer never has to hold a whole
    clip. Order is preserved by both channel kinds on loopback.
    """
    received: list[bytes] = []
    pending = 0
    for datagram in datagrams:
        channel.send(datagram)
        pending += 1
        if pending >= batch:
            received.extend(_drain(channel, pending))
            pending = 0
    received.extend(_drain(channel, pending))
    return received


def _drain(channel, count: int) -> list[bytes]:
    out = []
    for _ in range(count):
        data = channel.receive()
        if data is None:
            break
        out.append(data)
    return out
