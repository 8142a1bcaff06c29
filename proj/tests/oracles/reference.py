#!/usr/bin/env python3
"""Independent reference computations for values frozen into the C++ tests.

Uses only the Python standard library (hmac, hashlib, zlib, struct) so it
shares no code path with the C++ implementation.
"""
import hashlib
import hmac
import struct
import zlib


def derive_flag(seed: int, scenario_id: int, domain: str) -> str:
    key = struct.pack(">Q", seed)
    msg = b"rctf/flag/v1" + struct.pack(">I", scenario_id) + domain.encode()
    return "RCTF{" + hmac.new(key, msg, hashlib.sha256).hexdigest()[:16] + "}"


def bus_key(seed: int) -> bytes:
    return hmac.new(struct.pack(">Q", seed), b"rctf/bus-key/v1", hashlib.sha256).digest()


def encode_frame(topic: bytes, seq: int, payload: bytes, tag: bytes = b"") -> bytes:
    flags = 1 if tag else 0
    out = b"MBUS" + bytes([1, flags]) + struct.pack(">H", len(topic)) + topic
    out += struct.pack(">Q", seq) + struct.pack(">I", len(payload)) + payload
    return out + tag


def seal(key: bytes, domain_id: int, topic: bytes, seq: int, payload: bytes):
    hdr = struct.pack(">I", domain_id) + struct.pack(">H", len(topic)) + topic + struct.pack(">Q", seq)
    stream = b""
    block = 0
    while len(stream) < len(payload):
        stream += hmac.new(key, b"rctf/ks/v1" + hdr + struct.pack(">I", block), hashlib.sha256).digest()
        block += 1
    cipher = bytes(a ^ b for a, b in zip(payload, stream))
    tag = hmac.new(key, b"rctf/tag/v1" + hdr + cipher, hashlib.sha256).digest()[:8]
    return cipher, tag


def kinematics(ticks: int, dt=0.1, v=1.0, human=1.0):
    x = 0.0
    for _ in range(ticks):
        x += v * dt
    return abs(human - x)


if __name__ == "__main__":
    for i in range(1, 9):
        print(f"derive_flag(42,{i},beacon) = {derive_flag(42, i, 'beacon')}")
    print("derive_flag(7,3,answer) =", derive_flag(7, 3, "answer"))
    print("frame(/t,1,a) =", encode_frame(b"/t", 1, b"a").hex(" "))
    key = bytes(range(32))
    c, t = seal(key, 0, b"/t", 1, b"RCTF{deadbeefcafe1234}")
    print("seal cipher =", c.hex())
    print("seal tag =", t.hex())
    print("sealed frame =", encode_frame(b"/t", 1, c, t).hex())
    print("bus_key(42) =", bus_key(42).hex())
    line = b'{"body":{},"kind":"x","seq":1,"ts":0}'
    print("crc32(line) = %08x" % zlib.crc32(line))
    for n in (8, 9):
        print(f"distance after {n} ticks = {kinematics(n)!r}")
