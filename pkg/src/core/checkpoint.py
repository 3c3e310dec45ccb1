"""Checkpoint container and its binary layout.

All integers and floats are little-endian:

    "FAAE" | u16 version | str config
    u32 networks  { str name | str spec_json | u32 n {str name | tensor} (params)
                                             | u32 n {str name | tensor} (buffers) }
    u32 states    { str phase | u64 t | f64 beta1 | f64 beta2 | f64 eps
                    | u32 n {str name | tensor m | tensor v} }
    u64 rng seed | u64 rng state
    u32 CRC-32 of every preceding byte

    str    = u32 byte length | UTF-8 bytes
    tensor = u32 ndim | u32 dims... | f32 values, row-major
"""
from __future__ import annotations

import struct
import zlib
from collections import OrderedDict
from typing import Optional

import numpy as np

from src.core.network import Network
from src.core.optim import AdamState
from src.core.priors import Rng
from src.models.base import NetworkRole
from src.utils.errors import CheckpointError

MAGIC = b"FAAE"
FORMAT_VERSION = 0
_DISCRIMINATOR_ROLES = (
    NetworkRole.DISCRIMINATOR.value,
    NetworkRole.LATENT_DISCRIMINATOR.value,
    NetworkRole.JOINT_DISCRIMINATOR.value,
)


class _Writer:
    def __init__(self) -> None:
        self.buf = bytearray()

    def pack(self, fmt: str, *values: object) -> None:
        self.buf += struct.pack("<" + fmt, *values)

    def string(self, text: str) -> None:
        data = text.encode("utf-8")
        self.pack("I", len(data))
        self.buf += data

    def tensor(self, array: np.ndarray) -> None:
        self.pack("I", array.ndim)
        for d in array.shape:
            self.pack("I", d)
        self.buf += np.ascontiguousarray(array, dtype="<f4").tobytes()


class _Reader:
    def __init__(self, data: bytes, pos: int = 0) -> None:
        self.data = data
        self.pos = pos

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise CheckpointError("layout", "unexpected end of data")
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        fmt = "<" + fmt
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def u32(self) -> int:
        return int(self.unpack("I")[0])

    def string(self) -> str:
        try:
            return self.take(self.u32()).decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointError("layout", f"invalid UTF-8 text: {e}") from e

    def tensor(self) -> np.ndarray:
        shape = tuple(self.u32() for _ in range(self.u32()))
        count = int(np.prod(shape)) if shape else 1
        return np.frombuffer(self.take(4 * count), dtype="<f4").reshape(shape).astype(np.float32)


class Checkpoint:
    """Networks, optimizer states, run Rng and the config text of one run"""

    def __init__(
        self,
        config_text: str,
        networks: dict[str, Network],
        optimizer_states: Optional[dict[str, AdamState]] = None,
        rng: Optional[Rng] = None,
        version: int = FORMAT_VERSION,
    ):
        self.config_text = config_text
        self.networks: OrderedDict[str, Network] = OrderedDict(networks)
        self.optimizer_states: OrderedDict[str, AdamState] = OrderedDict(optimizer_states or {})
        self.rng = rng or Rng(0)
        self.version = version

    def network(self, name: str) -> Network:
        if name not in self.networks:
            raise CheckpointError("networks", f"no network named '{name}'")
        return self.networks[name]

    @property
    def generator(self) -> Network:
        return self.network(NetworkRole.GENERATOR.value)

    @property
    def encoder(self) -> Network:
        return self.network(NetworkRole.ENCODER.value)

    @property
    def discriminator(self) -> Network:
        for role in _DISCRIMINATOR_ROLES:
            if role in self.networks:
                return self.networks[role]
        raise CheckpointError("networks", "no discriminator stored")

    # -- encoding ----------------------------------------------------------
    def to_bytes(self) -> bytes:
        w = _Writer()
        w.buf += MAGIC
        w.pack("H", self.version)
        w.string(self.config_text)

        w.pack("I", len(self.networks))
        for name, net in self.networks.items():
            w.string(name)
            w.string(net.spec_json())
            w.pack("I", len(net.params))
            for key, tensor in net.params.items():
                w.string(key)
                w.tensor(tensor.data)
            w.pack("I", len(net.buffers))
            for key, buf in net.buffers.items():
                w.string(key)
                w.tensor(buf)

        w.pack("I", len(self.optimizer_states))
        for phase, state in self.optimizer_states.items():
            w.string(phase)
            w.pack("Qddd", state.t, state.beta1, state.beta2, state.eps)
            w.pack("I", len(state.m))
            for key in state.m:
                w.string(key)
                w.tensor(state.m[key])
                w.tensor(state.v[key])

        w.pack("QQ", self.rng.seed, self.rng.state)
        w.pack("I", zlib.crc32(bytes(w.buf)) & 0xFFFFFFFF)
        return bytes(w.buf)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Checkpoint":
        """Validate magic, version and checksum, then rebuild everything"""
        if len(data) < 4 or data[:4] != MAGIC:
            raise CheckpointError("magic", f"expected {MAGIC!r}, found {bytes(data[:4])!r}")
        if len(data) < 6:
            raise CheckpointError("checksum", "file truncated")
        (version,) = struct.unpack("<H", data[4:6])
        if version > FORMAT_VERSION:
            raise CheckpointError("version", f"file version {version} is newer than supported {FORMAT_VERSION}")
        if len(data) < 10:
            raise CheckpointError("checksum", "file truncated")
        (stored,) = struct.unpack("<I", data[-4:])
        if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored:
            raise CheckpointError("checksum", "CRC-32 mismatch (corrupt or truncated file)")

        r = _Reader(data[:-4], 6)
        config_text = r.string()

        networks: OrderedDict[str, Network] = OrderedDict()
        for _ in range(r.u32()):
            name = r.string()
            net = Network.from_spec_json(name, r.string())
            params = {r.string(): r.tensor() for _ in range(r.u32())}
            buffers = {r.string(): r.tensor() for _ in range(r.u32())}
            net.load_arrays(params, buffers)
            networks[name] = net

        states: OrderedDict[str, AdamState] = OrderedDict()
        for _ in range(r.u32()):
            phase = r.string()
            t, beta1, beta2, eps = r.unpack("Qddd")
            state = AdamState(beta1, beta2, eps)
            state.t = int(t)
            for _ in range(r.u32()):
                key = r.string()
                state.m[key] = r.tensor()
                state.v[key] = r.tensor()
            states[phase] = state

        seed, rng_state = r.unpack("QQ")
        if r.pos != len(r.data):
            raise CheckpointError("layout", f"{len(r.data) - r.pos} trailing bytes")
        try:
            rng = Rng.from_state(seed, rng_state)
        except ValueError as e:
            raise CheckpointError("rng", str(e)) from e
        return cls(config_text, networks, states, rng, version)
