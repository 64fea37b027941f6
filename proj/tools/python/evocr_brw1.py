"""BRW1 weight files and the reconstruction U-Net in torch.

Layout (little endian): b"BRW1", u32 version, u32 layer count, then per layer
u16 name length, name, u8 rank, u32 dims, f32 data; a trailing u32 CRC-32 of
everything before it.
"""

import struct
import zlib
from collections import OrderedDict

import torch
import torch.nn as nn
import torch.nn.functional as F

MAGIC = b"BRW1"
VERSION = 1
IN_CHANNELS, HEIGHT, WIDTH = 4, 100, 200

BLOCKS = [
    ("enc1", IN_CHANNELS, 16),
    ("enc2", 16, 32),
    ("enc3", 32, 64),
    ("bottleneck", 64, 128),
    ("dec3", 128 + 64, 64),
    ("dec2", 64 + 32, 32),
    ("dec1", 32 + 16, 16),
]


class WeightsError(ValueError):
    pass


def layer_specs():
    specs = []
    for name, cin, cout in BLOCKS:
        specs += [(f"{name}.conv1.weight", (cout, cin, 3, 3)), (f"{name}.conv1.bias", (cout,)),
                  (f"{name}.conv2.weight", (cout, cout, 3, 3)), (f"{name}.conv2.bias", (cout,))]
    specs += [("head.weight", (1, 16, 1, 1)), ("head.bias", (1,))]
    return specs


def load_brw1(data: bytes) -> "OrderedDict[str, torch.Tensor]":
    if len(data) < 4:
        raise WeightsError("truncated: shorter than the magic")
    if data[:4] != MAGIC:
        raise WeightsError("bad magic")
    pos = 4

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise WeightsError("truncated")
        out = data[pos:pos + n]
        pos += n
        return out

    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise WeightsError(f"unsupported version {version}")
    layers = OrderedDict()
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{rank}I", take(4 * rank))
        n = 1
        for d in dims:
            n *= d
        values = struct.unpack(f"<{n}f", take(4 * n))
        layers[name] = torch.tensor(values, dtype=torch.float32).reshape(dims)
    payload_end = pos
    (crc,) = struct.unpack("<I", take(4))
    if pos != len(data):
        raise WeightsError("trailing bytes after checksum")
    if zlib.crc32(data[:payload_end]) != crc:
        raise WeightsError("checksum mismatch")
    expected = layer_specs()
    got = [(k, tuple(v.shape)) for k, v in layers.items()]
    if got != expected:
        raise WeightsError("layer names or shapes differ from the U-Net")
    return layers


def save_brw1(layers) -> bytes:
    out = bytearray(MAGIC)
    out += struct.pack("<II", VERSION, len(layers))
    for name, t in layers.items():
        raw = name.encode("utf-8")
        dims = tuple(t.shape)
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<B", len(dims)) + struct.pack(f"<{len(dims)}I", *dims)
        out += struct.pack(f"<{t.numel()}f", *t.detach().to(torch.float32).reshape(-1).tolist())
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


class Block(nn.Module):
    def __init__(self, cin, cout):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)

    def forward(self, x):
        return F.relu(self.conv2(F.relu(self.conv1(x))))


def up_concat(low, skip):
    up = F.interpolate(low, scale_factor=2, mode="nearest")
    return torch.cat([up[:, :, :skip.shape[2], :skip.shape[3]], skip], dim=1)


class UNet(nn.Module):
    def __init__(self):
        super().__init__()
        for name, cin, cout in BLOCKS:
            setattr(self, name, Block(cin, cout))
        self.head = nn.Conv2d(16, 1, 1)

    def forward(self, x):
        """Voxel grid [N,4,100,200] -> ink probability [N,1,100,200]."""
        pool = lambda t: F.max_pool2d(t, 2, ceil_mode=True)
        e1 = self.enc1(x)
        e2 = self.enc2(pool(e1))
        e3 = self.enc3(pool(e2))
        b = self.bottleneck(pool(e3))
        d3 = self.dec3(up_concat(b, e3))
        d2 = self.dec2(up_concat(d3, e2))
        d1 = self.dec1(up_concat(d2, e1))
        return torch.sigmoid(self.head(d1))

    def load_brw1(self, data: bytes):
        self.load_state_dict(load_brw1(data))
        return self

    def to_brw1(self) -> bytes:
        state = self.state_dict()
        return save_brw1(OrderedDict((k, state[k]) for k, _ in layer_specs()))
