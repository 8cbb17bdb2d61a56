"""Binary checkpoint format.

Layout (all integers little-endian)::

    magic      8 bytes  b"SUBPLAY\\x00"
    version    u32
    header_len u32, then header_len bytes of UTF-8 JSON
    n_blocks   u32
    per block: name_len u16, name (UTF-8), ndim u8, shape u64 * ndim,
               data as little-endian float64, C order

Round trips are bit-exact.
"""

import io
import json
import os
import struct

import numpy as np

from subplay.learner.agent import AgentLearner
from subplay.learner.mlp import PARAM_NAMES, MlpParams
from subplay.learner.optim import AdamState

MAGIC = b"SUBPLAY\x00"
FORMAT_VERSION = 1
_F64 = np.dtype("<f8")


class CheckpointError(ValueError):
    pass


def dumps(header: dict, blocks: dict) -> bytes:
    out = io.BytesIO()
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    out.write(MAGIC)
    out.write(struct.pack("<II", FORMAT_VERSION, len(head)))
    out.write(head)
    out.write(struct.pack("<I", len(blocks)))
    for name, arr in blocks.items():
        arr = np.asarray(arr, dtype=np.float64)
        raw = name.encode("utf-8")
        out.write(struct.pack("<H", len(raw)))
        out.write(raw)
        out.write(struct.pack("<B", arr.ndim))
        out.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        out.write(np.ascontiguousarray(arr, dtype=_F64).tobytes())
    return out.getvalue()


def loads(data: bytes):
    buf = memoryview(data)
    if bytes(buf[:8]) != MAGIC:
        raise CheckpointError("not a subplay checkpoint (bad magic)")
    version, hlen = struct.unpack_from("<II", buf, 8)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = 16
    header = json.loads(bytes(buf[pos:pos + hlen]).decode("utf-8"))
    pos += hlen
    (n_blocks,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    blocks = {}
    for _ in range(n_blocks):
        (nlen,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        name = bytes(buf[pos:pos + nlen]).decode("utf-8")
        pos += nlen
        (ndim,) = struct.unpack_from("<B", buf, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}Q", buf, pos)
        pos += 8 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(buf, dtype=_F64, count=count, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * count
        blocks[name] = arr
    return header, blocks


def save(path, header: dict, blocks: dict) -> None:
    """Write atomically (temp file + rename)."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(dumps(header, blocks))
    os.replace(tmp, path)


def load(path):
    with open(path, "rb") as fh:
        return loads(fh.read())


def mlp_blocks(prefix: str, params: MlpParams) -> dict:
    return {f"{prefix}/{k}": getattr(params, k) for k in PARAM_NAMES}


def mlp_from_blocks(prefix: str, blocks: dict, head: str) -> MlpParams:
    try:
        return MlpParams(*(blocks[f"{prefix}/{k}"].copy() for k in PARAM_NAMES), head=head)
    except KeyError as exc:
        raise CheckpointError(f"missing block {exc.args[0]}") from None


def learner_blocks(prefix: str, lr: AgentLearner) -> dict:
    blocks = {}
    for net in ("actor", "critic", "actor_target", "critic_target"):
        blocks.update(mlp_blocks(f"{prefix}/{net}", getattr(lr, net)))
    for opt in ("actor_opt", "critic_opt"):
        st = getattr(lr, opt)
        for k in PARAM_NAMES:
            blocks[f"{prefix}/{opt}/m/{k}"] = st.m[k]
            blocks[f"{prefix}/{opt}/v/{k}"] = st.v[k]
        blocks[f"{prefix}/{opt}/t"] = np.array([float(st.t)])
        blocks[f"{prefix}/{opt}/lr"] = np.array([st.lr])
    return blocks


def learner_meta(lr: AgentLearner) -> dict:
    return dict(algorithm=lr.algorithm, agent_index=lr.agent_index, team_size=lr.team_size,
                obs_dim=lr.obs_dim, act_dim=lr.act_dim, gamma=lr.gamma, ema_decay=lr.ema_decay,
                noise_std=lr.noise_std, updates=lr.updates, hidden=lr.actor.hidden)


def learner_from_blocks(prefix: str, blocks: dict, meta: dict) -> AgentLearner:
    nets = {net: mlp_from_blocks(f"{prefix}/{net}", blocks, "tanh" if net.startswith("actor") else "linear")
            for net in ("actor", "critic", "actor_target", "critic_target")}
    opts = {}
    for opt in ("actor_opt", "critic_opt"):
        opts[opt] = AdamState(
            {k: blocks[f"{prefix}/{opt}/m/{k}"].copy() for k in PARAM_NAMES},
            {k: blocks[f"{prefix}/{opt}/v/{k}"].copy() for k in PARAM_NAMES},
            t=int(blocks[f"{prefix}/{opt}/t"][0]), lr=float(blocks[f"{prefix}/{opt}/lr"][0]))
    return AgentLearner(
        nets["actor"], nets["critic"], nets["actor_target"], nets["critic_target"],
        opts["actor_opt"], opts["critic_opt"], meta["algorithm"], meta["agent_index"],
        meta["team_size"], meta["obs_dim"], meta["act_dim"], meta["gamma"], meta["ema_decay"],
        meta["noise_std"], meta["updates"])
