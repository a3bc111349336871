"""
Consensus phase
Robots exchange time, payload and timestamp matrices and merge them task by
task, keeping whichever row meets the demand first and starts earliest
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import structlog

from belief import AgentBelief, compare_quality, quality
from errors import ProtocolError
from scenario import Scenario

logger = structlog.get_logger(__name__)

KEEP = "keep"
ADOPT = "adopt"
REAFFIRM = "reaffirm"


@dataclass(frozen=True)
class ConsensusMessage:
    sender: int
    times: np.ndarray
    alloc_a: np.ndarray
    alloc_b: np.ndarray
    timestamps: np.ndarray

    def to_bytes(self) -> bytes:
        """Canonical encoding: header, then times, alloc A, alloc B row-major, then timestamps"""
        n_t, n_r = self.times.shape
        header = struct.pack("<qqq", self.sender, n_t, n_r)
        return b"".join([
            header,
            np.ascontiguousarray(self.times, dtype="<f8").tobytes(),
            np.ascontiguousarray(self.alloc_a, dtype="<f8").tobytes(),
            np.ascontiguousarray(self.alloc_b, dtype="<f8").tobytes(),
            np.ascontiguousarray(self.timestamps, dtype="<i8").tobytes(),
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> "ConsensusMessage":
        sender, n_t, n_r = struct.unpack_from("<qqq", data)
        offset = struct.calcsize("<qqq")
        size = n_t * n_r
        matrices = []
        for _ in range(3):
            matrices.append(np.frombuffer(data, dtype="<f8", count=size, offset=offset).reshape(n_t, n_r).copy())
            offset += size * 8
        timestamps = np.frombuffer(data, dtype="<i8", count=n_t, offset=offset).copy()
        return cls(int(sender), matrices[0], matrices[1], matrices[2], timestamps)


def _frozen(array: np.ndarray) -> np.ndarray:
    copy = array.copy()
    copy.setflags(write=False)
    return copy


def make_message(belief: AgentBelief) -> ConsensusMessage:
    """Snapshot of the sender's matrices"""
    return ConsensusMessage(
        sender=belief.self_id,
        times=_frozen(belief.times),
        alloc_a=_frozen(belief.alloc_a),
        alloc_b=_frozen(belief.alloc_b),
        timestamps=_frozen(belief.timestamps),
    )


def _sender_view(belief: AgentBelief, msg: ConsensusMessage, big_n: float) -> AgentBelief:
    return AgentBelief(
        self_id=msg.sender,
        winners=(msg.times >= 0) & (msg.times < big_n),
        times=msg.times,
        alloc_a=msg.alloc_a,
        alloc_b=msg.alloc_b,
        timestamps=msg.timestamps,
        capacity_a=belief.capacity_a,
        capacity_b=belief.capacity_b,
        demand_a=belief.demand_a,
        demand_b=belief.demand_b,
        known=belief.known,
        locked=belief.locked,
    )


def _row_key(view: AgentBelief, j: int):
    members = tuple(int(k) for k in np.flatnonzero(view.winners[j]))
    latest = max((float(view.times[j][k]) for k in members), default=math.inf)
    return latest, members, tuple(view.times[j]), tuple(view.alloc_a[j]), tuple(view.alloc_b[j])


def _rows_equal(belief: AgentBelief, msg: ConsensusMessage, j: int) -> bool:
    return (np.array_equal(belief.times[j], msg.times[j])
            and np.array_equal(belief.alloc_a[j], msg.alloc_a[j])
            and np.array_equal(belief.alloc_b[j], msg.alloc_b[j]))


def decide(belief: AgentBelief, sender: AgentBelief, j: int, scenario: Scenario, now: int) -> str:
    """Update rule for task j at the receiver, given the sender's view"""
    c = scenario.constants
    me, other = belief.self_id, sender.self_id
    mine = belief.times[j][me] >= 0
    theirs = sender.times[j][other] >= 0
    s_mine, s_theirs = int(belief.timestamps[j]), int(sender.timestamps[j])

    verdict = compare_quality(quality(sender, j, c.alpha, c.beta), quality(belief, j, c.alpha, c.beta))

    if verdict == 0:
        # pure tie: fresher row wins, then the earliest last arrival, then the lowest member ids
        just_placed = mine and s_mine == now and not sender.winners[j][me]
        if s_theirs != s_mine and not just_placed:
            return ADOPT if s_theirs > s_mine else KEEP
        return ADOPT if _row_key(sender, j) < _row_key(belief, j) else KEEP

    if verdict > 0:
        # never take a worse row; re-stamp ours so it overrides a fresher stale claim
        return REAFFIRM if s_theirs >= s_mine else KEEP

    if not mine and not theirs:
        # <= rather than <: two bystanders holding equally stamped rows must still agree
        return ADOPT if s_mine <= s_theirs else KEEP
    if not mine and theirs:
        return ADOPT
    if mine and not theirs:
        return ADOPT if s_mine < s_theirs else KEEP
    return ADOPT


def receive(belief: AgentBelief, msg: ConsensusMessage, scenario: Scenario,
            now: int) -> Tuple[AgentBelief, bool]:
    """Merge one neighbour's message into this belief"""
    if msg.times.shape != belief.times.shape or msg.timestamps.shape != belief.timestamps.shape:
        logger.error("message_dimension_mismatch", receiver=belief.self_id, sender=msg.sender,
                     expected=belief.times.shape, got=msg.times.shape)
        raise ProtocolError(
            f"message from robot {msg.sender} has shape {msg.times.shape}, expected {belief.times.shape}"
        )

    big_n = scenario.constants.big_n
    sender = _sender_view(belief, msg, big_n)
    me = belief.self_id
    changed = False

    for j in range(belief.n_tasks):
        if belief.locked[j] or not belief.known[j]:
            continue
        if _rows_equal(belief, msg, j):
            belief.timestamps[j] = max(belief.timestamps[j], msg.timestamps[j])
            continue

        action = decide(belief, sender, j, scenario, now)
        if action == ADOPT:
            belief.times[j] = msg.times[j]
            belief.alloc_a[j] = msg.alloc_a[j]
            belief.alloc_b[j] = msg.alloc_b[j]
            belief.winners[j] = sender.winners[j]
            belief.timestamps[j] = max(belief.timestamps[j], msg.timestamps[j])
            if not belief.winners[j][me]:
                belief.drop_task(j)
            changed = True
        elif action == REAFFIRM:
            belief.timestamps[j] = max(now, int(msg.timestamps[j]) + 1)
            changed = True

    return belief, changed
