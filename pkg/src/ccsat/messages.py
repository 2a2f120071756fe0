"""Wire messages exchanged by the lookahead and CDCL peers, and the FIFO channel."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Collection, Deque, Generic, List, TypeVar

T = TypeVar("T")


@dataclass(frozen=True)
class DecisionMsg:
    """A new cube: parent cube (``backtrack_level`` literals) extended by ``lit``."""

    cube_id: int
    backtrack_level: int
    lit: int


@dataclass(frozen=True)
class SolvedMsg:
    cube_id: int


class Channel(Generic[T]):
    """Unbounded single-producer/single-consumer FIFO.

    Relies on ``deque.append``/``popleft`` being atomic under the GIL, so one
    producer thread and one consumer thread may use it without a lock.  The
    consumer may peek at the head without removing it.
    """

    def __init__(self, name: str = "", record: bool = False):
        self.name = name
        self._buf: Deque[T] = deque()
        self._record = record
        self.sent: List[T] = []
        self.received: List[T] = []

    def send(self, msg: T) -> None:
        if self._record:
            self.sent.append(msg)
        self._buf.append(msg)

    def empty(self) -> bool:
        return not self._buf

    def __bool__(self) -> bool:
        return bool(self._buf)

    def __len__(self) -> int:
        return len(self._buf)

    def head(self) -> T:
        return self._buf[0]

    def pop(self) -> T:
        msg = self._buf.popleft()
        if self._record:
            self.received.append(msg)
        return msg


class Action(enum.Enum):
    PROCESS = "process"
    DISCARD = "discard"


def discard_stale(msg, path: Collection[int]) -> Action:
    """Decide whether an incoming message is still relevant to the receiver.

    For the lookahead side ``path`` is the id trail of the current node: a
    solved id off the path belongs to a cube that is already closed.  For the
    CDCL side ``path`` is its cube-id stack: a decision whose parent cube is
    longer than the stack extends a cube that was already refuted.
    """
    if isinstance(msg, SolvedMsg):
        return Action.PROCESS if msg.cube_id in path else Action.DISCARD
    if isinstance(msg, DecisionMsg):
        return Action.DISCARD if msg.backtrack_level > len(path) else Action.PROCESS
    raise TypeError(f"unknown message {msg!r}")
