"""Interactive multi-signatures over the source group.

Three rounds between every roster member: hash commitments to nonce
shares, the nonce shares themselves, then partial signatures.  A member
aborts if any revealed share fails its commitment, and no partial
signature leaves a session before every commitment has been checked.
Each signer's challenge binds the whole roster encoding, its own
verification key, the combined nonce and the message, so a signature
pins the exact signer set in order.

The aggregate is one group element and one scalar regardless of the
roster size, verified by checking g^s against RC multiplied by every
VK raised to its own challenge.
"""

from __future__ import annotations

import base64
import enum

from dataclasses import dataclass

from .algebra import G0Element, GroupSuite, hash_commit
from .errors import EtenonError


class MusigError(EtenonError):
    """Protocol misuse: wrong phase, wrong senders, bad roster."""


@dataclass(frozen=True)
class CommitMsg:
    sender: int
    value: bytes


@dataclass(frozen=True)
class RevealMsg:
    sender: int
    value: G0Element


@dataclass(frozen=True)
class PartialSigMsg:
    sender: int
    value: int


@dataclass(frozen=True)
class SessionAbort:
    """Terminal outcome naming the roster index that equivocated."""

    offender: int
    reason: str


@dataclass(frozen=True)
class MultiSig:
    rc: G0Element
    s: int


@dataclass(frozen=True)
class SignedMessage:
    """Digest preimage for a co-signed artifact.

    ``kind`` is ``"block"`` (an EHR block plus its pointer) or
    ``"ciphertext"`` (a canonical ciphertext document).  The digest is
    recomputable from the stored fields alone.
    """

    kind: str
    payload: bytes
    pointer: bytes | None
    pp_bytes: bytes
    timestamp: int

    def digest(self) -> bytes:
        if self.kind not in ("block", "ciphertext"):
            raise MusigError("unknown signed-message kind %r" % (self.kind,))
        if self.kind == "block" and self.pointer is None:
            raise MusigError("block messages need a pointer")
        parts = [self.kind.encode("ascii"), self.payload]
        if self.kind == "block":
            parts.append(self.pointer)
        parts.append(self.pp_bytes)
        parts.append(self.timestamp.to_bytes(8, "big"))
        blob = b"".join(len(p).to_bytes(4, "big") + p for p in parts)
        return hash_commit(b"signed-message" + blob)


class Phase(enum.Enum):
    COMMIT = "commit"
    REVEAL = "reveal"
    PARTIAL = "partial"
    DONE = "done"
    ABORTED = "aborted"


def roster_encoding(roster) -> bytes:
    """Length-prefixed concatenation of the keys in roster order."""
    out = []
    for vk in roster:
        raw = vk.encode()
        out.append(len(raw).to_bytes(4, "big"))
        out.append(raw)
    return b"".join(out)


def challenge(suite: GroupSuite, roster, rc: G0Element, msg: bytes, index: int) -> int:
    """Per-signer challenge scalar."""
    vk_raw = roster[index].encode()
    rc_raw = rc.encode()
    data = (
        roster_encoding(roster)
        + len(vk_raw).to_bytes(4, "big")
        + vk_raw
        + len(rc_raw).to_bytes(4, "big")
        + rc_raw
        + msg
    )
    return suite.hash_challenge(data)


class SignSession:
    """One signer's view of a signing run.  Phases only move forward."""

    def __init__(self, suite: GroupSuite, sk: int, roster, msg: bytes, rng=None):
        self.suite = suite
        self.roster = tuple(roster)
        self.msg = msg
        self._sk = sk
        my_vk = suite.generator ** sk
        matches = [i for i, vk in enumerate(self.roster) if vk == my_vk]
        if not matches:
            raise MusigError("signer's verification key is not in the roster")
        for i, a in enumerate(self.roster):
            for b in self.roster[i + 1:]:
                if a == b:
                    raise MusigError("roster contains duplicate keys")
        self.index = matches[0]
        self._nonce = suite.rand_scalar_nonzero(rng)
        self.rc_own = suite.generator ** self._nonce
        self.commitment = hash_commit(self.rc_own.encode())
        self.phase = Phase.COMMIT
        self._commits: dict[int, bytes] = {}
        self._reveals: dict[int, G0Element] = {}
        self._rc: G0Element | None = None
        self._partial: int | None = None
        self._partials: dict[int, int] = {}

    # ------------------------------------------------------------------

    def _take(self, incoming, msg_type) -> dict[int, object]:
        expected = set(range(len(self.roster))) - {self.index}
        got = {}
        for m in incoming:
            if not isinstance(m, msg_type):
                raise MusigError(
                    "phase %s cannot accept %s" % (self.phase.value, type(m).__name__)
                )
            if m.sender == self.index:
                raise MusigError("received a message attributed to this signer")
            if m.sender not in expected:
                raise MusigError("message from unknown roster index %d" % m.sender)
            if m.sender in got:
                raise MusigError("duplicate message from roster index %d" % m.sender)
            got[m.sender] = m.value
        if set(got) != expected:
            missing = sorted(expected - set(got))
            raise MusigError("missing messages from roster indices %s" % missing)
        return got

    def step(self, incoming=()):
        """Feed one round of messages; returns the next outgoing item.

        Outgoing items in order: a RevealMsg, a PartialSigMsg, then the
        final MultiSig -- or a SessionAbort as soon as a revealed nonce
        share contradicts its commitment.
        """
        if self.phase in (Phase.DONE, Phase.ABORTED):
            raise MusigError("session is finished (%s)" % self.phase.value)

        if self.phase is Phase.COMMIT:
            self._commits = self._take(incoming, CommitMsg)
            self.phase = Phase.REVEAL
            return RevealMsg(sender=self.index, value=self.rc_own)

        if self.phase is Phase.REVEAL:
            self._reveals = self._take(incoming, RevealMsg)
            for sender, rc in sorted(self._reveals.items()):
                if hash_commit(rc.encode()) != self._commits[sender]:
                    self.phase = Phase.ABORTED
                    self._nonce = None
                    return SessionAbort(
                        offender=sender,
                        reason="revealed nonce share does not match its commitment",
                    )
            rc_all = self.rc_own
            for sender in sorted(self._reveals):
                rc_all = rc_all * self._reveals[sender]
            self._rc = rc_all
            ch = challenge(self.suite, self.roster, rc_all, self.msg, self.index)
            self._partial = (self._sk * ch + self._nonce) % self.suite.order
            self._nonce = None
            self.phase = Phase.PARTIAL
            return PartialSigMsg(sender=self.index, value=self._partial)

        # Phase.PARTIAL
        self._partials = self._take(incoming, PartialSigMsg)
        total = self._partial
        for value in self._partials.values():
            total = (total + value) % self.suite.order
        self.phase = Phase.DONE
        return MultiSig(rc=self._rc, s=total)


def start_session(suite: GroupSuite, sk: int, roster, msg: bytes, rng=None):
    """Create a session and its outgoing commitment message."""
    session = SignSession(suite, sk, roster, msg, rng=rng)
    return session, CommitMsg(sender=session.index, value=session.commitment)


def verify(suite: GroupSuite, sig: MultiSig, roster, msg: bytes) -> bool:
    """Check g^s against RC times every key raised to its own challenge."""
    if not roster:
        return False
    rhs = sig.rc
    for i in range(len(roster)):
        ch = challenge(suite, roster, sig.rc, msg, i)
        rhs = rhs * (roster[i] ** ch)
    return (suite.generator ** sig.s) == rhs


def cosign(suite: GroupSuite, secret_keys, msg: bytes, rng=None) -> tuple[MultiSig, tuple]:
    """Drive a full in-process signing run among the given key holders.

    Returns the aggregate signature and the roster (keys in the order
    given).  Raises if any session aborts, which cannot happen among
    honest in-process participants.
    """
    secret_keys = list(secret_keys)
    roster = tuple(suite.generator ** sk for sk in secret_keys)
    sessions = []
    commits = []
    for sk in secret_keys:
        session, commit = start_session(suite, sk, roster, msg, rng=rng)
        sessions.append(session)
        commits.append(commit)

    def fan_out(messages):
        return [
            [m for m in messages if m.sender != s.index]
            for s in sessions
        ]

    reveals = [s.step(batch) for s, batch in zip(sessions, fan_out(commits))]
    partials = []
    for s, batch in zip(sessions, fan_out(reveals)):
        out = s.step(batch)
        if isinstance(out, SessionAbort):
            raise MusigError("honest signing run aborted: %s" % out.reason)
        partials.append(out)
    sigs = [s.step(batch) for s, batch in zip(sessions, fan_out(partials))]
    first = sigs[0]
    for other in sigs[1:]:
        if other.s != first.s or other.rc != first.rc:
            raise MusigError("signers disagree on the aggregate")
    return first, roster


def sig_to_json(suite: GroupSuite, sig: MultiSig) -> dict:
    return {"rc": _b64(sig.rc.encode()), "s": _b64(suite.encode_scalar(sig.s))}


def sig_from_json(obj, suite: GroupSuite) -> MultiSig:
    try:
        return MultiSig(
            rc=suite.decode_g0(_unb64(obj["rc"])),
            s=suite.decode_scalar(_unb64(obj["s"])),
        )
    except (KeyError, TypeError) as exc:
        raise MusigError("malformed signature document: %s" % exc) from None


def _b64(raw: bytes) -> str:
    return base64.b64encode(raw).decode("ascii")


def _unb64(text: str) -> bytes:
    try:
        return base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise MusigError("bad base64 field: %s" % exc) from None
