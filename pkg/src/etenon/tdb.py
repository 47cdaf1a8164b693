"""The open block store: public chains, one guarded ciphertext shelf.

Open rows are (pointer, block payload, multi-signature) and anyone may
read them.  Secret entries hold a ciphertext bundle with its own
multi-signature and a coarse access label checked on fetch.  Ingest is
all or nothing: every signature in the batch must verify against its
named roster before anything is stored, and a rejected batch leaves
both memory and the persisted log byte-identical.

Storage order is shuffled after every accepted ingest and on demand; a
shuffle that happens to reproduce the previous order (compared by order
digest) is redrawn, so consecutive layouts always differ once the table
has at least two rows.

Persistence is an append-only JSONL log of accepted ingests plus an
atomically swapped snapshot of the in-memory view.
"""

from __future__ import annotations

import base64
import json
import os
import random
import threading
import uuid

from dataclasses import dataclass
from pathlib import Path

from . import mlabe, musig
from .algebra import GroupSuite, hash_commit
from .errors import EtenonError
from .mlabe import CiphertextBundle, PublicParams
from .musig import MultiSig, SignedMessage
from .tenon import Pointer, Triple


class TdbError(EtenonError):
    """Store misuse or a corrupt persisted state."""


class UnknownEntryError(TdbError):
    """No secret entry under that id."""


class AccessDeniedError(TdbError):
    """Fixed-message denial; carries nothing about the entry."""

    def __init__(self):
        super().__init__("access denied")


@dataclass(frozen=True)
class OpenRow:
    pointer: Pointer
    block: bytes
    sig: MultiSig
    roster_ref: str
    timestamp: int


@dataclass(frozen=True)
class SecretEntry:
    entry_id: str
    ciphertext: CiphertextBundle
    sig: MultiSig
    roster_ref: str
    access_label: str
    timestamp: int


@dataclass(frozen=True)
class IngestResult:
    accepted: bool
    reason: str | None = None


@dataclass(frozen=True)
class TableSnapshot:
    rows: tuple[OpenRow, ...]
    entry_ids: tuple[str, ...]
    order_digest: bytes


def block_payload(text: str, next_pointer: Pointer | None) -> bytes:
    """Canonical byte form of one chain element as stored and signed."""
    doc = {"text": text, "next": str(next_pointer) if next_pointer else None}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def payload_to_triple(row: OpenRow) -> Triple:
    try:
        doc = json.loads(row.block.decode())
        nxt = doc["next"]
        return Triple(
            pointer=row.pointer,
            block=doc["text"],
            next=uuid.UUID(nxt) if nxt else None,
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise TdbError("row %s has a malformed block payload: %s" % (row.pointer, exc))


class TenonDb:
    """In-memory view plus optional on-disk log under ``root``."""

    def __init__(self, pp: PublicParams, root=None):
        self.pp = pp
        self.suite: GroupSuite = pp.suite
        self._pp_bytes = pp.encode()
        self._rows: list[OpenRow] = []
        self._secrets: dict[str, SecretEntry] = {}
        self._rosters: dict[str, tuple] = {}
        self._lock = threading.RLock()
        self._log_lines = 0
        self._root = Path(root) if root is not None else None
        if self._root is not None:
            self._root.mkdir(parents=True, exist_ok=True)
            self._load()

    # ------------------------------------------------------------------
    # digests

    def _row_digest(self, row: OpenRow) -> bytes:
        return SignedMessage(
            kind="block",
            payload=row.block,
            pointer=row.pointer.bytes,
            pp_bytes=self._pp_bytes,
            timestamp=row.timestamp,
        ).digest()

    def _entry_digest(self, entry: SecretEntry) -> bytes:
        return SignedMessage(
            kind="ciphertext",
            payload=mlabe.ct_canonical_bytes(entry.ciphertext),
            pointer=None,
            pp_bytes=self._pp_bytes,
            timestamp=entry.timestamp,
        ).digest()

    def order_digest(self) -> bytes:
        with self._lock:
            return hash_commit(b"".join(row.pointer.bytes for row in self._rows))

    # ------------------------------------------------------------------
    # ingest

    def _verify_batch(self, rows, secret, rosters):
        """Return a rejection reason, or None when everything checks out."""
        known = dict(self._rosters)
        for ref, vks in (rosters or {}).items():
            known[ref] = tuple(vks)
        seen = {row.pointer for row in self._rows}
        for i, row in enumerate(rows):
            where = "row %d (pointer %s)" % (i, row.pointer)
            roster = known.get(row.roster_ref)
            if roster is None:
                return "%s: unknown roster %r" % (where, row.roster_ref)
            if row.pointer in seen:
                return "%s: pointer already present" % where
            seen.add(row.pointer)
            if not musig.verify(self.suite, row.sig, roster, self._row_digest(row)):
                return "%s: signature invalid" % where
        if secret is not None:
            where = "secret entry %r" % secret.entry_id
            if secret.entry_id in self._secrets:
                return "%s: entry id already present" % where
            if secret.ciphertext.suite_name != self.suite.name:
                return "%s: ciphertext suite mismatch" % where
            roster = known.get(secret.roster_ref)
            if roster is None:
                return "%s: unknown roster %r" % (where, secret.roster_ref)
            if not musig.verify(self.suite, secret.sig, roster, self._entry_digest(secret)):
                return "%s: signature invalid" % where
        return None

    def ingest(self, rows, secret: SecretEntry | None = None, rosters=None, rng=None) -> IngestResult:
        """Verify then store a batch; reject without any side effect.

        ``rosters`` maps roster refs to verification-key sequences; refs
        already stored by earlier accepted batches may be reused.  The
        storage order is reshuffled after every accepted batch.
        """
        rows = list(rows)
        with self._lock:
            reason = self._verify_batch(rows, secret, rosters)
            if reason is not None:
                return IngestResult(accepted=False, reason=reason)
            self._append_log(rows, secret, rosters)
            for ref, vks in (rosters or {}).items():
                self._rosters[ref] = tuple(vks)
            self._rows.extend(rows)
            if secret is not None:
                self._secrets[secret.entry_id] = secret
            self.shuffle(rng=rng)
            return IngestResult(accepted=True)

    # ------------------------------------------------------------------
    # reads

    def read_open(self) -> tuple[OpenRow, ...]:
        """The whole open table in its current storage order."""
        with self._lock:
            return tuple(self._rows)

    def find_row(self, pointer: Pointer) -> OpenRow | None:
        with self._lock:
            for row in self._rows:
                if row.pointer == pointer:
                    return row
        return None

    def secret_ids(self) -> tuple[str, ...]:
        with self._lock:
            return tuple(sorted(self._secrets))

    def read_secret(self, entry_id: str, access_label: str) -> SecretEntry:
        """Label-gated fetch; the denial carries a fixed message only."""
        with self._lock:
            entry = self._secrets.get(entry_id)
        if entry is None:
            raise UnknownEntryError("no entry %r" % entry_id)
        if access_label != entry.access_label:
            raise AccessDeniedError()
        return entry

    def roster(self, ref: str) -> tuple:
        with self._lock:
            roster = self._rosters.get(ref)
        if roster is None:
            raise TdbError("unknown roster %r" % ref)
        return roster

    def snapshot(self) -> TableSnapshot:
        with self._lock:
            return TableSnapshot(
                rows=tuple(self._rows),
                entry_ids=tuple(sorted(self._secrets)),
                order_digest=self.order_digest(),
            )

    # ------------------------------------------------------------------
    # shuffling

    def shuffle(self, rng=None) -> None:
        """Redraw the storage order; never keep the previous order when
        more than one row exists."""
        with self._lock:
            if len(self._rows) < 2:
                return
            before = self.order_digest()
            shuffler = rng if rng is not None else random.SystemRandom()
            while True:
                shuffler.shuffle(self._rows)
                if self.order_digest() != before:
                    return

    def start_auto_shuffle(self, interval: float = 30.0, rng=None) -> "ShuffleTimer":
        """Background reshuffle every ``interval`` seconds until stopped."""
        return ShuffleTimer(self, interval, rng)

    # ------------------------------------------------------------------
    # persistence

    def _log_path(self) -> Path:
        return self._root / "log.jsonl"

    def _snapshot_path(self) -> Path:
        return self._root / "snapshot.json"

    def _append_log(self, rows, secret, rosters) -> None:
        self._log_lines += 1
        if self._root is None:
            return
        line = json.dumps(
            {
                "rows": [row_to_json(self.suite, r) for r in rows],
                "secret": secret_to_json(self.suite, secret) if secret else None,
                "rosters": rosters_to_json(rosters or {}),
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        with open(self._log_path(), "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def save_snapshot(self) -> None:
        """Write the full view, replacing any previous snapshot atomically."""
        if self._root is None:
            raise TdbError("store has no root directory")
        with self._lock:
            doc = {
                "log_lines": self._log_lines,
                "rows": [row_to_json(self.suite, r) for r in self._rows],
                "secrets": {
                    entry_id: secret_to_json(self.suite, entry)
                    for entry_id, entry in sorted(self._secrets.items())
                },
                "rosters": rosters_to_json(self._rosters),
            }
        tmp = self._snapshot_path().with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self._snapshot_path())

    def _load(self) -> None:
        start = 0
        snap = self._snapshot_path()
        if snap.exists():
            with open(snap, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            try:
                self._rows = [row_from_json(self.suite, r) for r in doc["rows"]]
                self._secrets = {
                    entry_id: secret_from_json(self.suite, entry)
                    for entry_id, entry in doc["secrets"].items()
                }
                self._rosters = rosters_from_json(self.suite, doc["rosters"])
                start = int(doc["log_lines"])
            except (KeyError, TypeError, ValueError) as exc:
                raise TdbError("corrupt snapshot: %s" % exc) from None
            self._log_lines = start
        log = self._log_path()
        if not log.exists():
            return
        with open(log, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        for line in lines[start:]:
            try:
                doc = json.loads(line)
                rows = [row_from_json(self.suite, r) for r in doc["rows"]]
                secret = (
                    secret_from_json(self.suite, doc["secret"])
                    if doc.get("secret")
                    else None
                )
                rosters = rosters_from_json(self.suite, doc.get("rosters") or {})
            except (KeyError, TypeError, ValueError) as exc:
                raise TdbError("corrupt log line: %s" % exc) from None
            reason = self._verify_batch(rows, secret, rosters)
            if reason is not None:
                raise TdbError("log replay failed verification: %s" % reason)
            self._rosters.update(rosters)
            self._rows.extend(rows)
            if secret is not None:
                self._secrets[secret.entry_id] = secret
            self._log_lines += 1


class ShuffleTimer:
    """Daemon thread reshuffling a store on a fixed period."""

    def __init__(self, db: TenonDb, interval: float, rng=None):
        self._db = db
        self._interval = interval
        self._rng = rng
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self):
        while not self._stop.wait(self._interval):
            self._db.shuffle(rng=self._rng)

    def stop(self):
        self._stop.set()
        self._thread.join()


# ----------------------------------------------------------------------
# JSON forms


def _b64(raw: bytes) -> str:
    return base64.b64encode(raw).decode("ascii")


def _unb64(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"), validate=True)


def row_to_json(suite: GroupSuite, row: OpenRow) -> dict:
    return {
        "pointer": str(row.pointer),
        "block": _b64(row.block),
        "sig": musig.sig_to_json(suite, row.sig),
        "roster_ref": row.roster_ref,
        "t": row.timestamp,
    }


def row_from_json(suite: GroupSuite, obj) -> OpenRow:
    return OpenRow(
        pointer=uuid.UUID(obj["pointer"]),
        block=_unb64(obj["block"]),
        sig=musig.sig_from_json(obj["sig"], suite),
        roster_ref=obj["roster_ref"],
        timestamp=int(obj["t"]),
    )


def secret_to_json(suite: GroupSuite, entry: SecretEntry) -> dict:
    return {
        "entry_id": entry.entry_id,
        "ciphertext": mlabe.ct_to_json(entry.ciphertext),
        "sig": musig.sig_to_json(suite, entry.sig),
        "roster_ref": entry.roster_ref,
        "access_label": entry.access_label,
        "t": entry.timestamp,
    }


def secret_from_json(suite: GroupSuite, obj) -> SecretEntry:
    return SecretEntry(
        entry_id=obj["entry_id"],
        ciphertext=mlabe.ct_from_json(obj["ciphertext"], suite),
        sig=musig.sig_from_json(obj["sig"], suite),
        roster_ref=obj["roster_ref"],
        access_label=obj["access_label"],
        timestamp=int(obj["t"]),
    )


def rosters_to_json(rosters) -> dict:
    return {
        ref: [_b64(vk.encode()) for vk in vks] for ref, vks in sorted(rosters.items())
    }


def rosters_from_json(suite: GroupSuite, obj) -> dict:
    return {
        ref: tuple(suite.decode_g0(_unb64(raw)) for raw in vks)
        for ref, vks in obj.items()
    }
