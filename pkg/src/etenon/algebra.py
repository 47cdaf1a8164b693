"""Bilinear-group plumbing shared by every protocol module.

Two interchangeable suites implement one interface:

* ``bn256`` -- a 256-bit Barreto-Naehrig curve (vendored, see
  :mod:`etenon._bn256`).  The curve is asymmetric, so a source-group
  element carries up to two representations: a base-curve point usable
  on the left side of the pairing and a twist point usable on the
  right.  Powers of the generator carry both; hashed-to-group elements
  carry only the left side.  The pairing picks whichever orientation is
  available, which is sound because every element is a known power of
  the common generator pair.

* ``mock`` -- exponent arithmetic modulo a small prime.  Group elements
  are their own discrete logs, which makes the exponent algebra of the
  encryption scheme directly checkable; the test suite leans on this.

Scalars are plain ints reduced modulo the suite order.  All randomness
is drawn through ``rand_scalar`` so callers can inject a seeded
``random.Random`` for reproducible runs (the default source is the
``secrets`` module).
"""

from __future__ import annotations

import hashlib
import hmac
import secrets

from contextlib import contextmanager
from dataclasses import dataclass

from . import _bn256
from .errors import EtenonError

_H0_TAG = b"ETN-H0"
_H1_TAG = b"ETN-H1"
_KDF_TAG = b"ETN-KDF"

SEAL_TAG_BYTES = 16


class AlgebraError(EtenonError):
    """Malformed element, bad encoding, or an unusable pairing."""


class IntegrityError(AlgebraError):
    """A sealed payload failed its authenticity check."""


def hash_commit(data: bytes) -> bytes:
    """Commitment/digest hash: SHA-256 under its own domain tag."""
    return hashlib.sha256(_H0_TAG + data).digest()


def _challenge_int(data: bytes) -> int:
    return int.from_bytes(hashlib.sha256(_H1_TAG + data).digest(), "big")


def kdf_stream(key: bytes, context: bytes, length: int) -> bytes:
    """Expand key material into ``length`` keystream bytes bound to a context."""
    out = bytearray()
    counter = 0
    head = _KDF_TAG + len(key).to_bytes(4, "big") + key + context
    while len(out) < length:
        out.extend(hashlib.sha256(head + counter.to_bytes(4, "big")).digest())
        counter += 1
    return bytes(out[:length])


@dataclass
class OpCounters:
    """Tally of group operations recorded inside a ``measure()`` span."""

    exponentiations: int = 0
    multiplications: int = 0
    pairings: int = 0
    hash_calls: int = 0

    def as_dict(self) -> dict:
        return {
            "exponentiations": self.exponentiations,
            "multiplications": self.multiplications,
            "pairings": self.pairings,
            "hash_calls": self.hash_calls,
        }


class G0Element:
    """Source-group element.  Immutable; operators delegate to the suite.

    ``p1``/``p2`` hold the left/right pairing-side payloads; either may
    be ``None`` when that representation is unavailable.
    """

    __slots__ = ("suite", "p1", "p2")

    def __init__(self, suite: "GroupSuite", p1, p2):
        self.suite = suite
        self.p1 = p1
        self.p2 = p2

    def __mul__(self, other: "G0Element") -> "G0Element":
        return self.suite.g0_mul(self, other)

    def __pow__(self, k: int) -> "G0Element":
        return self.suite.g0_exp(self, k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, G0Element):
            return NotImplemented
        return self.suite.g0_eq(self, other)

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    def encode(self) -> bytes:
        return self.suite.encode_g0(self)

    def __repr__(self) -> str:
        return "G0Element(%s, %s)" % (self.suite.name, self.encode().hex()[:16])


class G1Element:
    """Target-group element (pairing output)."""

    __slots__ = ("suite", "value")

    def __init__(self, suite: "GroupSuite", value):
        self.suite = suite
        self.value = value

    def __mul__(self, other: "G1Element") -> "G1Element":
        return self.suite.gt_mul(self, other)

    def __truediv__(self, other: "G1Element") -> "G1Element":
        return self.suite.gt_div(self, other)

    def __pow__(self, k: int) -> "G1Element":
        return self.suite.gt_exp(self, k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, G1Element):
            return NotImplemented
        return self.suite.gt_eq(self, other)

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    def encode(self) -> bytes:
        return self.suite.encode_gt(self)

    def __repr__(self) -> str:
        return "G1Element(%s, %s)" % (self.suite.name, self.encode().hex()[:16])


class GroupSuite:
    """Interface shared by the mock and production suites."""

    name: str
    order: int

    def __init__(self):
        self._span: OpCounters | None = None

    # ------------------------------------------------------------------
    # instrumentation

    @contextmanager
    def measure(self):
        """Collect operation counts for the duration of the span."""
        prev = self._span
        span = OpCounters()
        self._span = span
        try:
            yield span
        finally:
            self._span = prev

    def _tick(self, field: str, n: int = 1) -> None:
        if self._span is not None:
            setattr(self._span, field, getattr(self._span, field) + n)

    # ------------------------------------------------------------------
    # scalars

    @property
    def scalar_bytes(self) -> int:
        return (self.order.bit_length() + 7) // 8

    def rand_scalar(self, rng=None) -> int:
        """Uniform scalar in [0, order); ``rng`` may be a seeded Random."""
        if rng is None:
            return secrets.randbelow(self.order)
        return rng.randrange(self.order)

    def rand_scalar_nonzero(self, rng=None) -> int:
        while True:
            k = self.rand_scalar(rng)
            if k != 0:
                return k

    def encode_scalar(self, k: int) -> bytes:
        if not 0 <= k < self.order:
            raise AlgebraError("scalar out of range")
        return k.to_bytes(self.scalar_bytes, "big")

    def decode_scalar(self, raw: bytes) -> int:
        if len(raw) != self.scalar_bytes:
            raise AlgebraError("scalar encoding has wrong length")
        k = int.from_bytes(raw, "big")
        if k >= self.order:
            raise AlgebraError("scalar encoding out of range")
        return k

    # ------------------------------------------------------------------
    # hashes

    def hash_commit(self, data: bytes) -> bytes:
        """Commitment hash (256-bit byte output)."""
        self._tick("hash_calls")
        return hash_commit(data)

    def hash_challenge(self, data: bytes) -> int:
        """Challenge hash: 256-bit digest reduced modulo the group order."""
        self._tick("hash_calls")
        return _challenge_int(data) % self.order

    def hash_to_group(self, label: bytes | str) -> G0Element:
        if isinstance(label, str):
            label = label.encode("utf-8")
        self._tick("hash_calls")
        return self._hash_to_group(label)

    # ------------------------------------------------------------------
    # source-group arithmetic

    @property
    def generator(self) -> G0Element:
        raise NotImplementedError

    def g0_mul(self, x: G0Element, y: G0Element) -> G0Element:
        self._check(x, y)
        self._tick("multiplications")
        p1 = self._mul_p1(x.p1, y.p1) if (x.p1 is not None and y.p1 is not None) else None
        p2 = self._mul_p2(x.p2, y.p2) if (x.p2 is not None and y.p2 is not None) else None
        if p1 is None and p2 is None:
            raise AlgebraError("operands share no representation")
        return G0Element(self, p1, p2)

    def g0_exp(self, x: G0Element, k: int) -> G0Element:
        self._check(x)
        self._tick("exponentiations")
        k = k % self.order
        p1 = self._exp_p1(x.p1, k) if x.p1 is not None else None
        p2 = self._exp_p2(x.p2, k) if x.p2 is not None else None
        return G0Element(self, p1, p2)

    def g0_eq(self, x: G0Element, y: G0Element) -> bool:
        self._check(x, y)
        if x.p1 is not None and y.p1 is not None:
            return self._eq_p1(x.p1, y.p1)
        if x.p2 is not None and y.p2 is not None:
            return self._eq_p2(x.p2, y.p2)
        raise AlgebraError("elements share no representation")

    # ------------------------------------------------------------------
    # pairing and target-group arithmetic

    def pairing(self, x: G0Element, y: G0Element) -> G1Element:
        """Bilinear map.  Orientation is chosen from the available sides."""
        self._check(x, y)
        self._tick("pairings")
        if x.p1 is not None and y.p2 is not None:
            return G1Element(self, self._pair(x.p1, y.p2))
        if y.p1 is not None and x.p2 is not None:
            return G1Element(self, self._pair(y.p1, x.p2))
        raise AlgebraError("pairing needs a left side and a right side")

    @property
    def gt_generator(self) -> G1Element:
        """e(g, g); cached, it is a fixed public constant of the suite."""
        egg = getattr(self, "_egg", None)
        if egg is None:
            g = self.generator
            egg = G1Element(self, self._pair(g.p1, g.p2))
            self._egg = egg
        return egg

    @property
    def gt_identity(self) -> G1Element:
        raise NotImplementedError

    def gt_mul(self, a: G1Element, b: G1Element) -> G1Element:
        self._tick("multiplications")
        return G1Element(self, self._gt_mul(a.value, b.value))

    def gt_div(self, a: G1Element, b: G1Element) -> G1Element:
        self._tick("multiplications")
        return G1Element(self, self._gt_mul(a.value, self._gt_inv(b.value)))

    def gt_exp(self, a: G1Element, k: int) -> G1Element:
        self._tick("exponentiations")
        return G1Element(self, self._gt_exp(a.value, k % self.order))

    def gt_eq(self, a: G1Element, b: G1Element) -> bool:
        return self._gt_eq(a.value, b.value)

    # ------------------------------------------------------------------
    # sealed payloads

    def seal(self, key: G1Element, payload: bytes, context: bytes) -> bytes:
        """Mask a payload under a target-group key, appending an integrity tag.

        The keystream is derived from the encoded key and the context;
        the tag is the truncated commitment hash of payload and context.
        One seal is tallied as one multiplication: it stands where the
        masking multiplication sits in the scheme's cost model.
        """
        self._tick("multiplications")
        stream = kdf_stream(self.encode_gt(key), context, len(payload))
        masked = bytes(a ^ b for a, b in zip(payload, stream))
        tag = hash_commit(payload + b"|" + context)[:SEAL_TAG_BYTES]
        return masked + tag

    def unseal(self, key: G1Element, blob: bytes, context: bytes) -> bytes:
        """Reverse :meth:`seal`; raises :class:`IntegrityError` on a bad tag."""
        if len(blob) < SEAL_TAG_BYTES:
            raise IntegrityError("sealed payload too short")
        masked, tag = blob[:-SEAL_TAG_BYTES], blob[-SEAL_TAG_BYTES:]
        stream = kdf_stream(self.encode_gt(key), context, len(masked))
        payload = bytes(a ^ b for a, b in zip(masked, stream))
        want = hash_commit(payload + b"|" + context)[:SEAL_TAG_BYTES]
        if not hmac.compare_digest(tag, want):
            raise IntegrityError("sealed payload failed authentication")
        return payload

    # ------------------------------------------------------------------
    # encodings

    def encode_g0(self, x: G0Element) -> bytes:
        self._check(x)
        flags = (1 if x.p1 is not None else 0) | (2 if x.p2 is not None else 0)
        out = bytes([flags])
        if x.p1 is not None:
            out += self._encode_p1(x.p1)
        if x.p2 is not None:
            out += self._encode_p2(x.p2)
        return out

    def decode_g0(self, raw: bytes) -> G0Element:
        if not raw:
            raise AlgebraError("empty element encoding")
        flags = raw[0]
        if flags == 0 or flags > 3:
            raise AlgebraError("bad element flags")
        body = raw[1:]
        p1 = p2 = None
        if flags & 1:
            p1 = self._decode_p1(body[: self._p1_bytes])
            body = body[self._p1_bytes:]
        if flags & 2:
            p2 = self._decode_p2(body[: self._p2_bytes])
            body = body[self._p2_bytes:]
        if body:
            raise AlgebraError("trailing bytes in element encoding")
        return G0Element(self, p1, p2)

    def encode_gt(self, a: G1Element) -> bytes:
        return self._encode_gt(a.value)

    def decode_gt(self, raw: bytes) -> G1Element:
        return G1Element(self, self._decode_gt(raw))

    # ------------------------------------------------------------------
    # oracle hooks (mock suite only)

    def dlog_g0(self, x: G0Element) -> int:
        raise AlgebraError("discrete logs are not available on %s" % self.name)

    def dlog_gt(self, a: G1Element) -> int:
        raise AlgebraError("discrete logs are not available on %s" % self.name)

    # ------------------------------------------------------------------

    def _check(self, *elems) -> None:
        for e in elems:
            if e.suite.name != self.name:
                raise AlgebraError(
                    "element from suite %s used with %s" % (e.suite.name, self.name)
                )


class MockSuite(GroupSuite):
    """Exponent arithmetic modulo a small prime; discrete logs are free.

    A source element stores its exponent in both pairing slots so the
    orientation logic runs exactly as it does on the curve; hashed
    elements keep only the left slot, mirroring production.
    """

    def __init__(self, order: int = 101):
        super().__init__()
        if order < 3 or any(order % d == 0 for d in range(2, int(order ** 0.5) + 1)):
            raise AlgebraError("mock order must be an odd prime")
        self.order = order
        self.name = "mock-%d" % order

    @property
    def generator(self) -> G0Element:
        return G0Element(self, 1, 1)

    @property
    def gt_identity(self) -> G1Element:
        return G1Element(self, 0)

    def _hash_to_group(self, label: bytes) -> G0Element:
        h = int.from_bytes(hash_commit(label), "big") % self.order
        if h == 0:
            h = 1
        return G0Element(self, h, None)

    def _mul_p1(self, a, b):
        return (a + b) % self.order

    _mul_p2 = _mul_p1

    def _exp_p1(self, a, k):
        return (a * k) % self.order

    _exp_p2 = _exp_p1

    def _eq_p1(self, a, b):
        return a == b

    _eq_p2 = _eq_p1

    def _pair(self, p1, p2):
        return (p1 * p2) % self.order

    def _gt_mul(self, a, b):
        return (a + b) % self.order

    def _gt_inv(self, a):
        return (-a) % self.order

    def _gt_exp(self, a, k):
        return (a * k) % self.order

    def _gt_eq(self, a, b):
        return a == b

    @property
    def _p1_bytes(self):
        return self.scalar_bytes

    _p2_bytes = _p1_bytes

    def _encode_p1(self, a):
        return a.to_bytes(self.scalar_bytes, "big")

    _encode_p2 = _encode_p1

    def _decode_p1(self, raw):
        if len(raw) != self.scalar_bytes:
            raise AlgebraError("bad mock element encoding")
        v = int.from_bytes(raw, "big")
        if v >= self.order:
            raise AlgebraError("mock element out of range")
        return v

    _decode_p2 = _decode_p1

    def _encode_gt(self, a):
        return a.to_bytes(self.scalar_bytes, "big")

    def _decode_gt(self, raw):
        return self._decode_p1(raw)

    def dlog_g0(self, x: G0Element) -> int:
        return x.p1 if x.p1 is not None else x.p2

    def dlog_gt(self, a: G1Element) -> int:
        return a.value


_FP_BYTES = 32


class Bn256Suite(GroupSuite):
    """Production suite over the vendored 256-bit BN curve."""

    def __init__(self):
        super().__init__()
        self.order = _bn256.order
        self.name = "bn256"

    @property
    def generator(self) -> G0Element:
        return G0Element(self, _bn256.curve_G, _bn256.twist_G)

    @property
    def gt_identity(self) -> G1Element:
        return G1Element(self, _bn256.gfp_12(_bn256.gfp_6_zero, _bn256.gfp_6_one))

    def _hash_to_group(self, label: bytes) -> G0Element:
        return G0Element(self, _bn256.g1_hash_to_point(hash_commit(label)), None)

    def _mul_p1(self, a, b):
        return a.add(b)

    _mul_p2 = _mul_p1

    def _exp_p1(self, a, k):
        return a.scalar_mul(k)

    _exp_p2 = _exp_p1

    def _eq_p1(self, a, b):
        if a.is_infinite() or b.is_infinite():
            return a.is_infinite() and b.is_infinite()
        a.force_affine()
        b.force_affine()
        return a.x == b.x and a.y == b.y

    _eq_p2 = _eq_p1

    def _pair(self, p1, p2):
        if p1.is_infinite() or p2.is_infinite():
            return self.gt_identity.value
        return _bn256.optimal_ate(p2, p1)

    def _gt_mul(self, a, b):
        return a.mul(b)

    def _gt_inv(self, a):
        return a.inverse()

    def _gt_exp(self, a, k):
        return a.exp(k)

    def _gt_eq(self, a, b):
        return a == b

    _p1_bytes = 1 + _FP_BYTES
    _p2_bytes = 1 + 4 * _FP_BYTES

    def _encode_p1(self, a):
        if a.is_infinite():
            return b"\x00" * self._p1_bytes
        a.force_affine()
        x = a.x.value()
        sign = a.y.value() & 1
        return bytes([0x02 | sign]) + x.to_bytes(_FP_BYTES, "big")

    def _decode_p1(self, raw):
        if len(raw) != self._p1_bytes:
            raise AlgebraError("bad point encoding length")
        tag = raw[0]
        if tag == 0:
            if any(raw[1:]):
                raise AlgebraError("bad infinity encoding")
            return _bn256.curve_point(
                _bn256.gfp_1(0), _bn256.gfp_1(0), _bn256.gfp_1(0)
            )
        if tag not in (0x02, 0x03):
            raise AlgebraError("bad point tag")
        x = int.from_bytes(raw[1:], "big")
        if x >= _bn256.p:
            raise AlgebraError("point coordinate out of range")
        rhs = (x * x * x + 3) % _bn256.p
        if _bn256.legendre(rhs) != 1 and rhs != 0:
            raise AlgebraError("encoding is not on the curve")
        y = _bn256.sqrt_mod_p(rhs)
        if (y & 1) != (tag & 1):
            y = _bn256.p - y
        return _bn256.curve_point(_bn256.gfp_1(x), _bn256.gfp_1(y))

    def _encode_p2(self, a):
        if a.is_infinite():
            return b"\x00" * self._p2_bytes
        a.force_affine()
        coords = (a.x.x, a.x.y, a.y.x, a.y.y)
        return b"\x01" + b"".join(c.value().to_bytes(_FP_BYTES, "big") for c in coords)

    def _decode_p2(self, raw):
        if len(raw) != self._p2_bytes:
            raise AlgebraError("bad twist encoding length")
        if raw[0] == 0:
            if any(raw[1:]):
                raise AlgebraError("bad infinity encoding")
            return _bn256.curve_twist(
                _bn256.gfp_2(0, 0), _bn256.gfp_2(0, 1), _bn256.gfp_2(0, 0)
            )
        if raw[0] != 1:
            raise AlgebraError("bad twist tag")
        vals = [
            int.from_bytes(raw[1 + i * _FP_BYTES: 1 + (i + 1) * _FP_BYTES], "big")
            for i in range(4)
        ]
        if any(v >= _bn256.p for v in vals):
            raise AlgebraError("twist coordinate out of range")
        pt = _bn256.curve_twist(
            _bn256.gfp_2(vals[0], vals[1]),
            _bn256.gfp_2(vals[2], vals[3]),
            _bn256.gfp_2(0, 1),
        )
        if not pt.is_on_curve():
            raise AlgebraError("encoding is not on the twist")
        if not pt.scalar_mul(self.order).is_infinite():
            raise AlgebraError("twist point outside the prime-order subgroup")
        return pt

    def _encode_gt(self, a):
        return b"".join(c.value().to_bytes(_FP_BYTES, "big") for c in _bn256.gt_marshall(a))

    def _decode_gt(self, raw):
        if len(raw) != 12 * _FP_BYTES:
            raise AlgebraError("bad target-group encoding length")
        vals = [
            int.from_bytes(raw[i * _FP_BYTES: (i + 1) * _FP_BYTES], "big")
            for i in range(12)
        ]
        if any(v >= _bn256.p for v in vals):
            raise AlgebraError("target-group coordinate out of range")
        return _bn256.gt_unmarshall(*vals)


def get_suite(name: str) -> GroupSuite:
    """Instantiate a suite by name: ``bn256``, ``mock`` or ``mock-<prime>``."""
    if name == "bn256":
        return Bn256Suite()
    if name == "mock":
        return MockSuite()
    if name.startswith("mock-"):
        try:
            order = int(name.split("-", 1)[1])
        except ValueError:
            raise AlgebraError("unknown suite %r" % name) from None
        return MockSuite(order)
    raise AlgebraError("unknown suite %r" % name)
