"""Multi-level attribute-based sealing of per-level payloads.

One ciphertext carries one access tree and one sealed payload per
security level (the payload is normally a 16-byte chain-head pointer,
but any byte string works; identifiable column bundles ride the same
mechanism under their own level).

Setup draws master scalars gamma and delta.  A key binds an attribute
set under a fresh scalar r, which doubles as the holder's signing key.
Encryption secret-shares a fresh root polynomial over the tree, seals
each level's payload under the target-group value e(g,g)^(gamma * s_l)
where s_l is that level's share sum, and publishes two group elements
per level and two per leaf.  Decryption reconstructs the level value by
pairing key components against leaf elements, combining with Lagrange
coefficients up the tree, and dividing out of the paired level element.

A second pair of entry points (:func:`encrypt_gt` / :func:`decrypt_gt`)
masks target-group elements multiplicatively instead of sealing bytes;
it exists to make the scheme's algebraic identity directly testable.
"""

from __future__ import annotations

import base64
import json

from dataclasses import dataclass

from . import policy
from .algebra import (
    AlgebraError,
    G0Element,
    G1Element,
    GroupSuite,
    IntegrityError,
    get_suite,
)
from .errors import EtenonError
from .policy import AccessTree, Gate, Leaf, NodePath


class MlabeError(EtenonError):
    """Mismatched material or a malformed ciphertext document."""


ENVELOPE_VERSION = 1


@dataclass
class PublicParams:
    suite: GroupSuite
    g: G0Element
    g_delta: G0Element
    egg_gamma: G1Element

    def encode(self) -> bytes:
        """Canonical bytes, used inside signed digests."""
        parts = [self.suite.name.encode("ascii")]
        for el in (self.g.encode(), self.g_delta.encode(), self.egg_gamma.encode()):
            parts.append(len(el).to_bytes(4, "big"))
            parts.append(el)
        return b"|".join([parts[0], b"".join(parts[1:])])


@dataclass
class MasterKey:
    delta: int
    g_gamma: G0Element


@dataclass
class DecryptionKey:
    attrs: frozenset[str]
    d: G0Element
    components: dict[str, tuple[G0Element, G0Element]]


@dataclass
class KeyBundle:
    """Decryption key plus the signing pair issued alongside it."""

    decryption: DecryptionKey
    signing: int
    verification: G0Element

    @property
    def attrs(self) -> frozenset[str]:
        return self.decryption.attrs


@dataclass
class CiphertextBundle:
    suite_name: str
    tree: AccessTree
    levels: dict[int, tuple[G0Element, bytes]]
    leaves: dict[NodePath, tuple[G0Element, G0Element]]


@dataclass
class GtCiphertext:
    """Multiplicative variant: per-level masked target-group elements."""

    suite_name: str
    tree: AccessTree
    levels: dict[int, tuple[G0Element, G1Element]]
    leaves: dict[NodePath, tuple[G0Element, G0Element]]


# ----------------------------------------------------------------------
# the four algorithms


def setup(suite: GroupSuite, rng=None) -> tuple[PublicParams, MasterKey]:
    """Draw master scalars and publish the public parameters."""
    gamma = suite.rand_scalar_nonzero(rng)
    delta = suite.rand_scalar_nonzero(rng)
    g = suite.generator
    pp = PublicParams(
        suite=suite,
        g=g,
        g_delta=g ** delta,
        egg_gamma=suite.gt_generator ** gamma,
    )
    msk = MasterKey(delta=delta, g_gamma=g ** gamma)
    return pp, msk


def keygen(pp: PublicParams, msk: MasterKey, attrs, rng=None) -> KeyBundle:
    """Issue a key for an attribute set.

    The fresh scalar r both randomizes the decryption key and serves as
    the signing key; the verification key is g^r.
    """
    suite = pp.suite
    attrs = frozenset(attrs)
    r = suite.rand_scalar_nonzero(rng)
    inv_delta = pow(msk.delta, suite.order - 2, suite.order)
    gamma_g = msk.g_gamma
    d = (gamma_g * (pp.g ** r)) ** inv_delta
    g_r = pp.g ** r
    components = {}
    for attr in sorted(attrs):
        r_a = suite.rand_scalar(rng)
        components[attr] = (
            g_r * (suite.hash_to_group(attr) ** r_a),
            pp.g ** r_a,
        )
    dk = DecryptionKey(attrs=attrs, d=d, components=components)
    return KeyBundle(decryption=dk, signing=r, verification=g_r)


def _build_shared(pp: PublicParams, tree: AccessTree, rng):
    policy.validate_tree(tree)
    plan = policy.assign_shares(tree, pp.suite.order, rng)
    leaves = {}
    for path, leaf in policy.iter_leaves(tree):
        share = plan.leaf_shares[path]
        leaves[path] = (
            pp.g ** share,
            pp.suite.hash_to_group(leaf.attribute) ** share,
        )
    return plan, leaves


def _level_context(level: int) -> bytes:
    return b"level:%d" % level


def encrypt(pp: PublicParams, payloads, tree: AccessTree, rng=None) -> CiphertextBundle:
    """Seal one byte payload per declared level under the tree."""
    if set(payloads) != set(tree.levels):
        raise MlabeError(
            "payload levels %s do not match policy levels %s"
            % (sorted(payloads), sorted(tree.levels))
        )
    plan, leaves = _build_shared(pp, tree, rng)
    levels = {}
    for level in sorted(tree.levels):
        secret = plan.level_secrets[level]
        c = pp.g_delta ** secret
        key = pp.egg_gamma ** secret
        mask = pp.suite.seal(key, bytes(payloads[level]), _level_context(level))
        levels[level] = (c, mask)
    return CiphertextBundle(
        suite_name=pp.suite.name, tree=tree, levels=levels, leaves=leaves
    )


def encrypt_gt(pp: PublicParams, elements, tree: AccessTree, rng=None) -> GtCiphertext:
    """Mask one target-group element per level by multiplication."""
    if set(elements) != set(tree.levels):
        raise MlabeError("element levels do not match policy levels")
    plan, leaves = _build_shared(pp, tree, rng)
    levels = {}
    for level in sorted(tree.levels):
        secret = plan.level_secrets[level]
        c = pp.g_delta ** secret
        key = pp.egg_gamma ** secret
        levels[level] = (c, elements[level] * key)
    return GtCiphertext(
        suite_name=pp.suite.name, tree=tree, levels=levels, leaves=leaves
    )


class _NodeEvaluator:
    """Pairing walk over one ciphertext with one key, memoized by path."""

    def __init__(self, suite: GroupSuite, ct, dk: DecryptionKey):
        self.suite = suite
        self.ct = ct
        self.dk = dk
        self.cache: dict[NodePath, G1Element | None] = {}

    def value(self, node, path: NodePath):
        if path in self.cache:
            return self.cache[path]
        out = self._compute(node, path)
        self.cache[path] = out
        return out

    def _compute(self, node, path: NodePath):
        if isinstance(node, Leaf):
            if node.attribute not in self.dk.attrs:
                return None
            slot = self.ct.leaves.get(path)
            comp = self.dk.components.get(node.attribute)
            if slot is None or comp is None:
                return None
            c, cp = slot
            d_a, dp_a = comp
            num = self.suite.pairing(d_a, c)
            den = self.suite.pairing(dp_a, cp)
            return num / den
        # threshold gate: first t satisfied children in index order
        chosen = []
        for j, child in enumerate(node.children, start=1):
            if len(chosen) == node.threshold:
                break
            if not policy.satisfies(child, self.dk.attrs):
                continue
            v = self.value(child, path + (j,))
            if v is not None:
                chosen.append((j, v))
        if len(chosen) < node.threshold:
            return None
        index_set = [j for j, _ in chosen]
        out = None
        for j, v in chosen:
            term = v ** policy.lagrange_coeff(j, index_set, self.suite.order)
            out = term if out is None else out * term
        return out


def _recover_level_keys(pp: PublicParams, ct, dk: DecryptionKey):
    """Yield (level, slot, e(g,g)^(gamma*s_l)) for each recoverable level."""
    suite = pp.suite
    tree = ct.tree
    if ct.suite_name != suite.name:
        raise MlabeError(
            "ciphertext was made on suite %s, not %s" % (ct.suite_name, suite.name)
        )
    evaluator = _NodeEvaluator(suite, ct, dk)
    for level in sorted(ct.levels):
        wanted = tree.levels.get(level)
        if wanted is None:
            continue
        parts = []
        for i in wanted:
            v = evaluator.value(tree.children[i - 1], (i,))
            if v is None:
                parts = None
                break
            parts.append(v)
        if parts is None:
            continue
        blinding = parts[0]
        for v in parts[1:]:
            blinding = blinding * v
        c_l, slot = ct.levels[level]
        key = suite.pairing(c_l, dk.d) / blinding
        yield level, slot, key


def decrypt(pp: PublicParams, ct: CiphertextBundle, dk: DecryptionKey) -> dict[int, bytes]:
    """Recover the payloads of every level the key satisfies.

    Unsatisfied levels are simply absent from the result; a level whose
    seal fails authentication (for instance under an inconsistent key)
    is also absent rather than ever yielding garbage bytes.
    """
    out = {}
    for level, mask, key in _recover_level_keys(pp, ct, dk):
        try:
            out[level] = pp.suite.unseal(key, mask, _level_context(level))
        except IntegrityError:
            continue
    return out


def decrypt_gt(pp: PublicParams, ct: GtCiphertext, dk: DecryptionKey) -> dict[int, G1Element]:
    """Multiplicative counterpart of :func:`decrypt`."""
    return {
        level: masked / key
        for level, masked, key in _recover_level_keys(pp, ct, dk)
    }


# ----------------------------------------------------------------------
# JSON envelopes


def _b64(raw: bytes) -> str:
    return base64.b64encode(raw).decode("ascii")


def _unb64(text) -> bytes:
    if not isinstance(text, str):
        raise MlabeError("expected base64 string, found %r" % (text,))
    try:
        return base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise MlabeError("bad base64 field: %s" % exc) from None


def _envelope(suite_name: str, kind: str) -> dict:
    return {"version": ENVELOPE_VERSION, "suite": suite_name, "kind": kind}


def _open_envelope(obj, kind: str, suite: GroupSuite | None) -> GroupSuite:
    if not isinstance(obj, dict):
        raise MlabeError("document is not a JSON object")
    if obj.get("version") != ENVELOPE_VERSION:
        raise MlabeError("unsupported document version %r" % obj.get("version"))
    if obj.get("kind") != kind:
        raise MlabeError("expected a %s document, found %r" % (kind, obj.get("kind")))
    name = obj.get("suite")
    if suite is None:
        try:
            return get_suite(name)
        except AlgebraError as exc:
            raise MlabeError(str(exc)) from None
    if suite.name != name:
        raise MlabeError("document is for suite %s, not %s" % (name, suite.name))
    return suite


def pp_to_json(pp: PublicParams) -> dict:
    doc = _envelope(pp.suite.name, "public-params")
    doc.update(
        g=_b64(pp.g.encode()),
        g_delta=_b64(pp.g_delta.encode()),
        egg_gamma=_b64(pp.egg_gamma.encode()),
    )
    return doc


def pp_from_json(obj, suite: GroupSuite | None = None) -> PublicParams:
    suite = _open_envelope(obj, "public-params", suite)
    try:
        return PublicParams(
            suite=suite,
            g=suite.decode_g0(_unb64(obj["g"])),
            g_delta=suite.decode_g0(_unb64(obj["g_delta"])),
            egg_gamma=suite.decode_gt(_unb64(obj["egg_gamma"])),
        )
    except KeyError as exc:
        raise MlabeError("missing field %s" % exc) from None


def msk_to_json(suite: GroupSuite, msk: MasterKey) -> dict:
    doc = _envelope(suite.name, "master-key")
    doc.update(
        delta=_b64(suite.encode_scalar(msk.delta)),
        g_gamma=_b64(msk.g_gamma.encode()),
    )
    return doc


def msk_from_json(obj, suite: GroupSuite | None = None) -> tuple[GroupSuite, MasterKey]:
    suite = _open_envelope(obj, "master-key", suite)
    try:
        msk = MasterKey(
            delta=suite.decode_scalar(_unb64(obj["delta"])),
            g_gamma=suite.decode_g0(_unb64(obj["g_gamma"])),
        )
    except KeyError as exc:
        raise MlabeError("missing field %s" % exc) from None
    return suite, msk


def key_to_json(suite: GroupSuite, bundle: KeyBundle) -> dict:
    dk = bundle.decryption
    doc = _envelope(suite.name, "key-bundle")
    doc.update(
        attrs=sorted(dk.attrs),
        d=_b64(dk.d.encode()),
        components={
            attr: {"d": _b64(pair[0].encode()), "dp": _b64(pair[1].encode())}
            for attr, pair in sorted(dk.components.items())
        },
        sk=_b64(suite.encode_scalar(bundle.signing)),
        vk=_b64(bundle.verification.encode()),
    )
    return doc


def key_from_json(obj, suite: GroupSuite | None = None) -> tuple[GroupSuite, KeyBundle]:
    suite = _open_envelope(obj, "key-bundle", suite)
    try:
        attrs = frozenset(obj["attrs"])
        components = {
            attr: (
                suite.decode_g0(_unb64(pair["d"])),
                suite.decode_g0(_unb64(pair["dp"])),
            )
            for attr, pair in obj["components"].items()
        }
        dk = DecryptionKey(
            attrs=attrs,
            d=suite.decode_g0(_unb64(obj["d"])),
            components=components,
        )
        bundle = KeyBundle(
            decryption=dk,
            signing=suite.decode_scalar(_unb64(obj["sk"])),
            verification=suite.decode_g0(_unb64(obj["vk"])),
        )
    except KeyError as exc:
        raise MlabeError("missing field %s" % exc) from None
    if set(components) != attrs:
        raise MlabeError("component attributes do not match the attribute list")
    return suite, bundle


def ct_to_json(ct: CiphertextBundle) -> dict:
    doc = _envelope(ct.suite_name, "ciphertext")
    doc.update(
        policy=policy.tree_to_json(ct.tree),
        levels=[
            {
                "level": level,
                "c": _b64(ct.levels[level][0].encode()),
                "mask": _b64(ct.levels[level][1]),
            }
            for level in sorted(ct.levels)
        ],
        leaves=[
            {
                "path": list(path),
                "c": _b64(ct.leaves[path][0].encode()),
                "cp": _b64(ct.leaves[path][1].encode()),
            }
            for path in sorted(ct.leaves)
        ],
    )
    return doc


def ct_from_json(obj, suite: GroupSuite | None = None) -> CiphertextBundle:
    suite = _open_envelope(obj, "ciphertext", suite)
    try:
        tree = policy.tree_from_json(obj["policy"])
        levels = {
            int(entry["level"]): (
                suite.decode_g0(_unb64(entry["c"])),
                _unb64(entry["mask"]),
            )
            for entry in obj["levels"]
        }
        leaves = {
            tuple(int(i) for i in entry["path"]): (
                suite.decode_g0(_unb64(entry["c"])),
                suite.decode_g0(_unb64(entry["cp"])),
            )
            for entry in obj["leaves"]
        }
    except (KeyError, TypeError) as exc:
        raise MlabeError("malformed ciphertext document: %s" % exc) from None
    if set(levels) != set(tree.levels):
        raise MlabeError("ciphertext levels do not match its policy")
    want_paths = {path for path, _ in policy.iter_leaves(tree)}
    if set(leaves) != want_paths:
        raise MlabeError("ciphertext leaves do not match its policy")
    return CiphertextBundle(
        suite_name=suite.name, tree=tree, levels=levels, leaves=leaves
    )


def ct_canonical_bytes(ct: CiphertextBundle) -> bytes:
    """Stable byte form of a ciphertext, the unit that gets co-signed."""
    return json.dumps(ct_to_json(ct), sort_keys=True, separators=(",", ":")).encode()


def element_count(ct: CiphertextBundle) -> int:
    """Number of source-group elements in the bundle: level and leaf pairs."""
    return 2 * len(ct.levels) + 2 * len(ct.leaves)
