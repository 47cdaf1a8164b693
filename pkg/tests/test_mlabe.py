import random

import pytest

from etenon import mlabe, policy
from etenon.algebra import get_suite
from etenon.mlabe import MlabeError

import oracles


TWO_LEVELS = """
level 1 requires [1]
level 2 requires [1, 2]
tree: attr:basic, threshold(1, attr:doctor, attr:admin)
"""


@pytest.fixture
def mock_setup(mock, rng):
    pp, msk = mlabe.setup(mock, rng)
    return mock, pp, msk, rng


def test_setup_publishes_consistent_parameters(mock_setup):
    suite, pp, msk, _ = mock_setup
    # pp commits to g^delta and e(g,g)^gamma for the master scalars
    assert pp.g_delta == suite.generator ** msk.delta
    gamma = suite.dlog_g0(msk.g_gamma)
    assert pp.egg_gamma == suite.gt_generator ** gamma
    assert pp.encode() == pp.encode()


def test_keygen_key_algebra_on_mock(mock_setup):
    suite, pp, msk, rng = mock_setup
    bundle = mlabe.keygen(pp, msk, ["doctor", "basic"], rng)
    dk = bundle.decryption
    assert dk.attrs == {"doctor", "basic"}
    # the signing key is the same fresh scalar folded into the blinding
    assert bundle.verification == suite.generator ** bundle.signing
    r = bundle.signing
    gamma = suite.dlog_g0(msk.g_gamma)
    p = suite.order
    # d = g^((gamma + r) / delta)
    want = (gamma + r) * pow(msk.delta, p - 2, p) % p
    assert suite.dlog_g0(dk.d) == want
    for attr, (da, da_prime) in dk.components.items():
        r_a = suite.dlog_g0(da_prime)
        h = suite.dlog_g0(suite.hash_to_group(attr.encode()))
        assert suite.dlog_g0(da) == (r + h * r_a) % p


def test_roundtrip_two_levels(mock_setup):
    suite, pp, msk, rng = mock_setup
    tree = policy.parse_policy(TWO_LEVELS)
    payloads = {1: b"level one payload", 2: b"two"}
    ct = mlabe.encrypt(pp, payloads, tree, rng)

    full = mlabe.keygen(pp, msk, ["basic", "doctor"], rng)
    assert mlabe.decrypt(pp, ct, full.decryption) == payloads

    partial = mlabe.keygen(pp, msk, ["basic"], rng)
    assert mlabe.decrypt(pp, ct, partial.decryption) == {1: payloads[1]}

    unrelated = mlabe.keygen(pp, msk, ["visitor"], rng)
    assert mlabe.decrypt(pp, ct, unrelated.decryption) == {}


def test_roundtrip_matches_satisfaction_oracle(mock_setup):
    suite, pp, msk, rng = mock_setup
    for trial in range(60):
        tree = oracles.random_tree(rng, policy, max_leaves=6)
        attrs = oracles.random_attr_subset(rng, tree)
        payloads = {
            level: bytes([trial % 251, level]) * rng.randint(1, 9)
            for level in tree.levels
        }
        ct = mlabe.encrypt(pp, payloads, tree, rng)
        bundle = mlabe.keygen(pp, msk, attrs, rng)
        got = mlabe.decrypt(pp, ct, bundle.decryption)
        want_levels = oracles.levels_satisfied(tree, attrs)
        assert got == {level: payloads[level] for level in want_levels}


def test_variable_length_payloads(mock_setup):
    suite, pp, msk, rng = mock_setup
    tree = policy.parse_policy("level 1 requires [1]\ntree: attr:a")
    bundle = mlabe.keygen(pp, msk, ["a"], rng)
    for payload in (b"", b"x", b"y" * 3000):
        ct = mlabe.encrypt(pp, {1: payload}, tree, rng)
        assert mlabe.decrypt(pp, ct, bundle.decryption) == {1: payload}


def test_encrypt_validates_payload_levels(mock_setup):
    _, pp, _, rng = mock_setup
    tree = policy.parse_policy(TWO_LEVELS)
    with pytest.raises(MlabeError):
        mlabe.encrypt(pp, {1: b"x"}, tree, rng)
    with pytest.raises(MlabeError):
        mlabe.encrypt(pp, {1: b"x", 2: b"y", 3: b"z"}, tree, rng)


def test_element_count_formula(mock_setup):
    _, pp, _, rng = mock_setup
    tree = policy.parse_policy(TWO_LEVELS)  # k=2 levels, l=3 leaves
    ct = mlabe.encrypt(pp, {1: b"a", 2: b"b"}, tree, rng)
    assert mlabe.element_count(ct) == 2 * (2 + 3)
    assert len(ct.levels) == 2
    assert len(ct.leaves) == 3


def test_encryption_operation_counts(mock, rng):
    pp, msk = mlabe.setup(mock, rng)
    tree = policy.parse_policy(TWO_LEVELS)
    with mock.measure() as span:
        mlabe.encrypt(pp, {1: b"a", 2: b"b"}, tree, rng)
    assert span.exponentiations == 2 * (2 + 3)
    assert span.multiplications == 2  # one masking per level


def test_decryption_no_partial_leakage(mock_setup):
    """A key failing a level's gate must see nothing for that level."""
    suite, pp, msk, rng = mock_setup
    tree = policy.parse_policy(
        "level 1 requires [1, 2]\ntree: attr:a, attr:b"
    )
    ct = mlabe.encrypt(pp, {1: b"secret"}, tree, rng)
    for attrs in (["a"], ["b"], ["c"]):
        bundle = mlabe.keygen(pp, msk, attrs, rng)
        assert mlabe.decrypt(pp, ct, bundle.decryption) == {}


def test_gt_variant_identity(mock_setup):
    suite, pp, msk, rng = mock_setup
    tree = policy.parse_policy(TWO_LEVELS)
    elems = {
        1: suite.gt_generator ** 37,
        2: suite.gt_generator ** 90,
    }
    ct = mlabe.encrypt_gt(pp, elems, tree, rng)
    bundle = mlabe.keygen(pp, msk, ["basic", "admin"], rng)
    got = mlabe.decrypt_gt(pp, ct, bundle.decryption)
    assert set(got) == {1, 2}
    assert got[1] == elems[1]
    assert got[2] == elems[2]


def test_gt_variant_identity_bn256(bn256):
    rng = random.Random(4242)
    pp, msk = mlabe.setup(bn256, rng)
    tree = policy.parse_policy("level 1 requires [1]\ntree: attr:a")
    x = bn256.gt_generator ** bn256.rand_scalar_nonzero(rng)
    ct = mlabe.encrypt_gt(pp, {1: x}, tree, rng)
    bundle = mlabe.keygen(pp, msk, ["a"], rng)
    got = mlabe.decrypt_gt(pp, ct, bundle.decryption)
    assert got[1] == x


def test_bn256_roundtrip(bn256):
    rng = random.Random(77)
    pp, msk = mlabe.setup(bn256, rng)
    tree = policy.parse_policy(TWO_LEVELS)
    payloads = {1: b"open note", 2: b"restricted note"}
    ct = mlabe.encrypt(pp, payloads, tree, rng)
    full = mlabe.keygen(pp, msk, ["basic", "doctor"], rng)
    assert mlabe.decrypt(pp, ct, full.decryption) == payloads
    partial = mlabe.keygen(pp, msk, ["basic"], rng)
    assert mlabe.decrypt(pp, ct, partial.decryption) == {1: payloads[1]}


def test_distinct_setups_use_distinct_master_scalars(bn256):
    rng = random.Random(31337)
    pp1, msk1 = mlabe.setup(bn256, rng)
    pp2, msk2 = mlabe.setup(bn256, rng)
    assert msk1.delta != msk2.delta
    assert pp1.g_delta != pp2.g_delta
    assert pp1.egg_gamma != pp2.egg_gamma


def test_key_from_one_system_fails_in_another(mock, rng):
    pp1, msk1 = mlabe.setup(mock, rng)
    pp2, msk2 = mlabe.setup(mock, rng)
    if msk1.delta == msk2.delta:  # tiny field, skip the rare collision
        pytest.skip("mock master scalars collided")
    tree = policy.parse_policy("level 1 requires [1]\ntree: attr:a")
    ct = mlabe.encrypt(pp1, {1: b"msg"}, tree, rng)
    foreign = mlabe.keygen(pp2, msk2, ["a"], rng)
    assert mlabe.decrypt(pp1, ct, foreign.decryption) == {}


# ----------------------------------------------------------------------
# serialization envelopes


def test_pp_envelope_roundtrip(mock_setup):
    suite, pp, _, _ = mock_setup
    doc = mlabe.pp_to_json(pp)
    assert doc["kind"] == "public-params"
    back = mlabe.pp_from_json(doc)
    assert back.g == pp.g
    assert back.g_delta == pp.g_delta
    assert back.egg_gamma == pp.egg_gamma
    assert back.encode() == pp.encode()


def test_msk_envelope_roundtrip(mock_setup):
    suite, pp, msk, _ = mock_setup
    _, back = mlabe.msk_from_json(mlabe.msk_to_json(suite, msk), suite)
    assert back.delta == msk.delta
    assert back.g_gamma == msk.g_gamma


def test_key_envelope_roundtrip(mock_setup):
    suite, pp, msk, rng = mock_setup
    bundle = mlabe.keygen(pp, msk, ["doctor", "basic"], rng)
    _, back = mlabe.key_from_json(mlabe.key_to_json(suite, bundle), suite)
    assert back.signing == bundle.signing
    assert back.verification == bundle.verification
    assert back.decryption.attrs == bundle.decryption.attrs
    assert back.decryption.d == bundle.decryption.d
    for attr in bundle.decryption.attrs:
        assert back.decryption.components[attr] == bundle.decryption.components[attr]


def test_ct_envelope_roundtrip(mock_setup):
    suite, pp, msk, rng = mock_setup
    tree = policy.parse_policy(TWO_LEVELS)
    payloads = {1: b"alpha", 2: b"beta"}
    ct = mlabe.encrypt(pp, payloads, tree, rng)
    back = mlabe.ct_from_json(mlabe.ct_to_json(ct), suite)
    bundle = mlabe.keygen(pp, msk, ["basic", "doctor"], rng)
    assert mlabe.decrypt(pp, back, bundle.decryption) == payloads
    assert mlabe.ct_canonical_bytes(back) == mlabe.ct_canonical_bytes(ct)


def test_envelope_rejects_wrong_kind_and_suite(mock_setup):
    suite, pp, msk, rng = mock_setup
    doc = mlabe.pp_to_json(pp)
    bad_kind = dict(doc, kind="msk")
    with pytest.raises(MlabeError):
        mlabe.pp_from_json(bad_kind)
    bad_version = dict(doc, version=99)
    with pytest.raises(MlabeError):
        mlabe.pp_from_json(bad_version)
    other = get_suite("mock-7")
    with pytest.raises(MlabeError):
        mlabe.pp_from_json(doc, other)


def test_ct_canonical_bytes_is_stable(mock_setup):
    suite, pp, msk, rng = mock_setup
    tree = policy.parse_policy(TWO_LEVELS)
    ct = mlabe.encrypt(pp, {1: b"a", 2: b"b"}, tree, rng)
    assert mlabe.ct_canonical_bytes(ct) == mlabe.ct_canonical_bytes(ct)
    ct2 = mlabe.encrypt(pp, {1: b"a", 2: b"b"}, tree, rng)
    assert mlabe.ct_canonical_bytes(ct2) != mlabe.ct_canonical_bytes(ct)
