import random

import pytest

from etenon import musig
from etenon.musig import (
    CommitMsg,
    MultiSig,
    MusigError,
    Phase,
    PartialSigMsg,
    RevealMsg,
    SessionAbort,
    SignedMessage,
    SignSession,
    cosign,
    start_session,
    verify,
)


def distinct_keys(suite, n, rng):
    keys = []
    while len(keys) < n:
        k = suite.rand_scalar_nonzero(rng)
        if k not in keys:
            keys.append(k)
    return keys


def test_cosign_and_verify_small_rosters(mock, rng):
    for n in (1, 2, 3, 5):
        for _ in range(10):
            keys = distinct_keys(mock, n, rng)
            msg = b"msg-%d" % n
            sig, roster = cosign(mock, keys, msg, rng)
            assert len(roster) == n
            assert verify(mock, sig, roster, msg)


def test_signature_shape(mock, rng):
    keys = distinct_keys(mock, 3, rng)
    sig, roster = cosign(mock, keys, b"shape", rng)
    from etenon.algebra import G0Element

    assert isinstance(sig.rc, G0Element)
    assert isinstance(sig.s, int)
    assert 0 <= sig.s < mock.order


def test_verify_rejects_every_mutation(mock, rng):
    keys = distinct_keys(mock, 3, rng)
    msg = b"the agreed message"
    sig, roster = cosign(mock, keys, msg, rng)
    assert verify(mock, sig, roster, msg)

    g = mock.generator
    # group-element half nudged
    assert not verify(mock, MultiSig(rc=sig.rc * g, s=sig.s), roster, msg)
    # scalar half nudged
    assert not verify(mock, MultiSig(rc=sig.rc, s=(sig.s + 1) % mock.order), roster, msg)
    # different message
    assert not verify(mock, sig, roster, b"another message")
    # signer dropped from the roster
    assert not verify(mock, sig, roster[:-1], msg)
    # roster order swapped (challenges are position-bound)
    swapped = (roster[1], roster[0]) + roster[2:]
    assert not verify(mock, sig, swapped, msg)
    # an extra key appended
    extra = roster + (g ** mock.rand_scalar_nonzero(rng),)
    assert not verify(mock, sig, extra, msg)
    # empty roster never verifies
    assert not verify(mock, sig, (), msg)


def test_verification_exponentiation_count(mock, rng):
    for n in (1, 2, 5):
        keys = distinct_keys(mock, n, rng)
        sig, roster = cosign(mock, keys, b"count", rng)
        with mock.measure() as span:
            assert verify(mock, sig, roster, b"count")
        assert span.exponentiations == n + 1
        assert span.hash_calls == n


def test_single_signer_roster(mock, rng):
    sk = mock.rand_scalar_nonzero(rng)
    sig, roster = cosign(mock, [sk], b"solo", rng)
    assert len(roster) == 1
    assert verify(mock, sig, roster, b"solo")


def test_cosign_on_bn256(bn256):
    rng = random.Random(2024)
    keys = distinct_keys(bn256, 3, rng)
    sig, roster = cosign(bn256, keys, b"curve msg", rng)
    assert verify(bn256, sig, roster, b"curve msg")
    assert not verify(bn256, sig, roster, b"curve msg!")


def test_session_rejects_duplicate_roster(mock, rng):
    sk = mock.rand_scalar_nonzero(rng)
    vk = mock.generator ** sk
    with pytest.raises(MusigError):
        SignSession(mock, sk, (vk, vk), b"m", rng)


def test_session_rejects_unknown_signer(mock, rng):
    sk1, sk2 = distinct_keys(mock, 2, rng)
    roster = (mock.generator ** sk1,)
    with pytest.raises(MusigError):
        SignSession(mock, sk2, roster, b"m", rng)


def _run_rounds(sessions, first_msgs):
    """Deliver each round's messages to every other session."""
    outgoing = list(first_msgs)
    while True:
        results = []
        for i, session in enumerate(sessions):
            inbox = [m for j, m in enumerate(outgoing) if j != i]
            results.append(session.step(inbox))
        for r in results:
            if isinstance(r, (SessionAbort, MultiSig)):
                return results
        outgoing = results


def test_manual_session_flow(mock, rng):
    keys = distinct_keys(mock, 3, rng)
    roster = tuple(mock.generator ** k for k in keys)
    msg = b"manual run"
    sessions, commits = [], []
    for sk in keys:
        s, c = start_session(mock, sk, roster, msg, rng)
        sessions.append(s)
        commits.append(c)
    results = _run_rounds(sessions, commits)
    assert all(isinstance(r, MultiSig) for r in results)
    # every honest participant assembles the identical signature
    assert all(r.s == results[0].s for r in results)
    assert all(r.rc == results[0].rc for r in results)
    assert verify(mock, results[0], roster, msg)


def test_commitment_mismatch_aborts_before_partials(mock, rng):
    keys = distinct_keys(mock, 3, rng)
    roster = tuple(mock.generator ** k for k in keys)
    msg = b"attack run"
    sessions, commits = [], []
    for sk in keys:
        s, c = start_session(mock, sk, roster, msg, rng)
        sessions.append(s)
        commits.append(c)
    honest, cheat = sessions[0], sessions[2]

    reveals = []
    for i, s in enumerate(sessions):
        inbox = [c for j, c in enumerate(commits) if j != i]
        reveals.append(s.step(inbox))
    # the cheater swaps in a nonce share it never committed to
    fake = RevealMsg(sender=cheat.index, value=mock.generator ** 99)
    inbox = [reveals[1], fake]
    out = honest.step(inbox)
    assert isinstance(out, SessionAbort)
    assert out.offender == cheat.index
    assert honest.phase is Phase.ABORTED
    # no partial signature was ever computed and the nonce is destroyed
    assert honest._partial is None
    assert honest._nonce is None
    with pytest.raises(MusigError):
        honest.step([])


def test_session_enforces_message_cover(mock, rng):
    keys = distinct_keys(mock, 3, rng)
    roster = tuple(mock.generator ** k for k in keys)
    s, _ = start_session(mock, keys[0], roster, b"m", rng)
    with pytest.raises(MusigError):
        s.step([])  # missing both commitments
    with pytest.raises(MusigError):
        s.step([CommitMsg(sender=0, value=b"x" * 32)])  # own index echoed back


def test_session_rejects_wrong_message_type(mock, rng):
    keys = distinct_keys(mock, 2, rng)
    roster = tuple(mock.generator ** k for k in keys)
    s, _ = start_session(mock, keys[0], roster, b"m", rng)
    with pytest.raises(MusigError):
        s.step([RevealMsg(sender=1, value=mock.generator)])


def test_challenge_binds_index_and_roster(mock, rng):
    keys = distinct_keys(mock, 2, rng)
    roster = tuple(mock.generator ** k for k in keys)
    rc = mock.generator ** 5
    c0 = musig.challenge(mock, roster, rc, b"m", 0)
    c1 = musig.challenge(mock, roster, rc, b"m", 1)
    assert c0 != c1 or roster[0] == roster[1]
    swapped = (roster[1], roster[0])
    assert musig.challenge(mock, swapped, rc, b"m", 0) != c0


def test_signed_message_digest_separates_kinds():
    a = SignedMessage(
        kind="block", payload=b"p", pointer=b"\x01" * 16, pp_bytes=b"pp", timestamp=7
    )
    b = SignedMessage(
        kind="ciphertext", payload=b"p", pointer=None, pp_bytes=b"pp", timestamp=7
    )
    assert a.digest() != b.digest()
    assert a.digest() == SignedMessage(
        kind="block", payload=b"p", pointer=b"\x01" * 16, pp_bytes=b"pp", timestamp=7
    ).digest()
    # every field participates in the digest
    assert a.digest() != SignedMessage(
        kind="block", payload=b"q", pointer=b"\x01" * 16, pp_bytes=b"pp", timestamp=7
    ).digest()
    assert a.digest() != SignedMessage(
        kind="block", payload=b"p", pointer=b"\x02" * 16, pp_bytes=b"pp", timestamp=7
    ).digest()
    assert a.digest() != SignedMessage(
        kind="block", payload=b"p", pointer=b"\x01" * 16, pp_bytes=b"qq", timestamp=7
    ).digest()
    assert a.digest() != SignedMessage(
        kind="block", payload=b"p", pointer=b"\x01" * 16, pp_bytes=b"pp", timestamp=8
    ).digest()


def test_signed_message_resists_field_splicing():
    """Moving bytes between adjacent fields must change the digest."""
    a = SignedMessage(kind="block", payload=b"ab", pointer=b"c", pp_bytes=b"d", timestamp=1)
    b = SignedMessage(kind="block", payload=b"a", pointer=b"bc", pp_bytes=b"d", timestamp=1)
    assert a.digest() != b.digest()


def test_sig_json_roundtrip(mock, rng):
    keys = distinct_keys(mock, 2, rng)
    sig, roster = cosign(mock, keys, b"serialize me", rng)
    back = musig.sig_from_json(musig.sig_to_json(mock, sig), mock)
    assert back.rc == sig.rc
    assert back.s == sig.s
    assert verify(mock, back, roster, b"serialize me")
