import numpy as np
import pytest

from oracles import all_messages, crc_by_long_division, kernel_set, kron_polar_matrix, sc_decode
from umpcodes import polar
from umpcodes.gf2 import parity_check_from_generator
from umpcodes.nr_tables import CRC6, CRC11, RELIABILITY_SEQUENCE
from umpcodes.polar import (
    CrcSpec,
    PolarSpec,
    bhattacharyya_reliability_order,
    crc_check,
    crc_encode,
    crc_remainder,
    encode,
    encode_batch,
    nr_reliability_order,
    polar_transform,
    scl_decode,
    scl_decode_batch,
)


def oracle_codebook(spec):
    """Every codeword via long-division CRC and the explicit Kronecker matrix."""
    gn = kron_polar_matrix(spec.n)
    out = []
    for m in all_messages(spec.k):
        u = np.zeros(spec.n, dtype=np.int64)
        u[list(spec.info_set)] = list(m) + crc_by_long_division(m, spec.crc.polynomial)
        out.append((u @ gn) % 2)
    return np.array(out, dtype=np.uint8)


def test_crc_spec():
    assert CrcSpec.from_hex("0x61").length == 6
    assert CrcSpec.from_hex("0xE21").length == 11
    assert str(CrcSpec(CRC11)) == "0xE21"
    with pytest.raises(ValueError):
        CrcSpec.from_hex("zz")
    with pytest.raises(ValueError):
        CrcSpec(0x60)


def test_crc_against_long_division(rng):
    crc = CrcSpec(CRC11)
    msg = np.unpackbits(np.arange(1, 9, dtype=np.uint8))
    assert list(crc_remainder(msg, crc)) == crc_by_long_division(msg, CRC11)
    for poly in (CRC6, CRC11):
        spec = CrcSpec(poly)
        assert not crc_remainder(np.zeros(20, np.uint8), spec).any()
        for _ in range(50):
            m = rng.integers(0, 2, int(rng.integers(1, 60)), dtype=np.uint8)
            word = crc_encode(m, spec)
            assert list(word[len(m):]) == crc_by_long_division(m, poly)
            assert crc_check(word, spec)
            for j in range(len(word)):
                bad = word.copy()
                bad[j] ^= 1
                assert not crc_check(bad, spec)


def test_polar_transform():
    assert list(polar_transform([1, 0])) == [1, 0]
    assert list(polar_transform([0, 1])) == [1, 1]
    assert list(polar_transform([1, 1])) == [0, 1]
    assert not polar_transform(np.zeros(64, np.uint8)).any()
    with pytest.raises(ValueError):
        polar_transform(np.zeros(12, np.uint8))
    rng = np.random.default_rng(1)
    g = kron_polar_matrix(128)
    for _ in range(100):
        u = rng.integers(0, 2, 128, dtype=np.uint8)
        x = polar_transform(u)
        assert np.array_equal(x, (u.astype(np.int64) @ g) % 2)
        assert np.array_equal(polar_transform(x), u)


def test_reliability_orders():
    assert sorted(RELIABILITY_SEQUENCE) == list(range(1024))
    o = nr_reliability_order(16)
    assert sorted(o) == list(range(16))
    assert o[0] == 0 and o[-1] == 15
    b = bhattacharyya_reliability_order(16)
    assert sorted(b) == list(range(16)) and b[-1] == 15 and b[0] == 0


def test_spec_sets():
    spec = PolarSpec(128, 32, "0x61")
    info = set(spec.info_set)
    assert len(info) == 38
    assert info == set(int(i) for i in nr_reliability_order(128)[-38:])
    assert info.isdisjoint(spec.frozen_set)
    assert info | set(spec.frozen_set) == set(range(128))
    with pytest.raises(ValueError):
        PolarSpec(100, 10, "0x61")
    with pytest.raises(ValueError):
        PolarSpec(16, 11, "0x61")


def test_encode_against_oracle():
    spec = PolarSpec(16, 4, CRC6)
    cb = oracle_codebook(spec)
    assert np.array_equal(encode_batch(spec, all_messages(4)), cb)
    assert len({tuple(c) for c in cb}) == 16
    assert not encode(spec, np.zeros(4, np.uint8)).any()
    h = parity_check_from_generator(spec.generator_matrix)
    assert not ((cb.astype(int) @ h.to_array().T.astype(int)) % 2).any()
    with pytest.raises(ValueError):
        encode(spec, np.zeros(5, np.uint8))


def test_parity_check_nullspace_is_codebook():
    spec = PolarSpec(16, 3, CRC6)
    h = parity_check_from_generator(spec.generator_matrix)
    assert kernel_set(h.to_array(), 16) == {tuple(c) for c in oracle_codebook(spec)}


def test_scl_noiseless(kernel_backend, rng):
    spec = PolarSpec(128, 40, CRC11, list_size=8)
    msg = rng.integers(0, 2, 40, dtype=np.uint8)
    cw = encode(spec, msg)
    out = scl_decode(spec, 10.0 * (1.0 - 2.0 * cw))
    assert not out.erasure
    assert np.array_equal(out.codeword, cw)
    assert np.array_equal(out.message, msg)


def test_scl_list_one_is_sc(kernel_backend, rng):
    spec = PolarSpec(64, 20, CRC6, list_size=1)
    frozen = spec.frozen_mask
    for _ in range(100):
        x = encode(spec, rng.integers(0, 2, 20, dtype=np.uint8))
        llr = 2.0 * (1.0 - 2.0 * x + 0.9 * rng.standard_normal(64)) / 0.81
        u_sc = sc_decode(llr, frozen)
        cw, _, ok = scl_decode_batch(spec, llr[None])
        word = u_sc[list(spec.info_set)]
        if crc_check(word, spec.crc):
            assert ok[0] and np.array_equal(cw[0], polar_transform(u_sc))
        else:
            assert not ok[0]


def test_scl_outputs_are_codewords(kernel_backend, rng):
    spec = PolarSpec(64, 16, CRC6, list_size=8)
    h = parity_check_from_generator(spec.generator_matrix).to_array().astype(int)
    llr = 2.0 * rng.standard_normal((50, 64))
    cw, msgs, ok = scl_decode_batch(spec, llr)
    assert ok.any()
    for c, m, good in zip(cw[ok], msgs[ok], ok[ok]):
        assert not ((h @ c) % 2).any()
        assert np.array_equal(encode(spec, m), c)


def test_scl_returns_best_valid_candidate(kernel_backend, rng):
    # with a saturated list the answer is the ML codeword of the whole code
    spec = PolarSpec(16, 3, CRC6, list_size=512)
    cb = oracle_codebook(spec)
    for _ in range(200):
        llr = 3.0 * rng.standard_normal(16)
        cw, _, ok = scl_decode_batch(spec, llr[None])
        best = cb[int(np.argmax((1.0 - 2.0 * cb) @ llr))]
        assert ok[0] and np.array_equal(cw[0], best)


def test_garbage_llrs_mostly_erase(kernel_backend, rng):
    spec = PolarSpec(64, 20, CRC6, list_size=8)
    llr = 50.0 * rng.choice([-1.0, 1.0], (1000, 64))
    _, _, ok = scl_decode_batch(spec, llr)
    # a list of 8 random candidates passes a 6-bit CRC with probability at most 8/64
    assert (~ok).mean() >= 1 - 8 / 64 - 0.04


def test_list_size_monotone(rng):
    spec = PolarSpec(128, 40, CRC6)
    msgs = rng.integers(0, 2, (400, 40), dtype=np.uint8)
    x = encode_batch(spec, msgs)
    sigma = 0.8
    llr = 2.0 * (1.0 - 2.0 * x + sigma * rng.standard_normal(x.shape)) / sigma**2
    fer = []
    for L in (1, 2, 8, 32):
        cw, _, ok = scl_decode_batch(spec, llr, list_size=L)
        fer.append(np.mean(~ok | (cw != x).any(axis=1)))
    for a, b in zip(fer, fer[1:]):
        assert b <= a + 0.02
    assert fer[-1] < fer[0]


def test_coset_offset_handling(kernel_backend, rng):
    spec = PolarSpec(32, 8, CRC6, list_size=16)
    v = rng.integers(0, 2, 32, dtype=np.uint8)
    msg = rng.integers(0, 2, 8, dtype=np.uint8)
    x = encode(spec, msg) ^ v
    llr = 8.0 * (1.0 - 2.0 * x)
    cw, m, ok = scl_decode_batch(spec, llr[None], offset=v)
    assert ok[0] and np.array_equal(cw[0], x) and np.array_equal(m[0], msg)
