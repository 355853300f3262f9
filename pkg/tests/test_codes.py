import math

import pytest
from hypothesis import given, strategies as st

from agrs.codes import (BitReader, BitWriter, decode_elias_delta, elias_delta, elias_delta_length,
                        field_width, read_elias_delta)


def test_examples():
    assert elias_delta(1) == "1"
    assert elias_delta(2) == "0100"
    assert elias_delta(17) == "001010001"


def test_rejects_nonpositive():
    with pytest.raises(ValueError):
        elias_delta(0)


def _length(k):
    lg = int(math.floor(math.log2(k)))
    return lg + 2 * int(math.floor(math.log2(lg + 1))) + 1


def test_lengths():
    for k in list(range(1, 5000)) + [2**20 - 1, 2**20, 10**6, 2**40 + 3]:
        assert len(elias_delta(k)) == _length(k) == elias_delta_length(k)


def test_stream_roundtrip_first_million():
    # one long stream: decoding it back also shows the code is prefix free
    w = BitWriter()
    bits = "".join(elias_delta(k) for k in range(1, 1_000_001))
    w.write(bits)
    r = BitReader(w.to_bytes())
    for k in range(1, 1_000_001):
        if read_elias_delta(r) != k:
            pytest.fail(f"mismatch at {k}")
    assert r.pos == len(bits)


@given(st.integers(1, 2**62))
def test_roundtrip_large(k):
    assert decode_elias_delta(elias_delta(k)) == k


def test_padding_and_fields():
    w = BitWriter()
    w.write("101")
    w.write_uint(5, 4)
    w.write_uint(0, 0)
    assert len(w) == 7
    assert w.to_bytes() == bytes([0b10101010])
    r = BitReader(w.to_bytes())
    assert r.read_uint(3) == 5 and r.read_uint(4) == 5
    with pytest.raises(ValueError):
        w.write_uint(16, 4)


def test_field_width():
    assert [field_width(m) for m in (1, 2, 3, 4, 5, 8, 9)] == [0, 1, 2, 2, 3, 3, 4]


def test_reader_exhaustion():
    with pytest.raises(EOFError):
        BitReader(b"").read_bit()
