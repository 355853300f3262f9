"""Bit strings, Elias-delta integer codes and fixed-width fields."""
from __future__ import annotations


class BitWriter:
    """Append-only bit string held as one integer, most significant bit first."""

    def __init__(self):
        self._value = 0
        self._len = 0

    def write(self, bits: str) -> None:
        if bits:
            self._value = (self._value << len(bits)) | int(bits, 2)
            self._len += len(bits)

    def write_uint(self, value: int, width: int) -> None:
        if width == 0:
            if value != 0:
                raise ValueError("nonzero value in a zero-width field")
            return
        if value < 0 or value >= 1 << width:
            raise ValueError(f"{value} does not fit in {width} bits")
        self._value = (self._value << width) | value
        self._len += width

    def write_bytes(self, data: bytes) -> None:
        if data:
            self.write_uint(int.from_bytes(data, "big"), 8 * len(data))

    def __len__(self):
        return self._len

    def to_bytes(self) -> bytes:
        """Pack MSB first, zero padded to a whole number of bytes."""
        nbytes = (self._len + 7) // 8
        return (self._value << (8 * nbytes - self._len)).to_bytes(nbytes, "big")


class BitReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def read_bit(self) -> int:
        byte, off = divmod(self.pos, 8)
        if byte >= len(self.data):
            raise EOFError("bitstream exhausted")
        self.pos += 1
        return (self.data[byte] >> (7 - off)) & 1

    def read_uint(self, width: int) -> int:
        value = 0
        for _ in range(width):
            value = (value << 1) | self.read_bit()
        return value

    def read_bytes(self, n: int) -> bytes:
        return bytes(self.read_uint(8) for _ in range(n))


def elias_delta(n: int) -> str:
    """Elias-delta codeword of a positive integer as a '0'/'1' string."""
    if n < 1:
        raise ValueError("Elias-delta codes positive integers only")
    nbits = n.bit_length()
    lbits = nbits.bit_length() - 1
    return "0" * lbits + format(nbits, "b") + format(n, "b")[1:]


def elias_delta_length(n: int) -> int:
    nbits = n.bit_length()
    return nbits + 2 * (nbits.bit_length() - 1)


def read_elias_delta(reader: BitReader) -> int:
    zeros = 0
    while reader.read_bit() == 0:
        zeros += 1
        if zeros > 64:
            raise ValueError("malformed Elias-delta prefix")
    nbits = (1 << zeros) | reader.read_uint(zeros)
    return (1 << (nbits - 1)) | reader.read_uint(nbits - 1)


def decode_elias_delta(bits: str) -> int:
    w = BitWriter()
    w.write(bits)
    return read_elias_delta(BitReader(w.to_bytes()))


def field_width(count: int) -> int:
    """Bits needed for a fixed-width field holding one of ``count`` values."""
    if count < 1:
        raise ValueError("count must be positive")
    return (count - 1).bit_length()
