"""Systematic Reed-Solomon codes over GF(2^8).

Field: primitive polynomial 0x11D, generator alpha = 2, first consecutive
root alpha^0. A block of n bytes carries k message bytes and n - k parity
bytes and corrects up to t = (n - k) // 2 byte errors. Decoding runs
syndromes -> Berlekamp-Massey -> Chien search -> Forney, then re-checks the
syndromes; any inconsistency flags the block as uncorrectable and it is
passed through as received.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

_PRIM_POLY = 0x11D
_EXP = [0] * 510
_LOG = [0] * 256
_value = 1
for _i in range(255):
    _EXP[_i] = _value
    _LOG[_value] = _i
    _value <<= 1
    if _value & 0x100:
        _value ^= _PRIM_POLY
for _i in range(255, 510):
    _EXP[_i] = _EXP[_i - 255]


def _mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def _div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(256)")
    if a == 0:
        return 0
    return _EXP[(_LOG[a] - _LOG[b]) % 255]


def _inv(a: int) -> int:
    return _div(1, a)


def _alpha_pow(exponent: int) -> int:
    return _EXP[exponent % 255]


def _poly_eval(coefficients: list, x: int) -> int:
    # Horner, highest-degree coefficient first
    result = 0
    for c in coefficients:
        result = _mul(result, x) ^ c
    return result


def _poly_mul(a: list, b: list) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] ^= _mul(ca, cb)
    return out


@dataclass(frozen=True)
class RSCode:
    n: int = 255
    k: int = 223

    def __post_init__(self):
        if not 0 < self.k < self.n <= 255:
            raise ValueError(f"need 0 < k < n <= 255, got n={self.n} k={self.k}")

    @property
    def nsym(self) -> int:
        return self.n - self.k

    @property
    def t(self) -> int:
        return self.nsym // 2


@dataclass(frozen=True)
class RsDecodeResult:
    data: bytes
    uncorrectable_blocks: tuple[int, ...]
    corrected_symbols: int


@lru_cache(maxsize=None)
def _generator_poly(nsym: int) -> tuple:
    gen = [1]
    for i in range(nsym):
        gen = _poly_mul(gen, [1, _alpha_pow(i)])
    return tuple(gen)


def _encode_block(message: list, code: RSCode) -> list:
    gen = _generator_poly(code.nsym)
    remainder = list(message) + [0] * code.nsym
    for i in range(len(message)):
        coefficient = remainder[i]
        if coefficient:
            for j in range(1, len(gen)):
                remainder[i + j] ^= _mul(gen[j], coefficient)
    return list(message) + remainder[len(message):]


def _syndromes(block: list, nsym: int) -> list:
    return [_poly_eval(block, _alpha_pow(i)) for i in range(nsym)]


def _berlekamp_massey(syndromes: list, nsym: int) -> tuple[list, int]:
    # error locator Lambda(x), lowest-degree coefficient first
    current = [1]
    previous = [1]
    errors = 0
    shift = 1
    previous_discrepancy = 1
    for i in range(nsym):
        discrepancy = syndromes[i]
        for j in range(1, errors + 1):
            if j < len(current):
                discrepancy ^= _mul(current[j], syndromes[i - j])
        if discrepancy == 0:
            shift += 1
            continue
        scale = _div(discrepancy, previous_discrepancy)
        update = current[:]
        needed = len(previous) + shift
        if len(update) < needed:
            update.extend([0] * (needed - len(update)))
        for j, coefficient in enumerate(previous):
            update[j + shift] ^= _mul(scale, coefficient)
        if 2 * errors <= i:
            previous = current
            previous_discrepancy = discrepancy
            errors = i + 1 - errors
            shift = 1
        else:
            shift += 1
        current = update
    while len(current) > 1 and current[-1] == 0:
        current.pop()
    return current, errors


def _chien_search(locator: list, n: int) -> list:
    positions = []
    for power in range(n):
        # evaluate Lambda at alpha^(-power): zero means an error at that power
        total = 0
        for degree, coefficient in enumerate(locator):
            total ^= _mul(coefficient, _alpha_pow(-power * degree))
        if total == 0:
            positions.append(power)
    return positions


def _forney_magnitudes(syndromes: list, locator: list, powers: list, nsym: int) -> list:
    # Omega(x) = S(x) * Lambda(x) mod x^nsym, all lowest-first
    omega = [0] * nsym
    for i, s in enumerate(syndromes):
        if s:
            for j, coefficient in enumerate(locator):
                if i + j < nsym:
                    omega[i + j] ^= _mul(s, coefficient)
    derivative = [locator[d] if d % 2 == 1 else 0 for d in range(1, len(locator))]
    magnitudes = []
    for power in powers:
        x_inv = _alpha_pow(-power)
        omega_value = 0
        for degree, coefficient in enumerate(omega):
            omega_value ^= _mul(coefficient, _alpha_pow(-power * degree))
        derivative_value = 0
        for degree, coefficient in enumerate(derivative):
            derivative_value ^= _mul(coefficient, _alpha_pow(-power * degree))
        if derivative_value == 0:
            return []
        magnitudes.append(_mul(_alpha_pow(power), _div(omega_value, derivative_value)))
    return magnitudes


def _decode_block(block: list, code: RSCode) -> tuple[list, int] | None:
    syndromes = _syndromes(block, code.nsym)
    if max(syndromes) == 0:
        return block, 0
    locator, error_count = _berlekamp_massey(syndromes, code.nsym)
    if error_count > code.t or len(locator) - 1 != error_count:
        return None
    powers = _chien_search(locator, code.n)
    if len(powers) != error_count:
        return None
    magnitudes = _forney_magnitudes(syndromes, locator, powers, code.nsym)
    if len(magnitudes) != error_count:
        return None
    corrected = block[:]
    for power, magnitude in zip(powers, magnitudes):
        corrected[code.n - 1 - power] ^= magnitude
    if max(_syndromes(corrected, code.nsym)) != 0:
        return None
    return corrected, error_count


def rs_encode(data: bytes, code: RSCode = RSCode()) -> bytes:
    """Frame ``data`` (pad length prefixed, zero padded) into k-byte blocks
    and emit one n-byte codeword per block."""
    pad = (code.k - (len(data) + 1) % code.k) % code.k
    framed = bytes([pad]) + data + bytes(pad)
    out = bytearray()
    for start in range(0, len(framed), code.k):
        out.extend(_encode_block(list(framed[start:start + code.k]), code))
    return bytes(out)


def rs_decode(data: bytes, code: RSCode = RSCode()) -> RsDecodeResult:
    """Correct each block independently; blocks that cannot be corrected are
    flagged and passed through so the chain can keep going."""
    if len(data) % code.n:
        raise ValueError(f"encoded length {len(data)} is not a multiple of n={code.n}")
    recovered = bytearray()
    bad_blocks = []
    corrected_total = 0
    for index, start in enumerate(range(0, len(data), code.n)):
        block = list(data[start:start + code.n])
        outcome = _decode_block(block, code)
        if outcome is None:
            bad_blocks.append(index)
            recovered.extend(block[:code.k])
        else:
            corrected, count = outcome
            corrected_total += count
            recovered.extend(corrected[:code.k])
    if not recovered:
        return RsDecodeResult(b"", tuple(bad_blocks), corrected_total)
    pad = min(recovered[0], len(recovered) - 1)
    payload = bytes(recovered[1:len(recovered) - pad])
    return RsDecodeResult(payload, tuple(bad_blocks), corrected_total)
