"""Lossless dictionary coder for bit strings (sliding-window, LZ77 family).

Output layout::

    '0' raw                                  copy mode, never longer than n + 1
    '1' gamma(n + 1) token*                  token mode

    literal run:  '0' gamma(run) run-bits
    back-match:   '1' gamma(offset) gamma(length - MIN_MATCH + 1)

Matches may overlap the current position, so a long constant or periodic
stretch costs one token.  Candidate matches come from a hash of the
MIN_MATCH-bit context; only the most recent CHAIN positions are tried.  A
match is taken only when its token is shorter than the bits it covers.  The
coder is greedy and fully deterministic.
"""
from __future__ import annotations

from .encoding import EncodedString, gamma, read_gamma
from .errors import DecodeError, TruncatedStreamError

MIN_MATCH = 16
CHAIN = 16


def _match_length(x: str, p: int, i: int) -> int:
    """Length of the common run starting at p and i (p < i; overlap allowed)."""
    n = len(x)
    lo, step = 0, 32
    # gallop, then bisect on slice equality
    while i + lo + step <= n and x[p + lo:p + lo + step] == x[i + lo:i + lo + step]:
        lo += step
        step *= 2
    hi = min(lo + step, n - i)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if x[p + lo:p + mid] == x[i + lo:i + mid]:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _tokens(x: str) -> str:
    n = len(x)
    out = ["1", gamma(n + 1)]
    table: dict[str, list[int]] = {}
    lit_start = 0
    i = 0

    def insert(pos):
        if pos + MIN_MATCH <= n:
            chain = table.setdefault(x[pos:pos + MIN_MATCH], [])
            chain.append(pos)
            if len(chain) > CHAIN:
                del chain[0]

    def flush(end):
        if end > lit_start:
            out.append("0" + gamma(end - lit_start) + x[lit_start:end])

    while i < n:
        best_len, best_off, best_gain = 0, 0, 0
        if i + MIN_MATCH <= n:
            for p in reversed(table.get(x[i:i + MIN_MATCH], ())):
                length = _match_length(x, p, i)
                cost = 1 + len(gamma(i - p)) + len(gamma(length - MIN_MATCH + 1))
                if length - cost > best_gain:
                    best_len, best_off, best_gain = length, i - p, length - cost
        if best_len:
            flush(i)
            out.append("1" + gamma(best_off) + gamma(best_len - MIN_MATCH + 1))
            for k in range(i, i + best_len):
                insert(k)
            i += best_len
            lit_start = i
        else:
            insert(i)
            i += 1
    flush(n)
    return "".join(out)


def compress(data) -> str:
    """Compressed form of a bit string (or of an EncodedString's bits)."""
    x = data.bits if isinstance(data, EncodedString) else str(data)
    if x.strip("01"):
        raise ValueError("input must consist of '0' and '1' only")
    tok = _tokens(x)
    return tok if len(tok) < len(x) + 1 else "0" + x


def compressed_length(data) -> int:
    return len(compress(data))


def decompress(z: str) -> str:
    if not z:
        raise TruncatedStreamError("empty compressed stream")
    if z[0] == "0":
        return z[1:]
    n, pos = read_gamma(z, 1)
    n -= 1
    buf = ""
    while len(buf) < n:
        if pos >= len(z):
            raise TruncatedStreamError("compressed stream ends early")
        if z[pos] == "0":
            run, pos = read_gamma(z, pos + 1)
            if pos + run > len(z):
                raise TruncatedStreamError("literal run cut short")
            buf += z[pos:pos + run]
            pos += run
        else:
            off, pos = read_gamma(z, pos + 1)
            length, pos = read_gamma(z, pos)
            length += MIN_MATCH - 1
            if off > len(buf):
                raise DecodeError(f"match offset {off} reaches before the start")
            piece = buf[len(buf) - off:len(buf) - off + length]
            while len(piece) < length:  # overlapping copy repeats the period
                piece += piece[: length - len(piece)]
            buf += piece
    if len(buf) != n or pos != len(z):
        raise DecodeError("compressed stream is inconsistent with its declared length")
    return buf
