"""Repetition-pattern codebooks.

Two ways of choosing which K of the M subchannels a user repeats its packet
on: uniformly at random per transmission (diversity slotted ALOHA), or a
preassigned block of a Steiner 2-design S(2, K, M), in which any two blocks
share at most one subchannel.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from math import comb, gcd
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    CodeInvariantError,
    CodeParseError,
    InadmissibleParameters,
    InvalidParameters,
    PopulationExceeded,
    UnsupportedParameters,
)

log = logging.getLogger(__name__)

# Search budgets; the (25, 4) and smaller designs need a few hundred nodes.
DF_NODE_LIMIT = 200_000
BACKTRACK_NODE_LIMIT = 500_000


@dataclass(frozen=True, order=True)
class AccessPattern:
    """Sorted tuple of the K distinct subchannels one user transmits on."""

    subchannels: tuple[int, ...]
    M: int
    K: int

    def __post_init__(self):
        subs = tuple(int(s) for s in self.subchannels)
        object.__setattr__(self, "subchannels", tuple(sorted(subs)))
        if self.K < 1 or self.M < self.K:
            raise InvalidParameters(f"need 1 <= K <= M, got M={self.M}, K={self.K}")
        if len(set(subs)) != len(subs) or len(subs) != self.K:
            raise InvalidParameters(f"pattern {subs} must hold {self.K} distinct indices")
        if any(s < 0 or s >= self.M for s in subs):
            raise InvalidParameters(f"pattern {subs} has an index outside [0, {self.M})")

    def __iter__(self):
        return iter(self.subchannels)

    def __len__(self):
        return self.K

    def __contains__(self, s):
        return s in self.subchannels

    def mask(self) -> np.ndarray:
        m = np.zeros(self.M, dtype=bool)
        m[list(self.subchannels)] = True
        return m


@dataclass
class SteinerCode:
    """A codebook of K-subsets of range(M), intended to form an S(2, K, M).

    The container does not enforce the design properties so that broken or
    hand-edited codes can still be loaded and inspected; see ``verify_steiner``.
    """

    M: int
    K: int
    patterns: list[AccessPattern] = field(default_factory=list)
    t: int = 2

    @property
    def C(self) -> int:
        return len(self.patterns)

    @property
    def D(self) -> int:
        return (self.M - self.K) // (self.K - 1)

    def incidence(self) -> np.ndarray:
        """Boolean (C, M) matrix, row i marks the subchannels of pattern i."""
        inc = np.zeros((self.C, self.M), dtype=bool)
        for i, p in enumerate(self.patterns):
            inc[i, list(p.subchannels)] = True
        return inc

    def as_array(self) -> np.ndarray:
        return np.array([p.subchannels for p in self.patterns], dtype=np.int64).reshape(-1, self.K)


def steiner_counts(M: int, K: int) -> tuple[int, int]:
    """Return (C, D) for an S(2, K, M), raising if the design is inadmissible."""
    if K < 2 or M < K:
        raise InadmissibleParameters(f"S(2,{K},{M}) needs 2 <= K <= M")
    if (M * (M - 1)) % (K * (K - 1)) or (M - K) % (K - 1):
        raise InadmissibleParameters(
            f"S(2,{K},{M}) is inadmissible: K(K-1) must divide M(M-1) and (K-1) must divide (M-K)"
        )
    return M * (M - 1) // (K * (K - 1)), (M - K) // (K - 1)


# -- random (DSA) patterns ---------------------------------------------------


def sample_dsa_subsets(M: int, K: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` independent uniform K-subsets of range(M), rows sorted."""
    if K < 1 or K > M:
        raise InvalidParameters(f"need 1 <= K <= M, got M={M}, K={K}")
    keys = rng.random((size, M))
    # The K smallest of M i.i.d. uniforms sit at a uniformly random K-subset.
    idx = np.argpartition(keys, K - 1, axis=1)[:, :K] if K < M else np.tile(np.arange(M), (size, 1))
    return np.sort(idx, axis=1)


def sample_dsa_pattern(M: int, K: int, rng: np.random.Generator) -> AccessPattern:
    return AccessPattern(tuple(sample_dsa_subsets(M, K, rng, 1)[0]), M, K)


# -- Steiner construction ----------------------------------------------------


class _Group:
    """Abelian group Z_a x Z_b on the integers 0..ab-1 (index = x*b + y)."""

    def __init__(self, a: int, b: int):
        self.a, self.b = a, b
        self.order = a * b
        xs, ys = np.divmod(np.arange(self.order), b)
        self.add = ((xs[:, None] + xs[None, :]) % a) * b + (ys[:, None] + ys[None, :]) % b
        self.neg = ((-xs) % a) * b + (-ys) % b

    def sub(self, u, v):
        return int(self.add[u, self.neg[v]])

    def element_order(self, g: int) -> int:
        x, y = divmod(g, self.b)
        ox = self.a // gcd(self.a, x)
        oy = self.b // gcd(self.b, y)
        return ox * oy // gcd(ox, oy)

    def cyclic_subgroup(self, g: int) -> tuple[int, ...]:
        out, cur = [0], g
        while cur != 0:
            out.append(cur)
            cur = int(self.add[cur, g])
        return tuple(sorted(out))

    def __repr__(self):
        return f"Z{self.a}xZ{self.b}" if self.a > 1 else f"Z{self.b}"


def _candidate_groups(M: int) -> list[_Group]:
    groups = [_Group(1, M)]
    for a in range(2, int(M**0.5) + 1):
        if M % a == 0 and (M // a) % a == 0:
            groups.append(_Group(a, M // a))
    return groups


def _difference_family(group: _Group, K: int, n_full: int, covered: set[int]):
    """Backtracking search for ``n_full`` base blocks containing 0 whose
    differences cover every nonzero element outside ``covered`` exactly once."""
    remaining = set(range(1, group.order)) - covered
    blocks: list[list[int]] = []
    nodes = 0

    def extend(block, diffs, start):
        nonlocal nodes
        if len(block) == K:
            for d in diffs:
                remaining.discard(d)
            blocks.append(list(block))
            if solve():
                return True
            blocks.pop()
            remaining.update(diffs)
            return False
        for e in range(start, group.order):
            nodes += 1
            if nodes > DF_NODE_LIMIT:
                return False
            if e in block:
                continue
            new = []
            for x in block:
                new.append(group.sub(e, x))
                new.append(group.sub(x, e))
            seen = set(diffs)
            ok = True
            for d in new:
                if d not in remaining or d in seen:
                    ok = False
                    break
                seen.add(d)
            if ok and extend(block + [e], diffs + new, e + 1):
                return True
        return False

    def solve():
        if not remaining:
            return len(blocks) == n_full
        if len(blocks) >= n_full:
            return False
        d = min(remaining)
        if group.neg[d] == d:
            return False
        return extend([0, d], [d, int(group.neg[d])], 1)

    return blocks if solve() else None


def _develop(group: _Group, base_blocks, short_orbit) -> set[tuple[int, ...]]:
    out = set()
    for g in range(group.order):
        for b in base_blocks:
            out.add(tuple(sorted(int(group.add[g, x]) for x in b)))
        if short_orbit is not None:
            out.add(tuple(sorted(int(group.add[g, x]) for x in short_orbit)))
    return out


def _from_difference_family(M: int, K: int):
    n_full, rem = divmod(M - 1, K * (K - 1))
    if rem not in (0, K - 1):
        return None
    for group in _candidate_groups(M):
        if rem == 0:
            subgroups = [None]
        else:
            subgroups = sorted({group.cyclic_subgroup(g) for g in range(1, M) if group.element_order(g) == K})
        for H in subgroups:
            covered = set(H) - {0} if H else set()
            base = _difference_family(group, K, n_full, covered)
            if base is not None:
                log.debug("S(2,%d,%d) from difference family over %r: %s short=%s", K, M, group, base, H)
                return _develop(group, base, H)
    return None


def _from_backtracking(M: int, K: int, C: int):
    """Exhaustive pair-coverage search: always cover the first uncovered pair."""
    covered = np.zeros((M, M), dtype=bool)
    np.fill_diagonal(covered, True)
    blocks: list[tuple[int, ...]] = []
    nodes = 0

    def first_uncovered():
        idx = np.argwhere(~covered)
        return tuple(idx[0]) if len(idx) else None

    def place(block, on):
        for u, v in itertools.combinations(block, 2):
            covered[u, v] = covered[v, u] = on

    def solve():
        nonlocal nodes
        pair = first_uncovered()
        if pair is None:
            return len(blocks) == C
        i, j = int(pair[0]), int(pair[1])

        def grow(block, start):
            nonlocal nodes
            if len(block) == K:
                place(block, True)
                blocks.append(tuple(sorted(block)))
                if solve():
                    return True
                blocks.pop()
                place(block, False)
                return False
            for p in range(start, M):
                nodes += 1
                if nodes > BACKTRACK_NODE_LIMIT:
                    return False
                if p in block or any(covered[p, q] for q in block):
                    continue
                if grow(block + [p], p + 1):
                    return True
            return False

        return grow([i, j], j + 1)

    return set(blocks) if solve() else None


def build_steiner_code(M: int, K: int) -> SteinerCode:
    """Construct an S(2, K, M) with lexicographically sorted blocks.

    Tries difference families over cyclic and rank-2 abelian groups of order
    M (with one short orbit when M = K mod K(K-1)), then a bounded exhaustive
    search.  Raises ``UnsupportedParameters`` if neither finds a design; a
    code file can be loaded with ``read_code`` instead.
    """
    C, _ = steiner_counts(M, K)
    if C == 1:
        blocks = {tuple(range(M))}
    else:
        blocks = _from_difference_family(M, K) or _from_backtracking(M, K, C)
    if not blocks:
        raise UnsupportedParameters(f"no construction found for S(2,{K},{M})")
    code = SteinerCode(M, K, [AccessPattern(b, M, K) for b in sorted(blocks)])
    report = verify_steiner(code)
    if not report.ok:  # pragma: no cover - construction bug
        raise RuntimeError("constructed code failed verification: " + "; ".join(report.violations))
    return code


# -- verification ------------------------------------------------------------


@dataclass
class VerificationReport:
    violations: list[str] = field(default_factory=list)
    uncovered_pairs: list[tuple[int, int]] = field(default_factory=list)
    multiply_covered_pairs: list[tuple[int, int]] = field(default_factory=list)
    wrong_count: bool = False
    replication_errors: list[tuple[int, int, int]] = field(default_factory=list)
    overlap_errors: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def verify_steiner(code: SteinerCode) -> VerificationReport:
    """List every way in which ``code`` fails to be an S(2, K, M)."""
    rep = VerificationReport()
    M, K = code.M, code.K
    try:
        expected_C, D = steiner_counts(M, K)
    except InadmissibleParameters as exc:
        rep.violations.append(str(exc))
        return rep

    if code.C != expected_C:
        rep.wrong_count = True
        rep.violations.append(f"code has {code.C} patterns, S(2,{K},{M}) needs {expected_C}")

    for i, p in enumerate(code.patterns):
        if p.M != M or p.K != K:
            rep.violations.append(f"pattern {i} declared with (M={p.M}, K={p.K})")

    cover = np.zeros((M, M), dtype=np.int64)
    for p in code.patterns:
        for u, v in itertools.combinations(p.subchannels, 2):
            cover[u, v] += 1
    for u, v in itertools.combinations(range(M), 2):
        if cover[u, v] == 0:
            rep.uncovered_pairs.append((u, v))
        elif cover[u, v] > 1:
            rep.multiply_covered_pairs.append((u, v))
    if rep.uncovered_pairs:
        rep.violations.append(f"{len(rep.uncovered_pairs)} pairs uncovered")
    if rep.multiply_covered_pairs:
        rep.violations.append(f"{len(rep.multiply_covered_pairs)} pairs covered more than once")

    inc = code.incidence()
    point_deg = inc.sum(axis=0)
    for i, p in enumerate(code.patterns):
        for s in p.subchannels:
            others = int(point_deg[s]) - 1
            if others != D:
                rep.replication_errors.append((i, s, others))
    if rep.replication_errors:
        rep.violations.append(
            f"{len(rep.replication_errors)} (pattern, subchannel) incidences shared with != {D} other patterns"
        )

    if code.C:
        inter = inc.astype(np.int64) @ inc.T.astype(np.int64)
        iu = np.triu_indices(code.C, 1)
        bad = inter[iu] > 1
        rep.overlap_errors = [(int(a), int(b), int(n)) for a, b, n in zip(iu[0][bad], iu[1][bad], inter[iu][bad])]
        if rep.overlap_errors:
            rep.violations.append(f"{len(rep.overlap_errors)} pattern pairs share more than one subchannel")
    return rep


# -- allocation --------------------------------------------------------------


def allocate_indices(C: int, N: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` rows of N distinct codebook indices, uniform without replacement."""
    if N > C:
        raise PopulationExceeded(f"{N} users exceed codebook capacity {C}")
    if N < 1:
        raise InvalidParameters("need at least one user")
    keys = rng.random((size, C))
    return np.argsort(keys, axis=1)[:, :N]


def allocate_steiner_patterns(code: SteinerCode, N: int, rng: np.random.Generator) -> list[AccessPattern]:
    idx = allocate_indices(code.C, N, rng, 1)[0]
    return [code.patterns[i] for i in idx]


# -- file format ---------------------------------------------------------------


def format_code(code: SteinerCode) -> str:
    lines = [f"steiner t={code.t} M={code.M} K={code.K} C={code.C}"]
    lines += [" ".join(str(s) for s in p.subchannels) for p in code.patterns]
    return "\n".join(lines) + "\n"


def write_code(path, code: SteinerCode) -> None:
    Path(path).write_text(format_code(code), encoding="utf-8", newline="\n")


def parse_code(text: str) -> SteinerCode:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CodeParseError("empty file", 1)
    head = lines[0].split()
    if not head or head[0] != "steiner":
        raise CodeParseError("header must start with 'steiner'", 1)
    fields = {}
    for tok in head[1:]:
        key, sep, val = tok.partition("=")
        if not sep or not val.isdigit():
            raise CodeParseError(f"malformed header field {tok!r}", 1)
        fields[key] = int(val)
    missing = {"t", "M", "K", "C"} - fields.keys()
    if missing:
        raise CodeParseError(f"header missing {sorted(missing)}", 1)
    if fields["t"] != 2:
        raise CodeParseError(f"only t=2 designs are supported, got t={fields['t']}", 1)
    M, K, C = fields["M"], fields["K"], fields["C"]
    rows = lines[1:]
    if len(rows) != C:
        raise CodeParseError(f"header declares C={C} but file has {len(rows)} pattern rows", len(lines))
    patterns = []
    for lineno, row in enumerate(rows, start=2):
        toks = row.split()
        if len(toks) != K or not all(t.isdigit() for t in toks):
            raise CodeParseError(f"row {row!r} must hold {K} nonnegative integers", lineno)
        try:
            patterns.append(AccessPattern(tuple(int(t) for t in toks), M, K))
        except InvalidParameters as exc:
            raise CodeParseError(f"row {row!r}: {exc}", lineno) from None
    return SteinerCode(M, K, patterns)


def read_code(path, verify: bool = True) -> SteinerCode:
    """Load a code file.

    With ``verify`` set, a code that parses but is not a valid design raises
    ``CodeInvariantError`` carrying both the code and the report.
    """
    code = parse_code(Path(path).read_text(encoding="utf-8"))
    if verify:
        report = verify_steiner(code)
        if not report.ok:
            raise CodeInvariantError(code, report)
    return code


def subset_rank(subset: Sequence[int], M: int) -> int:
    """Lexicographic rank of a sorted subset, matching ``itertools.combinations`` order."""
    K = len(subset)
    rank, prev = 0, -1
    for i, s in enumerate(subset):
        for v in range(prev + 1, s):
            rank += comb(M - v - 1, K - i - 1)
        prev = s
    return rank

