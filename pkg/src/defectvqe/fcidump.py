"""FCIDUMP reader and writer (Molpro convention, 1-based indices).

Integral values are taken in the units they are written in; the rest of the
package assumes eV.
"""

from __future__ import annotations

import io
import logging
import re
from pathlib import Path
from typing import IO

import numpy as np

from .fermion import ActiveSpace, FermionHamiltonian

__all__ = ["FcidumpError", "parse_fcidump", "read_fcidump", "write_fcidump", "dumps_fcidump"]

log = logging.getLogger(__name__)


class FcidumpError(ValueError):
    """Malformed FCIDUMP content; ``line`` is the 1-based line number."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _parse_header(text: str, first_line: int) -> dict[str, list[str]]:
    body = re.sub(r"&FCI|&END", " ", text, flags=re.IGNORECASE).replace("/", " ")
    body = re.sub(r"\s*=\s*", "=", body)
    out: dict[str, list[str]] = {}
    current = None
    for tok in re.split(r"[,\s]+", body):
        if not tok:
            continue
        if "=" in tok:
            key, val = tok.split("=", 1)
            current = key.upper()
            out[current] = [val] if val else []
        elif current is not None:
            out[current].append(tok)
    for required in ("NORB", "NELEC"):
        if required not in out or len(out[required]) != 1:
            raise FcidumpError(f"header is missing {required}", first_line)
    return out


def _header_int(header: dict[str, list[str]], key: str, line: int, default: int | None = None) -> int:
    if key not in header:
        if default is None:
            raise FcidumpError(f"header is missing {key}", line)
        return default
    try:
        return int(header[key][0])
    except ValueError:
        raise FcidumpError(f"{key} is not an integer", line) from None


def _h2_orbit(p: int, q: int, r: int, s: int) -> set[tuple[int, int, int, int]]:
    return {
        (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
        (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
    }


def parse_fcidump(stream: IO[str] | IO[bytes] | str | bytes) -> FermionHamiltonian:
    """Parse FCIDUMP text into a :class:`FermionHamiltonian`.

    Symmetry-equivalent entries are merged; when two entries for the same
    integral disagree the later one wins and a warning is logged.  ``ORBSYM``
    and ``ISYM`` are read but ignored.
    """
    if isinstance(stream, (str, bytes)):
        data = stream
    else:
        data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = data.splitlines()

    start = None
    for i, line in enumerate(lines):
        if "&FCI" in line.upper():
            start = i
            break
    if start is None:
        raise FcidumpError("no &FCI header found", 1)
    end = None
    for i in range(start, len(lines)):
        stripped = lines[i].strip()
        if re.search(r"&END", stripped, re.IGNORECASE) or stripped == "/" or stripped.endswith("/"):
            end = i
            break
    if end is None:
        raise FcidumpError("header is not terminated by &END or /", start + 1)
    header = _parse_header("\n".join(lines[start : end + 1]), start + 1)
    norb = _header_int(header, "NORB", start + 1)
    nelec = _header_int(header, "NELEC", start + 1)
    ms2 = _header_int(header, "MS2", start + 1, default=0)
    if norb <= 0:
        raise FcidumpError("NORB must be positive", start + 1)
    try:
        space = ActiveSpace(norb, nelec, multiplicity_hint=abs(ms2) + 1)
    except ValueError as exc:
        raise FcidumpError(str(exc), start + 1) from None

    h1 = np.zeros((norb, norb))
    h2 = np.zeros((norb, norb, norb, norb))
    e_core = 0.0
    seen: dict[tuple, tuple[float, int]] = {}
    n_entries = 0

    def record(key: tuple, value: float, lineno: int) -> None:
        prev = seen.get(key)
        if prev is not None and prev[0] != value:
            log.warning(
                "line %d: integral %s redefined (%r -> %r, first seen on line %d); keeping the later value",
                lineno, key, prev[0], value, prev[1],
            )
        seen[key] = (value, lineno)

    for idx in range(end + 1, len(lines)):
        lineno = idx + 1
        parts = lines[idx].split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FcidumpError(f"expected 'value i j k l', got {lines[idx].strip()!r}", lineno)
        raw = parts[0]
        if raw.startswith("(") or "j" in raw.lower():
            raise FcidumpError("complex integrals are not supported", lineno)
        try:
            value = float(raw.replace("D", "E").replace("d", "e"))
        except ValueError:
            raise FcidumpError(f"non-numeric value {raw!r}", lineno) from None
        try:
            i, j, k, l = (int(v) for v in parts[1:])
        except ValueError:
            raise FcidumpError("non-integer orbital index", lineno) from None
        if any(v < 0 or v > norb for v in (i, j, k, l)):
            raise FcidumpError(f"orbital index out of range 1..{norb}", lineno)
        n_entries += 1
        if i and j and k and l:
            record(("h2",) + tuple(sorted(_h2_orbit(i, j, k, l))[0]), value, lineno)
            for p, q, r, s in _h2_orbit(i - 1, j - 1, k - 1, l - 1):
                h2[p, q, r, s] = value
        elif i and j and not k and not l:
            record(("h1", min(i, j), max(i, j)), value, lineno)
            h1[i - 1, j - 1] = h1[j - 1, i - 1] = value
        elif not (i or j or k or l):
            record(("core",), value, lineno)
            e_core = value
        elif i and not (j or k or l):
            log.info("line %d: orbital energy entry ignored", lineno)
        else:
            raise FcidumpError(f"unsupported index pattern {i} {j} {k} {l}", lineno)

    if n_entries == 0:
        log.warning("FCIDUMP has no integral entries; the Hamiltonian is identically zero")
    meta = {"ms2": ms2}
    if "ORBSYM" in header:
        meta["orbsym"] = [int(v) for v in header["ORBSYM"] if v.lstrip("-").isdigit()]
    return FermionHamiltonian(space, h1, h2, e_core, meta)


def read_fcidump(path: str | Path) -> FermionHamiltonian:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_fcidump(fh)


def dumps_fcidump(h: FermionHamiltonian, tol: float = 0.0) -> str:
    """Serialize with unique 8-fold-reduced entries at 17 significant digits."""
    n = h.n_spatial
    ms2 = int(h.metadata.get("ms2", 0))
    buf = io.StringIO()
    buf.write(f" &FCI NORB={n},NELEC={h.space.n_electrons},MS2={ms2},\n")
    buf.write("  ORBSYM=" + "1," * n + "\n")
    buf.write("  ISYM=1,\n &END\n")
    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(n):
                for l in range(k + 1):
                    if k * (k + 1) // 2 + l > ij:
                        continue
                    v = h.h2[i, j, k, l]
                    if abs(v) > tol:
                        buf.write(f"{v: .17e} {i + 1:4d} {j + 1:4d} {k + 1:4d} {l + 1:4d}\n")
    for i in range(n):
        for j in range(i + 1):
            v = h.h1[i, j]
            if abs(v) > tol:
                buf.write(f"{v: .17e} {i + 1:4d} {j + 1:4d}    0    0\n")
    buf.write(f"{h.e_core: .17e}    0    0    0    0\n")
    return buf.getvalue()


def write_fcidump(h: FermionHamiltonian, path: str | Path, tol: float = 0.0) -> None:
    Path(path).write_text(dumps_fcidump(h, tol), encoding="utf-8")
