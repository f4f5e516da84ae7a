"""Single-field mutations of certificate text, for the tamper fuzz."""
import random
import re
from fractions import Fraction

# "witness" negates one stored witness vector; "entry" negates a single
# coordinate of it, which may leave a valid witness (an open condition)
KINDS = ("sign", "witness", "ray", "split", "tilde", "cone", "drop")
EXTRA_KINDS = ("entry",)


def _fields(lines, kind):
    """(line index, token span) candidates for one mutation kind."""
    out = []
    for i, line in enumerate(lines):
        if kind == "drop":
            if line.startswith("[face"):
                out.append((i, (0, len(line))))
            continue
        if line.startswith("["):
            continue
        if kind == "sign":
            out += [(i, m.span(1)) for m in re.finditer(r"\(sign \d+ ([+-])\)", line)]
        elif kind == "witness":
            out += [(i, m.span(2)) for m in re.finditer(r"\(([-+]+) \(([^()]*)\)\)", line)]
        elif kind == "entry":
            for m in re.finditer(r"\(([-+]+) \(([^()]*)\)\)", line):
                start = m.start(2)
                out += [(i, (start + t.start(), start + t.end())) for t in re.finditer(r"\S+", m.group(2))]
        elif kind == "split":
            out += [(i, m.span(1)) for m in re.finditer(r"\(split (\d+-\d+)", line)]
        elif kind == "ray" and line.startswith("v "):
            toks = list(re.finditer(r"\S+", line))[2:]
            out += [(i, t.span()) for t in toks]
        elif kind == "tilde" and line.startswith("t "):
            toks = list(re.finditer(r"\S+", line))[2:]
            out += [(i, t.span()) for t in toks]
        elif kind == "cone" and line.startswith("c "):
            toks = list(re.finditer(r"\S+", line))[2:]
            out += [(i, t.span()) for t in toks]
    return out


def _bump(tok, rng):
    q = Fraction(tok)
    return str(q + Fraction(rng.choice([1, -1]), rng.choice([1, 2, 3, 7])))


def mutate(text: str, rng: random.Random, kind: str | None = None):
    """Return ``(kind, mutated text)`` with exactly one field changed."""
    lines = text.split("\n")
    kinds = [k for k in KINDS if _fields(lines, k)]
    kind = kind or rng.choice(kinds)
    i, (a, b) = rng.choice(_fields(lines, kind))
    line, tok = lines[i], lines[i][a:b]
    if kind == "sign":
        new = "-" if tok == "+" else "+"
    elif kind == "witness":
        new = " ".join(str(-Fraction(t)) for t in tok.split())
    elif kind == "entry":
        q = Fraction(tok)
        new = str(-q) if q else "1"
    elif kind == "split":
        x, y = map(int, tok.split("-"))
        options = [f"{u}-{v}" for u in range(3) for v in range(u + 1, 3) if (u, v) != (x, y)]
        new = rng.choice(options)
    elif kind in ("ray", "tilde"):
        new = _bump(tok, rng)
    elif kind == "cone":
        new = str(int(tok) + rng.choice([1, 2, 3]))
    else:  # drop a face section with its tree
        del lines[i : i + 2]
        return kind, "\n".join(lines)
    lines[i] = line[:a] + new + line[b:]
    return kind, "\n".join(lines)
