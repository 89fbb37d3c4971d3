"""Exact arithmetic for the supported group families and their Cayley graphs.

Supported families: the free Abelian groups Z^d, products of finite cyclic
factors with a free part Z_{i1} x ... x Z_{in} x Z^d, the infinite dihedral
group, and the finite dihedral groups Z_n x| Z_2 (n >= 4).  Elements carry a
unique integer normal form, so equality, composition and inversion are exact;
floating point only ever enters through transition amplitudes.

All types are immutable after construction and all operations are pure, so
values can be shared freely across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Union


class GroupError(ValueError):
    """Invalid group construction or operation."""


FREE_ABELIAN = "free_abelian"
ABELIAN = "abelian"
DIHEDRAL_INF = "dihedral_inf"
DIHEDRAL_N = "dihedral_n"

_KINDS = (FREE_ABELIAN, ABELIAN, DIHEDRAL_INF, DIHEDRAL_N)


@dataclass(frozen=True)
class GroupFamily:
    """Tag identifying one of the supported group families.

    ``torsion`` holds the finite cyclic factor orders (each >= 2), ``rank``
    the free rank d >= 0, and ``order`` the rotation order of a finite
    dihedral group (>= 4).
    """

    kind: str
    torsion: tuple[int, ...] = ()
    rank: int = 0
    order: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise GroupError(f"unknown family kind {self.kind!r}")
        if self.rank < 0:
            raise GroupError("free rank must be nonnegative")
        if any(i < 2 for i in self.torsion):
            raise GroupError("cyclic factor orders must be >= 2")
        if self.kind == FREE_ABELIAN and self.torsion:
            raise GroupError("free Abelian family carries no torsion factors")
        if self.kind in (DIHEDRAL_INF, DIHEDRAL_N) and (self.torsion or self.rank):
            raise GroupError("dihedral families carry no Abelian payload")
        if self.kind == DIHEDRAL_N and self.order < 4:
            raise GroupError("finite dihedral groups are supported for n >= 4")

    @classmethod
    def free_abelian(cls, rank: int) -> "GroupFamily":
        return cls(FREE_ABELIAN, rank=rank)

    @classmethod
    def abelian(cls, torsion: Sequence[int], rank: int) -> "GroupFamily":
        return cls(ABELIAN, torsion=tuple(int(i) for i in torsion), rank=rank)

    @classmethod
    def infinite_dihedral(cls) -> "GroupFamily":
        return cls(DIHEDRAL_INF)

    @classmethod
    def finite_dihedral(cls, n: int) -> "GroupFamily":
        return cls(DIHEDRAL_N, order=int(n))

    @property
    def is_abelian(self) -> bool:
        return self.kind in (FREE_ABELIAN, ABELIAN)

    @property
    def is_dihedral(self) -> bool:
        return self.kind in (DIHEDRAL_INF, DIHEDRAL_N)

    @property
    def is_infinite(self) -> bool:
        if self.kind == DIHEDRAL_INF:
            return True
        if self.kind == DIHEDRAL_N:
            return False
        return self.rank > 0

    @property
    def payload_size(self) -> int:
        if self.is_dihedral:
            return 2
        return len(self.torsion) + self.rank

    def tag(self) -> str:
        """Canonical text tag used by presentation and walk-spec files."""
        if self.kind == FREE_ABELIAN:
            return f"z({self.rank})"
        if self.kind == ABELIAN:
            tors = ",".join(str(i) for i in self.torsion)
            return f"abelian({tors}|{self.rank})"
        if self.kind == DIHEDRAL_INF:
            return "dihedral_inf"
        return f"dihedral({self.order})"

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.tag()


_FAMILY_RE = re.compile(
    r"""^(?:
        z(?:\((?P<zrank>\d+)\))? |
        abelian\((?P<tors>[\d,\s]*)[|;](?P<arank>\d+)\) |
        (?P<dinf>dihedral_inf) |
        dihedral\((?P<dn>\d+)\)
    )$""",
    re.VERBOSE,
)


def parse_family(tag: str) -> GroupFamily:
    """Parse a family tag such as ``z(2)``, ``abelian(2,2|0)``, ``dihedral_inf``
    or ``dihedral(6)``."""
    m = _FAMILY_RE.match(tag.strip())
    if m is None:
        raise GroupError(f"unrecognized family tag {tag!r}")
    if m.group("dinf"):
        return GroupFamily.infinite_dihedral()
    if m.group("dn"):
        return GroupFamily.finite_dihedral(int(m.group("dn")))
    if m.group("tors") is not None:
        tors = [int(t) for t in m.group("tors").split(",") if t.strip()]
        return GroupFamily.abelian(tors, int(m.group("arank")))
    rank = m.group("zrank")
    return GroupFamily.free_abelian(int(rank) if rank is not None else 1)


@dataclass(frozen=True)
class GroupElement:
    """A group element in normal form.

    Abelian families store ``(residues..., free coordinates...)``; dihedral
    families store ``(n, eps)`` for a^n r^eps with the product rule
    (n, eps) * (m, delta) = (n + (-1)^eps m, eps xor delta).
    """

    family: GroupFamily
    payload: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.payload) != self.family.payload_size:
            raise GroupError(
                f"payload {self.payload} has wrong length for {self.family.tag()}"
            )
        object.__setattr__(self, "payload", self._normalized(self.family, self.payload))

    @staticmethod
    def _normalized(family: GroupFamily, payload: tuple[int, ...]) -> tuple[int, ...]:
        if family.kind == DIHEDRAL_INF:
            return (int(payload[0]), int(payload[1]) % 2)
        if family.kind == DIHEDRAL_N:
            return (int(payload[0]) % family.order, int(payload[1]) % 2)
        res = tuple(int(p) % i for p, i in zip(payload, family.torsion))
        free = tuple(int(p) for p in payload[len(family.torsion):])
        return res + free

    @property
    def is_identity(self) -> bool:
        return all(p == 0 for p in self.payload)

    @property
    def free_part(self) -> tuple[int, ...]:
        """Free (Z^d) coordinates; for dihedral elements the translation power."""
        if self.family.is_dihedral:
            return (self.payload[0],)
        return self.payload[len(self.family.torsion):]

    @property
    def torsion_part(self) -> tuple[int, ...]:
        if self.family.is_dihedral:
            raise GroupError("dihedral elements have no torsion residues")
        return self.payload[: len(self.family.torsion)]

    @property
    def reflection_bit(self) -> int:
        if not self.family.is_dihedral:
            raise GroupError("reflection bit is defined for dihedral elements only")
        return self.payload[1]

    def inverse(self) -> "GroupElement":
        if self.family.is_dihedral:
            n, eps = self.payload
            return GroupElement(self.family, (n if eps else -n, eps))
        return GroupElement(self.family, tuple(-p for p in self.payload))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def __pow__(self, k: int) -> "GroupElement":
        if k < 0:
            return self.inverse() ** (-k)
        if self.family.is_dihedral:
            n, eps = self.payload
            if eps == 0:
                return GroupElement(self.family, (k * n, 0))
            return GroupElement(self.family, (n, 1) if k % 2 else (0, 0))
        return GroupElement(self.family, tuple(k * p for p in self.payload))

    def __repr__(self) -> str:
        if self.family.is_dihedral:
            n, eps = self.payload
            word = "" if n == 0 else ("a" if n == 1 else f"a^{n}")
            word += "r" if eps else ""
            return word or "e"
        return str(self.payload)


def identity(family: GroupFamily) -> GroupElement:
    return GroupElement(family, (0,) * family.payload_size)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """Normal form of g * h.  Raises on family mismatch."""
    if g.family != h.family:
        raise GroupError(f"family mismatch: {g.family.tag()} vs {h.family.tag()}")
    if g.family.is_dihedral:
        n, eps = g.payload
        m, delta = h.payload
        return GroupElement(g.family, (n + (-m if eps else m), eps ^ delta))
    return GroupElement(g.family, tuple(a + b for a, b in zip(g.payload, h.payload)))


def inverse(g: GroupElement) -> GroupElement:
    return g.inverse()


# ---------------------------------------------------------------------------
# Words over the canonical alphabet of each family.
#
# Dihedral families use letters a (translation) and r (reflection); Abelian
# families use t1..tn for the cyclic factors and x1..xd for the free part.
# The letter e always denotes the identity.  Tokens are separated by spaces
# or '*' and may carry an integer exponent, e.g. "a^-1 r" or "x1^2 * x2".

_TOKEN_RE = re.compile(r"^(?P<name>[^\s^*]+?)(?:\^(?P<exp>-?\d+))?$")


def _letter(family: GroupFamily, name: str) -> GroupElement:
    if name == "e":
        return identity(family)
    if family.is_dihedral:
        if name == "a":
            return GroupElement(family, (1, 0))
        if name == "r":
            return GroupElement(family, (0, 1))
        raise GroupError(f"unknown letter {name!r} for {family.tag()}")
    n = len(family.torsion)
    if name.startswith("t") and name[1:].isdigit():
        i = int(name[1:])
        if 1 <= i <= n:
            payload = [0] * family.payload_size
            payload[i - 1] = 1
            return GroupElement(family, tuple(payload))
    if name.startswith("x") and name[1:].isdigit():
        i = int(name[1:])
        if 1 <= i <= family.rank:
            payload = [0] * family.payload_size
            payload[n + i - 1] = 1
            return GroupElement(family, tuple(payload))
    raise GroupError(f"unknown letter {name!r} for {family.tag()}")


def element_from_word(family: GroupFamily, word: str) -> GroupElement:
    """Resolve a word over the family's canonical alphabet to normal form."""
    out = identity(family)
    for token in word.replace("*", " ").split():
        m = _TOKEN_RE.match(token)
        if m is None:
            raise GroupError(f"bad word token {token!r}")
        exp = int(m.group("exp")) if m.group("exp") else 1
        out = out * (_letter(family, m.group("name")) ** exp)
    return out


# ---------------------------------------------------------------------------
# Cayley graphs

_LABEL_RE = re.compile(r"^[A-Za-z0-9_+\-.]+$")

GeneratorSpec = tuple[str, Union[GroupElement, str, Sequence[int]]]


@dataclass(frozen=True)
class CayleyGraph:
    """A presentation: ordered labeled generating set plus optional relators.

    Relators are words over the generator labels (with ^exp inverses); they
    are validated at construction but never used for rewriting, since the
    supported families have family-specific normal forms.
    """

    family: GroupFamily
    generators: tuple[tuple[str, GroupElement], ...]
    relators: tuple[str, ...] = ()

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.generators)

    @property
    def elements(self) -> tuple[GroupElement, ...]:
        return tuple(elem for _, elem in self.generators)

    def element_of(self, label: str) -> GroupElement:
        for lab, elem in self.generators:
            if lab == label:
                return elem
        raise GroupError(f"no generator labeled {label!r}")

    def __len__(self) -> int:
        return len(self.generators)


def _resolve_generator(family: GroupFamily, spec) -> GroupElement:
    if isinstance(spec, GroupElement):
        if spec.family != family:
            raise GroupError("generator element belongs to a different family")
        return spec
    if isinstance(spec, str):
        return element_from_word(family, spec)
    return GroupElement(family, tuple(int(v) for v in spec))


def relator_element(graph_or_gens, family: GroupFamily, word: str) -> GroupElement:
    """Compose a relator word written over generator labels."""
    if isinstance(graph_or_gens, CayleyGraph):
        table = dict(graph_or_gens.generators)
    else:
        table = dict(graph_or_gens)
    out = identity(family)
    for token in word.replace("*", " ").split():
        m = _TOKEN_RE.match(token)
        if m is None:
            raise GroupError(f"bad relator token {token!r}")
        name = m.group("name")
        if name not in table:
            raise GroupError(f"relator uses unknown generator {name!r}")
        exp = int(m.group("exp")) if m.group("exp") else 1
        out = out * (table[name] ** exp)
    return out


def build_cayley_graph(
    family: GroupFamily,
    generators: Iterable[GeneratorSpec],
    relators: Iterable[str] = (),
) -> CayleyGraph:
    """Construct and validate a Cayley graph from labeled generator words.

    Rejects duplicate generator elements, identity generators not labeled
    exactly "e" (a loop generator is allowed under that label), generating
    sets that fail to generate the whole group, and relators that do not
    compose to the identity.
    """
    resolved: list[tuple[str, GroupElement]] = []
    for label, spec in generators:
        if not _LABEL_RE.match(label):
            raise GroupError(f"invalid generator label {label!r}")
        elem = _resolve_generator(family, spec)
        if elem.is_identity and label != "e":
            raise GroupError(
                f"generator {label!r} resolves to the identity; "
                "a loop generator must be labeled 'e'"
            )
        resolved.append((label, elem))

    labels = [lab for lab, _ in resolved]
    if len(set(labels)) != len(labels):
        raise GroupError("duplicate generator labels")
    elems = [e for _, e in resolved]
    if len(set(elems)) != len(elems):
        raise GroupError("two generators resolve to the same group element")

    if not _generates(family, elems):
        raise GroupError("generators do not generate the whole group")

    rels = tuple(relators)
    for word in rels:
        if not relator_element(resolved, family, word).is_identity:
            raise GroupError(f"relator {word!r} does not compose to the identity")

    return CayleyGraph(family, tuple(resolved), rels)


def _lattice_is_full(columns: list[tuple[int, ...]], dim: int) -> bool:
    """True iff the integer lattice spanned by the columns is all of Z^dim."""
    if dim == 0:
        return True
    cols = [list(c) for c in columns]
    ncols = len(cols)
    if ncols < dim:
        return False
    a = [[cols[j][i] for j in range(ncols)] for i in range(dim)]
    cur = 0
    for row in range(dim):
        while True:
            nonzero = [j for j in range(cur, ncols) if a[row][j] != 0]
            if not nonzero:
                return False
            j0 = min(nonzero, key=lambda j: abs(a[row][j]))
            if j0 != cur:
                for i in range(dim):
                    a[i][cur], a[i][j0] = a[i][j0], a[i][cur]
            done = True
            for j in range(cur + 1, ncols):
                if a[row][j] != 0:
                    q = a[row][j] // a[row][cur]
                    for i in range(dim):
                        a[i][j] -= q * a[i][cur]
                    if a[row][j] != 0:
                        done = False
            if done:
                break
        if abs(a[row][cur]) != 1:
            return False
        cur += 1
    return True


def _generates(family: GroupFamily, elems: list[GroupElement]) -> bool:
    if family.is_dihedral:
        import math

        reflections = [g.payload[0] for g in elems if g.payload[1] == 1]
        if not reflections:
            return False
        diffs = [i - j for i in reflections for j in reflections]
        translations = [g.payload[0] for g in elems if g.payload[1] == 0]
        g = 0
        for v in diffs + translations:
            g = math.gcd(g, v)
        if family.kind == DIHEDRAL_N:
            g = math.gcd(g, family.order)
        return g == 1
    dim = family.payload_size
    columns = [g.payload for g in elems]
    for i, order in enumerate(family.torsion):
        col = [0] * dim
        col[i] = order
        columns.append(tuple(col))
    return _lattice_is_full(columns, dim)


# ---------------------------------------------------------------------------
# Coset tilings of dihedral groups over the translation subgroup H = <a>.

@dataclass(frozen=True)
class CosetTiling:
    """Index-2 regular tiling G = H c1 u H c2 with c1 = a^m, c2 = a^m' r.

    Right cosets are used throughout; because the subgroup has index 2 the
    coset of an element is just its reflection bit.
    """

    family: GroupFamily
    reps: tuple[GroupElement, GroupElement]

    @property
    def index(self) -> int:
        return 2

    @property
    def offsets(self) -> tuple[int, int]:
        """The pair (m, m') fixing the representatives."""
        return (self.reps[0].payload[0], self.reps[1].payload[0])

    def coset_index(self, g: GroupElement) -> int:
        if g.family != self.family:
            raise GroupError("element belongs to a different family")
        return g.reflection_bit

    def decompose(self, g: GroupElement) -> tuple[int, int]:
        """Unique (x, j) with g = a^x * c_j; x is returned as an integer."""
        j = self.coset_index(g)
        x = compose(g, self.reps[j].inverse())
        return x.payload[0], j

    def site_element(self, x: int, j: int) -> GroupElement:
        return compose(GroupElement(self.family, (x, 0)), self.reps[j])


def default_tiling(graph_or_family, m: int = 0, m_prime: int = 0) -> CosetTiling:
    """Tiling of a dihedral group with representatives c1 = a^m, c2 = a^m' r.

    The default m = m' = 0 gives (e, r).  Requesting a tiling of a
    non-dihedral family is an error.
    """
    family = (
        graph_or_family.family
        if isinstance(graph_or_family, CayleyGraph)
        else graph_or_family
    )
    if not family.is_dihedral:
        raise GroupError(f"coset tilings are defined for dihedral families, not {family.tag()}")
    c1 = GroupElement(family, (m, 0))
    c2 = GroupElement(family, (m_prime, 1))
    return CosetTiling(family, (c1, c2))


# ---------------------------------------------------------------------------
# Presentation text format: "family=<tag>; gens: a=(1,0), b=(1,1), ..."

def _split_top_level(text: str, sep: str) -> list[str]:
    parts, depth, buf = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return parts


_GEN_ENTRY_RE = re.compile(r"^\s*(?P<label>[^=\s]+)\s*=\s*\((?P<payload>[^)]*)\)\s*$")


def parse_generator_entry(entry: str) -> tuple[str, tuple[int, ...]]:
    m = _GEN_ENTRY_RE.match(entry)
    if m is None:
        raise GroupError(f"bad generator entry {entry!r}")
    payload = tuple(int(v) for v in m.group("payload").split(",") if v.strip())
    return m.group("label"), payload


def parse_presentation(text: str) -> CayleyGraph:
    """Parse the one-line presentation format used by the CLI and spec files."""
    family = None
    gen_entries: list[tuple[str, tuple[int, ...]]] = []
    relators: list[str] = []
    for raw in _split_top_level(text.replace("\n", ";"), ";"):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("family"):
            _, _, value = line.partition("=")
            family = parse_family(value.strip())
        elif line.startswith("gens"):
            _, _, value = line.partition(":")
            for entry in _split_top_level(value, ","):
                if entry.strip():
                    gen_entries.append(parse_generator_entry(entry))
        elif line.startswith("relators"):
            _, _, value = line.partition(":")
            relators.extend(w.strip() for w in value.split(",") if w.strip())
        else:
            raise GroupError(f"unrecognized presentation line {line!r}")
    if family is None:
        raise GroupError("presentation is missing a family tag")
    if not gen_entries:
        raise GroupError("presentation lists no generators")
    return build_cayley_graph(family, gen_entries, relators)


def format_presentation(graph: CayleyGraph) -> str:
    gens = ", ".join(
        f"{label}=({','.join(str(v) for v in elem.payload)})"
        for label, elem in graph.generators
    )
    text = f"family={graph.family.tag()}; gens: {gens}"
    if graph.relators:
        text += "; relators: " + ", ".join(graph.relators)
    return text
