"""Infinitesimal-braid (Drinfeld-Kohno) algebras over labeled strands.

A strand set like ["1", "2", "z", "w"] yields one generator per unordered
pair, relations [t_ab, t_cd] = 0 (disjoint pairs) and [t_ab + t_ac, t_bc] = 0
(triples), a per-degree echelonized ideal basis for normal-form reduction,
the substitution morphisms that turn a one-moving-point holonomy into its
two-point variants, and the projection that kills the diagonal generator.
"""

from __future__ import annotations

import itertools
import json
import os

import numpy as np

from .errors import ConfigError
from .series import GeneratorCatalogue, TruncatedSeries

PIVOT_TOL = 1e-10

# elimination runs once per (strand set, degree) and is reused process-wide
_BASIS_MEMO = {}


def pair_label(a: str, b: str) -> str:
    return "t[%s,%s]" % (a, b)


def moving_point_catalogue(n: int, point: str = "z") -> GeneratorCatalogue:
    """Free alphabet t[1,z]..t[n,z] for one-moving-point holonomies."""
    return GeneratorCatalogue([pair_label(str(k), point) for k in range(1, n + 1)])


def tau_catalogue(n: int) -> GeneratorCatalogue:
    """Two commuting free blocks t[k,z], t[k,w]; canonical words sort z-block first."""
    labels = [pair_label(str(k), "z") for k in range(1, n + 1)]
    labels += [pair_label(str(k), "w") for k in range(1, n + 1)]
    return GeneratorCatalogue(labels)


class DKAlgebra:
    """Generator catalogue plus quadratic relation list for given strands."""

    def __init__(self, strands):
        strands = [str(s) for s in strands]
        if len(strands) < 2:
            raise ConfigError("need at least 2 strands")
        if len(set(strands)) != len(strands):
            raise ConfigError("duplicate strand labels: %r" % (strands,))
        self.strands = strands
        self.pairs = list(itertools.combinations(range(len(strands)), 2))
        self.cat = GeneratorCatalogue([pair_label(strands[i], strands[j]) for i, j in self.pairs])
        self._pair_index = {p: k for k, p in enumerate(self.pairs)}
        self.relations = self._build_relations()
        self._bases = {}

    def gen_id(self, a, b) -> int:
        """Generator id of the unordered pair of strand labels (a, b)."""
        ia, ib = self.strands.index(str(a)), self.strands.index(str(b))
        if ia == ib:
            raise ConfigError("t[%s,%s] is not a generator" % (a, b))
        key = (min(ia, ib), max(ia, ib))
        return self._pair_index[key]

    def gen(self, a, b, degree) -> TruncatedSeries:
        return TruncatedSeries(self.cat, degree, {(self.gen_id(a, b),): 1.0})

    def strands_of_gen(self, g: int):
        i, j = self.pairs[g]
        return (self.strands[i], self.strands[j])

    def _build_relations(self):
        rels = []
        m = len(self.strands)
        # disjoint pairs: [t_ab, t_cd] = 0, each unordered pair of pairs once
        for (p, q) in itertools.combinations(range(len(self.pairs)), 2):
            if not set(self.pairs[p]) & set(self.pairs[q]):
                rels.append(
                    TruncatedSeries(self.cat, 2, {(p, q): 1.0, (q, p): -1.0})
                )
        # triples: [t_ab + t_ac, t_bc] = 0 for each triple and each singled-out pair
        for (i, j, k) in itertools.combinations(range(m), 3):
            for (a, b, c) in ((i, j, k), (j, i, k), (k, i, j)):
                # relation [t_ab + t_ac, t_bc] with a the apex
                ab = self._pair_index[(min(a, b), max(a, b))]
                ac = self._pair_index[(min(a, c), max(a, c))]
                bc = self._pair_index[(min(b, c), max(b, c))]
                terms = {
                    (ab, bc): 1.0, (bc, ab): -1.0,
                    (ac, bc): 1.0, (bc, ac): -1.0,
                }
                rels.append(TruncatedSeries(self.cat, 2, terms))
        return rels

    def ideal_basis(self, degree: int, cache_dir: str | None = None) -> "IdealBasis":
        key = (tuple(self.strands), degree)
        if key not in _BASIS_MEMO:
            path = None
            if cache_dir:
                name = "dk_%s_D%d_tol%g.json" % ("-".join(self.strands), degree, PIVOT_TOL)
                path = os.path.join(cache_dir, name)
                if os.path.exists(path):
                    _BASIS_MEMO[key] = IdealBasis.load(self, path)
                    return _BASIS_MEMO[key]
            _BASIS_MEMO[key] = IdealBasis(self, degree)
            if path is not None:
                os.makedirs(cache_dir, exist_ok=True)
                _BASIS_MEMO[key].save(path)
        return _BASIS_MEMO[key]


def build(strands) -> DKAlgebra:
    return DKAlgebra(strands)


def _words_of_degree(n_gens: int, d: int):
    return itertools.product(range(n_gens), repeat=d)


class _EchelonTable:
    """Incremental reduced row echelon form: unit pivot entries, pivot columns
    eliminated from every stored row, so reduction is one matrix product."""

    def __init__(self, ncols: int, tol: float):
        self.ncols = ncols
        self.tol = tol
        self.pivots = []
        self.rows = np.zeros((0, ncols), dtype=np.complex128)

    def residual(self, vec: np.ndarray) -> np.ndarray:
        if self.pivots:
            vec = vec - vec[self.pivots] @ self.rows
        return vec

    def insert(self, vec: np.ndarray):
        vec = self.residual(vec)
        nz = np.flatnonzero(np.abs(vec) > self.tol)
        if nz.size == 0:
            return
        p = int(nz[0])
        vec = vec / vec[p]
        col = self.rows[:, p]
        hit = np.flatnonzero(col)
        if hit.size:
            self.rows[hit] -= np.outer(col[hit], vec)
        self.pivots.append(p)
        self.rows = np.vstack([self.rows, vec[None, :]])

    def finalize(self):
        pass


class IdealBasis:
    """Per-degree reduced row echelon bases of the two-sided relation ideal.

    Degree-d span: {w1 * r * w2 : r relation, |w1| + |w2| = d - 2}.  Columns
    are the degree-d words in lexicographic order; pivots are eliminated from
    all stored rows so a single reduction pass yields the normal form.
    """

    MAX_TABLE_ENTRIES = 80_000_000  # complex128 entries; ~1.2 GB hard cap

    def __init__(self, alg: DKAlgebra, degree: int, tol: float = PIVOT_TOL):
        self.alg = alg
        self.degree = degree
        self.tol = tol
        self.tables = {}  # degree -> _EchelonTable
        G = len(alg.cat)
        for d in range(2, degree + 1):
            ncols = G ** d
            if ncols * ncols > self.MAX_TABLE_ENTRIES:
                raise ConfigError(
                    "ideal basis for %d generators at degree %d is too large; lower the degree"
                    % (G, d)
                )
            table = _EchelonTable(ncols, tol)
            cols = {w: i for i, w in enumerate(_words_of_degree(G, d))}
            for rel in alg.relations:
                for dl in range(d - 1):
                    dr = d - 2 - dl
                    for wl in _words_of_degree(G, dl):
                        for wr in _words_of_degree(G, dr):
                            vec = np.zeros(ncols, dtype=np.complex128)
                            for wrel, c in rel.terms.items():
                                vec[cols[wl + wrel + wr]] = c
                            table.insert(vec)
            table.finalize()
            self.tables[d] = (cols, table)

    def rank(self, d: int) -> int:
        if d not in self.tables:
            return 0
        return len(self.tables[d][1].pivots)

    def quotient_dimension(self, d: int) -> int:
        total = len(self.alg.cat) ** d
        return total - self.rank(d)

    def reduce(self, g: TruncatedSeries) -> TruncatedSeries:
        if g.cat != self.alg.cat:
            raise ConfigError("series not over this algebra's catalogue")
        if g.degree > self.degree:
            raise ConfigError("basis built only through degree %d" % self.degree)
        out = {w: c for w, c in g.terms.items() if len(w) < 2}
        for d in range(2, g.degree + 1):
            cols, table = self.tables[d]
            vec = np.zeros(len(cols), dtype=np.complex128)
            touched = False
            for w, c in g.terms.items():
                if len(w) == d:
                    vec[cols[w]] = c
                    touched = True
            if not touched:
                continue
            vec = table.residual(vec)
            words = list(cols)
            for i in np.flatnonzero(vec):
                out[words[int(i)]] = complex(vec[int(i)])
        return TruncatedSeries(g.cat, g.degree, out)

    # ---- disk cache (pivot tables) ------------------------------------

    def to_json(self) -> dict:
        data = {"strands": self.alg.strands, "degree": self.degree, "tolerance": self.tol, "tables": {}}
        for d, (cols, table) in self.tables.items():
            entries = []
            for k, p in enumerate(table.pivots):
                row = table.rows[k]
                nz = np.flatnonzero(row)
                entries.append({
                    "pivot": int(p),
                    "cols": [int(i) for i in nz],
                    "re": [float(row[i].real) for i in nz],
                    "im": [float(row[i].imag) for i in nz],
                })
            data["tables"][str(d)] = entries
        return data

    @classmethod
    def from_json(cls, alg: DKAlgebra, data: dict) -> "IdealBasis":
        if data.get("strands") != alg.strands:
            raise ConfigError("ideal-basis cache strand mismatch")
        self = cls.__new__(cls)
        self.alg = alg
        self.degree = int(data["degree"])
        self.tol = float(data["tolerance"])
        self.tables = {}
        G = len(alg.cat)
        for d_str, entries in data["tables"].items():
            d = int(d_str)
            cols = {w: i for i, w in enumerate(_words_of_degree(G, d))}
            ncols = len(cols)
            table = _EchelonTable(ncols, self.tol)
            loaded = np.zeros((len(entries), ncols), dtype=np.complex128)
            for k, e in enumerate(entries):
                for i, re_, im_ in zip(e["cols"], e["re"], e["im"]):
                    loaded[k, i] = complex(re_, im_)
                table.pivots.append(int(e["pivot"]))
            table.rows = loaded
            self.tables[d] = (cols, table)
        return self

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f)

    @classmethod
    def load(cls, alg: DKAlgebra, path) -> "IdealBasis":
        with open(path) as f:
            return cls.from_json(alg, json.load(f))


def reduce(g: TruncatedSeries, basis: IdealBasis) -> TruncatedSeries:
    return basis.reduce(g)


# ---- substitution morphisms ------------------------------------------------
#
# The one-point holonomy lives on the free alphabet t[1,z]..t[n,z].  Images
# below land in the (n+2)-strand algebra with moving points z and w.

def substitution_Hz(source: GeneratorCatalogue, dk: DKAlgebra, n: int, i: int, j: int) -> dict:
    """t[j,z] -> t[j,z] + t[w,z]; every other t[k,z] fixed."""
    _check_endpoints(n, i, j)
    images = {}
    for k in range(1, n + 1):
        src = source.id_of(pair_label(str(k), "z"))
        img = [(dk.gen_id(str(k), "z"), 1.0)]
        if k == j:
            img.append((dk.gen_id("z", "w"), 1.0))
        images[src] = img
    return images


def substitution_Hw(source: GeneratorCatalogue, dk: DKAlgebra, n: int, i: int, j: int) -> dict:
    """Relabel z->w; additionally t[i,w] -> t[i,w] + t[z,w]."""
    _check_endpoints(n, i, j)
    images = {}
    for k in range(1, n + 1):
        src = source.id_of(pair_label(str(k), "z"))
        img = [(dk.gen_id(str(k), "w"), 1.0)]
        if k == i:
            img.append((dk.gen_id("z", "w"), 1.0))
        images[src] = img
    return images


def substitution_Hzw(source: GeneratorCatalogue, dk: DKAlgebra, n: int) -> dict:
    """t[k,z] -> t[k,z] + t[k,w] for every k."""
    images = {}
    for k in range(1, n + 1):
        src = source.id_of(pair_label(str(k), "z"))
        images[src] = [(dk.gen_id(str(k), "z"), 1.0), (dk.gen_id(str(k), "w"), 1.0)]
    return images


def _check_endpoints(n: int, i: int, j: int):
    if not (1 <= i <= n and 1 <= j <= n):
        raise ConfigError("puncture indices out of range")
    if i == j:
        raise ConfigError("substitutions require distinct endpoint punctures i != j")


# ---- projection pi ---------------------------------------------------------

def projection_pi(g: TruncatedSeries, dk: DKAlgebra, n: int, tau: GeneratorCatalogue | None = None) -> TruncatedSeries:
    """Quotient by the ideal generated by t[z,w]: words containing the diagonal
    generator are dropped, and the surviving z- and w-letters commute, realized
    by stably sorting each word z-block-first.  Puncture-puncture generators are
    outside the holonomy image and are rejected."""
    if tau is None:
        tau = tau_catalogue(n)
    zw_id = dk.gen_id("z", "w")
    kind = {}
    for gid in range(len(dk.cat)):
        a, b = dk.strands_of_gen(gid)
        if {a, b} == {"z", "w"}:
            kind[gid] = ("zw", None)
        elif "z" in (a, b):
            k = a if b == "z" else b
            kind[gid] = ("z", tau.id_of(pair_label(k, "z")))
        elif "w" in (a, b):
            k = a if b == "w" else b
            kind[gid] = ("w", tau.id_of(pair_label(k, "w")))
        else:
            kind[gid] = ("pp", None)
    out = {}
    for w, c in g.terms.items():
        if any(kind[gid][0] == "pp" for gid in w):
            raise ConfigError("projection undefined on puncture-puncture generators")
        if zw_id in w:
            continue
        zpart = tuple(kind[gid][1] for gid in w if kind[gid][0] == "z")
        wpart = tuple(kind[gid][1] for gid in w if kind[gid][0] == "w")
        key = zpart + wpart
        s = out.get(key, 0.0) + c
        if s == 0:
            out.pop(key, None)
        else:
            out[key] = s
    return TruncatedSeries(tau, g.degree, out)


def tau_canonical(g: TruncatedSeries, n: int) -> TruncatedSeries:
    """Canonical form in the commuting-blocks algebra: z-letters before w-letters."""
    out = {}
    for w, c in g.terms.items():
        zpart = tuple(gid for gid in w if gid < n)
        wpart = tuple(gid for gid in w if gid >= n)
        key = zpart + wpart
        out[key] = out.get(key, 0.0) + c
    return TruncatedSeries(g.cat, g.degree, out)
