"""Truncated noncommutative power series over a finite generator alphabet.

Series are stored sparsely as word -> complex coefficient maps, where a word
is a tuple of generator ids and its degree is its length.  Everything above
the truncation degree is discarded, so the algebra is nilpotent-above-unit
and exp/log/inverse are finite loops.
"""

from __future__ import annotations

from .errors import ConfigError

Word = tuple  # tuple[int, ...] of generator ids


class GeneratorCatalogue:
    """Dense 0..G-1 indexing of generator display labels."""

    def __init__(self, labels):
        labels = list(labels)
        if len(set(labels)) != len(labels):
            raise ConfigError("duplicate generator labels: %r" % (labels,))
        self.labels = labels
        self.index = {lab: i for i, lab in enumerate(labels)}

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        return isinstance(other, GeneratorCatalogue) and self.labels == other.labels

    def __hash__(self):
        return hash(tuple(self.labels))

    def __repr__(self):
        return "GeneratorCatalogue(%r)" % (self.labels,)

    def id_of(self, label) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise ConfigError("unknown generator %r" % (label,)) from None


def _check_compatible(a: "TruncatedSeries", b: "TruncatedSeries"):
    if a.cat != b.cat:
        raise ConfigError("generator catalogue mismatch")
    if a.degree != b.degree:
        raise ConfigError("truncation degree mismatch: %d vs %d" % (a.degree, b.degree))


class TruncatedSeries:
    """Element of the free associative algebra truncated at total degree D."""

    __slots__ = ("cat", "degree", "terms")

    def __init__(self, cat: GeneratorCatalogue, degree: int, terms=None, drop_tol: float = 0.0):
        if degree < 0:
            raise ConfigError("degree must be >= 0")
        self.cat = cat
        self.degree = degree
        clean = {}
        if terms:
            G = len(cat)
            for w, c in terms.items():
                w = tuple(w)
                if len(w) > degree:
                    continue
                if any((g < 0 or g >= G) for g in w):
                    raise ConfigError("word %r uses ids outside catalogue" % (w,))
                c = complex(c)
                if abs(c) > drop_tol or (drop_tol == 0.0 and c != 0):
                    clean[w] = c
        self.terms = clean

    # ---- constructors -------------------------------------------------

    @classmethod
    def zero(cls, cat, degree):
        return cls(cat, degree)

    @classmethod
    def unit(cls, cat, degree, coeff=1.0):
        return cls(cat, degree, {(): complex(coeff)})

    @classmethod
    def generator(cls, cat, degree, label, coeff=1.0):
        return cls(cat, degree, {(cat.id_of(label),): complex(coeff)})

    @classmethod
    def from_words(cls, cat, degree, terms):
        """Build from {word-of-labels: coeff}, e.g. {("A","B"): 1.0}."""
        ids = {tuple(cat.id_of(l) for l in w): c for w, c in terms.items()}
        return cls(cat, degree, ids)

    # ---- inspection ---------------------------------------------------

    def coeff(self, word) -> complex:
        return self.terms.get(tuple(word), 0.0 + 0.0j)

    def coeff_labels(self, labels) -> complex:
        return self.coeff(tuple(self.cat.id_of(l) for l in labels))

    def constant_term(self) -> complex:
        return self.terms.get((), 0.0 + 0.0j)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def max_abs_by_degree(self):
        out = [0.0] * (self.degree + 1)
        for w, c in self.terms.items():
            d = len(w)
            if abs(c) > out[d]:
                out[d] = abs(c)
        return out

    def homogeneous(self, d: int) -> dict:
        return {w: c for w, c in self.terms.items() if len(w) == d}

    def truncated(self, degree: int) -> "TruncatedSeries":
        if degree > self.degree:
            raise ConfigError("cannot extend truncation degree %d -> %d" % (self.degree, degree))
        return TruncatedSeries(self.cat, degree, {w: c for w, c in self.terms.items() if len(w) <= degree})

    def prune(self, tol: float) -> "TruncatedSeries":
        return TruncatedSeries(self.cat, self.degree, {w: c for w, c in self.terms.items() if abs(c) > tol})

    def __repr__(self):
        if not self.terms:
            return "<series 0 (D=%d)>" % self.degree
        parts = []
        for w in sorted(self.terms, key=lambda w: (len(w), w))[:8]:
            lab = "*".join(self.cat.labels[g] for g in w) or "1"
            parts.append("(%.6g%+.6gj)%s" % (self.terms[w].real, self.terms[w].imag, lab))
        more = "" if len(self.terms) <= 8 else " +%d terms" % (len(self.terms) - 8)
        return "<series %s%s (D=%d)>" % (" + ".join(parts), more, self.degree)

    # ---- linear structure ---------------------------------------------

    def __add__(self, other):
        _check_compatible(self, other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            s = out.get(w, 0.0) + c
            if s == 0:
                out.pop(w, None)
            else:
                out[w] = s
        return TruncatedSeries(self.cat, self.degree, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return TruncatedSeries(self.cat, self.degree, {w: -c for w, c in self.terms.items()})

    def scaled(self, z) -> "TruncatedSeries":
        z = complex(z)
        if z == 0:
            return TruncatedSeries.zero(self.cat, self.degree)
        return TruncatedSeries(self.cat, self.degree, {w: z * c for w, c in self.terms.items()})

    def __rmul__(self, z):
        return self.scaled(z)

    # ---- multiplicative structure --------------------------------------

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self.scaled(other)
        _check_compatible(self, other)
        D = self.degree
        by_deg_b = [dict() for _ in range(D + 1)]
        for w, c in other.terms.items():
            by_deg_b[len(w)][w] = c
        out = {}
        for wa, ca in self.terms.items():
            da = len(wa)
            for db in range(D - da + 1):
                for wb, cb in by_deg_b[db].items():
                    w = wa + wb
                    s = out.get(w, 0.0) + ca * cb
                    if s == 0:
                        out.pop(w, None)
                    else:
                        out[w] = s
        return TruncatedSeries(self.cat, self.degree, out)

    def left_mul_gen(self, gen_id: int, coeff=1.0) -> "TruncatedSeries":
        """coeff * g * self, dropping overflow words (hot path in transports)."""
        out = {}
        D = self.degree
        for w, c in self.terms.items():
            if len(w) < D:
                out[(gen_id,) + w] = coeff * c
        return TruncatedSeries(self.cat, self.degree, out)

    def exp(self) -> "TruncatedSeries":
        if self.constant_term() != 0:
            raise ConfigError("exp requires zero constant term")
        acc = TruncatedSeries.unit(self.cat, self.degree)
        term = TruncatedSeries.unit(self.cat, self.degree)
        for k in range(1, self.degree + 1):
            term = term * self.scaled(1.0 / k)
            acc = acc + term
        return acc

    def log(self) -> "TruncatedSeries":
        if self.constant_term() != 1:
            raise ConfigError("log requires constant term exactly 1")
        u = self - TruncatedSeries.unit(self.cat, self.degree)
        acc = TruncatedSeries.zero(self.cat, self.degree)
        power = TruncatedSeries.unit(self.cat, self.degree)
        for k in range(1, self.degree + 1):
            power = power * u
            acc = acc + power.scaled((-1.0) ** (k + 1) / k)
        return acc

    def inverse(self) -> "TruncatedSeries":
        c0 = self.constant_term()
        if c0 == 0:
            raise ConfigError("inverse requires invertible constant term")
        u = self.scaled(1.0 / c0) - TruncatedSeries.unit(self.cat, self.degree)
        acc = TruncatedSeries.unit(self.cat, self.degree)
        power = TruncatedSeries.unit(self.cat, self.degree)
        sign = 1.0
        for _ in range(self.degree):
            power = power * u
            sign = -sign
            acc = acc + power.scaled(sign)
        return acc.scaled(1.0 / c0)

    # ---- coproduct ------------------------------------------------------

    def coproduct(self) -> "TensorSquareSeries":
        """Standard coproduct with primitive generators: each word is split
        over all choices of complementary position subsets (order preserved)."""
        out = {}
        for w, c in self.terms.items():
            d = len(w)
            for mask in range(1 << d):
                left = tuple(w[i] for i in range(d) if mask & (1 << i))
                right = tuple(w[i] for i in range(d) if not mask & (1 << i))
                key = (left, right)
                s = out.get(key, 0.0) + c
                if s == 0:
                    out.pop(key, None)
                else:
                    out[key] = s
        return TensorSquareSeries(self.cat, self.degree, out)

    def grouplike_defect(self) -> float:
        delta = self.coproduct()
        sq = TensorSquareSeries.outer(self, self)
        return (delta - sq).max_abs()

    # ---- morphisms -------------------------------------------------------

    def substituted(self, images: dict, target: GeneratorCatalogue) -> "TruncatedSeries":
        """Apply the algebra morphism sending source generator id g to the
        degree-1 combination images[g] = [(target_id, coeff), ...]."""
        out = TruncatedSeries.zero(target, self.degree)
        cache = {}
        for w, c in self.terms.items():
            if w not in cache:
                acc = {(): 1.0 + 0.0j}
                for g in w:
                    try:
                        img = images[g]
                    except KeyError:
                        raise ConfigError("no image for generator %r" % (self.cat.labels[g],)) from None
                    nxt = {}
                    for wv, cv in acc.items():
                        for tg, tc in img:
                            key = wv + (tg,)
                            nxt[key] = nxt.get(key, 0.0) + cv * tc
                    acc = nxt
                cache[w] = acc
            for wv, cv in cache[w].items():
                out.terms[wv] = out.terms.get(wv, 0.0) + c * cv
        out.terms = {w: c for w, c in out.terms.items() if c != 0}
        return out


class TensorSquareSeries:
    """Element of the (truncated) tensor square; keys are word pairs with
    total degree <= D."""

    __slots__ = ("cat", "degree", "terms")

    def __init__(self, cat, degree, terms=None):
        self.cat = cat
        self.degree = degree
        clean = {}
        if terms:
            for (wl, wr), c in terms.items():
                if len(wl) + len(wr) > degree or c == 0:
                    continue
                clean[(tuple(wl), tuple(wr))] = complex(c)
        self.terms = clean

    @classmethod
    def outer(cls, a: TruncatedSeries, b: TruncatedSeries) -> "TensorSquareSeries":
        _check_compatible(a, b)
        out = {}
        for wl, cl in a.terms.items():
            for wr, cr in b.terms.items():
                if len(wl) + len(wr) <= a.degree:
                    key = (wl, wr)
                    out[key] = out.get(key, 0.0) + cl * cr
        return cls(a.cat, a.degree, out)

    def __sub__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k, 0.0) - c
            if s == 0:
                out.pop(k, None)
            else:
                out[k] = s
        return TensorSquareSeries(self.cat, self.degree, out)

    def __mul__(self, other):
        # componentwise concatenation product (a (x) b)(c (x) d) = ac (x) bd
        out = {}
        for (al, ar), ca in self.terms.items():
            for (bl, br), cb in other.terms.items():
                wl, wr = al + bl, ar + br
                if len(wl) + len(wr) > self.degree:
                    continue
                key = (wl, wr)
                s = out.get(key, 0.0) + ca * cb
                if s == 0:
                    out.pop(key, None)
                else:
                    out[key] = s
        return TensorSquareSeries(self.cat, self.degree, out)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)


# ---- module-level operation aliases (spec surface) -----------------------

def add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return a + b


def mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return a * b


def exp(x: TruncatedSeries) -> TruncatedSeries:
    return x.exp()


def log(g: TruncatedSeries) -> TruncatedSeries:
    return g.log()


def inverse(g: TruncatedSeries) -> TruncatedSeries:
    return g.inverse()


def coproduct(g: TruncatedSeries) -> TensorSquareSeries:
    return g.coproduct()


def grouplike_defect(g: TruncatedSeries) -> float:
    return g.grouplike_defect()


def apply_linear_substitution(g: TruncatedSeries, images: dict, target: GeneratorCatalogue) -> TruncatedSeries:
    return g.substituted(images, target)


# ---- JSON serialization ----------------------------------------------------

def series_to_json(s: TruncatedSeries) -> dict:
    terms = []
    for w in sorted(s.terms, key=lambda w: (len(w), w)):
        c = s.terms[w]
        terms.append({"word": [s.cat.labels[g] for g in w], "re": c.real, "im": c.imag})
    return {"degree": s.degree, "terms": terms}


def series_from_json(obj: dict, cat: GeneratorCatalogue) -> TruncatedSeries:
    try:
        degree = int(obj["degree"])
        terms = {}
        for t in obj["terms"]:
            w = tuple(cat.id_of(l) for l in t["word"])
            terms[w] = complex(float(t["re"]), float(t["im"]))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError("malformed series JSON: %s" % e) from None
    return TruncatedSeries(cat, degree, terms)
