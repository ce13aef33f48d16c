"""The KZ associator as a universal two-letter series, computed as the
regularized holonomy along the straight segment between punctures 0 and 1,
plus substitution into arbitrary degree-1 targets and a JSON cache."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from .errors import ConfigError, NumericsError
from .holonomy import EngineConfig, free_connection, hol_reg
from .paths import PathSpec, TangentialPoint, analyze
from .series import GeneratorCatalogue, TruncatedSeries, series_from_json, series_to_json

ASSOCIATOR_CAT = GeneratorCatalogue(["A", "B"])
DEGREE1_TOL = 1e-8
GROUPLIKE_TOL = 1e-8


@dataclass
class AssociatorTable:
    degree: int
    series: TruncatedSeries
    diagnostics: dict
    config: dict

    def check_invariants(self):
        s = self.series
        if abs(s.constant_term() - 1.0) > 1e-12:
            raise NumericsError("associator constant term is not 1")
        d1 = max(abs(s.coeff_labels(("A",))), abs(s.coeff_labels(("B",))))
        if d1 > DEGREE1_TOL:
            raise NumericsError("associator degree-1 coefficients exceed %g: %g" % (DEGREE1_TOL, d1))
        defect = s.grouplike_defect()
        if defect > GROUPLIKE_TOL:
            raise NumericsError("associator group-like defect %g exceeds %g" % (defect, GROUPLIKE_TOL))
        return {"degree1_max": d1, "grouplike_defect": defect}


def compute_associator(degree: int, cfg: EngineConfig | None = None) -> AssociatorTable:
    """Regularized holonomy over {0, 1} along [0,1] from (0, 1) to (1, -1)."""
    if degree < 1:
        raise ConfigError("associator degree must be >= 1")
    if cfg is None:
        cfg = EngineConfig(degree=degree)
    elif cfg.degree != degree:
        cfg = EngineConfig(**{**cfg.config_key(), "degree": degree, "tolerance": cfg.tolerance})
    conn = free_connection([0.0, 1.0], ASSOCIATOR_CAT)
    spec = PathSpec([0.0, 1.0], TangentialPoint(0, 1.0), TangentialPoint(1, -1.0), [])
    phi = hol_reg(conn, analyze(spec), cfg)
    table = AssociatorTable(degree, phi, {}, cfg.config_key())
    table.diagnostics = table.check_invariants()
    return table


def phi_at(table: AssociatorTable, a, b, target: GeneratorCatalogue) -> TruncatedSeries:
    """Substitute A -> a, B -> b; a and b are degree-1 series over `target`
    (or bare generator ids)."""
    img_a = _degree1_image(a, target)
    img_b = _degree1_image(b, target)
    if sorted(img_a) == sorted(img_b):
        raise ConfigError("associator substitution requires distinct arguments")
    images = {ASSOCIATOR_CAT.id_of("A"): img_a, ASSOCIATOR_CAT.id_of("B"): img_b}
    return table.series.substituted(images, target)


def _degree1_image(x, target: GeneratorCatalogue):
    if isinstance(x, int):
        return [(x, 1.0 + 0.0j)]
    if isinstance(x, TruncatedSeries):
        if x.cat != target:
            raise ConfigError("substitution argument over the wrong catalogue")
        img = []
        for w, c in x.terms.items():
            if len(w) != 1:
                raise ConfigError("substitution arguments must be homogeneous of degree 1")
            img.append((w[0], c))
        return img
    raise ConfigError("substitution argument must be a generator id or degree-1 series")


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------

def _cache_name(degree: int, config: dict) -> str:
    digest = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:12]
    return "phi_D%d_%s.json" % (degree, digest)


def save_table(table: AssociatorTable, path: str):
    payload = {
        "kind": "kz-associator",
        "degree": table.degree,
        "config": table.config,
        "diagnostics": table.diagnostics,
        "series": series_to_json(table.series),
    }
    with open(path, "w") as f:
        json.dump(payload, f)


def load_table(path: str, degree: int) -> AssociatorTable:
    try:
        with open(path) as f:
            payload = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError("cannot read associator cache %s: %s" % (path, e)) from None
    if payload.get("kind") != "kz-associator":
        raise ConfigError("%s is not an associator cache file" % path)
    stored = int(payload["degree"])
    if stored < degree:
        raise ConfigError(
            "cached associator has degree %d < requested %d; recompute required" % (stored, degree)
        )
    series = series_from_json(payload["series"], ASSOCIATOR_CAT).truncated(degree)
    table = AssociatorTable(degree, series, payload.get("diagnostics", {}), payload.get("config", {}))
    table.check_invariants()
    return table


def get_associator(degree: int, cfg: EngineConfig | None = None, cache_dir: str | None = None) -> AssociatorTable:
    """Cached associator lookup; computes and stores on miss."""
    if cfg is None:
        cfg = EngineConfig(degree=degree)
    if cache_dir:
        # any cached table with the same engine key and degree >= requested works
        exact = os.path.join(cache_dir, _cache_name(degree, {**cfg.config_key(), "degree": degree}))
        if os.path.exists(exact):
            return load_table(exact, degree)
    table = compute_associator(degree, cfg)
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        save_table(table, os.path.join(cache_dir, _cache_name(degree, {**cfg.config_key(), "degree": degree})))
    return table
