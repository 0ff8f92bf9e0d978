"""Verification suite: configured batteries of checks with a structured,
deterministic report.

The configuration lists which check families run and at what sizes; a fixed
seed drives every random instance, so reports are reproducible.  For checks
tagged `discretization`, refined variants run at doubled resolution with the
tolerance halved, and per-instance `refinement` records assert that the
worst violation does not grow under refinement.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import harness as hn
from .gaussian import Gaussian1D
from .harness import CheckRecord, INTEGRANDS, make_record
from .heat import Generator, cycle_generator, ou_generator
from .spaces import DiscreteMeasure, line_space, measure, new_space

DEFAULT_CONFIG = {
    "seed": 20250811,
    "tolerances": {
        "exact": 1e-9,
        "monotone": 1e-10,
        "discretization": 5e-2,
        "oracle": 1e-9,
        "certification": 1e-6,
        "refinement": 1e-12,
    },
    "families": {
        "convex_contraction": {
            "instances": 20,
            "n_points": 5,
            "integrands": ["square_diff", "abs_diff", "pos_part_sq", "sum_squares", "softmax_gap"],
            "t_grid": [0.02, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2],
        },
        "csiszar_contraction": {
            "instances": 10,
            "n_points": 5,
            "entropies": ["E1", "E2", "E0.5", "F2", "F1.5"],
            "t_grid": [0.05, 0.2, 0.8, 3.2],
        },
        "hellinger_contraction": {
            "instances": 10,
            "n_points": 5,
            "p_values": [1.0, 1.5, 2.0, 3.0],
            "t_grid": [0.05, 0.2, 0.8, 3.2],
        },
        "be_gradient": {
            "instances": 12,
            "n_points": 5,
            "t_grid": [0.02, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2],
        },
        "variance_bound": {
            "instances": 12,
            "n_points": 5,
            "t_grid": [0.02, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2],
        },
        "w2_contraction": {
            "cycle_n": 32,
            "ou_h": 0.1,
            "radius": 5.0,
            "t_grid": [0.05, 0.1, 0.2, 0.4],
            "gaussian_t_grid": [0.1, 0.25, 0.5, 1.0, 2.0],
            "refine": True,
        },
        "regularization_he_wp": {
            "gaussian_t_grid": [0.1, 0.25, 0.5, 1.0, 2.0],
            "cycle_n": 32,
            "ou_h": 0.1,
            "radius": 5.0,
            "p_discrete": [1.0, 2.0],
            "t_grid": [0.1, 0.2, 0.4],
            "refine": True,
        },
        "asymptotic": {
            "t_grid": [0.25, 0.5, 1.0, 2.0, 4.0],
            "cycle_n": 32,
            "ou_h": 0.1,
            "radius": 5.0,
        },
        "he_hk": {
            "cycle_n": 32,
            "ou_h": 0.1,
            "radius": 5.0,
            "t_grid": [0.05, 0.1, 0.2],
            "twopoint_t_grid": [0.01, 0.02, 0.05],
            "twopoint": True,
            "refine": True,
            "solver": {"max_iter": 40000},
        },
        "gaussian_certification": {},
    },
}

_FAMILY_NAMES = set(DEFAULT_CONFIG["families"])
_NUMERIC_KEYS = {
    "instances": int,
    "n_points": int,
    "cycle_n": int,
    "ou_h": float,
    "radius": float,
    "gaussian_pairs": int,
    "k_override": float,
}
_LIST_KEYS = {"integrands", "entropies", "p_values", "t_grid", "gaussian_t_grid", "p_discrete", "twopoint_t_grid"}
_FLAG_KEYS = {"refine", "twopoint"}


def validate_config(config) -> dict:
    """Normalize a config dict, raising ValueError with a schema diagnostic
    on malformed input.  An empty config yields an empty suite."""
    if config is None:
        return json.loads(json.dumps(DEFAULT_CONFIG))
    if not isinstance(config, dict):
        raise ValueError(f"config must be an object, got {type(config).__name__}")
    known_top = {"seed", "tolerances", "families"}
    for key in config:
        if key not in known_top:
            raise ValueError(f"unknown config key {key!r}; expected one of {sorted(known_top)}")
    out = {"seed": config.get("seed", DEFAULT_CONFIG["seed"])}
    if not isinstance(out["seed"], int):
        raise ValueError(f"seed must be an integer, got {out['seed']!r}")
    tols = dict(DEFAULT_CONFIG["tolerances"])
    for key, val in config.get("tolerances", {}).items():
        if key not in tols:
            raise ValueError(f"unknown tolerance {key!r}; expected one of {sorted(tols)}")
        if not isinstance(val, (int, float)) or val < 0:
            raise ValueError(f"tolerance {key!r} must be a nonnegative number, got {val!r}")
        tols[key] = float(val)
    out["tolerances"] = tols
    fams = config.get("families", {})
    if not isinstance(fams, dict):
        raise ValueError("families must be an object")
    norm = {}
    for name, section in fams.items():
        if name not in _FAMILY_NAMES:
            raise ValueError(f"unknown check family {name!r}; expected one of {sorted(_FAMILY_NAMES)}")
        if section is None:
            section = {}
        if not isinstance(section, dict):
            raise ValueError(f"family {name!r} options must be an object")
        merged = dict(DEFAULT_CONFIG["families"][name])
        for key, val in section.items():
            if key in _NUMERIC_KEYS:
                merged[key] = _NUMERIC_KEYS[key](val)
            elif key in _LIST_KEYS:
                if not isinstance(val, (list, tuple)):
                    raise ValueError(f"{name}.{key} must be a list")
                merged[key] = list(val)
            elif key in _FLAG_KEYS:
                merged[key] = bool(val)
            elif key == "solver":
                if not isinstance(val, dict):
                    raise ValueError(f"{name}.solver must be an object")
                allowed = {"epsilon_schedule", "max_iter", "tol"}
                bad = set(val) - allowed
                if bad:
                    raise ValueError(f"{name}.solver has unknown keys {sorted(bad)}")
                merged[key] = dict(val)
            else:
                raise ValueError(f"unknown option {key!r} in family {name!r}")
        norm[name] = merged
    out["families"] = norm
    return out


@dataclass
class SuiteReport:
    seed: int
    records: list

    def counts(self) -> dict:
        out = {"pass": 0, "fail": 0, "inconclusive": 0}
        for r in self.records:
            out[r.verdict] += 1
        return out

    def families(self) -> dict:
        fams = {}
        for r in self.records:
            f = fams.setdefault(
                r.name,
                {"records": 0, "fail": 0, "inconclusive": 0, "worst_slack": math.inf},
            )
            f["records"] += 1
            if r.verdict == "fail":
                f["fail"] += 1
            elif r.verdict == "inconclusive":
                f["inconclusive"] += 1
            f["worst_slack"] = min(f["worst_slack"], r.slack)
        return dict(sorted(fams.items()))

    def ok(self, strict: bool = False) -> bool:
        c = self.counts()
        if c["fail"] > 0:
            return False
        return not (strict and c["inconclusive"] > 0)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "counts": self.counts(),
            "families": self.families(),
            "records": [
                {
                    "name": r.name,
                    "params": r.params,
                    "lhs": r.lhs,
                    "rhs": r.rhs,
                    "slack": r.slack,
                    "tolerance": r.tolerance,
                    "exactness": r.exactness,
                    "verdict": r.verdict,
                }
                for r in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", "params", "lhs", "rhs", "slack", "tolerance", "exactness", "verdict"])
        for r in self.records:
            flat = ";".join(f"{k}={_fmt(v)}" for k, v in sorted(r.params.items()))
            writer.writerow(
                [r.name, flat, _fmt(r.lhs), _fmt(r.rhs), _fmt(r.slack), _fmt(r.tolerance), r.exactness, r.verdict]
            )
        return buf.getvalue()

    def summary_text(self) -> str:
        lines = []
        for name, f in self.families().items():
            lines.append(
                f"{name}: {f['records']} records, {f['fail']} fail, "
                f"{f['inconclusive']} inconclusive, worst slack {_fmt(f['worst_slack'])}"
            )
        c = self.counts()
        lines.append(
            f"total: {len(self.records)} records, {c['pass']} pass, "
            f"{c['fail']} fail, {c['inconclusive']} inconclusive"
        )
        return "\n".join(lines)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


# ---------------------------------------------------------------------------
# deterministic instance builders


def _random_chain(rng, n: int) -> Generator:
    """Random dense reversible generator on n line-embedded points, scaled
    to unit jump rate so exponential factors over the time grid stay well
    inside double precision."""
    m = rng.uniform(0.3, 1.7, n)
    m /= m.sum()
    cond = rng.uniform(0.2, 1.2, (n, n))
    cond = 0.5 * (cond + cond.T)
    L = cond / m[:, None]
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    L /= np.abs(np.diag(L)).max()
    x = np.sort(rng.uniform(0.0, 3.0, n)) + np.arange(n) * 0.05
    return Generator(line_space(x, m), L)


def _random_density(rng, n: int, zeros: float = 0.0):
    f = rng.uniform(0.05, 2.0, n)
    if zeros > 0:
        mask = rng.random(n) < zeros
        f[mask] = 0.0
    return f


def _cycle_measures(space) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Smooth positive densities against the uniform reference; the same
    continuum instance at every resolution."""
    theta = 2.0 * math.pi * np.arange(space.n) / space.n
    d0 = 1.0 + 0.5 * np.sin(theta) + 0.3 * np.cos(2.0 * theta + 1.0)
    d1 = 1.0 + 0.4 * np.cos(theta - 0.5) + 0.2 * np.sin(3.0 * theta)
    w0 = d0 * space.m
    w1 = d1 * space.m
    return measure(w0 / w0.sum()), measure(w1 / w1.sum())


def _ou_positions(G: Generator):
    n = G.n
    half = (n - 1) // 2
    d = G.space.dist[0, 1]
    return (np.arange(n) - half) * d


def _ou_measures(G: Generator) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    x = _ou_positions(G)
    w0 = np.exp(-((x - 0.8) ** 2) / (2 * 0.64))
    w1 = np.exp(-((x + 0.5) ** 2) / (2 * 1.21))
    return measure(w0 / w0.sum()), measure(w1 / w1.sum())


_GAUSSIAN_SET = [
    Gaussian1D(0.0, 1.0),
    Gaussian1D(1.0, 1.0),
    Gaussian1D(-1.0, 0.5),
    Gaussian1D(0.5, 1.5),
    Gaussian1D(-0.25, 0.8),
]


# ---------------------------------------------------------------------------
# family runners; each returns a list of job callables


def _jobs_convex(section, tols, seed):
    jobs = []
    t_grid = section["t_grid"]

    def job(i):
        rng = np.random.default_rng([seed, 1, i])
        G = _random_chain(rng, section["n_points"])
        f = rng.normal(0.0, 1.0, G.n) * rng.choice([0.5, 1.0, 3.0])
        g = rng.normal(0.0, 1.0, G.n)
        recs = []
        for name in section["integrands"]:
            recs.extend(
                hn.check_convex_contraction(
                    G,
                    INTEGRANDS[name],
                    f,
                    g,
                    t_grid,
                    tolerance=tols["exact"],
                    mono_tolerance=tols["monotone"],
                    params={"instance": i},
                    rng=np.random.default_rng([seed, 1, i, 99]),
                )
            )
        return recs

    for i in range(section["instances"]):
        jobs.append(lambda i=i: job(i))
    return jobs


def _jobs_csiszar(section, tols, seed):
    jobs = []

    def job(i):
        rng = np.random.default_rng([seed, 2, i])
        G = _random_chain(rng, section["n_points"])
        f = _random_density(rng, G.n, zeros=0.2)
        g = _random_density(rng, G.n, zeros=0.2)
        recs = []
        for name in section["entropies"]:
            recs.extend(
                hn.check_csiszar_contraction(
                    G,
                    hn._entropy_by_name(name),
                    f,
                    g,
                    section["t_grid"],
                    tolerance=tols["exact"],
                    params={"instance": i},
                )
            )
        return recs

    for i in range(section["instances"]):
        jobs.append(lambda i=i: job(i))
    return jobs


def _jobs_hellinger(section, tols, seed):
    jobs = []

    def job(i):
        rng = np.random.default_rng([seed, 3, i])
        G = _random_chain(rng, section["n_points"])
        mu0 = measure(_random_density(rng, G.n, zeros=0.25))
        mu1 = measure(_random_density(rng, G.n, zeros=0.25))
        recs = []
        for p in section["p_values"]:
            recs.extend(
                hn.check_hellinger_contraction(
                    G, mu0, mu1, p, section["t_grid"], tolerance=tols["exact"], params={"instance": i}
                )
            )
        return recs

    for i in range(section["instances"]):
        jobs.append(lambda i=i: job(i))
    return jobs


def _jobs_pointwise_be(section, tols, seed, which: str):
    jobs = []
    tag = 4 if which == "be_gradient" else 5
    check = hn.check_be_gradient if which == "be_gradient" else hn.check_variance_bound
    k_override = section.get("k_override")

    def job(i):
        rng = np.random.default_rng([seed, tag, i])
        if i == 0:
            G = Generator(new_space([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5]), [[-1.0, 1.0], [1.0, -1.0]])
        else:
            G = _random_chain(rng, section["n_points"])
        f = rng.normal(0.0, 1.0, G.n) * rng.choice([0.5, 1.0, 3.0])
        return check(
            G,
            f,
            section["t_grid"],
            K=k_override,
            tolerance=tols["exact"],
            params={"instance": i},
        )

    for i in range(section["instances"]):
        jobs.append(lambda i=i: job(i))
    return jobs


def _refinement_records(name, instance, coarse, fine, tol):
    """Worst violation must not grow when the grid is refined."""
    vc = max(0.0, -min((r.slack for r in coarse), default=0.0))
    vf = max(0.0, -min((r.slack for r in fine), default=0.0))
    return [
        make_record(
            f"{name}_refinement",
            {"instance": instance},
            vf,
            vc,
            tol,
            hn.DISCRETIZATION,
        )
    ]


def _jobs_w2(section, tols, seed):
    k_override = section.get("k_override")

    def cycle_job():
        recs = []
        for label, n, tolerance in _resolutions(section, "cycle", tols["discretization"]):
            G = cycle_generator(n, 2.0 * math.pi)
            mu0, mu1 = _cycle_measures(G.space)
            recs.append(
                hn.check_w2_contraction(
                    G, mu0, mu1, section["t_grid"], K=k_override,
                    tolerance=tolerance, params={"instance": f"cycle{n}"},
                )
            )
        out = recs[0]
        if len(recs) > 1:
            out = recs[0] + recs[1] + _refinement_records(
                "w2_contraction", "cycle", recs[0], recs[1], tols["refinement"]
            )
        return out

    def ou_job():
        recs = []
        for label, h, tolerance in _resolutions(section, "ou", tols["discretization"]):
            G = ou_generator(h, section["radius"])
            mu0, mu1 = _ou_measures(G)
            recs.append(
                hn.check_w2_contraction(
                    G, mu0, mu1, section["t_grid"], K=k_override,
                    tolerance=tolerance, params={"instance": f"ou{h:g}"},
                )
            )
        out = recs[0]
        if len(recs) > 1:
            out = recs[0] + recs[1] + _refinement_records(
                "w2_contraction", "ou", recs[0], recs[1], tols["refinement"]
            )
        return out

    def gauss_job():
        recs = []
        for i, g0 in enumerate(_GAUSSIAN_SET):
            for g1 in _GAUSSIAN_SET[i + 1 :]:
                recs.extend(
                    hn.check_w2_contraction_gaussian(
                        g0, g1, section["gaussian_t_grid"], tolerance=tols["oracle"],
                        params={"pair": f"N({g0.mean:g},{g0.var:g})|N({g1.mean:g},{g1.var:g})"},
                    )
                )
        return recs

    return [cycle_job, ou_job, gauss_job]


def _resolutions(section, kind, tol):
    if kind == "cycle":
        base = section["cycle_n"]
        out = [("base", base, tol)]
        if section.get("refine"):
            out.append(("fine", base * 2, tol / 2.0))
        return out
    base = section["ou_h"]
    out = [("base", base, tol)]
    if section.get("refine"):
        out.append(("fine", base / 2.0, tol / 2.0))
    return out


def _jobs_regularization(section, tols, seed):
    k_override = section.get("k_override")

    def gauss_job():
        recs = []
        for g0 in _GAUSSIAN_SET:
            for g1 in _GAUSSIAN_SET:
                recs.extend(
                    hn.check_regularization_he_wp_gaussian(
                        g0, g1, section["gaussian_t_grid"], tolerance=tols["oracle"],
                        params={"pair": f"N({g0.mean:g},{g0.var:g})|N({g1.mean:g},{g1.var:g})"},
                    )
                )
        return recs

    def cycle_job():
        recs = []
        for label, n, tolerance in _resolutions(section, "cycle", tols["discretization"]):
            G = cycle_generator(n, 2.0 * math.pi)
            mu0, mu1 = _cycle_measures(G.space)
            batch = []
            for p in section["p_discrete"]:
                batch.extend(
                    hn.check_regularization_he_wp(
                        G, mu0, mu1, p, section["t_grid"], K=k_override,
                        tolerance=tolerance, params={"instance": f"cycle{n}"},
                    )
                )
            recs.append(batch)
        out = recs[0]
        if len(recs) > 1:
            out = recs[0] + recs[1] + _refinement_records(
                "regularization_he_wp", "cycle", recs[0], recs[1], tols["refinement"]
            )
        return out

    def ou_job():
        recs = []
        for label, h, tolerance in _resolutions(section, "ou", tols["discretization"]):
            G = ou_generator(h, section["radius"])
            mu0, mu1 = _ou_measures(G)
            batch = []
            for p in section["p_discrete"]:
                batch.extend(
                    hn.check_regularization_he_wp(
                        G, mu0, mu1, p, section["t_grid"], K=k_override,
                        tolerance=tolerance, params={"instance": f"ou{h:g}"},
                    )
                )
            recs.append(batch)
        out = recs[0]
        if len(recs) > 1:
            out = recs[0] + recs[1] + _refinement_records(
                "regularization_he_wp", "ou", recs[0], recs[1], tols["refinement"]
            )
        return out

    return [gauss_job, cycle_job, ou_job]


def _jobs_asymptotic(section, tols, seed):
    def gauss_job():
        recs = []
        for g0 in (Gaussian1D(1.0, 1.0), Gaussian1D(0.5, 0.25), Gaussian1D(-0.7, 2.0)):
            recs.extend(
                hn.check_asymptotic_gaussian(
                    g0, section["t_grid"], tolerance=tols["oracle"],
                    params={"start": f"N({g0.mean:g},{g0.var:g})"},
                )
            )
        return recs

    def cycle_job():
        G = cycle_generator(section["cycle_n"], 2.0 * math.pi)
        mu0, _ = _cycle_measures(G.space)
        return hn.check_asymptotic(
            G, mu0, 2.0, section["t_grid"], tolerance=tols["discretization"],
            params={"instance": f"cycle{section['cycle_n']}"},
        )

    def ou_job():
        G = ou_generator(section["ou_h"], section["radius"])
        mu0, _ = _ou_measures(G)
        return hn.check_asymptotic(
            G, mu0, 2.0, section["t_grid"], tolerance=tols["discretization"],
            params={"instance": f"ou{section['ou_h']:g}"},
        )

    return [gauss_job, cycle_job, ou_job]


def _jobs_he_hk(section, tols, seed):
    solver = section.get("solver", {})
    k_override = section.get("k_override")

    def twopoint_job():
        G = Generator(new_space([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5]), [[-1.0, 1.0], [1.0, -1.0]])
        mu0 = measure([1.0, 0.0])
        mu1 = measure([0.0, 1.0])
        return hn.check_he_hk(
            G, mu0, mu1, section["twopoint_t_grid"], K=k_override,
            tolerance=tols["discretization"], solver_opts=solver,
            params={"instance": "twopoint"},
        )

    def cycle_job():
        recs = []
        for label, n, tolerance in _resolutions(section, "cycle", tols["discretization"]):
            G = cycle_generator(n, 2.0 * math.pi)
            mu0, mu1 = _cycle_measures(G.space)
            recs.append(
                hn.check_he_hk(
                    G, mu0, mu1, section["t_grid"], K=k_override,
                    tolerance=tolerance, solver_opts=solver,
                    params={"instance": f"cycle{n}"},
                )
            )
        out = recs[0]
        if len(recs) > 1:
            out = recs[0] + recs[1] + _refinement_records(
                "he_hk", "cycle", recs[0], recs[1], tols["refinement"]
            )
        return out

    def ou_job():
        recs = []
        for label, h, tolerance in _resolutions(section, "ou", tols["discretization"]):
            G = ou_generator(h, section["radius"])
            mu0, mu1 = _ou_measures(G)
            recs.append(
                hn.check_he_hk(
                    G, mu0, mu1, section["t_grid"], K=k_override,
                    tolerance=tolerance, solver_opts=solver,
                    params={"instance": f"ou{h:g}"},
                )
            )
        out = recs[0]
        if len(recs) > 1:
            out = recs[0] + recs[1] + _refinement_records(
                "he_hk", "ou", recs[0], recs[1], tols["refinement"]
            )
        return out

    jobs = [cycle_job, ou_job]
    if section.get("twopoint"):
        jobs.append(twopoint_job)
    return jobs


def run_suite(config=None, threads: int = 1) -> SuiteReport:
    """Execute every configured check family and aggregate the records."""
    cfg = validate_config(config)
    seed = cfg["seed"]
    tols = cfg["tolerances"]
    jobs = []
    for name, section in cfg["families"].items():
        if name == "convex_contraction":
            jobs += _jobs_convex(section, tols, seed)
        elif name == "csiszar_contraction":
            jobs += _jobs_csiszar(section, tols, seed)
        elif name == "hellinger_contraction":
            jobs += _jobs_hellinger(section, tols, seed)
        elif name in ("be_gradient", "variance_bound"):
            jobs += _jobs_pointwise_be(section, tols, seed, name)
        elif name == "w2_contraction":
            jobs += _jobs_w2(section, tols, seed)
        elif name == "regularization_he_wp":
            jobs += _jobs_regularization(section, tols, seed)
        elif name == "asymptotic":
            jobs += _jobs_asymptotic(section, tols, seed)
        elif name == "he_hk":
            jobs += _jobs_he_hk(section, tols, seed)
        elif name == "gaussian_certification":
            jobs.append(lambda: hn.check_gaussian_certification(tols["certification"]))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda j: j(), jobs))
    else:
        chunks = [j() for j in jobs]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=CheckRecord.key)
    return SuiteReport(seed=seed, records=records)
