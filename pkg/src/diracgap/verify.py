"""Seeded batch verification of the operator inequalities, one row per check."""
from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .errors import DiracGapError
from .inequalities import (KATO_CONSTANT, TrialFunction, hardy_dirac_margins, ims_residual, kato_margin,
                           lemma9_check, vmu_norm_and_embedding)
from .measure import ChargeMeasure
from .molecule import MoleculeSpec, lemma5_margin
from .partitions import BallPartition, BeckeSqrtPartition

CHECKS = ("kato", "hardy_dirac", "embedding", "lemma9", "ims", "lemma5")
ROW_HEADER = ("inequality", "trial", "seed", "param", "margin", "tolerance", "pass")


@dataclass
class CheckRow:
    inequality: str
    trial: int
    seed: int
    param: str
    margin: float
    tolerance: float
    passed: bool

    def as_row(self):
        return astuple(self)


def _trial_seed(base: int, check: str, trial: int) -> int:
    return int(np.random.SeedSequence([base, CHECKS.index(check), trial]).generate_state(1)[0])


def _random_radial_measure(seed: int) -> ChargeMeasure:
    rng = np.random.default_rng(seed)
    mass = float(rng.uniform(0.05, 0.99))
    radius = float(np.exp(rng.uniform(np.log(0.05), np.log(3.0))))
    kind = int(rng.integers(3))
    if kind == 0:
        return ChargeMeasure.shell(mass, radius)
    if kind == 1:
        return ChargeMeasure.ball(mass, radius)
    split = float(rng.uniform(0.2, 0.8))
    return ChargeMeasure.shell(split * mass, radius) + ChargeMeasure.ball((1 - split) * mass, 0.5 * radius)


@dataclass(frozen=True)
class TrialJob:
    """One (check, trial) unit; picklable so a process pool can map over it."""

    check: str
    trial: int
    seed: int
    opts: dict
    kato_constant: float = KATO_CONSTANT

    def __call__(self) -> list[CheckRow]:
        try:
            return getattr(self, "_" + self.check)()
        except DiracGapError as exc:
            return [CheckRow(self.check, self.trial, self.seed, type(exc).__name__, float("nan"), 0.0, False)]

    def _row(self, param, margin, tol):
        return CheckRow(self.check, self.trial, self.seed, str(param), float(margin), float(tol),
                        bool(margin >= -tol))

    def _kato(self):
        if self.trial % 2:
            # centred multi-scale mixtures come close to the sharp constant
            phi = TrialFunction.random(self.seed, n_terms=4, center_radius=0.05,
                                       exponent_range=(0.05, 50.0), p_fraction=0.0)
        else:
            phi = TrialFunction.random(self.seed)
        tol = self.opts["rel_tol"] * phi.norm2()
        return [self._row(f"c={self.kato_constant:.6g}", kato_margin(phi, self.kato_constant), tol)]

    def _hardy_dirac(self):
        phi = TrialFunction.random(self.seed)
        tol = self.opts["rel_tol"] * phi.h1_norm2()
        a = self.opts["hardy_a"]
        return [self._row(f"a={x:g}", m, tol) for x, m in zip(a, hardy_dirac_margins(phi, a))]

    def _embedding(self):
        phi = TrialFunction.random(self.seed)
        h1 = phi.h1_norm2()
        nu = self.opts["embedding_weight"]
        norm2, margin = vmu_norm_and_embedding(phi, ChargeMeasure.point(nu))
        tol = self.opts["rel_tol"] * h1
        # the weighted norm never exceeds the H^1 norm
        return [self._row(f"lower nu={nu:g}", margin, tol),
                self._row(f"upper nu={nu:g}", h1 - norm2, 1e-10 * max(1.0, h1))]

    def _lemma9(self):
        mu = _random_radial_measure(self.seed)
        rows = []
        for alpha in self.opts["lemma9_alpha"]:
            integral, bound = lemma9_check(mu, alpha)
            rows.append(self._row(f"alpha={alpha:g} mass={mu.total_charge:.4f}", bound - integral,
                                  self.opts["rel_tol"] * bound))
        return rows

    def _ims(self):
        rng = np.random.default_rng(self.seed)
        phi = TrialFunction.random(self.seed)
        M = int(rng.integers(2, 4))
        centers = rng.uniform(-1.5, 1.5, (M, 3))
        part = BallPartition(centers) if self.trial % 2 == 0 else BeckeSqrtPartition(centers)
        pts = rng.normal(scale=1.5, size=(self.opts["ims_points"], 3))
        res = ims_residual(phi, part, pts)
        return [self._row(f"{type(part).__name__} M={M}", -res, self.opts["ims_tol"])]

    def _lemma5(self):
        rng = np.random.default_rng(self.seed)
        lam = float(rng.uniform(-0.9, 0.9))
        nu = self.opts["lemma5_weight"]
        if self.trial % 2 == 0:
            spec = MoleculeSpec([[0.0, 0.0, 0.0]], [nu])
            phi = TrialFunction.random(self.seed)
        else:
            h = 0.5 * self.opts["lemma5_separation"]
            spec = MoleculeSpec([[0.0, 0.0, -h], [0.0, 0.0, h]], [nu, nu])
            phi = TrialFunction.random(self.seed, center_radius=max(1.0, 2 * h))
        m = lemma5_margin(spec, lam, [phi])[0]
        return [self._row(f"M={spec.n_centers} lam={lam:.4f}", m, self.opts["rel_tol"] * phi.h1_norm2())]


def suite_jobs(opts: dict, seed: int, checks=CHECKS, kato_constant: float = KATO_CONSTANT) -> list[TrialJob]:
    n = int(opts["trials"])
    return [TrialJob(c, t, _trial_seed(seed, c, t), dict(opts), kato_constant) for c in checks for t in range(n)]


def _run(job: TrialJob):
    return job()


def run_suite(opts: dict, seed: int = 0, checks=CHECKS, kato_constant: float = KATO_CONSTANT,
              pool=None) -> list[CheckRow]:
    """All rows of the inequality suite in a fixed order."""
    if int(opts["trials"]) < 1:
        raise ValueError("at least one trial is required")
    jobs = suite_jobs(opts, seed, checks, kato_constant)
    mapper = pool.map if pool is not None else map
    return [row for rows in mapper(_run, jobs) for row in rows]
