"""Seeded Monte-Carlo campaigns for the channel estimators.

Every trial draws its randomness from ``SeedSequence(seed, spawn_key=(N, trial))``,
split into independent streams for the targets, the noise and probe, and the
estimator. All methods therefore face the same targets for a given
(seed, N, trial), and results do not depend on worker count or order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import NoiseSpec, add_noise, apply_channel, sample_targets
from .errors import InvalidConfig
from .estimators import (ProbeSignal, incidence_estimate, pseudorandom_estimate,
                         sce_config, sce_estimate)
from .sfft import Sampler, prime_power
from .zn import random_transversal_lines

METHODS = ("pseudorandom", "incidence", "cross", "sce")
CSV_HEADER = ["method", "N", "k", "snr_db", "trials", "pd", "pfa",
              "mean_samples", "mean_ops", "mean_time_s", "seed"]
WORKERS_ENV = "SPARSECHAN_WORKERS"


class InvalidModulus(InvalidConfig):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def is_odd_prime_power(n: int) -> bool:
    pp = prime_power(n)
    return pp is not None and pp[0] != 2


def nearest_odd_prime(n: int) -> int:
    """Closest odd prime to n; ties go to the smaller one."""
    for d in range(0, n):
        for c in (n - d, n + d):
            if c > 2 and is_prime(c):
                return c
    raise InvalidModulus(f"no odd prime near {n}")


def check_modulus(method: str, n: int):
    if method not in METHODS:
        raise InvalidConfig(f"unknown method {method!r}")
    if n < 2:
        raise InvalidModulus(f"modulus must be >= 2, got {n}")
    if method != "pseudorandom" and not is_odd_prime_power(n):
        raise InvalidModulus(f"{method} needs an odd prime power modulus, got {n}")


@dataclass
class TrialConfig:
    method: str
    ns: list[int]
    k: int = 5
    snr_db: float = 10.0
    eps: float = 0.5
    kappa: float = 0.5
    trials: int = 100
    seed: int = 0
    out: str | None = None
    energy: float = 1.0
    timing: bool = True
    nominal: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidConfig("trials must be >= 1")
        for n in self.ns:
            check_modulus(self.method, n)


@dataclass
class CampaignRow:
    method: str
    n: int
    k: int
    snr_db: float
    trials: int
    pd: float
    pfa: float
    mean_samples: float
    mean_ops: float
    mean_time_s: float | None
    seed: int
    nominal_n: int | None = None
    hits: int = 0
    targets: int = 0
    false_alarms: int = 0
    detections: int = 0

    @property
    def pd_se(self) -> float:
        return math.sqrt(max(self.pd * (1 - self.pd), 1e-12) / max(self.targets, 1))

    @property
    def pfa_se(self) -> float:
        return math.sqrt(max(self.pfa * (1 - self.pfa), 1e-12) / max(self.detections, 1))


@dataclass
class CampaignResult:
    rows: list[CampaignRow]
    extra: dict = field(default_factory=dict)

    def by_method(self, method: str) -> list[CampaignRow]:
        return sorted((r for r in self.rows if r.method == method), key=lambda r: r.n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in sorted(self.rows, key=lambda r: (r.method, r.n)):
            w.writerow([r.method, r.n, r.k, _fmt(r.snr_db), r.trials, _fmt(r.pd), _fmt(r.pfa),
                        _fmt(r.mean_samples), _fmt(r.mean_ops),
                        "" if r.mean_time_s is None else _fmt(r.mean_time_s), r.seed])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [dict(asdict(r), pd_se=r.pd_se, pfa_se=r.pfa_se)
                for r in sorted(self.rows, key=lambda r: (r.method, r.n))]
        return json.dumps({"rows": rows, **self.extra}, indent=2, sort_keys=True)

    def write(self, path: str):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())
        root, _ = os.path.splitext(path)
        with open(root + ".json", "w") as fh:
            fh.write(self.to_json())


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def trial_streams(seed: int, n: int, trial: int):
    ss = np.random.SeedSequence(seed, spawn_key=(n, trial))
    return [np.random.default_rng(c) for c in ss.spawn(3)]


def run_one(method: str, n: int, k: int, snr_db: float, eps: float, kappa: float,
            seed: int, trial: int, energy: float = 1.0):
    """One trial; returns (hits, targets, false alarms, detections, samples, ops, seconds)."""
    rng_targets, rng_probe, rng_est = trial_streams(seed, n, trial)
    targets = sample_targets(k, energy, eps, n, rng_targets)
    noise = NoiseSpec.from_snr_db(snr_db, energy)
    if method == "pseudorandom":
        probe = ProbeSignal.pseudorandom(n, int(rng_probe.integers(2 ** 31)))
    else:
        probe = ProbeSignal.chirps(
            random_transversal_lines(3, n, rng_probe, include_infinite=(method != "sce")))
    r = add_noise(apply_channel(targets, probe.signal), noise, rng_probe)
    if method == "pseudorandom":
        rep = pseudorandom_estimate(r, probe, k)
    elif method in ("incidence", "cross"):
        rep = incidence_estimate(r, probe, k, use_cross=(method == "cross"))
    else:
        cfg = sce_config(n, k, snr_db, eps, kappa, energy)
        rep = sce_estimate(Sampler(r), probe, k, cfg, rng_est)
    h, t, f, d = rep.score(targets)
    return h, t, f, d, rep.samples, rep.ops, rep.wall_time


def _run_one_packed(args):
    return run_one(*args)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map(jobs):
    workers = worker_count()
    if workers == 1 or len(jobs) < 2:
        return [run_one(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_one_packed, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def run_trials(cfg: TrialConfig, method: str | None = None) -> CampaignResult:
    """Monte-Carlo PD/PFA and cost for every N of the configuration."""
    method = method or cfg.method
    rows = []
    for n in sorted(cfg.ns):
        check_modulus(method, n)
        jobs = [(method, n, cfg.k, cfg.snr_db, cfg.eps, cfg.kappa, cfg.seed, t, cfg.energy)
                for t in range(cfg.trials)]
        res = _map(jobs)
        hits = sum(r[0] for r in res)
        tgt = sum(r[1] for r in res)
        fa = sum(r[2] for r in res)
        det = sum(r[3] for r in res)
        rows.append(CampaignRow(
            method, n, cfg.k, cfg.snr_db, cfg.trials,
            pd=hits / tgt if tgt else 1.0, pfa=fa / det if det else 0.0,
            mean_samples=sum(r[4] for r in res) / cfg.trials,
            mean_ops=sum(r[5] for r in res) / cfg.trials,
            mean_time_s=(sum(r[6] for r in res) / cfg.trials) if cfg.timing else None,
            seed=cfg.seed, nominal_n=cfg.nominal.get(n), hits=hits, targets=tgt,
            false_alarms=fa, detections=det))
    return CampaignResult(rows)


def complexity_sweep(cfg: TrialConfig) -> CampaignResult:
    """SCE and the incidence method side by side over the configured moduli."""
    out = CampaignResult([])
    for method in ("sce", "incidence"):
        out.rows.extend(run_trials(cfg, method).rows)
    sce = out.by_method("sce")
    im = out.by_method("incidence")
    out.extra = {
        "im_samples_equal_n": all(r.mean_samples == r.n for r in im),
        "sce_sample_ratio": sce[-1].mean_samples / sce[0].mean_samples,
        "n_ratio": sce[-1].n / sce[0].n,
    }
    if cfg.timing:
        out.extra["sce_faster_at_max_n"] = sce[-1].mean_time_s < im[-1].mean_time_s
    return out


def trend_ok(values, ses, increasing: bool, z: float = 2.0) -> bool:
    """Monotone within z combined standard errors between consecutive points."""
    for (a, sa), (b, sb) in zip(zip(values, ses), zip(values[1:], ses[1:])):
        slack = z * math.hypot(sa, sb)
        if increasing and b < a - slack:
            return False
        if not increasing and b > a + slack:
            return False
    return True
