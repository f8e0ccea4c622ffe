"""Parameter counting for locally producible states and Monte Carlo
classification of states by discord and correlation rank."""
from __future__ import annotations

import csv
import io
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .correlation import COMMUTATOR_TOL, analyze, witness_report
from .discord import DEFAULT_OPTIONS, DiscordOptions, discord_batch
from .linalg import RANK_REL_TOL, max_entry_norm
from .states import DensityMatrix, ProductEnsemble, assemble, random_ensemble, random_state

DISCORD_TOL = 1e-6
REGIONS = ("classical", "quantum_low_l", "quantum_high_l")


# --- counting ------------------------------------------------------------------

def f_value(dim_a: int, dim_b: int) -> int:
    """d_A^2 d_B^2 - d_A^3 - d_A d_B^2 + d_A; positive iff d_A-term ensembles are measure zero."""
    return dim_a**2 * dim_b**2 - dim_a**3 - dim_a * dim_b**2 + dim_a


@dataclass(frozen=True)
class CountingReport:
    dim_a: int
    dim_b: int
    s: int
    params_class: int
    params_full: int
    measure_zero: bool
    f_value: int


def counting_report(dim_a: int, dim_b: int, s: int) -> CountingReport:
    """Real-parameter count of s-term product ensembles against the full state space."""
    if min(dim_a, dim_b, s) < 1:
        raise ValueError("dimensions and s must be >= 1")
    params_class = s * (dim_a**2 - 1 + dim_b**2 - 1) + s - 1
    params_full = dim_a**2 * dim_b**2 - 1
    return CountingReport(
        dim_a, dim_b, s, params_class, params_full, params_class < params_full, f_value(dim_a, dim_b)
    )


def f_monotonicity_check(max_dim: int) -> bool:
    """f > 0 and nondecreasing in each argument on 2 <= d_A <= d_B <= max_dim."""
    if max_dim < 2:
        raise ValueError("max_dim must be >= 2")
    for da in range(2, max_dim + 1):
        for db in range(da, max_dim + 1):
            f = f_value(da, db)
            if f <= 0:
                return False
            if db + 1 <= max_dim and f_value(da, db + 1) < f:
                return False
            if da + 1 <= db and f_value(da + 1, db) < f:
                return False
    return True


# --- classification ------------------------------------------------------------

@dataclass(frozen=True)
class ClassificationReport:
    state_id: str
    rank_l: int
    d_min: int
    discord_a: float | None
    discord_b: float | None
    zero_discord_a: bool
    zero_discord_b: bool
    max_commutator_a: float
    max_commutator_b: float
    region: str
    locally_producible_hint: str
    min_sv_gap: float

    def to_dict(self) -> dict:
        return asdict(self)


def _region(rank_l: int, d_min: int, zero_a: bool, zero_b: bool) -> str:
    if rank_l > d_min:
        return "quantum_high_l"
    if zero_a and zero_b:
        return "classical"
    return "quantum_low_l"


def _producible_hint(rho: DensityMatrix, ensemble: ProductEnsemble | None) -> str:
    if ensemble is None or ensemble.s > rho.d_min:
        return "unknown"
    if (ensemble.dim_a, ensemble.dim_b) != rho.dims:
        return "unknown"
    if max_entry_norm(assemble(ensemble).matrix - rho.matrix) <= 1e-9:
        return "yes_constructed"
    return "unknown"


def classify_batch(
    states: Sequence[DensityMatrix],
    ids: Sequence[str] | None = None,
    ensembles: Sequence[ProductEnsemble | None] | None = None,
    rank_tol: float = RANK_REL_TOL,
    discord_tol: float = DISCORD_TOL,
    options: DiscordOptions = DEFAULT_OPTIONS,
) -> list[ClassificationReport]:
    """Classify states sharing one pair of factor dimensions.

    A side of dimension 2 is judged by the numerical discord; larger sides
    fall back to the commutator test on the diagonal-representation
    operators, and their discord entry is left as ``None``.
    """
    if not states:
        return []
    da, db = states[0].dims
    ids = ids or [str(i) for i in range(len(states))]
    ensembles = ensembles or [None] * len(states)
    wit = [witness_report(s, rank_tol, COMMUTATOR_TOL, analyze(s, rank_tol)) for s in states]
    # measuring A requires a qubit A, measuring B a qubit B
    disc_a = [d.value for d in discord_batch(states, "A", options)] if da == 2 else [None] * len(states)
    disc_b = [d.value for d in discord_batch(states, "B", options)] if db == 2 else [None] * len(states)

    out = []
    for s, sid, ens, w, dA, dB in zip(states, ids, ensembles, wit, disc_a, disc_b):
        zero_a = dA <= discord_tol if dA is not None else w.zero_discord_a
        zero_b = dB <= discord_tol if dB is not None else w.zero_discord_b
        sv = np.asarray(w.singular_values)
        gap = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
        out.append(
            ClassificationReport(
                state_id=sid,
                rank_l=w.rank_l,
                d_min=w.d_min,
                discord_a=dA,
                discord_b=dB,
                zero_discord_a=zero_a,
                zero_discord_b=zero_b,
                max_commutator_a=w.max_commutator_a,
                max_commutator_b=w.max_commutator_b,
                region=_region(w.rank_l, w.d_min, zero_a, zero_b),
                locally_producible_hint=_producible_hint(s, ens),
                min_sv_gap=gap,
            )
        )
    return out


def classify(
    rho: DensityMatrix,
    ensemble: ProductEnsemble | None = None,
    state_id: str = "0",
    rank_tol: float = RANK_REL_TOL,
    discord_tol: float = DISCORD_TOL,
    options: DiscordOptions = DEFAULT_OPTIONS,
) -> ClassificationReport:
    """Region label for one state; ``ensemble`` (s <= d_min terms assembling to
    ``rho``) upgrades the local-producibility hint to ``yes_constructed``."""
    return classify_batch([rho], [state_id], [ensemble], rank_tol, discord_tol, options)[0]


# --- Monte Carlo ---------------------------------------------------------------

def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("QCORR_THREADS", "1")))
    except ValueError:
        return 1


def trial_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Per-trial seeds split from the master seed; independent of worker count."""
    return np.random.SeedSequence(seed).spawn(n)


@dataclass
class MonteCarloResult:
    dim_a: int
    dim_b: int
    n_samples: int
    seed: int
    source: str
    reports: list

    @property
    def histogram(self) -> dict:
        counts = Counter(r.region for r in self.reports)
        return {region: counts.get(region, 0) for region in REGIONS}

    @property
    def min_sv_gap(self) -> float:
        return min(r.min_sv_gap for r in self.reports)

    def summary(self) -> dict:
        hist = self.histogram
        ranks = Counter(r.rank_l for r in self.reports)
        return {
            "dim_a": self.dim_a,
            "dim_b": self.dim_b,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "source": self.source,
            "counts": hist,
            "fractions": {k: v / self.n_samples for k, v in hist.items()},
            "rank_counts": {str(k): ranks[k] for k in sorted(ranks)},
            "min_sv_gap": self.min_sv_gap,
        }

    def to_csv(self, header_lines: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_id", "rank_l", "discord_a", "discord_b", "region", "min_sv_gap"])
        for r in self.reports:
            w.writerow([
                r.state_id,
                r.rank_l,
                "" if r.discord_a is None else f"{r.discord_a:.9g}",
                "" if r.discord_b is None else f"{r.discord_b:.9g}",
                r.region,
                f"{r.min_sv_gap:.9g}",
            ])
        return buf.getvalue()


def monte_carlo_regions(
    dim_a: int,
    dim_b: int,
    n_samples: int,
    seed: int,
    ensemble_terms: int | None = None,
    rank_tol: float = RANK_REL_TOL,
    discord_tol: float = DISCORD_TOL,
    options: DiscordOptions = DEFAULT_OPTIONS,
    chunk: int = 1000,
) -> MonteCarloResult:
    """Classify ``n_samples`` random states.

    With ``ensemble_terms=None`` samples are Hilbert-Schmidt random; otherwise
    each sample is an assembled random ensemble with that many terms.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    seeds = trial_seeds(seed, n_samples)

    def draw(ss):
        rng = np.random.default_rng(ss)
        if ensemble_terms is None:
            return random_state(dim_a, dim_b, rng), None
        ens = random_ensemble(dim_a, dim_b, ensemble_terms, rng)
        return assemble(ens), ens

    def run_chunk(lo: int):
        hi = min(lo + chunk, n_samples)
        drawn = [draw(seeds[i]) for i in range(lo, hi)]
        return classify_batch(
            [d[0] for d in drawn],
            [str(i) for i in range(lo, hi)],
            [d[1] for d in drawn],
            rank_tol,
            discord_tol,
            options,
        )

    starts = range(0, n_samples, chunk)
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run_chunk, starts))
    else:
        parts = [run_chunk(lo) for lo in starts]
    reports = [r for part in parts for r in part]
    source = "hilbert_schmidt" if ensemble_terms is None else f"ensemble:{ensemble_terms}"
    return MonteCarloResult(dim_a, dim_b, n_samples, seed, source, reports)

