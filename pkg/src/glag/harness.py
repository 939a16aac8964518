"""Experiment orchestration.

Noise sweeps compare matchers on a generated graph and a relabeled copy,
each corrupted by its own spurious edges.  Multimodal sweeps do the same
with different weight distributions on the two sides and score the binary
supports.  The inference benchmark compares joint estimation on unaligned
datasets with the single-dataset graphical lasso.

Every trial is reproducible from the seed stored in its row: trial ``i``
uses seed ``seed_base + i`` and all randomness of the trial is derived from
it.  Rows are emitted sorted by ``(matcher, noise, trial)`` so the CSV does
not depend on execution order; wall-clock times go to a separate timing
file.
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, faq_match, qcp_match
from .errors import FormatError, ParameterError
from .graphs import (
    DEFAULT_WEIGHTS,
    Constant,
    NoiseSpec,
    add_noise,
    assign_weights,
    gen_barabasi_albert,
    gen_bter_geometric,
    gen_erdos_renyi,
    parse_weight_model,
    permute_graph,
    read_permutation,
    write_graph,
)
from .inference import (
    empirical_covariance,
    gen_gmrf_data,
    graphical_lasso,
    joint_infer_unaligned,
    random_sparse_precision,
    support_f1,
)
from .matcher import GlagConfig, glag_match, matching_error
from .polytope import Permutation

log = logging.getLogger(__name__)

MATCHERS = ("glag", "qcp", "faq", "external")
SWEEP_COLUMNS = ("matcher", "noise", "trial", "seed", "matching_error")
TIMING_COLUMNS = ("matcher", "noise", "trial", "seconds")
INFERENCE_COLUMNS = ("trial", "method", "frob_error", "support_f1", "seconds")
INFERENCE_METHODS = ("joint_half", "single_half", "single_full")
DEFAULT_TRIALS = 20
DEFAULT_GROUP_WEIGHT = math.sqrt(2.0)
DEFAULT_BENCH_LAMBDA = 0.06

# generator name -> (function, parameter names in call order)
GENERATORS = {
    "er": (gen_erdos_renyi, ("m",)),
    "ba": (gen_barabasi_albert, ("m_attach",)),
    "bter": (gen_bter_geometric, ("mu",)),
}


def generate(generator, p, params, seed):
    """Unweighted graph from one of the registered generators."""
    try:
        fn, names = GENERATORS[generator]
    except KeyError:
        raise ParameterError(f"unknown generator {generator!r}; choose from "
                             f"{', '.join(GENERATORS)}") from None
    missing = [n for n in names if n not in params]
    if missing:
        raise ParameterError(f"generator {generator!r} needs parameter(s) {', '.join(missing)}")
    return fn(p, *(params[n] for n in names), seed)


def expected_edges(generator, p, params, seed_base=0):
    if generator == "er":
        return int(params["m"])
    if generator == "ba":
        m = int(params["m_attach"])
        return m * (m + 1) // 2 + (p - m - 1) * m
    return generate(generator, p, params, seed_base).edge_count


def default_noise_levels(edges, step=5):
    """``0, step, 2 step, ...`` up to a third of the edge count."""
    return list(range(0, edges // 3 + 1, step))


@dataclass
class SweepSpec:
    """Configuration of a matching sweep.

    ``weights_a`` and ``weights_b`` are the edge weight models of the two
    sides; ``None`` means unweighted.  A plain noise sweep uses
    ``weights_a`` for both the graph and all noise edges.  For the
    ``external`` matcher, ``external_dir`` must hold one permutation file per
    instance, named as by :func:`instance_name`; ``dump_dir`` receives the
    generated pairs under the same names.
    """

    generator: str = "er"
    p: int = 50
    params: dict = field(default_factory=lambda: {"m": 150})
    weights_a: object = DEFAULT_WEIGHTS
    weights_b: object = DEFAULT_WEIGHTS
    noise_levels: list = None
    trials: int = DEFAULT_TRIALS
    matchers: tuple = ("glag", "qcp", "faq")
    seed_base: int = 0
    glag: GlagConfig = field(default_factory=GlagConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    external_dir: str = None
    dump_dir: str = None

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ParameterError(f"unknown generator {self.generator!r}")
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        unknown = [m for m in self.matchers if m not in MATCHERS]
        if unknown:
            raise ParameterError(f"unknown matcher(s) {', '.join(unknown)}; "
                                 f"choose from {', '.join(MATCHERS)}")
        if "external" in self.matchers and not self.external_dir:
            raise ParameterError("the external matcher needs external_dir")
        if self.noise_levels is None:
            e = expected_edges(self.generator, self.p, self.params, self.seed_base)
            self.noise_levels = default_noise_levels(e)
        levels = [int(n) for n in self.noise_levels]
        if any(n < 0 for n in levels):
            raise ParameterError("noise levels must be nonnegative")
        if levels != sorted(levels):
            raise ParameterError("noise levels must be sorted")
        self.noise_levels = levels
        self.matchers = tuple(self.matchers)


@dataclass(frozen=True)
class TrialRecord:
    matcher: str
    noise: int
    trial: int
    seed: int
    # None marks a matcher failure; `failure` then names the exception
    error: float = None
    seconds: float = 0.0
    failure: str = ""

    @property
    def key(self):
        return (self.matcher, self.noise, self.trial)


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std: float
    mean_seconds: float
    trials: int
    failures: int = 0


@dataclass
class SweepResult:
    spec: SweepSpec
    records: list

    def summary(self):
        """Mean, spread and timing per ``(matcher, noise)``."""
        groups = {}
        for r in self.records:
            groups.setdefault((r.matcher, r.noise), []).append(r)
        out = {}
        for key in sorted(groups):
            recs = groups[key]
            ok = sorted(r.error for r in recs if r.error is not None)
            secs = sorted(r.seconds for r in recs)
            mean = math.fsum(ok) / len(ok) if ok else math.nan
            std = math.sqrt(math.fsum((x - mean) ** 2 for x in ok) / len(ok)) if ok else math.nan
            out[key] = Aggregate(mean=mean, std=std, mean_seconds=math.fsum(secs) / len(secs),
                                 trials=len(recs), failures=len(recs) - len(ok))
        return out

    def mean_error(self, matcher, noise):
        return self.summary()[(matcher, noise)].mean

    def write_csv(self, path):
        """Write the result rows and a ``<stem>.timing.csv`` beside them."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for r in self.records:
                value = _fmt(r.error) if r.error is not None else f"error:{r.failure}"
                w.writerow([r.matcher, r.noise, r.trial, r.seed, value])
        with timing_path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TIMING_COLUMNS)
            for r in self.records:
                w.writerow([r.matcher, r.noise, r.trial, f"{r.seconds:.6f}"])
        return path

    def write_summary(self, path):
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["matcher", "noise", "mean_error", "std_error", "mean_seconds",
                        "trials", "failures"])
            for (m, n), a in self.summary().items():
                w.writerow([m, n, _fmt(a.mean), _fmt(a.std), f"{a.mean_seconds:.6f}",
                            a.trials, a.failures])
        return path


def timing_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".timing.csv")


def _fmt(x):
    return format(float(x), ".17g")


def instance_name(trial, noise):
    return f"trial{trial:04d}_noise{noise:04d}"


def _trial_seeds(seed):
    """Independent child seeds for the parts of one trial."""
    ss = np.random.SeedSequence(seed)
    graph, perm, wa, wb = (int(s.generate_state(1, np.uint64)[0]) for s in ss.spawn(4))
    return graph, perm, wa, wb


def _noise_seeds(seed, noise):
    ss = np.random.SeedSequence([seed, noise, 1])
    a, b = (int(s.generate_state(1, np.uint64)[0]) for s in ss.spawn(2))
    return a, b


def _run_matcher(name, A, B, spec, trial, noise):
    if name == "glag":
        return glag_match(A, B, spec.glag).P_star
    if name == "qcp":
        return qcp_match(A, B, spec.baseline).P_star
    if name == "faq":
        return faq_match(A, B, spec.baseline).P_star
    path = Path(spec.external_dir) / (instance_name(trial, noise) + ".perm")
    return read_permutation(path)


def _trial(spec, trial, multimodal):
    seed = spec.seed_base + trial
    s_graph, s_perm, s_wa, s_wb = _trial_seeds(seed)
    base = generate(spec.generator, spec.p, spec.params, s_graph)
    perm = Permutation.random(spec.p, np.random.default_rng(s_perm))
    model_a = spec.weights_a if spec.weights_a is not None else Constant(1.0)
    if multimodal:
        model_b = spec.weights_b if spec.weights_b is not None else Constant(1.0)
        truth_a, truth_b = base, permute_graph(base, perm)
        clean_a = assign_weights(truth_a, model_a, s_wa)
        clean_b = assign_weights(truth_b, model_b, s_wb)
    else:
        model_b = model_a
        truth_a = assign_weights(base, model_a, s_wa) if spec.weights_a is not None else base
        truth_b = permute_graph(truth_a, perm)
        clean_a, clean_b = truth_a, truth_b

    records = []
    for noise in spec.noise_levels:
        na, nb = _noise_seeds(seed, noise)
        A = add_noise(clean_a, NoiseSpec(noise, model_a), na)
        B = add_noise(clean_b, NoiseSpec(noise, model_b), nb)
        if spec.dump_dir:
            stem = Path(spec.dump_dir) / instance_name(trial, noise)
            write_graph(A, f"{stem}_A.graph")
            write_graph(B, f"{stem}_B.graph")
        for name in spec.matchers:
            t0 = time.perf_counter()
            try:
                P = _run_matcher(name, A, B, spec, trial, noise)
                err = matching_error(truth_a, truth_b, P)
                fail = ""
            except (ArithmeticError, ValueError, RuntimeError, OSError) as exc:
                log.warning("matcher %s failed on trial %d, noise %d: %s", name, trial, noise, exc)
                err, fail = None, type(exc).__name__
            records.append(TrialRecord(name, noise, trial, seed, err,
                                       time.perf_counter() - t0, fail))
    return records


def _run(spec, multimodal, jobs):
    if spec.dump_dir:
        Path(spec.dump_dir).mkdir(parents=True, exist_ok=True)
    trials = range(spec.trials)
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_trial, [spec] * spec.trials, trials,
                                   [multimodal] * spec.trials))
    else:
        chunks = [_trial(spec, t, multimodal) for t in trials]
    records = sorted((r for chunk in chunks for r in chunk), key=lambda r: r.key)
    return SweepResult(spec=spec, records=records)


def run_noise_sweep(spec, jobs=1):
    """Matching error of every matcher at every noise level.

    For each trial a graph ``A_o`` is generated (weighted by
    ``spec.weights_a`` unless it is None), relabeled by a random permutation
    ``P_o`` into ``B_o = P_o^T A_o P_o``, and both sides receive ``N``
    independent spurious edges.  Errors are measured against the clean pair.
    """
    return _run(spec, multimodal=False, jobs=jobs)


def run_multimodal_sweep(spec, jobs=1):
    """Noise sweep with a different weight distribution on each side.

    A binary graph and its relabeled copy get weights from
    ``spec.weights_a`` and ``spec.weights_b`` respectively; each side's
    noise edges follow its own distribution.  The error counts mismatched
    entries of the binary supports.
    """
    return _run(spec, multimodal=True, jobs=jobs)


# -- key=value configuration ------------------------------------------------------

_INT_PARAMS = {"m", "m_attach"}


def parse_config(text):
    """Flat ``key = value`` lines into keyword arguments for :class:`SweepSpec`.

    Recognized keys: generator, p, m, m_attach, mu, weights_a, weights_b
    (weight model text or ``none``), noise (comma list), trials, matchers
    (comma list), seed_base, external_dir, dump_dir, and the solver
    settings c, eps_abs, eps_rel, max_iter (GLAG) and tol (baselines).
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string("[sweep]\n" + text)
    except configparser.Error as exc:
        raise FormatError(f"bad sweep configuration: {exc}") from None
    raw = dict(cp["sweep"])
    kw, params, glag, base = {}, {}, {}, {}
    for key, value in raw.items():
        try:
            if key in ("m", "m_attach", "mu"):
                params[key] = int(value) if key in _INT_PARAMS else float(value)
            elif key in ("c", "eps_abs", "eps_rel"):
                glag[key] = float(value)
            elif key == "max_iter":
                glag[key] = base[key] = int(value)
            elif key == "tol":
                base[key] = float(value)
            elif key in ("p", "trials", "seed_base"):
                kw[key] = int(value)
            elif key in ("generator", "external_dir", "dump_dir"):
                kw[key] = value
            elif key in ("weights_a", "weights_b"):
                kw[key] = None if value.lower() == "none" else parse_weight_model(value)
            elif key == "noise":
                kw["noise_levels"] = [int(v) for v in value.split(",") if v.strip()]
            elif key == "matchers":
                kw["matchers"] = tuple(v.strip() for v in value.split(",") if v.strip())
            else:
                raise FormatError(f"unknown configuration key {key!r}")
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"bad value for {key!r}: {value!r}") from None
    if params:
        kw["params"] = params
    if glag:
        kw["glag"] = GlagConfig(**glag)
    if base:
        kw["baseline"] = BaselineConfig(**base)
    return kw


def load_spec(path, **overrides):
    """Read a configuration file; keyword overrides win over file values."""
    kw = parse_config(Path(path).read_text())
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return SweepSpec(**kw)


# -- joint inference benchmark --------------------------------------------------------

@dataclass(frozen=True)
class InferenceRecord:
    trial: int
    method: str
    frob_error: float
    support_f1: float
    seconds: float


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def run_inference_bench(p=20, k=4000, n_edges=None, lam=DEFAULT_BENCH_LAMBDA,
                        trials=DEFAULT_TRIALS, seed=0, group_weight=DEFAULT_GROUP_WEIGHT,
                        glag_cfg=None, tol=1e-6):
    """Joint estimation on unaligned data against the single-dataset lasso.

    Each trial draws a sparse ground-truth precision matrix on ``n_edges``
    random edges (default ``p``), samples two datasets of ``k`` observations
    from it and shuffles the variables of the second.  Three estimates of
    the first dataset's precision matrix are scored: the joint estimate from
    the first ``k // 2`` samples of both datasets, and the graphical lasso on
    the first ``k // 2`` and on all ``k`` samples of the first dataset.

    Returns
    -------
    list of InferenceRecord
        Ordered by trial, then method as in ``INFERENCE_METHODS``.
    """
    if p < 2 or k < 4:
        raise ParameterError("need p >= 2 and k >= 4")
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    n_edges = p if n_edges is None else n_edges
    half = k // 2
    rows = []
    for trial in range(trials):
        s_theta, s_a, s_b, s_perm = (
            int(s.generate_state(1, np.uint64)[0])
            for s in np.random.SeedSequence(seed + trial).spawn(4))
        truth = random_sparse_precision(p, n_edges, s_theta)
        Xa = gen_gmrf_data(truth, k, s_a)
        Xb = gen_gmrf_data(truth, k, s_b)
        shuffle = Permutation.random(p, np.random.default_rng(s_perm))
        Xb = Xb[:, shuffle.sigma]

        pair, t_joint = _timed(joint_infer_unaligned, Xa[:half], Xb[:half], lam,
                               glag_cfg=glag_cfg, tol=tol, group_weight=group_weight)
        single_half, t_half = _timed(graphical_lasso, empirical_covariance(Xa[:half]), lam, tol)
        single_full, t_full = _timed(graphical_lasso, empirical_covariance(Xa), lam, tol)
        for method, est, secs in zip(INFERENCE_METHODS,
                                     (pair.theta_a, single_half, single_full),
                                     (t_joint, t_half, t_full)):
            rows.append(InferenceRecord(
                trial=trial, method=method,
                frob_error=float(np.linalg.norm(est.Theta - truth.Theta)),
                support_f1=support_f1(est.Theta, truth.Theta), seconds=secs))
    return rows


def write_inference_csv(rows, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INFERENCE_COLUMNS)
        for r in rows:
            w.writerow([r.trial, r.method, _fmt(r.frob_error), _fmt(r.support_f1),
                        f"{r.seconds:.6f}"])
    return Path(path)


def joint_win_rate(rows):
    """Fraction of trials where the joint estimate's F1 is at least the single half-sample F1."""
    by_trial = {}
    for r in rows:
        by_trial.setdefault(r.trial, {})[r.method] = r.support_f1
    wins = [t["joint_half"] >= t["single_half"] for t in by_trial.values()]
    return sum(wins) / len(wins)


__all__ = [
    "Aggregate", "InferenceRecord", "SweepResult", "SweepSpec", "TrialRecord",
    "default_noise_levels", "expected_edges", "generate", "instance_name",
    "joint_win_rate", "load_spec", "parse_config", "run_inference_bench",
    "run_multimodal_sweep", "run_noise_sweep", "timing_path", "write_inference_csv",
]
