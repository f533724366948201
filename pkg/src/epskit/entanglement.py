"""Polarisation correlations of the (|VV> + e^{i phi}|HH>)/sqrt(2) state,
count-data estimators and a seeded counting simulator.

Angle convention
----------------
Record angles are *analyser* angles measured from V: an analyser at theta
transmits cos(theta)|V> + sin(theta)|H>, so 0 -> V, 45 -> A, 90 -> H, 135 -> D.
A half-wave plate at angle h in front of a fixed polariser analyses 2h; use
``hwp_to_analyzer`` to convert plate settings. The joint transmission
probability of a state with visibility V (white-noise admixture) is

    P(ts, ti) = [1 + V (cos 2ts cos 2ti + cos(phi) sin 2ts sin 2ti)] / 4

which for phi = 0 reduces to (1 + V cos 2(ts - ti)) / 4.

Seeds
-----
A batch of runs derived from one master seed uses
``np.random.SeedSequence(master).spawn(n)``; run k draws from the k-th child,
so batch results do not depend on how the runs are scheduled.
"""
from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import UndefinedEstimateError

CSV_COLUMNS = ("theta_s_deg", "theta_i_deg", "duration_s", "Ns_hz", "Ni_hz", "N_hz", "bg_subtracted", "seed")
CHSH_ANGLES = (0.0, 22.5, 45.0, 67.5)  # alpha, beta, gamma, delta


def hwp_to_analyzer(hwp_deg):
    return 2.0 * np.asarray(hwp_deg, dtype=float)


def _same_angle(a, b):
    """Analyser angles agree modulo 180 degrees."""
    return abs((a - b + 90.0) % 180.0 - 90.0) < 1e-9


def _basis_key(angle_deg):
    return round(float(angle_deg) % 180.0, 9)


@dataclass(frozen=True)
class BellStateModel:
    """State phase plus visibility; ``basis_visibility`` maps an idler analyser
    angle (mod 180) to the visibility of fringes recorded at that angle."""

    phase_rad: float = 0.0
    visibility: float = 1.0
    basis_visibility: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = [self.visibility, *self.basis_visibility.values()]
        if not all(0.0 <= v <= 1.0 for v in vals):
            raise ValueError("visibilities must lie in [0, 1]")
        object.__setattr__(self, "basis_visibility",
                           {_basis_key(k): float(v) for k, v in self.basis_visibility.items()})

    def visibility_for(self, theta_s_deg, theta_i_deg):
        return self.basis_visibility.get(_basis_key(theta_i_deg), self.visibility)


@dataclass(frozen=True)
class DetectionModel:
    eta_s: float
    eta_i: float
    dark_s_hz: float = 0.0
    dark_i_hz: float = 0.0
    window_ns: float = 1.5
    pair_rate_per_mw: float = 1.0e6

    def __post_init__(self):
        if not (0 <= self.eta_s <= 1 and 0 <= self.eta_i <= 1):
            raise ValueError("detection efficiencies must lie in [0, 1]")
        if not self.window_ns > 0:
            raise ValueError("coincidence window must be positive")
        if min(self.dark_s_hz, self.dark_i_hz, self.pair_rate_per_mw) < 0:
            raise ValueError("rates must be non-negative")


@dataclass(frozen=True)
class CountRecord:
    theta_s_deg: float
    theta_i_deg: float
    duration_s: float
    Ns_hz: float
    Ni_hz: float
    N_hz: float
    bg_subtracted: bool = False
    seed: int | None = None

    def __post_init__(self):
        if min(self.duration_s, self.Ns_hz, self.Ni_hz, self.N_hz) < 0:
            raise ValueError("durations and rates must be non-negative")
        if self.N_hz > min(self.Ns_hz, self.Ni_hz):
            raise ValueError(
                f"coincidence rate {self.N_hz} exceeds singles ({self.Ns_hz}, {self.Ni_hz})"
            )

    @property
    def coincidences(self):
        return self.N_hz * self.duration_s

    @property
    def singles(self):
        return self.Ns_hz * self.duration_s, self.Ni_hz * self.duration_s


@dataclass(frozen=True)
class Estimate:
    value: float
    sigma: float

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class VisibilityResult:
    value: float
    sigma: float
    phase_deg: float
    method: str


@dataclass(frozen=True)
class ChshResult:
    S: float
    sigma: float
    n_sigma: float
    E: tuple


@dataclass(frozen=True)
class PairRateResult:
    rate_hz: Estimate
    eta_s: Estimate
    eta_i: Estimate


# ---------------------------------------------------------------- model

def correlation_probability(theta_s_deg, theta_i_deg, state):
    """Probability that both photons pass analysers at (theta_s, theta_i)."""
    ts = np.radians(theta_s_deg)
    ti = np.radians(theta_i_deg)
    v = state.visibility_for(theta_s_deg, theta_i_deg)
    c = np.cos(2 * ts) * np.cos(2 * ti) + np.cos(state.phase_rad) * np.sin(2 * ts) * np.sin(2 * ti)
    return 0.25 * (1.0 + v * c)


def outcome_probabilities(theta_s_deg, theta_i_deg, state):
    """Probabilities of (++, +-, -+, --), '-' meaning the orthogonal port."""
    v = state.visibility_for(theta_s_deg, theta_i_deg)
    s = replace(state, visibility=v, basis_visibility={})
    p = np.array([
        correlation_probability(theta_s_deg, theta_i_deg, s),
        correlation_probability(theta_s_deg, theta_i_deg + 90, s),
        correlation_probability(theta_s_deg + 90, theta_i_deg, s),
        correlation_probability(theta_s_deg + 90, theta_i_deg + 90, s),
    ], dtype=float)
    return p / p.sum()


# ----------------------------------------------------------- estimators

def _scan_angle(records):
    ts = {r.theta_s_deg for r in records}
    ti = {r.theta_i_deg for r in records}
    return ("theta_s_deg", "theta_i_deg") if len(ts) >= len(ti) else ("theta_i_deg", "theta_s_deg")


def _no_fringe(method):
    warnings.warn("no fringe modulation; visibility 0 and the fringe phase is undefined", RuntimeWarning,
                  stacklevel=3)
    return VisibilityResult(0.0, 0.0, float("nan"), method)


def visibility(records, method="minmax"):
    """Fringe visibility from a correlation scan.

    ``minmax`` uses (N_max - N_min)/(N_max + N_min) on the recorded counts;
    ``fit`` least-squares fits a + b cos 2t + c sin 2t over the scanned angle and
    returns sqrt(b^2 + c^2)/a. Uncertainties are Poisson on the counts.
    """
    records = list(records)
    if len(records) < 2:
        raise ValueError("visibility needs at least two records")
    counts = np.array([r.coincidences for r in records], dtype=float)
    if method == "minmax":
        hi, lo = counts.max(), counts.min()
        if hi + lo == 0 or hi == lo:
            return _no_fringe(method)
        v = float((hi - lo) / (hi + lo))
        sigma = math.sqrt(4 * hi * lo / (hi + lo) ** 3)
        scan, _ = _scan_angle(records)
        return VisibilityResult(v, sigma, float(getattr(records[int(counts.argmax())], scan)), method)
    if method != "fit":
        raise ValueError(f"unknown visibility method {method!r}")

    scan, _ = _scan_angle(records)
    theta = np.radians([getattr(r, scan) for r in records])
    X = np.column_stack([np.ones_like(theta), np.cos(2 * theta), np.sin(2 * theta)])
    if np.linalg.matrix_rank(X) < 3:
        raise ValueError("fit needs at least three distinct scan angles (mod 180)")
    if counts.max() == counts.min():
        return _no_fringe(method)
    w = 1.0 / np.maximum(counts, 1.0)
    cov = np.linalg.inv(X.T @ (X * w[:, None]))
    a, b, c = cov @ (X.T @ (w * counts))
    amp = math.hypot(b, c)
    if a <= 0 or amp == 0:
        return _no_fringe(method)
    v = amp / a
    J = np.array([-amp / a**2, b / (amp * a), c / (amp * a)])
    sigma = math.sqrt(float(J @ cov @ J))
    phase = 0.5 * math.degrees(math.atan2(c, b))
    return VisibilityResult(float(min(v, 1.0)), sigma, phase, method)


def chsh_E(records):
    """Correlation from four records ordered (a,b), (a,b+90), (a+90,b), (a+90,b+90)."""
    records = list(records)
    if len(records) != 4:
        raise ValueError("chsh_E needs exactly four records")
    a, b = records[0].theta_s_deg, records[0].theta_i_deg
    expected = [(a, b), (a, b + 90), (a + 90, b), (a + 90, b + 90)]
    for r, (es, ei) in zip(records, expected):
        if not (_same_angle(r.theta_s_deg, es) and _same_angle(r.theta_i_deg, ei)):
            raise ValueError(f"record at ({r.theta_s_deg}, {r.theta_i_deg}) does not match the "
                             f"expected setting ({es}, {ei})")
    n = np.array([r.coincidences for r in records], dtype=float)
    total = n.sum()
    if total <= 0:
        raise UndefinedEstimateError("correlation undefined: zero total coincidences")
    e = (n[0] - n[1] - n[2] + n[3]) / total
    return Estimate(float(e), math.sqrt(max(1.0 - e * e, 0.0) / total))


def chsh_S(E_ab, E_ad, E_gd, E_gb):
    """S = |E(a,b) - E(a,d) + E(g,d) + E(g,b)| with its uncertainty."""
    es = [e if isinstance(e, Estimate) else Estimate(float(e), 0.0) for e in (E_ab, E_ad, E_gd, E_gb)]
    s = abs(es[0].value - es[1].value + es[2].value + es[3].value)
    sigma = math.sqrt(sum(e.sigma**2 for e in es))
    n_sigma = (s - 2.0) / sigma if sigma > 0 else math.copysign(math.inf, s - 2.0)
    return ChshResult(s, sigma, n_sigma, tuple(es))


def chsh_settings(angles=CHSH_ANGLES):
    """The sixteen (theta_s, theta_i) settings, grouped per E term in the order
    (a,b), (a,d), (g,d), (g,b)."""
    a, b, g, d = angles
    out = []
    for s, i in ((a, b), (a, d), (g, d), (g, b)):
        out += [(s, i), (s, i + 90), (s + 90, i), (s + 90, i + 90)]
    return out


def chsh_from_records(records, angles=CHSH_ANGLES):
    """Locate the sixteen settings among ``records`` and evaluate S."""
    table = {}
    for r in records:
        table.setdefault((_basis_key(r.theta_s_deg), _basis_key(r.theta_i_deg)), []).append(r)
    settings = chsh_settings(angles)
    groups = []
    for k in range(4):
        group = []
        for s, i in settings[4 * k:4 * k + 4]:
            found = table.get((_basis_key(s), _basis_key(i)))
            if not found:
                raise UndefinedEstimateError(f"no record at setting ({s:g}, {i:g})")
            group.append(_merge(found, s, i))
        groups.append(chsh_E(group))
    return chsh_S(*groups)


def _merge(records, theta_s, theta_i):
    """Pool repeated records at one setting into one (duration-weighted)."""
    if len(records) == 1:
        return replace(records[0], theta_s_deg=theta_s, theta_i_deg=theta_i)
    t = sum(r.duration_s for r in records)
    if t == 0:
        return CountRecord(theta_s, theta_i, 0.0, 0.0, 0.0, 0.0)

    def avg(attr):
        return sum(getattr(r, attr) * r.duration_s for r in records) / t

    return CountRecord(theta_s, theta_i, t, avg("Ns_hz"), avg("Ni_hz"), avg("N_hz"),
                       all(r.bg_subtracted for r in records))


def pair_rate_and_heralding(record):
    """Klyshko estimates R = Ns Ni / N, eta_s = N / Ni, eta_i = N / Ns.

    Uncertainties: Poisson on the three counts for R, binomial for the
    heralding ratios. They are NaN when the record carries no duration.
    """
    if record.N_hz <= 0:
        raise UndefinedEstimateError("pair rate undefined: no coincidences")
    ns, ni, n = record.Ns_hz, record.Ni_hz, record.N_hz
    rate = ns * ni / n
    eta_s, eta_i = n / ni, n / ns
    t = record.duration_s
    if t > 0:
        cs, ci, c = ns * t, ni * t, n * t
        s_rate = rate * math.sqrt(1 / cs + 1 / ci + 1 / c)
        s_es = math.sqrt(eta_s * (1 - eta_s) / ci)
        s_ei = math.sqrt(eta_i * (1 - eta_i) / cs)
    else:
        s_rate = s_es = s_ei = float("nan")
    return PairRateResult(Estimate(rate, s_rate), Estimate(eta_s, s_es), Estimate(eta_i, s_ei))


def unaccounted_loss(measured_heralding, budget_efficiency):
    """Ratio of measured heralding to the component-budget efficiency."""
    if not budget_efficiency > 0:
        raise ValueError("budget efficiency must be positive")
    return measured_heralding / budget_efficiency


# ------------------------------------------------------------ simulator

def expected_rates(state, det, power_mw, theta_s_deg, theta_i_deg):
    """Mean (Ns, Ni, N_true) rates in Hz, without accidentals."""
    r = power_mw * det.pair_rate_per_mw
    p = outcome_probabilities(theta_s_deg, theta_i_deg, state)
    ns = r * det.eta_s * (p[0] + p[1]) + det.dark_s_hz
    ni = r * det.eta_i * (p[0] + p[2]) + det.dark_i_hz
    return ns, ni, r * det.eta_s * det.eta_i * p[0]


def calibrate_detection(Ns_hz, Ni_hz, N_hz, power_mw, visibility_at_max=1.0, window_ns=1.5):
    """Efficiencies and pair rate reproducing a triple measured at a
    maximum-correlation setting (darks neglected)."""
    eta_s = 2 * N_hz / (Ni_hz * (1 + visibility_at_max))
    eta_i = 2 * N_hz / (Ns_hz * (1 + visibility_at_max))
    pair_rate = 2 * Ni_hz / eta_i
    return DetectionModel(eta_s, eta_i, 0.0, 0.0, window_ns, pair_rate / power_mw)


def _simulate_one(rng, state, det, power_mw, theta_s, theta_i, duration_s, bg_subtracted, seed):
    if duration_s == 0:
        return CountRecord(theta_s, theta_i, 0.0, 0.0, 0.0, 0.0, bg_subtracted, seed)
    pairs = rng.poisson(power_mw * det.pair_rate_per_mw * duration_s)
    n_pp, n_pm, n_mp, _ = rng.multinomial(pairs, outcome_probabilities(theta_s, theta_i, state))
    es, ei = det.eta_s, det.eta_i
    both, s_only, i_only, _ = rng.multinomial(n_pp, [es * ei, es * (1 - ei), (1 - es) * ei, (1 - es) * (1 - ei)])
    cs = both + s_only + rng.binomial(n_pm, es) + rng.poisson(det.dark_s_hz * duration_s)
    ci = both + i_only + rng.binomial(n_mp, ei) + rng.poisson(det.dark_i_hz * duration_s)
    ns, ni = cs / duration_s, ci / duration_s
    acc_rate = ns * ni * det.window_ns * 1e-9
    c = both + rng.poisson(acc_rate * duration_s)
    if bg_subtracted:
        c = max(c - acc_rate * duration_s, 0.0)
    c = min(c, cs, ci)
    return CountRecord(theta_s, theta_i, duration_s, ns, ni, c / duration_s, bg_subtracted, seed)


def simulate_experiment(state, det, power_mw, bases, duration_s, seed, bg_subtracted=False):
    """One count record per (theta_s, theta_i) in ``bases``.

    Pairs are Poisson at ``power_mw * pair_rate_per_mw``, split over the four
    analyser outcomes, then thinned by the detection efficiencies. Singles
    include dark counts; accidentals Ns Ni window are added to the
    coincidences, and removed again in the background-subtracted variant.
    """
    if seed is None:
        raise ValueError("a seed is required")
    if duration_s < 0 or power_mw < 0:
        raise ValueError("duration and power must be non-negative")
    rng = np.random.default_rng(seed)
    return [_simulate_one(rng, state, det, power_mw, float(s), float(i), float(duration_s), bg_subtracted, seed)
            for s, i in bases]


def spawn_seeds(master_seed, n):
    """Independent 64-bit sub-seeds for run 0..n-1 of a batch."""
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def simulate_batch(state, det, power_mw, bases, duration_s, master_seed, n_runs, bg_subtracted=False,
                   max_workers=None):
    """``n_runs`` independent experiments; result order follows the sub-seeds."""
    seeds = spawn_seeds(master_seed, n_runs)

    def run(seed):
        return simulate_experiment(state, det, power_mw, bases, duration_s, seed, bg_subtracted)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            return list(pool.map(run, seeds))
    return [run(s) for s in seeds]


def correlation_scan_bases(idler_angles=(0.0, 45.0, 90.0, 135.0), step_deg=10.0, stop_deg=360.0):
    """Signal-analyser sweeps at each fixed idler angle."""
    sweep = np.arange(0.0, stop_deg + step_deg / 2, step_deg)
    return [(float(s), float(i)) for i in idler_angles for s in sweep]


@dataclass(frozen=True)
class PowerScanPoint:
    power_mw: float
    pair_rate: Estimate
    eta_s: Estimate
    eta_i: Estimate


def power_scan_summary(records_by_power):
    """Mean Klyshko estimates over the bases recorded at each power."""
    out = []
    for power, recs in records_by_power:
        est = [pair_rate_and_heralding(r) for r in recs]
        k = len(est)

        def mean(attr):
            vals = [getattr(e, attr) for e in est]
            return Estimate(sum(v.value for v in vals) / k, math.sqrt(sum(v.sigma**2 for v in vals)) / k)

        out.append(PowerScanPoint(float(power), mean("rate_hz"), mean("eta_s"), mean("eta_i")))
    return out


# ------------------------------------------------------------------ csv

def write_records_csv(records, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([repr(float(r.theta_s_deg)), repr(float(r.theta_i_deg)), repr(float(r.duration_s)),
                         repr(float(r.Ns_hz)), repr(float(r.Ni_hz)), repr(float(r.N_hz)),
                         "1" if r.bg_subtracted else "0", "" if r.seed is None else str(r.seed)])


_TRUE = {"1", "true", "yes"}
_FALSE = {"0", "false", "no", ""}


def read_records_csv(fh):
    """Parse count records; extra columns are ignored, missing ones rejected."""
    reader = csv.DictReader(fh, skipinitialspace=True)
    if reader.fieldnames is None:
        return []
    names = [n.strip() for n in reader.fieldnames]
    missing = [c for c in CSV_COLUMNS if c not in names and c != "seed"]
    if missing:
        raise ValueError(f"count CSV lacks columns: {', '.join(missing)}")
    reader.fieldnames = names
    out = []
    for line, row in enumerate(reader, start=2):
        try:
            flag = row["bg_subtracted"].strip().lower()
            if flag not in _TRUE | _FALSE:
                raise ValueError(f"bad bg_subtracted value {flag!r}")
            seed = (row.get("seed") or "").strip()
            out.append(CountRecord(
                float(row["theta_s_deg"]), float(row["theta_i_deg"]), float(row["duration_s"]),
                float(row["Ns_hz"]), float(row["Ni_hz"]), float(row["N_hz"]),
                flag in _TRUE, int(seed) if seed else None,
            ))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"count CSV line {line}: {exc}") from None
    return out
