"""Monte-Carlo BER engine with reproducible seeding.

Frame pipeline: draw a channel and payload, precode per transmit antenna
(time-domain shifts after modulation, grid/chirp-domain shifts before),
superpose at each receive antenna, add noise at SNRd = 1/n0, detect, count
bit errors.  Every frame draws from an independent stream keyed by
(master_seed, snr_index, frame_index) and stopping happens on fixed block
boundaries, so results are bitwise identical for any worker count.

Channel matrices are built by one of three routes, picked in _prepare:
  taps   closed-form sparse taps of the shifted profile with per-path gain
         phases (integer grids; exact for every scheme except the two below)
  perm   closed-form taps of the raw profile times the precoder permutation
         (grid-domain shifts with rectangular pulses, and uncompensated
         chirp-domain shifts, do not reduce to a shifted-profile tap set)
  dense  explicit modulate/channel/demodulate matrix products (fractional
         Doppler; small frames only)

With the idealized bi-orthogonal pulse the grid channel is an imposed map
with no time-domain representation, so time-domain shifts are defined by
the shifted-profile equivalence that is exact in the rectangular case.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .afdm import AfdmConfig, afdm_matrix_from_taps, daft_matrix, optimal_c1
from .cdds import (
    AFDM,
    CDDS,
    MD,
    OTFS,
    SISO,
    TD,
    CddsPlan,
    effective_gains,
    m_shift,
    make_plan,
    md_cdds_afdm,
    md_cdds_otfs,
    plan_steps,
    td_cdds,
)
from .channel import Eva, FixedProfile, UniformJakes, generate_mimo, time_channel_matrix
from .core import crandn, rng_stream
from .detect import _ML_CAP, StackedSystem, get_alphabet, ml_detect, mp_detect
from .estimate import PilotLayout, build_layout, embed_frame, epa_estimate
from .otfs import BIORTH, OtfsConfig, modulation_matrix, otfs_matrix_from_taps

PERFECT = "perfect"
ESTIMATED = "estimated"
ML = "ml"
MP = "mp"

ROUTE_TAPS = "taps"
ROUTE_PERM = "perm"
ROUTE_DENSE = "dense"

BLOCK_FRAMES = 100  # stopping granularity; fixed so worker count cannot move it
DENSE_ROUTE_MAX = 256  # largest frame the dense route will build per path
CSV_HEADER = "snr_db,ber,bit_errors,bits,frames"
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid simulation configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class SimConfig:
    """Declarative description of one BER experiment.

    Frame scale enters only through n (and the grid split for the
    delay-Doppler waveform); carrier and subcarrier-spacing labels live in
    whatever produced l_max/k_max and are not needed here.
    """

    waveform: str
    n: int
    channel: FixedProfile | UniformJakes | Eva
    snr_grid_db: tuple[float, ...]
    grid: tuple[int, int] | None = None  # (K, L), required for the DD grid
    pulse: str = "rect"
    alphabet: str = "bpsk"
    n_t: int = 1
    n_r: int = 1
    cdds_kind: str = TD
    plan: CddsPlan | None = None  # None with n_t > 1 plans automatically
    phase_compensation: bool = True
    detector: str = ML
    detector_opts: dict = field(default_factory=dict)
    csi: str = PERFECT
    snrp_db: float = 40.0
    embed_pilots: bool | None = None  # None: pilots iff csi == "estimated"
    min_errors: int = 200
    max_frames: int = 100_000
    master_seed: int = 0
    k_space: int | None = None  # None: the largest planned Doppler shift

    def __post_init__(self):
        if self.waveform not in (AFDM, OTFS):
            raise ConfigError(f"waveform must be '{AFDM}' or '{OTFS}', got {self.waveform!r}")
        if self.waveform == AFDM and self.n % 2:
            # the diversity-optimal slope has odd 2Nc1, for which the
            # closed-form tap route is exact only on even frames
            raise ConfigError(f"chirp frames need even n, got {self.n}")
        if self.waveform == OTFS:
            if self.grid is None:
                raise ConfigError("the DD-grid waveform needs grid = (K, L)")
            if self.grid[0] * self.grid[1] != self.n:
                raise ConfigError(f"grid {self.grid} does not multiply to n = {self.n}")
        snr = self.snr_grid_db
        if len(snr) == 0 or any(b <= a for a, b in zip(snr, snr[1:])):
            raise ConfigError("snr_grid_db must be non-empty and strictly increasing")
        if self.min_errors <= 0 or self.max_frames <= 0:
            raise ConfigError("stop rule must be positive")
        if self.n_t < 1 or self.n_r < 1:
            raise ConfigError("antenna counts must be >= 1")
        if self.cdds_kind not in (TD, MD):
            raise ConfigError(f"cdds_kind must be '{TD}' or '{MD}', got {self.cdds_kind!r}")
        if self.detector not in (ML, MP):
            raise ConfigError(f"detector must be '{ML}' or '{MP}', got {self.detector!r}")
        if self.csi not in (PERFECT, ESTIMATED):
            raise ConfigError(f"csi must be '{PERFECT}' or '{ESTIMATED}', got {self.csi!r}")
        if self.plan is not None and self.plan.n_t != self.n_t:
            raise ConfigError(f"plan has {self.plan.n_t} steps for n_t = {self.n_t}")
        if self.csi == ESTIMATED and self.embed_pilots is False:
            raise ConfigError("estimated CSI needs embedded pilots")

    @property
    def with_pilots(self) -> bool:
        return self.embed_pilots if self.embed_pilots is not None else self.csi == ESTIMATED


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    ber: float
    bit_errors: int
    bits: int
    frames: int

    def __post_init__(self):
        if self.bits <= 0:
            raise ValueError("a BER point needs simulated bits")
        if self.ber != self.bit_errors / self.bits:
            raise ValueError("ber must equal bit_errors / bits")


@dataclass(frozen=True)
class BerCurve:
    points: tuple[BerPoint, ...]

    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    def ber(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])


def curve_to_csv(curve: BerCurve) -> str:
    lines = [CSV_HEADER]
    for p in curve.points:
        lines.append(f"{p.snr_db:g},{p.ber:.10e},{p.bit_errors},{p.bits},{p.frames}")
    return "\n".join(lines) + "\n"


def _integer_channel(model) -> bool:
    if isinstance(model, FixedProfile):
        return all(abs(k - round(k)) < 1e-9 for k, _ in model.support)
    return bool(model.integer_doppler)


def _planning_profile(model) -> frozenset[tuple[float, int]]:
    """Profile the planner must clear: the support itself when fixed, else
    the full (doppler, delay) rectangle the ensemble can land on."""
    if isinstance(model, FixedProfile):
        return frozenset(model.support)
    k_max = int(math.ceil(model.k_max))
    return frozenset(
        (float(k), l) for k in range(-k_max, k_max + 1) for l in range(model.l_max + 1)
    )


@dataclass
class _RunContext:
    """Everything a worker needs; built once, pickled to worker processes."""

    cfg: SimConfig
    wcfg: AfdmConfig | OtfsConfig
    plan: CddsPlan
    route: str
    layout: PilotLayout | None
    perms: tuple[np.ndarray, ...] | None  # per-step source-column permutation


def _prepare(cfg: SimConfig) -> _RunContext:
    model = cfg.channel
    l_max = int(model.l_max)
    k_max = int(math.ceil(model.k_max))

    plan = cfg.plan
    if plan is None:
        if cfg.n_t == 1:
            plan = make_plan()
        else:
            span = cfg.grid[1] if cfg.waveform == OTFS else cfg.n
            result = plan_steps(
                _planning_profile(model), cfg.n_t, cfg.waveform, cfg.n, delay_span=span
            )
            if not result.feasible:
                raise ConfigError(
                    f"no non-overlapping {cfg.n_t}-antenna plan fits the default window"
                )
            plan = result.plan
    k_shift_max = max(abs(s.k_shift) for s in plan.steps)
    l_shift_max = max(s.l_shift for s in plan.steps)

    if cfg.waveform == AFDM:
        if l_max + l_shift_max >= cfg.n:
            raise ConfigError("shifted delays exceed the frame")
        k_sp = cfg.k_space if cfg.k_space is not None else k_shift_max
        c1, _ = optimal_c1(k_max, k_sp, cfg.n)
        wcfg = AfdmConfig(cfg.n, c1, k_max=k_max, k_space=k_sp, l_max=l_max)
    else:
        K, L = cfg.grid
        if l_max + l_shift_max >= L:
            raise ConfigError("shifted delays exceed the delay dimension of the grid")
        wcfg = OtfsConfig(K, L, pulse=cfg.pulse)

    integer = _integer_channel(model)
    if not integer:
        if cfg.waveform == OTFS and cfg.pulse == BIORTH:
            raise ConfigError("fractional Doppler needs the rectangular pulse")
        if cfg.n > DENSE_ROUTE_MAX:
            raise ConfigError(
                f"fractional Doppler runs the dense route, capped at n = {DENSE_ROUTE_MAX}"
            )
        route = ROUTE_DENSE
    elif cfg.cdds_kind == TD:
        route = ROUTE_TAPS
    elif cfg.waveform == AFDM:
        route = ROUTE_TAPS if cfg.phase_compensation else ROUTE_PERM
    else:
        route = ROUTE_TAPS if cfg.pulse == BIORTH else ROUTE_PERM

    perms = None
    if route == ROUTE_PERM:
        j = np.arange(cfg.n)
        ps = []
        for step in plan.steps:
            if cfg.waveform == AFDM:
                ps.append((j + m_shift(step, wcfg)) % cfg.n)
            else:
                K, L = cfg.grid
                k_j, l_j = j % K, j // K
                ps.append(((l_j + step.l_shift) % L) * K + ((k_j + step.k_shift) % K))
        perms = tuple(ps)

    layout = None
    if cfg.with_pilots:
        if not integer:
            raise ConfigError("pilot-based estimation assumes an integer-grid channel")
        scheme = CDDS if cfg.n_t > 1 else SISO
        layout = build_layout(
            cfg.waveform, scheme, wcfg, l_max, k_max, cfg.n_t, l_shift_max, k_shift_max
        )

    if cfg.detector == ML:
        n_sym = len(layout.data_cells) if layout is not None else cfg.n
        q = len(get_alphabet(cfg.alphabet).points)
        if q**n_sym > _ML_CAP:
            raise ConfigError(
                f"{q}^{n_sym} candidates exceed the exhaustive detector; use '{MP}'"
            )

    return _RunContext(cfg=cfg, wcfg=wcfg, plan=plan, route=route, layout=layout, perms=perms)


def _matrix_from_taps(gains, delays, dopplers, wcfg) -> np.ndarray:
    if isinstance(wcfg, AfdmConfig):
        return afdm_matrix_from_taps(gains, delays, dopplers, wcfg)
    return otfs_matrix_from_taps(gains, delays, dopplers, wcfg)


def _dense_matrices(
    ctx: _RunContext, compensate: bool | None = None
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """(demod, mod, per-step precoder) factors for the dense route."""
    cfg, wcfg = ctx.cfg, ctx.wcfg
    if compensate is None:
        compensate = cfg.phase_compensation
    if cfg.waveform == AFDM:
        Mod = daft_matrix(wcfg).conj().T
    else:
        Mod = modulation_matrix(wcfg)
    Dem = Mod.conj().T
    Cs = []
    for step in ctx.plan.steps:
        if cfg.cdds_kind == TD:
            Cs.append(td_cdds(step, cfg.n).matrix)
        elif cfg.waveform == AFDM:
            Cs.append(md_cdds_afdm(step, wcfg, compensate=compensate).matrix)
        else:
            Cs.append(md_cdds_otfs(step, *cfg.grid).matrix)
    return Dem, Mod, Cs


def _effective_stack(ctx: _RunContext, mimo, dense=None, route: str | None = None) -> np.ndarray:
    """Stacked effective channel, shape (n_r * n, n); columns in symbol units."""
    cfg, wcfg, plan = ctx.cfg, ctx.wcfg, ctx.plan
    if route is None:
        route = ctx.route
    n = cfg.n
    rows = []
    for r in range(cfg.n_r):
        if route == ROUTE_TAPS:
            gains, delays, dopplers = [], [], []
            for t, step in enumerate(plan.steps):
                ch = mimo.realization(r, t)
                gains.append(effective_gains(ch, step, cfg.cdds_kind, wcfg))
                delays.append(ch.delays() + step.l_shift)
                dopplers.append(ch.dopplers() + step.k_shift)
            G = _matrix_from_taps(
                np.concatenate(gains), np.concatenate(delays), np.concatenate(dopplers), wcfg
            )
        elif route == ROUTE_PERM:
            G = np.zeros((n, n), dtype=complex)
            for t, step in enumerate(plan.steps):
                ch = mimo.realization(r, t)
                base = _matrix_from_taps(ch.gains(), ch.delays(), ch.dopplers(), wcfg)
                G += base[:, ctx.perms[t]]
        else:
            Dem, Mod, Cs = dense
            G = np.zeros((n, n), dtype=complex)
            for t, step in enumerate(plan.steps):
                Ht = time_channel_matrix(mimo.realization(r, t), n)
                if cfg.cdds_kind == TD:
                    G += Dem @ Ht @ Cs[t] @ Mod
                else:
                    G += Dem @ Ht @ Mod @ Cs[t]
        rows.append(G)
    return np.concatenate(rows, axis=0)


def _detect(ctx: _RunContext, H: np.ndarray, y: np.ndarray, n0: float) -> np.ndarray:
    alphabet = get_alphabet(ctx.cfg.alphabet)
    sys = StackedSystem(H, y, n0)
    if ctx.cfg.detector == ML:
        return ml_detect(sys, alphabet)
    return mp_detect(sys, alphabet, **ctx.cfg.detector_opts).symbols


def _run_frames(ctx: _RunContext, snr_index: int, n0: float, start: int, count: int):
    """Simulate frames [start, start+count); returns (bit_errors, bits, est_failures)."""
    cfg = ctx.cfg
    alphabet = get_alphabet(cfg.alphabet)
    n = cfg.n
    layout = ctx.layout
    n_sym = len(layout.data_cells) if layout is not None else n
    bps = alphabet.bits_per_symbol
    scale = 1.0 / math.sqrt(cfg.n_t)
    dense = _dense_matrices(ctx) if ctx.route == ROUTE_DENSE else None
    # With compensation off, the receiver still assumes the compensated
    # equivalent channel: one pilot sounding cannot reveal per-antenna phase
    # errors, so "perfect" CSI means perfect knowledge of the model taps.
    mismatch = (
        cfg.cdds_kind == MD
        and cfg.waveform == AFDM
        and not cfg.phase_compensation
        and cfg.csi == PERFECT
    )
    dense_model = _dense_matrices(ctx, compensate=True) if mismatch and dense else None

    errors = 0
    est_failures = 0
    for f in range(start, start + count):
        rng = rng_stream(cfg.master_seed, snr_index, f)
        mimo = generate_mimo(cfg.channel, cfg.n_t, cfg.n_r, rng)
        bits = rng.integers(0, 2, size=n_sym * bps)
        w = math.sqrt(n0) * crandn(rng, cfg.n_r * n)

        symbols = alphabet.bits_to_symbols(bits)
        if layout is not None:
            pilot_amp = math.sqrt(10.0 ** (cfg.snrp_db / 10.0) * n0)
            x = embed_frame(symbols * scale, layout, pilot_amp)
        else:
            x = symbols * scale

        H_true = _effective_stack(ctx, mimo, dense)
        y = H_true @ x + w

        if cfg.csi == ESTIMATED:
            mats = []
            failed = True
            for r in range(cfg.n_r):
                est = epa_estimate(y[r * n : (r + 1) * n], layout, ctx.wcfg, n0, pilot_amp)
                mats.append(est.matrix)
                failed = failed and est.failed
            est_failures += failed
            H_csi = np.concatenate(mats, axis=0)
        elif mismatch:
            if dense_model is not None:
                H_csi = _effective_stack(ctx, mimo, dense_model)
            else:
                H_csi = _effective_stack(ctx, mimo, route=ROUTE_TAPS)
        else:
            H_csi = H_true

        if layout is not None:
            x_pilot = embed_frame(np.zeros(n_sym), layout, pilot_amp)
            y_data = y - H_csi @ x_pilot
            H_det = H_csi[:, list(layout.data_cells)] * scale
        else:
            y_data = y
            H_det = H_csi * scale

        detected = _detect(ctx, H_det, y_data, n0)
        errors += int(np.sum(alphabet.symbols_to_bits(detected) != bits))
    return errors, count * n_sym * bps, est_failures


def run_ber(cfg: SimConfig, workers: int = 1) -> BerCurve:
    """Simulate the SNR grid to the stop rule; deterministic in master_seed.

    Frames are consumed in fixed blocks of BLOCK_FRAMES and each frame owns
    an rng stream keyed by (master_seed, snr_index, frame_index), so the set
    of simulated frames, and therefore every reported count, is independent
    of workers.
    """
    ctx = _prepare(cfg)
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        points = []
        for si, snr_db in enumerate(cfg.snr_grid_db):
            n0 = 10.0 ** (-snr_db / 10.0)
            errors = bits = frames = 0
            while errors < cfg.min_errors and frames < cfg.max_frames:
                count = min(BLOCK_FRAMES, cfg.max_frames - frames)
                if pool is None:
                    e, b, _ = _run_frames(ctx, si, n0, frames, count)
                    errors, bits = errors + e, bits + b
                else:
                    bounds = np.linspace(0, count, workers + 1).astype(int)
                    futs = [
                        pool.submit(_run_frames, ctx, si, n0, frames + lo, hi - lo)
                        for lo, hi in zip(bounds[:-1], bounds[1:])
                        if hi > lo
                    ]
                    for fut in futs:
                        e, b, _ = fut.result()
                        errors, bits = errors + e, bits + b
                frames += count
            points.append(BerPoint(snr_db, errors / bits, errors, bits, frames))
        return BerCurve(tuple(points))
    finally:
        if pool is not None:
            pool.shutdown()


def diversity_slope(curve: BerCurve, window: tuple[float, float]) -> float:
    """Least-squares negative slope of log10(BER) against snr_db / 10.

    Zero-BER points in the window are excluded; fewer than two usable points
    is an error.
    """
    lo, hi = window
    pts = [p for p in curve.points if lo <= p.snr_db <= hi and p.ber > 0]
    if len(pts) < 2:
        raise ValueError(f"need >= 2 positive-BER points in [{lo}, {hi}], have {len(pts)}")
    x = np.array([p.snr_db / 10.0 for p in pts])
    y = np.log10([p.ber for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return -float(slope)


# ---------------------------------------------------------------------------
# JSON configuration

_CHANNEL_MODELS = ("fixed", "jakes", "eva")


def _channel_from_dict(d: dict):
    if "model" not in d:
        raise ConfigError("channel: missing key 'model'")
    name = d["model"]
    if name == "fixed":
        if "support" not in d:
            raise ConfigError("channel: missing key 'support'")
        return FixedProfile(tuple((float(k), int(l)) for k, l in d["support"]))
    if name == "jakes":
        for key in ("l_max", "k_max"):
            if key not in d:
                raise ConfigError(f"channel: missing key '{key}'")
        return UniformJakes(
            l_max=int(d["l_max"]),
            k_max=float(d["k_max"]),
            n_paths=int(d.get("n_paths", 2)),
            integer_doppler=bool(d.get("integer_doppler", False)),
        )
    if name == "eva":
        return Eva(
            k_max=float(d.get("k_max", 6.0)),
            integer_doppler=bool(d.get("integer_doppler", False)),
        )
    raise ConfigError(f"channel: unknown model {name!r}, expected one of {_CHANNEL_MODELS}")


def load_config(source) -> SimConfig:
    """SimConfig from a JSON document (path, JSON text, or parsed dict)."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        try:
            is_file = Path(text).is_file()
        except OSError:  # JSON text can exceed the filename length limit
            is_file = False
        if is_file:
            text = Path(text).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"missing or unsupported 'schema' (expected {SCHEMA_VERSION})")
    for key in ("waveform", "n", "channel", "snr_grid_db"):
        if key not in doc:
            raise ConfigError(f"missing key '{key}'")

    cdds = doc.get("cdds", {})
    plan = None
    if cdds.get("steps") is not None:
        plan = make_plan(*[(int(k), int(l)) for k, l in cdds["steps"]])
    det = doc.get("detector", {"name": ML})
    if "name" not in det:
        raise ConfigError("detector: missing key 'name'")
    det_opts = {k: v for k, v in det.items() if k != "name"}
    csi = doc.get("csi", {"mode": PERFECT})
    if "mode" not in csi:
        raise ConfigError("csi: missing key 'mode'")
    stop = doc.get("stop", {})

    try:
        return SimConfig(
            waveform=doc["waveform"],
            n=int(doc["n"]),
            channel=_channel_from_dict(doc["channel"]),
            snr_grid_db=tuple(float(s) for s in doc["snr_grid_db"]),
            grid=tuple(doc["grid"]) if "grid" in doc else None,
            pulse=doc.get("pulse", "rect"),
            alphabet=doc.get("alphabet", "bpsk"),
            n_t=int(doc.get("n_t", 1)),
            n_r=int(doc.get("n_r", 1)),
            cdds_kind=cdds.get("kind", TD),
            plan=plan,
            phase_compensation=bool(cdds.get("phase_compensation", True)),
            detector=det["name"],
            detector_opts=det_opts,
            csi=csi["mode"],
            snrp_db=float(csi.get("snrp_db", 40.0)),
            embed_pilots=doc.get("embed_pilots"),
            min_errors=int(stop.get("min_errors", 200)),
            max_frames=int(stop.get("max_frames", 100_000)),
            master_seed=int(doc.get("master_seed", 0)),
            k_space=doc.get("k_space"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def override_seed(cfg: SimConfig, seed: int | None) -> SimConfig:
    return cfg if seed is None else replace(cfg, master_seed=seed)
