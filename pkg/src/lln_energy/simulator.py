"""Monte Carlo validator: replay the transfer's stochastic process and count bits.

This is the independent check on the closed-form expectations. Nothing
above a single transmission attempt is taken from the formulas: delivery
chains across hops, duplicate suppression after lost link ACKs, fragment
rounds, and unbounded end-to-end retries are all replayed event by event.
A data frame crosses a hop after up to r attempts; an attempt that loses
only the link ACK still delivers (the receiver relays and later drops the
duplicate retransmission). A segment round sends all m fragments end to
end, then the TCP ACK back across the reversed path; the round repeats
until that ACK arrives.

Two fidelities draw the per-attempt outcome: ``frame`` samples the
(fail, partial, success) categorical summarizing one attempt, ``bit``
draws the raw per-bit error counts and applies the correction threshold.

Configurations whose round success probability is minuscule (expected
rounds per segment can reach 1e10 and beyond) cannot be replayed round by
round in any budget. For those the ``batched`` method samples the round
count from its exact geometric law and the per-round costs from simulated
conditioned rounds; the estimate stays unbiased for the mean and every
cost component is still measured from process draws, never from the
closed-form expectations. Counters become expected-value estimates
(floats) in that mode.

Replication ``i`` always derives its RNG stream from
``(master_seed, i)``, so serial and parallel execution produce
bit-identical reports.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .framing import resolve_frames
from .hopmodel import AttemptProbs, attempt_probs, frame_error_prob
from .pathmodel import EnergyParams, PathScenario

__all__ = [
    "SimConfig",
    "SimCounters",
    "SimReport",
    "TruncationWarning",
    "simulate",
]

RNG_ALGORITHM = "PCG64"


class TruncationWarning(RuntimeWarning):
    """A per-segment attempt cap fired; the reported mean is biased low."""


@dataclass(frozen=True)
class SimConfig:
    scenario: PathScenario
    energy: EnergyParams = field(default_factory=EnergyParams)
    replications: int = 30
    master_seed: int = 1
    fidelity: str = "frame"  # "frame" | "bit"
    segment_cap: int | None = None  # simulate this many segments, scale linearly
    round_cap: int = 1_000_000  # attempts allowed per segment before truncating
    method: str = "auto"  # "auto" | "direct" | "batched"
    batched_threshold: float = 50.0  # auto: batched above this expected rounds/segment
    fail_round_samples: int = 128  # batched: failed rounds sampled per replication
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        if self.fidelity not in ("frame", "bit"):
            raise ValueError(f'fidelity must be "frame" or "bit", got {self.fidelity!r}')
        if self.method not in ("auto", "direct", "batched"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "batched" and self.fidelity == "bit":
            raise ValueError("the batched estimator requires frame fidelity")
        if self.segment_cap is not None and self.segment_cap < 1:
            raise ValueError("segment_cap must be >= 1")
        if self.round_cap < 1:
            raise ValueError("round_cap must be >= 1")
        if self.fail_round_samples < 1:
            raise ValueError("fail_round_samples must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


COUNTER_NAMES = (
    "link_attempts",
    "link_failures",
    "partial_failures",
    "hop_drops",
    "duplicates_suppressed",
    "segment_sends",
    "segment_retx",
)


@dataclass(frozen=True)
class SimCounters:
    """Per-replication mean event counts (floats; exact in direct mode)."""

    link_attempts: float
    link_failures: float
    partial_failures: float
    hop_drops: float
    duplicates_suppressed: float
    segment_sends: float
    segment_retx: float

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in COUNTER_NAMES}


@dataclass(frozen=True)
class SimReport:
    replications: int
    segments: int
    segments_simulated: int
    mean_total_bits: float
    stddev_total_bits: float
    stderr_total_bits: float
    ci95_half_width: float
    mean_total_joules: float
    counters: SimCounters
    method: str
    fidelity: str
    truncated: bool
    master_seed: int
    rng_algorithm: str
    flags: tuple[str, ...]

    def to_record(self) -> dict:
        """Flat key/value record, mergeable with ModelReport rows."""
        rec = {
            "replications": self.replications,
            "segments": self.segments,
            "segments_simulated": self.segments_simulated,
            "mean_total_bits": self.mean_total_bits,
            "stddev_total_bits": self.stddev_total_bits,
            "stderr_total_bits": self.stderr_total_bits,
            "ci95_half_width": self.ci95_half_width,
            "mean_total_joules": self.mean_total_joules,
            "method": self.method,
            "fidelity": self.fidelity,
            "truncated": self.truncated,
            "master_seed": self.master_seed,
            "rng_algorithm": self.rng_algorithm,
            "flags": ";".join(self.flags),
        }
        rec.update(self.counters.to_dict())
        return rec


class _HopTables:
    """Categorical distribution of one hop traversal's summary.

    Enumerates every way <= r attempts can play out: either no attempt
    succeeds outright (i partial failures among r, delivered iff i >= 1)
    or the k-th attempt is the first success (i partials before it). Each
    class carries the attempt count, how many data copies reached the
    receiver (each one costs a link ACK and all but the first are dropped
    as duplicates), and whether the frame got through at all.
    """

    def __init__(self, probs: AttemptProbs, r: int):
        pf, pp, ps = probs.p_fail, probs.p_partial, probs.p_succ
        weights: list[float] = []
        attempts: list[int] = []
        arrivals: list[int] = []
        ended_success: list[bool] = []
        for i in range(r + 1):  # no outright success in r attempts
            weights.append(math.comb(r, i) * pp**i * pf ** (r - i))
            attempts.append(r)
            arrivals.append(i)
            ended_success.append(False)
        for k in range(1, r + 1):  # first success at attempt k
            for i in range(k):
                weights.append(math.comb(k - 1, i) * pp**i * pf ** (k - 1 - i) * ps)
                attempts.append(k)
                arrivals.append(i + 1)
                ended_success.append(True)
        w = np.asarray(weights, dtype=np.float64)
        self.attempts = np.asarray(attempts, dtype=np.int64)
        self.arrivals = np.asarray(arrivals, dtype=np.int64)
        self.partials = self.arrivals - np.asarray(ended_success, dtype=np.int64)
        self.delivered = self.arrivals > 0
        self.cum = np.cumsum(w)
        self.cum[-1] = 1.0
        self.p_delivered = float(w[self.delivered].sum())

        cw = w[self.delivered]
        self.cond_index = np.flatnonzero(self.delivered)
        self.cond_cum = np.cumsum(cw / cw.sum()) if self.p_delivered > 0 else None
        if self.cond_cum is not None:
            self.cond_cum[-1] = 1.0

    def draw(self, u: np.ndarray) -> np.ndarray:
        """Class indices for uniform draws in [0, 1)."""
        return np.minimum(np.searchsorted(self.cum, u, side="right"), len(self.cum) - 1)

    def draw_delivered(self, u: np.ndarray) -> np.ndarray:
        """Class indices conditioned on the frame getting through."""
        k = np.minimum(
            np.searchsorted(self.cond_cum, u, side="right"), len(self.cond_cum) - 1
        )
        return self.cond_index[k]


class _Process:
    """Precomputed per-hop machinery for one configuration."""

    def __init__(self, config: SimConfig):
        self.config = config
        scenario = config.scenario
        frames = resolve_frames(scenario.mss_bytes, scenario.layout)
        self.m = frames.m
        self.h = len(scenario.hops)
        self.d_data = frames.d_data_bits
        self.c_data = frames.c_data_bits
        self.d_ack = frames.d_ack_bits
        self.c_ack = frames.c_ack_bits
        self.a = scenario.layout.ll_ack_bits
        self.data_hops = tuple(scenario.hops)
        self.ack_hops = tuple(reversed(scenario.hops))  # TCP ACK travels back

        self.segments = scenario.segments
        self.n_seg = (
            min(self.segments, config.segment_cap)
            if config.segment_cap is not None
            else self.segments
        )

        if config.fidelity == "frame":
            self.data_tables = [
                _HopTables(attempt_probs(self.d_data, self.c_data, self.a, hp.ber), hp.r)
                for hp in self.data_hops
            ]
            self.ack_tables = [
                _HopTables(attempt_probs(self.d_ack, self.c_ack, self.a, hp.ber), hp.r)
                for hp in self.ack_hops
            ]
            q_frag = math.prod(t.p_delivered for t in self.data_tables)
            q_ack = math.prod(t.p_delivered for t in self.ack_tables)
            self.p_round = q_frag**self.m * q_ack
        else:
            self.data_tables = self.ack_tables = None
            q_frag = math.prod(
                1.0 - frame_error_prob(self.d_data, self.c_data, hp.ber) ** hp.r
                for hp in self.data_hops
            )
            q_ack = math.prod(
                1.0 - frame_error_prob(self.d_ack, self.c_ack, hp.ber) ** hp.r
                for hp in self.ack_hops
            )
            self.p_round = q_frag**self.m * q_ack  # method heuristic only

        if config.method != "auto":
            self.method = config.method
        elif (
            config.fidelity == "frame"
            and (self.p_round == 0.0 or 1.0 / self.p_round > config.batched_threshold)
        ):
            self.method = "batched"
        else:
            self.method = "direct"

    # -- one phase: a frame type crossing all hops for a batch of segments --

    def _phase_frame(self, rng, tables, shape):
        """Frame-fidelity hop summaries for ``shape`` traversals x h hops."""
        u = rng.random(shape + (self.h,))
        att = np.empty(shape + (self.h,), np.int64)
        arr = np.empty_like(att)
        par = np.empty_like(att)
        dlv = np.empty(shape + (self.h,), bool)
        for j, tbl in enumerate(tables):
            idx = tbl.draw(u[..., j])
            att[..., j] = tbl.attempts[idx]
            arr[..., j] = tbl.arrivals[idx]
            par[..., j] = tbl.partials[idx]
            dlv[..., j] = tbl.delivered[idx]
        return att, arr, par, dlv

    def _phase_bit(self, rng, hops, d_bits, c_bits, shape):
        """Bit-fidelity hop summaries: raw binomial error draws per attempt."""
        att = np.empty(shape + (self.h,), np.int64)
        arr = np.empty_like(att)
        par = np.empty_like(att)
        dlv = np.empty(shape + (self.h,), bool)
        for j, hp in enumerate(hops):
            r = hp.r
            nerr = rng.binomial(d_bits, hp.ber, size=shape + (r,))
            data_ok = nerr <= c_bits
            ack_lost = rng.binomial(self.a, hp.ber, size=shape + (r,)) > 0
            succ = data_ok & ~ack_lost
            any_succ = succ.any(axis=-1)
            first = succ.argmax(axis=-1)
            attempts = np.where(any_succ, first + 1, r)
            used = np.arange(r) < attempts[..., None]
            arrivals = (data_ok & used).sum(axis=-1)
            att[..., j] = attempts
            arr[..., j] = arrivals
            par[..., j] = arrivals - any_succ
            dlv[..., j] = arrivals > 0
        return att, arr, par, dlv

    def _chain(self, dlv):
        """(reached, all_delivered): which hops are actually attempted."""
        ok = np.logical_and.accumulate(dlv, axis=-1)
        reached = np.ones_like(dlv)
        reached[..., 1:] = ok[..., :-1]
        return reached, ok[..., -1]

    def round_batch(self, rng, n, per_item=False):
        """One full segment round for n segments.

        Returns (bits, ok, counters); counters are scalars summed over the
        batch, or per-segment arrays when ``per_item`` (the batched
        estimator needs to average over failed rounds).
        """
        m, h = self.m, self.h
        if self.config.fidelity == "frame":
            att, arr, par, dlv = self._phase_frame(rng, self.data_tables, (n, m))
        else:
            att, arr, par, dlv = self._phase_bit(
                rng, self.data_hops, self.d_data, self.c_data, (n, m)
            )
        reached, frag_ok = self._chain(dlv)
        data_bits = ((att * self.d_data + arr * self.a) * reached).sum(axis=(1, 2))
        seg_ok = frag_ok.all(axis=1)

        if self.config.fidelity == "frame":
            att2, arr2, par2, dlv2 = self._phase_frame(rng, self.ack_tables, (n,))
        else:
            att2, arr2, par2, dlv2 = self._phase_bit(
                rng, self.ack_hops, self.d_ack, self.c_ack, (n,)
            )
        reached2, ack_through = self._chain(dlv2)
        reached2 &= seg_ok[:, None]  # the TCP ACK is only sent if the data arrived
        ack_bits = ((att2 * self.d_ack + arr2 * self.a) * reached2).sum(axis=1)
        ok = seg_ok & ack_through

        bits = data_bits + ack_bits
        axes = (1, 2)
        c = {
            "link_attempts": (att * reached).sum(axis=axes) + (att2 * reached2).sum(axis=1),
            "link_failures": ((att - arr) * reached).sum(axis=axes)
            + ((att2 - arr2) * reached2).sum(axis=1),
            "partial_failures": (par * reached).sum(axis=axes)
            + (par2 * reached2).sum(axis=1),
            "hop_drops": (reached & ~dlv).sum(axis=axes)
            + (reached2 & ~dlv2).sum(axis=1),
            "duplicates_suppressed": (np.maximum(arr - 1, 0) * reached).sum(axis=axes)
            + (np.maximum(arr2 - 1, 0) * reached2).sum(axis=1),
        }
        if not per_item:
            c = {k: float(v.sum()) for k, v in c.items()}
        return bits, ok, c

    def round_success(self, rng, n):
        """A segment round conditioned on succeeding (every hop delivers)."""
        m, h = self.m, self.h
        u = rng.random((n, m, h))
        bits = np.zeros(n)
        c = {k: np.zeros(n) for k in (
            "link_attempts", "link_failures", "partial_failures",
            "hop_drops", "duplicates_suppressed",
        )}
        for j, tbl in enumerate(self.data_tables):
            idx = tbl.draw_delivered(u[..., j])
            att, arr, par = tbl.attempts[idx], tbl.arrivals[idx], tbl.partials[idx]
            bits += (att * self.d_data + arr * self.a).sum(axis=1)
            c["link_attempts"] += att.sum(axis=1)
            c["link_failures"] += (att - arr).sum(axis=1)
            c["partial_failures"] += par.sum(axis=1)
            c["duplicates_suppressed"] += np.maximum(arr - 1, 0).sum(axis=1)
        u2 = rng.random((n, h))
        for j, tbl in enumerate(self.ack_tables):
            idx = tbl.draw_delivered(u2[..., j])
            att, arr, par = tbl.attempts[idx], tbl.arrivals[idx], tbl.partials[idx]
            bits += att * self.d_ack + arr * self.a
            c["link_attempts"] += att
            c["link_failures"] += att - arr
            c["partial_failures"] += par
            c["duplicates_suppressed"] += np.maximum(arr - 1, 0)
        return bits, c

    # -- per-replication drivers --

    def run_direct(self, rng):
        n_seg = self.n_seg
        bits = np.zeros(n_seg)
        sends = np.zeros(n_seg, dtype=np.int64)
        counters = dict.fromkeys(COUNTER_NAMES, 0.0)
        truncated = False
        active = np.arange(n_seg)
        while active.size:
            round_bits, ok, c = self.round_batch(rng, active.size)
            bits[active] += round_bits
            sends[active] += 1
            for k, v in c.items():
                counters[k] += v
            capped = ~ok & (sends[active] >= self.config.round_cap)
            if capped.any():
                truncated = True
            active = active[~(ok | capped)]
        counters["segment_sends"] = float(sends.sum())
        counters["segment_retx"] = float(sends.sum() - n_seg)
        return float(bits.sum()), counters, truncated

    def run_batched(self, rng):
        n_seg = self.n_seg
        cap = self.config.round_cap
        truncated = False
        if self.p_round > 0.0:
            rounds = rng.geometric(self.p_round, size=n_seg)
            if (rounds > cap).any():
                truncated = True
                rounds = np.minimum(rounds, cap)
        else:
            truncated = True
            rounds = np.full(n_seg, cap, dtype=np.int64)

        # Failed-round costs, by rejection from unconditioned rounds (the
        # batched regime means rounds almost surely fail).
        want = self.config.fail_round_samples
        fail_bits: list[np.ndarray] = []
        fail_counts: dict[str, list[np.ndarray]] = {}
        got = 0
        for _ in range(64):
            b, ok, c = self.round_batch(rng, want, per_item=True)
            keep = ~ok
            fail_bits.append(b[keep])
            for k, v in c.items():
                fail_counts.setdefault(k, []).append(v[keep])
            got += int(keep.sum())
            if got >= want:
                break
        if got == 0:
            raise RuntimeError(
                "batched estimator could not sample a failed round; "
                "use method='direct' for this configuration"
            )
        mean_fail_bits = float(np.concatenate(fail_bits).mean())
        mean_fail = {
            k: float(np.concatenate(v).mean()) for k, v in fail_counts.items()
        }

        failures = rounds.astype(np.float64) - (0.0 if self.p_round == 0.0 else 1.0)
        if self.p_round == 0.0:
            total_bits = float(failures.sum() * mean_fail_bits)
            counters = {k: float(failures.sum() * mean_fail[k]) for k in mean_fail}
        else:
            succ_bits, succ_c = self.round_success(rng, n_seg)
            total_bits = float((failures * mean_fail_bits + succ_bits).sum())
            counters = {
                k: float((failures * mean_fail[k] + succ_c[k]).sum())
                for k in mean_fail
            }
        counters["segment_sends"] = float(rounds.sum())
        counters["segment_retx"] = float(rounds.sum() - n_seg)
        return total_bits, counters, truncated

    def run_replication(self, rep: int):
        rng = np.random.default_rng(
            np.random.SeedSequence([self.config.master_seed, rep])
        )
        if self.method == "batched":
            bits, counters, truncated = self.run_batched(rng)
        else:
            bits, counters, truncated = self.run_direct(rng)
        if self.n_seg < self.segments:  # linear extrapolation to the full transfer
            scale = self.segments / self.n_seg
            bits *= scale
            counters = {k: v * scale for k, v in counters.items()}
        return bits, counters, truncated


def _run_chunk(config: SimConfig, start: int, stop: int):
    proc = _Process(config)
    bits = np.empty(stop - start)
    counters = {k: np.empty(stop - start) for k in COUNTER_NAMES}
    truncated = False
    for i, rep in enumerate(range(start, stop)):
        b, c, t = proc.run_replication(rep)
        bits[i] = b
        for k in COUNTER_NAMES:
            counters[k][i] = c[k]
        truncated |= t
    return bits, counters, truncated


def simulate(config: SimConfig) -> SimReport:
    """Run the Monte Carlo and aggregate replication statistics.

    Deterministic for a given (config, master_seed) regardless of
    ``workers``: replication i's stream depends only on (master_seed, i)
    and aggregation follows replication order.
    """
    proc = _Process(config)
    reps = config.replications

    if config.workers == 1 or reps == 1:
        chunks = [(0, reps)]
    else:
        n = min(config.workers, reps)
        bounds = np.linspace(0, reps, n + 1, dtype=int)
        chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]

    if len(chunks) == 1:
        results = [_run_chunk(config, *chunks[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            futures = [pool.submit(_run_chunk, config, a, b) for a, b in chunks]
            results = [f.result() for f in futures]

    bits = np.concatenate([r[0] for r in results])
    counters = {
        k: np.concatenate([r[1][k] for r in results]) for k in COUNTER_NAMES
    }
    truncated = any(r[2] for r in results)

    mean = float(bits.mean())
    stddev = float(bits.std(ddof=1)) if reps > 1 else 0.0
    stderr = stddev / math.sqrt(reps)

    flags = []
    if proc.method == "batched":
        flags.append("batched_estimator")
    if proc.n_seg < proc.segments:
        flags.append("extrapolated")
    if truncated:
        flags.append("truncated")
        warnings.warn(
            f"per-segment attempt cap ({config.round_cap}) fired; "
            "the reported mean is biased low",
            TruncationWarning,
            stacklevel=2,
        )

    return SimReport(
        replications=reps,
        segments=proc.segments,
        segments_simulated=proc.n_seg,
        mean_total_bits=mean,
        stddev_total_bits=stddev,
        stderr_total_bits=stderr,
        ci95_half_width=1.96 * stderr,
        mean_total_joules=mean * config.energy.uj_per_bit() * 1e-6,
        counters=SimCounters(**{k: float(counters[k].mean()) for k in COUNTER_NAMES}),
        method=proc.method,
        fidelity=config.fidelity,
        truncated=truncated,
        master_seed=config.master_seed,
        rng_algorithm=RNG_ALGORITHM,
        flags=tuple(flags),
    )
