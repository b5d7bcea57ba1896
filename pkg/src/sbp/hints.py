"""Model compression and hint-set assembly.

Covers Q[I].[F] weight quantization, duplicate-history-column collapsing,
candidate scoring/selection under a bit budget, the closed-form storage
accounting, and the bit-packed hint file (magic "SBPH").
"""

import math
import struct
from dataclasses import dataclass, replace

from .errors import HintFormatError
from .sparse_modeling import eval_accuracy, fit

HINT_MAGIC = b"SBPH"
HINT_VERSION = 1
FP32_WIDTH = 32  # q value meaning "unquantized float32 weights"


@dataclass(frozen=True)
class QuantSpec:
    integer_bits: int
    fraction_bits: int

    @property
    def q(self):
        return 1 + self.integer_bits + self.fraction_bits

    @property
    def max_value(self):
        return (1 << self.integer_bits) - 2.0 ** -self.fraction_bits

    @property
    def min_value(self):
        return -float(1 << self.integer_bits)

    @classmethod
    def parse(cls, text):
        """Accepts "3.4", "q3.12", or "fp32" (None = full precision)."""
        t = text.lower().lstrip("q")
        if t == "fp32":
            return None
        i, f = t.split(".")
        return cls(int(i), int(f))


Q3_4 = QuantSpec(3, 4)
Q3_12 = QuantSpec(3, 12)


def _spec_for_width(q):
    if q == Q3_4.q:
        return Q3_4
    if q == Q3_12.q:
        return Q3_12
    if q == FP32_WIDTH:
        return None
    raise HintFormatError(f"unsupported weight width {q}")


def quantize_value(v, spec):
    """Round to the nearest multiple of 2^-F, ties away from zero, saturating."""
    scale = 1 << spec.fraction_bits
    raw = math.floor(abs(v) * scale + 0.5)
    if v < 0:
        raw = -raw
    lo = -(1 << (spec.integer_bits + spec.fraction_bits))
    hi = (1 << (spec.integer_bits + spec.fraction_bits)) - 1
    raw = max(lo, min(hi, raw))
    return raw / scale


def quantize(model, spec):
    """Quantize bias and weights; weights rounding to zero drop out of the model."""
    weights = {}
    for j, v in model.weights.items():
        qv = quantize_value(v, spec)
        if qv != 0.0:
            weights[j] = qv
    return replace(model, bias=quantize_value(model.bias, spec), weights=weights)


def dedup(dataset, lasso_model, config):
    """Collapse duplicated history columns via an ElasticNet refit.

    Refits at the input model's lambda with alpha < 1 (0.5 unless the config
    already mixes), groups the refit's non-zero indices by identical feature
    columns, and moves each group's summed weight onto its smallest index.
    Rejected (input returned unchanged) if accuracy drops more than 0.001
    below the input model's.
    """
    alpha = config.elasticnet_alpha if config.elasticnet_alpha < 1.0 else 0.5
    en = fit(dataset, lasso_model.lam, alpha, config)
    groups = {}
    for j in sorted(en.weights):
        key = dataset.x[:, j].tobytes()
        groups.setdefault(key, []).append(j)
    weights = {}
    for members in groups.values():
        total = sum(en.weights[j] for j in members)
        if total != 0.0:
            weights[members[0]] = total
    collapsed = replace(en, weights=weights)
    collapsed.accuracy = eval_accuracy(collapsed, dataset)
    if collapsed.accuracy < lasso_model.accuracy - 0.001:
        return lasso_model
    return collapsed


@dataclass(frozen=True)
class SlbiuConfig:
    lh: int
    gh: int
    n: int  # max hints (N)
    nnz: int  # max non-zero weights per hint
    q: int  # weight bit-width
    p: int = 64  # branch PC bit-width

    @property
    def index_bits(self):
        return max(self.lh + self.gh - 1, 1).bit_length() if self.lh + self.gh > 1 else 0


def index_bits(lh, gh):
    """ceil(log2(lh+gh)) history-index width."""
    total = lh + gh
    return (total - 1).bit_length() if total > 1 else 0


def storage_bits(config):
    """Total CAM bits: N * (p + q + nnz*q + nnz*ceil(log2(lh+gh)) + lh)."""
    return config.n * (
        config.p
        + config.q
        + config.nnz * config.q
        + config.nnz * index_bits(config.lh, config.gh)
        + config.lh
    )


@dataclass
class SparsityHint:
    pc: int
    intercept: float
    entries: list  # [(history index, weight)], strictly increasing, weights non-zero
    qspec: QuantSpec | None = None  # None = float32 weights

    def __post_init__(self):
        idxs = [j for j, _ in self.entries]
        if idxs != sorted(set(idxs)):
            raise ValueError("hint entry indices must be strictly increasing")
        if any(wv == 0.0 for _, wv in self.entries):
            raise ValueError("hint entries must have non-zero weights")

    @property
    def nnz(self):
        return len(self.entries)


def hint_from_model(model, qspec):
    entries = [(j, model.weights[j]) for j in sorted(model.weights)]
    return SparsityHint(model.pc, model.bias, entries, qspec)


@dataclass
class HintSet:
    phase_id: str
    config: SlbiuConfig
    hints: list

    def __post_init__(self):
        if len(self.hints) > self.config.n:
            raise ValueError(f"{len(self.hints)} hints exceed capacity N={self.config.n}")
        pcs = [h.pc for h in self.hints]
        if len(set(pcs)) != len(pcs):
            raise ValueError("hint PCs must be distinct")
        for h in self.hints:
            if h.nnz > self.config.nnz:
                raise ValueError("hint exceeds the nnz cap")


def empty_hintset(lh, gh, q, p=64, phase_id=""):
    return HintSet(phase_id, SlbiuConfig(lh=lh, gh=gh, n=0, nnz=0, q=q, p=p), [])


@dataclass
class ScoredCandidate:
    model: object  # SparseModel, compressed
    offline_correct: int
    primary_correct: int
    score: int | None = None  # None = dropped


def score(candidate, policy):
    """independent: offline correct count, accuracy >= 0.99 required; relative:
    offline minus primary correct count. None marks an a-priori drop."""
    if policy == "independent":
        if candidate.model.accuracy < 0.99:
            return None
        return candidate.offline_correct
    if policy == "relative":
        return candidate.offline_correct - candidate.primary_correct
    raise ValueError(f"unknown policy {policy!r}")


def select(candidates, policy, budget_bits, p, q, lh, gh, phase_id=""):
    """Grid-search (N, nnz) pairs within budget and keep the best-scoring set.

    For each nnz cap from 1 to the max candidate nnz, N is the largest count
    fitting the budget. Candidates scoring <= 0 (no benefit) or exceeding the
    cap are discarded; the rest rank by score desc (ties: smaller nnz, then
    smaller pc). The pair with the highest score sum wins (tie: larger N).
    """
    if budget_bits <= 0:
        raise ValueError("budget_bits must be positive")
    scored = []
    for c in candidates:
        s = score(c, policy)
        if s is not None and s > 0:
            scored.append((s, c))
    ib = index_bits(lh, gh)
    best = None  # (total_score, n, nnz_cap, chosen)
    max_nnz = max((c.model.nnz for _, c in scored), default=0)
    for cap in range(1, max_nnz + 1):
        per_hint = p + q + cap * q + cap * ib + lh
        n = budget_bits // per_hint
        if n == 0:
            continue
        pool = [(s, c) for s, c in scored if c.model.nnz <= cap]
        if not pool:
            continue
        pool.sort(key=lambda sc: (-sc[0], sc[1].model.nnz, sc[1].model.pc))
        chosen = pool[:n]
        total = sum(s for s, _ in chosen)
        key = (total, n)
        if best is None or key > (best[0], best[1]):
            best = (total, n, cap, chosen)
    if best is None:
        return empty_hintset(lh, gh, q, p, phase_id), (0, 0)
    total, n, cap, chosen = best
    qspec = _spec_for_width(q)
    config = SlbiuConfig(lh=lh, gh=gh, n=n, nnz=cap, q=q, p=p)
    hints = [hint_from_model(c.model, qspec) for _, c in chosen]
    hs = HintSet(phase_id, config, hints)
    assert storage_bits(config) <= budget_bits
    return hs, (n, cap)


class _BitWriter:
    def __init__(self):
        self.acc = 0
        self.nbits = 0

    def write(self, value, width):
        if width == 0:
            return
        self.acc = (self.acc << width) | (value & ((1 << width) - 1))
        self.nbits += width

    def to_bytes(self):
        pad = -self.nbits % 8
        return (self.acc << pad).to_bytes((self.nbits + pad) // 8, "big")


class _BitReader:
    def __init__(self, data, nbits):
        self.acc = int.from_bytes(data, "big")
        self.total = len(data) * 8
        self.pos = 0
        self.nbits = nbits

    def read(self, width):
        if width == 0:
            return 0
        if self.pos + width > self.nbits:
            raise HintFormatError("hint payload exhausted")
        v = (self.acc >> (self.total - self.pos - width)) & ((1 << width) - 1)
        self.pos += width
        return v


def _weight_to_bits(v, qspec):
    if qspec is None:
        return struct.unpack("<I", struct.pack("<f", v))[0]
    return round(v * (1 << qspec.fraction_bits))  # exact: v is a fixed-point multiple


def _weight_from_bits(bits, q, qspec):
    if qspec is None:
        return struct.unpack("<f", struct.pack("<I", bits))[0]
    if bits >= 1 << (q - 1):  # two's complement
        bits -= 1 << q
    return bits / (1 << qspec.fraction_bits)


def encode_hintset(hs, path):
    """Write the hint file; the hint-array payload is exactly storage_bits(config)
    bits (N slots, absent/partial slots zero-padded, plus lh reserved LHR bits
    per slot)."""
    cfg = hs.config
    qspec = _spec_for_width(cfg.q)
    ib = index_bits(cfg.lh, cfg.gh)
    bw = _BitWriter()
    for h in hs.hints:
        bw.write(h.pc, cfg.p)
        bw.write(_weight_to_bits(h.intercept, qspec), cfg.q)
        for j, wv in h.entries:
            bw.write(j, ib)
            bw.write(_weight_to_bits(wv, qspec), cfg.q)
        for _ in range(cfg.nnz - h.nnz):  # zero padding up to the nnz cap
            bw.write(0, ib)
            bw.write(0, cfg.q)
        bw.write(0, cfg.lh)  # reserved runtime LHR image
    for _ in range(cfg.n - len(hs.hints)):  # empty CAM slots
        bw.write(0, cfg.p + cfg.q + cfg.nnz * (ib + cfg.q) + cfg.lh)
    assert bw.nbits == storage_bits(cfg)
    phase = hs.phase_id.encode("utf-8")
    header = HINT_MAGIC + struct.pack("<HHH", HINT_VERSION, len(hs.hints), len(phase))
    header += phase
    header += struct.pack("<6H", cfg.lh, cfg.gh, cfg.n, cfg.nnz, cfg.q, cfg.p)
    header += struct.pack("<I", bw.nbits)
    with open(path, "wb") as f:
        f.write(header + bw.to_bytes())


def decode_hintset(path):
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != HINT_MAGIC:
        raise HintFormatError(f"{path}: bad magic {data[:4]!r}")
    version, n_hints, phase_len = struct.unpack_from("<HHH", data, 4)
    if version != HINT_VERSION:
        raise HintFormatError(f"{path}: unsupported version {version}")
    off = 10
    phase_id = data[off : off + phase_len].decode("utf-8")
    off += phase_len
    lh, gh, n, nnz, q, p = struct.unpack_from("<6H", data, off)
    off += 12
    (payload_bits,) = struct.unpack_from("<I", data, off)
    off += 4
    cfg = SlbiuConfig(lh=lh, gh=gh, n=n, nnz=nnz, q=q, p=p)
    if payload_bits != storage_bits(cfg):
        raise HintFormatError(
            f"{path}: payload is {payload_bits} bits, config requires {storage_bits(cfg)}"
        )
    payload = data[off:]
    if len(payload) != (payload_bits + 7) // 8:
        raise HintFormatError(f"{path}: payload size mismatch")
    qspec = _spec_for_width(q)
    ib = index_bits(lh, gh)
    br = _BitReader(payload, payload_bits)
    hints = []
    for _ in range(n_hints):
        pc = br.read(p)
        intercept = _weight_from_bits(br.read(q), q, qspec)
        entries = []
        for _ in range(nnz):
            j = br.read(ib)
            wv = _weight_from_bits(br.read(q), q, qspec)
            if wv != 0.0:
                entries.append((j, wv))
        br.read(lh)
        hints.append(SparsityHint(pc, intercept, entries, qspec))
    return HintSet(phase_id, cfg, hints)
