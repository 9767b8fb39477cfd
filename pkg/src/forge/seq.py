"""Wall-segment sequence codec and sampling machinery.

Segments are cut on a fixed 21x21 grid, ordered by robot proximity, and
encoded as Start / vertex-index pairs / End token sequences. Generation is
top-p sampling against a pluggable next-token distribution; an additive-
smoothed n-gram model provides a desk-scale baseline.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import point_segment_distance

SUBDIVIDE_N = 21  # regular cutting grid is SUBDIVIDE_N x SUBDIVIDE_N


class MalformedSequenceError(ValueError):
    pass


@dataclass(frozen=True)
class QuantizerConfig:
    height: int = 121
    width: int = 121
    extent: float = 15.0  # metric span of the vertex grid, m

    @property
    def scale_x(self):
        return self.width / self.extent

    @property
    def scale_y(self):
        return self.height / self.extent

    @property
    def vocab_vertices(self):
        return self.height * self.width

    @property
    def start_token(self):
        return self.vocab_vertices

    @property
    def end_token(self):
        return self.vocab_vertices + 1

    @property
    def vocab_size(self):
        return self.vocab_vertices + 2

    @property
    def cell_size(self):
        return self.extent / self.height


def quantize_vertex(x, y, cfg, stats=None):
    """Map a metric vertex to its grid-cell token.

    Row and column indices are floored separately and combined as
    row * width + col; out-of-extent vertices clamp (and count in stats).
    """
    r = int(np.floor(cfg.height / 2.0 - cfg.scale_y * y))
    c = int(np.floor(cfg.width / 2.0 + cfg.scale_x * x))
    if not (0 <= r < cfg.height and 0 <= c < cfg.width):
        if stats is not None:
            stats["clamped"] = stats.get("clamped", 0) + 1
        r = min(max(r, 0), cfg.height - 1)
        c = min(max(c, 0), cfg.width - 1)
    return r * cfg.width + c


def dequantize_vertex(token, cfg):
    """Cell-center metric coordinates of a vertex token."""
    if not 0 <= token < cfg.vocab_vertices:
        raise MalformedSequenceError(f"vertex token {token} out of range")
    r, c = divmod(int(token), cfg.width)
    x = (c + 0.5 - cfg.width / 2.0) / cfg.scale_x
    y = (cfg.height / 2.0 - r - 0.5) / cfg.scale_y
    return x, y


def _quantize_array(xs, ys, cfg):
    """Vectorized quantize_vertex; returns (tokens, clamp count)."""
    r = np.floor(cfg.height / 2.0 - cfg.scale_y * np.asarray(ys)).astype(np.int64)
    c = np.floor(cfg.width / 2.0 + cfg.scale_x * np.asarray(xs)).astype(np.int64)
    clamped = int(
        ((r < 0) | (r >= cfg.height) | (c < 0) | (c >= cfg.width)).sum()
    )
    if clamped:
        r = np.minimum(np.maximum(r, 0), cfg.height - 1)
        c = np.minimum(np.maximum(c, 0), cfg.width - 1)
    return r * cfg.width + c, clamped


def _dequantize_array(tokens, cfg):
    """Vectorized dequantize_vertex; returns (xs, ys) cell centers."""
    r, c = np.divmod(np.asarray(tokens, dtype=np.int64), cfg.width)
    x = (c + 0.5 - cfg.width / 2.0) / cfg.scale_x
    y = (cfg.height / 2.0 - r - 0.5) / cfg.scale_y
    return x, y


def order_segments(segments, robot=(0.0, 0.0)):
    """Sort rows by robot-to-segment distance; order each row's vertices.

    Vertices obey (x < x') or (x == x' and y <= y'); distance ties break by
    lexicographic comparison of the vertex-ordered 4-tuples.
    """
    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    if segments.shape[0] == 0:
        return segments
    ordered = segments.copy()
    flip = (ordered[:, 0] > ordered[:, 2]) | (
        (ordered[:, 0] == ordered[:, 2]) & (ordered[:, 1] > ordered[:, 3])
    )
    ordered[flip] = ordered[flip][:, [2, 3, 0, 1]]
    robot = np.asarray(robot, dtype=np.float64).reshape(1, 2)
    dist = point_segment_distance(robot, ordered)[0]
    idx = np.lexsort(
        (ordered[:, 3], ordered[:, 2], ordered[:, 1], ordered[:, 0], dist)
    )
    return ordered[idx]


def subdivide(segments, extent, n=SUBDIVIDE_N, margin=None):
    """Cut segments where they cross a fixed n x n grid over the extent.

    Grid lines span [-extent/2, extent/2] at spacing extent/n. A crossing is
    skipped when either segment endpoint is within `margin` of the line
    along the crossing axis (default: one 121st of the extent), so that
    segments already snapped to cell centers are never re-cut. Total length
    is conserved exactly.
    """
    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    s_count = segments.shape[0]
    if s_count == 0:
        return np.empty((0, 4))
    if margin is None:
        margin = extent / 121.0
    half = extent / 2.0
    lines = -half + (extent / n) * np.arange(1, n)

    # gather (segment, t) cut candidates for both axes, plus 0/1 sentinels
    sid_parts = [np.arange(s_count), np.arange(s_count)]
    t_parts = [np.zeros(s_count), np.ones(s_count)]
    for a0, a1 in (
        (segments[:, 0], segments[:, 2]),
        (segments[:, 1], segments[:, 3]),
    ):
        denom = a1 - a0
        valid = denom != 0
        near = (
            np.minimum(
                np.abs(a0[:, None] - lines[None, :]),
                np.abs(a1[:, None] - lines[None, :]),
            )
            < margin
        )
        t = (lines[None, :] - a0[:, None]) / np.where(denom == 0, 1.0, denom)[:, None]
        keep = valid[:, None] & ~near & (t > 1e-12) & (t < 1.0 - 1e-12)
        si, li = np.nonzero(keep)
        sid_parts.append(si)
        t_parts.append(t[si, li])
    if len(sid_parts) == 2 or not any(len(p) for p in sid_parts[2:]):
        return segments  # no eligible crossings anywhere
    sid = np.concatenate(sid_parts)
    tv = np.concatenate(t_parts)
    order = np.lexsort((tv, sid))
    sid, tv = sid[order], tv[order]
    dup = np.zeros(len(tv), dtype=bool)
    dup[1:] = (sid[1:] == sid[:-1]) & (tv[1:] == tv[:-1])
    sid, tv = sid[~dup], tv[~dup]

    same = sid[1:] == sid[:-1]
    s = sid[:-1][same]
    t0 = tv[:-1][same]
    t1 = tv[1:][same]
    dx = segments[s, 2] - segments[s, 0]
    dy = segments[s, 3] - segments[s, 1]
    return np.column_stack(
        [
            segments[s, 0] + t0 * dx, segments[s, 1] + t0 * dy,
            segments[s, 0] + t1 * dx, segments[s, 1] + t1 * dy,
        ]
    )


def tokenize(segments, cfg=QuantizerConfig(), robot=(0.0, 0.0), stats=None):
    """Segments -> [Start, v, v', ..., End] token list.

    Segments are subdivided on the fixed grid and quantized; pieces whose
    endpoints fall in the same cell are dropped. Ordering (robot proximity,
    then the lexicographic vertex rule) is applied to the quantized
    geometry, which makes tokenize o detokenize o tokenize == tokenize.
    """
    # Iterate subdivide -> quantize -> snap to a fixpoint: snapping can move
    # an endpoint across the skip margin of a grid line, which would let a
    # second pass cut differently; converging first makes the round trip
    # reproduce the exact token pairs.
    snapped = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    prev = None
    for iteration in range(10):
        pieces = subdivide(snapped, cfg.extent)
        t0, clamp0 = _quantize_array(pieces[:, 0], pieces[:, 1], cfg)
        t1, clamp1 = _quantize_array(pieces[:, 2], pieces[:, 3], cfg)
        if iteration == 0 and stats is not None and clamp0 + clamp1:
            stats["clamped"] = stats.get("clamped", 0) + clamp0 + clamp1
        keep = t0 != t1
        t0, t1 = t0[keep], t1[keep]
        x0, y0 = _dequantize_array(t0, cfg)
        x1, y1 = _dequantize_array(t1, cfg)
        snapped = np.column_stack([x0, y0, x1, y1])
        if np.array_equal(snapped, pieces[keep]):
            break  # input was already snapped and uncut: a fixpoint
        key = sorted(map(tuple, np.sort(np.column_stack([t0, t1]), axis=1).tolist()))
        if key == prev:
            break
        prev = key
    ordered = order_segments(snapped, robot)
    v0, _ = _quantize_array(ordered[:, 0], ordered[:, 1], cfg)
    v1, _ = _quantize_array(ordered[:, 2], ordered[:, 3], cfg)
    interior = np.empty(2 * len(v0), dtype=np.int64)
    interior[0::2] = v0
    interior[1::2] = v1
    return [cfg.start_token] + interior.tolist() + [cfg.end_token]


def detokenize(tokens, cfg=QuantizerConfig()):
    """Token sequence -> (N, 4) cell-center segments."""
    tokens = list(tokens)
    if not tokens or tokens[0] != cfg.start_token:
        raise MalformedSequenceError("sequence must begin with Start (index 0)")
    if tokens[-1] != cfg.end_token:
        raise MalformedSequenceError(f"sequence must end with End (index {len(tokens) - 1})")
    interior = tokens[1:-1]
    if len(interior) % 2 != 0:
        raise MalformedSequenceError(
            f"odd interior length {len(interior)} (index {len(tokens) - 1})"
        )
    interior = np.asarray(interior, dtype=np.int64)
    bad = (interior < 0) | (interior >= cfg.vocab_vertices)
    if bad.any():
        j = int(np.nonzero(bad)[0][0])
        raise MalformedSequenceError(
            f"non-vertex token {int(interior[j])} at index {j + 1}"
        )
    x0, y0 = _dequantize_array(interior[0::2], cfg)
    x1, y1 = _dequantize_array(interior[1::2], cfg)
    return np.column_stack([x0, y0, x1, y1]).reshape(-1, 4)


def top_p_filter(probs, p):
    """Restrict a distribution to the nucleus of cumulative mass >= p."""
    probs = np.asarray(probs, dtype=np.float64)
    order = np.argsort(-probs, kind="stable")
    cum = np.cumsum(probs[order])
    cutoff = int(np.searchsorted(cum, p)) + 1
    keep = order[:cutoff]
    out = np.zeros_like(probs)
    out[keep] = probs[keep]
    total = out.sum()
    if total <= 0:
        raise ValueError("provider distribution has no mass")
    return out / total


def sample_sequence(provider, context=None, p=0.8, max_len=4096, seed=0,
                    cfg=QuantizerConfig()):
    """Autoregressive top-p sampling until End or max_len.

    Returns (tokens, complete); complete is False when max_len truncated.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    rng = np.random.default_rng(seed)
    tokens = [cfg.start_token]
    while len(tokens) < max_len:
        probs = np.asarray(provider(tokens, context), dtype=np.float64)
        if abs(probs.sum() - 1.0) > 1e-6 or (probs < 0).any():
            raise ValueError("provider distribution is not normalized")
        probs = top_p_filter(probs, p)
        tok = int(rng.choice(len(probs), p=probs))
        tokens.append(tok)
        if tok == cfg.end_token:
            return tokens, True
    return tokens, False


class NGramProvider:
    """Additive-smoothed n-gram next-token distribution over the vocabulary."""

    def __init__(self, n, cfg=QuantizerConfig(), alpha=0.1):
        if n < 1:
            raise ValueError("order must be >= 1")
        self.n = n
        self.cfg = cfg
        self.alpha = alpha
        self.counts = {}  # prefix tuple -> {token: count}

    def fit(self, corpus):
        if not corpus:
            raise ValueError("corpus is empty")
        for seq in corpus:
            for i in range(1, len(seq)):
                prefix = tuple(seq[max(0, i - self.n + 1) : i])
                bucket = self.counts.setdefault(prefix, {})
                bucket[seq[i]] = bucket.get(seq[i], 0) + 1
        return self

    def __call__(self, prefix, context=None):
        v = self.cfg.vocab_size
        key = tuple(prefix[max(0, len(prefix) - self.n + 1) :])
        bucket = self.counts.get(key, {})
        probs = np.full(v, self.alpha)
        for tok, cnt in bucket.items():
            probs[tok] += cnt
        return probs / probs.sum()


def fit_ngram(corpus, n, cfg=QuantizerConfig(), alpha=0.1):
    """Fit the n-gram baseline provider on a token-sequence corpus."""
    return NGramProvider(n, cfg, alpha).fit(corpus)


def tokens_to_json(tokens, cfg=QuantizerConfig()):
    """Integer vertex ids with "S"/"E" sentinels, for serialization."""
    sub = {cfg.start_token: "S", cfg.end_token: "E"}
    return [sub.get(t, t) for t in tokens]


def tokens_from_json(data, cfg=QuantizerConfig()):
    sub = {"S": cfg.start_token, "E": cfg.end_token}
    return [sub.get(t, t) if isinstance(t, str) else int(t) for t in data]
