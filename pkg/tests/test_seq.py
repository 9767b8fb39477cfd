import numpy as np
import pytest

from forge.seq import (
    MalformedSequenceError,
    NGramProvider,
    QuantizerConfig,
    dequantize_vertex,
    detokenize,
    fit_ngram,
    order_segments,
    quantize_vertex,
    sample_sequence,
    subdivide,
    tokenize,
    tokens_from_json,
    tokens_to_json,
    top_p_filter,
)

CFG = QuantizerConfig()


def test_vocab_layout():
    assert CFG.vocab_vertices == 121 * 121 == 14641
    assert CFG.start_token == 14641
    assert CFG.end_token == 14642
    assert CFG.vocab_size == 14643


def test_quantize_center_cell():
    # (0, 0) falls in row 60, column 60 -> token 60*121 + 60
    assert quantize_vertex(0.0, 0.0, CFG) == 60 * 121 + 60 == 7320
    # just across the column boundary at x = -0.5/scale: one column left
    assert quantize_vertex(-0.07, 0.0, CFG) == 7319
    # slightly positive y: one row up
    assert quantize_vertex(0.0, 0.07, CFG) == 7320 - 121


def test_quantize_clamps_and_counts():
    stats = {}
    tok = quantize_vertex(100.0, -100.0, CFG, stats)
    assert stats["clamped"] == 1
    r, c = divmod(tok, 121)
    assert (r, c) == (120, 120)


def test_quantize_dequantize_roundtrip_within_cell():
    rng = np.random.default_rng(0)
    cell = CFG.extent / CFG.height
    for _ in range(2000):
        x, y = rng.uniform(-7.4, 7.4, size=2)
        qx, qy = dequantize_vertex(quantize_vertex(x, y, CFG), CFG)
        assert abs(qx - x) <= cell
        assert abs(qy - y) <= cell


def test_dequantize_rejects_special_tokens():
    with pytest.raises(MalformedSequenceError):
        dequantize_vertex(CFG.start_token, CFG)


def test_order_segments_vertex_rule():
    segs = np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 2.0, 0.0, 1.0]])
    out = order_segments(segs)
    # each row satisfies x < x' or (x == x' and y <= y')
    ok = (out[:, 0] < out[:, 2]) | ((out[:, 0] == out[:, 2]) & (out[:, 1] <= out[:, 3]))
    assert ok.all()
    assert np.allclose(out[0], [-1, 0, 1, 0])
    assert np.allclose(out[1], [0, 1, 0, 2])


def test_order_segments_by_distance():
    near = [0.3, 0.1, 0.5, 0.1]
    far = [5.0, 5.0, 6.0, 5.0]
    out = order_segments(np.array([far, near]))
    assert np.allclose(out[0], near)
    assert np.allclose(out[1], far)


def test_order_segments_distance_from_robot():
    a = [0.0, 1.0, 1.0, 1.0]  # 1 m from origin, 4 m from (0,5)
    b = [0.0, 4.0, 1.0, 4.0]
    out = order_segments(np.array([a, b]), robot=(0.0, 5.0))
    assert np.allclose(out[0], b)


def test_subdivide_full_span_21_pieces():
    # a horizontal segment across the full 15 m extent crosses all 20
    # interior grid lines -> 21 pieces
    segs = np.array([[-7.5, 0.3, 7.5, 0.3]])
    out = subdivide(segs, 15.0, margin=0.0)
    assert out.shape == (21, 4)
    lens = np.abs(out[:, 2] - out[:, 0])
    assert lens.sum() == pytest.approx(15.0, rel=1e-12)


def test_subdivide_diagonal_preserves_length():
    segs = np.array([[-1.0, -1.0, 1.0, 1.0]])
    out = subdivide(segs, 15.0, margin=0.0)
    assert out.shape[0] >= 2
    lens = np.hypot(out[:, 2] - out[:, 0], out[:, 3] - out[:, 1])
    assert lens.sum() == pytest.approx(np.hypot(2.0, 2.0), rel=1e-12)


def test_subdivide_margin_skips_near_endpoint_cuts():
    # endpoint within one cell of the grid line: no cut
    line = -7.5 + 15.0 / 21.0  # first interior line
    segs = np.array([[line - 0.05, 0.0, line + 3.0, 0.0]])
    out = subdivide(segs, 15.0)
    ts = np.abs(out[:, 0] - line)
    assert (out.shape[0] == 1) or (ts.min() > 1e-9)


def test_tokenize_shape_and_sentinels():
    segs = np.array([[0.0, 0.0, 1.0, 0.0]])
    tokens = tokenize(segs)
    assert tokens[0] == CFG.start_token
    assert tokens[-1] == CFG.end_token
    assert len(tokens) % 2 == 0  # Start + pairs + End
    assert all(0 <= t < CFG.vocab_vertices for t in tokens[1:-1])


def test_tokenize_drops_degenerate_pieces():
    # both endpoints in one cell -> no vertex pair
    segs = np.array([[0.0, 0.0, 0.01, 0.01]])
    assert tokenize(segs) == [CFG.start_token, CFG.end_token]


def test_tokenize_idempotent():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = rng.integers(1, 8)
        segs = rng.uniform(-7, 7, size=(n, 4))
        t1 = tokenize(segs)
        t2 = tokenize(detokenize(t1))
        assert t1 == t2


def test_detokenize_simple_pair():
    a, b = 7320, 7321
    segs = detokenize([CFG.start_token, a, b, CFG.end_token])
    assert segs.shape == (1, 4)
    assert np.allclose(segs[0, :2], dequantize_vertex(a, CFG))
    assert np.allclose(segs[0, 2:], dequantize_vertex(b, CFG))


@pytest.mark.parametrize(
    "tokens,msg",
    [
        ([7320, CFG.end_token], "begin with Start"),
        ([CFG.start_token, 7320, 7321], "end with End"),
        ([CFG.start_token, 7320, CFG.end_token], "odd interior"),
        ([CFG.start_token, 7320, CFG.start_token, CFG.end_token], "non-vertex token"),
        ([CFG.start_token, 7320, 99999, CFG.end_token], "non-vertex token"),
        ([], "begin with Start"),
    ],
)
def test_detokenize_rejects_malformed(tokens, msg):
    with pytest.raises(MalformedSequenceError, match=msg):
        detokenize(tokens)


def test_top_p_nucleus():
    probs = np.array([0.7, 0.2, 0.1])
    out = top_p_filter(probs, 0.8)
    # nucleus is {0, 1}: smallest prefix with mass >= 0.8
    assert out[2] == 0.0
    assert out.sum() == pytest.approx(1.0)
    assert out[0] == pytest.approx(0.7 / 0.9)


def test_top_p_one_keeps_all():
    probs = np.array([0.5, 0.3, 0.2])
    assert np.allclose(top_p_filter(probs, 1.0), probs)


def test_sample_sequence_uses_provider():
    cfg = QuantizerConfig(height=2, width=2, extent=1.0)

    def provider(prefix, context=None):
        probs = np.zeros(cfg.vocab_size)
        if len(prefix) < 3:
            probs[len(prefix) - 1] = 1.0  # deterministic vertices 0 then 1
        else:
            probs[cfg.end_token] = 1.0
        return probs

    tokens, complete = sample_sequence(provider, cfg=cfg, p=1.0)
    assert complete
    assert tokens == [cfg.start_token, 0, 1, cfg.end_token]


def test_sample_sequence_truncates():
    cfg = QuantizerConfig(height=2, width=2, extent=1.0)

    def provider(prefix, context=None):
        probs = np.zeros(cfg.vocab_size)
        probs[0] = 1.0
        return probs

    tokens, complete = sample_sequence(provider, cfg=cfg, max_len=10, p=1.0)
    assert not complete
    assert len(tokens) == 10


def test_sample_sequence_validates():
    cfg = QuantizerConfig(height=2, width=2, extent=1.0)
    with pytest.raises(ValueError):
        sample_sequence(lambda pre, ctx=None: np.zeros(cfg.vocab_size), cfg=cfg)
    with pytest.raises(ValueError):
        sample_sequence(lambda pre, ctx=None: None, cfg=cfg, p=0.0)


def test_ngram_start_transition_maximal():
    cfg = QuantizerConfig(height=2, width=2, extent=1.0)
    corpus = [[cfg.start_token, 2, cfg.end_token]]
    model = fit_ngram(corpus, n=2, cfg=cfg)
    probs = model([cfg.start_token])
    assert int(np.argmax(probs)) == 2
    assert probs.sum() == pytest.approx(1.0)


def test_ngram_requires_data():
    with pytest.raises(ValueError):
        fit_ngram([], n=2)
    with pytest.raises(ValueError):
        NGramProvider(0)


def test_ngram_sampling_round_trip():
    cfg = QuantizerConfig(height=4, width=4, extent=2.0)
    corpus = [[cfg.start_token, 1, 2, cfg.end_token]] * 20
    model = fit_ngram(corpus, n=3, cfg=cfg)
    tokens, complete = sample_sequence(model, cfg=cfg, p=0.8, seed=1)
    assert complete
    assert tokens[0] == cfg.start_token and tokens[-1] == cfg.end_token


def test_tokens_json_round_trip():
    tokens = [CFG.start_token, 7320, 7321, CFG.end_token]
    blob = tokens_to_json(tokens)
    assert blob == ["S", 7320, 7321, "E"]
    assert tokens_from_json(blob) == tokens
