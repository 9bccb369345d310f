import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scalekit.accounting import (
    ModelShape,
    chinchilla_tokens,
    count_params,
    flop_breakdown,
    flops_per_sequence,
    inference_flops_per_token,
    sequences_for,
    train_flops_total,
)
from scalekit.errors import InputError
from scalekit.reference import SP_ROWS


def tensor_list_params(v, s, d, n):
    """Parameter count from an explicit list of GPT-2 tensors."""
    tensors = [(v, d), (s, d)]
    for _ in range(n):
        tensors += [(d,), (d,)]  # ln_1
        tensors += [(d, 3 * d), (3 * d,), (d, d), (d,)]  # c_attn, c_proj
        tensors += [(d,), (d,)]  # ln_2
        tensors += [(d, 4 * d), (4 * d,), (4 * d, d), (d,)]  # c_fc, c_proj
    tensors += [(d,), (d,)]  # ln_f
    total = 0
    for t in tensors:
        size = 1
        for dim in t:
            size *= dim
        total += size
    return total


def polynomial_forward(v, s, d, n):
    # per layer: 24 s d^2 + 8 s^2 d + 94 s d; plus embeddings and logits
    return 4 * s * v * d + 2 * d * s + n * (24 * s * d * d + 8 * s * s * d + 94 * s * d)


shapes = st.builds(
    lambda heads, k, n, v, s: ModelShape(heads * k, n, k, 4 * heads * k, v, s),
    st.integers(1, 64),
    st.sampled_from([32, 64, 80, 128]),
    st.integers(0, 96),
    st.integers(1, 300_000),
    st.integers(1, 8192),
)


@pytest.mark.parametrize("row", SP_ROWS, ids=lambda r: r.name)
def test_params_match_tensor_list_for_reference_rows(row):
    s = row.shape
    assert count_params(s) == tensor_list_params(s.vocab_size, s.seq_len, s.d_model, s.n_layers)


@given(shapes)
def test_params_match_tensor_list(shape):
    assert count_params(shape) == tensor_list_params(shape.vocab_size, shape.seq_len, shape.d_model, shape.n_layers)


@given(shapes)
def test_forward_flops_match_polynomial(shape):
    expected = polynomial_forward(shape.vocab_size, shape.seq_len, shape.d_model, shape.n_layers)
    assert flops_per_sequence(shape, "inference") == expected
    assert sum(flop_breakdown(shape).values()) == expected


@given(shapes)
def test_train_is_three_forward_minus_embeddings(shape):
    terms = flop_breakdown(shape)
    fwd = flops_per_sequence(shape, "inference")
    assert flops_per_sequence(shape) == 3 * fwd - terms["embeddings"] - terms["position_embeddings"]


def test_frozen_values_for_1p3b():
    # computed once from the polynomial oracle above, then frozen
    shape = SP_ROWS[3].shape
    assert count_params(shape) == 1_315_723_264
    assert flops_per_sequence(shape, "inference") == 7_449_713_049_600
    assert flops_per_sequence(shape) == 21_927_544_487_936
    assert inference_flops_per_token(shape) == 3_637_555_200


def test_train_flops_total_uses_whole_sequences():
    shape = SP_ROWS[0].shape
    per_seq = flops_per_sequence(shape)
    assert train_flops_total(shape, 2048 * 10) == 10 * per_seq
    assert train_flops_total(shape, 2048 * 10 + 1023) == 10 * per_seq
    assert train_flops_total(shape, 2048 * 10 + 1024) == 11 * per_seq


def test_sequences_for_rounding():
    assert sequences_for(0, 2048) == 0
    assert sequences_for(1023, 2048) == 0
    assert sequences_for(1024, 2048) == 1
    with pytest.raises(InputError):
        sequences_for(-1, 2048)


def test_chinchilla_tokens():
    assert chinchilla_tokens(111_050_496) == 2_221_009_920
    assert chinchilla_tokens(3, ratio=0.5) == 2  # 1.5 rounds up
    assert chinchilla_tokens(5, ratio=0.1) == 1  # 0.1 is not exact in binary; 0.5000...03 rounds up
    with pytest.raises(InputError):
        chinchilla_tokens(0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(d_model=0, n_layers=1, d_head=1, d_ffn=4),
        dict(d_model=100, n_layers=1, d_head=64, d_ffn=400),
        dict(d_model=128, n_layers=-1, d_head=64, d_ffn=512),
        dict(d_model=128, n_layers=1, d_head=64, d_ffn=512, vocab_size=0),
        dict(d_model=128.0, n_layers=1, d_head=64, d_ffn=512),
    ],
)
def test_shape_validation(kwargs):
    with pytest.raises(InputError):
        ModelShape(**kwargs)


def test_shape_helpers():
    s = ModelShape.gpt(2560, 32, 80)
    assert s.d_ffn == 10240 and s.num_heads == 32 and s.aspect_ratio == 80.0
    with pytest.raises(InputError):
        flops_per_sequence(s, "backward")
